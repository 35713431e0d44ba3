//! Command-line front end.
//!
//! Every flag can also be given in a `key=value` config file passed with
//! `--config`; keys are flag names without the leading dashes. Flags on the
//! command line override the file.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::agreement::{
    accuracy, binary_neutrality_accuracy, cohens_kappa, fleiss_kappa, parse_votes, serialize_adjudication,
    stereotype_accuracy,
};
use crate::corpus::{
    declared_provenance, load_collection, load_labels, parse_qrels, parse_run, parse_stereotypes, serialize_labels,
    Document, EvalConfig, GenderLabel, LabelSet, Qrels, Run, PROVENANCE_HUMAN, PROVENANCE_LEXICAL,
};
use crate::fairness::{evaluate_run, FairnessReport, NeutralityInput};
use crate::lexical::{binary_neutrality, lexical_label, neutrality_score, WordLists};
use crate::llm::{Classifier, CompletionCache, EndpointConfig, PromptMode, TEMPLATE_VERSION};
use crate::report::{write_atomic, CombinedReport, Metadata, OutputFormat};
use crate::utility::{evaluate_utility, UtilityReport};

#[derive(Debug, Parser)]
#[command(name = "cwex", version, about = "Gender-fairness evaluation of ranked retrieval")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file supplying default flag values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label a collection as Male/Female/Neutral
    Classify(ClassifyArgs),
    /// CWEx, delta exposure and NFaiRR per query
    Fairness(FairnessArgs),
    /// MRR and nDCG per query
    Utility(UtilityArgs),
    /// Accuracy, kappa statistics and majority-vote aggregation
    Agreement(AgreementArgs),
    /// Fairness and utility joined into one table
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Lexical,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(alias = "zero-shot")]
    Zero,
    #[value(alias = "one-shot")]
    One,
    #[value(alias = "three-shot", alias = "few-shot")]
    Three,
    Cot,
}

impl From<ModeArg> for PromptMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Zero => PromptMode::ZeroShot,
            ModeArg::One => PromptMode::OneShot,
            ModeArg::Three => PromptMode::ThreeShot,
            ModeArg::Cot => PromptMode::CoT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Md,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Md => OutputFormat::Markdown,
        }
    }
}

#[derive(Debug, Args)]
pub struct WordListArgs {
    /// Male term list (one term per line); defaults to the bundled list
    #[arg(long, value_name = "FILE", requires = "female_terms")]
    pub male_terms: Option<PathBuf>,
    /// Female term list; defaults to the bundled list
    #[arg(long, value_name = "FILE", requires = "male_terms")]
    pub female_terms: Option<PathBuf>,
}

impl WordListArgs {
    fn load(&self) -> Result<WordLists> {
        match (&self.male_terms, &self.female_terms) {
            (Some(m), Some(f)) => Ok(WordLists::from_texts(&read(m)?, &read(f)?)?),
            _ => Ok(WordLists::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Rank cutoff
    #[arg(long, default_value_t = EvalConfig::DEFAULT_CUTOFF)]
    pub k: usize,
    /// Comma-separated CWEx trade-off weights
    #[arg(long, value_delimiter = ',', default_values_t = EvalConfig::DEFAULT_ALPHAS)]
    pub alpha: Vec<f64>,
}

impl EvalArgs {
    fn config(&self) -> Result<EvalConfig> {
        Ok(EvalConfig::new(self.k, self.alpha.clone())?)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

impl OutputArgs {
    fn emit(&self, contents: &str) -> Result<()> {
        match &self.out {
            Some(path) => write_atomic(path, contents).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{contents}");
                Ok(())
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Collection TSV: doc_id, text, optional title
    #[arg(long, value_name = "FILE")]
    pub collection: PathBuf,
    #[arg(long, value_enum, default_value_t = Engine::Lexical)]
    pub engine: Engine,
    #[command(flatten)]
    pub word_lists: WordListArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Three)]
    pub mode: ModeArg,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    /// Chat-completions URL
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    pub endpoint: String,
    /// Environment variable holding the API key
    #[arg(long, default_value = "OPENAI_API_KEY")]
    pub api_key_env: String,
    /// Maximum concurrent requests
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    /// Completion cache file
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
    /// Attempts per request, including the first
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
    /// Initial retry backoff in milliseconds (doubles per retry)
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    /// Label TSV output; stdout when omitted
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FairnessInputArgs {
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    /// Gender label TSV
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    /// Collection TSV; enables NFaiRR
    #[arg(long, value_name = "FILE")]
    pub collection: Option<PathBuf>,
    /// Run file whose per-query lists define the NFaiRR candidate pools
    #[arg(long, value_name = "FILE")]
    pub pool: Option<PathBuf>,
    #[command(flatten)]
    pub word_lists: WordListArgs,
}

#[derive(Debug, Args)]
pub struct FairnessArgs {
    #[command(flatten)]
    pub input: FairnessInputArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct UtilityArgs {
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    /// Rank cutoff
    #[arg(long, default_value_t = EvalConfig::DEFAULT_CUTOFF)]
    pub k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: FairnessInputArgs,
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Gold label TSV
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Predicted label TSV compared against --labels
    #[arg(long, value_name = "FILE", requires = "labels")]
    pub pred: Option<PathBuf>,
    /// Stereotype TSV for accuracy split by stereotype target
    #[arg(long, value_name = "FILE", requires = "pred")]
    pub stereotypes: Option<PathBuf>,
    /// Collection TSV; adds lexical binary-neutrality accuracy against --labels
    #[arg(long, value_name = "FILE", requires = "labels")]
    pub collection: Option<PathBuf>,
    #[command(flatten)]
    pub word_lists: WordListArgs,
    /// Crowd votes TSV: doc_id, annotator_id, label
    #[arg(long, value_name = "FILE")]
    pub votes: Option<PathBuf>,
    /// Where to write unresolved votes (default: <out>.adjudication.tsv, or
    /// adjudication.tsv)
    #[arg(long, value_name = "FILE", requires = "votes")]
    pub adjudication: Option<PathBuf>,
    /// Where to write majority-vote labels
    #[arg(long, value_name = "FILE", requires = "votes")]
    pub gold_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_run(path: &Path) -> Result<Run> {
    parse_run(&read(path)?).with_context(|| format!("parsing run {}", path.display()))
}

fn read_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&read(path)?).with_context(|| format!("parsing qrels {}", path.display()))
}

/// Label files declare provenance in a `# provenance:` header; files without
/// one are treated as human labels.
fn read_labels(path: &Path) -> Result<LabelSet> {
    let text = read(path)?;
    let provenance = declared_provenance(&text).unwrap_or_else(|| PROVENANCE_HUMAN.to_string());
    load_labels(&text, &provenance).with_context(|| format!("parsing labels {}", path.display()))
}

fn read_collection(path: &Path) -> Result<BTreeMap<String, Document>> {
    load_collection(&read(path)?).with_context(|| format!("parsing collection {}", path.display()))
}

/// Parses `key=value` lines (`#` comments) into `--key value` arguments,
/// keeping only keys the subcommand accepts.
fn config_args(path: &Path, subcommand: &str) -> Result<Vec<OsString>> {
    let text = read(path)?;
    let root = Cli::command();
    let known_anywhere: Vec<String> = root
        .get_subcommands()
        .flat_map(|s| {
            s.get_arguments()
                .filter_map(|a| a.get_long().map(str::to_string))
                .collect::<Vec<_>>()
        })
        .collect();
    let sub = root
        .find_subcommand(subcommand)
        .with_context(|| format!("unknown subcommand `{subcommand}`"))?;
    let accepted: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).collect();
    let mut args = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key=value", path.display(), idx + 1))?;
        let key = key.trim().trim_start_matches("--");
        if key == "config" {
            bail!("{}:{}: nested config files are not supported", path.display(), idx + 1);
        }
        if !known_anywhere.iter().any(|k| k == key) {
            bail!("{}:{}: unknown key `{key}`", path.display(), idx + 1);
        }
        if accepted.contains(&key) {
            args.push(OsString::from(format!("--{key}")));
            args.push(OsString::from(value.trim()));
        }
    }
    Ok(args)
}

/// Splices config-file arguments in right after the subcommand so that any
/// explicit flag, coming later, wins.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config_path: Option<PathBuf> = None;
    let mut subcommand_at: Option<usize> = None;
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy();
        if arg == "--config" {
            config_path = args.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = arg.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
        } else if subcommand_at.is_none() && names.iter().any(|n| *n == arg) {
            subcommand_at = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(at)) = (config_path, subcommand_at) else {
        return Ok(args);
    };
    let extra = config_args(&path, &args[at].to_string_lossy())?;
    let mut out = args[..=at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run<I, T>(args: I) -> Result<ExitCode>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = expand_config(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            });
        }
    };
    match cli.command {
        Command::Classify(args) => cmd_classify(&args),
        Command::Fairness(args) => cmd_fairness(&args),
        Command::Utility(args) => cmd_utility(&args),
        Command::Agreement(args) => cmd_agreement(&args),
        Command::Report(args) => cmd_report(&args),
    }
}

fn print_distribution(labels: &LabelSet) {
    let counts = labels.counts();
    eprintln!("Total Documents\t{}", labels.len());
    for label in [
        GenderLabel::Neutral,
        GenderLabel::Female,
        GenderLabel::Male,
        GenderLabel::Unparseable,
    ] {
        let n = counts.get(&label).copied().unwrap_or(0);
        if label.is_class() || n > 0 {
            eprintln!("{label} Labels\t{n}");
        }
    }
}

fn partial_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".partial");
    PathBuf::from(name)
}

pub fn cmd_classify(args: &ClassifyArgs) -> Result<ExitCode> {
    let docs: Vec<Document> = read_collection(&args.collection)?.into_values().collect();
    let (labels, failures) = match args.engine {
        Engine::Lexical => {
            let lists = args.word_lists.load()?;
            let mut labels = LabelSet::new(PROVENANCE_LEXICAL);
            for doc in &docs {
                labels.insert(doc.doc_id.clone(), lexical_label(doc, &lists))?;
            }
            (labels, Vec::new())
        }
        Engine::Llm => {
            let mut config = EndpointConfig::new(&args.endpoint, &args.model);
            config.api_key = std::env::var(&args.api_key_env).ok().filter(|k| !k.is_empty());
            if config.api_key.is_none() {
                eprintln!(
                    "warning: ${} is not set; sending requests without authorization",
                    args.api_key_env
                );
            }
            config.max_attempts = args.max_attempts;
            config.initial_backoff = Duration::from_millis(args.backoff_ms);
            let cache = match &args.cache {
                Some(path) => CompletionCache::open(path)?,
                None => CompletionCache::in_memory(),
            };
            let classifier = Classifier::new(config, cache);
            let outcome = classifier.batch_classify(&docs, args.mode.into(), args.parallelism)?;
            eprintln!("requests sent\t{}", classifier.requests_sent());
            let failures: Vec<String> = outcome
                .failures
                .iter()
                .map(|f| format!("{}: {}", f.doc_id, f.error))
                .collect();
            (outcome.labels, failures)
        }
    };
    print_distribution(&labels);
    let text = serialize_labels(&labels);
    if failures.is_empty() {
        match &args.out {
            Some(path) => write_atomic(path, &text).with_context(|| format!("writing {}", path.display()))?,
            None => print!("{text}"),
        }
        return Ok(ExitCode::SUCCESS);
    }
    for f in &failures {
        eprintln!("error: {f}");
    }
    match &args.out {
        Some(path) => {
            let partial = partial_path(path);
            write_atomic(&partial, &text)?;
            eprintln!(
                "{} of {} documents failed; partial labels written to {}",
                failures.len(),
                docs.len(),
                partial.display()
            );
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::FAILURE)
}

fn fairness_report(input: &FairnessInputArgs, config: &EvalConfig, meta: &mut Metadata) -> Result<FairnessReport> {
    let run = read_run(&input.run)?;
    let labels = read_labels(&input.labels)?;
    meta.insert("run_tag".into(), run.tag.clone());
    meta.insert("label_provenance".into(), labels.provenance().to_string());
    meta.insert("cutoff".into(), config.cutoff.to_string());
    meta.insert(
        "alphas".into(),
        config.alphas.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );
    meta.insert("aggregation".into(), "macro (unweighted mean over queries)".into());
    meta.insert("positions".into(), "re-indexed 1..n after truncation".into());
    if labels.provenance().starts_with("llm:") {
        meta.insert("template_version".into(), TEMPLATE_VERSION.into());
    }

    let scores: Option<HashMap<String, _>> = match &input.collection {
        Some(path) => {
            let lists = input.word_lists.load()?;
            meta.insert("word_lists_sha256".into(), lists.digest());
            let docs = read_collection(path)?;
            Some(
                docs.values()
                    .map(|d| (d.doc_id.clone(), neutrality_score(d, &lists)))
                    .collect(),
            )
        }
        None => {
            eprintln!("warning: no --collection given; NFaiRR is not computed");
            None
        }
    };
    let pools = input.pool.as_deref().map(read_run).transpose()?;
    meta.insert(
        "nfairr_pool".into(),
        match (&scores, &pools) {
            (None, _) => "n/a".into(),
            (Some(_), Some(_)) => "per-query lists of --pool".into(),
            (Some(_), None) => "full retrieved list per query".into(),
        },
    );
    let neutrality = scores.as_ref().map(|s| NeutralityInput {
        scores: s,
        pools: pools.as_ref(),
    });
    let report = evaluate_run(&run, &labels, neutrality, config)?;
    if !report.skipped_queries.is_empty() {
        meta.insert("skipped_queries".into(), report.skipped_queries.join(","));
    }
    Ok(report)
}

fn utility_report(run_path: &Path, qrels_path: &Path, k: usize, meta: &mut Metadata) -> Result<UtilityReport> {
    let run = read_run(run_path)?;
    let qrels = read_qrels(qrels_path)?;
    let report = evaluate_utility(&run, &qrels, k);
    meta.insert("cutoff".into(), k.to_string());
    meta.insert("ndcg_gain".into(), "linear (gain = grade)".into());
    meta.insert("ndcg_discount".into(), "1/log2(1+i)".into());
    meta.insert("relevance_threshold".into(), "grade > 0".into());
    if !report.queries_without_qrels.is_empty() {
        if report.queries_without_qrels.len() == run.len() {
            eprintln!("warning: no run query has judgments in the qrels; all scores are 0");
        } else {
            eprintln!(
                "warning: {} run queries have no judgments",
                report.queries_without_qrels.len()
            );
        }
        meta.insert("queries_without_qrels".into(), report.queries_without_qrels.join(","));
    }
    Ok(report)
}

pub fn cmd_fairness(args: &FairnessArgs) -> Result<ExitCode> {
    let config = args.eval.config()?;
    let mut meta = Metadata::new();
    let report = fairness_report(&args.input, &config, &mut meta)?;
    let combined = CombinedReport {
        fairness: Some(&report),
        utility: None,
    };
    args.output.emit(&combined.render(args.output.format.into(), &meta))?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_utility(args: &UtilityArgs) -> Result<ExitCode> {
    if args.k == 0 {
        bail!("--k must be >= 1");
    }
    let mut meta = Metadata::new();
    let report = utility_report(&args.run, &args.qrels, args.k, &mut meta)?;
    let combined = CombinedReport {
        fairness: None,
        utility: Some(&report),
    };
    args.output.emit(&combined.render(args.output.format.into(), &meta))?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let config = args.eval.config()?;
    let mut meta = Metadata::new();
    let fairness = fairness_report(&args.input, &config, &mut meta)?;
    let utility = utility_report(&args.input.run, &args.qrels, config.cutoff, &mut meta)?;
    let combined = CombinedReport {
        fairness: Some(&fairness),
        utility: Some(&utility),
    };
    args.output.emit(&combined.render(args.output.format.into(), &meta))?;
    Ok(ExitCode::SUCCESS)
}

fn render_metrics(metrics: &[(String, String)], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("metric,value\n");
            for (k, v) in metrics {
                out.push_str(&format!("{k},{v}\n"));
            }
            out
        }
        OutputFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> = metrics
                .iter()
                .map(|(k, v)| {
                    let value = v
                        .parse::<f64>()
                        .ok()
                        .and_then(serde_json::Number::from_f64)
                        .map(serde_json::Value::Number)
                        .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                    (k.clone(), value)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&map).expect("metrics serialize");
            s.push('\n');
            s
        }
        OutputFormat::Markdown => {
            let mut out = String::from("| Metric | Value |\n| --- | --- |\n");
            for (k, v) in metrics {
                out.push_str(&format!("| {k} | {v} |\n"));
            }
            out
        }
    }
}

pub fn cmd_agreement(args: &AgreementArgs) -> Result<ExitCode> {
    if args.labels.is_none() && args.votes.is_none() {
        bail!("agreement needs --labels (with --pred and/or --collection) or --votes");
    }
    let mut metrics: Vec<(String, String)> = Vec::new();
    let fmt = |v: f64| format!("{v:.6}");

    if let Some(gold_path) = &args.labels {
        let gold = read_labels(gold_path)?;
        metrics.push(("gold_documents".into(), gold.len().to_string()));
        if let Some(pred_path) = &args.pred {
            let pred = read_labels(pred_path)?;
            let kappa = cohens_kappa(&pred, &gold).context("comparing --pred with --labels")?;
            metrics.push(("accuracy".into(), fmt(accuracy(&pred, &gold)?)));
            metrics.push(("cohens_kappa".into(), fmt(kappa)));
            let unparseable = pred.counts().get(&GenderLabel::Unparseable).copied().unwrap_or(0);
            metrics.push(("unparseable_predictions".into(), unparseable.to_string()));
            let binary = pred
                .iter()
                .filter_map(|(d, l)| crate::lexical::BinaryNeutrality::from_label(l).map(|b| (d.to_string(), b)))
                .collect();
            metrics.push((
                "binary_neutrality_accuracy_pred".into(),
                fmt(binary_neutrality_accuracy(&binary, &gold)?),
            ));
            if let Some(path) = &args.stereotypes {
                let tags = parse_stereotypes(&read(path)?)?;
                let (female, male) = stereotype_accuracy(&pred, &gold, &tags)?;
                metrics.push(("accuracy_female_stereotype".into(), fmt(female)));
                metrics.push(("accuracy_male_stereotype".into(), fmt(male)));
            }
        }
        if let Some(path) = &args.collection {
            let lists = args.word_lists.load()?;
            let docs = read_collection(path)?;
            let binary = docs
                .values()
                .map(|d| (d.doc_id.clone(), binary_neutrality(d, &lists)))
                .collect();
            metrics.push((
                "binary_neutrality_accuracy_lexical".into(),
                fmt(binary_neutrality_accuracy(&binary, &gold)?),
            ));
            metrics.push(("word_lists_sha256".into(), lists.digest()));
        }
    }

    if let Some(votes_path) = &args.votes {
        let table = parse_votes(&read(votes_path)?)?;
        let matrix = table.matrix();
        metrics.push(("voted_documents".into(), matrix.counts.len().to_string()));
        metrics.push(("fleiss_kappa".into(), fmt(fleiss_kappa(&matrix)?)));
        let agg = table.aggregate()?;
        metrics.push(("majority_decided".into(), agg.gold.len().to_string()));
        metrics.push(("unresolved".into(), agg.unresolved.len().to_string()));
        let adjudication = args.adjudication.clone().unwrap_or_else(|| match &args.output.out {
            Some(out) => {
                let mut name = out.as_os_str().to_os_string();
                name.push(".adjudication.tsv");
                PathBuf::from(name)
            }
            None => PathBuf::from("adjudication.tsv"),
        });
        write_atomic(&adjudication, &serialize_adjudication(&agg.unresolved))?;
        metrics.push(("adjudication_file".into(), adjudication.display().to_string()));
        if let Some(path) = &args.gold_out {
            write_atomic(path, &serialize_labels(&agg.gold))?;
        }
    }

    args.output.emit(&render_metrics(&metrics, args.output.format.into()))?;
    Ok(ExitCode::SUCCESS)
}
