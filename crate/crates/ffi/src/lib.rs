//! C ABI over the `cwex` library.
//!
//! Every function returns a [`CwexStatus`]; results go through out-pointers.
//! On failure, [`cwex_last_error_message`] describes the error on the calling
//! thread. Handles are opaque and must be released with their `_free`
//! function. Strings returned by the library are released with
//! [`cwex_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cwex::agreement::{cohens_kappa, fleiss_kappa, AgreementError, AnnotationMatrix};
use cwex::corpus::declared_provenance;
use cwex::llm::{parse_response, render_prompt, PromptMode};
use cwex::{
    cwex, delta_exposure, load_labels, parse_run, position_weight, CWExParams, CorpusError, Document, FairnessError,
    GenderLabel, LabelSet, RankedList, Run,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Unlabeled = 5,
    NotFound = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwexLabel {
    Male = 0,
    Female = 1,
    Neutral = 2,
    Unparseable = 3,
}

impl From<GenderLabel> for CwexLabel {
    fn from(l: GenderLabel) -> Self {
        match l {
            GenderLabel::Male => CwexLabel::Male,
            GenderLabel::Female => CwexLabel::Female,
            GenderLabel::Neutral => CwexLabel::Neutral,
            GenderLabel::Unparseable => CwexLabel::Unparseable,
        }
    }
}

impl From<CwexLabel> for GenderLabel {
    fn from(l: CwexLabel) -> Self {
        match l {
            CwexLabel::Male => GenderLabel::Male,
            CwexLabel::Female => GenderLabel::Female,
            CwexLabel::Neutral => GenderLabel::Neutral,
            CwexLabel::Unparseable => GenderLabel::Unparseable,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwexPromptMode {
    ZeroShot = 0,
    OneShot = 1,
    ThreeShot = 2,
    Cot = 3,
}

impl From<CwexPromptMode> for PromptMode {
    fn from(m: CwexPromptMode) -> Self {
        match m {
            CwexPromptMode::ZeroShot => PromptMode::ZeroShot,
            CwexPromptMode::OneShot => PromptMode::OneShot,
            CwexPromptMode::ThreeShot => PromptMode::ThreeShot,
            CwexPromptMode::Cot => PromptMode::CoT,
        }
    }
}

/// Parsed run file.
pub struct CwexRun(Run);

/// Document-to-label map.
pub struct CwexLabels(LabelSet);

struct Failure(CwexStatus, String);

impl From<FairnessError> for Failure {
    fn from(e: FairnessError) -> Self {
        let status = match e {
            FairnessError::Unlabeled { .. } | FairnessError::UnparseableLabel { .. } => CwexStatus::Unlabeled,
            _ => CwexStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure(CwexStatus::Parse, e.to_string())
    }
}

impl From<AgreementError> for Failure {
    fn from(e: AgreementError) -> Self {
        Failure(CwexStatus::InvalidArgument, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CwexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwexStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CwexStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CwexStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CwexStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn labels_from_array(labels: &[CwexLabel]) -> LabelSet {
    let mut set = LabelSet::new("llm:ffi");
    for (i, l) in labels.iter().enumerate() {
        set.insert(i.to_string(), (*l).into())
            .expect("llm provenance accepts every label");
    }
    set
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cwex_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cwex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `1 / log2(1 + rank)` for `rank >= 1`.
///
/// # Safety
/// `out` must be a valid pointer or null.
#[no_mangle]
pub unsafe extern "C" fn cwex_position_weight(rank: usize, out: *mut f64) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = position_weight(rank)?;
        Ok(())
    })
}

/// Parses a TREC run file.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cwex_run_parse(text: *const c_char, out: *mut *mut CwexRun) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let run = parse_run(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(CwexRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`cwex_run_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cwex_run_free(run: *mut CwexRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of queries in the run.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cwex_run_query_count(run: *const CwexRun, out: *mut usize) -> CwexStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        *out_arg(out, "out")? = run.0.len();
        Ok(())
    })
}

/// Parses a label TSV. A null `provenance` uses the file's
/// `# provenance:` header, or `human` when absent.
///
/// # Safety
/// `text` must be a NUL-terminated string, `provenance` one or null, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cwex_labels_parse(
    text: *const c_char,
    provenance: *const c_char,
    out: *mut *mut CwexLabels,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let provenance = if provenance.is_null() {
            declared_provenance(text).unwrap_or_else(|| "human".to_string())
        } else {
            str_arg(provenance, "provenance")?.to_string()
        };
        let labels = load_labels(text, &provenance)?;
        *out = Box::into_raw(Box::new(CwexLabels(labels)));
        Ok(())
    })
}

/// # Safety
/// `labels` must come from [`cwex_labels_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cwex_labels_free(labels: *mut CwexLabels) {
    if !labels.is_null() {
        drop(Box::from_raw(labels));
    }
}

unsafe fn query_list<'a>(run: *const CwexRun, query_id: *const c_char) -> Result<&'a RankedList, Failure> {
    let run = run.as_ref().ok_or_else(|| null("run"))?;
    let qid = str_arg(query_id, "query_id")?;
    run.0
        .get(qid)
        .ok_or_else(|| Failure(CwexStatus::NotFound, format!("query `{qid}` is not in the run")))
}

/// CWEx of one query at cutoff `k`.
///
/// # Safety
/// Handles must be live, `query_id` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_query_cwex(
    run: *const CwexRun,
    labels: *const CwexLabels,
    query_id: *const c_char,
    alpha: f64,
    k: usize,
    out: *mut f64,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let list = query_list(run, query_id)?;
        let labels = labels.as_ref().ok_or_else(|| null("labels"))?;
        *out = cwex(list, &labels.0, CWExParams::new(alpha, k)?)?;
        Ok(())
    })
}

/// `|Exposure_male - Exposure_female|` of one query at cutoff `k`.
///
/// # Safety
/// Handles must be live, `query_id` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_query_delta_exposure(
    run: *const CwexRun,
    labels: *const CwexLabels,
    query_id: *const c_char,
    k: usize,
    out: *mut f64,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let list = query_list(run, query_id)?;
        let labels = labels.as_ref().ok_or_else(|| null("labels"))?;
        *out = delta_exposure(list, &labels.0, k)?;
        Ok(())
    })
}

/// CWEx of a ranked list given directly as labels in rank order.
///
/// # Safety
/// `labels` must point to `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_cwex_from_labels(
    labels: *const CwexLabel,
    len: usize,
    alpha: f64,
    k: usize,
    out: *mut f64,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let set = labels_from_array(slice_arg(labels, len, "labels")?);
        let list = RankedList::from_doc_ids("ffi", (0..len).map(|i| i.to_string()));
        *out = cwex(&list, &set, CWExParams::new(alpha, k)?)?;
        Ok(())
    })
}

/// Renders the classification prompt. `title` may be null. The result must
/// be released with [`cwex_string_free`].
///
/// # Safety
/// `text` must be NUL-terminated, `title` NUL-terminated or null, `out`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_build_prompt(
    mode: CwexPromptMode,
    text: *const c_char,
    title: *const c_char,
    out: *mut *mut c_char,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let mut doc = Document::new("ffi", str_arg(text, "text")?);
        if !title.is_null() {
            doc = doc.with_title(str_arg(title, "title")?);
        }
        let prompt =
            render_prompt(mode.into(), &doc).map_err(|e| Failure(CwexStatus::InvalidArgument, e.to_string()))?;
        *out = CString::new(prompt)
            .map_err(|_| Failure(CwexStatus::InvalidArgument, "prompt contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cwex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Maps a raw completion to a label; never fails on unrecognized text.
///
/// # Safety
/// `raw` must be NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_parse_response(
    raw: *const c_char,
    mode: CwexPromptMode,
    out: *mut CwexLabel,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = parse_response(str_arg(raw, "raw")?, mode.into()).label.into();
        Ok(())
    })
}

/// Cohen's kappa between two label arrays of equal length.
///
/// # Safety
/// `a` and `b` must each point to `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_cohens_kappa(
    a: *const CwexLabel,
    b: *const CwexLabel,
    len: usize,
    out: *mut f64,
) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let a = labels_from_array(slice_arg(a, len, "a")?);
        let b = labels_from_array(slice_arg(b, len, "b")?);
        *out = cohens_kappa(&a, &b)?;
        Ok(())
    })
}

/// Fleiss's kappa. `counts` holds `items` rows of three counts in
/// Male, Female, Neutral order.
///
/// # Safety
/// `counts` must point to `3 * items` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cwex_fleiss_kappa(counts: *const u32, items: usize, out: *mut f64) -> CwexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let len = items
            .checked_mul(3)
            .ok_or_else(|| Failure(CwexStatus::InvalidArgument, "item count overflows".into()))?;
        let flat = slice_arg(counts, len, "counts")?;
        let matrix = AnnotationMatrix {
            counts: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        };
        *out = fleiss_kappa(&matrix)?;
        Ok(())
    })
}
