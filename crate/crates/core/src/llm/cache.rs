//! Content-addressed completion cache.
//!
//! On disk the cache is an append-only file of `key<TAB>label<TAB>base64(raw)`
//! records. The first record for a key wins; later duplicates are ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use sha2::{Digest, Sha256};

use super::prompt::{PromptMode, TEMPLATE_VERSION};
use super::LlmError;
use crate::corpus::{Document, GenderLabel};
use crate::lexical::hex;

/// Digest over (model, mode, text, title, template version).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(model: &str, mode: PromptMode, doc: &Document) -> Self {
        Self::with_template(model, mode, doc, TEMPLATE_VERSION)
    }

    pub fn with_template(model: &str, mode: PromptMode, doc: &Document, template: &str) -> Self {
        let mut hasher = Sha256::new();
        let title = doc.title.as_deref();
        for field in [
            Some(model),
            Some(mode.as_str()),
            Some(doc.text.as_str()),
            title,
            Some(template),
        ] {
            match field {
                Some(value) => {
                    hasher.update([1u8]);
                    hasher.update((value.len() as u64).to_le_bytes());
                    hasher.update(value.as_bytes());
                }
                None => hasher.update([0u8]),
            }
        }
        CacheKey(hex(&hasher.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedCompletion {
    pub label: GenderLabel,
    pub raw: String,
}

/// Concurrent reads, serialized appends.
#[derive(Debug)]
pub struct CompletionCache {
    entries: RwLock<HashMap<CacheKey, CachedCompletion>>,
    writer: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl CompletionCache {
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(HashMap::new()),
            writer: None,
            path: None,
        }
    }

    /// Opens (creating if needed) a cache file and loads its records.
    ///
    /// A final line without a trailing newline is treated as an interrupted
    /// write and ignored; any other unreadable record is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        let mut entries = HashMap::new();
        let complete = text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        for (idx, line) in lines.iter().enumerate() {
            if line.is_empty() {
                continue;
            }
            match parse_record(line) {
                Some((key, value)) => {
                    entries.entry(key).or_insert(value);
                }
                None if idx + 1 == lines.len() && !complete => {}
                None => {
                    return Err(LlmError::Cache(format!(
                        "{}: malformed record on line {}",
                        path.display(),
                        idx + 1
                    )))
                }
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        if !text.is_empty() && !complete {
            file.write_all(b"\n")
                .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        }
        Ok(Self {
            entries: RwLock::new(entries),
            writer: Some(Mutex::new(BufWriter::new(file))),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &CacheKey) -> Option<CachedCompletion> {
        self.entries.read().expect("cache lock poisoned").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a completion unless the key is already present. Returns the
    /// value now associated with the key.
    pub fn insert(&self, key: CacheKey, value: CachedCompletion) -> Result<CachedCompletion, LlmError> {
        let mut entries = self.entries.write().expect("cache lock poisoned");
        if let Some(existing) = entries.get(&key) {
            return Ok(existing.clone());
        }
        if let Some(writer) = &self.writer {
            let mut writer = writer.lock().expect("cache writer poisoned");
            let record = format!(
                "{}\t{}\t{}\n",
                key.as_str(),
                value.label.as_str(),
                BASE64.encode(value.raw.as_bytes())
            );
            writer
                .write_all(record.as_bytes())
                .and_then(|_| writer.flush())
                .map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        entries.insert(key, value.clone());
        Ok(value)
    }
}

fn parse_record(line: &str) -> Option<(CacheKey, CachedCompletion)> {
    let mut cols = line.split('\t');
    let key = cols.next()?;
    let label: GenderLabel = cols.next()?.parse().ok()?;
    let raw = BASE64.decode(cols.next()?).ok()?;
    if cols.next().is_some() || key.len() != 64 {
        return None;
    }
    Some((
        CacheKey(key.to_string()),
        CachedCompletion {
            label,
            raw: String::from_utf8(raw).ok()?,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_sensitivity() {
        let doc = Document::new("d", "text");
        let base = CacheKey::new("m", PromptMode::ZeroShot, &doc);
        assert_eq!(base, CacheKey::new("m", PromptMode::ZeroShot, &doc.clone()));
        assert_ne!(base, CacheKey::new("m2", PromptMode::ZeroShot, &doc));
        assert_ne!(base, CacheKey::new("m", PromptMode::CoT, &doc));
        assert_ne!(
            base,
            CacheKey::new("m", PromptMode::ZeroShot, &Document::new("d", "text2"))
        );
        assert_ne!(
            base,
            CacheKey::new("m", PromptMode::ZeroShot, &doc.clone().with_title(""))
        );
        assert_ne!(base, CacheKey::with_template("m", PromptMode::ZeroShot, &doc, "v0"));
        // The document id does not participate.
        assert_eq!(
            base,
            CacheKey::new("m", PromptMode::ZeroShot, &Document::new("other", "text"))
        );
    }

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let key = CacheKey::new("m", PromptMode::CoT, &Document::new("d", "t"));
        let value = CachedCompletion {
            label: GenderLabel::Female,
            raw: "Class: Female\nReasoning:\ttabs\tand\nnewlines".into(),
        };
        {
            let cache = CompletionCache::open(&path).unwrap();
            cache.insert(key.clone(), value.clone()).unwrap();
            let other = CachedCompletion {
                label: GenderLabel::Male,
                raw: "Male".into(),
            };
            assert_eq!(cache.insert(key.clone(), other).unwrap(), value);
        }
        let reopened = CompletionCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        assert_eq!(reopened.get(&key), Some(value));
    }

    #[test]
    fn tolerates_interrupted_tail_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let key = CacheKey::new("m", PromptMode::ZeroShot, &Document::new("d", "t"));
        std::fs::write(
            &path,
            format!("{}\tMale\tTWFsZQ==\n{}\tFem", key.as_str(), key.as_str()),
        )
        .unwrap();
        let cache = CompletionCache::open(&path).unwrap();
        assert_eq!(cache.get(&key).unwrap().raw, "Male");

        std::fs::write(&path, "garbage\nmore\n").unwrap();
        assert!(CompletionCache::open(&path).is_err());
    }
}
