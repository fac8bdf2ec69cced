use super::RetrievalError;
use crate::generation::{sanitize_field, sanitize_title};
use crate::metrics::normalize;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// A retrievable unit of evidence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Passage {
    pub pid: String,
    #[serde(default)]
    pub title: String,
    pub body: String,
}

impl Passage {
    /// Copy with prompt separators stripped from title and body.
    pub fn sanitized(&self) -> Self {
        Self {
            pid: self.pid.clone(),
            title: sanitize_title(&self.title),
            body: sanitize_field(&self.body),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index over normalized passage bodies.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PassageIndex {
    passages: Vec<Passage>,
    /// term → postings sorted by document
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    total_tokens: u64,
    #[serde(skip)]
    by_pid: HashMap<String, usize>,
}

/// Build an index. Passages are sanitized on ingestion; pids must be unique
/// and bodies non-empty.
pub fn build_index<I>(passages: I) -> Result<PassageIndex, RetrievalError>
where
    I: IntoIterator<Item = Passage>,
{
    let mut index = PassageIndex::default();
    for raw in passages {
        let passage = raw.sanitized();
        if passage.body.is_empty() {
            return Err(RetrievalError::EmptyBody(passage.pid));
        }
        if index.by_pid.contains_key(&passage.pid) {
            return Err(RetrievalError::DuplicatePid(passage.pid));
        }
        let doc = u32::try_from(index.passages.len()).expect("corpus exceeds u32 documents");
        let tokens = normalize(&passage.body);
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in tokens.iter() {
            *tf.entry(t.as_str()).or_default() += 1;
        }
        for (term, count) in tf {
            index
                .postings
                .entry(term.to_string())
                .or_default()
                .push(Posting { doc, tf: count });
        }
        index.doc_lengths.push(tokens.len() as u32);
        index.total_tokens += tokens.len() as u64;
        index.by_pid.insert(passage.pid.clone(), doc as usize);
        index.passages.push(passage);
    }
    Ok(index)
}

impl PassageIndex {
    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn passage(&self, pid: &str) -> Option<&Passage> {
        self.by_pid.get(pid).map(|&i| &self.passages[i])
    }

    pub fn passage_at(&self, doc: usize) -> &Passage {
        &self.passages[doc]
    }

    pub fn doc_of(&self, pid: &str) -> Option<usize> {
        self.by_pid.get(pid).copied()
    }

    pub fn doc_length(&self, doc: usize) -> u32 {
        self.doc_lengths[doc]
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Mean passage length in tokens; zero for an empty corpus.
    pub fn average_length<T: Scalar>(&self) -> T {
        if self.passages.is_empty() {
            return T::zero();
        }
        T::from_f64_lossy(self.total_tokens as f64) / T::from_usize_lossy(self.passages.len())
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn term_frequency(&self, term: &str, doc: usize) -> u32 {
        let postings = self.postings(term);
        postings
            .binary_search_by_key(&(doc as u32), |p| p.doc)
            .map_or(0, |i| postings[i].tf)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = (&str, usize)> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.len()))
    }

    /// Serialize as JSON. The pid lookup table is rebuilt on load.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let mut out = BufWriter::new(File::create(path.as_ref())?);
        serde_json::to_writer(&mut out, self).map_err(std::io::Error::from)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let reader = BufReader::new(File::open(path.as_ref())?);
        let mut index: PassageIndex = serde_json::from_reader(reader)
            .map_err(|e| RetrievalError::Format(format!("index file: {e}")))?;
        index.by_pid = index
            .passages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.pid.clone(), i))
            .collect();
        Ok(index)
    }
}

/// Read a passage corpus: one `{"pid", "title", "body"}` object per line.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Passage>, RetrievalError> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Passage = serde_json::from_str(&line).map_err(|e| RetrievalError::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_corpus(path: impl AsRef<Path>, passages: &[Passage]) -> Result<(), RetrievalError> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    for p in passages {
        serde_json::to_writer(&mut out, p).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
