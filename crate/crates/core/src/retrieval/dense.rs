//! Nearest-neighbour search over precomputed passage vectors.
//!
//! Store file layout (little endian):
//!
//! ```text
//! magic  b"DVS1"
//! u32    dimension
//! u32    record count
//! u8     scalar width in bytes (4 = f32, 8 = f64)
//! record: u32 pid byte length, pid UTF-8 bytes, dimension × scalar
//! ```

use super::{rank, RetrievalError, RetrievalResult, ScoredPassage};
use crate::metrics::normalize;
use crate::scalar::Scalar;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DVS1";

/// One fixed-dimension vector per key, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVectorStore<T> {
    dim: usize,
    keys: Vec<String>,
    data: Vec<T>,
}

impl<T: Scalar> DenseVectorStore<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            keys: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn from_records<I>(dim: usize, records: I) -> Result<Self, RetrievalError>
    where
        I: IntoIterator<Item = (String, Vec<T>)>,
    {
        let mut store = Self::new(dim);
        let mut seen = HashSet::new();
        for (key, v) in records {
            if !seen.insert(key.clone()) {
                return Err(RetrievalError::DuplicatePid(key));
            }
            store.push(key, &v)?;
        }
        Ok(store)
    }

    fn push(&mut self, key: String, v: &[T]) -> Result<(), RetrievalError> {
        if v.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        self.keys.push(key);
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn vector(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[T])> {
        self.keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), self.vector(i)))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), RetrievalError> {
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(self.dim as u32)?;
        out.write_u32::<LittleEndian>(self.keys.len() as u32)?;
        out.write_u8(T::WIDTH)?;
        for (key, v) in self.iter() {
            out.write_u32::<LittleEndian>(key.len() as u32)?;
            out.write_all(key.as_bytes())?;
            for x in v {
                match T::WIDTH {
                    4 => out.write_f32::<LittleEndian>(x.to_f32().unwrap_or(f32::NAN))?,
                    _ => out.write_f64::<LittleEndian>(x.to_f64().unwrap_or(f64::NAN))?,
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, RetrievalError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(RetrievalError::Format("not a dense vector store".into()));
        }
        let dim = input.read_u32::<LittleEndian>()? as usize;
        let count = input.read_u32::<LittleEndian>()? as usize;
        let width = input.read_u8()?;
        if width != 4 && width != 8 {
            return Err(RetrievalError::Format(format!(
                "unsupported scalar width {width}"
            )));
        }
        let mut store = Self::new(dim);
        let mut row = Vec::with_capacity(dim);
        for _ in 0..count {
            let len = input.read_u32::<LittleEndian>()? as usize;
            let mut key = vec![0u8; len];
            input.read_exact(&mut key)?;
            let key =
                String::from_utf8(key).map_err(|_| RetrievalError::Format("key is not UTF-8".into()))?;
            row.clear();
            for _ in 0..dim {
                let x = match width {
                    4 => input.read_f32::<LittleEndian>()? as f64,
                    _ => input.read_f64::<LittleEndian>()?,
                };
                row.push(T::from_f64_lossy(x));
            }
            store.push(key, &row)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        self.write_to(BufWriter::new(File::create(path.as_ref())?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        Self::read_from(BufReader::new(File::open(path.as_ref())?))
    }
}

pub fn inner_product<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Maps a query to a vector in the store's space. The neural encoder lives
/// outside this crate; implementations adapt whatever produced the vectors.
pub trait QueryEmbedder<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, query: &str) -> Result<Vec<T>, RetrievalError>;
}

/// Looks queries up in a precomputed table keyed by query text.
#[derive(Debug, Clone)]
pub struct PrecomputedEmbedder<T> {
    dim: usize,
    vectors: HashMap<String, Vec<T>>,
}

impl<T: Scalar> PrecomputedEmbedder<T> {
    pub fn from_store(store: &DenseVectorStore<T>) -> Self {
        Self {
            dim: store.dim(),
            vectors: store.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect(),
        }
    }
}

impl<T: Scalar> QueryEmbedder<T> for PrecomputedEmbedder<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, query: &str) -> Result<Vec<T>, RetrievalError> {
        self.vectors
            .get(query)
            .cloned()
            .ok_or_else(|| RetrievalError::Embedder(format!("no precomputed vector for query {query:?}")))
    }
}

/// Signed feature hashing of normalized tokens, L2-normalized. A
/// deterministic, model-free embedder for smoke runs and tests.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl HashingEmbedder {
    pub fn embed_text<T: Scalar>(&self, text: &str) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for tok in normalize(text).iter() {
            let h = Sha256::digest(tok.as_bytes());
            let bucket = u64::from_le_bytes(h[..8].try_into().unwrap()) as usize % self.dim;
            let sign = if h[8] & 1 == 0 { T::one() } else { -T::one() };
            v[bucket] += sign;
        }
        let norm = inner_product(&v, &v).sqrt();
        if norm > T::zero() {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Embed every passage body of an index into a store keyed by pid.
    pub fn embed_corpus<T: Scalar>(&self, index: &super::PassageIndex) -> DenseVectorStore<T> {
        let mut store = DenseVectorStore::new(self.dim);
        for p in index.passages() {
            store
                .push(p.pid.clone(), &self.embed_text::<T>(&p.body))
                .expect("embedder dimension matches store");
        }
        store
    }
}

impl<T: Scalar> QueryEmbedder<T> for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, query: &str) -> Result<Vec<T>, RetrievalError> {
        Ok(self.embed_text(query))
    }
}

/// Top-`k` keys by inner product with the embedded query, descending, ties
/// by ascending key.
pub fn retrieve_dense<T: Scalar>(
    store: &DenseVectorStore<T>,
    query: &str,
    k: usize,
    embedder: &dyn QueryEmbedder<T>,
) -> Result<RetrievalResult<T>, RetrievalError> {
    if embedder.dim() != store.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: store.dim(),
            got: embedder.dim(),
        });
    }
    let q = embedder.embed(query)?;
    if q.len() != store.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: store.dim(),
            got: q.len(),
        });
    }
    let candidates = store
        .iter()
        .map(|(key, v)| ScoredPassage {
            pid: key.to_string(),
            score: inner_product(&q, v),
        })
        .collect();
    Ok(RetrievalResult {
        query: query.to_string(),
        ranked: rank(candidates, k),
    })
}
