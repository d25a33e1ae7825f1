//! Sentence-embedding matrices and their on-disk encodings.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! "SEMB" | version: u32 = 1 | dim: u32 | count: u64
//! count × ( id_len: u32 | id: UTF-8 | dim × f32 )
//! ```
//!
//! The JSONL alternative has one `{"id": ..., "v": [...]}` object per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"SEMB";
pub const VERSION: u32 = 1;

/// `n × d` embedding rows with their ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    ids: Vec<String>,
    vectors: Matrix<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(ids: Vec<String>, vectors: Matrix<T>) -> Result<Self> {
        if ids.len() != vectors.rows() {
            return Err(Error::Shape(format!(
                "{} ids for {} vectors",
                ids.len(),
                vectors.rows()
            )));
        }
        if vectors.cols() == 0 && vectors.rows() > 0 {
            return Err(Error::Shape("embedding dimension must be at least 1".into()));
        }
        let mut seen = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
            if !vectors.row(i).iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("embedding `{id}`")));
            }
        }
        Ok(Self { ids, vectors })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            ids: Vec::new(),
            vectors: Matrix::zeros(0, dim),
        }
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Ok(Self::empty(0));
        }
        let dim = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            let id = ids.get(i).cloned().unwrap_or_else(|| i.to_string());
            return Err(Error::Shape(format!(
                "record `{id}` has dimension {}, expected {dim}",
                rows[i].len()
            )));
        }
        Self::new(ids, Matrix::from_rows(rows)?)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &Matrix<T> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.vectors.row(i)
    }

    /// Rows for `ids`, in that order. Extra rows are ignored.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let dim = self.dim();
        let mut data = Vec::with_capacity(ids.len() * dim);
        let mut out_ids = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let &row = index.get(id).ok_or_else(|| Error::MissingId(id.to_string()))?;
            data.extend_from_slice(self.row(row));
            out_ids.push(id.to_string());
        }
        Self::new(out_ids, Matrix::from_vec(ids.len(), dim, data)?)
    }

    /// Copy with every row scaled to unit L2 norm.
    pub fn l2_normalized(&self) -> Result<Self> {
        let mut v = self.vectors.clone();
        for i in 0..v.rows() {
            let n = norm(v.row(i));
            if n == T::zero() {
                return Err(Error::InvalidInput(format!(
                    "embedding `{}` has zero norm",
                    self.ids[i]
                )));
            }
            for x in v.row_mut(i) {
                *x = *x / n;
            }
        }
        Ok(Self {
            ids: self.ids.clone(),
            vectors: v,
        })
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            ids: self.ids.clone(),
            vectors: self.vectors.map(|v| U::from_f64_lossy(v.to_f64_lossy())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Binary,
    Jsonl,
}

impl EmbeddingFormat {
    /// `.jsonl`/`.json` select JSONL, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => EmbeddingFormat::Jsonl,
            _ => EmbeddingFormat::Binary,
        }
    }
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "semb" => Ok(EmbeddingFormat::Binary),
            "jsonl" => Ok(EmbeddingFormat::Jsonl),
            other => Err(Error::InvalidInput(format!("unknown embedding format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    id: String,
    v: Vec<f32>,
}

pub fn load_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingMatrix<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        EmbeddingFormat::Binary => read_binary(reader),
        EmbeddingFormat::Jsonl => read_jsonl(reader, &path.display().to_string()),
    }
}

pub fn save_embeddings<T: Scalar>(path: impl AsRef<Path>, emb: &EmbeddingMatrix<T>, format: EmbeddingFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        EmbeddingFormat::Binary => write_binary(&mut w, emb),
        EmbeddingFormat::Jsonl => write_jsonl(&mut w, emb),
    }
    .and_then(|_| w.flush())
    .map_err(|e| Error::io(path, e))
}

/// Encodes as the binary layout; values are narrowed to `f32`.
pub fn write_binary<T: Scalar>(w: &mut impl Write, emb: &EmbeddingMatrix<T>) -> std::io::Result<()> {
    let dim = u32::try_from(emb.dim()).map_err(std::io::Error::other)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&(emb.len() as u64).to_le_bytes())?;
    for (i, id) in emb.ids.iter().enumerate() {
        let id_len = u32::try_from(id.len()).map_err(std::io::Error::other)?;
        w.write_all(&id_len.to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        for &v in emb.row(i) {
            w.write_all(&(v.to_f64_lossy() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_jsonl<T: Scalar>(w: &mut impl Write, emb: &EmbeddingMatrix<T>) -> std::io::Result<()> {
    for (i, id) in emb.ids.iter().enumerate() {
        let rec = JsonlRecord {
            id: id.clone(),
            v: emb.row(i).iter().map(|v| v.to_f64_lossy() as f32).collect(),
        };
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::Format(format!("read error while reading {what}: {e}")),
    })
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_binary(mut r: impl Read) -> Result<EmbeddingMatrix<f64>> {
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"SEMB\"")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r, "dimension")? as usize;
    let mut b = [0u8; 8];
    read_exact_or_truncated(&mut r, &mut b, "count")?;
    let count = u64::from_le_bytes(b);
    if dim == 0 && count > 0 {
        return Err(Error::Format("dimension 0 with non-empty payload".into()));
    }
    let count = usize::try_from(count).map_err(|_| Error::Format("record count overflows".into()))?;

    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut payload = vec![0u8; dim * 4];
    for i in 0..count {
        let id_len = read_u32(&mut r, &format!("id length of record {i}"))? as usize;
        let mut id = vec![0u8; id_len];
        read_exact_or_truncated(&mut r, &mut id, &format!("id of record {i}"))?;
        let id = String::from_utf8(id).map_err(|_| Error::Format(format!("record {i} id is not UTF-8")))?;
        read_exact_or_truncated(&mut r, &mut payload, &format!("vector of record `{id}`"))?;
        data.extend(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64),
        );
        ids.push(id);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
        return Err(Error::Format("trailing bytes after last record".into()));
    }
    EmbeddingMatrix::new(ids, Matrix::from_vec(count, dim, data)?)
}

fn read_jsonl(r: impl BufRead, origin: &str) -> Result<EmbeddingMatrix<f64>> {
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(first) = rows.first() {
            if rec.v.len() != first.len() {
                return Err(Error::Shape(format!(
                    "record `{}` has dimension {}, expected {}",
                    rec.id,
                    rec.v.len(),
                    first.len()
                )));
            }
        }
        rows.push(rec.v.into_iter().map(f64::from).collect());
        ids.push(rec.id);
    }
    EmbeddingMatrix::from_rows(ids, &rows)
}
