//! Labeled embedding dumps for external 2-D projection tools.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::semantic::embeddings::{read_binary, write_binary};
use crate::semantic::{EmbeddingFormat, EmbeddingMatrix};

#[derive(Serialize, Deserialize)]
struct LabeledRecord {
    label: String,
    id: String,
    v: Vec<f32>,
}

/// Writes every row of every set with its label. JSONL records are
/// `{"label", "id", "v"}`; the binary layout stores `label\tid` as the id.
pub fn export_embeddings_for_projection<T: Scalar>(
    sets: &[(&str, &EmbeddingMatrix<T>)],
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<usize> {
    let path = path.as_ref();
    let Some(dim) = sets.first().map(|(_, e)| e.dim()) else {
        return Err(Error::InsufficientData("nothing to export".into()));
    };
    for (label, e) in sets {
        if e.dim() != dim {
            return Err(Error::Shape(format!("set `{label}` has dimension {}, expected {dim}", e.dim())));
        }
        if label.is_empty() || label.contains(['\t', '\n']) {
            return Err(Error::InvalidInput(format!("invalid label {label:?}")));
        }
    }
    let total = sets.iter().map(|(_, e)| e.len()).sum();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        EmbeddingFormat::Jsonl => {
            for (label, e) in sets {
                for (i, id) in e.ids().iter().enumerate() {
                    let rec = LabeledRecord {
                        label: label.to_string(),
                        id: id.clone(),
                        v: e.row(i).iter().map(|x| x.to_f64_lossy() as f32).collect(),
                    };
                    serde_json::to_writer(&mut w, &rec).map_err(|e| Error::io(path, e.into()))?;
                    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
                }
            }
        }
        EmbeddingFormat::Binary => {
            let mut ids = Vec::with_capacity(total);
            let mut rows = Vec::with_capacity(total);
            for (label, e) in sets {
                for (i, id) in e.ids().iter().enumerate() {
                    ids.push(format!("{label}\t{id}"));
                    rows.push(e.row(i).to_vec());
                }
            }
            let merged = EmbeddingMatrix::from_rows(ids, &rows)?;
            write_binary(&mut w, &merged).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(total)
}

/// Reads a projection dump back into per-label matrices, labels in order of
/// first appearance.
pub fn load_projection_export(
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<IndexMap<String, EmbeddingMatrix<f64>>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut groups: IndexMap<String, (Vec<String>, Vec<Vec<f64>>)> = IndexMap::new();
    match format {
        EmbeddingFormat::Jsonl => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: LabeledRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    path: origin.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                let g = groups.entry(rec.label).or_default();
                g.0.push(rec.id);
                g.1.push(rec.v.into_iter().map(f64::from).collect());
            }
        }
        EmbeddingFormat::Binary => {
            let all = read_binary(BufReader::new(file))?;
            for (i, key) in all.ids().iter().enumerate() {
                let (label, id) = key
                    .split_once('\t')
                    .ok_or_else(|| Error::Format(format!("record `{key}` has no label")))?;
                let g = groups.entry(label.to_string()).or_default();
                g.0.push(id.to_string());
                g.1.push(all.row(i).to_vec());
            }
        }
    }
    groups
        .into_iter()
        .map(|(label, (ids, rows))| EmbeddingMatrix::from_rows(ids, &rows).map(|m| (label, m)))
        .collect()
}
