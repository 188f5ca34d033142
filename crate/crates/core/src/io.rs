//! On-disk formats: embeddings text, community model JSON, assignments,
//! ground-truth labels, the flat key=value config file, the loss-trace CSV
//! and the run manifest. Every artifact speaks original node ids.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gmm::{CovarianceMode, GmmState, Responsibilities};
use crate::graph::IdMap;
use crate::trainer::{LossRow, TrainConfig};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// printf %g-style formatting with the given number of significant digits,
/// trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        let mantissa = trim_decimal_zeros(mantissa);
        format!("{mantissa}e{exponent}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_decimal_zeros(&format!("{x:.decimals$}"))
    }
}

fn trim_decimal_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Word2vec-style text embeddings: a "count dim" header, then one line per
/// node with its original id and the vector at six significant digits.
pub fn write_embeddings_text<W: Write>(
    mut writer: W,
    phi: &Array2<f64>,
    ids: &IdMap,
) -> std::io::Result<()> {
    writeln!(writer, "{} {}", phi.nrows(), phi.ncols())?;
    for (dense, row) in phi.outer_iter().enumerate() {
        write!(writer, "{}", ids.original(dense as u32))?;
        for v in row {
            write!(writer, " {}", format_significant(*v, 6))?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn read_embeddings_text<R: BufRead>(reader: R) -> Result<(Vec<u64>, Array2<f64>), FormatError> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.ok_or(FormatError::Malformed {
        line: 1,
        reason: "missing header".into(),
    })?;
    let mut tokens = header.split_whitespace();
    let parse_count = |tok: Option<&str>, what: &str| {
        tok.ok_or_else(|| FormatError::Malformed { line: 1, reason: format!("missing {what}") })?
            .parse::<usize>()
            .map_err(|e| FormatError::Malformed { line: 1, reason: format!("bad {what}: {e}") })
    };
    let count = parse_count(tokens.next(), "node count")?;
    let dim = parse_count(tokens.next(), "dimension")?;
    let mut ids = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    let mut rows = 0usize;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let id: u64 = tokens
            .next()
            .unwrap()
            .parse()
            .map_err(|e| FormatError::Malformed { line: line_no, reason: format!("bad id: {e}") })?;
        ids.push(id);
        let mut seen = 0usize;
        for tok in tokens {
            let v: f64 = tok.parse().map_err(|e| FormatError::Malformed {
                line: line_no,
                reason: format!("bad component {tok:?}: {e}"),
            })?;
            data.push(v);
            seen += 1;
        }
        if seen != dim {
            return Err(FormatError::Malformed {
                line: line_no,
                reason: format!("expected {dim} components, found {seen}"),
            });
        }
        rows += 1;
    }
    if rows != count {
        return Err(FormatError::Malformed {
            line: rows + 1,
            reason: format!("header promised {count} rows, found {rows}"),
        });
    }
    let matrix = Array2::from_shape_vec((count, dim), data).expect("validated shape");
    Ok((ids, matrix))
}

/// Serialized community model: mixture parameters, per-node responsibilities
/// and the full community ranking per node, keyed by original node ids.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CommunityModel {
    pub k: usize,
    pub dim: usize,
    pub covariance: CovarianceMode,
    pub floor: f64,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: CovarianceData,
    pub original_ids: Vec<u64>,
    pub responsibilities: Vec<Vec<f64>>,
    /// All K community ids per node, strongest first (top-N is a prefix).
    pub top_communities: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum CovarianceData {
    Diagonal(Vec<Vec<f64>>),
    Full(Vec<Vec<Vec<f64>>>),
}

impl CommunityModel {
    pub fn from_state(state: &GmmState, resp: &Responsibilities, ids: &IdMap) -> Self {
        let k = state.component_count();
        let dim = state.dim();
        let covariances = match state.mode() {
            CovarianceMode::Diagonal => CovarianceData::Diagonal(
                state.covariances().iter().map(|c| c.diag().to_vec()).collect(),
            ),
            CovarianceMode::Full => CovarianceData::Full(
                state
                    .covariances()
                    .iter()
                    .map(|c| c.outer_iter().map(|row| row.to_vec()).collect())
                    .collect(),
            ),
        };
        let ranking = crate::gmm::predict_communities(resp, k);
        CommunityModel {
            k,
            dim,
            covariance: state.mode(),
            floor: state.floor(),
            weights: state.weights().to_vec(),
            means: state.means().outer_iter().map(|row| row.to_vec()).collect(),
            covariances,
            original_ids: (0..ids.len() as u32).map(|v| ids.original(v)).collect(),
            responsibilities: resp.gamma.outer_iter().map(|row| row.to_vec()).collect(),
            top_communities: ranking.per_node,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let model: CommunityModel = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), FormatError> {
        let bad = |reason: String| FormatError::Malformed { line: 0, reason };
        if self.weights.len() != self.k || self.means.len() != self.k {
            return Err(bad("weights/means do not match k".into()));
        }
        if self.means.iter().any(|m| m.len() != self.dim) {
            return Err(bad("mean dimension mismatch".into()));
        }
        match &self.covariances {
            CovarianceData::Diagonal(d) => {
                if d.len() != self.k || d.iter().any(|v| v.len() != self.dim) {
                    return Err(bad("diagonal covariance shape mismatch".into()));
                }
            }
            CovarianceData::Full(f) => {
                if f.len() != self.k
                    || f.iter().any(|m| {
                        m.len() != self.dim || m.iter().any(|row| row.len() != self.dim)
                    })
                {
                    return Err(bad("full covariance shape mismatch".into()));
                }
            }
        }
        let n = self.original_ids.len();
        if self.responsibilities.len() != n || self.top_communities.len() != n {
            return Err(bad("per-node tables do not match the id list".into()));
        }
        if self.responsibilities.iter().any(|r| r.len() != self.k) {
            return Err(bad("responsibility row width mismatch".into()));
        }
        if self.top_communities.iter().any(|t| t.len() != self.k) {
            return Err(bad("community ranking width mismatch".into()));
        }
        Ok(())
    }

    /// Top-N assignment lines derived from the stored ranking.
    pub fn assignments(&self, top_n: usize) -> Vec<(u64, Vec<u32>)> {
        self.original_ids
            .iter()
            .zip(&self.top_communities)
            .map(|(&id, ranking)| (id, ranking[..top_n].to_vec()))
            .collect()
    }
}

/// Assignments file: "node_id k1 [k2 …]" per line, strongest community first.
pub fn write_assignments<W: Write>(
    mut writer: W,
    assignments: &[(u64, Vec<u32>)],
) -> std::io::Result<()> {
    for (id, communities) in assignments {
        write!(writer, "{id}")?;
        for c in communities {
            write!(writer, " {c}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn read_assignments<R: BufRead>(reader: R) -> Result<Vec<(u64, Vec<u32>)>, FormatError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let id: u64 = tokens.next().unwrap().parse().map_err(|e| FormatError::Malformed {
            line: line_no,
            reason: format!("bad node id: {e}"),
        })?;
        let communities: Result<Vec<u32>, _> = tokens
            .map(|tok| {
                tok.parse::<u32>().map_err(|e| FormatError::Malformed {
                    line: line_no,
                    reason: format!("bad community id {tok:?}: {e}"),
                })
            })
            .collect();
        let communities = communities?;
        if communities.is_empty() {
            return Err(FormatError::Malformed {
                line: line_no,
                reason: "node line carries no community ids".into(),
            });
        }
        out.push((id, communities));
    }
    Ok(out)
}

/// Ground-truth file: "node_id label_id" per line, one line per membership
/// (a node may appear on several lines on multi-label data).
pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<(u64, u32)>, FormatError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(FormatError::Malformed {
                line: line_no,
                reason: format!("expected \"node_id label_id\", found {trimmed:?}"),
            });
        };
        let node: u64 = a.parse().map_err(|e| FormatError::Malformed {
            line: line_no,
            reason: format!("bad node id: {e}"),
        })?;
        let label: u32 = b.parse().map_err(|e| FormatError::Malformed {
            line: line_no,
            reason: format!("bad label id: {e}"),
        })?;
        out.push((node, label));
    }
    Ok(out)
}

/// Optional per-field overrides parsed from the flat key=value config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigPatch {
    pub k: Option<usize>,
    pub gamma: Option<usize>,
    pub ell: Option<usize>,
    pub zeta: Option<usize>,
    pub dim: Option<usize>,
    pub negatives: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub lr0: Option<f64>,
    pub seed: Option<u64>,
    pub covariance: Option<CovarianceMode>,
    pub floor: Option<f64>,
    pub resample_corpus: Option<bool>,
    pub record_loss_draws: Option<bool>,
    pub threads: Option<usize>,
}

impl ConfigPatch {
    pub fn apply(&self, mut base: TrainConfig) -> TrainConfig {
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field.clone() {
                    base.$field = v;
                }
            };
        }
        set!(k);
        set!(gamma);
        set!(ell);
        set!(zeta);
        set!(dim);
        set!(negatives);
        set!(alpha);
        set!(beta);
        set!(t1);
        set!(t2);
        set!(lr0);
        set!(seed);
        set!(covariance);
        set!(floor);
        set!(resample_corpus);
        set!(record_loss_draws);
        set!(threads);
        base
    }
}

/// Parse the config file: one `key=value` per line, `#` comments allowed.
pub fn parse_config(text: &str) -> Result<ConfigPatch, FormatError> {
    let mut patch = ConfigPatch::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(FormatError::Malformed {
                line: line_no,
                reason: format!("expected key=value, found {line:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |e: String| FormatError::Malformed {
            line: line_no,
            reason: format!("bad value for {key}: {e}"),
        };
        macro_rules! parse_into {
            ($field:ident, $ty:ty) => {
                patch.$field =
                    Some(value.parse::<$ty>().map_err(|e| bad(e.to_string()))?)
            };
        }
        match key {
            "k" => parse_into!(k, usize),
            "gamma" => parse_into!(gamma, usize),
            "ell" => parse_into!(ell, usize),
            "zeta" => parse_into!(zeta, usize),
            "dim" => parse_into!(dim, usize),
            "negatives" => parse_into!(negatives, usize),
            "alpha" => parse_into!(alpha, f64),
            "beta" => parse_into!(beta, f64),
            "t1" => parse_into!(t1, usize),
            "t2" => parse_into!(t2, usize),
            "lr0" => parse_into!(lr0, f64),
            "seed" => parse_into!(seed, u64),
            "floor" => parse_into!(floor, f64),
            "resample_corpus" => parse_into!(resample_corpus, bool),
            "record_loss_draws" => parse_into!(record_loss_draws, bool),
            "threads" => parse_into!(threads, usize),
            "covariance" => {
                patch.covariance = Some(match value {
                    "full" => CovarianceMode::Full,
                    "diagonal" | "diag" => CovarianceMode::Diagonal,
                    other => return Err(bad(format!("unknown covariance mode {other:?}"))),
                })
            }
            other => {
                return Err(FormatError::Malformed {
                    line: line_no,
                    reason: format!("unknown config key {other:?}"),
                })
            }
        }
    }
    Ok(patch)
}

/// Loss trace CSV, one row per outer iteration.
pub fn write_loss_trace<W: Write>(mut writer: W, trace: &[LossRow]) -> std::io::Result<()> {
    writeln!(writer, "iteration,o1,o2,o3prime,total,total_per_node,seconds")?;
    for row in trace {
        writeln!(
            writer,
            "{},{},{},{},{},{},{:.3}",
            row.iteration, row.o1, row.o2, row.o3, row.total, row.total_per_node, row.seconds
        )?;
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Record of a run: the exact configuration, digests of every input and
/// produced artifact, the seed and per-phase timings.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: TrainConfig,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
    pub timings_seconds: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Verify that every recorded digest still matches the file on disk.
    /// Paths are resolved relative to `root`. Returns mismatched names.
    pub fn verify(&self, root: &Path) -> std::io::Result<Vec<String>> {
        let mut bad = Vec::new();
        for (name, digest) in self.inputs.iter().chain(self.artifacts.iter()) {
            let path = if Path::new(name).is_absolute() {
                Path::new(name).to_path_buf()
            } else {
                root.join(name)
            };
            if !path.exists() || sha256_file(&path)? != *digest {
                bad.push(name.clone());
            }
        }
        Ok(bad)
    }
}
