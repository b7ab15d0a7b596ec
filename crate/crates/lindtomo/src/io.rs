//! Versioned JSON document schemas for models, SPAM estimates, per-time
//! channel estimates, and reports, plus CSV emission for time series.
//!
//! Complex matrices are stored as nested row-major arrays of `[re, im]`
//! pairs. Every output document embeds a run manifest for reproducibility.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

use crate::dynamics::{choi_of_kraus, KrausSet, LindbladModel};
use crate::krausfit::{KrausEstimate, KrausTimeEstimate};
use crate::linalg::{c, CMat};
use crate::optimize::{FitReport, OptimConfig};
use crate::qcore::{DensityMatrix, Povm};
use crate::spamfit::SpamEstimate;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Nested row-major `[re, im]` representation of a complex matrix.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    if rows.is_empty() {
        return Err(Error::Schema("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Schema("ragged or empty matrix rows".into()));
    }
    Ok(CMat::from_fn(rows.len(), ncols, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

/// Provenance block embedded in every output document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config_hash: String,
    pub seed: u64,
    pub toolkit_version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[String], config: &OptimConfig, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            inputs: inputs.to_vec(),
            config_hash: config_hash(config),
            seed,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
        }
    }
}

/// SHA-256 of the canonical JSON serialization of the solver config.
pub fn config_hash(config: &OptimConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Model document: `{ version, dim, hamiltonian, lindblad_matrix, basis }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub dim: usize,
    pub hamiltonian: MatrixJson,
    pub lindblad_matrix: MatrixJson,
    pub basis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl ModelFile {
    pub fn from_model(model: &LindbladModel, manifest: Option<RunManifest>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            dim: model.dim(),
            hamiltonian: matrix_to_json(model.hamiltonian()),
            lindblad_matrix: matrix_to_json(model.lindblad_matrix()),
            basis: "pauli-tensor".to_string(),
            manifest,
        }
    }

    pub fn to_model(&self) -> Result<LindbladModel> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        if self.basis != "pauli-tensor" {
            return Err(Error::Schema(format!(
                "unsupported operator basis {:?}",
                self.basis
            )));
        }
        let h = matrix_from_json(&self.hamiltonian)?;
        if h.nrows() != self.dim {
            return Err(Error::Schema("hamiltonian dim mismatch".into()));
        }
        let l = matrix_from_json(&self.lindblad_matrix)?;
        LindbladModel::new(h, l)
    }
}

/// SPAM document: initial state, POVM elements, and fit diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpamFile {
    pub version: u32,
    pub rho0: MatrixJson,
    pub povm: Vec<MatrixJson>,
    pub loglike: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl SpamFile {
    pub fn from_estimate(est: &SpamEstimate, manifest: Option<RunManifest>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            rho0: matrix_to_json(est.rho0.matrix()),
            povm: est.povm.elements().iter().map(matrix_to_json).collect(),
            loglike: est.loglike,
            report: Some(est.report.clone()),
            manifest,
        }
    }

    pub fn to_estimate(&self) -> Result<SpamEstimate> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported SPAM version {}",
                self.version
            )));
        }
        let rho0 = DensityMatrix::new(matrix_from_json(&self.rho0)?)?;
        let povm = Povm::new(
            self.povm
                .iter()
                .map(matrix_from_json)
                .collect::<Result<Vec<_>>>()?,
        )?;
        let report = self.report.clone().unwrap_or(FitReport {
            best_loglike: self.loglike,
            params: vec![],
            starts_tried: 0,
            converged: true,
            iterations: 0,
            wall_time_s: 0.0,
        });
        Ok(SpamEstimate {
            rho0,
            povm,
            loglike: self.loglike,
            report,
        })
    }
}

/// One per-time channel entry: Kraus operators plus the canonical Choi
/// matrix (the unitary-freedom-stable form for comparisons).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausEntryFile {
    pub time_us: f64,
    pub operators: Vec<MatrixJson>,
    pub choi: MatrixJson,
    pub loglike: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausFile {
    pub version: u32,
    pub entries: Vec<KrausEntryFile>,
    pub failures: Vec<(f64, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl KrausFile {
    pub fn from_estimate(est: &KrausEstimate, manifest: Option<RunManifest>) -> Result<Self> {
        let entries = est
            .entries
            .iter()
            .map(|e| {
                Ok(KrausEntryFile {
                    time_us: e.time_us,
                    operators: e.kraus.operators().iter().map(matrix_to_json).collect(),
                    choi: matrix_to_json(choi_of_kraus(&e.kraus)?.matrix()),
                    loglike: e.loglike,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            version: SCHEMA_VERSION,
            entries,
            failures: est.failures.clone(),
            manifest,
        })
    }

    pub fn to_estimate(&self) -> Result<KrausEstimate> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported channel-estimate version {}",
                self.version
            )));
        }
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let ops = e
                    .operators
                    .iter()
                    .map(matrix_from_json)
                    .collect::<Result<Vec<_>>>()?;
                Ok(KrausTimeEstimate {
                    time_us: e.time_us,
                    kraus: KrausSet::new_fitted(ops, e.time_us)?,
                    loglike: e.loglike,
                    report: FitReport {
                        best_loglike: e.loglike,
                        params: vec![],
                        starts_tried: 0,
                        converged: true,
                        iterations: 0,
                        wall_time_s: 0.0,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KrausEstimate {
            entries,
            failures: self.failures.clone(),
        })
    }
}

/// Generic versioned report wrapper for analysis outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile<T> {
    pub version: u32,
    pub report: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl<T> ReportFile<T> {
    pub fn new(report: T, manifest: Option<RunManifest>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            report,
            manifest,
        }
    }
}

/// Write any serializable document as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a JSON document, mapping parse failures to schema errors.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Write a two-column CSV time series.
pub fn write_series_csv(path: &Path, value_name: &str, series: &[(f64, f64)]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "time_us,{value_name}")?;
    for (t, v) in series {
        writeln!(f, "{t},{v}")?;
    }
    Ok(())
}
