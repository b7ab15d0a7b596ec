//! Synthetic shot-count generation: enumerate prepare-evolve-measure
//! sequences, propagate a ground-truth model, and draw multinomial counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::dynamics::{liouvillian, LindbladModel};
use crate::linalg::dag;
use crate::qcore::{
    outcome_prob_raw, BasisLabel, DensityMatrix, Povm, PrepLabel, BASIS_SYMBOLS, PREP_SYMBOLS,
};
use crate::{Error, Result};

pub const DATASET_VERSION: u32 = 1;
pub const DEFAULT_SHOTS: u64 = 1000;

/// Ground-truth state preparation and measurement used by the generator.
#[derive(Debug, Clone)]
pub struct SpamTruth {
    pub rho0: DensityMatrix,
    pub povm: Povm,
}

impl SpamTruth {
    /// Perfect ground-state preparation and projective z measurement.
    pub fn ideal(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        Ok(Self {
            rho0: DensityMatrix::basis_state(dim, 0)?,
            povm: Povm::projective_z(n_qubits),
        })
    }
}

/// One (preparation, basis, duration) sequence with its observed counts,
/// indexed by measurement outcome (bitstring value).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub prep: PrepLabel,
    pub basis: BasisLabel,
    pub time_us: f64,
    pub shots: u64,
    #[serde(with = "counts_map")]
    pub counts: Vec<u64>,
}

impl SequenceRecord {
    pub fn n_outcomes(&self) -> usize {
        self.counts.len()
    }

    /// Schema invariants: counts sum to shots and cover exactly the 2^n
    /// bitstrings of the label width.
    pub fn validate(&self) -> Result<()> {
        let n = self.prep.n_qubits();
        if self.basis.n_qubits() != n {
            return Err(Error::Schema(format!(
                "prep {} and basis {} disagree on qubit count",
                self.prep, self.basis
            )));
        }
        if self.counts.len() != 1usize << n {
            return Err(Error::Schema(format!(
                "record {}/{} has {} outcomes, expected {}",
                self.prep,
                self.basis,
                self.counts.len(),
                1usize << n
            )));
        }
        if self.time_us < 0.0 || !self.time_us.is_finite() {
            return Err(Error::Schema(format!("invalid time {}", self.time_us)));
        }
        let total: u64 = self.counts.iter().sum();
        if self.shots == 0 || total != self.shots {
            return Err(Error::Schema(format!(
                "counts sum to {total}, shots field says {}",
                self.shots
            )));
        }
        Ok(())
    }
}

/// Counts serialize as a map keyed by outcome bitstring.
mod counts_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(counts: &[u64], ser: S) -> std::result::Result<S::Ok, S::Error> {
        let width = (counts.len().max(2)).trailing_zeros() as usize;
        let map: BTreeMap<String, u64> = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| (format!("{i:0width$b}"), n))
            .collect();
        map.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<u64>, D::Error> {
        use serde::de::Error as DeError;
        let map = BTreeMap::<String, u64>::deserialize(de)?;
        if map.is_empty() {
            return Err(D::Error::custom("empty counts map"));
        }
        let width = map.keys().next().unwrap().len();
        let n_out = 1usize << width;
        let mut counts = vec![0u64; n_out];
        for (k, v) in map {
            if k.len() != width {
                return Err(D::Error::custom(format!(
                    "outcome label {k:?} has inconsistent width"
                )));
            }
            let idx = usize::from_str_radix(&k, 2)
                .map_err(|_| D::Error::custom(format!("outcome label {k:?} is not a bitstring")))?;
            if idx >= n_out {
                return Err(D::Error::custom(format!("outcome label {k:?} out of range")));
            }
            counts[idx] = v;
        }
        Ok(counts)
    }
}

/// A full prepare-evolve-measure dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub version: u32,
    pub n_qubits: usize,
    pub times_us: Vec<f64>,
    pub shots_nominal: u64,
    pub records: Vec<SequenceRecord>,
    /// Provenance of the generating command, if file-backed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<crate::io::RunManifest>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        if self.version != DATASET_VERSION {
            return Err(Error::Schema(format!(
                "unsupported dataset version {}",
                self.version
            )));
        }
        if !(1..=2).contains(&self.n_qubits) {
            return Err(Error::Schema(format!(
                "n_qubits must be 1 or 2, got {}",
                self.n_qubits
            )));
        }
        if self.records.is_empty() {
            return Err(Error::InsufficientData("dataset has no records".into()));
        }
        for rec in &self.records {
            rec.validate()?;
            if rec.prep.n_qubits() != self.n_qubits {
                return Err(Error::Schema(format!(
                    "record {} does not match dataset qubit count {}",
                    rec.prep, self.n_qubits
                )));
            }
        }
        Ok(())
    }

    /// Records at a given time (exact match on the stored grid value).
    pub fn at_time(&self, t_us: f64) -> Vec<&SequenceRecord> {
        self.records.iter().filter(|r| r.time_us == t_us).collect()
    }
}

/// All (prep, basis) pairs in deterministic lexicographic order, preparation
/// outer, basis inner: 18 for one qubit, 324 for two.
pub fn enumerate_sequences(n_qubits: usize) -> Result<Vec<(PrepLabel, BasisLabel)>> {
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::Unsupported(format!(
            "sequence enumeration supports 1 or 2 qubits, got {n_qubits}"
        )));
    }
    let mut preps: Vec<PrepLabel> = PREP_SYMBOLS.iter().map(|&s| PrepLabel(vec![s])).collect();
    let mut bases: Vec<BasisLabel> = BASIS_SYMBOLS.iter().map(|&s| BasisLabel(vec![s])).collect();
    if n_qubits == 2 {
        preps = PREP_SYMBOLS
            .iter()
            .flat_map(|&a| PREP_SYMBOLS.iter().map(move |&b| PrepLabel(vec![a, b])))
            .collect();
        bases = BASIS_SYMBOLS
            .iter()
            .flat_map(|&a| BASIS_SYMBOLS.iter().map(move |&b| BasisLabel(vec![a, b])))
            .collect();
    }
    let mut out = Vec::with_capacity(preps.len() * bases.len());
    for p in &preps {
        for b in &bases {
            out.push((p.clone(), b.clone()));
        }
    }
    Ok(out)
}

/// `R_s rho0 R_s^dag` under the perfect-pulse assumption.
pub fn ideal_prep_state(prep: &PrepLabel, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if 1usize << prep.n_qubits() != rho0.dim() {
        return Err(Error::DimMismatch(format!(
            "prep {} does not match state dim {}",
            prep,
            rho0.dim()
        )));
    }
    let u = prep.unitary();
    DensityMatrix::new(&u * rho0.matrix() * dag(&u))
}

/// Draw a multinomial sample by conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, probs: &[f64], shots: u64) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut rest: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == probs.len() - 1 {
            counts[i] = remaining;
            break;
        }
        let cond = (p / rest).clamp(0.0, 1.0);
        let n = Binomial::new(remaining, cond)
            .expect("conditional probability in [0,1]")
            .sample(rng);
        counts[i] = n;
        remaining -= n;
        rest -= p;
        if rest <= 0.0 {
            break;
        }
    }
    counts
}

/// Generate a dataset from a ground-truth model and SPAM description.
///
/// For each (prep, basis, time): `p_o = Tr[R_b rho(t) R_b^dag M_o]` with
/// `rho(t) = exp(L t)` applied to the prepared state. Counts are drawn
/// multinomially from a per-sequence PRNG stream derived from
/// `(seed, sequence index)`, so the result is independent of scheduling
/// order.
pub fn generate(
    truth: &LindbladModel,
    spam: &SpamTruth,
    times_us: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Dataset> {
    if shots == 0 {
        return Err(Error::InsufficientData("shots must be >= 1".into()));
    }
    if !times_us.contains(&0.0) {
        return Err(Error::InvalidModel(
            "time grid must include 0 (required by SPAM estimation)".into(),
        ));
    }
    let n_qubits = truth.dim().trailing_zeros() as usize;
    if spam.rho0.dim() != truth.dim() || spam.povm.dim() != truth.dim() {
        return Err(Error::DimMismatch("truth/SPAM dims differ".into()));
    }
    let mut times: Vec<f64> = times_us.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let pairs = enumerate_sequences(n_qubits)?;
    let sup = liouvillian(truth)?;
    let props: Vec<_> = times.iter().map(|&t| sup.propagator(t)).collect();

    // One job per (sequence pair, time); PRNG stream index is the job index
    // in this fixed enumeration order.
    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|s| (0..times.len()).map(move |ti| (s, ti)))
        .collect();

    let records: Result<Vec<SequenceRecord>> = jobs
        .par_iter()
        .enumerate()
        .map(|(job_idx, &(s, ti))| {
            let (prep, basis) = &pairs[s];
            let rho_s = ideal_prep_state(prep, &spam.rho0)?;
            let rho_t = crate::dynamics::apply_propagator(&props[ti], rho_s.matrix());
            let ub = basis.unitary();
            let rho_meas = &ub * rho_t * dag(&ub);
            let mut probs = Vec::with_capacity(spam.povm.n_outcomes());
            for el in spam.povm.elements() {
                let p = outcome_prob_raw(&rho_meas, el)?;
                if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                    return Err(Error::InvalidModel(format!(
                        "outcome probability {p} outside [0,1] for prep {prep}, basis {basis}, t = {}",
                        times[ti]
                    )));
                }
                probs.push(p.clamp(0.0, 1.0));
            }
            let total: f64 = probs.iter().sum();
            let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ job_idx as u64);
            let counts = multinomial(&mut rng, &probs, shots);
            Ok(SequenceRecord {
                prep: prep.clone(),
                basis: basis.clone(),
                time_us: times[ti],
                shots,
                counts,
            })
        })
        .collect();

    let ds = Dataset {
        version: DATASET_VERSION,
        n_qubits,
        times_us: times,
        shots_nominal: shots,
        records: records?,
        manifest: None,
    };
    ds.validate()?;
    Ok(ds)
}

/// A record filter; `None` fields match anything. Times match within 1e-9.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RecordFilter {
    pub prep: Option<PrepLabel>,
    pub basis: Option<BasisLabel>,
    pub time_us: Option<f64>,
}

impl RecordFilter {
    pub fn matches(&self, rec: &SequenceRecord) -> bool {
        self.prep.as_ref().is_none_or(|p| *p == rec.prep)
            && self.basis.as_ref().is_none_or(|b| *b == rec.basis)
            && self.time_us.is_none_or(|t| (t - rec.time_us).abs() < 1e-9)
    }
}

/// Remove every record matching any filter. The result may be incomplete;
/// estimators accept that. Errors if nothing remains.
pub fn exclude(data: &Dataset, filters: &[RecordFilter]) -> Result<Dataset> {
    let records: Vec<SequenceRecord> = data
        .records
        .iter()
        .filter(|r| !filters.iter().any(|f| f.matches(r)))
        .cloned()
        .collect();
    if records.is_empty() {
        return Err(Error::InsufficientData(
            "exclusion filters removed every record".into(),
        ));
    }
    let mut times: Vec<f64> = records.iter().map(|r| r.time_us).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    Ok(Dataset {
        version: data.version,
        n_qubits: data.n_qubits,
        times_us: times,
        shots_nominal: data.shots_nominal,
        records,
        manifest: data.manifest.clone(),
    })
}
