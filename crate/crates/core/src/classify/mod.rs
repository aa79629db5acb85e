//! Classification of towers: infinitesimal type, thinness, pair modality and
//! the six-row table, plus absorbing annuli, geometric limits and foliations.

pub mod annuli;
pub mod foliation;
pub mod limit;
mod source;

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surfaces::{SurfaceError, MARGULIS_DEFAULT};
use crate::tower::TowerError;

pub use source::{OrbitSource, PairKind, SampledPair};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_PAIR_SAMPLES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("distance sequence increases at index {index} by {excess:e} (beyond the 1e−10 slack)")]
    NonMonotone { index: usize, excess: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("tolerances must satisfy tol_zero > tol_const > tol_iso > 0")]
    ToleranceOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_iso: f64,
    pub tol_zero: f64,
    pub tol_const: f64,
    pub thin: f64,
    pub divergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_iso: 1e-12,
            tol_zero: 1e-6,
            tol_const: 1e-9,
            thin: MARGULIS_DEFAULT,
            divergence: 50.0,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.tol_zero > self.tol_const && self.tol_const > self.tol_iso && self.tol_iso > 0.0 {
            Ok(())
        } else {
            Err(ClassifyError::ToleranceOrder)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    High,
    Medium,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinitesimalType {
    Contracting,
    SemiContracting,
    EventuallyIsometric,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinitesimalVerdict {
    pub kind: InfinitesimalType,
    /// Set when λ ≡ 1 follows from declared coverings rather than numerics.
    pub exact: bool,
    pub covering_from: Option<usize>,
    pub partial_sum: f64,
    pub partial_sums: Vec<f64>,
    /// Fitted ratio q of `1 − λ_n ≈ c·qⁿ` over the trailing half.
    pub tail_ratio: Option<f64>,
    /// Fitted exponent p of `1 − λ_n ≈ c·n^{−p}` over the trailing half.
    pub tail_exponent: Option<f64>,
    pub confidence: Confidence,
    pub note: String,
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fit the trailing half of a defect sequence (levels counted from 1).
fn tail_fit(defects: &[f64]) -> (Option<f64>, Option<f64>) {
    let start = defects.len() / 2;
    let (mut ns, mut logn, mut logd) = (vec![], vec![], vec![]);
    for (i, d) in defects.iter().enumerate().skip(start) {
        if *d > 0.0 {
            let n = (i + 1) as f64;
            ns.push(n);
            logn.push(n.ln());
            logd.push(d.ln());
        }
    }
    let q = slope(&ns, &logd).map(f64::exp);
    let p = slope(&logn, &logd).map(|s| -s);
    (q, p)
}

pub fn infinitesimal_from_defects(
    defects: &[f64],
    covering_from: Option<usize>,
    tol: &Tolerances,
) -> InfinitesimalVerdict {
    let mut partial_sums = Vec::with_capacity(defects.len());
    let mut s = 0.0;
    for d in defects {
        s += d;
        partial_sums.push(s);
    }
    let (tail_ratio, tail_exponent) = tail_fit(defects);
    let mut v = InfinitesimalVerdict {
        kind: InfinitesimalType::Inconclusive,
        exact: false,
        covering_from,
        partial_sum: s,
        partial_sums,
        tail_ratio,
        tail_exponent,
        confidence: Confidence::Low,
        note: String::new(),
    };
    let h = defects.len();
    if let Some(n) = covering_from.filter(|&n| n < h.max(1)) {
        v.kind = InfinitesimalType::EventuallyIsometric;
        v.exact = true;
        v.confidence = Confidence::High;
        v.note = format!("every map from level {n} on is a declared covering, so λ_n = 1 exactly");
        return v;
    }
    if h < 4 {
        v.note = "horizon too short for a tail estimate".into();
        return v;
    }
    if s > tol.divergence {
        v.kind = InfinitesimalType::Contracting;
        v.confidence = Confidence::High;
        v.note = format!("partial sum {s:.6} exceeds the divergence threshold {}", tol.divergence);
        return v;
    }
    let summable = tail_ratio.is_some_and(|q| q < 1.0 - 1e-3);
    let tail = &defects[h / 2..];
    if tail.iter().all(|d| d.abs() < tol.tol_iso) {
        let positive = tail.iter().filter(|d| **d > 0.0).count();
        if positive == tail.len() && summable {
            v.kind = InfinitesimalType::SemiContracting;
            v.confidence = Confidence::Medium;
            v.note = "tail below the isometry tolerance but strictly positive with geometric decay".into();
        } else {
            v.kind = InfinitesimalType::EventuallyIsometric;
            v.confidence = Confidence::Medium;
            v.note = "1 − λ_n below the isometry tolerance over the trailing window".into();
        }
        return v;
    }
    let power_agrees = tail_exponent.map(|p| (p > 1.0) == summable);
    v.confidence = match power_agrees {
        Some(true) => Confidence::High,
        _ => Confidence::Low,
    };
    if summable {
        v.kind = InfinitesimalType::SemiContracting;
        v.note = format!("tail ratio {:.6} < 1 − 1e−3: summable tail", tail_ratio.unwrap_or(f64::NAN));
    } else {
        v.kind = InfinitesimalType::Contracting;
        v.note = "tail of 1 − λ_n does not decay geometrically: non-summable".into();
    }
    v
}

pub fn infinitesimal_type(
    src: &dyn OrbitSource,
    p: Complex64,
    tol: &Tolerances,
) -> Result<InfinitesimalVerdict, ClassifyError> {
    let defects = src.defects(p)?;
    let mut v = infinitesimal_from_defects(&defects, src.covering_from(), tol);
    if defects.len() < src.horizon() && !v.exact {
        v.kind = InfinitesimalType::Inconclusive;
        v.note = format!("orbit aborted after {} levels", defects.len());
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinnessKind {
    EssentiallyThin,
    EssentiallyThick,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinnessVerdict {
    pub kind: ThinnessKind,
    pub deltas: Vec<f64>,
    pub trailing_min: f64,
    /// Whether δ_n is non-increasing over the trailing half (checked for
    /// non-contracting towers).
    pub eventually_non_increasing: Option<bool>,
    /// Whether a second sample point gives the same verdict.
    pub second_point_agrees: Option<bool>,
    pub confidence: Confidence,
}

pub fn thinness_from_deltas(deltas: &[f64], tol: &Tolerances) -> (ThinnessKind, f64, Confidence) {
    let h = deltas.len().saturating_sub(1);
    let tail = &deltas[h / 2..];
    let trailing_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if deltas.len() < 3 {
        return (ThinnessKind::Inconclusive, trailing_min, Confidence::Low);
    }
    let last = deltas[h];
    if tail.iter().all(|d| *d >= tol.thin) {
        let conf = if trailing_min >= 2.0 * tol.thin { Confidence::High } else { Confidence::Medium };
        return (ThinnessKind::EssentiallyThick, trailing_min, conf);
    }
    if last < tol.thin && last <= deltas[h / 2] {
        let conf = if last < 0.1 * tol.thin { Confidence::High } else { Confidence::Medium };
        return (ThinnessKind::EssentiallyThin, trailing_min, conf);
    }
    (ThinnessKind::Inconclusive, trailing_min, Confidence::Low)
}

fn tail_non_increasing(deltas: &[f64]) -> bool {
    let h = deltas.len().saturating_sub(1);
    deltas[h / 2..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-12 || w[1].is_infinite())
}

pub fn thinness(
    src: &dyn OrbitSource,
    p: Complex64,
    infinitesimal: Option<&InfinitesimalVerdict>,
    tol: &Tolerances,
) -> Result<ThinnessVerdict, ClassifyError> {
    let deltas = src.deltas(p)?;
    let (mut kind, trailing_min, confidence) = thinness_from_deltas(&deltas, tol);
    if deltas.len() < src.horizon() + 1 {
        kind = ThinnessKind::Inconclusive;
    }
    let non_contracting = infinitesimal.is_some_and(|v| {
        matches!(
            v.kind,
            InfinitesimalType::SemiContracting | InfinitesimalType::EventuallyIsometric
        )
    });
    let eventually_non_increasing = (non_contracting && kind == ThinnessKind::EssentiallyThin)
        .then(|| tail_non_increasing(&deltas));
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0x51);
    let second_point_agrees = src
        .sample_points(1, &mut rng)
        .first()
        .and_then(|q| src.deltas(*q).ok())
        .map(|d| thinness_from_deltas(&d, tol).0 == kind);
    Ok(ThinnessVerdict {
        kind,
        deltas,
        trailing_min,
        eventually_non_increasing,
        second_point_agrees,
        confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    ToZero,
    PositiveNotAttained,
    EventuallyConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairModality {
    pub label: PairLabel,
    /// Last value of the sequence, taken as the fitted limit.
    pub limit: f64,
    /// Level from which the sequence is constant, for eventually constant pairs.
    pub constant_from: Option<usize>,
}

/// Whether the orbits merge: the distance jumps from above `tol_zero` to
/// (numerically) zero, or starts at zero.
pub fn is_merging_pair(seq: &[f64], tol: &Tolerances) -> bool {
    const COINCIDE: f64 = 1e-12;
    if seq.first().is_some_and(|d| *d <= COINCIDE) {
        return true;
    }
    seq.windows(2).any(|w| w[1] <= COINCIDE && w[0] > tol.tol_zero)
}

/// Label a non-increasing distance sequence.
///
/// A sequence is eventually constant when, after its last decrement above the
/// rounding floor, it stays within `tol_const` for at least two transitions
/// and that last decrement was abrupt (well above the floor). Decrements that
/// fade into the floor gradually are read as convergence to a limit that is
/// not attained.
pub fn pair_modality(seq: &[f64], tol: &Tolerances) -> Result<PairModality, ClassifyError> {
    const SLACK: f64 = 1e-10;
    const CLIFF: f64 = 1e3;
    for (i, w) in seq.windows(2).enumerate() {
        if w[1] > w[0] + SLACK {
            return Err(ClassifyError::NonMonotone {
                index: i + 1,
                excess: w[1] - w[0],
            });
        }
    }
    let h = seq.len().saturating_sub(1);
    let last = seq[h];
    if last < tol.tol_zero && (h == 0 || last < seq[0]) {
        return Ok(PairModality {
            label: PairLabel::ToZero,
            limit: last,
            constant_from: None,
        });
    }
    let floor = |d: f64| 1e-13 * d.max(1.0);
    let last_move = (0..h).rev().find(|&i| seq[i] - seq[i + 1] > floor(seq[i]));
    let onset = match last_move {
        None => Some(0),
        Some(i) if i + 1 == h => None,
        Some(i) => {
            let abrupt = seq[i] - seq[i + 1] > CLIFF * floor(seq[i]);
            abrupt.then_some(i + 1)
        }
    };
    let constant_from = onset.filter(|&n| {
        h >= n + 2 && seq[n] > tol.tol_zero && seq[n..].iter().all(|d| (d - seq[n]).abs() < tol.tol_const)
    });
    Ok(PairModality {
        label: if constant_from.is_some() {
            PairLabel::EventuallyConstant
        } else {
            PairLabel::PositiveNotAttained
        },
        limit: last,
        constant_from,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Unimodal,
    Bimodal,
    Trimodal,
    /// Every sampled pair was excluded.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub kind: PairKind,
    pub p: Complex64,
    pub q: Complex64,
    /// `None` for pairs with merging orbits.
    pub label: Option<PairLabel>,
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalityVerdict {
    pub labels: BTreeSet<PairLabel>,
    pub aggregate: Aggregate,
    pub excluded_pairs: usize,
    pub pairs: Vec<PairRecord>,
}

pub fn domain_modality(
    src: &dyn OrbitSource,
    sample_count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ModalityVerdict, ClassifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = BTreeSet::new();
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for sp in src.sample_pairs(sample_count, &mut rng) {
        let seq = src.distances(sp.p, sp.q)?;
        let final_distance = *seq.last().unwrap_or(&f64::NAN);
        let label = if is_merging_pair(&seq, tol) {
            excluded += 1;
            None
        } else {
            let m = pair_modality(&seq, tol)?;
            labels.insert(m.label);
            Some(m.label)
        };
        pairs.push(PairRecord {
            kind: sp.kind,
            p: sp.p,
            q: sp.q,
            label,
            final_distance,
        });
    }
    let aggregate = match labels.len() {
        0 => Aggregate::Empty,
        1 => Aggregate::Unimodal,
        2 => Aggregate::Bimodal,
        _ => Aggregate::Trimodal,
    };
    Ok(ModalityVerdict {
        labels,
        aggregate,
        excluded_pairs: excluded,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SixTypeVerdict {
    /// Row of the table, `None` when the evidence is inconclusive.
    pub row: Option<u8>,
    pub infinitesimal: InfinitesimalVerdict,
    pub thinness: ThinnessVerdict,
    pub modality: ModalityVerdict,
    pub expected_labels: Vec<PairLabel>,
    pub connectivity: String,
    /// Contradictions between measured modality and the row.
    pub discrepancies: Vec<String>,
    /// Measured facts recorded alongside the verdict.
    pub notes: Vec<String>,
}

pub fn expected_labels(row: u8) -> Vec<PairLabel> {
    use PairLabel::*;
    match row {
        1 => vec![ToZero],
        2 => vec![PositiveNotAttained],
        3 => vec![ToZero, PositiveNotAttained],
        4 => vec![EventuallyConstant],
        5 => vec![PositiveNotAttained, EventuallyConstant],
        6 => vec![ToZero, PositiveNotAttained, EventuallyConstant],
        _ => vec![],
    }
}

pub fn main_type(
    src: &dyn OrbitSource,
    sample_count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<SixTypeVerdict, ClassifyError> {
    tol.validate()?;
    let p = src.base_point();
    let inf = infinitesimal_type(src, p, tol)?;
    let thin = thinness(src, p, Some(&inf), tol)?;
    let modality = domain_modality(src, sample_count, seed, tol)?;
    let mut discrepancies = Vec::new();
    let mut notes = Vec::new();
    use InfinitesimalType as I;
    use ThinnessKind as T;
    let row = match (inf.kind, thin.kind) {
        (I::Contracting, _) => Some(1),
        (I::SemiContracting, T::EssentiallyThick) => Some(2),
        (I::SemiContracting, T::EssentiallyThin) => Some(3),
        (I::EventuallyIsometric, T::EssentiallyThick) => {
            let all_constant = modality.labels.iter().all(|l| *l == PairLabel::EventuallyConstant);
            Some(if all_constant { 4 } else { 5 })
        }
        (I::EventuallyIsometric, T::EssentiallyThin) => Some(6),
        _ => None,
    };
    let expected = row.map(expected_labels).unwrap_or_default();
    if let Some(r) = row {
        let measured: Vec<PairLabel> = modality.labels.iter().copied().collect();
        let consistent = match r {
            // Row 5 is decided by modality; it only needs to avoid pairs tending to 0.
            5 => !modality.labels.contains(&PairLabel::ToZero),
            _ => measured == expected,
        };
        if !consistent {
            discrepancies.push(format!(
                "row {r} expects pair labels {expected:?}, measured {measured:?}"
            ));
        }
    }
    if thin.second_point_agrees == Some(false) {
        discrepancies.push("thinness verdict differs at a second sample point".into());
    }
    if thin.eventually_non_increasing == Some(false) {
        discrepancies.push("injectivity radii are not eventually non-increasing on a thin non-contracting tower".into());
    }
    if let Some(m) = src.modulus_trend() {
        notes.push(m);
    }
    Ok(SixTypeVerdict {
        row,
        infinitesimal: inf,
        thinness: thin,
        modality,
        expected_labels: expected,
        connectivity: src.connectivity_note(),
        discrepancies,
        notes,
    })
}
