//! Limits of the normalized deck groups along the base orbit.

use num_complex::Complex64;
use serde::Serialize;

use crate::hyp::MobiusDisc;
use crate::surfaces::{parabolic_element, DeckGenerator, SurfaceModel};
use crate::tower::Tower;

use super::{ClassifyError, Tolerances};

/// Flow times at which the limit is compared with the level groups.
pub const FLOW_TIMES: [f64; 4] = [0.1, 0.3, 0.7, 1.3];
/// Largest final defect accepted as convergence.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    /// Translations along a geodesic with the given endpoints.
    HyperbolicAxis { endpoints: [Complex64; 2] },
    /// Parabolic flow fixing a boundary point.
    ParabolicPoint { point: Complex64 },
    /// The normalized groups stay discrete with this translation length.
    Discrete { translation_length: f64 },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneParameterLimit {
    pub kind: LimitKind,
    pub flow_times: Vec<f64>,
    /// Per level: max over flow times of the coordinate distance between the
    /// nearest normalized deck element and the limit flow.
    pub defects: Vec<f64>,
    /// Per level: `|γ̃_n(0)|` for the normalized generator.
    pub generator_drift: Vec<f64>,
    /// Per level: core length (or parabolic translation).
    pub lengths: Vec<f64>,
    pub commutator_defect: f64,
    pub additivity_defect: f64,
    /// Limit flow parameters: conjugator of the axis, or parabolic fixed point.
    #[serde(skip)]
    flow: Option<Flow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Flow {
    Axis(MobiusDisc),
    Parabolic { point: Complex64, norm: MobiusDisc },
}

impl Flow {
    fn at(&self, s: f64) -> MobiusDisc {
        match self {
            Flow::Axis(a) => a.compose(&MobiusDisc::axis_translation(s)).compose(&a.inverse()),
            Flow::Parabolic { point, norm } => norm.compose(&parabolic_element(*point, s)).compose(&norm.inverse()),
        }
    }
}

impl OneParameterLimit {
    /// The limit flow element at time `s`, when a continuous limit was found.
    pub fn flow(&self, s: f64) -> Option<MobiusDisc> {
        match self.kind {
            LimitKind::HyperbolicAxis { .. } | LimitKind::ParabolicPoint { .. } => self.flow.map(|f| f.at(s)),
            _ => None,
        }
    }
}

/// Per-level deck data conjugated by `M_n`, the isometry sending 0 to the base rep.
#[derive(Debug, Clone, Copy)]
enum LevelGroup {
    Axis { conj: MobiusDisc, length: f64 },
    Parabolic { point: Complex64, translation: f64, norm: MobiusDisc },
}

impl LevelGroup {
    fn new(s: &SurfaceModel, base: Complex64) -> Result<Self, ClassifyError> {
        let m = MobiusDisc::moving_origin_to(base).map_err(|e| ClassifyError::Precondition(e.to_string()))?;
        let m_inv = m.inverse();
        if let (Some(a), Some(b)) = (s.axis_conjugator(), s.band()) {
            return Ok(Self::Axis {
                conj: m_inv.compose(&a),
                length: b.length,
            });
        }
        match s {
            SurfaceModel::CyclicQuotient(q) => match q.deck() {
                DeckGenerator::Parabolic {
                    fixed_point,
                    translation,
                } => Ok(Self::Parabolic {
                    point: fixed_point,
                    translation: translation.abs(),
                    norm: m_inv,
                }),
                DeckGenerator::Hyperbolic { .. } => unreachable!("hyperbolic groups have a band"),
            },
            _ => Err(ClassifyError::Precondition("deck groups are trivial".into())),
        }
    }

    fn length(&self) -> f64 {
        match self {
            Self::Axis { length, .. } => *length,
            Self::Parabolic { translation, .. } => *translation,
        }
    }

    /// Normalized deck element nearest to flow time `s`. The multiple of the
    /// generator is kept as a float so tiny lengths cannot overflow.
    fn nearest(&self, s: f64) -> MobiusDisc {
        let l = self.length();
        let x = (s / l).round() * l;
        self.flow().at(x)
    }

    fn generator(&self) -> MobiusDisc {
        self.nearest(self.length())
    }

    fn flow(&self) -> Flow {
        match self {
            Self::Axis { conj, .. } => Flow::Axis(*conj),
            Self::Parabolic { point, norm, .. } => Flow::Parabolic {
                point: *point,
                norm: *norm,
            },
        }
    }
}

/// Compare the normalized deck groups of levels `0..=H` with the one-parameter
/// group read off the last level.
pub fn geometric_limit(t: &Tower, tol: &Tolerances) -> Result<OneParameterLimit, ClassifyError> {
    if matches!(t.surface_at(0), SurfaceModel::Disc) {
        return Err(ClassifyError::Precondition("deck groups are trivial".into()));
    }
    let base = t.base_rep()?;
    let orbit = t.orbit(base)?;
    let groups: Vec<LevelGroup> = orbit
        .reps
        .iter()
        .enumerate()
        .map(|(n, p)| LevelGroup::new(t.surface_at(n), *p))
        .collect::<Result<_, _>>()?;
    let last = *groups.last().expect("orbit has level 0");
    let flow = last.flow();

    let defects: Vec<f64> = groups
        .iter()
        .map(|g| {
            FLOW_TIMES
                .iter()
                .map(|&s| g.nearest(s).coordinate_distance(&flow.at(s)))
                .fold(0.0, f64::max)
        })
        .collect();
    let generator_drift: Vec<f64> = groups.iter().map(|g| g.generator().center().norm()).collect();
    let lengths: Vec<f64> = groups.iter().map(LevelGroup::length).collect();

    let mut commutator_defect: f64 = 0.0;
    let mut additivity_defect: f64 = 0.0;
    for &s in &FLOW_TIMES {
        for &u in &FLOW_TIMES {
            let (fs, fu) = (flow.at(s), flow.at(u));
            commutator_defect = commutator_defect.max(fs.compose(&fu).coordinate_distance(&fu.compose(&fs)));
            additivity_defect = additivity_defect.max(fs.compose(&fu).coordinate_distance(&flow.at(s + u)));
        }
    }

    let (l0, lh) = (lengths[0], *lengths.last().unwrap());
    let converged = *defects.last().unwrap() < CONVERGENCE_TOL && defects.iter().rev().nth(1).is_some_and(|d| *d < CONVERGENCE_TOL);
    let kind = if lh <= tol.thin && lh < l0 && converged {
        match flow {
            Flow::Axis(a) => LimitKind::HyperbolicAxis {
                endpoints: [a.apply_raw(Complex64::new(-1.0, 0.0)), a.apply_raw(Complex64::new(1.0, 0.0))],
            },
            Flow::Parabolic { point, norm } => LimitKind::ParabolicPoint {
                point: norm.apply_raw(point),
            },
        }
    } else if (lh - l0).abs() <= 1e-12 * l0 {
        LimitKind::Discrete { translation_length: lh }
    } else {
        LimitKind::Inconclusive
    };

    Ok(OneParameterLimit {
        kind,
        flow_times: FLOW_TIMES.to_vec(),
        defects,
        generator_drift,
        lengths,
        commutator_defect,
        additivity_defect,
        flow: Some(flow),
    })
}
