//! Level-indexed rules producing surfaces and maps.

use serde::{Deserialize, Serialize};

use crate::hyp::MobiusDisc;
use crate::surfaces::{CyclicQuotient, RoundAnnulus, SurfaceModel};

use super::map::MapElement;
use super::TowerError;

/// A decaying sequence indexed from level 0: `ratio^{n+1}` or `(n+1)^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    Geometric { ratio: f64 },
    Power { exponent: f64 },
}

impl Decay {
    pub fn at(&self, n: usize) -> f64 {
        let k = (n + 1) as f64;
        match self {
            Self::Geometric { ratio } => ratio.powf(k),
            Self::Power { exponent } => k.powf(-exponent),
        }
    }
}

/// Radial compression `κ_n = coefficient · decay(n)`: the next annulus is
/// thicker by the factor `1/(1 − κ_n)` than a covering would need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compression {
    pub coefficient: f64,
    pub decay: Decay,
}

fn one_u32() -> u32 {
    1
}

fn one_f64() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SurfaceRule {
    Disc,
    /// `h_0 = log(1/inner_radius)`, `h_{n+1} = degree · h_n / (1 − κ_n)`.
    RoundAnnulus {
        inner_radius: f64,
        #[serde(default = "one_u32")]
        degree: u32,
        #[serde(default)]
        compression: Option<Compression>,
    },
    /// Hyperbolic cyclic quotients with `ℓ_n = length · ratio^n` along the axis
    /// `conjugator(−1, 1)` (the real diameter by default).
    CyclicQuotient {
        length: f64,
        #[serde(default = "one_f64")]
        ratio: f64,
        #[serde(default)]
        conjugator: Option<MobiusDisc>,
    },
    Fixed { surface: SurfaceModel },
}

impl SurfaceRule {
    /// Surfaces for levels `0..count`.
    pub fn generate(&self, count: usize) -> Result<Vec<SurfaceModel>, TowerError> {
        let mut out = Vec::with_capacity(count);
        match self {
            Self::Disc => out.resize(count, SurfaceModel::Disc),
            Self::Fixed { surface } => out.resize(count, *surface),
            Self::RoundAnnulus {
                inner_radius,
                degree,
                compression,
            } => {
                if *degree == 0 {
                    return Err(TowerError::BadSpec("annulus degree must be at least 1".into()));
                }
                let mut h = RoundAnnulus::new(*inner_radius)?.log_inverse_radius();
                for n in 0..count {
                    out.push(SurfaceModel::annulus_from_log(h)?);
                    let kappa = compression.map_or(0.0, |c| c.coefficient * c.decay.at(n));
                    if !(0.0..1.0).contains(&kappa) {
                        return Err(TowerError::BadSpec(format!("compression {kappa} at level {n} outside [0, 1)")));
                    }
                    h = (*degree as f64 * h) / (1.0 - kappa);
                }
            }
            Self::CyclicQuotient {
                length,
                ratio,
                conjugator,
            } => {
                let a = conjugator.unwrap_or_else(MobiusDisc::identity);
                let mut l = *length;
                for _ in 0..count {
                    out.push(SurfaceModel::CyclicQuotient(CyclicQuotient::hyperbolic(a, l)?));
                    l *= ratio;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MapRule {
    Fixed {
        map: MapElement,
    },
    /// Scalings with `1 − |c_n| = coefficient · decay(n)`.
    ScalingSequence {
        coefficient: f64,
        decay: Decay,
        #[serde(default)]
        phase: f64,
    },
    /// `before` for levels `< at`, `after` from level `at` on.
    Switch {
        before: Box<MapRule>,
        after: Box<MapRule>,
        at: usize,
    },
}

impl MapRule {
    pub fn at(&self, n: usize) -> MapElement {
        match self {
            Self::Fixed { map } => map.clone(),
            Self::ScalingSequence {
                coefficient,
                decay,
                phase,
            } => MapElement::Scaling {
                defect: coefficient * decay.at(n),
                phase: *phase,
            },
            Self::Switch { before, after, at } => {
                if n < *at {
                    before.at(n)
                } else {
                    after.at(n)
                }
            }
        }
    }
}
