//! Leaves along which pair distances shrink to zero or freeze.

use num_complex::Complex64;
use serde::Serialize;

use crate::hyp::MobiusDisc;
use crate::surfaces::SurfaceModel;
use crate::tower::{LevelMap, Tower};

use super::limit::{geometric_limit, LimitKind, OneParameterLimit};
use super::{infinitesimal_type, thinness, ClassifyError, InfinitesimalType, ThinnessKind, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafKind {
    Contracting,
    EventuallyIsometric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaf {
    pub kind: LeafKind,
    pub through: Complex64,
    pub reps: Vec<Complex64>,
    /// The same samples in annulus coordinates, for round annuli.
    pub annulus: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafCheck {
    pub kind: LeafKind,
    pub p: Complex64,
    pub q: Complex64,
    pub initial: f64,
    pub last: f64,
    /// Largest `|d_n − d_0|`, relevant for isometric leaves.
    pub max_change: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Foliation {
    pub limit: OneParameterLimit,
    pub leaves: Vec<Leaf>,
    pub checks: Vec<LeafCheck>,
    pub all_passed: bool,
}

/// The lift of `F_{0,H}` in the coordinates where it is simplest.
#[derive(Debug, Clone, Copy)]
enum CompositeLift {
    /// `ζ ↦ aζ + b` between band coordinates.
    Affine { a: f64, b: Complex64 },
    /// A disc automorphism between reps.
    Mobius(MobiusDisc),
}

fn composite_lift(t: &Tower) -> Result<CompositeLift, ClassifyError> {
    let mut lift: Option<CompositeLift> = None;
    for n in 0..t.horizon() {
        let step = match t.level_map(n)? {
            LevelMap::Band { alpha, beta, .. } => CompositeLift::Affine { a: *alpha, b: *beta },
            LevelMap::Disc { element, .. } => CompositeLift::Mobius(element.as_mobius().ok_or_else(|| {
                ClassifyError::Precondition(format!("level map {n} is neither affine in band coordinates nor an automorphism"))
            })?),
        };
        lift = Some(match (lift, step) {
            (None, s) => s,
            (Some(CompositeLift::Affine { a, b }), CompositeLift::Affine { a: a2, b: b2 }) => CompositeLift::Affine {
                a: a2 * a,
                b: b * a2 + b2,
            },
            (Some(CompositeLift::Mobius(m)), CompositeLift::Mobius(m2)) => CompositeLift::Mobius(m2.compose(&m)),
            _ => return Err(ClassifyError::Precondition("mixed level map kinds".into())),
        });
    }
    lift.ok_or_else(|| ClassifyError::Precondition("horizon is zero".into()))
}

/// Contracting and eventually isometric leaves through each seed (a level-0
/// rep), with `samples` points per leaf and one distance check per leaf.
pub fn foliation(t: &Tower, seeds: &[Complex64], samples: usize, tol: &Tolerances) -> Result<Foliation, ClassifyError> {
    let s0 = t.surface_at(0);
    let band0 = s0
        .band()
        .ok_or_else(|| ClassifyError::Precondition("level 0 is not an annulus-type surface".into()))?;
    let base = t.base_rep()?;
    let inf = infinitesimal_type(t, base, tol)?;
    if inf.kind == InfinitesimalType::Contracting {
        return Err(ClassifyError::Precondition("tower is infinitesimally contracting".into()));
    }
    let thin = thinness(t, base, Some(&inf), tol)?;
    if thin.kind != ThinnessKind::EssentiallyThin {
        return Err(ClassifyError::Precondition("tower is not essentially thin".into()));
    }
    let limit = geometric_limit(t, tol)?;
    if !matches!(limit.kind, LimitKind::HyperbolicAxis { .. }) {
        return Err(ClassifyError::Precondition("no continuous geometric limit detected".into()));
    }
    let lift = composite_lift(t)?;
    let h = t.horizon();
    let top = t.surface_at(h);
    let l0 = band0.length;
    let samples = samples.max(2);

    // Contracting leaves are orbits of the limit flow pulled back to level 0.
    let contracting_point = |p: Complex64, u: f64| -> Complex64 {
        match lift {
            CompositeLift::Affine { .. } => {
                let z = s0.to_band(p).expect("band surface");
                s0.from_band(z + u).expect("band surface")
            }
            CompositeLift::Mobius(m) => {
                let flow = top.axis_shift(u).expect("band surface");
                m.inverse().apply_raw(flow.apply_raw(m.apply_raw(p)))
            }
        }
    };
    let isometric_point = |p: Complex64, y: f64| -> Complex64 {
        let z = s0.to_band(p).expect("band surface");
        s0.from_band(Complex64::new(z.re, y)).expect("band surface")
    };

    let mut leaves = Vec::new();
    let mut checks = Vec::new();
    for &seed in seeds {
        let p = s0.point(seed)?;
        let y0 = s0.to_band(p).expect("band surface").im;
        let contracting: Vec<Complex64> = (0..samples)
            .map(|k| contracting_point(p, l0 * k as f64 / samples as f64))
            .collect();
        let y_max = 0.45 * std::f64::consts::PI;
        let isometric: Vec<Complex64> = (0..samples)
            .map(|k| isometric_point(p, -y_max + 2.0 * y_max * k as f64 / (samples - 1) as f64))
            .collect();
        for (kind, reps) in [(LeafKind::Contracting, contracting), (LeafKind::EventuallyIsometric, isometric)] {
            let annulus = match s0 {
                SurfaceModel::RoundAnnulus(_) => Some(reps.iter().map(|r| s0.annulus_coordinate(*r).expect("annulus")).collect()),
                _ => None,
            };
            leaves.push(Leaf {
                kind,
                through: p,
                reps,
                annulus,
            });
        }

        let q_c = contracting_point(p, 0.3 * l0);
        let q_i = isometric_point(p, if y0 > 0.0 { y0 - 0.5 } else { y0 + 0.5 });
        for (kind, q) in [(LeafKind::Contracting, q_c), (LeafKind::EventuallyIsometric, q_i)] {
            let d = t.distance_sequence(p, q)?;
            let (initial, last) = (d[0], *d.last().unwrap());
            let max_change = d.iter().map(|x| (x - initial).abs()).fold(0.0, f64::max);
            let passed = match kind {
                LeafKind::Contracting => last < tol.tol_zero,
                LeafKind::EventuallyIsometric => max_change <= tol.tol_const && last > tol.tol_zero,
            };
            checks.push(LeafCheck {
                kind,
                p,
                q,
                initial,
                last,
                max_change,
                passed,
            });
        }
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(Foliation {
        limit,
        leaves,
        checks,
        all_passed,
    })
}
