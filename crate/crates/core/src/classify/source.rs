use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::surfaces::SurfaceModel;
use crate::tower::Tower;

use super::ClassifyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Same distance from the core geodesic (same circle on a round annulus).
    SameCircle,
    /// Same position along the core (same radial ray on a round annulus).
    SameRay,
    Generic,
    /// Far apart relative to the surface.
    DiameterScale,
    /// Nearby points.
    Near,
    /// A point and a point whose orbit meets a preimage partner late.
    LatePartner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledPair {
    pub kind: PairKind,
    pub p: Complex64,
    pub q: Complex64,
}

/// Anything that can produce the per-level sequences used by the classifiers.
/// Points are reps on the level-0 surface.
pub trait OrbitSource {
    fn horizon(&self) -> usize;
    fn base_point(&self) -> Complex64;
    /// `1 − λ_1, …, 1 − λ_H`.
    fn defects(&self, p: Complex64) -> Result<Vec<f64>, ClassifyError>;
    /// `δ_0, …, δ_H`.
    fn deltas(&self, p: Complex64) -> Result<Vec<f64>, ClassifyError>;
    /// `d_0, …, d_H`.
    fn distances(&self, p: Complex64, q: Complex64) -> Result<Vec<f64>, ClassifyError>;
    /// First level from which every map is an unbranched covering.
    fn covering_from(&self) -> Option<usize>;
    fn sample_points(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64>;
    fn sample_pairs(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<SampledPair>;
    fn connectivity_note(&self) -> String;
    /// Measured direction of the modulus of the level surfaces, if defined.
    fn modulus_trend(&self) -> Option<String> {
        None
    }
}

fn band_point(s: &SurfaceModel, x: f64, y: f64) -> Complex64 {
    s.from_band(Complex64::new(x, y)).expect("band surface")
}

impl OrbitSource for Tower {
    fn horizon(&self) -> usize {
        Tower::horizon(self)
    }

    fn base_point(&self) -> Complex64 {
        self.base_rep().unwrap_or_default()
    }

    fn defects(&self, p: Complex64) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.defect_sequence(p)?)
    }

    fn deltas(&self, p: Complex64) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.delta_sequence(p)?)
    }

    fn distances(&self, p: Complex64, q: Complex64) -> Result<Vec<f64>, ClassifyError> {
        Ok(self.distance_sequence(p, q)?)
    }

    fn covering_from(&self) -> Option<usize> {
        Tower::covering_from(self)
    }

    fn sample_points(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let s = self.surface_at(0);
        (0..count)
            .map(|_| match s.band() {
                Some(b) => band_point(
                    s,
                    rng.gen_range(-0.5..0.5) * b.length,
                    rng.gen_range(-1.2..1.2),
                ),
                None => Complex64::from_polar(rng.gen_range(0.0..0.8), rng.gen_range(0.0..std::f64::consts::TAU)),
            })
            .collect()
    }

    /// Structured pairs first (same circle, same ray, far apart), then generic
    /// random pairs up to `count`.
    fn sample_pairs(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<SampledPair> {
        let s = self.surface_at(0);
        let mut out = Vec::new();
        let pair = |kind, p, q| SampledPair { kind, p, q };
        match s.band() {
            Some(b) => {
                let l = b.length;
                out.push(pair(PairKind::SameCircle, band_point(s, 0.0, 0.0), band_point(s, l / 6.0, 0.0)));
                out.push(pair(PairKind::SameCircle, band_point(s, -0.2 * l, 0.7), band_point(s, 0.15 * l, 0.7)));
                out.push(pair(PairKind::SameRay, band_point(s, 0.1 * l, -0.4), band_point(s, 0.1 * l, 0.9)));
                out.push(pair(PairKind::SameRay, band_point(s, -0.3 * l, 0.0), band_point(s, -0.3 * l, 0.5)));
                out.push(pair(PairKind::DiameterScale, band_point(s, 0.0, 1.3), band_point(s, 0.5 * l - 1e-3 * l, -1.3)));
                out.push(pair(PairKind::Generic, band_point(s, 0.0, 0.3), band_point(s, 0.25 * l, -0.6)));
                while out.len() < count {
                    let p = band_point(s, rng.gen_range(-0.5..0.5) * l, rng.gen_range(-1.2..1.2));
                    let q = band_point(s, rng.gen_range(-0.5..0.5) * l, rng.gen_range(-1.2..1.2));
                    out.push(pair(PairKind::Generic, p, q));
                }
            }
            None => {
                out.push(pair(PairKind::DiameterScale, Complex64::new(0.9, 0.0), Complex64::new(-0.9, 0.0)));
                out.push(pair(PairKind::DiameterScale, Complex64::new(0.0, 0.85), Complex64::new(0.1, -0.85)));
                out.push(pair(PairKind::Near, Complex64::new(0.1, 0.1), Complex64::new(0.12, 0.09)));
                while out.len() < count {
                    let mut pt = || Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..std::f64::consts::TAU));
                    let (p, q) = (pt(), pt());
                    out.push(pair(PairKind::Generic, p, q));
                }
            }
        }
        out.truncate(count.max(1));
        out
    }

    fn connectivity_note(&self) -> String {
        match self.surface_at(0) {
            SurfaceModel::Disc => "simply connected levels".into(),
            _ => "doubly connected levels (cyclic deck groups)".into(),
        }
    }

    fn modulus_trend(&self) -> Option<String> {
        let h = Tower::horizon(self);
        let first = self.surface_at(0).annulus_modulus().ok()?;
        let last = self.surface_at(h).annulus_modulus().ok()?;
        let dir = if last > first {
            "increases"
        } else if last < first {
            "decreases"
        } else {
            "is constant"
        };
        Some(format!(
            "measured modulus of the level annuli {dir}: Mod U_0 = {first:.6e}, Mod U_{h} = {last:.6e} (the stated limit Mod U_n → 0 is not asserted)"
        ))
    }
}
