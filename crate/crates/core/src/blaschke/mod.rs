//! Degree-2 Blaschke products `z(z + a)/(1 + az)` and the inductive model
//! tower built from them.

mod build;
mod region;
mod source;
mod svg;
mod verify;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{build_model_tower, BuildPolicy, LevelParams, ModelTowerState, RegionKey};
pub use region::{point_in_polyline, winding_number, Component, RegionSet};
pub use source::{
    disc_isometry_bracket, translate_tower, DensityBounds, IsometryBracket, ModelSource, TranslatedLevel, TranslatedModel,
    TruncatedBracket,
};
pub use svg::{model_svg, region_json, MAX_JSON_POINTS};
pub use verify::{verify_model_invariants, CheckResult, VerificationReport, COVERING_TARGETS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlaschkeError {
    #[error("parameter a = {0} outside (0, 1)")]
    BadParameter(f64),
    #[error("region meets the non-injective zone: sample modulus {modulus} ≥ {radius}")]
    NotInjective { modulus: f64, radius: f64 },
    #[error("component {component} passes within {distance:e} of the critical value (margin {margin:e})")]
    BranchAmbiguity {
        component: usize,
        distance: f64,
        margin: f64,
    },
    #[error("margin exhausted at level {level}: {reason}")]
    MarginExhausted { level: usize, reason: String },
    #[error("level {level} not built (built levels 0..={built})")]
    NotBuilt { level: usize, built: usize },
    #[error("point is too close to a region boundary for a density bracket")]
    NearBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeDeg2 {
    a: f64,
}

impl BlaschkeDeg2 {
    pub fn new(a: f64) -> Result<Self, BlaschkeError> {
        if a > 0.0 && a < 1.0 {
            Ok(Self { a })
        } else {
            Err(BlaschkeError::BadParameter(a))
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * (z + self.a) / (1.0 + self.a * z)
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let a = self.a;
        let den = 1.0 + a * z;
        (a * z * z + 2.0 * z + a) / (den * den)
    }

    pub fn critical_point(&self) -> f64 {
        // (−1 + √(1 − a²))/a, rewritten without cancellation.
        -self.a / (1.0 + (1.0 - self.a * self.a).sqrt())
    }

    /// `(c_a, v_a)`: the critical point in `(−1, 0)` and its value.
    pub fn critical_data(&self) -> (f64, f64) {
        let c = self.critical_point();
        (c, self.eval(Complex64::new(c, 0.0)).re)
    }

    /// Both roots of `z² + a(1 − w)z − w = 0`, with multiplicity.
    pub fn preimages(&self, w: Complex64) -> [Complex64; 2] {
        let p = self.a * (1.0 - w);
        let disc = (p * p + 4.0 * w).sqrt();
        // Pick the sign that avoids cancellation, then use the product of roots.
        let s = if (p.conj() * disc).re >= 0.0 { disc } else { -disc };
        let q = -0.5 * (p + s);
        let r = if q.norm() > 0.0 { -w / q } else { -p - q };
        [self.polish(q, w), self.polish(r, w)]
    }

    /// One Newton step on `b(z) = w`, kept only if it lowers the residual.
    fn polish(&self, z: Complex64, w: Complex64) -> Complex64 {
        let d = self.deriv(z);
        if d.norm() < 1e-8 {
            return z;
        }
        let z1 = z - (self.eval(z) - w) / d;
        if (self.eval(z1) - w).norm() < (self.eval(z) - w).norm() {
            z1
        } else {
            z
        }
    }

    /// The other point with the same image: the roots sum to `−a(1 − w)`.
    pub fn partner(&self, z: Complex64) -> Complex64 {
        -self.a * (1.0 - self.eval(z)) - z
    }
}

/// `(c_a, v_a)` for the map with parameter `a`.
pub fn critical_data(b: &BlaschkeDeg2) -> (f64, f64) {
    b.critical_data()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn critical_data_at_six_tenths() {
        let b = BlaschkeDeg2::new(0.6).unwrap();
        let (cp, v) = b.critical_data();
        assert!((cp + 1.0 / 3.0).abs() < 1e-15);
        assert!((v + 1.0 / 9.0).abs() < 1e-15);
        assert!(b.deriv(c(cp, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn critical_point_formula() {
        let b = BlaschkeDeg2::new(0.9).unwrap();
        let direct = (-1.0 + (1.0f64 - 0.81).sqrt()) / 0.9;
        assert!((b.critical_point() - direct).abs() < 1e-15);
        assert!((b.critical_point() + 0.6267890062732585).abs() < 1e-15);
        assert!((BlaschkeDeg2::new(0.8).unwrap().critical_point() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_at_origin_is_a() {
        for a in [0.1, 0.5, 0.99] {
            let b = BlaschkeDeg2::new(a).unwrap();
            assert_eq!(b.eval(c(0.0, 0.0)), c(0.0, 0.0));
            assert!((b.deriv(c(0.0, 0.0)) - a).norm() < 1e-15);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let b = BlaschkeDeg2::new(0.7).unwrap();
        let z = c(0.3, -0.4);
        let h = 1e-6;
        let fd = (b.eval(z + h) - b.eval(z - h)) / (2.0 * h);
        assert!((fd - b.deriv(z)).norm() < 1e-8);
    }

    #[test]
    fn boundary_goes_to_boundary() {
        let b = BlaschkeDeg2::new(0.95).unwrap();
        for k in 0..64 {
            let z = Complex64::from_polar(1.0, k as f64 * 0.1);
            assert!((b.eval(z).norm() - 1.0).abs() < 1e-14);
            let zi = Complex64::from_polar(0.999, k as f64 * 0.1);
            assert!(b.eval(zi).norm() < 1.0);
        }
    }

    #[test]
    fn fibre_of_zero_and_critical_value() {
        let b = BlaschkeDeg2::new(0.6).unwrap();
        let mut r = b.preimages(c(0.0, 0.0));
        r.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((r[0] - c(-0.6, 0.0)).norm() < 1e-15 && r[1].norm() < 1e-15);
        let r = b.preimages(c(-1.0 / 9.0, 0.0));
        for z in r {
            assert!((z - c(-1.0 / 3.0, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn preimage_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a = rng.gen_range(0.01..0.9999);
            let b = BlaschkeDeg2::new(a).unwrap();
            let w = Complex64::from_polar(rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..6.3));
            for z in b.preimages(w) {
                assert!((b.eval(z) - w).norm() < 1e-10);
                assert!(z.norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BlaschkeDeg2::new(0.0).is_err());
        assert!(BlaschkeDeg2::new(1.0).is_err());
    }
}
