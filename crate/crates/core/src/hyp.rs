//! Hyperbolic geometry of the unit disc and its conformal automorphisms.
//!
//! The metric is normalised to curvature −1, i.e. density `2/(1 − |z|²)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points with modulus above this are rejected; distance formulas lose all
/// precision closer to the circle.
pub const BOUNDARY_BAND: f64 = 1e-12;

/// Near-identity / near-parabolic tolerance used by [`MobiusDisc::classify`].
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("point {0} is not inside the open unit disc (|z| must be ≤ 1 − 1e−12)")]
    OutsideDisc(Complex64),
    #[error("rotation {0} does not have unit modulus")]
    NotUnitRotation(Complex64),
    #[error("collar width needs a positive length, got {0}")]
    NonPositiveLength(f64),
}

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct DiscPoint(Complex64);

impl DiscPoint {
    pub fn new(z: Complex64) -> Result<Self, HypError> {
        if !(z.norm() <= 1.0 - BOUNDARY_BAND) || !z.is_finite() {
            return Err(HypError::OutsideDisc(z));
        }
        Ok(Self(z))
    }

    pub fn from_re_im(re: f64, im: f64) -> Result<Self, HypError> {
        Self::new(Complex64::new(re, im))
    }

    pub fn origin() -> Self {
        Self(Complex64::new(0.0, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for DiscPoint {
    type Error = HypError;
    fn try_from(z: Complex64) -> Result<Self, Self::Error> {
        Self::new(z)
    }
}

impl From<DiscPoint> for Complex64 {
    fn from(p: DiscPoint) -> Self {
        p.0
    }
}

/// Pseudo-hyperbolic distance `|z − w| / |1 − w̄ z|`.
pub fn pseudo_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - w.conj() * z).norm();
    if num == 0.0 {
        0.0
    } else {
        (num / den).min(1.0)
    }
}

/// Hyperbolic distance on raw complex numbers (no range check).
pub fn disc_distance_raw(z: Complex64, w: Complex64) -> f64 {
    2.0 * pseudo_distance(z, w).atanh()
}

pub fn disc_distance(z: DiscPoint, w: DiscPoint) -> f64 {
    disc_distance_raw(z.0, w.0)
}

pub fn disc_density_raw(z: Complex64) -> f64 {
    2.0 / (1.0 - z.norm_sqr())
}

pub fn disc_density(z: DiscPoint) -> f64 {
    disc_density_raw(z.0)
}

/// Width of the standard collar around a closed geodesic of length `l`.
///
/// Evaluated as `2·artanh(e^{−l/2})`, which equals
/// `½·log((cosh(l/2)+1)/(cosh(l/2)−1))` without cancellation for small `l`.
pub fn collar_width(l: f64) -> Result<f64, HypError> {
    if !(l > 0.0) {
        return Err(HypError::NonPositiveLength(l));
    }
    if l > 1400.0 {
        return Ok(0.0);
    }
    Ok(2.0 * (-0.5 * l).exp().atanh())
}

/// `z ↦ rotation · (z − center) / (1 − conj(center)·z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusDisc {
    rotation: Complex64,
    center: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryKind {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    /// Present iff `kind` is hyperbolic.
    pub translation_length: Option<f64>,
    pub fixed_points: Vec<Complex64>,
    /// Set when the trace sits within tolerance of the parabolic boundary.
    pub degenerate: bool,
}

impl MobiusDisc {
    pub fn new(rotation: Complex64, center: Complex64) -> Result<Self, HypError> {
        if (rotation.norm() - 1.0).abs() > 1e-12 {
            return Err(HypError::NotUnitRotation(rotation));
        }
        DiscPoint::new(center)?;
        Ok(Self {
            rotation: rotation / rotation.norm(),
            center,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Complex64::new(1.0, 0.0),
            center: Complex64::new(0.0, 0.0),
        }
    }

    pub fn rotation_by(theta: f64) -> Self {
        Self {
            rotation: Complex64::from_polar(1.0, theta),
            center: Complex64::new(0.0, 0.0),
        }
    }

    /// The automorphism sending 0 to `p`: `z ↦ (z + p)/(1 + p̄ z)`.
    pub fn moving_origin_to(p: Complex64) -> Result<Self, HypError> {
        Self::new(Complex64::new(1.0, 0.0), -p)
    }

    /// Hyperbolic translation by signed length `s` along the real diameter,
    /// towards +1 for positive `s`.
    pub fn axis_translation(s: f64) -> Self {
        Self {
            rotation: Complex64::new(1.0, 0.0),
            center: Complex64::new(-(0.5 * s).tanh(), 0.0),
        }
    }

    pub fn rotation(&self) -> Complex64 {
        self.rotation
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// Matrix `[[a, b], [c, d]]` with the map `z ↦ (a z + b)/(c z + d)`.
    fn matrix(&self) -> [Complex64; 4] {
        let one = Complex64::new(1.0, 0.0);
        [
            self.rotation,
            -self.rotation * self.center,
            -self.center.conj(),
            one,
        ]
    }

    fn from_matrix(m: [Complex64; 4]) -> Self {
        let [p, q, _r, s] = m;
        let rotation = p / s;
        let center = -q / p;
        Self {
            rotation: rotation / rotation.norm(),
            center,
        }
    }

    pub fn apply_raw(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        self.rotation * (z - self.center) / (one - self.center.conj() * z)
    }

    pub fn apply(&self, z: DiscPoint) -> DiscPoint {
        let w = self.apply_raw(z.0);
        // Isometries keep points inside; only rounding can push |w| over the band.
        DiscPoint::new(w).unwrap_or(DiscPoint(w / w.norm() * (1.0 - BOUNDARY_BAND)))
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let den = one - self.center.conj() * z;
        self.rotation * (one - self.center.norm_sqr()) / (den * den)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusDisc) -> MobiusDisc {
        let a = self.matrix();
        let b = other.matrix();
        Self::from_matrix([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    pub fn inverse(&self) -> MobiusDisc {
        Self {
            rotation: self.rotation.conj(),
            center: -self.rotation * self.center,
        }
    }

    /// `self^k` for any integer `k`, by repeated squaring.
    pub fn power(&self, k: i64) -> MobiusDisc {
        let mut base = if k < 0 { self.inverse() } else { *self };
        let mut e = k.unsigned_abs();
        let mut acc = MobiusDisc::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Real trace of the SU(1,1) normalisation, up to sign: `2cos(θ/2)/√(1−|c|²)`.
    pub fn abs_trace(&self) -> f64 {
        let half = 0.5 * self.rotation.arg();
        (2.0 * half.cos() / (1.0 - self.center.norm_sqr()).sqrt()).abs()
    }

    /// Distance in (center, rotation) coordinates, used to measure convergence
    /// of group elements.
    pub fn coordinate_distance(&self, other: &MobiusDisc) -> f64 {
        (self.center - other.center)
            .norm()
            .max((self.rotation - other.rotation).norm())
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.center.norm() <= tol && (self.rotation - 1.0).norm() <= tol
    }

    /// Fixed points in the closed disc. Roots of `c̄ z² + (ρ − 1) z − ρ c = 0`.
    fn fixed_points(&self) -> Vec<Complex64> {
        let c = self.center;
        let rho = self.rotation;
        let one = Complex64::new(1.0, 0.0);
        if c.norm() <= 1e-300 {
            return vec![Complex64::new(0.0, 0.0)];
        }
        let qa = c.conj();
        let qb = rho - one;
        let qc = -rho * c;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let r1 = (-qb + disc) / (2.0 * qa);
        let r2 = (-qb - disc) / (2.0 * qa);
        let mut pts: Vec<Complex64> = [r1, r2]
            .into_iter()
            .filter(|z| z.norm() <= 1.0 + 1e-9)
            .collect();
        pts.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        pts
    }

    pub fn classify(&self) -> IsometryClass {
        if self.is_identity(CLASSIFY_TOL) {
            return IsometryClass {
                kind: IsometryKind::Identity,
                translation_length: None,
                fixed_points: vec![],
                degenerate: false,
            };
        }
        let tr = self.abs_trace();
        let gap = tr - 2.0;
        if gap.abs() <= CLASSIFY_TOL {
            let pts = self.fixed_points();
            // Both roots collapse to one boundary point.
            let xi = if pts.is_empty() {
                Complex64::new(1.0, 0.0)
            } else {
                let z = pts.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b) / pts.len() as f64;
                z / z.norm()
            };
            return IsometryClass {
                kind: IsometryKind::Parabolic,
                translation_length: None,
                fixed_points: vec![xi],
                degenerate: true,
            };
        }
        if gap < 0.0 {
            let pts: Vec<Complex64> = self
                .fixed_points()
                .into_iter()
                .filter(|z| z.norm() < 1.0)
                .take(1)
                .collect();
            return IsometryClass {
                kind: IsometryKind::Elliptic,
                translation_length: None,
                fixed_points: pts,
                degenerate: false,
            };
        }
        let length = 2.0 * (0.5 * tr).acosh();
        let pts: Vec<Complex64> = self.fixed_points().into_iter().map(|z| z / z.norm()).collect();
        IsometryClass {
            kind: IsometryKind::Hyperbolic,
            translation_length: Some(length),
            fixed_points: pts,
            degenerate: false,
        }
    }
}
