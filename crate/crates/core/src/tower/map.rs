//! Map families and their action between model surfaces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hyp::MobiusDisc;
use crate::surfaces::SurfaceModel;

use super::TowerError;

/// Post-composition `z ↦ c·z` applied after a power map.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PostScale {
    #[default]
    None,
    /// On round annuli: the factor that sends the core circle onto the target
    /// core circle. Acts as `c = 1` on the disc.
    Centered,
    Factor { log_modulus: f64, arg: f64 },
}

/// A holomorphic map family. Composite parts are applied first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapElement {
    /// `z ↦ (1 − defect)·e^{i·phase}·z`; the defect is stored so that `1 − |c|`
    /// stays exact for `|c|` close to 1.
    Scaling {
        defect: f64,
        #[serde(default)]
        phase: f64,
    },
    Rotation { theta: f64 },
    /// `z ↦ z(z + a)/(1 + a z)`.
    Blaschke2 { a: f64 },
    Power {
        degree: u32,
        #[serde(default)]
        post_scale: PostScale,
    },
    Mobius { map: MobiusDisc },
    Composite { parts: Vec<MapElement> },
}

/// `c·z^d` in logarithmic form, as seen by round annuli.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Monomial {
    degree: f64,
    log_modulus: f64,
    arg: f64,
    centered: bool,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl MapElement {
    pub fn scaling(c: Complex64) -> Self {
        Self::Scaling {
            defect: 1.0 - c.norm(),
            phase: c.arg(),
        }
    }

    pub fn validate(&self) -> Result<(), TowerError> {
        match self {
            Self::Scaling { defect, phase } => {
                if !(*defect >= 0.0 && *defect <= 1.0 && phase.is_finite()) {
                    return Err(TowerError::BadMap(format!("scaling defect {defect} outside [0, 1]")));
                }
            }
            Self::Rotation { theta } if !theta.is_finite() => {
                return Err(TowerError::BadMap("rotation angle is not finite".into()));
            }
            Self::Blaschke2 { a } if !(*a > 0.0 && *a < 1.0) => {
                return Err(TowerError::BadMap(format!("blaschke2 needs a in (0, 1), got {a}")));
            }
            Self::Power { degree: 0, .. } => {
                return Err(TowerError::BadMap("power degree must be at least 1".into()));
            }
            Self::Mobius { map } => {
                MobiusDisc::new(map.rotation(), map.center()).map_err(|e| TowerError::BadMap(e.to_string()))?;
            }
            Self::Composite { parts } => {
                for p in parts {
                    p.validate()?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_automorphism(&self) -> bool {
        match self {
            Self::Scaling { defect, .. } => *defect == 0.0,
            Self::Rotation { .. } | Self::Mobius { .. } => true,
            Self::Blaschke2 { .. } => false,
            Self::Power { degree, post_scale } => {
                *degree == 1
                    && match post_scale {
                        PostScale::None | PostScale::Centered => true,
                        PostScale::Factor { log_modulus, .. } => *log_modulus == 0.0,
                    }
            }
            Self::Composite { parts } => parts.iter().all(Self::is_automorphism),
        }
    }

    /// The element as a disc automorphism, when it is one.
    pub fn as_mobius(&self) -> Option<MobiusDisc> {
        match self {
            Self::Scaling { defect, phase } if *defect == 0.0 => Some(MobiusDisc::rotation_by(*phase)),
            Self::Rotation { theta } => Some(MobiusDisc::rotation_by(*theta)),
            Self::Mobius { map } => Some(*map),
            Self::Power { degree: 1, post_scale } => match post_scale {
                PostScale::None | PostScale::Centered => Some(MobiusDisc::identity()),
                PostScale::Factor { log_modulus, arg } if *log_modulus == 0.0 => Some(MobiusDisc::rotation_by(*arg)),
                _ => None,
            },
            Self::Composite { parts } => parts
                .iter()
                .try_fold(MobiusDisc::identity(), |acc, p| Some(p.as_mobius()?.compose(&acc))),
            _ => None,
        }
    }

    /// Value and derivative on the disc.
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        match self {
            Self::Scaling { defect, phase } => {
                let c = Complex64::from_polar(1.0 - defect, *phase);
                (c * z, c)
            }
            Self::Rotation { theta } => {
                let c = Complex64::from_polar(1.0, *theta);
                (c * z, c)
            }
            Self::Blaschke2 { a } => blaschke2_eval(*a, z),
            Self::Power { degree, post_scale } => {
                let c = match post_scale {
                    PostScale::None | PostScale::Centered => one(),
                    PostScale::Factor { log_modulus, arg } => Complex64::from_polar(log_modulus.exp(), *arg),
                };
                let d = *degree as i32;
                let zd1 = z.powi(d - 1);
                (c * zd1 * z, c * d as f64 * zd1)
            }
            Self::Mobius { map } => (map.apply_raw(z), map.derivative(z)),
            Self::Composite { parts } => parts.iter().fold((z, one()), |(w, dw), p| {
                let (v, dv) = p.eval(w);
                (v, dv * dw)
            }),
        }
    }

    /// `(λ, 1 − λ)` for the map viewed as a self-map of the disc at `z`.
    pub fn disc_distortion(&self, z: Complex64) -> (f64, f64) {
        if self.is_automorphism() {
            return (1.0, 0.0);
        }
        if let Self::Scaling { defect, .. } = self {
            let m = 1.0 - defect;
            let r2 = z.norm_sqr();
            let den = 1.0 - m * m * r2;
            return (m * (1.0 - r2) / den, defect * (1.0 + m * r2) / den);
        }
        let (w, dw) = self.eval(z);
        let wn = w.norm();
        let lambda = (1.0 - z.norm_sqr()) * dw.norm() / ((1.0 - wn) * (1.0 + wn));
        (lambda, 1.0 - lambda)
    }

    fn monomial(&self) -> Result<Monomial, TowerError> {
        let m = |degree: f64, log_modulus: f64, arg: f64| Monomial {
            degree,
            log_modulus,
            arg,
            centered: false,
        };
        Ok(match self {
            Self::Scaling { defect, phase } => m(1.0, (-defect).ln_1p(), *phase),
            Self::Rotation { theta } => m(1.0, 0.0, *theta),
            Self::Power { degree, post_scale } => match post_scale {
                PostScale::None => m(*degree as f64, 0.0, 0.0),
                PostScale::Centered => Monomial {
                    centered: true,
                    ..m(*degree as f64, 0.0, 0.0)
                },
                PostScale::Factor { log_modulus, arg } => m(*degree as f64, *log_modulus, *arg),
            },
            Self::Composite { parts } => {
                let mut acc = m(1.0, 0.0, 0.0);
                for p in parts {
                    let q = p.monomial()?;
                    if q.centered {
                        return Err(TowerError::BadMap(
                            "centered post-scaling is not supported inside composites on annuli".into(),
                        ));
                    }
                    // q(acc(z)) = c_q (c_a z^{d_a})^{d_q}
                    acc = m(
                        acc.degree * q.degree,
                        q.log_modulus + q.degree * acc.log_modulus,
                        q.arg + q.degree * acc.arg,
                    );
                }
                acc
            }
            Self::Blaschke2 { .. } | Self::Mobius { .. } => {
                return Err(TowerError::BadMap(
                    "only monomial families (scaling, rotation, power) act between round annuli".into(),
                ))
            }
        })
    }
}

pub fn blaschke2_eval(a: f64, z: Complex64) -> (Complex64, Complex64) {
    let den = one() + a * z;
    let value = z * (z + a) / den;
    let deriv = (a * z * z + 2.0 * z + a) / (den * den);
    (value, deriv)
}

/// A map element bound to its source and target surfaces.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelMap {
    /// Acts directly on disc representatives.
    Disc { element: MapElement, covering: bool },
    /// Acts on band coordinates of round annuli as `ζ ↦ αζ + β`.
    Band { alpha: f64, beta: Complex64, degree: f64 },
}

impl LevelMap {
    pub fn bind(element: &MapElement, src: &SurfaceModel, dst: &SurfaceModel) -> Result<Self, TowerError> {
        element.validate()?;
        match (src, dst) {
            (SurfaceModel::RoundAnnulus(a), SurfaceModel::RoundAnnulus(b)) => {
                let mono = element.monomial()?;
                let (h, h2) = (a.log_inverse_radius(), b.log_inverse_radius());
                let alpha = (mono.degree * h) / h2;
                let im = if mono.centered {
                    0.0
                } else {
                    -std::f64::consts::PI / h2 * (mono.log_modulus - 0.5 * mono.degree * h + 0.5 * h2)
                };
                let re = std::f64::consts::PI / h2 * mono.arg;
                // h2 is computed from a rounded radius, so a degree-matched
                // covering can land a few ulps off α = 1, Im β = 0.
                let snap = |x: f64, target: f64| if (x - target).abs() <= 8.0 * f64::EPSILON { target } else { x };
                Ok(Self::Band {
                    alpha: snap(alpha, 1.0),
                    beta: Complex64::new(re, snap(im, 0.0)),
                    degree: mono.degree,
                })
            }
            (SurfaceModel::RoundAnnulus(_), _) | (_, SurfaceModel::RoundAnnulus(_)) => Err(TowerError::BadMap(
                "maps between a round annulus and another model are not supported".into(),
            )),
            (SurfaceModel::CyclicQuotient(_), SurfaceModel::Disc) => Err(TowerError::BadMap(
                "a non-constant map from a quotient to the disc cannot be deck-equivariant".into(),
            )),
            _ => Ok(Self::Disc {
                element: element.clone(),
                covering: element.is_automorphism(),
            }),
        }
    }

    pub fn is_covering(&self) -> bool {
        match self {
            Self::Disc { covering, .. } => *covering,
            Self::Band { alpha, beta, .. } => *alpha == 1.0 && beta.im == 0.0,
        }
    }

    /// Image rep, normalized into the target fundamental domain, and the
    /// complex derivative of the rep-to-rep map.
    pub fn apply(&self, src: &SurfaceModel, dst: &SurfaceModel, rep: Complex64) -> (Complex64, Complex64) {
        match self {
            Self::Disc { element, .. } => {
                let (w, dw) = element.eval(rep);
                let wn = dst.normalize(w);
                if wn == w {
                    return (w, dw);
                }
                // The normalizing deck element g satisfies g(w) = wn; its
                // derivative modulus is fixed by isometry, the phase by the
                // band derivative (or taken from a one-sided difference for
                // parabolic groups).
                let scale = (1.0 - wn.norm_sqr()) / (1.0 - w.norm_sqr());
                let phase = deck_phase(dst, w, wn);
                (wn, dw * scale * phase)
            }
            Self::Band { alpha, beta, .. } => {
                let zeta = src.to_band(rep).expect("band surface");
                let out = dst.band().expect("band surface").normalize(zeta * *alpha + *beta);
                let w = dst.from_band(out).expect("band surface");
                // du/dζ = (1 − u²)/2 on both sides.
                let d = *alpha * (one() - w * w) / (one() - rep * rep);
                (w, d)
            }
        }
    }

    /// `(λ, 1 − λ)` at a rep of the source surface.
    pub fn distortion(&self, src: &SurfaceModel, rep: Complex64) -> (f64, f64) {
        match self {
            Self::Disc { element, .. } => element.disc_distortion(rep),
            Self::Band { alpha, beta, .. } => {
                let y = src.to_band(rep).expect("band surface").im;
                let y2 = *alpha * y + beta.im;
                if *alpha == 1.0 && y2 == y {
                    return (1.0, 0.0);
                }
                let lambda = *alpha * y.cos() / y2.cos();
                (lambda, 1.0 - lambda)
            }
        }
    }
}

/// Unit-modulus phase of the derivative of the deck element sending `w` to `wn`.
fn deck_phase(dst: &SurfaceModel, w: Complex64, wn: Complex64) -> Complex64 {
    match dst {
        SurfaceModel::Disc => one(),
        _ => {
            if let (Some(zw), Some(zn)) = (dst.to_band(w), dst.to_band(wn)) {
                let shift = zn - zw;
                if let Some(g) = band_translation(dst, shift.re) {
                    let d = g.derivative(w);
                    return d / d.norm();
                }
            }
            let probe = w * (1.0 - 1e-7);
            let pn = dst.normalize(probe);
            let d = (pn - wn) / (probe - w);
            d / d.norm()
        }
    }
}

fn band_translation(dst: &SurfaceModel, s: f64) -> Option<MobiusDisc> {
    match dst {
        SurfaceModel::RoundAnnulus(_) => Some(MobiusDisc::axis_translation(s)),
        SurfaceModel::CyclicQuotient(q) => match q.deck() {
            crate::surfaces::DeckGenerator::Hyperbolic { conjugator, .. } => Some(
                conjugator
                    .compose(&MobiusDisc::axis_translation(s))
                    .compose(&conjugator.inverse()),
            ),
            _ => None,
        },
        SurfaceModel::Disc => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Central difference with one Richardson step.
    fn fd_derivative(f: impl Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> Complex64 {
        let d = |h: f64| (f(z + h) - f(z - h)) / (2.0 * h);
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    }

    fn families() -> Vec<MapElement> {
        vec![
            MapElement::Scaling { defect: 0.3, phase: 0.4 },
            MapElement::Rotation { theta: 1.1 },
            MapElement::Blaschke2 { a: 0.6 },
            MapElement::Power {
                degree: 3,
                post_scale: PostScale::Factor { log_modulus: -0.2, arg: 0.5 },
            },
            MapElement::Mobius {
                map: MobiusDisc::new(c(0.0, 1.0), c(0.3, -0.2)).unwrap(),
            },
            MapElement::Composite {
                parts: vec![
                    MapElement::Blaschke2 { a: 0.8 },
                    MapElement::Mobius {
                        map: MobiusDisc::new(c(1.0, 0.0), c(-0.4, 0.1)).unwrap(),
                    },
                    MapElement::Scaling { defect: 0.1, phase: 0.0 },
                ],
            },
        ]
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for f in families() {
            for _ in 0..20 {
                let z = Complex64::from_polar(rng.gen_range(0.0..0.85), rng.gen_range(0.0..6.28));
                let (_, d) = f.eval(z);
                let fd = fd_derivative(|w| f.eval(w).0, z, 1e-6);
                assert!((d - fd).norm() <= 1e-6 * d.norm().max(1e-3), "{f:?} at {z}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn blaschke_derivative_at_origin() {
        for &a in &[0.1, 0.6, 0.95] {
            let (v, d) = blaschke2_eval(a, c(0.0, 0.0));
            assert_eq!(v, c(0.0, 0.0));
            assert!((d - c(a, 0.0)).norm() < 1e-15);
            let (lambda, _) = MapElement::Blaschke2 { a }.disc_distortion(c(0.0, 0.0));
            assert!((lambda - a).abs() < 1e-15);
        }
    }

    #[test]
    fn schwarz_pick_on_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for f in families() {
            for _ in 0..200 {
                let z = Complex64::from_polar(rng.gen_range(0.0..0.99), rng.gen_range(0.0..6.28));
                let (lambda, defect) = f.disc_distortion(z);
                assert!(lambda <= 1.0 + 1e-12);
                assert!((lambda + defect - 1.0).abs() < 1e-12);
                if f.is_automorphism() {
                    assert_eq!(lambda, 1.0);
                }
            }
        }
    }

    #[test]
    fn scaling_defect_is_exact() {
        let f = MapElement::Scaling { defect: 1e-30, phase: 0.0 };
        let (_, defect) = f.disc_distortion(c(0.0, 0.0));
        assert_eq!(defect, 1e-30);
        let (_, defect) = f.disc_distortion(c(0.5, 0.0));
        assert!((defect / (1e-30 * 1.25 / 0.75) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_on_annuli_is_a_covering() {
        let r: f64 = (-2.0 * PI).exp();
        let src = SurfaceModel::round_annulus(r).unwrap();
        let dst = SurfaceModel::round_annulus(r * r).unwrap();
        let f = MapElement::Power { degree: 2, post_scale: PostScale::None };
        let lm = LevelMap::bind(&f, &src, &dst).unwrap();
        assert!(lm.is_covering());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (SurfaceModel::RoundAnnulus(a), SurfaceModel::RoundAnnulus(b)) = (src, dst) else {
            unreachable!()
        };
        for _ in 0..200 {
            let z = Complex64::from_polar((-rng.gen_range(0.01..6.27f64)).exp(), rng.gen_range(0.0..6.28));
            let u = src.rep_from_annulus(z).unwrap();
            let (lambda, _) = lm.distortion(&src, u);
            assert!((lambda - 1.0).abs() < 1e-9);
            // Explicit densities in annulus coordinates.
            let explicit = b.annulus_density(z * z) * 2.0 * z.norm() / a.annulus_density(z);
            assert!((explicit - 1.0).abs() < 1e-9);
            // The band action agrees with z ↦ z² read in annulus coordinates.
            let (w, _) = lm.apply(&src, &dst, u);
            let zz = dst.annulus_coordinate(w).unwrap();
            assert!((zz - z * z).norm() < 1e-9 * (z * z).norm().max(1e-3));
        }
    }

    #[test]
    fn band_derivative_matches_finite_differences() {
        let src = SurfaceModel::annulus_from_log(2.0 * PI).unwrap();
        let dst = SurfaceModel::annulus_from_log(4.0 * PI / 0.9).unwrap();
        let f = MapElement::Power { degree: 2, post_scale: PostScale::Centered };
        let lm = LevelMap::bind(&f, &src, &dst).unwrap();
        assert!(!lm.is_covering());
        for &u in &[c(0.01, 0.2), c(-0.05, -0.5), c(0.0, 0.0)] {
            let (_, d) = lm.apply(&src, &dst, u);
            let fd = fd_derivative(|v| lm.apply(&src, &dst, v).0, u, 1e-6);
            assert!((d - fd).norm() < 1e-6 * d.norm());
            let (lambda, defect) = lm.distortion(&src, u);
            let generic = (1.0 - u.norm_sqr()) * d.norm() / (1.0 - lm.apply(&src, &dst, u).0.norm_sqr());
            assert!((lambda - generic).abs() < 1e-12);
            assert!(lambda < 1.0 && defect > 0.0);
        }
        let (lambda, _) = lm.distortion(&src, c(0.0, 0.0));
        assert!((lambda - 0.9).abs() < 1e-12);
    }

    #[test]
    fn annulus_maps_reject_non_monomials() {
        let a = SurfaceModel::annulus_from_log(1.0).unwrap();
        assert!(LevelMap::bind(&MapElement::Blaschke2 { a: 0.5 }, &a, &a).is_err());
        assert!(LevelMap::bind(&MapElement::Rotation { theta: 0.1 }, &a, &SurfaceModel::Disc).is_err());
        assert!(LevelMap::bind(&MapElement::Blaschke2 { a: 1.5 }, &SurfaceModel::Disc, &SurfaceModel::Disc).is_err());
    }

    #[test]
    fn quotient_normalization_keeps_derivative_consistent() {
        let s = SurfaceModel::annulus_from_log(2.0 * PI).unwrap().to_cyclic_quotient().unwrap();
        let f = MapElement::Mobius {
            map: MobiusDisc::axis_translation(2.5),
        };
        let lm = LevelMap::bind(&f, &s, &s).unwrap();
        let u = c(0.1, 0.2);
        let (w, d) = lm.apply(&s, &s, u);
        let fd = fd_derivative(|v| lm.apply(&s, &s, v).0, u, 1e-6);
        assert!((d - fd).norm() < 1e-6 * d.norm(), "{d} vs {fd}");
        assert!(s.distance(w, f.eval(u).0) < 1e-12);
    }
}
