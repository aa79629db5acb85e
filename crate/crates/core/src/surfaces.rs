//! Model hyperbolic surfaces: the disc, round annuli and cyclic disc quotients.
//!
//! Every surface is described through a uniformizing disc, and points are
//! carried as disc representatives ("reps"). Annulus-type surfaces are also
//! described in band coordinates: the strip `|Im ζ| < π/2` with deck group
//! generated by `ζ ↦ ζ + ℓ`, related to the disc by `u = tanh(ζ/2)`. In that
//! strip the real axis is the core geodesic and the metric is `|dζ|/cos(Im ζ)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyp::{disc_density_raw, disc_distance_raw, DiscPoint, HypError, IsometryKind, MobiusDisc};

pub const MARGULIS_DEFAULT: f64 = 0.2;

/// Representatives are normalized into the fundamental domain and kept inside
/// this radius; traces abort beyond it.
pub const REP_LIMIT: f64 = 1.0 - 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error(transparent)]
    Hyp(#[from] HypError),
    #[error("generator is {0:?}; a cyclic quotient needs a hyperbolic or parabolic generator")]
    BadGenerator(IsometryKind),
    #[error("inner radius must lie in (0, 1), got {0}")]
    BadRadius(f64),
    #[error("point {0} is not on the surface")]
    OffSurface(Complex64),
    #[error("cusp-type surface: modulus and collar are undefined for parabolic quotients")]
    CuspType,
    #[error("the disc is simply connected and has no core geodesic")]
    SimplyConnected,
    #[error("translation length must be positive and finite, got {0}")]
    BadLength(f64),
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `u = tanh(ζ/2)`, evaluated as `(sinh X + i sin Y)/(cosh X + cos Y)`.
pub fn band_to_disc(zeta: Complex64) -> Complex64 {
    let den = zeta.re.cosh() + zeta.im.cos();
    c64(zeta.re.sinh() / den, zeta.im.sin() / den)
}

/// Inverse of [`band_to_disc`]; accurate for tiny real parts.
pub fn disc_to_band(u: Complex64) -> Complex64 {
    let (x, y) = (u.re, u.im);
    let q = (1.0 - x) * (1.0 - x) + y * y;
    let re = 0.5 * (4.0 * x / q).ln_1p();
    let im = (2.0 * y).atan2((1.0 - x) * (1.0 + x) - y * y);
    c64(re, im)
}

/// Distance between two band points, no deck action.
pub fn band_distance(z1: Complex64, z2: Complex64) -> f64 {
    let sx = (0.5 * (z1.re - z2.re)).sinh();
    let sy = (0.5 * (z1.im - z2.im)).sin();
    let s = ((sx * sx + sy * sy) / (z1.im.cos() * z2.im.cos())).sqrt();
    2.0 * s.asinh()
}

/// Deck-group data of an annulus-type band with core length `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub length: f64,
}

impl Band {
    /// Shift the real part into `[−ℓ/2, ℓ/2)`.
    pub fn normalize(&self, zeta: Complex64) -> Complex64 {
        let k = (zeta.re / self.length).round();
        let mut x = zeta.re - k * self.length;
        if x >= 0.5 * self.length {
            x -= self.length;
        }
        c64(x, zeta.im)
    }

    /// Smallest `|Δx + kℓ|` over integers k; the distance is monotone in it.
    fn reduced_shift(&self, dx: f64) -> f64 {
        let k = (dx / self.length).round();
        let r = dx - k * self.length;
        r.abs().min((r - self.length).abs()).min((r + self.length).abs())
    }

    pub fn distance(&self, z1: Complex64, z2: Complex64) -> f64 {
        let dx = self.reduced_shift(z1.re - z2.re);
        band_distance(c64(dx, z1.im), c64(0.0, z2.im))
    }

    pub fn injectivity_radius(&self, zeta: Complex64) -> f64 {
        ((0.5 * self.length).sinh() / zeta.im.cos()).asinh()
    }
}

/// Round annulus `e^{−h} < |z| < 1`, stored by `h = log(1/r)` so that very
/// thin inner radii stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundAnnulus {
    log_inverse_radius: f64,
}

impl RoundAnnulus {
    pub fn new(inner_radius: f64) -> Result<Self, SurfaceError> {
        if !(inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(SurfaceError::BadRadius(inner_radius));
        }
        Ok(Self {
            log_inverse_radius: -inner_radius.ln(),
        })
    }

    pub fn from_log_inverse_radius(h: f64) -> Result<Self, SurfaceError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(SurfaceError::BadRadius((-h).exp()));
        }
        Ok(Self {
            log_inverse_radius: h,
        })
    }

    pub fn log_inverse_radius(&self) -> f64 {
        self.log_inverse_radius
    }

    /// Underflows to 0 for very thin annuli; use [`Self::log_inverse_radius`].
    pub fn inner_radius(&self) -> f64 {
        (-self.log_inverse_radius).exp()
    }

    pub fn core_length(&self) -> f64 {
        2.0 * PI * PI / self.log_inverse_radius
    }

    pub fn modulus(&self) -> f64 {
        self.log_inverse_radius / (2.0 * PI)
    }

    /// `ζ = −i(π/h)(log z + h/2)`.
    pub fn to_band(&self, z: Complex64) -> Complex64 {
        let h = self.log_inverse_radius;
        let l = z.ln();
        c64(PI / h * l.im, -PI / h * (l.re + 0.5 * h))
    }

    pub fn from_band(&self, zeta: Complex64) -> Complex64 {
        let h = self.log_inverse_radius;
        Complex64::from_polar((h / PI * -zeta.im - 0.5 * h).exp(), h / PI * zeta.re)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        m < 1.0 && m.ln() > -self.log_inverse_radius
    }

    /// Curvature −1 density in annulus coordinates.
    pub fn annulus_density(&self, z: Complex64) -> f64 {
        let h = self.log_inverse_radius;
        let m = z.norm();
        (PI / h) / (m * (PI * m.ln() / -h).sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DeckGenerator {
    /// `γ = A ∘ T_ℓ ∘ A⁻¹` with `T_ℓ` the translation along the real diameter.
    Hyperbolic { conjugator: MobiusDisc, length: f64 },
    /// `γ = H⁻¹ ∘ (w ↦ w + t) ∘ H` with `H(u) = i(ξ + u)/(ξ − u)`.
    Parabolic { fixed_point: Complex64, translation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicQuotient {
    deck: DeckGenerator,
}

/// Disc automorphism sending −1 to `minus` and +1 to `plus` (both on the circle).
fn axis_conjugator(minus: Complex64, plus: Complex64) -> MobiusDisc {
    let (a, b) = (minus.arg(), plus.arg());
    let mut gap = (b - a).rem_euclid(std::f64::consts::TAU);
    let mut mid = a + 0.5 * gap;
    if gap > PI {
        gap = std::f64::consts::TAU - gap;
        mid = b + 0.5 * gap;
    }
    let theta = 0.5 * gap;
    let r0 = (0.5 * (FRAC_PI_2 - theta)).tan();
    let p0 = Complex64::from_polar(r0, mid);
    let m = MobiusDisc::moving_origin_to(p0).expect("axis point inside disc");
    let w = m.inverse().apply_raw(plus);
    m.compose(&MobiusDisc::rotation_by(w.arg()))
}

fn cayley(xi: Complex64, u: Complex64) -> Complex64 {
    Complex64::i() * (xi + u) / (xi - u)
}

impl CyclicQuotient {
    pub fn from_generator(g: MobiusDisc) -> Result<Self, SurfaceError> {
        let class = g.classify();
        match class.kind {
            IsometryKind::Hyperbolic => {
                let pts = class.fixed_points;
                let (plus, minus) = if g.derivative(pts[0]).norm() < 1.0 {
                    (pts[0], pts[1])
                } else {
                    (pts[1], pts[0])
                };
                Ok(Self {
                    deck: DeckGenerator::Hyperbolic {
                        conjugator: axis_conjugator(minus, plus),
                        length: class.translation_length.expect("hyperbolic length"),
                    },
                })
            }
            IsometryKind::Parabolic => {
                let xi = class.fixed_points[0];
                let zero = c64(0.0, 0.0);
                let t = (cayley(xi, g.apply_raw(zero)) - cayley(xi, zero)).re;
                Ok(Self {
                    deck: DeckGenerator::Parabolic {
                        fixed_point: xi,
                        translation: t,
                    },
                })
            }
            other => Err(SurfaceError::BadGenerator(other)),
        }
    }

    /// Quotient by translation of length `length` along the axis `A(−1, 1)`.
    pub fn hyperbolic(conjugator: MobiusDisc, length: f64) -> Result<Self, SurfaceError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(SurfaceError::BadLength(length));
        }
        Ok(Self {
            deck: DeckGenerator::Hyperbolic { conjugator, length },
        })
    }

    pub fn parabolic(fixed_point: Complex64, translation: f64) -> Result<Self, SurfaceError> {
        if !(translation != 0.0 && translation.is_finite()) {
            return Err(SurfaceError::BadLength(translation));
        }
        Ok(Self {
            deck: DeckGenerator::Parabolic {
                fixed_point: fixed_point / fixed_point.norm(),
                translation,
            },
        })
    }

    pub fn deck(&self) -> DeckGenerator {
        self.deck
    }

    /// `γᵏ` in closed form (no repeated composition).
    pub fn element(&self, k: i64) -> MobiusDisc {
        match self.deck {
            DeckGenerator::Hyperbolic { conjugator, length } => conjugator
                .compose(&MobiusDisc::axis_translation(k as f64 * length))
                .compose(&conjugator.inverse()),
            DeckGenerator::Parabolic {
                fixed_point,
                translation,
            } => parabolic_element(fixed_point, k as f64 * translation),
        }
    }

    pub fn generator(&self) -> MobiusDisc {
        self.element(1)
    }
}

/// `H⁻¹ ∘ (w ↦ w + t) ∘ H` as a disc automorphism.
pub fn parabolic_element(xi: Complex64, t: f64) -> MobiusDisc {
    // In the coordinate v = conj(ξ)·u the fixed point is 1 and the matrix is
    // [[1 + it/2, −it/2], [it/2, 1 − it/2]].
    let a = c64(1.0, 0.5 * t);
    let b = c64(0.0, -0.5 * t);
    let rot = MobiusDisc::new(xi, c64(0.0, 0.0)).expect("unit fixed point");
    let core = MobiusDisc::new(a / a.conj(), -b / a).expect("parabolic core");
    rot.compose(&core).compose(&rot.inverse())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceModel {
    Disc,
    RoundAnnulus(RoundAnnulus),
    CyclicQuotient(CyclicQuotient),
}

/// The sub-annulus `{inj ≤ eps}` around the core geodesic, as a symmetric band
/// `|Im ζ| ≤ half_height` in band coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarBand {
    pub empty: bool,
    pub half_height: f64,
    /// Largest distance from the core geodesic of a point in the band.
    pub max_distance_to_core: f64,
    pub modulus: f64,
    pub core_length: f64,
}

impl SurfaceModel {
    pub fn round_annulus(inner_radius: f64) -> Result<Self, SurfaceError> {
        Ok(Self::RoundAnnulus(RoundAnnulus::new(inner_radius)?))
    }

    pub fn annulus_from_log(h: f64) -> Result<Self, SurfaceError> {
        Ok(Self::RoundAnnulus(RoundAnnulus::from_log_inverse_radius(h)?))
    }

    pub fn cyclic(generator: MobiusDisc) -> Result<Self, SurfaceError> {
        Ok(Self::CyclicQuotient(CyclicQuotient::from_generator(generator)?))
    }

    /// The band structure, for annulus-type surfaces with a hyperbolic deck group.
    pub fn band(&self) -> Option<Band> {
        match self {
            Self::RoundAnnulus(a) => Some(Band {
                length: a.core_length(),
            }),
            Self::CyclicQuotient(q) => match q.deck {
                DeckGenerator::Hyperbolic { length, .. } => Some(Band { length }),
                DeckGenerator::Parabolic { .. } => None,
            },
            Self::Disc => None,
        }
    }

    fn band_conjugator(&self) -> Option<MobiusDisc> {
        match self {
            Self::CyclicQuotient(CyclicQuotient {
                deck: DeckGenerator::Hyperbolic { conjugator, .. },
            }) => Some(*conjugator),
            _ => None,
        }
    }

    /// Band coordinate of a disc representative.
    pub fn to_band(&self, rep: Complex64) -> Option<Complex64> {
        self.band()?;
        let u = match self.band_conjugator() {
            Some(a) => a.inverse().apply_raw(rep),
            None => rep,
        };
        Some(disc_to_band(u))
    }

    pub fn from_band(&self, zeta: Complex64) -> Option<Complex64> {
        self.band()?;
        let u = band_to_disc(zeta);
        Some(match self.band_conjugator() {
            Some(a) => a.apply_raw(u),
            None => u,
        })
    }

    /// Disc representative of an annulus-coordinate point of a round annulus.
    pub fn rep_from_annulus(&self, z: Complex64) -> Result<Complex64, SurfaceError> {
        match self {
            Self::RoundAnnulus(a) if a.contains(z) => {
                let b = Band {
                    length: a.core_length(),
                };
                Ok(band_to_disc(b.normalize(a.to_band(z))))
            }
            _ => Err(SurfaceError::OffSurface(z)),
        }
    }

    /// Annulus coordinate of a rep; `None` unless the surface is a round annulus.
    pub fn annulus_coordinate(&self, rep: Complex64) -> Option<Complex64> {
        match self {
            Self::RoundAnnulus(a) => Some(a.from_band(disc_to_band(rep))),
            _ => None,
        }
    }

    /// Validate a rep and move it into the fundamental domain.
    pub fn point(&self, rep: Complex64) -> Result<Complex64, SurfaceError> {
        DiscPoint::new(rep)?;
        Ok(self.normalize(rep))
    }

    pub fn normalize(&self, rep: Complex64) -> Complex64 {
        match self {
            Self::Disc => rep,
            Self::RoundAnnulus(_) | Self::CyclicQuotient(_) => {
                if let Some(band) = self.band() {
                    let z = self.to_band(rep).expect("band surface");
                    return self.from_band(band.normalize(z)).expect("band surface");
                }
                let Self::CyclicQuotient(q) = self else { unreachable!() };
                let DeckGenerator::Parabolic {
                    fixed_point,
                    translation,
                } = q.deck
                else {
                    unreachable!()
                };
                let w = cayley(fixed_point, rep);
                let k = (w.re / translation).round();
                parabolic_element(fixed_point, -k * translation).apply_raw(rep)
            }
        }
    }

    /// Density at a rep (the covering is a local isometry).
    pub fn density(&self, rep: Complex64) -> f64 {
        disc_density_raw(rep)
    }

    pub fn distance(&self, x: Complex64, y: Complex64) -> f64 {
        match self {
            Self::Disc => disc_distance_raw(x, y),
            _ => {
                if let Some(band) = self.band() {
                    let zx = self.to_band(x).expect("band surface");
                    let zy = self.to_band(y).expect("band surface");
                    return band.distance(zx, zy);
                }
                let (xi, t) = self.parabolic_data();
                let (wx, wy) = (cayley(xi, x), cayley(xi, y));
                let dx = wx.re - wy.re;
                let k = (dx / t).round();
                let best = [k - 1.0, k, k + 1.0]
                    .into_iter()
                    .map(|k| (dx - k * t).abs())
                    .fold(f64::INFINITY, f64::min);
                let num = (best * best + (wx.im - wy.im).powi(2)).sqrt();
                2.0 * (num / (2.0 * (wx.im * wy.im).sqrt())).asinh()
            }
        }
    }

    fn parabolic_data(&self) -> (Complex64, f64) {
        match self {
            Self::CyclicQuotient(CyclicQuotient {
                deck: DeckGenerator::Parabolic {
                    fixed_point,
                    translation,
                },
            }) => (*fixed_point, translation.abs()),
            _ => panic!("not a parabolic quotient"),
        }
    }

    /// Half the length of the shortest non-trivial loop through the point.
    pub fn injectivity_radius(&self, rep: Complex64) -> f64 {
        match self {
            Self::Disc => f64::INFINITY,
            _ => {
                if let Some(band) = self.band() {
                    return band.injectivity_radius(self.to_band(rep).expect("band surface"));
                }
                let (xi, t) = self.parabolic_data();
                let w = cayley(xi, rep);
                (t / (2.0 * w.im)).asinh()
            }
        }
    }

    /// The deck group element `γᵏ`, or `None` for the disc.
    pub fn deck_element(&self, k: i64) -> Option<MobiusDisc> {
        match self {
            Self::Disc => None,
            Self::RoundAnnulus(a) => Some(MobiusDisc::axis_translation(k as f64 * a.core_length())),
            Self::CyclicQuotient(q) => Some(q.element(k)),
        }
    }

    /// Translation by `x` along the core geodesic, for annulus-type surfaces.
    /// A deck element when `x` is a multiple of the core length.
    pub fn axis_shift(&self, x: f64) -> Option<MobiusDisc> {
        self.band()?;
        let t = MobiusDisc::axis_translation(x);
        Some(match self.band_conjugator() {
            Some(a) => a.compose(&t).compose(&a.inverse()),
            None => t,
        })
    }

    /// The conjugator sending the real diameter to the core geodesic.
    pub fn axis_conjugator(&self) -> Option<MobiusDisc> {
        self.band()?;
        Some(self.band_conjugator().unwrap_or_else(MobiusDisc::identity))
    }

    pub fn core_geodesic_length(&self) -> Result<f64, SurfaceError> {
        match self {
            Self::Disc => Err(SurfaceError::SimplyConnected),
            _ => self.band().map(|b| b.length).ok_or(SurfaceError::CuspType),
        }
    }

    pub fn annulus_modulus(&self) -> Result<f64, SurfaceError> {
        match self {
            Self::RoundAnnulus(a) => Ok(a.modulus()),
            _ => Ok(PI / self.core_geodesic_length()?),
        }
    }

    /// Points with injectivity radius at most `eps`.
    pub fn collar_annulus(&self, eps: f64) -> Result<CollarBand, SurfaceError> {
        let l = self.core_geodesic_length()?;
        if l >= 2.0 * eps {
            return Ok(CollarBand {
                empty: true,
                half_height: 0.0,
                max_distance_to_core: 0.0,
                modulus: 0.0,
                core_length: l,
            });
        }
        // inj = asinh(sinh(ℓ/2)/cos y) ≤ eps  ⇔  cos y ≥ sinh(ℓ/2)/sinh(eps).
        let half_height = ((0.5 * l).sinh() / eps.sinh()).acos();
        Ok(CollarBand {
            empty: false,
            half_height,
            max_distance_to_core: half_height.sin().atanh(),
            modulus: 2.0 * half_height / l,
            core_length: l,
        })
    }

    pub fn to_cyclic_quotient(&self) -> Result<SurfaceModel, SurfaceError> {
        match self {
            Self::RoundAnnulus(a) => Ok(Self::CyclicQuotient(CyclicQuotient::hyperbolic(
                MobiusDisc::identity(),
                a.core_length(),
            )?)),
            _ => Err(SurfaceError::SimplyConnected),
        }
    }
}
