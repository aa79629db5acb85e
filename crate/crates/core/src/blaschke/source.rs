//! The model tower as a classification source, density brackets for the
//! local distortion, and the translated tower.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{ClassifyError, OrbitSource, PairKind, SampledPair};
use crate::hyp::{disc_density_raw, disc_distance_raw, MobiusDisc};

use super::build::ModelTowerState;
use super::{BlaschkeDeg2, BlaschkeError};

/// Bounds on the hyperbolic density of a truncated `U_n` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBounds {
    pub lo: f64,
    pub hi: f64,
    /// Radius of the inscribed Euclidean disc used for `hi`.
    pub inscribed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedBracket {
    pub truncation: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Interval certain to contain `ρ_{U_{n+1}}(b_n z)|b_n'(z)| / ρ_{U_n}(z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryBracket {
    pub level: usize,
    pub z: Complex64,
    pub lo: f64,
    pub hi: f64,
    /// Running intersection after each truncation, coarsest first.
    pub by_truncation: Vec<TruncatedBracket>,
}

impl IsometryBracket {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Density of `𝔻 \ {p}` at `z`.
fn punctured_density(p: Complex64, z: Complex64) -> f64 {
    let phi = (z - p) / (1.0 - p.conj() * z);
    let dphi = (1.0 - p.norm_sqr()) / (1.0 - p.conj() * z).powi(2);
    let m = phi.norm();
    dphi.norm() / (m * (1.0 / m).ln())
}

impl ModelTowerState {
    /// Density bounds for `U_n` truncated at stage `h`. The lower bound uses
    /// `U_n ⊂ 𝔻 \ {p}` for an interior point `p` of each hole; the upper bound
    /// uses the inscribed disc, capped at `D(0, r_h)` since later holes avoid it.
    pub fn density_bounds(&self, n: usize, z: Complex64, h: usize) -> Result<DensityBounds, BlaschkeError> {
        let built = self.built();
        if h > built || self.levels.is_empty() || n > built + 1 {
            return Err(BlaschkeError::NotBuilt { level: n.max(h), built });
        }
        let holes = self.hole_ids(n, h);
        let mut lo = disc_density_raw(z);
        let mut inscribed = (1.0 - z.norm()).min(self.levels[h].r - z.norm());
        for &i in &holes {
            let c = &self.components[i];
            if c.contains(z) {
                return Err(BlaschkeError::NearBoundary);
            }
            lo = lo.max(punctured_density(c.interior, z));
            inscribed = inscribed.min(c.boundary_distance(z) - c.max_spacing);
        }
        if inscribed <= 0.0 {
            return Err(BlaschkeError::NearBoundary);
        }
        Ok(DensityBounds {
            lo,
            hi: 2.0 / inscribed,
            inscribed,
        })
    }

    /// Certified bracket for the local distortion of `b_n` at `z`, intersected
    /// over truncations `n..=built`.
    pub fn local_isometry_bracket(&self, n: usize, z: Complex64) -> Result<IsometryBracket, BlaschkeError> {
        let built = self.built();
        if n > built || self.levels.is_empty() {
            return Err(BlaschkeError::NotBuilt { level: n, built });
        }
        let b = self.map(n);
        let (w, db) = (b.eval(z), b.deriv(z).norm());
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut by_truncation = Vec::new();
        for h in n..=built {
            let src = self.density_bounds(n, z, h)?;
            let dst = self.density_bounds(n + 1, w, h)?;
            lo = lo.max(dst.lo * db / src.hi);
            hi = hi.min(dst.hi * db / src.lo);
            by_truncation.push(TruncatedBracket { truncation: h, lo, hi });
        }
        Ok(IsometryBracket {
            level: n,
            z,
            lo,
            hi,
            by_truncation,
        })
    }
}

/// Control case: both densities are the disc density, so the bracket is the
/// exact distortion of an automorphism.
pub fn disc_isometry_bracket(m: &MobiusDisc, z: Complex64) -> IsometryBracket {
    let x = disc_density_raw(m.apply_raw(z)) * m.derivative(z).norm() / disc_density_raw(z);
    IsometryBracket {
        level: 0,
        z,
        lo: x,
        hi: x,
        by_truncation: vec![TruncatedBracket { truncation: 0, lo: x, hi: x }],
    }
}

/// The built tower `b_0, …, b_M : U_0 → … → U_{M+1}` as an orbit source.
///
/// Every map is a covering, so distortion defects vanish identically. Pair
/// distances are the lower bound `min d_𝔻(p, w)` over the fiber
/// `B_n^{-1}(B_n q)`, which equals the `U_0`-distance up to replacing
/// `d_{U_0}` by the smaller `d_𝔻`.
#[derive(Debug, Clone)]
pub struct ModelSource {
    state: ModelTowerState,
}

/// Radius of the disc around 0 used for sample points.
const SAMPLE_RADIUS: f64 = 0.1;

impl ModelSource {
    pub fn new(state: ModelTowerState) -> Self {
        Self { state }
    }

    pub fn state(&self) -> &ModelTowerState {
        &self.state
    }

    fn maps(&self) -> Vec<BlaschkeDeg2> {
        (0..=self.state.built()).map(|n| self.state.map(n)).collect()
    }

    fn orbit(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = vec![z];
        for b in self.maps() {
            out.push(b.eval(*out.last().unwrap()));
        }
        out
    }

    fn check_point(&self, z: Complex64) -> Result<(), ClassifyError> {
        let ok = self
            .state
            .point_in_u(0, z, self.state.built())
            .map_err(|e| ClassifyError::Precondition(e.to_string()))?;
        if ok {
            Ok(())
        } else {
            Err(ClassifyError::Precondition(format!("{z} is not in the truncated level-0 domain")))
        }
    }

    /// All `w` with `B_n(w) = B_n(q)`.
    fn fiber(&self, q: Complex64, n: usize) -> Vec<Complex64> {
        let maps = self.maps();
        let top = maps[..n].iter().fold(q, |z, b| b.eval(z));
        let mut pts = vec![top];
        for b in maps[..n].iter().rev() {
            pts = pts.iter().flat_map(|w| b.preimages(*w)).collect();
        }
        pts
    }

    /// A point whose orbit meets the partner of `B_{H−1}(z)` only at the last
    /// map. Roots of smaller modulus are followed back to level 0.
    fn late_partner(&self, z: Complex64) -> Complex64 {
        let maps = self.maps();
        let last = maps.len() - 1;
        let y = maps[..last].iter().fold(z, |w, b| b.eval(w));
        let mut w = maps[last].partner(y);
        for b in maps[..last].iter().rev() {
            let [r0, r1] = b.preimages(w);
            w = if r0.norm() <= r1.norm() { r0 } else { r1 };
        }
        w
    }

    fn in_u0(&self, z: Complex64) -> bool {
        self.state.point_in_u(0, z, self.state.built()).unwrap_or(false)
    }

    fn random_point(&self, radius: f64, rng: &mut ChaCha8Rng) -> Complex64 {
        loop {
            let z = Complex64::from_polar(radius * rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
            if self.in_u0(z) {
                return z;
            }
        }
    }
}

impl OrbitSource for ModelSource {
    fn horizon(&self) -> usize {
        self.state.levels.len()
    }

    fn base_point(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn defects(&self, p: Complex64) -> Result<Vec<f64>, ClassifyError> {
        self.check_point(p)?;
        Ok(vec![0.0; self.horizon()])
    }

    /// `2 artanh(R_n / (1 + |z_n|))` for the inscribed radius `R_n` of the
    /// truncated `U_n` at `z_n`: a lower bound for the injectivity radius.
    fn deltas(&self, p: Complex64) -> Result<Vec<f64>, ClassifyError> {
        self.check_point(p)?;
        let h = self.state.built();
        self.orbit(p)
            .iter()
            .enumerate()
            .map(|(n, z)| {
                let d = self
                    .state
                    .density_bounds(n, *z, h)
                    .map_err(|e| ClassifyError::Precondition(e.to_string()))?;
                Ok(2.0 * (d.inscribed / (1.0 + z.norm())).atanh())
            })
            .collect()
    }

    fn distances(&self, p: Complex64, q: Complex64) -> Result<Vec<f64>, ClassifyError> {
        self.check_point(p)?;
        self.check_point(q)?;
        let mut out: Vec<f64> = Vec::with_capacity(self.horizon() + 1);
        for n in 0..=self.horizon() {
            let d = self
                .fiber(q, n)
                .iter()
                .map(|w| disc_distance_raw(p, *w))
                .fold(f64::INFINITY, f64::min);
            // Fibers grow with n; the running minimum absorbs root rounding.
            out.push(out.last().map_or(d, |prev| prev.min(d)));
        }
        Ok(out)
    }

    fn covering_from(&self) -> Option<usize> {
        Some(0)
    }

    fn sample_points(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..count).map(|_| self.random_point(SAMPLE_RADIUS, rng)).collect()
    }

    /// Near pairs, late-partner pairs, then generic pairs up to `count`.
    fn sample_pairs(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<SampledPair> {
        let mut out = Vec::new();
        let structured = (count / 4).max(1);
        for _ in 0..structured {
            let p = self.random_point(0.5, rng);
            let q = p + Complex64::from_polar(1e-3, rng.gen_range(0.0..std::f64::consts::TAU));
            if self.in_u0(q) {
                out.push(SampledPair { kind: PairKind::Near, p, q });
            }
        }
        for _ in 0..structured {
            let p = self.random_point(SAMPLE_RADIUS, rng);
            let z = p + Complex64::from_polar(0.05, rng.gen_range(0.0..std::f64::consts::TAU));
            let q = self.late_partner(z);
            if self.in_u0(q) && (q - p).norm() > 1e-6 {
                out.push(SampledPair {
                    kind: PairKind::LatePartner,
                    p,
                    q,
                });
            }
        }
        while out.len() < count {
            let p = self.random_point(0.6, rng);
            let q = self.random_point(0.6, rng);
            out.push(SampledPair { kind: PairKind::Generic, p, q });
        }
        out
    }

    fn connectivity_note(&self) -> String {
        format!("infinitely connected levels (truncated at stage {})", self.state.built())
    }
}

/// One level `K_n` of the translated tower: `U_n` moved to `z + 4n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslatedLevel {
    pub n: usize,
    pub offset: f64,
    pub a: Option<f64>,
    pub r: Option<f64>,
    /// Truncated holes, translated.
    pub holes: Vec<Vec<Complex64>>,
}

/// `f_n = T_{n+1} ∘ b_n ∘ T_n^{-1}` with `T_n(z) = z + 4n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslatedModel {
    pub truncation: usize,
    pub levels: Vec<TranslatedLevel>,
}

impl TranslatedModel {
    pub fn offset(n: usize) -> f64 {
        4.0 * n as f64
    }

    /// `f_n(z)`; `None` past the last map.
    pub fn map(&self, n: usize, z: Complex64) -> Option<Complex64> {
        let a = self.levels.get(n)?.a?;
        let b = BlaschkeDeg2 { a };
        Some(b.eval(z - Self::offset(n)) + Self::offset(n + 1))
    }

    /// Whether `z` lies in the truncated `K_n`.
    pub fn contains(&self, n: usize, z: Complex64) -> bool {
        let Some(l) = self.levels.get(n) else { return false };
        let w = z - l.offset;
        w.norm() < 1.0 && !l.holes.iter().any(|h| super::region::point_in_polyline(h, z))
    }
}

pub fn translate_tower(s: &ModelTowerState) -> TranslatedModel {
    let h = s.built();
    let levels = (0..=s.levels.len())
        .map(|n| {
            let offset = TranslatedModel::offset(n);
            let params = s.levels.get(n);
            TranslatedLevel {
                n,
                offset,
                a: params.map(|l| l.a),
                r: params.map(|l| l.r),
                holes: s
                    .hole_ids(n, h)
                    .iter()
                    .map(|&i| s.components[i].samples.iter().map(|z| z + offset).collect())
                    .collect(),
            }
        })
        .collect();
    TranslatedModel { truncation: h, levels }
}
