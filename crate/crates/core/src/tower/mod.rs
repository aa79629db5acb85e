//! Towers of holomorphic maps between model surfaces and their orbit traces.

pub mod map;
pub mod rules;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyp::MobiusDisc;
use crate::surfaces::{SurfaceError, SurfaceModel, REP_LIMIT};

pub use map::{LevelMap, MapElement, PostScale};
pub use rules::{Compression, Decay, MapRule, SurfaceRule};

pub const DEFAULT_HORIZON: usize = 64;
pub const HORIZON_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TowerError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("invalid map: {0}")]
    BadMap(String),
    #[error("invalid tower spec: {0}")]
    BadSpec(String),
    #[error("horizon {0} exceeds the cap of 4096")]
    HorizonCap(usize),
    #[error("tower invalid at level {level}: {reason}")]
    Invalid { level: usize, reason: String },
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

/// JSON-facing tower description. `base` and `pairs` are annulus coordinates
/// when level 0 is a round annulus, disc coordinates otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub surfaces: SurfaceRule,
    pub maps: MapRule,
    #[serde(default)]
    pub base: Complex64,
    #[serde(default)]
    pub pairs: Vec<[Complex64; 2]>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub levels_checked: usize,
    pub first_failure: Option<ValidationFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationFailure {
    pub level: usize,
    pub reason: String,
}

/// Orbit of one point: reps for levels `0..reps.len()`; shorter than the
/// horizon when the trace was aborted.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub reps: Vec<Complex64>,
    pub truncated: Option<ValidationFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub base: Complex64,
    /// Distortion of the map from level n to n+1 at the base image.
    pub lambda: f64,
    pub defect: f64,
    pub delta: f64,
    pub distances: Vec<f64>,
    pub core_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTrace {
    pub rows: Vec<TraceRow>,
    pub truncated: Option<ValidationFailure>,
}

/// `g_n = M_{n+1}⁻¹ ∘ lift ∘ M_n` with `M_n(0)` the base rep at level n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedLift {
    pub level: usize,
    pub derivative_modulus: f64,
    /// Argument of `g_n′(0)`; recorded, not normalized away.
    pub phase: f64,
    pub pre: MobiusDisc,
    pub post: MobiusDisc,
}

#[derive(Debug, Clone)]
pub struct Tower {
    spec: TowerSpec,
    surfaces: Vec<SurfaceModel>,
    elements: Vec<MapElement>,
    maps: Vec<Result<LevelMap, TowerError>>,
}

impl Tower {
    pub fn new(spec: TowerSpec) -> Result<Self, TowerError> {
        if spec.horizon > HORIZON_CAP {
            return Err(TowerError::HorizonCap(spec.horizon));
        }
        // Maps 0..=H so that every trace row has a distortion; surfaces 0..=H+1.
        let surfaces = spec.surfaces.generate(spec.horizon + 2)?;
        let elements: Vec<MapElement> = (0..=spec.horizon).map(|n| spec.maps.at(n)).collect();
        let maps = elements
            .iter()
            .enumerate()
            .map(|(n, e)| LevelMap::bind(e, &surfaces[n], &surfaces[n + 1]))
            .collect();
        Ok(Self {
            spec,
            surfaces,
            elements,
            maps,
        })
    }

    pub fn with_horizon(mut spec: TowerSpec, horizon: usize) -> Result<Self, TowerError> {
        spec.horizon = horizon;
        Self::new(spec)
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.spec
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn surface_at(&self, n: usize) -> &SurfaceModel {
        &self.surfaces[n]
    }

    pub fn map_at(&self, n: usize) -> &MapElement {
        &self.elements[n]
    }

    pub fn level_map(&self, n: usize) -> Result<&LevelMap, TowerError> {
        self.maps[n].as_ref().map_err(|e| TowerError::Invalid {
            level: n,
            reason: e.to_string(),
        })
    }

    /// Rep on surface 0 from spec coordinates.
    pub fn input_point(&self, z: Complex64) -> Result<Complex64, TowerError> {
        let s = &self.surfaces[0];
        Ok(match s {
            SurfaceModel::RoundAnnulus(_) => s.rep_from_annulus(z)?,
            _ => s.point(z)?,
        })
    }

    pub fn base_rep(&self) -> Result<Complex64, TowerError> {
        self.input_point(self.spec.base)
    }

    pub fn pair_reps(&self) -> Result<Vec<(Complex64, Complex64)>, TowerError> {
        self.spec
            .pairs
            .iter()
            .map(|[a, b]| Ok((self.input_point(*a)?, self.input_point(*b)?)))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        for n in 0..=self.horizon() {
            if let Err(reason) = self.check_level(n) {
                return ValidationReport {
                    valid: false,
                    levels_checked: n + 1,
                    first_failure: Some(ValidationFailure { level: n, reason }),
                };
            }
        }
        ValidationReport {
            valid: true,
            levels_checked: self.horizon() + 1,
            first_failure: None,
        }
    }

    fn check_level(&self, n: usize) -> Result<(), String> {
        let lm = self.maps[n].as_ref().map_err(|e| e.to_string())?;
        let (src, dst) = (&self.surfaces[n], &self.surfaces[n + 1]);
        match lm {
            LevelMap::Band { alpha, beta, .. } => {
                let half = std::f64::consts::FRAC_PI_2;
                if !(*alpha > 0.0) {
                    return Err(format!("band factor {alpha} is not positive"));
                }
                for edge in [half, -half] {
                    let y = alpha * edge + beta.im;
                    if y.abs() > half * (1.0 + 1e-12) {
                        return Err("image leaves the target annulus".into());
                    }
                }
            }
            LevelMap::Disc { element, .. } => {
                for k in 0..64 {
                    let z = Complex64::from_polar(1.0 - 1e-9, k as f64 * std::f64::consts::TAU / 64.0);
                    if element.eval(z).0.norm() > 1.0 + 1e-12 {
                        return Err("image leaves the unit disc".into());
                    }
                }
                for k in 0..4 {
                    let z = Complex64::from_polar(0.2 * k as f64, 0.7 * k as f64 + 0.3);
                    let (_, d) = element.eval(z);
                    let h = 1e-6;
                    let fd = |h: f64| (element.eval(z + h).0 - element.eval(z - h).0) / (2.0 * h);
                    let rich = (4.0 * fd(0.5 * h) - fd(h)) / 3.0;
                    if (rich - d).norm() > 1e-6 * d.norm().max(1e-6) {
                        return Err(format!("analytic derivative disagrees with finite differences at {z}"));
                    }
                }
                if let Some(gamma) = src.deck_element(1) {
                    for k in 0..8 {
                        let z = Complex64::from_polar(0.1 * k as f64, 1.3 * k as f64);
                        let a = element.eval(z).0;
                        let b = element.eval(gamma.apply_raw(z)).0;
                        if dst.distance(dst.normalize(a), dst.normalize(b)) > 1e-8 {
                            return Err("map is not equivariant for the source deck group".into());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn ensure_valid(&self) -> Result<(), TowerError> {
        match self.validate().first_failure {
            Some(f) => Err(TowerError::Invalid {
                level: f.level,
                reason: f.reason,
            }),
            None => Ok(()),
        }
    }

    /// Reps of the orbit of `p` for levels `0..=H`, aborting when a rep
    /// reaches the precision limit.
    pub fn orbit(&self, p: Complex64) -> Result<Orbit, TowerError> {
        self.ensure_valid()?;
        Ok(self.orbit_unchecked(p))
    }

    fn orbit_unchecked(&self, p: Complex64) -> Orbit {
        let mut reps = Vec::with_capacity(self.horizon() + 1);
        let mut z = self.surfaces[0].normalize(p);
        reps.push(z);
        for n in 0..self.horizon() {
            let lm = self.maps[n].as_ref().expect("validated");
            z = lm.apply(&self.surfaces[n], &self.surfaces[n + 1], z).0;
            if !(z.norm() <= REP_LIMIT) {
                return Orbit {
                    reps,
                    truncated: Some(ValidationFailure {
                        level: n + 1,
                        reason: format!("representative {z} reached |z| > 1 − 1e−10"),
                    }),
                };
            }
            reps.push(z);
        }
        Orbit { reps, truncated: None }
    }

    fn distortions(&self, orbit: &Orbit) -> Vec<(f64, f64)> {
        orbit
            .reps
            .iter()
            .enumerate()
            .map(|(n, z)| self.maps[n].as_ref().expect("validated").distortion(&self.surfaces[n], *z))
            .collect()
    }

    /// `λ_1, …, λ_H`: distortion of the map from level n−1 at the orbit point.
    pub fn lambda_sequence(&self, p: Complex64) -> Result<Vec<f64>, TowerError> {
        let o = self.orbit(p)?;
        let mut d = self.distortions(&o);
        d.truncate(self.horizon().min(o.reps.len()));
        Ok(d.into_iter().map(|(l, _)| l).collect())
    }

    /// `1 − λ_1, …, 1 − λ_H`, computed without cancellation where the family allows.
    pub fn defect_sequence(&self, p: Complex64) -> Result<Vec<f64>, TowerError> {
        let o = self.orbit(p)?;
        let mut d = self.distortions(&o);
        d.truncate(self.horizon().min(o.reps.len()));
        Ok(d.into_iter().map(|(_, e)| e).collect())
    }

    /// `δ_0, …, δ_H`.
    pub fn delta_sequence(&self, p: Complex64) -> Result<Vec<f64>, TowerError> {
        let o = self.orbit(p)?;
        Ok(o.reps
            .iter()
            .enumerate()
            .map(|(n, z)| self.surfaces[n].injectivity_radius(*z))
            .collect())
    }

    /// `d_{U_n}(fⁿ p, fⁿ q)` for `n = 0..=H`.
    pub fn distance_sequence(&self, p: Complex64, q: Complex64) -> Result<Vec<f64>, TowerError> {
        let (a, b) = (self.orbit(p)?, self.orbit(q)?);
        Ok(a.reps
            .iter()
            .zip(&b.reps)
            .enumerate()
            .map(|(n, (x, y))| self.surfaces[n].distance(*x, *y))
            .collect())
    }

    /// First level from which every map up to the horizon is a declared covering.
    pub fn covering_from(&self) -> Option<usize> {
        let h = self.horizon();
        let mut first = None;
        for n in (0..h).rev() {
            match &self.maps[n] {
                Ok(m) if m.is_covering() => first = Some(n),
                _ => break,
            }
        }
        first
    }

    /// Degree of the composite of the first `n` maps when all are annulus
    /// monomials: the winding number of the image of the core circle about 0.
    pub fn core_winding(&self, n: usize) -> Option<f64> {
        let mut w = 1.0;
        for k in 0..n {
            match self.maps.get(k)? {
                Ok(LevelMap::Band { degree, .. }) => w *= degree,
                _ => return None,
            }
        }
        Some(w)
    }

    pub fn trace(&self) -> Result<OrbitTrace, TowerError> {
        self.ensure_valid()?;
        let base = self.orbit_unchecked(self.base_rep()?);
        let pairs: Vec<(Orbit, Orbit)> = self
            .pair_reps()?
            .into_iter()
            .map(|(a, b)| (self.orbit_unchecked(a), self.orbit_unchecked(b)))
            .collect();
        let dist = self.distortions(&base);
        let mut rows = Vec::new();
        let mut truncated = base.truncated.clone();
        for (n, z) in base.reps.iter().enumerate() {
            let s = &self.surfaces[n];
            let mut distances = Vec::new();
            for (a, b) in &pairs {
                match (a.reps.get(n), b.reps.get(n)) {
                    (Some(x), Some(y)) => distances.push(s.distance(*x, *y)),
                    _ => {
                        truncated = truncated.or_else(|| a.truncated.clone()).or_else(|| b.truncated.clone());
                        distances.push(f64::NAN);
                    }
                }
            }
            rows.push(TraceRow {
                n,
                base: *z,
                lambda: dist[n].0,
                defect: dist[n].1,
                delta: s.injectivity_radius(*z),
                distances,
                core_length: s.core_geodesic_length().ok(),
            });
        }
        Ok(OrbitTrace { rows, truncated })
    }

    /// Self-maps of the disc fixing 0 obtained by conjugating each lift with
    /// the automorphisms sending 0 to the base orbit.
    pub fn lift_normalize(&self) -> Result<Vec<NormalizedLift>, TowerError> {
        let o = self.orbit(self.base_rep()?)?;
        let mut out = Vec::new();
        for n in 0..o.reps.len().saturating_sub(1) {
            let pre = MobiusDisc::moving_origin_to(o.reps[n]).map_err(SurfaceError::from)?;
            let post = MobiusDisc::moving_origin_to(o.reps[n + 1])
                .map_err(SurfaceError::from)?
                .inverse();
            let (_, d) = self.maps[n]
                .as_ref()
                .expect("validated")
                .apply(&self.surfaces[n], &self.surfaces[n + 1], o.reps[n]);
            let g = post.derivative(o.reps[n + 1]) * d * pre.derivative(Complex64::new(0.0, 0.0));
            out.push(NormalizedLift {
                level: n,
                derivative_modulus: g.norm(),
                phase: g.arg(),
                pre,
                post,
            });
        }
        Ok(out)
    }

    /// Evaluate the normalized lift `g_n` at `z`.
    pub fn normalized_lift_eval(&self, lift: &NormalizedLift, z: Complex64) -> Complex64 {
        let n = lift.level;
        let w = lift.pre.apply_raw(z);
        let (v, _) = self.maps[n]
            .as_ref()
            .expect("validated")
            .apply(&self.surfaces[n], &self.surfaces[n + 1], w);
        lift.post.apply_raw(v)
    }
}
