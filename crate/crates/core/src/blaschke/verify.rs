//! Sample-resolution certificates for a built model tower.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::build::ModelTowerState;
use super::region::Component;

pub const COVERING_TARGETS: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Smallest accepted sampled gap between components of one region set.
pub const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub level: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub samples: usize,
    pub built: usize,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
    /// Membership and covering checks use `U_n` truncated at the last stage.
    pub truncation: String,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn named(&self, prefix: &str) -> impl Iterator<Item = &CheckResult> {
        let prefix = prefix.to_string();
        self.checks.iter().filter(move |c| c.name.starts_with(&prefix))
    }
}

struct Report {
    checks: Vec<CheckResult>,
}

impl Report {
    fn add(&mut self, name: &str, level: Option<usize>, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.into(),
            level,
            passed,
            detail,
        });
    }
}

/// Exact-ish lookup of boundary samples, for containment of mapped samples.
struct SampleIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<Complex64>>,
}

impl SampleIndex {
    fn new<'a>(comps: impl Iterator<Item = &'a Component>) -> Self {
        let mut idx = Self {
            cell: 1e-7,
            cells: HashMap::new(),
        };
        for c in comps {
            for z in &c.samples {
                idx.cells.entry(idx.key(*z)).or_default().push(*z);
            }
        }
        idx
    }

    fn key(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64)
    }

    fn nearest(&self, z: Complex64) -> f64 {
        let (x, y) = self.key(z);
        let mut best = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(x + dx, y + dy)) {
                    for w in v {
                        best = best.min((w - z).norm());
                    }
                }
            }
        }
        best
    }
}

fn comps<'a>(s: &'a ModelTowerState, ids: &'a [usize]) -> impl Iterator<Item = &'a Component> + 'a {
    ids.iter().map(move |&i| &s.components[i])
}

/// Check invariants (i)–(iv), region geometry, covering degree and residuals.
pub fn verify_model_invariants(s: &ModelTowerState) -> VerificationReport {
    let mut rep = Report { checks: Vec::new() };
    let built = s.built();
    let margin = s.policy.margin;

    // Parameters.
    rep.add("r0_is_half", Some(0), s.levels.first().is_some_and(|l| l.r == 0.5), format!("r_0 = {:?}", s.levels.first().map(|l| l.r)));
    for w in s.levels.windows(2) {
        rep.add(
            "r_increasing",
            Some(w[1].m),
            w[1].r > w[0].r && w[1].r < 1.0,
            format!("r = {} → {}", w[0].r, w[1].r),
        );
        rep.add("a_non_decreasing", Some(w[1].m), w[1].a >= w[0].a, format!("a = {} → {}", w[0].a, w[1].a));
    }
    for l in &s.levels {
        let gap = l.critical_point.abs() - l.r;
        rep.add("critical_margin", Some(l.m), gap >= margin, format!("|c| − r = {gap:.3e}"));
    }

    // (i) injectivity on D(0, r_m): the partner preimage of every grid point
    // lies outside the disc, and the image of the circle winds once around
    // interior targets.
    for l in &s.levels {
        let b = l.map();
        let mut worst = f64::INFINITY;
        for i in 0..=48 {
            let rad = l.r * i as f64 / 48.0;
            for j in 0..96 {
                let z = Complex64::from_polar(rad, std::f64::consts::TAU * j as f64 / 96.0);
                worst = worst.min(b.partner(z).norm() - l.r);
            }
        }
        let image: Vec<Complex64> = Component::disc(Complex64::new(0.0, 0.0), l.r, 2048)
            .samples
            .iter()
            .map(|z| b.eval(*z))
            .collect();
        let mut wind_ok = true;
        for i in 1..8 {
            for j in 0..8 {
                let z = Complex64::from_polar(l.r * i as f64 / 8.5, std::f64::consts::TAU * j as f64 / 8.0);
                wind_ok &= super::region::winding_number(&image, b.eval(z)) == 1;
            }
        }
        rep.add(
            "i_injective",
            Some(l.m),
            worst > 0.0 && wind_ok,
            format!("min |partner| − r = {worst:.3e}; argument-principle count 1: {wind_ok}"),
        );
    }

    // (ii) 0 outside every A_k^n, c_k inside A_k^n for k ≤ n.
    for (&(k, n), ids) in &s.table {
        let zero_out = !comps(s, ids).any(|c| c.contains(Complex64::new(0.0, 0.0)));
        rep.add("ii_zero_outside", Some(n), zero_out, format!("A_{k}^{n}"));
        if k <= n {
            let ck = Complex64::new(s.levels[k].critical_point, 0.0);
            let inside = comps(s, ids).any(|c| c.contains(ck));
            rep.add("ii_critical_inside", Some(n), inside, format!("c_{k} ∈ A_{k}^{n}"));
        }
    }

    // (iii) b_k^{-1}(A_{k+1}^n) = A_k^n on samples, and component bookkeeping.
    for n in 0..=built {
        for k in 0..=n {
            let b = s.map(k);
            let (lower, upper) = (s.region(k, n), s.region(k + 1, n));
            let up_idx = SampleIndex::new(comps(s, upper));
            let low_idx = SampleIndex::new(comps(s, lower));
            let mut fwd: f64 = 0.0;
            for c in comps(s, lower) {
                for z in &c.samples {
                    fwd = fwd.max(up_idx.nearest(b.eval(*z)));
                }
            }
            let mut bwd: f64 = 0.0;
            for c in comps(s, upper) {
                for w in &c.samples {
                    for z in b.preimages(*w) {
                        bwd = bwd.max(low_idx.nearest(z));
                    }
                }
            }
            let v = Complex64::new(s.levels[k].critical_value, 0.0);
            let around_v = comps(s, upper).filter(|c| c.contains(v)).count();
            let expected = 2 * upper.len() - around_v;
            rep.add(
                "iii_preimage",
                Some(n),
                fwd < RESIDUAL_TOL && bwd < RESIDUAL_TOL && lower.len() == expected,
                format!(
                    "A_{k}^{n}: forward {fwd:.2e}, backward {bwd:.2e}, components {} (expected {expected})",
                    lower.len()
                ),
            );
        }
    }

    // (iv) old components persist; new ones avoid D(0, r_{n−1}).
    for n in 1..=built {
        for k in 0..=n {
            let old = s.region(k, n - 1);
            let new = s.region(k, n);
            let persists = old.iter().all(|i| new.contains(i));
            let r_prev = s.levels[n - 1].r;
            let fresh: Vec<usize> = new.iter().copied().filter(|i| !old.contains(i)).collect();
            let min_mod = comps(s, &fresh).map(Component::min_modulus).fold(f64::INFINITY, f64::min);
            rep.add(
                "iv_new_near_boundary",
                Some(n),
                persists && min_mod > r_prev,
                format!("A_{k}^{n}: {} new components, min modulus {min_mod:.6} vs r_{} = {r_prev:.6}", fresh.len(), n - 1),
            );
        }
    }

    // Region geometry on the final sets.
    for k in 0..=built + 1 {
        let ids = s.region(k, built);
        let mut geometry_ok = true;
        let mut detail = String::new();
        for &i in ids {
            let c = &s.components[i];
            if !(c.is_closed() && c.is_simple() && c.signed_area2() > 0.0) {
                geometry_ok = false;
                detail = format!("component {i} is not a positively oriented simple closed polyline");
            }
        }
        let mut min_gap = f64::INFINITY;
        for (x, &i) in ids.iter().enumerate() {
            for &j in &ids[x + 1..] {
                match s.components[i].separation(&s.components[j], GAP_TOL) {
                    Ok(g) => min_gap = min_gap.min(g),
                    Err(e) => {
                        geometry_ok = false;
                        detail = format!("components {i} and {j}: {e}");
                    }
                }
            }
        }
        geometry_ok &= min_gap > GAP_TOL;
        if detail.is_empty() {
            detail = format!("A_{k}^{built}: {} components, min sampled gap {min_gap:.3e}", ids.len());
        }
        rep.add("region_geometry", Some(k), geometry_ok, detail);
    }

    // Covering degree: targets in truncated U_{n+1} have two preimages in truncated U_n.
    let mut rng = ChaCha8Rng::seed_from_u64(0xb1a5);
    for n in 0..=built {
        let b = s.map(n);
        let up = s.hole_ids(n + 1, built);
        let low = s.hole_ids(n, built);
        let outside = |ids: &[usize], z: Complex64| {
            z.norm() < 1.0 && !ids.iter().any(|&i| s.components[i].contains(z))
        };
        let clear = |ids: &[usize], z: Complex64| {
            ids.iter().all(|&i| {
                let c = &s.components[i];
                !c.contains(z) && c.boundary_distance(z) > 2.0 * c.max_spacing
            })
        };
        let mut degrees = Vec::with_capacity(COVERING_TARGETS);
        while degrees.len() < COVERING_TARGETS {
            let w = Complex64::from_polar(rng.gen_range(0.0f64..1.0).sqrt() * (1.0 - 1e-9), rng.gen_range(0.0..std::f64::consts::TAU));
            if !clear(&up, w) {
                continue;
            }
            let count = b.preimages(w).iter().filter(|z| outside(&low, **z)).count();
            degrees.push(count);
        }
        let bad = degrees.iter().filter(|d| **d != 2).count();
        rep.add(
            "covering_degree",
            Some(n),
            bad == 0,
            format!("{} targets, {bad} without exactly two preimages", degrees.len()),
        );
    }

    rep.add(
        "quadratic_residual",
        None,
        s.max_residual < RESIDUAL_TOL,
        format!("max |b(z) − w| = {:.3e}", s.max_residual),
    );

    let all_passed = rep.checks.iter().all(|c| c.passed);
    VerificationReport {
        samples: s.samples,
        built,
        checks: rep.checks,
        all_passed,
        truncation: format!("membership is a truncated over-approximation: U_n excludes A_n^k for n ≤ k ≤ {built} only"),
    }
}
