//! Inductive construction of `a_m`, `r_m`, `ε_m` and the region table `A_k^n`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::region::{preimage_component, pushforward_component, Component};
use super::{BlaschkeDeg2, BlaschkeError};

/// `(k, n)` for `A_k^n`: `k` is the level the set lives on, `n` the stage.
pub type RegionKey = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildPolicy {
    /// Boundary samples per critical disc.
    pub samples: usize,
    pub margin: f64,
    /// Refine when adjacent samples are further apart than this.
    pub max_spacing: f64,
    pub max_samples: usize,
    /// Samples of `b_m(∂D(0, r_m))` used for the clearance of `v_m`.
    pub clearance_samples: usize,
    /// Coarsest step of the dyadic grid for `a_m`.
    pub grid_step: f64,
}

impl Default for BuildPolicy {
    fn default() -> Self {
        Self {
            samples: 512,
            margin: 1e-3,
            max_spacing: 1e-2,
            max_samples: 1 << 14,
            clearance_samples: 8192,
            grid_step: 1.0 / 16.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelParams {
    pub m: usize,
    pub a: f64,
    pub r: f64,
    pub eps: f64,
    pub critical_point: f64,
    pub critical_value: f64,
    /// Distance from `v_m` to `b_m(∂D(0, r_m))`.
    pub clearance_circle: f64,
    /// Distance from `v_m` to the images `b_m(A_m^{m−1})`.
    pub clearance_images: f64,
}

impl LevelParams {
    pub fn map(&self) -> BlaschkeDeg2 {
        BlaschkeDeg2 { a: self.a }
    }
}

/// How a component was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    /// `D(v_m, ε_m)`.
    CriticalDisc { level: usize },
    /// `b_level(parent)`.
    Image { level: usize, parent: usize },
    /// A component of `b_level^{-1}(parent)`.
    Preimage { level: usize, parent: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelTowerState {
    pub policy: BuildPolicy,
    /// Samples per critical disc after refinement.
    pub samples: usize,
    pub levels: Vec<LevelParams>,
    pub components: Vec<Component>,
    pub recipes: Vec<Recipe>,
    pub table: BTreeMap<RegionKey, Vec<usize>>,
    /// Largest `|b(z) − w|` over all preimage samples.
    pub max_residual: f64,
    pub log: Vec<String>,
    /// Why the build stopped early, if it did.
    pub stopped: Option<String>,
}

impl ModelTowerState {
    /// Index of the last built level.
    pub fn built(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn map(&self, n: usize) -> BlaschkeDeg2 {
        self.levels[n].map()
    }

    pub fn region(&self, k: usize, n: usize) -> &[usize] {
        self.table.get(&(k, n)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn check_levels(&self, n: usize, h: usize) -> Result<(), BlaschkeError> {
        let built = self.built();
        for l in [n, h] {
            if l > built || self.levels.is_empty() {
                return Err(BlaschkeError::NotBuilt { level: l, built });
            }
        }
        Ok(())
    }

    /// Components of `A_n^j` for `n ≤ j ≤ h`; the stage `n − 1` set is
    /// included too, which adds nothing when `n ≤ h` and supplies the holes
    /// of the level just past the last built one.
    pub fn hole_ids(&self, n: usize, h: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (n.saturating_sub(1)..=h).flat_map(|j| self.region(n, j).iter().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Membership in `U_n` truncated at stage `h`: an over-approximation of
    /// the true `U_n` that shrinks as `h` grows.
    pub fn point_in_u(&self, n: usize, z: Complex64, h: usize) -> Result<bool, BlaschkeError> {
        self.check_levels(n, h)?;
        if z.norm() >= 1.0 {
            return Ok(false);
        }
        Ok(!(n..=h).any(|j| self.region(n, j).iter().any(|&i| self.components[i].contains(z))))
    }
}

/// Smallest value on the dyadic grid (coarsest step first) that is at least
/// `floor` and has `|c_a| > target`.
fn pick_parameter(target: f64, floor: f64, step0: f64) -> Option<f64> {
    let mut step = step0;
    while step > f64::EPSILON {
        let count = (1.0 / step).round() as u64;
        for j in 1..count {
            let a = j as f64 * step;
            if a >= floor && (BlaschkeDeg2 { a }).critical_point().abs() > target {
                return Some(a);
            }
        }
        step *= 0.5;
    }
    None
}

/// Build levels `0..=levels` with the given policy, doubling the sample count
/// until every component is resolved to `policy.max_spacing`.
pub fn build_model_tower(levels: usize, policy: BuildPolicy) -> Result<ModelTowerState, BlaschkeError> {
    let mut samples = policy.samples;
    loop {
        match build_at(levels, policy, samples)? {
            Ok(state) => return Ok(state),
            Err(spacing) => {
                if samples * 2 > policy.max_samples {
                    return Err(BlaschkeError::MarginExhausted {
                        level: 0,
                        reason: format!("sample spacing {spacing:e} persists at {samples} samples"),
                    });
                }
                samples *= 2;
            }
        }
    }
}

struct Builder {
    state: ModelTowerState,
}

impl Builder {
    fn push(&mut self, c: Component, recipe: Recipe) -> usize {
        self.state.components.push(c);
        self.state.recipes.push(recipe);
        self.state.components.len() - 1
    }
}

/// `Ok(Err(spacing))` asks for more samples.
fn build_at(levels: usize, policy: BuildPolicy, samples: usize) -> Result<Result<ModelTowerState, f64>, BlaschkeError> {
    let mut bld = Builder {
        state: ModelTowerState {
            policy,
            samples,
            levels: Vec::new(),
            components: Vec::new(),
            recipes: Vec::new(),
            table: BTreeMap::new(),
            max_residual: 0.0,
            log: Vec::new(),
            stopped: None,
        },
    };
    let mut a_prev: f64 = 0.0;
    for m in 0..=levels {
        let prev_set: Vec<usize> = if m == 0 { vec![] } else { bld.state.region(m, m - 1).to_vec() };
        let r = if m == 0 {
            0.5
        } else {
            let reach = prev_set
                .iter()
                .map(|&i| bld.state.components[i].max_modulus())
                .fold(0.0, f64::max);
            let r_prev = bld.state.levels[m - 1].r;
            (reach + policy.margin).max(0.5 * (1.0 + r_prev))
        };
        if r + 2.0 * policy.margin >= 1.0 {
            bld.state.stopped = Some(format!("level {m}: r = {r} leaves no room for the margin"));
            break;
        }
        let Some(a) = pick_parameter(r + policy.margin, a_prev, policy.grid_step) else {
            bld.state.stopped = Some(format!("level {m}: no grid parameter with |c_a| > {}", r + policy.margin));
            break;
        };
        a_prev = a;
        let b = BlaschkeDeg2::new(a)?;
        let (cp, cv) = b.critical_data();
        let v = Complex64::new(cv, 0.0);

        let circle = Component::disc(Complex64::new(0.0, 0.0), r, policy.clearance_samples);
        let clearance_circle = circle
            .samples
            .iter()
            .map(|z| (b.eval(*z) - v).norm())
            .fold(f64::INFINITY, f64::min);
        let mut images = Vec::with_capacity(prev_set.len());
        for &i in &prev_set {
            images.push(pushforward_component(&b, &bld.state.components[i], r)?);
        }
        let clearance_images = images
            .iter()
            .flat_map(|c| c.samples.iter())
            .map(|w| (w - v).norm())
            .fold(f64::INFINITY, f64::min);
        let clearance = clearance_circle.min(clearance_images);
        let eps = (0.5 * clearance).min(0.5 * (1.0 - v.norm()));
        bld.state.log.push(format!(
            "level {m}: r = {r:.12}, a = {a}, c = {cp:.12}, v = {cv:.12}, clearance to b(∂D(0,r)) = {clearance_circle:.3e}, to b(A_m^(m-1)) = {clearance_images:.3e}, eps = {eps:.3e}"
        ));
        bld.state.levels.push(LevelParams {
            m,
            a,
            r,
            eps,
            critical_point: cp,
            critical_value: cv,
            clearance_circle,
            clearance_images,
        });

        // A_{m+1}^m: the critical disc and the images of A_m^{m−1}.
        let disc = bld.push(Component::disc(v, eps, samples), Recipe::CriticalDisc { level: m });
        let mut top = vec![disc];
        for (img, &parent) in images.into_iter().zip(&prev_set) {
            top.push(bld.push(img, Recipe::Image { level: m, parent }));
        }
        bld.state.table.insert((m + 1, m), top.clone());

        // A_m^m: the old components, their second branches and the critical component.
        let mut new_ids = Vec::new();
        for (j, &w_id) in top.iter().enumerate() {
            let (parts, res) = preimage_component(&b, &bld.state.components[w_id], w_id)?;
            bld.state.max_residual = bld.state.max_residual.max(res);
            if j == 0 {
                if parts.len() != 1 {
                    return Err(BlaschkeError::MarginExhausted {
                        level: m,
                        reason: "critical disc preimage is not connected".into(),
                    });
                }
            } else if parts.len() != 2 {
                    return Err(BlaschkeError::MarginExhausted {
                        level: m,
                        reason: "image of an old component does not split into two".into(),
                    });
            }
            let old_first = (j > 0).then(|| bld.state.components[prev_set[j - 1]].samples[0]);
            for p in parts {
                if old_first.is_some_and(|z0| (p.samples[0] - z0).norm() <= 1e-9 * (1.0 + z0.norm())) {
                    continue;
                }
                new_ids.push(bld.push(p, Recipe::Preimage { level: m, parent: w_id }));
            }
        }
        let mut full: Vec<usize> = prev_set.clone();
        full.extend(&new_ids);
        bld.state.table.insert((m, m), full);

        // A_k^m for k < m: old components plus preimages of the new ones.
        let mut fresh = new_ids;
        for k in (0..m).rev() {
            let bk = bld.state.levels[k].map();
            let mut next = Vec::new();
            for &w_id in &fresh {
                let (parts, res) = preimage_component(&bk, &bld.state.components[w_id], w_id)?;
                bld.state.max_residual = bld.state.max_residual.max(res);
                for p in parts {
                    next.push(bld.push(p, Recipe::Preimage { level: k, parent: w_id }));
                }
            }
            let mut full = bld.state.region(k, m - 1).to_vec();
            full.extend(&next);
            bld.state.table.insert((k, m), full);
            fresh = next;
        }

        let spacing = bld.state.components.iter().map(|c| c.max_spacing).fold(0.0, f64::max);
        if spacing > policy.max_spacing {
            return Ok(Err(spacing));
        }
    }
    if bld.state.levels.len() <= levels && bld.state.stopped.is_none() {
        bld.state.stopped = Some("fewer levels than requested".into());
    }
    Ok(Ok(bld.state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parameter_at_level_zero() {
        let a = pick_parameter(0.501, 0.0, 1.0 / 16.0).unwrap();
        assert_eq!(a, 0.8125);
        assert!(BlaschkeDeg2 { a: 0.8 }.critical_point() + 0.5 < 1e-15);
    }

    #[test]
    fn two_levels() {
        let s = build_model_tower(2, BuildPolicy::default()).unwrap();
        assert!(s.stopped.is_none(), "{:?}", s.stopped);
        assert_eq!(s.levels[0].r, 0.5);
        assert_eq!(s.region(1, 0).len(), 1);
        assert_eq!(s.region(0, 0).len(), 1);
        assert_eq!(s.region(2, 1).len(), 2);
        assert_eq!(s.region(1, 1).len(), 3);
        assert_eq!(s.region(0, 1).len(), 5);
        assert_eq!(s.region(3, 2).len(), 3);
        assert_eq!(s.region(2, 2).len(), 5);
        assert!(s.max_residual < 1e-10);
    }
}
