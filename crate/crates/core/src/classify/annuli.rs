//! Absorbing annuli: collar sub-annuli `{inj ≤ eps}` that each level map sends
//! into the next one.

use num_complex::Complex64;
use serde::Serialize;

use crate::surfaces::CollarBand;
use crate::tower::Tower;

use super::{infinitesimal_type, thinness, ClassifyError, InfinitesimalType, ThinnessKind, Tolerances};

pub const BOUNDARY_SAMPLES: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusRecord {
    pub level: usize,
    pub collar: CollarBand,
    /// Whether the boundary samples of this level land in the next collar;
    /// `None` for empty collars and the last level.
    pub forward_invariant: Option<bool>,
    /// Largest `|Im ζ|` of an image boundary sample, relative to the next half-height.
    pub image_height_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedEntry {
    pub point: Complex64,
    /// First level at which the orbit lies in the collar.
    pub entered_at: Option<usize>,
    /// Whether it stays inside through the last checked level.
    pub stays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorbingReport {
    pub eps: f64,
    pub first_nonempty: Option<usize>,
    pub records: Vec<AnnulusRecord>,
    pub moduli_strictly_increasing: bool,
    pub forward_invariant: bool,
    pub tracked: Vec<TrackedEntry>,
}

/// Collars for levels `0..=max_level`; forward invariance is checked with
/// [`BOUNDARY_SAMPLES`] boundary samples per nonempty level.
pub fn absorbing_annuli(
    t: &Tower,
    eps: f64,
    max_level: usize,
    tracked: &[Complex64],
    tol: &Tolerances,
) -> Result<AbsorbingReport, ClassifyError> {
    let max_level = max_level.min(t.horizon());
    for n in 0..=max_level + 1 {
        if t.surface_at(n).band().is_none() {
            return Err(ClassifyError::Precondition(format!(
                "level {n} is not an annulus-type surface"
            )));
        }
    }
    let base = t.base_rep()?;
    let inf = infinitesimal_type(t, base, tol)?;
    if inf.kind == InfinitesimalType::Contracting {
        return Err(ClassifyError::Precondition("tower is infinitesimally contracting".into()));
    }
    let thin = thinness(t, base, Some(&inf), tol)?;
    if thin.kind != ThinnessKind::EssentiallyThin {
        return Err(ClassifyError::Precondition("tower is not essentially thin".into()));
    }

    let collars: Vec<CollarBand> = (0..=max_level + 1)
        .map(|n| t.surface_at(n).collar_annulus(eps))
        .collect::<Result<_, _>>()?;
    let first_nonempty = collars.iter().take(max_level + 1).position(|c| !c.empty);

    let mut records = Vec::new();
    let mut all_invariant = true;
    for n in 0..=max_level {
        let c = collars[n];
        let (forward_invariant, ratio) = if c.empty || n == max_level {
            (None, None)
        } else {
            let next = collars[n + 1];
            let worst = image_height(t, n, &c)?;
            let ok = !next.empty && worst <= next.half_height + 1e-12;
            all_invariant &= ok;
            (Some(ok), Some(worst / next.half_height))
        };
        records.push(AnnulusRecord {
            level: n,
            collar: c,
            forward_invariant,
            image_height_ratio: ratio,
        });
    }
    let nonempty: Vec<f64> = collars[..=max_level]
        .iter()
        .filter(|c| !c.empty)
        .map(|c| c.modulus)
        .collect();
    let moduli_strictly_increasing = nonempty.windows(2).all(|w| w[1] > w[0]);

    let mut entries = Vec::new();
    for p in tracked {
        let orbit = t.orbit(*p)?;
        let inside: Vec<bool> = (0..=max_level.min(orbit.reps.len() - 1))
            .map(|n| {
                let y = t.surface_at(n).to_band(orbit.reps[n]).expect("band surface").im;
                !collars[n].empty && y.abs() <= collars[n].half_height
            })
            .collect();
        let entered_at = inside.iter().position(|b| *b);
        let stays = entered_at.is_some_and(|k| inside[k..].iter().all(|b| *b));
        entries.push(TrackedEntry {
            point: *p,
            entered_at,
            stays,
        });
    }

    Ok(AbsorbingReport {
        eps,
        first_nonempty,
        records,
        moduli_strictly_increasing,
        forward_invariant: all_invariant,
        tracked: entries,
    })
}

/// Largest `|Im ζ|` over images of the boundary samples of the level-n collar.
fn image_height(t: &Tower, n: usize, c: &CollarBand) -> Result<f64, ClassifyError> {
    let (src, dst) = (t.surface_at(n), t.surface_at(n + 1));
    let lm = t.level_map(n)?;
    let l = c.core_length;
    let per_side = BOUNDARY_SAMPLES / 2;
    let mut worst: f64 = 0.0;
    for side in [c.half_height, -c.half_height] {
        for k in 0..per_side {
            let x = -0.5 * l + l * k as f64 / per_side as f64;
            let rep = src.from_band(Complex64::new(x, side)).expect("band surface");
            let (w, _) = lm.apply(src, dst, rep);
            let y2 = dst.to_band(w).expect("band surface").im;
            worst = worst.max(y2.abs());
        }
    }
    Ok(worst)
}
