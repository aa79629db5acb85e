//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hypdyn::blaschke::{build_model_tower, verify_model_invariants, BuildPolicy, ModelSource, COVERING_TARGETS};
use hypdyn::classify::annuli::absorbing_annuli;
use hypdyn::classify::foliation::{foliation, LeafKind};
use hypdyn::classify::limit::{geometric_limit, LimitKind};
use hypdyn::classify::{
    infinitesimal_type, main_type, InfinitesimalType, OrbitSource, PairLabel, ThinnessKind, Tolerances,
    DEFAULT_PAIR_SAMPLES, DEFAULT_SEED,
};
use hypdyn::cli::TowerFile;
use hypdyn::hyp::{collar_width, disc_density_raw, disc_distance_raw, MobiusDisc};
use hypdyn::surfaces::{RoundAnnulus, SurfaceModel};
use hypdyn::tower::{LevelMap, MapElement, PostScale, Tower, TowerSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{load, towers_dir};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("runtime {t:.2?} exceeds {limit:?}"))
}

fn disc_point(rng: &mut ChaCha8Rng, max: f64) -> Complex64 {
    Complex64::from_polar(max * rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
}

fn exact_formulas() -> Outcome {
    let start = Instant::now();
    let d = disc_distance_raw(c(0.0, 0.0), c(0.5, 0.0));
    ensure((d - 3f64.ln()).abs() < 1e-12, || format!("d(0, 0.5) = {d}"))?;
    let l = 2.0 * 2f64.acosh();
    let w = collar_width(l).map_err(|e| e.to_string())?;
    ensure((w - 0.5 * 3f64.ln()).abs() < 1e-12, || format!("collar width {w}"))?;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let r = 1e-4f64.powf(1.0 - k as f64 / 20.0) * 0.95;
        let a = RoundAnnulus::new(r).map_err(|e| e.to_string())?;
        worst = worst.max((a.modulus() * a.core_length() - PI).abs());
    }
    ensure(worst < 1e-12, || format!("max |Mod·ℓ − π| = {worst:e}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("Mod·ℓ − π ≤ {worst:.1e} on 20 annuli"))
}

fn random_element(rng: &mut ChaCha8Rng, depth: u32) -> MapElement {
    match rng.gen_range(0..if depth == 0 { 6 } else { 5 }) {
        0 => MapElement::Scaling {
            defect: rng.gen_range(0.0..1.0),
            phase: rng.gen_range(-PI..PI),
        },
        1 => MapElement::Rotation {
            theta: rng.gen_range(-PI..PI),
        },
        2 => MapElement::Blaschke2 { a: rng.gen_range(0.01..0.99) },
        3 => MapElement::Power {
            degree: rng.gen_range(1..5),
            post_scale: PostScale::None,
        },
        4 => MapElement::Mobius {
            map: MobiusDisc::new(Complex64::from_polar(1.0, rng.gen_range(-PI..PI)), disc_point(rng, 0.9)).unwrap(),
        },
        _ => MapElement::Composite {
            parts: (0..rng.gen_range(2..4)).map(|_| random_element(rng, depth + 1)).collect(),
        },
    }
}

fn schwarz_pick() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_lambda: f64 = 0.0;
    let mut max_cover: f64 = 0.0;
    let mut coverings = 0;
    for _ in 0..1000 {
        let m = random_element(&mut rng, 0);
        let z = disc_point(&mut rng, 0.95);
        let (lambda, _) = m.disc_distortion(z);
        max_lambda = max_lambda.max(lambda);
        if let Some(mob) = m.as_mobius() {
            // Automorphisms: recompute from the densities rather than trusting the flag.
            let l = disc_density_raw(mob.apply_raw(z)) * mob.derivative(z).norm() / disc_density_raw(z);
            max_cover = max_cover.max((l - 1.0).abs()).max((lambda - 1.0).abs());
            coverings += 1;
        }
    }
    // Power maps between matching round annuli are declared coverings.
    for _ in 0..200 {
        let d = rng.gen_range(1..5u32);
        let r: f64 = rng.gen_range(0.01..0.9);
        let (src, dst) = (
            SurfaceModel::round_annulus(r).unwrap(),
            SurfaceModel::round_annulus(r.powi(d as i32)).unwrap(),
        );
        let element = MapElement::Power {
            degree: d,
            post_scale: PostScale::None,
        };
        let lm = LevelMap::bind(&element, &src, &dst).map_err(|e| e.to_string())?;
        ensure(lm.is_covering(), || format!("power {d} on A({r}) not declared a covering"))?;
        let z = Complex64::from_polar(r.powf(rng.gen_range(0.05..0.95)), rng.gen_range(-PI..PI));
        let p = src.rep_from_annulus(z).unwrap();
        // Densities in annulus coordinates; reps crowd the unit circle for long bands.
        let (a, b) = (RoundAnnulus::new(r).unwrap(), RoundAnnulus::new(r.powi(d as i32)).unwrap());
        let l = b.annulus_density(z.powu(d)) * d as f64 * z.norm().powi(d as i32 - 1) / a.annulus_density(z);
        max_cover = max_cover.max((l - 1.0).abs()).max((lm.distortion(&src, p).0 - 1.0).abs());
        coverings += 1;
    }
    ensure(max_lambda <= 1.0 + 1e-12, || format!("λ = {max_lambda}"))?;
    ensure(max_cover < 1e-10, || format!("covering |λ − 1| = {max_cover:e}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("max λ = {max_lambda:.12}; {coverings} coverings within {max_cover:.1e}"))
}

fn distortion_lipschitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = MapElement::Blaschke2 { a: rng.gen_range(0.01..0.99) };
        let (z, w) = (disc_point(&mut rng, 0.9), disc_point(&mut rng, 0.9));
        let d = disc_distance_raw(z, w);
        let (dz, dw) = (m.disc_distortion(z).1, m.disc_distortion(w).1);
        // Ratio of each side to its bound; ≤ 1 when the bound holds.
        worst = worst.max((-2.0 * d).exp() * dw / dz).max(dz / ((2.0 * d).exp() * dw));
    }
    ensure(worst <= 1.0 + 1e-9, || format!("bound exceeded by factor {worst}"))?;
    Ok(format!("largest side/bound ratio {worst:.6}"))
}

fn random_spec(rng: &mut ChaCha8Rng) -> TowerSpec {
    let decay = if rng.gen_bool(0.5) {
        serde_json::json!({ "kind": "geometric", "ratio": rng.gen_range(0.1..0.8) })
    } else {
        serde_json::json!({ "kind": "power", "exponent": rng.gen_range(1.5..3.0) })
    };
    let v = match rng.gen_range(0..4) {
        0 => serde_json::json!({
            "surfaces": { "family": "disc" },
            "maps": { "rule": "scaling_sequence", "coefficient": rng.gen_range(0.1..1.0), "decay": decay },
        }),
        1 => serde_json::json!({
            "surfaces": { "family": "disc" },
            "maps": { "rule": "fixed", "map": { "family": "scaling", "defect": rng.gen_range(0.05..0.9) } },
        }),
        2 => serde_json::json!({
            "surfaces": { "family": "disc" },
            "maps": {
                "rule": "switch",
                "before": { "rule": "scaling_sequence", "coefficient": rng.gen_range(0.1..1.0), "decay": decay },
                "after": { "rule": "fixed", "map": { "family": "rotation", "theta": rng.gen_range(-3.0..3.0) } },
                "at": rng.gen_range(1..20),
            },
        }),
        _ => serde_json::json!({
            "surfaces": {
                "family": "round_annulus",
                "inner_radius": rng.gen_range(0.001..0.1),
                "degree": 2,
                "compression": { "coefficient": rng.gen_range(0.0..0.3), "decay": decay },
            },
            "maps": { "rule": "fixed", "map": { "family": "power", "degree": 2, "post_scale": { "mode": "centered" } } },
        }),
    };
    serde_json::from_value(v).unwrap()
}

fn point_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen = BTreeSet::new();
    for i in 0..20 {
        let t = Tower::new(random_spec(&mut rng)).map_err(|e| e.to_string())?;
        let kinds: Vec<InfinitesimalType> = t
            .sample_points(5, &mut rng)
            .into_iter()
            .map(|p| infinitesimal_type(&t, p, &tol()).map(|v| v.kind))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("tower {i}: {e}"))?;
        ensure(kinds.windows(2).all(|w| w[0] == w[1]), || format!("tower {i}: {kinds:?}"))?;
        seen.insert(format!("{:?}", kinds[0]));
    }
    Ok(format!("20 towers × 5 points agree; verdicts seen {seen:?}"))
}

fn trichotomy() -> Outcome {
    let start = Instant::now();
    let t = load("scaling_half");
    let v = infinitesimal_type(&t, t.base_rep().unwrap(), &tol()).map_err(|e| e.to_string())?;
    ensure(v.kind == InfinitesimalType::Contracting, || format!("scaling(½): {:?}", v.kind))?;
    let t = load("scaling_geometric");
    let v = infinitesimal_type(&t, t.base_rep().unwrap(), &tol()).map_err(|e| e.to_string())?;
    ensure(v.kind == InfinitesimalType::SemiContracting, || format!("scaling(1 − 4^−n): {:?}", v.kind))?;
    ensure((v.partial_sum - 1.0 / 3.0).abs() < 1e-9, || format!("Σ(1 − λ) = {}", v.partial_sum))?;
    let sum = v.partial_sum;
    let t = load("rotation_after_n");
    let v = infinitesimal_type(&t, t.base_rep().unwrap(), &tol()).map_err(|e| e.to_string())?;
    ensure(v.kind == InfinitesimalType::EventuallyIsometric && v.exact, || {
        format!("rotation after N: {:?}, exact {}", v.kind, v.exact)
    })?;
    ensure(t.horizon() == 64, || "horizon is not 64".into())?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("Σ(1 − λ) = {sum:.12}; rotation tail exact from level {:?}", v.covering_from))
}

fn thin_trimodal() -> Outcome {
    let start = Instant::now();
    let t = load("power_annulus");
    let deltas = t.delta_sequence(t.base_rep().unwrap()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for n in 0..20 {
        worst = worst.max((deltas[n + 1] / deltas[n] - 0.5).abs() / 0.5);
    }
    ensure(worst < 1e-9, || format!("δ halving error {worst:e}"))?;
    let v = main_type(&t, DEFAULT_PAIR_SAMPLES, DEFAULT_SEED, &tol()).map_err(|e| e.to_string())?;
    ensure(v.row == Some(6), || format!("row {:?}", v.row))?;
    let all: BTreeSet<PairLabel> =
        [PairLabel::ToZero, PairLabel::PositiveNotAttained, PairLabel::EventuallyConstant].into();
    ensure(v.modality.labels == all, || format!("labels {:?}", v.modality.labels))?;
    let s0 = t.surface_at(0);
    let seeds: Vec<Complex64> = [(0.0, 0.0), (0.4, 0.6), (-1.0, -0.9)]
        .iter()
        .map(|&(x, y)| s0.from_band(c(x, y)).unwrap())
        .collect();
    let f = foliation(&t, &seeds, 16, &tol()).map_err(|e| e.to_string())?;
    for check in &f.checks {
        match check.kind {
            LeafKind::Contracting => ensure(check.last < 1e-6, || format!("circle pair ends at {:e}", check.last))?,
            LeafKind::EventuallyIsometric => {
                ensure(check.max_change <= 1e-9, || format!("radial pair drifts {:e}", check.max_change))?
            }
        }
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("δ halves within {worst:.1e}; row 6 trimodal; {} leaf checks", f.checks.len()))
}

fn absorbing() -> Outcome {
    let start = Instant::now();
    let t = load("power_annulus");
    let r = absorbing_annuli(&t, 0.1, 20, &[], &tol()).map_err(|e| e.to_string())?;
    let first_short = (0..=20)
        .find(|&n| t.surface_at(n).core_geodesic_length().unwrap() < 0.2)
        .ok_or("no short core by level 20")?;
    ensure(r.first_nonempty == Some(first_short), || {
        format!("first nonempty {:?}, first ℓ < 0.2 at {first_short}", r.first_nonempty)
    })?;
    ensure(r.records.len() == 21, || format!("{} levels checked", r.records.len()))?;
    ensure(r.forward_invariant, || "forward invariance fails".into())?;
    ensure(r.moduli_strictly_increasing, || "moduli not strictly increasing".into())?;
    within(start, Duration::from_secs(30))?;
    Ok(format!("nonempty from level {first_short}, forward invariant through level 20"))
}

fn geometric_limit_criterion() -> Outcome {
    let t = load("cyclic_limit");
    let lim = geometric_limit(&t, &tol()).map_err(|e| e.to_string())?;
    ensure(matches!(lim.kind, LimitKind::HyperbolicAxis { .. }), || format!("{:?}", lim.kind))?;
    let mut ratio_ok = true;
    for (n, l) in lim.lengths.iter().enumerate() {
        ratio_ok &= (l - 0.5f64.powi(n as i32)).abs() <= 1e-15 * l;
    }
    ensure(ratio_ok, || "lengths are not 2^−n".into())?;
    ensure(lim.defects[20] < 1e-6, || format!("defect at 20: {:e}", lim.defects[20]))?;
    ensure(lim.commutator_defect < 1e-8, || format!("commutator {:e}", lim.commutator_defect))?;
    Ok(format!(
        "defect at 20 = {:.1e}, commutator {:.1e}",
        lim.defects[20], lim.commutator_defect
    ))
}

fn blaschke_build() -> Outcome {
    let start = Instant::now();
    let s = build_model_tower(6, BuildPolicy::default()).map_err(|e| e.to_string())?;
    ensure(s.built() == 6 && s.stopped.is_none(), || format!("stopped: {:?}", s.stopped))?;
    ensure(s.samples == 512, || format!("refined to {} samples", s.samples))?;
    ensure(s.levels[0].r == 0.5, || format!("r_0 = {}", s.levels[0].r))?;
    ensure(s.max_residual < 1e-10, || format!("residual {:e}", s.max_residual))?;
    let report = verify_model_invariants(&s);
    if let Some(f) = report.failures().next() {
        return Err(format!("{} at level {:?}: {}", f.name, f.level, f.detail));
    }
    let covering = report.named("covering_degree").count();
    ensure(COVERING_TARGETS == 200 && covering == 7, || format!("{covering} covering checks"))?;
    for n in 0..=6 {
        let b = s.local_isometry_bracket(n, c(0.0, 0.0)).map_err(|e| e.to_string())?;
        ensure(b.contains(1.0), || format!("level {n}: [{}, {}]", b.lo, b.hi))?;
        ensure(
            b.by_truncation.windows(2).all(|w| w[1].hi - w[1].lo <= w[0].hi - w[0].lo),
            || format!("level {n}: bracket widens with truncation"),
        )?;
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{} checks passed in {:.1?}", report.checks.len(), start.elapsed()))
}

fn six_types() -> Outcome {
    let start = Instant::now();
    let mut rows = BTreeSet::new();
    let mut summary = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(towers_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    files.sort();
    for path in files {
        let file = TowerFile::load(&path, None).map_err(|e| e.to_string())?;
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let v = match &file {
            TowerFile::Tower(t) => main_type(t.as_ref(), DEFAULT_PAIR_SAMPLES, DEFAULT_SEED, &tol()),
            TowerFile::Model { levels, .. } => {
                let s = build_model_tower(*levels, BuildPolicy::default()).map_err(|e| e.to_string())?;
                let src = ModelSource::new(s);
                let defects = src.defects(src.base_point()).map_err(|e| e.to_string())?;
                ensure(defects.iter().all(|d| *d == 0.0), || "model λ is not exactly 1".into())?;
                main_type(&src, DEFAULT_PAIR_SAMPLES, DEFAULT_SEED, &tol())
            }
        }
        .map_err(|e| format!("{name}: {e}"))?;
        let row = v.row.ok_or_else(|| format!("{name}: inconclusive"))?;
        ensure(v.discrepancies.is_empty(), || format!("{name}: {:?}", v.discrepancies))?;
        match row {
            3 => ensure(
                v.modality.labels == [PairLabel::ToZero, PairLabel::PositiveNotAttained].into(),
                || format!("{name}: row 3 labels {:?}", v.modality.labels),
            )?,
            5 => {
                ensure(v.infinitesimal.exact, || format!("{name}: λ not exact"))?;
                ensure(v.thinness.kind == ThinnessKind::EssentiallyThick, || format!("{name}: not thick"))?;
                ensure(v.modality.labels.contains(&PairLabel::PositiveNotAttained), || {
                    format!("{name}: every sampled pair is eventually constant")
                })?;
            }
            _ => {}
        }
        rows.insert(row);
        summary.push(format!("{name}={row}"));
    }
    ensure(rows == (1..=6).collect(), || format!("rows covered {rows:?}"))?;
    within(start, Duration::from_secs(300))?;
    Ok(summary.join(" "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact formulas", exact_formulas),
        ("Schwarz–Pick suite", schwarz_pick),
        ("distortion defect Lipschitz bound", distortion_lipschitz),
        ("infinitesimal verdict is point-independent", point_independence),
        ("trichotomy fixtures", trichotomy),
        ("thin trimodal tower", thin_trimodal),
        ("absorbing annuli", absorbing),
        ("geometric limit", geometric_limit_criterion),
        ("Blaschke model build", blaschke_build),
        ("six-type report completeness", six_types),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({t:.2?}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({t:.2?}): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
