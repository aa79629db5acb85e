use std::sync::OnceLock;

use hypdyn::blaschke::*;
use hypdyn::classify::{main_type, OrbitSource, PairKind, PairLabel, Tolerances};
use hypdyn::hyp::{disc_distance_raw, MobiusDisc};
use hypdyn::tower::MapElement;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn model() -> &'static ModelTowerState {
    static STATE: OnceLock<ModelTowerState> = OnceLock::new();
    STATE.get_or_init(|| build_model_tower(6, BuildPolicy::default()).unwrap())
}

#[test]
fn six_levels_build_without_stopping() {
    let s = model();
    assert_eq!(s.built(), 6);
    assert!(s.stopped.is_none());
    assert_eq!(s.levels[0].r, 0.5);
    assert_eq!(s.levels[0].a, 0.8125);
    assert!(s.max_residual < 1e-10);
}

#[test]
fn component_counts_follow_the_degree_bookkeeping() {
    let s = model();
    for m in 0..=6 {
        assert_eq!(s.region(m + 1, m).len(), m + 1, "A_{}^{m}", m + 1);
        assert_eq!(s.region(m, m).len(), 2 * m + 1, "A_{m}^{m}");
    }
    let zeroth: Vec<usize> = (0..=6).map(|n| s.region(0, n).len()).collect();
    assert_eq!(zeroth, [1, 5, 17, 49, 129, 321, 769]);
}

#[test]
fn every_invariant_check_passes() {
    let r = verify_model_invariants(model());
    let failures: Vec<_> = r.failures().collect();
    assert!(failures.is_empty(), "{failures:#?}");
    for prefix in ["i_", "ii_", "iii_", "iv_", "covering_degree", "region_geometry"] {
        assert!(r.named(prefix).count() > 0, "{prefix}");
    }
    assert!(r.truncation.contains("over-approximation"));
}

#[test]
fn membership_in_truncated_domains() {
    let s = model();
    for n in 0..=6 {
        for h in n..=6 {
            assert!(s.point_in_u(n, c(0.0, 0.0), h).unwrap());
        }
        let cn = c(s.levels[n].critical_point, 0.0);
        assert!(!s.point_in_u(n, cn, n).unwrap());
    }
    assert!(s.point_in_u(0, c(0.0, 0.0), 7).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let z = Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..6.3));
        let n = rng.gen_range(0..=5);
        for h in n + 1..=6 {
            if s.point_in_u(n, z, h).unwrap() {
                assert!(s.point_in_u(n, z, h - 1).unwrap());
            }
        }
    }
}

#[test]
fn isometry_bracket_contains_one_and_narrows() {
    let s = model();
    for n in 0..=6 {
        let b = s.local_isometry_bracket(n, c(0.0, 0.0)).unwrap();
        assert!(b.contains(1.0), "level {n}: [{}, {}]", b.lo, b.hi);
        for w in b.by_truncation.windows(2) {
            assert!(w[1].hi - w[1].lo <= w[0].hi - w[0].lo);
        }
    }
    // Level 0 sharpens once the stage-1 holes are known.
    let b = s.local_isometry_bracket(0, c(0.0, 0.0)).unwrap();
    let (first, last) = (b.by_truncation[0], *b.by_truncation.last().unwrap());
    assert!(last.hi - last.lo < first.hi - first.lo);
}

#[test]
fn bracket_refuses_points_inside_holes() {
    let s = model();
    let c0 = c(s.levels[0].critical_point, 0.0);
    assert_eq!(s.local_isometry_bracket(0, c0), Err(BlaschkeError::NearBoundary));
}

#[test]
fn automorphism_bracket_collapses() {
    let m = MobiusDisc::new(Complex64::from_polar(1.0, 0.4), c(0.3, -0.2)).unwrap();
    for z in [c(0.0, 0.0), c(0.5, 0.1), c(-0.7, 0.6)] {
        let b = disc_isometry_bracket(&m, z);
        assert!(b.lo >= 1.0 - 1e-9 && b.hi <= 1.0 + 1e-9, "{b:?}");
    }
}

#[test]
fn translated_tower_moves_the_origin_along() {
    let s = model();
    let t = translate_tower(s);
    assert_eq!(t.levels.len(), 8);
    for n in 0..=6 {
        let z = c(TranslatedModel::offset(n), 0.0);
        let w = t.map(n, z).unwrap();
        assert!((w - c(TranslatedModel::offset(n + 1), 0.0)).norm() < 1e-15);
    }
    assert!(t.map(7, c(28.0, 0.0)).is_none());
    // Interior samples of K_n land in K_{n+1}.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 0..=6 {
        let mut hits = 0;
        while hits < 100 {
            let z = Complex64::from_polar(rng.gen_range(0.0f64..0.95).sqrt(), rng.gen_range(0.0..6.3)) + TranslatedModel::offset(n);
            if t.contains(n, z) {
                hits += 1;
                assert!(t.contains(n + 1, t.map(n, z).unwrap()), "level {n}: {z}");
            }
        }
    }
    // Consecutive translates are 4 apart and have diameter at most 2.
    for w in t.levels.windows(2) {
        assert_eq!(w[1].offset - w[0].offset, 4.0);
    }
}

#[test]
fn model_classifies_as_row_five() {
    let src = ModelSource::new(model().clone());
    assert_eq!(src.horizon(), 7);
    assert!(src.defects(c(0.0, 0.0)).unwrap().iter().all(|d| *d == 0.0));
    let v = main_type(&src, 40, 7, &Tolerances::default()).unwrap();
    assert_eq!(v.row, Some(5));
    assert!(v.discrepancies.is_empty(), "{:?}", v.discrepancies);
    assert!(v.infinitesimal.exact);
    assert!(!v.modality.labels.contains(&PairLabel::ToZero));
    let late: Vec<_> = v.modality.pairs.iter().filter(|p| p.kind == PairKind::LatePartner).collect();
    assert!(!late.is_empty());
    assert!(late.iter().all(|p| p.label == Some(PairLabel::PositiveNotAttained)));
}

#[test]
fn late_partner_distance_collapses_at_the_last_map() {
    let src = ModelSource::new(model().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pair = src
        .sample_pairs(8, &mut rng)
        .into_iter()
        .find(|p| p.kind == PairKind::LatePartner)
        .unwrap();
    let d = src.distances(pair.p, pair.q).unwrap();
    let h = d.len() - 1;
    // Far apart until the last map brings the partner next to p.
    assert!(d[h - 1] > 10.0, "{d:?}");
    assert!(d[h] < 0.2, "{d:?}");
    assert!(d[0] - d[h - 1] < d[h - 1] - d[h]);
}

#[test]
fn region_json_is_versioned_and_decimated() {
    let s = build_model_tower(1, BuildPolicy::default()).unwrap();
    let v = region_json(&s);
    assert_eq!(v["schema"], "hypdyn/1");
    assert_eq!(v["levels"][0]["r"], 0.5);
    for comp in v["components"].as_array().unwrap() {
        assert!(comp["polyline"].as_array().unwrap().len() <= MAX_JSON_POINTS);
    }
    let svg = model_svg(&s);
    assert!(svg.starts_with("<svg") && svg.contains("level-2"));
}

#[test]
fn level_zero_only() {
    let s = build_model_tower(0, BuildPolicy::default()).unwrap();
    assert_eq!(s.built(), 0);
    assert_eq!(s.levels[0].r, 0.5);
    assert!(verify_model_invariants(&s).all_passed);
}

#[test]
fn one_minus_distortion_is_lipschitz_in_log() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let point = |rng: &mut ChaCha8Rng| Complex64::from_polar(rng.gen_range(0.0f64..0.9), rng.gen_range(0.0..6.3));
    for _ in 0..1000 {
        let map = MapElement::Blaschke2 { a: rng.gen_range(0.01..0.99) };
        let (z, w) = (point(&mut rng), point(&mut rng));
        let d = disc_distance_raw(z, w);
        let (dz, dw) = (map.disc_distortion(z).1, map.disc_distortion(w).1);
        assert!((-2.0 * d).exp() * dw <= dz * (1.0 + 1e-9), "{z} {w}");
        assert!(dz <= (2.0 * d).exp() * dw * (1.0 + 1e-9), "{z} {w}");
    }
}
