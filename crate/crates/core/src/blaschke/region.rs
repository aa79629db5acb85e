//! Closed sampled polylines and their images and preimages under `b_a`.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::{BlaschkeDeg2, BlaschkeError};

/// A Jordan region stored as a positively oriented closed polyline
/// (`samples.last() == samples.first()`), with one known interior point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub samples: Vec<Complex64>,
    pub interior: Complex64,
    pub max_spacing: f64,
    /// `[min re, min im, max re, max im]`.
    pub bbox: [f64; 4],
}

/// Signed number of turns of the closed polyline around `z`.
pub fn winding_number(poly: &[Complex64], z: Complex64) -> i64 {
    let mut total = 0.0;
    for w in poly.windows(2) {
        let (p, q) = (w[0] - z, w[1] - z);
        total += (p.re * q.im - p.im * q.re).atan2(p.re * q.re + p.im * q.im);
    }
    (total / TAU).round() as i64
}

pub fn point_in_polyline(poly: &[Complex64], z: Complex64) -> bool {
    winding_number(poly, z) != 0
}

fn segment_distance(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = (((z - p) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Proper or touching intersection of closed segments `[p1, p2]` and `[q1, q2]`.
fn segments_meet(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Complex64, b: Complex64, c: Complex64, d: f64| {
        d == 0.0 && c.re >= a.re.min(b.re) && c.re <= a.re.max(b.re) && c.im >= a.im.min(b.im) && c.im <= a.im.max(b.im)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Segments bucketed on a uniform grid, for intersection and proximity queries.
struct SegmentGrid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<(usize, usize)>>,
}

impl SegmentGrid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn cell_range(&self, p: Complex64, q: Complex64) -> (i64, i64, i64, i64) {
        let f = |x: f64| (x / self.cell).floor() as i64;
        (f(p.re.min(q.re)), f(p.im.min(q.im)), f(p.re.max(q.re)), f(p.im.max(q.im)))
    }

    fn insert(&mut self, owner: usize, seg: usize, p: Complex64, q: Complex64) {
        let (x0, y0, x1, y1) = self.cell_range(p, q);
        for x in x0..=x1 {
            for y in y0..=y1 {
                self.cells.entry((x, y)).or_default().push((owner, seg));
            }
        }
    }

    fn candidates(&self, p: Complex64, q: Complex64) -> Vec<(usize, usize)> {
        let (x0, y0, x1, y1) = self.cell_range(p, q);
        let mut out = Vec::new();
        for x in x0 - 1..=x1 + 1 {
            for y in y0 - 1..=y1 + 1 {
                if let Some(v) = self.cells.get(&(x, y)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl Component {
    pub fn from_samples(samples: Vec<Complex64>, interior: Complex64) -> Self {
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for z in &samples {
            bbox[0] = bbox[0].min(z.re);
            bbox[1] = bbox[1].min(z.im);
            bbox[2] = bbox[2].max(z.re);
            bbox[3] = bbox[3].max(z.im);
        }
        let max_spacing = samples.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
        Self {
            samples,
            interior,
            max_spacing,
            bbox,
        }
    }

    /// Counter-clockwise circle with `n` segments.
    pub fn disc(center: Complex64, radius: f64, n: usize) -> Self {
        let mut s: Vec<Complex64> = (0..n)
            .map(|k| center + Complex64::from_polar(radius, TAU * k as f64 / n as f64))
            .collect();
        s.push(s[0]);
        Self::from_samples(s, center)
    }

    /// Number of distinct samples.
    pub fn len(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_closed(&self) -> bool {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a - b).norm() <= 1e-12,
            _ => false,
        }
    }

    fn bbox_contains(&self, z: Complex64, pad: f64) -> bool {
        z.re >= self.bbox[0] - pad && z.re <= self.bbox[2] + pad && z.im >= self.bbox[1] - pad && z.im <= self.bbox[3] + pad
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.bbox_contains(z, 0.0) && point_in_polyline(&self.samples, z)
    }

    pub fn winding(&self, z: Complex64) -> i64 {
        winding_number(&self.samples, z)
    }

    /// Euclidean distance from `z` to the polyline.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let dx = (self.bbox[0] - z.re).max(z.re - self.bbox[2]).max(0.0);
        let dy = (self.bbox[1] - z.im).max(z.im - self.bbox[3]).max(0.0);
        let lower = dx.hypot(dy);
        if lower > 0.0 && lower > 10.0 * self.max_modulus_span() {
            // Far away: the bounding box gives the distance to within its diagonal.
            return lower;
        }
        self.samples
            .windows(2)
            .map(|w| segment_distance(z, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    fn max_modulus_span(&self) -> f64 {
        (self.bbox[2] - self.bbox[0]).hypot(self.bbox[3] - self.bbox[1])
    }

    pub fn max_modulus(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_modulus(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Twice the signed area; positive for counter-clockwise curves.
    pub fn signed_area2(&self) -> f64 {
        // Relative to the first sample: tiny components near the circle
        // would otherwise cancel to noise.
        let o = self.samples.first().copied().unwrap_or_default();
        self.samples.windows(2).map(|w| cross(w[0] - o, w[1] - o)).sum()
    }

    /// No two non-adjacent segments meet.
    pub fn is_simple(&self) -> bool {
        let n = self.len();
        if n < 3 {
            return false;
        }
        let mut grid = SegmentGrid::new(self.max_spacing.max(1e-300) * 2.0);
        for j in 0..n {
            grid.insert(0, j, self.samples[j], self.samples[j + 1]);
        }
        for j in 0..n {
            let (p, q) = (self.samples[j], self.samples[j + 1]);
            for (_, k) in grid.candidates(p, q) {
                if k <= j + 1 || (j == 0 && k == n - 1) {
                    continue;
                }
                if segments_meet(p, q, self.samples[k], self.samples[k + 1]) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest sample-to-segment distance between two components, or an
    /// error string when they cross or nest.
    pub fn separation(&self, other: &Component, gap: f64) -> Result<f64, String> {
        let far = self.bbox[0] > other.bbox[2] + gap
            || other.bbox[0] > self.bbox[2] + gap
            || self.bbox[1] > other.bbox[3] + gap
            || other.bbox[1] > self.bbox[3] + gap;
        if far {
            let dx = (self.bbox[0] - other.bbox[2]).max(other.bbox[0] - self.bbox[2]).max(0.0);
            let dy = (self.bbox[1] - other.bbox[3]).max(other.bbox[1] - self.bbox[3]).max(0.0);
            return Ok(dx.hypot(dy));
        }
        if other.contains(self.samples[0]) || self.contains(other.samples[0]) {
            return Err("components are nested".into());
        }
        let cell = self.max_spacing.max(other.max_spacing).max(gap).max(1e-300) * 2.0;
        let mut grid = SegmentGrid::new(cell);
        for j in 0..other.len() {
            grid.insert(1, j, other.samples[j], other.samples[j + 1]);
        }
        let mut best = f64::INFINITY;
        for j in 0..self.len() {
            let (p, q) = (self.samples[j], self.samples[j + 1]);
            for (_, k) in grid.candidates(p, q) {
                let (r, s) = (other.samples[k], other.samples[k + 1]);
                if segments_meet(p, q, r, s) {
                    return Err("component boundaries cross".into());
                }
                best = best.min(segment_distance(p, r, s)).min(segment_distance(r, p, q));
            }
        }
        if best.is_infinite() {
            // No segments share a neighbourhood: at least one grid cell apart.
            best = cell;
        }
        Ok(best)
    }
}

/// A finite union of components.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RegionSet {
    pub components: Vec<Component>,
}

impl RegionSet {
    pub fn contains(&self, z: Complex64) -> bool {
        self.components.iter().any(|c| c.contains(z))
    }

    /// Image under `b`, which must be injective on the disc of radius `r`
    /// containing every component.
    pub fn pushforward(&self, b: &BlaschkeDeg2, r: f64) -> Result<RegionSet, BlaschkeError> {
        Ok(RegionSet {
            components: self
                .components
                .iter()
                .map(|c| pushforward_component(b, c, r))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Full preimage under `b`, with the largest root residual.
    pub fn preimage(&self, b: &BlaschkeDeg2) -> Result<(RegionSet, f64), BlaschkeError> {
        let mut out = Vec::new();
        let mut residual: f64 = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            let (parts, res) = preimage_component(b, c, i)?;
            out.extend(parts);
            residual = residual.max(res);
        }
        Ok((RegionSet { components: out }, residual))
    }
}

pub fn pushforward_component(b: &BlaschkeDeg2, c: &Component, r: f64) -> Result<Component, BlaschkeError> {
    let crit = b.critical_point().abs();
    let modulus = c.max_modulus();
    if r >= crit {
        return Err(BlaschkeError::NotInjective { modulus: r, radius: crit });
    }
    if modulus >= r {
        return Err(BlaschkeError::NotInjective { modulus, radius: r });
    }
    let samples = c.samples.iter().map(|z| b.eval(*z)).collect();
    Ok(Component::from_samples(samples, b.eval(c.interior)))
}

/// Preimage of one component: two components, or one traversed over two laps
/// when the component surrounds the critical value. Roots are continued along
/// the polyline by nearest-root matching.
pub fn preimage_component(
    b: &BlaschkeDeg2,
    c: &Component,
    index: usize,
) -> Result<(Vec<Component>, f64), BlaschkeError> {
    let v = Complex64::new(b.critical_data().1, 0.0);
    let w = &c.samples;
    let n = c.len();
    for j in 0..n {
        let prev = if j == 0 { w[n - 1] } else { w[j - 1] };
        let spacing = (w[j + 1] - w[j]).norm().max((w[j] - prev).norm());
        let distance = (w[j] - v).norm();
        if distance <= 10.0 * spacing {
            return Err(BlaschkeError::BranchAmbiguity {
                component: index,
                distance,
                margin: 10.0 * spacing,
            });
        }
    }
    let ambiguity = |distance: f64| BlaschkeError::BranchAmbiguity {
        component: index,
        distance,
        margin: 0.0,
    };
    let track = |start: Complex64, out: &mut Vec<Complex64>| -> Result<(Complex64, f64), BlaschkeError> {
        let mut z = start;
        let mut residual: f64 = 0.0;
        for wj in &w[1..] {
            let [r1, r2] = b.preimages(*wj);
            let (d1, d2) = ((r1 - z).norm(), (r2 - z).norm());
            let (next, near, far) = if d1 <= d2 { (r1, d1, d2) } else { (r2, d2, d1) };
            if near > 0.5 * far {
                return Err(ambiguity((*wj - v).norm()));
            }
            residual = residual.max((b.eval(next) - wj).norm());
            out.push(next);
            z = next;
        }
        Ok((z, residual))
    };
    let roots = b.preimages(w[0]);
    let mut residual = (0.0f64).max((b.eval(roots[0]) - w[0]).norm()).max((b.eval(roots[1]) - w[0]).norm());
    let interior_roots = b.preimages(c.interior);
    let pick_interior = |samples: &[Complex64]| {
        interior_roots
            .iter()
            .copied()
            .find(|z| winding_number(samples, *z) != 0)
            .unwrap_or(interior_roots[0])
    };

    let mut first = vec![roots[0]];
    let (end, res) = track(roots[0], &mut first)?;
    residual = residual.max(res);
    let parts = if (end - roots[0]).norm() < (end - roots[1]).norm() {
        *first.last_mut().unwrap() = roots[0];
        let mut second = vec![roots[1]];
        residual = residual.max(track(roots[1], &mut second)?.1);
        *second.last_mut().unwrap() = roots[1];
        let a = Component::from_samples(first.clone(), pick_interior(&first));
        let b2 = Component::from_samples(second.clone(), pick_interior(&second));
        vec![a, b2]
    } else {
        let (end2, res) = track(end, &mut first)?;
        residual = residual.max(res);
        if (end2 - roots[0]).norm() > (end2 - roots[1]).norm() {
            return Err(ambiguity((w[0] - v).norm()));
        }
        *first.last_mut().unwrap() = roots[0];
        let interior = pick_interior(&first);
        vec![Component::from_samples(first, interior)]
    };
    Ok((parts, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn winding_of_circle() {
        let d = Component::disc(c(0.2, 0.1), 0.3, 64);
        assert_eq!(d.winding(c(0.2, 0.1)), 1);
        assert_eq!(d.winding(c(0.9, 0.1)), 0);
        assert!(d.is_closed() && d.is_simple());
        assert!(d.signed_area2() > 0.0);
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let mut s: Vec<Complex64> = (0..64)
            .map(|k| {
                let t = TAU * k as f64 / 64.0;
                c(t.sin(), (2.0 * t).sin() / 2.0)
            })
            .collect();
        s.push(s[0]);
        assert!(!Component::from_samples(s, c(0.5, 0.0)).is_simple());
    }

    #[test]
    fn boundary_distance_of_circle() {
        let d = Component::disc(c(0.0, 0.0), 0.5, 4096);
        assert!((d.boundary_distance(c(0.1, 0.0)) - 0.4).abs() < 1e-6);
        assert!((d.boundary_distance(c(2.0, 0.0)) - 1.5).abs() < 1e-6);
    }

    #[test]
    fn separation_and_nesting() {
        let a = Component::disc(c(0.0, 0.0), 0.1, 128);
        let b = Component::disc(c(0.25, 0.0), 0.1, 128);
        let s = a.separation(&b, 1e-9).unwrap();
        assert!((s - 0.05).abs() < 1e-3);
        let inner = Component::disc(c(0.0, 0.0), 0.05, 128);
        assert!(a.separation(&inner, 1e-9).is_err());
        let crossing = Component::disc(c(0.15, 0.0), 0.1, 128);
        assert!(a.separation(&crossing, 1e-9).is_err());
    }

    #[test]
    fn preimage_of_small_disc_at_origin() {
        let b = BlaschkeDeg2::new(0.6).unwrap();
        let d = Component::disc(c(0.0, 0.0), 0.01, 256);
        let (parts, residual) = preimage_component(&b, &d, 0).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(residual < 1e-10);
        assert!(parts.iter().any(|p| p.contains(c(0.0, 0.0))));
        assert!(parts.iter().any(|p| p.contains(c(-0.6, 0.0))));
        for p in &parts {
            assert!(p.is_closed() && p.is_simple() && p.signed_area2() > 0.0);
            for z in &p.samples {
                assert!(d.boundary_distance(b.eval(*z)) < 1e-10);
            }
        }
    }

    #[test]
    fn preimage_around_critical_value_is_one_component() {
        let b = BlaschkeDeg2::new(0.6).unwrap();
        let (cp, v) = b.critical_data();
        let d = Component::disc(c(v, 0.0), 0.02, 256);
        let (parts, _) = preimage_component(&b, &d, 0).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 512);
        assert!(parts[0].contains(c(cp, 0.0)));
        assert!(parts[0].is_simple());
    }

    #[test]
    fn preimage_through_critical_value_is_refused() {
        let b = BlaschkeDeg2::new(0.6).unwrap();
        let v = b.critical_data().1;
        let d = Component::disc(c(v + 0.02, 0.0), 0.02, 256);
        assert!(matches!(preimage_component(&b, &d, 3), Err(BlaschkeError::BranchAmbiguity { component: 3, .. })));
    }

    #[test]
    fn pushforward_then_preimage_round_trip() {
        let b = BlaschkeDeg2::new(0.6).unwrap();
        let r = 0.3;
        let d = Component::disc(c(0.1, 0.05), 0.1, 256);
        let img = pushforward_component(&b, &d, r).unwrap();
        assert!(img.contains(c(0.0, 0.0)) == d.contains(c(0.0, 0.0)));
        for (z, w) in d.samples.iter().zip(&img.samples) {
            assert!((b.eval(*z) - w).norm() < 1e-15);
        }
        let (parts, _) = preimage_component(&b, &img, 0).unwrap();
        let back = parts
            .iter()
            .find(|p| (p.samples[0] - d.samples[0]).norm() < 1e-12)
            .expect("source branch recovered");
        for (z, w) in d.samples.iter().zip(&back.samples) {
            assert!((z - w).norm() < 1e-12);
        }
        assert!(pushforward_component(&b, &d, 0.9).is_err());
    }
}
