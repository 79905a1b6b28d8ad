//! Planar distance helpers on `Complex64` points.

use num_complex::Complex64;

/// Distance from `p` to the segment `[a, b]` (a point when `a == b`).
pub fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Distance between segments `[a, b]` and `[c, d]`; zero if they cross.
pub fn segment_segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Segments of a polyline; a single vertex yields one degenerate segment.
pub fn segments(poly: &[Complex64]) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
    let single = if poly.len() == 1 { Some((poly[0], poly[0])) } else { None };
    poly.windows(2).map(|w| (w[0], w[1])).chain(single)
}

/// Smallest distance between two polylines.
pub fn polyline_distance(p: &[Complex64], q: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, b) in segments(p) {
        for (c, d) in segments(q) {
            best = best.min(segment_segment_distance(a, b, c, d));
        }
    }
    best
}
