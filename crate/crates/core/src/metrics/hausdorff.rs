use num_complex::Complex64;

use super::MetricsError;
use crate::geometry::{point_segment_distance, segments};
use crate::loewner::HullPolyline;

fn directed_sets(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between finite point sets.
pub fn hausdorff_sets(a: &[Complex64], b: &[Complex64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(directed_sets(a, b).max(directed_sets(b, a)))
}

fn directed_polylines(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for p in a.iter().flatten() {
        let mut best = f64::INFINITY;
        for (s, e) in b.iter().flat_map(|poly| segments(poly)) {
            best = best.min(point_segment_distance(*p, s, e));
            if best <= worst {
                break;
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Hausdorff distance between unions of polylines: vertices of one side are
/// measured against the segments of the other.
pub fn hausdorff_polylines(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Result<f64, MetricsError> {
    let empty = |s: &[Vec<Complex64>]| s.iter().all(|p| p.is_empty());
    if empty(a) || empty(b) {
        return Err(MetricsError::EmptySet);
    }
    Ok(directed_polylines(a, b).max(directed_polylines(b, a)))
}

/// `d_H(K¹ ∪ [−L, L], K² ∪ [−L, L])` with the larger of the two clips.
///
/// This equals the distance with the full real line as long as every curve
/// vertex satisfies `|Re z| ≤ L`, which is checked.
pub fn hausdorff_distance(a: &HullPolyline, b: &HullPolyline) -> Result<f64, MetricsError> {
    let clip = a.clip.max(b.clip);
    let widen = |h: &HullPolyline| HullPolyline {
        curves: h.curves.clone(),
        clip,
    };
    let (a, b) = (widen(a), widen(b));
    for z in a.curves.iter().chain(&b.curves).flatten() {
        if z.re.abs() > clip {
            return Err(MetricsError::InvalidParameter(format!(
                "hull point {z} lies beyond the real clip {clip}"
            )));
        }
    }
    hausdorff_polylines(&a.polylines(), &b.polylines())
}
