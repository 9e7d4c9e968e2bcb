//! Reference implementations used as test oracles. Deliberately naive:
//! textbook recursion, no shared code with the library.

#![allow(dead_code)]

use promind_core::pose::Pose6;

/// Cox-de Boor recursion for basis `k` of degree `p` (0-based). Half-open
/// spans, except that the right end of the domain belongs to the last
/// non-empty span.
pub fn basis(knots: &[f64], k: usize, p: usize, t: f64) -> f64 {
    if p == 0 {
        let (a, b) = (knots[k], knots[k + 1]);
        let last = *knots.last().unwrap();
        return if (a <= t && t < b) || (t == last && a < b && b == last) { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[k + p] - knots[k];
    if d1 > 0.0 {
        v += (t - knots[k]) / d1 * basis(knots, k, p - 1, t);
    }
    let d2 = knots[k + p + 1] - knots[k + 1];
    if d2 > 0.0 {
        v += (knots[k + p + 1] - t) / d2 * basis(knots, k + 1, p - 1, t);
    }
    v
}

/// `d`-th derivative of basis `k`, from the derivative recursion.
pub fn basis_deriv(knots: &[f64], k: usize, p: usize, t: f64, d: usize) -> f64 {
    if d == 0 {
        return basis(knots, k, p, t);
    }
    if p == 0 {
        return 0.0;
    }
    let mut v = 0.0;
    let d1 = knots[k + p] - knots[k];
    if d1 > 0.0 {
        v += p as f64 / d1 * basis_deriv(knots, k, p - 1, t, d - 1);
    }
    let d2 = knots[k + p + 1] - knots[k + 1];
    if d2 > 0.0 {
        v -= p as f64 / d2 * basis_deriv(knots, k + 1, p - 1, t, d - 1);
    }
    v
}

pub fn eval_scalar(knots: &[f64], p: usize, coeffs: &[f64], t: f64, d: usize) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c * basis_deriv(knots, k, p, t, d)).sum()
}

pub fn eval_pose(knots: &[f64], p: usize, points: &[Pose6], t: f64, d: usize) -> Pose6 {
    let mut out = Pose6::ZERO;
    for (k, c) in points.iter().enumerate() {
        let n = basis_deriv(knots, k, p, t, d);
        if n != 0.0 {
            out = out + *c * n;
        }
    }
    out
}

/// Clamped quintic knots for interval vector `h`.
pub fn quintic_knots(h: &[f64]) -> Vec<f64> {
    let w = h.len() - 1;
    let mut k = vec![0.0; 6];
    let mut acc = 0.0;
    for v in &h[..w] {
        acc += v;
        k.push(acc);
    }
    let tf = acc + h[w];
    k.extend([tf; 6]);
    k
}

/// Times of waypoint passage: 0, the knots after the first virtual point,
/// and t_f.
pub fn passage_times(knots: &[f64], w: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    t.extend((1..w - 1).map(|g| knots[6 + g]));
    t.push(*knots.last().unwrap());
    t
}
