//! Clamped B-spline curves: knot vectors, basis evaluation, curve and
//! derivative evaluation.
//!
//! Indices are 0-based throughout: basis function `k` here is `N_{k+1,p}` in
//! the usual 1-based textbook notation, and knot `i` is `τ_{i+1}`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{construction, domain, Result};
use crate::pose::Pose6;

/// Degree used by the trajectory planner.
pub const QUINTIC: usize = 5;

/// Largest supported degree; keeps basis scratch space on the stack.
pub const MAX_DEGREE: usize = 7;

/// Relative slack accepted when a time lands a hair outside the domain
/// because of floating-point accumulation.
const DOMAIN_SLACK: f64 = 1e-12;

/// Something that can be linearly combined by basis functions.
pub trait ControlPoint:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
}

impl ControlPoint for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl ControlPoint for Pose6 {
    fn zero() -> Self {
        Pose6::ZERO
    }
}

/// A clamped, non-decreasing knot vector with non-degenerate interior spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(construction(format!(
                "degree {degree} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        if values.len() < 2 * (degree + 1) {
            return Err(construction(format!(
                "{} knots are too few for degree {degree}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(construction("knots must be finite"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(construction("knots must be non-decreasing"));
        }
        let n = values.len();
        let first = values[0];
        let last = values[n - 1];
        if values[..=degree].iter().any(|&v| v != first)
            || values[n - degree - 1..].iter().any(|&v| v != last)
        {
            return Err(construction(format!(
                "knot vector is not clamped (needs {} equal end knots)",
                degree + 1
            )));
        }
        // Breakpoints between the clamped ends must be strictly increasing.
        if values[degree..n - degree].windows(2).any(|w| w[1] <= w[0]) {
            return Err(construction("degenerate (zero-width) knot span"));
        }
        Ok(KnotVector { values, degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of basis functions (equivalently, control points).
    pub fn basis_count(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// Distinct breakpoints, first to last.
    pub fn breakpoints(&self) -> &[f64] {
        &self.values[self.degree..self.values.len() - self.degree]
    }

    /// Index of the first knot of the spans that lie strictly inside the
    /// domain, i.e. the valid results of [`KnotVector::span`].
    pub fn span_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.degree..=self.basis_count() - 1
    }

    /// Clamps `t` into the domain if it is within floating-point slack of it.
    pub(crate) fn check_time(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.start(), self.end());
        let slack = DOMAIN_SLACK * (b - a).abs().max(1.0);
        if !t.is_finite() || t < a - slack || t > b + slack {
            return Err(domain(format!("t = {t} outside [{a}, {b}]")));
        }
        Ok(t.clamp(a, b))
    }

    /// Returns the index `l` with `τ_l <= t < τ_{l+1}`; at the right end of
    /// the domain the last non-degenerate span is returned.
    pub fn span(&self, t: f64) -> Result<usize> {
        let t = self.check_time(t)?;
        let n = self.basis_count();
        if t >= self.values[n] {
            return Ok(n - 1);
        }
        // partition_point gives the first knot strictly greater than t.
        let upper = self.values[..=n].partition_point(|&k| k <= t);
        Ok((upper - 1).max(self.degree))
    }

    /// Knot vector of the derivative curve: degree lowered by one, first and
    /// last knots dropped.
    pub fn derivative(&self) -> Result<KnotVector> {
        if self.degree == 0 {
            return Err(domain("cannot differentiate a degree-0 knot vector"));
        }
        let n = self.values.len();
        Ok(KnotVector {
            values: self.values[1..n - 1].to_vec(),
            degree: self.degree - 1,
        })
    }

    /// Values of the `p+1` basis functions that are non-zero on `span`,
    /// evaluated at `t` (triangular Cox-de Boor scheme).
    pub(crate) fn nonzero_basis(&self, span: usize, t: f64) -> [f64; MAX_DEGREE + 1] {
        let p = self.degree;
        let tau = &self.values;
        let mut out = [0.0; MAX_DEGREE + 1];
        let mut left = [0.0; MAX_DEGREE + 1];
        let mut right = [0.0; MAX_DEGREE + 1];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = t - tau[span + 1 - j];
            right[j] = tau[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        out
    }
}

/// Value of basis function `k` (0-based) of the knot vector's degree at `t`.
///
/// At the right end of the domain the last basis function is 1, so clamped
/// curves interpolate their final control point.
pub fn basis(knots: &KnotVector, k: usize, t: f64) -> Result<f64> {
    let n = knots.basis_count();
    if k >= n {
        return Err(domain(format!("basis index {k} out of range 0..{n}")));
    }
    let span = knots.span(t)?;
    let p = knots.degree();
    let t = knots.check_time(t)?;
    if k + p < span || k > span {
        return Ok(0.0);
    }
    Ok(knots.nonzero_basis(span, t)[k + p - span])
}

/// Control points of the `d`-th derivative curve.
///
/// Each differentiation maps `n` points of degree `q` to `n-1` points of
/// degree `q-1`: `q (c_{k+1} - c_k) / (τ_{k+q+1} - τ_{k+1})`.
pub fn derivative_control_points<P: ControlPoint>(
    points: &[P],
    knots: &KnotVector,
    d: usize,
) -> Result<Vec<P>> {
    if d > knots.degree() {
        return Err(domain(format!(
            "derivative order {d} exceeds degree {}",
            knots.degree()
        )));
    }
    if points.len() != knots.basis_count() {
        return Err(domain(format!(
            "{} control points do not match {} basis functions",
            points.len(),
            knots.basis_count()
        )));
    }
    let tau = knots.values();
    let p = knots.degree();
    let mut current = points.to_vec();
    for level in 1..=d {
        let q = p + 1 - level;
        // Knots of the level-1 curve are tau[level-1 .. len-(level-1)].
        let off = level - 1;
        current = current
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let denom = tau[off + k + q + 1] - tau[off + k + 1];
                (w[1] - w[0]) * (q as f64 / denom)
            })
            .collect();
    }
    Ok(current)
}

/// A clamped B-spline curve with control points of type `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve<P> {
    knots: KnotVector,
    points: Vec<P>,
}

impl<P: ControlPoint> BSplineCurve<P> {
    pub fn new(knots: KnotVector, points: Vec<P>) -> Result<Self> {
        if points.len() != knots.basis_count() {
            return Err(construction(format!(
                "{} control points given, knot vector needs {}",
                points.len(),
                knots.basis_count()
            )));
        }
        Ok(BSplineCurve { knots, points })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn control_points(&self) -> &[P] {
        &self.points
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn eval(&self, t: f64) -> Result<P> {
        let span = self.knots.span(t)?;
        let t = self.knots.check_time(t)?;
        Ok(self.eval_in_span(span, t))
    }

    /// Evaluates with a known span; `t` must already be inside it.
    pub(crate) fn eval_in_span(&self, span: usize, t: f64) -> P {
        let p = self.knots.degree();
        let n = self.knots.nonzero_basis(span, t);
        let base = span - p;
        (0..=p).fold(P::zero(), |acc, j| acc + self.points[base + j] * n[j])
    }

    /// Curve of the `d`-th derivative.
    pub fn derivative(&self, d: usize) -> Result<BSplineCurve<P>> {
        let points = derivative_control_points(&self.points, &self.knots, d)?;
        let mut knots = self.knots.clone();
        for _ in 0..d {
            knots = knots.derivative()?;
        }
        Ok(BSplineCurve { knots, points })
    }
}

/// Six-dimensional trajectory: one curve per pose coordinate sharing a
/// single knot vector, plus cached velocity, acceleration and jerk curves.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBundle {
    curve: BSplineCurve<Pose6>,
    derivatives: [BSplineCurve<Pose6>; 3],
}

impl BSplineBundle {
    pub fn new(knots: KnotVector, points: Vec<Pose6>) -> Result<Self> {
        if knots.degree() < 3 {
            return Err(construction("trajectory bundles need degree >= 3"));
        }
        let curve = BSplineCurve::new(knots, points)?;
        let derivatives = [
            curve.derivative(1)?,
            curve.derivative(2)?,
            curve.derivative(3)?,
        ];
        Ok(BSplineBundle { curve, derivatives })
    }

    pub fn knots(&self) -> &KnotVector {
        self.curve.knots()
    }

    pub fn control_points(&self) -> &[Pose6] {
        self.curve.control_points()
    }

    /// Same knots, new control points.
    pub fn with_control_points(&self, points: Vec<Pose6>) -> Result<Self> {
        BSplineBundle::new(self.curve.knots.clone(), points)
    }

    /// Total duration `t_f`, which is also the last knot since the first is 0.
    pub fn duration(&self) -> f64 {
        self.curve.knots.duration()
    }

    /// Control points of the `order`-th derivative (order 0 is the curve).
    pub fn polygon(&self, order: usize) -> Result<&[Pose6]> {
        match order {
            0 => Ok(self.curve.control_points()),
            1..=3 => Ok(self.derivatives[order - 1].control_points()),
            _ => Err(domain(format!("derivative order {order} not in 0..=3"))),
        }
    }

    pub fn curve(&self, order: usize) -> Result<&BSplineCurve<Pose6>> {
        match order {
            0 => Ok(&self.curve),
            1..=3 => Ok(&self.derivatives[order - 1]),
            _ => Err(domain(format!("derivative order {order} not in 0..=3"))),
        }
    }

    /// Pose (order 0) or its `order`-th time derivative at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<Pose6> {
        self.curve(order)?.eval(t)
    }

    /// Values of one pose coordinate's control polygon.
    pub fn dimension(&self, i: usize) -> Vec<f64> {
        self.control_points().iter().map(|c| c[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct recursive form of the basis (half-open indicator at degree 0),
    /// independent of the triangular scheme used in production.
    fn recursive_basis(tau: &[f64], k: usize, p: usize, t: f64) -> f64 {
        if p == 0 {
            return if tau[k] <= t && t < tau[k + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = tau[k + p] - tau[k];
        if d1 > 0.0 {
            v += (t - tau[k]) / d1 * recursive_basis(tau, k, p - 1, t);
        }
        let d2 = tau[k + p + 1] - tau[k + 1];
        if d2 > 0.0 {
            v += (tau[k + p + 1] - t) / d2 * recursive_basis(tau, k + 1, p - 1, t);
        }
        v
    }

    fn uniform_quintic() -> KnotVector {
        let mut v = vec![0.0; 6];
        v.extend([1.0, 2.0, 3.0]);
        v.extend([4.0; 6]);
        KnotVector::new(v, 5).unwrap()
    }

    #[test]
    fn partition_of_unity_on_uniform_clamped_knots() {
        let k = uniform_quintic();
        for i in 0..=400 {
            let t = 4.0 * i as f64 / 400.0;
            let s: f64 = (0..k.basis_count()).map(|j| basis(&k, j, t).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "t={t} sum={s}");
        }
    }

    #[test]
    fn clamped_endpoints() {
        let k = uniform_quintic();
        assert_eq!(basis(&k, 0, 0.0).unwrap(), 1.0);
        for j in 1..k.basis_count() {
            assert_eq!(basis(&k, j, 0.0).unwrap(), 0.0);
        }
        let last = k.basis_count() - 1;
        assert!((basis(&k, last, 4.0).unwrap() - 1.0).abs() < 1e-15);
        for j in 0..last {
            assert!(basis(&k, j, 4.0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn linear_hat_functions() {
        // Knots [0,0,1,2,2], degree 1: three hat functions. At t=0.5 the
        // recursion gives (1-t, t, 0) for basis 0, 1, 2.
        let k = KnotVector::new(vec![0.0, 0.0, 1.0, 2.0, 2.0], 1).unwrap();
        let tau = k.values();
        for j in 0..3 {
            let oracle = recursive_basis(tau, j, 1, 0.5);
            assert!((basis(&k, j, 0.5).unwrap() - oracle).abs() < 1e-15);
        }
        assert_eq!(basis(&k, 0, 0.5).unwrap(), 0.5);
        assert_eq!(basis(&k, 1, 0.5).unwrap(), 0.5);
        assert_eq!(basis(&k, 2, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn triangular_scheme_matches_recursion() {
        let k = KnotVector::new(
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 1.1, 1.2, 2.5, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0],
            5,
        )
        .unwrap();
        for i in 0..300 {
            let t = 3.0 * i as f64 / 300.0;
            for j in 0..k.basis_count() {
                let a = basis(&k, j, t).unwrap();
                let b = recursive_basis(k.values(), j, 5, t);
                assert!((a - b).abs() < 1e-13, "k={j} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        let k = uniform_quintic();
        assert!(basis(&k, 0, -0.1).is_err());
        assert!(basis(&k, 0, 4.1).is_err());
        assert!(basis(&k, k.basis_count(), 1.0).is_err());
        assert!(k.span(f64::NAN).is_err());
    }

    #[test]
    fn span_lookup() {
        let k = uniform_quintic();
        // t=0.5 lies in the span starting at the last zero knot.
        assert_eq!(k.span(0.5).unwrap(), 5);
        assert_eq!(k.span(0.0).unwrap(), 5);
        assert_eq!(k.span(2.0).unwrap(), 7);
        assert_eq!(k.values()[7], 2.0);
        assert_eq!(k.span(4.0).unwrap(), 8);
        // linear-scan oracle
        for i in 0..=80 {
            let t = 4.0 * i as f64 / 80.0;
            let tau = k.values();
            let scan = (k.degree()..k.basis_count())
                .rfind(|&l| tau[l] <= t && (t < tau[l + 1] || l == k.basis_count() - 1))
                .unwrap();
            assert_eq!(k.span(t).unwrap(), scan, "t={t}");
        }
    }

    #[test]
    fn construction_rejects_bad_vectors() {
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0], 1).is_err());
    }

    #[test]
    fn derivative_points() {
        let k = uniform_quintic();
        let flat = vec![3.0; 9];
        for d in 1..=5 {
            let dp = derivative_control_points(&flat, &k, d).unwrap();
            assert_eq!(dp.len(), 9 - d);
            assert!(dp.iter().all(|&v| v == 0.0));
        }
        let c: Vec<f64> = (0..9).map(|v| v as f64).collect();
        assert_eq!(derivative_control_points(&c, &k, 0).unwrap(), c);
        // 5 (c_1 - c_0) / (τ_6 - τ_1) = 5 / 1
        let d1 = derivative_control_points(&c, &k, 1).unwrap();
        assert_eq!(d1[0], 5.0);
        assert!(derivative_control_points(&c, &k, 6).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = KnotVector::new(
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4, 0.9, 1.7, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0],
            5,
        )
        .unwrap();
        let pts: Vec<f64> = vec![0.2, -1.0, 0.7, 2.0, 0.1, 0.4, -0.3, 1.5, 0.9];
        let c = BSplineCurve::new(k, pts).unwrap();
        let dc = c.derivative(1).unwrap();
        let h = 1e-5;
        for i in 1..50 {
            let t = 2.0 * i as f64 / 50.0;
            let fd = (c.eval(t + h).unwrap() - c.eval(t - h).unwrap()) / (2.0 * h);
            let an = dc.eval(t).unwrap();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "t={t}: {fd} vs {an}");
        }
    }
}
