//! Closed-form proximal operators and projections.
//!
//! Every function in the catalog is separable across coordinates, so the
//! vector prox is a loop over [`SimpleFunction::prox_coord`]. Parameters given
//! as a single-element vector are broadcast to every coordinate.

use crate::error::{check_dim, check_finite, IpalmError, Result};
use crate::linalg::{dist, dot, norm};

/// The base function before the optional strong-convexity term.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    Zero,
    /// `Σ w_i |x_i|`.
    WeightedL1 {
        weights: Vec<f64>,
    },
    /// `(w/2)‖x − c‖²`; `center = None` means the origin.
    HalfSquaredL2 {
        weight: f64,
        center: Option<Vec<f64>>,
    },
    /// `s·Σ max(0, a_i − x_i)`.
    HingeSum {
        scale: f64,
        margins: Vec<f64>,
    },
    /// `s·Σ |x_i − c_i|`; `center = None` means the origin.
    AbsSum {
        scale: f64,
        center: Option<Vec<f64>>,
    },
}

/// A catalog function `kind(x) + (mu/2)‖x‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    pub kind: FunctionKind,
    pub mu: f64,
}

#[inline]
fn bcast(v: &[f64], i: usize) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v[i]
    }
}

#[inline]
fn center_at(c: &Option<Vec<f64>>, i: usize) -> f64 {
    c.as_deref().map_or(0.0, |c| bcast(c, i))
}

/// `sign(v)·max(|v| − k, 0)`; `|v| = k` maps to 0.
#[inline]
pub fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

fn check_nonneg(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(IpalmError::InvalidParameter(format!(
            "{what} must be finite and nonnegative, got {x}"
        )))
    }
}

fn check_step(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(IpalmError::InvalidParameter(format!(
            "prox step must be positive, got {t}"
        )))
    }
}

impl SimpleFunction {
    pub fn zero() -> Self {
        Self::from_kind(FunctionKind::Zero)
    }

    fn from_kind(kind: FunctionKind) -> Self {
        Self { kind, mu: 0.0 }
    }

    /// Uniform `w·‖x‖₁`.
    pub fn l1(weight: f64) -> Result<Self> {
        Self::weighted_l1(vec![weight])
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        for &w in &weights {
            check_nonneg(w, "l1 weight")?;
        }
        if weights.is_empty() {
            return Err(IpalmError::InvalidParameter("empty weight vector".into()));
        }
        Ok(Self::from_kind(FunctionKind::WeightedL1 { weights }))
    }

    pub fn half_squared(weight: f64, center: Option<Vec<f64>>) -> Result<Self> {
        check_nonneg(weight, "half-squared weight")?;
        if let Some(c) = &center {
            check_finite(c, "half-squared center")?;
        }
        Ok(Self::from_kind(FunctionKind::HalfSquaredL2 { weight, center }))
    }

    pub fn hinge(scale: f64, margins: Vec<f64>) -> Result<Self> {
        check_nonneg(scale, "hinge scale")?;
        check_finite(&margins, "hinge margins")?;
        if margins.is_empty() {
            return Err(IpalmError::InvalidParameter("empty margin vector".into()));
        }
        Ok(Self::from_kind(FunctionKind::HingeSum { scale, margins }))
    }

    pub fn abs_sum(scale: f64) -> Result<Self> {
        check_nonneg(scale, "abs-sum scale")?;
        Ok(Self::from_kind(FunctionKind::AbsSum { scale, center: None }))
    }

    /// `s·‖x − c‖₁`.
    pub fn abs_sum_centered(scale: f64, center: Vec<f64>) -> Result<Self> {
        check_nonneg(scale, "abs-sum scale")?;
        check_finite(&center, "abs-sum center")?;
        Ok(Self::from_kind(FunctionKind::AbsSum {
            scale,
            center: Some(center),
        }))
    }

    /// Adds `(mu/2)‖x‖²` to the function.
    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        check_nonneg(mu, "mu")?;
        self.mu = mu;
        Ok(self)
    }

    /// Strong-convexity modulus of the whole function.
    pub fn strong_convexity(&self) -> f64 {
        match &self.kind {
            FunctionKind::HalfSquaredL2 { weight, .. } => self.mu + weight,
            _ => self.mu,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mu == 0.0 && matches!(self.kind, FunctionKind::Zero)
    }

    /// Verifies that per-coordinate parameter vectors fit dimension `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let check = |v: &[f64], ctx| {
            if v.len() == 1 {
                Ok(())
            } else {
                check_dim(d, v.len(), ctx)
            }
        };
        match &self.kind {
            FunctionKind::Zero => Ok(()),
            FunctionKind::WeightedL1 { weights } => check(weights, "l1 weights"),
            FunctionKind::HalfSquaredL2 { center, .. } | FunctionKind::AbsSum { center, .. } => {
                center.as_deref().map_or(Ok(()), |c| check(c, "center"))
            }
            FunctionKind::HingeSum { margins, .. } => check(margins, "hinge margins"),
        }
    }

    /// Value of the base function at coordinate `i`.
    #[inline]
    fn kind_coord(&self, i: usize, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Zero => 0.0,
            FunctionKind::WeightedL1 { weights } => bcast(weights, i) * x.abs(),
            FunctionKind::HalfSquaredL2 { weight, center } => {
                let d = x - center_at(center, i);
                0.5 * weight * d * d
            }
            FunctionKind::HingeSum { scale, margins } => scale * (bcast(margins, i) - x).max(0.0),
            FunctionKind::AbsSum { scale, center } => scale * (x - center_at(center, i)).abs(),
        }
    }

    /// Contribution of coordinate `i` to the value.
    #[inline]
    pub fn value_coord(&self, i: usize, x: f64) -> f64 {
        self.kind_coord(i, x) + 0.5 * self.mu * x * x
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            acc += self.value_coord(i, xi);
        }
        acc
    }

    /// Prox of the base function at one coordinate.
    #[inline]
    fn kind_prox_coord(&self, i: usize, v: f64, t: f64) -> f64 {
        match &self.kind {
            FunctionKind::Zero => v,
            FunctionKind::WeightedL1 { weights } => soft_threshold(v, t * bcast(weights, i)),
            FunctionKind::HalfSquaredL2 { weight, center } => {
                (v + t * weight * center_at(center, i)) / (1.0 + t * weight)
            }
            FunctionKind::HingeSum { scale, margins } => {
                let a = bcast(margins, i);
                let st = scale * t;
                if v >= a {
                    v
                } else if v <= a - st {
                    v + st
                } else {
                    a
                }
            }
            FunctionKind::AbsSum { scale, center } => {
                let c = center_at(center, i);
                c + soft_threshold(v - c, scale * t)
            }
        }
    }

    /// Scalar prox at coordinate `i`; `t` must be positive.
    #[inline]
    pub fn prox_coord(&self, i: usize, v: f64, t: f64) -> f64 {
        if self.mu == 0.0 {
            self.kind_prox_coord(i, v, t)
        } else {
            let d = 1.0 + self.mu * t;
            self.kind_prox_coord(i, v / d, t / d)
        }
    }

    /// `argmin_x fn(x) + (1/(2t))‖x − v‖²`.
    pub fn prox(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        check_step(t)?;
        self.check_dim(v.len())?;
        let mut out = vec![0.0; v.len()];
        self.prox_into(v, t, &mut out);
        Ok(out)
    }

    /// Unchecked vector prox.
    pub fn prox_into(&self, v: &[f64], t: f64, out: &mut [f64]) {
        for (i, (o, &vi)) in out.iter_mut().zip(v).enumerate() {
            *o = self.prox_coord(i, vi, t);
        }
    }

    /// A valid Euclidean Lipschitz constant on `R^dim`.
    pub fn lipschitz_constant(&self, dim: usize) -> Result<f64> {
        if self.mu > 0.0 {
            return Err(IpalmError::NotLipschitz("strongly convex quadratic term"));
        }
        let sqrt_d = (dim as f64).sqrt();
        match &self.kind {
            FunctionKind::Zero => Ok(0.0),
            FunctionKind::WeightedL1 { weights } => {
                if weights.len() == 1 {
                    Ok(weights[0] * sqrt_d)
                } else {
                    check_dim(dim, weights.len(), "l1 weights")?;
                    Ok(norm(weights))
                }
            }
            FunctionKind::AbsSum { scale, .. } | FunctionKind::HingeSum { scale, .. } => Ok(scale * sqrt_d),
            FunctionKind::HalfSquaredL2 { weight, .. } => {
                if *weight == 0.0 {
                    Ok(0.0)
                } else {
                    Err(IpalmError::NotLipschitz("half-squared l2 on an unbounded domain"))
                }
            }
        }
    }

    /// Interval `[lo, hi]` forming the domain of the conjugate at coordinate `i`.
    /// Only meaningful for Lipschitz functions (`mu = 0`, no quadratic).
    #[inline]
    pub fn conjugate_domain_coord(&self, i: usize) -> (f64, f64) {
        match &self.kind {
            FunctionKind::Zero => (0.0, 0.0),
            FunctionKind::WeightedL1 { weights } => {
                let w = bcast(weights, i);
                (-w, w)
            }
            FunctionKind::AbsSum { scale, .. } => (-scale, *scale),
            FunctionKind::HingeSum { scale, .. } => (-scale, 0.0),
            FunctionKind::HalfSquaredL2 { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Conjugate `fn*(y)` at coordinate `i`, assuming `y` is in the domain.
    #[inline]
    pub fn conjugate_coord(&self, i: usize, y: f64) -> f64 {
        match &self.kind {
            FunctionKind::Zero | FunctionKind::WeightedL1 { .. } => 0.0,
            FunctionKind::AbsSum { center, .. } => y * center_at(center, i),
            FunctionKind::HingeSum { margins, .. } => y * bcast(margins, i),
            FunctionKind::HalfSquaredL2 { weight, center } => {
                let c = center_at(center, i);
                if *weight == 0.0 {
                    if y == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    y * c + 0.5 * y * y / weight
                }
            }
        }
    }

    /// Clips `y` into the conjugate domain, coordinate by coordinate.
    pub fn project_conjugate_domain(&self, y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = self.conjugate_domain_coord(i);
            *yi = yi.clamp(lo, hi);
        }
    }
}

/// `argmin_x fn(x) + (β/2)‖x − anchor‖² + (1/(2t))‖x − v‖²`.
pub fn prox_shifted_quadratic(f: &SimpleFunction, v: &[f64], t: f64, anchor: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_step(t)?;
    check_nonneg(beta, "beta")?;
    check_dim(v.len(), anchor.len(), "anchor")?;
    f.check_dim(v.len())?;
    let mut out = vec![0.0; v.len()];
    prox_shifted_quadratic_into(f, v, t, anchor, beta, &mut out);
    Ok(out)
}

/// Unchecked form of [`prox_shifted_quadratic`].
pub fn prox_shifted_quadratic_into(f: &SimpleFunction, v: &[f64], t: f64, anchor: &[f64], beta: f64, out: &mut [f64]) {
    let inv_t = 1.0 / t;
    let denom = inv_t + beta;
    let t_eff = 1.0 / denom;
    for i in 0..v.len() {
        out[i] = f.prox_coord(i, (v[i] * inv_t + beta * anchor[i]) * t_eff, t_eff);
    }
}

/// A closed convex set with a cheap projection.
#[derive(Debug, Clone, PartialEq)]
pub enum SimpleSet {
    Point { b: Vec<f64> },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    NonNegativeOrthant,
    Ball { center: Vec<f64>, radius: f64 },
}

impl SimpleSet {
    pub fn point(b: Vec<f64>) -> Result<Self> {
        check_finite(&b, "point")?;
        Ok(SimpleSet::Point { b })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len(), "box bounds")?;
        check_finite(&lower, "box lower")?;
        check_finite(&upper, "box upper")?;
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(IpalmError::InvalidParameter("box lower exceeds upper".into()));
        }
        Ok(SimpleSet::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_finite(&center, "ball center")?;
        check_nonneg(radius, "ball radius")?;
        Ok(SimpleSet::Ball { center, radius })
    }

    /// Fixed dimension of the set, if it has one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            SimpleSet::Point { b } => Some(b.len()),
            SimpleSet::Box { lower, .. } => Some(lower.len()),
            SimpleSet::NonNegativeOrthant => None,
            SimpleSet::Ball { center, .. } => Some(center.len()),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        self.dim().map_or(Ok(()), |k| check_dim(k, d, "set dimension"))
    }

    /// True when every coordinate can be projected independently.
    pub fn is_separable(&self) -> bool {
        !matches!(self, SimpleSet::Ball { .. })
    }

    /// Nearest point of the set.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let mut out = vec![0.0; v.len()];
        self.project_into(v, &mut out);
        Ok(out)
    }

    pub fn project_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            SimpleSet::Ball { center, radius } => {
                let r = dist(v, center);
                if r <= *radius {
                    out.copy_from_slice(v);
                } else {
                    let s = radius / r;
                    for i in 0..v.len() {
                        out[i] = center[i] + s * (v[i] - center[i]);
                    }
                }
            }
            _ => {
                for (i, (o, &vi)) in out.iter_mut().zip(v).enumerate() {
                    *o = self.project_coord(i, vi);
                }
            }
        }
    }

    /// Projection at one coordinate; panics for the ball.
    #[inline]
    pub fn project_coord(&self, i: usize, v: f64) -> f64 {
        match self {
            SimpleSet::Point { b } => b[i],
            SimpleSet::Box { lower, upper } => v.clamp(lower[i], upper[i]),
            SimpleSet::NonNegativeOrthant => v.max(0.0),
            SimpleSet::Ball { .. } => panic!("ball projection is not separable"),
        }
    }

    pub fn distance(&self, v: &[f64]) -> Result<f64> {
        let p = self.project(v)?;
        Ok(dist(v, &p))
    }

    /// Support function `sup_{k ∈ K} ⟨y, k⟩`, finite on the returned domain.
    pub fn support(&self, y: &[f64]) -> f64 {
        match self {
            SimpleSet::Point { b } => dot(y, b),
            SimpleSet::Box { lower, upper } => y
                .iter()
                .enumerate()
                .map(|(i, &yi)| (yi * lower[i]).max(yi * upper[i]))
                .sum(),
            SimpleSet::NonNegativeOrthant => {
                if y.iter().all(|&v| v <= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            SimpleSet::Ball { center, radius } => dot(y, center) + radius * norm(y),
        }
    }

    /// Clips `y` into the domain of the support function.
    pub fn project_support_domain(&self, y: &mut [f64]) {
        if let SimpleSet::NonNegativeOrthant = self {
            y.iter_mut().for_each(|v| *v = v.min(0.0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        let mut best = (f64::INFINITY, lo);
        for k in 0..=n {
            let x = lo + k as f64 * step;
            let v = f(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best.1
    }

    #[test]
    fn soft_threshold_examples() {
        let f = SimpleFunction::l1(1.0).unwrap();
        assert_eq!(f.prox(&[2.5], 1.0).unwrap(), vec![1.5]);
        assert_eq!(f.prox(&[1.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(f.prox(&[-1.0], 1.0).unwrap(), vec![0.0]);
        let z = SimpleFunction::zero();
        assert_eq!(z.prox(&[3.0, -7.5], 0.3).unwrap(), vec![3.0, -7.5]);
    }

    #[test]
    fn hinge_prox_matches_grid() {
        let f = SimpleFunction::hinge(1.0, vec![1.0]).unwrap();
        let (v, t) = (0.5, 0.25);
        let p = f.prox(&[v], t).unwrap()[0];
        let g = grid_argmin(|x| f.value(&[x]) + (x - v).powi(2) / (2.0 * t), -3.0, 3.0, 1e-5);
        assert!((p - g).abs() <= 1e-5, "{p} vs {g}");
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn prox_rejects_nonpositive_step() {
        let f = SimpleFunction::zero();
        assert!(f.prox(&[1.0], 0.0).is_err());
        assert!(prox_shifted_quadratic(&f, &[1.0], -1.0, &[0.0], 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = SimpleSet::point(vec![1.0]).unwrap();
        assert_eq!(p.project(&[3.0]).unwrap(), vec![1.0]);
        let b = SimpleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.project(&[-1.0, 2.0]).unwrap(), vec![0.0, 1.0]);
        let ball = SimpleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let q = ball.project(&[3.0, 4.0]).unwrap();
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[1] - 0.8).abs() < 1e-15);
        assert!(b.project(&[1.0]).is_err());
    }

    #[test]
    fn shifted_quadratic_examples() {
        let z = SimpleFunction::zero();
        let x = prox_shifted_quadratic(&z, &[3.0], 1.0, &[0.0], 2.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);

        let f = SimpleFunction::l1(1.0).unwrap();
        let (v, t, a, beta) = (2.0, 0.5, 1.0, 1.0);
        let p = prox_shifted_quadratic(&f, &[v], t, &[a], beta).unwrap()[0];
        let g = grid_argmin(
            |x| x.abs() + 0.5 * beta * (x - a).powi(2) + (x - v).powi(2) / (2.0 * t),
            -1.0,
            3.0,
            1e-6,
        );
        assert!((p - g).abs() <= 2e-6, "{p} vs {g}");
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(
            SimpleFunction::abs_sum(2.0).unwrap().lipschitz_constant(4).unwrap(),
            4.0
        );
        assert_eq!(
            SimpleFunction::abs_sum(0.0).unwrap().lipschitz_constant(17).unwrap(),
            0.0
        );
        let h = SimpleFunction::hinge(1.0 / 25.0, vec![1.0]).unwrap();
        assert!((h.lipschitz_constant(25).unwrap() - 0.2).abs() < 1e-15);
        let q = SimpleFunction::half_squared(1.0, None).unwrap();
        assert!(matches!(q.lipschitz_constant(3), Err(IpalmError::NotLipschitz(_))));
        let m = SimpleFunction::l1(1.0).unwrap().with_mu(0.5).unwrap();
        assert!(m.lipschitz_constant(3).is_err());
    }

    #[test]
    fn mu_term_is_folded_into_prox() {
        let f = SimpleFunction::l1(0.5).unwrap().with_mu(2.0).unwrap();
        let (v, t) = (3.0, 0.5);
        let p = f.prox(&[v], t).unwrap()[0];
        let g = grid_argmin(|x| f.value(&[x]) + (x - v).powi(2) / (2.0 * t), -4.0, 4.0, 1e-6);
        assert!((p - g).abs() <= 2e-6);
        assert_eq!(f.strong_convexity(), 2.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(SimpleFunction::l1(-1.0).is_err());
        assert!(SimpleFunction::hinge(1.0, vec![f64::NAN]).is_err());
        assert!(SimpleSet::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(SimpleSet::ball(vec![0.0], -1.0).is_err());
        assert!(SimpleSet::point(vec![f64::INFINITY]).is_err());
    }

    proptest! {
        #[test]
        fn projection_fixes_members(v in proptest::collection::vec(-0.5f64..0.5, 3)) {
            let sets = [
                SimpleSet::boxed(vec![-1.0; 3], vec![1.0; 3]).unwrap(),
                SimpleSet::ball(vec![0.0; 3], 1.0).unwrap(),
            ];
            for s in &sets {
                prop_assert_eq!(s.project(&v).unwrap(), v.clone());
            }
            let nn: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            prop_assert_eq!(SimpleSet::NonNegativeOrthant.project(&nn).unwrap(), nn.clone());
        }
    }
}
