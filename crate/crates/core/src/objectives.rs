//! Convex test objectives with gradients, smoothness metadata and known
//! optima, plus sampled estimators for Hölder constants and the modulus of
//! continuity of the gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::FeasibleSet;
use crate::scalar::{axpy, dist2, dot, norm1, norm2, sub, Scalar};

/// Serializable description of an objective; no closures cross this boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind<T> {
    /// `½‖x − b‖²`
    Quadratic { b: Vec<T> },
    /// `‖x − b‖^σ`, `σ ∈ (1, 2]`
    PowerNorm { sigma: T, b: Vec<T> },
    /// One-dimensional `t^α` (extended by zero for `t < 0`), `α ∈ (1, 2)`.
    TAlpha { alpha: T },
    /// `max{x₁, x₂}` in the plane.
    NesterovMax,
    /// `<c, x>`
    Linear { c: Vec<T> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holder<T> {
    pub nu: T,
    /// `None` until filled in, e.g. by [`estimate_holder_constant`].
    pub constant: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Smoothness<T> {
    pub lipschitz: Option<T>,
    pub holder: Option<Holder<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity<T> {
    Convex,
    StrictlyConvex,
    StronglyConvex(T),
    /// Convex but nondifferentiable, or not convex at all. The solver's
    /// gap-certificate invariant does not apply.
    NonconvexOrNonsmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum<T> {
    pub x_star: Vec<T>,
    pub f_star: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective<T> {
    kind: ObjectiveKind<T>,
    smoothness: Smoothness<T>,
    convexity: Convexity<T>,
}

impl<T: Scalar> Objective<T> {
    pub fn quadratic(b: Vec<T>) -> Result<Self> {
        Self::from_kind(ObjectiveKind::Quadratic { b })
    }

    pub fn power_norm(sigma: T, b: Vec<T>) -> Result<Self> {
        Self::from_kind(ObjectiveKind::PowerNorm { sigma, b })
    }

    pub fn t_alpha(alpha: T) -> Result<Self> {
        Self::from_kind(ObjectiveKind::TAlpha { alpha })
    }

    pub fn nesterov_max() -> Self {
        Self::from_kind(ObjectiveKind::NesterovMax).expect("no parameters to validate")
    }

    pub fn linear(c: Vec<T>) -> Result<Self> {
        Self::from_kind(ObjectiveKind::Linear { c })
    }

    /// Validates a descriptor and attaches the metadata for its kind.
    pub fn from_kind(kind: ObjectiveKind<T>) -> Result<Self> {
        let one = T::one();
        let two = T::of(2.0);
        let (smoothness, convexity) = match &kind {
            ObjectiveKind::Quadratic { b } => {
                finite_vec(b, "b")?;
                (
                    Smoothness {
                        lipschitz: Some(one),
                        holder: Some(Holder { nu: one, constant: Some(one) }),
                    },
                    Convexity::StronglyConvex(one),
                )
            }
            ObjectiveKind::PowerNorm { sigma, b } => {
                finite_vec(b, "b")?;
                if !(*sigma > one && *sigma <= two) {
                    return Err(invalid("sigma", "need 1 < sigma <= 2"));
                }
                if *sigma == two {
                    (
                        Smoothness {
                            lipschitz: Some(two),
                            holder: Some(Holder { nu: one, constant: Some(two) }),
                        },
                        Convexity::StronglyConvex(two),
                    )
                } else {
                    (
                        Smoothness {
                            lipschitz: None,
                            holder: Some(Holder { nu: *sigma - one, constant: None }),
                        },
                        Convexity::StrictlyConvex,
                    )
                }
            }
            ObjectiveKind::TAlpha { alpha } => {
                if !(*alpha > one && *alpha < two) {
                    return Err(invalid("alpha", "need 1 < alpha < 2"));
                }
                (
                    Smoothness {
                        lipschitz: None,
                        holder: Some(Holder { nu: *alpha - one, constant: Some(*alpha) }),
                    },
                    Convexity::StrictlyConvex,
                )
            }
            ObjectiveKind::NesterovMax => (Smoothness::default(), Convexity::NonconvexOrNonsmooth),
            ObjectiveKind::Linear { c } => {
                finite_vec(c, "c")?;
                if c.iter().all(|v| *v == T::zero()) {
                    return Err(invalid("c", "linear objective needs a nonzero cost"));
                }
                (Smoothness::default(), Convexity::Convex)
            }
        };
        Ok(Objective { kind, smoothness, convexity })
    }

    pub fn kind(&self) -> &ObjectiveKind<T> {
        &self.kind
    }

    pub fn smoothness(&self) -> &Smoothness<T> {
        &self.smoothness
    }

    pub fn convexity(&self) -> &Convexity<T> {
        &self.convexity
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.convexity, Convexity::NonconvexOrNonsmooth)
    }

    /// Returns a copy whose Hölder metadata carries `constant`.
    pub fn with_holder_constant(mut self, constant: T) -> Self {
        if let Some(h) = self.smoothness.holder.as_mut() {
            h.constant = Some(constant);
        }
        self
    }

    /// Dimension the objective is defined in.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ObjectiveKind::Quadratic { b } | ObjectiveKind::PowerNorm { b, .. } => b.len(),
            ObjectiveKind::TAlpha { .. } => 1,
            ObjectiveKind::NesterovMax => 2,
            ObjectiveKind::Linear { c } => c.len(),
        }
    }

    pub fn eval(&self, x: &[T]) -> T {
        match &self.kind {
            ObjectiveKind::Quadratic { b } => {
                let d = dist2(x, b);
                T::of(0.5) * d * d
            }
            ObjectiveKind::PowerNorm { sigma, b } => dist2(x, b).powf(*sigma),
            ObjectiveKind::TAlpha { alpha } => x[0].max(T::zero()).powf(*alpha),
            ObjectiveKind::NesterovMax => x[0].max(x[1]),
            ObjectiveKind::Linear { c } => dot(c, x),
        }
    }

    /// Gradient. At the power-norm centre `x = b` this is `0`; on the Nesterov
    /// diagonal `x₁ = x₂` it is `(1, 0)`.
    pub fn grad(&self, x: &[T]) -> Vec<T> {
        match &self.kind {
            ObjectiveKind::Quadratic { b } => sub(x, b),
            ObjectiveKind::PowerNorm { sigma, b } => {
                let r = sub(x, b);
                let n = norm2(&r);
                if n == T::zero() {
                    return vec![T::zero(); r.len()];
                }
                let scale = *sigma * n.powf(*sigma - T::of(2.0));
                r.into_iter().map(|v| scale * v).collect()
            }
            ObjectiveKind::TAlpha { alpha } => {
                let t = x[0].max(T::zero());
                vec![*alpha * t.powf(*alpha - T::one())]
            }
            ObjectiveKind::NesterovMax => {
                if x[0] < x[1] {
                    vec![T::zero(), T::one()]
                } else {
                    vec![T::one(), T::zero()]
                }
            }
            ObjectiveKind::Linear { c } => c.clone(),
        }
    }

    /// Closed-form minimizer over `set`, when one is known.
    pub fn known_optimum(&self, set: &FeasibleSet<T>) -> Option<Optimum<T>> {
        if set.dim() != self.dim() {
            return None;
        }
        let nearest_to = |b: &[T]| -> Option<Vec<T>> {
            if set.supports_projection() {
                set.project(b).ok()
            } else if set.contains(b, T::zero()).ok()? {
                Some(b.to_vec())
            } else {
                None
            }
        };
        match &self.kind {
            ObjectiveKind::Quadratic { b } | ObjectiveKind::PowerNorm { b, .. } => {
                let x_star = nearest_to(b)?;
                let f_star = self.eval(&x_star);
                Some(Optimum { x_star, f_star })
            }
            ObjectiveKind::TAlpha { .. } => match set {
                FeasibleSet::Box { lower, upper } => {
                    let x_star = vec![T::zero().max(lower[0]).min(upper[0])];
                    let f_star = self.eval(&x_star);
                    Some(Optimum { x_star, f_star })
                }
                _ => None,
            },
            ObjectiveKind::NesterovMax => match set {
                FeasibleSet::L2Ball { radius, .. } => {
                    let v = -*radius * T::FRAC_1_SQRT_2();
                    Some(Optimum { x_star: vec![v, v], f_star: v })
                }
                _ => None,
            },
            ObjectiveKind::Linear { c } => {
                let x_star = set.lmo(c).ok()?;
                let f_star = dot(c, &x_star);
                Some(Optimum { x_star, f_star })
            }
        }
    }
}

fn finite_vec<T: Scalar>(v: &[T], name: &'static str) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(name, "vector must be nonempty"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    Ok(())
}

/// The nonsmooth convex part `g` of a composite objective `f + g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompositePart<T> {
    /// `λ‖x‖₁`
    L1 { lambda: T },
    Zero,
}

impl<T: Scalar> CompositePart<T> {
    pub fn l1(lambda: T) -> Result<Self> {
        let g = CompositePart::L1 { lambda };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if let CompositePart::L1 { lambda } = self {
            if !(lambda.is_finite() && *lambda >= T::zero()) {
                return Err(invalid("lambda", "need finite lambda >= 0"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[T]) -> T {
        match self {
            CompositePart::L1 { lambda } => *lambda * norm1(x),
            CompositePart::Zero => T::zero(),
        }
    }

    /// An element of the subdifferential (`0` in kinked coordinates).
    pub fn subgrad(&self, x: &[T]) -> Vec<T> {
        match self {
            CompositePart::L1 { lambda } => x
                .iter()
                .map(|&v| {
                    if v > T::zero() {
                        *lambda
                    } else if v < T::zero() {
                        -*lambda
                    } else {
                        T::zero()
                    }
                })
                .collect(),
            CompositePart::Zero => vec![T::zero(); x.len()],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CompositePart::L1 { lambda } => *lambda == T::zero(),
            CompositePart::Zero => true,
        }
    }
}

/// Sampled lower estimate of the Hölder constant of the gradient:
/// `max ‖∇f(x) − ∇f(y)‖ / ‖x − y‖^ν` over all extreme-point pairs and
/// `n_pairs` random pairs. Pairs closer than `1e-12` are skipped.
pub fn estimate_holder_constant<T: Scalar>(
    obj: &Objective<T>,
    set: &FeasibleSet<T>,
    nu: T,
    n_pairs: usize,
    seed: u64,
) -> Result<T> {
    if !(nu > T::zero() && nu <= T::one()) {
        return Err(invalid("nu", "need 0 < nu <= 1"));
    }
    if n_pairs == 0 {
        return Err(invalid("n_pairs", "need at least one pair"));
    }
    check_dim(set.dim(), obj.dim())?;
    let min_dist = T::of(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extremes = set.extreme_points(32);
    let mut best: Option<T> = None;
    let mut consider = |x: &[T], y: &[T]| {
        let d = dist2(x, y);
        if d < min_dist {
            return;
        }
        let ratio = dist2(&obj.grad(x), &obj.grad(y)) / d.powf(nu);
        best = Some(best.map_or(ratio, |b: T| b.max(ratio)));
    };
    for (i, a) in extremes.iter().enumerate() {
        for b in &extremes[i + 1..] {
            consider(a, b);
        }
    }
    for _ in 0..n_pairs {
        let x = set.sample_with(&mut rng);
        let y = set.sample_with(&mut rng);
        consider(&x, &y);
    }
    best.ok_or(Error::DegenerateSample)
}

/// Sampled modulus of continuity `ω̂(τ)` of the gradient.
///
/// For each base pair `(x, z)` and each `τ` the partner is pulled along the
/// segment to `y = x + min(1, τ/‖z − x‖)(z − x)`, which stays feasible and has
/// `‖x − y‖ ≤ τ`. The table is made nondecreasing by a running maximum.
pub fn modulus_of_continuity<T: Scalar>(
    obj: &Objective<T>,
    set: &FeasibleSet<T>,
    taus: &[T],
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<(T, T)>> {
    if taus.iter().any(|t| !(*t > T::zero())) || taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("taus", "need strictly increasing positive radii"));
    }
    check_dim(set.dim(), obj.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extremes = set.extreme_points(32);
    let mut omega = vec![T::zero(); taus.len()];
    let mut scan = |x: &[T], z: &[T]| {
        let dz = sub(z, x);
        let len = norm2(&dz);
        if len == T::zero() {
            return;
        }
        let gx = obj.grad(x);
        for (t, w) in taus.iter().zip(omega.iter_mut()) {
            let y = axpy(x, (*t / len).min(T::one()), &dz);
            *w = w.max(dist2(&gx, &obj.grad(&y)));
        }
    };
    for a in &extremes {
        for b in &extremes {
            scan(a, b);
        }
    }
    for _ in 0..n_pairs {
        let x = set.sample_with(&mut rng);
        let z = set.sample_with(&mut rng);
        scan(&x, &z);
        scan(&z, &x);
    }
    let mut running = T::zero();
    Ok(taus
        .iter()
        .zip(omega)
        .map(|(&t, w)| {
            running = running.max(w);
            (t, running)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        let q = Objective::quadratic(vec![0.0, 0.0]).unwrap();
        assert_eq!(q.eval(&[1.0, 0.0]), 0.5);
        assert_eq!(q.grad(&[1.0, 0.0]), vec![1.0, 0.0]);
        let q = Objective::quadratic(vec![1.0, 1.0]).unwrap();
        assert_eq!(q.eval(&[1.0, 1.0]), 0.0);
        assert_eq!(q.grad(&[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(q.smoothness().lipschitz, Some(1.0));
        assert_eq!(*q.convexity(), Convexity::StronglyConvex(1.0));
    }

    #[test]
    fn quadratic_optimum_on_simplex() {
        for n in [2usize, 5, 100] {
            let q = Objective::quadratic(vec![0.0; n]).unwrap();
            let opt = q.known_optimum(&FeasibleSet::simplex(n).unwrap()).unwrap();
            assert!((opt.f_star - 1.0 / (2.0 * n as f64)).abs() < 1e-15);
            assert!(opt.x_star.iter().all(|&v| (v - 1.0 / n as f64).abs() < 1e-15));
        }
    }

    #[test]
    fn power_norm_examples() {
        let p = Objective::power_norm(2.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(p.grad(&[0.5, -1.0]), vec![1.0, -2.0]);
        let p = Objective::power_norm(1.5, vec![0.0, 0.0]).unwrap();
        assert_eq!(p.eval(&[1.0, 0.0]), 1.0);
        assert_eq!(p.grad(&[1.0, 0.0]), vec![1.5, 0.0]);
        let p = Objective::power_norm(1.25, vec![0.3, -0.2]).unwrap();
        assert_eq!(p.grad(&[0.3, -0.2]), vec![0.0, 0.0]);
        assert!(Objective::power_norm(1.0, vec![0.0]).is_err());
        assert!(Objective::power_norm(2.5, vec![0.0]).is_err());
        assert_eq!(p.smoothness().holder.unwrap().constant, None);
        let p = p.with_holder_constant(3.0);
        assert_eq!(p.smoothness().holder.unwrap().constant, Some(3.0));
    }

    #[test]
    fn t_alpha_examples() {
        let f = Objective::t_alpha(1.5).unwrap();
        assert_eq!(f.eval(&[1.0]), 1.0);
        assert_eq!(f.grad(&[1.0]), vec![1.5]);
        assert_eq!(f.eval(&[0.0]), 0.0);
        assert_eq!(f.grad(&[0.0]), vec![0.0]);
        assert!(Objective::t_alpha(2.0).is_err());
        assert!(Objective::t_alpha(1.0).is_err());
    }

    #[test]
    fn nesterov_examples() {
        let f = Objective::nesterov_max();
        assert_eq!(f.grad(&[0.3, 0.7]), vec![0.0, 1.0]);
        assert_eq!(f.grad(&[0.7, 0.3]), vec![1.0, 0.0]);
        assert_eq!(f.grad(&[0.5, 0.5]), vec![1.0, 0.0]);
        let opt = f.known_optimum(&FeasibleSet::l2_ball(2, 1.0).unwrap()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((opt.f_star + s).abs() < 1e-15);
        assert!((opt.f_star + 0.70711).abs() < 1e-5);
        assert!(opt.x_star.iter().all(|v| (v + s).abs() < 1e-15));
    }

    #[test]
    fn linear_examples() {
        let f = Objective::linear(vec![1.0, 2.0, 3.0]).unwrap();
        let opt = f.known_optimum(&FeasibleSet::simplex(3).unwrap()).unwrap();
        assert_eq!(opt.x_star, vec![1.0, 0.0, 0.0]);
        assert_eq!(opt.f_star, 1.0);
        assert_eq!(f.grad(&[0.1, 0.2, 0.7]), f.grad(&[0.5, 0.5, 0.0]));
        assert!(Objective::linear(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn linear_sharp_constant_by_grid() {
        // min over the simplex grid of (f(x) - f*) / ‖x − e₁‖
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let x = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                let d = ((x[0] - 1.0).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt();
                if d > 1e-12 {
                    best = best.min((x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0) / d);
                }
            }
        }
        assert!((best - 1.0 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn holder_estimates() {
        let simplex = FeasibleSet::simplex(4).unwrap();
        let q = Objective::quadratic(vec![0.0; 4]).unwrap();
        let l = estimate_holder_constant(&q, &simplex, 1.0, 10_000, 7).unwrap();
        assert!(l <= 1.0 + 1e-9 && l >= 0.9);

        let unit = FeasibleSet::cube(vec![0.0], vec![1.0]).unwrap();
        let f = Objective::t_alpha(1.5).unwrap();
        let l = estimate_holder_constant(&f, &unit, 0.5, 1000, 3).unwrap();
        assert!(l > 0.0 && l <= 1.5 + 1e-12);
        assert!((l - 1.5f64).abs() < 1e-12);

        let lin = Objective::linear(vec![1.0, -1.0, 2.0, 0.5]).unwrap();
        assert_eq!(estimate_holder_constant(&lin, &simplex, 0.3, 100, 1).unwrap(), 0.0);
        assert!(estimate_holder_constant(&q, &simplex, 1.5, 10, 1).is_err());
    }

    #[test]
    fn holder_degenerate_pairs() {
        let poly = FeasibleSet::polytope(vec![vec![0.5, 0.5]]).unwrap();
        let q = Objective::quadratic(vec![0.0; 2]).unwrap();
        assert!(matches!(
            estimate_holder_constant(&q, &poly, 1.0, 10, 0),
            Err(Error::DegenerateSample)
        ));
    }

    #[test]
    fn modulus_examples() {
        let taus: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        let ball = FeasibleSet::l2_ball(3, 1.0).unwrap();
        let q = Objective::quadratic(vec![0.1, 0.0, -0.2]).unwrap();
        let table = modulus_of_continuity(&q, &ball, &taus, 200, 5).unwrap();
        assert!(table.iter().all(|&(t, w)| w <= t + 1e-12));
        assert!(table.windows(2).all(|w| w[0].1 <= w[1].1));

        let lin = Objective::linear(vec![1.0, 2.0, 3.0]).unwrap();
        let table = modulus_of_continuity(&lin, &ball, &taus, 50, 5).unwrap();
        assert!(table.iter().all(|&(_, w)| w == 0.0));

        let unit = FeasibleSet::cube(vec![0.0], vec![1.0]).unwrap();
        let f = Objective::t_alpha(1.5).unwrap();
        let table = modulus_of_continuity(&f, &unit, &taus, 500, 5).unwrap();
        assert!(table.iter().all(|&(t, w)| w <= 1.5 * t.sqrt() + 1e-12));

        assert!(modulus_of_continuity(&q, &ball, &[0.2, 0.1], 10, 0).is_err());
    }

    #[test]
    fn composite_part() {
        let g = CompositePart::l1(0.5).unwrap();
        assert_eq!(g.eval(&[1.0, -2.0, 0.0]), 1.5);
        assert_eq!(g.subgrad(&[1.0, -2.0, 0.0]), vec![0.5, -0.5, 0.0]);
        assert!(CompositePart::l1(-1.0).is_err());
        let z = CompositePart::<f64>::Zero;
        assert_eq!(z.eval(&[3.0]), 0.0);
        assert!(z.is_zero());
    }
}
