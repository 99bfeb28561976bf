//! Compact convex feasible sets in R^d.
//!
//! Every set exposes the linear minimization oracle used by the Frank-Wolfe
//! solvers, plus Euclidean projection for the closed-form kinds (the
//! projected-gradient baseline needs it), the l2 diameter, a membership test
//! and a seeded sampler. Balls are centred at the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::scalar::{all_finite, dist2, dot, norm1, norm2, Scalar};

mod min_norm;

/// Default number of extreme points handed to the samplers in `analysis`.
pub const DEFAULT_EXTREME_LIMIT: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet<T> {
    /// Probability simplex `{x >= 0, sum x = 1}`.
    Simplex { dim: usize },
    L1Ball { dim: usize, radius: T },
    L2Ball { dim: usize, radius: T },
    Box { lower: Vec<T>, upper: Vec<T> },
    /// Convex hull of an explicit vertex list.
    VertexPolytope { vertices: Vec<Vec<T>> },
}

impl<T: Scalar> FeasibleSet<T> {
    pub fn simplex(dim: usize) -> Result<Self> {
        let set = FeasibleSet::Simplex { dim };
        set.validate()?;
        Ok(set)
    }

    pub fn l1_ball(dim: usize, radius: T) -> Result<Self> {
        let set = FeasibleSet::L1Ball { dim, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn l2_ball(dim: usize, radius: T) -> Result<Self> {
        let set = FeasibleSet::L2Ball { dim, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn cube(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let set = FeasibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn polytope(vertices: Vec<Vec<T>>) -> Result<Self> {
        let set = FeasibleSet::VertexPolytope { vertices };
        set.validate()?;
        Ok(set)
    }

    /// Checks the structural invariants. Constructors call this; sets built
    /// by deserialization must call it before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::Simplex { dim } => {
                if *dim < 2 {
                    return Err(invalid("dim", "simplex needs dimension >= 2"));
                }
            }
            FeasibleSet::L1Ball { dim, radius } | FeasibleSet::L2Ball { dim, radius } => {
                if *dim == 0 {
                    return Err(invalid("dim", "dimension must be positive"));
                }
                if !(radius.is_finite() && *radius > T::zero()) {
                    return Err(invalid("radius", "radius must be finite and > 0"));
                }
            }
            FeasibleSet::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(invalid("lower", "dimension must be positive"));
                }
                check_dim(lower.len(), upper.len())?;
                if !all_finite(lower) || !all_finite(upper) {
                    return Err(Error::NonFinite("box bounds"));
                }
                if lower.iter().zip(upper).any(|(l, u)| l >= u) {
                    return Err(invalid("upper", "need lower < upper componentwise"));
                }
            }
            FeasibleSet::VertexPolytope { vertices } => {
                let first = vertices
                    .first()
                    .ok_or_else(|| invalid("vertices", "need at least one vertex"))?;
                if first.is_empty() {
                    return Err(invalid("vertices", "dimension must be positive"));
                }
                for v in vertices {
                    check_dim(first.len(), v.len())?;
                    if !all_finite(v) {
                        return Err(Error::NonFinite("vertices"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Simplex { dim }
            | FeasibleSet::L1Ball { dim, .. }
            | FeasibleSet::L2Ball { dim, .. } => *dim,
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::VertexPolytope { vertices } => vertices[0].len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FeasibleSet::Simplex { .. } => "simplex",
            FeasibleSet::L1Ball { .. } => "l1_ball",
            FeasibleSet::L2Ball { .. } => "l2_ball",
            FeasibleSet::Box { .. } => "box",
            FeasibleSet::VertexPolytope { .. } => "vertex_polytope",
        }
    }

    /// Linear minimization oracle: `argmin_{x in C} <c, x>`.
    ///
    /// Polytopes return a vertex; ties go to the lowest coordinate or vertex
    /// index. A zero cost on the l2 ball returns the centre.
    pub fn lmo(&self, c: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), c.len())?;
        if !all_finite(c) {
            return Err(Error::NonFinite("lmo cost vector"));
        }
        let d = self.dim();
        let out = match self {
            FeasibleSet::Simplex { .. } => {
                let mut x = vec![T::zero(); d];
                x[argmin_first(c.iter().copied())] = T::one();
                x
            }
            FeasibleSet::L1Ball { radius, .. } => {
                let i = argmin_first(c.iter().map(|v| -v.abs()));
                let mut x = vec![T::zero(); d];
                x[i] = if c[i] < T::zero() { *radius } else { -*radius };
                x
            }
            FeasibleSet::L2Ball { radius, .. } => {
                let n = norm2(c);
                if n == T::zero() {
                    vec![T::zero(); d]
                } else {
                    c.iter().map(|&ci| -*radius * ci / n).collect()
                }
            }
            FeasibleSet::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&ci, (&l, &u))| if ci < T::zero() { u } else { l })
                .collect(),
            FeasibleSet::VertexPolytope { vertices } => {
                vertices[argmin_first(vertices.iter().map(|v| dot(c, v)))].clone()
            }
        };
        Ok(out)
    }

    pub fn supports_projection(&self) -> bool {
        !matches!(self, FeasibleSet::VertexPolytope { .. })
    }

    /// Euclidean projection onto the set (not available for vertex polytopes).
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), x.len())?;
        if !all_finite(x) {
            return Err(Error::NonFinite("projection input"));
        }
        match self {
            FeasibleSet::Simplex { .. } => Ok(project_simplex(x, T::one())),
            FeasibleSet::L1Ball { radius, .. } => {
                if norm1(x) <= *radius {
                    return Ok(x.to_vec());
                }
                let abs: Vec<T> = x.iter().map(|v| v.abs()).collect();
                let w = project_simplex(&abs, *radius);
                Ok(w.iter()
                    .zip(x)
                    .map(|(&wi, &xi)| if xi < T::zero() { -wi } else { wi })
                    .collect())
            }
            FeasibleSet::L2Ball { radius, .. } => {
                let n = norm2(x);
                if n <= *radius {
                    Ok(x.to_vec())
                } else {
                    Ok(x.iter().map(|&xi| xi * *radius / n).collect())
                }
            }
            FeasibleSet::Box { lower, upper } => Ok(x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&xi, (&l, &u))| xi.max(l).min(u))
                .collect()),
            FeasibleSet::VertexPolytope { .. } => Err(Error::ProjectionUnavailable),
        }
    }

    /// Exact l2 diameter (maximum pairwise vertex distance for polytopes).
    pub fn diameter(&self) -> T {
        match self {
            FeasibleSet::Simplex { .. } => T::SQRT_2(),
            FeasibleSet::L1Ball { radius, .. } | FeasibleSet::L2Ball { radius, .. } => {
                T::of(2.0) * *radius
            }
            FeasibleSet::Box { lower, upper } => dist2(lower, upper),
            FeasibleSet::VertexPolytope { vertices } => {
                let mut best = T::zero();
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        best = best.max(dist2(a, b));
                    }
                }
                best
            }
        }
    }

    /// Membership with `tol` slack on the defining constraints.
    pub fn contains(&self, x: &[T], tol: T) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        if !all_finite(x) {
            return Ok(false);
        }
        let ok = match self {
            FeasibleSet::Simplex { .. } => {
                let s = x.iter().fold(T::zero(), |a, &v| a + v);
                x.iter().all(|&v| v >= -tol) && (s - T::one()).abs() <= tol
            }
            FeasibleSet::L1Ball { radius, .. } => norm1(x) <= *radius + tol,
            FeasibleSet::L2Ball { radius, .. } => norm2(x) <= *radius + tol,
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol),
            FeasibleSet::VertexPolytope { vertices } => {
                if vertices.iter().any(|v| v.as_slice() == x) {
                    return Ok(true);
                }
                let residual = min_norm::hull_residual(vertices, x);
                // roundoff floor of the min-norm solve
                let scale = vertices
                    .iter()
                    .flatten()
                    .chain(x)
                    .fold(T::one(), |m, v| m.max(v.abs()));
                residual <= tol + T::of(64.0) * T::epsilon() * scale
            }
        };
        Ok(ok)
    }

    /// Deterministic feasible sample for a fixed seed.
    pub fn sample(&self, seed: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    /// Draws one feasible point from `rng`.
    ///
    /// Simplex and vertex-polytope weights use exponential normalization, the
    /// l1 ball uses a `d+1` simplex draw with random signs, the l2 ball a
    /// Gaussian direction with radius `r U^(1/d)`, and the box is uniform per
    /// coordinate.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let d = self.dim();
        match self {
            FeasibleSet::Simplex { .. } => simplex_weights(rng, d),
            FeasibleSet::L1Ball { radius, .. } => {
                let w = simplex_weights(rng, d + 1);
                w[..d]
                    .iter()
                    .map(|&wi| {
                        let sign = if rng.random::<bool>() { T::one() } else { -T::one() };
                        sign * wi * *radius
                    })
                    .collect()
            }
            FeasibleSet::L2Ball { radius, .. } => {
                let dir: Vec<f64> = loop {
                    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    if g.iter().any(|v: &f64| *v != 0.0) {
                        break g;
                    }
                };
                let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let u: f64 = rng.random();
                let r = u.powf(1.0 / d as f64);
                let mut x: Vec<T> = dir.iter().map(|&g| *radius * T::of(r * g / n)).collect();
                // keep roundoff from pushing the point outside
                let xn = norm2(&x);
                if xn > *radius {
                    x.iter_mut().for_each(|v| *v = *v * *radius / xn);
                }
                x
            }
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&l, &u)| {
                    let t = T::of(rng.random::<f64>());
                    (l + t * (u - l)).min(u)
                })
                .collect(),
            FeasibleSet::VertexPolytope { vertices } => {
                let w: Vec<T> = simplex_weights(rng, vertices.len());
                let mut x = vec![T::zero(); d];
                for (wi, v) in w.iter().zip(vertices) {
                    for (xj, &vj) in x.iter_mut().zip(v) {
                        *xj += *wi * vj;
                    }
                }
                x
            }
        }
    }

    /// The `i`-th named extreme point, used for `vertex(i)` starting points.
    ///
    /// Balls index `+r e_0 .. +r e_{d-1}, -r e_0 ..`; box corners take the
    /// upper bound in coordinate `j` when bit `j` of `i` is set.
    pub fn vertex(&self, i: usize) -> Result<Vec<T>> {
        let d = self.dim();
        let out_of_range = || invalid("vertex", format!("index {i} out of range"));
        match self {
            FeasibleSet::Simplex { .. } => {
                if i >= d {
                    return Err(out_of_range());
                }
                let mut x = vec![T::zero(); d];
                x[i] = T::one();
                Ok(x)
            }
            FeasibleSet::L1Ball { radius, .. } | FeasibleSet::L2Ball { radius, .. } => {
                if i >= 2 * d {
                    return Err(out_of_range());
                }
                let mut x = vec![T::zero(); d];
                x[i % d] = if i < d { *radius } else { -*radius };
                Ok(x)
            }
            FeasibleSet::Box { lower, upper } => {
                if d < usize::BITS as usize && i >> d != 0 {
                    return Err(out_of_range());
                }
                Ok((0..d)
                    .map(|j| if (i >> j) & 1 == 1 { upper[j] } else { lower[j] })
                    .collect())
            }
            FeasibleSet::VertexPolytope { vertices } => {
                vertices.get(i).cloned().ok_or_else(out_of_range)
            }
        }
    }

    /// Up to `limit` extreme points (all of them when there are few enough).
    /// The l2 ball contributes the axis points `±r e_i`.
    pub fn extreme_points(&self, limit: usize) -> Vec<Vec<T>> {
        let d = self.dim();
        let count = match self {
            FeasibleSet::Simplex { .. } => d,
            FeasibleSet::L1Ball { .. } | FeasibleSet::L2Ball { .. } => 2 * d,
            FeasibleSet::Box { .. } => {
                if d >= 20 {
                    limit
                } else {
                    1usize << d
                }
            }
            FeasibleSet::VertexPolytope { vertices } => vertices.len(),
        };
        (0..count.min(limit))
            .filter_map(|i| self.vertex(i).ok())
            .collect()
    }
}

fn argmin_first<T: Scalar>(values: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_val = T::infinity();
    for (i, v) in values.enumerate() {
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

fn simplex_weights<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    if total == 0.0 {
        return vec![T::one() / T::of_usize(n); n];
    }
    e.iter().map(|&v| T::of(v / total)).collect()
}

/// Sort-and-threshold projection onto `{w >= 0, sum w = z}`.
pub(crate) fn project_simplex<T: Scalar>(v: &[T], z: T) -> Vec<T> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - z) / T::of_usize(j + 1);
        if uj - t > T::zero() {
            theta = t;
        }
    }
    v.iter().map(|&vi| (vi - theta).max(T::zero())).collect()
}
