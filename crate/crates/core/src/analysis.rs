//! Curvature constants of order σ, closed-form rate bounds, the auxiliary
//! sequence recursions behind them, and empirical rate fitting.
//!
//! The curvature constant of order `σ ∈ (1, 2]` of `f` over `C` is
//!
//! ```text
//! C_f^(σ) = sup_{x, s ∈ C, γ ∈ (0,1]} (σ / γ^σ) (f(y) − f(x) − <y − x, ∇f(x)>),  y = x + γ(s − x)
//! ```
//!
//! and reduces to the classical curvature constant at `σ = 2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{FeasibleSet, DEFAULT_EXTREME_LIMIT};
use crate::objectives::Objective;
use crate::scalar::{all_finite, axpy, dot, sub, to_f64_vec, Scalar};
use crate::solver::SolveTrace;
use crate::stepsize::StepsizeRule;

/// Multiplier applied to sampled constants before they enter a bound.
pub const DEFAULT_SAFETY_FACTOR: f64 = 1.2;

/// Minimum number of usable points for [`fit_rate`].
pub const MIN_FIT_POINTS: usize = 10;

/// Quarter-decade grid `10^-3, 10^-2.75, ..., 10^-0.25, 1`.
pub fn default_gamma_grid<T: Scalar>() -> Vec<T> {
    log_grid(3, 4)
}

/// `per_decade` log-spaced points per decade from `10^-decades` up to 1.
pub fn log_grid<T: Scalar>(decades: u32, per_decade: u32) -> Vec<T> {
    let n = decades * per_decade;
    (0..=n)
        .map(|i| {
            if i == n {
                T::one()
            } else {
                T::of(10f64.powf(-(decades as f64) + i as f64 / per_decade as f64))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate<T> {
    pub sigma: T,
    /// Supremum over the sampled triples; a lower estimate of `C_f^(σ)`.
    pub sampled_value: T,
    /// `L_ν δ^(1+ν)` when the objective carries a Hölder constant with
    /// `1 + ν = σ`.
    pub holder_upper_bound: Option<T>,
    /// Numerical modulus-of-continuity bound, when computed.
    pub modulus_upper_bound: Option<T>,
    pub n_samples: usize,
    pub extreme_pairs: usize,
    pub seed: u64,
    pub gamma_grid: Vec<T>,
}

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if sigma > T::one() && sigma <= T::of(2.0) {
        Ok(())
    } else {
        Err(invalid("sigma", "need 1 < sigma <= 2"))
    }
}

fn check_gamma_grid<T: Scalar>(grid: &[T], need_one: bool) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|g| !(*g > T::zero() && *g <= T::one())) {
        return Err(invalid("gamma_grid", "entries must lie in (0, 1]"));
    }
    if need_one && !grid.iter().any(|g| *g == T::one()) {
        return Err(invalid("gamma_grid", "grid must include 1"));
    }
    Ok(())
}

/// Scaled linearization gap `(σ/γ^σ)(f(y) − f(x) − <∇f(x), y − x>)`,
/// clipped at zero.
fn curvature_term<T: Scalar>(obj: &Objective<T>, x: &[T], fx: T, gx: &[T], dir: &[T], gamma: T, sigma: T) -> T {
    let y = axpy(x, gamma, dir);
    let inner = obj.eval(&y) - fx - gamma * dot(gx, dir);
    sigma / gamma.powf(sigma) * inner.max(T::zero())
}

/// Sampled lower estimate of `C_f^(σ)`.
///
/// Maximizes the curvature expression over every ordered pair of extreme
/// points (for the closed-form kinds; see [`FeasibleSet::extreme_points`])
/// and `n_samples` random pairs `(x, s)`, for every `γ` in `gamma_grid`.
/// Random pairs come from one seeded stream, so a larger `n_samples` with the
/// same seed evaluates a superset of triples.
pub fn estimate_curvature<T: Scalar>(
    obj: &Objective<T>,
    set: &FeasibleSet<T>,
    sigma: T,
    n_samples: usize,
    gamma_grid: &[T],
    seed: u64,
) -> Result<CurvatureEstimate<T>> {
    check_sigma(sigma)?;
    check_gamma_grid(gamma_grid, true)?;
    if n_samples == 0 {
        return Err(invalid("n_samples", "need at least one sample"));
    }
    check_dim(set.dim(), obj.dim())?;

    let mut best = T::zero();
    let mut scan = |x: &[T], s: &[T]| -> Result<()> {
        let gx = obj.grad(x);
        let fx = obj.eval(x);
        if !all_finite(&gx) || !fx.is_finite() {
            return Err(Error::GradientUnavailable(to_f64_vec(x)));
        }
        let dir = sub(s, x);
        for &g in gamma_grid {
            best = best.max(curvature_term(obj, x, fx, &gx, &dir, g, sigma));
        }
        Ok(())
    };

    let extremes = set.extreme_points(DEFAULT_EXTREME_LIMIT);
    let mut extreme_pairs = 0;
    for (i, x) in extremes.iter().enumerate() {
        for (j, s) in extremes.iter().enumerate() {
            if i != j {
                scan(x, s)?;
                extreme_pairs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let x = set.sample_with(&mut rng);
        let s = set.sample_with(&mut rng);
        scan(&x, &s)?;
    }

    let delta = set.diameter();
    let smooth = obj.smoothness();
    let holder_upper_bound = match (smooth.holder, smooth.lipschitz) {
        (Some(h), _) if h.constant.is_some() && (T::one() + h.nu - sigma).abs() <= T::epsilon() * T::of(8.0) => {
            Some(curvature_bound_holder(h.constant.unwrap(), h.nu, delta)?)
        }
        (_, Some(l)) if sigma == T::of(2.0) => Some(curvature_bound_holder(l, T::one(), delta)?),
        _ => None,
    };

    Ok(CurvatureEstimate {
        sigma,
        sampled_value: best,
        holder_upper_bound,
        modulus_upper_bound: None,
        n_samples,
        extreme_pairs,
        seed,
        gamma_grid: gamma_grid.to_vec(),
    })
}

/// Result of refining the `γ` grid towards zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRefinement<T> {
    /// `(smallest γ in the grid, sampled value)` per refinement level.
    pub levels: Vec<(T, T)>,
    pub threshold: T,
    /// First level whose sampled value exceeded `threshold`.
    pub exceeded_at: Option<usize>,
}

/// Operational divergence probe: re-estimates the curvature with grids
/// reaching down to `10^-1, 10^-2, ..., 10^-max_decades` and reports the
/// first level whose value exceeds `threshold`. No finite computation
/// certifies an infinite constant, so this is the check used for one.
pub fn curvature_refinement<T: Scalar>(
    obj: &Objective<T>,
    set: &FeasibleSet<T>,
    sigma: T,
    n_samples: usize,
    max_decades: u32,
    threshold: T,
    seed: u64,
) -> Result<CurvatureRefinement<T>> {
    let mut levels = Vec::new();
    let mut exceeded_at = None;
    for decades in 1..=max_decades {
        let grid = log_grid::<T>(decades, 2);
        let est = estimate_curvature(obj, set, sigma, n_samples, &grid, seed)?;
        levels.push((grid[0], est.sampled_value));
        if est.sampled_value > threshold {
            exceeded_at = Some(levels.len() - 1);
            break;
        }
    }
    Ok(CurvatureRefinement { levels, threshold, exceeded_at })
}

/// `L_ν δ^(1+ν)`, an upper bound on `C_f^(1+ν)` for a `ν`-Hölder gradient.
pub fn curvature_bound_holder<T: Scalar>(l_nu: T, nu: T, delta: T) -> Result<T> {
    if !(l_nu > T::zero()) {
        return Err(invalid("l_nu", "need L_nu > 0"));
    }
    if !(nu > T::zero() && nu <= T::one()) {
        return Err(invalid("nu", "need 0 < nu <= 1"));
    }
    if !(delta > T::zero()) {
        return Err(invalid("delta", "need delta > 0"));
    }
    Ok(l_nu * delta.powf(T::one() + nu))
}

/// `∫_0^t ω(τ) dτ` for the piecewise-linear interpolant through `(0, 0)`
/// and the table, held constant past the last entry.
fn integrate_modulus<T: Scalar>(table: &[(T, T)], t: T) -> T {
    let mut acc = T::zero();
    let mut prev = (T::zero(), T::zero());
    let half = T::of(0.5);
    for &(tau, w) in table {
        if tau <= prev.0 {
            prev = (tau, w);
            continue;
        }
        if t <= tau {
            let frac = (t - prev.0) / (tau - prev.0);
            let w_t = prev.1 + frac * (w - prev.1);
            return acc + half * (prev.1 + w_t) * (t - prev.0);
        }
        acc += half * (prev.1 + w) * (tau - prev.0);
        prev = (tau, w);
    }
    acc + prev.1 * (t - prev.0)
}

/// Numerical modulus bound `sup_γ (σ/γ^σ) ∫_0^{γδ} ω(τ) dτ` over
/// `gamma_grid`, using the trapezoid rule on the tabulated modulus.
pub fn curvature_bound_modulus<T: Scalar>(table: &[(T, T)], sigma: T, delta: T, gamma_grid: &[T]) -> Result<T> {
    if table.is_empty() {
        return Err(invalid("omega_table", "table is empty"));
    }
    if table.windows(2).any(|w| w[1].1 < w[0].1 || w[1].0 <= w[0].0) {
        return Err(invalid("omega_table", "table must be increasing in tau and nondecreasing in omega"));
    }
    check_gamma_grid(gamma_grid, false)?;
    Ok(gamma_grid
        .iter()
        .map(|&g| sigma / g.powf(sigma) * integrate_modulus(table, g * delta))
        .fold(T::zero(), T::max))
}

/// Lower bound `σ μ_σ δ^σ` on `C_f^(σ)` for `f` strongly convex with power
/// `σ` and constant `μ_σ`. Diagnostic only.
pub fn curvature_lower_bound_power_convex<T: Scalar>(mu_sigma: T, sigma: T, delta: T) -> T {
    sigma * mu_sigma * delta.powf(sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// `θ / (1 + θ^(1/(σ−1)) C^(1/(1−σ)) k / σ)^(σ−1)`
    LineSearchOrderSigma,
    /// `σ^σ Δ / k^(σ−1)`, or `/ (k+1)^(σ−1)` when `shifted`.
    OpenLoopOrderSigma { shifted: bool },
    /// `2 C / (k + 2)`
    HarmonicClassic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound<T> {
    pub kind: RateKind,
    /// `θ₀` for the line-search bound, `Δ` for open loop, unused otherwise.
    pub scale: T,
    pub sigma: T,
    pub c_sigma: T,
}

impl<T: Scalar> RateBound<T> {
    pub fn bound(&self, k: usize) -> T {
        let kk = T::of_usize(k);
        let one = T::one();
        let s = self.sigma;
        match self.kind {
            RateKind::LineSearchOrderSigma => {
                let rate = self.scale.powf(one / (s - one)) * self.c_sigma.powf(one / (one - s)) / s;
                self.scale / (one + rate * kk).powf(s - one)
            }
            RateKind::OpenLoopOrderSigma { shifted } => {
                let denom = if shifted { kk + one } else { kk };
                s.powf(s) * self.scale / denom.powf(s - one)
            }
            RateKind::HarmonicClassic => T::of(2.0) * self.c_sigma / (kk + T::of(2.0)),
        }
    }

    /// `(k, bound(k))` for `k` in `from..=to`.
    pub fn curve(&self, from: usize, to: usize) -> Vec<(usize, T)> {
        (from..=to).map(|k| (k, self.bound(k))).collect()
    }
}

/// Bound for line-minimization stepsizes with `θ₀ = f(x₀) − f*`.
pub fn rate_bound_line_search<T: Scalar>(theta0: T, sigma: T, c_sigma: T) -> Result<RateBound<T>> {
    check_sigma(sigma)?;
    if !(theta0 > T::zero()) {
        return Err(invalid("theta0", "need theta0 > 0"));
    }
    if !(c_sigma > T::zero()) {
        return Err(invalid("c_sigma", "need C_sigma > 0"));
    }
    Ok(RateBound { kind: RateKind::LineSearchOrderSigma, scale: theta0, sigma, c_sigma })
}

/// Open-loop bound `σ^σ Δ / k^(σ−1)`; `shifted` selects the `(k+1)` form
/// used for the composite method.
pub fn rate_bound_open_loop<T: Scalar>(delta: T, sigma: T, shifted: bool) -> Result<RateBound<T>> {
    check_sigma(sigma)?;
    if !(delta > T::zero()) {
        return Err(invalid("delta", "need Delta > 0"));
    }
    Ok(RateBound { kind: RateKind::OpenLoopOrderSigma { shifted }, scale: delta, sigma, c_sigma: T::zero() })
}

/// `2 C / (k + 2)` for the classical `2/(k+2)` schedule.
pub fn rate_bound_harmonic<T: Scalar>(c_f: T) -> Result<RateBound<T>> {
    if !(c_f > T::zero()) {
        return Err(invalid("c_f", "need C_f > 0"));
    }
    Ok(RateBound { kind: RateKind::HarmonicClassic, scale: T::zero(), sigma: T::of(2.0), c_sigma: c_f })
}

/// `Δ = max{θ₀, C^(σ)/σ}`.
pub fn open_loop_delta<T: Scalar>(theta0: T, c_sigma: T, sigma: T) -> T {
    theta0.max(c_sigma / sigma)
}

/// `β₀ = 1`, `β_{k+1} = (1 − γ_k) β_k + γ_k^σ` for `k < K`.
pub fn beta_recursion<T: Scalar>(rule: &StepsizeRule<T>, sigma: T, big_k: usize) -> Result<Vec<T>> {
    check_sigma(sigma)?;
    if big_k == 0 {
        return Err(invalid("K", "need K >= 1"));
    }
    rule.validate()?;
    let mut out = Vec::with_capacity(big_k + 1);
    let mut beta = T::one();
    out.push(beta);
    for gamma in rule.schedule()?.take(big_k) {
        beta = (T::one() - gamma) * beta + gamma.powf(sigma);
        out.push(beta);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBoundReport<T> {
    pub holds: bool,
    pub violations: usize,
    pub first_violation: Option<usize>,
    /// `max_k β_k k^(σ−1) / σ^σ`; the bound holds iff this is `≤ 1`.
    pub worst_ratio: T,
    pub worst_k: usize,
}

/// Checks `β_k ≤ σ^σ / k^(σ−1)` for every `k ≥ 1`.
pub fn check_beta_bound<T: Scalar>(betas: &[T], sigma: T) -> BetaBoundReport<T> {
    let xi = sigma.powf(sigma);
    let mut report = BetaBoundReport {
        holds: true,
        violations: 0,
        first_violation: None,
        worst_ratio: T::zero(),
        worst_k: 0,
    };
    for (k, &b) in betas.iter().enumerate().skip(1) {
        let ratio = b * T::of_usize(k).powf(sigma - T::one()) / xi;
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_k = k;
        }
        if ratio > T::one() {
            report.violations += 1;
            report.holds = false;
            report.first_violation.get_or_insert(k);
        }
    }
    report
}

/// Envelope `α_k ≤ α₀ (1 + η α₀^η Σ_{i<k} β_i)^(−1/η)` for sequences with
/// `α_{k+1} ≤ α_k − β_k α_k^(1+η)`. Returns `betas.len() + 1` values.
pub fn polyak_sequence_bound<T: Scalar>(alpha0: T, betas: &[T], eta: T) -> Result<Vec<T>> {
    if !(alpha0 >= T::zero()) {
        return Err(invalid("alpha0", "need alpha0 >= 0"));
    }
    if !(eta > T::zero()) {
        return Err(invalid("eta", "need eta > 0"));
    }
    if betas.iter().any(|b| !(*b >= T::zero())) {
        return Err(invalid("betas", "need betas >= 0"));
    }
    let mut out = Vec::with_capacity(betas.len() + 1);
    let scale = eta * alpha0.powf(eta);
    let mut sum = T::zero();
    out.push(alpha0);
    for &b in betas {
        sum += b;
        out.push(alpha0 * (T::one() + scale * sum).powf(-T::one() / eta));
    }
    Ok(out)
}

/// Runs `α_{k+1} = α_k − β_k α_k^(1+η)` with equality.
pub fn polyak_recursion<T: Scalar>(alpha0: T, betas: &[T], eta: T) -> Vec<T> {
    let mut out = Vec::with_capacity(betas.len() + 1);
    let mut a = alpha0;
    out.push(a);
    for &b in betas {
        a = a - b * a.powf(T::one() + eta);
        out.push(a);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XuRecursionReport<T> {
    pub steps: usize,
    pub final_alpha: T,
    /// Largest `α_k` over the last tenth of the horizon.
    pub tail_max: T,
    /// (a) `η_k → 0`: largest `η` in the last tenth is below `0.01`.
    pub eta_vanishes: bool,
    /// (b) `Σ η_k = ∞`, judged by the second half of the horizon
    /// contributing at least `½ ln 2` (what `1/(k+1)` contributes).
    pub eta_sum_diverges: bool,
    pub eta_sum: T,
    /// (c) `ε_k → 0`: largest `ε` in the last tenth is below `0.01`.
    pub eps_vanishes: bool,
    pub trajectory: Vec<T>,
}

impl<T> XuRecursionReport<T> {
    pub fn hypotheses_hold(&self) -> bool {
        self.eta_vanishes && self.eta_sum_diverges && self.eps_vanishes
    }
}

/// Simulates `α_{k+1} = (1 − η_k) α_k + η_k ε_k` and reports the final value
/// alongside finite-horizon proxies for the hypotheses under which the
/// sequence must vanish.
pub fn xu_recursion_check<T: Scalar>(alpha0: T, etas: &[T], epsilons: &[T]) -> Result<XuRecursionReport<T>> {
    check_dim(etas.len(), epsilons.len())?;
    if etas.iter().any(|e| !(*e >= T::zero() && *e <= T::one())) {
        return Err(invalid("etas", "need etas in [0, 1]"));
    }
    if epsilons.iter().any(|e| !(*e >= T::zero())) {
        return Err(invalid("epsilons", "need epsilons >= 0"));
    }
    let n = etas.len();
    let mut trajectory = Vec::with_capacity(n + 1);
    let mut a = alpha0;
    trajectory.push(a);
    for (&eta, &eps) in etas.iter().zip(epsilons) {
        a = (T::one() - eta) * a + eta * eps;
        trajectory.push(a);
    }
    let tail_start = n - n / 10;
    let tail_max_of = |v: &[T]| v[tail_start.min(v.len())..].iter().fold(T::zero(), |m, &x| m.max(x));
    let small = T::of(0.01);
    let eta_sum = etas.iter().fold(T::zero(), |s, &e| s + e);
    let second_half = etas[n / 2..].iter().fold(T::zero(), |s, &e| s + e);
    Ok(XuRecursionReport {
        steps: n,
        final_alpha: a,
        tail_max: tail_max_of(&trajectory),
        eta_vanishes: n > 0 && tail_max_of(etas) < small,
        eta_sum_diverges: second_half >= T::of(0.5) * T::LN_2(),
        eta_sum,
        eps_vanishes: n > 0 && tail_max_of(epsilons) < small,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log(obj − opt)` against `log k`; minus the empirical exponent.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points_used: usize,
}

/// Least-squares power-law fit over the last `tail_fraction` of a trace.
pub fn fit_rate<T: Scalar>(trace: &SolveTrace<T>, opt: T, tail_fraction: T) -> Result<RateFit> {
    let pts: Vec<(usize, T)> = trace.iterations.iter().map(|r| (r.k, r.obj)).collect();
    fit_power_law(&pts, opt, tail_fraction)
}

/// [`fit_rate`] on raw `(k, obj_k)` pairs. Points with `k = 0` or with
/// `obj − opt` below `100 ε |opt|` are dropped.
pub fn fit_power_law<T: Scalar>(points: &[(usize, T)], opt: T, tail_fraction: T) -> Result<RateFit> {
    if !(tail_fraction > T::zero() && tail_fraction <= T::one()) {
        return Err(invalid("tail_fraction", "need 0 < tail_fraction <= 1"));
    }
    if points.len() < 2 * MIN_FIT_POINTS {
        return Err(Error::InsufficientData { usable: points.len(), needed: 2 * MIN_FIT_POINTS });
    }
    let floor = (T::of(100.0) * T::epsilon() * opt.abs()).as_f64();
    let keep = (tail_fraction.as_f64() * points.len() as f64).ceil() as usize;
    let usable: Vec<(f64, f64)> = points[points.len() - keep.min(points.len())..]
        .iter()
        .filter(|(k, _)| *k >= 1)
        .filter_map(|&(k, v)| {
            let r = (v - opt).as_f64();
            (r > floor && r > 0.0).then(|| ((k as f64).ln(), r.ln()))
        })
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { usable: usable.len(), needed: MIN_FIT_POINTS });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { usable: 1, needed: MIN_FIT_POINTS });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept, r2, points_used: usable.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g: Vec<f64> = default_gamma_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn t_alpha_curvature_is_alpha() {
        let f = Objective::t_alpha(1.5).unwrap();
        let unit = FeasibleSet::cube(vec![0.0], vec![1.0]).unwrap();
        let est = estimate_curvature(&f, &unit, 1.5, 500, &default_gamma_grid::<f64>(), 11).unwrap();
        assert!((est.sampled_value - 1.5).abs() <= 1e-12);
        assert!((est.holder_upper_bound.unwrap() - 1.5).abs() <= 1e-15);
    }

    #[test]
    fn t_alpha_classic_curvature_diverges() {
        let f = Objective::t_alpha(1.5).unwrap();
        let unit = FeasibleSet::cube(vec![0.0], vec![1.0]).unwrap();
        let r = curvature_refinement(&f, &unit, 2.0, 100, 12, 1e3, 3).unwrap();
        assert!(r.exceeded_at.is_some());
        assert!(r.levels.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn quadratic_curvature_on_simplex() {
        // inner expression is ½γ²‖s − x‖², so the scaled value is ‖s − x‖² ≤ δ² = 2;
        // cancellation at γ = 1e-3 costs about eps/γ²
        for n in [2usize, 5, 30] {
            let q = Objective::quadratic(vec![0.0; n]).unwrap();
            let s = FeasibleSet::simplex(n).unwrap();
            let est = estimate_curvature(&q, &s, 2.0, 200, &default_gamma_grid::<f64>(), 1).unwrap();
            assert!((est.sampled_value - 2.0).abs() <= 1e-9, "{n}: {}", est.sampled_value);
            assert!((est.holder_upper_bound.unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_nested_samples_nondecreasing() {
        let f = Objective::power_norm(1.5, vec![0.1, -0.2, 0.05]).unwrap();
        let ball = FeasibleSet::l2_ball(3, 1.0).unwrap();
        let grid = default_gamma_grid::<f64>();
        let mut prev = 0.0;
        for n in [1, 10, 100, 1000] {
            let v = estimate_curvature(&f, &ball, 1.5, n, &grid, 42).unwrap().sampled_value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn holder_bound_examples() {
        assert!((curvature_bound_holder(1.0, 1.0, 2f64.sqrt()).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(curvature_bound_holder(1.5, 0.5, 1.0).unwrap(), 1.5);
        let alpha = 1.3f64;
        assert!((curvature_bound_holder(alpha, alpha - 1.0, 1.0).unwrap() - alpha).abs() < 1e-15);
        assert!(curvature_bound_holder(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn modulus_bound_examples() {
        let grid = default_gamma_grid::<f64>();
        let delta = 2.0;
        let lip = 3.0;
        let table: Vec<(f64, f64)> = (1..=50).map(|i| (i as f64 * 0.05, lip * i as f64 * 0.05)).collect();
        let v = curvature_bound_modulus(&table, 2.0, delta, &grid).unwrap();
        assert!((v - lip * delta * delta).abs() < 1e-9);

        let zero: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 0.0)).collect();
        assert_eq!(curvature_bound_modulus(&zero, 1.5, 1.0, &grid).unwrap(), 0.0);

        // ω(τ) = L τ^ν on 10³ points; exact value L δ^(1+ν)
        let (l, nu, delta) = (1.5, 0.5, 1.0);
        let table: Vec<(f64, f64)> =
            (1..=1000).map(|i| (i as f64 / 1000.0 * delta, l * (i as f64 / 1000.0 * delta).powf(nu))).collect();
        let v = curvature_bound_modulus(&table, 1.0 + nu, delta, &grid).unwrap();
        let exact = curvature_bound_holder(l, nu, delta).unwrap();
        assert!((v - exact).abs() / exact < 0.01);

        assert!(curvature_bound_modulus::<f64>(&[], 2.0, 1.0, &grid).is_err());
    }

    #[test]
    fn modulus_integral_extends_constant() {
        let table = [(1.0f64, 2.0f64)];
        assert!((integrate_modulus(&table, 0.5f64) - 0.25).abs() < 1e-15);
        assert!((integrate_modulus(&table, 3.0) - (1.0 + 4.0)).abs() < 1e-15);
    }

    #[test]
    fn line_search_bound_examples() {
        let b = rate_bound_line_search(1.0, 2.0, 2.0).unwrap();
        for k in 0..50 {
            assert!((b.bound(k) - 1.0 / (1.0 + k as f64 / 4.0)).abs() < 1e-15);
        }
        let b = rate_bound_line_search(0.37, 1.3, 5.0).unwrap();
        assert_eq!(b.bound(0), 0.37);
        let b = rate_bound_line_search(1.0, 1.5, 1.0).unwrap();
        assert!((b.bound(4) - (11.0f64 / 3.0).powf(-0.5)).abs() < 1e-15);
        assert!((b.bound(4) - 0.5222).abs() < 1e-4);
    }

    #[test]
    fn open_loop_bound_examples() {
        let b = rate_bound_open_loop(1.0, 2.0, false).unwrap();
        for k in 1..20 {
            assert!((b.bound(k) - 4.0 / k as f64).abs() < 1e-15);
        }
        let b = rate_bound_open_loop(2.0, 1.5, false).unwrap();
        assert!((b.bound(9) - 1.5f64.powf(1.5) * 2.0 / 3.0).abs() < 1e-15);
        assert!((b.bound(9) - 1.2247).abs() < 1e-4);
        let shifted = rate_bound_open_loop(2.0, 1.5, true).unwrap();
        assert_eq!(shifted.bound(8), b.bound(9));
        assert_eq!(open_loop_delta(0.3, 2.0, 2.0), 1.0);
        assert!(rate_bound_open_loop(0.0, 2.0, false).is_err());
    }

    #[test]
    fn bounds_are_nonincreasing() {
        let bounds = [
            rate_bound_line_search(2.0, 1.4, 3.0).unwrap(),
            rate_bound_open_loop(0.5, 1.25, true).unwrap(),
            rate_bound_harmonic(2.0).unwrap(),
        ];
        for b in bounds {
            let c = b.curve(1, 500);
            assert!(c.iter().all(|(_, v)| *v > 0.0));
            assert!(c.windows(2).all(|w| w[1].1 <= w[0].1));
        }
    }

    #[test]
    fn beta_recursion_examples() {
        let b = beta_recursion(&StepsizeRule::harmonic(2.0), 2.0, 5).unwrap();
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], 1.0);
        assert!((b[2] - 7.0f64 / 9.0).abs() < 1e-15);
        for rule in [StepsizeRule::harmonic(2.0), StepsizeRule::DhRecursion { gamma0: 0.4 }] {
            for sigma in [1.1, 1.5, 2.0] {
                let b = beta_recursion(&rule, sigma, 1000).unwrap();
                assert!(b.iter().all(|&v| v > 0.0 && v <= 1.0));
            }
        }
        let b = beta_recursion(&StepsizeRule::harmonic(2.0), 2.0, 10_000).unwrap();
        let max_kb = b.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).fold(0.0, f64::max);
        assert!(max_kb <= 4.0);
        assert!(check_beta_bound(&b, 2.0).holds);
        assert!(beta_recursion(&StepsizeRule::line_search(), 2.0, 10).is_err());
    }

    #[test]
    fn beta_bound_report_flags_violations() {
        let report = check_beta_bound(&[1.0, 1.0, 0.9, 0.9], 2.0);
        // σ^σ/k = 4, 2, 1.333, so no violations
        assert!(report.holds);
        let report = check_beta_bound(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 2.0);
        assert_eq!(report.first_violation, Some(5));
    }

    #[test]
    fn polyak_examples() {
        let betas = vec![0.1; 10];
        let bound = polyak_sequence_bound(1.0, &betas, 1.0).unwrap();
        for (k, b) in bound.iter().enumerate() {
            assert!((b - 1.0 / (1.0 + 0.1 * k as f64)).abs() < 1e-15);
        }
        let rec = polyak_recursion(1.0, &betas, 1.0);
        // direct hand iteration of α ← α − 0.1 α²
        let mut a = 1.0f64;
        for _ in 0..10 {
            a -= 0.1 * a * a;
        }
        assert_eq!(rec[10], a);
        assert!((rec[10] - 0.48171).abs() < 1e-5);
        assert!(rec[10] <= bound[10] && bound[10] == 0.5);
        assert!(polyak_sequence_bound(0.0, &betas, 0.5).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn xu_examples() {
        let n = 1000;
        let etas: Vec<f64> = (0..n).map(|k| 1.0 / (k as f64 + 2.0)).collect();
        let zeros = vec![0.0; n];
        let r = xu_recursion_check(1.0, &etas, &zeros).unwrap();
        for (k, a) in r.trajectory.iter().enumerate() {
            assert!((a - 1.0 / (k as f64 + 1.0)).abs() < 1e-12);
        }
        let r = xu_recursion_check(2.0, &zeros, &zeros).unwrap();
        assert_eq!(r.final_alpha, 2.0);
        assert!(!r.eta_sum_diverges);
        assert!(!r.hypotheses_hold());
    }

    #[test]
    fn fit_synthetic_power_laws() {
        for &p in &[1.0, 0.5, 0.25] {
            let pts: Vec<(usize, f64)> = (0..200).map(|k| (k, 3.0 + (k.max(1) as f64).powf(-p))).collect();
            let fit = fit_power_law(&pts, 3.0, 0.5).unwrap();
            assert!((fit.slope + p).abs() < 1e-6, "{p}: {}", fit.slope);
            assert!(fit.r2 > 0.999_999);
        }
    }

    #[test]
    fn fit_rejects_roundoff_floor() {
        let pts: Vec<(usize, f64)> = (0..100).map(|k| (k, 1.0 + if k < 8 { 1.0 / (k + 1) as f64 } else { 0.0 })).collect();
        match fit_power_law(&pts, 1.0, 1.0) {
            Err(Error::InsufficientData { usable, .. }) => assert_eq!(usable, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn power_convex_lower_bound_is_consistent() {
        // ½‖x‖² is strongly convex with power 2 and μ = ½; C_f = δ² on the simplex
        let lb = curvature_lower_bound_power_convex(0.5, 2.0, 2f64.sqrt());
        assert!((lb - 2.0).abs() < 1e-12);
    }
}
