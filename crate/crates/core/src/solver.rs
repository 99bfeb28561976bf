//! Frank-Wolfe (plain and composite) iteration with gap certificates and
//! trace recording, plus the projected-gradient baseline.
//!
//! The plain method solves `min_{x∈C} f(x)`; when a [`CompositePart`] `g` is
//! attached the same loop solves `min_{x∈C} f(x) + g(x)`, replacing the
//! linear subproblem by `argmin_{x∈C} <∇f(x_k), x> + g(x)`. Iterates are
//! always formed as `x_k + γ_k (x̄_k − x_k)`, so feasibility follows from
//! convexity and no projection is ever applied.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::FeasibleSet;
use crate::objectives::{CompositePart, Objective, ObjectiveKind, Optimum};
use crate::scalar::{axpy, dist2, dot, norm2, sub, to_f64_vec, Scalar};
use crate::stepsize::{line_search, line_search_quadratic_exact, StepsizeRule};

/// Feasibility slack applied to starting points and iterates.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Inner iterations of the projected-subgradient composite fallback.
pub const COMPOSITE_FALLBACK_ITERS: usize = 10_000;

/// Serializable problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec<T> {
    pub set: FeasibleSet<T>,
    pub objective: ObjectiveKind<T>,
    #[serde(default)]
    pub composite: Option<CompositePart<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem<T> {
    pub set: FeasibleSet<T>,
    pub objective: Objective<T>,
    pub composite: Option<CompositePart<T>>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(set: FeasibleSet<T>, objective: Objective<T>, composite: Option<CompositePart<T>>) -> Result<Self> {
        set.validate()?;
        check_dim(set.dim(), objective.dim())?;
        if let Some(g) = &composite {
            g.validate()?;
        }
        Ok(Problem { set, objective, composite })
    }

    pub fn plain(set: FeasibleSet<T>, objective: Objective<T>) -> Result<Self> {
        Self::new(set, objective, None)
    }

    pub fn from_spec(spec: &ProblemSpec<T>) -> Result<Self> {
        Self::new(spec.set.clone(), Objective::from_kind(spec.objective.clone())?, spec.composite)
    }

    pub fn spec(&self) -> ProblemSpec<T> {
        ProblemSpec {
            set: self.set.clone(),
            objective: self.objective.kind().clone(),
            composite: self.composite,
        }
    }

    /// The composite part, if it is not identically zero.
    pub fn active_composite(&self) -> Option<&CompositePart<T>> {
        self.composite.as_ref().filter(|g| !g.is_zero())
    }

    /// `f(x)`, or `f(x) + g(x)` for composite problems.
    pub fn value(&self, x: &[T]) -> T {
        let f = self.objective.eval(x);
        match self.active_composite() {
            Some(g) => f + g.eval(x),
            None => f,
        }
    }

    /// Known minimizer and optimal value of `f` (or `f + g`).
    ///
    /// For `½‖x − b‖² + λ‖x‖₁` on a box the problem separates and the
    /// minimizer is the soft-threshold of `b` clipped to the box.
    pub fn known_optimum(&self) -> Option<Optimum<T>> {
        let Some(g) = self.active_composite() else {
            return self.objective.known_optimum(&self.set);
        };
        match (self.objective.kind(), g, &self.set) {
            (ObjectiveKind::Quadratic { b }, CompositePart::L1 { lambda }, FeasibleSet::Box { lower, upper }) => {
                let x_star: Vec<T> = b
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(&bi, (&l, &u))| {
                        let soft = bi.signum() * (bi.abs() - *lambda).max(T::zero());
                        soft.max(l).min(u)
                    })
                    .collect();
                let f_star = self.value(&x_star);
                Some(Optimum { x_star, f_star })
            }
            _ => None,
        }
    }

    /// Whether the linear subproblem is solved exactly (not by the
    /// projected-subgradient fallback).
    pub fn oracle_is_exact(&self) -> bool {
        match self.active_composite() {
            None => true,
            Some(g) => composite_lmo_is_exact(&self.set, g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct StopRule<T> {
    pub max_iter: usize,
    #[serde(default = "zero")]
    pub gap_tol: T,
}

fn zero<T: Scalar>() -> T {
    T::zero()
}

impl<T: Scalar> StopRule<T> {
    pub fn new(max_iter: usize, gap_tol: T) -> Self {
        StopRule { max_iter, gap_tol }
    }

    pub fn iterations(max_iter: usize) -> Self {
        StopRule { max_iter, gap_tol: T::zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub x: Vec<T>,
    pub obj: T,
    pub gap: T,
    pub gamma: T,
    /// `‖x_{k+1} − x_k‖`; zero on the terminal row.
    pub step_norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    MaxIter,
    GapTol,
    FiniteTermination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination<T> {
    pub reason: TerminationReason,
    /// Index of the terminal iterate.
    pub k: usize,
    pub final_x: Vec<T>,
    pub final_obj: T,
}

/// Per-iteration record of a run. The last row always describes the
/// terminal iterate and has `gamma = step_norm = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace<T> {
    pub algorithm: String,
    pub iterations: Vec<IterationRecord<T>>,
    pub termination: Termination<T>,
    pub config_fingerprint: String,
    /// Set when the composite subproblem went through the approximate
    /// projected-subgradient fallback.
    pub approximate_oracle: bool,
}

pub const TRACE_CSV_HEADER: &str = "k,obj,gap,gamma,step_norm";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl<T: Scalar> SolveTrace<T> {
    pub fn objective_values(&self) -> Vec<T> {
        self.iterations.iter().map(|r| r.obj).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.iterations.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                format_float(r.obj.as_f64()),
                format_float(r.gap.as_f64()),
                format_float(r.gamma.as_f64()),
                format_float(r.step_norm.as_f64())
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn summary(&self) -> TraceSummary {
        let last = self.iterations.last();
        TraceSummary {
            algorithm: self.algorithm.clone(),
            termination: self.termination.reason,
            terminal_k: self.termination.k,
            final_x: to_f64_vec(&self.termination.final_x),
            final_obj: self.termination.final_obj.as_f64(),
            final_gap: last.map(|r| r.gap.as_f64()).unwrap_or(f64::NAN),
            iterations_recorded: self.iterations.len(),
            config_fingerprint: self.config_fingerprint.clone(),
            approximate_oracle: self.approximate_oracle,
        }
    }
}

/// JSON-friendly digest of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub algorithm: String,
    pub termination: TerminationReason,
    pub terminal_k: usize,
    pub final_x: Vec<f64>,
    pub final_obj: f64,
    pub final_gap: f64,
    pub iterations_recorded: usize,
    pub config_fingerprint: String,
    pub approximate_oracle: bool,
}

/// Parses a trace CSV back into `(k, obj, gap, gamma, step_norm)` rows.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(usize, [f64; 4])>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_CSV_HEADER) {
        return Err(Error::Config("trace csv header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let mut cols = line.split(',');
            let bad = || Error::Config(format!("bad trace row `{line}`"));
            let k = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let mut vals = [0.0; 4];
            for v in vals.iter_mut() {
                *v = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            }
            Ok((k, vals))
        })
        .collect()
}

/// Hex SHA-256 (first 16 bytes) of the JSON encoding of `parts`.
pub fn fingerprint<S: Serialize + ?Sized>(parts: &S) -> String {
    let bytes = serde_json::to_vec(parts).expect("descriptors serialize");
    hex::encode(&Sha256::digest(&bytes)[..16])
}

pub fn composite_lmo_is_exact<T: Scalar>(set: &FeasibleSet<T>, g: &CompositePart<T>) -> bool {
    g.is_zero() || matches!(set, FeasibleSet::Box { .. })
}

/// Solves `argmin_{x∈C} <c, x> + g(x)`.
///
/// `(Box, L1)` separates into one-dimensional piecewise-linear problems whose
/// minimum is at a bound or at the kink 0. A zero `g` reduces to the plain
/// oracle. Other projectable sets use [`approximate_composite_lmo`].
pub fn composite_lmo<T: Scalar>(set: &FeasibleSet<T>, c: &[T], g: &CompositePart<T>) -> Result<Vec<T>> {
    if g.is_zero() {
        return set.lmo(c);
    }
    check_dim(set.dim(), c.len())?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("composite oracle cost vector"));
    }
    match (set, g) {
        (FeasibleSet::Box { lower, upper }, CompositePart::L1 { lambda }) => Ok(c
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&ci, (&l, &u))| {
                let value = |y: T| ci * y + *lambda * y.abs();
                let mut best = if l < T::zero() && u > T::zero() { T::zero() } else { l };
                for cand in [l, u] {
                    if value(cand) < value(best) {
                        best = cand;
                    }
                }
                best
            })
            .collect()),
        _ => {
            if !set.supports_projection() {
                return Err(Error::CompositeOracleUnavailable);
            }
            approximate_composite_lmo(set, c, g, COMPOSITE_FALLBACK_ITERS)
        }
    }
}

/// Projected-subgradient minimization of `<c, x> + g(x)` over a projectable
/// set with steps `δ / (G √(t+1))`; returns the best iterate seen.
pub fn approximate_composite_lmo<T: Scalar>(
    set: &FeasibleSet<T>,
    c: &[T],
    g: &CompositePart<T>,
    iters: usize,
) -> Result<Vec<T>> {
    let h = |x: &[T]| dot(c, x) + g.eval(x);
    let mut x = set.lmo(c)?;
    let mut best_x = x.clone();
    let mut best = h(&x);
    let lip = match g {
        CompositePart::L1 { lambda } => norm2(c) + *lambda * T::of_usize(c.len()).sqrt(),
        CompositePart::Zero => norm2(c),
    };
    if lip == T::zero() {
        return Ok(x);
    }
    let delta = set.diameter();
    for t in 0..iters {
        let sg: Vec<T> = c.iter().zip(g.subgrad(&x)).map(|(&ci, gi)| ci + gi).collect();
        let eta = delta / (lip * T::of_usize(t + 1).sqrt());
        x = set.project(&axpy(&x, -eta, &sg))?;
        let v = h(&x);
        if v < best {
            best = v;
            best_x = x.clone();
        }
    }
    Ok(best_x)
}

/// Frank-Wolfe gap at `x` and the oracle point `x̄`.
///
/// Plain: `<∇f(x), x − x̄>`. Composite: `<∇f(x), x − x̄> + g(x) − g(x̄)`. For
/// convex problems this is nonnegative and bounds the current suboptimality.
pub fn fw_gap<T: Scalar>(problem: &Problem<T>, x: &[T]) -> Result<(T, Vec<T>)> {
    check_dim(problem.set.dim(), x.len())?;
    let grad = problem.objective.grad(x);
    gap_from_grad(problem, x, &grad)
}

fn gap_from_grad<T: Scalar>(problem: &Problem<T>, x: &[T], grad: &[T]) -> Result<(T, Vec<T>)> {
    match problem.active_composite() {
        None => {
            let x_bar = problem.set.lmo(grad)?;
            let gap = dot(grad, &sub(x, &x_bar));
            Ok((gap, x_bar))
        }
        Some(g) => {
            let x_bar = composite_lmo(&problem.set, grad, g)?;
            let gap = dot(grad, &sub(x, &x_bar)) + g.eval(x) - g.eval(&x_bar);
            Ok((gap, x_bar))
        }
    }
}

/// Runs Frank-Wolfe (or the composite variant when `problem` carries a
/// nonzero `g`) from `x0`.
///
/// Stops on `max_iter`, on `gap ≤ gap_tol`, or with `finite_termination`
/// when the next iterate equals the current one exactly (which is checked
/// first, so a sharp minimum reached with `γ = 1` is reported as such).
pub fn solve<T: Scalar>(
    problem: &Problem<T>,
    rule: &StepsizeRule<T>,
    x0: &[T],
    stop: &StopRule<T>,
) -> Result<SolveTrace<T>> {
    rule.validate()?;
    if stop.max_iter == 0 {
        return Err(invalid("max_iter", "need max_iter >= 1"));
    }
    if !(stop.gap_tol >= T::zero()) {
        return Err(invalid("gap_tol", "need gap_tol >= 0"));
    }
    check_start(problem, x0)?;

    let mut schedule = match rule {
        StepsizeRule::LineSearch { .. } => None,
        _ => Some(rule.schedule()?),
    };
    let exact_quadratic = matches!(problem.objective.kind(), ObjectiveKind::Quadratic { .. })
        && problem.active_composite().is_none();

    let mut x = x0.to_vec();
    let mut iterations = Vec::new();
    let mut k = 0;
    let reason = loop {
        let obj = problem.value(&x);
        if !obj.is_finite() {
            return Err(Error::NonFiniteObjective { k });
        }
        let grad = problem.objective.grad(&x);
        let (gap, x_bar) = gap_from_grad(problem, &x, &grad)?;
        let mut terminal = |reason| {
            iterations.push(IterationRecord { k, x: x.clone(), obj, gap, gamma: T::zero(), step_norm: T::zero() });
            reason
        };
        if k == stop.max_iter {
            break terminal(TerminationReason::MaxIter);
        }
        if x_bar == x {
            break terminal(TerminationReason::FiniteTermination);
        }
        if gap <= stop.gap_tol {
            break terminal(TerminationReason::GapTol);
        }

        let d = sub(&x_bar, &x);
        let gamma = match (rule, schedule.as_mut()) {
            (_, Some(s)) => s.next().expect("schedule is infinite"),
            (StepsizeRule::LineSearch { .. }, None) if exact_quadratic => {
                line_search_quadratic_exact(dot(&grad, &d), dot(&d, &d))
            }
            (StepsizeRule::LineSearch { tol, max_evals }, None) => {
                line_search(|g| problem.value(&axpy(&x, g, &d)), *tol, *max_evals)?
            }
            _ => unreachable!("open-loop rules always carry a schedule"),
        };
        let next = axpy(&x, gamma, &d);
        let step_norm = dist2(&next, &x);
        iterations.push(IterationRecord { k, x: x.clone(), obj, gap, gamma, step_norm });
        if next == x {
            // last row repeats the state with a zero step
            let obj = problem.value(&x);
            k += 1;
            iterations.push(IterationRecord { k, x: x.clone(), obj, gap, gamma: T::zero(), step_norm: T::zero() });
            break TerminationReason::FiniteTermination;
        }
        x = next;
        k += 1;
    };

    let final_obj = problem.value(&x);
    let fp = fingerprint(&("frank_wolfe", problem.spec(), rule, to_f64_vec(x0), stop));
    Ok(SolveTrace {
        algorithm: if problem.active_composite().is_some() { "generalized_frank_wolfe" } else { "frank_wolfe" }
            .to_string(),
        termination: Termination { reason, k, final_x: x, final_obj },
        iterations,
        config_fingerprint: fp,
        approximate_oracle: !problem.oracle_is_exact(),
    })
}

fn check_start<T: Scalar>(problem: &Problem<T>, x0: &[T]) -> Result<()> {
    check_dim(problem.set.dim(), x0.len())?;
    if !problem.set.contains(x0, T::of(FEASIBILITY_TOL))? {
        return Err(Error::InfeasibleStart);
    }
    Ok(())
}

/// Fixed-step projected gradient `x_{k+1} = P_C(x_k − step ∇f(x_k))`.
///
/// Requires a plain problem on a projectable set whose objective carries a
/// Lipschitz constant `L`, with `0 < step < 2/L`. The FW gap is recorded in
/// each row so traces are comparable with [`solve`].
pub fn solve_gpa<T: Scalar>(problem: &Problem<T>, step: T, x0: &[T], max_iter: usize) -> Result<SolveTrace<T>> {
    if problem.active_composite().is_some() {
        return Err(invalid("composite", "projected gradient baseline handles plain problems only"));
    }
    if !problem.set.supports_projection() {
        return Err(Error::ProjectionUnavailable);
    }
    let lip = problem
        .objective
        .smoothness()
        .lipschitz
        .ok_or_else(|| invalid("objective", "projected gradient needs a Lipschitz gradient"))?;
    if !(step > T::zero() && step < T::of(2.0) / lip) {
        return Err(invalid("step", format!("need 0 < step < 2/L = {}", T::of(2.0) / lip)));
    }
    if max_iter == 0 {
        return Err(invalid("max_iter", "need max_iter >= 1"));
    }
    check_start(problem, x0)?;

    let mut x = x0.to_vec();
    let mut iterations = Vec::new();
    let mut k = 0;
    let reason = loop {
        let obj = problem.value(&x);
        if !obj.is_finite() {
            return Err(Error::NonFiniteObjective { k });
        }
        let grad = problem.objective.grad(&x);
        let (gap, _) = gap_from_grad(problem, &x, &grad)?;
        if k == max_iter {
            iterations.push(IterationRecord { k, x: x.clone(), obj, gap, gamma: T::zero(), step_norm: T::zero() });
            break TerminationReason::MaxIter;
        }
        let next = problem.set.project(&axpy(&x, -step, &grad))?;
        let step_norm = dist2(&next, &x);
        if next == x {
            iterations.push(IterationRecord { k, x: x.clone(), obj, gap, gamma: T::zero(), step_norm: T::zero() });
            break TerminationReason::FiniteTermination;
        }
        iterations.push(IterationRecord { k, x: x.clone(), obj, gap, gamma: step, step_norm });
        x = next;
        k += 1;
    };
    let final_obj = problem.value(&x);
    let fp = fingerprint(&("projected_gradient", problem.spec(), step, to_f64_vec(x0), max_iter));
    Ok(SolveTrace {
        algorithm: "projected_gradient".to_string(),
        termination: Termination { reason, k, final_x: x, final_obj },
        iterations,
        config_fingerprint: fp,
        approximate_oracle: false,
    })
}
