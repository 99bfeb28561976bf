//! Stepsize rules: golden-section line minimization on `[0, 1]` and the
//! open-loop schedules, with checks of the open-loop conditions.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_LINE_SEARCH_TOL: f64 = 1e-10;
pub const DEFAULT_LINE_SEARCH_EVALS: usize = 200;

/// Relative slack used when comparing recursion output against closed-form
/// bounds that hold with equality in exact arithmetic.
pub const RECURSION_ROUNDOFF: f64 = 1e-12;

fn default_tol<T: Scalar>() -> T {
    T::of(DEFAULT_LINE_SEARCH_TOL)
}

fn default_evals() -> usize {
    DEFAULT_LINE_SEARCH_EVALS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum StepsizeRule<T> {
    /// Golden-section minimization of the objective along the segment.
    LineSearch {
        #[serde(default = "default_tol")]
        tol: T,
        #[serde(default = "default_evals")]
        max_evals: usize,
    },
    /// `γ_k = c / (k + c)`, `c ≥ 1`.
    Harmonic { c: T },
    /// `γ_k = γ₀ / (k + 1)^p`.
    Power { gamma0: T, p: T },
    /// `γ_{k+1} = γ_k / (1 + γ_k)`.
    DhRecursion { gamma0: T },
}

impl<T: Scalar> StepsizeRule<T> {
    pub fn line_search() -> Self {
        StepsizeRule::LineSearch { tol: default_tol(), max_evals: default_evals() }
    }

    pub fn harmonic(c: T) -> Self {
        StepsizeRule::Harmonic { c }
    }

    pub fn validate(&self) -> Result<()> {
        let one = T::one();
        let unit = |v: T| v > T::zero() && v <= one;
        match *self {
            StepsizeRule::LineSearch { tol, max_evals } => {
                if !(tol > T::zero()) {
                    return Err(invalid("tol", "need tol > 0"));
                }
                if max_evals < 3 {
                    return Err(invalid("max_evals", "need at least 3 evaluations"));
                }
            }
            StepsizeRule::Harmonic { c } => {
                if !(c >= one && c.is_finite()) {
                    return Err(invalid("c", "need finite c >= 1"));
                }
            }
            StepsizeRule::Power { gamma0, p } => {
                if !unit(gamma0) {
                    return Err(invalid("gamma0", "need 0 < gamma0 <= 1"));
                }
                if !unit(p) {
                    return Err(invalid("p", "need 0 < p <= 1"));
                }
            }
            StepsizeRule::DhRecursion { gamma0 } => {
                if !unit(gamma0) {
                    return Err(invalid("gamma0", "need 0 < gamma0 <= 1"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepsizeRule::LineSearch { .. } => "line_search",
            StepsizeRule::Harmonic { .. } => "harmonic",
            StepsizeRule::Power { .. } => "power",
            StepsizeRule::DhRecursion { .. } => "dh_recursion",
        }
    }

    pub fn is_open_loop(&self) -> bool {
        !matches!(self, StepsizeRule::LineSearch { .. })
    }

    /// Iterator over `γ_0, γ_1, ...` for open-loop kinds.
    pub fn schedule(&self) -> Result<OpenLoopSchedule<T>> {
        if !self.is_open_loop() {
            return Err(Error::NotOpenLoop(self.name()));
        }
        let first = match *self {
            StepsizeRule::DhRecursion { gamma0 } => gamma0,
            _ => T::zero(),
        };
        Ok(OpenLoopSchedule { rule: *self, k: 0, dh: first })
    }
}

/// Parses `line_search[:tol]`, `harmonic:c`, `power:gamma0,p` and
/// `dh:gamma0`, then validates the result.
impl<T: Scalar> FromStr for StepsizeRule<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("rule", format!("cannot parse `{s}`"));
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = args
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| a.trim().parse::<f64>().map(T::of).map_err(|_| bad()))
            .collect::<Result<Vec<T>>>()?;
        let rule = match (kind.trim(), nums.as_slice()) {
            ("line_search", []) => StepsizeRule::line_search(),
            ("line_search", [tol]) => StepsizeRule::LineSearch { tol: *tol, max_evals: DEFAULT_LINE_SEARCH_EVALS },
            ("harmonic", [c]) => StepsizeRule::Harmonic { c: *c },
            ("power", [gamma0, p]) => StepsizeRule::Power { gamma0: *gamma0, p: *p },
            ("dh" | "dh_recursion", [gamma0]) => StepsizeRule::DhRecursion { gamma0: *gamma0 },
            _ => return Err(bad()),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Open-loop stepsizes in order. DH terms are carried forward, so a full
/// pass costs one division per step.
#[derive(Debug, Clone)]
pub struct OpenLoopSchedule<T> {
    rule: StepsizeRule<T>,
    k: usize,
    dh: T,
}

impl<T: Scalar> Iterator for OpenLoopSchedule<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        let k = T::of_usize(self.k);
        let g = match self.rule {
            StepsizeRule::Harmonic { c } => c / (k + c),
            StepsizeRule::Power { gamma0, p } => gamma0 / (k + T::one()).powf(p),
            StepsizeRule::DhRecursion { .. } => {
                let g = self.dh;
                self.dh = g / (T::one() + g);
                g
            }
            StepsizeRule::LineSearch { .. } => unreachable!("schedule() rejects line search"),
        };
        self.k += 1;
        Some(g)
    }
}

/// `γ_k` of an open-loop rule. DH terms are recomputed from `γ_0`.
pub fn schedule_value<T: Scalar>(rule: &StepsizeRule<T>, k: usize) -> Result<T> {
    Ok(rule.schedule()?.nth(k).expect("schedule is infinite"))
}

/// Golden-section search for `argmin_{γ ∈ [0,1]} φ(γ)`.
///
/// Both endpoints are always evaluated and the best evaluated point is
/// returned, so the result is never worse than `φ(0)` or `φ(1)` even when
/// `φ` is not unimodal.
pub fn line_search<T, F>(mut phi: F, tol: T, max_evals: usize) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(tol > T::zero()) {
        return Err(invalid("tol", "need tol > 0"));
    }
    let mut eval = |g: T| -> Result<T> {
        let v = phi(g);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::LineSearchNonFinite { gamma: g.as_f64() })
        }
    };
    let zero = T::zero();
    let one = T::one();
    let f0 = eval(zero)?;
    let f1 = eval(one)?;
    let ratio = (T::of(5.0).sqrt() - one) / T::of(2.0);

    let (mut a, mut b) = (zero, one);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut evals = 4;
    while b - a > tol && evals < max_evals {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
        evals += 1;
    }

    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for cand in [(one, f1), (zero, f0)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best.0)
}

/// Exact minimizer of `a γ + ½ b γ²` over `[0, 1]` (`b ≥ 0`).
pub fn line_search_quadratic_exact<T: Scalar>(a: T, b: T) -> T {
    if b > T::zero() {
        (-a / b).max(T::zero()).min(T::one())
    } else if a < T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenLoopReport<T> {
    pub horizon: usize,
    pub gamma_0: T,
    pub gamma_horizon: T,
    /// `γ_k → 0`, numerically (`γ_horizon < γ_0` and `< 0.01`) or by the
    /// kind's closed form.
    pub c1_ok: bool,
    pub c1_numeric: bool,
    /// `Σ_{k < horizon} γ_k`, reported for divergence inspection.
    pub partial_sum: T,
    /// For DH recursions: `γ₀/(k+1) ≤ γ_k ≤ γ₀/(γ₀k+1)` for all `k ≤ horizon`.
    pub dh_bounds_ok: Option<bool>,
}

pub fn validate_open_loop<T: Scalar>(rule: &StepsizeRule<T>, horizon: usize) -> Result<OpenLoopReport<T>> {
    if horizon < 10 {
        return Err(invalid("horizon", "need horizon >= 10"));
    }
    rule.validate()?;
    let mut sched = rule.schedule()?;
    let gamma_0 = sched.next().expect("infinite");
    let mut partial_sum = T::zero();
    let mut g = gamma_0;
    let mut dh_ok = true;
    let slack = T::of(RECURSION_ROUNDOFF);
    for k in 0..=horizon {
        if k > 0 {
            g = sched.next().expect("infinite");
        }
        if k < horizon {
            partial_sum += g;
        }
        if let StepsizeRule::DhRecursion { gamma0 } = *rule {
            let kk = T::of_usize(k);
            let lower = gamma0 / (kk + T::one());
            let upper = gamma0 / (gamma0 * kk + T::one());
            if g < lower * (T::one() - slack) || g > upper * (T::one() + slack) {
                dh_ok = false;
            }
        }
    }
    let c1_numeric = g < gamma_0 && g < T::of(0.01);
    // every shipped open-loop kind has γ_k → 0 analytically
    let c1_analytic = match *rule {
        StepsizeRule::Harmonic { .. } | StepsizeRule::DhRecursion { .. } => true,
        StepsizeRule::Power { p, .. } => p > T::zero(),
        StepsizeRule::LineSearch { .. } => false,
    };
    Ok(OpenLoopReport {
        horizon,
        gamma_0,
        gamma_horizon: g,
        c1_ok: c1_numeric || c1_analytic,
        c1_numeric,
        partial_sum,
        dh_bounds_ok: matches!(rule, StepsizeRule::DhRecursion { .. }).then_some(dh_ok),
    })
}
