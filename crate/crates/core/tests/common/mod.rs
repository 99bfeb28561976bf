//! Property suites shared by the `properties` and `acceptance` targets.
//! Each suite drives a deterministic proptest runner and returns the first
//! failure as text.

#![allow(dead_code)]

use fwkit::objectives::{Objective, ObjectiveKind};
use fwkit::solver::parse_trace_csv;
use fwkit::stepsize::line_search_quadratic_exact;
use fwkit::{
    composite_lmo, curvature_bound_holder, curvature_bound_modulus, default_gamma_grid, estimate_curvature,
    line_search, solve, CompositePart, FeasibleSet, Problem, StepsizeRule, StopRule,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn finish<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Set kind 0..5 = simplex, ℓ1 ball, ℓ2 ball, box, vertex polytope.
pub fn build_set(kind: u8, dim: usize, r: f64, seed: u64) -> FeasibleSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        0 => FeasibleSet::simplex(dim.max(2)).unwrap(),
        1 => FeasibleSet::l1_ball(dim, r).unwrap(),
        2 => FeasibleSet::l2_ball(dim, r).unwrap(),
        3 => {
            let lower: Vec<f64> = (0..dim).map(|_| rng.random_range(-r..r)).collect();
            let upper = lower.iter().map(|l| l + rng.random_range(0.1..2.0 * r + 0.1)).collect();
            FeasibleSet::cube(lower, upper).unwrap()
        }
        _ => {
            let n = dim + rng.random_range(1..4);
            FeasibleSet::polytope((0..n).map(|_| normal_vec(&mut rng, dim, r)).collect()).unwrap()
        }
    }
}

pub fn arb_set() -> impl Strategy<Value = FeasibleSet<f64>> {
    (0u8..5, 1usize..6, 0.2f64..3.0, any::<u64>()).prop_map(|(k, d, r, s)| build_set(k, d, r, s))
}

pub fn arb_projectable_set() -> impl Strategy<Value = FeasibleSet<f64>> {
    (0u8..4, 1usize..6, 0.2f64..3.0, any::<u64>()).prop_map(|(k, d, r, s)| build_set(k, d, r, s))
}

pub fn arb_rule() -> impl Strategy<Value = StepsizeRule<f64>> {
    prop_oneof![
        Just(StepsizeRule::line_search()),
        (1.0f64..4.0).prop_map(StepsizeRule::harmonic),
        (0.1f64..=1.0, 0.3f64..=1.0).prop_map(|(gamma0, p)| StepsizeRule::Power { gamma0, p }),
        (0.1f64..=1.0).prop_map(|gamma0| StepsizeRule::DhRecursion { gamma0 }),
    ]
}

/// `(objective kind index, parameter, seed)` → an objective on `set`.
fn build_objective(set: &FeasibleSet<f64>, which: u8, param: f64, seed: u64) -> Objective<f64> {
    let n = set.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match which {
        0 => Objective::quadratic(normal_vec(&mut rng, n, 1.5)).unwrap(),
        1 => Objective::power_norm(1.0 + param, normal_vec(&mut rng, n, 1.0)).unwrap(),
        2 => Objective::quadratic(set.sample(seed)).unwrap(),
        _ => {
            let mut c = normal_vec(&mut rng, n, 1.0);
            c[0] += 1e-3;
            Objective::linear(c).unwrap()
        }
    }
}

pub fn lmo_certificate(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(arb_set(), any::<u64>()), |(set, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = normal_vec(&mut rng, set.dim(), 1.0);
        let v = set.lmo(&c).unwrap();
        prop_assert!(set.contains(&v, 1e-9).unwrap());
        let cv = dot(&c, &v);
        for _ in 0..100 {
            let z = set.sample_with(&mut rng);
            prop_assert!(cv <= dot(&c, &z) + 1e-9, "lmo {v:?} beaten by {z:?}");
        }
        Ok(())
    }))
}

pub fn projection_obtuse(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(arb_projectable_set(), any::<u64>()), |(set, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_vec(&mut rng, set.dim(), 3.0);
        let p = set.project(&x).unwrap();
        prop_assert!(set.contains(&p, 1e-9).unwrap());
        let r: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        for _ in 0..100 {
            let z = set.sample_with(&mut rng);
            let zp: Vec<f64> = z.iter().zip(&p).map(|(a, b)| a - b).collect();
            prop_assert!(dot(&r, &zp) <= 1e-9, "obtuseness fails for {x:?}");
        }
        // feasible points are fixed
        let z = set.sample_with(&mut rng);
        prop_assert!(dist(&set.project(&z).unwrap(), &z) <= 1e-9);
        Ok(())
    }))
}

pub fn diameter_bounds(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(arb_set(), any::<u64>()), |(set, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = set.diameter();
        for _ in 0..100 {
            let a = set.sample_with(&mut rng);
            let b = set.sample_with(&mut rng);
            prop_assert!(dist(&a, &b) <= d + 1e-9);
        }
        let ext = set.extreme_points(usize::MAX);
        let best = ext.iter().flat_map(|a| ext.iter().map(move |b| dist(a, b))).fold(0.0, f64::max);
        prop_assert!((best - d).abs() <= 1e-9, "extreme pairs reach {best}, diameter {d}");
        Ok(())
    }))
}

fn fd_grad(f: &Objective<f64>, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f.eval(&a) - f.eval(&b)) / (2.0 * h)
        })
        .collect()
}

pub fn gradient_finite_differences(cases: u32) -> Result<(), String> {
    let strat = (0u8..5, 1usize..6, 0.1f64..1.0, any::<u64>());
    finish(runner(cases).run(&strat, |(which, dim, param, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, set) = match which {
            0 => (Objective::quadratic(normal_vec(&mut rng, dim, 1.0)).unwrap(), FeasibleSet::l2_ball(dim, 1.0).unwrap()),
            1 => (
                Objective::power_norm(1.0 + param, normal_vec(&mut rng, dim, 0.5)).unwrap(),
                FeasibleSet::l2_ball(dim, 1.0).unwrap(),
            ),
            2 => (Objective::t_alpha(1.0 + param).unwrap(), FeasibleSet::cube(vec![0.01], vec![1.0]).unwrap()),
            3 => (Objective::nesterov_max(), FeasibleSet::l2_ball(2, 1.0).unwrap()),
            _ => (Objective::linear(normal_vec(&mut rng, dim, 1.0)).unwrap(), FeasibleSet::l1_ball(dim, 1.0).unwrap()),
        };
        for _ in 0..100 {
            let x = set.sample_with(&mut rng);
            match f.kind() {
                ObjectiveKind::PowerNorm { b, .. } if dist(&x, b) < 0.05 => continue,
                ObjectiveKind::NesterovMax if (x[0] - x[1]).abs() < 1e-3 => continue,
                _ => {}
            }
            let g = f.grad(&x);
            let fd = fd_grad(&f, &x, 1e-6);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(err <= 1e-4 * scale, "{:?} at {x:?}: grad {g:?}, fd {fd:?}", f.kind());
        }
        Ok(())
    }))
}

pub fn convexity_inequalities(cases: u32) -> Result<(), String> {
    let strat = (arb_set(), 0u8..4, 0.1f64..1.0, any::<u64>(), 0.0f64..2.0);
    finish(runner(cases).run(&strat, |(set, which, param, seed, lambda)| {
        let f = build_objective(&set, which, param, seed);
        prop_assert!(f.is_convex());
        let g = CompositePart::l1(lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..50 {
            let x = set.sample_with(&mut rng);
            let y = set.sample_with(&mut rng);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
            prop_assert!(f.eval(&mid) <= 0.5 * f.eval(&x) + 0.5 * f.eval(&y) + 1e-10);
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            prop_assert!(f.eval(&y) >= f.eval(&x) + dot(&f.grad(&x), &d) - 1e-10);
            prop_assert!(g.eval(&y) >= g.eval(&x) + dot(&g.subgrad(&x), &d) - 1e-10);
        }
        Ok(())
    }))
}

pub fn line_search_properties(cases: u32) -> Result<(), String> {
    let strat = (-3.0f64..3.0, 0.0f64..5.0, -2.0f64..2.0, 0.0f64..3.0);
    finish(runner(cases).run(&strat, |(a, b, shift, kink)| {
        let tol = 1e-10;
        let quad = |g: f64| a * g + 0.5 * b * g * g;
        let gq = line_search(quad, tol, 200).unwrap();
        prop_assert!(quad(gq) <= quad(0.0).min(quad(1.0)));
        let ge = line_search_quadratic_exact(a, b);
        if b > 0.0 {
            prop_assert!((quad(gq) - quad(ge)).abs() <= 10.0 * tol);
        }
        // nonsmooth segment function, as in the composite step
        let phi = |g: f64| quad(g) + kink * (g + shift).abs();
        let gp = line_search(phi, tol, 200).unwrap();
        prop_assert!(phi(gp) <= phi(0.0).min(phi(1.0)));
        Ok(())
    }))
}

pub fn dh_strictly_decreasing(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(0.01f64..=1.0), |gamma0| {
        let vals: Vec<f64> = StepsizeRule::DhRecursion { gamma0 }.schedule().unwrap().take(2000).collect();
        prop_assert!(vals.iter().all(|&v| v > 0.0));
        prop_assert!(vals.windows(2).all(|w| w[1] < w[0]));
        Ok(())
    }))
}

/// Feasibility, gap certificate, line-search monotonicity, vanishing steps,
/// determinism and CSV round trip on random plain problems.
pub fn solver_trace_invariants(cases: u32) -> Result<(), String> {
    let strat = (arb_set(), 0u8..4, 0.1f64..1.0, any::<u64>(), arb_rule());
    finish(runner(cases).run(&strat, |(set, which, param, seed, rule)| {
        let obj = build_objective(&set, which, param, seed);
        let problem = Problem::plain(set.clone(), obj).unwrap();
        check_trace(&problem, &rule, seed)
    }))
}

/// The same invariants for `½‖x − b‖² + λ‖x‖₁`, on boxes (exact oracle) and
/// on the fallback sets.
pub fn composite_trace_invariants(cases: u32) -> Result<(), String> {
    let strat = (0u8..4, 1usize..5, 0.2f64..2.0, any::<u64>(), 0.0f64..1.5, arb_rule());
    finish(runner(cases).run(&strat, |(kind, dim, r, seed, lambda, rule)| {
        let kind = [3, 3, 0, 2][kind as usize];
        let set = build_set(kind, dim, r, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obj = Objective::quadratic(normal_vec(&mut rng, set.dim(), 1.5)).unwrap();
        let problem = Problem::new(set, obj, Some(CompositePart::l1(lambda).unwrap())).unwrap();
        check_trace(&problem, &rule, seed)
    }))
}

fn check_trace(problem: &Problem<f64>, rule: &StepsizeRule<f64>, seed: u64) -> Result<(), TestCaseError> {
    let x0 = problem.set.sample(seed);
    let max_iter = if problem.oracle_is_exact() { 200 } else { 25 };
    let stop = StopRule::iterations(max_iter);
    let trace = solve(problem, rule, &x0, &stop).unwrap();
    let again = solve(problem, rule, &x0, &stop).unwrap();
    prop_assert_eq!(&trace, &again);

    let delta = problem.set.diameter();
    let opt = problem.known_optimum().filter(|_| problem.oracle_is_exact());
    for (i, r) in trace.iterations.iter().enumerate() {
        prop_assert!(problem.set.contains(&r.x, 1e-9).unwrap(), "infeasible iterate at k = {}", r.k);
        prop_assert!(r.gap >= -1e-9, "negative gap {} at k = {}", r.gap, r.k);
        if let Some(o) = &opt {
            prop_assert!(r.gap >= r.obj - o.f_star - 1e-9, "gap {} below residual {}", r.gap, r.obj - o.f_star);
        }
        if rule.is_open_loop() {
            prop_assert!(r.step_norm <= r.gamma * delta * (1.0 + 1e-12) + 1e-15);
        } else if let Some(next) = trace.iterations.get(i + 1) {
            prop_assert!(next.obj <= r.obj + 1e-12, "line search increased obj at k = {}", r.k);
        }
    }
    let parsed = parse_trace_csv(&trace.to_csv()).unwrap();
    prop_assert_eq!(parsed.len(), trace.iterations.len());
    for ((k, v), r) in parsed.iter().zip(&trace.iterations) {
        prop_assert_eq!(*k, r.k);
        prop_assert_eq!(v, &[r.obj, r.gap, r.gamma, r.step_norm]);
    }
    Ok(())
}

pub fn composite_oracle_optimal(cases: u32) -> Result<(), String> {
    let strat = (1usize..6, 0.2f64..3.0, any::<u64>(), 0.0f64..2.0);
    finish(runner(cases).run(&strat, |(dim, r, seed, lambda)| {
        let set = build_set(3, dim, r, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = normal_vec(&mut rng, dim, 1.0);
        for g in [CompositePart::l1(lambda).unwrap(), CompositePart::Zero] {
            let xb = composite_lmo(&set, &c, &g).unwrap();
            let h = |x: &[f64]| dot(&c, x) + g.eval(x);
            for _ in 0..1000 {
                let z = set.sample_with(&mut rng);
                prop_assert!(h(&xb) <= h(&z) + 1e-9);
            }
        }
        Ok(())
    }))
}

/// Quadratic `L = 1` curvature never exceeds `δ²`. The slack is relative
/// because the linearization error at `γ = 1e-3` is computed from values of
/// size `δ²`.
pub fn quadratic_curvature_below_holder(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(arb_set(), any::<u64>()), |(set, seed)| {
        let f = Objective::quadratic(set.sample(seed)).unwrap();
        let est = estimate_curvature(&f, &set, 2.0, 200, &default_gamma_grid::<f64>(), seed).unwrap();
        let d2 = set.diameter().powi(2);
        prop_assert!(est.sampled_value <= d2 * (1.0 + 1e-9) + 1e-9, "{} > {d2}", est.sampled_value);
        Ok(())
    }))
}

pub fn modulus_matches_holder(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(0.1f64..5.0, 0.1f64..=1.0, 0.2f64..4.0), |(l, nu, delta)| {
        let table: Vec<(f64, f64)> =
            (1..=1000).map(|i| i as f64 * delta / 1000.0).map(|t| (t, l * t.powf(nu))).collect();
        let m = curvature_bound_modulus(&table, 1.0 + nu, delta, &default_gamma_grid::<f64>()).unwrap();
        let h = curvature_bound_holder(l, nu, delta).unwrap();
        prop_assert!((m - h).abs() <= 0.01 * h, "modulus {m} vs holder {h}");
        Ok(())
    }))
}
