//! Benchmark inputs shared by the criterion targets.

use opsplit_core::operators::MonotoneSpec;
use opsplit_core::sampling;
use opsplit_core::splitting::{plan_dr, DrOrder, SplitPlan};
use opsplit_core::verifier::random_affine_spec;
use opsplit_core::InParams;

/// A certified DR problem of size `dim` with `mu = 2`, `omega = 0.5`.
pub fn dr_problem(dim: usize, seed: u64) -> (SplitPlan, MonotoneSpec, MonotoneSpec) {
    let mut rng = sampling::rng(seed);
    let a = random_affine_spec(&mut rng, dim, 2.0, 4.0, 0.5).expect("valid spectrum");
    let b = random_affine_spec(&mut rng, dim, -0.5, 1.0, 0.5).expect("valid spectrum");
    let plan = plan_dr(2.0, 0.5, 0.3, 0.5, DrOrder::AStrong).expect("gamma in range");
    (plan, a, b)
}

/// A grid of parameter pairs covering accepted and rejected compositions.
pub fn param_grid(n: usize) -> Vec<(InParams, InParams)> {
    let step = |k: usize| k as f64 / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((
                InParams { alpha: 1.5 * step(i) - 0.7, beta: 0.1 + 1.4 * step(j) },
                InParams { alpha: 0.9 - step(j), beta: 0.2 + step(i) },
            ));
        }
    }
    out
}
