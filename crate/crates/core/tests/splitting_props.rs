use opsplit_core::class_calculus::InParams;
use opsplit_core::operators::{prox, reflected_resolvent, resolvent, HypoconvexQuadratic, Matrix, MonotoneSpec, Vector};
use opsplit_core::sampling::{self, gaussian_vector};
use opsplit_core::splitting::*;
use opsplit_core::verifier::{check_membership, check_membership_scaled, fit_tightest, random_affine_spec, random_suite, Family};
use opsplit_core::ClassLabel;

fn dr_instance(seed: u64) -> (SplitPlan, MonotoneSpec, MonotoneSpec) {
    let mut rng = sampling::rng(seed);
    let mu = sampling::uniform(&mut rng, 0.5, 3.0);
    let omega = sampling::uniform(&mut rng, 0.0, 0.9) * mu;
    let hi = (mu - omega) / (2.0 * mu * omega);
    let gamma = sampling::uniform(&mut rng, 0.05, 0.95) * hi.min(5.0);
    let a = random_affine_spec(&mut rng, 3, mu, mu + 2.0, 0.7).unwrap();
    let b = random_affine_spec(&mut rng, 3, -omega, 1.0, 0.7).unwrap();
    (plan_dr(mu, omega, gamma, 0.5, DrOrder::AStrong).unwrap(), a, b)
}

#[test]
fn resolvent_identities() {
    let mut rng = sampling::rng(11);
    for _ in 0..10 {
        let a = random_affine_spec(&mut rng, 3, 0.0, 2.0, 1.0).unwrap();
        let gamma = sampling::uniform(&mut rng, 0.1, 3.0);
        let j = resolvent(&a, gamma).unwrap();
        let r = reflected_resolvent(&a, gamma).unwrap();
        let x = gaussian_vector(&mut rng, 3);
        let gap = (r.apply(&x) - (j.apply(&x) * 2.0 - &x)).norm();
        assert!(gap <= 1e-12 * (1.0 + x.norm()));
        // y = J x solves y + gamma A y = x.
        let y = j.apply(&x);
        let back = &y + a.forward().unwrap().apply(&y) * gamma;
        assert!((back - &x).norm() <= 1e-10 * (1.0 + x.norm()));
        assert!(check_membership(&j, InParams { alpha: 0.5, beta: 0.5 }, 500, 1e-9).pass);
        assert!(check_membership(&r, InParams { alpha: 0.0, beta: 1.0 }, 500, 1e-9).pass);
    }
}

#[test]
fn prox_is_gradient_resolvent() {
    let q = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -0.3]);
    let f = HypoconvexQuadratic::new(q, Vector::from_vec(vec![0.2, -1.0]), 0.5).unwrap();
    let gamma = 1.2;
    let p = prox(&f, gamma).unwrap();
    let x = Vector::from_vec(vec![0.7, -0.4]);
    let y = p.apply(&x);
    // Stationarity of f(y) + |x - y|^2 / (2 gamma).
    let grad = &f.q * &y + &f.b + (&y - &x) / gamma;
    assert!(grad.norm() < 1e-12);
    assert!(prox(&f, 2.0).is_err());
}

#[test]
fn dr_iterates_are_asymptotically_regular_and_shadows_solve() {
    for seed in 0..20 {
        let (plan, a, b) = dr_instance(seed);
        let dr = build_dr(&plan, &a, &b).unwrap();
        let x0 = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let opts = IterOptions { tol: 1e-13, ..IterOptions::default() };
        let log = iterate(&dr.t, &x0, &opts, Some(&dr.shadow()), None).unwrap();
        assert_eq!(log.status, IterStatus::Converged, "seed {seed}");
        let steps: Vec<f64> = log.records.iter().map(|r| r.step_norm).collect();
        assert!(*steps.last().unwrap() <= 1e-12 * (1.0 + log.last().unwrap().norm()));
        let rec = log.records.last().unwrap();
        assert!(rec.shadow_gap().unwrap() < 1e-9, "seed {seed}");
        let z = &rec.shadow.as_ref().unwrap().0;
        assert!(inclusion_residual(&a, &b, z) < 1e-8, "seed {seed}");
        assert!(rate_report(&log, &plan).map(|r| r.satisfied).unwrap_or(true), "seed {seed}");
    }
}

#[test]
fn dr_operator_is_certified_averaged() {
    for seed in 100..110 {
        let (plan, a, b) = dr_instance(seed);
        let dr = build_dr(&plan, &a, &b).unwrap();
        let cert = plan.certificate().unwrap();
        assert!(check_membership(&dr.t, cert, 2000, 1e-9).pass, "seed {seed}");
    }
}

#[test]
fn fb_fixed_point_solves_inclusion() {
    let mut rng = sampling::rng(5);
    for _ in 0..10 {
        let mu = sampling::uniform(&mut rng, 0.5, 2.0);
        let omega = sampling::uniform(&mut rng, 0.0, 0.9) * mu;
        let beta = sampling::uniform(&mut rng, 0.5, 3.0);
        let a = random_affine_spec(&mut rng, 3, mu, mu + beta, 0.0).unwrap();
        let b = random_affine_spec(&mut rng, 3, -omega, 1.0, 0.5).unwrap();
        let hi = 2.0 / (beta + 2.0 * mu);
        let gamma = sampling::uniform(&mut rng, 0.05, 0.95) * hi;
        let plan = plan_fb(FbCase::I, mu, omega, beta, None, gamma).unwrap();
        let t = build_fb(&plan, &a, &b).unwrap();
        assert!(check_membership_scaled(&t, opsplit_core::ScaledConic { delta: plan.delta, alpha: plan.conic_alpha().unwrap() }, 1000, 1e-9).pass);
        let log = iterate(&t, &Vector::from_vec(vec![3.0, 0.0, -1.0]), &IterOptions::default(), None, None).unwrap();
        assert_eq!(log.status, IterStatus::Converged);
        assert!(inclusion_residual(&a, &b, log.last().unwrap()) < 1e-7);
        let rep = rate_report(&log, &plan).unwrap();
        assert!(rep.satisfied, "{rep:?}");
    }
}

#[test]
fn fb_tight_scalar_rates() {
    let a = MonotoneSpec::scaled_identity(2.0, 1);
    let b = MonotoneSpec::scaled_identity(-1.0, 1);
    let plan = plan_fb(FbCase::I, 2.0, 1.0, 1.0, None, 0.2).unwrap();
    let t = build_fb(&plan, &a, &b).unwrap();
    let log = iterate(&t, &Vector::from_vec(vec![1.0]), &IterOptions::default(), None, None).unwrap();
    let rep = rate_report(&log, &plan).unwrap();
    assert!((rep.empirical_rate - 0.75).abs() < 1e-12);
    assert!((rep.certified_rate - 0.75).abs() < 1e-12);
}

#[test]
fn scaling_example_boundary() {
    let (a, b) = scaling_instance(2.0, 1.0);
    for (gamma, converges) in [(0.1, true), (0.6, false)] {
        let plan = plan_dr_forced(2.0, 1.0, gamma, 0.5, DrOrder::AStrong).unwrap();
        assert_eq!(plan.certified, gamma < 0.25);
        let dr = build_dr(&plan, &a, &b).unwrap();
        let x0 = Vector::from_vec(vec![1.0, 1.0]);
        let opts = IterOptions { max_iter: if converges { 10_000 } else { 200 }, ..IterOptions::default() };
        let log = iterate(&dr.t, &x0, &opts, None, None).unwrap();
        if converges {
            assert_eq!(log.status, IterStatus::Converged);
            assert!(log.records.last().unwrap().step_norm < 1e-10);
        } else {
            assert!(log.diverged());
        }
    }
    assert!(plan_dr(2.0, 1.0, 0.6, 0.5, DrOrder::AStrong).unwrap_err().is_guard_rejection());
}

#[test]
fn fitted_classes_never_exceed_certificates() {
    let suite = random_suite(3, 12, 500, 1e-9).unwrap();
    assert!(suite.all_pass);
    let mut rng = sampling::rng(21);
    for _ in 0..6 {
        let c = opsplit_core::verifier::random_averaged_averaged(&mut rng).unwrap();
        match fit_tightest(&c.op, Family::Averaged, 500).unwrap() {
            ClassLabel::Averaged { alpha } => assert!(alpha <= c.certificate.alpha + 1e-9),
            other => panic!("{other:?}"),
        }
    }
}

fn lipschitz_spec(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, beta: f64) -> MonotoneSpec {
    let m = Matrix::from_fn(dim, dim, |_, _| gaussian_vector(rng, 1)[0]);
    let m = &m * (beta / opsplit_core::operators::spectral_norm(&m));
    MonotoneSpec::affine(m, gaussian_vector(rng, dim)).unwrap()
}

/// Random instances for every forward-backward case, certified constants
/// checked by sampling.
#[test]
fn fb_certificates_hold_in_every_case() {
    let mut rng = sampling::rng(77);
    let cases = [FbCase::I, FbCase::Ib, FbCase::II, FbCase::IIb, FbCase::III, FbCase::IIIb];
    for round in 0..24 {
        let case = cases[round % cases.len()];
        let mu = sampling::uniform(&mut rng, 0.5, 2.0);
        let omega = sampling::uniform(&mut rng, 0.0, 0.9) * mu;
        let beta = sampling::uniform(&mut rng, 0.3, 2.0);
        let t = sampling::uniform(&mut rng, 0.05, 0.95);
        let mix = |lo: f64, hi: f64| lo + t * (hi - lo);
        let (a, b, beta, bar, gamma) = match case {
            FbCase::I | FbCase::Ib => {
                let a = random_affine_spec(&mut rng, 3, mu, mu + beta, 0.0).unwrap();
                let b = random_affine_spec(&mut rng, 3, -omega, 1.0, 0.5).unwrap();
                let lo = 2.0 / (beta + 2.0 * mu);
                let g = if case == FbCase::I { mix(0.0, lo) } else { mix(lo, (2.0 / (beta + mu)).min(2.0 / (mu + beta + omega))) };
                (a, b, beta, None, g)
            }
            FbCase::II | FbCase::IIb => {
                let bar = beta.max(mu + omega) * 1.3;
                let a = random_affine_spec(&mut rng, 3, -omega, -omega + bar, 0.0).unwrap();
                let b = random_affine_spec(&mut rng, 3, mu, mu + 1.0, 0.5).unwrap();
                let lo = 2.0 / (bar - 2.0 * omega);
                let g = if case == FbCase::II { mix(0.0, lo) } else { mix(lo, 2.0 / (bar - mu - omega)) };
                (a, b, beta, Some(bar), g)
            }
            FbCase::III | FbCase::IIIb => {
                let beta = mu * sampling::uniform(&mut rng, 0.3, 0.9);
                let bar = (mu + beta).max(2.0 * beta) * 1.2;
                let a = lipschitz_spec(&mut rng, 3, beta);
                let b = random_affine_spec(&mut rng, 3, mu, mu + 1.0, 0.5).unwrap();
                let lo = 2.0 / (bar - 2.0 * beta);
                let g = if case == FbCase::III { mix(0.0, lo) } else { mix(lo, 2.0 / (bar - mu - beta)) };
                (a, b, beta, Some(bar), g)
            }
        };
        let plan = plan_fb(case, mu, omega, beta, bar, gamma).unwrap_or_else(|e| panic!("{case:?}: {e}"));
        let op = build_fb(&plan, &a, &b).unwrap_or_else(|e| panic!("{case:?}: {e}"));
        let cert = plan.certificate().unwrap();
        let rep = check_membership(&op, cert, 2000, 1e-9);
        assert!(rep.pass, "{case:?} {plan:?} worst {}", rep.worst_violation);
        if let Some(avg) = plan.averaged_alpha {
            assert!(check_membership(&op, InParams { alpha: 1.0 - avg, beta: avg }, 2000, 1e-9).pass, "{case:?}");
        }
    }
}
