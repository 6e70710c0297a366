//! Independent oracles: central differences, bisection, an adaptive
//! Dormand–Prince integrator, closed-form amplification factors.

use entroreact::analysis::{find_positive_equilibrium, validate_conditions, SamplingPlan};
use entroreact::crn::fixtures::{isomerisation, so2};
use entroreact::crn::{mass_action_jacobian, mass_action_rhs, Kinetics, PolynomialSystem, RateLaw};
use entroreact::diagnostics::dissipation_balance;
use entroreact::grid::Grid;
use entroreact::solver::{advance_fixed, init_state, run, DiffusionScheme, Profile, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn central_difference<F: RateLaw>(f: &F, u: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[j] += h;
        dn[j] -= h;
        let fp = f.eval(&up).unwrap();
        let fm = f.eval(&dn).unwrap();
        for i in 0..n {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

#[test]
fn jacobian_matches_central_differences() {
    let net = so2();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let u: Vec<f64> = (0..3).map(|_| 0.1 + 9.9 * rng.random::<f64>()).collect();
        let exact = mass_action_jacobian(&net, &u).unwrap();
        let fd = central_difference(&net, &u, 1e-6);
        let scale = exact.max_abs().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((exact[(i, j)] - fd[i][j]).abs() <= 1e-6 * scale, "u={u:?} ({i},{j})");
            }
        }
    }
    let j = mass_action_jacobian(&net, &[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(j[(0, 0)], -4.0);
}

#[test]
fn polynomial_jacobian_matches_central_differences() {
    let sys = PolynomialSystem::from_network(&isomerisation(2.0, 1.0));
    let u = [0.7, 1.9];
    let exact = sys.jacobian(&u).unwrap();
    let fd = central_difference(&sys, &u, 1e-6);
    for i in 0..2 {
        for j in 0..2 {
            assert!((exact[(i, j)] - fd[i][j]).abs() < 1e-8);
        }
    }
    let zero = PolynomialSystem::zero(3).jacobian(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

/// Eliminates `u2, u3` through the sulfur and oxygen totals and bisects
/// `u1^2 u2 - u3^2`, which increases in `u1`.
fn bisection_oracle(sulfur: f64, oxygen: f64) -> [f64; 3] {
    let u2 = |u1: f64| (oxygen - 3.0 * sulfur + u1) / 2.0;
    let g = |u1: f64| u1 * u1 * u2(u1) - (sulfur - u1).powi(2);
    let mut lo = (3.0 * sulfur - oxygen).max(0.0);
    let mut hi = sulfur;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u1 = 0.5 * (lo + hi);
    [u1, u2(u1), sulfur - u1]
}

#[test]
fn equilibrium_matches_bisection() {
    let net = so2();
    let expect = bisection_oracle(2.0, 7.0);
    for x in expect {
        assert!((x - 1.0).abs() < 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let sulfur = 0.5 + 2.5 * rng.random::<f64>();
        let oxygen = 2.0 * sulfur + 0.1 + 9.9 * rng.random::<f64>();
        let rep = find_positive_equilibrium(&net, &[sulfur, oxygen]).unwrap();
        assert!(rep.converged);
        let oracle = bisection_oracle(sulfur, oxygen);
        for (a, b) in rep.equilibrium.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-10, "totals ({sulfur}, {oxygen}): {a} vs {b}");
        }
        let flux_scale = net.fluxes(&rep.equilibrium).iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(rep.max_cb_residual() <= 1e-12 * flux_scale, "{}", rep.max_cb_residual());
        let f = mass_action_rhs(&net, &rep.equilibrium).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-10));
    }
}

#[test]
fn multipliers_pass_entropy_condition() {
    for (net, totals) in [(so2(), vec![3.0, 9.0]), (isomerisation(2.0, 1.0), vec![3.0])] {
        let rep = find_positive_equilibrium(&net, &totals).unwrap();
        let mu = entroreact::analysis::entropy_multipliers(&rep);
        let cond = validate_conditions(&net, &mu, 1, &SamplingPlan::default()).unwrap();
        assert!(cond.entropy_inequality.passed(), "{:?}", cond.entropy_inequality);
    }
}

/// Dormand–Prince 5(4) with standard step control.
fn dopri<F: Fn(&[f64]) -> Vec<f64>>(f: F, y0: &[f64], t_end: f64, tol: f64) -> Vec<f64> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let _ = C;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t: f64 = 0.0;
    let mut h: f64 = 1e-3;
    while t < t_end {
        h = h.min(t_end - t);
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for s in 0..7 {
            let ys: Vec<f64> = (0..n)
                .map(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            k.push(f(&ys));
        }
        let y5: Vec<f64> = (0..n).map(|i| y[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|i| (h * (0..7).map(|s| (B5[s] - B4[s]) * k[s][i]).sum::<f64>()).abs() / (1.0 + y[i].abs()))
            .fold(0.0f64, f64::max);
        if err <= tol {
            t += h;
            y = y5;
        }
        h *= (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(0.2, 5.0);
    }
    y
}

#[test]
fn spatially_constant_run_matches_ode_oracle() {
    let net = so2();
    let u0 = [2.0, 0.5, 0.3];
    let oracle = dopri(|u| mass_action_rhs(&net, u).unwrap(), &u0, 1.0, 1e-10);
    let cfg = SimulationConfig::from_network(
        net.clone(),
        Grid::interval(1.0, 8).unwrap(),
        u0.iter().map(|&c| Profile::Constant(c)).collect(),
        1.0,
    );
    let out = run(&cfg).unwrap().into_result().unwrap();
    for (field, expect) in out.state.fields.iter().zip(oracle) {
        for v in field.values() {
            assert!((v - expect).abs() < 1e-6, "{v} vs {expect}");
        }
    }
}

fn heat_config(scheme: DiffusionScheme) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(
        Kinetics::Polynomial(PolynomialSystem::zero(1)),
        vec![0.3],
        Grid::interval(2.0, 50).unwrap(),
        vec![Profile::Cosine { a: 1.0, b: 0.5, k: 1.0 }],
        1.0,
    );
    cfg.scheme = scheme;
    cfg
}

#[test]
fn eigenmode_decay_matches_closed_form_amplification() {
    let (dt, steps) = (0.01, 100);
    for scheme in [DiffusionScheme::BackwardEuler, DiffusionScheme::Extrapolated] {
        let cfg = heat_config(scheme);
        let grid = cfg.grid;
        let h = grid.spacing(0);
        let l = grid.lengths()[0];
        let lam = -(2.0 / (h * h)) * (1.0 - (std::f64::consts::PI * h / l).cos());
        let z = -dt * cfg.diffusion[0] * lam;
        let per_step = match scheme {
            DiffusionScheme::BackwardEuler => 1.0 / (1.0 + z),
            DiffusionScheme::Extrapolated => 2.0 / (1.0 + 0.5 * z).powi(2) - 1.0 / (1.0 + z),
        };
        let amp = 0.5 * per_step.powi(steps as i32);
        let s0 = init_state(&cfg).unwrap();
        let s1 = advance_fixed(&cfg, &s0, dt, steps).unwrap();
        for (k, v) in s1.fields[0].values().iter().enumerate() {
            let (x, _) = grid.center(k);
            let expect = 1.0 + amp * (std::f64::consts::PI * x / l).cos();
            assert!((v - expect).abs() < 1e-10, "{scheme:?} cell {k}: {v} vs {expect}");
        }
        // and the continuous decay exp(d λ_h t) up to O(dt)
        let continuous = 0.5 * (cfg.diffusion[0] * lam * dt * steps as f64).exp();
        assert!((amp - continuous).abs() < 0.05 * continuous);
    }
}

#[test]
fn heat_dissipation_residual_is_first_order_in_record_spacing() {
    let mut maxima = Vec::new();
    for cadence in [0.04, 0.02, 0.01] {
        let mut cfg = heat_config(DiffusionScheme::Extrapolated);
        cfg.grid = Grid::interval(1.0, 400).unwrap();
        cfg.control.dt_max = 2e-3;
        cfg.cadence = cadence;
        cfg.t_end = 0.4;
        let out = run(&cfg).unwrap().into_result().unwrap();
        let rep = dissipation_balance(&out.series).unwrap();
        maxima.push(rep.residuals.iter().fold(0.0f64, |m, (_, r)| m.max(r.abs())));
    }
    for w in maxima.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.4).contains(&ratio), "{maxima:?}");
    }
}
