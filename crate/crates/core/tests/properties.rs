use entroreact::analysis::{complex_balance_residual, conservation_laws, reassemble, validate_conditions, SamplingPlan};
use entroreact::crn::{mass_action_rhs, parse_network, render_network, stoichiometric_matrix, ReactionNetwork};
use entroreact::grid::{self, apply_neumann_laplacian, entropy_functional, Field, Grid};
use entroreact::inequality::{check_xlogx_bound, truncation_chi};
use proptest::prelude::*;

/// Networks with integer stoichiometry in `0..=3`, written in the text format.
fn network_text() -> impl Strategy<Value = String> {
    (1usize..=4).prop_flat_map(|n| {
        let complex = proptest::collection::vec(0u8..=3, n);
        let reaction = (complex.clone(), complex, 0.1f64..10.0, prop::bool::ANY)
            .prop_filter("distinct complexes", |(a, b, _, _)| a != b);
        (Just(n), proptest::collection::vec(reaction, 1..=4), proptest::collection::vec(0.1f64..5.0, n))
            .prop_map(|(n, reactions, diffusion)| {
                let names: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
                let side = |c: &[u8]| {
                    let terms: Vec<String> = c
                        .iter()
                        .zip(&names)
                        .filter(|(k, _)| **k > 0)
                        .map(|(k, s)| format!("{k} {s}"))
                        .collect();
                    if terms.is_empty() {
                        "0".to_string()
                    } else {
                        terms.join(" + ")
                    }
                };
                let mut text = format!("species: {}\n", names.join(" "));
                for (a, b, k, reversible) in &reactions {
                    if *reversible {
                        text += &format!("reaction: {} <-> {} @ {k}, {}\n", side(a), side(b), k / 2.0);
                    } else {
                        text += &format!("reaction: {} -> {} @ {k}\n", side(a), side(b));
                    }
                }
                let d: Vec<String> = names.iter().zip(&diffusion).map(|(s, d)| format!("{s}={d}")).collect();
                text += &format!("diffusion: {}\n", d.join(" "));
                text
            })
    })
}

fn net(text: &str) -> ReactionNetwork {
    parse_network(text).expect("generated text parses")
}

fn state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..5.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mass_action_is_quasi_positive(text in network_text(), seed in any::<u64>(), face in 0usize..4) {
        let net = net(&text);
        let n = net.n_species();
        let mut u: Vec<f64> = (0..n).map(|i| ((seed >> (8 * i)) & 0xff) as f64 / 25.0).collect();
        let face = face % n;
        u[face] = 0.0;
        let f = mass_action_rhs(&net, &u).unwrap();
        prop_assert!(f[face] >= 0.0);
    }

    #[test]
    fn sampled_validator_never_refutes_positivity(text in network_text()) {
        let net = net(&text);
        let plan = SamplingPlan { samples: 50, ..SamplingPlan::default() };
        let rep = validate_conditions(&net, &vec![0.0; net.n_species()], 1, &plan).unwrap();
        prop_assert!(rep.quasi_positivity.passed());
    }

    #[test]
    fn stoichiometry_times_flux_is_rhs(text in network_text(), u in state(4)) {
        let net = net(&text);
        let u = &u[..net.n_species()];
        let s = stoichiometric_matrix(&net);
        prop_assert_eq!(s.mul_vec(&net.fluxes(u)), mass_action_rhs(&net, u).unwrap());
    }

    #[test]
    fn render_round_trips(text in network_text()) {
        let a = net(&text);
        prop_assert_eq!(parse_network(&render_network(&a)).unwrap(), a);
    }

    #[test]
    fn conservation_laws_annihilate_columns(text in network_text(), u in state(4)) {
        let net = net(&text);
        let u = &u[..net.n_species()];
        let s = stoichiometric_matrix(&net);
        let f = mass_action_rhs(&net, u).unwrap();
        for m in conservation_laws(&net) {
            for r in 0..s.cols() {
                let dot: f64 = m.iter().zip(s.column(r)).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() < 1e-12);
            }
            let scale = 1.0 + f.iter().map(|x| x.abs()).sum::<f64>();
            let dot: f64 = m.iter().zip(&f).map(|(a, b)| a * b).sum();
            prop_assert!(dot.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn residuals_reassemble_rhs(text in network_text(), u in state(4)) {
        let net = net(&text);
        let u: Vec<f64> = u[..net.n_species()].iter().map(|x| x + 0.1).collect();
        let f = mass_action_rhs(&net, &u).unwrap();
        let back = reassemble(&complex_balance_residual(&net, &u).unwrap());
        let scale = 1.0 + f.iter().map(|x| x.abs()).sum::<f64>();
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn lp_norms_increase_with_p(values in proptest::collection::vec(0.0f64..10.0, 2..64), p in 1.0f64..6.0, dq in 0.0f64..4.0) {
        let g = Grid::interval(1.0, values.len()).unwrap();
        let f = Field::new(g, values).unwrap();
        let a = grid::lp_norm(&f, p).unwrap();
        let b = grid::lp_norm(&f, p + dq).unwrap();
        let c = grid::lp_norm(&f, f64::INFINITY).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
        prop_assert!(b <= c * (1.0 + 1e-12));
    }

    #[test]
    fn entropy_lower_bound(values in proptest::collection::vec(0.0f64..20.0, 6..60), mu in proptest::collection::vec(-2.0f64..2.0, 3)) {
        // ∫Σ(u log u - u + 1) ≥ K∫Σu - (e^K - 1) N|Ω| with K = 2 max|μ|
        let cells = values.len() / 3;
        let g = Grid::interval(2.0, cells).unwrap();
        let fields: Vec<Field> = (0..3).map(|i| Field::new(g, values[i * cells..(i + 1) * cells].to_vec()).unwrap()).collect();
        let k = 2.0 * mu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let vol = g.volume();
        let lhs = entropy_functional(&fields, &[0.0; 3]).unwrap() + 3.0 * vol;
        let mass: f64 = fields.iter().map(grid::integrate).sum();
        let rhs = k * mass - (k.exp() - 1.0) * 3.0 * vol;
        prop_assert!(lhs >= rhs - 1e-10 * (1.0 + rhs.abs()));
        for &x in &values {
            prop_assert!(check_xlogx_bound(x, k.max(1e-3)) >= -1e-12 * (1.0 + x * x));
        }
    }

    #[test]
    fn laplacian_is_symmetric_and_mass_free(a in proptest::collection::vec(-5.0f64..5.0, 48), b in proptest::collection::vec(-5.0f64..5.0, 48), two_d in prop::bool::ANY) {
        let g = if two_d { Grid::rectangle(1.0, 1.5, 6, 8).unwrap() } else { Grid::interval(3.0, 48).unwrap() };
        let f = Field::new(g, a).unwrap();
        let h = Field::new(g, b).unwrap();
        let lf = apply_neumann_laplacian(&f);
        let lh = apply_neumann_laplacian(&h);
        let dot = |x: &Field, y: &Field| g.cell_volume() * x.values().iter().zip(y.values()).map(|(p, q)| p * q).sum::<f64>();
        let scale = 1.0 + lf.values().iter().map(|v| v.abs()).sum::<f64>() + lh.values().iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!((dot(&f, &lh) - dot(&h, &lf)).abs() < 1e-12 * scale * 10.0);
        prop_assert!(grid::integrate(&lf).abs() < 1e-12 * 48.0 * scale);
    }

    #[test]
    fn chi_is_bounded_and_two_lipschitz(a in -50.0f64..50.0, b in -50.0f64..50.0, n in 1.001f64..20.0) {
        let ca = truncation_chi(a, n).unwrap();
        let cb = truncation_chi(b, n).unwrap();
        prop_assert!(ca >= 0.0 && ca <= a.abs());
        prop_assert!((ca - cb).abs() <= 2.0 * (a - b).abs() * (1.0 + 1e-15) + 1e-15);
    }

    #[test]
    fn xlogx_bound_holds(x in 0.0f64..100.0, l in 1e-6f64..5.0) {
        prop_assert!(check_xlogx_bound(x, l) >= -1e-12);
    }
}

#[test]
fn xlogx_slack_is_minimal_at_exp_l() {
    for l in [0.3f64, 1.0, 2.0, 4.5] {
        let star = l.exp();
        let at_star = check_xlogx_bound(star, l);
        assert!(at_star.abs() < 1e-9);
        let scan_min = (1..=20_000)
            .map(|k| k as f64 * 0.01)
            .map(|x| (x, check_xlogx_bound(x, l)))
            .fold((0.0, f64::INFINITY), |m, p| if p.1 < m.1 { p } else { m });
        assert!((scan_min.0 - star).abs() <= 0.01);
        assert!(scan_min.1 >= at_star - 1e-12);
    }
}
