use super::conservation::{law_basis, totals as law_totals};
use crate::crn::{Complex, ReactionNetwork};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, NewtonOptions};

/// Incidence of reactions on the complex list: `source[r]` and `target[r]`
/// index into [`ReactionNetwork::complexes`].
#[derive(Debug, Clone)]
pub struct ComplexGraph {
    pub complexes: Vec<Complex>,
    pub source: Vec<usize>,
    pub target: Vec<usize>,
}

impl ComplexGraph {
    pub fn new(net: &ReactionNetwork) -> Self {
        let complexes = net.complexes();
        let find = |c: &Complex| complexes.iter().position(|x| x == c).expect("complex listed");
        let source = net.reactions().iter().map(|r| find(&r.reactant)).collect();
        let target = net.reactions().iter().map(|r| find(&r.product)).collect();
        Self {
            complexes,
            source,
            target,
        }
    }

    /// `C × R` matrix with `+1` at the target complex and `-1` at the source.
    pub fn incidence(&self) -> Matrix {
        let mut b = Matrix::zeros(self.complexes.len(), self.source.len());
        for r in 0..self.source.len() {
            b[(self.target[r], r)] += 1.0;
            b[(self.source[r], r)] -= 1.0;
        }
        b
    }

    /// Inflow minus outflow at every complex for the given fluxes.
    pub fn residuals(&self, fluxes: &[f64]) -> Vec<f64> {
        let mut res = vec![0.0; self.complexes.len()];
        for (r, &flux) in fluxes.iter().enumerate() {
            res[self.target[r]] += flux;
            res[self.source[r]] -= flux;
        }
        res
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResidual {
    pub complex: Complex,
    /// Total inflow minus total outflow.
    pub residual: f64,
}

/// Complex-balance residuals `Σ_{r: y'_r = y} k_r u^{y_r} - Σ_{r: y_r = y} k_r u^{y_r}`.
pub fn complex_balance_residual(net: &ReactionNetwork, u: &[f64]) -> Result<Vec<ComplexResidual>> {
    if u.len() != net.n_species() {
        return Err(Error::DimensionMismatch {
            expected: net.n_species(),
            got: u.len(),
        });
    }
    let g = ComplexGraph::new(net);
    let res = g.residuals(&net.fluxes(u));
    Ok(g.complexes
        .into_iter()
        .zip(res)
        .map(|(complex, residual)| ComplexResidual { complex, residual })
        .collect())
}

/// `Σ_y residual(y) · y`, which equals the mass-action right-hand side.
pub fn reassemble(residuals: &[ComplexResidual]) -> Vec<f64> {
    let n = residuals.first().map_or(0, |r| r.complex.coefficients().len());
    let mut f = vec![0.0; n];
    for r in residuals {
        for (fi, y) in f.iter_mut().zip(r.complex.coefficients()) {
            *fi += y * r.residual;
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub equilibrium: Vec<f64>,
    pub laws: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
    pub cb_residuals: Vec<f64>,
    pub newton_iterations: usize,
    pub converged: bool,
}

impl EquilibriumReport {
    pub fn max_cb_residual(&self) -> f64 {
        self.cb_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub const EQUILIBRIUM_TOL: f64 = 1e-12;

/// Positive complex-balanced equilibrium in the class fixed by `totals`,
/// measured against the network's [`law_basis`].
pub fn find_positive_equilibrium(net: &ReactionNetwork, totals: &[f64]) -> Result<EquilibriumReport> {
    let laws = law_basis(net);
    find_positive_equilibrium_with(net, &laws, totals)
}

/// Damped Newton in `w = log u` on the pruned complex-balance equations plus
/// the conservation constraints `m · u = total`.
pub fn find_positive_equilibrium_with(
    net: &ReactionNetwork,
    laws: &[Vec<f64>],
    totals: &[f64],
) -> Result<EquilibriumReport> {
    let n = net.n_species();
    if laws.len() != totals.len() {
        return Err(Error::DimensionMismatch {
            expected: laws.len(),
            got: totals.len(),
        });
    }
    if let Some(m) = laws.iter().find(|m| m.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.len(),
        });
    }
    let graph = ComplexGraph::new(net);
    let incidence = graph.incidence();
    let kept = linalg::independent_rows(&incidence, 1e-9);
    let equations = kept.len() + laws.len();
    if equations < n {
        return Err(Error::InconsistentConstraints {
            equations,
            unknowns: n,
        });
    }

    let reactions = net.reactions();
    let system = |w: &[f64]| -> (Vec<f64>, Matrix) {
        let u: Vec<f64> = w.iter().map(|x| x.exp()).collect();
        let fluxes = net.fluxes(&u);
        let res = graph.residuals(&fluxes);
        let mut f = Vec::with_capacity(equations);
        let mut jac = Matrix::zeros(equations, n);
        for (row, &c) in kept.iter().enumerate() {
            f.push(res[c]);
            // d flux_r / d w_j = y_{r,j} flux_r
            for (r, rx) in reactions.iter().enumerate() {
                let sign = if graph.target[r] == c { 1.0 } else { 0.0 }
                    - if graph.source[r] == c { 1.0 } else { 0.0 };
                if sign == 0.0 {
                    continue;
                }
                for (j, &y) in rx.reactant.coefficients().iter().enumerate() {
                    if y != 0.0 {
                        jac[(row, j)] += sign * y * fluxes[r];
                    }
                }
            }
        }
        for (k, (m, t)) in laws.iter().zip(totals).enumerate() {
            let row = kept.len() + k;
            let mut s = 0.0;
            for j in 0..n {
                s += m[j] * u[j];
                jac[(row, j)] = m[j] * u[j];
            }
            f.push(s - t);
        }
        (f, jac)
    };
    let accept = |w: &[f64], f: &[f64]| -> bool {
        let u: Vec<f64> = w.iter().map(|x| x.exp()).collect();
        let fluxes = net.fluxes(&u);
        let scale = fluxes.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let cb_ok = graph
            .residuals(&fluxes)
            .iter()
            .all(|r| r.abs() <= EQUILIBRIUM_TOL * scale);
        let laws_ok = f[kept.len()..]
            .iter()
            .zip(totals)
            .all(|(r, t)| r.abs() <= EQUILIBRIUM_TOL * t.abs().max(1.0));
        cb_ok && laws_ok
    };

    let mut best: Option<linalg::NewtonResult> = None;
    for w0 in initial_guesses(laws, totals, n) {
        let r = linalg::damped_newton(&system, &accept, &w0, NewtonOptions::default());
        let done = r.converged;
        let better = match &best {
            None => true,
            Some(b) => !b.converged && (done || norm(&r.residual) < norm(&b.residual)),
        };
        if better {
            best = Some(r);
        }
        if done {
            break;
        }
    }
    let r = best.expect("at least one start");
    let u: Vec<f64> = r.x.iter().map(|x| x.exp()).collect();
    let cb_residuals = graph.residuals(&net.fluxes(&u));
    Ok(EquilibriumReport {
        totals: law_totals(laws, &u),
        equilibrium: u,
        laws: laws.to_vec(),
        cb_residuals,
        newton_iterations: r.iterations,
        converged: r.converged,
    })
}

fn norm(v: &[f64]) -> f64 {
    let s: f64 = v.iter().map(|x| x * x).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

fn initial_guesses(laws: &[Vec<f64>], totals: &[f64], n: usize) -> Vec<Vec<f64>> {
    // A uniform state scaled to match the totals on average is a good start.
    let mut scale = 1.0;
    let weights: Vec<f64> = laws.iter().map(|m| m.iter().sum::<f64>()).collect();
    let ratios: Vec<f64> = weights
        .iter()
        .zip(totals)
        .filter(|(w, t)| **w > 0.0 && **t > 0.0)
        .map(|(w, t)| t / w)
        .collect();
    if !ratios.is_empty() {
        scale = ratios.iter().product::<f64>().powf(1.0 / ratios.len() as f64);
    }
    let mut starts = vec![vec![scale.ln(); n], vec![0.0; n]];
    for s in [-2.0, 2.0] {
        starts.push(vec![scale.ln() + s; n]);
    }
    starts
}

/// `μ_i = -log u_{i,∞}`, turning the entropy test function into
/// `log(u_i / u_{i,∞})`.
pub fn entropy_multipliers(report: &EquilibriumReport) -> Vec<f64> {
    report.equilibrium.iter().map(|u| -u.ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::fixtures::{isomerisation, so2};
    use crate::crn::RateLaw;

    #[test]
    fn so2_residuals() {
        let net = so2();
        let r = complex_balance_residual(&net, &[1.0, 1.0, 1.0]).unwrap();
        assert!(r.iter().all(|c| c.residual == 0.0));
        let r = complex_balance_residual(&net, &[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(r[0].complex.coefficients(), &[2.0, 1.0, 0.0]);
        assert_eq!(r[0].residual, -3.0);
        assert_eq!(r[1].residual, 3.0);
        assert_eq!(reassemble(&r), net.eval(&[2.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn detailed_balance_point_has_zero_residuals() {
        let net = isomerisation(2.0, 1.0);
        let r = complex_balance_residual(&net, &[1.0, 2.0]).unwrap();
        assert!(r.iter().all(|c| c.residual == 0.0));
    }

    #[test]
    fn so2_equilibrium_at_unit_state() {
        let rep = find_positive_equilibrium(&so2(), &[2.0, 7.0]).unwrap();
        assert!(rep.converged);
        for u in &rep.equilibrium {
            assert!((u - 1.0).abs() < 1e-12);
        }
        assert!(rep.max_cb_residual() < 1e-12);
        assert!((rep.totals[0] - 2.0).abs() < 1e-12 && (rep.totals[1] - 7.0).abs() < 1e-12);
        let u = &rep.equilibrium;
        assert!((u[0] * u[0] * u[1] - u[2] * u[2]).abs() < 1e-12);
    }

    #[test]
    fn isomerisation_equilibrium() {
        let net = isomerisation(2.0, 1.0);
        let rep = find_positive_equilibrium(&net, &[3.0]).unwrap();
        assert!(rep.converged);
        assert!((rep.equilibrium[0] - 1.0).abs() < 1e-12);
        assert!((rep.equilibrium[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_totals_length() {
        assert!(matches!(
            find_positive_equilibrium(&so2(), &[2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multipliers() {
        let rep = |u: Vec<f64>| EquilibriumReport {
            equilibrium: u,
            laws: vec![],
            totals: vec![],
            cb_residuals: vec![],
            newton_iterations: 0,
            converged: true,
        };
        assert_eq!(entropy_multipliers(&rep(vec![1.0, 1.0, 1.0])), vec![0.0; 3]);
        let mu = entropy_multipliers(&rep(vec![1.0, 2.0]));
        assert_eq!(mu[0], 0.0);
        assert!((mu[1] + 2f64.ln()).abs() < 1e-15);
        let e = std::f64::consts::E;
        let a = entropy_multipliers(&rep(vec![0.5, 3.0]));
        let b = entropy_multipliers(&rep(vec![0.5 * e, 3.0 * e]));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 1.0 - y).abs() < 1e-14);
        }
    }
}
