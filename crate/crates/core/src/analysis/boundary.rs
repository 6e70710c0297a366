use super::balance::ComplexGraph;
use super::conservation::law_basis;
use crate::crn::ReactionNetwork;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, NewtonOptions};

pub const MAX_ENUMERATED_SPECIES: usize = 20;
const RANK_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-12;

/// An equilibrium on the boundary of the positive orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEquilibrium {
    /// Species that are strictly positive; all others are zero.
    pub support: Vec<usize>,
    /// A representative point of the equilibrium set on this support.
    pub point: Vec<f64>,
    /// 0 for an isolated point, otherwise the dimension of the continuum.
    pub family_dimension: usize,
    /// Whether the set meets the compatibility class of the supplied totals.
    pub in_class: Option<bool>,
    /// A point of the set inside the class, when one was found.
    pub class_point: Option<Vec<f64>>,
}

impl BoundaryEquilibrium {
    pub fn is_family(&self) -> bool {
        self.family_dimension > 0
    }

    pub fn describe(&self, species: &[String]) -> String {
        let coords: Vec<String> = (0..self.point.len())
            .map(|i| {
                if self.support.contains(&i) {
                    format!("{}>0", species[i])
                } else {
                    format!("{}=0", species[i])
                }
            })
            .collect();
        if self.is_family() {
            format!("family of dimension {} ({})", self.family_dimension, coords.join(", "))
        } else {
            let pt: Vec<String> = self.point.iter().map(|x| format!("{x:.6e}")).collect();
            format!("isolated point ({})", pt.join(", "))
        }
    }
}

/// Enumerates every nonempty proper support and solves the complex-balance
/// equations restricted to it in log coordinates.
pub fn detect_boundary_equilibria(
    net: &ReactionNetwork,
    totals: Option<&[f64]>,
) -> Result<Vec<BoundaryEquilibrium>> {
    let n = net.n_species();
    if n > MAX_ENUMERATED_SPECIES {
        return Err(Error::EnumerationGuard {
            species: n,
            limit: MAX_ENUMERATED_SPECIES,
        });
    }
    let laws = law_basis(net);
    if let Some(t) = totals {
        if t.len() != laws.len() {
            return Err(Error::DimensionMismatch {
                expected: laws.len(),
                got: t.len(),
            });
        }
    }
    let graph = ComplexGraph::new(net);
    let full = (1usize << n) - 1;
    let mut found = Vec::new();
    for mask in 1..full {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let Some((point, jac)) = solve_support(net, &graph, &support, None) else {
            continue;
        };
        let rank = linalg::rank(&jac, RANK_TOL);
        let family_dimension = support.len() - rank;
        let (in_class, class_point) = match totals {
            None => (None, None),
            Some(t) => match solve_support(net, &graph, &support, Some((&laws, t))) {
                Some((p, _)) => (Some(true), Some(p)),
                None => (Some(false), None),
            },
        };
        found.push(BoundaryEquilibrium {
            support,
            point,
            family_dimension,
            in_class,
            class_point,
        });
    }
    Ok(found)
}

/// Complex-balance residuals (and optionally conservation constraints) as a
/// function of the logarithms of the supported species. Returns the solution
/// and the complex-balance Jacobian there.
fn solve_support(
    net: &ReactionNetwork,
    graph: &ComplexGraph,
    support: &[usize],
    class: Option<(&[Vec<f64>], &[f64])>,
) -> Option<(Vec<f64>, Matrix)> {
    let n = net.n_species();
    let c = graph.complexes.len();
    let extra = class.map_or(0, |(l, _)| l.len());
    let k = support.len();
    let lift = |w: &[f64]| -> Vec<f64> {
        let mut u = vec![0.0; n];
        for (&s, x) in support.iter().zip(w) {
            u[s] = x.exp();
        }
        u
    };
    let system = |w: &[f64]| -> (Vec<f64>, Matrix) {
        let u = lift(w);
        let fluxes = net.fluxes(&u);
        let mut f = graph.residuals(&fluxes);
        let mut jac = Matrix::zeros(c + extra, k);
        for (r, rx) in net.reactions().iter().enumerate() {
            if fluxes[r] == 0.0 {
                continue;
            }
            for (col, &s) in support.iter().enumerate() {
                let y = rx.reactant.coefficients()[s];
                if y != 0.0 {
                    jac[(graph.target[r], col)] += y * fluxes[r];
                    jac[(graph.source[r], col)] -= y * fluxes[r];
                }
            }
        }
        if let Some((laws, totals)) = class {
            for (q, (m, t)) in laws.iter().zip(totals).enumerate() {
                let mut s = 0.0;
                for (col, &sp) in support.iter().enumerate() {
                    s += m[sp] * u[sp];
                    jac[(c + q, col)] = m[sp] * u[sp];
                }
                f.push(s - t);
            }
        }
        (f, jac)
    };
    let accept = |w: &[f64], f: &[f64]| -> bool {
        // Relative to the traffic through each complex, so that driving the
        // supported coordinates towards zero does not count as convergence.
        let fluxes = net.fluxes(&lift(w));
        let mut traffic = vec![0.0; c];
        for (r, &q) in fluxes.iter().enumerate() {
            traffic[graph.source[r]] += q.abs();
            traffic[graph.target[r]] += q.abs();
        }
        let cb_ok = f[..c]
            .iter()
            .zip(&traffic)
            .all(|(r, t)| r.abs() <= RESIDUAL_TOL * t);
        let laws_ok = class.is_none_or(|(_, totals)| {
            f[c..]
                .iter()
                .zip(totals)
                .all(|(r, t)| r.abs() <= RESIDUAL_TOL * t.abs().max(1.0))
        });
        cb_ok && laws_ok
    };
    let opts = NewtonOptions {
        max_iterations: 100,
        max_halvings: 30,
    };
    for start in [0.0, 2.0, -2.0] {
        let r = linalg::damped_newton(&system, &accept, &vec![start; k], opts);
        if r.converged {
            let (_, jac) = system(&r.x);
            let mut cb = Matrix::zeros(c, k);
            for i in 0..c {
                cb.row_mut(i).copy_from_slice(jac.row(i));
            }
            return Some((lift(&r.x), cb));
        }
    }
    None
}

/// True when no boundary equilibrium meets the class of the given totals.
pub fn none_in_class(found: &[BoundaryEquilibrium]) -> bool {
    found.iter().all(|b| b.in_class != Some(true))
}
