use crate::crn::ReactionNetwork;
use crate::linalg::{self, Matrix};

const RREF_TOL: f64 = 1e-12;

/// Basis of the left null space of the stoichiometric matrix, in reduced
/// row-echelon form.
pub fn conservation_laws(net: &ReactionNetwork) -> Vec<Vec<f64>> {
    let st = net.stoichiometric_matrix().transpose();
    let basis = linalg::null_space(&st, RREF_TOL);
    if basis.is_empty() {
        return basis;
    }
    let (r, pivots) = linalg::rref(&Matrix::from_rows(&basis), RREF_TOL);
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

/// The laws that define equilibrium totals: the declared conserved
/// quantities when the network names them, otherwise [`conservation_laws`].
pub fn law_basis(net: &ReactionNetwork) -> Vec<Vec<f64>> {
    if net.conserved().is_empty() {
        conservation_laws(net)
    } else {
        net.conserved().iter().map(|q| q.coefficients.clone()).collect()
    }
}

pub fn law_names(net: &ReactionNetwork) -> Vec<String> {
    if net.conserved().is_empty() {
        (0..conservation_laws(net).len()).map(|i| format!("law{i}")).collect()
    } else {
        net.conserved().iter().map(|q| q.name.clone()).collect()
    }
}

/// `m · u` for every law `m`.
pub fn totals(laws: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
    laws.iter()
        .map(|m| m.iter().zip(u).map(|(a, b)| a * b).sum())
        .collect()
}
