use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Stoichiometric coefficients of one side of a reaction, dense over species.
#[derive(Debug, Clone, PartialEq)]
pub struct Complex {
    coefficients: Vec<f64>,
}

impl Complex {
    /// Each coefficient must be finite and lie in `{0} ∪ [1, ∞)`.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        for (i, &c) in coefficients.iter().enumerate() {
            if !c.is_finite() || c < 0.0 || (c > 0.0 && c < 1.0) {
                return Err(Error::InvalidNetwork(format!(
                    "stoichiometric coefficient {c} of species {i} not in {{0}} ∪ [1, ∞)"
                )));
            }
        }
        Ok(Self { coefficients })
    }

    pub fn empty(n_species: usize) -> Self {
        Self {
            coefficients: vec![0.0; n_species],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    /// `|y| = Σ y_i`.
    pub fn order(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    pub fn monomial(&self, u: &[f64]) -> f64 {
        monomial(&self.coefficients, u)
    }
}

#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    if y == 1.0 {
        x
    } else if y.fract() == 0.0 && y <= 64.0 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

/// `Π_j u_j^{y_j}` with `0^0 = 1`.
#[inline]
pub(crate) fn monomial(exponents: &[f64], u: &[f64]) -> f64 {
    let mut p = 1.0;
    for (&y, &x) in exponents.iter().zip(u) {
        if y != 0.0 {
            p *= pow(x, y);
        }
    }
    p
}

/// Partial derivative of the monomial with respect to `u[j]`.
fn monomial_derivative(exponents: &[f64], u: &[f64], j: usize) -> Result<f64> {
    let yj = exponents[j];
    if yj == 0.0 {
        return Ok(0.0);
    }
    if u[j] == 0.0 && yj > 0.0 && yj < 1.0 {
        return Err(Error::NonDifferentiable {
            species: j,
            exponent: yj,
        });
    }
    let mut p = yj * if yj == 1.0 { 1.0 } else { pow(u[j], yj - 1.0) };
    for (l, (&y, &x)) in exponents.iter().zip(u).enumerate() {
        if l != j && y != 0.0 {
            p *= pow(x, y);
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate: f64,
}

/// A named linear combination of species that the reactions leave invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedQuantity {
    pub name: String,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    diffusion: Vec<f64>,
    conserved: Vec<ConservedQuantity>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>, diffusion: Vec<f64>) -> Result<Self> {
        let n = species.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("no species declared".into()));
        }
        for (i, s) in species.iter().enumerate() {
            if species[..i].contains(s) {
                return Err(Error::DuplicateSpecies(s.clone()));
            }
        }
        if reactions.is_empty() {
            return Err(Error::InvalidNetwork("no reactions declared".into()));
        }
        if diffusion.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: diffusion.len(),
            });
        }
        for &d in &diffusion {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::NonPositive {
                    what: "diffusion coefficient".into(),
                    value: d,
                });
            }
        }
        for r in &reactions {
            if r.reactant.coefficients.len() != n || r.product.coefficients.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.reactant.coefficients.len().min(r.product.coefficients.len()),
                });
            }
            if !(r.rate > 0.0 && r.rate.is_finite()) {
                return Err(Error::NonPositive {
                    what: "rate constant".into(),
                    value: r.rate,
                });
            }
            if r.reactant == r.product {
                return Err(Error::InvalidNetwork(
                    "reaction with identical reactant and product".into(),
                ));
            }
        }
        Ok(Self {
            species,
            reactions,
            diffusion,
            conserved: Vec::new(),
        })
    }

    /// Attaches a named basis of conservation laws. The vectors must be left
    /// null vectors of the stoichiometric matrix and span the whole left null
    /// space.
    pub fn with_conserved(mut self, conserved: Vec<ConservedQuantity>) -> Result<Self> {
        let n = self.n_species();
        let s = self.stoichiometric_matrix();
        let scale = s.max_abs().max(1.0);
        for q in &conserved {
            if q.coefficients.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: q.coefficients.len(),
                });
            }
            let mag = q.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if mag == 0.0 {
                return Err(Error::InvalidNetwork(format!("conserved quantity `{}` is zero", q.name)));
            }
            let st = s.transpose();
            for v in st.mul_vec(&q.coefficients) {
                if v.abs() > 1e-12 * scale * mag {
                    return Err(Error::InvalidNetwork(format!(
                        "`{}` is not conserved by the reactions",
                        q.name
                    )));
                }
            }
        }
        if !conserved.is_empty() {
            let expected = n - linalg::rank(&s, 1e-12);
            let rows: Vec<Vec<f64>> = conserved.iter().map(|q| q.coefficients.clone()).collect();
            let got = linalg::rank(&Matrix::from_rows(&rows), 1e-12);
            if got != conserved.len() || got != expected {
                return Err(Error::InvalidNetwork(format!(
                    "declared conserved quantities must form a basis of {expected} independent laws"
                )));
            }
        }
        self.conserved = conserved;
        Ok(self)
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn conserved(&self) -> &[ConservedQuantity] {
        &self.conserved
    }

    /// Distinct complexes in order of first appearance (reactant before product).
    pub fn complexes(&self) -> Vec<Complex> {
        let mut out: Vec<Complex> = Vec::new();
        for r in &self.reactions {
            for c in [&r.reactant, &r.product] {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    /// Per-reaction mass-action fluxes `k_r u^{y_r}`.
    pub fn fluxes(&self, u: &[f64]) -> Vec<f64> {
        self.reactions
            .iter()
            .map(|r| r.rate * r.reactant.monomial(u))
            .collect()
    }

    /// Column `r` is `y'_r - y_r`.
    pub fn stoichiometric_matrix(&self) -> Matrix {
        let n = self.n_species();
        let mut s = Matrix::zeros(n, self.n_reactions());
        for (r, rx) in self.reactions.iter().enumerate() {
            for i in 0..n {
                s[(i, r)] = rx.product.coefficients[i] - rx.reactant.coefficients[i];
            }
        }
        s
    }

    /// Largest reactant order `max_r |y_r|`: the total degree of `f`.
    pub fn max_reactant_order(&self) -> f64 {
        self.reactions
            .iter()
            .map(|r| r.reactant.order())
            .fold(0.0, f64::max)
    }
}

fn check_state(n: usize, u: &[f64]) -> Result<()> {
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.len(),
        });
    }
    for (i, &x) in u.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("u[{i}] = {x}")));
        }
        if x < 0.0 {
            return Err(Error::NegativeInput { index: i, value: x });
        }
    }
    Ok(())
}

/// A reaction term `f(u)` that can be evaluated pointwise.
pub trait RateLaw: Sync {
    fn n_species(&self) -> usize;

    /// Unchecked evaluation into `out`; callers guarantee lengths.
    fn eval_into(&self, u: &[f64], out: &mut [f64]);

    /// Highest total degree of any monomial in `f`.
    fn degree(&self) -> f64;

    fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_state(self.n_species(), u)?;
        let mut out = vec![0.0; self.n_species()];
        self.eval_into(u, &mut out);
        Ok(out)
    }
}

impl RateLaw for ReactionNetwork {
    fn n_species(&self) -> usize {
        self.species.len()
    }

    /// `f_i = Σ_r (y'_{r,i} - y_{r,i}) k_r u^{y_r}`, accumulated over `r` in
    /// order so that it matches `S · fluxes(u)` bit for bit.
    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for r in &self.reactions {
            let flux = r.rate * r.reactant.monomial(u);
            for (i, o) in out.iter_mut().enumerate() {
                *o += (r.product.coefficients[i] - r.reactant.coefficients[i]) * flux;
            }
        }
    }

    fn degree(&self) -> f64 {
        self.max_reactant_order()
    }
}

/// Mass-action right-hand side with input validation.
pub fn mass_action_rhs(net: &ReactionNetwork, u: &[f64]) -> Result<Vec<f64>> {
    net.eval(u)
}

/// Analytic Jacobian `∂f_i/∂u_j` of the mass-action right-hand side.
pub fn mass_action_jacobian(net: &ReactionNetwork, u: &[f64]) -> Result<Matrix> {
    let n = net.n_species();
    check_state(n, u)?;
    let mut jac = Matrix::zeros(n, n);
    for r in &net.reactions {
        let y = r.reactant.coefficients();
        for j in 0..n {
            if y[j] == 0.0 {
                continue;
            }
            let d = r.rate * monomial_derivative(y, u, j)?;
            for i in 0..n {
                jac[(i, j)] += (r.product.coefficients[i] - y[i]) * d;
            }
        }
    }
    Ok(jac)
}

pub fn stoichiometric_matrix(net: &ReactionNetwork) -> Matrix {
    net.stoichiometric_matrix()
}

/// One signed monomial `coefficient · Π u_j^{exponents_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub exponents: Vec<f64>,
}

/// General polynomial nonlinearity, one term list per species. Lets the
/// condition validators see systems that are not mass action.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    terms: Vec<Vec<Term>>,
    growth_hint: Option<f64>,
}

impl PolynomialSystem {
    pub fn new(terms: Vec<Vec<Term>>) -> Result<Self> {
        let n = terms.len();
        if n == 0 {
            return Err(Error::InvalidArgument("polynomial system needs at least one species".into()));
        }
        for t in terms.iter().flatten() {
            if t.exponents.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: t.exponents.len(),
                });
            }
            if !t.coefficient.is_finite() || t.exponents.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(Error::InvalidArgument(
                    "term coefficients must be finite and exponents nonnegative".into(),
                ));
            }
        }
        Ok(Self {
            terms,
            growth_hint: None,
        })
    }

    /// The zero nonlinearity on `n` species.
    pub fn zero(n: usize) -> Self {
        Self {
            terms: vec![Vec::new(); n],
            growth_hint: None,
        }
    }

    /// The polynomial form of a mass-action network.
    pub fn from_network(net: &ReactionNetwork) -> Self {
        let n = net.n_species();
        let mut terms = vec![Vec::new(); n];
        for r in net.reactions() {
            for (i, t) in terms.iter_mut().enumerate() {
                let c = r.product.coefficients()[i] - r.reactant.coefficients()[i];
                if c != 0.0 {
                    t.push(Term {
                        coefficient: c * r.rate,
                        exponents: r.reactant.coefficients().to_vec(),
                    });
                }
            }
        }
        Self {
            terms,
            growth_hint: Some(net.max_reactant_order()),
        }
    }

    pub fn with_growth_hint(mut self, mu: f64) -> Self {
        self.growth_hint = Some(mu);
        self
    }

    pub fn growth_hint(&self) -> Option<f64> {
        self.growth_hint
    }

    pub fn terms(&self) -> &[Vec<Term>] {
        &self.terms
    }

    pub fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let n = self.terms.len();
        check_state(n, u)?;
        let mut jac = Matrix::zeros(n, n);
        for (i, terms) in self.terms.iter().enumerate() {
            for t in terms {
                for j in 0..n {
                    if t.exponents[j] != 0.0 {
                        jac[(i, j)] += t.coefficient * monomial_derivative(&t.exponents, u, j)?;
                    }
                }
            }
        }
        Ok(jac)
    }
}

impl RateLaw for PolynomialSystem {
    fn n_species(&self) -> usize {
        self.terms.len()
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.terms) {
            let mut s = 0.0;
            for t in terms {
                s += t.coefficient * monomial(&t.exponents, u);
            }
            *o = s;
        }
    }

    /// Exact total degree of the highest nonzero monomial.
    fn degree(&self) -> f64 {
        self.terms
            .iter()
            .flatten()
            .filter(|t| t.coefficient != 0.0)
            .map(|t| t.exponents.iter().sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn polynomial_rhs(sys: &PolynomialSystem, u: &[f64]) -> Result<Vec<f64>> {
    sys.eval(u)
}

/// Either kind of nonlinearity the solver can integrate.
#[derive(Debug, Clone, PartialEq)]
pub enum Kinetics {
    MassAction(ReactionNetwork),
    Polynomial(PolynomialSystem),
}

impl Kinetics {
    pub fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        match self {
            Kinetics::MassAction(net) => mass_action_jacobian(net, u),
            Kinetics::Polynomial(sys) => sys.jacobian(u),
        }
    }

    pub fn network(&self) -> Option<&ReactionNetwork> {
        match self {
            Kinetics::MassAction(net) => Some(net),
            Kinetics::Polynomial(_) => None,
        }
    }
}

impl RateLaw for Kinetics {
    fn n_species(&self) -> usize {
        match self {
            Kinetics::MassAction(n) => n.n_species(),
            Kinetics::Polynomial(p) => p.n_species(),
        }
    }

    #[inline]
    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Kinetics::MassAction(n) => n.eval_into(u, out),
            Kinetics::Polynomial(p) => p.eval_into(u, out),
        }
    }

    fn degree(&self) -> f64 {
        match self {
            Kinetics::MassAction(n) => n.degree(),
            Kinetics::Polynomial(p) => p.degree(),
        }
    }
}
