//! Sampling validators for quasi-positivity, the entropy inequality and the
//! growth bound. Sampling can refute a condition but never certify it, so a
//! passing verdict reads "not violated on M samples".

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crn::RateLaw;
use crate::error::{Error, Result};
use crate::par;

/// Relaxed entropy condition `Σ f_i (μ_i + log u_i) ≤ K1 Σ u_i + K2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRelaxation {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// Interior samples, and samples per boundary face.
    pub samples: usize,
    /// Samples are drawn from `(0, u_max]^N`.
    pub u_max: f64,
    pub seed: u64,
    pub relaxation: Option<EntropyRelaxation>,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            samples: 10_000,
            u_max: 10.0,
            seed: 0,
            relaxation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    NotViolated { samples: usize },
    Violated {
        witness: Vec<f64>,
        /// The offending species for quasi-positivity.
        species: Option<usize>,
        value: f64,
    },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::NotViolated { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthVerdict {
    /// Exact total degree of `f`.
    pub degree: f64,
    pub dimension: usize,
    pub bound: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub quasi_positivity: Verdict,
    pub entropy_inequality: Verdict,
    pub multipliers: Vec<f64>,
    pub growth: GrowthVerdict,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.quasi_positivity.passed() && self.entropy_inequality.passed() && self.growth.admissible
    }
}

/// Largest admissible growth exponent: 3 in one dimension, 2 in two.
pub fn growth_bound(dimension: usize) -> Result<f64> {
    match dimension {
        1 => Ok(3.0),
        2 => Ok(2.0),
        d => Err(Error::InvalidArgument(format!(
            "spatial dimension must be 1 or 2, got {d}"
        ))),
    }
}

const POSITIVITY_TOL: f64 = 1e-12;
const ENTROPY_TOL: f64 = 1e-12;

pub fn validate_conditions<F: RateLaw + ?Sized>(
    f: &F,
    mu: &[f64],
    dimension: usize,
    plan: &SamplingPlan,
) -> Result<ConditionReport> {
    let n = f.n_species();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu.len(),
        });
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("entropy multipliers".into()));
    }
    if !(plan.u_max > 0.0 && plan.u_max.is_finite()) {
        return Err(Error::InvalidArgument("u_max must be positive".into()));
    }
    let bound = growth_bound(dimension)?;
    let degree = f.degree();

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let draw = |rng: &mut ChaCha8Rng| plan.u_max * (1.0 - rng.random::<f64>());

    // Boundary faces: deterministic probe (others = 1) first, then random
    // points, with further coordinates zeroed a quarter of the time.
    let mut face: Vec<(usize, Vec<f64>)> = Vec::with_capacity(n * (plan.samples + 1));
    for i in 0..n {
        let mut probe = vec![1.0; n];
        probe[i] = 0.0;
        face.push((i, probe));
    }
    for i in 0..n {
        for _ in 0..plan.samples {
            let mut u: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
            for (j, x) in u.iter_mut().enumerate() {
                if j == i || rng.random::<f64>() < 0.25 {
                    *x = 0.0;
                }
            }
            face.push((i, u));
        }
    }
    let mut interior: Vec<Vec<f64>> = Vec::with_capacity(plan.samples + 1);
    interior.push(vec![1.0; n]);
    for _ in 0..plan.samples {
        interior.push((0..n).map(|_| draw(&mut rng)).collect());
    }

    let face_values = par::map_indices(face.len(), |k| {
        let (i, u) = &face[k];
        let mut out = vec![0.0; n];
        f.eval_into(u, &mut out);
        out[*i]
    });
    let mut quasi_positivity = Verdict::NotViolated { samples: face.len() };
    for (k, v) in face_values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("f at {:?}", face[k].1)));
        }
        if *v < -POSITIVITY_TOL {
            quasi_positivity = Verdict::Violated {
                witness: face[k].1.clone(),
                species: Some(face[k].0),
                value: *v,
            };
            break;
        }
    }

    let entropy_values = par::map_indices(interior.len(), |k| {
        let u = &interior[k];
        let mut out = vec![0.0; n];
        f.eval_into(u, &mut out);
        let mut s = 0.0;
        for i in 0..n {
            s += out[i] * (mu[i] + u[i].ln());
        }
        s
    });
    let mut entropy_inequality = Verdict::NotViolated {
        samples: interior.len(),
    };
    for (k, v) in entropy_values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("entropy production at {:?}", interior[k])));
        }
        let size: f64 = interior[k].iter().map(|x| x.abs()).sum();
        let mut threshold = ENTROPY_TOL * (1.0 + size.powf(degree));
        if let Some(r) = plan.relaxation {
            threshold += r.k1 * size + r.k2;
        }
        if *v > threshold {
            entropy_inequality = Verdict::Violated {
                witness: interior[k].clone(),
                species: None,
                value: *v,
            };
            break;
        }
    }

    Ok(ConditionReport {
        quasi_positivity,
        entropy_inequality,
        multipliers: mu.to_vec(),
        growth: GrowthVerdict {
            degree,
            dimension,
            bound,
            admissible: degree <= bound,
        },
    })
}
