//! Reaction systems, state vectors, the combinatorial hazard function, its
//! Jacobian, and the coefficients of the linearised mean ODE.
//!
//! A system of `r` reactions over `p` species is described by the reactant
//! matrix `K` (p×r, how many particles of each species a firing consumes)
//! and the product matrix `S` (p×r, how many it produces). The net effect of
//! one firing of reaction `j` on the counts is column `j` of `V = S − K`.
//!
//! Reaction `j` fires at hazard λ_j(y) = θ_j · κ_j(y) where κ_j(y) is the
//! product over species of the binomial coefficients C(y_l, K_lj). The
//! linearisation of λ around an anchor state turns the conditional-mean ODE
//! into `m' = P m + b` with `P = V Θ H` and `b = V Θ (κ(y) − H y)`, where
//! `H` is the θ-free factor of the hazard Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::special::{binomial, binomial_derivative};

/// A quasi-reaction system: species, reactant/product stoichiometry, labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSystem {
    species_names: Vec<String>,
    reactant_matrix: DMatrix<u32>,
    product_matrix: DMatrix<u32>,
    net_matrix: DMatrix<f64>,
    reaction_labels: Vec<String>,
}

impl ReactionSystem {
    /// Build a system from reactant and product matrices (both p×r).
    ///
    /// The net matrix is always derived as `S − K`; it cannot be supplied
    /// independently.
    pub fn new(
        species_names: Vec<String>,
        reactant_matrix: DMatrix<u32>,
        product_matrix: DMatrix<u32>,
        reaction_labels: Vec<String>,
    ) -> Result<Self> {
        let (p, r) = reactant_matrix.shape();
        if p == 0 || r == 0 {
            return Err(Error::Invalid {
                what: "reaction system",
                reason: format!("need p ≥ 1 species and r ≥ 1 reactions, got p={p}, r={r}"),
            });
        }
        if product_matrix.shape() != (p, r) {
            return Err(Error::Invalid {
                what: "reaction system",
                reason: format!(
                    "product matrix is {:?}, reactant matrix is {:?}",
                    product_matrix.shape(),
                    (p, r)
                ),
            });
        }
        if species_names.len() != p {
            return Err(Error::Invalid {
                what: "reaction system",
                reason: format!("{} species names for p={p}", species_names.len()),
            });
        }
        if reaction_labels.len() != r {
            return Err(Error::Invalid {
                what: "reaction system",
                reason: format!("{} reaction labels for r={r}", reaction_labels.len()),
            });
        }
        let net_matrix = DMatrix::from_fn(p, r, |l, j| {
            product_matrix[(l, j)] as f64 - reactant_matrix[(l, j)] as f64
        });
        Ok(Self {
            species_names,
            reactant_matrix,
            product_matrix,
            net_matrix,
            reaction_labels,
        })
    }

    /// Number of species.
    pub fn n_species(&self) -> usize {
        self.reactant_matrix.nrows()
    }

    /// Number of reactions.
    pub fn n_reactions(&self) -> usize {
        self.reactant_matrix.ncols()
    }

    pub fn species_names(&self) -> &[String] {
        &self.species_names
    }

    pub fn reaction_labels(&self) -> &[String] {
        &self.reaction_labels
    }

    /// Reactant stoichiometry K (p×r).
    pub fn reactant_matrix(&self) -> &DMatrix<u32> {
        &self.reactant_matrix
    }

    /// Product stoichiometry S (p×r).
    pub fn product_matrix(&self) -> &DMatrix<u32> {
        &self.product_matrix
    }

    /// Net effect matrix V = S − K (p×r).
    pub fn net_matrix(&self) -> &DMatrix<f64> {
        &self.net_matrix
    }

    /// True when every reaction consumes at most one particle in total,
    /// which makes the hazard affine in the state.
    pub fn is_unitary(&self) -> bool {
        (0..self.n_reactions()).all(|j| self.reactant_matrix.column(j).iter().sum::<u32>() <= 1)
    }

    /// Restriction of the system to a subset of reaction columns.
    pub fn subsystem(&self, reactions: &[usize]) -> Result<Self> {
        for &j in reactions {
            if j >= self.n_reactions() {
                return Err(Error::Invalid {
                    what: "reaction subset",
                    reason: format!("index {j} out of range for r={}", self.n_reactions()),
                });
            }
        }
        let p = self.n_species();
        let k = DMatrix::from_fn(p, reactions.len(), |l, c| {
            self.reactant_matrix[(l, reactions[c])]
        });
        let s = DMatrix::from_fn(p, reactions.len(), |l, c| {
            self.product_matrix[(l, reactions[c])]
        });
        let labels = reactions
            .iter()
            .map(|&j| self.reaction_labels[j].clone())
            .collect();
        Self::new(self.species_names.clone(), k, s, labels)
    }
}

/// Particle counts: integer-valued when produced by simulation, real-valued
/// when carrying a predicted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    /// Validated constructor: entries must be finite and nonnegative.
    pub fn new(counts: DVector<f64>) -> Result<Self> {
        if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::Invalid {
                what: "state vector",
                reason: "entries must be finite and ≥ 0".into(),
            });
        }
        Ok(Self(counts))
    }

    /// Wrap a predicted mean without the nonnegativity check. Predictions
    /// are deliberately not clamped: a negative entry signals that the
    /// linearisation left its validity region and must stay visible to the
    /// fitting objective.
    pub fn from_prediction(values: DVector<f64>) -> Self {
        Self(values)
    }

    pub fn from_slice(counts: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(counts))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 0
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Nonnegative kinetic rates, one per reaction, units 1/time.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(DVector<f64>);

impl RateVector {
    pub fn new(rates: DVector<f64>) -> Result<Self> {
        if rates.iter().any(|&t| !t.is_finite() || t < 0.0) {
            return Err(Error::Invalid {
                what: "rate vector",
                reason: "rates must be finite and ≥ 0".into(),
            });
        }
        Ok(Self(rates))
    }

    pub fn from_slice(rates: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(rates))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 0
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

impl std::ops::Index<usize> for RateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Coefficients of the linearised mean ODE `m' = P m + b`, together with the
/// anchor they were expanded around. `P = V Θ H` and
/// `b = V Θ (κ(anchor) − H·anchor)`, so `P·anchor + b = V·λ(anchor)` exactly.
#[derive(Debug, Clone)]
pub struct LmaOperator {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub anchor_state: StateVector,
    pub anchor_theta: RateVector,
}

fn check_state(system: &ReactionSystem, y: &StateVector, context: &'static str) -> Result<()> {
    if y.len() != system.n_species() {
        return Err(Error::DimensionMismatch {
            context,
            expected: system.n_species(),
            found: y.len(),
        });
    }
    Ok(())
}

fn check_rates(system: &ReactionSystem, theta: &RateVector, context: &'static str) -> Result<()> {
    if theta.len() != system.n_reactions() {
        return Err(Error::DimensionMismatch {
            context,
            expected: system.n_reactions(),
            found: theta.len(),
        });
    }
    Ok(())
}

/// Combinatorial factor κ_j(y) = ∏_l C(y_l, K_lj) for every reaction.
///
/// C(y, k) is the gamma-generalised binomial, clamped to 0 for y < k, so
/// integer simulation states and real predicted means share one code path.
pub fn kappa(system: &ReactionSystem, y: &StateVector) -> Result<DVector<f64>> {
    check_state(system, y, "kappa")?;
    let k = system.reactant_matrix();
    Ok(DVector::from_fn(system.n_reactions(), |j, _| {
        (0..system.n_species())
            .map(|l| binomial(y[l], k[(l, j)]))
            .product()
    }))
}

/// Hazard vector λ(y; θ) = Θ·κ(y).
pub fn hazard(system: &ReactionSystem, y: &StateVector, theta: &RateVector) -> Result<DVector<f64>> {
    check_rates(system, theta, "hazard")?;
    let mut lambda = kappa(system, y)?;
    for j in 0..lambda.len() {
        lambda[j] *= theta[j];
    }
    Ok(lambda)
}

/// Hazard Jacobian Λ = ∂λ/∂y (r×p) and its θ-free factor H with Λ = Θ·H.
///
/// H_jl = [∏_{i≠l} C(y_i, K_ij)] · C(y_l, K_lj) · (ψ(y_l+1) − ψ(y_l−K_lj+1)).
/// Entries with K_lj = 0 vanish (the digamma difference cancels), and entries
/// with y_l < K_lj are defined as 0 since the hazard is identically zero on
/// that region.
pub fn hazard_jacobian(
    system: &ReactionSystem,
    y: &StateVector,
    theta: &RateVector,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_state(system, y, "hazard_jacobian")?;
    check_rates(system, theta, "hazard_jacobian")?;
    let p = system.n_species();
    let r = system.n_reactions();
    let k = system.reactant_matrix();

    let mut h = DMatrix::zeros(r, p);
    let mut factors = vec![0.0; p];
    let mut prefix = vec![0.0; p + 1];
    let mut suffix = vec![0.0; p + 1];
    for j in 0..r {
        for l in 0..p {
            factors[l] = binomial(y[l], k[(l, j)]);
        }
        // Exclusive products via prefix/suffix, no division (factors may be 0).
        prefix[0] = 1.0;
        for l in 0..p {
            prefix[l + 1] = prefix[l] * factors[l];
        }
        suffix[p] = 1.0;
        for l in (0..p).rev() {
            suffix[l] = suffix[l + 1] * factors[l];
        }
        for l in 0..p {
            let others = prefix[l] * suffix[l + 1];
            if others != 0.0 {
                h[(j, l)] = others * binomial_derivative(y[l], k[(l, j)]);
            }
        }
    }
    let mut lambda_jac = h.clone();
    for j in 0..r {
        for l in 0..p {
            lambda_jac[(j, l)] *= theta[j];
        }
    }
    Ok((lambda_jac, h))
}

/// Linearisation coefficients of the mean ODE around anchor `y`:
/// `P = V Θ H`, `b = V Θ (κ(y) − H y)`.
pub fn lma_coefficients(
    system: &ReactionSystem,
    y: &StateVector,
    theta: &RateVector,
) -> Result<LmaOperator> {
    let kap = kappa(system, y)?;
    let (_, h) = hazard_jacobian(system, y, theta)?;
    let v = system.net_matrix();
    let r = system.n_reactions();

    // V·Θ as a single p×r product: scale V's columns by θ.
    let mut v_theta = v.clone();
    for j in 0..r {
        let mut col = v_theta.column_mut(j);
        col *= theta[j];
    }
    let matrix = &v_theta * &h;
    let offset = &v_theta * (kap - &h * y.as_vector());
    Ok(LmaOperator {
        matrix,
        offset,
        anchor_state: y.clone(),
        anchor_theta: theta.clone(),
    })
}
