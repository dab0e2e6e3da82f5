//! Parameter sensitivities of the forward predictor and Fisher-information
//! standard errors.
//!
//! Only the rate diagonal Θ carries θ-dependence: the anchor quantities H,
//! κ and y0 are all θ-free (Λ = ΘH makes this easy to get wrong), so
//! ∂P/∂θ_j = V e_j H and ∂b/∂θ_j = V e_j (κ − H y0) are rank-one and the
//! derivative of the predictor assembles from Fréchet derivatives of the
//! matrix exponential.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forecast::lma_predict_op;
use crate::gillespie::ObservationSet;
use crate::matfun::{condition_estimate, expm, expm_frechet, inverse, norm_1};
use crate::system::{hazard_jacobian, kappa, lma_coefficients, RateVector, ReactionSystem, StateVector};

/// Which assembly of the predictor derivative to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityPath {
    /// Explicit-inverse assembly when P is well conditioned, φ1 otherwise.
    Auto,
    /// The four-term assembly using P⁻¹ directly; requires invertible P.
    ExplicitInverse,
    /// Differentiation of the φ1 construction via a nested block
    /// augmentation; valid for singular P.
    Phi1Form,
}

/// Conditioning threshold for the automatic path choice: below this the two
/// assemblies agree to ~1e-8, above it the explicit inverse loses digits
/// while the φ1 form stays exact to expm accuracy.
const EXPLICIT_PATH_MAX_COND: f64 = 1e6;

struct SensitivityParts {
    p_matrix: DMatrix<f64>,
    offset: DVector<f64>,
    h_factor: DMatrix<f64>,
    kappa_anchor: DVector<f64>,
    anchor: DVector<f64>,
}

fn assemble_parts(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
) -> Result<SensitivityParts> {
    let op = lma_coefficients(system, y0, theta)?;
    let (_, h_factor) = hazard_jacobian(system, y0, theta)?;
    let kappa_anchor = kappa(system, y0)?;
    Ok(SensitivityParts {
        p_matrix: op.matrix,
        offset: op.offset,
        h_factor,
        kappa_anchor,
        anchor: y0.as_vector().clone(),
    })
}

/// ∂m(t+s|t)/∂θ as a p×r matrix, column j the derivative along rate j.
pub fn predict_sensitivity(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    s: f64,
) -> Result<DMatrix<f64>> {
    predict_sensitivity_with(system, theta, y0, s, SensitivityPath::Auto)
}

/// [`predict_sensitivity`] with an explicit path choice (used to cross-check
/// the two assemblies against each other).
pub fn predict_sensitivity_with(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    s: f64,
    path: SensitivityPath,
) -> Result<DMatrix<f64>> {
    let p = system.n_species();
    let r = system.n_reactions();
    if s == 0.0 {
        // m(t|t) = y0 does not depend on θ.
        return Ok(DMatrix::zeros(p, r));
    }
    let parts = assemble_parts(system, theta, y0)?;
    match path {
        SensitivityPath::ExplicitInverse => explicit_inverse_path(&parts, system, s),
        SensitivityPath::Phi1Form => phi1_path(&parts, system, s),
        SensitivityPath::Auto => {
            if condition_estimate(&parts.p_matrix) <= EXPLICIT_PATH_MAX_COND {
                explicit_inverse_path(&parts, system, s)
            } else {
                phi1_path(&parts, system, s)
            }
        }
    }
}

/// Rank-one direction ∂P/∂θ_j = V e_j H = v_j h_jᵀ.
fn direction(parts: &SensitivityParts, system: &ReactionSystem, j: usize) -> DMatrix<f64> {
    let v_j = system.net_matrix().column(j);
    let h_j = parts.h_factor.row(j);
    v_j * h_j
}

/// ∂b/∂θ_j = V e_j (κ − H y0) = v_j · (κ_j − h_jᵀ y0).
fn offset_direction(parts: &SensitivityParts, system: &ReactionSystem, j: usize) -> DVector<f64> {
    let scalar = parts.kappa_anchor[j] - (parts.h_factor.row(j) * &parts.anchor)[0];
    DVector::from(system.net_matrix().column(j) * scalar)
}

/// Four-term assembly:
/// ξ_j = L(sP, s·P'_j)·y0 − P⁻¹P'_jP⁻¹(e^{sP}−I)b + P⁻¹L(sP, s·P'_j)b
///       + P⁻¹(e^{sP}−I)b'_j.
fn explicit_inverse_path(
    parts: &SensitivityParts,
    system: &ReactionSystem,
    s: f64,
) -> Result<DMatrix<f64>> {
    let p = system.n_species();
    let r = system.n_reactions();
    let p_inv = inverse(&parts.p_matrix)?;
    let scaled = &parts.p_matrix * s;
    let growth = expm(&scaled)?;
    let growth_minus_i = &growth - DMatrix::<f64>::identity(p, p);
    let em_b = &growth_minus_i * &parts.offset;

    let mut xi = DMatrix::zeros(p, r);
    for j in 0..r {
        let dir = direction(parts, system, j);
        let frechet = expm_frechet(&scaled, &(&dir * s))?;
        let term1 = &frechet * &parts.anchor;
        let term2 = -(&p_inv * &dir * &p_inv * &em_b);
        let term3 = &p_inv * (&frechet * &parts.offset);
        let term4 = &p_inv * (&growth_minus_i * offset_direction(parts, system, j));
        let col = term1 + term2 + term3 + term4;
        xi.set_column(j, &col);
    }
    check_finite(xi, &parts.p_matrix, s)
}

/// Differentiate m(s) = e^{sP} y0 + Φ b with Φ = ∫₀ˢ e^{uP} du directly:
/// dΦ_j is the upper-right block of the Fréchet derivative of the augmented
/// exponential exp([[sP, sI],[0,0]]) in direction [[s·P'_j, 0],[0,0]].
fn phi1_path(parts: &SensitivityParts, system: &ReactionSystem, s: f64) -> Result<DMatrix<f64>> {
    let p = system.n_species();
    let r = system.n_reactions();
    let scaled = &parts.p_matrix * s;

    let mut aug = DMatrix::zeros(2 * p, 2 * p);
    aug.view_mut((0, 0), (p, p)).copy_from(&scaled);
    for i in 0..p {
        aug[(i, p + i)] = s;
    }
    let phi = expm(&aug)?.view((0, p), (p, p)).into_owned();

    let mut xi = DMatrix::zeros(p, r);
    for j in 0..r {
        let dir = direction(parts, system, j);
        let frechet = expm_frechet(&scaled, &(&dir * s))?;
        let term1 = &frechet * &parts.anchor;

        let mut aug_dir = DMatrix::zeros(2 * p, 2 * p);
        aug_dir.view_mut((0, 0), (p, p)).copy_from(&(&dir * s));
        let d_phi = expm_frechet(&aug, &aug_dir)?
            .view((0, p), (p, p))
            .into_owned();
        let term2 = d_phi * &parts.offset;
        let term3 = &phi * offset_direction(parts, system, j);
        let col = term1 + term2 + term3;
        xi.set_column(j, &col);
    }
    check_finite(xi, &parts.p_matrix, s)
}

fn check_finite(xi: DMatrix<f64>, p_matrix: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>> {
    if xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow {
            context: "predict_sensitivity",
            norm: s * norm_1(p_matrix),
        });
    }
    Ok(xi)
}

/// Observed-information approximation Σ_ci ξ_ciᵀ r_ci r_ciᵀ ξ_ci with
/// r_ci = Y_ci − m_ci: symmetric positive semidefinite r×r.
pub fn fisher_information(
    theta_hat: &RateVector,
    data: &ObservationSet,
    system: &ReactionSystem,
) -> Result<DMatrix<f64>> {
    let r = system.n_reactions();
    let mut info = DMatrix::zeros(r, r);
    for rep in &data.replicates {
        for i in 1..rep.times.len() {
            let dt = rep.times[i] - rep.times[i - 1];
            let anchor = &rep.states[i - 1];
            let op = lma_coefficients(system, anchor, theta_hat)?;
            let m = lma_predict_op(&op, dt)?;
            let residual = rep.states[i].as_vector() - m.as_vector();
            let xi = predict_sensitivity(system, theta_hat, anchor, dt)?;
            let g = xi.transpose() * residual;
            info += &g * g.transpose();
        }
    }
    Ok(info)
}

/// Standard errors plus identifiability diagnostics.
#[derive(Debug, Clone)]
pub struct StdErrReport {
    /// One entry per rate; +∞ on coordinates inside the information null
    /// space.
    pub stderr: Vec<f64>,
    /// Rates supported by (numerically) null eigendirections of the
    /// information matrix.
    pub non_identifiable: Vec<usize>,
}

/// √diag(I⁻¹) at the fitted rates (inverse first, then diagonal).
///
/// A singular information matrix yields +∞ on the null-space support
/// coordinates, finite pseudo-inverse values elsewhere, and lists the
/// affected rates.
pub fn stderr(
    theta_hat: &RateVector,
    data: &ObservationSet,
    system: &ReactionSystem,
) -> Result<StdErrReport> {
    let info = fisher_information(theta_hat, data, system)?;
    let r = info.nrows();
    let eig = info.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = 1e-12 * max_eig.max(f64::MIN_POSITIVE);

    let mut non_identifiable = Vec::new();
    for (k, &val) in eig.eigenvalues.iter().enumerate() {
        if val <= cutoff {
            for j in 0..r {
                if eig.eigenvectors[(j, k)].abs() > 1e-8 && !non_identifiable.contains(&j) {
                    non_identifiable.push(j);
                }
            }
        }
    }
    non_identifiable.sort_unstable();

    // Pseudo-inverse diagonal over the numerically invertible eigenspace.
    let mut stderr = vec![0.0; r];
    for j in 0..r {
        if non_identifiable.contains(&j) {
            stderr[j] = f64::INFINITY;
            continue;
        }
        let mut var = 0.0;
        for k in 0..r {
            if eig.eigenvalues[k] > cutoff {
                var += eig.eigenvectors[(j, k)].powi(2) / eig.eigenvalues[k];
            }
        }
        stderr[j] = var.sqrt();
    }
    Ok(StdErrReport {
        stderr,
        non_identifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::load_preset;
    use crate::forecast::lma_predict;
    use crate::gillespie::{Replicate, ObservationSet};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn pure_death() -> ReactionSystem {
        ReactionSystem::new(
            vec!["X".into()],
            DMatrix::from_row_slice(1, 1, &[1]),
            DMatrix::from_row_slice(1, 1, &[0]),
            vec!["X->0".into()],
        )
        .unwrap()
    }

    fn state(v: &[f64]) -> StateVector {
        StateVector::from_slice(v).unwrap()
    }

    fn rates(v: &[f64]) -> RateVector {
        RateVector::from_slice(v).unwrap()
    }

    #[test]
    fn zero_horizon_has_zero_sensitivity() {
        let p = load_preset("cyclic3").unwrap();
        let xi = predict_sensitivity(&p.system, &p.theta_true, &p.y0, 0.0).unwrap();
        assert_eq!(xi, DMatrix::zeros(3, 3));
    }

    #[test]
    fn scalar_death_matches_hand_derivative() {
        // m(s) = y0·e^{−θs} ⇒ ∂m/∂θ = −s·y0·e^{−θs} = −200·e^{−1}.
        let sys = pure_death();
        let xi = predict_sensitivity(&sys, &rates(&[0.5]), &state(&[100.0]), 2.0).unwrap();
        assert_relative_eq!(xi[(0, 0)], -200.0 * (-1.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn matches_finite_differences_of_predictor() {
        let p = load_preset("cyclic3").unwrap();
        let draws = [
            ([10.0, 20.0, 10.0], [0.2, 0.1, 0.2], 0.05),
            ([40.0, 8.0, 23.0], [0.8, 0.01, 0.4], 0.01),
            ([5.0, 5.0, 5.0], [1.0, 1.0, 1.0], 0.02),
        ];
        for (y, th, s) in draws {
            let y0 = state(&y);
            let xi = predict_sensitivity(&p.system, &rates(&th), &y0, s).unwrap();
            for j in 0..3 {
                let h = 1e-6 * th[j].max(1.0);
                let mut hi = th;
                let mut lo = th;
                hi[j] += h;
                lo[j] -= h;
                let m_hi = lma_predict(&p.system, &rates(&hi), &y0, s).unwrap();
                let m_lo = lma_predict(&p.system, &rates(&lo), &y0, s).unwrap();
                // Column-wise relative error: single near-zero entries are
                // dominated by the O(ε/h) noise floor of the difference
                // quotient.
                let mut err2 = 0.0;
                let mut ref2 = 0.0;
                for l in 0..3 {
                    let fd = (m_hi[l] - m_lo[l]) / (2.0 * h);
                    err2 += (xi[(l, j)] - fd).powi(2);
                    ref2 += fd * fd;
                }
                assert!(
                    err2.sqrt() / ref2.sqrt().max(1e-6) < 1e-5,
                    "column {j}: rel err {}",
                    err2.sqrt() / ref2.sqrt()
                );
            }
        }
    }

    #[test]
    fn explicit_and_phi1_paths_agree_when_well_conditioned() {
        let p = load_preset("cyclic3").unwrap();
        for (y, th, s) in [
            ([10.0, 20.0, 10.0], [0.2, 0.1, 0.2], 0.1),
            ([15.0, 9.0, 30.0], [0.5, 0.3, 0.7], 0.04),
        ] {
            let y0 = state(&y);
            let th = rates(&th);
            let cond = condition_estimate(
                &lma_coefficients(&p.system, &y0, &th).unwrap().matrix,
            );
            assert!(cond < 1e6, "fixture should be well conditioned, got {cond}");
            let explicit = predict_sensitivity_with(
                &p.system, &th, &y0, s, SensitivityPath::ExplicitInverse,
            )
            .unwrap();
            let phi1 = predict_sensitivity_with(&p.system, &th, &y0, s, SensitivityPath::Phi1Form)
                .unwrap();
            let scale = norm_1(&explicit).max(1.0);
            assert!((explicit - phi1).amax() / scale < 1e-8);
        }
    }

    #[test]
    fn phi1_path_covers_singular_anchor() {
        // Source-only system: P = 0 is singular, m(s) = y0 + sθ ⇒ ∂m/∂θ = s.
        let sys = ReactionSystem::new(
            vec!["X".into()],
            DMatrix::from_row_slice(1, 1, &[0]),
            DMatrix::from_row_slice(1, 1, &[1]),
            vec!["0->X".into()],
        )
        .unwrap();
        let xi = predict_sensitivity(&sys, &rates(&[3.0]), &state(&[5.0]), 2.0).unwrap();
        assert_relative_eq!(xi[(0, 0)], 2.0, max_relative = 1e-12);
    }

    /// 64-point Gauss–Legendre quadrature of ∫₀¹ e^{(1−u)A} E e^{uA} du as an
    /// independent oracle for the block-augmented Fréchet derivative.
    #[test]
    fn frechet_matches_gauss_legendre_integral() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.3, -0.2, 0.5, 0.7, 0.1, -0.4, -0.6, 0.2, 0.25],
        );
        let e = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.3, -0.2, 0.4, -0.8, 0.6, 0.1, 0.9, -0.5],
        );
        let (nodes, weights) = gauss_legendre_01(64);
        let mut integral = DMatrix::zeros(3, 3);
        for (u, w) in nodes.iter().zip(weights.iter()) {
            let left = expm(&(&a * (1.0 - u))).unwrap();
            let right = expm(&(&a * *u)).unwrap();
            integral += (left * &e * right) * *w;
        }
        let frechet = expm_frechet(&a, &e).unwrap();
        assert!((integral - frechet).amax() < 1e-8);
    }

    /// Nodes and weights for Gauss–Legendre on [0, 1], via Newton iteration
    /// on the Legendre polynomial (standard three-term recurrence).
    fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Initial guess: Chebyshev-like approximation.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[i] = 0.5 * (1.0 - x); // map [-1,1] → [0,1], reversed order is fine
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    }

    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = pk;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    }

    fn tiny_dataset(system: &ReactionSystem, theta: &RateVector, noise: f64) -> ObservationSet {
        // Single-transition replicates from fixed anchors: the residual of
        // each transition is exactly ±noise per component, while the
        // anchors (and hence the sensitivities) do not depend on `noise`.
        let anchors = [
            [100.0, 80.0, 60.0],
            [50.0, 90.0, 20.0],
            [120.0, 30.0, 70.0],
            [64.0, 64.0, 64.0],
        ];
        let replicates = anchors
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let y0 = state(a);
                let m = lma_predict(system, theta, &y0, 0.3).unwrap();
                let bump = if k % 2 == 0 { noise } else { -noise };
                let observed: Vec<f64> = m.as_vector().iter().map(|&v| v + bump).collect();
                Replicate {
                    times: vec![0.0, 0.3],
                    states: vec![y0, state(&observed)],
                }
            })
            .collect();
        ObservationSet::new(replicates).unwrap()
    }

    fn unitary_chain() -> ReactionSystem {
        // A→B, B→C, C→∅.
        let k = DMatrix::from_row_slice(3, 3, &[1, 0, 0, 0, 1, 0, 0, 0, 1]);
        let s = DMatrix::from_row_slice(3, 3, &[0, 0, 0, 1, 0, 0, 0, 1, 0]);
        ReactionSystem::new(
            vec!["A".into(), "B".into(), "C".into()],
            k,
            s,
            vec!["A->B".into(), "B->C".into(), "C->0".into()],
        )
        .unwrap()
    }

    #[test]
    fn zero_residuals_give_zero_information_and_warning() {
        let sys = unitary_chain();
        let theta = rates(&[0.5, 0.3, 0.2]);
        let data = tiny_dataset(&sys, &theta, 0.0);
        let info = fisher_information(&theta, &data, &sys).unwrap();
        assert!(norm_1(&info) < 1e-12);
        let report = stderr(&theta, &data, &sys).unwrap();
        assert!(report.stderr.iter().all(|s| s.is_infinite()));
        assert_eq!(report.non_identifiable, vec![0, 1, 2]);
    }

    #[test]
    fn single_observation_scalar_assembly() {
        // One residual, one rate: information = (ξᵀ r)².
        let sys = pure_death();
        let theta = rates(&[0.8]);
        let y0 = state(&[50.0]);
        let dt = 0.4;
        let m = lma_predict(&sys, &theta, &y0, dt).unwrap();
        let observed = 0.9 * m[0];
        let data = ObservationSet::new(vec![Replicate {
            times: vec![0.0, dt],
            states: vec![y0.clone(), state(&[observed])],
        }])
        .unwrap();
        let xi = predict_sensitivity(&sys, &theta, &y0, dt).unwrap()[(0, 0)];
        let residual = observed - m[0];
        let info = fisher_information(&theta, &data, &sys).unwrap();
        assert_relative_eq!(info[(0, 0)], (xi * residual).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn information_is_symmetric_psd() {
        let p = load_preset("cyclic3").unwrap();
        let data = crate::gillespie::simulate_dataset(
            &p.system,
            &p.theta_true,
            &p.y0,
            3,
            20,
            8,
            1234,
        )
        .unwrap();
        let info = fisher_information(&p.theta_true, &data, &p.system).unwrap();
        assert!((info.clone() - info.transpose()).amax() < 1e-9 * norm_1(&info));
        let eig = info.symmetric_eigen();
        for val in eig.eigenvalues.iter() {
            assert!(*val >= -1e-9, "eigenvalue {val} < 0");
        }
    }

    #[test]
    fn stderr_scales_inversely_with_residual_size() {
        // Scaling every residual by a scales the outer products ξᵀr rᵀξ by
        // a², hence the inverse information by a⁻² and the reported standard
        // error by exactly 1/a. (The sensitivities stay anchored at the
        // observations, so only the residuals change.)
        let sys = unitary_chain();
        let theta = rates(&[0.5, 0.3, 0.2]);
        let low = stderr(&theta, &tiny_dataset(&sys, &theta, 0.5), &sys).unwrap();
        let high = stderr(&theta, &tiny_dataset(&sys, &theta, 5.0), &sys).unwrap();
        for j in 0..3 {
            let ratio = low.stderr[j] / high.stderr[j];
            assert_relative_eq!(ratio, 10.0, max_relative = 1e-8);
        }
    }
}
