//! Forward prediction of the conditional mean.
//!
//! The mean ODE is linearised around the conditioning observation `y0`
//! (the anchor is refreshed at every observation), giving `m' = P m + b`
//! with the closed-form solution `m(s) = e^{sP} y0 + (∫₀ˢ e^{uP} du) b`.
//! Euler and RK4 integrate the same linearised field; they exist for the
//! step-size/stiffness comparison, not as production solvers.

use nalgebra::{Complex, DVector};

use crate::error::{Error, Result};
use crate::matfun::{eigenvalues, expm, norm_1, phi1};
use crate::system::{lma_coefficients, LmaOperator, RateVector, ReactionSystem, StateVector};

/// Fixed-step explicit integrators for the linearised field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeMethod {
    Euler,
    Rk4,
}

impl OdeMethod {
    pub fn name(self) -> &'static str {
        match self {
            OdeMethod::Euler => "euler",
            OdeMethod::Rk4 => "rk4",
        }
    }
}

/// How to carry the mean forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    ClosedForm,
    Numerical { method: OdeMethod, dt: f64 },
}

/// A complete forward-prediction request, as the CLI assembles it.
#[derive(Debug, Clone)]
pub struct PredictionRequest<'a> {
    pub system: &'a ReactionSystem,
    pub theta: &'a RateVector,
    pub y0: &'a StateVector,
    pub horizon: f64,
    pub method: SolveMethod,
}

impl<'a> PredictionRequest<'a> {
    pub fn run(&self) -> Result<StateVector> {
        if !(self.horizon >= 0.0) {
            return Err(Error::Invalid {
                what: "prediction request",
                reason: format!("horizon must be ≥ 0, got {}", self.horizon),
            });
        }
        match self.method {
            SolveMethod::ClosedForm => {
                lma_predict(self.system, self.theta, self.y0, self.horizon)
            }
            SolveMethod::Numerical { method, dt } => {
                if dt <= 0.0 || dt > self.horizon {
                    return Err(Error::Invalid {
                        what: "prediction request",
                        reason: format!(
                            "numerical methods need 0 < dt ≤ horizon, got dt={dt}, horizon={}",
                            self.horizon
                        ),
                    });
                }
                ode_solve(self.system, self.theta, self.y0, self.horizon, dt, method)
            }
        }
    }
}

/// Closed-form conditional mean `m(t+s|t) = e^{sP} y0 + (∫₀ˢ e^{uP} du) b`.
///
/// Valid for singular `P` through the φ1 construction. Entries are not
/// clamped to ≥ 0: a negative mean signals the linearisation left its
/// validity region, and the fitting objective must see that.
pub fn lma_predict(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    s: f64,
) -> Result<StateVector> {
    let op = lma_coefficients(system, y0, theta)?;
    lma_predict_op(&op, s)
}

/// Same as [`lma_predict`] but reusing precomputed linearisation
/// coefficients (the anchor is `op.anchor_state`).
pub fn lma_predict_op(op: &LmaOperator, s: f64) -> Result<StateVector> {
    if s == 0.0 {
        return Ok(op.anchor_state.clone());
    }
    let scaled_norm = s * norm_1(&op.matrix);
    let overflow = |_| Error::Overflow {
        context: "lma_predict",
        norm: scaled_norm,
    };
    let growth = expm(&(&op.matrix * s)).map_err(overflow)?;
    let integral = phi1(&op.matrix, s).map_err(overflow)?;
    let m = &growth * op.anchor_state.as_vector() + integral * &op.offset;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow {
            context: "lma_predict",
            norm: scaled_norm,
        });
    }
    Ok(StateVector::from_prediction(m))
}

/// Fixed-step integration of the linearised field `m' = P m + b` anchored at
/// `y0`, from 0 to `s`; the last step is shortened to land exactly on `s`.
pub fn ode_solve(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    s: f64,
    dt: f64,
    method: OdeMethod,
) -> Result<StateVector> {
    if dt <= 0.0 {
        return Err(Error::Invalid {
            what: "step size",
            reason: format!("dt must be > 0, got {dt}"),
        });
    }
    let op = lma_coefficients(system, y0, theta)?;
    let field = |m: &DVector<f64>| &op.matrix * m + &op.offset;
    let mut m = y0.as_vector().clone();
    let mut t = 0.0;
    let mut step = 0usize;
    while t < s {
        let h = dt.min(s - t);
        match method {
            OdeMethod::Euler => {
                m += field(&m) * h;
            }
            OdeMethod::Rk4 => {
                let k1 = field(&m);
                let k2 = field(&(&m + &k1 * (h / 2.0)));
                let k3 = field(&(&m + &k2 * (h / 2.0)));
                let k4 = field(&(&m + &k3 * h));
                m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step, dt });
        }
        t += h;
        step += 1;
    }
    Ok(StateVector::from_prediction(m))
}

/// One row of the step-size comparison: mean absolute error of a numerical
/// method against the closed form, at one step size.
#[derive(Debug, Clone)]
pub struct StiffnessEntry {
    pub method: OdeMethod,
    pub dt: f64,
    pub mae: f64,
    pub diverged: bool,
}

/// Step-size comparison table plus the spectrum of `P` as a stiffness
/// diagnostic.
#[derive(Debug, Clone)]
pub struct StiffnessReport {
    pub entries: Vec<StiffnessEntry>,
    pub eigenvalues: Vec<Complex<f64>>,
    /// max|Re λ| / min|Re λ| over nonzero real parts.
    pub stiffness_ratio: f64,
    pub horizons: Vec<f64>,
}

impl StiffnessReport {
    /// Spread of ≥ 6 orders of magnitude is reported as stiff.
    pub fn is_stiff(&self) -> bool {
        self.stiffness_ratio >= 1e6
    }
}

/// Five equally spaced evaluation times over `(0, horizon]`.
pub fn default_horizons(horizon: f64) -> Vec<f64> {
    (1..=5).map(|i| horizon * i as f64 / 5.0).collect()
}

/// Mean absolute error of Euler and RK4 against the closed form, for each
/// step size in `dt_grid`, averaged over `horizons` and components.
/// Divergence shows up as an infinite, flagged entry.
pub fn stiffness_report(
    system: &ReactionSystem,
    theta: &RateVector,
    y0: &StateVector,
    dt_grid: &[f64],
    horizons: &[f64],
) -> Result<StiffnessReport> {
    if dt_grid.is_empty() || horizons.is_empty() {
        return Err(Error::Invalid {
            what: "stiffness report",
            reason: "dt grid and horizon grid must be non-empty".into(),
        });
    }
    let op = lma_coefficients(system, y0, theta)?;
    let reference: Vec<StateVector> = horizons
        .iter()
        .map(|&h| lma_predict_op(&op, h))
        .collect::<Result<_>>()?;

    let mut entries = Vec::new();
    for &dt in dt_grid {
        for method in [OdeMethod::Euler, OdeMethod::Rk4] {
            let mut abs_sum = 0.0;
            let mut count = 0usize;
            let mut diverged = false;
            for (h, reference) in horizons.iter().zip(&reference) {
                match ode_solve(system, theta, y0, *h, dt, method) {
                    Ok(m) => {
                        for l in 0..m.len() {
                            abs_sum += (m[l] - reference[l]).abs();
                            count += 1;
                        }
                    }
                    Err(Error::Divergence { .. }) => {
                        diverged = true;
                    }
                    Err(e) => return Err(e),
                }
            }
            let mae = if diverged || count == 0 {
                f64::INFINITY
            } else {
                abs_sum / count as f64
            };
            entries.push(StiffnessEntry {
                method,
                dt,
                mae,
                diverged: diverged || !mae.is_finite(),
            });
        }
    }

    let eigenvalues = eigenvalues(&op.matrix)?;
    let real_mags: Vec<f64> = eigenvalues
        .iter()
        .map(|z| z.re.abs())
        .filter(|&m| m > 0.0)
        .collect();
    let stiffness_ratio = if real_mags.is_empty() {
        1.0
    } else {
        let max = real_mags.iter().cloned().fold(0.0, f64::max);
        let min = real_mags.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    };
    Ok(StiffnessReport {
        entries,
        eigenvalues,
        stiffness_ratio,
        horizons: horizons.to_vec(),
    })
}
