//! Dense matrix functions: exponential, φ1, Fréchet derivative, inverse,
//! eigenvalues.
//!
//! The exponential uses degree-13 Padé approximation with 1-norm scaling and
//! squaring. φ1 and the Fréchet derivative are reduced to exponentials of
//! block-augmented matrices, which keeps them valid for singular inputs and
//! exact to the accuracy of `expm` itself.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Square real matrix with finite entries.
pub type SquareMatrix = DMatrix<f64>;

/// Condition-estimate ceiling above which `inverse` refuses to proceed.
pub const MAX_CONDITION: f64 = 1e12;

/// Padé(13) numerator coefficients (Higham 2005, scaling-and-squaring).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Scaling threshold θ₁₃ for the degree-13 approximant.
const THETA13: f64 = 5.371_920_351_148_152;

/// Maximum absolute column sum (induced 1-norm).
pub fn norm_1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_square_finite(a: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context });
    }
    Ok(())
}

/// Matrix exponential e^A via Padé(13) with scaling and squaring.
pub fn expm(a: &SquareMatrix) -> Result<SquareMatrix> {
    check_square_finite(a, "expm")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let norm = norm_1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a / 2f64.powi(squarings as i32);

    let a2 = &a_scaled * &a_scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let eye = DMatrix::identity(n, n);

    let u_inner = &a6 * (PADE13[13] * &a6 + PADE13[11] * &a4 + PADE13[9] * &a2)
        + PADE13[7] * &a6
        + PADE13[5] * &a4
        + PADE13[3] * &a2
        + PADE13[1] * &eye;
    let u = &a_scaled * u_inner;
    let v = &a6 * (PADE13[12] * &a6 + PADE13[10] * &a4 + PADE13[8] * &a2)
        + PADE13[6] * &a6
        + PADE13[4] * &a4
        + PADE13[2] * &a2
        + PADE13[0] * &eye;

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or(Error::NonFinite { context: "expm Padé solve" })?;

    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow {
            context: "expm",
            norm,
        });
    }
    Ok(result)
}

/// ∫₀ˢ e^{uA} du, i.e. s·φ1(sA) with φ1(z) = (e^z − 1)/z, φ1(0) = 1.
///
/// Computed as the upper-right block of exp([[sA, sI], [0, 0]]), which needs
/// no inverse of A and therefore also covers singular A. For invertible A it
/// equals A⁻¹(e^{sA} − I).
pub fn phi1(a: &SquareMatrix, s: f64) -> Result<SquareMatrix> {
    check_square_finite(a, "phi1")?;
    if !s.is_finite() {
        return Err(Error::NonFinite { context: "phi1 horizon" });
    }
    let n = a.nrows();
    let mut aug = DMatrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * s));
    for i in 0..n {
        aug[(i, n + i)] = s;
    }
    let e = expm(&aug)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// Fréchet derivative of the matrix exponential at `A` in direction `E`:
/// the upper-right block of exp([[A, E], [0, A]]).
pub fn expm_frechet(a: &SquareMatrix, e: &SquareMatrix) -> Result<SquareMatrix> {
    check_square_finite(a, "expm_frechet")?;
    check_square_finite(e, "expm_frechet direction")?;
    let n = a.nrows();
    if e.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "expm_frechet",
            expected: n,
            found: e.nrows(),
        });
    }
    let mut aug = DMatrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, n)).copy_from(e);
    aug.view_mut((n, n), (n, n)).copy_from(a);
    let exp = expm(&aug)?;
    Ok(exp.view((0, n), (n, n)).into_owned())
}

/// Inverse of a numerically nonsingular matrix.
///
/// Fails with the 1-norm condition estimate when that estimate exceeds
/// [`MAX_CONDITION`].
pub fn inverse(a: &SquareMatrix) -> Result<SquareMatrix> {
    check_square_finite(a, "inverse")?;
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularMatrix { cond: f64::INFINITY })?;
    let cond = norm_1(a) * norm_1(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularMatrix { cond });
    }
    Ok(inv)
}

/// 1-norm condition estimate ‖A‖₁·‖A⁻¹‖₁, +∞ when A is not invertible.
pub fn condition_estimate(a: &SquareMatrix) -> f64 {
    match a.clone().lu().try_inverse() {
        Some(inv) => norm_1(a) * norm_1(&inv),
        None => f64::INFINITY,
    }
}

/// Eigenvalues of a real square matrix, unordered.
pub fn eigenvalues(a: &SquareMatrix) -> Result<Vec<Complex<f64>>> {
    check_square_finite(a, "eigenvalues")?;
    Ok(a.complex_eigenvalues().iter().copied().collect())
}
