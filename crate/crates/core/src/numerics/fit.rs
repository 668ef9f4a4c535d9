//! Least-squares fit of a quadratic polynomial in double-double arithmetic.
//!
//! Used to extract the coefficients of `a0 + a1*x + a2*x^2` from reduced-
//! light-speed sweeps, where the sample values carry ~30 significant digits
//! and the coefficients of interest live far below the leading term.

use super::dd::Dd;
use crate::error::CoreError;

/// Result of a quadratic fit: coefficients plus per-point residuals.
#[derive(Clone, Debug)]
pub struct QuadraticFit {
    pub coeffs: [Dd; 3],
    pub residuals: Vec<f64>,
}

/// Fit `y = c0 + c1*x + c2*x^2` by normal equations solved in dd.
///
/// The 3x3 system is tiny; dd arithmetic keeps the squared condition number
/// of the normal equations harmless.
pub fn fit_quadratic(xs: &[Dd], ys: &[Dd]) -> Result<QuadraticFit, CoreError> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 4 {
        return Err(CoreError::FitUnderdetermined { points: xs.len() });
    }
    // Normal equations N c = r with N[i][j] = sum x^(i+j), r[i] = sum y x^i.
    let mut pow_sums = [Dd::ZERO; 5];
    let mut rhs = [Dd::ZERO; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut xp = Dd::ONE;
        for p in pow_sums.iter_mut() {
            *p += xp;
            xp = xp * x;
        }
        rhs[0] += y;
        rhs[1] += y * x;
        rhs[2] += y * x * x;
    }
    let mut m = [[Dd::ZERO; 4]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().take(3).enumerate() {
            *cell = pow_sums[i + j];
        }
        row[3] = rhs[i];
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .partial_cmp(&m[b][col].abs())
                    .expect("finite pivots")
            })
            .unwrap();
        m.swap(col, pivot);
        if m[col][col].to_f64() == 0.0 {
            return Err(CoreError::FitIllConditioned);
        }
        for row in (col + 1)..3 {
            let factor = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (cell, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *cell -= factor * p;
            }
        }
    }
    let mut coeffs = [Dd::ZERO; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for j in (i + 1)..3 {
            acc -= m[i][j] * coeffs[j];
        }
        coeffs[i] = acc / m[i][i];
    }
    let residuals = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let model = coeffs[0] + coeffs[1] * x + coeffs[2] * x * x;
            (y - model).to_f64()
        })
        .collect();
    Ok(QuadraticFit { coeffs, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic() {
        let xs: Vec<Dd> = [0.01, 0.03, 0.1, 0.3, 1.0]
            .iter()
            .map(|&x| Dd::from_f64(x))
            .collect();
        let ys: Vec<Dd> = xs
            .iter()
            .map(|&x| Dd::from_f64(2.5) + x * 3.25 - x * x * 0.125)
            .collect();
        let fit = fit_quadratic(&xs, &ys).unwrap();
        assert!((fit.coeffs[0].to_f64() - 2.5).abs() < 1e-25);
        assert!((fit.coeffs[1].to_f64() - 3.25).abs() < 1e-24);
        assert!((fit.coeffs[2].to_f64() + 0.125).abs() < 1e-24);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-25));
    }

    #[test]
    fn too_few_points_rejected() {
        let xs = vec![Dd::from_f64(1.0); 3];
        let ys = xs.clone();
        assert!(fit_quadratic(&xs, &ys).is_err());
    }
}
