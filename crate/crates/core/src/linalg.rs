//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Relative tolerance of the power iteration.
pub const SPECTRAL_TOL: f64 = 1e-10;

const MAX_POWER_STEPS: usize = 10_000;

/// Spectral norm ‖A‖₂ by power iteration on AᵀA.
///
/// The start vector (1, 1/2, 1/3, …) is fixed so results are reproducible.
/// Iteration stops once successive estimates of λ_max(AᵀA) agree to
/// [`SPECTRAL_TOL`] relative.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    // scaling keeps AᵀA away from overflow and underflow
    let a = a / scale;
    let ata = a.transpose() * &a;
    let mut x = nalgebra::DVector::from_fn(cols, |i, _| 1.0 / (i as f64 + 1.0));
    x /= x.norm();
    let mut lambda = 0.0;
    for _ in 0..MAX_POWER_STEPS {
        let y = &ata * &x;
        let next = x.dot(&y);
        let norm = y.norm();
        if norm == 0.0 {
            // start vector in the kernel of AᵀA
            return restart_from_basis(&ata).sqrt() * scale;
        }
        x = y / norm;
        if (next - lambda).abs() <= SPECTRAL_TOL * next.abs() {
            return next.max(0.0).sqrt() * scale;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt() * scale
}

fn restart_from_basis(ata: &DMatrix<f64>) -> f64 {
    let n = ata.ncols();
    let mut best = 0.0f64;
    for j in 0..n {
        let mut x = nalgebra::DVector::zeros(n);
        x[j] = 1.0;
        let mut lambda = 0.0;
        for _ in 0..MAX_POWER_STEPS {
            let y = ata * &x;
            let norm = y.norm();
            if norm == 0.0 {
                break;
            }
            let next = x.dot(&y);
            x = y / norm;
            if (next - lambda).abs() <= SPECTRAL_TOL * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        best = best.max(lambda);
    }
    best.max(0.0)
}

/// Spectral radius: largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Ratio σ_min/σ_max; 0 for singular input.
pub fn inverse_condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// |det A| divided by the product of row norms (Hadamard ratio, in [0, 1]).
pub fn hadamard_ratio(a: &DMatrix<f64>) -> f64 {
    let denom: f64 = a.row_iter().map(|r| r.norm()).product();
    if denom == 0.0 {
        return 0.0;
    }
    (a.clone().lu().determinant() / denom).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svd_norm(a: &DMatrix<f64>) -> f64 {
        a.clone().singular_values().max()
    }

    #[test]
    fn diagonal_zero_and_nilpotent() {
        let d = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        assert!((spectral_norm(&d) - 0.5).abs() < 1e-12);
        assert_eq!(spectral_norm(&DMatrix::zeros(3, 3)), 0.0);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!((spectral_norm(&n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn start_vector_in_kernel() {
        // (1, 1/2) is orthogonal to (1, -2)
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 0.0]);
        assert!((spectral_norm(&a) - svd_norm(&a)).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_svd() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64);
        let want = svd_norm(&a);
        assert!((spectral_norm(&a) - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn condition_helpers() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert_eq!(inverse_condition(&i), 1.0);
        assert!((hadamard_ratio(&i) - 1.0).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(hadamard_ratio(&s) < 1e-15);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&r) - 0.5).abs() < 1e-15);
    }
}
