//! Small dense-matrix helpers shared by the physics modules.

use nalgebra::SymmetricEigen;

use crate::{CMatrix, C64};

/// Largest elementwise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest elementwise modulus of `a - b`. Shapes must agree.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// max |M - M†|.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

/// max |U†U - I|.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of the Hermitian part of `m`.
fn hermitian_eigen(m: &CMatrix) -> SymmetricEigen<C64, nalgebra::Dyn> {
    let h = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(h)
}

/// Smallest eigenvalue of a Hermitian matrix. Empty matrices report 0.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigen(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a Hermitian matrix. Empty matrices report 0.
pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigen(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Principal square root of a PSD Hermitian matrix. Eigenvalues are clamped
/// at zero before the root is taken.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitian_eigen(m);
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Copies `m` into the top-left corner of a zero matrix of shape `rows × cols`.
pub fn zero_pad(m: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= m.nrows() && cols >= m.ncols(), "zero_pad: target smaller than source");
    let mut out = CMatrix::zeros(rows, cols);
    out.view_mut((0, 0), m.shape()).copy_from(m);
    out
}

/// Rank-one projector |k⟩⟨k| on a `dim`-dimensional space (0-based `k`).
pub fn projector(dim: usize, k: usize) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    p[(k, k)] = C64::new(1.0, 0.0);
    p
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::dvector![real(4.0), real(0.25), real(0.0)]);
        let r = psd_sqrt(&m);
        let expect = CMatrix::from_diagonal(&nalgebra::dvector![real(2.0), real(0.5), real(0.0)]);
        assert!(max_abs_diff(&r, &expect) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        // Hermitian PSD with complex off-diagonals.
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.5), C64::new(0.2, -0.3), C64::new(-0.4, 0.1), C64::new(0.7, 0.0)],
        );
        let m = &a * a.adjoint();
        let r = psd_sqrt(&m);
        assert!(max_abs_diff(&(&r * &r), &m) < 1e-13);
        assert!(hermitian_deviation(&r) < 1e-14);
    }

    #[test]
    fn padding_keeps_block() {
        let m = CMatrix::from_element(2, 1, real(3.0));
        let p = zero_pad(&m, 3, 2);
        assert_eq!(p[(1, 0)], real(3.0));
        assert_eq!(p[(2, 0)], real(0.0));
        assert_eq!(p[(0, 1)], real(0.0));
    }

    #[test]
    fn spectral_norm_of_diag() {
        let m = CMatrix::from_diagonal(&nalgebra::dvector![real(0.3), real(-0.9)]);
        assert!((spectral_norm(&m) - 0.9).abs() < 1e-14);
    }
}
