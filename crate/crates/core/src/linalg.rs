//! Small dense complex matrices used throughout the crate.

use nalgebra::{Complex, Matrix2, Matrix4};

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub(crate) fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Largest entrywise modulus.
pub fn max_abs<R: nalgebra::Dim, Cc: nalgebra::Dim, S>(m: &nalgebra::Matrix<C64, R, Cc, S>) -> f64
where
    S: nalgebra::RawStorage<C64, R, Cc>,
{
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &Mat2) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues of the Hermitian part of a 2×2 matrix, ascending.
pub fn hermitian_eigenvalues(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - half_gap, mean + half_gap]
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &Mat2, b: &Mat2) -> C64 {
    a[(0, 0)] * b[(0, 0)] + a[(0, 1)] * b[(1, 0)] + a[(1, 0)] * b[(0, 1)] + a[(1, 1)] * b[(1, 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal_and_offdiagonal() {
        let m = Mat2::new(real(2.0), real(0.0), real(0.0), real(-1.0));
        assert_eq!(hermitian_eigenvalues(&m), [-1.0, 2.0]);

        let sy = Mat2::new(real(0.0), c(0.0, -1.0), c(0.0, 1.0), real(0.0));
        let [lo, hi] = hermitian_eigenvalues(&sy);
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_product_matches_full_product() {
        let a = Mat2::new(c(1.0, 2.0), c(0.5, -1.0), c(3.0, 0.0), c(-2.0, 1.0));
        let b = Mat2::new(c(0.3, 0.1), c(-1.0, 2.0), c(0.0, 1.0), c(4.0, -0.5));
        assert!((trace_product(&a, &b) - (a * b).trace()).norm() < 1e-14);
    }
}
