//! Dense complex helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub(crate) fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(i t H)` for Hermitian `H`, through its eigenbasis. Exactly unitary up to roundoff.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CVec::from_iterator(
        values.len(),
        values.iter().map(|&l| C64::from_polar(1.0, t * l)),
    );
    let mut scaled = vectors.clone();
    for (mut col, ph) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *ph;
    }
    scaled * vectors.adjoint()
}

/// Spectral norm (largest singular value).
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Real-valued embedding into the complex matrices.
pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Pairwise (cascade) summation of matrices; deterministic for a fixed input order.
pub fn pairwise_sum(mut parts: Vec<CMat>, rows: usize, cols: usize) -> CMat {
    if parts.is_empty() {
        return CMat::zeros(rows, cols);
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().unwrap()
}

pub fn pairwise_sum_f64(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum_f64(l) + pairwise_sum_f64(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_is_unitary() {
        let h = CMat::from_fn(4, 4, |r, c| {
            C64::new((r + 2 * c) as f64 * 0.3, r as f64 - c as f64)
        });
        let u = expi_hermitian(&hermitian_part(&h), 1.7);
        let defect = &u * u.adjoint() - CMat::identity(4, 4);
        assert!(max_abs(&defect) < 1e-13);
    }

    #[test]
    fn exponential_of_diagonal() {
        let h = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0])));
        let u = expi_hermitian(&h, 0.5);
        assert!((u[(0, 0)] - C64::from_polar(1.0, 0.5)).norm() < 1e-15);
        assert!((u[(1, 1)] - C64::from_polar(1.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn norm_of_diagonal_is_largest_entry() {
        let m = to_complex(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5, -3.0, 2.0,
        ])));
        assert!((operator_norm(&m) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let parts: Vec<CMat> = (0..11)
            .map(|k| CMat::from_element(2, 2, C64::new(k as f64, 1.0)))
            .collect();
        let s = pairwise_sum(parts, 2, 2);
        assert_eq!(s[(0, 0)], C64::new(55.0, 11.0));
        let v: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum_f64(&v), 5050.0);
    }
}
