//! Dense complex matrices just big enough for precoding math
//! (antenna-count sized), plus a one-sided Jacobi SVD and a Hermitian
//! log-determinant.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        CMat {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows);
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs.at(k, c);
                }
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }
}

/// Right singular vectors and singular values of `h`, descending.
pub struct SvdRight {
    pub singular_values: Vec<f64>,
    /// Orthonormal columns (h.cols × min(rows, cols)).
    pub right_vectors: CMat,
}

/// One-sided Jacobi on A = Hᴴ: rotating column pairs of A until mutually
/// orthogonal leaves A = V·diag(σ), V the right singular vectors of H.
pub fn svd_right(h: &CMat) -> SvdRight {
    let mut a = h.hermitian(); // (h.cols × h.rows)
    let m = a.rows;
    let n = a.cols;
    let eps = 1e-13;

    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let x = a.at(r, p);
                    let y = a.at(r, q);
                    app += x.norm_sqr();
                    aqq += y.norm_sqr();
                    apq += x.conj() * y;
                }
                let off = apq.norm();
                if off <= eps * libm::sqrt(app * aqq) || off == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase the q column so the inner product is real, then a
                // plain real Jacobi rotation.
                let phase = apq / off;
                let tau = (aqq - app) / (2.0 * off);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for r in 0..m {
                    let x = a.at(r, p);
                    let y = a.at(r, q) * phase.conj();
                    a.set(r, p, x * c - y * s);
                    a.set(r, q, (x * s + y * c) * phase);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|c| libm::sqrt((0..m).map(|r| a.at(r, c).norm_sqr()).sum::<f64>()))
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let k = m.min(n);
    let mut v = CMat::zeros(m, k);
    let mut singular_values = Vec::with_capacity(k);
    let scale = norms[order[0]].max(1e-300);
    for (out_c, &c) in order.iter().take(k).enumerate() {
        let sigma = norms[c];
        singular_values.push(sigma);
        if sigma > 1e-12 * scale {
            for r in 0..m {
                v.set(r, out_c, a.at(r, c) / sigma);
            }
        } else {
            // Rank-deficient: complete with an orthonormal basis vector.
            complete_column(&mut v, out_c);
        }
    }
    SvdRight {
        singular_values,
        right_vectors: v,
    }
}

/// Fill column `c` of `v` with a unit vector orthogonal to columns 0..c.
fn complete_column(v: &mut CMat, c: usize) {
    let m = v.rows;
    for basis in 0..m {
        let mut cand = vec![Complex64::new(0.0, 0.0); m];
        cand[basis] = Complex64::new(1.0, 0.0);
        for prev in 0..c {
            let mut proj = Complex64::new(0.0, 0.0);
            for r in 0..m {
                proj += v.at(r, prev).conj() * cand[r];
            }
            for r in 0..m {
                let sub = proj * v.at(r, prev);
                cand[r] -= sub;
            }
        }
        let norm = libm::sqrt(cand.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if norm > 1e-6 {
            for r in 0..m {
                v.set(r, c, cand[r] / norm);
            }
            return;
        }
    }
}

/// log₂ det of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hermitian(m: &CMat) -> f64 {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut l = CMat::zeros(n, n);
    let mut log2_det = 0.0;
    for j in 0..n {
        let mut d = m.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        let d = d.max(1e-300);
        let ljj = libm::sqrt(d);
        l.set(j, j, Complex64::new(ljj, 0.0));
        log2_det += 2.0 * libm::log2(ljj);
        for i in (j + 1)..n {
            let mut v = m.at(i, j);
            for k in 0..j {
                v -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, v / ljj);
        }
    }
    log2_det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut st = Stream::new(seed);
        let mut m = CMat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, Complex64::new(st.normal(), st.normal()));
            }
        }
        m
    }

    /// Eigenvalues of the 2×2 Gram matrix H·Hᴴ — the independent oracle for
    /// squared singular values of a 2-row matrix.
    fn gram2_eigs(h: &CMat) -> (f64, f64) {
        assert_eq!(h.rows, 2);
        let g = h.mul(&h.hermitian());
        let a = g.at(0, 0).re;
        let d = g.at(1, 1).re;
        let b = g.at(0, 1);
        let tr = a + d;
        let det = a * d - b.norm_sqr();
        let disc = libm::sqrt((tr * tr - 4.0 * det).max(0.0));
        ((tr + disc) / 2.0, (tr - disc) / 2.0)
    }

    #[test]
    fn svd_matches_gram_eigenvalue_oracle() {
        for seed in 0..20 {
            let h = random_mat(2, 16, 100 + seed);
            let svd = svd_right(&h);
            let (e1, e2) = gram2_eigs(&h);
            assert!(
                (svd.singular_values[0] * svd.singular_values[0] - e1).abs() < 1e-9 * e1.max(1.0)
            );
            assert!(
                (svd.singular_values[1] * svd.singular_values[1] - e2).abs() < 1e-9 * e1.max(1.0)
            );
        }
    }

    #[test]
    fn right_vectors_are_orthonormal_and_capture_energy() {
        for seed in 0..10 {
            let h = random_mat(3, 8, 300 + seed);
            let svd = svd_right(&h);
            let v = &svd.right_vectors;
            let g = v.hermitian().mul(v);
            for r in 0..g.rows {
                for c in 0..g.cols {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((g.at(r, c).re - expect).abs() < 1e-10);
                    assert!(g.at(r, c).im.abs() < 1e-10);
                }
            }
            // ‖H·V‖² = Σ σ².
            let hv = h.mul(v);
            let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
            assert!((hv.frobenius_sq() - total).abs() < 1e-9 * total.max(1.0));
            assert!((total - h.frobenius_sq()).abs() < 1e-9 * total.max(1.0));
        }
    }

    #[test]
    fn rank_one_outer_product_recovers_the_column() {
        // H = a·bᴴ → top right singular vector ∝ b.
        let mut st = Stream::new(7);
        let a: Vec<Complex64> = (0..2)
            .map(|_| Complex64::new(st.normal(), st.normal()))
            .collect();
        let b: Vec<Complex64> = (0..6)
            .map(|_| Complex64::new(st.normal(), st.normal()))
            .collect();
        let mut h = CMat::zeros(2, 6);
        for r in 0..2 {
            for c in 0..6 {
                h.set(r, c, a[r] * b[c].conj());
            }
        }
        let svd = svd_right(&h);
        assert!(svd.singular_values[1] < 1e-10 * svd.singular_values[0]);
        // Alignment |v₁ᴴ b| = ‖b‖ up to phase.
        let v1 = svd.right_vectors.column(0);
        let dot: Complex64 = v1.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        let bnorm = libm::sqrt(b.iter().map(|z| z.norm_sqr()).sum::<f64>());
        assert!((dot.norm() - bnorm).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_columns_are_completed() {
        let h = CMat::zeros(2, 4); // zero matrix
        let svd = svd_right(&h);
        let v = &svd.right_vectors;
        let g = v.hermitian().mul(v);
        for r in 0..2 {
            for c in 0..2 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((g.at(r, c).re - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log2_det_matches_hand_value() {
        // M = [[2, 0], [0, 4]] → log2 det = 3.
        let mut m = CMat::zeros(2, 2);
        m.set(0, 0, Complex64::new(2.0, 0.0));
        m.set(1, 1, Complex64::new(4.0, 0.0));
        assert!((log2_det_hermitian(&m) - 3.0).abs() < 1e-12);
        // Random PD: compare against 2×2 closed form.
        let h = random_mat(2, 5, 11);
        let g = h.mul(&h.hermitian());
        let mut m = CMat::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                let add = if r == c { 1.0 } else { 0.0 };
                m.set(r, c, g.at(r, c) * 0.3 + Complex64::new(add, 0.0));
            }
        }
        let a = m.at(0, 0).re;
        let d = m.at(1, 1).re;
        let det = a * d - m.at(0, 1).norm_sqr();
        assert!((log2_det_hermitian(&m) - libm::log2(det)).abs() < 1e-10);
    }
}
