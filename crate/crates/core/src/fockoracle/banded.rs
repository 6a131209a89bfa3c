//! Pentadiagonal operators acting on dense matrices. Every quadratic in the
//! ladder operators lives within two diagonals of the main one, so products
//! with a dense ρ cost O(N²) instead of O(N³).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub(crate) const WIDTH: isize = 2;

#[derive(Debug, Clone)]
pub(crate) struct Banded {
    n: usize,
    /// `diags[off + WIDTH][i]` holds element `(i, i + off)`.
    diags: Vec<Vec<C64>>,
}

impl Banded {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut diags = vec![vec![C64::new(0.0, 0.0); n]; (2 * WIDTH + 1) as usize];
        for i in 0..n {
            for j in 0..n {
                let off = j as isize - i as isize;
                if off.abs() <= WIDTH {
                    diags[(off + WIDTH) as usize][i] = m[(i, j)];
                } else {
                    debug_assert!(m[(i, j)].norm() == 0.0, "matrix wider than band");
                }
            }
        }
        Self { n, diags }
    }

    /// `Σ cᵢ Mᵢ` over operators of the same size.
    pub fn combine(terms: &[(C64, &Banded)]) -> Self {
        let n = terms[0].1.n;
        let mut diags = vec![vec![C64::new(0.0, 0.0); n]; (2 * WIDTH + 1) as usize];
        for (c, m) in terms {
            for (d, src) in diags.iter_mut().zip(&m.diags) {
                for (x, y) in d.iter_mut().zip(src) {
                    *x += c * y;
                }
            }
        }
        Self { n, diags }
    }

    fn get(&self, off: isize) -> &[C64] {
        &self.diags[(off + WIDTH) as usize]
    }

    /// `self · rho`.
    pub fn left_mul(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..n {
            let col = &src[j * n..(j + 1) * n];
            let out_col = &mut dst[j * n..(j + 1) * n];
            for off in -WIDTH..=WIDTH {
                let d = self.get(off);
                let lo = (-off).max(0) as usize;
                let hi = (n as isize - off.max(0)) as usize;
                for i in lo..hi {
                    out_col[i] += d[i] * col[(i as isize + off) as usize];
                }
            }
        }
        out
    }

    /// `rho · self`.
    pub fn right_mul(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..n {
            let out_col = &mut dst[j * n..(j + 1) * n];
            for off in -WIDTH..=WIDTH {
                let k = j as isize - off;
                if k < 0 || k >= n as isize {
                    continue;
                }
                let b = self.get(off)[k as usize];
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                let col = &src[k as usize * n..(k as usize + 1) * n];
                for i in 0..n {
                    out_col[i] += col[i] * b;
                }
            }
        }
        out
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for (i, o) in out.iter_mut().enumerate() {
            for off in -WIDTH..=WIDTH {
                let j = i as isize + off;
                if j >= 0 && (j as usize) < self.n {
                    *o += self.get(off)[i] * v[j as usize];
                }
            }
        }
        out
    }
}
