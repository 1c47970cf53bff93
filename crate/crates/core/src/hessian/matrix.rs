//! Dense Hermitian matrices and a cyclic Jacobi eigensolver.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense Hermitian matrix stored in full; `set` writes both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix { dim, data: vec![Complex64::default(); dim * dim] }
    }

    /// Build from the upper triangle `i <= j`; the lower triangle is mirrored
    /// and the diagonal is made real.
    pub fn from_upper<F: FnMut(usize, usize) -> Complex64>(dim: usize, mut f: F) -> Self {
        let mut h = HermitianMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                h.set(i, j, f(i, j));
            }
        }
        h
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut h = HermitianMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            h.set(i, i, Complex64::new(v, 0.0));
        }
        h
    }

    /// `d d*`, i.e. entries `d_i conj(d_j)`.
    pub fn rank_one(d: &[Complex64]) -> Self {
        HermitianMatrix::from_upper(d.len(), |i, j| d[i] * d[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        if i == j {
            self.data[i * self.dim + i] = Complex64::new(v.re, 0.0);
        } else {
            self.data[i * self.dim + j] = v;
            self.data[j * self.dim + i] = v.conj();
        }
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `self - l · d d*`.
    pub fn minus_rank_one(&self, l: f64, d: &[Complex64]) -> Self {
        HermitianMatrix::from_upper(self.dim, |i, j| self.get(i, j) - l * d[i] * d[j].conj())
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v* H v` (real for Hermitian `H`).
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        let hv = self.matvec(v);
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from exact Hermitian symmetry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Eigenpairs sorted by descending eigenvalue; `vectors[k]` belongs to `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

const MAX_SWEEPS: usize = 50;

/// Cyclic Jacobi with a relative rotation threshold, which keeps small
/// eigenvalues of graded positive matrices accurate.
pub fn eigen(h: &HermitianMatrix) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.data.clone();
    let mut v = vec![Complex64::default(); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let b = apq.norm();
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                if b <= 1e-300 || b <= 1e-17 * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = Complex64::from_polar(1.0, -apq.arg());
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let (qpp, qpq, qqp, qqq) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0), -ph * s, ph * c);
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * qpp + akq * qqp;
                    a[k * n + q] = akp * qpq + akq * qqq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = qpp.conj() * apk + qqp.conj() * aqk;
                    a[q * n + k] = qpq.conj() * apk + qqq.conj() * aqk;
                }
                a[p * n + q] = Complex64::default();
                a[q * n + p] = Complex64::default();
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * qpp + vkq * qqp;
                    v[k * n + q] = vkp * qpq + vkq * qqq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        return Err(Error::NoConvergence {
            what: "Jacobi eigensolver",
            detail: format!("off-diagonal norm {off:e} after {MAX_SWEEPS} sweeps"),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.partial_cmp(&a[i * n + i].re).unwrap());
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    Ok(Eigen { values, vectors })
}

/// Eigenvalues in descending order.
pub fn eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eigen(h)?.values)
}

/// Frobenius (Hilbert–Schmidt) norm.
pub fn hs_norm(h: &HermitianMatrix) -> f64 {
    h.frobenius()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_sorted() {
        let ev = eigenvalues(&HermitianMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(ev, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn rank_one_spectrum() {
        let d = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let ev = eigenvalues(&HermitianMatrix::rank_one(&d)).unwrap();
        assert!((ev[0] - 5.0).abs() < 1e-14 && ev[1].abs() < 1e-14);
    }

    #[test]
    fn complex_residuals() {
        let h = HermitianMatrix::from_upper(6, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, if i == j { 0.0 } else { (i as f64 - j as f64) * 0.3 })
        });
        let e = eigen(&h).unwrap();
        let norm = h.frobenius();
        for (mu, v) in e.values.iter().zip(&e.vectors) {
            let hv = h.matvec(v);
            let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - b * mu).norm_sqr()).sum::<f64>().sqrt();
            assert!(r <= 1e-12 * norm, "residual {r}");
        }
    }

    #[test]
    fn hs_of_diag() {
        assert_eq!(hs_norm(&HermitianMatrix::diagonal(&[3.0, 4.0])), 5.0);
        assert_eq!(hs_norm(&HermitianMatrix::zeros(3)), 0.0);
    }
}
