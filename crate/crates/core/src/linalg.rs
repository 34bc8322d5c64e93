//! Dense symmetric eigensolver (cyclic Jacobi) on row-major storage.

use crate::error::{param, Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return param(format!("expected {} entries, got {}", n * n, data.len()));
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// max |A_ij − A_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending. `vectors[k]` is
/// the unit eigenvector of `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi with eigenvector accumulation.
pub fn jacobi_eigen(matrix: &SymMatrix, max_sweeps: usize) -> Result<EigenDecomposition> {
    let n = matrix.dim();
    if n == 0 {
        return param("empty matrix");
    }
    let mut a = matrix.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = matrix.frobenius().max(f64::MIN_POSITIVE);
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= 1e-15 * norm {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::Eigensolver { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&c| (0..n).map(|r| v[r * n + c]).collect()).collect();
    Ok(EigenDecomposition { values, vectors, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two() {
        let m = SymMatrix::from_rows(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = jacobi_eigen(&m, 20).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let v = &e.vectors[0];
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-15 && (v[0] - v[1]).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymMatrix::from_rows(2, vec![1.0; 3]).is_err());
        assert!(jacobi_eigen(&SymMatrix::zeros(0), 5).is_err());
    }

    #[test]
    fn sweep_cap_is_reported() {
        let n = 12;
        let data = (0..n * n).map(|k| ((k / n) as f64 + (k % n) as f64).sin()).collect();
        let m = SymMatrix::from_rows(n, data).unwrap();
        assert!(matches!(jacobi_eigen(&m, 0), Err(Error::Eigensolver { .. })));
    }

    #[test]
    fn agrees_with_nalgebra() {
        let n = 40;
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = ((i * 7 + j * 3) as f64).sin() / (1.0 + (i as f64 - j as f64).abs());
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let ours = jacobi_eigen(&m, 50).unwrap();
        let dm = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
        let mut theirs: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.values.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn reconstructs_matrix(entries in proptest::collection::vec(-1.0f64..1.0, 36)) {
            let n = 6;
            let mut m = SymMatrix::zeros(n);
            for i in 0..n {
                for j in 0..=i {
                    m.set(i, j, entries[i * n + j]);
                    m.set(j, i, entries[i * n + j]);
                }
            }
            let e = jacobi_eigen(&m, 50).unwrap();
            for w in e.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for (k, vk) in e.vectors.iter().enumerate() {
                let av = m.mul_vec(vk);
                for i in 0..n {
                    prop_assert!((av[i] - e.values[k] * vk[i]).abs() < 1e-12);
                }
                for (l, vl) in e.vectors.iter().enumerate() {
                    let expect = if k == l { 1.0 } else { 0.0 };
                    prop_assert!((dot(vk, vl) - expect).abs() < 1e-12);
                }
            }
        }
    }
}
