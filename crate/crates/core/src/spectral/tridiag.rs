//! Implicit-shift QL iteration for real symmetric tridiagonal matrices.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix given by its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

/// Ascending eigenvalues and, when requested, eigenvectors stored row-wise
/// (`vectors[j * n..(j + 1) * n]` is the j-th eigenvector, unit ℓ² norm).
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

/// Total iteration budget per matrix, in units of the dimension.
pub const ITERATION_CAP_PER_ROW: usize = 64;

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert_eq!(offdiag.len() + 1, diag.len().max(1), "off-diagonal length must be n - 1");
        Self { diag, offdiag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.solve(false)?.values)
    }

    pub fn eigen(&self) -> Result<TridiagonalEigen> {
        self.solve(true)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    fn solve(&self, want_vectors: bool) -> Result<TridiagonalEigen> {
        let n = self.len();
        let mut d = self.diag.clone();
        let mut e = self.offdiag.clone();
        e.push(0.0);
        let mut z = if want_vectors {
            let mut z = vec![0.0; n * n];
            for i in 0..n {
                z[i * n + i] = 1.0;
            }
            Some(z)
        } else {
            None
        };

        let cap = ITERATION_CAP_PER_ROW * n.max(1);
        let mut total = 0usize;
        for l in 0..n {
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                total += 1;
                if total > cap {
                    return Err(Error::NoConvergence { index: l, iterations: total });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
                let mut i = m;
                let mut deflated = false;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if let Some(z) = z.as_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let zi = &mut head[i * n..];
                        let zj = &mut tail[..n];
                        for (a, b) in zi.iter_mut().zip(zj.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&j| d[j]).collect();
        let vectors = z.map(|z| {
            let mut sorted = Vec::with_capacity(n * n);
            for &j in &order {
                sorted.extend_from_slice(&z[j * n..(j + 1) * n]);
            }
            sorted
        });
        Ok(TridiagonalEigen { values, vectors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two() {
        let a = SymTridiagonal::new(vec![2.0, 2.0], vec![-1.0]);
        let ev = a.eigen().unwrap();
        assert_relative_eq!(ev.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(ev.values[1], 3.0, epsilon = 1e-14);
        let v = ev.vectors.unwrap();
        assert_relative_eq!(v[0].abs(), 0.5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(v[0], v[1], epsilon = 1e-14);
    }

    #[test]
    fn diagonal_matrix() {
        let a = SymTridiagonal::new(vec![1.5; 6], vec![0.0; 5]);
        let ev = a.eigen().unwrap();
        assert!(ev.values.iter().all(|&x| x == 1.5));
        let v = ev.vectors.unwrap();
        for j in 0..6 {
            for i in 0..6 {
                assert_eq!(v[j * 6 + i], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn residual_and_orthogonality_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 120;
        let a = SymTridiagonal::new(
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect(),
        );
        let ev = a.eigen().unwrap();
        let v = ev.vectors.as_ref().unwrap();
        let only = a.eigenvalues().unwrap();
        for j in 0..n {
            let x = &v[j * n..(j + 1) * n];
            let ax = a.apply(x);
            let res: f64 =
                ax.iter().zip(x).map(|(y, x)| (y - ev.values[j] * x).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-12, "residual {res}");
            assert!((only[j] - ev.values[j]).abs() < 1e-12);
            for k in 0..=j {
                let dot: f64 = x.iter().zip(&v[k * n..(k + 1) * n]).map(|(a, b)| a * b).sum();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
        assert!(ev.values.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = a.diag.iter().sum();
        assert_relative_eq!(ev.values.iter().sum::<f64>(), trace, epsilon = 1e-10);
    }
}
