//! Radial operators `A_l = −d²/dr² + l(l+1)/r² − k/r` acting on `w = r·u`.

use serde::Serialize;

use crate::error::Result;
use crate::grid::RadialGrid;
use crate::spectral::tridiag::SymTridiagonal;

/// How an added `−μ/r²` term is sampled on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseSquare {
    /// `1/r_i²`.
    Point,
    /// Cell average `(1/h)∫ r⁻² dr` over `[r_i − h/2, r_i + h/2]`, i.e. `1/(r_i² − h²/4)`.
    CellAveraged,
}

impl InverseSquare {
    pub fn coefficient(self, r: f64, h: f64) -> f64 {
        match self {
            InverseSquare::Point => 1.0 / (r * r),
            InverseSquare::CellAveraged => 1.0 / (r * r - 0.25 * h * h),
        }
    }
}

/// Second-order finite-difference discretization of `A_l` with Dirichlet ends.
#[derive(Debug, Clone)]
pub struct ModalOperator {
    l: usize,
    k: f64,
    grid: RadialGrid,
    diag: Vec<f64>,
    offdiag: f64,
}

impl ModalOperator {
    pub fn new(l: usize, k: f64, grid: RadialGrid) -> Self {
        let h = grid.spacing();
        let ll = (l * (l + 1)) as f64;
        let diag = grid.nodes().iter().map(|&r| 2.0 / (h * h) + ll / (r * r) - k / r).collect();
        Self { l, k, grid, diag, offdiag: -1.0 / (h * h) }
    }

    /// Adds `−μ/r²` to the diagonal.
    pub fn with_inverse_square(self, mu: f64, sampling: InverseSquare) -> Self {
        let h = self.grid.spacing();
        self.with_potential(|r| -mu * sampling.coefficient(r, h))
    }

    /// Adds an arbitrary potential `V(r_i)` to the diagonal.
    pub fn with_potential(mut self, v: impl Fn(f64) -> f64) -> Self {
        for (d, &r) in self.diag.iter_mut().zip(self.grid.nodes()) {
            *d += v(r);
        }
        self
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> f64 {
        self.offdiag
    }

    pub fn matrix(&self) -> SymTridiagonal {
        let n = self.diag.len();
        SymTridiagonal::new(self.diag.clone(), vec![self.offdiag; n.saturating_sub(1)])
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                let right = if i + 1 < n { w[i + 1] } else { 0.0 };
                self.diag[i] * w[i] + self.offdiag * (left + right)
            })
            .collect()
    }

    /// Ascending eigenvalues without eigenvectors.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix().eigenvalues()
    }

    pub fn lowest_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Full eigendecomposition. Eigenvectors are normalized so that
    /// `h Σ_i v_i² = 1`, with the first non-negligible entry positive.
    pub fn eigendecompose(self) -> Result<ModalSpectrum> {
        let n = self.diag.len();
        let ev = self.matrix().eigen()?;
        let mut vectors = ev.vectors.expect("eigenvectors requested");
        let scale = 1.0 / self.grid.spacing().sqrt();
        for row in vectors.chunks_exact_mut(n) {
            let big = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let lead = row.iter().copied().find(|v| v.abs() > 1e-3 * big).unwrap_or(1.0);
            let s = if lead < 0.0 { -scale } else { scale };
            row.iter_mut().for_each(|v| *v *= s);
        }
        Ok(ModalSpectrum { operator: self, values: ev.values, vectors })
    }
}

/// An operator together with all of its eigenpairs.
#[derive(Debug, Clone)]
pub struct ModalSpectrum {
    operator: ModalOperator,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl ModalSpectrum {
    pub fn operator(&self) -> &ModalOperator {
        &self.operator
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvalue `j` (0-based, ascending).
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Eigenvector `j` sampled at the interior nodes, `h Σ v² = 1`.
    pub fn vector(&self, j: usize) -> &[f64] {
        let n = self.len();
        &self.vectors[j * n..(j + 1) * n]
    }

    /// Coefficients `c_j = h Σ_i v_j(r_i) w(r_i)`.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        let h = self.operator.grid.spacing();
        (0..self.len())
            .map(|j| h * self.vector(j).iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// `max |h⟨v_a, v_b⟩ − δ_ab|`. Cost is cubic in the grid size.
    pub fn gram_deviation(&self) -> f64 {
        let n = self.len();
        let h = self.operator.grid.spacing();
        let mut worst = 0.0f64;
        for a in 0..n {
            let va = self.vector(a);
            for b in a..n {
                let dot: f64 = va.iter().zip(self.vector(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((h * dot - want).abs());
            }
        }
        worst
    }

    /// `max_j ‖A v_j − λ_j v_j‖ / (|λ_j| + 1/h²)` with `‖v_j‖₂ = 1`.
    pub fn max_scaled_residual(&self) -> f64 {
        let h = self.operator.grid.spacing();
        let root_h = h.sqrt();
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            let v = self.vector(j);
            let av = self.operator.apply(v);
            let lam = self.values[j];
            let res = av.iter().zip(v).map(|(a, x)| (a - lam * x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(res * root_h / (lam.abs() + 1.0 / (h * h)));
        }
        worst
    }
}
