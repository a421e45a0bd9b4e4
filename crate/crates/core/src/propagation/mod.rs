//! Top-k pruned feature propagation, `X_l = A * TopK(X_{l-1}, k) * W`.
//!
//! The sparse aggregation `A * (X ⊙ M)` runs through the SpGEMM engine; the
//! feature transform by `W` is dense.

mod dense;
mod mask;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dense::{csr_times_dense, DenseMatrix};
pub use mask::TopKMask;

use crate::csr::{CsrMatrix, DuplicatePolicy, Triplet};
use crate::engine::Engine;
use crate::error::{dim_mismatch, Result};
use crate::oracle::rel_error;

fn check_shapes(a: &CsrMatrix, x: &DenseMatrix, w: &DenseMatrix) -> Result<()> {
    if a.n_cols() != x.n_rows() {
        return Err(dim_mismatch("A cols vs X rows", a.n_cols(), x.n_rows()));
    }
    if x.n_cols() != w.n_rows() {
        return Err(dim_mismatch("X cols vs W rows", x.n_cols(), w.n_rows()));
    }
    Ok(())
}

/// Forward pass with per-row top-k; returns the output and the mask.
pub fn forward(
    engine: &Engine,
    a: &CsrMatrix,
    x: &DenseMatrix,
    w: &DenseMatrix,
    k: usize,
) -> Result<(DenseMatrix, TopKMask)> {
    check_shapes(a, x, w)?;
    let mask = TopKMask::per_row(x, k);
    let out = forward_with_mask(engine, a, x, w, &mask)?;
    Ok((out, mask))
}

/// Forward pass under a given mask.
pub fn forward_with_mask(
    engine: &Engine,
    a: &CsrMatrix,
    x: &DenseMatrix,
    w: &DenseMatrix,
    mask: &TopKMask,
) -> Result<DenseMatrix> {
    check_shapes(a, x, w)?;
    let xs = mask.sparsify(x)?;
    let ax = engine.product(a, &xs)?;
    csr_times_dense(&ax, w)
}

/// `mask ⊙ (Aᵀ * dL/dX_l * Wᵀ)`.
pub fn backward(
    engine: &Engine,
    a: &CsrMatrix,
    grad_out: &DenseMatrix,
    w: &DenseMatrix,
    mask: &TopKMask,
) -> Result<DenseMatrix> {
    if grad_out.n_rows() != a.n_rows() {
        return Err(dim_mismatch(
            "dL/dX rows vs A rows",
            grad_out.n_rows(),
            a.n_rows(),
        ));
    }
    if grad_out.n_cols() != w.n_cols() {
        return Err(dim_mismatch(
            "dL/dX cols vs W cols",
            grad_out.n_cols(),
            w.n_cols(),
        ));
    }
    let gw = grad_out.matmul(&w.transpose())?;
    let atg = engine.product(&a.transpose(), &gw.to_csr())?;
    mask.apply(&DenseMatrix::from_csr(&atg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    /// Masked coordinates compared against central differences.
    pub checked: usize,
    /// Unmasked coordinates whose analytic gradient is not exactly zero.
    pub unmasked_nonzero: usize,
}

impl GradientCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol && self.unmasked_nonzero == 0
    }
}

fn half_squared_norm(x: &DenseMatrix) -> f64 {
    0.5 * x.values().iter().map(|v| v * v).sum::<f64>()
}

/// Compares `backward` against central differences of `L = ½‖X_l‖²`,
/// holding the top-k mask of the unperturbed input fixed.
pub fn gradient_check(
    engine: &Engine,
    a: &CsrMatrix,
    x: &DenseMatrix,
    w: &DenseMatrix,
    k: usize,
    step: f64,
) -> Result<GradientCheck> {
    let (out, mask) = forward(engine, a, x, w, k)?;
    let grad = backward(engine, a, &out, w, &mask)?;
    let mut report = GradientCheck {
        max_rel_error: 0.0,
        checked: 0,
        unmasked_nonzero: 0,
    };
    let mut probe = x.clone();
    for i in 0..x.n_rows() {
        for j in 0..x.n_cols() {
            if !mask.get(i, j) {
                if grad[(i, j)] != 0.0 {
                    report.unmasked_nonzero += 1;
                }
                continue;
            }
            let orig = x[(i, j)];
            probe[(i, j)] = orig + step;
            let plus = half_squared_norm(&forward_with_mask(engine, a, &probe, w, &mask)?);
            probe[(i, j)] = orig - step;
            let minus = half_squared_norm(&forward_with_mask(engine, a, &probe, w, &mask)?);
            probe[(i, j)] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let err = rel_error(grad[(i, j)], numeric);
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Adjacency, features and weights of a synthetic layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationInstance {
    pub a: CsrMatrix,
    pub x: DenseMatrix,
    pub w: DenseMatrix,
}

impl PropagationInstance {
    /// `n` nodes with self-loops plus edges of probability `density` and
    /// weights in `(0, 1]`; features `n x f` and weights `f x h` in `[-1, 1)`.
    pub fn random(n: usize, f: usize, h: usize, density: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || rng.gen_bool(density) {
                    t.push(Triplet::new(i, j, 1.0 - rng.gen::<f64>()));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t, DuplicatePolicy::Error)
            .expect("generated entries are unique");
        let x = DenseMatrix::random(n, f, &mut rng);
        let w = DenseMatrix::random(f, h, &mut rng);
        Self { a, x, w }
    }
}
