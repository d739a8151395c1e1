//! Synthetic matrix generators shared by the experiments and the CLI.

use crate::diagnostics::lower_bound_matrix;
use crate::error::{Error, Result};
use crate::matrix::{thin_qr, Matrix, TallMatrix};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    /// i.i.d. standard Gaussian entries (incoherent leverage profile).
    Gaussian,
    /// Gaussian rows scaled by 1/sqrt(chi2_2 / 2): heavy leverage skew.
    HeavyTail,
    /// First k rows are e_1..e_k (leverage exactly one), the rest an
    /// orthonormal completion in the remaining coordinates.
    CoherentBlock { k: usize },
    /// The coordinate lower-bound matrix (requires n = 2d).
    Theorem4,
}

impl MatrixKind {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::Gaussian => "gaussian",
            MatrixKind::HeavyTail => "heavy_tail",
            MatrixKind::CoherentBlock { .. } => "coherent_block",
            MatrixKind::Theorem4 => "theorem4",
        }
    }
}

pub fn generate_matrix(kind: MatrixKind, n: usize, d: usize, seed: u64) -> Result<TallMatrix> {
    if d == 0 || n < d {
        return Err(Error::ShapeInvalid(format!("need n >= d >= 1, got n={n} d={d}")));
    }
    let mut stream = RngStream::new(seed, 0);
    match kind {
        MatrixKind::Gaussian => {
            let mut m = Matrix::zeros(n, d);
            for i in 0..n {
                for j in 0..d {
                    m[(i, j)] = stream.gaussian();
                }
            }
            TallMatrix::new(m)
        }
        MatrixKind::HeavyTail => {
            let mut m = Matrix::zeros(n, d);
            for i in 0..n {
                // chi2 with 2 dof is -2 ln U; divide by 2 and invert the root
                let chi2_half = -(1.0 - stream.uniform()).ln();
                let scale = 1.0 / chi2_half.sqrt().max(1e-6);
                for j in 0..d {
                    m[(i, j)] = scale * stream.gaussian();
                }
            }
            TallMatrix::new(m)
        }
        MatrixKind::CoherentBlock { k } => {
            if k > d {
                return Err(Error::ShapeInvalid(format!("coherent_block needs k <= d, got k={k} d={d}")));
            }
            if n - k < d - k {
                return Err(Error::ShapeInvalid(format!(
                    "coherent_block needs n - k >= d - k, got n={n} k={k} d={d}"
                )));
            }
            let mut m = Matrix::zeros(n, d);
            for i in 0..k {
                m[(i, i)] = 1.0;
            }
            if d > k {
                // orthonormal completion in the lower-right block
                let rows = n - k;
                let cols = d - k;
                let mut g = Matrix::zeros(rows, cols);
                for i in 0..rows {
                    for j in 0..cols {
                        g[(i, j)] = stream.gaussian();
                    }
                }
                let (q, _r) = thin_qr(&g)?;
                for i in 0..rows {
                    for j in 0..cols {
                        m[(k + i, k + j)] = q[(i, j)];
                    }
                }
            }
            TallMatrix::new(m)
        }
        MatrixKind::Theorem4 => {
            if n != 2 * d {
                return Err(Error::ShapeInvalid(format!(
                    "theorem4 needs n = 2d, got n={n} d={d}"
                )));
            }
            lower_bound_matrix(d)
        }
    }
}
