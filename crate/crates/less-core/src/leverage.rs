//! Leverage scores: exact, constant-factor approximate, and the sampling
//! distributions derived from them.

use crate::error::{Error, Result};
use crate::matrix::{dot, gram, orthonormal_basis, thin_qr, Matrix, TallMatrix};
use crate::rng::RngStream;

/// Leverage scores l_i with a sampling distribution p_i and the realized
/// constant `approx_factor` relating them:
/// `(l_i/d)/approx_factor <= p_i <= approx_factor * (l_i/d)` wherever
/// `l_i > 0`, and `sum p_i = 1` to within 1e-12.
#[derive(Clone, Debug)]
pub struct LeverageProfile {
    scores: Vec<f64>,
    distribution: Vec<f64>,
    approx_factor: f64,
    dim: usize,
}

impl LeverageProfile {
    pub fn new(
        scores: Vec<f64>,
        distribution: Vec<f64>,
        approx_factor: f64,
        dim: usize,
    ) -> Result<Self> {
        if scores.len() != distribution.len() {
            return Err(Error::DimensionMismatch {
                expected: (scores.len(), 1),
                got: (distribution.len(), 1),
            });
        }
        if approx_factor < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "approx_factor {approx_factor} < 1"
            )));
        }
        let total: f64 = distribution.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "distribution sums to {total}, not 1"
            )));
        }
        let d = dim as f64;
        // Tiny slack on the bracket so roundoff at the boundary passes.
        let hi = approx_factor * (1.0 + 1e-9);
        for (i, (&l, &p)) in scores.iter().zip(&distribution).enumerate() {
            if l < 0.0 || p < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative score or probability at {i}"
                )));
            }
            if l > 0.0 {
                let ratio = p * d / l;
                if ratio > hi || ratio < 1.0 / hi {
                    return Err(Error::InvalidParameter(format!(
                        "p[{i}] off by factor {ratio:.4} > approx_factor {approx_factor:.4}"
                    )));
                }
            }
        }
        Ok(LeverageProfile {
            scores,
            distribution,
            approx_factor,
            dim,
        })
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn approx_factor(&self) -> f64 {
        self.approx_factor
    }

    /// Uniform distribution over n rows with nominal scores d/n each; the
    /// profile used by LESS after a randomized Hadamard preprocess.
    pub fn uniform(n: usize, d: usize) -> Self {
        LeverageProfile {
            scores: vec![d as f64 / n as f64; n],
            distribution: vec![1.0 / n as f64; n],
            approx_factor: 1.0,
            dim: d,
        }
    }

    /// Serialize as `n` then n lines `l_i p_i`.
    pub fn write_text<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", self.n())?;
        for (l, p) in self.scores.iter().zip(&self.distribution) {
            writeln!(w, "{l:.16e} {p:.16e}")?;
        }
        Ok(())
    }
}

/// Exact leverage scores: l_i = ||u_i||^2 for the orthonormal basis U of
/// col(A); p_i = l_i/d, approx_factor = 1.
pub fn exact_leverage_scores(a: &TallMatrix) -> Result<LeverageProfile> {
    let u = orthonormal_basis(a)?;
    let d = a.d() as f64;
    let scores: Vec<f64> = (0..a.n()).map(|i| dot(u.row(i), u.row(i))).collect();
    let distribution: Vec<f64> = scores.iter().map(|l| l / d).collect();
    LeverageProfile::new(scores, distribution, 1.0, a.d())
}

/// Parameters for the sketched approximate leverage scores. The bypass
/// flags replace the SRHT stage with the identity and the JL stage with an
/// exact norm, which makes the output equal the exact scores.
#[derive(Clone, Debug)]
pub struct ApproxLeverageParams {
    pub sketch_rows: usize,
    pub jl_dim: usize,
    pub seed: u64,
    pub srht_bypass: bool,
    pub jl_bypass: bool,
}

impl ApproxLeverageParams {
    pub fn new(sketch_rows: usize, jl_dim: usize, seed: u64) -> Self {
        ApproxLeverageParams {
            sketch_rows,
            jl_dim,
            seed,
            srht_bypass: false,
            jl_bypass: false,
        }
    }
}

/// Constant-factor approximate leverage scores: sketch A with an SRHT of
/// `sketch_rows` rows, take the R factor of the sketch, then estimate
/// row norms of A R^{-1} through a Gaussian JL map of width `jl_dim`.
pub fn approximate_leverage_scores(
    a: &TallMatrix,
    params: &ApproxLeverageParams,
) -> Result<LeverageProfile> {
    let n = a.n();
    let d = a.d();
    if !params.srht_bypass && params.sketch_rows < 4 * d {
        return Err(Error::InvalidParameter(format!(
            "sketch_rows {} < 4d = {}",
            params.sketch_rows,
            4 * d
        )));
    }
    if !params.jl_bypass && params.jl_dim < 8 {
        return Err(Error::InvalidParameter(format!(
            "jl_dim {} < 8",
            params.jl_dim
        )));
    }
    let mut stream = RngStream::new(params.seed, 0);

    // Stage 1: R factor of the sketched matrix.
    let r = if params.srht_bypass {
        let (_q, r) = thin_qr(a.inner())?;
        r
    } else {
        let b = srht_rows(a, params.sketch_rows, &mut stream);
        let (_q, r) = thin_qr(&b)?;
        r
    };

    // Stage 2: per-row norms of (a_i^T R^{-1}) G.
    let mut jl = Matrix::zeros(d, if params.jl_bypass { d } else { params.jl_dim });
    if params.jl_bypass {
        for i in 0..d {
            jl[(i, i)] = 1.0;
        }
    } else {
        let scale = 1.0 / (params.jl_dim as f64).sqrt();
        for i in 0..d {
            for j in 0..params.jl_dim {
                jl[(i, j)] = stream.gaussian() * scale;
            }
        }
    }

    let mut scores = vec![0.0; n];
    let mut y = vec![0.0; d];
    for i in 0..n {
        // y = R^{-T} a_i by forward substitution on R^T.
        let ai = a.row(i);
        for j in 0..d {
            let mut v = ai[j];
            for k in 0..j {
                v -= r[(k, j)] * y[k];
            }
            y[j] = v / r[(j, j)];
        }
        let mut norm2 = 0.0;
        for c in 0..jl.cols() {
            let mut z = 0.0;
            for j in 0..d {
                z += y[j] * jl[(j, c)];
            }
            norm2 += z * z;
        }
        scores[i] = norm2;
    }

    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Err(Error::RankDeficient {
            col: 0,
            pivot: 0.0,
            floor: 0.0,
        });
    }
    let distribution: Vec<f64> = scores.iter().map(|s| s / total).collect();
    // p_i = l_hat_i / sum(l_hat) differs from l_hat_i/d by the constant
    // d/sum(l_hat), which is the realized factor for this profile.
    let factor = (d as f64 / total).max(total / d as f64).max(1.0);
    LeverageProfile::new(scores, distribution, factor * (1.0 + 1e-12), d)
}

/// Realized distortion of `profile.distribution` against exact scores:
/// max over rows with l_i > 1e-12 of max(p_i d / l_i, l_i / (p_i d)).
pub fn profile_quality(profile: &LeverageProfile, exact: &LeverageProfile) -> Result<f64> {
    if profile.n() != exact.n() {
        return Err(Error::DimensionMismatch {
            expected: (exact.n(), 1),
            got: (profile.n(), 1),
        });
    }
    let d = exact.dim() as f64;
    let mut worst = 1.0_f64;
    for (&l, &p) in exact.scores().iter().zip(profile.distribution()) {
        if l <= 1e-12 {
            continue;
        }
        let ratio = p * d / l;
        if ratio <= 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(ratio).max(1.0 / ratio);
    }
    Ok(worst)
}

/// SRHT rows of the preprocessed matrix: used internally by the leverage
/// approximation (the sketching module exposes the full operator).
fn srht_rows(a: &TallMatrix, m: usize, stream: &mut RngStream) -> Matrix {
    let pre = crate::matrix::randomized_hadamard_with_stream(a, stream);
    let n_pad = pre.n();
    let scale = (n_pad as f64 / m as f64).sqrt();
    let mut out = Matrix::zeros(m, a.d());
    for j in 0..m {
        let s = stream.index(n_pad);
        let row = pre.row(s);
        for (o, &v) in out.row_mut(j).iter_mut().zip(row) {
            *o = v * scale;
        }
    }
    out
}
