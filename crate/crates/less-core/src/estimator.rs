//! Debiased sketched inverse covariance, distributed averaging, and the
//! Monte Carlo metrology around them.
//!
//! The estimator is Q = (gamma A^T S^T S A)^{-1} with gamma = m/(m-d). Its
//! inversion bias is reported in the whitened operator norm
//! ||H^{1/2} E[Q] H^{1/2} - I|| with H = A^T A, which is congruence
//! invariant and equals the two-sided relative error of Definition-style
//! bounds to first order. Standard errors come from 10 replica batches:
//! the entrywise standard error of the whitened batch means, assembled
//! into a matrix and measured in the same spectral norm as the bias.
//! (The alternative - the standard deviation of per-batch norm values -
//! under-covers norm statistics whose true value is zero, so it is not
//! used.)

use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::{
    gram_raw, sym_eigenvalues, sym_spectral_norm, Cholesky, Matrix, SpdMatrix, TallMatrix,
};
use crate::sketch::{apply, SketchKind, SketchSpec};

/// Number of batches for batch-means standard errors.
pub const BATCHES: usize = 10;

/// Default almost-sure cap on the per-replica relative error; replicas
/// above it are excluded from conditioned means and counted as failures.
pub const DEFAULT_CLIP: f64 = 10.0;

/// The debiasing scaling m/(m-d).
pub fn gamma_debias(m: usize, d: usize) -> Result<f64> {
    if m <= d {
        return Err(Error::SketchSmallerThanD { m, d });
    }
    Ok(m as f64 / (m - d) as f64)
}

/// One realization of the debiased sketched inverse covariance.
#[derive(Clone, Debug)]
pub struct InverseEstimate {
    /// Present iff the sketched Gram matrix was invertible.
    pub matrix: Option<SpdMatrix>,
    pub invertible: bool,
    pub gamma: f64,
    pub replica: u64,
}

/// gamma = m/(m-d) unless overridden through `gamma_override`.
pub fn debiased_inverse(
    a: &TallMatrix,
    spec: &SketchSpec,
    replica: u64,
) -> Result<InverseEstimate> {
    debiased_inverse_with_gamma(a, spec, replica, None)
}

pub fn debiased_inverse_with_gamma(
    a: &TallMatrix,
    spec: &SketchSpec,
    replica: u64,
    gamma_override: Option<f64>,
) -> Result<InverseEstimate> {
    let gamma = effective_gamma(spec, a.d(), gamma_override)?;
    let sa = apply(a, spec, replica)?;
    let mut w = gram_raw(&sa);
    w.scale_in_place(gamma);
    match Cholesky::new(&w) {
        Ok(chol) => Ok(InverseEstimate {
            matrix: Some(SpdMatrix::new(chol.inverse())?),
            invertible: true,
            gamma,
            replica,
        }),
        Err(Error::NotPositiveDefinite { .. }) => Ok(InverseEstimate {
            matrix: None,
            invertible: false,
            gamma,
            replica,
        }),
        Err(e) => Err(e),
    }
}

fn effective_gamma(spec: &SketchSpec, d: usize, gamma_override: Option<f64>) -> Result<f64> {
    if let Some(g) = gamma_override {
        return Ok(g);
    }
    if matches!(spec.kind, SketchKind::Identity) {
        return Ok(1.0);
    }
    gamma_debias(spec.m, d)
}

/// Two-sided relative spectral error: the smallest eta with
/// C/(1+eta) <= C_tilde <= (1+eta) C, or +inf if C_tilde has a
/// non-positive direction along col(C).
pub fn spectral_rel_error(c_tilde: &Matrix, c: &SpdMatrix) -> Result<f64> {
    if (c_tilde.rows(), c_tilde.cols()) != (c.dim(), c.dim()) {
        return Err(Error::DimensionMismatch {
            expected: (c.dim(), c.dim()),
            got: (c_tilde.rows(), c_tilde.cols()),
        });
    }
    let chol = c.cholesky()?;
    let m = chol.whiten(c_tilde);
    Ok(eta_from_eigenvalues(&sym_eigenvalues(&m)))
}

fn eta_from_eigenvalues(ev: &[f64]) -> f64 {
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if lo <= 0.0 {
        return f64::INFINITY;
    }
    (hi - 1.0).max(1.0 / lo - 1.0).max(0.0)
}

/// Monte Carlo summary of conditioned replicas of the debiased inverse.
/// Replica r draws from stream (master_seed, r); the conditioning event is
/// {invertible and eta <= clip_threshold}. All reductions fold replicas in
/// index order regardless of thread count.
#[derive(Clone, Debug)]
pub struct MonteCarloSummary {
    /// Conditioned mean of L^T Q L (whitened estimates), over used replicas.
    pub mean_whitened: Matrix,
    /// Conditioned mean of Q itself (the averaged estimator).
    pub mean_q: Matrix,
    /// Per-batch means of the whitened estimates (empty batches dropped).
    pub batch_whitened: Vec<Matrix>,
    /// Per-replica relative errors; +inf marks non-invertible replicas.
    pub etas: Vec<f64>,
    pub used: u64,
    pub total: u64,
    pub gamma: f64,
    pub clip_threshold: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BiasRunConfig {
    pub replicas: u64,
    pub master_seed: u64,
    pub clip_threshold: f64,
    pub gamma_override: Option<f64>,
}

impl BiasRunConfig {
    pub fn new(replicas: u64, master_seed: u64) -> Self {
        BiasRunConfig {
            replicas,
            master_seed,
            clip_threshold: DEFAULT_CLIP,
            gamma_override: None,
        }
    }

    pub fn with_clip(mut self, clip: f64) -> Self {
        self.clip_threshold = clip;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_override = Some(gamma);
        self
    }
}

struct ChunkAccum {
    sum_w: Matrix,
    sum_q: Matrix,
    used: u64,
    etas: Vec<f64>,
}

pub fn monte_carlo_summary(
    a: &TallMatrix,
    spec: &SketchSpec,
    cfg: &BiasRunConfig,
) -> Result<MonteCarloSummary> {
    let d = a.d();
    let gamma = effective_gamma(spec, d, cfg.gamma_override)?;
    let h = crate::matrix::gram(a);
    let chol = h.cholesky()?;
    let spec = spec.with_seed(cfg.master_seed);
    let total = cfg.replicas;
    let clip = cfg.clip_threshold;

    let mut batch_whitened = Vec::new();
    let mut sum_w_all = Matrix::zeros(d, d);
    let mut sum_q_all = Matrix::zeros(d, d);
    let mut used_all = 0u64;
    let mut etas = Vec::with_capacity(total as usize);

    for b in 0..BATCHES as u64 {
        let lo = total * b / BATCHES as u64;
        let hi = total * (b + 1) / BATCHES as u64;
        if lo == hi {
            continue;
        }
        let parts = exec::map_chunks(hi - lo, |range| {
            let mut acc = ChunkAccum {
                sum_w: Matrix::zeros(d, d),
                sum_q: Matrix::zeros(d, d),
                used: 0,
                etas: Vec::with_capacity(range.len()),
            };
            for r in range {
                let replica = lo + r;
                let sa = apply(a, &spec, replica).expect("validated spec");
                let mut w = gram_raw(&sa);
                w.scale_in_place(gamma);
                match Cholesky::new(&w) {
                    Ok(wchol) => {
                        let q = wchol.inverse();
                        let mw = chol.congruence(&q);
                        let eta = eta_from_eigenvalues(&sym_eigenvalues(&mw));
                        acc.etas.push(eta);
                        if eta <= clip {
                            acc.sum_w.add_assign(&mw);
                            acc.sum_q.add_assign(&q);
                            acc.used += 1;
                        }
                    }
                    Err(Error::NotPositiveDefinite { .. }) => acc.etas.push(f64::INFINITY),
                    Err(e) => panic!("unexpected factorization error: {e}"),
                }
            }
            acc
        });
        let mut sum_w = Matrix::zeros(d, d);
        let mut used = 0u64;
        for part in parts {
            sum_w.add_assign(&part.sum_w);
            sum_q_all.add_assign(&part.sum_q);
            used += part.used;
            etas.extend(part.etas);
        }
        if used > 0 {
            batch_whitened.push(sum_w.scaled(1.0 / used as f64));
        }
        sum_w_all.add_assign(&sum_w);
        used_all += used;
    }

    if used_all == 0 {
        return Err(Error::AllReplicasFailed { total });
    }
    Ok(MonteCarloSummary {
        mean_whitened: sum_w_all.scaled(1.0 / used_all as f64),
        mean_q: sum_q_all.scaled(1.0 / used_all as f64),
        batch_whitened,
        etas,
        used: used_all,
        total,
        gamma,
        clip_threshold: clip,
    })
}

impl MonteCarloSummary {
    /// Whitened operator-norm inversion bias of the conditioned mean.
    pub fn bias(&self) -> f64 {
        let d = self.mean_whitened.rows();
        sym_spectral_norm(&self.mean_whitened.sub(&Matrix::identity(d)))
    }

    /// Spectral norm of the entrywise batch standard-error matrix.
    pub fn bias_stderr(&self) -> f64 {
        sym_spectral_norm(&self.batch_se_matrix())
    }

    /// Entrywise standard error of the whitened mean across batches.
    pub fn batch_se_matrix(&self) -> Matrix {
        let d = self.mean_whitened.rows();
        let b = self.batch_whitened.len();
        if b < 2 {
            return Matrix::zeros(d, d);
        }
        let mut mean = Matrix::zeros(d, d);
        for m in &self.batch_whitened {
            mean.add_assign(m);
        }
        mean.scale_in_place(1.0 / b as f64);
        let mut var = Matrix::zeros(d, d);
        for m in &self.batch_whitened {
            let diff = m.sub(&mean);
            for i in 0..d {
                for j in 0..d {
                    var[(i, j)] += diff[(i, j)] * diff[(i, j)];
                }
            }
        }
        let scale = 1.0 / ((b - 1) as f64 * b as f64);
        for i in 0..d {
            for j in 0..d {
                var[(i, j)] = (var[(i, j)] * scale).sqrt();
            }
        }
        var
    }

    /// Mean and batch standard error of trace(whitened)/d.
    pub fn whitened_trace_stats(&self) -> (f64, f64) {
        let d = self.mean_whitened.rows() as f64;
        let traces: Vec<f64> = self.batch_whitened.iter().map(|m| m.trace() / d).collect();
        let b = traces.len() as f64;
        let mean = self.mean_whitened.trace() / d;
        if traces.len() < 2 {
            return (mean, 0.0);
        }
        let bm = traces.iter().sum::<f64>() / b;
        let var = traces.iter().map(|t| (t - bm) * (t - bm)).sum::<f64>() / (b - 1.0);
        (mean, (var / b).sqrt())
    }

    pub fn failure_rate(&self) -> f64 {
        (self.total - self.used) as f64 / self.total as f64
    }
}

/// Monte Carlo estimate of inversion bias per the conditioned-mean
/// surrogate, with batch-means standard errors and per-replica relative
/// error quantiles.
#[derive(Clone, Debug)]
pub struct BiasReport {
    pub bias_estimate: f64,
    pub bias_stderr: f64,
    pub approx_error_median: f64,
    pub approx_error_q95: f64,
    pub failure_rate: f64,
    pub replicas_used: u64,
    pub clip_threshold: f64,
}

impl BiasReport {
    pub fn from_summary(summary: &MonteCarloSummary) -> Self {
        let mut etas = summary.etas.clone();
        etas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        BiasReport {
            bias_estimate: summary.bias(),
            bias_stderr: summary.bias_stderr(),
            approx_error_median: quantile_sorted(&etas, 0.5),
            approx_error_q95: quantile_sorted(&etas, 0.95),
            failure_rate: summary.failure_rate(),
            replicas_used: summary.used,
            clip_threshold: summary.clip_threshold,
        }
    }

    pub const CSV_HEADER: &'static str =
        "kind,m,d,n,q,replicas,gamma,bias,bias_se,eta_median,eta_q95,fail_rate";

    /// One CSV row; floats carry 12 significant digits.
    #[allow(clippy::too_many_arguments)]
    pub fn csv_row(
        &self,
        kind: &str,
        m: usize,
        d: usize,
        n: usize,
        q: u64,
        replicas: u64,
        gamma: f64,
    ) -> String {
        format!(
            "{kind},{m},{d},{n},{q},{replicas},{},{},{},{},{},{}",
            fmt_sig(gamma),
            fmt_sig(self.bias_estimate),
            fmt_sig(self.bias_stderr),
            fmt_sig(self.approx_error_median),
            fmt_sig(self.approx_error_q95),
            fmt_sig(self.failure_rate),
        )
    }
}

/// 12 significant digits, stable across runs.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.11e}")
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

pub fn inversion_bias_report(
    a: &TallMatrix,
    spec: &SketchSpec,
    cfg: &BiasRunConfig,
) -> Result<BiasReport> {
    if cfg.replicas < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 replicas, got {}",
            cfg.replicas
        )));
    }
    Ok(BiasReport::from_summary(&monte_carlo_summary(a, spec, cfg)?))
}

/// Average the invertible, unclipped replicas of the debiased inverse.
/// Returns the averaged matrix together with its bias report (whose
/// bias_estimate measures the average itself against (A^T A)^{-1}).
pub fn averaged_inverse(
    a: &TallMatrix,
    spec: &SketchSpec,
    q: u64,
    master_seed: u64,
) -> Result<(Matrix, BiasReport)> {
    averaged_inverse_with(a, spec, q, &BiasRunConfig::new(q, master_seed))
}

pub fn averaged_inverse_with(
    a: &TallMatrix,
    spec: &SketchSpec,
    q: u64,
    cfg: &BiasRunConfig,
) -> Result<(Matrix, BiasReport)> {
    let cfg = BiasRunConfig { replicas: q, ..*cfg };
    let summary = monte_carlo_summary(a, spec, &cfg)?;
    Ok((summary.mean_q.clone(), BiasReport::from_summary(&summary)))
}

/// tr(C Q_bar): monotone under the Loewner order, so it inherits whatever
/// relative-error guarantee Q_bar carries against (A^T A)^{-1}.
pub fn functional_query_trace(q_bar: &Matrix, c: &SpdMatrix) -> Result<f64> {
    if (q_bar.rows(), q_bar.cols()) != (c.dim(), c.dim()) {
        return Err(Error::DimensionMismatch {
            expected: (c.dim(), c.dim()),
            got: (q_bar.rows(), q_bar.cols()),
        });
    }
    let mut tr = 0.0;
    for i in 0..c.dim() {
        for j in 0..c.dim() {
            tr += c.inner()[(i, j)] * q_bar[(j, i)];
        }
    }
    Ok(tr)
}

/// Estimate of the scalar c with E[(U^T S^T S U)^{-1}] = c I for an
/// orthogonally invariant sketch, plus the isotropy residual
/// ||M_bar - c_hat I|| / c_hat and batch standard errors for both.
#[derive(Clone, Debug)]
pub struct IsotropyEstimate {
    pub c_hat: f64,
    pub c_stderr: f64,
    pub isotropy_resid: f64,
    pub resid_stderr: f64,
    pub replicas_used: u64,
}

/// Monte Carlo mean of the UNSCALED inverse (gamma = 1) over sketches of an
/// orthonormal basis. With a Haar spec this estimates the exact-correction
/// constant c_{m,n,d}; with a Gaussian spec it recovers m/(m-d-1).
pub fn haar_constant_estimate(
    u: &crate::matrix::OrthonormalBasis,
    spec: &SketchSpec,
    replicas: u64,
    master_seed: u64,
) -> Result<IsotropyEstimate> {
    if spec.m <= u.d() {
        return Err(Error::SketchSmallerThanD { m: spec.m, d: u.d() });
    }
    let cfg = BiasRunConfig::new(replicas, master_seed)
        .with_clip(f64::INFINITY)
        .with_gamma(1.0);
    let summary = monte_carlo_summary(&u.as_tall(), spec, &cfg)?;
    let d = u.d() as f64;
    let c_hat = summary.mean_whitened.trace() / d;
    let (_, c_stderr) = summary.whitened_trace_stats();
    let dev = summary
        .mean_whitened
        .sub(&Matrix::identity(u.d()).scaled(c_hat));
    let isotropy_resid = sym_spectral_norm(&dev) / c_hat;
    let resid_stderr = sym_spectral_norm(&summary.batch_se_matrix()) / c_hat;
    Ok(IsotropyEstimate {
        c_hat,
        c_stderr,
        isotropy_resid,
        resid_stderr,
        replicas_used: summary.used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leverage::exact_leverage_scores;
    use crate::matrix::{gram, orthonormal_basis, spd_inverse};
    use crate::rng::RngStream;
    use crate::sketch::SubgaussianLaw;

    fn random_tall(n: usize, d: usize, seed: u64) -> TallMatrix {
        let mut s = RngStream::new(seed, 0);
        let mut m = Matrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                m[(i, j)] = s.gaussian();
            }
        }
        TallMatrix::new(m).unwrap()
    }

    #[test]
    fn gamma_arithmetic() {
        assert_eq!(gamma_debias(12, 4).unwrap(), 1.5);
        assert!(matches!(
            gamma_debias(4, 4),
            Err(Error::SketchSmallerThanD { .. })
        ));
    }

    #[test]
    fn scalar_case_is_exact() {
        // n = d = 1 with a Rademacher sketch: S^T S has unit diagonal, so
        // the estimate equals (gamma ||a_1||^2)^{-1} deterministically.
        let a = TallMatrix::new(Matrix::from_rows(&[&[3.0]])).unwrap();
        let spec = SketchSpec::new(SketchKind::Rademacher, 4, 7);
        let est = debiased_inverse(&a, &spec, 0).unwrap();
        let gamma = 4.0 / 3.0;
        let expect = 1.0 / (gamma * 9.0);
        assert!(est.invertible);
        let got = est.matrix.unwrap().inner()[(0, 0)];
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn rel_error_examples() {
        let a = random_tall(12, 3, 5);
        let c = gram(&a);
        assert!(spectral_rel_error(c.inner(), &c).unwrap() < 1e-10);
        assert!((spectral_rel_error(&c.inner().scaled(2.0), &c).unwrap() - 1.0).abs() < 1e-10);
        let c2 = SpdMatrix::new(Matrix::identity(2)).unwrap();
        let tilde = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.5]]);
        assert!((spectral_rel_error(&tilde, &c2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rel_error_singular_is_infinite() {
        let c = SpdMatrix::new(Matrix::identity(2)).unwrap();
        let tilde = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(spectral_rel_error(&tilde, &c).unwrap().is_infinite());
    }

    #[test]
    fn rel_error_congruence_and_inversion_invariance() {
        let a = random_tall(20, 4, 2);
        let c = gram(&a);
        let b = random_tall(24, 4, 3);
        let ct = gram(&b);
        let eta = spectral_rel_error(ct.inner(), &c).unwrap();

        // congruence by a fixed invertible M
        let mm = random_tall(4, 4, 9);
        let m = mm.inner();
        let cm = SpdMatrix::new(m.transpose().matmul(c.inner()).matmul(m).symmetrized()).unwrap();
        let ctm = m.transpose().matmul(ct.inner()).matmul(m).symmetrized();
        let eta_m = spectral_rel_error(&ctm, &cm).unwrap();
        assert!((eta - eta_m).abs() < 1e-8, "{eta} vs {eta_m}");

        // inversion symmetry
        let ci = spd_inverse(&c).unwrap();
        let cti = spd_inverse(&ct).unwrap();
        let eta_inv = spectral_rel_error(cti.inner(), &ci).unwrap();
        assert!((eta - eta_inv).abs() < 1e-8, "{eta} vs {eta_inv}");
    }

    #[test]
    fn functional_query_examples() {
        let d = 3;
        let id = Matrix::identity(d);
        let c = SpdMatrix::new(id.clone()).unwrap();
        assert_eq!(functional_query_trace(&id, &c).unwrap(), d as f64);

        let mut e11 = Matrix::zeros(d, d);
        e11[(0, 0)] = 1.0;
        let c_e = SpdMatrix::new(e11).unwrap();
        let mut q = Matrix::identity(d);
        q[(0, 0)] = 2.5;
        assert_eq!(functional_query_trace(&q, &c_e).unwrap(), 2.5);

        let a = random_tall(15, d, 4);
        let h = gram(&a);
        let hinv = spd_inverse(&h).unwrap();
        let tr = functional_query_trace(hinv.inner(), &h).unwrap();
        assert!((tr - d as f64).abs() < 1e-9);
    }

    #[test]
    fn averaged_q1_equals_single_replica() {
        let a = random_tall(32, 4, 6);
        let profile = exact_leverage_scores(&a).unwrap();
        let spec = SketchSpec::new(
            SketchKind::Less {
                profile,
                law: SubgaussianLaw::Rademacher,
                bernoulli: false,
            },
            16,
            9,
        );
        let (avg, report) = averaged_inverse(&a, &spec, 1, 9).unwrap();
        let single = debiased_inverse(&a, &spec, 0).unwrap();
        assert!(report.failure_rate == 0.0);
        assert_eq!(
            avg.max_abs_diff(single.matrix.unwrap().inner()),
            0.0,
            "q=1 average must equal replica 0"
        );
    }

    #[test]
    fn averaging_commutes_with_congruence() {
        // mean of M^T Q_i M equals M^T (mean Q_i) M for a fixed M.
        let a = random_tall(24, 3, 8);
        let spec = SketchSpec::new(SketchKind::Rademacher, 12, 21);
        let q = 8;
        let mmat = random_tall(3, 3, 30);
        let m = mmat.inner();
        let mut direct = Matrix::zeros(3, 3);
        let mut count = 0.0;
        for r in 0..q {
            let est = debiased_inverse(&a, &spec, r).unwrap();
            if let Some(qi) = est.matrix {
                direct.add_assign(&m.transpose().matmul(qi.inner()).matmul(m));
                count += 1.0;
            }
        }
        direct.scale_in_place(1.0 / count);
        let (avg, _) = averaged_inverse(&a, &spec, q, spec.seed).unwrap();
        let via_avg = m.transpose().matmul(&avg).matmul(m);
        assert!(direct.max_abs_diff(&via_avg) < 1e-10);
    }

    #[test]
    fn failure_rate_small_at_moderate_sketch_sizes() {
        // m >= 4 d log d keeps the failure rate at or below 1%.
        let d = 8;
        let m = (4.0 * d as f64 * (d as f64).ln()).ceil() as usize;
        let a = random_tall(64, d, 10);
        let spec = SketchSpec::new(SketchKind::Rademacher, m, 17);
        let cfg = BiasRunConfig::new(1000, 17);
        let report = inversion_bias_report(&a, &spec, &cfg).unwrap();
        assert!(report.failure_rate <= 0.01, "{}", report.failure_rate);
    }

    #[test]
    fn gaussian_bias_drops_with_exact_correction() {
        // Reduced-scale version of the exact-correction contrast: with the
        // default gamma the bias is ~1/(m-d-1); with m/(m-d-1) it vanishes.
        let a = random_tall(32, 4, 11);
        let m = 12;
        let spec = SketchSpec::new(SketchKind::Gaussian, m, 23);
        let base = BiasRunConfig::new(20_000, 23).with_clip(f64::INFINITY);
        let plain = inversion_bias_report(&a, &spec, &base).unwrap();
        let corrected = inversion_bias_report(
            &a,
            &spec,
            &base.with_gamma(m as f64 / (m - 4 - 1) as f64),
        )
        .unwrap();
        assert!(
            corrected.bias_estimate < plain.bias_estimate,
            "corrected {} vs plain {}",
            corrected.bias_estimate,
            plain.bias_estimate
        );
        assert!(corrected.bias_estimate <= 4.0 * corrected.bias_stderr);
    }

    #[test]
    fn haar_constant_full_sketch_is_exact() {
        // m = n: S^T S = (n/m) I = I, so c_hat = 1 with zero residual.
        let a = random_tall(16, 4, 12);
        let u = orthonormal_basis(&a).unwrap();
        let spec = SketchSpec::new(SketchKind::Haar, 16, 5);
        let est = haar_constant_estimate(&u, &spec, 200, 5).unwrap();
        assert!((est.c_hat - 1.0).abs() < 1e-10);
        assert!(est.isotropy_resid < 1e-10);
    }

    #[test]
    fn summary_reduction_is_thread_invariant() {
        // The chunked fold gives bit-identical results however it is run;
        // compare two invocations (the pool may schedule differently).
        let a = random_tall(40, 4, 14);
        let spec = SketchSpec::new(SketchKind::Rademacher, 16, 3);
        let cfg = BiasRunConfig::new(500, 3);
        let s1 = monte_carlo_summary(&a, &spec, &cfg).unwrap();
        let s2 = monte_carlo_summary(&a, &spec, &cfg).unwrap();
        assert_eq!(s1.mean_whitened.data(), s2.mean_whitened.data());
        assert_eq!(s1.etas, s2.etas);
    }
}
