//! Exact and Monte Carlo oracles for the structural conditions, the
//! quadratic-form variance identity, the Binomial inverse-moment bound, and
//! the coordinate lower-bound construction for row sampling.

use crate::error::{Error, Result};
use crate::exec;
use crate::leverage::LeverageProfile;
use crate::matrix::{
    dot, gram_raw, sym_eigenvalues, Matrix, OrthonormalBasis, TallMatrix,
};
use crate::rng::{CategoricalTable, RngStream};
use crate::sketch::{apply, draw_sparsifier, SketchSpec, SubgaussianLaw};

/// Row laws x used in the variance oracles. All have mean zero and unit
/// variance per coordinate.
#[derive(Clone, Debug)]
pub enum EntryLaw {
    Gaussian,
    Rademacher,
    /// x_i = sqrt(m/s) b_i r_i with b_i ~ Bernoulli(s/m): the i.i.d. sparse
    /// embedding row law. Parameterized by s/m in (0, 1].
    ScaledBernoulliSign { density: f64 },
    /// x circ xi for a leverage score sparsifier xi (dependent entries; no
    /// closed-form fourth moments).
    LeverageSparsified {
        profile: LeverageProfile,
        law: SubgaussianLaw,
    },
}

impl EntryLaw {
    /// E[x_i^4] where a closed form exists; the sparsified law has
    /// dependent entries and reports `LawNotIndependent`.
    pub fn fourth_moment(&self) -> Result<f64> {
        match self {
            EntryLaw::Gaussian => Ok(3.0),
            EntryLaw::Rademacher => Ok(1.0),
            EntryLaw::ScaledBernoulliSign { density } => Ok(1.0 / density),
            EntryLaw::LeverageSparsified { .. } => Err(Error::LawNotIndependent),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::ScaledBernoulliSign { .. } => "bernoulli-sign",
            EntryLaw::LeverageSparsified { .. } => "less",
        }
    }

    /// Draw one row vector. Sparse laws return only the nonzero pattern.
    pub fn sample(&self, n: usize, stream: &mut RngStream) -> SampledVector {
        match self {
            EntryLaw::Gaussian => {
                SampledVector::Dense((0..n).map(|_| stream.gaussian()).collect())
            }
            EntryLaw::Rademacher => {
                SampledVector::Dense((0..n).map(|_| stream.sign()).collect())
            }
            EntryLaw::ScaledBernoulliSign { density } => {
                let coeff = (1.0 / density).sqrt();
                let mut idx = Vec::new();
                let mut val = Vec::new();
                for i in 0..n {
                    if stream.bernoulli(*density) {
                        idx.push(i);
                        val.push(coeff * stream.sign());
                    }
                }
                SampledVector::Sparse { idx, val }
            }
            EntryLaw::LeverageSparsified { profile, law } => {
                let draw = draw_sparsifier(profile, stream);
                let val = draw
                    .weights
                    .iter()
                    .map(|&xi| xi * law.draw_value(stream))
                    .collect();
                SampledVector::Sparse {
                    idx: draw.support,
                    val,
                }
            }
        }
    }
}

impl SubgaussianLaw {
    fn draw_value(self, stream: &mut RngStream) -> f64 {
        match self {
            SubgaussianLaw::Gaussian => stream.gaussian(),
            SubgaussianLaw::Rademacher => stream.sign(),
            SubgaussianLaw::UniformBounded => stream.uniform_subgaussian(),
        }
    }
}

pub enum SampledVector {
    Dense(Vec<f64>),
    Sparse { idx: Vec<usize>, val: Vec<f64> },
}

impl SampledVector {
    /// x^T F x for a symmetric F.
    pub fn quad_form(&self, f: &Matrix) -> f64 {
        match self {
            SampledVector::Dense(x) => {
                let mut total = 0.0;
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    total += xi * dot(f.row(i), x);
                }
                total
            }
            SampledVector::Sparse { idx, val } => {
                let mut total = 0.0;
                for (a, &i) in idx.iter().enumerate() {
                    let fi = f.row(i);
                    for (b, &j) in idx.iter().enumerate() {
                        total += val[a] * val[b] * fi[j];
                    }
                }
                total
            }
        }
    }
}

/// Var[x^T F x] = sum_k (E x_k^4 - 3) F_kk^2 + 2 tr(F^2) for independent
/// mean-zero unit-variance entries and symmetric F.
pub fn quadratic_form_variance_exact(law: &EntryLaw, f: &Matrix) -> Result<f64> {
    let m4 = law.fourth_moment()?;
    let n = f.rows();
    let d4 = m4 - 3.0;
    let mut diag_term = 0.0;
    for k in 0..n {
        diag_term += d4 * f[(k, k)] * f[(k, k)];
    }
    // tr(F^2) = ||F||_F^2 for symmetric F.
    let mut fro2 = 0.0;
    for v in f.data() {
        fro2 += v * v;
    }
    Ok(diag_term + 2.0 * fro2)
}

/// Sample variance of x^T B x with a batch-means standard error
/// (10 batches). Works for any entry law, including the dependent
/// leverage-sparsified one.
pub fn quadratic_form_variance_mc(
    law: &EntryLaw,
    b: &Matrix,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1e3 trials, got {trials}"
        )));
    }
    let n = b.rows();
    let batches = 10u64;
    let mut batch_vars = Vec::with_capacity(batches as usize);
    for batch in 0..batches {
        let lo = trials * batch / batches;
        let hi = trials * (batch + 1) / batches;
        let parts = exec::map_chunks(hi - lo, |range| {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for r in range {
                let mut stream = RngStream::new(seed, lo + r);
                let x = law.sample(n, &mut stream);
                let v = x.quad_form(b);
                sum += v;
                sumsq += v * v;
            }
            (sum, sumsq)
        });
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for (s, s2) in parts {
            sum += s;
            sumsq += s2;
        }
        let cnt = (hi - lo) as f64;
        let mean = sum / cnt;
        batch_vars.push((sumsq / cnt - mean * mean).max(0.0) * cnt / (cnt - 1.0));
    }
    let bn = batch_vars.len() as f64;
    let var_hat = batch_vars.iter().sum::<f64>() / bn;
    let bvar = batch_vars
        .iter()
        .map(|v| (v - var_hat) * (v - var_hat))
        .sum::<f64>()
        / (bn - 1.0);
    Ok((var_hat, (bvar / bn).sqrt()))
}

/// The tight Restricted Bai-Silverstein constant for an independent-entry
/// law restricted to col(U): lambda_max((U o U)^T D (U o U)) + 2 with
/// D = diag(E x_k^4 - 3). Clamped at zero (the underlying quantity is a
/// covariance top-eigenvalue, hence non-negative).
pub fn restricted_bs_alpha(u: &OrthonormalBasis, fourth_moments: &[f64]) -> f64 {
    let n = u.n();
    let d = u.d();
    assert_eq!(fourth_moments.len(), n);
    let mut t = Matrix::zeros(d, d);
    let mut r = vec![0.0; d];
    for i in 0..n {
        let ui = u.row(i);
        for (rj, &v) in r.iter_mut().zip(ui) {
            *rj = v * v;
        }
        let w = fourth_moments[i] - 3.0;
        if w == 0.0 {
            continue;
        }
        for j in 0..d {
            if r[j] == 0.0 {
                continue;
            }
            let row = t.row_mut(j);
            for k in 0..d {
                row[k] += w * r[j] * r[k];
            }
        }
    }
    let ev = sym_eigenvalues(&t);
    (ev[ev.len() - 1] + 2.0).max(0.0)
}

/// The doubly stochastic leverage matrix Q = R^T L R with R = U o U and
/// L = diag(1/l_i), after dropping zero-leverage rows. Returns
/// (||Q 1 - 1||_inf, lambda_max(Q)).
pub fn doubly_stochastic_check(u: &OrthonormalBasis) -> (f64, f64) {
    let n = u.n();
    let d = u.d();
    let mut q = Matrix::zeros(d, d);
    let mut r = vec![0.0; d];
    for i in 0..n {
        let ui = u.row(i);
        let mut l = 0.0;
        for (rj, &v) in r.iter_mut().zip(ui) {
            *rj = v * v;
            l += v * v;
        }
        if l <= 1e-12 {
            continue;
        }
        for j in 0..d {
            if r[j] == 0.0 {
                continue;
            }
            let w = r[j] / l;
            let row = q.row_mut(j);
            for k in 0..d {
                row[k] += w * r[k];
            }
        }
    }
    let mut row_resid = 0.0_f64;
    for j in 0..d {
        let s: f64 = q.row(j).iter().sum();
        row_resid = row_resid.max((s - 1.0).abs());
    }
    let ev = sym_eigenvalues(&q.symmetrized());
    (row_resid, ev[ev.len() - 1])
}

/// Normalized pmf of Binomial(b, 1/2) computed in log space outward from
/// the mode, then renormalized so the common anchor error cancels.
fn binomial_half_pmf(b: u32) -> Vec<f64> {
    let bu = b as usize;
    let mut logp = vec![0.0_f64; bu + 1];
    let mode = bu / 2;
    // log C(b, mode) via a compensated sum of log ratios.
    let mut anchor = -(b as f64) * std::f64::consts::LN_2;
    let mut comp = 0.0;
    for k in 1..=mode {
        let term = (((bu - mode + k) as f64) / (k as f64)).ln();
        let y = term - comp;
        let t = anchor + y;
        comp = (t - anchor) - y;
        anchor = t;
    }
    logp[mode] = anchor;
    for i in mode..bu {
        // C(b, i+1) = C(b, i) * (b - i) / (i + 1)
        logp[i + 1] = logp[i] + (((bu - i) as f64) / ((i + 1) as f64)).ln();
    }
    for i in (0..mode).rev() {
        logp[i] = logp[i + 1] - (((bu - i) as f64) / ((i + 1) as f64)).ln();
    }
    let mut pmf: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    pmf
}

/// Exact E[1/(x + b/2)] for x ~ Binomial(b, 1/2), relative accuracy 1e-12
/// for b up to 1e4.
pub fn binomial_inverse_moment_exact(b: u32) -> f64 {
    assert!((1..=10_000).contains(&b));
    let pmf = binomial_half_pmf(b);
    let half_b = b as f64 / 2.0;
    pmf.iter()
        .enumerate()
        .map(|(i, &p)| p / (i as f64 + half_b))
        .sum()
}

/// Exact tail Pr(x <= b/2 - sqrt(b)/4) for x ~ Binomial(b, 1/2).
pub fn binomial_anticoncentration_check(b: u32) -> f64 {
    assert!(b >= 1);
    let pmf = binomial_half_pmf(b);
    let cutoff = b as f64 / 2.0 - (b as f64).sqrt() / 4.0;
    pmf.iter()
        .enumerate()
        .take_while(|(i, _)| (*i as f64) <= cutoff)
        .map(|(_, &p)| p)
        .sum()
}

/// The 2d x d coordinate matrix whose first two rows are (1/2) e_1 and
/// (sqrt 3/2) e_1, followed by pairs (1/sqrt 2) e_i. Its Gram matrix is
/// exactly the identity and its leverage scores are (1/4, 3/4, 1/2, ...).
pub fn lower_bound_matrix(d: usize) -> Result<TallMatrix> {
    if d < 2 {
        return Err(Error::ShapeInvalid(format!("need d >= 2, got {d}")));
    }
    let n = 2 * d;
    let mut m = Matrix::zeros(n, d);
    m[(0, 0)] = 0.5;
    m[(1, 0)] = 0.75_f64.sqrt();
    let half_sqrt = 0.5_f64.sqrt();
    for i in 1..d {
        m[(2 * i, i)] = half_sqrt;
        m[(2 * i + 1, i)] = half_sqrt;
    }
    TallMatrix::new(m)
}

#[derive(Clone, Copy, Debug)]
pub struct LowerBoundRatio {
    /// E[Q_11 | E*] / E[Q_22 | E*] estimated over accepted replicas.
    pub ratio: f64,
    /// Batch-means standard error of the ratio.
    pub stderr: f64,
    pub acceptance_rate: f64,
    pub replicas_used: u64,
}

/// Monte Carlo diagonal-ratio experiment for uniform row sampling of the
/// coordinate matrix, conditioned by rejection on E* = {all pair counts
/// positive}. The scaling gamma cancels algebraically in the ratio; it is
/// accepted as an argument so callers can verify the cancellation.
pub fn lower_bound_bias_ratio(
    d: usize,
    m: usize,
    gamma: f64,
    replicas: u64,
    seed: u64,
) -> Result<LowerBoundRatio> {
    if m < d {
        return Err(Error::InvalidParameter(format!("need m >= d, got m={m} d={d}")));
    }
    if d < 2 {
        return Err(Error::ShapeInvalid(format!("need d >= 2, got {d}")));
    }
    let n = 2 * d;
    let batches = 10u64;
    let mut batch_pairs: Vec<(f64, f64, u64)> = Vec::new();
    let mut accepted_total = 0u64;
    for batch in 0..batches {
        let lo = replicas * batch / batches;
        let hi = replicas * (batch + 1) / batches;
        let parts = exec::map_chunks(hi - lo, |range| {
            let mut s11 = 0.0;
            let mut s22 = 0.0;
            let mut used = 0u64;
            let mut counts = vec![0u32; d];
            for r in range {
                let mut stream = RngStream::new(seed, lo + r);
                counts.fill(0);
                // entry 1 weight: 1/4 per draw of row 1, 3/4 per row 2
                let mut w1 = 0.0;
                for _ in 0..m {
                    let s = stream.index(n);
                    counts[s / 2] += 1;
                    if s == 0 {
                        w1 += 0.25;
                    } else if s == 1 {
                        w1 += 0.75;
                    }
                }
                if counts.iter().any(|&c| c == 0) {
                    continue;
                }
                let scale = gamma * n as f64 / m as f64;
                // diag entries of gamma A^T S^T S A
                let e1 = scale * w1;
                let e2 = scale * counts[1] as f64 / 2.0;
                s11 += 1.0 / e1;
                s22 += 1.0 / e2;
                used += 1;
            }
            (s11, s22, used)
        });
        let mut s11 = 0.0;
        let mut s22 = 0.0;
        let mut used = 0u64;
        for (a, b, u) in parts {
            s11 += a;
            s22 += b;
            used += u;
        }
        accepted_total += used;
        batch_pairs.push((s11, s22, used));
    }
    let rate = accepted_total as f64 / replicas as f64;
    if rate < 1e-3 {
        return Err(Error::ConditioningTooRare { rate });
    }
    let tot11: f64 = batch_pairs.iter().map(|p| p.0).sum();
    let tot22: f64 = batch_pairs.iter().map(|p| p.1).sum();
    let ratio = tot11 / tot22;
    let batch_ratios: Vec<f64> = batch_pairs
        .iter()
        .filter(|p| p.2 > 0)
        .map(|p| p.0 / p.1)
        .collect();
    let bn = batch_ratios.len() as f64;
    let bm = batch_ratios.iter().sum::<f64>() / bn;
    let bvar = batch_ratios
        .iter()
        .map(|r| (r - bm) * (r - bm))
        .sum::<f64>()
        / (bn - 1.0);
    Ok(LowerBoundRatio {
        ratio,
        stderr: (bvar / bn).sqrt(),
        acceptance_rate: rate,
        replicas_used: accepted_total,
    })
}

/// Exact diagonal-ratio for d = 2 by enumerating all multinomial outcomes
/// of m uniform draws over the 4 rows, conditioned on E*.
pub fn lower_bound_ratio_exact_d2(m: usize) -> f64 {
    // log m! table
    let mut logfact = vec![0.0_f64; m + 1];
    for i in 1..=m {
        logfact[i] = logfact[i - 1] + (i as f64).ln();
    }
    let ln_quarter = 0.25_f64.ln();
    let n = 4.0;
    let mf = m as f64;
    let mut tot11 = 0.0;
    let mut tot22 = 0.0;
    let mut mass = 0.0;
    for c1 in 0..=m {
        for c2 in 0..=(m - c1) {
            for c3 in 0..=(m - c1 - c2) {
                let c4 = m - c1 - c2 - c3;
                let b1 = c1 + c2;
                let b2 = c3 + c4;
                if b1 == 0 || b2 == 0 {
                    continue;
                }
                let logp = logfact[m]
                    - logfact[c1]
                    - logfact[c2]
                    - logfact[c3]
                    - logfact[c4]
                    + mf * ln_quarter;
                let p = logp.exp();
                let e1 = (n / mf) * (c1 as f64 * 0.25 + c2 as f64 * 0.75);
                let e2 = (n / mf) * (b2 as f64 / 2.0);
                tot11 += p / e1;
                tot22 += p / e2;
                mass += p;
            }
        }
    }
    (tot11 / mass) / (tot22 / mass)
}

/// Exact Var[x^T P x] = E[(l_s/p_s - d)^2] for single-index row sampling
/// with distribution p on the coordinate matrix, where P is the projection
/// onto col(A).
pub fn row_sampling_projection_variance(scores: &[f64], probs: &[f64]) -> f64 {
    let d: f64 = scores.iter().sum();
    scores
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&l, &p)| p * (l / p - d) * (l / p - d))
        .sum()
}

/// The half/three-halves distorted leverage distribution on the coordinate
/// matrix: exact variance of the sampled quadratic form, which is at least
/// (d/3)^2 (the realized value is d^2/3).
pub fn counterexample_row_sampling_variance(d: usize) -> Result<f64> {
    let a = lower_bound_matrix(d)?;
    let exact = crate::leverage::exact_leverage_scores(&a)?;
    let n = a.n();
    let df = d as f64;
    let probs: Vec<f64> = exact
        .scores()
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            if j < n / 2 {
                l / (2.0 * df)
            } else {
                3.0 * l / (2.0 * df)
            }
        })
        .collect();
    Ok(row_sampling_projection_variance(exact.scores(), &probs))
}

/// Fraction of trials in which gram(SA) fails to be an eta-approximation
/// of gram(A).
pub fn subspace_embedding_check(
    a: &TallMatrix,
    spec: &SketchSpec,
    eta: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if trials < 50 {
        return Err(Error::InvalidParameter(format!(
            "need at least 50 trials, got {trials}"
        )));
    }
    spec.validate(a)?;
    let h = crate::matrix::gram(a);
    let chol = h.cholesky()?;
    let spec = spec.with_seed(seed);
    let parts = exec::map_chunks(trials, |range| {
        let mut fails = 0u64;
        for r in range {
            let sa = apply(a, &spec, r).expect("validated spec");
            let g = gram_raw(&sa);
            let ev = sym_eigenvalues(&chol.whiten(&g));
            let lo = ev[0];
            let hi = ev[ev.len() - 1];
            let err = if lo <= 0.0 {
                f64::INFINITY
            } else {
                (hi - 1.0).max(1.0 / lo - 1.0).max(0.0)
            };
            if err > eta {
                fails += 1;
            }
        }
        fails
    });
    Ok(parts.iter().sum::<u64>() as f64 / trials as f64)
}
