//! Sketching operators.
//!
//! Every operator produces the m x d sketched matrix SA directly; the m x n
//! matrix S itself is materialized only for dense kinds where it is the
//! natural intermediate. Rows of every kind are i.i.d. and distributed as
//! (1/sqrt m) x^T for the kind's row law, so E[S^T S] = I_n and the Gram
//! matrix of the sketch is an unbiased estimate of A^T A.
//!
//! Replica r of a sketch draws from the stream `(spec.seed, r)`; identical
//! `(A, spec, replica)` reproduce the output bit for bit.

use std::fmt;

use crate::error::{Error, Result};
use crate::leverage::LeverageProfile;
use crate::matrix::{axpy, thin_qr, Matrix, TallMatrix};
use crate::rng::{CategoricalTable, RngStream};

/// Entry law for the sub-gaussian factor x of a LESS embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubgaussianLaw {
    Gaussian,
    Rademacher,
    UniformBounded,
}

impl SubgaussianLaw {
    fn draw(self, stream: &mut RngStream) -> f64 {
        match self {
            SubgaussianLaw::Gaussian => stream.gaussian(),
            SubgaussianLaw::Rademacher => stream.sign(),
            SubgaussianLaw::UniformBounded => stream.uniform_subgaussian(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SubgaussianLaw::Gaussian => "gaussian",
            SubgaussianLaw::Rademacher => "rademacher",
            SubgaussianLaw::UniformBounded => "uniform",
        }
    }
}

#[derive(Clone, Debug)]
pub enum SketchKind {
    /// i.i.d. N(0,1) entries scaled by 1/sqrt(m).
    Gaussian,
    /// i.i.d. +-1 entries scaled by 1/sqrt(m).
    Rademacher,
    /// i.i.d. uniform on [-sqrt 3, sqrt 3] scaled by 1/sqrt(m).
    UniformSubgaussian,
    /// sqrt(n/m) times a uniformly random m x n partial orthogonal matrix.
    Haar,
    /// Row sampling: row j is a_s / sqrt(m p_s) with s ~ p.
    RowSampling { probs: Vec<f64> },
    /// LEverage Score Sparsified embedding for the profile's matrix.
    /// `bernoulli` switches from the with-replacement sparsifier (d draws)
    /// to the Bernoulli variant xi_i = b_i / sqrt(l_i), b_i ~ Bernoulli(l_i).
    Less {
        profile: LeverageProfile,
        law: SubgaussianLaw,
        bernoulli: bool,
    },
    /// Subsampled Randomized Hadamard Transform: randomized Hadamard
    /// preprocess, then uniform row sampling over the padded rows.
    Srht,
    /// i.i.d.-row sparse embedding: x_i = sqrt(m/s) b_i r_i with
    /// b_i ~ Bernoulli(s/m) and r_i a random sign.
    ObliviousSparse { sparsity: f64 },
    /// Bypass: SA = A. Used for exact baselines.
    Identity,
}

impl SketchKind {
    pub fn name(&self) -> &'static str {
        match self {
            SketchKind::Gaussian => "Gaussian",
            SketchKind::Rademacher => "Rademacher",
            SketchKind::UniformSubgaussian => "UniformSubgaussian",
            SketchKind::Haar => "Haar",
            SketchKind::RowSampling { .. } => "RowSampling",
            SketchKind::Less { .. } => "LESS",
            SketchKind::Srht => "SRHT",
            SketchKind::ObliviousSparse { .. } => "ObliviousSparse",
            SketchKind::Identity => "Identity",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub m: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(kind: SketchKind, m: usize, seed: u64) -> Self {
        SketchSpec { kind, m, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s
    }

    /// Kind- and shape-level validation against the target matrix.
    pub fn validate(&self, a: &TallMatrix) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        match &self.kind {
            SketchKind::Haar => {
                if self.m > a.n() {
                    return Err(Error::SketchTooLarge { m: self.m, n: a.n() });
                }
            }
            SketchKind::RowSampling { probs } => {
                if probs.len() != a.n() {
                    return Err(Error::DimensionMismatch {
                        expected: (a.n(), 1),
                        got: (probs.len(), 1),
                    });
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "sampling probabilities sum to {total}"
                    )));
                }
            }
            SketchKind::Less { profile, .. } => {
                if profile.n() != a.n() {
                    return Err(Error::DimensionMismatch {
                        expected: (a.n(), 1),
                        got: (profile.n(), 1),
                    });
                }
            }
            SketchKind::ObliviousSparse { sparsity } => {
                if !(*sparsity > 0.0 && *sparsity <= self.m as f64) {
                    return Err(Error::InvalidParameter(format!(
                        "sparsity {sparsity} outside (0, m]"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for SketchSpec {
    /// Key=value token serialization, e.g.
    /// `kind=LESS m=256 seed=42 subgaussian=rademacher profile=exact`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} m={} seed={}", self.kind.name(), self.m, self.seed)?;
        match &self.kind {
            SketchKind::Less { law, bernoulli, .. } => {
                write!(f, " subgaussian={}", law.name())?;
                if *bernoulli {
                    write!(f, " variant=bernoulli")?;
                }
            }
            SketchKind::ObliviousSparse { sparsity } => {
                write!(f, " sparsity={sparsity}")?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// One realization of the leverage score sparsifier: d categorical draws
/// aggregated into counts b_i with weights xi_i = sqrt(b_i / (d p_i)).
#[derive(Clone, Debug)]
pub struct SparsifierDraw {
    pub support: Vec<usize>,
    pub counts: Vec<u32>,
    pub weights: Vec<f64>,
}

impl SparsifierDraw {
    pub fn total_count(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Draw a sparsifier for `profile`: d i.i.d. indices from its distribution.
/// The support never exceeds d and the counts sum to d exactly.
pub fn draw_sparsifier(profile: &LeverageProfile, stream: &mut RngStream) -> SparsifierDraw {
    let table = CategoricalTable::new(profile.distribution());
    draw_sparsifier_with_table(profile, &table, stream)
}

fn draw_sparsifier_with_table(
    profile: &LeverageProfile,
    table: &CategoricalTable,
    stream: &mut RngStream,
) -> SparsifierDraw {
    let d = profile.dim();
    let mut idx: Vec<usize> = (0..d).map(|_| table.sample(stream)).collect();
    idx.sort_unstable();
    let mut support = Vec::with_capacity(d);
    let mut counts: Vec<u32> = Vec::with_capacity(d);
    for i in idx {
        if support.last() == Some(&i) {
            *counts.last_mut().unwrap() += 1;
        } else {
            support.push(i);
            counts.push(1);
        }
    }
    let p = profile.distribution();
    let weights = support
        .iter()
        .zip(&counts)
        .map(|(&i, &b)| (b as f64 / (d as f64 * p[i])).sqrt())
        .collect();
    SparsifierDraw {
        support,
        counts,
        weights,
    }
}

/// Apply the sketch to A, producing the m x d matrix SA for replica
/// `replica` of the stream keyed by `spec.seed`.
pub fn apply(a: &TallMatrix, spec: &SketchSpec, replica: u64) -> Result<Matrix> {
    spec.validate(a)?;
    let mut stream = RngStream::new(spec.seed, replica);
    match &spec.kind {
        SketchKind::Gaussian => Ok(apply_dense(a, spec.m, |s| s.gaussian(), &mut stream)),
        SketchKind::Rademacher => Ok(apply_dense(a, spec.m, |s| s.sign(), &mut stream)),
        SketchKind::UniformSubgaussian => {
            Ok(apply_dense(a, spec.m, |s| s.uniform_subgaussian(), &mut stream))
        }
        SketchKind::Haar => apply_haar(a, spec.m, &mut stream),
        SketchKind::RowSampling { probs } => apply_row_sampling(a, spec.m, probs, &mut stream),
        SketchKind::Less {
            profile,
            law,
            bernoulli,
        } => Ok(apply_less(a, spec.m, profile, *law, *bernoulli, &mut stream)),
        SketchKind::Srht => Ok(apply_srht(a, spec.m, &mut stream)),
        SketchKind::ObliviousSparse { sparsity } => {
            Ok(apply_oblivious_sparse(a, spec.m, *sparsity, &mut stream))
        }
        SketchKind::Identity => Ok(a.inner().clone()),
    }
}

/// Dense i.i.d. sketch: entries of S generated row-major, one coefficient
/// per input row, scaled by 1/sqrt(m).
fn apply_dense(
    a: &TallMatrix,
    m: usize,
    mut entry: impl FnMut(&mut RngStream) -> f64,
    stream: &mut RngStream,
) -> Matrix {
    let n = a.n();
    let d = a.d();
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Matrix::zeros(m, d);
    for j in 0..m {
        let row = out.row_mut(j);
        for i in 0..n {
            let c = entry(stream);
            if c == 1.0 {
                for (o, &v) in row.iter_mut().zip(a.row(i)) {
                    *o += v;
                }
            } else if c == -1.0 {
                for (o, &v) in row.iter_mut().zip(a.row(i)) {
                    *o -= v;
                }
            } else {
                axpy(row, c, a.row(i));
            }
        }
        for o in row.iter_mut() {
            *o *= scale;
        }
    }
    out
}

/// Haar sketch: sqrt(n/m) times the transpose of the Q factor of an n x m
/// standard Gaussian matrix (Haar-distributed by orthogonal invariance).
fn apply_haar(a: &TallMatrix, m: usize, stream: &mut RngStream) -> Result<Matrix> {
    let n = a.n();
    let mut g = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            g[(i, j)] = stream.gaussian();
        }
    }
    let (q, _r) = thin_qr(&g)?;
    let scale = (n as f64 / m as f64).sqrt();
    // SA = scale * Q^T A
    let qt_a = q.transpose_matmul(a.inner());
    Ok(qt_a.scaled(scale))
}

/// The m x n Haar sketch matrix itself (for direct S S^T checks).
pub fn haar_matrix(n: usize, m: usize, seed: u64, replica: u64) -> Result<Matrix> {
    if m > n {
        return Err(Error::SketchTooLarge { m, n });
    }
    let mut stream = RngStream::new(seed, replica);
    let mut g = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            g[(i, j)] = stream.gaussian();
        }
    }
    let (q, _r) = thin_qr(&g)?;
    Ok(q.transpose().scaled((n as f64 / m as f64).sqrt()))
}

fn apply_row_sampling(
    a: &TallMatrix,
    m: usize,
    probs: &[f64],
    stream: &mut RngStream,
) -> Result<Matrix> {
    let table = CategoricalTable::new(probs);
    let mut out = Matrix::zeros(m, a.d());
    for j in 0..m {
        let s = table.sample(stream);
        let p = probs[s];
        if p <= 0.0 {
            return Err(Error::ZeroProbabilityRow { index: s });
        }
        let scale = 1.0 / (m as f64 * p).sqrt();
        for (o, &v) in out.row_mut(j).iter_mut().zip(a.row(s)) {
            *o = v * scale;
        }
    }
    Ok(out)
}

/// LESS embedding: row j is (1/sqrt m) sum over the sparsifier support of
/// x_i xi_i a_i. Only the <= d support rows are touched, so the cost is
/// O(d^2) per sketch row.
fn apply_less(
    a: &TallMatrix,
    m: usize,
    profile: &LeverageProfile,
    law: SubgaussianLaw,
    bernoulli: bool,
    stream: &mut RngStream,
) -> Matrix {
    let d = a.d();
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Matrix::zeros(m, d);
    if bernoulli {
        let scores = profile.scores();
        for j in 0..m {
            let row = out.row_mut(j);
            for (i, &l) in scores.iter().enumerate() {
                if l <= 0.0 {
                    continue;
                }
                if stream.bernoulli(l.min(1.0)) {
                    let xi = 1.0 / l.sqrt();
                    axpy(row, law.draw(stream) * xi * scale, a.row(i));
                }
            }
        }
        return out;
    }
    let table = CategoricalTable::new(profile.distribution());
    for j in 0..m {
        let draw = draw_sparsifier_with_table(profile, &table, stream);
        debug_assert!(draw.support.len() <= d);
        debug_assert_eq!(draw.total_count() as usize, d);
        let row = out.row_mut(j);
        for (&i, &xi) in draw.support.iter().zip(&draw.weights) {
            axpy(row, law.draw(stream) * xi * scale, a.row(i));
        }
    }
    out
}

/// SRHT: randomized Hadamard preprocess, then uniform sampling of the
/// padded rows with p = 1/n_pad (row scale sqrt(n_pad/m)).
fn apply_srht(a: &TallMatrix, m: usize, stream: &mut RngStream) -> Matrix {
    let pre = crate::matrix::randomized_hadamard_with_stream(a, stream);
    let n_pad = pre.n();
    let scale = (n_pad as f64 / m as f64).sqrt();
    let mut out = Matrix::zeros(m, a.d());
    for j in 0..m {
        let s = stream.index(n_pad);
        for (o, &v) in out.row_mut(j).iter_mut().zip(pre.row(s)) {
            *o = v * scale;
        }
    }
    out
}

fn apply_oblivious_sparse(a: &TallMatrix, m: usize, sparsity: f64, stream: &mut RngStream) -> Matrix {
    let n = a.n();
    let p = sparsity / m as f64;
    let coeff = (m as f64 / sparsity).sqrt() / (m as f64).sqrt();
    let mut out = Matrix::zeros(m, a.d());
    for j in 0..m {
        let row = out.row_mut(j);
        for i in 0..n {
            if stream.bernoulli(p) {
                if stream.sign() > 0.0 {
                    for (o, &v) in row.iter_mut().zip(a.row(i)) {
                        *o += v * coeff;
                    }
                } else {
                    for (o, &v) in row.iter_mut().zip(a.row(i)) {
                        *o -= v * coeff;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec;
    use crate::leverage::exact_leverage_scores;
    use crate::matrix::{gram, gram_raw};

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

    fn identity_tall(n: usize) -> TallMatrix {
        TallMatrix::new(Matrix::identity(n)).unwrap()
    }

    /// Monte Carlo second-moment check: the mean of gram(SA) over N
    /// replicas must match gram(A) entrywise within `sigmas` empirical
    /// standard errors.
    pub(crate) fn assert_gram_unbiased(a: &TallMatrix, spec: &SketchSpec, n_rep: u64, sigmas: f64) {
        let d = a.d();
        let target = gram(a);
        let parts = exec::map_chunks(n_rep, |range| {
            let mut sum = Matrix::zeros(d, d);
            let mut sumsq = Matrix::zeros(d, d);
            for r in range {
                let sa = apply(a, spec, r).unwrap();
                let g = gram_raw(&sa);
                for i in 0..d {
                    for j in 0..d {
                        sum[(i, j)] += g[(i, j)];
                        sumsq[(i, j)] += g[(i, j)] * g[(i, j)];
                    }
                }
            }
            (sum, sumsq)
        });
        let mut sum = Matrix::zeros(d, d);
        let mut sumsq = Matrix::zeros(d, d);
        for (s, s2) in parts {
            sum.add_assign(&s);
            sumsq.add_assign(&s2);
        }
        let nf = n_rep as f64;
        for i in 0..d {
            for j in 0..d {
                let mean = sum[(i, j)] / nf;
                let var = (sumsq[(i, j)] / nf - mean * mean).max(0.0);
                let se = (var / nf).sqrt();
                let diff = (mean - target.inner()[(i, j)]).abs();
                assert!(
                    diff <= sigmas * se + 1e-12,
                    "{} entry ({i},{j}): |{mean} - {}| = {diff} > {sigmas} * {se}",
                    spec.kind.name(),
                    target.inner()[(i, j)]
                );
            }
        }
    }

    #[test]
    fn dense_on_identity_returns_s_itself() {
        // With A = I_n and m = n the output is the realized S; check the
        // Rademacher support directly.
        let n = 6;
        let a = identity_tall(n);
        let spec = SketchSpec::new(SketchKind::Rademacher, n, 11);
        let sa = apply(&a, &spec, 0).unwrap();
        let root_m = (n as f64).sqrt();
        for i in 0..n {
            for j in 0..n {
                let v = sa[(i, j)] * root_m;
                assert!((v.abs() - 1.0).abs() < 1e-12, "entry {v}");
            }
        }
    }

    #[test]
    fn dense_kinds_are_gram_unbiased() {
        let a = random_tall(20, 3, 7);
        for kind in [
            SketchKind::Gaussian,
            SketchKind::Rademacher,
            SketchKind::UniformSubgaussian,
        ] {
            let spec = SketchSpec::new(kind, 10, 13);
            assert_gram_unbiased(&a, &spec, 3000, 4.5);
        }
    }

    #[test]
    fn haar_rows_are_scaled_orthonormal() {
        let n = 16;
        let m = 4;
        let s = haar_matrix(n, m, 5, 0).unwrap();
        // S S^T = (n/m) I within 1e-10
        let sst = s.matmul(&s.transpose());
        let target = Matrix::identity(m).scaled(n as f64 / m as f64);
        assert!(sst.max_abs_diff(&target) < 1e-10);
    }

    #[test]
    fn haar_full_size_preserves_gram() {
        let a = random_tall(8, 3, 9);
        let spec = SketchSpec::new(SketchKind::Haar, 8, 3);
        let sa = apply(&a, &spec, 0).unwrap();
        let g = gram_raw(&sa);
        assert!(g.max_abs_diff(gram(&a).inner()) < 1e-10);
    }

    #[test]
    fn haar_rejects_m_larger_than_n() {
        let a = random_tall(4, 2, 1);
        let spec = SketchSpec::new(SketchKind::Haar, 5, 0);
        assert!(matches!(
            apply(&a, &spec, 0),
            Err(Error::SketchTooLarge { m: 5, n: 4 })
        ));
    }

    #[test]
    fn haar_is_gram_unbiased() {
        let a = random_tall(12, 3, 2);
        let spec = SketchSpec::new(SketchKind::Haar, 4, 17);
        assert_gram_unbiased(&a, &spec, 3000, 4.5);
    }

    #[test]
    fn row_sampling_single_atom_is_deterministic() {
        // n = 1: the only row has p = 1, so every sketch row is a_1/sqrt(m)
        // and gram(SA) = A^T A exactly.
        let a = TallMatrix::new(Matrix::from_rows(&[&[2.0, -1.0]])).unwrap();
        let spec = SketchSpec::new(
            SketchKind::RowSampling { probs: vec![1.0] },
            5,
            3,
        );
        let sa = apply(&a, &spec, 0).unwrap();
        let g = gram_raw(&sa);
        assert!(g.max_abs_diff(gram(&a).inner()) < 1e-12);
    }

    #[test]
    fn row_sampling_diagonal_formula_on_lower_bound_matrix() {
        // Uniform sampling of the coordinate lower-bound matrix gives
        // [A^T S^T S A]_22 = (n/m) b_2 / 2 where b_2 counts draws of rows
        // {3, 4} (0-indexed 2, 3).
        let a = crate::diagnostics::lower_bound_matrix(2).unwrap();
        let n = a.n();
        let m = 16;
        let probs = vec![1.0 / n as f64; n];
        let spec = SketchSpec::new(SketchKind::RowSampling { probs: probs.clone() }, m, 21);
        let sa = apply(&a, &spec, 4).unwrap();
        let g = gram_raw(&sa);
        // reconstruct the drawn indices from the same stream
        let mut stream = RngStream::new(21, 4);
        let table = CategoricalTable::new(&probs);
        let mut b2 = 0u32;
        for _ in 0..m {
            let s = table.sample(&mut stream);
            if s >= 2 {
                b2 += 1;
            }
        }
        let expect = (n as f64 / m as f64) * b2 as f64 / 2.0;
        assert!((g[(1, 1)] - expect).abs() < 1e-12, "{} vs {expect}", g[(1, 1)]);
    }

    #[test]
    fn row_sampling_is_gram_unbiased() {
        let a = random_tall(20, 3, 4);
        let profile = exact_leverage_scores(&a).unwrap();
        let spec = SketchSpec::new(
            SketchKind::RowSampling {
                probs: profile.distribution().to_vec(),
            },
            10,
            19,
        );
        assert_gram_unbiased(&a, &spec, 3000, 4.5);
    }

    #[test]
    fn sparsifier_point_mass() {
        let profile = LeverageProfile::new(vec![1.0], vec![1.0], 1.0, 3).unwrap();
        let mut stream = RngStream::new(1, 0);
        let draw = draw_sparsifier(&profile, &mut stream);
        assert_eq!(draw.support, vec![0]);
        assert_eq!(draw.counts, vec![3]);
        assert!((draw.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sparsifier_counts_conserved_and_weights_unbiased() {
        // E[xi_i^2] = 1 for every i.
        let a = random_tall(8, 3, 6);
        let profile = exact_leverage_scores(&a).unwrap();
        let n = a.n();
        let reps = 100_000u64;
        let mut sum_sq = vec![0.0; n];
        let mut stream = RngStream::new(33, 0);
        for _ in 0..reps {
            let draw = draw_sparsifier(&profile, &mut stream);
            assert_eq!(draw.total_count(), 3);
            assert!(draw.support.len() <= 3);
            for (&i, &w) in draw.support.iter().zip(&draw.weights) {
                sum_sq[i] += w * w;
            }
        }
        for (i, &s) in sum_sq.iter().enumerate() {
            let mean = s / reps as f64;
            // Var(xi^2) = Var(b)/ (d p)^2 with b ~ Binomial(d, p): se below
            let p = profile.distribution()[i];
            let var = (3.0 * p * (1.0 - p)) / (3.0 * p * 3.0 * p);
            let se = (var / reps as f64).sqrt();
            assert!(
                (mean - 1.0).abs() <= 4.0 * se + 1e-9,
                "row {i}: mean xi^2 = {mean}, se {se}"
            );
        }
    }

    #[test]
    fn less_support_is_bounded_by_d() {
        let a = random_tall(64, 5, 12);
        let profile = exact_leverage_scores(&a).unwrap();
        let mut stream = RngStream::new(77, 0);
        for _ in 0..2000 {
            let draw = draw_sparsifier(&profile, &mut stream);
            assert!(draw.support.len() <= 5);
            assert_eq!(draw.total_count(), 5);
        }
    }

    #[test]
    fn less_degenerate_single_row_gram_exact_for_rademacher() {
        // n = 1 point mass: each sketch row is +-a_1/sqrt(m), so gram(SA)
        // equals A^T A exactly under the Rademacher law.
        let a = TallMatrix::new(Matrix::from_rows(&[&[1.5, 0.5]])).unwrap();
        let profile = LeverageProfile::new(vec![1.0], vec![1.0], 1.0, 2).unwrap();
        let spec = SketchSpec::new(
            SketchKind::Less {
                profile,
                law: SubgaussianLaw::Rademacher,
                bernoulli: false,
            },
            7,
            2,
        );
        let sa = apply(&a, &spec, 0).unwrap();
        // xi_1 for the point mass with d=2 draws: b=2, p=1 -> sqrt(2/2)=1
        let g = gram_raw(&sa);
        assert!(g.max_abs_diff(gram(&a).inner()) < 1e-12);
    }

    #[test]
    fn less_identity_uniform_is_gram_unbiased() {
        let a = identity_tall(4);
        let profile = exact_leverage_scores(&a).unwrap();
        let spec = SketchSpec::new(
            SketchKind::Less {
                profile,
                law: SubgaussianLaw::Rademacher,
                bernoulli: false,
            },
            8,
            5,
        );
        assert_gram_unbiased(&a, &spec, 3000, 4.5);
    }

    #[test]
    fn less_bernoulli_variant_is_gram_unbiased() {
        let a = random_tall(16, 3, 8);
        let profile = exact_leverage_scores(&a).unwrap();
        let spec = SketchSpec::new(
            SketchKind::Less {
                profile,
                law: SubgaussianLaw::Rademacher,
                bernoulli: true,
            },
            8,
            15,
        );
        assert_gram_unbiased(&a, &spec, 3000, 4.5);
    }

    #[test]
    fn srht_is_deterministic_and_gram_unbiased() {
        let a = random_tall(20, 3, 10);
        let spec = SketchSpec::new(SketchKind::Srht, 8, 77);
        let s1 = apply(&a, &spec, 3).unwrap();
        let s2 = apply(&a, &spec, 3).unwrap();
        assert_eq!(s1.data(), s2.data());
        assert_gram_unbiased(&a, &spec, 3000, 4.5);
    }

    #[test]
    fn oblivious_sparse_full_density_is_rademacher() {
        // s = m gives Bernoulli(1): every coefficient is exactly +-1/sqrt(m).
        let n = 5;
        let a = identity_tall(n);
        let m = 4;
        let spec = SketchSpec::new(SketchKind::ObliviousSparse { sparsity: m as f64 }, m, 6);
        let sa = apply(&a, &spec, 0).unwrap();
        let root_m = (m as f64).sqrt();
        for i in 0..m {
            for j in 0..n {
                assert!((sa[(i, j)].abs() * root_m - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oblivious_sparse_is_gram_unbiased() {
        let a = random_tall(20, 3, 14);
        let spec = SketchSpec::new(SketchKind::ObliviousSparse { sparsity: 3.0 }, 10, 25);
        assert_gram_unbiased(&a, &spec, 4000, 4.5);
    }

    #[test]
    fn replicas_are_bitwise_reproducible() {
        let a = random_tall(16, 4, 3);
        let profile = exact_leverage_scores(&a).unwrap();
        let spec = SketchSpec::new(
            SketchKind::Less {
                profile,
                law: SubgaussianLaw::Rademacher,
                bernoulli: false,
            },
            8,
            123,
        );
        let x = apply(&a, &spec, 42).unwrap();
        let y = apply(&a, &spec, 42).unwrap();
        assert_eq!(x.data(), y.data());
        let z = apply(&a, &spec, 43).unwrap();
        assert_ne!(x.data(), z.data());
    }

    #[test]
    fn spec_display_tokens() {
        let a = random_tall(8, 2, 1);
        let profile = exact_leverage_scores(&a).unwrap();
        let spec = SketchSpec::new(
            SketchKind::Less {
                profile,
                law: SubgaussianLaw::Rademacher,
                bernoulli: false,
            },
            256,
            42,
        );
        assert_eq!(spec.to_string(), "kind=LESS m=256 seed=42 subgaussian=rademacher");
    }
}
