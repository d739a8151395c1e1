//! Desk-scale Distributed Newton Sketch for ridge-regularized GLMs.
//!
//! Each of q simulated workers sketches the Hessian square root of the data
//! term, forms the debiased local Hessian gamma * gram(S H^{1/2}) + lambda I,
//! and the coordinator averages the q inverse-Hessian steps. Workers within
//! one iteration use independent replica streams; iterations are sequential.

use crate::error::{Error, Result};
use crate::exec;
use crate::leverage::{exact_leverage_scores, LeverageProfile};
use crate::matrix::{axpy, dot, gram_raw, sym_eigenvalues, Cholesky, Matrix, TallMatrix};
use crate::sketch::{apply, SketchKind, SketchSpec, SubgaussianLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlmLoss {
    Squared,
    Logistic,
}

#[derive(Clone, Debug)]
pub struct GlmProblem {
    pub features: TallMatrix,
    pub labels: Vec<f64>,
    pub loss: GlmLoss,
    pub lambda: f64,
}

impl GlmProblem {
    pub fn new(features: TallMatrix, labels: Vec<f64>, loss: GlmLoss, lambda: f64) -> Result<Self> {
        if labels.len() != features.n() {
            return Err(Error::DimensionMismatch {
                expected: (features.n(), 1),
                got: (labels.len(), 1),
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda {lambda} must be > 0")));
        }
        if loss == GlmLoss::Logistic && labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter(
                "logistic labels must be +-1".into(),
            ));
        }
        Ok(GlmProblem {
            features,
            labels,
            loss,
            lambda,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn d(&self) -> usize {
        self.features.d()
    }

    fn loss_prime(&self, u: f64, y: f64) -> f64 {
        match self.loss {
            GlmLoss::Squared => u - y,
            // l(u) = log(1 + exp(-y u)); l'(u) = -y sigma(-y u)
            GlmLoss::Logistic => -y / (1.0 + (y * u).exp()),
        }
    }

    fn loss_second(&self, u: f64, y: f64) -> f64 {
        match self.loss {
            GlmLoss::Squared => 1.0,
            GlmLoss::Logistic => {
                let s = 1.0 / (1.0 + (y * u).exp());
                s * (1.0 - s)
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.n() as f64;
        let mut total = 0.0;
        for i in 0..self.n() {
            let u = dot(self.features.row(i), x);
            let y = self.labels[i];
            total += match self.loss {
                GlmLoss::Squared => 0.5 * (u - y) * (u - y),
                GlmLoss::Logistic => {
                    // stable log(1 + exp(-yu))
                    let t = -y * u;
                    if t > 30.0 {
                        t
                    } else {
                        t.exp().ln_1p()
                    }
                }
            };
        }
        total / n + 0.5 * self.lambda * dot(x, x)
    }

    /// (1/n) sum l'_i(x^T phi_i) phi_i + lambda x.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d();
        let mut g = vec![0.0; d];
        for i in 0..self.n() {
            let row = self.features.row(i);
            let u = dot(row, x);
            axpy(&mut g, self.loss_prime(u, self.labels[i]), row);
        }
        let inv_n = 1.0 / self.n() as f64;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj = *gj * inv_n + self.lambda * xj;
        }
        g
    }

    /// Row i is sqrt(l''_i(x^T phi_i)/n) phi_i, so that
    /// gram(hessian_sqrt) + lambda I equals the Hessian of f at x.
    pub fn hessian_sqrt(&self, x: &[f64]) -> TallMatrix {
        let n = self.n();
        let d = self.d();
        let inv_n = 1.0 / n as f64;
        let mut m = Matrix::zeros(n, d);
        for i in 0..n {
            let row = self.features.row(i);
            let w = (self.loss_second(dot(row, x), self.labels[i]) * inv_n).sqrt();
            for (o, &v) in m.row_mut(i).iter_mut().zip(row) {
                *o = w * v;
            }
        }
        TallMatrix::new(m).expect("same shape as features")
    }

    /// Dense Hessian gram(hessian_sqrt) + lambda I.
    pub fn hessian(&self, x: &[f64]) -> Matrix {
        let hs = self.hessian_sqrt(x);
        let mut h = gram_raw(hs.inner());
        for i in 0..self.d() {
            h[(i, i)] += self.lambda;
        }
        h
    }
}

/// Sketch family instantiated fresh at every iteration (data-aware kinds
/// recompute the leverage profile of the current Hessian square root).
#[derive(Clone, Debug)]
pub enum SketchFamily {
    Gaussian,
    Rademacher,
    UniformSubgaussian,
    Haar,
    /// Row sampling with exact leverage scores of the current square root.
    LeverageSampling,
    Less {
        law: SubgaussianLaw,
        bernoulli: bool,
    },
    Srht,
    ObliviousSparse { sparsity: f64 },
}

impl SketchFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SketchFamily::Gaussian => "Gaussian",
            SketchFamily::Rademacher => "Rademacher",
            SketchFamily::UniformSubgaussian => "UniformSubgaussian",
            SketchFamily::Haar => "Haar",
            SketchFamily::LeverageSampling => "RowSampling",
            SketchFamily::Less { .. } => "LESS",
            SketchFamily::Srht => "SRHT",
            SketchFamily::ObliviousSparse { .. } => "ObliviousSparse",
        }
    }

    fn instantiate(&self, hs: &TallMatrix, m: usize, seed: u64) -> Result<SketchSpec> {
        let kind = match self {
            SketchFamily::Gaussian => SketchKind::Gaussian,
            SketchFamily::Rademacher => SketchKind::Rademacher,
            SketchFamily::UniformSubgaussian => SketchKind::UniformSubgaussian,
            SketchFamily::Haar => SketchKind::Haar,
            SketchFamily::LeverageSampling => {
                let profile = exact_leverage_scores(hs)?;
                SketchKind::RowSampling {
                    probs: profile.distribution().to_vec(),
                }
            }
            SketchFamily::Less { law, bernoulli } => {
                let profile: LeverageProfile = exact_leverage_scores(hs)?;
                SketchKind::Less {
                    profile,
                    law: *law,
                    bernoulli: *bernoulli,
                }
            }
            SketchFamily::Srht => SketchKind::Srht,
            SketchFamily::ObliviousSparse { sparsity } => SketchKind::ObliviousSparse {
                sparsity: *sparsity,
            },
        };
        Ok(SketchSpec::new(kind, m, seed))
    }
}

/// How each worker approximates the Hessian.
#[derive(Clone, Debug)]
pub enum HessianSketch {
    /// No sketching: the exact Newton step (q is irrelevant).
    Exact,
    Sketched { family: SketchFamily, m: usize },
}

#[derive(Clone, Debug)]
pub struct NewtonConfig {
    pub sketch: HessianSketch,
    pub q: u64,
    pub master_seed: u64,
    /// None: gamma = m/(m-d) on the data term (lambda I stays exact).
    pub gamma_override: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

impl NewtonConfig {
    pub fn exact() -> Self {
        NewtonConfig {
            sketch: HessianSketch::Exact,
            q: 1,
            master_seed: 0,
            gamma_override: None,
            max_iters: 50,
            tol: 1e-10,
        }
    }

    pub fn sketched(family: SketchFamily, m: usize, q: u64, master_seed: u64) -> Self {
        NewtonConfig {
            sketch: HessianSketch::Sketched { family, m },
            q,
            master_seed,
            gamma_override: None,
            max_iters: 50,
            tol: 1e-10,
        }
    }
}

/// One averaged Newton step: x - (1/q) sum_i H_hat_i^{-1} grad f(x).
/// lambda > 0 keeps every local Hessian positive definite, so no replica
/// can fail. `iteration` separates the replica streams across iterations.
pub fn distributed_newton_step(
    p: &GlmProblem,
    x: &[f64],
    cfg: &NewtonConfig,
    iteration: u64,
) -> Result<Vec<f64>> {
    let d = p.d();
    let g = p.gradient(x);
    let step = match &cfg.sketch {
        HessianSketch::Exact => {
            let h = p.hessian(x);
            Cholesky::new(&h)?.solve(&g)
        }
        HessianSketch::Sketched { family, m } => {
            if *m <= d {
                return Err(Error::SketchSmallerThanD { m: *m, d });
            }
            let gamma = cfg
                .gamma_override
                .unwrap_or(*m as f64 / (*m - d) as f64);
            let hs = p.hessian_sqrt(x);
            let spec = family.instantiate(&hs, *m, cfg.master_seed)?;
            let base = iteration * cfg.q;
            let parts = exec::map_chunks(cfg.q, |range| {
                let mut sum = vec![0.0; d];
                for r in range {
                    let sa = apply(&hs, &spec, base + r).expect("validated spec");
                    let mut h_hat = gram_raw(&sa);
                    h_hat.scale_in_place(gamma);
                    for i in 0..d {
                        h_hat[(i, i)] += p.lambda;
                    }
                    let local = Cholesky::new(&h_hat)
                        .expect("lambda > 0 keeps the local Hessian positive definite")
                        .solve(&g);
                    for (s, l) in sum.iter_mut().zip(&local) {
                        *s += l;
                    }
                }
                sum
            });
            let mut step = vec![0.0; d];
            for part in parts {
                for (s, v) in step.iter_mut().zip(&part) {
                    *s += v;
                }
            }
            let inv_q = 1.0 / cfg.q as f64;
            for s in &mut step {
                *s *= inv_q;
            }
            step
        }
    };
    Ok(x.iter().zip(&step).map(|(xi, si)| xi - si).collect())
}

/// Exact damped Newton (Armijo backtracking) down to machine precision;
/// the baseline optimum for convergence reports.
pub fn exact_optimum(p: &GlmProblem) -> Result<Vec<f64>> {
    let d = p.d();
    let mut x = vec![0.0; d];
    for _ in 0..200 {
        let g = p.gradient(&x);
        let gnorm = dot(&g, &g).sqrt();
        let h = p.hessian(&x);
        let step = Cholesky::new(&h)?.solve(&g);
        let decrement = dot(&g, &step);
        if decrement.abs() < 1e-30 || gnorm < 1e-15 {
            return Ok(x);
        }
        let f0 = p.value(&x);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - t * si).collect();
            if p.value(&trial) <= f0 - 0.25 * t * decrement {
                x = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Step no longer reduces f: we are at numerical optimality.
            return Ok(x);
        }
    }
    let g = p.gradient(&x);
    if dot(&g, &g).sqrt() < 1e-10 {
        Ok(x)
    } else {
        Err(Error::BaselineDiverged)
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// ||x_t - x*|| for t = 0, 1, ... (truncated at the precision floor).
    pub distances: Vec<f64>,
    /// rho_t = dist_{t+1} / dist_t.
    pub contractions: Vec<f64>,
    /// First t with dist_t <= tol * dist_0, if reached.
    pub iterations_to_tol: Option<usize>,
    /// Condition number of the Hessian at the optimum.
    pub kappa: f64,
    /// Smallest Hessian eigenvalue at the optimum.
    pub lambda_min: f64,
    pub x_star: Vec<f64>,
    pub x_final: Vec<f64>,
}

/// Run the distributed Newton iteration from `x0` until
/// ||x_t - x*|| <= tol * ||x_0 - x*|| or `max_iters`.
pub fn solve(p: &GlmProblem, cfg: &NewtonConfig, x0: &[f64]) -> Result<ConvergenceReport> {
    if cfg.tol < 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "tol {} below the 1e-12 floor",
            cfg.tol
        )));
    }
    let x_star = exact_optimum(p)?;
    let h_star = p.hessian(&x_star);
    let ev = sym_eigenvalues(&h_star);
    let lambda_min = ev[0];
    let kappa = ev[ev.len() - 1] / lambda_min;

    let dist = |x: &[f64]| {
        x.iter()
            .zip(&x_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    let mut x = x0.to_vec();
    let d0 = dist(&x);
    let floor = 1e-14 * d0;
    let mut distances = vec![d0];
    let mut iterations_to_tol = None;
    for t in 0..cfg.max_iters {
        x = distributed_newton_step(p, &x, cfg, t as u64)?;
        let dt = dist(&x);
        distances.push(dt);
        if iterations_to_tol.is_none() && dt <= cfg.tol * d0 {
            iterations_to_tol = Some(t + 1);
        }
        if dt <= floor || iterations_to_tol.is_some() {
            break;
        }
    }
    let contractions = distances
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    Ok(ConvergenceReport {
        distances,
        contractions,
        iterations_to_tol,
        kappa,
        lambda_min,
        x_star,
        x_final: x,
    })
}
