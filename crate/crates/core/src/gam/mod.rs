//! Gaussian additive models of penalized cubic regression splines with
//! REML smoothness selection.

mod basis;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use basis::CrBasis;
use basis::ConstrainedSmooth;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothTermSpec {
    pub covariate: String,
    pub basis_dim: usize,
}

impl SmoothTermSpec {
    pub const DEFAULT_BASIS_DIM: usize = 4;

    pub fn new(covariate: impl Into<String>) -> Self {
        SmoothTermSpec {
            covariate: covariate.into(),
            basis_dim: Self::DEFAULT_BASIS_DIM,
        }
    }

    pub fn with_basis_dim(mut self, k: usize) -> Self {
        self.basis_dim = k;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GamConfig {
    /// Multiplier on the complexity term of the REML criterion.
    pub gamma: f64,
    pub log_lambda_min: f64,
    pub log_lambda_max: f64,
    pub max_sweeps: usize,
    /// Convergence tolerance on the log smoothing parameters, and on the
    /// relative change of the criterion between sweeps.
    pub tolerance: f64,
}

impl Default for GamConfig {
    fn default() -> Self {
        GamConfig {
            gamma: 1.0,
            log_lambda_min: -12.0,
            log_lambda_max: 20.0,
            max_sweeps: 50,
            tolerance: 1e-4,
        }
    }
}

impl GamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0) {
            return Err(Error::Config(format!("gamma must be >= 1 (got {})", self.gamma)));
        }
        if !(self.log_lambda_min < self.log_lambda_max) {
            return Err(Error::Config("empty log smoothing parameter range".into()));
        }
        if self.max_sweeps == 0 || !(self.tolerance > 0.0) {
            return Err(Error::Config("max_sweeps and tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFit {
    pub covariate: String,
    pub basis_dim: usize,
    pub knots: Vec<f64>,
    pub lambda: f64,
    pub edf: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GamModel {
    pub terms: Vec<TermFit>,
    pub intercept: f64,
    /// Constrained spline coefficients, term by term.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub y: Vec<f64>,
    pub deviance: f64,
    pub null_deviance: f64,
    pub edf_total: f64,
    pub scale: f64,
    pub r2_adj: f64,
    pub deviance_explained: f64,
    pub reml: f64,
}

impl GamModel {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn covariates(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.covariate.as_str()).collect()
    }

    pub fn summary(&self) -> GamSummary {
        GamSummary {
            n: self.n(),
            terms: self
                .terms
                .iter()
                .map(|t| TermSummary {
                    covariate: t.covariate.clone(),
                    basis_dim: t.basis_dim,
                    edf: t.edf,
                    lambda: t.lambda,
                })
                .collect(),
            edf_total: self.edf_total,
            deviance: self.deviance,
            null_deviance: self.null_deviance,
            deviance_explained: self.deviance_explained,
            r2_adj: self.r2_adj,
            scale: self.scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub covariate: String,
    pub basis_dim: usize,
    pub edf: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamSummary {
    pub n: usize,
    pub terms: Vec<TermSummary>,
    pub edf_total: f64,
    pub deviance: f64,
    pub null_deviance: f64,
    pub deviance_explained: f64,
    pub r2_adj: f64,
    pub scale: f64,
}

/// Design matrix and penalties for one set of smooth terms.
struct Design {
    smooths: Vec<ConstrainedSmooth>,
    x: DMatrix<f64>,
    xtx: DMatrix<f64>,
    /// (first column, width) of each smooth; column 0 is the intercept.
    blocks: Vec<(usize, usize)>,
}

impl Design {
    fn new(covariates: &[&[f64]], specs: &[SmoothTermSpec], n: usize) -> Result<Self> {
        if covariates.len() != specs.len() {
            return Err(Error::Structure(format!(
                "{} covariate columns for {} smooth terms",
                covariates.len(),
                specs.len()
            )));
        }
        let mut smooths = Vec::with_capacity(specs.len());
        for (x, spec) in covariates.iter().zip(specs) {
            if x.len() != n {
                return Err(Error::Structure(format!(
                    "covariate {} has {} values for {n} responses",
                    spec.covariate,
                    x.len()
                )));
            }
            let b = CrBasis::from_data(x, spec.basis_dim)
                .map_err(|e| Error::Domain(format!("smooth of {}: {e}", spec.covariate)))?;
            smooths.push(ConstrainedSmooth::new(b, x));
        }
        let p = 1 + smooths.iter().map(ConstrainedSmooth::width).sum::<usize>();
        // Every smooth keeps one unpenalized (linear) direction.
        if n < 2 + smooths.len() {
            return Err(Error::Domain(format!(
                "{n} rows cannot identify an intercept and {} smooths",
                smooths.len()
            )));
        }
        let mut x = DMatrix::zeros(n, p);
        x.column_mut(0).fill(1.0);
        let mut blocks = Vec::with_capacity(smooths.len());
        let mut at = 1;
        for s in &smooths {
            x.view_mut((0, at), (n, s.width())).copy_from(&s.design);
            blocks.push((at, s.width()));
            at += s.width();
        }
        let xtx = x.transpose() * &x;
        Ok(Design { smooths, x, xtx, blocks })
    }

    fn p(&self) -> usize {
        self.x.ncols()
    }

    fn penalized(&self, rho: &[f64]) -> DMatrix<f64> {
        let mut a = self.xtx.clone();
        for ((at, w), (s, r)) in self.blocks.iter().zip(self.smooths.iter().zip(rho)) {
            let lam = r.exp();
            let mut v = a.view_mut((*at, *at), (*w, *w));
            v += &s.penalty * lam;
        }
        a
    }
}

struct Eval {
    chol: Cholesky<f64, Dyn>,
    beta: DVector<f64>,
    reml: f64,
}

/// Penalized least squares for one response.
struct Problem<'a> {
    design: &'a Design,
    xty: DVector<f64>,
    yty: f64,
    gamma: f64,
}

impl Problem<'_> {
    fn n_free(&self) -> f64 {
        (self.design.x.nrows() - 1 - self.design.smooths.len()) as f64
    }

    fn eval(&self, rho: &[f64]) -> Option<Eval> {
        let a = self.design.penalized(rho);
        let chol = a.cholesky()?;
        let beta = chol.solve(&self.xty);
        let rss_p = (self.yty - beta.dot(&self.xty)).max(f64::MIN_POSITIVE);
        let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let pen_rank: f64 = self
            .design
            .blocks
            .iter()
            .zip(rho)
            .map(|((_, w), r)| (*w - 1) as f64 * r)
            .sum();
        let reml = 0.5 * self.n_free() * rss_p.ln() + 0.5 * self.gamma * (logdet - pen_rank);
        reml.is_finite().then_some(Eval { chol, beta, reml })
    }

    fn reml(&self, rho: &[f64]) -> f64 {
        self.eval(rho).map_or(f64::INFINITY, |e| e.reml)
    }

    /// Cyclic golden-section search over each log smoothing parameter.
    fn optimize(&self, cfg: &GamConfig) -> Result<Vec<f64>> {
        let m = self.design.smooths.len();
        let (lo, hi) = (cfg.log_lambda_min, cfg.log_lambda_max);
        let mut rho = vec![0.0_f64.clamp(lo, hi); m];
        if m == 0 {
            return Ok(rho);
        }
        let mut trace = Vec::new();
        let mut score = self.reml(&rho);
        for sweep in 0..cfg.max_sweeps {
            let mut moved: f64 = 0.0;
            for j in 0..m {
                let old = rho[j];
                let f = |v: f64, rho: &mut Vec<f64>| {
                    rho[j] = v;
                    self.reml(rho)
                };
                let (mut a, mut b) = if sweep == 0 {
                    // Coarse scan first to avoid local minima.
                    let steps = (hi - lo).ceil() as usize;
                    let grid: Vec<f64> = (0..=steps).map(|i| (lo + i as f64).min(hi)).collect();
                    let mut best = (f64::INFINITY, old);
                    for &g in &grid {
                        let v = f(g, &mut rho);
                        if v < best.0 {
                            best = (v, g);
                        }
                    }
                    ((best.1 - 1.0).max(lo), (best.1 + 1.0).min(hi))
                } else {
                    ((old - 2.0).max(lo), (old + 2.0).min(hi))
                };
                const INV_PHI: f64 = 0.618_033_988_749_894_8;
                let mut c = b - INV_PHI * (b - a);
                let mut d = a + INV_PHI * (b - a);
                let (mut fc, mut fd) = (f(c, &mut rho), f(d, &mut rho));
                while b - a > cfg.tolerance * 0.1 {
                    if fc <= fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - INV_PHI * (b - a);
                        fc = f(c, &mut rho);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + INV_PHI * (b - a);
                        fd = f(d, &mut rho);
                    }
                }
                let mid = 0.5 * (a + b);
                let mut best = (f(old, &mut rho), old);
                for v in [mid, lo, hi] {
                    let fv = f(v, &mut rho);
                    if fv < best.0 {
                        best = (fv, v);
                    }
                }
                rho[j] = best.1;
                moved = moved.max((rho[j] - old).abs());
            }
            let next = self.reml(&rho);
            trace.push(format!("sweep {sweep}: max step {moved:.2e}, reml {next:.6}"));
            // Along a flat ridge the steps stay large while the score stalls.
            let stalled = (score - next).abs() <= cfg.tolerance * (1.0 + next.abs());
            score = next;
            if sweep > 0 && (moved < cfg.tolerance || stalled) {
                return Ok(rho);
            }
        }
        Err(Error::NonConvergence(format!(
            "REML smoothing selection after {} sweeps: {}",
            cfg.max_sweeps,
            trace.join("; ")
        )))
    }
}

fn check_response(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite response value".into()));
    }
    Ok(())
}

fn finish(design: &Design, specs: &[SmoothTermSpec], y: &[f64], rho: &[f64], ev: Eval) -> GamModel {
    let n = y.len();
    let fitted_v = &design.x * &ev.beta;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let deviance: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let null_deviance: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let infl = ev.chol.solve(&design.xtx);
    let diag = infl.diagonal();
    let edf_total: f64 = diag.sum();
    let terms = design
        .smooths
        .iter()
        .zip(&design.blocks)
        .zip(specs)
        .zip(rho)
        .map(|(((s, &(at, w)), spec), r)| TermFit {
            covariate: spec.covariate.clone(),
            basis_dim: s.basis.k(),
            knots: s.basis.knots().to_vec(),
            lambda: r.exp(),
            edf: diag.rows(at, w).sum(),
        })
        .collect();
    let resid_df = (n as f64 - edf_total).max(f64::EPSILON);
    let scale = deviance / resid_df;
    // A response with no spread has nothing to explain.
    let tiny = 1e-12 * y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let (deviance_explained, r2_adj) = if null_deviance <= tiny {
        (0.0, 0.0)
    } else {
        (
            (1.0 - deviance / null_deviance).clamp(0.0, 1.0),
            1.0 - scale * (n as f64 - 1.0) / null_deviance,
        )
    };
    GamModel {
        terms,
        intercept: ev.beta[0],
        coefficients: ev.beta.iter().skip(1).copied().collect(),
        fitted,
        y: y.to_vec(),
        deviance,
        null_deviance,
        edf_total,
        scale,
        r2_adj,
        deviance_explained,
        reml: ev.reml,
    }
}

fn fit_design(design: &Design, specs: &[SmoothTermSpec], y: &[f64], cfg: &GamConfig) -> Result<GamModel> {
    let yv = DVector::from_column_slice(y);
    let problem = Problem {
        design,
        xty: design.x.transpose() * &yv,
        yty: yv.dot(&yv),
        gamma: cfg.gamma,
    };
    let rho = problem.optimize(cfg)?;
    let ev = problem
        .eval(&rho)
        .ok_or_else(|| Error::NonConvergence("penalized normal equations are singular".into()))?;
    Ok(finish(design, specs, y, &rho, ev))
}

/// Fit `y ~ 1 + sum of smooths`; `covariates[i]` feeds `specs[i]`.
pub fn fit_gam(y: &[f64], covariates: &[&[f64]], specs: &[SmoothTermSpec], cfg: &GamConfig) -> Result<GamModel> {
    cfg.validate()?;
    check_response(y)?;
    let design = Design::new(covariates, specs, y.len())?;
    fit_design(&design, specs, y, cfg)
}

/// Fit at fixed smoothing parameters (one per term, not logged).
pub fn fit_gam_fixed(
    y: &[f64],
    covariates: &[&[f64]],
    specs: &[SmoothTermSpec],
    lambdas: &[f64],
    cfg: &GamConfig,
) -> Result<GamModel> {
    check_response(y)?;
    if lambdas.len() != specs.len() || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Domain("one positive smoothing parameter per term required".into()));
    }
    let design = Design::new(covariates, specs, y.len())?;
    let yv = DVector::from_column_slice(y);
    let problem = Problem {
        design: &design,
        xty: design.x.transpose() * &yv,
        yty: yv.dot(&yv),
        gamma: cfg.gamma,
    };
    let rho: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ev = problem
        .eval(&rho)
        .ok_or_else(|| Error::Domain("penalized normal equations are singular".into()))?;
    debug_assert_eq!(design.p(), ev.beta.len());
    Ok(finish(&design, specs, y, &rho, ev))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub n_perm: usize,
    pub seed: u64,
    pub deviance_explained: f64,
    pub r2_adj: f64,
    pub p_deviance_explained: f64,
    pub p_r2_adj: f64,
}

pub const MIN_PERMUTATIONS: usize = 100;

/// Permute the response, refit, and count permuted statistics at least as
/// large as the observed ones. Permutation `i` draws from stream `i` of a
/// ChaCha8 generator seeded with `seed`, so results do not depend on the
/// thread count.
pub fn permutation_test(
    y: &[f64],
    covariates: &[&[f64]],
    specs: &[SmoothTermSpec],
    cfg: &GamConfig,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::Config(format!("at least {MIN_PERMUTATIONS} permutations required (got {n_perm})")));
    }
    cfg.validate()?;
    check_response(y)?;
    let design = Design::new(covariates, specs, y.len())?;
    let observed = fit_design(&design, specs, y, cfg)?;
    let stats: Vec<(f64, f64)> = (0..n_perm)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut yp = y.to_vec();
            yp.shuffle(&mut rng);
            fit_design(&design, specs, &yp, cfg).map(|m| (m.deviance_explained, m.r2_adj))
        })
        .collect::<Result<_>>()?;
    let p = |hits: usize| (1 + hits) as f64 / (1 + n_perm) as f64;
    Ok(PermutationResult {
        n_perm,
        seed,
        deviance_explained: observed.deviance_explained,
        r2_adj: observed.r2_adj,
        p_deviance_explained: p(stats.iter().filter(|s| s.0 >= observed.deviance_explained).count()),
        p_r2_adj: p(stats.iter().filter(|s| s.1 >= observed.r2_adj).count()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub chi2: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Likelihood-ratio comparison of nested fits on the same response.
pub fn compare_models(null: &GamModel, full: &GamModel) -> Result<ModelComparison> {
    if null.y != full.y {
        return Err(Error::Domain("models were fitted to different responses".into()));
    }
    let full_cov = full.covariates();
    if let Some(c) = null.covariates().into_iter().find(|c| !full_cov.contains(c)) {
        return Err(Error::Domain(format!("models are not nested: {c} missing from the full model")));
    }
    let chi2 = ((null.deviance - full.deviance) / full.scale).max(0.0);
    let df = full.edf_total - null.edf_total;
    let p_value = if chi2 == 0.0 {
        1.0
    } else if df <= 0.0 {
        return Err(Error::Domain(format!(
            "full model has no more degrees of freedom than the null (df = {df:.4})"
        )));
    } else {
        statrs::function::gamma::gamma_ur(df / 2.0, chi2 / 2.0)
    };
    Ok(ModelComparison { chi2, df, p_value })
}
