//! Bayesian ridge regression with hyperparameters estimated by iterative
//! evidence maximization.
//!
//! The model places a Gaussian prior of precision `lambda` on the weights and
//! assumes Gaussian noise of precision `alpha`. Both precisions carry weak
//! Gamma hyperpriors and are re-estimated each iteration from the posterior:
//!
//! ```text
//! Sigma  = (lambda*I + alpha*X'X)^-1
//! mu     = alpha * Sigma * X'y
//! gamma  = sum_i alpha*s_i / (lambda + alpha*s_i)     (s_i: eigenvalues of X'X)
//! lambda = (gamma + 2*l1) / (mu'mu + 2*l2)
//! alpha  = (n - gamma + 2*a1) / (|y - X*mu|^2 + 2*a2)
//! ```
//!
//! `X'X` is eigendecomposed once per fit and the factors are reused across
//! iterations, so each hyperparameter round costs O(D^2).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Fit configuration. The defaults freeze the conventional evidence-
/// maximization parameterization: 300 iterations, tolerance 1e-3 on the L1
/// change of the weight mean, Gamma hyperpriors of 1e-6, `alpha` started at
/// `1/Var(y)`, `lambda` started at 1.
#[derive(Debug, Clone)]
pub struct BayesianRidgeConfig {
    pub max_iter: usize,
    /// Convergence threshold on the L1 change of the posterior weight mean.
    pub tol: f64,
    /// Gamma hyperprior shape for the noise precision.
    pub alpha_shape: f64,
    /// Gamma hyperprior rate for the noise precision.
    pub alpha_rate: f64,
    /// Gamma hyperprior shape for the weight precision.
    pub lambda_shape: f64,
    /// Gamma hyperprior rate for the weight precision.
    pub lambda_rate: f64,
    /// Initial noise precision; `None` means `1/Var(y)` (or 1 for constant y).
    pub alpha_init: Option<f64>,
    pub lambda_init: f64,
    /// Center and scale columns to zero mean and unit sample stddev.
    pub standardize_inputs: bool,
    /// Center targets and learn an unpenalized intercept.
    pub fit_intercept: bool,
    /// When false, `alpha` and `lambda` stay frozen at their initial values.
    pub update_hyperparams: bool,
}

impl Default for BayesianRidgeConfig {
    fn default() -> Self {
        BayesianRidgeConfig {
            max_iter: 300,
            tol: 1e-3,
            alpha_shape: 1e-6,
            alpha_rate: 1e-6,
            lambda_shape: 1e-6,
            lambda_rate: 1e-6,
            alpha_init: None,
            lambda_init: 1.0,
            standardize_inputs: true,
            fit_intercept: true,
            update_hyperparams: true,
        }
    }
}

impl BayesianRidgeConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        let positives = [
            ("tol", self.tol),
            ("alpha_shape", self.alpha_shape),
            ("alpha_rate", self.alpha_rate),
            ("lambda_shape", self.lambda_shape),
            ("lambda_rate", self.lambda_rate),
            ("lambda_init", self.lambda_init),
            ("alpha_init", self.alpha_init.unwrap_or(1.0)),
        ];
        for (name, v) in positives {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Mean and standard deviation of the posterior predictive at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub stddev: f64,
}

/// Fitted model: posterior weight mean and covariance, the estimated
/// precisions, and the standardization statistics of the training matrix.
#[derive(Debug, Clone)]
pub struct BayesianRidge {
    weights: DVector<f64>,
    covariance: DMatrix<f64>,
    alpha: f64,
    lambda: f64,
    intercept: f64,
    x_means: DVector<f64>,
    x_scales: DVector<f64>,
    gamma: f64,
    log_evidence: f64,
    n_iter: usize,
    converged_by_tol: bool,
}

struct EigenBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl EigenBasis {
    /// Eigendecompose the Gram matrix `X'X`. Eigenvalues of the PSD matrix
    /// are clamped at zero to absorb rounding.
    fn from_gram(gram: DMatrix<f64>) -> EigenBasis {
        let eigen = nalgebra::SymmetricEigen::new(gram);
        EigenBasis {
            eigenvalues: eigen.eigenvalues.map(|s| s.max(0.0)),
            eigenvectors: eigen.eigenvectors,
        }
    }

    /// Posterior mean `alpha * (lambda*I + alpha*X'X)^-1 X'y` from the
    /// precomputed projection `V' X'y`.
    fn posterior_mean(&self, projected: &DVector<f64>, alpha: f64, lambda: f64) -> DVector<f64> {
        let scaled = DVector::from_iterator(
            projected.len(),
            projected
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(p, s)| alpha * p / (lambda + alpha * s)),
        );
        &self.eigenvectors * scaled
    }

    fn posterior_covariance(&self, alpha: f64, lambda: f64) -> DMatrix<f64> {
        let d = self.eigenvalues.len();
        let mut cov = DMatrix::zeros(d, d);
        for (i, s) in self.eigenvalues.iter().enumerate() {
            let inv = 1.0 / (lambda + alpha * s);
            let v = self.eigenvectors.column(i);
            cov += inv * v * v.transpose();
        }
        // exact symmetry despite accumulated rounding
        let mut sym = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                sym[(i, j)] = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            }
        }
        sym
    }

    fn effective_dof(&self, alpha: f64, lambda: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|s| alpha * s / (lambda + alpha * s))
            .sum()
    }

    fn log_det_precision(&self, alpha: f64, lambda: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|s| (lambda + alpha * s).ln())
            .sum()
    }
}

fn check_matrix(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::invalid(format!(
            "{} rows of features vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::invalid("fitting requires at least 2 rows"));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in training data"));
    }
    Ok(())
}

fn population_variance(y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let mean = y.sum() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

impl BayesianRidge {
    /// Fit by iterative evidence maximization. Stops when the L1 change of
    /// the weight mean drops below `config.tol` or after `config.max_iter`
    /// hyperparameter updates.
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, config: &BayesianRidgeConfig) -> Result<Self> {
        config.validate()?;
        check_matrix(x, y)?;
        let n = x.nrows();
        let d = x.ncols();

        let (x_means, x_scales) = if config.standardize_inputs {
            standardization_stats(x)
        } else {
            (DVector::zeros(d), DVector::from_element(d, 1.0))
        };
        let xs = apply_standardization(x, &x_means, &x_scales);

        let (y_centered, intercept) = if config.fit_intercept {
            let mean = y.sum() / n as f64;
            (y.map(|v| v - mean), mean)
        } else {
            (y.clone(), 0.0)
        };

        let mut alpha = config.alpha_init.unwrap_or_else(|| {
            let var = population_variance(y);
            if var > 0.0 {
                1.0 / var
            } else {
                1.0
            }
        });
        let mut lambda = config.lambda_init;

        let basis = EigenBasis::from_gram(xs.transpose() * &xs);
        let projected = basis.eigenvectors.transpose() * (xs.transpose() * &y_centered);

        let mut weights = basis.posterior_mean(&projected, alpha, lambda);
        let mut n_iter = 0;
        let mut converged_by_tol = !config.update_hyperparams;

        if config.update_hyperparams {
            loop {
                let gamma = basis.effective_dof(alpha, lambda);
                let residual = &y_centered - &xs * &weights;
                let sse = residual.norm_squared();
                lambda = (gamma + 2.0 * config.lambda_shape)
                    / (weights.norm_squared() + 2.0 * config.lambda_rate);
                alpha = (n as f64 - gamma + 2.0 * config.alpha_shape)
                    / (sse + 2.0 * config.alpha_rate);
                n_iter += 1;

                let updated = basis.posterior_mean(&projected, alpha, lambda);
                let change: f64 = updated
                    .iter()
                    .zip(weights.iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                weights = updated;
                if change < config.tol {
                    converged_by_tol = true;
                    break;
                }
                if n_iter >= config.max_iter {
                    break;
                }
            }
        }

        let gamma = basis.effective_dof(alpha, lambda);
        let covariance = basis.posterior_covariance(alpha, lambda);
        let sse = (&y_centered - &xs * &weights).norm_squared();
        let log_evidence = evidence(
            n,
            d,
            alpha,
            lambda,
            sse,
            weights.norm_squared(),
            basis.log_det_precision(alpha, lambda),
        );

        Ok(BayesianRidge {
            weights,
            covariance,
            alpha,
            lambda,
            intercept,
            x_means,
            x_scales,
            gamma,
            log_evidence,
            n_iter,
            converged_by_tol,
        })
    }

    /// Posterior predictive mean and standard deviation:
    /// `mean = mu'x + intercept`, `var = 1/alpha + x'Sigma x` with `x`
    /// standardized the same way as the training matrix.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        let standardized = DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.x_means.iter().zip(self.x_scales.iter()))
                .map(|(v, (m, s))| (v - m) / s),
        );
        let mean = self.weights.dot(&standardized) + self.intercept;
        let variance =
            1.0 / self.alpha + (standardized.transpose() * &self.covariance * &standardized)[0];
        Ok(Prediction {
            mean,
            stddev: variance.max(0.0).sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    pub fn n_iter(&self) -> usize {
        self.n_iter
    }

    pub fn converged_by_tol(&self) -> bool {
        self.converged_by_tol
    }

    pub fn x_means(&self) -> &DVector<f64> {
        &self.x_means
    }

    pub fn x_scales(&self) -> &DVector<f64> {
        &self.x_scales
    }

    /// Serialize as a plain-text key-value file. Floats carry 17 significant
    /// digits, so reloading reproduces predictions bitwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let d = self.dim();
        let mut text = String::new();
        let _ = writeln!(text, "memrank-brr v1");
        let _ = writeln!(text, "dim {d}");
        let _ = writeln!(text, "alpha {}", fmt17(self.alpha));
        let _ = writeln!(text, "lambda {}", fmt17(self.lambda));
        let _ = writeln!(text, "intercept {}", fmt17(self.intercept));
        let _ = writeln!(text, "gamma {}", fmt17(self.gamma));
        let _ = writeln!(text, "log_evidence {}", fmt17(self.log_evidence));
        let row = |values: &mut dyn Iterator<Item = f64>| -> String {
            values.map(fmt17).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(text, "w_mean {}", row(&mut self.weights.iter().copied()));
        let _ = writeln!(
            text,
            "w_cov {}",
            row(&mut (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| self.covariance[(i, j)]))
        );
        let _ = writeln!(text, "x_means {}", row(&mut self.x_means.iter().copied()));
        let _ = writeln!(text, "x_scales {}", row(&mut self.x_scales.iter().copied()));
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        if lines.next() != Some("memrank-brr v1") {
            return Err(Error::format(path, "not a memrank-brr v1 model file"));
        }
        let mut dim = None;
        let mut scalars: std::collections::HashMap<&str, f64> = Default::default();
        let mut vectors: std::collections::HashMap<&str, Vec<f64>> = Default::default();
        for (idx, line) in lines.enumerate() {
            let line_no = (idx + 2) as u64;
            let mut parts = line.split_whitespace();
            let key = match parts.next() {
                Some(k) => k,
                None => continue,
            };
            match key {
                "dim" => {
                    dim = Some(
                        parts
                            .next()
                            .and_then(|v| v.parse::<usize>().ok())
                            .ok_or_else(|| Error::parse(path, line_no, "bad dim"))?,
                    );
                }
                "alpha" | "lambda" | "intercept" | "gamma" | "log_evidence" => {
                    let v: f64 = parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::parse(path, line_no, format!("bad {key}")))?;
                    scalars.insert(key, v);
                }
                "w_mean" | "w_cov" | "x_means" | "x_scales" => {
                    let values: Vec<f64> = parts
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::parse(path, line_no, format!("bad {key}")))?;
                    vectors.insert(key, values);
                }
                other => {
                    return Err(Error::parse(path, line_no, format!("unknown key \"{other}\"")));
                }
            }
        }
        let d = dim.ok_or_else(|| Error::format(path, "missing dim"))?;
        let scalar = |key: &str| -> Result<f64> {
            scalars
                .get(key)
                .copied()
                .ok_or_else(|| Error::format(path, format!("missing {key}")))
        };
        let vector = |key: &str, len: usize| -> Result<Vec<f64>> {
            let v = vectors
                .get(key)
                .cloned()
                .ok_or_else(|| Error::format(path, format!("missing {key}")))?;
            if v.len() != len {
                return Err(Error::format(
                    path,
                    format!("{key} holds {} values, expected {len}", v.len()),
                ));
            }
            Ok(v)
        };
        let alpha = scalar("alpha")?;
        let lambda = scalar("lambda")?;
        if !(alpha > 0.0 && lambda > 0.0) {
            return Err(Error::format(path, "precisions must be positive"));
        }
        Ok(BayesianRidge {
            weights: DVector::from_vec(vector("w_mean", d)?),
            covariance: DMatrix::from_row_slice(d, d, &vector("w_cov", d * d)?),
            alpha,
            lambda,
            intercept: scalar("intercept")?,
            x_means: DVector::from_vec(vector("x_means", d)?),
            x_scales: DVector::from_vec(vector("x_scales", d)?),
            gamma: scalar("gamma")?,
            log_evidence: scalar("log_evidence")?,
            n_iter: 0,
            converged_by_tol: false,
        })
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn standardization_stats(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let mut means = DVector::zeros(d);
    let mut scales = DVector::from_element(d, 1.0);
    for j in 0..d {
        let col = x.column(j);
        // exact-constant columns keep scale 1 and center to exact zeros
        let first = col[0];
        if col.iter().all(|v| *v == first) {
            means[j] = first;
            continue;
        }
        let mean = col.sum() / n;
        means[j] = mean;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        if var > 0.0 {
            scales[j] = var.sqrt();
        }
    }
    (means, scales)
}

fn apply_standardization(
    x: &DMatrix<f64>,
    means: &DVector<f64>,
    scales: &DVector<f64>,
) -> DMatrix<f64> {
    let mut xs = x.clone();
    for j in 0..x.ncols() {
        let mut col = xs.column_mut(j);
        for v in col.iter_mut() {
            *v = (*v - means[j]) / scales[j];
        }
    }
    xs
}

fn evidence(
    n: usize,
    d: usize,
    alpha: f64,
    lambda: f64,
    sse: f64,
    weight_norm_sq: f64,
    log_det_precision: f64,
) -> f64 {
    0.5 * (d as f64 * lambda.ln() + n as f64 * alpha.ln()
        - alpha * sse
        - lambda * weight_norm_sq
        - log_det_precision
        - n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Log marginal likelihood of centered targets at fixed precisions, with the
/// posterior mean computed internally.
pub fn log_marginal_likelihood(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
    lambda: f64,
) -> Result<f64> {
    check_matrix(x, y)?;
    if !(alpha > 0.0 && lambda > 0.0) {
        return Err(Error::invalid("precisions must be positive"));
    }
    let n = x.nrows();
    let d = x.ncols();
    let mean = y.sum() / n as f64;
    let y_centered = y.map(|v| v - mean);

    if d == 0 {
        // intercept-only model: Gaussian log-likelihood of centered targets
        return Ok(evidence(n, 0, alpha, lambda, y_centered.norm_squared(), 0.0, 0.0));
    }

    let basis = EigenBasis::from_gram(x.transpose() * x);
    let projected = basis.eigenvectors.transpose() * (x.transpose() * &y_centered);
    let mu = basis.posterior_mean(&projected, alpha, lambda);
    let sse = (&y_centered - x * &mu).norm_squared();
    Ok(evidence(
        n,
        d,
        alpha,
        lambda,
        sse,
        mu.norm_squared(),
        basis.log_det_precision(alpha, lambda),
    ))
}

/// Closed-form ridge solution `(X'X + kI)^-1 X'y`, solved by LU
/// factorization. Kept deliberately independent of the eigendecomposition
/// path used by [`BayesianRidge::fit`] so the two can cross-check each other.
pub fn ridge_closed_form(x: &DMatrix<f64>, y: &DVector<f64>, k: f64) -> Result<DVector<f64>> {
    check_matrix(x, y)?;
    if !k.is_finite() || k < 0.0 {
        return Err(Error::invalid(format!("ridge penalty must be nonnegative, got {k}")));
    }
    let d = x.ncols();
    let system = x.transpose() * x + DMatrix::identity(d, d) * k;
    let rhs = x.transpose() * y;
    system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::invalid("singular system: X'X + kI is not invertible"))
}
