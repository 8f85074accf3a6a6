use log::warn;
use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, cholesky_solve};
use super::{check_training, ModelError, ScoreModel};
use mbid_features::LabeledDataset;
use mbid_core::scalar::Scalar;

/// Largest ridge tried when the Newton system is singular.
const MAX_RIDGE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Penalty `lambda/2 * |w|^2` on the weights; the intercept is free.
    pub ridge_lambda: f64,
    /// Stop once every gradient component is below this in magnitude. Raised
    /// to the scalar's attainable precision for `f32`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            ridge_lambda: 1e-6,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LogisticModel<T> {
    pub intercept: T,
    pub weights: Vec<T>,
    /// Ridge actually used, after any escalation.
    pub ridge_lambda: T,
    pub converged: bool,
    pub iterations: usize,
    /// Largest gradient component at the returned coefficients.
    pub max_abs_gradient: T,
}

#[inline]
fn sigmoid<T: Scalar>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + exp(eta))` without overflow.
#[inline]
fn softplus<T: Scalar>(eta: T) -> T {
    if eta > T::zero() {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn linear<T: Scalar>(intercept: T, weights: &[T], x: &[T]) -> T {
    let mut eta = intercept;
    for (w, v) in weights.iter().zip(x) {
        eta += *w * *v;
    }
    eta
}

/// `sum_i [y_i eta_i - log(1 + exp(eta_i))] - lambda/2 |w|^2`, with `y = 1`
/// for the positive class.
pub fn penalized_log_likelihood<T: Scalar>(
    data: &LabeledDataset<T>,
    intercept: T,
    weights: &[T],
    lambda: T,
) -> T {
    let mut ll = T::zero();
    for (i, &y) in data.labels().iter().enumerate() {
        let eta = linear(intercept, weights, data.row(i));
        if y {
            ll += eta;
        }
        ll -= softplus(eta);
    }
    let penalty: T = weights.iter().map(|w| *w * *w).sum();
    ll - lambda * penalty / T::lit(2.0)
}

/// Gradient of [`penalized_log_likelihood`], intercept component first.
pub fn penalized_gradient<T: Scalar>(
    data: &LabeledDataset<T>,
    intercept: T,
    weights: &[T],
    lambda: T,
) -> Vec<T> {
    let p = weights.len();
    let mut g = vec![T::zero(); p + 1];
    for (i, &y) in data.labels().iter().enumerate() {
        let x = data.row(i);
        let r = if y { T::one() } else { T::zero() } - sigmoid(linear(intercept, weights, x));
        g[0] += r;
        for j in 0..p {
            g[j + 1] += r * x[j];
        }
    }
    for j in 0..p {
        g[j + 1] -= lambda * weights[j];
    }
    g
}

/// Negative Hessian of the penalized log-likelihood, `(p+1) x (p+1)`.
fn information<T: Scalar>(data: &LabeledDataset<T>, intercept: T, weights: &[T], lambda: T) -> Vec<T> {
    let p = weights.len();
    let d = p + 1;
    let mut h = vec![T::zero(); d * d];
    let mut xt = vec![T::zero(); d];
    xt[0] = T::one();
    for i in 0..data.n_rows() {
        let x = data.row(i);
        xt[1..].copy_from_slice(x);
        let mu = sigmoid(linear(intercept, weights, x));
        let w = mu * (T::one() - mu);
        for a in 0..d {
            let wa = w * xt[a];
            for b in 0..=a {
                h[a * d + b] += wa * xt[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            h[b * d + a] = h[a * d + b];
        }
    }
    for j in 1..d {
        h[j * d + j] += lambda;
    }
    h
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Ridge-stabilized Newton-Raphson (IRLS) with step halving.
pub fn fit_logistic<T: Scalar>(
    data: &LabeledDataset<T>,
    config: &LogisticConfig,
) -> Result<LogisticModel<T>, ModelError> {
    check_training(data)?;
    let p = data.n_cols();
    let tol = T::lit(config.tol).max(T::default_gradient_tol());
    let mut lambda = T::lit(config.ridge_lambda);

    let base = T::from_count(data.n_positive()) / T::from_count(data.n_rows());
    let mut intercept = (base / (T::one() - base)).ln();
    let mut weights = vec![T::zero(); p];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        let g = penalized_gradient(data, intercept, &weights, lambda);
        if max_abs(&g) < tol {
            converged = true;
            break;
        }
        let mut h = information(data, intercept, &weights, lambda);
        if cholesky(&mut h, p + 1).is_none() {
            let next = if lambda > T::zero() {
                lambda * T::lit(10.0)
            } else {
                T::lit(1e-6)
            };
            if next > T::lit(MAX_RIDGE) * T::lit(1.0 + 1e-9) {
                return Err(ModelError::SingularSystem {
                    lambda: lambda.to_f64().unwrap_or(f64::NAN),
                });
            }
            warn!("singular Newton system; raising ridge to {next}");
            lambda = next;
            continue;
        }
        let step = cholesky_solve(&h, p + 1, &g);
        iterations += 1;

        let ll0 = penalized_log_likelihood(data, intercept, &weights, lambda);
        let slack = T::epsilon() * T::lit(64.0) * (T::one() + ll0.abs());
        let mut t = T::one();
        loop {
            let cand_b = intercept + t * step[0];
            let cand_w: Vec<T> = weights.iter().zip(&step[1..]).map(|(w, s)| *w + t * *s).collect();
            let ll = penalized_log_likelihood(data, cand_b, &cand_w, lambda);
            if ll >= ll0 - slack || t < T::lit(1e-10) {
                intercept = cand_b;
                weights = cand_w;
                break;
            }
            t = t / T::lit(2.0);
        }
    }

    let g = penalized_gradient(data, intercept, &weights, lambda);
    let max_abs_gradient = max_abs(&g);
    converged = converged || max_abs_gradient < tol;
    if !converged {
        warn!(
            "logistic fit did not converge in {} iterations (max |gradient| {})",
            config.max_iter, max_abs_gradient
        );
    }
    Ok(LogisticModel {
        intercept,
        weights,
        ridge_lambda: lambda,
        converged,
        iterations,
        max_abs_gradient,
    })
}

impl<T: Scalar> LogisticModel<T> {
    /// Model with the given coefficients and no fit history.
    pub fn from_coefficients(intercept: T, weights: Vec<T>) -> Self {
        Self {
            intercept,
            weights,
            ridge_lambda: T::zero(),
            converged: true,
            iterations: 0,
            max_abs_gradient: T::zero(),
        }
    }

    pub fn linear_predictor(&self, x: &[T]) -> T {
        linear(self.intercept, &self.weights, x)
    }
}

impl<T: Scalar> ScoreModel<T> for LogisticModel<T> {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// `logistic(b0 + w.x)` clamped to `[1e-12, 1 - 1e-12]`.
    fn score_row(&self, x: &[T]) -> T {
        let lo = T::lit(1e-12);
        let hi = T::one() - lo.max(T::epsilon());
        sigmoid(self.linear_predictor(x)).max(lo).min(hi)
    }
}

pub fn predict_logistic<T: Scalar>(model: &LogisticModel<T>, x: &[T]) -> Result<T, ModelError> {
    model.score(x)
}
