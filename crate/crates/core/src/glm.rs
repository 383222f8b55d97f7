//! Binary logistic regression fitted by damped Newton iterations.
//!
//! The objective is the negative log-likelihood summed over the training
//! pool plus `l2_penalty / 2 * |w|^2`; the intercept is not penalized. A pool
//! holding a single class cannot be fitted meaningfully and yields a
//! constant model predicting the Laplace-smoothed positive rate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::{DataPool, Instance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmHyperparams {
    pub l2_penalty: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for GlmHyperparams {
    fn default() -> Self {
        Self {
            l2_penalty: 1e-3,
            max_iterations: 200,
            gradient_tolerance: 1e-8,
        }
    }
}

impl GlmHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::Config(format!(
                "l2_penalty must be a non-negative finite number, got {}",
                self.l2_penalty
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "gradient_tolerance must be positive, got {}",
                self.gradient_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub n_iterations: usize,
    /// Set when the training pool held a single class; every prediction
    /// then equals this value.
    pub fallback_prior: Option<f64>,
}

/// Logistic function, clamped so the result is strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear_predictor(intercept: f64, weights: &[f64], features: &[f64]) -> f64 {
    intercept + weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
}

fn target(inst: &Instance) -> f64 {
    f64::from(inst.label.bit())
}

/// Penalized negative log-likelihood of `(intercept, weights)` on `instances`.
pub fn regularized_loss(instances: &[Instance], intercept: f64, weights: &[f64], l2_penalty: f64) -> f64 {
    let nll: f64 = instances
        .iter()
        .map(|inst| {
            let z = linear_predictor(intercept, weights, &inst.features);
            softplus(z) - target(inst) * z
        })
        .sum();
    nll + 0.5 * l2_penalty * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`regularized_loss`]; element 0 is the intercept derivative,
/// the rest follow the weight order.
pub fn regularized_gradient(instances: &[Instance], intercept: f64, weights: &[f64], l2_penalty: f64) -> Vec<f64> {
    let mut grad = vec![0.0; weights.len() + 1];
    for inst in instances {
        let z = linear_predictor(intercept, weights, &inst.features);
        let residual = sigmoid(z) - target(inst);
        grad[0] += residual;
        for (g, x) in grad[1..].iter_mut().zip(&inst.features) {
            *g += residual * x;
        }
    }
    for (g, w) in grad[1..].iter_mut().zip(weights) {
        *g += l2_penalty * w;
    }
    grad
}

fn hessian(instances: &[Instance], intercept: f64, weights: &[f64], l2_penalty: f64) -> DMatrix<f64> {
    let dim = weights.len() + 1;
    let mut h = DMatrix::zeros(dim, dim);
    let mut row = vec![1.0; dim];
    for inst in instances {
        let p = sigmoid(linear_predictor(intercept, weights, &inst.features));
        let w = p * (1.0 - p);
        row[1..].copy_from_slice(&inst.features);
        for i in 0..dim {
            for j in 0..=i {
                h[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    for i in 1..dim {
        h[(i, i)] += l2_penalty;
    }
    h
}

/// Fits a model on the labeled pool.
pub fn fit(pool: &DataPool, hp: &GlmHyperparams) -> Result<GlmModel> {
    fit_instances(pool.instances(), hp)
}

/// Fits a model on a slice of labeled instances.
pub fn fit_instances(instances: &[Instance], hp: &GlmHyperparams) -> Result<GlmModel> {
    hp.validate().map_err(|e| Error::Training(e.to_string()))?;
    let first = instances
        .first()
        .ok_or_else(|| Error::Training("training pool is empty".into()))?;
    let n_features = first.features.len();
    if let Some(bad) = instances.iter().find(|i| i.features.len() != n_features) {
        return Err(Error::Training(format!(
            "instance {} has {} features, expected {n_features}",
            bad.id,
            bad.features.len()
        )));
    }

    let n = instances.len();
    let n_pos = instances.iter().filter(|i| i.label.is_positive()).count();
    if n_pos == 0 || n_pos == n {
        return Ok(GlmModel {
            weights: vec![0.0; n_features],
            intercept: 0.0,
            converged: true,
            n_iterations: 0,
            fallback_prior: Some((n_pos as f64 + 1.0) / (n as f64 + 2.0)),
        });
    }

    let l2 = hp.l2_penalty;
    let mut intercept = 0.0;
    let mut weights = vec![0.0; n_features];
    let mut loss = regularized_loss(instances, intercept, &weights, l2);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < hp.max_iterations {
        let grad = regularized_gradient(instances, intercept, &weights, l2);
        if grad.iter().all(|g| g.abs() < hp.gradient_tolerance) {
            converged = true;
            break;
        }
        iterations += 1;

        let g = DVector::from_vec(grad);
        let h = hessian(instances, intercept, &weights, l2);
        // Newton direction; fall back to steepest descent if the Hessian is
        // not numerically positive definite (only possible with l2 = 0).
        let direction = match h.cholesky() {
            Some(chol) => -chol.solve(&g),
            None => -g.clone(),
        };
        let slope = g.dot(&direction);

        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-12 {
            let cand_intercept = intercept + step * direction[0];
            let cand_weights: Vec<f64> = weights
                .iter()
                .zip(direction.iter().skip(1))
                .map(|(w, d)| w + step * d)
                .collect();
            let cand_loss = regularized_loss(instances, cand_intercept, &cand_weights, l2);
            if cand_loss <= loss + 1e-4 * step * slope {
                intercept = cand_intercept;
                weights = cand_weights;
                loss = cand_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No further decrease is representable; the gradient test decides.
            let grad = regularized_gradient(instances, intercept, &weights, l2);
            converged = grad.iter().all(|g| g.abs() < hp.gradient_tolerance);
            break;
        }
    }
    if !converged && iterations == hp.max_iterations {
        let grad = regularized_gradient(instances, intercept, &weights, l2);
        converged = grad.iter().all(|g| g.abs() < hp.gradient_tolerance);
    }

    Ok(GlmModel {
        weights,
        intercept,
        converged,
        n_iterations: iterations,
        fallback_prior: None,
    })
}

impl GlmModel {
    /// Constant model predicting `prior` everywhere.
    pub fn constant(n_features: usize, prior: f64) -> Self {
        Self {
            weights: vec![0.0; n_features],
            intercept: 0.0,
            converged: true,
            n_iterations: 0,
            fallback_prior: Some(prior),
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Probability of the positive class for one feature vector.
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::Prediction(format!(
                "expected {} features, got {}",
                self.weights.len(),
                features.len()
            )));
        }
        if let Some(prior) = self.fallback_prior {
            return Ok(prior);
        }
        Ok(sigmoid(linear_predictor(self.intercept, &self.weights, features)))
    }

    /// Predictions for every instance, in input order.
    pub fn predict_many(&self, instances: &[Instance]) -> Result<Vec<f64>> {
        instances.iter().map(|i| self.predict_proba(&i.features)).collect()
    }

    /// `{"weights":[...],"intercept":x,"converged":bool}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "weights": self.weights,
            "intercept": self.intercept,
            "converged": self.converged,
        })
        .to_string()
    }
}
