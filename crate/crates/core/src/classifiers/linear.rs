//! Regularized linear base learners trained from a zero initialization.
//!
//! Parameters are handled as one flat vector `θ = [W (row-major, n_way × dim), b (n_way)]`.
//! Both objectives add `λ/2 · (‖W‖² + ‖b‖²)`.
//!
//! * Logistic: mean multinomial softmax cross-entropy, minimized by gradient
//!   descent with a backtracking (halving) line search.
//! * SVM: one binary hinge problem per class (one-vs-rest), minimized by
//!   subgradient descent keeping the best iterate seen so far.

use serde::{Deserialize, Serialize};

use super::check_support;
use crate::error::{Error, Result};
use crate::scalar::{dot, squared_norm, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearKind {
    Logistic,
    Svm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
    pub kind: LinearKind,
}

impl<T: Real> LinearModel<T> {
    pub fn zeros(n_way: usize, dim: usize, kind: LinearKind) -> Self {
        Self {
            weights: vec![vec![T::zero(); dim]; n_way],
            bias: vec![T::zero(); n_way],
            kind,
        }
    }

    pub fn n_way(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Logits `W x + b`.
    pub fn decision(&self, x: &[T]) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| dot(w, x) + b)
            .collect()
    }

    pub fn to_flat(&self) -> Vec<T> {
        let mut theta: Vec<T> = self.weights.iter().flatten().copied().collect();
        theta.extend_from_slice(&self.bias);
        theta
    }

    pub fn from_flat(theta: &[T], n_way: usize, dim: usize, kind: LinearKind) -> Self {
        assert_eq!(theta.len(), n_way * (dim + 1));
        Self {
            weights: theta[..n_way * dim].chunks(dim.max(1)).map(<[T]>::to_vec).collect(),
            bias: theta[n_way * dim..].to_vec(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// λ; `None` means `1 / support size`.
    pub l2_strength: Option<f64>,
    pub max_iters: usize,
    pub tolerance: f64,
    pub learning_rate: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            l2_strength: None,
            max_iters: 500,
            tolerance: 1e-6,
            learning_rate: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidSolver("max_iters must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidSolver("tolerance must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidSolver("learning_rate must be positive".into()));
        }
        if let Some(l) = self.l2_strength {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidSolver("l2_strength must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn resolved_l2(&self, support_size: usize) -> f64 {
        self.l2_strength.unwrap_or_else(|| 1.0 / support_size.max(1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientNorm,
    SmallDecrease,
    MaxIters,
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// Norm of the (sub)gradient at the returned iterate.
    pub gradient_norm: f64,
    pub stop: StopReason,
}

impl FitDiagnostics {
    pub fn converged(&self, tolerance: f64) -> bool {
        self.gradient_norm <= 10.0 * tolerance
    }
}

fn softmax_in_place<T: Real>(logits: &mut [T]) -> T {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        total = total + *z;
    }
    for z in logits.iter_mut() {
        *z = *z / total;
    }
    max + total.ln()
}

fn logits_at<T: Real>(theta: &[T], x: &[T], n_way: usize, out: &mut Vec<T>) {
    let dim = x.len();
    out.clear();
    out.extend((0..n_way).map(|c| dot(&theta[c * dim..(c + 1) * dim], x) + theta[n_way * dim + c]));
}

/// Mean softmax cross-entropy plus `λ/2 ‖θ‖²`.
pub fn logistic_objective<T: Real, V: AsRef<[T]>>(
    theta: &[T],
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
    l2: T,
) -> T {
    let n = T::from_usize_lossy(vectors.len());
    let mut logits = Vec::with_capacity(n_way);
    let mut loss = T::zero();
    for (x, &y) in vectors.iter().zip(labels) {
        logits_at(theta, x.as_ref(), n_way, &mut logits);
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
        loss = loss + (lse - logits[y]);
    }
    loss / n + l2 * squared_norm(theta) / T::lit(2.0)
}

/// Objective value and its gradient with respect to `theta`.
pub fn logistic_gradient<T: Real, V: AsRef<[T]>>(
    theta: &[T],
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
    l2: T,
) -> (T, Vec<T>) {
    let n = T::from_usize_lossy(vectors.len());
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    let mut grad: Vec<T> = theta.iter().map(|&t| l2 * t).collect();
    let mut probs = Vec::with_capacity(n_way);
    let mut loss = T::zero();
    for (x, &y) in vectors.iter().zip(labels) {
        let x = x.as_ref();
        logits_at(theta, x, n_way, &mut probs);
        let target = probs[y];
        let lse = softmax_in_place(&mut probs);
        loss = loss + (lse - target);
        for c in 0..n_way {
            let residual = (probs[c] - if c == y { T::one() } else { T::zero() }) / n;
            for (g, &xk) in grad[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                *g = *g + residual * xk;
            }
            grad[n_way * dim + c] = grad[n_way * dim + c] + residual;
        }
    }
    (loss / n + l2 * squared_norm(theta) / T::lit(2.0), grad)
}

/// Sum over classes of the one-vs-rest objectives
/// `mean(max(0, 1 − y·(w_c·x + b_c))) + λ/2 (‖w_c‖² + b_c²)`.
pub fn hinge_objective<T: Real, V: AsRef<[T]>>(theta: &[T], vectors: &[V], labels: &[usize], n_way: usize, l2: T) -> T {
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    (0..n_way)
        .map(|c| {
            let (w, b) = class_params(theta, c, n_way, dim);
            binary_hinge(w, b, vectors, labels, c, l2).0
        })
        .sum()
}

/// Objective and subgradient (zero at the hinge point, where margin == 1).
pub fn hinge_subgradient<T: Real, V: AsRef<[T]>>(
    theta: &[T],
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
    l2: T,
) -> (T, Vec<T>) {
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    let mut grad = vec![T::zero(); theta.len()];
    let mut total = T::zero();
    for c in 0..n_way {
        let (w, b) = class_params(theta, c, n_way, dim);
        let (obj, gw, gb) = binary_hinge(w, b, vectors, labels, c, l2);
        total = total + obj;
        grad[c * dim..(c + 1) * dim].copy_from_slice(&gw);
        grad[n_way * dim + c] = gb;
    }
    (total, grad)
}

fn class_params<T: Real>(theta: &[T], c: usize, n_way: usize, dim: usize) -> (&[T], T) {
    (&theta[c * dim..(c + 1) * dim], theta[n_way * dim + c])
}

/// Class `positive` against the rest: returns (objective, ∂w, ∂b).
fn binary_hinge<T: Real, V: AsRef<[T]>>(
    w: &[T],
    b: T,
    vectors: &[V],
    labels: &[usize],
    positive: usize,
    l2: T,
) -> (T, Vec<T>, T) {
    let n = T::from_usize_lossy(vectors.len());
    let mut gw: Vec<T> = w.iter().map(|&v| l2 * v).collect();
    let mut gb = l2 * b;
    let mut loss = T::zero();
    for (x, &y) in vectors.iter().zip(labels) {
        let x = x.as_ref();
        let sign = if y == positive { T::one() } else { -T::one() };
        let slack = T::one() - sign * (dot(w, x) + b);
        if slack > T::zero() {
            loss = loss + slack;
            for (g, &xk) in gw.iter_mut().zip(x) {
                *g = *g - sign * xk / n;
            }
            gb = gb - sign / n;
        }
    }
    let reg = l2 * (squared_norm(w) + b * b) / T::lit(2.0);
    (loss / n + reg, gw, gb)
}

/// Multinomial logistic regression on the support set.
pub fn train_logistic<T: Real, V: AsRef<[T]>>(
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
    config: &SolverConfig,
) -> Result<(LinearModel<T>, FitDiagnostics)> {
    config.validate()?;
    let dim = check_support(vectors, labels, n_way)?;
    let l2 = T::lit(config.resolved_l2(vectors.len()));
    let tol = T::lit(config.tolerance);
    let armijo = T::lit(1e-4);
    const MAX_HALVINGS: usize = 60;

    let mut theta = vec![T::zero(); n_way * (dim + 1)];
    let (mut value, mut grad) = logistic_gradient(&theta, vectors, labels, n_way, l2);
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let initial = value;
    let mut step = T::lit(config.learning_rate);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIters;
    let mut candidate = vec![T::zero(); theta.len()];

    while iterations < config.max_iters {
        let grad_sq = squared_norm(&grad);
        if grad_sq.sqrt() <= T::lit(10.0) * tol {
            stop = StopReason::GradientNorm;
            break;
        }
        iterations += 1;

        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..MAX_HALVINGS {
            for ((c, &t), &g) in candidate.iter_mut().zip(&theta).zip(&grad) {
                *c = t - step * g;
            }
            let trial = logistic_objective(&candidate, vectors, labels, n_way, l2);
            if trial.is_finite() {
                saw_finite = true;
                if trial <= value - armijo * step * grad_sq {
                    accepted = Some(trial);
                    break;
                }
            }
            step = step / T::lit(2.0);
        }
        let Some(trial) = accepted else {
            if !saw_finite {
                return Err(Error::NonFiniteLoss { iteration: iterations });
            }
            stop = StopReason::LineSearchStalled;
            break;
        };

        std::mem::swap(&mut theta, &mut candidate);
        let decrease = value - trial;
        (value, grad) = logistic_gradient(&theta, vectors, labels, n_way, l2);
        if decrease < tol {
            stop = StopReason::SmallDecrease;
            break;
        }
        step = step * T::lit(2.0);
    }

    let diagnostics = FitDiagnostics {
        iterations,
        initial_objective: initial.to_f64_lossy(),
        final_objective: value.to_f64_lossy(),
        gradient_norm: squared_norm(&grad).sqrt().to_f64_lossy(),
        stop,
    };
    Ok((
        LinearModel::from_flat(&theta, n_way, dim, LinearKind::Logistic),
        diagnostics,
    ))
}

/// One-vs-rest linear SVM on the support set.
///
/// Step size at iteration `t` is `min(learning_rate, 1/(λt))` when λ > 0 and
/// `learning_rate/√t` otherwise. Each binary problem returns the best iterate
/// it visited, so the reported objective never exceeds the initial one.
pub fn train_svm<T: Real, V: AsRef<[T]>>(
    vectors: &[V],
    labels: &[usize],
    n_way: usize,
    config: &SolverConfig,
) -> Result<(LinearModel<T>, FitDiagnostics)> {
    config.validate()?;
    let dim = check_support(vectors, labels, n_way)?;
    let l2f = config.resolved_l2(vectors.len());
    let l2 = T::lit(l2f);
    let tol = T::lit(config.tolerance);
    let lr = T::lit(config.learning_rate);

    let mut model = LinearModel::zeros(n_way, dim, LinearKind::Svm);
    let mut iterations = 0;
    let mut initial = T::zero();
    let mut final_value = T::zero();
    let mut grad_sq_total = T::zero();
    let mut stop = StopReason::GradientNorm;

    for c in 0..n_way {
        let mut w = vec![T::zero(); dim];
        let mut b = T::zero();
        let (start, mut gw, mut gb) = binary_hinge(&w, b, vectors, labels, c, l2);
        if !start.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: 0 });
        }
        initial = initial + start;
        let mut best = (start, w.clone(), b, squared_norm(&gw) + gb * gb);
        let mut class_stop = StopReason::MaxIters;
        let mut t = 0;
        while t < config.max_iters {
            let grad_sq = squared_norm(&gw) + gb * gb;
            if grad_sq.sqrt() <= T::lit(10.0) * tol {
                class_stop = StopReason::GradientNorm;
                break;
            }
            t += 1;
            let tt = T::from_usize_lossy(t);
            let eta = if l2f > 0.0 {
                lr.min(T::one() / (l2 * tt))
            } else {
                lr / tt.sqrt()
            };
            for (wk, &g) in w.iter_mut().zip(&gw) {
                *wk = *wk - eta * g;
            }
            b = b - eta * gb;
            let (value, next_gw, next_gb) = binary_hinge(&w, b, vectors, labels, c, l2);
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { iteration: t });
            }
            gw = next_gw;
            gb = next_gb;
            if value < best.0 {
                best = (value, w.clone(), b, squared_norm(&gw) + gb * gb);
            }
        }
        iterations = iterations.max(t);
        if class_stop == StopReason::MaxIters {
            stop = StopReason::MaxIters;
        }
        final_value = final_value + best.0;
        grad_sq_total = grad_sq_total + best.3;
        model.weights[c] = best.1;
        model.bias[c] = best.2;
    }

    let diagnostics = FitDiagnostics {
        iterations,
        initial_objective: initial.to_f64_lossy(),
        final_objective: final_value.to_f64_lossy(),
        gradient_norm: grad_sq_total.sqrt().to_f64_lossy(),
        stop,
    };
    Ok((model, diagnostics))
}
