use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::column_means;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegOptions {
    /// L2 penalty on weights (biases are not penalized).
    pub l2: f64,
    /// Stop when the gradient infinity-norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions {
            l2: 1e-4,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

/// Multinomial logistic regression with a softmax link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// C×k
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    /// Class label for each row of `weights`.
    pub classes: Vec<usize>,
}

impl LogRegModel {
    /// Per-class linear scores, n×C.
    pub fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut s = x * self.weights.transpose();
        for (j, mut col) in s.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.biases[j]);
        }
        s
    }

    pub fn predict_proba(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut s = self.scores(x);
        softmax_rows(&mut s);
        s
    }

    /// Argmax class per row; ties go to the earliest class.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        argmax_rows(&self.predict_proba(x))
            .into_iter()
            .map(|j| self.classes[j])
            .collect()
    }

    /// Binary decision function: score of the second class minus the first.
    pub fn decision_function(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if self.classes.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "decision function needs a binary model, got {} classes",
                self.classes.len()
            )));
        }
        let s = self.scores(x);
        Ok(s.column(1) - s.column(0))
    }
}

pub(crate) fn argmax_rows(m: &DMatrix<f64>) -> Vec<usize> {
    m.row_iter()
        .map(|r| {
            let mut best = 0;
            for j in 1..r.len() {
                if r[j] > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn softmax_rows(s: &mut DMatrix<f64>) {
    for mut row in s.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

#[derive(Debug, Clone)]
pub struct LogRegFit {
    pub model: LogRegModel,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective after each accepted step, starting from the initial point.
    pub loss_trace: Vec<f64>,
}

struct Problem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [usize],
    n_classes: usize,
    l2: f64,
}

impl Problem<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.n_classes, self.x.ncols())
    }

    /// Parameters are packed as C×(k+1): weights then bias column.
    fn unpack(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (c, k) = self.dims();
        DMatrix::from_column_slice(c, k + 1, theta.as_slice())
    }

    fn eval(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let (c, k) = self.dims();
        let n = self.x.nrows() as f64;
        let params = self.unpack(theta);
        let w = params.columns(0, k);
        let b = params.column(k);
        let mut s = self.x * w.transpose();
        for (j, mut col) in s.column_iter_mut().enumerate() {
            col.add_scalar_mut(b[j]);
        }
        let mut loss = 0.0;
        for (i, mut row) in s.row_iter_mut().enumerate() {
            let max = row.max();
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss -= row[self.y[i]] - lse;
            row.apply(|v| *v = (*v - lse).exp());
            row[self.y[i]] -= 1.0;
        }
        loss /= n;
        loss += 0.5 * self.l2 * w.norm_squared();
        // s now holds P - Y
        let gw = s.transpose() * self.x / n + w * self.l2;
        let gb = s.row_sum().transpose() / n;
        let mut grad = DMatrix::zeros(c, k + 1);
        grad.columns_mut(0, k).copy_from(&gw);
        grad.column_mut(k).copy_from(&gb);
        (loss, DVector::from_column_slice(grad.as_slice()))
    }
}

/// Minimize with L-BFGS directions and Armijo backtracking; every accepted
/// step strictly decreases the objective.
fn minimize(problem: &Problem<'_>, opts: &LogRegOptions) -> Result<(DVector<f64>, usize, f64, Vec<f64>)> {
    const MEMORY: usize = 10;
    const ARMIJO: f64 = 1e-4;
    let (c, k) = problem.dims();
    let mut theta = DVector::zeros(c * (k + 1));
    let (mut f, mut g) = problem.eval(&theta);
    let mut trace = vec![f];
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut iter = 0;
    loop {
        let gnorm = g.amax();
        if gnorm < opts.tol {
            return Ok((theta, iter, gnorm, trace));
        }
        if iter >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations: iter,
                grad_norm: gnorm,
            });
        }
        iter += 1;

        let mut dir = two_loop(&g, &history);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            history.clear();
            dir = -&g;
            slope = -g.norm_squared();
        }
        let mut step = if history.is_empty() { 1.0 / g.norm().max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &theta + &dir * step;
            let (fc, gc) = problem.eval(&cand);
            if fc.is_finite() && fc <= f + ARMIJO * step * slope && fc < f {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            if !history.is_empty() {
                history.clear();
                continue;
            }
            // no decrease possible along the gradient: numerically stationary
            return if gnorm < opts.tol * 1e3 {
                Ok((theta, iter, gnorm, trace))
            } else {
                Err(Error::NotConverged {
                    iterations: iter,
                    grad_norm: gnorm,
                })
            };
        };
        let s = &cand - &theta;
        let yv = &gc - &g;
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        theta = cand;
        f = fc;
        g = gc;
        trace.push(f);
    }
}

fn two_loop(g: &DVector<f64>, history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.norm_squared();
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    -q
}

/// Fit on all rows. `y` holds arbitrary class labels; the model's classes
/// are their sorted distinct values. Features are standardized internally
/// and the scaling folded back into the returned weights.
pub fn logreg_fit(x: &DMatrix<f64>, y: &[usize], opts: &LogRegOptions) -> Result<LogRegFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} rows", y.len())));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument("logistic regression needs at least two classes".into()));
    }
    let index: Vec<usize> = y
        .iter()
        .map(|v| classes.binary_search(v).unwrap())
        .collect();

    let mean = column_means(x);
    let mut scale = DVector::from_element(k, 1.0);
    let mut xs = x.clone();
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
        let sd = (col.norm_squared() / n as f64).sqrt();
        if sd > 0.0 {
            col /= sd;
            scale[j] = sd;
        }
    }
    let problem = Problem {
        x: &xs,
        y: &index,
        n_classes: classes.len(),
        l2: opts.l2,
    };
    let (theta, iterations, grad_norm, loss_trace) = minimize(&problem, opts)?;
    let params = problem.unpack(&theta);
    let mut weights = params.columns(0, k).into_owned();
    for (j, mut col) in weights.column_iter_mut().enumerate() {
        col /= scale[j];
    }
    let biases = params.column(k) - &weights * &mean;
    Ok(LogRegFit {
        model: LogRegModel {
            weights,
            biases,
            classes,
        },
        iterations,
        grad_norm,
        loss_trace,
    })
}

/// Stratified fold ids: each class is shuffled with the seeded stream and
/// dealt round-robin, the dealing position carrying over between classes.
pub fn stratified_folds(y: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; y.len()];
    let mut dealer = 0;
    for c in classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        if members.len() < folds {
            return Err(Error::ClassTooSmall {
                class: c.to_string(),
                count: members.len(),
                required: folds,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = dealer % folds;
            dealer += 1;
        }
    }
    Ok(assignment)
}

/// Out-of-fold predictions from stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPredictions {
    pub classes: Vec<usize>,
    pub fold_of: Vec<usize>,
    pub predicted: Vec<usize>,
    /// n×C, columns ordered as `classes`.
    pub probabilities: DMatrix<f64>,
}

pub fn logreg_fit_cv(
    x: &DMatrix<f64>,
    y: &[usize],
    folds: usize,
    seed: u64,
    opts: &LogRegOptions,
) -> Result<CvPredictions> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} rows", y.len())));
    }
    let fold_of = stratified_folds(y, folds, seed)?;
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut probabilities = DMatrix::zeros(n, classes.len());
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let xt = x.select_rows(&train);
        let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let fit = logreg_fit(&xt, &yt, opts)?;
        let p = fit.model.predict_proba(&x.select_rows(&test));
        // every class is present in each training split (>= folds members)
        for (r, &i) in test.iter().enumerate() {
            probabilities.set_row(i, &p.row(r));
        }
    }
    let predicted = argmax_rows(&probabilities)
        .into_iter()
        .map(|j| classes[j])
        .collect();
    Ok(CvPredictions {
        classes,
        fold_of,
        predicted,
        probabilities,
    })
}
