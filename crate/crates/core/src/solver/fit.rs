use nalgebra::DMatrix;

use super::model::KernelExpansion;
use super::steps::{argmax_columns, p_step, pace_select, per_example_source_loss, residuals};
use super::{objective, Model, ModelState, PaceSchedule, Problem, SolverError, WeightedLossTerms};
use crate::datamodel::{one_hot, Ablation, Dataset, Hyperparams};
use crate::eval::{accuracy, confidence_histogram, IterationRecord};
use crate::Result;

/// Optional ground truth used only for diagnostics, never for training.
#[derive(Debug, Clone, Default)]
pub struct Truth<'a> {
    /// Clean source labels, for source accuracy.
    pub source: Option<&'a [usize]>,
    /// Target labels, for target accuracy.
    pub target: Option<&'a [usize]>,
}

/// State handed to an observer after each outer iteration.
pub struct IterationSnapshot<'a> {
    pub record: &'a IterationRecord,
    pub state: &'a ModelState,
    /// Training scores `C x n` for the current weights.
    pub scores: &'a DMatrix<f64>,
    pub problem: &'a Problem,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: ModelState,
    pub model: Model,
    pub records: Vec<IterationRecord>,
    pub target_predictions: Vec<usize>,
}

/// Fit on labeled `source` and unlabeled `target`. Target labels, if the
/// dataset carries any, are used only to report target accuracy.
pub fn fit(source: &Dataset, target: &Dataset, hp: &Hyperparams) -> Result<FitResult> {
    let target_truth = target.dense_labels().ok();
    let truth = Truth {
        source: None,
        target: target_truth.as_deref(),
    };
    fit_with(source, target, hp, &truth, |_| {})
}

pub fn fit_with<F>(
    source: &Dataset,
    target: &Dataset,
    hp: &Hyperparams,
    truth: &Truth<'_>,
    mut observer: F,
) -> Result<FitResult>
where
    F: FnMut(&IterationSnapshot<'_>),
{
    let problem = Problem::new(source, target, hp)?;
    let (ns, nt, c) = (
        problem.n_source(),
        problem.n_target(),
        problem.class_count(),
    );
    check_truth("clean source labels", truth.source, ns)?;
    check_truth("target labels", truth.target, nt)?;

    let r = hp.effective_r();
    let mut probs = DMatrix::zeros(c, ns + nt);
    probs
        .columns_mut(0, ns)
        .copy_from(&one_hot(problem.source_labels(), c)?);
    let mut state = ModelState {
        weights: DMatrix::zeros(problem.weight_rows(), c),
        selected: vec![true; ns],
        probs,
        lambda: 0.0,
        mode: problem.mode(),
    };
    let mut scores = problem.scores(&state.weights);
    let schedule = PaceSchedule::new(hp.outer_iters);
    let mut records = Vec::with_capacity(hp.outer_iters);

    for t in 1..=schedule.len() {
        if hp.ablation == Ablation::NoSpl {
            state.selected.fill(true);
            state.lambda = 0.0;
        } else {
            let losses = per_example_source_loss(&residuals(&scores), &state.probs, r, ns);
            let (lambda, selected) = pace_select(&losses, schedule.keep_count(t, ns));
            state.lambda = lambda;
            state.selected = selected;
        }

        let mut prev = objective(&state, &problem, hp);
        let mut inner = vec![prev];
        for _ in 0..hp.inner_iters {
            let terms = WeightedLossTerms::new(&state.probs, &state.sample_weights(), r);
            state.weights = problem.solve_weights(&terms.f, &terms.s, hp)?;
            scores = problem.scores(&state.weights);
            state.probs = p_step(&residuals(&scores), r, hp.q_floor);
            let obj = objective(&state, &problem, hp);
            if !obj.is_finite() {
                return Err(SolverError::NonFinite("objective").into());
            }
            inner.push(obj);
            let converged = (prev - obj).abs() <= hp.inner_tol * prev.abs().max(f64::MIN_POSITIVE);
            prev = obj;
            if converged {
                break;
            }
        }

        let predicted = argmax_columns(&scores);
        let record = IterationRecord {
            iter: t,
            lambda: state.lambda,
            selected_count: state.selected_count(),
            objective: prev,
            target_accuracy: truth
                .target
                .map(|y| accuracy(&predicted[ns..], y))
                .transpose()?,
            source_accuracy: truth
                .source
                .map(|y| accuracy(&predicted[..ns], y))
                .transpose()?,
            confidence_histogram: confidence_histogram(&state.probs.columns(ns, nt).into_owned())?,
            inner_objectives: inner,
        };
        observer(&IterationSnapshot {
            record: &record,
            state: &state,
            scores: &scores,
            problem: &problem,
        });
        records.push(record);
    }

    let target_predictions = argmax_columns(&scores.columns(ns, nt).into_owned());
    let model = Model {
        weights: state.weights.clone(),
        class_count: c,
        dim: problem.features().nrows(),
        r,
        q_floor: hp.q_floor,
        kernel: problem.gram().map(|g| KernelExpansion {
            kernel: g.kernel,
            train_features: problem.features().clone(),
        }),
    };
    Ok(FitResult {
        state,
        model,
        records,
        target_predictions,
    })
}

fn check_truth(what: &'static str, labels: Option<&[usize]>, n: usize) -> Result<()> {
    match labels {
        Some(y) if y.len() != n => Err(SolverError::DimensionMismatch {
            what,
            expected: n,
            found: y.len(),
        }
        .into()),
        _ => Ok(()),
    }
}
