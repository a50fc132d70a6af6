use super::state::pow_r;
use super::steps::residuals;
use super::{ModelState, Problem};
use crate::datamodel::Hyperparams;

/// Full objective: weighted prudent loss over selected source and all target
/// samples, the complexity and manifold terms, and `-lambda * sum(v)`.
pub fn objective(state: &ModelState, problem: &Problem, hp: &Hyperparams) -> f64 {
    let r = hp.effective_r();
    let q = residuals(&problem.scores(&state.weights));
    let u = state.sample_weights();
    let mut loss = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        let li: f64 = state
            .probs
            .column(i)
            .iter()
            .zip(q.column(i).iter())
            .map(|(&p, &qc)| pow_r(p, r) * qc)
            .sum();
        loss += ui * li;
    }
    loss + problem.regularizer(&state.weights, hp) - state.lambda * state.selected_count() as f64
}
