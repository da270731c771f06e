use serde::Serialize;

use super::{execute, ProtocolSpec};
use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::linalg::{schmidt_decompose, QuantumState, StateVector};

/// Schmidt rank across the A/B cut after one step. Messages in transit
/// count on the receiver's side, so the rank can grow by at most the
/// dimension of the message sent at this step.
#[derive(Clone, Debug, Serialize)]
pub struct RankStep {
    pub step: usize,
    pub rank: usize,
    pub message_dim: usize,
    /// previous rank times message dimension
    pub bound: usize,
    pub within_bound: bool,
}

/// Labels on A's side of the cut after step i.
fn a_side(spec: &ProtocolSpec, i: usize) -> Vec<String> {
    let k = i.div_ceil(2);
    let mut side: Vec<String> = spec.a_space(k).labels().map(String::from).collect();
    if i % 2 == 0 && k > 0 && k < spec.rounds() {
        side.extend(spec.y_space(k).labels().map(String::from));
    }
    side
}

fn rank_at(state: &StateVector, side: &[String], tol: f64) -> Result<usize> {
    let other = state.layout().registers().iter().filter(|r| !side.contains(&r.label)).count();
    let a_dim: usize = state.layout().registers().iter().filter(|r| side.contains(&r.label)).map(|r| r.dim).product();
    if side.is_empty() || other == 0 || a_dim == 1 {
        return Ok(1);
    }
    Ok(schmidt_decompose(state, side, tol)?.rank)
}

/// Runs `spec` on a pure input and reports the Schmidt rank after every
/// step (step 0 is the input). Requires isometric parties.
pub fn schmidt_rank_profile(spec: &ProtocolSpec, input: &StateVector, cfg: &LabConfig) -> Result<Vec<RankStep>> {
    let t = execute(spec, &QuantumState::from(input), cfg)?;
    let mut out = Vec::with_capacity(t.steps() + 1);
    let r0 = rank_at(input, &a_side(spec, 0), cfg.rank_tol)?;
    out.push(RankStep { step: 0, rank: r0, message_dim: 1, bound: r0, within_bound: true });
    for i in 1..=t.steps() {
        let psi = t
            .state(i)
            .as_pure()
            .ok_or_else(|| Error::InvalidState(format!("state after step {i} is mixed; purify the parties first")))?;
        let rank = rank_at(&psi, &a_side(spec, i), cfg.rank_tol)?;
        let message_dim = spec.message(i).map_or(1, |m| m.total_dim());
        let bound = out[i - 1].rank * message_dim;
        out.push(RankStep { step: i, rank, message_dim, bound, within_bound: rank <= bound });
    }
    Ok(out)
}
