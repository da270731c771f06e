use serde::Serialize;

use super::QpirProtocol;
use crate::config::LabConfig;
use crate::error::Result;
use crate::linalg::QuantumState;
use crate::protocol::{execute, purify_party, Party};

#[derive(Clone, Copy, Debug, Default)]
pub struct PrivacyOptions {
    /// Also compare server states across indices for every basis database.
    pub basis_inputs: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrivacyReport {
    /// min over reference j of max_i D(sigma_i, sigma_j)
    pub epsilon_hat: f64,
    /// the reference j (1-based) attaining epsilon_hat
    pub best_reference: usize,
    /// max_i D(sigma_i, sigma_1): the simulator that replays index 1
    pub epsilon_hat_ref1: f64,
    /// half the largest pairwise distance; no replay simulator does better
    pub pairwise_lower: f64,
    /// D(sigma_i, sigma_1) for each i
    pub per_index: Vec<f64>,
    pub pairwise: Vec<Vec<f64>>,
    /// largest pairwise distance over basis databases, when requested
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_pairwise_max: Option<f64>,
}

fn pairwise(states: &[QuantumState]) -> Result<Vec<Vec<f64>>> {
    let n = states.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = states[i].trace_distance(&states[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

/// Replay-simulator privacy figures from the server's states sigma_i
/// (entry i-1), all over the same layout.
pub fn privacy_from_marginals(server: &[QuantumState]) -> Result<PrivacyReport> {
    let d = pairwise(server)?;
    let n = server.len();
    let (mut best, mut best_ref) = (f64::INFINITY, 1);
    for j in 0..n {
        let worst = (0..n).map(|i| d[i][j]).fold(0.0, f64::max);
        if worst < best - 1e-15 {
            best = worst;
            best_ref = j + 1;
        }
    }
    let max_pair = d.iter().flatten().copied().fold(0.0, f64::max);
    Ok(PrivacyReport {
        epsilon_hat: best,
        best_reference: best_ref,
        epsilon_hat_ref1: (0..n).map(|i| d[i][0]).fold(0.0, f64::max),
        pairwise_lower: 0.5 * max_pair,
        per_index: (0..n).map(|i| d[i][0]).collect(),
        pairwise: d,
        basis_pairwise_max: None,
    })
}

/// Purifies the server, runs it on the uniform database superposition with
/// each index, and compares the server's final states across indices.
pub fn privacy_epsilon_purified(q: &QpirProtocol, opts: PrivacyOptions, cfg: &LabConfig) -> Result<PrivacyReport> {
    let spec = purify_party(q.spec(), Party::A)?;
    let server: Vec<String> = spec.a_space(spec.rounds()).labels().map(String::from).collect();
    let run = |input: QuantumState| -> Result<QuantumState> {
        let t = execute(&spec, &input, cfg)?;
        t.final_state().marginal_factor(&server)?.reorder(&server)
    };
    let sigmas = cfg.exec.try_map_range(1..q.n() + 1, |i| run(QuantumState::from(&q.superposition_input(i)?)))?;
    let mut report = privacy_from_marginals(&sigmas)?;
    if opts.basis_inputs {
        let xs: Vec<u64> = (0..q.database_count()).collect();
        let worst = cfg.exec.try_map(xs, |x| {
            let per_i = (1..=q.n()).map(|i| run(QuantumState::from(&q.input(x, i)?))).collect::<Result<Vec<_>>>()?;
            Ok(pairwise(&per_i)?.into_iter().flatten().fold(0.0, f64::max))
        })?;
        report.basis_pairwise_max = Some(worst.into_iter().fold(0.0, f64::max));
    }
    Ok(report)
}
