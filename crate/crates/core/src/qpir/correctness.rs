use nalgebra::DMatrix;
use serde::Serialize;

use super::{bit, QpirProtocol};
use crate::config::LabConfig;
use crate::error::Result;
use crate::linalg::{helstrom_factored, QuantumState, RegisterLayout, StateVector, C64};
use crate::protocol::execute;

/// Index-i measurement on the client's final registers: outcome 0 ("x_i =
/// 0") is the projector onto span(basis).
#[derive(Clone, Debug)]
pub struct ClientMeasurement {
    pub layout: RegisterLayout,
    pub basis: DMatrix<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectnessReport {
    /// 1 - Helstrom success for index i (entry i-1).
    pub per_index: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    #[serde(skip)]
    pub measurements: Vec<ClientMeasurement>,
}

/// Client's final state averaged over the databases with x_i = b.
pub(crate) fn client_average(q: &QpirProtocol, i: usize, b: u8, cfg: &LabConfig) -> Result<QuantumState> {
    let n = q.n();
    let inputs: Vec<StateVector> = (0..q.database_count())
        .filter(|&x| bit(x, i, n) == b)
        .map(|x| q.input(x, i))
        .collect::<Result<_>>()?;
    let rho = QuantumState::uniform_mixture(&inputs)?;
    let t = execute(q.spec(), &rho, cfg)?;
    let labels: Vec<&str> = q.client_output().labels().collect();
    t.final_state().marginal_factor(&labels)?.reorder(&labels)
}

/// For each index, the best x-independent measurement of the client's
/// output guessing x_i, with x uniform. delta_i is its error probability.
pub fn correctness_delta(q: &QpirProtocol, cfg: &LabConfig) -> Result<CorrectnessReport> {
    let n = q.n();
    let jobs: Vec<(usize, u8)> = (1..=n).flat_map(|i| [(i, 0u8), (i, 1u8)]).collect();
    let avgs = cfg.exec.try_map(jobs, |(i, b)| client_average(q, i, b, cfg))?;
    let mut per_index = Vec::with_capacity(n);
    let mut measurements = Vec::with_capacity(n);
    for pair in avgs.chunks(2) {
        let (p, basis) = helstrom_factored(pair[0].factor(), pair[1].factor(), 0.5);
        per_index.push((1.0 - p).max(0.0));
        measurements.push(ClientMeasurement { layout: pair[0].layout().clone(), basis });
    }
    let max = per_index.iter().copied().fold(0.0, f64::max);
    let mean = per_index.iter().sum::<f64>() / n as f64;
    Ok(CorrectnessReport { per_index, max, mean, measurements })
}
