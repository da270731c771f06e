//! Seeded property suites shared by the `fuzz` verb and the acceptance run.

use rand::Rng;
use serde::Serialize;

use crate::config::LabConfig;
use crate::error::Result;
use crate::linalg::{fidelity, random_density, random_pure_state, rng_from_seed, trace_distance, RegisterLayout};
use crate::protocol::{random_protocol, schmidt_rank_profile};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct SchmidtTrial {
    pub trial: usize,
    pub seed: u64,
    pub rounds: usize,
    pub communication: usize,
    pub ranks: Vec<usize>,
    pub final_rank: usize,
    /// every step's rank at most the previous rank times the message dimension
    pub stepwise: bool,
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FvdgTrial {
    pub trial: usize,
    pub dim: usize,
    pub distance: f64,
    pub fidelity: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Suite<T> {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    pub rows: Vec<T>,
}

/// Random fully unitary protocols with 1..=6 qubits of communication on
/// random pure product inputs; the final Schmidt rank must stay within 2^c.
pub fn schmidt_suite(trials: usize, seed: u64, cfg: &LabConfig) -> Result<Suite<SchmidtTrial>> {
    let rows = cfg.exec.try_map_range(0..trials, |t| -> Result<SchmidtTrial> {
        let tseed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(t as u64);
        let mut rng = rng_from_seed(tseed);
        let rounds = rng.random_range(1..=3);
        let c = rng.random_range(1..=6);
        let spec = random_protocol(tseed, rounds, c)?;
        let a = random_pure_state(spec.a_space(0).clone(), &mut rng);
        let b = random_pure_state(spec.b_space(0).clone(), &mut rng);
        let profile = schmidt_rank_profile(&spec, &a.tensor(&b)?, cfg)?;
        let final_rank = profile.last().map_or(1, |r| r.rank);
        Ok(SchmidtTrial {
            trial: t,
            seed: tseed,
            rounds,
            communication: c,
            ranks: profile.iter().map(|r| r.rank).collect(),
            final_rank,
            stepwise: profile.iter().all(|r| r.within_bound),
            within_bound: final_rank <= 1 << c,
        })
    })?;
    let violations = rows.iter().filter(|r| !(r.stepwise && r.within_bound)).count();
    Ok(Suite { name: "schmidt-rank", trials, violations, rows })
}

/// 1 - F <= D <= sqrt(1 - F^2) on random density pairs of dimension 2, 4, 8.
pub fn fvdg_suite(trials: usize, seed: u64, cfg: &LabConfig) -> Result<Suite<FvdgTrial>> {
    let rows = cfg.exec.try_map_range(0..trials, |t| -> Result<FvdgTrial> {
        let mut rng = rng_from_seed(seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(t as u64));
        let dim = [2, 4, 8][t % 3];
        let layout = RegisterLayout::single("q", dim)?;
        let rho = random_density(layout.clone(), rng.random_range(1..=dim), &mut rng);
        let sigma = random_density(layout, rng.random_range(1..=dim), &mut rng);
        let d = trace_distance(&rho, &sigma)?;
        let f = fidelity(&rho, &sigma)?;
        let holds = 1.0 - f - TOL <= d && d <= (1.0 - f * f).max(0.0).sqrt() + TOL;
        Ok(FvdgTrial { trial: t, dim, distance: d, fidelity: f, holds })
    })?;
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(Suite { name: "fuchs-van-de-graaf", trials, violations, rows })
}
