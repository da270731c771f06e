use crate::error::{Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_DIM_GUARD: usize = 1 << 20;

/// How independent work items (runs per x, per index, per trial) are scheduled.
///
/// `Parallel` degrades to sequential when the crate is built without the
/// `parallel` feature. Results are always collected in input order, so both
/// modes produce bit-identical output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug)]
pub struct LabConfig {
    /// Threshold on Schmidt coefficients / singular values below which a
    /// direction counts as zero.
    pub rank_tol: f64,
    /// Largest total Hilbert-space dimension any materialized state may have.
    pub dim_guard: usize,
    pub exec: Exec,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig { rank_tol: DEFAULT_RANK_TOL, dim_guard: DEFAULT_DIM_GUARD, exec: Exec::default() }
    }
}

impl LabConfig {
    pub fn sequential() -> Self {
        LabConfig { exec: Exec::Sequential, ..Self::default() }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::OutOfRange(format!("rank tolerance {} not in (0,1)", self.rank_tol)));
        }
        if self.dim_guard == 0 {
            return Err(Error::OutOfRange("dimension guard must be positive".into()));
        }
        Ok(())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim > self.dim_guard {
            Err(Error::DimensionGuard { dim, guard: self.dim_guard })
        } else {
            Ok(())
        }
    }
}
