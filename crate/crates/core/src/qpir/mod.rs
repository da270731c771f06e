//! Private information retrieval: server = party A holding an n-bit
//! database x in A_0 (dimension 2^n, x_1 the most significant bit), client =
//! party B holding an index i in B_0 (dimension n, |i> stored as i-1).

mod builtin;
mod correctness;
mod privacy;

pub use builtin::{builtin, BuiltinParams, BUILTIN_NAMES};
pub use correctness::{correctness_delta, ClientMeasurement, CorrectnessReport};
pub use privacy::{privacy_epsilon_purified, privacy_from_marginals, PrivacyOptions, PrivacyReport};

use crate::error::{Error, Result};
use crate::linalg::{RegisterLayout, StateVector};
use crate::protocol::ProtocolSpec;

/// Bit x_i (1-based, x_1 most significant) of an n-bit database.
pub fn bit(x: u64, i: usize, n: usize) -> u8 {
    ((x >> (n - i)) & 1) as u8
}

#[derive(Clone, Debug)]
pub struct QpirProtocol {
    n: usize,
    name: String,
    spec: ProtocolSpec,
}

impl QpirProtocol {
    /// Infers n from dim B_0 and checks dim A_0 = 2^n.
    pub fn new(spec: ProtocolSpec, name: impl Into<String>) -> Result<Self> {
        let n = spec.b_space(0).total_dim();
        if !(1..=40).contains(&n) {
            return Err(Error::OutOfRange(format!("database size n = {n} must be in 1..=40")));
        }
        let a0 = spec.a_space(0).total_dim();
        if a0 != 1usize << n {
            return Err(Error::Shape { round: 0, detail: format!("server input has dim {a0}, expected 2^{n}") });
        }
        Ok(QpirProtocol { n, name: name.into(), spec })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn communication(&self) -> f64 {
        self.spec.communication_complexity()
    }

    pub fn database_count(&self) -> u64 {
        1u64 << self.n
    }

    pub fn database_state(&self, x: u64) -> Result<StateVector> {
        if x >= self.database_count() {
            return Err(Error::OutOfRange(format!("database {x} has more than {} bits", self.n)));
        }
        StateVector::basis(self.spec.a_space(0).clone(), x as usize)
    }

    pub fn index_state(&self, i: usize) -> Result<StateVector> {
        if !(1..=self.n).contains(&i) {
            return Err(Error::OutOfRange(format!("index {i} not in 1..={}", self.n)));
        }
        StateVector::basis(self.spec.b_space(0).clone(), i - 1)
    }

    /// |x> (x) |i>
    pub fn input(&self, x: u64, i: usize) -> Result<StateVector> {
        self.database_state(x)?.tensor(&self.index_state(i)?)
    }

    /// Uniform superposition over all databases, with index i.
    pub fn superposition_input(&self, i: usize) -> Result<StateVector> {
        crate::adversary::uniform(self.spec.a_space(0))?.tensor(&self.index_state(i)?)
    }

    pub fn client_output(&self) -> &RegisterLayout {
        self.spec.b_space(self.spec.rounds())
    }
}
