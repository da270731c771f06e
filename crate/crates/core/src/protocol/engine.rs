use nalgebra::DMatrix;

use super::ProtocolSpec;
use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, QuantumState, RegisterLayout, C64};

/// Global states of one run: the input and the state after each of the 2s
/// steps.
#[derive(Clone, Debug)]
pub struct Transcript {
    input: QuantumState,
    states: Vec<QuantumState>,
}

impl Transcript {
    pub fn input(&self) -> &QuantumState {
        &self.input
    }

    pub fn steps(&self) -> usize {
        self.states.len()
    }

    /// State after step `i`; step 0 is the input.
    pub fn state(&self, i: usize) -> &QuantumState {
        if i == 0 {
            &self.input
        } else {
            &self.states[i - 1]
        }
    }

    pub fn final_state(&self) -> &QuantumState {
        self.states.last().expect("at least two steps")
    }

    pub fn density(&self, i: usize) -> Result<DensityOperator> {
        self.state(i).to_density()
    }

    pub fn layouts(&self) -> Vec<&RegisterLayout> {
        std::iter::once(&self.input).chain(&self.states).map(|s| s.layout()).collect()
    }
}

/// Checks that `input` carries A_0 and B_0 with the right dimensions. Any
/// further registers are inert; a register named `R` must have dimension
/// dim(A_0) dim(B_0).
fn check_input(spec: &ProtocolSpec, input: &RegisterLayout) -> Result<()> {
    for r in spec.a_space(0).registers().iter().chain(spec.b_space(0).registers()) {
        match input.position(&r.label) {
            Some(p) if input.registers()[p].dim == r.dim => {}
            _ => {
                return Err(Error::Shape {
                    round: 0,
                    detail: format!("input {input} lacks register {}:{}", r.label, r.dim),
                })
            }
        }
    }
    let used = spec.labels();
    let a0b0 = spec.input_layout();
    for r in input.registers() {
        if a0b0.contains(&r.label) {
            continue;
        }
        if used.contains(&r.label) {
            return Err(Error::Shape {
                round: 0,
                detail: format!("inert input register `{}` clashes with a protocol register", r.label),
            });
        }
        if r.label == "R" && r.dim != a0b0.total_dim() {
            return Err(Error::Shape {
                round: 0,
                detail: format!("reference R has dim {}, expected {}", r.dim, a0b0.total_dim()),
            });
        }
    }
    Ok(())
}

pub fn execute(spec: &ProtocolSpec, input: &QuantumState, cfg: &LabConfig) -> Result<Transcript> {
    check_input(spec, input.layout())?;
    cfg.check_dim(input.dim())?;
    let mut states = Vec::with_capacity(2 * spec.rounds());
    let mut cur = input.clone();
    for i in 1..=2 * spec.rounds() {
        let (_, op) = spec.step_op(i);
        cur = cur.apply(op, cfg).map_err(|e| match e {
            Error::DimensionGuard { .. } => e,
            other => Error::Shape { round: (i + 1) / 2, detail: format!("step {i}: {other}") },
        })?;
        states.push(cur.clone());
    }
    Ok(Transcript { input: input.clone(), states })
}

/// Maximally entangled state between A_0 B_0 and a reference register `R`
/// of the same dimension.
pub fn reference_input(spec: &ProtocolSpec, cfg: &LabConfig) -> Result<QuantumState> {
    let inner = spec.input_layout();
    let d = inner.total_dim();
    let mut layout = inner.clone();
    let r = if spec.labels().contains("R") { layout.fresh_label("R") } else { "R".to_string() };
    layout.push(r, d)?;
    cfg.check_dim(layout.total_dim())?;
    let mut f = DMatrix::from_element(d * d, 1, C64::new(0.0, 0.0));
    let w = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for j in 0..d {
        f[(j * d + j, 0)] = w;
    }
    QuantumState::from_factor(layout, f)
}
