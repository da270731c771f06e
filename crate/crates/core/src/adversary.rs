//! Adversaries that replace one party's operations, and certification of
//! speciousness against supplied recovery maps on finite input suites.
//!
//! Certification is an under-approximation: a distance bound is only
//! established for the inputs actually tried.

use serde::{Deserialize, Serialize};

use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::linalg::{KrausChannel, Operation, QuantumState, RegisterLayout, StateVector};
use crate::protocol::{execute, purify_party, reference_input, Party, ProtocolSpec};

/// Replacement operations for one party. `memory[k]` is the adversary's
/// memory after its round k; `memory[0]` must be the honest input space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    pub party: Party,
    pub memory: Vec<RegisterLayout>,
    pub ops: Vec<Operation>,
    /// Claimed speciousness; carried along, never used in a computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl AdversaryStrategy {
    pub fn honest(spec: &ProtocolSpec, party: Party) -> Self {
        AdversaryStrategy {
            party,
            memory: spec.memory(party).to_vec(),
            ops: spec.ops(party).to_vec(),
            gamma: Some(0.0),
        }
    }

    /// The purified party: each operation replaced by its Stinespring
    /// isometry, environments kept in memory.
    pub fn purified(spec: &ProtocolSpec, party: Party) -> Result<Self> {
        let p = purify_party(spec, party)?;
        Ok(AdversaryStrategy { party, memory: p.memory(party).to_vec(), ops: p.ops(party).to_vec(), gamma: Some(0.0) })
    }
}

/// Protocol with the adversary's operations in place of the honest party's.
pub fn install(spec: &ProtocolSpec, adv: &AdversaryStrategy) -> Result<ProtocolSpec> {
    let honest0 = &spec.memory(adv.party)[0];
    if adv.memory.first() != Some(honest0) {
        return Err(Error::Shape { round: 0, detail: format!("adversary must start from the honest input space {honest0}") });
    }
    spec.with_party(adv.party, adv.memory.clone(), adv.ops.clone())
}

/// Recovery maps F_1..F_2s (index i-1 holds F_i).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMapSet {
    pub maps: Vec<KrausChannel>,
}

/// Domain and codomain of F_i. For an A-adversary: odd i = 2k-1 maps
/// Ã_k X_k to A_k X_k, even i = 2k maps Ã_k to A_k. A B-adversary is the
/// mirror image: even i = 2k < 2s maps B̃_k Y_k to B_k Y_k, i = 2s maps
/// B̃_s to B_s, odd i = 2k-1 maps B̃_{k-1} to B_{k-1}.
pub fn recovery_shape(spec: &ProtocolSpec, adv: &AdversaryStrategy, i: usize) -> Result<(RegisterLayout, RegisterLayout)> {
    let s = spec.rounds();
    if i == 0 || i > 2 * s {
        return Err(Error::OutOfRange(format!("step {i} not in 1..={}", 2 * s)));
    }
    let honest = spec.memory(adv.party);
    let k = i.div_ceil(2);
    let sending = match adv.party {
        Party::A => i % 2 == 1,
        Party::B => i % 2 == 0 && k < s,
    };
    let mem_k = match adv.party {
        Party::A => k,
        Party::B if i % 2 == 1 => k - 1,
        Party::B => k,
    };
    let (mut inp, mut out) = (adv.memory[mem_k].clone(), honest[mem_k].clone());
    if sending {
        let msg = spec.message(i).expect("sending step has a message");
        inp = inp.concat(msg)?;
        out = out.concat(msg)?;
    }
    Ok((inp, out))
}

impl RecoveryMapSet {
    /// Keeps the honest registers and traces out everything else the
    /// adversary holds. For the honest adversary these are identities.
    pub fn trace_out(spec: &ProtocolSpec, adv: &AdversaryStrategy) -> Result<Self> {
        let maps = (1..=2 * spec.rounds())
            .map(|i| {
                let (inp, out) = recovery_shape(spec, adv, i)?;
                let keep: Vec<&str> = out.labels().collect();
                let ch = KrausChannel::partial_trace(inp, &keep)?;
                if ch.output_layout() != &out {
                    return Err(Error::RecoveryShape {
                        step: i,
                        detail: format!("cannot recover {out} by tracing out registers"),
                    });
                }
                Ok(ch)
            })
            .collect::<Result<_>>()?;
        Ok(RecoveryMapSet { maps })
    }

    /// Identity maps; only valid when the adversary's memory equals the
    /// honest one.
    pub fn identity(spec: &ProtocolSpec, adv: &AdversaryStrategy) -> Result<Self> {
        let maps = (1..=2 * spec.rounds())
            .map(|i| {
                let (inp, out) = recovery_shape(spec, adv, i)?;
                if inp != out {
                    return Err(Error::RecoveryShape { step: i, detail: format!("identity cannot map {inp} to {out}") });
                }
                Ok(KrausChannel::identity(inp))
            })
            .collect::<Result<_>>()?;
        Ok(RecoveryMapSet { maps })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertRow {
    pub step: usize,
    pub input_id: String,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeciousReport {
    /// Worst distance per step (index i-1 for step i).
    pub per_step: Vec<f64>,
    pub epsilon_hat: f64,
    pub rows: Vec<CertRow>,
    /// True when epsilon_hat <= the strategy's claimed gamma.
    pub certified: Option<bool>,
}

/// Named test inputs.
pub type InputSuite = Vec<(String, QuantumState)>;

/// Every computational-basis product input, the uniform A_0 superposition
/// with each B_0 basis state, and A_0 B_0 maximally entangled with R.
pub fn default_inputs(spec: &ProtocolSpec, cfg: &LabConfig) -> Result<InputSuite> {
    let (a0, b0) = (spec.a_space(0), spec.b_space(0));
    let mut out = Vec::new();
    for a in 0..a0.total_dim() {
        for b in 0..b0.total_dim() {
            let v = StateVector::basis(a0.clone(), a)?.tensor(&StateVector::basis(b0.clone(), b)?)?;
            out.push((format!("basis:{a},{b}"), QuantumState::from(&v)));
        }
    }
    let xi = uniform(a0)?;
    for b in 0..b0.total_dim() {
        let v = xi.tensor(&StateVector::basis(b0.clone(), b)?)?;
        out.push((format!("superposition:{b}"), QuantumState::from(&v)));
    }
    out.push(("reference".to_string(), reference_input(spec, cfg)?));
    Ok(out)
}

pub(crate) fn uniform(layout: &RegisterLayout) -> Result<StateVector> {
    let d = layout.total_dim();
    let amp = crate::linalg::C64::new(1.0 / (d as f64).sqrt(), 0.0);
    StateVector::new(layout.clone(), crate::linalg::DVector::from_element(d, amp))
}

fn check_map(step: usize, map: &KrausChannel, want: &(RegisterLayout, RegisterLayout)) -> Result<()> {
    if map.input_layout() != &want.0 || map.output_layout() != &want.1 {
        return Err(Error::RecoveryShape {
            step,
            detail: format!(
                "expected {} -> {}, found {} -> {}",
                want.0,
                want.1,
                map.input_layout(),
                map.output_layout()
            ),
        });
    }
    Ok(())
}

/// Distance between F applied to the adversarial state and the honest state.
fn recovered_distance(adv_state: &QuantumState, honest: &QuantumState, map: &KrausChannel, cfg: &LabConfig) -> Result<f64> {
    let recovered = adv_state.apply(&map.clone().into(), cfg)?;
    let labels: Vec<&str> = honest.layout().labels().collect();
    let recovered = recovered.reorder(&labels)?;
    recovered.trace_distance(honest)
}

/// Per-step worst distance between F_i applied to the adversarial run and
/// the honest run, over `inputs`.
pub fn certify_specious(
    spec: &ProtocolSpec,
    adv: &AdversaryStrategy,
    recovery: &RecoveryMapSet,
    inputs: &InputSuite,
    cfg: &LabConfig,
) -> Result<SpeciousReport> {
    let steps = 2 * spec.rounds();
    if recovery.maps.len() != steps {
        return Err(Error::RecoveryShape { step: 0, detail: format!("need {steps} maps, got {}", recovery.maps.len()) });
    }
    for (i, m) in recovery.maps.iter().enumerate() {
        check_map(i + 1, m, &recovery_shape(spec, adv, i + 1)?)?;
    }
    let hostile = install(spec, adv)?;
    let per_input = cfg.exec.try_map(inputs.iter().collect(), |(id, rho)| {
        let honest = execute(spec, rho, cfg)?;
        let attacked = execute(&hostile, rho, cfg)?;
        (1..=steps)
            .map(|i| {
                let d = recovered_distance(attacked.state(i), honest.state(i), &recovery.maps[i - 1], cfg)?;
                Ok(CertRow { step: i, input_id: id.clone(), distance: d })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut per_step = vec![0.0f64; steps];
    let mut rows = Vec::new();
    for r in per_input.into_iter().flatten() {
        per_step[r.step - 1] = per_step[r.step - 1].max(r.distance);
        rows.push(r);
    }
    rows.sort_by_key(|r| r.step);
    let eps = per_step.iter().copied().fold(0.0, f64::max);
    Ok(SpeciousReport { per_step, epsilon_hat: eps, rows, certified: adv.gamma.map(|g| eps <= g + 1e-12) })
}

/// Final-state-only version with a single recovery map F on the
/// adversary's final memory.
pub fn certify_ultimately_specious(
    spec: &ProtocolSpec,
    adv: &AdversaryStrategy,
    recovery: &KrausChannel,
    inputs: &InputSuite,
    cfg: &LabConfig,
) -> Result<SpeciousReport> {
    let steps = 2 * spec.rounds();
    check_map(steps, recovery, &recovery_shape(spec, adv, steps)?)?;
    let hostile = install(spec, adv)?;
    let rows = cfg.exec.try_map(inputs.iter().collect(), |(id, rho)| {
        let honest = execute(spec, rho, cfg)?;
        let attacked = execute(&hostile, rho, cfg)?;
        let d = recovered_distance(attacked.final_state(), honest.final_state(), recovery, cfg)?;
        Ok(CertRow { step: steps, input_id: id.clone(), distance: d })
    })?;
    let eps = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    Ok(SpeciousReport { per_step: vec![eps], epsilon_hat: eps, rows, certified: adv.gamma.map(|g| eps <= g + 1e-12) })
}
