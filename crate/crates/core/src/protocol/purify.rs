use super::{Party, ProtocolSpec};
use crate::error::Result;
use crate::linalg::{embed, Operation, RegisterLayout};

fn labels(l: &RegisterLayout) -> Vec<String> {
    l.labels().map(String::from).collect()
}

/// Replaces `party`'s operations by isometries. Round k's Stinespring
/// environment becomes a register `Abar{k}` (`Bbar{k}` for B) that the party
/// keeps for the rest of the run, so its memory at round k is the honest
/// memory followed by the environments of rounds 1..=k. Isometric rounds
/// get an environment of dimension 1.
pub fn purify_party(spec: &ProtocolSpec, party: Party) -> Result<ProtocolSpec> {
    let s = spec.rounds();
    let mut used = spec.labels();
    let mut env = RegisterLayout::empty();
    let mut memory = vec![spec.memory(party)[0].clone()];
    let mut ops: Vec<Operation> = Vec::with_capacity(s);
    for k in 1..=s {
        let op = &spec.ops(party)[k - 1];
        let mut label = format!("{}bar{k}", party);
        while used.contains(&label) {
            label.push('\'');
        }
        used.insert(label.clone());
        let dilated = op.dilate(&label)?;
        let honest_mem = &spec.memory(party)[k];
        let honest_prev = &spec.memory(party)[k - 1];
        // incoming message (if any) and outgoing message (if any)
        let (incoming, outgoing) = match party {
            Party::A => (if k > 1 { Some(spec.y_space(k - 1)) } else { None }, Some(spec.x_space(k))),
            Party::B => (Some(spec.x_space(k)), if k < s { Some(spec.y_space(k)) } else { None }),
        };
        let mut in_target = labels(honest_prev);
        in_target.extend(labels(&env));
        if let Some(m) = incoming {
            in_target.extend(labels(m));
        }
        let mut out_target = labels(honest_mem);
        out_target.extend(labels(&env));
        out_target.push(label.clone());
        if let Some(m) = outgoing {
            out_target.extend(labels(m));
        }
        let v = embed(&dilated, &env, &in_target, &out_target)?;
        env.push(label, dilated.output_layout().registers().last().expect("env").dim)?;
        memory.push(honest_mem.concat(&env)?);
        ops.push(v.into());
    }
    spec.with_party(party, memory, ops)
}
