use rand::Rng;

use super::ProtocolSpec;
use crate::error::{Error, Result};
use crate::linalg::{haar_matrix, rng_from_seed, Isometry, Operation, RegisterLayout};

/// Largest single-operation dimension the generator will draw a Haar
/// unitary for.
const MAX_OP_QUBITS: usize = 8;

/// Fully unitary s-round protocol whose messages carry `budget` qubits in
/// total, split at random over the 2s-1 messages. Memories are single
/// registers `a{k}` / `b{k}`, messages `x{k}` / `y{k}`; every operation is
/// a Haar unitary. Deterministic in `seed`.
pub fn random_protocol(seed: u64, s: usize, budget: usize) -> Result<ProtocolSpec> {
    if s == 0 {
        return Err(Error::OutOfRange("a protocol needs at least one round".into()));
    }
    let mut rng = rng_from_seed(seed);
    let n_msgs = 2 * s - 1;
    // qubits per message in send order: x1, y1, x2, ..., xs
    let mut q = vec![0usize; n_msgs];
    for _ in 0..budget {
        q[rng.random_range(0..n_msgs)] += 1;
    }
    let xq = |k: usize| q[2 * (k - 1)];
    let yq = |k: usize| if k < s { q[2 * k - 1] } else { 0 };
    // memory qubits: a_k = a_{k-1} + y_{k-1} - x_k must stay >= 0
    let deficit = |first: &dyn Fn(usize) -> usize, second: &dyn Fn(usize) -> usize| {
        let mut run: i64 = 0;
        let mut worst: i64 = 0;
        for k in 1..=s {
            run += first(k) as i64 - second(k) as i64;
            worst = worst.max(run);
        }
        worst as usize
    };
    let a0 = deficit(&xq, &|k| if k > 1 { yq(k - 1) } else { 0 }).max(1);
    let b0 = deficit(&yq, &xq).max(1);
    let mut a_q = vec![a0];
    let mut b_q = vec![b0];
    for k in 1..=s {
        let ya = if k > 1 { yq(k - 1) } else { 0 };
        a_q.push(a_q[k - 1] + ya - xq(k));
        b_q.push(b_q[k - 1] + xq(k) - yq(k));
    }
    let reg = |name: String, qubits: usize| RegisterLayout::single(name, 1 << qubits);
    let a: Vec<_> = (0..=s).map(|k| reg(format!("a{k}"), a_q[k])).collect::<Result<_>>()?;
    let b: Vec<_> = (0..=s).map(|k| reg(format!("b{k}"), b_q[k])).collect::<Result<_>>()?;
    let x: Vec<_> = (1..=s).map(|k| reg(format!("x{k}"), xq(k))).collect::<Result<_>>()?;
    let y: Vec<_> = (1..s).map(|k| reg(format!("y{k}"), yq(k))).collect::<Result<_>>()?;
    let mut a_ops: Vec<Operation> = Vec::new();
    let mut b_ops: Vec<Operation> = Vec::new();
    for k in 1..=s {
        let a_in = if k == 1 { a[0].clone() } else { a[k - 1].concat(&y[k - 2])? };
        let a_out = a[k].concat(&x[k - 1])?;
        a_ops.push(haar_op(a_in, a_out, &mut rng)?);
        let b_in = b[k - 1].concat(&x[k - 1])?;
        let b_out = if k < s { b[k].concat(&y[k - 1])? } else { b[s].clone() };
        b_ops.push(haar_op(b_in, b_out, &mut rng)?);
    }
    ProtocolSpec::new(a, b, x, y, a_ops, b_ops)
}

fn haar_op<R: Rng>(input: RegisterLayout, output: RegisterLayout, rng: &mut R) -> Result<Operation> {
    let d = input.total_dim();
    debug_assert_eq!(d, output.total_dim());
    if d > 1 << MAX_OP_QUBITS {
        return Err(Error::OutOfRange(format!("operation dimension {d} too large for the generator")));
    }
    Ok(Isometry::from_parts(input, output, haar_matrix(d, rng)).into())
}
