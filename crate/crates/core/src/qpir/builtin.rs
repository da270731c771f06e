use nalgebra::DMatrix;
use rand::Rng;

use super::{bit, correctness_delta, QpirProtocol};
use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::linalg::{haar_matrix, hermitian_eig, gaussian_matrix, rng_from_seed, Isometry, KrausChannel, Operation, RegisterLayout, C64, ONE, ZERO};
use crate::protocol::ProtocolSpec;

pub const BUILTIN_NAMES: &[&str] = &["trivial", "index-in-clear", "noisy-trivial", "random"];

#[derive(Clone, Debug)]
pub struct BuiltinParams {
    /// target correctness error for noisy-trivial, in [0, 1/2]
    pub delta: Option<f64>,
    pub seed: u64,
    /// rounds for the random protocol
    pub rounds: usize,
    /// client leak angle for the random protocol (default: drawn from seed)
    pub leak: Option<f64>,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        BuiltinParams { delta: None, seed: 0, rounds: 2, leak: None }
    }
}

pub fn builtin(name: &str, n: usize, params: &BuiltinParams, cfg: &LabConfig) -> Result<QpirProtocol> {
    if n == 0 {
        return Err(Error::Param("n must be at least 1".into()));
    }
    if n > 16 {
        return Err(Error::Param(format!("n = {n} is beyond desk scale (max 16)")));
    }
    match name {
        "trivial" | "trivial-qpir" => QpirProtocol::new(trivial(n, None)?, format!("trivial(n={n})")),
        "index-in-clear" => QpirProtocol::new(index_in_clear(n)?, format!("index-in-clear(n={n})")),
        "noisy-trivial" => {
            let delta = params.delta.ok_or_else(|| Error::Param("noisy-trivial needs delta".into()))?;
            noisy_trivial(n, delta, cfg)
        }
        "random" | "random-qpir" => {
            let spec = random_qpir(n, params.seed, params.rounds, params.leak)?;
            QpirProtocol::new(spec, format!("random(n={n},seed={},rounds={})", params.seed, params.rounds))
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn reg(label: &str, dim: usize) -> Result<RegisterLayout> {
    RegisterLayout::single(label, dim)
}

fn layouts(parts: &[(&str, usize)]) -> Result<RegisterLayout> {
    RegisterLayout::new(parts.iter().map(|&(l, d)| (l, d)))
}

/// |v> -> |v>|v>
fn copy_matrix(d: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(d * d, d, ZERO);
    for v in 0..d {
        m[(v * d + v, v)] = ONE;
    }
    m
}

/// Server copies the database into the single message; the client keeps it.
/// With `client` given, that channel replaces the client's identity.
fn trivial(n: usize, client: Option<KrausChannel>) -> Result<ProtocolSpec> {
    let big = 1usize << n;
    let db = reg("db", big)?;
    let idx = reg("idx", n)?;
    let x1 = reg("x1", big)?;
    let b1 = idx.concat(&x1)?;
    let a_op: Operation = Isometry::from_parts(db.clone(), db.concat(&x1)?, copy_matrix(big)).into();
    let b_op: Operation = match client {
        Some(ch) => ch.into(),
        None => Isometry::identity(b1.clone()).into(),
    };
    ProtocolSpec::new(vec![db.clone(), db], vec![idx, b1], vec![x1], vec![], vec![a_op], vec![b_op])
}

/// Client sends i in the clear; server answers with x_i and keeps the query.
fn index_in_clear(n: usize) -> Result<ProtocolSpec> {
    let big = 1usize << n;
    let db = reg("db", big)?;
    let idx = reg("idx", n)?;
    let x1 = reg("x1", 1)?;
    let y1 = reg("y1", n)?;
    let x2 = reg("x2", 2)?;
    let a2 = layouts(&[("db", big), ("q", n)])?;
    let b2 = idx.concat(&x2)?;
    let a1: Operation = Isometry::relabel(db.clone(), db.concat(&x1)?)?.into();
    let b1: Operation = Isometry::from_parts(idx.concat(&x1)?, idx.concat(&y1)?, copy_matrix(n)).into();
    let mut answer = DMatrix::from_element(big * n * 2, big * n, ZERO);
    for x in 0..big {
        for i in 0..n {
            let col = x * n + i;
            answer[(col * 2 + bit(x as u64, i + 1, n) as usize, col)] = ONE;
        }
    }
    let a2_op: Operation = Isometry::from_parts(db.concat(&y1)?, a2.concat(&x2)?, answer).into();
    let b2_op: Operation = Isometry::identity(b2.clone()).into();
    ProtocolSpec::new(vec![db.clone(), db, a2], vec![idx.clone(), idx, b2], vec![x1, x2], vec![y1], vec![a1, a2_op], vec![b1, b2_op])
}

/// Depolarizing channel (1-p) rho + p I/d via the d^2 Weyl operators,
/// tensored after the identity on the index register.
fn client_depolarizing(n: usize, p: f64) -> Result<KrausChannel> {
    let d = 1usize << n;
    let layout = layouts(&[("idx", n), ("x1", d)])?;
    let id = DMatrix::<C64>::identity(n, n);
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let w = if a == 0 && b == 0 { (1.0 - p + p / (d * d) as f64).sqrt() } else { (p / (d * d) as f64).sqrt() };
            if w == 0.0 {
                continue;
            }
            let mut k = DMatrix::from_element(d, d, ZERO);
            for j in 0..d {
                let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (b * j) as f64 / d as f64);
                k[((j + a) % d, j)] = phase * w;
            }
            ops.push(id.kronecker(&k));
        }
    }
    KrausChannel::new(layout.clone(), layout, ops)
}

/// Trivial protocol followed by client-side depolarizing noise tuned so the
/// measured correctness error equals `delta` (to 1e-9).
fn noisy_trivial(n: usize, delta: f64, cfg: &LabConfig) -> Result<QpirProtocol> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::Param(format!("delta {delta} not in [0, 1/2]")));
    }
    let name = format!("noisy-trivial(n={n},delta={delta})");
    let eval = |p: f64| -> Result<(QpirProtocol, f64)> {
        let q = QpirProtocol::new(trivial(n, Some(client_depolarizing(n, p)?))?, name.clone())?;
        let d = correctness_delta(&q, cfg)?.max;
        Ok((q, d - delta))
    };
    // regula falsi on [0, 1]; the error is affine in p, so this settles fast
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut f_lo, mut f_hi) = (-delta, 0.5 - delta);
    let (q0, f0) = eval(lo)?;
    if f0.abs() <= 1e-9 {
        return Ok(q0);
    }
    let mut best = q0;
    for _ in 0..40 {
        let p = if f_hi == f_lo { 0.5 * (lo + hi) } else { lo - f_lo * (hi - lo) / (f_hi - f_lo) };
        let (q, f) = eval(p)?;
        best = q;
        if f.abs() <= 1e-9 {
            return Ok(best);
        }
        if f < 0.0 {
            lo = p;
            f_lo = f;
        } else {
            hi = p;
            f_hi = f;
        }
    }
    Ok(best)
}

fn exp_i_hermitian(h: &DMatrix<C64>, theta: f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eig(h);
    let mut scaled = vecs.clone();
    for (k, l) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, theta * l);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Random Hermitian matrix with spectral norm 1.
fn unit_hermitian<R: Rng>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = gaussian_matrix(d, d, rng);
    let h = (&g + g.adjoint()).unscale(2.0);
    let (vals, _) = hermitian_eig(&h);
    let norm = vals.iter().map(|l| l.abs()).fold(0.0, f64::max);
    h.unscale(norm)
}

/// Block-diagonal controlled unitary sum_c |c><c| (x) U_c, keeping only the
/// columns listed in `cols` of each block (so |m>|0> inputs become isometries).
fn controlled(blocks: &[DMatrix<C64>], cols: &[usize]) -> DMatrix<C64> {
    let d = blocks[0].nrows();
    let w = cols.len();
    let mut m = DMatrix::from_element(blocks.len() * d, blocks.len() * w, ZERO);
    for (c, u) in blocks.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            for r in 0..d {
                m[(c * d + r, c * w + jj)] = u[(r, j)];
            }
        }
    }
    m
}

/// Unitary rounds with one-qubit messages. The server keeps the database in
/// the computational basis and applies database-controlled Haar unitaries to
/// a work qubit and the message; the client applies index-dependent
/// unitaries W_i = exp(i theta H_i) W, so its messages leak at most
/// 2 theta each about i, and a final index-controlled Haar unitary.
fn random_qpir(n: usize, seed: u64, s: usize, leak: Option<f64>) -> Result<ProtocolSpec> {
    if s == 0 {
        return Err(Error::Param("rounds must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let theta_max = if s > 1 { 0.3 / (s - 1) as f64 } else { 0.0 };
    let theta = match leak {
        Some(t) if !(0.0..=theta_max.max(0.0) + 1e-12).contains(&t) => {
            return Err(Error::Param(format!("leak {t} not in [0, {theta_max}]")))
        }
        Some(t) => t,
        None => rng.random_range(0.0..=theta_max),
    };
    let big = 1usize << n;
    let db = reg("db", big)?;
    let idx = reg("idx", n)?;
    let x: Vec<RegisterLayout> = (1..=s).map(|k| reg(&format!("x{k}"), 2)).collect::<Result<_>>()?;
    let y: Vec<RegisterLayout> = (1..s).map(|k| reg(&format!("y{k}"), 2)).collect::<Result<_>>()?;
    let a_mem = layouts(&[("db", big), ("w", 2)])?;
    let b_mem = layouts(&[("idx", n), ("v", 2)])?;
    let mut a = vec![db.clone()];
    let mut b = vec![idx.clone()];
    for k in 1..=s {
        a.push(a_mem.clone());
        b.push(if k < s { b_mem.clone() } else { b[k - 1].concat(&x[k - 1])? });
    }
    let mut a_ops: Vec<Operation> = Vec::new();
    let mut b_ops: Vec<Operation> = Vec::new();
    for k in 1..=s {
        let server: Vec<DMatrix<C64>> = (0..big).map(|_| haar_matrix(4, &mut rng)).collect();
        let (a_in, m) = if k == 1 {
            (db.clone(), controlled(&server, &[0]))
        } else {
            (a_mem.concat(&y[k - 2])?, controlled(&server, &[0, 1, 2, 3]))
        };
        a_ops.push(Isometry::from_parts(a_in, a_mem.concat(&x[k - 1])?, m).into());

        let b_in = b[k - 1].concat(&x[k - 1])?;
        if k < s {
            let shared = haar_matrix(4, &mut rng);
            let client: Vec<DMatrix<C64>> =
                (0..n).map(|_| exp_i_hermitian(&unit_hermitian(4, &mut rng), theta) * &shared).collect();
            // first round: |i>|m> -> |i> W_i(|m>|0>); later: full unitary on (v, x_k)
            let cols: &[usize] = if k == 1 { &[0, 2] } else { &[0, 1, 2, 3] };
            b_ops.push(Isometry::from_parts(b_in, b_mem.concat(&y[k - 1])?, controlled(&client, cols)).into());
        } else {
            let dim = b_in.total_dim() / n;
            let last: Vec<DMatrix<C64>> = (0..n).map(|_| haar_matrix(dim, &mut rng)).collect();
            let cols: Vec<usize> = (0..dim).collect();
            b_ops.push(Isometry::from_parts(b_in, b[s].clone(), controlled(&last, &cols)).into());
        }
    }
    ProtocolSpec::new(a, b, x, y, a_ops, b_ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_communication() {
        let cfg = LabConfig::sequential();
        let p = BuiltinParams::default();
        assert_eq!(builtin("trivial", 6, &p, &cfg).unwrap().communication(), 6.0);
        assert_eq!(builtin("index-in-clear", 4, &p, &cfg).unwrap().communication(), 3.0);
        for s in 1..=3 {
            let p = BuiltinParams { rounds: s, seed: 3, ..Default::default() };
            let q = builtin("random", 3, &p, &cfg).unwrap();
            assert_eq!(q.communication(), (2 * s - 1) as f64);
        }
        assert!(matches!(builtin("nope", 2, &p, &cfg), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn depolarizing_is_trace_preserving() {
        for p in [0.0, 0.3, 1.0] {
            client_depolarizing(2, p).unwrap();
        }
    }
}
