//! From a QPIR protocol to a random access encoding.
//!
//! Both parties are purified. Running the purified protocol on the uniform
//! database superposition with index i gives a pure state |nu_i> over the
//! server registers S and the client registers C. The client side of
//! |nu_1> is Schmidt-compressed; the codeword for database x is the
//! compressed client state of the run on |x>|1>. To read bit i the decoder
//! decompresses, applies the Uhlmann map taking |nu_1> closest to |nu_i>,
//! and performs the client's index-i Helstrom measurement.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::linalg::{
    binary_entropy, matricize, schmidt_compressor, thin_factor, uhlmann_map, Isometry, QuantumState, RegisterLayout,
    StateVector, C64,
};
use crate::protocol::{execute, purify_party, Party, ProtocolSpec};
use crate::qpir::{bit, correctness_delta, privacy_from_marginals, CorrectnessReport, PrivacyReport, QpirProtocol};

/// Tolerance for the end-of-pipeline checks (guarantee, Nayak, bound).
pub const CHECK_TOL: f64 = 1e-6;
/// Tolerance for a branch's client side lying in the compressed support.
pub const SUPPORT_TOL: f64 = 1e-8;

fn labels(l: &RegisterLayout) -> Vec<String> {
    l.labels().map(String::from).collect()
}

/// The protocol with both parties purified, so every run from a pure input
/// ends in a pure state over server ++ client registers.
#[derive(Clone, Debug)]
pub struct PurifiedQpir {
    qpir: QpirProtocol,
    spec: ProtocolSpec,
    server: Vec<String>,
    client: Vec<String>,
}

impl PurifiedQpir {
    pub fn new(qpir: &QpirProtocol) -> Result<Self> {
        let spec = purify_party(&purify_party(qpir.spec(), Party::A)?, Party::B)?;
        let s = spec.rounds();
        let server = labels(spec.a_space(s));
        let client = labels(spec.b_space(s));
        Ok(PurifiedQpir { qpir: qpir.clone(), spec, server, client })
    }

    pub fn qpir(&self) -> &QpirProtocol {
        &self.qpir
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn server_labels(&self) -> &[String] {
        &self.server
    }

    pub fn client_labels(&self) -> &[String] {
        &self.client
    }

    pub fn run(&self, input: &StateVector, cfg: &LabConfig) -> Result<StateVector> {
        let t = execute(&self.spec, &QuantumState::from(input), cfg)?;
        t.final_state()
            .as_pure()
            .ok_or_else(|| Error::InvalidState("purified run ended in a mixed state".into()))
    }

    /// |psi_{x,i}>: the run on |x>|i>.
    pub fn branch(&self, x: u64, i: usize, cfg: &LabConfig) -> Result<StateVector> {
        self.run(&self.qpir.input(x, i)?, cfg)
    }

    /// |nu_i>: the run on the uniform database superposition with index i.
    pub fn nu(&self, i: usize, cfg: &LabConfig) -> Result<StateVector> {
        self.run(&self.qpir.superposition_input(i)?, cfg)
    }

    /// Server's reduced state of |nu_i>, registers in server order.
    pub fn server_marginal(&self, nu: &StateVector) -> Result<QuantumState> {
        QuantumState::from(nu).marginal_factor(&self.server)?.reorder(&self.server)
    }
}

pub fn nu_state(q: &QpirProtocol, i: usize, cfg: &LabConfig) -> Result<StateVector> {
    PurifiedQpir::new(q)?.nu(i, cfg)
}

/// Index-i decoder expressed on the compressed register: outcome "x_i = 0"
/// has effect `effect0`, outcome 1 has I - effect0.
#[derive(Clone, Debug, Serialize)]
pub struct Decoder {
    pub index: usize,
    /// F(server marginal of nu_1, server marginal of nu_i)
    pub uhlmann_fidelity: f64,
    /// D((1 (x) U)|nu_1>, |nu_i>) = sqrt(1 - F^2)
    pub uhlmann_distance: f64,
    #[serde(skip)]
    pub effect0: DMatrix<C64>,
}

#[derive(Clone, Debug)]
pub struct RandomAccessEncoding {
    pub n: usize,
    /// log2 of the compressed dimension
    pub m: f64,
    pub m_qubits: u32,
    pub compressed: RegisterLayout,
    /// compressed register -> client registers
    pub decompressor: Isometry,
    /// entry x: thin factor of the codeword on the compressed register
    pub codewords: Vec<QuantumState>,
    pub decoders: Vec<Decoder>,
    /// largest ||M_x - V V^dagger M_x|| over databases x
    pub support_residual: f64,
}

impl RandomAccessEncoding {
    pub fn encode(&self, x: u64) -> Result<&QuantumState> {
        self.codewords
            .get(x as usize)
            .ok_or_else(|| Error::OutOfRange(format!("database {x} has more than {} bits", self.n)))
    }

    fn decoder(&self, i: usize) -> Result<&Decoder> {
        if !(1..=self.n).contains(&i) {
            return Err(Error::OutOfRange(format!("index {i} not in 1..={}", self.n)));
        }
        Ok(&self.decoders[i - 1])
    }

    /// Pr[decoder i outputs 0] on a codeword.
    pub fn outcome_zero(&self, codeword: &QuantumState, i: usize) -> Result<f64> {
        let d = self.decoder(i)?;
        let f = codeword.factor();
        if f.nrows() != d.effect0.nrows() {
            return Err(Error::LayoutMismatch {
                expected: self.compressed.to_string(),
                found: codeword.layout().to_string(),
            });
        }
        Ok((f.adjoint() * &d.effect0 * f).trace().re.clamp(0.0, 1.0))
    }

    /// Pr[decoder i outputs x_i] on the codeword of x.
    pub fn decode_bit(&self, x: u64, i: usize) -> Result<f64> {
        let p0 = self.outcome_zero(self.encode(x)?, i)?;
        Ok(if bit(x, i, self.n) == 0 { p0 } else { 1.0 - p0 })
    }

    /// Recovery probability of bit i averaged over uniform x.
    pub fn success_probability(&self, i: usize) -> Result<f64> {
        let total: f64 = (0..self.codewords.len() as u64).map(|x| self.decode_bit(x, i)).sum::<Result<f64>>()?;
        Ok(total / self.codewords.len() as f64)
    }

    pub fn recovery(&self) -> Result<Vec<f64>> {
        (1..=self.n).map(|i| self.success_probability(i)).collect()
    }
}

/// Rows of `g` (over `layout`) regrouped as (front registers, rest).
fn regroup(g: &DMatrix<C64>, layout: &RegisterLayout, front: &[String]) -> Result<DMatrix<C64>> {
    let rest: Vec<String> = layout.labels().filter(|l| !front.contains(&l.to_string())).map(String::from).collect();
    let order: Vec<String> = front.iter().chain(&rest).cloned().collect();
    Ok(QuantumState::from_parts(layout.clone(), g.clone()).reorder(&order)?.factor().clone())
}

/// Builds the encoding from precomputed pieces: the client's Helstrom
/// measurements and the reference states nu_1..nu_n.
fn assemble(p: &PurifiedQpir, correctness: &CorrectnessReport, nus: &[StateVector], cfg: &LabConfig) -> Result<RandomAccessEncoding> {
    let q = p.qpir();
    let n = q.n();
    let client = p.client_labels();
    let decompressor = schmidt_compressor(&nus[0], client, cfg.rank_tol, "c")?;
    let v = decompressor.matrix();
    let c_layout = decompressor.output_layout().clone();
    let r = v.ncols();

    let xs: Vec<u64> = (0..q.database_count()).collect();
    let per_x = cfg.exec.try_map(xs, |x| -> Result<(QuantumState, f64)> {
        let (_, _, m) = matricize(&p.branch(x, 1, cfg)?, client)?;
        let nx = v.adjoint() * &m;
        let residual = (&m - v * &nx).norm();
        let f = thin_factor(&nx);
        let f = if f.ncols() == 0 { DMatrix::from_element(r, 1, C64::new(0.0, 0.0)) } else { f };
        Ok((QuantumState::from_parts(decompressor.input_layout().clone(), f), residual))
    })?;
    let support_residual = per_x.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    if support_residual > SUPPORT_TOL {
        let x = per_x.iter().position(|(_, e)| *e == support_residual).unwrap_or(0) as u64;
        return Err(Error::SupportViolation { x, residual: support_residual });
    }
    let codewords = per_x.into_iter().map(|(c, _)| c).collect();

    let out = labels(q.client_output());
    let decoders = cfg.exec.try_map_range(1..n + 1, |i| -> Result<Decoder> {
        let u = uhlmann_map(&nus[i - 1], &nus[0], client, cfg.rank_tol)?;
        let g = u.map_columns(v);
        let g = regroup(&g, &c_layout, &out)?;
        let z = &correctness.measurements[i - 1].basis;
        let d_out = z.nrows();
        let d_env = g.nrows() / d_out;
        let mut effect0 = DMatrix::from_element(r, r, C64::new(0.0, 0.0));
        // rows of g are (out, env) row-major: block e holds rows a * d_env + e
        for e in 0..d_env {
            let block = DMatrix::from_fn(d_out, r, |a, b| g[(a * d_env + e, b)]);
            let h = z.adjoint() * block;
            effect0 += h.adjoint() * h;
        }
        let fid = u.fidelity.clamp(0.0, 1.0);
        Ok(Decoder { index: i, uhlmann_fidelity: fid, uhlmann_distance: pure_distance(&nus[i - 1], &u.apply(&nus[0])?)?, effect0 })
    })?;

    let m = (r as f64).log2();
    Ok(RandomAccessEncoding {
        n,
        m,
        m_qubits: m.ceil() as u32,
        compressed: decompressor.input_layout().clone(),
        decompressor,
        codewords,
        decoders,
        support_residual,
    })
}

/// sqrt(1 - |<a|b>|^2) from the phase-aligned difference: with
/// t = ||a - e^{i arg<a|b>} b||^2 / 2 = 1 - |<a|b>|, the distance is
/// sqrt(t (2 - t)), which stays accurate when the states nearly coincide.
fn pure_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    let c = a.inner(b)?;
    let phase = if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    let t = 0.5 * (a.amplitudes() - b.amplitudes() * phase).norm_squared();
    Ok((t * (2.0 - t)).clamp(0.0, 1.0).sqrt())
}

pub fn build_rae(q: &QpirProtocol, cfg: &LabConfig) -> Result<RandomAccessEncoding> {
    let p = PurifiedQpir::new(q)?;
    let correctness = correctness_delta(q, cfg)?;
    let nus = cfg.exec.try_map_range(1..q.n() + 1, |i| p.nu(i, cfg))?;
    assemble(&p, &correctness, &nus, cfg)
}

/// 2 sqrt(e (1 - e)) on [0, 1/2] and 1 beyond: the distance bound with the
/// non-monotone tail replaced by the trivial bound.
pub fn effective_distance(epsilon: f64) -> f64 {
    if epsilon <= 0.5 {
        2.0 * (epsilon * (1.0 - epsilon)).max(0.0).sqrt()
    } else {
        1.0
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LowerBound {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// 1 - delta - 2 sqrt(epsilon (1 - epsilon))
    pub argument: f64,
    /// (1 - H_bin(argument)) n, or 0 when the argument is below 1/2
    pub value: f64,
    pub vacuous: bool,
    /// argument with the distance term replaced by effective_distance
    pub effective_argument: f64,
    pub effective_value: f64,
}

fn bound_at(n: usize, arg: f64) -> Result<f64> {
    let a = arg.clamp(0.0, 1.0);
    Ok(if a < 0.5 { 0.0 } else { (1.0 - binary_entropy(a)?) * n as f64 })
}

/// Communication lower bound for a protocol with correctness error delta
/// and privacy epsilon.
pub fn lower_bound(n: usize, delta: f64, epsilon: f64) -> Result<LowerBound> {
    for (name, v) in [("delta", delta), ("epsilon", epsilon)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!("{name} = {v} not in [0, 1]")));
        }
    }
    let argument = 1.0 - delta - 2.0 * (epsilon * (1.0 - epsilon)).sqrt();
    let effective_argument = 1.0 - delta - effective_distance(epsilon);
    Ok(LowerBound {
        n,
        delta,
        epsilon,
        argument,
        value: bound_at(n, argument)?,
        vacuous: argument < 0.5,
        effective_argument,
        effective_value: bound_at(n, effective_argument)?,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NayakCheck {
    pub n: usize,
    pub m: f64,
    pub p: f64,
    /// (1 - H_bin(p)) n, 0 when p < 1/2
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Does an (n, m, p) random access encoding respect m >= (1 - H_bin(p)) n?
pub fn nayak_check(n: usize, m: f64, p: f64) -> Result<NayakCheck> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} not in [0, 1]")));
    }
    let bound = bound_at(n, p)?;
    let slack = m - bound;
    Ok(NayakCheck { n, m, p, bound, slack, holds: slack >= -CHECK_TOL })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    /// every check passes and the bound is binding
    Holds,
    /// checks pass but the guarantee is below 1/2
    NonBinding,
    /// communication below n, explained by a failed privacy premise
    ConsistentNonPrivate,
    /// a check failed
    Violated,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        self == Verdict::Violated
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "HOLDS",
            Verdict::NonBinding => "NON-BINDING",
            Verdict::ConsistentNonPrivate => "CONSISTENT-NON-PRIVATE",
            Verdict::Violated => "VIOLATED",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub protocol: String,
    pub n: usize,
    pub c: f64,
    pub m: f64,
    pub m_qubits: u32,
    /// max over i of the per-index correctness error
    pub delta_hat: f64,
    pub delta_mean: f64,
    pub delta_per_index: Vec<f64>,
    /// replay-index-1 privacy, the value fed into the guarantee
    pub epsilon_hat: f64,
    /// best replay reference
    pub epsilon_hat_min: f64,
    pub pairwise_lower: f64,
    /// min over i of the average recovery probability
    pub p_hat: f64,
    pub p_hat_mean: f64,
    pub recovery_per_index: Vec<f64>,
    pub uhlmann_distance: Vec<f64>,
    /// 1 - delta - 2 sqrt(epsilon (1 - epsilon))
    pub guarantee: f64,
    pub effective_guarantee: f64,
    pub guarantee_met: bool,
    pub bound: LowerBound,
    pub nayak: NayakCheck,
    pub support_residual: f64,
    pub premise_failure: Option<String>,
    pub failures: Vec<String>,
    pub verdict: Verdict,
}

/// Full pipeline: measure correctness and privacy, build the encoding,
/// measure its recovery, and audit everything against the bounds.
pub fn reduce(q: &QpirProtocol, cfg: &LabConfig) -> Result<BoundReport> {
    let p = PurifiedQpir::new(q)?;
    let correctness = correctness_delta(q, cfg)?;
    let nus = cfg.exec.try_map_range(1..q.n() + 1, |i| p.nu(i, cfg))?;
    let sigmas = nus.iter().map(|nu| p.server_marginal(nu)).collect::<Result<Vec<_>>>()?;
    let privacy = privacy_from_marginals(&sigmas)?;
    let rae = assemble(&p, &correctness, &nus, cfg)?;
    let recovery = rae.recovery()?;
    Ok(audit(q, &correctness, &privacy, &rae, recovery))
}

/// Names the premise that pushes the recovery guarantee below 1/2.
fn premise(delta: f64, epsilon: f64, guarantee: f64) -> String {
    let which = if delta > 0.5 {
        format!("correctness: delta_hat = {delta}")
    } else if effective_distance(epsilon) > 0.5 {
        format!("privacy: epsilon_hat = {epsilon}")
    } else {
        format!("correctness and privacy together: delta_hat = {delta}, epsilon_hat = {epsilon}")
    };
    // keep roundoff from printing as -0.000000
    let guarantee = if guarantee.abs() < 5e-7 { 0.0 } else { guarantee };
    format!("{which} leaves the recovery guarantee {guarantee:.6} below 1/2")
}

fn audit(q: &QpirProtocol, cor: &CorrectnessReport, pri: &PrivacyReport, rae: &RandomAccessEncoding, recovery: Vec<f64>) -> BoundReport {
    let n = q.n();
    let c = q.communication();
    let delta = cor.max.clamp(0.0, 1.0);
    let epsilon = pri.epsilon_hat_ref1.clamp(0.0, 1.0);
    let p_hat = recovery.iter().copied().fold(1.0, f64::min);
    let p_mean = recovery.iter().sum::<f64>() / n as f64;
    let bound = lower_bound(n, delta, epsilon).expect("clamped inputs");
    let nayak = nayak_check(n, rae.m, p_hat.clamp(0.0, 1.0)).expect("clamped p");
    let guarantee = bound.argument;
    let effective_guarantee = bound.effective_argument;

    let mut failures = Vec::new();
    let guarantee_met = p_hat >= effective_guarantee - CHECK_TOL;
    if !guarantee_met {
        failures.push(format!("recovery {p_hat} below guarantee {effective_guarantee}"));
    }
    if !nayak.holds {
        failures.push(format!("encoding with m = {} and p = {p_hat} breaks the Nayak bound {}", rae.m, nayak.bound));
    }
    if rae.m > c + 1e-9 {
        failures.push(format!("compressed size {} exceeds communication {c}", rae.m));
    }
    if c < bound.effective_value - CHECK_TOL {
        failures.push(format!("communication {c} below lower bound {}", bound.effective_value));
    }
    let premise_failure = (effective_guarantee < 0.5).then(|| premise(delta, epsilon, effective_guarantee));
    let verdict = if !failures.is_empty() {
        Verdict::Violated
    } else if premise_failure.is_none() {
        Verdict::Holds
    } else if c < n as f64 {
        Verdict::ConsistentNonPrivate
    } else {
        Verdict::NonBinding
    };
    BoundReport {
        protocol: q.name().to_string(),
        n,
        c,
        m: rae.m,
        m_qubits: rae.m_qubits,
        delta_hat: delta,
        delta_mean: cor.mean,
        delta_per_index: cor.per_index.clone(),
        epsilon_hat: epsilon,
        epsilon_hat_min: pri.epsilon_hat,
        pairwise_lower: pri.pairwise_lower,
        p_hat,
        p_hat_mean: p_mean,
        recovery_per_index: recovery,
        uhlmann_distance: rae.decoders.iter().map(|d| d.uhlmann_distance).collect(),
        guarantee,
        effective_guarantee,
        guarantee_met,
        bound,
        nayak,
        support_residual: rae.support_residual,
        premise_failure,
        failures,
        verdict,
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum AttackVerdict {
    Private,
    Leaky,
    NotPrivate,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub protocol: String,
    pub n: usize,
    pub c: f64,
    /// D(server state at i, server state at j)
    pub pairwise: Vec<Vec<f64>>,
    pub max_distance: f64,
    /// best probability of telling the most distinguishable pair apart
    pub guess_probability: f64,
    pub delta_hat: f64,
    pub epsilon_hat: f64,
    pub bound: LowerBound,
    pub premise_failure: Option<String>,
    /// communication below n is explained by missing privacy
    pub consistent_because_non_private: bool,
    pub verdict: AttackVerdict,
}

/// Server runs its purified strategy on the uniform database superposition
/// and tries to tell indices apart from its final registers.
pub fn superposition_attack(q: &QpirProtocol, cfg: &LabConfig) -> Result<AttackReport> {
    let spec = purify_party(q.spec(), Party::A)?;
    let server = labels(spec.a_space(spec.rounds()));
    let sigmas = cfg.exec.try_map_range(1..q.n() + 1, |i| -> Result<QuantumState> {
        let t = execute(&spec, &QuantumState::from(&q.superposition_input(i)?), cfg)?;
        t.final_state().marginal_factor(&server)?.reorder(&server)
    })?;
    let pri = privacy_from_marginals(&sigmas)?;
    let cor = correctness_delta(q, cfg)?;
    let max_distance = 2.0 * pri.pairwise_lower;
    let epsilon = pri.epsilon_hat_ref1.clamp(0.0, 1.0);
    let bound = lower_bound(q.n(), cor.max.clamp(0.0, 1.0), epsilon)?;
    let verdict = if max_distance <= 1e-9 {
        AttackVerdict::Private
    } else if max_distance >= 1.0 - 1e-9 {
        AttackVerdict::NotPrivate
    } else {
        AttackVerdict::Leaky
    };
    let premise_failure =
        (bound.effective_argument < 0.5).then(|| premise(bound.delta, epsilon, bound.effective_argument));
    let c = q.communication();
    Ok(AttackReport {
        protocol: q.name().to_string(),
        n: q.n(),
        c,
        consistent_because_non_private: c < q.n() as f64 && premise_failure.is_some(),
        pairwise: pri.pairwise,
        max_distance,
        guess_probability: 0.5 + 0.5 * max_distance,
        delta_hat: cor.max,
        epsilon_hat: epsilon,
        bound,
        premise_failure,
        verdict,
    })
}

/// ||nu_i - 2^{-n/2} sum_x psi_{x,i}||, the linearity residual.
pub fn linearity_residual(p: &PurifiedQpir, i: usize, cfg: &LabConfig) -> Result<f64> {
    let nu = p.nu(i, cfg)?;
    let count = p.qpir().database_count();
    let mut sum = DVector::from_element(nu.amplitudes().len(), C64::new(0.0, 0.0));
    let order: Vec<String> = labels(nu.layout());
    for x in 0..count {
        let b = p.branch(x, i, cfg)?;
        let b = QuantumState::from(&b).reorder(&order)?;
        sum += b.factor().column(0);
    }
    sum.unscale_mut((count as f64).sqrt());
    Ok((nu.amplitudes() - sum).norm())
}
