use proptest::prelude::*;

use qpirlab::linalg::{haar_random_unitary, DMatrix, Isometry, KrausChannel, Operation, C64};
use qpirlab::protocol::{Party, ProtocolSpec};
use qpirlab::qpir::{bit, builtin, correctness_delta, privacy_epsilon_purified, BuiltinParams, PrivacyOptions, QpirProtocol};
use qpirlab::{Error, LabConfig};

fn cfg() -> LabConfig {
    LabConfig::default()
}

fn make(name: &str, n: usize, p: BuiltinParams) -> QpirProtocol {
    builtin(name, n, &p, &cfg()).unwrap()
}

#[test]
fn bits_are_most_significant_first() {
    assert_eq!(bit(0b100, 1, 3), 1);
    assert_eq!(bit(0b100, 3, 3), 0);
    assert_eq!(bit(0b001, 3, 3), 1);
}

#[test]
fn trivial_protocol_is_correct_and_private() {
    for n in 1..=5 {
        let q = make("trivial", n, BuiltinParams::default());
        assert_eq!(q.communication(), n as f64);
        let c = correctness_delta(&q, &cfg()).unwrap();
        assert!(c.max < 1e-9, "n = {n}: {}", c.max);
        let p = privacy_epsilon_purified(&q, PrivacyOptions { basis_inputs: true }, &cfg()).unwrap();
        assert!(p.epsilon_hat < 1e-9);
        assert!(p.basis_pairwise_max.unwrap() < 1e-9);
    }
}

#[test]
fn index_in_clear_is_correct_but_not_private() {
    let q = make("index-in-clear", 4, BuiltinParams::default());
    assert_eq!(q.communication(), 3.0);
    assert!(correctness_delta(&q, &cfg()).unwrap().max < 1e-9);
    let p = privacy_epsilon_purified(&q, PrivacyOptions::default(), &cfg()).unwrap();
    assert!((p.epsilon_hat - 1.0).abs() < 1e-9);
    assert!((p.pairwise_lower - 0.5).abs() < 1e-9);
    for (i, row) in p.pairwise.iter().enumerate() {
        for (j, d) in row.iter().enumerate() {
            let want = if i == j { 0.0 } else { 1.0 };
            assert!((d - want).abs() < 1e-9);
        }
    }
}

#[test]
fn noisy_trivial_hits_its_target() {
    for delta in [0.0, 0.05, 0.1, 0.3, 0.5] {
        let q = make("noisy-trivial", 3, BuiltinParams { delta: Some(delta), ..Default::default() });
        let c = correctness_delta(&q, &cfg()).unwrap();
        assert!((c.max - delta).abs() < 0.01, "delta {delta}: measured {}", c.max);
    }
    let q = make("noisy-trivial", 4, BuiltinParams { delta: Some(0.1), ..Default::default() });
    let c = correctness_delta(&q, &cfg()).unwrap();
    assert!((c.max - 0.1).abs() < 0.01);
    assert!(builtin("noisy-trivial", 3, &BuiltinParams { delta: Some(0.7), ..Default::default() }, &cfg()).is_err());
}

#[test]
fn unknown_builtin_is_an_error() {
    let err = builtin("le-gall", 4, &BuiltinParams::default(), &cfg()).unwrap_err();
    assert!(matches!(err, Error::UnknownBuiltin(_)));
}

/// Trivial protocol whose server sends |0> instead of |x>.
fn silent_server(n: usize) -> QpirProtocol {
    let q = make("trivial", n, BuiltinParams::default());
    let spec = q.spec();
    let op = &spec.ops(Party::A)[0];
    let d = 1usize << n;
    let m = DMatrix::from_fn(d * d, d, |r, x| if r == x * d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let silent: Operation = Isometry::new(op.input_layout().clone(), op.output_layout().clone(), m).unwrap().into();
    let spec = spec.with_party(Party::A, spec.memory(Party::A).to_vec(), vec![silent]).unwrap();
    QpirProtocol::new(spec, "silent").unwrap()
}

#[test]
fn output_independent_of_database_gives_one_half() {
    let c = correctness_delta(&silent_server(3), &cfg()).unwrap();
    for d in c.per_index {
        assert!((d - 0.5).abs() < 1e-9);
    }
}

/// Appends a Haar unitary to the client's last operation.
fn scrambled_client(q: &QpirProtocol, seed: u64) -> QpirProtocol {
    let spec = q.spec();
    let s = spec.rounds();
    let mut ops = spec.ops(Party::B).to_vec();
    let out = ops[s - 1].output_layout().clone();
    let u = haar_random_unitary(out.total_dim(), seed).unwrap();
    let u = KrausChannel::from(Isometry::new(out.clone(), out, u.matrix().clone()).unwrap());
    ops[s - 1] = ops[s - 1].to_channel().compose(&u).unwrap().into();
    let spec: ProtocolSpec = spec.with_party(Party::B, spec.memory(Party::B).to_vec(), ops).unwrap();
    QpirProtocol::new(spec, "scrambled").unwrap()
}

#[test]
fn correctness_ignores_final_client_unitaries() {
    for q in [
        make("noisy-trivial", 2, BuiltinParams { delta: Some(0.2), ..Default::default() }),
        make("random", 3, BuiltinParams { seed: 4, ..Default::default() }),
    ] {
        let a = correctness_delta(&q, &cfg()).unwrap();
        let b = correctness_delta(&scrambled_client(&q, 99), &cfg()).unwrap();
        for (x, y) in a.per_index.iter().zip(&b.per_index) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn sequential_and_parallel_agree_bit_for_bit() {
    let q = make("random", 3, BuiltinParams { seed: 2, rounds: 3, ..Default::default() });
    let seq = LabConfig::sequential();
    let a = privacy_epsilon_purified(&q, PrivacyOptions::default(), &seq).unwrap();
    let b = privacy_epsilon_purified(&q, PrivacyOptions::default(), &cfg()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn replay_privacy_is_bracketed(seed in any::<u64>(), n in 2usize..=3, rounds in 1usize..=3) {
        let q = make("random", n, BuiltinParams { seed, rounds, ..Default::default() });
        prop_assert_eq!(q.communication(), (2 * rounds - 1) as f64);
        let p = privacy_epsilon_purified(&q, PrivacyOptions::default(), &cfg()).unwrap();
        prop_assert!(p.pairwise_lower <= p.epsilon_hat + 1e-9);
        prop_assert!(p.epsilon_hat <= p.epsilon_hat_ref1 + 1e-12);
        let c = correctness_delta(&q, &cfg()).unwrap();
        prop_assert!(c.per_index.iter().all(|d| (0.0..=0.5 + 1e-9).contains(d)));
    }
}
