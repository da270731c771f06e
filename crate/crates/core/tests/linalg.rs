use proptest::prelude::*;

use qpirlab::linalg::{
    binary_entropy, fidelity, haar_random_unitary, helstrom_probability, partial_trace, purify, random_density,
    random_pure_state, rng_from_seed, schmidt_compressor, schmidt_decompose, shannon_entropy, trace_distance,
    trace_distance_pure, uhlmann_map, DMatrix, DVector, DensityOperator, Isometry, KrausChannel, Operation,
    QuantumState, RegisterLayout, StateVector, C64,
};
use qpirlab::{Error, LabConfig};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn qubit() -> RegisterLayout {
    RegisterLayout::single("q", 2).unwrap()
}

fn ket(amps: &[C64]) -> StateVector {
    let l = RegisterLayout::single("q", amps.len()).unwrap();
    StateVector::new(l, DVector::from_column_slice(amps)).unwrap()
}

/// ||a - b||_1 / 2 for Hermitian matrices via the characteristic roots, 2x2 only.
fn trace_distance_2x2(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let (p, q, r) = (d[(0, 0)].re, d[(1, 1)].re, d[(0, 1)]);
    let mean = 0.5 * (p + q);
    let rad = (0.25 * (p - q) * (p - q) + r.norm_sqr()).sqrt();
    0.5 * ((mean + rad).abs() + (mean - rad).abs())
}

#[test]
fn binary_entropy_at_three_quarters() {
    let oracle = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
    let h = binary_entropy(0.75).unwrap();
    assert!((h - oracle).abs() < 1e-15);
    assert!((h - 0.811278).abs() < 1e-6);
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
    assert!((shannon_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15);
    assert!(binary_entropy(1.2).is_err());
}

#[test]
fn helstrom_zero_versus_plus() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zero = ket(&[c(1.0), c(0.0)]).density();
    let plus = ket(&[c(s), c(s)]).density();
    // pure-state formula 1/2 + 1/2 sqrt(1 - |<a|b>|^2)
    let oracle = 0.5 + 0.5 * (1.0f64 - 0.5).sqrt();
    let h = helstrom_probability(&zero, &plus, 0.5).unwrap();
    assert!((h.probability - oracle).abs() < 1e-12);
    assert!((h.probability - 0.853553).abs() < 1e-6);
    // unequal priors: guess the likelier state when the states coincide
    let h = helstrom_probability(&zero, &zero, 0.8).unwrap();
    assert!((h.probability - 0.8).abs() < 1e-12);
}

#[test]
fn fidelity_of_mixed_and_pure() {
    let mixed = DensityOperator::maximally_mixed(qubit());
    let zero = ket(&[c(1.0), c(0.0)]).density();
    assert!((fidelity(&mixed, &zero).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((trace_distance(&mixed, &zero).unwrap() - 0.5).abs() < 1e-12);
    let one = ket(&[c(0.0), c(1.0)]).density();
    assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
    assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
}

#[test]
fn invalid_inputs_are_rejected() {
    let l = qubit();
    assert!(matches!(
        StateVector::new(l.clone(), DVector::from_column_slice(&[c(1.0), c(1.0)])),
        Err(Error::InvalidState(_))
    ));
    let not_psd = DMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
    assert!(DensityOperator::new(l.clone(), not_psd).is_err());
    assert!(RegisterLayout::new([("a", 2), ("a", 3)]).is_err());
    assert!(RegisterLayout::new([("a", 0)]).is_err());
    let not_iso = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
    assert!(Isometry::new(l.clone(), l.clone(), not_iso).is_err());
    let half = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.5)]);
    assert!(KrausChannel::new(l.clone(), l, vec![half]).is_err());
}

#[test]
fn dimension_guard_trips() {
    let cfg = LabConfig { dim_guard: 8, ..LabConfig::sequential() };
    let v = StateVector::basis(RegisterLayout::single("a", 4).unwrap(), 0).unwrap();
    let grow = Isometry::new(
        RegisterLayout::single("a", 4).unwrap(),
        RegisterLayout::new([("a", 4), ("b", 4)]).unwrap(),
        DMatrix::from_fn(16, 4, |r, k| if r == 4 * k { c(1.0) } else { c(0.0) }),
    )
    .unwrap();
    let err = QuantumState::from(&v).apply(&grow.into(), &cfg).unwrap_err();
    assert!(matches!(err, Error::DimensionGuard { dim: 16, guard: 8 }));
}

#[test]
fn kraus_application_matches_dense_oracle() {
    let mut rng = rng_from_seed(11);
    let l = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
    let rho = random_density(l.clone(), 3, &mut rng);
    // amplitude damping on a, identity on b
    let g: f64 = 0.3;
    let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - g).sqrt())]);
    let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(g.sqrt()), c(0.0), c(0.0)]);
    let a = RegisterLayout::single("a", 2).unwrap();
    let ch = KrausChannel::new(a.clone(), a, vec![k0.clone(), k1.clone()]).unwrap();
    let out = QuantumState::from_density(&rho).apply(&ch.into(), &LabConfig::sequential()).unwrap();
    let out = out.reorder(&["a", "b"]).unwrap().to_density().unwrap();
    let id = DMatrix::<C64>::identity(3, 3);
    let mut want = DMatrix::from_element(6, 6, c(0.0));
    for k in [k0, k1] {
        let big = k.kronecker(&id);
        want += &big * rho.matrix() * big.adjoint();
    }
    assert!((out.matrix() - want).norm() < 1e-12);
}

#[test]
fn marginal_factor_agrees_with_partial_trace() {
    let mut rng = rng_from_seed(5);
    let l = RegisterLayout::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
    for rank in [1, 4] {
        let rho = random_density(l.clone(), rank, &mut rng);
        let st = QuantumState::from_density(&rho);
        for keep in [vec!["a"], vec!["c", "a"], vec!["b"]] {
            let direct = partial_trace(&rho, &keep).unwrap();
            let via = st.marginal_factor(&keep).unwrap().to_density().unwrap();
            assert_eq!(direct.layout(), via.layout());
            assert!((direct.matrix() - via.matrix()).norm() < 1e-12);
        }
    }
}

#[test]
fn trace_distance_matches_closed_form_on_qubits() {
    let mut rng = rng_from_seed(21);
    for _ in 0..50 {
        let a = random_density(qubit(), 2, &mut rng);
        let b = random_density(qubit(), 1, &mut rng);
        let oracle = trace_distance_2x2(a.matrix(), b.matrix());
        assert!((trace_distance(&a, &b).unwrap() - oracle).abs() < 1e-12);
        let fa = QuantumState::from_density(&a);
        let fb = QuantumState::from_density(&b);
        assert!((fa.trace_distance(&fb).unwrap() - oracle).abs() < 1e-10);
    }
}

#[test]
fn json_roundtrip_is_exact() {
    let mut rng = rng_from_seed(8);
    let rho = random_density(RegisterLayout::new([("a", 2), ("b", 2)]).unwrap(), 2, &mut rng);
    let back: DensityOperator = serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
    assert_eq!(back.matrix(), rho.matrix());
    let u: Operation = haar_random_unitary(3, 1).unwrap().into();
    let text = serde_json::to_string(&u).unwrap();
    let back: Operation = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4).prop_map(|(a, b)| (a + 1, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fuchs_van_de_graaf(seed in any::<u64>(), d in prop::sample::select(vec![2usize, 4, 8]), r0 in 1usize..=8, r1 in 1usize..=8) {
        let mut rng = rng_from_seed(seed);
        let l = RegisterLayout::single("q", d).unwrap();
        let a = random_density(l.clone(), r0.min(d), &mut rng);
        let b = random_density(l, r1.min(d), &mut rng);
        let t = trace_distance(&a, &b).unwrap();
        let f = fidelity(&a, &b).unwrap();
        prop_assert!(1.0 - f - 1e-9 <= t);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn triangle_and_data_processing(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let l = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
        let x = random_density(l.clone(), 2, &mut rng);
        let y = random_density(l.clone(), 3, &mut rng);
        let z = random_density(l, 1, &mut rng);
        let dxy = trace_distance(&x, &y).unwrap();
        prop_assert!(dxy <= trace_distance(&x, &z).unwrap() + trace_distance(&z, &y).unwrap() + 1e-12);
        let xa = partial_trace(&x, &["a"]).unwrap();
        let ya = partial_trace(&y, &["a"]).unwrap();
        prop_assert!(trace_distance(&xa, &ya).unwrap() <= dxy + 1e-12);
    }

    #[test]
    fn schmidt_decomposition_reconstructs((da, db) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let l = RegisterLayout::new([("a", da), ("b", db)]).unwrap();
        let psi = random_pure_state(l, &mut rng);
        let sd = schmidt_decompose(&psi, &["a"], 1e-10).unwrap();
        let norm: f64 = sd.coefficients.iter().map(|x| x * x).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        prop_assert!(sd.rank <= da.min(db));
        let back = sd.reconstruct().unwrap();
        prop_assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-10);
        prop_assert!(sd.coefficients.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn compressor_is_lossless((da, db) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        // rank-deficient on a: a small b factor
        let l = RegisterLayout::new([("a", da * 2), ("b", db)]).unwrap();
        let psi = random_pure_state(l, &mut rng);
        let v = schmidt_compressor(&psi, &["a"], 1e-10, "c").unwrap();
        prop_assert_eq!(v.input_layout().total_dim(), db.min(da * 2));
        let (_, _, m) = qpirlab::linalg::matricize(&psi, &["a"]).unwrap();
        let back = v.matrix() * (v.matrix().adjoint() * &m);
        prop_assert!((back - m).norm() < 1e-10);
    }

    #[test]
    fn uhlmann_attains_fidelity((da, dp) in dims(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let l = RegisterLayout::new([("a", da), ("p", dp)]).unwrap();
        let phi = random_pure_state(l.clone(), &mut rng);
        let psi = random_pure_state(l, &mut rng);
        let ra = partial_trace(&phi.density(), &["a"]).unwrap();
        let sa = partial_trace(&psi.density(), &["a"]).unwrap();
        let f = fidelity(&ra, &sa).unwrap();
        let map = uhlmann_map(&phi, &psi, &["p"], 1e-10).unwrap();
        prop_assert!((map.fidelity - f).abs() < 1e-8);
        let moved = map.apply(&psi).unwrap();
        prop_assert!((phi.inner(&moved).unwrap().norm() - f).abs() < 1e-8);
        let eps = trace_distance(&ra, &sa).unwrap();
        prop_assert!(trace_distance_pure(&phi, &moved).unwrap() <= (eps * (2.0 - eps)).sqrt() + 1e-9);
    }

    #[test]
    fn purification_is_sound(d in 1usize..=5, r in 1usize..=5, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(RegisterLayout::single("s", d).unwrap(), r.min(d), &mut rng);
        let psi = purify(&rho, "p").unwrap();
        let back = partial_trace(&psi.density(), &["s"]).unwrap();
        prop_assert!((back.matrix() - rho.matrix()).norm() < 1e-10);
    }

    #[test]
    fn channels_are_linear(seed in any::<u64>(), w in 0.0f64..1.0) {
        let mut rng = rng_from_seed(seed);
        let l = RegisterLayout::new([("a", 2), ("b", 2)]).unwrap();
        let x = random_density(l.clone(), 2, &mut rng);
        let y = random_density(l.clone(), 1, &mut rng);
        let ch: Operation = KrausChannel::partial_trace(l, &["b"]).unwrap().into();
        let cfg = LabConfig::sequential();
        let run = |r: &DensityOperator| QuantumState::from_density(r).apply(&ch, &cfg).unwrap().to_density().unwrap();
        let mix = DensityOperator::mixture(&[(w, x.clone()), (1.0 - w, y.clone())]).unwrap();
        let lhs = run(&mix);
        let rhs = run(&x).matrix().scale(w) + run(&y).matrix().scale(1.0 - w);
        prop_assert!((lhs.matrix() - rhs).norm() < 1e-10);
    }
}
