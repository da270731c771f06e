//! Dense complex linear algebra and quantum-information primitives.
//!
//! Amplitudes and matrices are indexed row-major over a [`RegisterLayout`].
//! Dense kernels (SVD, Hermitian eigen, QR) come from nalgebra.

mod decomp;
mod layout;
mod measures;
mod operator;
mod random;
pub mod serial;
mod state;
pub(crate) mod tensor;

pub use decomp::{
    matricize, partial_trace, purify, schmidt_compressor, schmidt_decompose, uhlmann_map, uhlmann_unitary,
    SchmidtDecomposition, UhlmannMap,
};
pub use layout::{Register, RegisterLayout};
pub(crate) use layout::expect_layout;
pub use measures::{
    binary_entropy, fidelity, helstrom_probability, psd_sqrt, shannon_entropy, trace_distance, trace_distance_pure,
    Helstrom,
};
#[allow(unused_imports)]
pub(crate) use measures::{hermitian_eig, helstrom_factored, thin_factor, trace_distance_factored, trace_norm_hermitian};
pub use operator::{Isometry, KrausChannel, OpKind, Operation};
pub(crate) use operator::embed;
pub use random::{haar_random_unitary, random_density, random_pure_state, rng_from_seed};
#[allow(unused_imports)]
pub(crate) use random::{gaussian_matrix, haar_matrix};
pub use state::{DensityOperator, QuantumState, StateVector, DENSE_LIMIT};

pub use nalgebra::{DMatrix, DVector};

pub type C64 = nalgebra::Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn identity(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Extends the orthonormal columns of `basis` (d x k) by `count` further
/// orthonormal columns, drawn from the canonical basis by Gram-Schmidt.
pub(crate) fn extend_orthonormal(basis: &DMatrix<C64>, count: usize) -> DMatrix<C64> {
    let d = basis.nrows();
    if count == 0 {
        return DMatrix::from_element(d, 0, ZERO);
    }
    let mut cols: Vec<DVector<C64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let start = cols.len();
    let mut e = 0;
    while cols.len() < start + count && e < d {
        let mut v = DVector::from_element(d, ZERO);
        v[e] = ONE;
        e += 1;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v.axpy(-proj, c, ONE);
            }
        }
        let norm = v.norm();
        // some canonical vector keeps a residual of at least sqrt(1/d)
        if norm > 1e-3 {
            cols.push(v.unscale(norm));
        }
    }
    assert_eq!(cols.len(), start + count, "not enough room to extend basis");
    DMatrix::from_columns(&cols[start..])
}
