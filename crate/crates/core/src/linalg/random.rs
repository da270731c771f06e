use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{DensityOperator, Isometry, RegisterLayout, StateVector, C64, ONE};
use crate::error::{Error, Result};

/// ChaCha stream: identical across platforms for the same seed.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Entries i.i.d. standard complex normal (E|z|^2 = 1).
pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(C64::new(re * s, im * s));
    }
    DMatrix::from_vec(rows, cols, data)
}

/// Haar unitary: QR of a Ginibre matrix with the R diagonal phases moved into Q.
pub(crate) fn haar_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_random_unitary(dim: usize, seed: u64) -> Result<Isometry> {
    if dim == 0 {
        return Err(Error::OutOfRange("dimension must be at least 1".into()));
    }
    let layout = RegisterLayout::single("u", dim)?;
    let m = haar_matrix(dim, &mut rng_from_seed(seed));
    Ok(Isometry::from_parts(layout.clone(), layout, m))
}

/// G G^dagger / tr for a Ginibre G of the given rank.
pub fn random_density<R: Rng + ?Sized>(layout: RegisterLayout, rank: usize, rng: &mut R) -> DensityOperator {
    let g = gaussian_matrix(layout.total_dim(), rank.max(1), rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    DensityOperator::from_parts(layout, rho.unscale(tr))
}

pub fn random_pure_state<R: Rng + ?Sized>(layout: RegisterLayout, rng: &mut R) -> StateVector {
    let g = gaussian_matrix(layout.total_dim(), 1, rng);
    let v = DVector::from_column_slice(g.as_slice());
    let n = v.norm();
    StateVector::from_parts(layout, v.unscale(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unitary() {
        let a = haar_random_unitary(5, 9).unwrap();
        let b = haar_random_unitary(5, 9).unwrap();
        assert_eq!(a, b);
        let g = a.matrix().adjoint() * a.matrix();
        assert!(crate::linalg::max_abs_diff(&g, &DMatrix::identity(5, 5)) < 1e-12);
        let one = haar_random_unitary(1, 3).unwrap();
        assert!((one.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(haar_random_unitary(0, 1).is_err());
    }
}
