use nalgebra::{DMatrix, SymmetricEigen};

use super::{expect_layout, DensityOperator, RegisterLayout, C64, ZERO};
use crate::error::{Error, Result};

/// Round-off band: eigenvalues in [-CLAMP, 0) are treated as zero.
const CLAMP: f64 = 1e-12;
/// Anything more negative than this is not a PSD input.
const PSD_TOL: f64 = 1e-9;

/// Eigenvalues (descending) and eigenvectors of the Hermitian part of `m`.
pub(crate) fn hermitian_eig(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = eig.eigenvectors.select_columns(idx.iter());
    (vals, vecs)
}

pub(crate) fn trace_norm_hermitian(m: &DMatrix<C64>) -> f64 {
    hermitian_eig(m).0.iter().map(|l| l.abs()).sum()
}

/// A factor F with F F^dagger = X X^dagger and at most min(rows, cols)
/// columns, ordered by decreasing weight. Directions with weight below
/// 1e-14 of the largest are dropped.
pub(crate) fn thin_factor(x: &DMatrix<C64>) -> DMatrix<C64> {
    let (d, r) = x.shape();
    let gram_small = r <= d;
    let g = if gram_small { x.adjoint() * x } else { x * x.adjoint() };
    let (vals, vecs) = hermitian_eig(&g);
    let top = vals.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > top * 1e-14 && vals[k] > 0.0).collect();
    if keep.is_empty() {
        return DMatrix::from_element(d, 1, ZERO);
    }
    let w = vecs.select_columns(keep.iter());
    if gram_small {
        x * w
    } else {
        let mut f = w;
        for (j, &k) in keep.iter().enumerate() {
            f.column_mut(j).scale_mut(vals[k].sqrt());
        }
        f
    }
}

/// PSD square root via Hermitian eigendecomposition.
pub fn psd_sqrt(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (vals, vecs) = hermitian_eig(m);
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        if l < -PSD_TOL {
            return Err(Error::NotPsd(l));
        }
        let s = if l < CLAMP && l < 0.0 { 0.0 } else { l.max(0.0).sqrt() };
        scaled.column_mut(k).scale_mut(s);
    }
    Ok(scaled * vecs.adjoint())
}

/// Half the trace norm of rho - sigma.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    expect_layout(rho.layout(), sigma.layout())?;
    let d = 0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix()));
    Ok(d.clamp(0.0, 1.0))
}

/// sqrt(1 - |<a|b>|^2) for unit vectors.
pub fn trace_distance_pure(a: &super::StateVector, b: &super::StateVector) -> Result<f64> {
    let o = a.inner(b)?.norm();
    Ok((1.0 - o * o).max(0.0).sqrt())
}

/// || rho^{1/2} sigma^{1/2} ||_1
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    expect_layout(rho.layout(), sigma.layout())?;
    let p = psd_sqrt(rho.matrix())? * psd_sqrt(sigma.matrix())?;
    let f: f64 = p.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Optimal two-outcome discrimination: success probability and the
/// projector onto the "guess rho0" outcome.
#[derive(Clone, Debug)]
pub struct Helstrom {
    pub probability: f64,
    pub layout: RegisterLayout,
    pub projector: DMatrix<C64>,
}

pub fn helstrom_probability(rho0: &DensityOperator, rho1: &DensityOperator, prior0: f64) -> Result<Helstrom> {
    expect_layout(rho0.layout(), rho1.layout())?;
    if !(0.0..=1.0).contains(&prior0) {
        return Err(Error::OutOfRange(format!("prior {prior0} not in [0,1]")));
    }
    let gamma = rho0.matrix().scale(prior0) - rho1.matrix().scale(1.0 - prior0);
    let (vals, vecs) = hermitian_eig(&gamma);
    let norm: f64 = vals.iter().map(|l| l.abs()).sum();
    let pos: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.0).collect();
    let basis = vecs.select_columns(pos.iter());
    Ok(Helstrom {
        probability: (0.5 + 0.5 * norm).clamp(0.0, 1.0),
        layout: rho0.layout().clone(),
        projector: &basis * basis.adjoint(),
    })
}

/// Trace norm of w0 F0 F0^dagger - w1 F1 F1^dagger and an orthonormal
/// basis of its positive eigenspace, computed in the span of the factors.
pub(crate) fn factored_difference(f0: &DMatrix<C64>, w0: f64, f1: &DMatrix<C64>, w1: f64) -> (f64, DMatrix<C64>) {
    let d = f0.nrows();
    let (k0, k1) = (f0.ncols(), f1.ncols());
    let (vals, vecs) = if k0 + k1 >= d {
        let gamma = f0 * f0.adjoint().scale(w0) - f1 * f1.adjoint().scale(w1);
        hermitian_eig(&gamma)
    } else {
        let mut g = DMatrix::from_element(d, k0 + k1, ZERO);
        g.columns_mut(0, k0).copy_from(&f0.scale(w0.sqrt()));
        g.columns_mut(k0, k1).copy_from(&f1.scale(w1.sqrt()));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let mut rj = r.clone();
        for j in k0..k0 + k1 {
            rj.column_mut(j).neg_mut();
        }
        let small = rj * r.adjoint();
        let (vals, w) = hermitian_eig(&small);
        (vals, q * w)
    };
    let norm: f64 = vals.iter().map(|l| l.abs()).sum();
    let pos: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.0).collect();
    (norm, vecs.select_columns(pos.iter()))
}

/// Helstrom for states given as factors (rho_b = F_b F_b^dagger). Returns the
/// success probability and an orthonormal basis of the optimal projector.
pub(crate) fn helstrom_factored(f0: &DMatrix<C64>, f1: &DMatrix<C64>, prior0: f64) -> (f64, DMatrix<C64>) {
    let (norm, basis) = factored_difference(f0, prior0, f1, 1.0 - prior0);
    ((0.5 + 0.5 * norm).clamp(0.0, 1.0), basis)
}

/// Trace distance between two states given as factors over the same layout.
pub(crate) fn trace_distance_factored(f0: &DMatrix<C64>, f1: &DMatrix<C64>) -> f64 {
    (0.5 * factored_difference(f0, 1.0, f1, 1.0).0).clamp(0.0, 1.0)
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("probability {p} not in [0,1]")));
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

pub fn shannon_entropy(dist: &[f64]) -> Result<f64> {
    let total: f64 = dist.iter().sum();
    if dist.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange("not a probability distribution".into()));
    }
    Ok(dist.iter().map(|&p| plogp(p)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateVector;
    use nalgebra::DVector;

    fn qubit(a: C64, b: C64) -> StateVector {
        StateVector::normalized(RegisterLayout::single("q", 2).unwrap(), DVector::from_vec(vec![a, b])).unwrap()
    }

    #[test]
    fn thin_factor_preserves_gram() {
        let x = DMatrix::from_fn(3, 5, |r, c| C64::new((r + 2 * c) as f64, (r * c) as f64 - 1.0));
        for m in [x.clone(), x.adjoint()] {
            let f = thin_factor(&m);
            assert!(crate::linalg::max_abs_diff(&(&f * f.adjoint()), &(&m * m.adjoint())) < 1e-9);
            assert!(f.ncols() <= 3);
        }
    }

    #[test]
    fn factored_helstrom_matches_dense() {
        let one = C64::new(1.0, 0.0);
        let zero = qubit(one, ZERO);
        let plus = qubit(one, one);
        let dense = helstrom_probability(&zero.density(), &plus.density(), 0.3).unwrap();
        let f0 = DMatrix::from_column_slice(2, 1, zero.amplitudes().as_slice());
        let f1 = DMatrix::from_column_slice(2, 1, plus.amplitudes().as_slice());
        let (p, basis) = helstrom_factored(&f0, &f1, 0.3);
        assert!((p - dense.probability).abs() < 1e-12);
        assert!(crate::linalg::max_abs_diff(&(&basis * basis.adjoint()), &dense.projector) < 1e-9);
        // padded to dimension 4: QR path
        let pad = |f: &DMatrix<C64>| {
            let mut g = DMatrix::from_element(4, 1, ZERO);
            g.rows_mut(0, 2).copy_from(f);
            g
        };
        let (p4, _) = helstrom_factored(&pad(&f0), &pad(&f1), 0.3);
        assert!((p4 - dense.probability).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1e-6, 0.0)]));
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd(_))));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1e-13, 0.0)]));
        assert!(psd_sqrt(&m).is_ok());
    }
}
