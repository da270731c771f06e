use nalgebra::{DMatrix, DVector};

use super::measures::hermitian_eig;
use super::tensor::permute;
use super::{expect_layout, extend_orthonormal, DensityOperator, Isometry, QuantumState, RegisterLayout, StateVector, C64, DENSE_LIMIT};
use crate::error::{Error, Result};

/// Splits `state` into (cut layout, rest layout, amplitude matrix) with rows
/// indexed by the cut registers. Both sides keep the state's register order.
pub fn matricize<S: AsRef<str>>(
    state: &StateVector,
    cut: &[S],
) -> Result<(RegisterLayout, RegisterLayout, DMatrix<C64>)> {
    let layout = state.layout();
    let left = layout.select(cut)?;
    if left.is_empty() || left.len() == layout.len() {
        return Err(Error::InvalidCut(format!("cut must be a proper nonempty subset of {layout}")));
    }
    let left_labels: Vec<&str> = left.labels().collect();
    let right = layout.without(&left_labels);
    let mut order = layout.positions(&left_labels)?;
    order.extend(layout.positions(&right.labels().collect::<Vec<_>>())?);
    let buf = permute(state.amplitudes().as_slice(), &layout.dims(), &order);
    let m = DMatrix::from_row_slice(left.total_dim(), right.total_dim(), &buf);
    Ok((left, right, m))
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// All min(d_left, d_right) coefficients, descending.
    pub coefficients: Vec<f64>,
    pub left_layout: RegisterLayout,
    pub right_layout: RegisterLayout,
    /// Column k is |a_k> on the cut side.
    pub left_basis: DMatrix<C64>,
    /// Column k is |b_k> on the other side.
    pub right_basis: DMatrix<C64>,
    /// Coefficients above the rank tolerance.
    pub rank: usize,
}

impl SchmidtDecomposition {
    /// sum_k lambda_k |a_k>|b_k> over left ++ right.
    pub fn reconstruct(&self) -> Result<StateVector> {
        let layout = self.left_layout.concat(&self.right_layout)?;
        let mut amps = DVector::from_element(layout.total_dim(), C64::new(0.0, 0.0));
        for (k, &l) in self.coefficients.iter().enumerate() {
            amps += self.left_basis.column(k).kronecker(&self.right_basis.column(k)).scale(l);
        }
        Ok(StateVector::from_parts(layout, amps))
    }

    pub fn compressed_dim(&self) -> usize {
        self.rank
    }
}

pub fn schmidt_decompose<S: AsRef<str>>(state: &StateVector, cut: &[S], rank_tol: f64) -> Result<SchmidtDecomposition> {
    let (left, right, m) = matricize(state, cut)?;
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients: Vec<f64> = idx.iter().map(|&k| svd.singular_values[k]).collect();
    let rank = coefficients.iter().filter(|&&l| l > rank_tol).count().max(1);
    Ok(SchmidtDecomposition {
        left_basis: u.select_columns(idx.iter()),
        right_basis: vt.select_rows(idx.iter()).transpose(),
        coefficients,
        left_layout: left,
        right_layout: right,
        rank,
    })
}

/// Schmidt compression of the `cut` factor. The returned isometry V embeds
/// a `label` register of dimension r (the Schmidt rank) into the cut
/// factor; compression is V^dagger, which is lossless on every vector whose
/// cut-side support lies in the span of V.
pub fn schmidt_compressor<S: AsRef<str>>(
    state: &StateVector,
    cut: &[S],
    rank_tol: f64,
    label: &str,
) -> Result<Isometry> {
    let sd = schmidt_decompose(state, cut, rank_tol)?;
    let v = sd.left_basis.columns(0, sd.rank).into_owned();
    Ok(Isometry::from_parts(RegisterLayout::single(label, sd.rank)?, sd.left_layout, v))
}

/// Reduced state on `keep`, registers in the input's order.
pub fn partial_trace<S: AsRef<str>>(state: &DensityOperator, keep: &[S]) -> Result<DensityOperator> {
    let layout = state.layout();
    let kl = layout.select(keep)?;
    let keep_labels: Vec<&str> = kl.labels().collect();
    let rest = layout.without(&keep_labels);
    let kp = layout.positions(&keep_labels)?;
    let rp = layout.positions(&rest.labels().collect::<Vec<_>>())?;
    let n = layout.len();
    let mut dims = layout.dims();
    dims.extend(layout.dims());
    // column-major buffer == row-major (col regs..., row regs...)
    let mut order: Vec<usize> = kp.iter().chain(&rp).copied().collect();
    order.extend(kp.iter().chain(&rp).map(|p| p + n));
    let buf = permute(state.matrix().as_slice(), &dims, &order);
    let (dk, dt) = (kl.total_dim(), rest.total_dim());
    let m = DMatrix::from_fn(dk, dk, |a, b| (0..dt).map(|t| buf[((b * dt + t) * dk + a) * dt + t]).sum());
    Ok(DensityOperator::from_parts(kl, m))
}

/// Purification on layout ++ [purifier] with a purifier of full dimension.
pub fn purify(rho: &DensityOperator, purifier_label: &str) -> Result<StateVector> {
    let d = rho.dim();
    let mut layout = rho.layout().clone();
    layout.push(purifier_label, d)?;
    let (vals, vecs) = hermitian_eig(rho.matrix());
    let mut amps = DVector::from_element(d * d, C64::new(0.0, 0.0));
    for (k, &l) in vals.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let s = l.sqrt();
        for i in 0..d {
            amps[i * d + k] = vecs[(i, k)] * s;
        }
    }
    StateVector::normalized(layout, amps)
}

/// Partial isometry on the purifier that carries the support of psi's
/// purifier-side reduced state (`source` columns) onto `target` columns,
/// chosen to maximize |<phi|(1 (x) U)|psi>|. Any completion to a unitary
/// attains the same overlap, which equals F(rho_sys, sigma_sys).
#[derive(Clone, Debug)]
pub struct UhlmannMap {
    pub purifier: RegisterLayout,
    pub source: DMatrix<C64>,
    pub target: DMatrix<C64>,
    pub fidelity: f64,
}

impl UhlmannMap {
    /// U applied to columns lying in span(source).
    pub fn map_columns(&self, v: &DMatrix<C64>) -> DMatrix<C64> {
        &self.target * (self.source.adjoint() * v)
    }

    pub fn to_unitary(&self) -> Result<Isometry> {
        let d = self.purifier.total_dim();
        if d > DENSE_LIMIT {
            return Err(Error::DimensionGuard { dim: d, guard: DENSE_LIMIT });
        }
        let r = self.source.ncols();
        let qs = extend_orthonormal(&self.source, d - r);
        let qt = extend_orthonormal(&self.target, d - r);
        let u = &self.target * self.source.adjoint() + qt * qs.adjoint();
        Ok(Isometry::from_parts(self.purifier.clone(), self.purifier.clone(), u))
    }

    /// (1 (x) U)|psi> for a state whose purifier side lies in span(source).
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let layout = psi.layout();
        let sys: Vec<String> =
            layout.labels().filter(|l| !self.purifier.contains(l)).map(String::from).collect();
        let (left, right, m) = matricize(psi, &sys)?;
        expect_layout(&self.purifier, &right)?;
        let out = m * self.source.conjugate() * self.target.transpose();
        let joint = left.concat(&right)?;
        let mut amps = Vec::with_capacity(joint.total_dim());
        for r in 0..out.nrows() {
            amps.extend(out.row(r).iter().copied());
        }
        let v = StateVector::from_parts(joint, DVector::from_vec(amps));
        let labels: Vec<&str> = layout.labels().collect();
        Ok(QuantumState::from(&v).reorder(&labels)?.as_pure().expect("pure"))
    }
}

fn truncated(state: &StateVector, sys: &[String], tol: f64) -> Result<(RegisterLayout, DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let sd = schmidt_decompose(state, sys, tol)?;
    let r = sd.rank;
    Ok((
        sd.right_layout,
        sd.left_basis.columns(0, r).into_owned(),
        sd.coefficients[..r].to_vec(),
        sd.right_basis.columns(0, r).into_owned(),
    ))
}

pub fn uhlmann_map<S: AsRef<str>>(phi: &StateVector, psi: &StateVector, purifier: &[S], rank_tol: f64) -> Result<UhlmannMap> {
    expect_layout(phi.layout(), psi.layout())?;
    let layout = phi.layout();
    let pl = layout.select(purifier)?;
    if pl.is_empty() || pl.len() == layout.len() {
        return Err(Error::InvalidCut(format!("purifier must be a proper nonempty subset of {layout}")));
    }
    let sys: Vec<String> = layout.labels().filter(|l| !pl.contains(l)).map(String::from).collect();
    let (_, a_phi, l_phi, b_phi) = truncated(phi, &sys, rank_tol)?;
    let (_, a_psi, l_psi, b_psi) = truncated(psi, &sys, rank_tol)?;
    let mut k = a_phi.adjoint() * &a_psi;
    for (j, lj) in l_phi.iter().enumerate() {
        k.row_mut(j).scale_mut(*lj);
    }
    for (j, lj) in l_psi.iter().enumerate() {
        k.column_mut(j).scale_mut(*lj);
    }
    let svd = k.transpose().svd(true, true);
    let w = svd.u.expect("u requested");
    let zh = svd.v_t.expect("v_t requested");
    let mut source = &b_psi * &w;
    let mut target = &b_phi * zh.adjoint();
    let r_psi = b_psi.ncols();
    let q = w.ncols();
    if r_psi > q {
        let w_ext = extend_orthonormal(&w, r_psi - q);
        let t_ext = extend_orthonormal(&target, r_psi - q);
        source = DMatrix::from_columns(&source.column_iter().chain((&b_psi * w_ext).column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>());
        target = DMatrix::from_columns(&target.column_iter().chain(t_ext.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>());
    }
    Ok(UhlmannMap { purifier: pl, source, target, fidelity: svd.singular_values.iter().sum::<f64>().min(1.0) })
}

/// Unitary on the purifier maximizing |<phi|(1 (x) U)|psi>|.
pub fn uhlmann_unitary<S: AsRef<str>>(phi: &StateVector, psi: &StateVector, purifier: &[S], rank_tol: f64) -> Result<Isometry> {
    uhlmann_map(phi, psi, purifier, rank_tol)?.to_unitary()
}
