use nalgebra::{DMatrix, DVector};

use super::measures::{hermitian_eig, thin_factor};
use super::operator::Operation;
use super::tensor::{apply_local, marginal_columns};
use super::{expect_layout, RegisterLayout, C64, ONE, ZERO};
use crate::config::LabConfig;
use crate::error::{Error, Result};

/// Largest dimension for which a dense density matrix is materialized.
pub const DENSE_LIMIT: usize = 4096;

const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(layout: RegisterLayout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for layout of dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(StateVector { layout, amplitudes })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(layout: RegisterLayout, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(layout, amplitudes.unscale(norm))
    }

    pub(crate) fn from_parts(layout: RegisterLayout, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(layout.total_dim(), amplitudes.len());
        StateVector { layout, amplitudes }
    }

    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::OutOfRange(format!("basis index {index} >= dimension {d}")));
        }
        let mut a = DVector::from_element(d, ZERO);
        a[index] = ONE;
        Ok(StateVector { layout, amplitudes: a })
    }

    /// Basis state given one digit per register.
    pub fn basis_digits(layout: RegisterLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::InvalidState(format!("{} digits for {} registers", digits.len(), layout.len())));
        }
        let mut index = 0;
        for (d, r) in digits.iter().zip(layout.registers()) {
            if *d >= r.dim {
                return Err(Error::OutOfRange(format!("digit {d} for register `{}` of dim {}", r.label, r.dim)));
            }
            index = index * r.dim + d;
        }
        Self::basis(layout, index)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let layout = self.layout.concat(&other.layout)?;
        let amps = self.amplitudes.kronecker(&other.amplitudes);
        Ok(StateVector { layout, amplitudes: amps })
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        expect_layout(&self.layout, &other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn density(&self) -> DensityOperator {
        let a = &self.amplitudes;
        DensityOperator { layout: self.layout.clone(), matrix: a * a.adjoint() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    layout: RegisterLayout,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity (all within 1e-9).
    pub fn new(layout: RegisterLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::InvalidState(format!("matrix {:?} for layout of dimension {d}", matrix.shape())));
        }
        let herm = super::max_abs_diff(&matrix, &matrix.adjoint());
        if herm > NORM_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (vals, _) = hermitian_eig(&matrix);
        if let Some(&min) = vals.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < -NORM_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(DensityOperator { layout, matrix })
    }

    pub(crate) fn from_parts(layout: RegisterLayout, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), layout.total_dim());
        DensityOperator { layout, matrix }
    }

    pub fn pure(state: &StateVector) -> Self {
        state.density()
    }

    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.total_dim();
        let matrix = DMatrix::identity(d, d).unscale(d as f64);
        DensityOperator { layout, matrix }
    }

    /// Convex combination; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidState("empty mixture".into()));
        };
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState("mixture weights must be a distribution".into()));
        }
        let mut m = DMatrix::from_element(first.dim(), first.dim(), ZERO);
        for (w, rho) in parts {
            expect_layout(&first.layout, &rho.layout)?;
            m += rho.matrix.scale(*w);
        }
        Ok(DensityOperator { layout: first.layout.clone(), matrix: m })
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(DensityOperator { layout, matrix: self.matrix.kronecker(&other.matrix) })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (mut v, _) = hermitian_eig(&self.matrix);
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }
}

/// Working representation of a (possibly mixed) state: rho = L L^dagger with
/// `factor` = L of shape D x m. A pure state has m = 1. Operators act on the
/// columns independently, which keeps Kraus application and purification
/// cheap; partial traces come straight from the factor.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    factor: DMatrix<C64>,
}

impl From<&StateVector> for QuantumState {
    fn from(v: &StateVector) -> Self {
        let d = v.layout.total_dim();
        QuantumState { layout: v.layout.clone(), factor: DMatrix::from_column_slice(d, 1, v.amplitudes.as_slice()) }
    }
}

impl QuantumState {
    pub fn from_density(rho: &DensityOperator) -> Self {
        QuantumState { layout: rho.layout.clone(), factor: psd_gram_factor(&rho.matrix) }
    }

    /// Ensemble given by unnormalized columns; their squared norms must sum to 1.
    pub fn from_factor(layout: RegisterLayout, factor: DMatrix<C64>) -> Result<Self> {
        if factor.nrows() != layout.total_dim() || factor.ncols() == 0 {
            return Err(Error::InvalidState(format!(
                "factor {:?} for layout of dimension {}",
                factor.shape(),
                layout.total_dim()
            )));
        }
        let tr = factor.norm_squared();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("ensemble weight {tr} is not 1")));
        }
        Ok(QuantumState { layout, factor })
    }

    /// Uniform mixture of pure states over a common layout.
    pub fn uniform_mixture(states: &[StateVector]) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidState("empty mixture".into()));
        };
        let w = 1.0 / (states.len() as f64).sqrt();
        let mut f = DMatrix::from_element(first.layout.total_dim(), states.len(), ZERO);
        for (j, s) in states.iter().enumerate() {
            expect_layout(&first.layout, &s.layout)?;
            f.set_column(j, &s.amplitudes.scale(w));
        }
        Ok(QuantumState { layout: first.layout.clone(), factor: f })
    }

    pub(crate) fn from_parts(layout: RegisterLayout, factor: DMatrix<C64>) -> Self {
        QuantumState { layout, factor }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn factor(&self) -> &DMatrix<C64> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn trace(&self) -> f64 {
        self.factor.norm_squared()
    }

    /// The state vector if the ensemble has a single member.
    pub fn as_pure(&self) -> Option<StateVector> {
        (self.factor.ncols() == 1)
            .then(|| StateVector::from_parts(self.layout.clone(), self.factor.column(0).into_owned()))
    }

    pub fn purity(&self) -> f64 {
        let g = self.factor.adjoint() * &self.factor;
        g.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        let d = self.dim();
        if d > DENSE_LIMIT {
            return Err(Error::DimensionGuard { dim: d, guard: DENSE_LIMIT });
        }
        Ok(DensityOperator::from_parts(self.layout.clone(), &self.factor * self.factor.adjoint()))
    }

    fn keep_positions<S: AsRef<str>>(&self, keep: &[S]) -> Result<(RegisterLayout, Vec<usize>)> {
        let kl = self.layout.select(keep)?;
        let pos = self.layout.positions(&kl.labels().collect::<Vec<_>>())?;
        Ok((kl, pos))
    }

    /// Reduced density operator on `keep` (layout order).
    pub fn marginal<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        let (kl, pos) = self.keep_positions(keep)?;
        if kl.total_dim() > DENSE_LIMIT {
            return Err(Error::DimensionGuard { dim: kl.total_dim(), guard: DENSE_LIMIT });
        }
        let x = marginal_columns(&self.factor, &self.layout, &pos);
        Ok(DensityOperator::from_parts(kl, &x * x.adjoint()))
    }

    /// Thin factor F of the reduced state on `keep`: rho_keep = F F^dagger,
    /// with F having at most dim(keep) columns.
    pub fn marginal_factor<S: AsRef<str>>(&self, keep: &[S]) -> Result<QuantumState> {
        let (kl, pos) = self.keep_positions(keep)?;
        let x = marginal_columns(&self.factor, &self.layout, &pos);
        let d_keep = kl.total_dim();
        let d_rest = x.ncols() / self.factor.ncols().max(1);
        let f = if d_rest > d_keep {
            thin_factor(&x)
        } else {
            let blocks: Vec<DMatrix<C64>> = (0..self.factor.ncols())
                .map(|j| thin_factor(&x.columns(j * d_rest, d_rest).into_owned()))
                .collect();
            let width = blocks.iter().map(|b| b.ncols()).sum();
            let mut cat = DMatrix::from_element(d_keep, width, ZERO);
            let mut at = 0;
            for b in &blocks {
                cat.columns_mut(at, b.ncols()).copy_from(b);
                at += b.ncols();
            }
            if width > d_keep {
                thin_factor(&cat)
            } else {
                cat
            }
        };
        Ok(QuantumState { layout: kl, factor: f })
    }

    /// Applies `op` to the registers named by its input layout, which must
    /// occur in this state with the same dimensions (in any order).
    pub fn apply(&self, op: &Operation, cfg: &LabConfig) -> Result<QuantumState> {
        let input = op.input_layout();
        let mut pos = Vec::with_capacity(input.len());
        for r in input.registers() {
            let p = self.layout.position(&r.label).ok_or_else(|| Error::UnknownLabel(r.label.clone()))?;
            let have = self.layout.registers()[p].dim;
            if have != r.dim {
                return Err(Error::LayoutMismatch {
                    expected: format!("{}:{}", r.label, r.dim),
                    found: format!("{}:{}", r.label, have),
                });
            }
            pos.push(p);
        }
        let out_dim = (self.dim() / input.total_dim())
            .checked_mul(op.output_layout().total_dim())
            .ok_or_else(|| Error::Layout("total dimension overflows".into()))?;
        cfg.check_dim(out_dim)?;
        let (factor, layout) = apply_local(&self.factor, &self.layout, &pos, op.compiled(), op.output_layout())?;
        Ok(QuantumState { layout, factor }.compact())
    }

    /// Drops numerically empty ensemble members and re-factors when the
    /// ensemble grows far beyond the dimension.
    pub(crate) fn compact(self) -> Self {
        let QuantumState { layout, factor } = self;
        let keep: Vec<usize> = (0..factor.ncols()).filter(|&j| factor.column(j).norm_squared() > 1e-30).collect();
        let factor = if keep.len() == factor.ncols() {
            factor
        } else if keep.is_empty() {
            factor.columns(0, 1).into_owned()
        } else {
            factor.select_columns(keep.iter())
        };
        let factor = if factor.ncols() > 4 * factor.nrows() { thin_factor(&factor) } else { factor };
        QuantumState { layout, factor }
    }

    /// Reorders registers to `labels` (must be a permutation of this layout).
    pub fn reorder<S: AsRef<str>>(&self, labels: &[S]) -> Result<QuantumState> {
        let pos = self.layout.positions(labels)?;
        if pos.len() != self.layout.len() {
            return Err(Error::Layout("reorder needs every register exactly once".into()));
        }
        let m = self.factor.ncols();
        let mut full = vec![m];
        full.extend(self.layout.dims());
        let mut order = vec![0];
        order.extend(pos.iter().map(|p| p + 1));
        let buf = super::tensor::permute(self.factor.as_slice(), &full, &order);
        let regs: Vec<_> = pos.iter().map(|&p| self.layout.registers()[p].clone()).collect();
        let layout = RegisterLayout::try_from(regs)?;
        Ok(QuantumState { factor: DMatrix::from_vec(self.dim(), m, buf), layout })
    }

    /// Trace distance to a state on the same layout, computed from the factors.
    pub fn trace_distance(&self, other: &QuantumState) -> Result<f64> {
        expect_layout(&self.layout, &other.layout)?;
        Ok(super::measures::trace_distance_factored(&self.factor, &other.factor))
    }

    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let layout = self.layout.concat(&other.layout)?;
        let (a, b) = (&self.factor, &other.factor);
        let mut f = DMatrix::from_element(a.nrows() * b.nrows(), a.ncols() * b.ncols(), ZERO);
        for i in 0..a.ncols() {
            for j in 0..b.ncols() {
                let col = a.column(i).kronecker(&b.column(j));
                f.set_column(i * b.ncols() + j, &col);
            }
        }
        Ok(QuantumState { layout, factor: f })
    }
}

/// Factor of a PSD matrix from its eigendecomposition (tiny negative
/// eigenvalues dropped).
fn psd_gram_factor(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eig(m);
    let cols: Vec<DVector<C64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(k, &l)| vecs.column(k).scale(l.sqrt()))
        .collect();
    if cols.is_empty() {
        DMatrix::from_element(m.nrows(), 1, ZERO)
    } else {
        DMatrix::from_columns(&cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubits(labels: &[&str]) -> RegisterLayout {
        RegisterLayout::new(labels.iter().map(|l| (*l, 2))).unwrap()
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let l = qubits(&["a", "b"]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = DVector::from_vec(vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]);
        let bell = StateVector::new(l, amps).unwrap();
        let q = QuantumState::from(&bell);
        let m = q.marginal(&["a"]).unwrap();
        assert!(super::super::max_abs_diff(m.matrix(), &DMatrix::identity(2, 2).unscale(2.0)) < 1e-12);
        let f = q.marginal_factor(&["b"]).unwrap();
        assert_eq!(f.factor().ncols(), 2);
        assert!((f.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = qubits(&["a"]);
        assert!(StateVector::new(l.clone(), DVector::from_element(2, ONE)).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]).scale(1.5) - DMatrix::identity(2, 2).scale(0.25);
        assert!(DensityOperator::new(l, m).is_err());
    }

    #[test]
    fn reorder_roundtrip() {
        let l = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
        let v = StateVector::basis_digits(l, &[1, 2]).unwrap();
        let q = QuantumState::from(&v).reorder(&["b", "a"]).unwrap();
        let want = StateVector::basis_digits(RegisterLayout::new([("b", 3), ("a", 2)]).unwrap(), &[2, 1]).unwrap();
        assert_eq!(q.as_pure().unwrap(), want);
    }
}
