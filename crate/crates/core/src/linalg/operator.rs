use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::tensor::{reorder_operator, CompiledOp};
use super::{max_abs_diff, RegisterLayout, C64, ONE, ZERO};
use crate::error::{Error, Result};

const ISOMETRY_TOL: f64 = 1e-9;
const TP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Isometry {
    input: RegisterLayout,
    output: RegisterLayout,
    matrix: DMatrix<C64>,
}

impl PartialEq for Isometry {
    fn eq(&self, other: &Self) -> bool {
        self.input == other.input && self.output == other.output && self.matrix == other.matrix
    }
}

fn check_shape(input: &RegisterLayout, output: &RegisterLayout, m: &DMatrix<C64>) -> Result<()> {
    if m.shape() != (output.total_dim(), input.total_dim()) {
        return Err(Error::InvalidOperator(format!(
            "matrix {:?} does not map {input} to {output}",
            m.shape()
        )));
    }
    Ok(())
}

impl Isometry {
    pub fn new(input: RegisterLayout, output: RegisterLayout, matrix: DMatrix<C64>) -> Result<Self> {
        check_shape(&input, &output, &matrix)?;
        if output.total_dim() < input.total_dim() {
            return Err(Error::InvalidOperator(format!("output {output} smaller than input {input}")));
        }
        let gram = matrix.adjoint() * &matrix;
        let dev = max_abs_diff(&gram, &super::identity(input.total_dim()));
        if dev > ISOMETRY_TOL {
            return Err(Error::InvalidOperator(format!("columns not orthonormal (deviation {dev:e})")));
        }
        Ok(Isometry { input, output, matrix })
    }

    pub(crate) fn from_parts(input: RegisterLayout, output: RegisterLayout, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.shape(), (output.total_dim(), input.total_dim()));
        Isometry { input, output, matrix }
    }

    pub fn identity(layout: RegisterLayout) -> Self {
        let d = layout.total_dim();
        Isometry { input: layout.clone(), output: layout, matrix: super::identity(d) }
    }

    /// Identity matrix between layouts of equal total dimension.
    pub fn relabel(input: RegisterLayout, output: RegisterLayout) -> Result<Self> {
        if input.total_dim() != output.total_dim() {
            return Err(Error::InvalidOperator(format!("cannot relabel {input} as {output}")));
        }
        let d = input.total_dim();
        Ok(Isometry { input, output, matrix: super::identity(d) })
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &RegisterLayout {
        &self.output
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.input.total_dim() == self.output.total_dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    input: RegisterLayout,
    output: RegisterLayout,
    ops: Vec<DMatrix<C64>>,
}

impl KrausChannel {
    pub fn new(input: RegisterLayout, output: RegisterLayout, ops: Vec<DMatrix<C64>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidOperator("channel needs at least one Kraus operator".into()));
        }
        let mut sum = DMatrix::from_element(input.total_dim(), input.total_dim(), ZERO);
        for k in &ops {
            check_shape(&input, &output, k)?;
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &super::identity(input.total_dim()));
        if dev > TP_TOL {
            return Err(Error::InvalidOperator(format!("not trace preserving (deviation {dev:e})")));
        }
        Ok(KrausChannel { input, output, ops })
    }

    pub fn identity(layout: RegisterLayout) -> Self {
        let d = layout.total_dim();
        KrausChannel { input: layout.clone(), output: layout, ops: vec![super::identity(d)] }
    }

    pub fn relabel(input: RegisterLayout, output: RegisterLayout) -> Result<Self> {
        let iso = Isometry::relabel(input, output)?;
        Ok(iso.into())
    }

    /// Traces out every register of `input` not listed in `keep`; the
    /// output keeps the remaining registers in input order.
    pub fn partial_trace<S: AsRef<str>>(input: RegisterLayout, keep: &[S]) -> Result<Self> {
        let out = input.select(keep)?;
        let gone: Vec<String> =
            input.labels().filter(|l| !out.contains(l)).map(String::from).collect();
        let traced = input.select(&gone)?;
        let kept_pos = input.positions(&out.labels().collect::<Vec<_>>())?;
        let traced_pos = input.positions(&gone)?;
        let dk = out.total_dim();
        let mut ops = vec![DMatrix::from_element(dk, input.total_dim(), ZERO); traced.total_dim()];
        for i in 0..input.total_dim() {
            let digits = input.digits(i);
            let k = kept_pos.iter().fold(0, |acc, &p| acc * input.registers()[p].dim + digits[p]);
            let t = traced_pos.iter().fold(0, |acc, &p| acc * input.registers()[p].dim + digits[p]);
            ops[t][(k, i)] = ONE;
        }
        Ok(KrausChannel { input, output: out, ops })
    }

    /// Replaces the whole input with a fixed state on `output`.
    pub fn replace(input: RegisterLayout, state: &super::StateVector) -> Self {
        let (di, a) = (input.total_dim(), state.amplitudes());
        let ops = (0..di)
            .map(|i| {
                let mut k = DMatrix::from_element(a.len(), di, ZERO);
                k.set_column(i, a);
                k
            })
            .collect();
        KrausChannel { input, output: state.layout().clone(), ops }
    }

    /// Complete dephasing in the computational basis of the listed registers.
    pub fn measure<S: AsRef<str>>(layout: RegisterLayout, registers: &[S]) -> Result<Self> {
        let sub = layout.select(registers)?;
        let sub_pos = layout.positions(&sub.labels().collect::<Vec<_>>())?;
        let d = layout.total_dim();
        let mut ops = vec![DMatrix::from_element(d, d, ZERO); sub.total_dim()];
        for i in 0..d {
            let digits = layout.digits(i);
            let o = sub_pos.iter().fold(0, |acc, &p| acc * layout.registers()[p].dim + digits[p]);
            ops[o][(i, i)] = ONE;
        }
        Ok(KrausChannel { output: layout.clone(), input: layout, ops })
    }

    /// This channel tensored with the identity on `pass` (appended last).
    pub fn tensor_identity(&self, pass: &RegisterLayout) -> Result<Self> {
        let id = super::identity(pass.total_dim());
        Ok(KrausChannel {
            input: self.input.concat(pass)?,
            output: self.output.concat(pass)?,
            ops: self.ops.iter().map(|k| k.kronecker(&id)).collect(),
        })
    }

    /// `next` after `self`.
    pub fn compose(&self, next: &KrausChannel) -> Result<Self> {
        super::expect_layout(&self.output, &next.input)?;
        let ops = next.ops.iter().flat_map(|b| self.ops.iter().map(move |a| b * a)).collect();
        Ok(KrausChannel { input: self.input.clone(), output: next.output.clone(), ops })
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &RegisterLayout {
        &self.output
    }

    pub fn kraus_ops(&self) -> &[DMatrix<C64>] {
        &self.ops
    }

    /// Stinespring isometry V = sum_j K_j (x) |j>_env on output ++ [env].
    pub fn stinespring(&self, env_label: &str) -> Result<Isometry> {
        let k = self.ops.len();
        let mut output = self.output.clone();
        output.push(env_label, k)?;
        let (dout, din) = (self.output.total_dim(), self.input.total_dim());
        let mut v = DMatrix::from_element(dout * k, din, ZERO);
        for (j, op) in self.ops.iter().enumerate() {
            for c in 0..din {
                for r in 0..dout {
                    v[(r * k + j, c)] = op[(r, c)];
                }
            }
        }
        Ok(Isometry::from_parts(self.input.clone(), output, v))
    }
}

impl From<Isometry> for KrausChannel {
    fn from(v: Isometry) -> Self {
        KrausChannel { input: v.input, output: v.output, ops: vec![v.matrix] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OpKind {
    Isometry(Isometry),
    Channel(KrausChannel),
}

/// A party's action in one step.
#[derive(Clone, Debug)]
pub struct Operation {
    kind: OpKind,
    compiled: OnceLock<CompiledOp>,
}

impl PartialEq for Operation {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl From<OpKind> for Operation {
    fn from(kind: OpKind) -> Self {
        Operation { kind, compiled: OnceLock::new() }
    }
}

impl From<Isometry> for Operation {
    fn from(v: Isometry) -> Self {
        OpKind::Isometry(v).into()
    }
}

impl From<KrausChannel> for Operation {
    fn from(c: KrausChannel) -> Self {
        OpKind::Channel(c).into()
    }
}

impl Operation {
    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        match &self.kind {
            OpKind::Isometry(v) => &v.input,
            OpKind::Channel(c) => &c.input,
        }
    }

    pub fn output_layout(&self) -> &RegisterLayout {
        match &self.kind {
            OpKind::Isometry(v) => &v.output,
            OpKind::Channel(c) => &c.output,
        }
    }

    pub fn kraus_ops(&self) -> &[DMatrix<C64>] {
        match &self.kind {
            OpKind::Isometry(v) => std::slice::from_ref(&v.matrix),
            OpKind::Channel(c) => &c.ops,
        }
    }

    pub fn is_isometry(&self) -> bool {
        matches!(self.kind, OpKind::Isometry(_))
    }

    pub fn to_channel(&self) -> KrausChannel {
        match &self.kind {
            OpKind::Isometry(v) => v.clone().into(),
            OpKind::Channel(c) => c.clone(),
        }
    }

    /// Isometric form: the operation itself, or its Stinespring dilation
    /// with environment register `env_label` (dimension 1 for isometries).
    pub fn dilate(&self, env_label: &str) -> Result<Isometry> {
        match &self.kind {
            OpKind::Isometry(v) => {
                let mut out = v.output.clone();
                out.push(env_label, 1)?;
                Ok(Isometry::from_parts(v.input.clone(), out, v.matrix.clone()))
            }
            OpKind::Channel(c) => c.stinespring(env_label),
        }
    }

    pub(crate) fn compiled(&self) -> &CompiledOp {
        self.compiled.get_or_init(|| CompiledOp::new(self.kraus_ops()))
    }
}

/// Tensors `v` (input -> output) with the identity on `pass`, then reorders
/// input registers to `in_target` and output registers to `out_target`
/// (both given as label lists).
pub(crate) fn embed(
    v: &Isometry,
    pass: &RegisterLayout,
    in_target: &[String],
    out_target: &[String],
) -> Result<Isometry> {
    let full_in = v.input.concat(pass)?;
    let full_out = v.output.concat(pass)?;
    let m = v.matrix.kronecker(&super::identity(pass.total_dim()));
    let in_order = full_in.positions(in_target)?;
    let out_order = full_out.positions(out_target)?;
    if in_order.len() != full_in.len() || out_order.len() != full_out.len() {
        return Err(Error::Layout("embedding must name every register".into()));
    }
    let m = reorder_operator(&m, &full_in.dims(), &full_out.dims(), &in_order, &out_order);
    Ok(Isometry::from_parts(full_in.reordered(in_target)?, full_out.reordered(out_target)?, m))
}

impl RegisterLayout {
    /// Same registers listed in the order of `labels`.
    pub fn reordered<S: AsRef<str>>(&self, labels: &[S]) -> Result<RegisterLayout> {
        let pos = self.positions(labels)?;
        if pos.len() != self.len() {
            return Err(Error::Layout("reorder needs every register exactly once".into()));
        }
        RegisterLayout::try_from(pos.iter().map(|&p| self.registers()[p].clone()).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateVector;

    fn l(regs: &[(&str, usize)]) -> RegisterLayout {
        RegisterLayout::new(regs.iter().map(|(a, b)| (*a, *b))).unwrap()
    }

    #[test]
    fn rejects_non_isometry_and_non_tp() {
        let a = l(&[("a", 2)]);
        assert!(Isometry::new(a.clone(), a.clone(), DMatrix::from_element(2, 2, ONE)).is_err());
        assert!(KrausChannel::new(a.clone(), a.clone(), vec![DMatrix::identity(2, 2).scale(0.5)]).is_err());
        assert!(KrausChannel::new(a.clone(), a, vec![]).is_err());
    }

    #[test]
    fn partial_trace_channel_matches_marginal() {
        let lay = l(&[("a", 2), ("b", 3)]);
        let ch = KrausChannel::partial_trace(lay.clone(), &["b"]).unwrap();
        let ch = KrausChannel::new(ch.input.clone(), ch.output.clone(), ch.ops.clone()).unwrap();
        let v = StateVector::basis_digits(lay, &[1, 2]).unwrap();
        let q = crate::linalg::QuantumState::from(&v);
        let out = q.apply(&ch.into(), &Default::default()).unwrap();
        assert_eq!(out.layout(), &l(&[("b", 3)]));
        let rho = out.to_density().unwrap();
        assert!((rho.matrix()[(2, 2)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_reorders() {
        // swap-free check: X on `a`, passthrough `p`, inputs listed as [p, a]
        let x = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let v = Isometry::new(l(&[("a", 2)]), l(&[("a", 2)]), x).unwrap();
        let e = embed(&v, &l(&[("p", 2)]), &["p".into(), "a".into()], &["p".into(), "a".into()]).unwrap();
        let want = DMatrix::identity(2, 2).kronecker(&v.matrix);
        assert_eq!(e.matrix, want);
    }
}
