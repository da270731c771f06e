//! Index shuffling for row-major tensors and local application of operators
//! to ensemble factors.
//!
//! A factor `L` (D x m, column-major) stores the columns of rho = L L^dagger
//! back to back, so its buffer is the row-major tensor (m, regs...).

use nalgebra::DMatrix;

use super::{RegisterLayout, C64, ZERO};
use crate::error::Result;

/// Row-major axis permutation: output axis `j` is input axis `order[j]`.
pub fn permute(data: &[C64], dims: &[usize], order: &[usize]) -> Vec<C64> {
    let n = dims.len();
    debug_assert_eq!(order.len(), n);
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    if n == 0 || order.iter().enumerate().all(|(j, &o)| j == o) || data.is_empty() {
        return data.to_vec();
    }
    let mut in_strides = vec![0usize; n];
    let mut s = 1;
    for k in (0..n).rev() {
        in_strides[k] = s;
        s *= dims[k];
    }
    let out_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let strides: Vec<usize> = order.iter().map(|&o| in_strides[o]).collect();
    let last = n - 1;
    let (ld, ls) = (out_dims[last], strides[last]);
    let outer = data.len() / ld;
    let mut out = Vec::with_capacity(data.len());
    let mut idx = vec![0usize; n];
    let mut off = 0usize;
    for _ in 0..outer {
        for t in 0..ld {
            out.push(data[off + t * ls]);
        }
        let mut k = last;
        while k > 0 {
            k -= 1;
            idx[k] += 1;
            off += strides[k];
            if idx[k] < out_dims[k] {
                break;
            }
            off -= strides[k] * out_dims[k];
            idx[k] = 0;
        }
    }
    out
}

/// Kraus operators stacked for application; sparse when mostly zero.
#[derive(Clone, Debug)]
pub(crate) struct CompiledOp {
    pub d_in: usize,
    pub d_out: usize,
    pub count: usize,
    body: Body,
}

#[derive(Clone, Debug)]
enum Body {
    /// (count * d_out) x d_in, Kraus operators stacked vertically.
    Dense(DMatrix<C64>),
    /// (row in the stacked matrix, column, value)
    Sparse(Vec<(usize, usize, C64)>),
}

impl CompiledOp {
    pub fn new(ops: &[DMatrix<C64>]) -> Self {
        let (d_out, d_in) = ops[0].shape();
        let count = ops.len();
        let nnz: usize = ops.iter().map(|k| k.iter().filter(|z| **z != ZERO).count()).sum();
        let body = if nnz * 4 <= count * d_out * d_in {
            let mut entries = Vec::with_capacity(nnz);
            for (j, k) in ops.iter().enumerate() {
                for c in 0..d_in {
                    for r in 0..d_out {
                        let z = k[(r, c)];
                        if z != ZERO {
                            entries.push((j * d_out + r, c, z));
                        }
                    }
                }
            }
            Body::Sparse(entries)
        } else {
            let mut stacked = DMatrix::from_element(count * d_out, d_in, ZERO);
            for (j, k) in ops.iter().enumerate() {
                stacked.view_mut((j * d_out, 0), (d_out, d_in)).copy_from(k);
            }
            Body::Dense(stacked)
        };
        CompiledOp { d_in, d_out, count, body }
    }

    /// `x` is d_in x cols (column-major buffer); returns (count*d_out) x cols.
    fn apply_columns(&self, x: Vec<C64>, cols: usize) -> Vec<C64> {
        match &self.body {
            Body::Dense(k) => {
                let x = DMatrix::from_vec(self.d_in, cols, x);
                (k * x).data.into()
            }
            Body::Sparse(entries) => {
                let h = self.count * self.d_out;
                let mut y = vec![ZERO; h * cols];
                for (xc, yc) in x.chunks_exact(self.d_in).zip(y.chunks_exact_mut(h)) {
                    for &(r, c, z) in entries {
                        yc[r] += z * xc[c];
                    }
                }
                y
            }
        }
    }
}

/// Applies `op` to the registers at positions `in_pos` (in the operator's
/// input order) of every column of `factor`. The output registers take the
/// place of the earliest input register; each Kraus branch becomes its own
/// set of columns.
pub(crate) fn apply_local(
    factor: &DMatrix<C64>,
    layout: &RegisterLayout,
    in_pos: &[usize],
    op: &CompiledOp,
    out_layout: &RegisterLayout,
) -> Result<(DMatrix<C64>, RegisterLayout)> {
    let m = factor.ncols();
    let dims = layout.dims();
    let rest: Vec<usize> = (0..dims.len()).filter(|p| !in_pos.contains(p)).collect();
    let mut full = vec![m];
    full.extend(&dims);
    let mut order = vec![0];
    order.extend(rest.iter().map(|p| p + 1));
    order.extend(in_pos.iter().map(|p| p + 1));
    let buf = permute(factor.as_slice(), &full, &order);
    let d_rest: usize = rest.iter().map(|&p| dims[p]).product();
    let y = op.apply_columns(buf, m * d_rest);

    let nr = rest.len();
    let split = match in_pos.iter().min() {
        Some(&first) => rest.iter().filter(|&&p| p < first).count(),
        None => nr,
    };
    let mut dims2 = vec![m];
    dims2.extend(rest.iter().map(|&p| dims[p]));
    dims2.push(op.count);
    dims2.extend(out_layout.dims());
    let n_out = out_layout.len();
    let mut order2 = vec![0, nr + 1];
    order2.extend(1..=split);
    order2.extend((nr + 2)..(nr + 2 + n_out));
    order2.extend((split + 1)..=nr);
    let buf2 = permute(&y, &dims2, &order2);

    let regs = layout.registers();
    let mut new_regs: Vec<_> = rest[..split].iter().map(|&p| regs[p].clone()).collect();
    new_regs.extend(out_layout.registers().iter().cloned());
    new_regs.extend(rest[split..].iter().map(|&p| regs[p].clone()));
    let new_layout = RegisterLayout::try_from(new_regs)?;
    let d = new_layout.total_dim();
    Ok((DMatrix::from_vec(d, m * op.count, buf2), new_layout))
}

/// Columns X with rho_keep = X X^dagger, `keep` given as positions in
/// layout order. Column block `j` (of width d_rest) belongs to factor column `j`.
pub(crate) fn marginal_columns(factor: &DMatrix<C64>, layout: &RegisterLayout, keep: &[usize]) -> DMatrix<C64> {
    let m = factor.ncols();
    let dims = layout.dims();
    let rest: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let mut full = vec![m];
    full.extend(&dims);
    let mut order = vec![0];
    order.extend(rest.iter().map(|p| p + 1));
    order.extend(keep.iter().map(|p| p + 1));
    let buf = permute(factor.as_slice(), &full, &order);
    let d_keep: usize = keep.iter().map(|&p| dims[p]).product();
    let d_rest: usize = rest.iter().map(|&p| dims[p]).product();
    DMatrix::from_vec(d_keep, m * d_rest, buf)
}

/// Reorders the row and column registers of an operator matrix.
/// `in_order`/`out_order` give, for each target register, its position in
/// the current input/output layout.
pub(crate) fn reorder_operator(
    matrix: &DMatrix<C64>,
    in_dims: &[usize],
    out_dims: &[usize],
    in_order: &[usize],
    out_order: &[usize],
) -> DMatrix<C64> {
    // column-major buffer == row-major tensor (in regs..., out regs...)
    let mut dims = in_dims.to_vec();
    dims.extend(out_dims);
    let ni = in_dims.len();
    let mut order: Vec<usize> = in_order.to_vec();
    order.extend(out_order.iter().map(|p| p + ni));
    let buf = permute(matrix.as_slice(), &dims, &order);
    DMatrix::from_vec(matrix.nrows(), matrix.ncols(), buf)
}
