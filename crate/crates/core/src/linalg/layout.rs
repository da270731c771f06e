use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of registers. Amplitude indices are row-major over the
/// registers, so the first register is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Register>", into = "Vec<Register>")]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total: usize,
}

impl TryFrom<Vec<Register>> for RegisterLayout {
    type Error = Error;

    fn try_from(registers: Vec<Register>) -> Result<Self> {
        let mut total: usize = 1;
        for (k, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::Layout(format!("register `{}` has dimension 0", r.label)));
            }
            if r.label.is_empty() {
                return Err(Error::Layout("empty register label".into()));
            }
            if registers[..k].iter().any(|o| o.label == r.label) {
                return Err(Error::Layout(format!("duplicate label `{}`", r.label)));
            }
            total = total
                .checked_mul(r.dim)
                .ok_or_else(|| Error::Layout("total dimension overflows".into()))?;
        }
        Ok(RegisterLayout { registers, total })
    }
}

impl From<RegisterLayout> for Vec<Register> {
    fn from(l: RegisterLayout) -> Self {
        l.registers
    }
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        regs.into_iter()
            .map(|(label, dim)| Register { label: label.into(), dim })
            .collect::<Vec<_>>()
            .try_into()
    }

    pub fn empty() -> Self {
        RegisterLayout { registers: Vec::new(), total: 1 }
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|r| r.label.as_str())
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.registers[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Positions of `labels` in this layout, in the order given.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| self.position(l.as_ref()).ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string())))
            .collect()
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        regs.try_into()
    }

    /// Registers whose labels are in `keep`, in this layout's order.
    pub fn select<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        for k in keep {
            if !self.contains(k.as_ref()) {
                return Err(Error::UnknownLabel(k.as_ref().to_string()));
            }
        }
        let regs: Vec<Register> = self
            .registers
            .iter()
            .filter(|r| keep.iter().any(|k| k.as_ref() == r.label))
            .cloned()
            .collect();
        regs.try_into()
    }

    /// Registers whose labels are not in `drop`, in this layout's order.
    pub fn without<S: AsRef<str>>(&self, drop: &[S]) -> Self {
        let regs: Vec<Register> = self
            .registers
            .iter()
            .filter(|r| !drop.iter().any(|k| k.as_ref() == r.label))
            .cloned()
            .collect();
        let total = regs.iter().map(|r| r.dim).product();
        RegisterLayout { registers: regs, total }
    }

    pub fn same_labels_as(&self, other: &RegisterLayout) -> bool {
        self.len() == other.len() && self.registers.iter().all(|r| other.registers.contains(r))
    }

    pub fn push(&mut self, label: impl Into<String>, dim: usize) -> Result<()> {
        let mut regs = std::mem::take(&mut self.registers);
        regs.push(Register { label: label.into(), dim });
        *self = regs.try_into()?;
        Ok(())
    }

    /// Per-register digits of a flat index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.registers.len()];
        for (k, r) in self.registers.iter().enumerate().rev() {
            d[k] = index % r.dim;
            index /= r.dim;
        }
        d
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.registers).fold(0, |acc, (d, r)| acc * r.dim + d)
    }

    /// `base` if unused here, otherwise `base'`, `base''`, ...
    pub fn fresh_label(&self, base: &str) -> String {
        let mut label = base.to_string();
        while self.contains(&label) {
            label.push('\'');
        }
        label
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, r) in self.registers.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", r.label, r.dim)?;
        }
        write!(f, "]")
    }
}

pub(crate) fn expect_layout(expected: &RegisterLayout, found: &RegisterLayout) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LayoutMismatch { expected: expected.to_string(), found: found.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert!(RegisterLayout::new([("a", 2), ("a", 3)]).is_err());
        assert!(RegisterLayout::new([("a", 0)]).is_err());
        assert_eq!(RegisterLayout::new([("a", 2), ("b", 3)]).unwrap().total_dim(), 6);
    }

    #[test]
    fn select_keeps_layout_order() {
        let l = RegisterLayout::new([("a", 2), ("b", 3), ("c", 5)]).unwrap();
        let s = l.select(&["c", "a"]).unwrap();
        assert_eq!(s.labels().collect::<Vec<_>>(), vec!["a", "c"]);
        assert!(l.select(&["z"]).is_err());
        assert_eq!(l.without(&["b"]).total_dim(), 10);
    }

    #[test]
    fn json_shape() {
        let l = RegisterLayout::new([("db", 4)]).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(s, r#"[{"label":"db","dim":4}]"#);
        let back: RegisterLayout = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<RegisterLayout>(r#"[{"label":"a","dim":0}]"#).is_err());
    }
}
