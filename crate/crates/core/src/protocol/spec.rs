use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Operation, RegisterLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::A => "A",
            Party::B => "B",
        })
    }
}

/// Spaces are indexed as written: `a[k]` is A_k for k in 0..=s, `x[k-1]` is
/// X_k, `y[k-1]` is Y_k.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub(crate) a: Vec<RegisterLayout>,
    pub(crate) b: Vec<RegisterLayout>,
    pub(crate) x: Vec<RegisterLayout>,
    pub(crate) y: Vec<RegisterLayout>,
    pub(crate) a_ops: Vec<Operation>,
    pub(crate) b_ops: Vec<Operation>,
}

fn shape_err(round: usize, detail: impl Into<String>) -> Error {
    Error::Shape { round, detail: detail.into() }
}

fn check_op(round: usize, what: &str, op: &Operation, input: &RegisterLayout, output: &RegisterLayout) -> Result<()> {
    if op.input_layout() != input {
        return Err(shape_err(round, format!("{what} input: expected {input}, found {}", op.input_layout())));
    }
    if op.output_layout() != output {
        return Err(shape_err(round, format!("{what} output: expected {output}, found {}", op.output_layout())));
    }
    Ok(())
}

fn disjoint(round: usize, parts: &[&RegisterLayout]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in parts {
        for label in l.labels() {
            if !seen.insert(label) {
                return Err(shape_err(round, format!("label `{label}` is held twice")));
            }
        }
    }
    Ok(())
}

impl ProtocolSpec {
    pub fn new(
        a: Vec<RegisterLayout>,
        b: Vec<RegisterLayout>,
        x: Vec<RegisterLayout>,
        y: Vec<RegisterLayout>,
        a_ops: Vec<Operation>,
        b_ops: Vec<Operation>,
    ) -> Result<Self> {
        let s = a_ops.len();
        if s == 0 {
            return Err(shape_err(0, "a protocol needs at least one round"));
        }
        if b_ops.len() != s || x.len() != s || y.len() != s - 1 || a.len() != s + 1 || b.len() != s + 1 {
            return Err(shape_err(
                0,
                format!(
                    "s={s} needs {} A spaces, {} B spaces, {s} X spaces, {} Y spaces and {s} ops per party; got {}, {}, {}, {}, {}/{}",
                    s + 1, s + 1, s - 1, a.len(), b.len(), x.len(), y.len(), a_ops.len(), b_ops.len()
                ),
            ));
        }
        disjoint(0, &[&a[0], &b[0]])?;
        for k in 1..=s {
            let a_in = if k == 1 { a[0].clone() } else { a[k - 1].concat(&y[k - 2]).map_err(|e| shape_err(k, e.to_string()))? };
            let a_out = a[k].concat(&x[k - 1]).map_err(|e| shape_err(k, e.to_string()))?;
            check_op(k, &format!("A_{k} op"), &a_ops[k - 1], &a_in, &a_out)?;
            disjoint(k, &[&a[k], &x[k - 1], &b[k - 1]])?;
            let b_in = b[k - 1].concat(&x[k - 1]).map_err(|e| shape_err(k, e.to_string()))?;
            let b_out = if k < s { b[k].concat(&y[k - 1]).map_err(|e| shape_err(k, e.to_string()))? } else { b[s].clone() };
            check_op(k, &format!("B_{k} op"), &b_ops[k - 1], &b_in, &b_out)?;
            if k < s {
                disjoint(k, &[&a[k], &b[k], &y[k - 1]])?;
            } else {
                disjoint(k, &[&a[k], &b[k]])?;
            }
        }
        Ok(ProtocolSpec { a, b, x, y, a_ops, b_ops })
    }

    pub fn rounds(&self) -> usize {
        self.a_ops.len()
    }

    /// A_k, k in 0..=s.
    pub fn a_space(&self, k: usize) -> &RegisterLayout {
        &self.a[k]
    }

    /// B_k, k in 0..=s.
    pub fn b_space(&self, k: usize) -> &RegisterLayout {
        &self.b[k]
    }

    /// X_k, k in 1..=s.
    pub fn x_space(&self, k: usize) -> &RegisterLayout {
        &self.x[k - 1]
    }

    /// Y_k, k in 1..s.
    pub fn y_space(&self, k: usize) -> &RegisterLayout {
        &self.y[k - 1]
    }

    pub fn memory(&self, party: Party) -> &[RegisterLayout] {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
        }
    }

    pub fn ops(&self, party: Party) -> &[Operation] {
        match party {
            Party::A => &self.a_ops,
            Party::B => &self.b_ops,
        }
    }

    /// Which party acts at step i (1-based) and with which operation.
    pub fn step_op(&self, i: usize) -> (Party, &Operation) {
        if i % 2 == 1 {
            (Party::A, &self.a_ops[(i + 1) / 2 - 1])
        } else {
            (Party::B, &self.b_ops[i / 2 - 1])
        }
    }

    /// Message sent at step i: X_k for i = 2k-1, Y_k for i = 2k < 2s, none
    /// for the final step.
    pub fn message(&self, i: usize) -> Option<&RegisterLayout> {
        if i % 2 == 1 {
            Some(&self.x[(i + 1) / 2 - 1])
        } else if i / 2 < self.rounds() {
            Some(&self.y[i / 2 - 1])
        } else {
            None
        }
    }

    /// Input layout A_0 ++ B_0.
    pub fn input_layout(&self) -> RegisterLayout {
        self.a[0].concat(&self.b[0]).expect("checked disjoint")
    }

    /// Sum of log2 dim over all messages, in qubits.
    pub fn communication_complexity(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|l| (l.total_dim() as f64).log2()).sum()
    }

    /// Every label any space of this protocol uses.
    pub fn labels(&self) -> BTreeSet<String> {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.x)
            .chain(&self.y)
            .flat_map(|l| l.labels().map(String::from).collect::<Vec<_>>())
            .collect()
    }

    /// Same protocol with one party's memory spaces and operations replaced.
    pub fn with_party(&self, party: Party, memory: Vec<RegisterLayout>, ops: Vec<Operation>) -> Result<Self> {
        let mut next = self.clone();
        match party {
            Party::A => {
                next.a = memory;
                next.a_ops = ops;
            }
            Party::B => {
                next.b = memory;
                next.b_ops = ops;
            }
        }
        ProtocolSpec::new(next.a, next.b, next.x, next.y, next.a_ops, next.b_ops)
    }
}
