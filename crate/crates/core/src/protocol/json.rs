//! `{s, layouts: {A, B, X, Y}, ops: {A, B}}`

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ProtocolSpec;
use crate::linalg::{Operation, RegisterLayout};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Layouts {
    #[serde(rename = "A")]
    a: Vec<RegisterLayout>,
    #[serde(rename = "B")]
    b: Vec<RegisterLayout>,
    #[serde(rename = "X")]
    x: Vec<RegisterLayout>,
    #[serde(rename = "Y", default)]
    y: Vec<RegisterLayout>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Ops {
    #[serde(rename = "A")]
    a: Vec<Operation>,
    #[serde(rename = "B")]
    b: Vec<Operation>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    s: usize,
    layouts: Layouts,
    ops: Ops,
}

impl Serialize for ProtocolSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SpecJson {
            s: self.rounds(),
            layouts: Layouts { a: self.a.clone(), b: self.b.clone(), x: self.x.clone(), y: self.y.clone() },
            ops: Ops { a: self.a_ops.clone(), b: self.b_ops.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProtocolSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = SpecJson::deserialize(d)?;
        if j.s != j.ops.a.len() {
            return Err(D::Error::custom(format!("s = {} but {} A operations", j.s, j.ops.a.len())));
        }
        let l = j.layouts;
        ProtocolSpec::new(l.a, l.b, l.x, l.y, j.ops.a, j.ops.b).map_err(D::Error::custom)
    }
}
