//! JSON forms: layouts as `[{label, dim}]`, matrices as row-major nested
//! lists of `[re, im]` pairs. Doubles use shortest round-trip formatting, so
//! parse(serialize(v)) is bit-exact.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DensityOperator, Isometry, KrausChannel, OpKind, Operation, RegisterLayout, SchmidtDecomposition, StateVector, C64};

pub type Entry = [f64; 2];

pub fn matrix_to_rows(m: &DMatrix<C64>) -> Vec<Vec<Entry>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<Entry>], nrows: usize, ncols: usize) -> Result<DMatrix<C64>, String> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("expected a {nrows}x{ncols} matrix"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateJson {
    layout: RegisterLayout,
    amplitudes: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityJson {
    layout: RegisterLayout,
    entries: Vec<Vec<Entry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsometryJson {
    input_layout: RegisterLayout,
    output_layout: RegisterLayout,
    entries: Vec<Vec<Entry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausJson {
    input_layout: RegisterLayout,
    output_layout: RegisterLayout,
    kraus: Vec<Vec<Vec<Entry>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OpJson {
    Isometry(IsometryJson),
    Kraus(KrausJson),
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StateJson {
            layout: self.layout().clone(),
            amplitudes: self.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = StateJson::deserialize(d)?;
        let amps = DVector::from_iterator(j.amplitudes.len(), j.amplitudes.iter().map(|e| C64::new(e[0], e[1])));
        StateVector::new(j.layout, amps).map_err(D::Error::custom)
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DensityJson { layout: self.layout().clone(), entries: matrix_to_rows(self.matrix()) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = DensityJson::deserialize(d)?;
        let n = j.layout.total_dim();
        let m = rows_to_matrix(&j.entries, n, n).map_err(D::Error::custom)?;
        DensityOperator::new(j.layout, m).map_err(D::Error::custom)
    }
}

impl From<&Isometry> for IsometryJson {
    fn from(v: &Isometry) -> Self {
        IsometryJson {
            input_layout: v.input_layout().clone(),
            output_layout: v.output_layout().clone(),
            entries: matrix_to_rows(v.matrix()),
        }
    }
}

impl TryFrom<IsometryJson> for Isometry {
    type Error = crate::Error;
    fn try_from(j: IsometryJson) -> crate::Result<Self> {
        let m = rows_to_matrix(&j.entries, j.output_layout.total_dim(), j.input_layout.total_dim())
            .map_err(crate::Error::InvalidOperator)?;
        Isometry::new(j.input_layout, j.output_layout, m)
    }
}

impl From<&KrausChannel> for KrausJson {
    fn from(c: &KrausChannel) -> Self {
        KrausJson {
            input_layout: c.input_layout().clone(),
            output_layout: c.output_layout().clone(),
            kraus: c.kraus_ops().iter().map(matrix_to_rows).collect(),
        }
    }
}

impl TryFrom<KrausJson> for KrausChannel {
    type Error = crate::Error;
    fn try_from(j: KrausJson) -> crate::Result<Self> {
        let (r, c) = (j.output_layout.total_dim(), j.input_layout.total_dim());
        let ops = j
            .kraus
            .iter()
            .map(|k| rows_to_matrix(k, r, c).map_err(crate::Error::InvalidOperator))
            .collect::<crate::Result<Vec<_>>>()?;
        KrausChannel::new(j.input_layout, j.output_layout, ops)
    }
}

macro_rules! via_json {
    ($ty:ty, $json:ty, $wrap:expr) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                $wrap(<$json>::from(self)).serialize(s)
            }
        }
    };
}

via_json!(Isometry, IsometryJson, OpJson::Isometry);
via_json!(KrausChannel, KrausJson, OpJson::Kraus);

impl<'de> Deserialize<'de> for Isometry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match OpJson::deserialize(d)? {
            OpJson::Isometry(j) => j.try_into().map_err(D::Error::custom),
            OpJson::Kraus(_) => Err(D::Error::custom("expected kind \"isometry\"")),
        }
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match OpJson::deserialize(d)? {
            OpJson::Kraus(j) => j.try_into().map_err(D::Error::custom),
            OpJson::Isometry(j) => Isometry::try_from(j).map(Into::into).map_err(D::Error::custom),
        }
    }
}

impl Serialize for Operation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.kind() {
            OpKind::Isometry(v) => v.serialize(s),
            OpKind::Channel(c) => c.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Operation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match OpJson::deserialize(d)? {
            OpJson::Isometry(j) => Isometry::try_from(j).map(Into::into).map_err(D::Error::custom),
            OpJson::Kraus(j) => KrausChannel::try_from(j).map(Into::into).map_err(D::Error::custom),
        }
    }
}

#[derive(Serialize)]
struct SchmidtJson<'a> {
    coefficients: &'a [f64],
    rank: usize,
    left_layout: &'a RegisterLayout,
    right_layout: &'a RegisterLayout,
    left_basis: Vec<Vec<Entry>>,
    right_basis: Vec<Vec<Entry>>,
}

impl Serialize for SchmidtDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SchmidtJson {
            coefficients: &self.coefficients,
            rank: self.rank,
            left_layout: &self.left_layout,
            right_layout: &self.right_layout,
            left_basis: matrix_to_rows(&self.left_basis),
            right_basis: matrix_to_rows(&self.right_basis),
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_random_unitary, random_density, rng_from_seed};

    #[test]
    fn density_roundtrip_is_bit_exact() {
        let l = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
        let rho = random_density(l, 3, &mut rng_from_seed(4));
        let s = serde_json::to_string(&rho).unwrap();
        let back: DensityOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn operation_roundtrip() {
        let op: Operation = haar_random_unitary(3, 2).unwrap().into();
        let s = serde_json::to_string(&op).unwrap();
        assert!(s.starts_with(r#"{"kind":"isometry""#));
        let back: Operation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn malformed_state_is_rejected() {
        let bad = r#"{"layout":[{"label":"a","dim":2}],"amplitudes":[[1,0],[1,0]]}"#;
        assert!(serde_json::from_str::<StateVector>(bad).is_err());
    }
}
