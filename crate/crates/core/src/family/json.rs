use serde::{Deserialize, Serialize};

use super::MartingaleFamily;
use crate::error::{MprError, Result};
use crate::field::parse_rational;
use crate::model::MomentModel;
use crate::poly::Poly;
use crate::{RationalFunctionOfTime, SpaceTimePolynomial};

/// A coefficient: `"p/q"` when constant in time, otherwise numerator and
/// denominator coefficient arrays in ascending powers of `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(String),
    Ratio { num: Vec<String>, den: Vec<String> },
}

impl Coefficient {
    pub fn encode(f: &RationalFunctionOfTime) -> Self {
        match f.as_constant() {
            Some(c) => Coefficient::Constant(c.to_string()),
            None => Coefficient::Ratio {
                num: f.numer().coeffs().iter().map(ToString::to_string).collect(),
                den: f.denom().coeffs().iter().map(ToString::to_string).collect(),
            },
        }
    }

    pub fn decode(&self) -> Result<RationalFunctionOfTime> {
        let bad = |s: &str| MprError::Malformed(format!("bad rational `{s}`"));
        let poly = |v: &[String]| -> Result<Poly<_>> {
            Ok(Poly::from_coeffs(v.iter().map(|s| parse_rational(s).ok_or_else(|| bad(s))).collect::<Result<_>>()?))
        };
        match self {
            Coefficient::Constant(s) => Ok(RationalFunctionOfTime::constant(parse_rational(s).ok_or_else(|| bad(s))?)),
            Coefficient::Ratio { num, den } => RationalFunctionOfTime::new(poly(num)?, poly(den)?),
        }
    }
}

/// Serialized family: `{"model", "N", "canonical", "certified", "moments", "members"}`.
/// Members and moments are coefficient arrays in ascending powers of `x`
/// (respectively the list `g_0..g_K`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub canonical: bool,
    pub certified: Vec<bool>,
    pub moments: Vec<Coefficient>,
    pub members: Vec<Vec<Coefficient>>,
}

fn encode_poly(p: &SpaceTimePolynomial) -> Vec<Coefficient> {
    p.coeffs().iter().map(Coefficient::encode).collect()
}

impl MartingaleFamily {
    pub fn to_json_value(&self) -> FamilyJson {
        FamilyJson {
            model: self.model.name().to_string(),
            n: self.order(),
            canonical: self.canonical,
            certified: self.certified.clone(),
            moments: self.model.moments().iter().map(Coefficient::encode).collect(),
            members: self.members.iter().map(encode_poly).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("family serializes")
    }

    /// Rebuild a family from its JSON form; certification is recomputed.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: FamilyJson = serde_json::from_str(text).map_err(|e| MprError::Malformed(e.to_string()))?;
        let g = j.moments.iter().map(Coefficient::decode).collect::<Result<Vec<_>>>()?;
        let model = MomentModel::new(j.model, g)?;
        let members = j
            .members
            .iter()
            .map(|m| Ok(Poly::from_coeffs(m.iter().map(Coefficient::decode).collect::<Result<Vec<_>>>()?)))
            .collect::<Result<Vec<_>>>()?;
        if members.len() != j.n + 1 {
            return Err(MprError::Malformed(format!("N = {} but {} members", j.n, members.len())));
        }
        MartingaleFamily::from_members(model, members)
    }
}
