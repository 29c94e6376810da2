//! JSON formats for tensors, polynomials, varieties, multiway arrays and results.
//!
//! Numbers may be JSON integers, floats, or strings holding a fraction such as
//! `"-83/20"`; all three parse exactly into rationals first, so fixtures with
//! rational entries load losslessly into exact tensors.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::scalar::{rational_from_f64, Field};
use crate::tensor::SymTensor;
use crate::variety::VarietySpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonNum {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Default for JsonNum {
    fn default() -> Self {
        JsonNum::Int(0)
    }
}

impl JsonNum {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            JsonNum::Int(v) => Ok(BigRational::from_integer(BigInt::from(*v))),
            JsonNum::Float(v) => rational_from_f64(*v).ok_or_else(|| Error::Invalid(format!("non-finite number {v}"))),
            JsonNum::Text(s) => parse_rational(s),
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("cannot parse number {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(i) = BigInt::from_str(s) {
        return Ok(BigRational::from_integer(i));
    }
    let f = f64::from_str(s).map_err(|_| bad())?;
    rational_from_f64(f).ok_or_else(bad)
}

/// Scalars that can be read from and written to the `(re, im)` JSON pairs.
pub trait JsonScalar: Field {
    fn from_parts(re: BigRational, im: BigRational) -> Result<Self>;
    fn to_parts(&self) -> (JsonNum, JsonNum);
}

fn rat_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl JsonScalar for Complex64 {
    fn from_parts(re: BigRational, im: BigRational) -> Result<Self> {
        Ok(Complex64::new(rat_f64(&re), rat_f64(&im)))
    }
    fn to_parts(&self) -> (JsonNum, JsonNum) {
        (JsonNum::Float(self.re), JsonNum::Float(self.im))
    }
}

impl JsonScalar for f64 {
    fn from_parts(re: BigRational, im: BigRational) -> Result<Self> {
        if !im.is_zero() {
            return Err(Error::Invalid("complex value where a real one is required".into()));
        }
        Ok(rat_f64(&re))
    }
    fn to_parts(&self) -> (JsonNum, JsonNum) {
        (JsonNum::Float(*self), JsonNum::Int(0))
    }
}

impl JsonScalar for BigRational {
    fn from_parts(re: BigRational, im: BigRational) -> Result<Self> {
        if !im.is_zero() {
            return Err(Error::Invalid("complex value where a rational one is required".into()));
        }
        Ok(re)
    }
    fn to_parts(&self) -> (JsonNum, JsonNum) {
        let text = if self.is_integer() {
            match self.to_integer().to_i64() {
                Some(i) => JsonNum::Int(i),
                None => JsonNum::Text(self.to_string()),
            }
        } else {
            JsonNum::Text(self.to_string())
        };
        (text, JsonNum::Int(0))
    }
}

fn scalar<S: JsonScalar>(re: &JsonNum, im: &JsonNum) -> Result<S> {
    S::from_parts(re.to_rational()?, im.to_rational()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub alpha: Vec<u32>,
    pub re: JsonNum,
    #[serde(default)]
    pub im: JsonNum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub n: usize,
    pub d: u32,
    pub entries: Vec<TensorEntry>,
}

impl TensorJson {
    pub fn to_tensor<S: JsonScalar>(&self) -> Result<SymTensor<S>> {
        let mut t = SymTensor::zeros(self.n, self.d);
        let mut seen = HashSet::new();
        for e in &self.entries {
            let alpha = MultiIndex::from(e.alpha.clone());
            if alpha.len() != self.n || alpha.degree() > self.d {
                return Err(Error::IndexOutOfRange(alpha));
            }
            if !seen.insert(alpha.clone()) {
                return Err(Error::DuplicateIndex(alpha));
            }
            t.set(alpha.as_slice(), scalar(&e.re, &e.im)?)?;
        }
        Ok(t)
    }

    /// Nonzero entries only.
    pub fn from_tensor<S: JsonScalar>(t: &SymTensor<S>) -> Self {
        let entries = t
            .index_set()
            .into_iter()
            .zip(t.entries())
            .filter(|(_, v)| !v.is_zero())
            .map(|(a, v)| {
                let (re, im) = v.to_parts();
                TensorEntry { alpha: a.into_vec(), re, im }
            })
            .collect();
        TensorJson { n: t.n(), d: t.order(), entries }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub exp: Vec<u32>,
    pub re: JsonNum,
    #[serde(default)]
    pub im: JsonNum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub nvars: usize,
    pub terms: Vec<PolyTerm>,
}

impl PolyJson {
    pub fn to_poly<S: JsonScalar>(&self) -> Result<Poly<S>> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((MultiIndex::from(t.exp.clone()), scalar(&t.re, &t.im)?)))
            .collect::<Result<Vec<_>>>()?;
        Poly::from_terms(self.nvars, terms)
    }

    pub fn from_poly<S: JsonScalar>(p: &Poly<S>) -> Self {
        let terms = p
            .terms()
            .map(|(e, c)| {
                let (re, im) = c.to_parts();
                PolyTerm { exp: e.as_slice().to_vec(), re, im }
            })
            .collect();
        PolyJson { nvars: p.nvars(), terms }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarietyJson {
    pub n: usize,
    pub generators: Vec<PolyJson>,
    #[serde(rename = "dimX", default, skip_serializing_if = "Option::is_none")]
    pub dim_x: Option<usize>,
    /// One homogeneous point `[[re, im], …]` of length `n + 1`, or an affine one of length `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<[f64; 2]>>,
}

impl VarietyJson {
    pub fn to_variety<S: JsonScalar>(&self) -> Result<VarietySpec<S>> {
        let gens = self.generators.iter().map(PolyJson::to_poly).collect::<Result<Vec<_>>>()?;
        let mut v = VarietySpec::new(self.n, gens)?;
        v.dim_x = self.dim_x;
        if let Some(w) = &self.witness {
            let pt = w
                .iter()
                .map(|[re, im]| S::from_parts(rational(*re)?, rational(*im)?))
                .collect::<Result<Vec<_>>>()?;
            v.witness = Some(vec![pt]);
        }
        Ok(v)
    }

    pub fn from_variety<S: JsonScalar>(v: &VarietySpec<S>) -> Self {
        VarietyJson {
            n: v.n(),
            generators: v.generators_h().iter().map(PolyJson::from_poly).collect(),
            dim_x: v.dim_x,
            witness: None,
        }
    }
}

fn rational(v: f64) -> Result<BigRational> {
    rational_from_f64(v).ok_or_else(|| Error::Invalid(format!("non-finite number {v}")))
}

/// `[re, im]` pairs.
pub fn pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|c| [c.re, c.im]).collect()
}

pub fn from_pairs(values: &[[f64; 2]]) -> Vec<Complex64> {
    values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiwayJson {
    pub k: usize,
    pub d: usize,
    /// Row-major over `(i_1, …, i_k)`.
    pub entries: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub rank: usize,
    pub lambdas: Vec<[f64; 2]>,
    pub points: Vec<Vec<[f64; 2]>>,
    pub abs_error: f64,
    pub rel_error: f64,
    pub variety_violation: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_at_infinity: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_at_infinity: Option<Vec<[f64; 2]>>,
}

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn read_tensor<S: JsonScalar>(path: impl AsRef<Path>) -> Result<SymTensor<S>> {
    serde_json::from_str::<TensorJson>(&read_to_string(path)?)?.to_tensor()
}

pub fn read_variety<S: JsonScalar>(path: impl AsRef<Path>) -> Result<VarietySpec<S>> {
    serde_json::from_str::<VarietyJson>(&read_to_string(path)?)?.to_variety()
}
