use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest covariate count accepted by exhaustive enumeration.
pub const MAX_Q: usize = 24;

/// A subset of `q` covariates as an inclusion mask; bit `i` is covariate `i + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Model {
    bits: u32,
    q: u8,
}

impl Model {
    pub fn new(bits: u32, q: usize) -> Result<Self> {
        if q > 31 {
            return Err(Error::Capacity(format!("q = {q} does not fit a 32-bit mask")));
        }
        if q < 32 && bits >> q != 0 {
            return Err(Error::Dimension(format!("mask {bits:#b} has bits beyond q = {q}")));
        }
        Ok(Model { bits, q: q as u8 })
    }

    pub fn null(q: usize) -> Self {
        Model { bits: 0, q: q as u8 }
    }

    pub fn full(q: usize) -> Self {
        Model { bits: if q == 0 { 0 } else { u32::MAX >> (32 - q) }, q: q as u8 }
    }

    pub fn from_indices(q: usize, idx: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &i in idx {
            if i >= q {
                return Err(Error::Dimension(format!("index {i} out of range for q = {q}")));
            }
            bits |= 1 << i;
        }
        Model::new(bits, q)
    }

    pub fn from_indicators(ind: &[bool]) -> Result<Self> {
        let idx: Vec<usize> = ind.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        Model::from_indices(ind.len(), &idx)
    }

    /// Parses a label such as `"101"` (first character is covariate 1).
    pub fn parse(label: &str) -> Result<Self> {
        let ind = label
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Domain(format!("invalid model label {label:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Model::from_indicators(&ind)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Position of the model in `enumerate_models(q)`.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn q(&self) -> usize {
        self.q as usize
    }

    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.q() && self.bits >> i & 1 == 1
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.q()).filter(|&i| self.contains(i)).collect()
    }

    pub fn is_subset_of(&self, other: &Model) -> bool {
        self.bits & !other.bits == 0
    }

    /// Number of included covariates among indices `from..to`.
    pub fn count_in(&self, from: usize, to: usize) -> usize {
        (from..to.min(self.q())).filter(|&i| self.contains(i)).count()
    }

    pub fn label(&self) -> String {
        (0..self.q()).map(|i| if self.contains(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q == 0 {
            f.write_str("()")
        } else {
            f.write_str(&self.label())
        }
    }
}

impl Serialize for Model {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Model {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Model::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// All `2^q` models in mask order: null first, full last.
pub fn enumerate_models(q: usize) -> Result<Vec<Model>> {
    enumerate_models_capped(q, MAX_Q)
}

/// Like [`enumerate_models`] with an explicit capacity cap (at most 30).
pub fn enumerate_models_capped(q: usize, cap: usize) -> Result<Vec<Model>> {
    let cap = cap.min(30);
    if q > cap {
        return Err(Error::Capacity(format!(
            "q = {q} exceeds the enumeration cap of {cap} covariates"
        )));
    }
    Ok((0..1u32 << q).map(|bits| Model { bits, q: q as u8 }).collect())
}

/// Places `sub` at the included positions of `model` (the stretching matrix `H_γ`).
pub fn embed_coefficients(model: &Model, sub: &[f64]) -> Result<DVector<f64>> {
    if sub.len() != model.size() {
        return Err(Error::Dimension(format!(
            "model {model} has {} covariates but {} coefficients were given",
            model.size(),
            sub.len()
        )));
    }
    let mut out = DVector::zeros(model.q());
    for (k, i) in model.indices().into_iter().enumerate() {
        out[i] = sub[k];
    }
    Ok(out)
}

/// Inverse of [`embed_coefficients`] on the included coordinates.
pub fn extract_coefficients(model: &Model, full: &DVector<f64>) -> Result<Vec<f64>> {
    if full.len() != model.q() {
        return Err(Error::Dimension(format!(
            "vector of length {} for model over {} covariates",
            full.len(),
            model.q()
        )));
    }
    Ok(model.indices().into_iter().map(|i| full[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order_q2() {
        let labels: Vec<String> = enumerate_models(2).unwrap().iter().map(|m| m.label()).collect();
        assert_eq!(labels, ["00", "10", "01", "11"]);
    }

    #[test]
    fn enumeration_q0_is_single_empty_model() {
        let ms = enumerate_models(0).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].size(), 0);
    }

    #[test]
    fn enumeration_q3_sizes() {
        let ms = enumerate_models(3).unwrap();
        assert_eq!(ms.len(), 8);
        assert_eq!(ms.iter().map(|m| m.size()).sum::<usize>(), 3 * 4);
        assert_eq!(ms[0], Model::null(3));
        assert_eq!(ms[7], Model::full(3));
    }

    #[test]
    fn enumeration_refuses_large_q() {
        assert!(matches!(enumerate_models(25), Err(Error::Capacity(_))));
        assert!(enumerate_models_capped(3, 2).is_err());
        assert_eq!(enumerate_models_capped(3, 3).unwrap().len(), 8);
    }

    #[test]
    fn embed_examples() {
        let m = Model::parse("101").unwrap();
        let v = embed_coefficients(&m, &[1.5, -2.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.5, 0.0, -2.0]);
        let v = embed_coefficients(&Model::null(3), &[]).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0, 0.0]);
        let v = embed_coefficients(&Model::full(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
        assert!(matches!(embed_coefficients(&m, &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn label_roundtrip_and_serde() {
        let m = Model::parse("0110").unwrap();
        assert_eq!(m.indices(), vec![1, 2]);
        assert_eq!(Model::parse(&m.label()).unwrap(), m);
        assert!(Model::parse("01x").is_err());
    }
}
