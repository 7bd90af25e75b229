use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::rat_to_f64;

/// Rational characteristic `[a, b]`, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Characteristic {
    #[serde(with = "pairs")]
    a: Vec<Rational64>,
    #[serde(with = "pairs")]
    b: Vec<Rational64>,
}

impl Characteristic {
    pub fn new(a: Vec<Rational64>, b: Vec<Rational64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "characteristic halves of lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Characteristic { a, b })
    }

    pub fn zero(g: usize) -> Self {
        Characteristic { a: vec![Rational64::zero(); g], b: vec![Rational64::zero(); g] }
    }

    /// `[num/den, …]` pairs for both halves.
    pub fn from_pairs(a: &[(i64, i64)], b: &[(i64, i64)]) -> Result<Self> {
        let conv = |v: &[(i64, i64)]| -> Result<Vec<Rational64>> {
            v.iter()
                .map(|&(n, d)| {
                    if d == 0 {
                        Err(Error::InvalidInput("zero denominator in characteristic".into()))
                    } else {
                        Ok(Rational64::new(n, d))
                    }
                })
                .collect()
        };
        Self::new(conv(a)?, conv(b)?)
    }

    /// `[Δ⁻¹ε, 0]`.
    pub fn from_coset(rep: &[i64], delta: &[i64]) -> Self {
        let a = rep.iter().zip(delta).map(|(&e, &d)| Rational64::new(e, d)).collect();
        Characteristic { a, b: vec![Rational64::zero(); rep.len()] }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[Rational64] {
        &self.a
    }

    pub fn b(&self) -> &[Rational64] {
        &self.b
    }

    pub fn a_f64(&self) -> Vec<f64> {
        self.a.iter().map(rat_to_f64).collect()
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(rat_to_f64).collect()
    }

    pub fn negate(&self) -> Self {
        Characteristic { a: self.a.iter().map(|x| -x).collect(), b: self.b.iter().map(|x| -x).collect() }
    }

    /// Shifts both halves by integer vectors.
    pub fn shifted(&self, p: &[i64], q: &[i64]) -> Self {
        Characteristic {
            a: self.a.iter().zip(p).map(|(x, &k)| x + k).collect(),
            b: self.b.iter().zip(q).map(|(x, &k)| x + k).collect(),
        }
    }
}

/// Fractional part of an exact rational, in `[0, 1)`.
pub(crate) fn frac(q: Rational64) -> f64 {
    rat_to_f64(&(q - q.floor()))
}

mod pairs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<[i64; 2]> = v.iter().map(|q| [*q.numer(), *q.denom()]).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational64>, D::Error> {
        let raw: Vec<[i64; 2]> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|[n, den]| {
                if den == 0 {
                    Err(serde::de::Error::custom("zero denominator"))
                } else {
                    Ok(Rational64::new(n, den))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_json() {
        let ch = Characteristic::from_pairs(&[(2, 4)], &[(-3, 6)]).unwrap();
        assert_eq!(ch.a()[0], Rational64::new(1, 2));
        let s = serde_json::to_string(&ch).unwrap();
        assert_eq!(s, r#"{"a":[[1,2]],"b":[[-1,2]]}"#);
        let back: Characteristic = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ch);
        assert!(serde_json::from_str::<Characteristic>(r#"{"a":[[1,0]],"b":[[0,1]]}"#).is_err());
    }

    #[test]
    fn fractional_part() {
        assert_eq!(frac(Rational64::new(-1, 3)), 2.0 / 3.0);
        assert_eq!(frac(Rational64::new(7, 2)), 0.5);
    }
}
