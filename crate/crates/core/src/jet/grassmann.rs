use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub const DEFAULT_DEGREE_CAP: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("Grassmann degree {0} exceeds the cap {1}")]
pub struct DegreeOverflow(pub usize, pub usize);

/// Element of a finitely generated Grassmann algebra: sorted generator
/// subsets to coefficients. The empty subset is the body.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GrassmannValue {
    pub terms: BTreeMap<Vec<u32>, Complex64>,
}

/// Sort `gens` in place, returning the permutation sign, or `None` when a
/// generator repeats.
pub fn sort_generators(gens: &mut [u32]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..gens.len() {
        let mut j = i;
        while j > 0 && gens[j - 1] > gens[j] {
            gens.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && gens[j - 1] == gens[j] {
            return None;
        }
    }
    if gens.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(sign)
}

impl GrassmannValue {
    pub fn zero() -> Self {
        GrassmannValue::default()
    }

    pub fn scalar(v: Complex64) -> Self {
        let mut g = GrassmannValue::zero();
        g.add_term(Vec::new(), v);
        g
    }

    /// `coeff * theta_gen`.
    pub fn generator(gen: u32, coeff: f64) -> Self {
        let mut g = GrassmannValue::zero();
        g.add_term(vec![gen], Complex64::new(coeff, 0.0));
        g
    }

    pub fn add_term(&mut self, subset: Vec<u32>, v: Complex64) {
        if v == Complex64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(subset).or_default() += v;
    }

    pub fn body(&self) -> Complex64 {
        self.terms.get(&Vec::new()).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        GrassmannValue {
            terms: self.terms.iter().map(|(s, v)| (s.clone(), v * k)).collect(),
        }
    }

    /// Product with the signed-shuffle rule, failing past `cap` generators.
    pub fn mul_capped(&self, rhs: &GrassmannValue, cap: usize) -> Result<GrassmannValue, DegreeOverflow> {
        let mut out = GrassmannValue::zero();
        for (s, a) in &self.terms {
            for (t, b) in &rhs.terms {
                let mut gens: Vec<u32> = s.iter().chain(t).copied().collect();
                if gens.len() > cap {
                    return Err(DegreeOverflow(gens.len(), cap));
                }
                if let Some(sign) = sort_generators(&mut gens) {
                    out.add_term(gens, a * b * sign);
                }
            }
        }
        Ok(out)
    }
}

impl Add for &GrassmannValue {
    type Output = GrassmannValue;
    fn add(self, rhs: &GrassmannValue) -> GrassmannValue {
        let mut out = self.clone();
        for (s, v) in &rhs.terms {
            out.add_term(s.clone(), *v);
        }
        out
    }
}

impl Sub for &GrassmannValue {
    type Output = GrassmannValue;
    fn sub(self, rhs: &GrassmannValue) -> GrassmannValue {
        self + &rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &GrassmannValue {
    type Output = GrassmannValue;
    /// Panics past the default degree cap; use [`GrassmannValue::mul_capped`] to handle it.
    fn mul(self, rhs: &GrassmannValue) -> GrassmannValue {
        self.mul_capped(rhs, DEFAULT_DEGREE_CAP).expect("Grassmann degree cap")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anticommuting_generators() {
        let x = GrassmannValue::generator(3, 0.5);
        let y = GrassmannValue::generator(1, -2.0);
        assert_eq!(&x * &y, (&y * &x).scale(Complex64::new(-1.0, 0.0)));
        assert!((&x * &x).terms.is_empty());
        assert_eq!((&x * &y).terms[&vec![1, 3]], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cap_is_an_error() {
        let mut v = GrassmannValue::scalar(Complex64::new(1.0, 0.0));
        for g in 0..6 {
            v = &v * &GrassmannValue::generator(g, 1.0);
        }
        assert_eq!(v.degree(), 6);
        assert_eq!(v.mul_capped(&GrassmannValue::generator(9, 1.0), 6), Err(DegreeOverflow(7, 6)));
    }

    #[test]
    fn sorting_sign() {
        let mut g = vec![2, 0, 1];
        assert_eq!(sort_generators(&mut g), Some(1.0));
        let mut g = vec![1, 0];
        assert_eq!(sort_generators(&mut g), Some(-1.0));
        let mut g = vec![1, 2, 1];
        assert_eq!(sort_generators(&mut g), None);
    }
}
