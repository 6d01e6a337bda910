//! Exact coordinate influences and influence-distribution summaries.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::walsh::IntegerSpectrum;

/// Arbitrary-precision rational, always stored reduced with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn int(v: impl Into<BigInt>) -> Rational {
    Rational::from_integer(v.into())
}

/// `num/den` rendering, with integers still shown as `k/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators and denominators: fall back to a scaled division.
        let num = r.numer().to_f64().unwrap_or(f64::NAN);
        let den = r.denom().to_f64().unwrap_or(f64::NAN);
        num / den
    })
}

/// Influences as numerators over the common denominator `4^n`:
/// `Inf_l = numerators[l-1] / 4^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfluenceVector {
    n: usize,
    numerators: Vec<u64>,
    total_numerator: u64,
}

impl InfluenceVector {
    pub fn from_numerators(n: usize, numerators: Vec<u64>) -> Self {
        let total_numerator = numerators.iter().sum();
        Self {
            n,
            numerators,
            total_numerator,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn total_numerator(&self) -> u64 {
        self.total_numerator
    }

    /// `4^n`.
    pub fn denominator(&self) -> u64 {
        1u64 << (2 * self.n)
    }

    /// `Inf_l` for a 1-based coordinate.
    pub fn influence(&self, coord: usize) -> Rational {
        ratio(self.numerators[coord - 1], self.denominator())
    }

    pub fn as_rationals(&self) -> Vec<Rational> {
        (1..=self.n).map(|l| self.influence(l)).collect()
    }

    pub fn total(&self) -> Rational {
        ratio(self.total_numerator, self.denominator())
    }

    pub fn total_f64(&self) -> f64 {
        self.total_numerator as f64 / self.denominator() as f64
    }

    /// Numerators sorted descending; the NPN-invariant influence multiset.
    pub fn sorted_numerators(&self) -> Vec<u64> {
        let mut v = self.numerators.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

/// `Inf_l = Σ_{S ∋ l} f̂(S)^2`, kept as integer numerators over `4^n`.
pub fn influences(s: &IntegerSpectrum) -> InfluenceVector {
    let n = s.n();
    let mut numerators = vec![0u64; n];
    for (set, &c) in s.coeffs().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let sq = (c as i128 * c as i128) as u64;
        let mut bits = set;
        while bits != 0 {
            let l = bits.trailing_zeros() as usize;
            numerators[l] += sq;
            bits &= bits - 1;
        }
    }
    InfluenceVector::from_numerators(n, numerators)
}

/// Base-2 Shannon entropy of `p_l = Inf_l / I(f)`; zero for constants.
pub fn influence_entropy(v: &InfluenceVector) -> f64 {
    if v.total_numerator == 0 {
        return 0.0;
    }
    let total = v.total_numerator as f64;
    v.numerators
        .iter()
        .filter(|&&a| a != 0)
        .map(|&a| {
            let p = a as f64 / total;
            -p * p.log2()
        })
        .sum()
}

pub fn max_influence(v: &InfluenceVector) -> Rational {
    match v.numerators.iter().max() {
        Some(&m) => ratio(m, v.denominator()),
        None => Rational::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::{fwht, universe_size, TruthTable};

    fn infl(t: &TruthTable) -> InfluenceVector {
        influences(&fwht(t))
    }

    /// Pr[f(x) != f(x ^ e_l)] by direct counting.
    fn flip_influence(t: &TruthTable, l: usize) -> Rational {
        let flips = (0..t.len())
            .filter(|&i| t.value(i) != t.value(i ^ (1 << (l - 1))))
            .count();
        ratio(flips as u64, t.len() as u64)
    }

    #[test]
    fn family_examples() {
        let parity = TruthTable::from_fn(4, |i| i.count_ones() % 2 == 0).unwrap();
        let v = infl(&parity);
        assert!(v.numerators().iter().all(|&a| a == 256));
        assert_eq!(max_influence(&v), int(1));
        assert!((influence_entropy(&v) - 2.0).abs() < 1e-12);

        let dictator = TruthTable::from_fn(3, |i| i & 0b010 == 0).unwrap();
        let v = infl(&dictator);
        assert_eq!(v.as_rationals(), vec![int(0), int(1), int(0)]);
        assert_eq!(influence_entropy(&v), 0.0);

        let maj = TruthTable::from_fn(3, |i| i.count_ones() < 2).unwrap();
        let v = infl(&maj);
        assert_eq!(v.as_rationals(), vec![ratio(1, 2); 3]);
        assert_eq!(v.total(), ratio(3, 2));
        assert_eq!(max_influence(&v), ratio(1, 2));

        let c = infl(&TruthTable::constant(3, 1).unwrap());
        assert_eq!(c.total_numerator(), 0);
        assert_eq!(influence_entropy(&c), 0.0);
        assert_eq!(max_influence(&c), int(0));
    }

    #[test]
    fn exhaustive_small_identities() {
        for n in 1..=3 {
            for fid in 0..universe_size(n).unwrap() {
                let t = TruthTable::from_fid(n, fid).unwrap();
                let s = fwht(&t);
                let v = influences(&s);
                let weighted: u64 = s
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(set, &c)| set.count_ones() as u64 * (c * c) as u64)
                    .sum();
                assert_eq!(v.total_numerator(), weighted);
                for l in 1..=n {
                    assert_eq!(v.influence(l), flip_influence(&t, l));
                    assert!(v.numerators()[l - 1] <= v.denominator());
                }
                assert!(v.total() <= int(n as u64));
            }
        }
    }
}
