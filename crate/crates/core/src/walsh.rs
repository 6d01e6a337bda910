//! Truth tables, the fast Walsh-Hadamard transform, and exact integer
//! Fourier coefficients.
//!
//! Index convention: input index `i` encodes a point of the cube with bit `j`
//! of `i` set iff `x_{j+1} = -1`. The Walsh character of a subset bitmask `S`
//! evaluated at `i` is therefore `(-1)^{popcount(i & S)}`, and `H_n` is the
//! matrix of those signs. Everything downstream uses this one convention.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest variable count for which a full truth table may be materialized.
pub const MAX_TABLE_VARS: usize = 20;

/// Largest variable count for which whole-universe operations (fids,
/// enumeration, exact minimum support) are supported.
pub const MAX_UNIVERSE_VARS: usize = 5;

/// Largest variable count whose truth tables fit in a 64-bit fid.
pub const MAX_FID_VARS: usize = 6;

/// `(-1)^{popcount(i & s)}`: the character `chi_S` evaluated at input `i`.
#[inline]
pub fn character_sign(i: usize, s: usize) -> i64 {
    if (i & s).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Variable count `n` with `2^n == len`, if any.
pub fn vars_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidLength { len });
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_TABLE_VARS {
        return Err(Error::InvalidVariableCount {
            n,
            max: MAX_TABLE_VARS,
        });
    }
    Ok(n)
}

fn check_vars(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        Err(Error::InvalidVariableCount { n, max })
    } else {
        Ok(())
    }
}

/// Number of Boolean functions on `n` variables, `2^(2^n)`, for `n <= 5`.
pub fn universe_size(n: usize) -> Result<u64> {
    check_vars(n, MAX_UNIVERSE_VARS)?;
    Ok(1u64 << (1usize << n))
}

/// A Boolean function as its `±1` value vector indexed by input bitmask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    values: Vec<i8>,
}

impl TruthTable {
    pub fn from_values(values: Vec<i8>) -> Result<Self> {
        let n = vars_for_len(values.len())?;
        if let Some((index, &v)) = values.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::InvalidEntry {
                index,
                value: v as i64,
                what: "truth-table value (expected ±1)",
            });
        }
        Ok(Self { n, values })
    }

    /// Decodes a fid: bit `i` set iff `values[i] = -1`.
    pub fn from_fid(n: usize, fid: u64) -> Result<Self> {
        check_vars(n, MAX_FID_VARS)?;
        let len = 1usize << n;
        if len < 64 && fid >> len != 0 {
            return Err(Error::FidOutOfRange { n, fid });
        }
        let values = (0..len)
            .map(|i| if (fid >> i) & 1 == 1 { -1 } else { 1 })
            .collect();
        Ok(Self { n, values })
    }

    /// Builds a table from a predicate on input indices; `true` maps to `+1`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Result<Self> {
        check_vars(n, MAX_TABLE_VARS)?;
        let values = (0..1usize << n).map(|i| if f(i) { 1 } else { -1 }).collect();
        Ok(Self { n, values })
    }

    pub fn constant(n: usize, value: i8) -> Result<Self> {
        Self::from_fn(n, |_| value >= 0)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn values(&self) -> &[i8] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize) -> i8 {
        self.values[i]
    }

    /// Canonical identifier, available for `n <= 6`.
    pub fn fid(&self) -> Option<u64> {
        if self.n > MAX_FID_VARS {
            return None;
        }
        Some(
            self.values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v < 0)
                .fold(0u64, |acc, (i, _)| acc | (1 << i)),
        )
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fid() {
            Some(fid) => write!(f, "TruthTable(n={}, fid={:#x})", self.n, fid),
            None => write!(f, "TruthTable(n={})", self.n),
        }
    }
}

/// Scaled Fourier coefficients `coeffs[S] = 2^n * f̂(S)`, exact integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerSpectrum {
    n: usize,
    coeffs: Vec<i64>,
}

impl IntegerSpectrum {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        let n = vars_for_len(coeffs.len())?;
        Ok(Self { n, coeffs })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, s: usize) -> i64 {
        self.coeffs[s]
    }

    /// `f̂(S)` as the pair `(coeffs[S], 2^n)`.
    pub fn fourier_coefficient(&self, s: usize) -> (i64, u64) {
        (self.coeffs[s], 1u64 << self.n)
    }

    /// `Σ_S coeffs[S]^2`; equals `4^n` for Boolean functions.
    pub fn parseval_sum(&self) -> u128 {
        self.coeffs.iter().map(|&c| (c as i128 * c as i128) as u128).sum()
    }

    pub fn is_boolean_parseval(&self) -> bool {
        self.parseval_sum() == 1u128 << (2 * self.n)
    }
}

/// One butterfly layer (1-based) in place: pairs `(i, i ^ 2^{layer-1})` map
/// `(a, b) -> (a + b, a - b)`.
pub fn butterfly_layer(v: &mut [i64], layer: usize) {
    let h = 1usize << (layer - 1);
    let mut base = 0;
    while base < v.len() {
        for j in base..base + h {
            let a = v[j];
            let b = v[j + h];
            v[j] = a + b;
            v[j + h] = a - b;
        }
        base += 2 * h;
    }
}

fn butterfly_cascade(v: &mut [i64]) {
    let n = v.len().trailing_zeros() as usize;
    for layer in 1..=n {
        butterfly_layer(v, layer);
    }
}

/// Fast Walsh-Hadamard transform of a truth table: `n` butterfly layers,
/// `O(N log N)` integer additions.
pub fn fwht(t: &TruthTable) -> IntegerSpectrum {
    let mut v: Vec<i64> = t.values.iter().map(|&x| x as i64).collect();
    butterfly_cascade(&mut v);
    IntegerSpectrum { n: t.n, coeffs: v }
}

/// Inverse transform: the same cascade followed by exact division by `2^n`.
pub fn fwht_inverse(s: &IntegerSpectrum) -> Result<Vec<i64>> {
    let mut v = s.coeffs.clone();
    butterfly_cascade(&mut v);
    let scale = 1i64 << s.n;
    for (index, x) in v.iter_mut().enumerate() {
        if *x % scale != 0 {
            return Err(Error::NonIntegerResult { index });
        }
        *x /= scale;
    }
    Ok(v)
}

/// Inverse transform interpreted as a truth table; fails unless every entry
/// is `±1`.
pub fn fwht_inverse_table(s: &IntegerSpectrum) -> Result<TruthTable> {
    let v = fwht_inverse(s)?;
    TruthTable::from_values(
        v.into_iter()
            .map(|x| i8::try_from(x).unwrap_or(i8::MAX))
            .collect(),
    )
}

/// `H_n · w` via the butterfly cascade.
pub fn apply_hadamard(w: &[i64]) -> Result<Vec<i64>> {
    vars_for_len(w.len())?;
    let mut v = w.to_vec();
    butterfly_cascade(&mut v);
    Ok(v)
}

/// `H_n · w` as an explicit dense matrix-vector product over the character
/// signs. Independent of the butterfly path; returns the product together
/// with the number of integer multiplications performed (`N^2`).
pub fn apply_hadamard_dense(w: &[i64]) -> Result<(Vec<i64>, u64)> {
    vars_for_len(w.len())?;
    let len = w.len();
    let mut out = vec![0i64; len];
    for (i, y) in out.iter_mut().enumerate() {
        *y = w
            .iter()
            .enumerate()
            .map(|(s, &ws)| character_sign(i, s) * ws)
            .sum();
    }
    Ok((out, (len * len) as u64))
}

/// Hex rendering used for fids in every file format.
pub fn format_fid(fid: u64) -> String {
    format!("{fid:#x}")
}

pub fn parse_fid(s: &str) -> Result<u64> {
    let t = s.trim();
    let digits = t
        .strip_prefix("0x")
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    u64::from_str_radix(digits, 16)
        .map_err(|e| Error::Domain(format!("bad hex fid {s:?}: {e}")))
}
