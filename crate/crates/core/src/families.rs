//! Canonical function families and the `log2 μ` scaling table.
//!
//! Values follow the `+1 = true` reading: AND is `+1` iff every input is
//! `+1`, OR is `+1` iff some input is `+1`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use serde::Serialize;

use crate::contraction::contraction_profile;
use crate::error::{Error, Result};
use crate::influence::{format_rational, influences, Rational};
use crate::walsh::{fwht, TruthTable, MAX_TABLE_VARS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Parity,
    Majority,
    Dictator,
    And,
    Or,
    Tribes,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::Parity,
        FamilyKind::Majority,
        FamilyKind::Dictator,
        FamilyKind::And,
        FamilyKind::Or,
        FamilyKind::Tribes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Parity => "parity",
            FamilyKind::Majority => "majority",
            FamilyKind::Dictator => "dictator",
            FamilyKind::And => "and",
            FamilyKind::Or => "or",
            FamilyKind::Tribes => "tribes",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "parity" => Ok(FamilyKind::Parity),
            "majority" | "maj" => Ok(FamilyKind::Majority),
            "dictator" => Ok(FamilyKind::Dictator),
            "and" | "and_" => Ok(FamilyKind::And),
            "or" | "or_" => Ok(FamilyKind::Or),
            "tribes" => Ok(FamilyKind::Tribes),
            other => Err(Error::InvalidSpec(format!("unknown family {other:?}"))),
        }
    }
}

/// Default tribes width: `floor(log2 n)`, at least 1.
pub fn default_tribes_width(n: usize) -> usize {
    (usize::BITS - 1 - n.max(1).leading_zeros()).max(1) as usize
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub n: usize,
    /// Dictator coordinate, 1-based.
    pub k: Option<usize>,
    /// Tribes block width. Coordinates are cut into consecutive blocks of
    /// exactly this width; leftover coordinates do not affect the function.
    pub width: Option<usize>,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, n: usize) -> Self {
        Self {
            kind,
            n,
            k: None,
            width: None,
        }
    }

    pub fn dictator(n: usize, k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::new(FamilyKind::Dictator, n)
        }
    }

    pub fn tribes(n: usize, width: usize) -> Self {
        Self {
            width: Some(width),
            ..Self::new(FamilyKind::Tribes, n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || n > MAX_TABLE_VARS {
            return Err(Error::InvalidSpec(format!(
                "n = {n} outside 1..={MAX_TABLE_VARS}"
            )));
        }
        match self.kind {
            FamilyKind::Majority if n % 2 == 0 => Err(Error::InvalidSpec(format!(
                "majority needs odd n, got {n}"
            ))),
            FamilyKind::Dictator => match self.k {
                Some(k) if (1..=n).contains(&k) => Ok(()),
                Some(k) => Err(Error::InvalidSpec(format!(
                    "dictator coordinate {k} outside 1..={n}"
                ))),
                None => Ok(()),
            },
            FamilyKind::Tribes => match self.width {
                Some(w) if w == 0 || w > n => Err(Error::InvalidSpec(format!(
                    "tribes width {w} outside 1..={n}"
                ))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Tribes blocks as bitmasks over input indices.
    pub fn tribes_blocks(&self) -> Vec<usize> {
        let w = self.width.unwrap_or_else(|| default_tribes_width(self.n));
        (0..self.n / w)
            .map(|b| ((1usize << w) - 1) << (b * w))
            .collect()
    }
}

pub fn generate(spec: &FamilySpec) -> Result<TruthTable> {
    spec.validate()?;
    let n = spec.n;
    let full = (1usize << n) - 1;
    match spec.kind {
        FamilyKind::Parity => TruthTable::from_fn(n, |i| i.count_ones() % 2 == 0),
        FamilyKind::Majority => TruthTable::from_fn(n, |i| (i.count_ones() as usize) < n.div_ceil(2)),
        FamilyKind::Dictator => {
            let bit = 1usize << (spec.k.unwrap_or(1) - 1);
            TruthTable::from_fn(n, |i| i & bit == 0)
        }
        FamilyKind::And => TruthTable::from_fn(n, |i| i == 0),
        FamilyKind::Or => TruthTable::from_fn(n, |i| i != full),
        FamilyKind::Tribes => {
            let blocks = spec.tribes_blocks();
            TruthTable::from_fn(n, |i| blocks.iter().any(|&b| i & b == 0))
        }
    }
}

/// Rounds to two decimals (half away from zero) using exact arithmetic and
/// keeps the sign of negative values that round to zero.
pub fn format_2dp(r: &Rational) -> String {
    let scaled = r * Rational::from_integer(BigInt::from(100));
    let (q, rem) = scaled.numer().abs().div_rem(scaled.denom());
    let rounded = if rem * 2 >= *scaled.denom() { q + 1 } else { q };
    let (int_part, frac) = rounded.div_rem(&BigInt::from(100));
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{:02}", frac)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub family: FamilyKind,
    pub n: usize,
    pub log2_mu: Rational,
    pub log2_mu_2dp: String,
}

/// Families in the row order of the scaling table.
pub const SCALING_FAMILIES: [FamilyKind; 5] = [
    FamilyKind::Parity,
    FamilyKind::Majority,
    FamilyKind::Dictator,
    FamilyKind::And,
    FamilyKind::Tribes,
];

/// Computes `log2 μ` for each family and odd `n` from the truth tables.
pub fn scaling_table(n_values: &[usize]) -> Result<Vec<ScalingRow>> {
    if let Some(&bad) = n_values.iter().find(|&&n| n % 2 == 0 || n > 15 || n == 0) {
        return Err(Error::InvalidSpec(format!(
            "scaling table needs odd n <= 15, got {bad}"
        )));
    }
    let mut rows = Vec::new();
    for &family in &SCALING_FAMILIES {
        for &n in n_values {
            let spec = match family {
                FamilyKind::Dictator => FamilySpec::dictator(n, 1),
                _ => FamilySpec::new(family, n),
            };
            let t = generate(&spec)?;
            let profile = contraction_profile(&influences(&fwht(&t)));
            rows.push(ScalingRow {
                family,
                n,
                log2_mu_2dp: format_2dp(&profile.log2_mu),
                log2_mu: profile.log2_mu,
            });
        }
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], mut out: W) -> Result<()> {
    writeln!(out, "family,n,log2_mu_exact,log2_mu_2dp")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.family,
            r.n,
            format_rational(&r.log2_mu),
            r.log2_mu_2dp
        )?;
    }
    Ok(())
}

impl ScalingRow {
    pub fn is_exact_parity(&self) -> bool {
        self.family == FamilyKind::Parity
            && self.log2_mu == Rational::new(BigInt::from(-(self.n as i64)), BigInt::from(2))
    }
}
