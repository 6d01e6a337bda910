//! Censuses over whole function universes, per-function diagnostic records,
//! marginal and influence-binned correlation tables, and samplers.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use num_bigint::BigInt;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cancellation::layer_cancellation;
use crate::contraction::contraction_profile;
use crate::error::{Error, Result};
use crate::influence::{format_rational, influence_entropy, influences, rational_to_f64, ratio, Rational};
use crate::minsupport::Certificate;
use crate::npn::NpnUniverse;
use crate::stats::{correlation_p_value, format_p, format_r, pearson, spearman, P_VALUE_METHOD};
use crate::walsh::{format_fid, fwht, universe_size, TruthTable};

/// Largest `n` for which whole-universe censuses are offered.
pub const MAX_CENSUS_VARS: usize = 4;

fn all_tables(n: usize) -> Result<impl Iterator<Item = TruthTable>> {
    if n == 0 || n > MAX_CENSUS_VARS {
        return Err(Error::InvalidVariableCount {
            n,
            max: MAX_CENSUS_VARS,
        });
    }
    let size = universe_size(n)?;
    Ok((0..size).map(move |fid| TruthTable::from_fid(n, fid).expect("fid in range")))
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationLevel {
    pub total_influence: String,
    pub functions: usize,
    pub distinct_mu: usize,
    pub pairs: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationWitness {
    pub fid_a: String,
    pub fid_b: String,
    pub total_influence: String,
    pub log2_mu_a: String,
    pub log2_mu_b: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub n: usize,
    pub universe_size: u64,
    /// Unordered pairs with equal `I` and unequal `log2 μ`.
    pub separation_pair_count: u64,
    pub per_level: Vec<SeparationLevel>,
    pub witness: Option<SeparationWitness>,
    /// Algebraic degree of `μ` (decimal string) to function count.
    pub degree_histogram: BTreeMap<String, usize>,
}

/// Separation pairs and the degree histogram over every function on `n`
/// variables.
pub fn separation_census(n: usize) -> Result<CensusReport> {
    let mut levels: BTreeMap<u64, BTreeMap<Rational, Vec<u64>>> = BTreeMap::new();
    let mut degrees: BTreeMap<BigInt, usize> = BTreeMap::new();
    let mut size = 0u64;
    for t in all_tables(n)? {
        let v = influences(&fwht(&t));
        let p = contraction_profile(&v);
        *degrees.entry(p.algebraic_degree.clone()).or_default() += 1;
        levels
            .entry(v.total_numerator())
            .or_default()
            .entry(p.log2_mu)
            .or_default()
            .push(t.fid().expect("n <= 4"));
        size += 1;
    }
    let den = 1u64 << (2 * n);
    let mut per_level = Vec::new();
    let mut total = 0u64;
    for (&a, by_mu) in &levels {
        let functions: u64 = by_mu.values().map(|v| v.len() as u64).sum();
        let same: u64 = by_mu
            .values()
            .map(|v| v.len() as u64 * (v.len() as u64 - 1) / 2)
            .sum();
        let pairs = functions * (functions - 1) / 2 - same;
        total += pairs;
        per_level.push(SeparationLevel {
            total_influence: format_rational(&ratio(a, den)),
            functions: functions as usize,
            distinct_mu: by_mu.len(),
            pairs,
        });
    }
    // Witness: the two most separated exponents at the lowest level with a
    // separation, each represented by its smallest fid.
    let witness = levels.iter().find(|(_, m)| m.len() > 1).map(|(&a, m)| {
        let (lo_mu, lo) = m.iter().next().unwrap();
        let (hi_mu, hi) = m.iter().next_back().unwrap();
        SeparationWitness {
            fid_a: format_fid(lo[0]),
            fid_b: format_fid(hi[0]),
            total_influence: format_rational(&ratio(a, den)),
            log2_mu_a: format_rational(lo_mu),
            log2_mu_b: format_rational(hi_mu),
        }
    });
    Ok(CensusReport {
        n,
        universe_size: size,
        separation_pair_count: total,
        per_level,
        witness,
        degree_histogram: degrees
            .into_iter()
            .map(|(d, c)| (d.to_string(), c))
            .collect(),
    })
}

/// Degree of `μ` to count, keyed numerically.
pub fn degree_histogram(n: usize) -> Result<BTreeMap<BigInt, usize>> {
    let mut h = BTreeMap::new();
    for t in all_tables(n)? {
        let p = contraction_profile(&influences(&fwht(&t)));
        *h.entry(p.algebraic_degree).or_default() += 1;
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Diagnostic {
    TotalInfluence,
    Mu,
    Log2Mu,
    InfluenceEntropy,
    MaxInfluence,
    Cancellation,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 6] = [
        Diagnostic::TotalInfluence,
        Diagnostic::Mu,
        Diagnostic::Log2Mu,
        Diagnostic::InfluenceEntropy,
        Diagnostic::MaxInfluence,
        Diagnostic::Cancellation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Diagnostic::TotalInfluence => "I",
            Diagnostic::Mu => "mu",
            Diagnostic::Log2Mu => "log2_mu",
            Diagnostic::InfluenceEntropy => "H_Inf",
            Diagnostic::MaxInfluence => "max_Inf",
            Diagnostic::Cancellation => "cancellation",
        }
    }
}

/// Diagnostics of one certified function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionRecord {
    pub fid: u64,
    pub n: usize,
    pub support: usize,
    /// Numerator of `I` over `4^n`.
    pub total_influence_numerator: u64,
    pub total_influence: f64,
    pub mu: f64,
    pub log2_mu: f64,
    pub influence_entropy: f64,
    pub max_influence: f64,
    /// Input proxy `ρ̃` of the certificate mask, mean over layers.
    pub cancellation: f64,
}

impl FunctionRecord {
    pub fn from_certificate(c: &Certificate) -> Self {
        let t = c.truth_table();
        let v = influences(&fwht(&t));
        let p = contraction_profile(&v);
        let den = v.denominator() as f64;
        Self {
            fid: c.fid(),
            n: c.n(),
            support: c.min_support(),
            total_influence_numerator: v.total_numerator(),
            total_influence: v.total_f64(),
            mu: p.mu_float,
            log2_mu: rational_to_f64(&p.log2_mu),
            influence_entropy: influence_entropy(&v),
            max_influence: v.numerators().iter().copied().max().unwrap_or(0) as f64 / den,
            cancellation: layer_cancellation(c.mask()).rho_tilde_mean,
        }
    }

    pub fn value(&self, d: Diagnostic) -> f64 {
        match d {
            Diagnostic::TotalInfluence => self.total_influence,
            Diagnostic::Mu => self.mu,
            Diagnostic::Log2Mu => self.log2_mu,
            Diagnostic::InfluenceEntropy => self.influence_entropy,
            Diagnostic::MaxInfluence => self.max_influence,
            Diagnostic::Cancellation => self.cancellation,
        }
    }

    /// `I` rounded to the nearest 0.05 (halves away from zero), as an
    /// integer count of twentieths.
    pub fn influence_bin(&self) -> u64 {
        let den = 1u64 << (2 * self.n);
        // round(20 a / den) = floor((40 a + den) / (2 den)).
        (40 * self.total_influence_numerator + den) / (2 * den)
    }
}

pub fn format_bin(bin: u64) -> String {
    format!("{}.{:02}", bin / 20, (bin % 20) * 5)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalRow {
    pub diagnostic: &'static str,
    pub pearson_r: Option<f64>,
    pub pearson_p: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub spearman_p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinRow {
    pub i_bin: String,
    pub bin_size: usize,
    pub rho_mu: Option<f64>,
    pub p_mu: Option<f64>,
    pub rho_h: Option<f64>,
    pub p_h: Option<f64>,
    pub low_power: bool,
    /// Support or a diagnostic is constant within the bin.
    pub insufficient_variance: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleMeta {
    pub mode: String,
    pub seed: Option<u64>,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub sample: SampleMeta,
    pub marginal: Vec<MarginalRow>,
    pub conditional: Vec<BinRow>,
    pub p_value_method: &'static str,
}

impl CorrelationReport {
    pub fn bin(&self, label: &str) -> Option<&BinRow> {
        self.conditional.iter().find(|b| b.i_bin == label)
    }

    pub fn marginal(&self, d: Diagnostic) -> Option<&MarginalRow> {
        self.marginal.iter().find(|m| m.diagnostic == d.name())
    }

    /// Bin holding the most functions (ties to the smaller `I`).
    pub fn largest_bin(&self) -> Option<&BinRow> {
        self.conditional
            .iter()
            .max_by(|a, b| a.bin_size.cmp(&b.bin_size).then(b.i_bin.cmp(&a.i_bin)))
    }
}

/// Bins below this size are flagged.
pub const LOW_POWER_BIN: usize = 50;

pub fn correlation_study(
    records: &[FunctionRecord],
    diagnostics: &[Diagnostic],
    sample: SampleMeta,
) -> Result<CorrelationReport> {
    let n = records.first().map_or(0, |r| r.n);
    if let Some(r) = records.iter().find(|r| r.n != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: r.n,
        });
    }
    let support: Vec<f64> = records.iter().map(|r| r.support as f64).collect();
    let marginal = diagnostics
        .iter()
        .map(|&d| {
            let x: Vec<f64> = records.iter().map(|r| r.value(d)).collect();
            let pr = pearson(&x, &support);
            let sr = spearman(&x, &support);
            MarginalRow {
                diagnostic: d.name(),
                pearson_r: pr,
                pearson_p: pr.and_then(|r| correlation_p_value(r, x.len())),
                spearman_rho: sr,
                spearman_p: sr.and_then(|r| correlation_p_value(r, x.len())),
            }
        })
        .collect();

    let mut bins: BTreeMap<u64, Vec<&FunctionRecord>> = BTreeMap::new();
    for r in records {
        bins.entry(r.influence_bin()).or_default().push(r);
    }
    let conditional = bins
        .into_iter()
        .map(|(bin, members)| {
            let s: Vec<f64> = members.iter().map(|r| r.support as f64).collect();
            let mu: Vec<f64> = members.iter().map(|r| r.mu).collect();
            let h: Vec<f64> = members.iter().map(|r| r.influence_entropy).collect();
            let rho_mu = spearman(&mu, &s);
            let rho_h = spearman(&h, &s);
            BinRow {
                i_bin: format_bin(bin),
                bin_size: members.len(),
                p_mu: rho_mu.and_then(|r| correlation_p_value(r, members.len())),
                p_h: rho_h.and_then(|r| correlation_p_value(r, members.len())),
                rho_mu,
                rho_h,
                low_power: members.len() < LOW_POWER_BIN,
                insufficient_variance: rho_mu.is_none() || rho_h.is_none(),
            }
        })
        .collect();
    Ok(CorrelationReport {
        n,
        sample,
        marginal,
        conditional,
        p_value_method: P_VALUE_METHOD,
    })
}

pub fn write_marginal_csv<W: Write>(report: &CorrelationReport, mut out: W) -> Result<()> {
    writeln!(out, "diagnostic,r,p,rho,p")?;
    for m in &report.marginal {
        writeln!(
            out,
            "{},{},{},{},{}",
            m.diagnostic,
            format_r(m.pearson_r),
            format_p(m.pearson_p),
            format_r(m.spearman_rho),
            format_p(m.spearman_p)
        )?;
    }
    Ok(())
}

pub fn write_conditional_csv<W: Write>(report: &CorrelationReport, mut out: W) -> Result<()> {
    writeln!(out, "I_bin,bin_size,rho_mu,p,rho_H,p,low_power")?;
    for b in &report.conditional {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            b.i_bin,
            b.bin_size,
            format_r(b.rho_mu),
            format_p(b.p_mu),
            format_r(b.rho_h),
            format_p(b.p_h),
            b.low_power
        )?;
    }
    Ok(())
}

pub fn write_degree_csv<W: Write>(report: &CensusReport, mut out: W) -> Result<()> {
    writeln!(out, "degree,count")?;
    let mut rows: Vec<(BigInt, usize)> = report
        .degree_histogram
        .iter()
        .map(|(d, &c)| (d.parse().expect("decimal degree"), c))
        .collect();
    rows.sort();
    for (d, c) in rows {
        writeln!(out, "{d},{c}")?;
    }
    Ok(())
}

pub fn write_separation_csv<W: Write>(report: &CensusReport, mut out: W) -> Result<()> {
    writeln!(out, "total_influence,functions,distinct_mu,pairs")?;
    for l in &report.per_level {
        writeln!(
            out,
            "{},{},{},{}",
            l.total_influence, l.functions, l.distinct_mu, l.pairs
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// Distinct fids drawn uniformly from every function on `n` variables.
    Uniform,
    /// Distinct canonical representatives drawn uniformly from a universe.
    NpnCanonical,
    /// Proportional allocation over exact total-influence levels (n ≤ 4).
    Stratified,
}

impl SampleMode {
    pub fn name(&self) -> &'static str {
        match self {
            SampleMode::Uniform => "uniform-sample",
            SampleMode::NpnCanonical => "npn-sample",
            SampleMode::Stratified => "stratified-sample",
        }
    }
}

/// Reproducible fid sample, returned ascending.
pub fn sampler(
    mode: SampleMode,
    n: usize,
    size: usize,
    seed: u64,
    universe: Option<&NpnUniverse>,
) -> Result<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = universe_size(n)?;
    let mut out: Vec<u64> = match mode {
        SampleMode::Uniform => {
            if size as u64 > total {
                return Err(Error::Domain(format!(
                    "sample of {size} exceeds the {total} functions on {n} variables"
                )));
            }
            let mut seen = BTreeSet::new();
            while seen.len() < size {
                seen.insert(rng.gen_range(0..total));
            }
            seen.into_iter().collect()
        }
        SampleMode::NpnCanonical => {
            let u = universe
                .filter(|u| u.n == n)
                .ok_or(Error::UniverseMissing { n })?;
            let reps = &u.canonical_fids;
            if size > reps.len() {
                return Err(Error::Domain(format!(
                    "sample of {size} exceeds the {} classes",
                    reps.len()
                )));
            }
            sample(&mut rng, reps.len(), size)
                .into_iter()
                .map(|i| reps[i])
                .collect()
        }
        SampleMode::Stratified => stratified(n, size, &mut rng)?,
    };
    out.sort_unstable();
    Ok(out)
}

fn stratified(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let mut strata: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for t in all_tables(n)? {
        let a = influences(&fwht(&t)).total_numerator();
        strata.entry(a).or_default().push(t.fid().expect("n <= 4"));
    }
    let total: usize = strata.values().map(Vec::len).sum();
    if size > total {
        return Err(Error::Domain(format!(
            "sample of {size} exceeds the {total} functions"
        )));
    }
    // Largest-remainder allocation, remainders tied toward smaller I.
    let mut alloc: Vec<(u64, usize, usize)> = strata
        .iter()
        .map(|(&a, m)| {
            let exact = m.len() * size;
            (a, exact / total, exact % total)
        })
        .collect();
    let assigned: usize = alloc.iter().map(|x| x.1).sum();
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&i, &j| alloc[j].2.cmp(&alloc[i].2).then(i.cmp(&j)));
    for &i in order.iter().take(size - assigned) {
        alloc[i].1 += 1;
    }
    let mut out = Vec::with_capacity(size);
    for (a, k, _) in alloc {
        let members = &strata[&a];
        out.extend(sample(rng, members.len(), k).into_iter().map(|i| members[i]));
    }
    Ok(out)
}
