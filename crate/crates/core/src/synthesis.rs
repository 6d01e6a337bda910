//! Ternary Walsh-threshold masks: exact verification, the threshold
//! heuristic, greedy repair, multi-start repair and sorted Fourier rounding.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walsh::{apply_hadamard, character_sign, fwht, IntegerSpectrum, TruthTable};

/// A vector in `{-1, 0, +1}^{2^n}` indexed by subset bitmask.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TernaryMask {
    n: usize,
    w: Vec<i8>,
}

impl TernaryMask {
    pub fn new(w: Vec<i8>) -> Result<Self> {
        let n = crate::walsh::vars_for_len(w.len())?;
        if let Some((index, &v)) = w.iter().enumerate().find(|(_, &v)| !(-1..=1).contains(&v)) {
            return Err(Error::InvalidEntry {
                index,
                value: v as i64,
                what: "ternary mask entry",
            });
        }
        Ok(Self { n, w })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            w: vec![0; 1 << n],
        }
    }

    /// Mask with the given `(subset, sign)` entries set.
    pub fn from_entries(n: usize, entries: &[(usize, i8)]) -> Result<Self> {
        let mut w = vec![0i8; 1 << n];
        for &(s, sign) in entries {
            if s >= w.len() {
                return Err(Error::InvalidEntry {
                    index: s,
                    value: sign as i64,
                    what: "subset index",
                });
            }
            w[s] = sign;
        }
        Self::new(w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[i8] {
        &self.w
    }

    pub fn get(&self, s: usize) -> i8 {
        self.w[s]
    }

    pub fn support(&self) -> usize {
        self.w.iter().filter(|&&v| v != 0).count()
    }

    pub fn support_set(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&s| self.w[s] != 0).collect()
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.w.iter().map(|&v| v as i64).collect()
    }

    fn set(&mut self, s: usize, v: i8) {
        self.w[s] = v;
    }
}

impl fmt::Debug for TernaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TernaryMask(n={}, {:?})", self.n, self.w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub ok: bool,
    /// `min_i f_i (H w)_i`.
    pub margin: i64,
    /// `f_i (H w)_i` for every input.
    pub margin_vector: Vec<i64>,
}

/// Exact integer check of `sign(H_n w) = f`.
pub fn verify(w: &TernaryMask, f: &TruthTable) -> Result<Verification> {
    if w.n() != f.n() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: w.weights().len(),
        });
    }
    let y = apply_hadamard(&w.as_i64())?;
    let margin_vector: Vec<i64> = y
        .iter()
        .zip(f.values())
        .map(|(&yi, &fi)| yi * fi as i64)
        .collect();
    let margin = margin_vector.iter().copied().min().unwrap_or(0);
    Ok(Verification {
        ok: margin >= 1,
        margin,
        margin_vector,
    })
}

/// `w_S = sign(c_S)` where `|c_S| / 2^n > tau`, else 0.
pub fn heuristic_mask(s: &IntegerSpectrum, tau: f64) -> Result<TernaryMask> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let scale = (1u64 << s.n()) as f64;
    let w = s
        .coeffs()
        .iter()
        .map(|&c| {
            if (c.unsigned_abs() as f64) > tau * scale {
                c.signum() as i8
            } else {
                0
            }
        })
        .collect();
    TernaryMask::new(w)
}

/// `δ = f^T H`, computed as an explicit sum over inputs; equals the scaled
/// spectrum `2^n f̂`.
pub fn fourier_rounding_gradient(f: &TruthTable) -> Vec<i64> {
    let len = f.len();
    (0..len)
        .map(|s| {
            f.values()
                .iter()
                .enumerate()
                .map(|(i, &v)| v as i64 * character_sign(i, s))
                .sum()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisStatus {
    HeuristicOk,
    Repaired,
    Rounded,
    Failed,
}

impl fmt::Display for SynthesisStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthesisStatus::HeuristicOk => "heuristic_ok",
            SynthesisStatus::Repaired => "repaired",
            SynthesisStatus::Rounded => "rounded",
            SynthesisStatus::Failed => "failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisResult {
    pub mask: Option<TernaryMask>,
    pub status: SynthesisStatus,
    pub iterations: usize,
    pub strategy: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepairConfig {
    /// Threshold for the first start.
    pub tau: f64,
    /// Thresholds for the restarts.
    pub restart_taus: Vec<f64>,
    pub max_iter: usize,
    /// Consecutive non-improving steps allowed before giving up.
    pub max_plateau: usize,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            restart_taus: vec![0.01, 0.1, 0.2, 0.3],
            max_iter: 200,
            max_plateau: 8,
        }
    }
}

fn count_violations(y: &[i64], f: &TruthTable) -> usize {
    y.iter()
        .zip(f.values())
        .filter(|(&yi, &fi)| yi * fi as i64 <= 0)
        .count()
}

/// Greedy repair: repeatedly step the coordinate with the largest violation
/// gradient `|δ_S|`, `δ_S = Σ_{i ∈ V} f_i H_{iS}`, among steps that shrink
/// the violation set (ties to the smallest `S`). When no step shrinks it, the
/// best non-growing step is taken, up to `max_plateau` times in a row.
pub fn greedy_repair(
    w0: &TernaryMask,
    f: &TruthTable,
    max_iter: usize,
    max_plateau: usize,
) -> Result<SynthesisResult> {
    if w0.n() != f.n() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: w0.weights().len(),
        });
    }
    let len = f.len();
    let mut w = w0.clone();
    let mut y = apply_hadamard(&w.as_i64())?;
    let mut violations = count_violations(&y, f);
    let mut plateau = 0;
    let mut iterations = 0;
    while violations > 0 && iterations < max_iter {
        let u: Vec<i64> = y
            .iter()
            .zip(f.values())
            .map(|(&yi, &fi)| if yi * fi as i64 <= 0 { fi as i64 } else { 0 })
            .collect();
        let delta = apply_hadamard(&u)?;

        // (|δ|, S, step, violations after)
        let mut best_reducing: Option<(i64, usize, i8, usize)> = None;
        let mut best_flat: Option<(i64, usize, i8, usize)> = None;
        for s in 0..len {
            let d = delta[s];
            if d == 0 {
                continue;
            }
            let cur = w.get(s);
            let next = (cur + d.signum() as i8).clamp(-1, 1);
            if next == cur {
                continue;
            }
            let step = next - cur;
            let after = (0..len)
                .filter(|&i| (y[i] + step as i64 * character_sign(i, s)) * f.value(i) as i64 <= 0)
                .count();
            let cand = (d.abs(), s, next, after);
            let better = |slot: &Option<(i64, usize, i8, usize)>| match slot {
                None => true,
                Some((bd, _, _, _)) => d.abs() > *bd,
            };
            if after < violations {
                if better(&best_reducing) {
                    best_reducing = Some(cand);
                }
            } else if after == violations && better(&best_flat) {
                best_flat = Some(cand);
            }
        }
        let chosen = match (best_reducing, best_flat) {
            (Some(c), _) => {
                plateau = 0;
                c
            }
            (None, Some(c)) if plateau < max_plateau => {
                plateau += 1;
                c
            }
            _ => break,
        };
        let (_, s, next, after) = chosen;
        let step = (next - w.get(s)) as i64;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += step * character_sign(i, s);
        }
        w.set(s, next);
        violations = after;
        iterations += 1;
    }
    if violations == 0 {
        Ok(SynthesisResult {
            mask: Some(w),
            status: SynthesisStatus::Repaired,
            iterations,
            strategy: "greedy_repair".into(),
        })
    } else {
        Err(Error::RepairExhausted {
            iterations,
            violations,
        })
    }
}

/// Sorted Fourier rounding: the first `k` for which the top-`k` coefficients
/// by `|δ|` (ties to smaller `S`), signed by `sign(δ)`, realize `f`.
pub fn fourier_rounding(f: &TruthTable) -> Option<(TernaryMask, usize)> {
    let delta = fourier_rounding_gradient(f);
    let len = f.len();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| delta[b].abs().cmp(&delta[a].abs()).then(a.cmp(&b)));
    let mut y = vec![0i64; len];
    let mut w = TernaryMask::zeros(f.n());
    for (k, &s) in order.iter().enumerate() {
        let sign = delta[s].signum();
        if sign != 0 {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += sign * character_sign(i, s);
            }
            w.set(s, sign as i8);
        }
        if count_violations(&y, f) == 0 {
            return Some((w, k + 1));
        }
    }
    None
}

fn with_strategy(mut r: SynthesisResult, strategy: String) -> SynthesisResult {
    r.strategy = strategy;
    r
}

/// Heuristic start plus greedy repair, threshold restarts, then sorted
/// Fourier rounding.
pub fn multi_start_repair(f: &TruthTable) -> Result<SynthesisResult> {
    multi_start_repair_with(f, &RepairConfig::default())
}

pub fn multi_start_repair_with(f: &TruthTable, cfg: &RepairConfig) -> Result<SynthesisResult> {
    let spectrum = fwht(f);
    let starts = std::iter::once(cfg.tau).chain(cfg.restart_taus.iter().copied());
    for (idx, tau) in starts.enumerate() {
        let w0 = heuristic_mask(&spectrum, tau)?;
        if idx == 0 && verify(&w0, f)?.ok {
            return Ok(SynthesisResult {
                mask: Some(w0),
                status: SynthesisStatus::HeuristicOk,
                iterations: 0,
                strategy: format!("heuristic(tau={tau})"),
            });
        }
        match greedy_repair(&w0, f, cfg.max_iter, cfg.max_plateau) {
            Ok(r) => return Ok(with_strategy(r, format!("repair(tau={tau})"))),
            Err(Error::RepairExhausted { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if let Some((mask, k)) = fourier_rounding(f) {
        return Ok(SynthesisResult {
            mask: Some(mask),
            status: SynthesisStatus::Rounded,
            iterations: k,
            strategy: format!("rounding(k={k})"),
        });
    }
    Err(Error::SynthesisFailed {
        fid: f.fid().unwrap_or(u64::MAX),
    })
}

/// One line of the batch synthesis output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub fid: String,
    pub n: usize,
    pub status: SynthesisStatus,
    pub strategy: String,
    pub support: Option<usize>,
    pub margin: Option<i64>,
}

/// Synthesizes one function; with `heuristic_only`, only the threshold mask
/// at `tau` is tried.
pub fn synthesize_record(f: &TruthTable, tau: f64, heuristic_only: bool) -> Result<SynthesisRecord> {
    let fid = crate::walsh::format_fid(f.fid().unwrap_or(0));
    let result = if heuristic_only {
        let w = heuristic_mask(&fwht(f), tau)?;
        if verify(&w, f)?.ok {
            SynthesisResult {
                mask: Some(w),
                status: SynthesisStatus::HeuristicOk,
                iterations: 0,
                strategy: format!("heuristic(tau={tau})"),
            }
        } else {
            SynthesisResult {
                mask: None,
                status: SynthesisStatus::Failed,
                iterations: 0,
                strategy: format!("heuristic(tau={tau})"),
            }
        }
    } else {
        let cfg = RepairConfig {
            tau,
            ..RepairConfig::default()
        };
        match multi_start_repair_with(f, &cfg) {
            Ok(r) => r,
            Err(Error::SynthesisFailed { .. }) => SynthesisResult {
                mask: None,
                status: SynthesisStatus::Failed,
                iterations: 0,
                strategy: "all".into(),
            },
            Err(e) => return Err(e),
        }
    };
    let (support, margin) = match &result.mask {
        Some(m) => (Some(m.support()), Some(verify(m, f)?.margin)),
        None => (None, None),
    };
    Ok(SynthesisRecord {
        fid,
        n: f.n(),
        status: result.status,
        strategy: result.strategy,
        support,
        margin,
    })
}

pub fn write_synthesis_jsonl<W: Write>(records: &[SynthesisRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maj3() -> TruthTable {
        TruthTable::from_fn(3, |i| i.count_ones() < 2).unwrap()
    }

    #[test]
    fn verify_examples() {
        let parity = TruthTable::from_values(vec![1, -1, -1, 1]).unwrap();
        let w = TernaryMask::from_entries(2, &[(3, 1)]).unwrap();
        let v = verify(&w, &parity).unwrap();
        assert!(v.ok);
        assert_eq!(v.margin, 1);
        let z = verify(&TernaryMask::zeros(2), &parity).unwrap();
        assert!(!z.ok);
        assert_eq!(z.margin, 0);
        assert!(TernaryMask::new(vec![0, 2, 0, 0]).is_err());
    }

    #[test]
    fn heuristic_examples() {
        for n in 1..=5 {
            let parity = TruthTable::from_fn(n, |i| i.count_ones() % 2 == 0).unwrap();
            let w = heuristic_mask(&fwht(&parity), 0.5).unwrap();
            assert_eq!(w.support(), 1);
            assert!(verify(&w, &parity).unwrap().ok);
        }
        let c = TruthTable::constant(3, 1).unwrap();
        let w = heuristic_mask(&fwht(&c), 0.5).unwrap();
        assert_eq!(w.weights(), &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert!(heuristic_mask(&fwht(&c), 0.0).is_err());
    }

    #[test]
    fn gradient_is_scaled_spectrum() {
        let parity = TruthTable::from_fn(4, |i| i.count_ones() % 2 == 0).unwrap();
        let d = fourier_rounding_gradient(&parity);
        assert_eq!(d[15], 16);
        assert!(d[..15].iter().all(|&x| x == 0));
        assert_eq!(fourier_rounding_gradient(&maj3()), fwht(&maj3()).coeffs());
    }

    #[test]
    fn repair_of_valid_mask_is_immediate() {
        let f = maj3();
        let w = heuristic_mask(&fwht(&f), 0.05).unwrap();
        assert!(verify(&w, &f).unwrap().ok);
        let r = greedy_repair(&w, &f, 64, 8).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.mask.unwrap(), w);
    }

    #[test]
    fn multi_start_is_deterministic_and_verified() {
        for fid in [0x6996u64, 0x1ee1, 0x8000, 0x0001, 0x7ff3] {
            let f = TruthTable::from_fid(4, fid).unwrap();
            let a = multi_start_repair(&f).unwrap();
            let b = multi_start_repair(&f).unwrap();
            assert_eq!(a, b);
            let m = a.mask.unwrap();
            let v = verify(&m, &f).unwrap();
            assert!(v.ok);
            assert_eq!(v.margin.rem_euclid(2) as usize, m.support() % 2);
        }
    }
}
