//! Pair cancellation ratios along the butterfly, and the input proxy taken
//! directly on mask coordinates.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::stats::pearson;
use crate::synthesis::TernaryMask;
use crate::walsh::butterfly_layer;

/// Value assigned to an all-zero pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPair {
    /// `ρ(0,0) = 1`: an inert pair cancels nothing.
    #[default]
    Inert,
    /// `ρ(0,0) = 0`, the limit of a `+ε` denominator.
    Cancelling,
}

/// `min(|a+b|, |a−b|) / (|a|+|b|)`, with `ρ(0,0) = 1`.
pub fn pair_ratio(a: f64, b: f64) -> f64 {
    pair_ratio_with(a, b, ZeroPair::Inert)
}

pub fn pair_ratio_with(a: f64, b: f64, zero: ZeroPair) -> f64 {
    let den = a.abs() + b.abs();
    if den == 0.0 {
        return match zero {
            ZeroPair::Inert => 1.0,
            ZeroPair::Cancelling => 0.0,
        };
    }
    ((a + b).abs().min((a - b).abs()) / den).clamp(0.0, 1.0)
}

fn layer_pairs(len: usize, layer: usize) -> impl Iterator<Item = (usize, usize)> {
    let h = 1usize << (layer - 1);
    (0..len).filter(move |i| i & h == 0).map(move |i| (i, i | h))
}

/// Exact median; even counts average the two middle values.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CancellationReport {
    /// `ρ_ℓ`, the minimum pair ratio on the layer input `v^(ℓ−1)`.
    pub rho_layer_min: Vec<f64>,
    /// `ρ̃_ℓ`, the median pair ratio on raw mask entries.
    pub rho_tilde: Vec<f64>,
    pub rho_layer_mean: f64,
    pub rho_tilde_mean: f64,
}

pub fn layer_cancellation(w: &TernaryMask) -> CancellationReport {
    layer_cancellation_with(w, ZeroPair::Inert)
}

pub fn layer_cancellation_with(w: &TernaryMask, zero: ZeroPair) -> CancellationReport {
    let n = w.n();
    let raw = w.as_i64();
    let mut v = raw.clone();
    let mut rho_layer_min = Vec::with_capacity(n);
    let mut rho_tilde = Vec::with_capacity(n);
    for layer in 1..=n {
        let min = layer_pairs(v.len(), layer)
            .map(|(i, j)| pair_ratio_with(v[i] as f64, v[j] as f64, zero))
            .fold(1.0, f64::min);
        rho_layer_min.push(min);
        let mut raw_ratios: Vec<f64> = layer_pairs(raw.len(), layer)
            .map(|(i, j)| pair_ratio_with(raw[i] as f64, raw[j] as f64, zero))
            .collect();
        rho_tilde.push(median(&mut raw_ratios).unwrap_or(1.0));
        butterfly_layer(&mut v, layer);
    }
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            1.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    CancellationReport {
        rho_layer_mean: mean(&rho_layer_min),
        rho_tilde_mean: mean(&rho_tilde),
        rho_layer_min,
        rho_tilde,
    }
}

/// Pearson r between the per-mask input proxy `ρ̃` (mean over layers) and
/// support.
pub fn cancellation_support_correlation<'a>(
    masks: impl IntoIterator<Item = &'a TernaryMask>,
) -> Option<f64> {
    cancellation_support_correlation_with(masks, ZeroPair::Inert)
}

pub fn cancellation_support_correlation_with<'a>(
    masks: impl IntoIterator<Item = &'a TernaryMask>,
    zero: ZeroPair,
) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = masks
        .into_iter()
        .map(|w| (layer_cancellation_with(w, zero).rho_tilde_mean, w.support() as f64))
        .unzip();
    pearson(&x, &y)
}

/// Columns `fid,support,rho_layer_min_1..n,rho_tilde_mean`.
pub fn write_cancellation_csv<W: Write>(
    rows: &[(u64, &TernaryMask)],
    mut out: W,
) -> Result<()> {
    let n = rows.first().map_or(0, |(_, w)| w.n());
    write!(out, "fid,support")?;
    for l in 1..=n {
        write!(out, ",rho_layer_min_{l}")?;
    }
    writeln!(out, ",rho_tilde_mean")?;
    for (fid, w) in rows {
        let r = layer_cancellation(w);
        write!(out, "{fid:#x},{}", w.support())?;
        for x in &r.rho_layer_min {
            write!(out, ",{x:.6}")?;
        }
        writeln!(out, ",{:.6}", r.rho_tilde_mean)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values() {
        assert_eq!(pair_ratio(1.0, 0.0), 1.0);
        assert_eq!(pair_ratio(1.0, 1.0), 0.0);
        assert_eq!(pair_ratio(1.0, -1.0), 0.0);
        assert_eq!(pair_ratio(0.0, 0.0), 1.0);
        assert_eq!(pair_ratio(3.0, 1.0), 0.5);
        assert_eq!(pair_ratio_with(0.0, 0.0, ZeroPair::Cancelling), 0.0);
        assert_eq!(pair_ratio_with(1.0, 0.0, ZeroPair::Cancelling), 1.0);
    }

    #[test]
    fn single_character_mask() {
        let w = TernaryMask::from_entries(3, &[(5, 1)]).unwrap();
        let r = layer_cancellation(&w);
        assert_eq!(r.rho_layer_min[0], 1.0);
        assert_eq!(r.rho_tilde, vec![1.0; 3]);
    }

    #[test]
    fn parity_of_two_hand_propagation() {
        // w = (0, 1, 1, 0): every raw pair holds a zero. The layer-1 output
        // (1, -1, 1, -1) pairs as (1, 1) and (-1, -1) at layer 2.
        let w = TernaryMask::new(vec![0, 1, 1, 0]).unwrap();
        let r = layer_cancellation(&w);
        assert_eq!(r.rho_layer_min, vec![1.0, 0.0]);
        assert_eq!(r.rho_tilde, vec![1.0, 1.0]);
        assert_eq!(r.rho_layer_mean, 0.5);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [0.0, 1.0, 1.0, 0.0]), Some(0.5));
    }
}
