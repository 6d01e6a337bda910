//! Linear and rank correlation with two-sided p-values.

use statrs::function::beta::beta_reg;

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// `None` when either side has zero variance or fewer than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Two-sided p-value of a correlation `r` over `n` points from Student's t
/// with `n − 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 || !r.is_finite() {
        return None;
    }
    let df = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return Some(0.0);
    }
    // t² = df r² / (1 − r²), and P(|T| > t) = I_{df/(df+t²)}(df/2, 1/2).
    let x = one_minus;
    Some(beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0))
}

/// Method note written alongside every p-value table.
pub const P_VALUE_METHOD: &str =
    "two-sided t approximation with n-2 df; Spearman uses the same approximation on average ranks";

pub fn format_p(p: Option<f64>) -> String {
    match p {
        None => "NA".into(),
        Some(p) if p < 1e-300 => "<1e-300".into(),
        Some(p) => format!("{p:.3e}"),
    }
}

pub fn format_r(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".into(), |r| format!("{r:+.3}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn self_and_negation() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_value_reference() {
        // r = 0.5, n = 12: t = 1.8257, two-sided p = 0.0978546.
        let p = correlation_p_value(0.5, 12).unwrap();
        assert!((p - 0.097_854_6).abs() < 1e-6, "{p}");
        assert_eq!(correlation_p_value(0.0, 30), Some(1.0));
        assert_eq!(format_p(Some(0.0)), "<1e-300");
    }
}
