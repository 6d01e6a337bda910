//! Influence-adaptive butterfly exponents, the contraction invariant `μ(f)`,
//! its bound suite, majorization comparisons, and numeric operator-norm
//! checks.
//!
//! With `p_l = 1 + Inf_l`, the inverse butterfly at layer `l` contracts the
//! `ℓ_{p_l}` norm by `2^{-Inf_l/(1+Inf_l)}`, and
//! `log2 μ(f) = -Σ_l Inf_l/(1+Inf_l)` is an exact rational.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::influence::{int, ratio, rational_to_f64, InfluenceVector, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionProfile {
    pub n: usize,
    /// `p_l = 1 + Inf_l`, in `[1, 2]`.
    pub exponents: Vec<Rational>,
    /// `r = log2 μ`, reduced.
    pub log2_mu: Rational,
    /// Denominator of `r` in lowest terms.
    pub algebraic_degree: BigInt,
    /// `2^r`, for display only.
    pub mu_float: f64,
}

impl ContractionProfile {
    pub fn log2_mu_f64(&self) -> f64 {
        rational_to_f64(&self.log2_mu)
    }
}

/// `Inf/(1+Inf)` for `Inf = a / 4^n`, i.e. `a / (4^n + a)`.
fn layer_term(numerator: u64, denominator: u64) -> Rational {
    ratio(numerator, denominator + numerator)
}

pub fn contraction_profile(v: &InfluenceVector) -> ContractionProfile {
    let den = v.denominator();
    let exponents = v
        .numerators()
        .iter()
        .map(|&a| int(1) + ratio(a, den))
        .collect();
    let sum = v
        .numerators()
        .iter()
        .fold(Rational::zero(), |acc, &a| acc + layer_term(a, den));
    let log2_mu = -sum;
    let algebraic_degree = log2_mu.denom().clone();
    let mu_float = rational_to_f64(&log2_mu).exp2();
    ContractionProfile {
        n: v.n(),
        exponents,
        log2_mu,
        algebraic_degree,
        mu_float,
    }
}

/// `Φ(x) = Σ x_l/(1+x_l)`, so that `μ = 2^{-Φ}`.
pub fn phi(x: &[Rational]) -> Rational {
    x.iter()
        .fold(Rational::zero(), |acc, xi| acc + xi / (int(1) + xi))
}

/// `‖A‖_{p→p}` for the 2x2 butterfly `A = [[1,1],[1,-1]]`; `p` may be
/// `f64::INFINITY`.
pub fn butterfly_opnorm(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("operator norm needs p >= 1, got {p}")));
    }
    let inv = if p.is_infinite() { 0.0 } else { 1.0 / p };
    Ok(f64::max(inv.exp2(), (1.0 - inv).exp2()))
}

fn lp_norm2(v: (f64, f64), p: f64) -> f64 {
    if p.is_infinite() {
        return v.0.abs().max(v.1.abs());
    }
    // Scale by the max entry so large p does not underflow.
    let m = v.0.abs().max(v.1.abs());
    if m == 0.0 {
        return 0.0;
    }
    let (a, b) = (v.0.abs() / m, v.1.abs() / m);
    m * (a.powf(p) + b.powf(p)).powf(1.0 / p)
}

fn butterfly_ratio(v: (f64, f64), p: f64) -> f64 {
    lp_norm2((v.0 + v.1, v.0 - v.1), p) / lp_norm2(v, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct OpnormReport {
    pub p: f64,
    pub trials: usize,
    pub bound: f64,
    pub max_observed: f64,
    pub maximizer: (f64, f64),
    pub maximizer_ratio: f64,
    pub bound_respected: bool,
    pub maximizer_attains: bool,
    pub clarkson_samples: usize,
    pub clarkson_failures: usize,
}

impl OpnormReport {
    pub fn passed(&self) -> bool {
        self.bound_respected && self.maximizer_attains && self.clarkson_failures == 0
    }
}

/// Random search for `max ‖Av‖_p / ‖v‖_p` plus Clarkson-inequality checks on
/// the same number of sampled pairs.
pub fn verify_opnorm_numeric(p: f64, trials: usize, seed: u64) -> Result<OpnormReport> {
    if !(1.0..=64.0).contains(&p) {
        return Err(Error::Domain(format!("numeric check supports p in [1, 64], got {p}")));
    }
    let bound = butterfly_opnorm(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_observed = 0.0f64;
    let mut clarkson_failures = 0;
    for _ in 0..trials {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = (theta.cos(), theta.sin());
        max_observed = max_observed.max(butterfly_ratio(v, p));

        let a: f64 = rng.gen_range(-10.0..10.0);
        let b: f64 = rng.gen_range(-10.0..10.0);
        let lhs = (a + b).abs().powf(p) + (a - b).abs().powf(p);
        let rhs = 2.0 * (a.abs().powf(p) + b.abs().powf(p));
        let tol = 1e-12 * lhs.max(rhs).max(1.0);
        let below = lhs <= rhs + tol;
        let above = lhs + tol >= rhs;
        let ok = (p > 2.0 || below) && (p < 2.0 || above);
        if !ok {
            clarkson_failures += 1;
        }
    }
    let maximizer = if p <= 2.0 {
        (1.0, 0.0)
    } else {
        let c = (-1.0 / p).exp2();
        (c, c)
    };
    let maximizer_ratio = butterfly_ratio(maximizer, p);
    Ok(OpnormReport {
        p,
        trials,
        bound,
        max_observed,
        maximizer,
        maximizer_ratio,
        bound_respected: max_observed <= bound + 1e-9,
        maximizer_attains: (maximizer_ratio - bound).abs() <= 1e-12,
        clarkson_samples: trials,
        clarkson_failures,
    })
}

/// Slack of each bound; all are `>= 0` for a valid profile.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSlacks {
    /// `r - (-I)`.
    pub coarse_lower: Rational,
    /// `-I/2 - r`.
    pub coarse_upper: Rational,
    /// `r - (-I/(1 + I/n))`.
    pub jensen: Rational,
}

pub fn check_bounds(profile: &ContractionProfile, v: &InfluenceVector) -> Result<BoundSlacks> {
    let total = v.total();
    let r = &profile.log2_mu;
    let n = int(v.n() as u64);
    let coarse_lower = r + &total;
    let coarse_upper = -(&total / int(2)) - r;
    let jensen = r + &total / (int(1) + &total / n);
    for (bound, slack) in [
        ("coarse lower: log2 mu >= -I", &coarse_lower),
        ("coarse upper: log2 mu <= -I/2", &coarse_upper),
        ("Jensen: log2 mu >= -I/(1+I/n)", &jensen),
    ] {
        if slack.is_negative() {
            return Err(Error::BoundViolation {
                bound,
                slack: slack.to_string(),
            });
        }
    }
    Ok(BoundSlacks {
        coarse_lower,
        coarse_upper,
        jensen,
    })
}

fn sorted_desc(x: &[Rational]) -> Vec<Rational> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.cmp(a));
    v
}

/// `x ≻ y`: equal totals and every descending prefix sum of `x` dominates.
pub fn majorizes(x: &[Rational], y: &[Rational]) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let (xs, ys) = (sorted_desc(x), sorted_desc(y));
    let mut px = Rational::zero();
    let mut py = Rational::zero();
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        if px < py {
            return false;
        }
    }
    px == py
}

pub fn is_permutation(x: &[Rational], y: &[Rational]) -> bool {
    x.len() == y.len() && sorted_desc(x) == sorted_desc(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchurVerdict {
    pub x_majorizes_y: bool,
    pub y_majorizes_x: bool,
    pub permutation: bool,
    pub phi_x: Rational,
    pub phi_y: Rational,
}

impl SchurVerdict {
    /// Whether `μ(x) > μ(y)`.
    pub fn mu_x_larger(&self) -> bool {
        self.phi_x < self.phi_y
    }
}

/// Majorization comparison of two influence-like vectors, asserting strict
/// Schur-concavity of `Φ` whenever one strictly majorizes the other.
pub fn schur_compare(x: &[Rational], y: &[Rational]) -> Result<SchurVerdict> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
    if !x.iter().chain(y).all(unit) {
        return Err(Error::Domain("influence-like entries must lie in [0, 1]".into()));
    }
    let sx: Rational = x.iter().sum();
    let sy: Rational = y.iter().sum();
    if sx != sy {
        return Err(Error::UnequalSums);
    }
    let verdict = SchurVerdict {
        x_majorizes_y: majorizes(x, y),
        y_majorizes_x: majorizes(y, x),
        permutation: is_permutation(x, y),
        phi_x: phi(x),
        phi_y: phi(y),
    };
    if verdict.permutation {
        if verdict.phi_x != verdict.phi_y {
            return Err(Error::SchurViolation("Φ differs on a permutation".into()));
        }
    } else if verdict.x_majorizes_y && verdict.phi_x >= verdict.phi_y {
        return Err(Error::SchurViolation(format!(
            "x ≻ y but Φ(x) = {} >= Φ(y) = {}",
            verdict.phi_x, verdict.phi_y
        )));
    } else if verdict.y_majorizes_x && verdict.phi_y >= verdict.phi_x {
        return Err(Error::SchurViolation(format!(
            "y ≻ x but Φ(y) = {} >= Φ(x) = {}",
            verdict.phi_y, verdict.phi_x
        )));
    }
    Ok(verdict)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormPropagationReport {
    pub p: f64,
    pub factor: f64,
    pub trials: usize,
    pub max_ratio: f64,
    /// Ratio achieved on a vector with one nonzero entry per pair.
    pub witness_ratio: f64,
    pub passed: bool,
}

fn lp_norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Applies `B_l^{-1}` (the half-butterfly on layer-`l` pairs) in place.
fn inverse_layer(v: &mut [f64], layer: usize) {
    let h = 1usize << (layer - 1);
    for i in 0..v.len() {
        if i & h == 0 {
            let (a, b) = (v[i], v[i + h]);
            v[i] = 0.5 * (a + b);
            v[i + h] = 0.5 * (a - b);
        }
    }
}

/// Checks `‖B_l^{-1} v‖_p <= 2^{-Inf/(1+Inf)} ‖v‖_p` with `p = 1 + Inf` on
/// random vectors of length `2^n`, across every layer.
pub fn norm_propagation_check(
    infl: &Rational,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<NormPropagationReport> {
    if infl.is_negative() || *infl > Rational::one() {
        return Err(Error::Domain(format!("influence must lie in [0, 1], got {infl}")));
    }
    if n == 0 || n > 12 {
        return Err(Error::InvalidVariableCount { n, max: 12 });
    }
    let inf = rational_to_f64(infl);
    let p = 1.0 + inf;
    let factor = (-inf / (1.0 + inf)).exp2();
    let len = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let layer = 1 + t % n;
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut w = v.clone();
        inverse_layer(&mut w, layer);
        max_ratio = max_ratio.max(lp_norm(&w, p) / lp_norm(&v, p));
    }
    let h = 1usize;
    let witness: Vec<f64> = (0..len).map(|i| if i & h == 0 { 1.0 } else { 0.0 }).collect();
    let mut w = witness.clone();
    inverse_layer(&mut w, 1);
    let witness_ratio = lp_norm(&w, p) / lp_norm(&witness, p);
    Ok(NormPropagationReport {
        p,
        factor,
        trials,
        max_ratio,
        witness_ratio,
        passed: max_ratio <= factor + 1e-9 && (witness_ratio - factor).abs() <= 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::influences;
    use crate::walsh::{fwht, universe_size, TruthTable};

    fn profile_of(t: &TruthTable) -> (ContractionProfile, InfluenceVector) {
        let v = influences(&fwht(t));
        (contraction_profile(&v), v)
    }

    #[test]
    fn table_anchor_profiles() {
        let parity = TruthTable::from_fn(3, |i| i.count_ones() % 2 == 0).unwrap();
        let (p, _) = profile_of(&parity);
        assert_eq!(p.log2_mu, ratio(-3, 2));
        assert_eq!(p.algebraic_degree, BigInt::from(2));

        let maj3 = TruthTable::from_fn(3, |i| i.count_ones() < 2).unwrap();
        let (p, _) = profile_of(&maj3);
        assert_eq!(p.log2_mu, int(-1));
        assert_eq!(p.algebraic_degree, BigInt::from(1));
        assert!(p.exponents.iter().all(|e| *e == ratio(3, 2)));

        let maj5 = TruthTable::from_fn(5, |i| i.count_ones() < 3).unwrap();
        let (p, _) = profile_of(&maj5);
        assert_eq!(p.log2_mu, ratio(-15, 11));
        assert!((p.log2_mu_f64() + 1.36).abs() < 0.005);
    }

    #[test]
    fn opnorm_values() {
        assert!((butterfly_opnorm(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((butterfly_opnorm(2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((butterfly_opnorm(4.0 / 3.0).unwrap() - 0.75f64.exp2()).abs() < 1e-15);
        assert!((butterfly_opnorm(f64::INFINITY).unwrap() - 2.0).abs() < 1e-15);
        assert!(butterfly_opnorm(0.5).is_err());
    }

    #[test]
    fn numeric_opnorm_checks() {
        let r = verify_opnorm_numeric(1.5, 10_000, 7).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.maximizer, (1.0, 0.0));
        assert!((r.maximizer_ratio - (2.0f64 / 3.0).exp2()).abs() < 1e-12);

        let r = verify_opnorm_numeric(3.0, 10_000, 7).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!((r.maximizer_ratio - (2.0f64 / 3.0).exp2()).abs() < 1e-12);

        let r = verify_opnorm_numeric(2.0, 1_000, 1).unwrap();
        assert!((r.bound - 2f64.sqrt()).abs() < 1e-15);
        assert!(r.passed());
    }

    #[test]
    fn bounds_parity_tight_and_constant_degenerate() {
        for n in 1..=5 {
            let parity = TruthTable::from_fn(n, |i| i.count_ones() % 2 == 0).unwrap();
            let (p, v) = profile_of(&parity);
            let s = check_bounds(&p, &v).unwrap();
            assert!(s.jensen.is_zero());
            assert_eq!(p.log2_mu, ratio(-(n as i64), 2));
        }
        let c = TruthTable::constant(3, -1).unwrap();
        let (p, v) = profile_of(&c);
        assert!(p.log2_mu.is_zero());
        let s = check_bounds(&p, &v).unwrap();
        assert!(s.coarse_lower.is_zero() && s.coarse_upper.is_zero() && s.jensen.is_zero());
        assert_eq!(p.mu_float, 1.0);
    }

    #[test]
    fn exhaustive_profile_invariants_small_n() {
        for n in 1..=3 {
            for fid in 0..universe_size(n).unwrap() {
                let t = TruthTable::from_fid(n, fid).unwrap();
                let (p, v) = profile_of(&t);
                check_bounds(&p, &v).unwrap();
                assert!(p.exponents.iter().all(|e| *e >= int(1) && *e <= int(2)));
                assert!(p.log2_mu <= int(0) && p.log2_mu >= ratio(-(n as i64), 2));
            }
        }
    }

    #[test]
    fn schur_examples() {
        let x = vec![int(1), int(0), int(0)];
        let y = vec![ratio(1, 2), ratio(1, 2), int(0)];
        let v = schur_compare(&x, &y).unwrap();
        assert!(v.x_majorizes_y && !v.permutation);
        assert_eq!(v.phi_x, ratio(1, 2));
        assert_eq!(v.phi_y, ratio(2, 3));
        assert!(v.mu_x_larger());

        let z = vec![int(0), int(0), int(1)];
        let v = schur_compare(&x, &z).unwrap();
        assert!(v.permutation && v.phi_x == v.phi_y);

        assert!(matches!(
            schur_compare(&x, &[ratio(1, 2), int(0), int(0)]),
            Err(Error::UnequalSums)
        ));
    }

    #[test]
    fn norm_propagation_examples() {
        let r = norm_propagation_check(&int(1), 4, 2_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.factor - 0.5f64.sqrt()).abs() < 1e-15);

        let r = norm_propagation_check(&int(0), 4, 2_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.factor, 1.0);

        let r = norm_propagation_check(&ratio(1, 2), 3, 2_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.factor - (-1.0f64 / 3.0).exp2()).abs() < 1e-15);

        assert!(norm_propagation_check(&ratio(3, 2), 3, 10, 0).is_err());
    }
}
