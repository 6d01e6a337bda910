use bbt_core::cancellation::{layer_cancellation, pair_ratio};
use bbt_core::certstore::{read_certificates, write_certificates};
use bbt_core::contraction::{
    butterfly_opnorm, check_bounds, contraction_profile, majorizes, norm_propagation_check,
    schur_compare,
};
use bbt_core::influence::{influences, ratio, Rational};
use bbt_core::minsupport::{min_support_exact, Budget};
use bbt_core::npn::{apply_transform, canonicalize, NpnTransform};
use bbt_core::stats::{pearson, spearman};
use bbt_core::synthesis::{multi_start_repair, verify};
use bbt_core::walsh::{fwht, fwht_inverse_table, TruthTable};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(max_n: usize) -> impl Strategy<Value = TruthTable> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::bool::ANY, 1 << n).prop_map(|bits| {
            TruthTable::from_values(bits.into_iter().map(|b| if b { 1 } else { -1 }).collect())
                .unwrap()
        })
    })
}

fn table_n(n: usize) -> impl Strategy<Value = TruthTable> {
    any::<u64>().prop_map(move |x| {
        let len = 1u32 << n;
        let fid = if len >= 64 { x } else { x & ((1u64 << len) - 1) };
        TruthTable::from_fid(n, fid).unwrap()
    })
}

fn transform(n: usize) -> impl Strategy<Value = NpnTransform> {
    any::<u64>().prop_map(move |seed| NpnTransform::random(n, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// A vector in `[0, 1]^k` and a Robin Hood transfer of it, which the original
/// majorizes.
fn transfer_pair() -> impl Strategy<Value = (Vec<Rational>, Vec<Rational>)> {
    (2usize..=6)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0i64..=64, k),
                0..k,
                0..k,
                1i64..=64,
            )
        })
        .prop_map(|(raw, i, j, t)| {
            let x: Vec<Rational> = raw.iter().map(|&a| ratio(a, 64)).collect();
            let mut y = x.clone();
            if i != j {
                let (hi, lo) = if x[i] >= x[j] { (i, j) } else { (j, i) };
                let gap = &x[hi] - &x[lo];
                let step = gap * ratio(t, 128);
                y[hi] = &x[hi] - &step;
                y[lo] = &x[lo] + &step;
            }
            (x, y)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parseval_and_inverse(f in table(8)) {
        let s = fwht(&f);
        prop_assert_eq!(s.parseval_sum(), 1u128 << (2 * f.n()));
        prop_assert!(s.coeffs().iter().all(|c| c % 2 == 0));
        prop_assert_eq!(fwht_inverse_table(&s).unwrap(), f);
    }

    #[test]
    fn total_influence_is_weighted_spectral_mass(f in table(8)) {
        let s = fwht(&f);
        let v = influences(&s);
        let weighted: u64 = s
            .coeffs()
            .iter()
            .enumerate()
            .map(|(set, &c)| set.count_ones() as u64 * (c * c) as u64)
            .sum();
        prop_assert_eq!(v.total_numerator(), weighted);
        prop_assert!(v.numerators().iter().all(|&a| a <= v.denominator()));
        prop_assert_eq!(influences(&fwht(&f.negated())), v);
    }

    #[test]
    fn margin_bounds_hold(f in table(8)) {
        let v = influences(&fwht(&f));
        let p = contraction_profile(&v);
        prop_assert!(check_bounds(&p, &v).is_ok());
        prop_assert!(p.mu_float > 0.0 && p.mu_float <= 1.0);
    }

    #[test]
    fn schur_order_follows_majorization((x, y) in transfer_pair()) {
        prop_assert!(majorizes(&x, &y));
        let verdict = schur_compare(&x, &y).unwrap();
        prop_assert!(verdict.x_majorizes_y);
        if verdict.permutation {
            prop_assert_eq!(&verdict.phi_x, &verdict.phi_y);
        } else {
            prop_assert!(verdict.mu_x_larger());
        }
    }

    #[test]
    fn pair_ratio_range_symmetry_and_scale(a in -1e6f64..1e6, b in -1e6f64..1e6, k in 1e-3f64..1e3) {
        let r = pair_ratio(a, b);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r, pair_ratio(b, a));
        prop_assert!((r - pair_ratio(a, -b)).abs() < 1e-12);
        prop_assert!((r - pair_ratio(k * a, k * b)).abs() < 1e-9);
    }

    #[test]
    fn rank_correlations_are_bounded_and_monotone_invariant(
        x in prop::collection::vec(-100i32..100, 3..40),
        y in prop::collection::vec(-100i32..100, 3..40),
    ) {
        let m = x.len().min(y.len());
        let x: Vec<f64> = x[..m].iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = y[..m].iter().map(|&v| v as f64).collect();
        if let Some(r) = pearson(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
        if let Some(rho) = spearman(&x, &x) {
            prop_assert!((rho - 1.0).abs() < 1e-12);
        }
        let cubed: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        match (spearman(&x, &y), spearman(&cubed, &y)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn npn_group_laws(t in transform(5), u in transform(5), f in table_n(5)) {
        let round = apply_transform(&f, &t.then(&t.inverse())).unwrap();
        prop_assert_eq!(&round, &f);
        prop_assert_eq!(&apply_transform(&f, &NpnTransform::identity(5)).unwrap(), &f);
        let lhs = apply_transform(&apply_transform(&f, &t).unwrap(), &u).unwrap();
        prop_assert_eq!(lhs, apply_transform(&f, &t.then(&u)).unwrap());
    }

    #[test]
    fn npn_invariants(t in transform(5), f in table_n(5)) {
        let g = apply_transform(&f, &t).unwrap();
        prop_assert_eq!(canonicalize(&f).unwrap(), canonicalize(&g).unwrap());
        let (vf, vg) = (influences(&fwht(&f)), influences(&fwht(&g)));
        prop_assert_eq!(vf.total_numerator(), vg.total_numerator());
        prop_assert_eq!(vf.sorted_numerators(), vg.sorted_numerators());
        prop_assert_eq!(contraction_profile(&vf).log2_mu, contraction_profile(&vg).log2_mu);
    }

    #[test]
    fn cancellation_ratios_are_unit_interval(f in table_n(4)) {
        let w = multi_start_repair(&f).unwrap().mask.unwrap();
        let r = layer_cancellation(&w);
        prop_assert_eq!(r.rho_tilde.len(), 4);
        for v in r.rho_tilde.iter().chain(&r.rho_layer_min) {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certificates_verify_with_matching_parity(f in table_n(4)) {
        let c = min_support_exact(&f, &Budget::unlimited()).unwrap();
        let check = verify(c.mask(), &f).unwrap();
        prop_assert!(check.ok);
        prop_assert_eq!(check.margin, c.margin_min());
        prop_assert!(check.margin_vector.iter().all(|m| (m - c.min_support() as i64) % 2 == 0));
        let neg = min_support_exact(&f.negated(), &Budget::unlimited()).unwrap();
        prop_assert_eq!(neg.min_support(), c.min_support());
    }

    #[test]
    fn min_support_is_npn_invariant(t in transform(3), f in table_n(3)) {
        let g = apply_transform(&f, &t).unwrap();
        let a = min_support_exact(&f, &Budget::unlimited()).unwrap();
        let b = min_support_exact(&g, &Budget::unlimited()).unwrap();
        prop_assert_eq!(a.min_support(), b.min_support());
    }

    #[test]
    fn certificate_files_round_trip(fids in prop::collection::btree_set(0u64..256, 1..20)) {
        let certs: Vec<_> = fids
            .iter()
            .map(|&fid| min_support_exact(&TruthTable::from_fid(3, fid).unwrap(), &Budget::unlimited()).unwrap())
            .collect();
        let mut bytes = Vec::new();
        write_certificates(&mut bytes, 3, &certs, false).unwrap();
        let back = read_certificates(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.certificates.len(), certs.len());
        let mut again = Vec::new();
        write_certificates(&mut again, 3, &back.certificates, false).unwrap();
        prop_assert_eq!(bytes, again);
    }

    #[test]
    fn opnorm_and_layer_contraction(num in 0i64..=32) {
        let inf = ratio(num, 32);
        let report = norm_propagation_check(&inf, 5, 200, num as u64).unwrap();
        prop_assert!(report.passed);
        let p = 1.0 + num as f64 / 32.0;
        let expected = (1.0 / p).exp2().max((1.0 - 1.0 / p).exp2());
        prop_assert!((butterfly_opnorm(p).unwrap() - expected).abs() < 1e-12);
    }
}
