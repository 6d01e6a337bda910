//! Brute-force reference computations checked against the library.

use std::collections::BTreeMap;

use bbt_core::contraction::{check_bounds, contraction_profile};
use bbt_core::influence::influences;
use bbt_core::minsupport::{min_support_exact, Budget};
use bbt_core::npn::{all_transforms, canonicalize, enumerate_universe, group_size};
use bbt_core::synthesis::{verify, TernaryMask};
use bbt_core::walsh::{apply_hadamard, fwht, fwht_inverse, TruthTable};

fn hadamard_entry(i: usize, s: usize) -> i64 {
    if (i & s).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn naive_spectrum(f: &TruthTable) -> Vec<i64> {
    (0..f.len())
        .map(|s| {
            (0..f.len())
                .map(|i| f.value(i) as i64 * hadamard_entry(i, s))
                .sum()
        })
        .collect()
}

/// `4^n · Inf_l` from the definition: flips of `f` along coordinate `l`,
/// counted over all inputs, times `2^n`.
fn flip_count_influences(f: &TruthTable) -> Vec<u64> {
    (0..f.n())
        .map(|l| {
            let flips = (0..f.len())
                .filter(|&i| f.value(i) != f.value(i ^ (1 << l)))
                .count() as u64;
            flips << f.n()
        })
        .collect()
}

#[test]
fn spectrum_matches_definition_for_every_function_up_to_four_vars() {
    for n in 1..=4 {
        for fid in 0..1u64 << (1 << n) {
            let f = TruthTable::from_fid(n, fid).unwrap();
            let s = fwht(&f);
            assert_eq!(s.coeffs(), naive_spectrum(&f).as_slice(), "n={n} fid={fid:#x}");
            let back = fwht_inverse(&s).unwrap();
            let orig: Vec<i64> = f.values().iter().map(|&v| v as i64).collect();
            assert_eq!(back, orig);
        }
    }
}

#[test]
fn influences_match_flip_counts_for_every_function_up_to_four_vars() {
    for n in 1..=4 {
        for fid in 0..1u64 << (1 << n) {
            let f = TruthTable::from_fid(n, fid).unwrap();
            let v = influences(&fwht(&f));
            assert_eq!(v.numerators(), flip_count_influences(&f).as_slice(), "n={n} fid={fid:#x}");
        }
    }
}

#[test]
fn bounds_hold_exhaustively_up_to_three_vars() {
    for n in 1..=3 {
        for fid in 0..1u64 << (1 << n) {
            let f = TruthTable::from_fid(n, fid).unwrap();
            let v = influences(&fwht(&f));
            check_bounds(&contraction_profile(&v), &v).unwrap();
        }
    }
}

/// Minimum support of every function on `n` variables by enumerating all
/// `3^(2^n)` ternary masks.
fn exhaustive_min_support(n: usize) -> BTreeMap<u64, usize> {
    let len = 1usize << n;
    let total = 3usize.pow(len as u32);
    let mut best = BTreeMap::new();
    let mut w = vec![0i64; len];
    for code in 0..total {
        let mut c = code;
        for e in w.iter_mut() {
            *e = (c % 3) as i64 - 1;
            c /= 3;
        }
        let y: Vec<i64> = (0..len)
            .map(|i| (0..len).map(|s| hadamard_entry(i, s) * w[s]).sum())
            .collect();
        if y.contains(&0) {
            continue;
        }
        let fid = y
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        let support = w.iter().filter(|&&e| e != 0).count();
        let slot = best.entry(fid).or_insert(usize::MAX);
        *slot = (*slot).min(support);
    }
    best
}

#[test]
fn branch_and_bound_matches_exhaustive_enumeration() {
    for n in 1..=3 {
        let oracle = exhaustive_min_support(n);
        assert_eq!(oracle.len(), 1 << (1 << n), "every function is representable");
        for (&fid, &support) in &oracle {
            let f = TruthTable::from_fid(n, fid).unwrap();
            let c = min_support_exact(&f, &Budget::unlimited()).unwrap();
            assert!(c.optimal());
            assert_eq!(c.min_support(), support, "n={n} fid={fid:#x}");
            let check = verify(c.mask(), &f).unwrap();
            assert!(check.ok && check.margin == c.margin_min());
        }
    }
}

#[test]
fn dense_and_fast_hadamard_agree_on_masks() {
    let len = 16;
    for code in (0..3usize.pow(len as u32)).step_by(9973) {
        let mut c = code;
        let w: Vec<i8> = (0..len)
            .map(|_| {
                let e = (c % 3) as i8 - 1;
                c /= 3;
                e
            })
            .collect();
        let m = TernaryMask::new(w).unwrap();
        let fast = apply_hadamard(&m.as_i64()).unwrap();
        let slow: Vec<i64> = (0..len)
            .map(|i| (0..len).map(|s| hadamard_entry(i, s) * m.as_i64()[s]).sum())
            .collect();
        assert_eq!(fast, slow);
    }
}

/// NPN classes via union-find over the explicit transform tables.
fn union_find_classes(n: usize) -> (usize, Vec<u64>) {
    let size = 1usize << (1 << n);
    let mut parent: Vec<u32> = (0..size as u32).collect();
    fn find(p: &mut [u32], mut x: u32) -> u32 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    for t in all_transforms(n) {
        let c = t.compile();
        for fid in 0..size as u64 {
            let g = c.apply_fid(fid);
            let (a, b) = (find(&mut parent, fid as u32), find(&mut parent, g as u32));
            if a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi as usize] = lo;
            }
        }
    }
    let mut mins = Vec::new();
    for fid in 0..size as u32 {
        if find(&mut parent, fid) == fid {
            mins.push(fid as u64);
        }
    }
    let roots: Vec<u64> = (0..size as u32)
        .map(|f| find(&mut parent, f) as u64)
        .collect();
    (mins.len(), roots)
}

#[test]
fn npn_classes_match_union_find_up_to_four_vars() {
    for n in 1..=4 {
        assert_eq!(all_transforms(n).len() as u64, group_size(n));
        let (count, roots) = union_find_classes(n);
        let u = enumerate_universe(n).unwrap();
        assert_eq!(u.class_count(), count, "n={n}");
        // The root is the smallest orbit member, i.e. the canonical form.
        for (fid, &root) in roots.iter().enumerate() {
            let f = TruthTable::from_fid(n, fid as u64).unwrap();
            assert_eq!(canonicalize(&f).unwrap(), root);
        }
        let expected: Vec<u64> = roots
            .iter()
            .enumerate()
            .filter(|(f, &r)| *f as u64 == r)
            .map(|(f, _)| f as u64)
            .collect();
        assert_eq!(u.canonical_fids, expected);
    }
}
