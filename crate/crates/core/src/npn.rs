//! NPN equivalence: input permutations, input negations and output
//! negation, canonical representatives, and whole-universe enumeration by
//! orbit marking.
//!
//! Two paths produce orbits. [`NpnTransform`] compiles to an index table and
//! is used for single transforms and the group-law tests. The enumeration
//! path walks an orbit directly on the packed truth table: Heap's algorithm
//! over variable swaps and a Gray code over input negations, each step a
//! couple of shift-and-mask operations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contraction::contraction_profile;
use crate::error::{Error, Result};
use crate::influence::influences;
use crate::minsupport::{min_support_exact, Budget};
use crate::walsh::{fwht, TruthTable, MAX_UNIVERSE_VARS};

/// `g(x) = (-1)^out · f(y)` with `y_j = (-1)^{neg_j} x_{perm[j]}`
/// (0-based coordinates).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NpnTransform {
    perm: Vec<usize>,
    input_neg: u32,
    output_neg: bool,
}

impl NpnTransform {
    pub fn new(perm: Vec<usize>, input_neg: u32, output_neg: bool) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Domain(format!("{perm:?} is not a permutation")));
            }
        }
        if n < 32 && input_neg >> n != 0 {
            return Err(Error::Domain(format!(
                "negation mask {input_neg:#x} has bits beyond n = {n}"
            )));
        }
        Ok(Self {
            perm,
            input_neg,
            output_neg,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            input_neg: 0,
            output_neg: false,
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn input_neg(&self) -> u32 {
        self.input_neg
    }

    pub fn output_neg(&self) -> bool {
        self.output_neg
    }

    /// Input index of `f` read when evaluating the transformed function at `i`.
    pub fn source_index(&self, i: usize) -> usize {
        self.perm
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &p)| {
                let bit = ((i >> p) & 1) ^ ((self.input_neg as usize >> j) & 1);
                acc | (bit << j)
            })
    }

    /// `c` with `apply(apply(f, self), other) == apply(f, c)`.
    pub fn then(&self, other: &NpnTransform) -> NpnTransform {
        let perm = self.perm.iter().map(|&p| other.perm[p]).collect();
        let input_neg = self.perm.iter().enumerate().fold(0u32, |acc, (j, &p)| {
            let bit = ((other.input_neg >> p) & 1) ^ ((self.input_neg >> j) & 1);
            acc | (bit << j)
        });
        NpnTransform {
            perm,
            input_neg,
            output_neg: self.output_neg ^ other.output_neg,
        }
    }

    pub fn inverse(&self) -> NpnTransform {
        let n = self.n();
        let mut perm = vec![0; n];
        let mut input_neg = 0u32;
        for (j, &p) in self.perm.iter().enumerate() {
            perm[p] = j;
            input_neg |= ((self.input_neg >> j) & 1) << p;
        }
        NpnTransform {
            perm,
            input_neg,
            output_neg: self.output_neg,
        }
    }

    pub fn compile(&self) -> CompiledTransform {
        let len = 1usize << self.n();
        CompiledTransform {
            map: (0..len).map(|i| self.source_index(i) as u32).collect(),
            output_neg: self.output_neg,
        }
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Self {
            perm,
            input_neg: rng.gen_range(0..1u32 << n),
            output_neg: rng.gen(),
        }
    }
}

/// Index table plus output sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledTransform {
    map: Vec<u32>,
    output_neg: bool,
}

impl CompiledTransform {
    pub fn apply_fid(&self, fid: u64) -> u64 {
        let mut g = self.map.iter().enumerate().fold(0u64, |acc, (i, &src)| {
            acc | (((fid >> src) & 1) << i)
        });
        if self.output_neg {
            g ^= table_mask(self.map.len());
        }
        g
    }
}

fn table_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

pub fn apply_transform(f: &TruthTable, t: &NpnTransform) -> Result<TruthTable> {
    if t.n() != f.n() {
        return Err(Error::LengthMismatch {
            expected: f.n(),
            got: t.n(),
        });
    }
    let sign = if t.output_neg { -1 } else { 1 };
    let values = (0..f.len())
        .map(|i| sign * f.value(t.source_index(i)))
        .collect();
    TruthTable::from_values(values)
}

/// `2 · 2^n · n!`.
pub fn group_size(n: usize) -> u64 {
    2 * (1u64 << n) * (1..=n as u64).product::<u64>()
}

/// Every transform for `n` variables, permutations in lexicographic order.
pub fn all_transforms(n: usize) -> Vec<NpnTransform> {
    let mut perms = vec![];
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        perms.push(p.clone());
        // Next lexicographic permutation.
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
    let mut out = Vec::with_capacity(group_size(n) as usize);
    for perm in perms {
        for neg in 0..1u32 << n {
            for output_neg in [false, true] {
                out.push(NpnTransform {
                    perm: perm.clone(),
                    input_neg: neg,
                    output_neg,
                });
            }
        }
    }
    out
}

/// Positions whose index has bit `j` clear, within 32 bits.
const LOW_HALF: [u32; 5] = [0x5555_5555, 0x3333_3333, 0x0f0f_0f0f, 0x00ff_00ff, 0x0000_ffff];

/// Precomputed step sequence for walking an orbit in place.
#[derive(Clone, Debug)]
pub struct OrbitWalker {
    n: usize,
    full: u32,
    /// `(a, b)` variable swaps from Heap's algorithm; `n! - 1` entries.
    swaps: Vec<(usize, usize)>,
}

impl OrbitWalker {
    pub fn new(n: usize) -> Self {
        assert!((1..=MAX_UNIVERSE_VARS).contains(&n));
        let mut swaps = Vec::new();
        let mut c = vec![0usize; n];
        let mut i = 1;
        while i < n {
            if c[i] < i {
                let a = if i % 2 == 0 { 0 } else { c[i] };
                swaps.push((a.min(i), a.max(i)));
                c[i] += 1;
                i = 1;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        let full = if n == 5 { u32::MAX } else { (1u32 << (1 << n)) - 1 };
        Self { n, full, swaps }
    }

    #[inline]
    fn negate_var(&self, t: u32, j: usize) -> u32 {
        let m = LOW_HALF[j] & self.full;
        let s = 1u32 << j;
        ((t & m) << s) | ((t >> s) & m)
    }

    #[inline]
    fn swap_vars(&self, t: u32, a: usize, b: usize) -> u32 {
        // Indices with bit a set and bit b clear trade places with their
        // partners `+ 2^b - 2^a`.
        let d = !LOW_HALF[a] & LOW_HALF[b] & self.full;
        let shift = (1u32 << b) - (1u32 << a);
        let x = ((t >> shift) ^ t) & d;
        t ^ x ^ (x << shift)
    }

    /// Calls `visit` on every orbit member (with repetitions; exactly
    /// `2 · 2^n · n!` calls).
    #[inline]
    pub fn for_each(&self, fid: u32, mut visit: impl FnMut(u32)) {
        let mut t = fid;
        let negs = 1u32 << self.n;
        for p in 0..=self.swaps.len() {
            visit(t);
            visit(t ^ self.full);
            for m in 1..negs {
                t = self.negate_var(t, m.trailing_zeros() as usize);
                visit(t);
                visit(t ^ self.full);
            }
            if let Some(&(a, b)) = self.swaps.get(p) {
                t = self.swap_vars(t, a, b);
            }
        }
    }

    pub fn canonical(&self, fid: u32) -> u32 {
        let mut best = u32::MAX;
        self.for_each(fid, |g| best = best.min(g));
        best
    }
}

/// Lex-least fid in the NPN orbit of `f`.
pub fn canonicalize(f: &TruthTable) -> Result<u64> {
    if f.n() > MAX_UNIVERSE_VARS {
        return Err(Error::InvalidVariableCount {
            n: f.n(),
            max: MAX_UNIVERSE_VARS,
        });
    }
    let fid = f.fid().expect("n <= 5") as u32;
    Ok(OrbitWalker::new(f.n()).canonical(fid) as u64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpnUniverse {
    pub n: usize,
    /// Lex-least representative of each class, ascending.
    pub canonical_fids: Vec<u64>,
}

impl NpnUniverse {
    pub fn class_count(&self) -> usize {
        self.canonical_fids.len()
    }

    pub fn contains(&self, fid: u64) -> bool {
        self.canonical_fids.binary_search(&fid).is_ok()
    }
}

/// Known class counts.
pub fn expected_class_count(n: usize) -> Option<usize> {
    match n {
        1 => Some(2),
        2 => Some(4),
        3 => Some(14),
        4 => Some(222),
        5 => Some(616_126),
        _ => None,
    }
}

pub fn enumerate_universe(n: usize) -> Result<NpnUniverse> {
    enumerate_universe_with_progress(n, |_, _| {})
}

/// Orbit marking: scan fids ascending, and for each unvisited one record it
/// and mark its whole orbit. `progress(scanned_fids, classes)` is called
/// periodically.
pub fn enumerate_universe_with_progress(
    n: usize,
    mut progress: impl FnMut(u64, usize),
) -> Result<NpnUniverse> {
    if n == 0 || n > MAX_UNIVERSE_VARS {
        return Err(Error::InvalidVariableCount {
            n,
            max: MAX_UNIVERSE_VARS,
        });
    }
    let total: u64 = 1u64 << (1u32 << n);
    let words = total.div_ceil(64) as usize;
    let mut visited: Vec<u64> = Vec::new();
    visited.try_reserve_exact(words).map_err(|_| Error::OutOfMemory {
        bytes: words * 8,
    })?;
    visited.resize(words, 0);
    let walker = OrbitWalker::new(n);
    let mut reps = Vec::new();
    for word in 0..words {
        if word % (1 << 20) == 0 {
            progress(word as u64 * 64, reps.len());
        }
        loop {
            let free = !visited[word];
            if free == 0 {
                break;
            }
            let fid = word as u64 * 64 + free.trailing_zeros() as u64;
            if fid >= total {
                break;
            }
            reps.push(fid);
            walker.for_each(fid as u32, |g| {
                visited[(g >> 6) as usize] |= 1u64 << (g & 63);
            });
        }
    }
    progress(total, reps.len());
    Ok(NpnUniverse {
        n,
        canonical_fids: reps,
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NpnAuditReport {
    pub functions: usize,
    pub transforms: usize,
    pub min_support_checks: usize,
    pub mismatches: Vec<String>,
}

impl NpnAuditReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Applies random transforms to each sampled function and checks that total
/// influence, `log2 μ`, the influence multiset and (when a budget is given)
/// the minimum support agree, and that influences permute covariantly.
pub fn npn_invariance_audit(
    n: usize,
    fids: &[u64],
    transforms_per_fid: usize,
    seed: u64,
    min_support_budget: Option<&Budget>,
) -> Result<NpnAuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NpnAuditReport::default();
    for &fid in fids {
        let f = TruthTable::from_fid(n, fid)?;
        let vf = influences(&fwht(&f));
        let pf = contraction_profile(&vf);
        let base_support = match min_support_budget {
            Some(b) => min_support_exact(&f, b).ok().map(|c| c.min_support()),
            None => None,
        };
        report.functions += 1;
        for t_idx in 0..transforms_per_fid {
            let t = NpnTransform::random(n, &mut rng);
            let g = apply_transform(&f, &t)?;
            let vg = influences(&fwht(&g));
            let pg = contraction_profile(&vg);
            report.transforms += 1;
            let tag = format!("fid {fid:#x}, transform {t_idx}");
            if vf.total_numerator() != vg.total_numerator() {
                report.mismatches.push(format!("{tag}: total influence"));
            }
            if pf.log2_mu != pg.log2_mu {
                report.mismatches.push(format!("{tag}: log2 mu"));
            }
            if vf.sorted_numerators() != vg.sorted_numerators() {
                report.mismatches.push(format!("{tag}: influence multiset"));
            }
            let covariant = t
                .perm()
                .iter()
                .enumerate()
                .all(|(j, &p)| vg.numerators()[p] == vf.numerators()[j]);
            if !covariant {
                report.mismatches.push(format!("{tag}: influence covariance"));
            }
            if let (Some(b), Some(s)) = (min_support_budget, base_support) {
                if let Ok(c) = min_support_exact(&g, b) {
                    report.min_support_checks += 1;
                    if c.min_support() != s {
                        report.mismatches.push(format!("{tag}: min support"));
                    }
                }
            }
        }
    }
    Ok(report)
}
