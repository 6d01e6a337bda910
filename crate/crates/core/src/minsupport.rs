//! Exact minimum-support ternary certificates.
//!
//! For a support size `k`, a mask realizes `f` iff every input row `i` has
//! `f_i (H w)_i >= 1`. Each signed column `(S, ±)` either agrees or disagrees
//! with `f` on a row, so the condition is that every row is disagreed by at
//! most `floor((k-1)/2)` of the `k` chosen columns (for even `k` the row sums
//! are even and must reach 2). The search deepens `k = 1, 2, 3, ...` and
//! exhausts each level by branch and bound, so the first feasible level is
//! the optimum.
//!
//! Row counters are kept bit-parallel: `ge[t]` is the set of rows disagreed
//! by at least `t` chosen columns. A partial assignment is pruned when a
//! column would push a saturated row past the cap, and when the remaining
//! picks cannot fit in the leftover disagreement capacity
//! `N * d_max - Σ_i count_i` even using the lightest admissible columns.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::synthesis::{fourier_rounding, verify, TernaryMask};
use crate::walsh::{character_sign, fwht, TruthTable, MAX_UNIVERSE_VARS};

/// Node and wall-clock caps for one solve. `None` means unlimited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub const fn unlimited() -> Self {
        Self {
            max_nodes: None,
            max_time: None,
        }
    }

    /// Unlimited at `n <= 4`; `10^8` nodes at `n = 5`. No wall-clock cap, so
    /// the outcome does not depend on machine speed.
    pub fn default_for(n: usize) -> Self {
        if n <= 4 {
            Self::unlimited()
        } else {
            Self {
                max_nodes: Some(100_000_000),
                max_time: None,
            }
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::unlimited()
    }
}

/// Best mask known when a budget runs out, with the proven lower bound on
/// the optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incumbent {
    pub mask: TernaryMask,
    pub lower_bound: usize,
}

/// A verified ternary mask for one function. Only constructible through
/// [`Certificate::new`], which re-checks the sign condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    fid: u64,
    n: usize,
    mask: TernaryMask,
    margin_min: i64,
    optimal: bool,
    solver: String,
    elapsed: Option<Duration>,
}

impl Certificate {
    pub fn new(
        f: &TruthTable,
        mask: TernaryMask,
        optimal: bool,
        solver: impl Into<String>,
        elapsed: Option<Duration>,
    ) -> Result<Self> {
        let fid = f.fid().ok_or(Error::InvalidVariableCount {
            n: f.n(),
            max: MAX_UNIVERSE_VARS,
        })?;
        let v = verify(&mask, f)?;
        if !v.ok {
            return Err(Error::VerificationFailed { fid });
        }
        Ok(Self {
            fid,
            n: f.n(),
            mask,
            margin_min: v.margin,
            optimal,
            solver: solver.into(),
            elapsed,
        })
    }

    pub fn fid(&self) -> u64 {
        self.fid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> &TernaryMask {
        &self.mask
    }

    pub fn min_support(&self) -> usize {
        self.mask.support()
    }

    pub fn margin_min(&self) -> i64 {
        self.margin_min
    }

    pub fn optimal(&self) -> bool {
        self.optimal
    }

    pub fn solver(&self) -> &str {
        &self.solver
    }

    pub fn elapsed(&self) -> Option<Duration> {
        self.elapsed
    }

    pub fn truth_table(&self) -> TruthTable {
        TruthTable::from_fid(self.n, self.fid).expect("fid validated at construction")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BackendCapabilities {
    pub exact: bool,
    pub anytime: bool,
}

/// Contract for minimum-support solvers. The built-in branch and bound is
/// always available; other solvers plug in behind the same interface.
pub trait SolverBackend: Send + Sync {
    fn label(&self) -> &str;
    fn capabilities(&self) -> BackendCapabilities;
    fn solve(&self, f: &TruthTable, budget: &Budget) -> Result<Certificate>;
}

/// Built-in exact iterative-deepening branch and bound.
#[derive(Clone, Copy, Debug, Default)]
pub struct BranchAndBound;

impl SolverBackend for BranchAndBound {
    fn label(&self) -> &str {
        "bnb"
    }

    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            exact: true,
            anytime: true,
        }
    }

    fn solve(&self, f: &TruthTable, budget: &Budget) -> Result<Certificate> {
        min_support_exact(f, budget)
    }
}

const MAX_LEVELS: usize = 17;

#[derive(Clone, Copy)]
struct Column {
    set: usize,
    sign: i8,
    /// Rows this signed column disagrees with.
    dis: u32,
    weight: u32,
}

/// Column visiting order for one pass.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Order {
    /// Subsets by `|c_S|` descending, `sign(c_S)` first.
    Fourier,
    /// Subsets ascending, `-1` before `+1`; the first hit is lex-least.
    Lex,
}

struct Search<'a> {
    rows: usize,
    full: u32,
    /// `cols[2j]`, `cols[2j+1]`: the two signs of the `j`-th subset in order.
    cols: Vec<Column>,
    d_max: usize,
    cap: u32,
    chosen: Vec<usize>,
    nodes: u64,
    budget: &'a Budget,
    start: Instant,
    out_of_budget: bool,
}

impl<'a> Search<'a> {
    fn new(f: &TruthTable, coeffs: &[i64], order: Order, budget: &'a Budget, start: Instant) -> Self {
        let rows = f.len();
        let full = if rows == 32 { u32::MAX } else { (1u32 << rows) - 1 };
        let mut sets: Vec<usize> = (0..rows).collect();
        if order == Order::Fourier {
            sets.sort_by(|&a, &b| coeffs[b].abs().cmp(&coeffs[a].abs()).then(a.cmp(&b)));
        }
        let mut cols = Vec::with_capacity(2 * rows);
        for &s in &sets {
            // Rows where f_i χ_S(i) = +1.
            let agree = (0..rows)
                .filter(|&i| f.value(i) as i64 * character_sign(i, s) > 0)
                .fold(0u32, |acc, i| acc | (1 << i));
            let plus = Column {
                set: s,
                sign: 1,
                dis: !agree & full,
                weight: (!agree & full).count_ones(),
            };
            let minus = Column {
                set: s,
                sign: -1,
                dis: agree,
                weight: agree.count_ones(),
            };
            let pair = match order {
                Order::Lex => [minus, plus],
                Order::Fourier if coeffs[s] < 0 => [minus, plus],
                Order::Fourier => [plus, minus],
            };
            cols.extend(pair);
        }
        Self {
            rows,
            full,
            cols,
            d_max: 0,
            cap: 0,
            chosen: Vec::new(),
            nodes: 0,
            budget,
            start,
            out_of_budget: false,
        }
    }

    fn over_budget(&mut self) -> bool {
        if self.out_of_budget {
            return true;
        }
        if let Some(max) = self.budget.max_nodes {
            if self.nodes >= max {
                self.out_of_budget = true;
            }
        }
        if self.nodes & 0xfff == 0 {
            if let Some(limit) = self.budget.max_time {
                if self.start.elapsed() >= limit {
                    self.out_of_budget = true;
                }
            }
        }
        self.out_of_budget
    }

    /// Searches for exactly `k` columns. Returns the chosen column indices.
    fn level(&mut self, k: usize) -> Option<Vec<usize>> {
        self.d_max = (k - 1) / 2;
        self.cap = (self.rows * self.d_max) as u32;
        self.chosen.clear();
        let mut ge = [0u32; MAX_LEVELS + 1];
        ge[0] = self.full;
        if self.dfs(0, k, &ge, 0) {
            Some(self.chosen.clone())
        } else {
            None
        }
    }

    fn dfs(&mut self, pos: usize, remaining: usize, ge: &[u32; MAX_LEVELS + 1], used: u32) -> bool {
        if remaining == 0 {
            return true;
        }
        self.nodes += 1;
        if self.over_budget() {
            return false;
        }
        let sets_left = self.cols.len() / 2 - pos;
        if sets_left < remaining {
            return false;
        }
        let sat = ge[self.d_max];

        // Capacity bounds. For each tight set T = rows with slack <= θ, the
        // remaining picks can add at most the total slack of T there; each
        // remaining subset contributes at least its lighter admissible sign.
        let d = self.d_max;
        let mut hist = [[0u8; 33]; MAX_LEVELS + 1];
        let mut admissible = 0usize;
        for j in pos..self.cols.len() / 2 {
            let a = &self.cols[2 * j];
            let b = &self.cols[2 * j + 1];
            let oka = a.dis & sat == 0;
            let okb = b.dis & sat == 0;
            if !oka && !okb {
                continue;
            }
            admissible += 1;
            for theta in 1..=d {
                let t = ge[d - theta];
                let wa = if oka { (a.dis & t).count_ones() } else { u32::MAX };
                let wb = if okb { (b.dis & t).count_ones() } else { u32::MAX };
                hist[theta][wa.min(wb) as usize] += 1;
            }
        }
        if admissible < remaining {
            return false;
        }
        for theta in 1..=d {
            let t = ge[d - theta];
            // Σ_{i∈T} (d − count_i), with count_i = #{s ≥ 1 : i ∈ ge[s]}.
            let mut slack = t.count_ones() * d as u32;
            for s in 1..=d {
                slack -= (ge[s.max(d - theta)] & t).count_ones();
            }
            let mut need = remaining;
            let mut lightest = 0u32;
            for (w, &c) in hist[theta].iter().enumerate() {
                if need == 0 {
                    break;
                }
                let take = need.min(c as usize);
                lightest += take as u32 * w as u32;
                need -= take;
            }
            if lightest > slack {
                return false;
            }
        }

        for j in pos..self.cols.len() / 2 {
            if self.cols.len() / 2 - j < remaining {
                break;
            }
            for c in [2 * j, 2 * j + 1] {
                let col = self.cols[c];
                if col.dis & sat != 0 || used + col.weight > self.cap {
                    continue;
                }
                let mut next = *ge;
                for t in (1..=self.d_max).rev() {
                    next[t] |= next[t - 1] & col.dis;
                }
                self.chosen.push(c);
                if self.dfs(j + 1, remaining - 1, &next, used + col.weight) {
                    return true;
                }
                self.chosen.pop();
                if self.out_of_budget {
                    return false;
                }
            }
        }
        false
    }

    fn mask(&self, n: usize, picks: &[usize]) -> TernaryMask {
        let entries: Vec<(usize, i8)> = picks
            .iter()
            .map(|&c| (self.cols[c].set, self.cols[c].sign))
            .collect();
        TernaryMask::from_entries(n, &entries).expect("subset indices in range")
    }
}

/// Iterative-deepening exact minimum support. Each level is decided by a
/// Fourier-ordered pass; the feasible level is then re-searched in
/// lexicographic order so that the returned optimum is canonical.
pub fn min_support_exact(f: &TruthTable, budget: &Budget) -> Result<Certificate> {
    if f.n() > MAX_UNIVERSE_VARS {
        return Err(Error::InvalidVariableCount {
            n: f.n(),
            max: MAX_UNIVERSE_VARS,
        });
    }
    let start = Instant::now();
    let n = f.n();
    let rows = f.len();
    let coeffs = fwht(f).coeffs().to_vec();
    let rounded = fourier_rounding(f);
    let upper = rounded.as_ref().map(|(m, _)| m.support()).unwrap_or(rows + 1);
    let max_level = upper.min(rows).min(2 * MAX_LEVELS - 1);

    let mut fourier = Search::new(f, &coeffs, Order::Fourier, budget, start);
    for k in 1..=max_level {
        let found = if k == upper {
            rounded.as_ref().map(|(m, _)| m.clone())
        } else {
            fourier.level(k).map(|p| fourier.mask(n, &p))
        };
        if fourier.out_of_budget {
            return Err(Error::BudgetExhausted {
                level: k,
                best: rounded.map(|(mask, _)| Box::new(Incumbent { mask, lower_bound: k })),
            });
        }
        let Some(found) = found else { continue };

        let mut lex = Search::new(f, &coeffs, Order::Lex, budget, start);
        lex.nodes = fourier.nodes;
        let mask = match lex.level(k) {
            Some(p) => lex.mask(n, &p),
            // Budget ran out while canonicalizing; the level is still proven
            // optimal, so keep the first mask found.
            None => found,
        };
        return Certificate::new(f, mask, true, "bnb", Some(start.elapsed()));
    }
    Err(Error::Infeasible {
        fid: f.fid().unwrap_or(u64::MAX),
        n,
    })
}

/// Outcome of a census: certificates for solved functions plus the fids
/// whose solves ran out of budget.
#[derive(Clone, Debug)]
pub struct SupportCensus {
    pub n: usize,
    pub certificates: Vec<Certificate>,
    pub exhausted: Vec<u64>,
}

impl SupportCensus {
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for c in self.certificates.iter().filter(|c| c.optimal()) {
            *h.entry(c.min_support()).or_insert(0) += 1;
        }
        h
    }

    pub fn optimal_count(&self) -> usize {
        self.certificates.iter().filter(|c| c.optimal()).count()
    }

    pub fn mean(&self) -> Option<f64> {
        let opt: Vec<usize> = self
            .certificates
            .iter()
            .filter(|c| c.optimal())
            .map(|c| c.min_support())
            .collect();
        if opt.is_empty() {
            None
        } else {
            Some(opt.iter().sum::<usize>() as f64 / opt.len() as f64)
        }
    }

    pub fn max(&self) -> Option<usize> {
        self.certificates
            .iter()
            .filter(|c| c.optimal())
            .map(|c| c.min_support())
            .max()
    }

    pub fn all_odd(&self) -> bool {
        self.certificates
            .iter()
            .filter(|c| c.optimal())
            .all(|c| c.min_support() % 2 == 1)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let total = self.optimal_count().max(1) as f64;
        writeln!(out, "support,count,fraction")?;
        for (s, c) in self.histogram() {
            writeln!(out, "{s},{c},{:.6}", c as f64 / total)?;
        }
        Ok(())
    }
}

/// Solves every fid (in parallel) and merges results in the input order.
pub fn support_census(
    n: usize,
    fids: &[u64],
    backend: &dyn SolverBackend,
    budget: &Budget,
) -> Result<SupportCensus> {
    let results: Vec<Result<std::result::Result<Certificate, u64>>> = fids
        .par_iter()
        .map(|&fid| {
            let f = TruthTable::from_fid(n, fid)?;
            match backend.solve(&f, budget) {
                Ok(c) => Ok(Ok(c)),
                Err(Error::BudgetExhausted { .. }) => Ok(Err(fid)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut certificates = Vec::with_capacity(fids.len());
    let mut exhausted = Vec::new();
    for r in results {
        match r? {
            Ok(c) => certificates.push(c),
            Err(fid) => exhausted.push(fid),
        }
    }
    Ok(SupportCensus {
        n,
        certificates,
        exhausted,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParityAudit {
    pub checked: usize,
    pub optimal: usize,
    pub odd_optimal: usize,
    /// Optimal certificates with even support; a finding, not an error.
    pub even_optimal_fids: Vec<u64>,
}

impl ParityAudit {
    pub fn all_odd(&self) -> bool {
        self.even_optimal_fids.is_empty()
    }
}

impl fmt::Display for ParityAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} certificates, {}/{} optimal with odd support",
            self.checked, self.odd_optimal, self.optimal
        )
    }
}

/// Checks that every margin entry has the parity of the support (a hard
/// fact about sums of `±1` terms) and tallies odd optimal supports.
pub fn parity_audit<'a>(certs: impl IntoIterator<Item = &'a Certificate>) -> Result<ParityAudit> {
    let mut audit = ParityAudit::default();
    for c in certs {
        let f = c.truth_table();
        let v = verify(c.mask(), &f)?;
        let parity = (c.min_support() % 2) as i64;
        if let Some(row) = v.margin_vector.iter().position(|m| m.rem_euclid(2) != parity) {
            return Err(Error::ParityContradiction { fid: c.fid(), row });
        }
        audit.checked += 1;
        if c.optimal() {
            audit.optimal += 1;
            if parity == 1 {
                audit.odd_optimal += 1;
            } else {
                audit.even_optimal_fids.push(c.fid());
            }
        }
    }
    Ok(audit)
}
