//! Random biregular bipartite graphs, lossless-expansion certification, and
//! the information/extendable sets used to carry logical qubits.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::f2la::{BitMatrix, BitVector, Rref};

const RESAMPLE_ATTEMPTS: usize = 1000;

/// Default cap on the number of subsets enumerated by exhaustive certification.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;

#[derive(Debug, Error, PartialEq)]
pub enum ExpanderError {
    #[error("infeasible degrees: {n_left}*{deg_left} != {n_right}*{deg_right}")]
    Infeasible { n_left: usize, n_right: usize, deg_left: usize, deg_right: usize },
    #[error("degree {deg} exceeds opposite side size {side}")]
    DegreeTooLarge { deg: usize, side: usize },
    #[error("no simple graph after {0} configuration-model attempts")]
    ResampleBudget(usize),
    #[error("exhaustive certification needs {needed} subsets, budget is {budget}; use sampled mode")]
    EnumerationBudget { needed: u64, budget: u64 },
    #[error("greedy coloring used {used} classes, bound is {bound}")]
    ColoringOverflow { used: usize, bound: usize },
    #[error("graph is not biregular")]
    NotBiregular,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A simple bipartite graph with adjacency lists on both sides, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    left: Vec<Vec<usize>>,
    right: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds a graph from an edge list. Duplicate edges are rejected by panic.
    pub fn from_edges(n_left: usize, n_right: usize, edges: &[(usize, usize)]) -> Self {
        let mut left = vec![Vec::new(); n_left];
        let mut right = vec![Vec::new(); n_right];
        for &(l, r) in edges {
            assert!(l < n_left && r < n_right, "edge ({l},{r}) out of range");
            left[l].push(r);
            right[r].push(l);
        }
        for adj in left.iter_mut().chain(right.iter_mut()) {
            adj.sort_unstable();
            let before = adj.len();
            adj.dedup();
            assert_eq!(before, adj.len(), "duplicate edge");
        }
        BipartiteGraph { left, right }
    }

    /// Cycle of length `2n` seen as a graph on `n` vertices (V_L) and `n` edges (V_R).
    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|e| [(e, e), ((e + 1) % n, e)]).collect();
        Self::from_edges(n, n, &edges)
    }

    /// `n` disjoint stars: left vertex `v` joined to right vertices `dv..dv+d`.
    pub fn stars(n: usize, d: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|v| (0..d).map(move |j| (v, d * v + j))).collect();
        Self::from_edges(n, n * d, &edges)
    }

    pub fn complete(n_left: usize, n_right: usize) -> Self {
        let edges: Vec<_> = (0..n_left).flat_map(|l| (0..n_right).map(move |r| (l, r))).collect();
        Self::from_edges(n_left, n_right, &edges)
    }

    pub fn n_left(&self) -> usize {
        self.left.len()
    }

    pub fn n_right(&self) -> usize {
        self.right.len()
    }

    pub fn side_len(&self, side: Side) -> usize {
        match side {
            Side::Left => self.left.len(),
            Side::Right => self.right.len(),
        }
    }

    pub fn adj(&self, side: Side, v: usize) -> &[usize] {
        match side {
            Side::Left => &self.left[v],
            Side::Right => &self.right[v],
        }
    }

    pub fn left_adj(&self, v: usize) -> &[usize] {
        &self.left[v]
    }

    pub fn right_adj(&self, v: usize) -> &[usize] {
        &self.right[v]
    }

    /// Edges sorted by (left, right).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.left.iter().enumerate().flat_map(|(l, adj)| adj.iter().map(move |&r| (l, r))).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.left.iter().map(Vec::len).sum()
    }

    pub fn max_degree(&self, side: Side) -> usize {
        match side {
            Side::Left => self.left.iter().map(Vec::len).max().unwrap_or(0),
            Side::Right => self.right.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    /// `(ΔL, ΔR)` if every vertex on each side has the same degree.
    pub fn biregular_degrees(&self) -> Option<(usize, usize)> {
        let dl = self.left.first().map_or(0, Vec::len);
        let dr = self.right.first().map_or(0, Vec::len);
        let ok = self.left.iter().all(|a| a.len() == dl) && self.right.iter().all(|a| a.len() == dr);
        ok.then_some((dl, dr))
    }

    /// Parity-check matrix `H_G` with rows `V_L` and columns `V_R`.
    pub fn h_matrix(&self) -> BitMatrix {
        BitMatrix::from_entries(self.n_left(), self.n_right(), self.edges())
    }

    /// Union of neighborhoods of `set`, which lies on `side`; sorted.
    pub fn neighborhood(&self, side: Side, set: &[usize]) -> Vec<usize> {
        let n = self.side_len(side.other());
        let mut seen = vec![false; n];
        for &v in set {
            for &u in self.adj(side, v) {
                seen[u] = true;
            }
        }
        (0..n).filter(|&u| seen[u]).collect()
    }

    pub fn to_text(&self) -> String {
        let (dl, dr) = self.biregular_degrees().unwrap_or((self.max_degree(Side::Left), self.max_degree(Side::Right)));
        let mut s = format!("{} {} {} {}\n", self.n_left(), self.n_right(), dl, dr);
        for (l, r) in self.edges() {
            let _ = writeln!(s, "{l} {r}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ExpanderError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse = |line: usize, s: &str| -> Result<Vec<usize>, ExpanderError> {
            s.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|e| ExpanderError::Parse { line: line + 1, msg: e.to_string() }))
                .collect()
        };
        let (hl, header) = lines.next().ok_or(ExpanderError::Parse { line: 1, msg: "missing header".into() })?;
        let h = parse(hl, header)?;
        if h.len() != 4 {
            return Err(ExpanderError::Parse { line: hl + 1, msg: "header must be 'nL nR dL dR'".into() });
        }
        let mut edges = Vec::new();
        for (ln, l) in lines {
            let e = parse(ln, l)?;
            if e.len() != 2 || e[0] >= h[0] || e[1] >= h[1] {
                return Err(ExpanderError::Parse { line: ln + 1, msg: format!("bad edge '{l}'") });
            }
            edges.push((e[0], e[1]));
        }
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != edges.len() {
            return Err(ExpanderError::Parse { line: 0, msg: "duplicate edge".into() });
        }
        Ok(Self::from_edges(h[0], h[1], &edges))
    }
}

/// Random simple `(ΔL, ΔR)`-biregular graph from the configuration model,
/// resampled until simple.
pub fn gen_biregular(
    n_left: usize,
    n_right: usize,
    deg_left: usize,
    deg_right: usize,
    seed: u64,
) -> Result<BipartiteGraph, ExpanderError> {
    if n_left * deg_left != n_right * deg_right {
        return Err(ExpanderError::Infeasible { n_left, n_right, deg_left, deg_right });
    }
    if deg_left > n_right {
        return Err(ExpanderError::DegreeTooLarge { deg: deg_left, side: n_right });
    }
    if deg_right > n_left {
        return Err(ExpanderError::DegreeTooLarge { deg: deg_right, side: n_left });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n_right).flat_map(|r| std::iter::repeat(r).take(deg_right)).collect();
    'attempt: for _ in 0..RESAMPLE_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(stubs.len());
        for l in 0..n_left {
            let chunk = &stubs[l * deg_left..(l + 1) * deg_left];
            for (k, &r) in chunk.iter().enumerate() {
                if chunk[..k].contains(&r) {
                    continue 'attempt;
                }
                edges.push((l, r));
            }
        }
        return Ok(BipartiteGraph::from_edges(n_left, n_right, &edges));
    }
    Err(ExpanderError::ResampleBudget(RESAMPLE_ATTEMPTS))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckMode {
    /// Enumerate every small set; fails when more than `budget` sets are needed.
    Exhaustive { budget: u64 },
    /// Draw `samples` random sets per side and size. Not a certificate.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub side: Side,
    pub set: Vec<usize>,
    pub neighbors: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub mu: f64,
    pub eps: f64,
    pub exhaustive: bool,
    /// Largest set size checked on the left and right sides.
    pub max_set: (usize, usize),
    pub checked_count: u64,
    pub violation_count: u64,
    /// Up to the first 64 violations, in enumeration order.
    pub violations: Vec<Violation>,
}

impl ExpansionReport {
    /// True only for an exhaustive run with no violations.
    pub fn certified(&self) -> bool {
        self.exhaustive && self.violation_count == 0
    }
}

const KEEP_VIOLATIONS: usize = 64;

fn binom_sum(n: usize, k: usize) -> u64 {
    let mut total: u64 = 0;
    let mut c: u64 = 1;
    for j in 0..=k.min(n) {
        if j > 0 {
            c = c.saturating_mul((n - j + 1) as u64) / j as u64;
        }
        total = total.saturating_add(c);
    }
    total
}

fn max_set_size(mu: f64, n: usize) -> usize {
    ((mu * n as f64) + 1e-9).floor() as usize
}

/// `|N| ≥ (1-ε)Δ|S|`, with a small tolerance against rounding.
fn expands(nb: usize, deg: usize, size: usize, eps: f64) -> bool {
    nb as f64 + 1e-9 >= (1.0 - eps) * (deg * size) as f64
}

struct SideScan<'a> {
    g: &'a BipartiteGraph,
    side: Side,
    eps: f64,
    max: usize,
}

impl SideScan<'_> {
    /// Enumerates every set whose least element is `first`.
    fn run_from(&self, first: usize) -> (u64, u64, Vec<Violation>) {
        let mut counts = vec![0u32; self.g.side_len(self.side.other())];
        let mut set = vec![first];
        let mut nb = 0usize;
        for &u in self.g.adj(self.side, first) {
            counts[u] += 1;
            nb += 1;
        }
        let mut out = (0u64, 0u64, Vec::new());
        self.visit(&mut set, &mut counts, nb, &mut out);
        out
    }

    fn visit(&self, set: &mut Vec<usize>, counts: &mut [u32], nb: usize, out: &mut (u64, u64, Vec<Violation>)) {
        out.0 += 1;
        let deg = self.g.max_degree(self.side);
        if !expands(nb, deg, set.len(), self.eps) {
            out.1 += 1;
            if out.2.len() < KEEP_VIOLATIONS {
                out.2.push(Violation { side: self.side, set: set.clone(), neighbors: nb });
            }
        }
        if set.len() == self.max {
            return;
        }
        let last = *set.last().unwrap();
        for v in last + 1..self.g.side_len(self.side) {
            let mut nb2 = nb;
            for &u in self.g.adj(self.side, v) {
                if counts[u] == 0 {
                    nb2 += 1;
                }
                counts[u] += 1;
            }
            set.push(v);
            self.visit(set, counts, nb2, out);
            set.pop();
            for &u in self.g.adj(self.side, v) {
                counts[u] -= 1;
            }
        }
    }
}

/// Checks `(µ, ε)`-lossless expansion on both sides: every `S` with
/// `|S| ≤ µ|side|` must have `|N(S)| ≥ (1-ε)Δ|S|`, where Δ is the side's
/// maximum degree.
pub fn check_lossless(g: &BipartiteGraph, mu: f64, eps: f64, mode: CheckMode) -> Result<ExpansionReport, ExpanderError> {
    let sizes = (max_set_size(mu, g.n_left()), max_set_size(mu, g.n_right()));
    let mut report = ExpansionReport {
        mu,
        eps,
        exhaustive: matches!(mode, CheckMode::Exhaustive { .. }),
        max_set: sizes,
        checked_count: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    match mode {
        CheckMode::Exhaustive { budget } => {
            let needed = binom_sum(g.n_left(), sizes.0).saturating_add(binom_sum(g.n_right(), sizes.1));
            if needed > budget {
                return Err(ExpanderError::EnumerationBudget { needed, budget });
            }
            for (side, max) in [(Side::Left, sizes.0), (Side::Right, sizes.1)] {
                if max == 0 {
                    continue;
                }
                let scan = SideScan { g, side, eps, max };
                let parts: Vec<_> = (0..g.side_len(side)).into_par_iter().map(|v| scan.run_from(v)).collect();
                for (c, nv, vs) in parts {
                    report.checked_count += c;
                    report.violation_count += nv;
                    for v in vs {
                        if report.violations.len() < KEEP_VIOLATIONS {
                            report.violations.push(v);
                        }
                    }
                }
            }
        }
        CheckMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (side, max) in [(Side::Left, sizes.0), (Side::Right, sizes.1)] {
                let n = g.side_len(side);
                let deg = g.max_degree(side);
                for size in 1..=max.min(n) {
                    for _ in 0..samples {
                        let mut set = rand::seq::index::sample(&mut rng, n, size).into_vec();
                        set.sort_unstable();
                        let nb = g.neighborhood(side, &set).len();
                        report.checked_count += 1;
                        if !expands(nb, deg, size, eps) {
                            report.violation_count += 1;
                            if report.violations.len() < KEEP_VIOLATIONS {
                                report.violations.push(Violation { side, set, neighbors: nb });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Vertex of `set` with the most unique neighbors (neighbors of no other
/// member), and that count. Ties go to the lowest index.
///
/// # Panics
/// If `set` is empty.
pub fn unique_neighbor_vertex(g: &BipartiteGraph, side: Side, set: &[usize]) -> (usize, usize) {
    assert!(!set.is_empty(), "unique_neighbor_vertex needs a non-empty set");
    let mut counts = vec![0u32; g.side_len(side.other())];
    for &v in set {
        for &u in g.adj(side, v) {
            counts[u] += 1;
        }
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let mut best = (sorted[0], 0usize);
    let mut first = true;
    for &v in &sorted {
        let c = g.adj(side, v).iter().filter(|&&u| counts[u] == 1).count();
        if first || c > best.1 {
            best = (v, c);
            first = false;
        }
    }
    best
}

/// A maximal extendable column set of `ker(H)`: the pivot columns of the
/// reduced kernel basis. Its size is `dim ker(H)`.
pub fn information_set(h: &BitMatrix) -> Vec<usize> {
    let k = h.kernel_basis();
    if k.is_empty() {
        return Vec::new();
    }
    Rref::new(&BitMatrix::from_rows(h.cols(), &k)).pivots
}

/// Whether every pattern on `set` extends to a codeword of `ker(H)`.
pub fn is_extendable(h: &BitMatrix, set: &[usize]) -> bool {
    if set.is_empty() {
        return true;
    }
    let k = h.kernel_basis();
    let restricted: Vec<BitVector> = k.iter().map(|v| v.select(set)).collect();
    BitMatrix::from_rows(set.len(), &restricted).rank() == set.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyReport {
    /// Color class of every right vertex.
    pub colors: Vec<usize>,
    pub class_count: usize,
    pub color_bound: usize,
    pub info_set: Vec<usize>,
    pub chosen_class: usize,
    /// `|S| / |V_R|`.
    pub ratio: f64,
    /// `1 / (2(ΔLΔR + 1))`.
    pub target: f64,
}

/// Greedy distance-2 coloring of `V_R`, intersected with an information set
/// of `ker(H_G)`; returns the largest intersection.
pub fn build_extendable_family(g: &BipartiteGraph) -> Result<(Vec<usize>, FamilyReport), ExpanderError> {
    let (dl, dr) = g.biregular_degrees().ok_or(ExpanderError::NotBiregular)?;
    let bound = dl * dr + 1;
    let n = g.n_right();
    let mut colors = vec![usize::MAX; n];
    let mut class_count = 0;
    for u in 0..n {
        let mut used = vec![false; bound + 1];
        for &l in g.right_adj(u) {
            for &u2 in g.left_adj(l) {
                if u2 != u && colors[u2] != usize::MAX && colors[u2] <= bound {
                    used[colors[u2]] = true;
                }
            }
        }
        let c = (0..=bound).find(|&c| !used[c]).unwrap();
        if c >= bound {
            return Err(ExpanderError::ColoringOverflow { used: c + 1, bound });
        }
        colors[u] = c;
        class_count = class_count.max(c + 1);
    }
    let info = information_set(&g.h_matrix());
    let mut in_info = vec![false; n];
    for &u in &info {
        in_info[u] = true;
    }
    let (chosen, set) = (0..class_count)
        .map(|c| (c, (0..n).filter(|&u| colors[u] == c && in_info[u]).collect::<Vec<_>>()))
        .fold((0, Vec::new()), |best, cand| if cand.1.len() > best.1.len() { cand } else { best });
    debug_assert!(is_extendable(&g.h_matrix(), &set));
    debug_assert!((0..g.n_left()).all(|l| g.left_adj(l).iter().filter(|u| set.contains(u)).count() <= 1));
    let report = FamilyReport {
        colors,
        class_count,
        color_bound: bound,
        info_set: info,
        chosen_class: chosen,
        ratio: if n == 0 { 0.0 } else { set.len() as f64 / n as f64 },
        target: 1.0 / (2.0 * bound as f64),
    };
    Ok((set, report))
}

/// Uniformly random subset of `0..n` of the given size, sorted.
pub fn random_subset<R: Rng>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    let mut s = rand::seq::index::sample(rng, n, size).into_vec();
    s.sort_unstable();
    s
}
