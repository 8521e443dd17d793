//! Based cochain complexes with labeled cells: graph complexes, tensor
//! products, duals, factor restriction, connectivity graphs, cohomology and
//! brute-force distances.
//!
//! A cell label is a tuple with one entry per tensor factor. Each entry names
//! a vertex of that factor's graph. Dualizing reverses levels but keeps labels.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::expander::{self, BipartiteGraph, Side};
use crate::f2la::{BitMatrix, BitVector, Span};

#[derive(Debug, Error, PartialEq)]
pub enum ComplexError {
    #[error("removed set is not extendable; dual codeword supported inside it: {witness:?}")]
    NotExtendable { witness: Vec<usize> },
    #[error("level {level} outside 0..={dim}")]
    BadLevel { level: usize, dim: usize },
    #[error("factor index {0} out of range")]
    BadFactor(usize),
}

/// One entry of a cell label: a vertex of a factor graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell1 {
    pub side: Side,
    pub idx: u32,
}

impl Cell1 {
    pub fn left(idx: usize) -> Self {
        Cell1 { side: Side::Left, idx: idx as u32 }
    }

    pub fn right(idx: usize) -> Self {
        Cell1 { side: Side::Right, idx: idx as u32 }
    }
}

impl fmt::Debug for Cell1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.side == Side::Left { 'L' } else { 'R' };
        write!(f, "{s}{}", self.idx)
    }
}

pub type Label = Vec<Cell1>;

pub fn label_string(l: &[Cell1]) -> String {
    l.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(".")
}

/// A cochain complex `C^0 → C^1 → … → C^r` with labeled bases.
///
/// `delta[i]` is the `|C^{i+1}| × |C^i|` matrix of `δ_i`. Sparse adjacency is
/// kept alongside for local work.
#[derive(Clone)]
pub struct CochainComplex {
    labels: Vec<Vec<Label>>,
    index: Vec<HashMap<Label, usize>>,
    delta: Vec<BitMatrix>,
    up: Vec<Vec<Vec<u32>>>,
    down: Vec<Vec<Vec<u32>>>,
}

impl fmt::Debug for CochainComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CochainComplex(dims {:?})", self.dims())
    }
}

impl CochainComplex {
    /// Builds from labels and sparse coboundary supports: `up[i][c]` is the
    /// support of `δ_i(1_c)`.
    pub fn from_parts(labels: Vec<Vec<Label>>, up: Vec<Vec<Vec<u32>>>) -> Self {
        let r = labels.len() - 1;
        assert_eq!(up.len(), r, "need one coboundary per level below the top");
        let index = labels.iter().map(|ls| ls.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect()).collect();
        let mut delta = Vec::with_capacity(r);
        let mut down: Vec<Vec<Vec<u32>>> = labels.iter().map(|ls| vec![Vec::new(); ls.len()]).collect();
        for i in 0..r {
            assert_eq!(up[i].len(), labels[i].len());
            let mut m = BitMatrix::zeros(labels[i + 1].len(), labels[i].len());
            for (c, adj) in up[i].iter().enumerate() {
                for &c2 in adj {
                    m.toggle(c2 as usize, c);
                    down[i + 1][c2 as usize].push(c as u32);
                }
            }
            delta.push(m);
        }
        for lv in down.iter_mut() {
            for adj in lv.iter_mut() {
                adj.sort_unstable();
            }
        }
        let mut up = up;
        for lv in up.iter_mut() {
            for adj in lv.iter_mut() {
                adj.sort_unstable();
            }
        }
        CochainComplex { labels, index, delta, up, down }
    }

    /// Builds from dense coboundary matrices.
    pub fn from_matrices(labels: Vec<Vec<Label>>, delta: Vec<BitMatrix>) -> Self {
        let up = delta
            .iter()
            .map(|m| {
                let t = m.transpose();
                (0..t.rows()).map(|c| t.row_iter_ones(c).map(|x| x as u32).collect()).collect()
            })
            .collect();
        Self::from_parts(labels, up)
    }

    pub fn dim(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }

    pub fn size(&self, level: usize) -> usize {
        self.labels[level].len()
    }

    pub fn labels(&self, level: usize) -> &[Label] {
        &self.labels[level]
    }

    pub fn label(&self, level: usize, cell: usize) -> &Label {
        &self.labels[level][cell]
    }

    pub fn index_of(&self, level: usize, label: &[Cell1]) -> Option<usize> {
        self.index[level].get(label).copied()
    }

    /// Matrix of `δ_i : C^i → C^{i+1}`.
    pub fn delta(&self, i: usize) -> &BitMatrix {
        &self.delta[i]
    }

    /// Support of `δ_i(1_c)` for `c ∈ C^i`.
    pub fn up_adj(&self, level: usize, c: usize) -> &[u32] {
        if level >= self.dim() {
            return &[];
        }
        &self.up[level][c]
    }

    /// Cells `c' ∈ C^{i-1}` with `c ∈ supp δ(1_{c'})`.
    pub fn down_adj(&self, level: usize, c: usize) -> &[u32] {
        if level == 0 {
            return &[];
        }
        &self.down[level][c]
    }

    /// `δ_i(x)` for `x ∈ C^i`; zero vector of length 0 when `i = r`.
    pub fn coboundary(&self, i: usize, x: &BitVector) -> BitVector {
        if i >= self.dim() {
            return BitVector::zeros(0);
        }
        let mut out = BitVector::zeros(self.size(i + 1));
        for c in x.iter_ones() {
            for &c2 in &self.up[i][c] {
                out.toggle(c2 as usize);
            }
        }
        out
    }

    /// `∂_i(y) = δ_{i-1}ᵀ(y)` for `y ∈ C^i`.
    pub fn boundary(&self, i: usize, y: &BitVector) -> BitVector {
        if i == 0 {
            return BitVector::zeros(0);
        }
        let mut out = BitVector::zeros(self.size(i - 1));
        for c in y.iter_ones() {
            for &c2 in &self.down[i][c] {
                out.toggle(c2 as usize);
            }
        }
        out
    }

    /// Rank of `δ_i`, zero outside `0..r`.
    pub fn delta_rank(&self, i: isize) -> usize {
        if i < 0 || i as usize >= self.dim() {
            0
        } else {
            self.delta[i as usize].rank()
        }
    }

    /// Whether `δ_{i+1} δ_i = 0` at every level.
    pub fn is_complex(&self) -> bool {
        (0..self.dim().saturating_sub(1)).all(|i| self.delta[i + 1].mul(&self.delta[i]).is_zero())
    }

    /// Cells at `target` reachable upward from `c` at `level` (inclusive when equal).
    pub fn up_closure(&self, level: usize, c: usize, target: usize) -> Vec<usize> {
        assert!(target >= level);
        let mut cur = vec![c];
        for l in level..target {
            let mut next: Vec<usize> = cur.iter().flat_map(|&x| self.up[l][x].iter().map(|&y| y as usize)).collect();
            next.sort_unstable();
            next.dedup();
            cur = next;
        }
        cur
    }

    /// Cells at `target` reachable downward from `c` at `level`.
    pub fn down_closure(&self, level: usize, c: usize, target: usize) -> Vec<usize> {
        assert!(target <= level);
        let mut cur = vec![c];
        for l in (target + 1..=level).rev() {
            let mut next: Vec<usize> = cur.iter().flat_map(|&x| self.down[l][x].iter().map(|&y| y as usize)).collect();
            next.sort_unstable();
            next.dedup();
            cur = next;
        }
        cur
    }

    /// All level-`i` cells above the level-0 cell `c0`.
    pub fn up_set(&self, c0: usize, i: usize) -> Vec<usize> {
        self.up_closure(0, c0, i)
    }

    /// All level-`i` cells below the level-`r` cell `cr`.
    pub fn down_set(&self, cr: usize, i: usize) -> Vec<usize> {
        self.down_closure(self.dim(), cr, i)
    }

    /// Number of cells comparable to `c` (including `c`).
    pub fn comparable_count(&self, level: usize, c: usize) -> usize {
        let above: usize = (level + 1..=self.dim()).map(|t| self.up_closure(level, c, t).len()).sum();
        let below: usize = (0..level).map(|t| self.down_closure(level, c, t).len()).sum();
        above + below + 1
    }

    /// Locality: the largest number of cells comparable to a single cell,
    /// counting the cell itself.
    pub fn locality(&self) -> usize {
        (0..=self.dim())
            .into_par_iter()
            .map(|l| (0..self.size(l)).map(|c| self.comparable_count(l, c)).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn cohomology_dim(&self, i: usize) -> usize {
        let ker = self.size(i) - self.delta_rank(i as isize);
        ker - self.delta_rank(i as isize - 1)
    }

    /// Basis of `B^i = im δ_{i-1}`.
    pub fn coboundary_basis(&self, i: usize) -> Vec<BitVector> {
        if i == 0 {
            Vec::new()
        } else {
            self.delta[i - 1].image_basis()
        }
    }

    /// Basis of `B_i = im ∂_{i+1}` inside `C^i`.
    pub fn boundary_basis(&self, i: usize) -> Vec<BitVector> {
        if i >= self.dim() {
            Vec::new()
        } else {
            self.delta[i].transpose().image_basis()
        }
    }

    pub fn dual(&self) -> CochainComplex {
        let r = self.dim();
        let labels: Vec<Vec<Label>> = (0..=r).map(|i| self.labels[r - i].clone()).collect();
        // dual δ_i : C^{r-i} → C^{r-i-1} is the transpose of δ_{r-i-1}
        let up = (0..r).map(|i| self.down[r - i].clone()).collect();
        CochainComplex::from_parts(labels, up)
    }

    /// Graph on the cells of the chosen levels, joining two cells when some
    /// level-0 cell lies below both or some level-`r` cell lies above both.
    pub fn connectivity_graph(&self, levels: &[usize]) -> ConnectivityGraph {
        let r = self.dim();
        let mut levels = levels.to_vec();
        levels.sort_unstable();
        levels.dedup();
        let mut offset = vec![usize::MAX; r + 1];
        let mut vertices = Vec::new();
        for &l in &levels {
            offset[l] = vertices.len();
            vertices.extend((0..self.size(l)).map(|c| (l, c)));
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); vertices.len()];
        let mut add_clique = |members: &[usize]| {
            for &a in members {
                for &b in members {
                    if a != b {
                        adj[a].push(b as u32);
                    }
                }
            }
        };
        let off = &offset;
        for c0 in 0..self.size(0) {
            let members: Vec<usize> =
                levels.iter().flat_map(|&l| self.up_closure(0, c0, l).into_iter().map(move |c| off[l] + c)).collect();
            add_clique(&members);
        }
        for cr in 0..self.size(r) {
            let members: Vec<usize> =
                levels.iter().flat_map(|&l| self.down_closure(r, cr, l).into_iter().map(move |c| off[l] + c)).collect();
            add_clique(&members);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        ConnectivityGraph { levels, offset, vertices, adj }
    }

    /// Minimum weight of a cocycle outside `B^i` (cosystolic) or a cycle
    /// outside `B_i` (systolic), searched exhaustively within `budget` nodes.
    pub fn min_nontrivial_weight(&self, i: usize, kind: DistanceKind, budget: u64) -> Distance {
        match kind {
            DistanceKind::Cosystolic => cosystolic_distance(self, i, budget),
            DistanceKind::Systolic => cosystolic_distance(&self.dual(), self.dim() - i, budget),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("complex r={}\n", self.dim());
        for (l, ls) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "level {l} {}", ls.len());
            for lab in ls {
                let _ = writeln!(s, "  {}", label_string(lab));
            }
        }
        for (i, lv) in self.up.iter().enumerate() {
            let _ = writeln!(s, "delta {i}");
            for (c, adj) in lv.iter().enumerate() {
                let _ = writeln!(s, "  {c}: {}", adj.iter().map(u32::to_string).collect::<Vec<_>>().join(" "));
            }
        }
        s
    }
}

/// Level-I connectivity graph. Vertex ids run over the chosen levels in order.
#[derive(Clone, Debug)]
pub struct ConnectivityGraph {
    pub levels: Vec<usize>,
    offset: Vec<usize>,
    pub vertices: Vec<(usize, usize)>,
    pub adj: Vec<Vec<u32>>,
}

impl ConnectivityGraph {
    pub fn vertex(&self, level: usize, cell: usize) -> usize {
        assert!(self.offset[level] != usize::MAX, "level {level} not in graph");
        self.offset[level] + cell
    }

    pub fn contains_level(&self, level: usize) -> bool {
        self.offset.get(level).is_some_and(|&o| o != usize::MAX)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Connected components of the subgraph induced by `set`.
    pub fn components(&self, set: &[usize]) -> Vec<Vec<usize>> {
        let mut inside = vec![false; self.len()];
        for &v in set {
            inside[v] = true;
        }
        let mut seen = vec![false; self.len()];
        let mut comps = Vec::new();
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &s in &sorted {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &u in &self.adj[v] {
                    let u = u as usize;
                    if inside[u] && !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        q.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    Cosystolic,
    Systolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Exact(usize),
    /// Search ran out of budget; every weight below this was excluded.
    LowerBound(usize),
    /// `H^i = 0`.
    Infinite,
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(d) => write!(f, "{d}"),
            Distance::LowerBound(d) => write!(f, ">={d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

struct DistSearch<'a> {
    c: &'a CochainComplex,
    i: usize,
    trivial: Span,
    max_deg: usize,
    nodes: AtomicU64,
    budget: u64,
    found: AtomicBool,
}

enum Outcome {
    Found,
    NotFound,
    OutOfBudget,
}

impl DistSearch<'_> {
    /// Depth-first extension of `x`, always repairing the lowest unsatisfied
    /// check. A minimal nontrivial cocycle has connected support, so starting
    /// from its least qubit this reaches it.
    fn extend(&self, x: &mut Vec<usize>, in_x: &mut [bool], syn: &mut BitVector, t: usize, q0: usize) -> Outcome {
        if self.found.load(Ordering::Relaxed) {
            return Outcome::Found;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Outcome::OutOfBudget;
        }
        let unsat = syn.weight();
        if unsat == 0 {
            let v = BitVector::from_indices(self.c.size(self.i), x.iter().copied());
            return if self.trivial.contains(&v) { Outcome::NotFound } else { Outcome::Found };
        }
        if x.len() == t || (t - x.len()) * self.max_deg < unsat {
            return Outcome::NotFound;
        }
        let rho = syn.first_one().unwrap();
        let mut out = Outcome::NotFound;
        for &q in self.c.down_adj(self.i + 1, rho) {
            let q = q as usize;
            if q <= q0 || in_x[q] {
                continue;
            }
            x.push(q);
            in_x[q] = true;
            for &b in self.c.up_adj(self.i, q) {
                syn.toggle(b as usize);
            }
            let res = self.extend(x, in_x, syn, t, q0);
            for &b in self.c.up_adj(self.i, q) {
                syn.toggle(b as usize);
            }
            in_x[q] = false;
            x.pop();
            match res {
                Outcome::Found => return Outcome::Found,
                Outcome::OutOfBudget => out = Outcome::OutOfBudget,
                Outcome::NotFound => {}
            }
        }
        out
    }
}

fn cosystolic_distance(c: &CochainComplex, i: usize, budget: u64) -> Distance {
    if c.cohomology_dim(i) == 0 {
        return Distance::Infinite;
    }
    let n = c.size(i);
    let search = DistSearch {
        c,
        i,
        trivial: Span::new(n, &c.coboundary_basis(i)),
        max_deg: (0..n).map(|q| c.up_adj(i, q).len()).max().unwrap_or(0).max(1),
        nodes: AtomicU64::new(0),
        budget,
        found: AtomicBool::new(false),
    };
    let m = if i < c.dim() { c.size(i + 1) } else { 0 };
    for t in 1..=n {
        let results: Vec<Outcome> = (0..n)
            .into_par_iter()
            .map(|q0| {
                let mut x = vec![q0];
                let mut in_x = vec![false; n];
                in_x[q0] = true;
                let mut syn = BitVector::zeros(m);
                for &b in c.up_adj(i, q0) {
                    syn.toggle(b as usize);
                }
                search.extend(&mut x, &mut in_x, &mut syn, t, q0)
            })
            .collect();
        if results.iter().any(|o| matches!(o, Outcome::Found)) {
            return Distance::Exact(t);
        }
        if results.iter().any(|o| matches!(o, Outcome::OutOfBudget)) {
            return Distance::LowerBound(t);
        }
    }
    unreachable!("a nontrivial class has a representative of weight at most n")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorKind {
    /// `F2^{V_L} → F2^{V_R}` with `δ = H_Gᵀ`.
    Cochain,
    /// The dual: `F2^{V_R} → F2^{V_L}` with `δ = H_G`.
    Chain,
}

/// One tensor factor: a graph complex, possibly dualized and with right
/// vertices removed, plus information sets for both sides.
#[derive(Clone, Debug)]
pub struct Factor {
    pub graph: Arc<BipartiteGraph>,
    pub kind: FactorKind,
    /// Removed right vertices, sorted.
    pub removed: Vec<usize>,
    /// Information set of `ker(H_Gᵀ)` on `V_L`.
    pub info_left: Vec<usize>,
    /// Information set of `ker(H_G)` on the surviving `V_R`.
    pub info_right: Vec<usize>,
    /// Message set `L ⊆ info_right` addressed by slab gadgets.
    pub message: Vec<usize>,
}

impl Factor {
    pub fn new(graph: Arc<BipartiteGraph>, kind: FactorKind) -> Self {
        let h = graph.h_matrix();
        let info_right = expander::information_set(&h);
        let info_left = expander::information_set(&h.transpose());
        Factor { graph, kind, removed: Vec::new(), info_left, info_right, message: Vec::new() }
    }

    pub fn cochain(graph: Arc<BipartiteGraph>) -> Self {
        Self::new(graph, FactorKind::Cochain)
    }

    pub fn chain(graph: Arc<BipartiteGraph>) -> Self {
        Self::new(graph, FactorKind::Chain)
    }

    /// Factor whose right information set contains `l` (extended greedily in
    /// index order), with `l` recorded as the message set.
    pub fn with_message(graph: Arc<BipartiteGraph>, kind: FactorKind, l: &[usize]) -> Result<Self, ComplexError> {
        let h = graph.h_matrix();
        if let Some(w) = dual_codeword_inside(&h, l) {
            return Err(ComplexError::NotExtendable { witness: w });
        }
        let target = expander::information_set(&h).len();
        let mut info: Vec<usize> = l.to_vec();
        for u in 0..graph.n_right() {
            if info.len() == target {
                break;
            }
            if !info.contains(&u) {
                info.push(u);
                if !expander::is_extendable(&h, &info) {
                    info.pop();
                }
            }
        }
        info.sort_unstable();
        let mut f = Self::new(graph, kind);
        f.info_right = info;
        f.message = l.to_vec();
        Ok(f)
    }

    pub fn dual(&self) -> Self {
        let kind = match self.kind {
            FactorKind::Cochain => FactorKind::Chain,
            FactorKind::Chain => FactorKind::Cochain,
        };
        Factor { kind, ..self.clone() }
    }

    /// Level (0 or 1) of the cells on `side`.
    pub fn level_of(&self, side: Side) -> usize {
        match (self.kind, side) {
            (FactorKind::Cochain, Side::Left) | (FactorKind::Chain, Side::Right) => 0,
            _ => 1,
        }
    }

    pub fn side_at(&self, level: usize) -> Side {
        match (self.kind, level) {
            (FactorKind::Cochain, 0) | (FactorKind::Chain, 1) => Side::Left,
            _ => Side::Right,
        }
    }

    pub fn is_removed(&self, right: usize) -> bool {
        self.removed.binary_search(&right).is_ok()
    }

    /// Surviving right vertices in order.
    pub fn right_cells(&self) -> Vec<usize> {
        (0..self.graph.n_right()).filter(|&u| !self.is_removed(u)).collect()
    }

    /// Information set at factor level `level`, as labels.
    pub fn info_set(&self, level: usize) -> Vec<Cell1> {
        match self.side_at(level) {
            Side::Left => self.info_left.iter().map(|&v| Cell1::left(v)).collect(),
            Side::Right => self.info_right.iter().map(|&u| Cell1::right(u)).collect(),
        }
    }

    /// The 1-dimensional complex of this factor.
    pub fn complex(&self) -> CochainComplex {
        let g = &self.graph;
        let rights = self.right_cells();
        let mut pos = vec![u32::MAX; g.n_right()];
        for (k, &u) in rights.iter().enumerate() {
            pos[u] = k as u32;
        }
        let left_labels: Vec<Label> = (0..g.n_left()).map(|v| vec![Cell1::left(v)]).collect();
        let right_labels: Vec<Label> = rights.iter().map(|&u| vec![Cell1::right(u)]).collect();
        match self.kind {
            FactorKind::Cochain => {
                let up = (0..g.n_left())
                    .map(|v| g.left_adj(v).iter().filter(|&&u| pos[u] != u32::MAX).map(|&u| pos[u]).collect())
                    .collect();
                CochainComplex::from_parts(vec![left_labels, right_labels], vec![up])
            }
            FactorKind::Chain => {
                let up = rights.iter().map(|&u| g.right_adj(u).iter().map(|&v| v as u32).collect()).collect();
                CochainComplex::from_parts(vec![right_labels, left_labels], vec![up])
            }
        }
    }

    /// Restriction removing `l ⊆ V_R`, after checking that `l` is extendable
    /// for `ker(H_G)`.
    pub fn restrict(&self, l: &[usize]) -> Result<Factor, ComplexError> {
        let h = self.graph.h_matrix();
        if let Some(w) = dual_codeword_inside(&h, l) {
            return Err(ComplexError::NotExtendable { witness: w });
        }
        let mut removed = self.removed.clone();
        removed.extend_from_slice(l);
        removed.sort_unstable();
        removed.dedup();
        let info_right = self.info_right.iter().copied().filter(|u| !l.contains(u)).collect();
        Ok(Factor { removed, info_right, message: Vec::new(), ..self.clone() })
    }
}

/// A nonzero element of the row space of `h` supported inside `set`, if any.
/// Such a vector exists exactly when `set` is not extendable for `ker(h)`.
pub fn dual_codeword_inside(h: &BitMatrix, set: &[usize]) -> Option<Vec<usize>> {
    let outside: Vec<usize> = (0..h.cols()).filter(|c| !set.contains(c)).collect();
    let ht_out = h.select_cols(&outside).transpose();
    for z in ht_out.kernel_basis() {
        let y = h.tmul_vec(&z);
        if !y.is_zero() {
            return Some(y.support());
        }
    }
    None
}

/// `C^i = ⊔_j A^j × B^{i-j}` with `δ = δ^A ⊗ I + I ⊗ δ^B`, ordered
/// lexicographically by `(j, a, b)`.
pub fn tensor(a: &CochainComplex, b: &CochainComplex) -> CochainComplex {
    let (ra, rb) = (a.dim(), b.dim());
    let r = ra + rb;
    // block offsets: start[i][j] = offset of block A^j × B^{i-j} within C^i
    let mut labels: Vec<Vec<Label>> = vec![Vec::new(); r + 1];
    let mut start = vec![vec![usize::MAX; ra + 1]; r + 1];
    for (i, lv) in labels.iter_mut().enumerate() {
        for j in 0..=ra {
            if i < j || i - j > rb {
                continue;
            }
            start[i][j] = lv.len();
            for la in a.labels(j) {
                for lb in b.labels(i - j) {
                    let mut l = la.clone();
                    l.extend_from_slice(lb);
                    lv.push(l);
                }
            }
        }
    }
    let mut up: Vec<Vec<Vec<u32>>> = (0..r).map(|i| vec![Vec::new(); labels[i].len()]).collect();
    for (i, lv) in up.iter_mut().enumerate() {
        for j in 0..=ra {
            if start[i][j] == usize::MAX {
                continue;
            }
            let nb = b.size(i - j);
            for ai in 0..a.size(j) {
                for bi in 0..nb {
                    let c = start[i][j] + ai * nb + bi;
                    let adj = &mut lv[c];
                    if j < ra {
                        let nb2 = b.size(i - j);
                        for &a2 in a.up_adj(j, ai) {
                            adj.push((start[i + 1][j + 1] + a2 as usize * nb2 + bi) as u32);
                        }
                    }
                    if i - j < rb {
                        let nb2 = b.size(i - j + 1);
                        for &b2 in b.up_adj(i - j, bi) {
                            adj.push((start[i + 1][j] + ai * nb2 + b2 as usize) as u32);
                        }
                    }
                }
            }
        }
    }
    CochainComplex::from_parts(labels, up)
}

/// The 1-dimensional complex `F2^{V_L} → F2^{V_R}` of a graph.
pub fn complex_from_graph(g: &BipartiteGraph) -> CochainComplex {
    Factor::cochain(Arc::new(g.clone())).complex()
}

/// Replaces `B` by `B_L̄`, dropping the level-1 cells in `l`, and rebuilds
/// `A ⊗ B_L̄`.
pub fn restrict_last_factor(a: &CochainComplex, b: &Factor, l: &[usize]) -> Result<CochainComplex, ComplexError> {
    let bl = b.restrict(l)?;
    Ok(tensor(a, &bl.complex()))
}

/// A tensor product of graph factors, keeping the factor data needed for
/// encodings and slab addressing.
#[derive(Clone, Debug)]
pub struct ProductComplex {
    pub factors: Vec<Factor>,
    pub complex: Arc<CochainComplex>,
}

impl ProductComplex {
    pub fn new(factors: Vec<Factor>) -> Self {
        assert!(!factors.is_empty());
        let mut c = factors[0].complex();
        for f in &factors[1..] {
            c = tensor(&c, &f.complex());
        }
        ProductComplex { factors, complex: Arc::new(c) }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn dual(&self) -> ProductComplex {
        ProductComplex { factors: self.factors.iter().map(Factor::dual).collect(), complex: Arc::new(self.complex.dual()) }
    }

    /// Product with factor `h` restricted by removing `l`.
    pub fn restrict(&self, h: usize, l: &[usize]) -> Result<ProductComplex, ComplexError> {
        if h >= self.dim() {
            return Err(ComplexError::BadFactor(h));
        }
        let mut fs = self.factors.clone();
        fs[h] = fs[h].restrict(l)?;
        Ok(ProductComplex::new(fs))
    }

    /// Product of all factors except `h`.
    pub fn without(&self, h: usize) -> ProductComplex {
        let fs: Vec<Factor> = self.factors.iter().enumerate().filter(|(k, _)| *k != h).map(|(_, f)| f.clone()).collect();
        ProductComplex::new(fs)
    }

    /// Product with factor `h` replaced.
    pub fn with_factor(&self, h: usize, f: Factor) -> ProductComplex {
        let mut fs = self.factors.clone();
        fs[h] = f;
        ProductComplex::new(fs)
    }

    /// Per-factor levels of a cell label.
    pub fn split_of(&self, label: &[Cell1]) -> Vec<usize> {
        label.iter().zip(&self.factors).map(|(c, f)| f.level_of(c.side)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::gen_biregular;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::{Rng, SeedableRng};

    fn single_edge() -> CochainComplex {
        complex_from_graph(&BipartiteGraph::complete(1, 1))
    }

    fn cycle(n: usize) -> CochainComplex {
        complex_from_graph(&BipartiteGraph::cycle(n))
    }

    fn toric(m: usize) -> CochainComplex {
        let g = Arc::new(BipartiteGraph::cycle(m));
        ProductComplex::new(vec![Factor::cochain(g.clone()), Factor::chain(g)]).complex.as_ref().clone()
    }

    #[test]
    fn graph_complex_examples() {
        let m = BipartiteGraph::from_edges(3, 3, &[(0, 2), (1, 0), (2, 1)]);
        let c = complex_from_graph(&m);
        assert_eq!(c.delta(0).col_weights(), vec![1, 1, 1]);
        assert_eq!((0..3).map(|i| c.delta(0).row_weight(i)).collect::<Vec<_>>(), vec![1, 1, 1]);
        let c4 = cycle(4);
        assert_eq!(c4.delta(0).rows(), 4);
        assert!((0..4).all(|i| c4.delta(0).row_weight(i) == 2));
        let g = gen_biregular(12, 6, 3, 6, 7).unwrap();
        let c = complex_from_graph(&g);
        assert!(c.delta(0).col_weights().iter().all(|&w| w == 3));
        assert!((0..6).all(|i| c.delta(0).row_weight(i) == 6));
    }

    #[test]
    fn dual_examples() {
        let c = cycle(5);
        let d = c.dual();
        assert_eq!(d.labels(0), c.labels(1));
        assert_eq!(d.delta(0), &c.delta(0).transpose());
        let dd = d.dual();
        assert_eq!(dd.delta(0), c.delta(0));
        let p = tensor(&cycle(3), &cycle(4));
        let pd = p.dual();
        assert_eq!(pd.dims(), vec![p.size(2), p.size(1), p.size(0)]);
        assert_eq!(pd.delta(0), &p.delta(1).transpose());
        assert_eq!(pd.delta(1), &p.delta(0).transpose());
    }

    #[test]
    fn tensor_examples() {
        let e = single_edge();
        let p = tensor(&e, &e);
        assert_eq!(p.dims(), vec![1, 2, 1]);
        assert_eq!(p.delta(0), &BitMatrix::from_entries(2, 1, [(0, 0), (1, 0)]));
        assert_eq!(p.delta(1), &BitMatrix::from_entries(1, 2, [(0, 0), (0, 1)]));
        assert_eq!(tensor(&cycle(3), &cycle(3)).size(1), 18);
        assert!(tensor(&cycle(3), &cycle(4)).is_complex());
    }

    #[test]
    fn cohomology_examples() {
        let c = cycle(5);
        assert_eq!((c.cohomology_dim(0), c.cohomology_dim(1)), (1, 1));
        assert_eq!(tensor(&cycle(4), &cycle(5)).cohomology_dim(1), 2);
        assert_eq!(toric(4).cohomology_dim(1), 2);
    }

    #[test]
    fn connectivity_examples() {
        let c4 = cycle(4);
        let g = c4.connectivity_graph(&[0, 1]);
        // a vertex is joined to its two edges and, through them, to its two neighbors
        for c in 0..4 {
            let v = g.vertex(0, c);
            let mut expect: Vec<u32> = c4
                .up_adj(0, c)
                .iter()
                .flat_map(|&e| {
                    let e = e as usize;
                    let other = c4.down_adj(1, e).iter().map(|&w| g.vertex(0, w as usize) as u32);
                    other.chain(std::iter::once(g.vertex(1, e) as u32))
                })
                .filter(|&u| u as usize != v)
                .collect();
            expect.sort_unstable();
            expect.dedup();
            assert_eq!(g.adj[v], expect);
        }
        let e = single_edge().connectivity_graph(&[0, 1]);
        assert_eq!(e.adj, vec![vec![1], vec![0]]);
        let sq = tensor(&single_edge(), &single_edge()).connectivity_graph(&[1]);
        assert_eq!(sq.adj, vec![vec![1], vec![0]]);
    }

    #[test]
    fn locality_examples() {
        assert_eq!(single_edge().locality(), 2);
        let g = gen_biregular(12, 6, 3, 6, 7).unwrap();
        // a right vertex sees its six neighbors and itself
        assert_eq!(complex_from_graph(&g).locality(), 7);
        let p = tensor(&complex_from_graph(&g), &complex_from_graph(&g).dual());
        let w = p.locality();
        for l in 0..=2 {
            for c in 0..p.size(l) {
                assert!(p.comparable_count(l, c) <= w);
            }
        }
    }

    #[test]
    fn up_set_examples() {
        let g = gen_biregular(6, 4, 2, 3, 1).unwrap();
        let c = complex_from_graph(&g);
        assert_eq!(c.up_set(2, 1), g.left_adj(2).to_vec());
        assert_eq!(c.up_set(2, 0), vec![2]);
        let p = tensor(&c, &c);
        let (v, v2) = (1, 4);
        let c0 = p.index_of(0, &[Cell1::left(v), Cell1::left(v2)]).unwrap();
        let mut expect: Vec<usize> = g
            .left_adj(v2)
            .iter()
            .map(|&u| p.index_of(1, &[Cell1::left(v), Cell1::right(u)]).unwrap())
            .chain(g.left_adj(v).iter().map(|&u| p.index_of(1, &[Cell1::right(u), Cell1::left(v2)]).unwrap()))
            .collect();
        expect.sort_unstable();
        assert_eq!(p.up_set(c0, 1), expect);
    }

    #[test]
    fn distance_examples() {
        let t3 = tensor(&cycle(3), &cycle(3));
        assert_eq!(t3.min_nontrivial_weight(1, DistanceKind::Cosystolic, 1 << 20), Distance::Exact(3));
        assert_eq!(cycle(5).min_nontrivial_weight(0, DistanceKind::Cosystolic, 1 << 20), Distance::Exact(5));
        let e = tensor(&single_edge(), &single_edge());
        assert_eq!(e.min_nontrivial_weight(1, DistanceKind::Cosystolic, 1 << 20), Distance::Infinite);
        assert!(matches!(
            toric(6).min_nontrivial_weight(1, DistanceKind::Systolic, 10),
            Distance::LowerBound(_)
        ));
    }

    /// Minimum weight of a nontrivial cocycle by enumerating all vectors.
    fn brute_distance(c: &CochainComplex, i: usize) -> Option<usize> {
        let n = c.size(i);
        let triv = Span::new(n, &c.coboundary_basis(i));
        (1u64..(1 << n))
            .map(|x| BitVector::from_u64(n, x))
            .filter(|v| (i == c.dim() || c.coboundary(i, v).is_zero()) && !triv.contains(v))
            .map(|v| v.weight())
            .min()
    }

    #[test]
    fn restriction_examples() {
        let g = Arc::new(BipartiteGraph::cycle(4));
        let a = cycle(3);
        let b = Factor::cochain(g.clone());
        assert_eq!(restrict_last_factor(&a, &b, &[]).unwrap().dims(), tensor(&a, &b.complex()).dims());
        let edge = Factor::cochain(Arc::new(BipartiteGraph::complete(1, 1)));
        assert!(matches!(restrict_last_factor(&a, &edge, &[0]), Err(ComplexError::NotExtendable { .. })));
        let full = tensor(&a, &b.complex());
        let r = restrict_last_factor(&a, &b, &[1]).unwrap();
        assert!(r.is_complex());
        assert_eq!(r.size(1), full.size(1) - a.size(0));
        assert_eq!(r.size(2), full.size(2) - a.size(1));
        assert_eq!(r.cohomology_dim(0), full.cohomology_dim(0));
        assert_eq!(r.cohomology_dim(1), full.cohomology_dim(1) - 1);
    }

    fn random_factor(rng: &mut impl Rng) -> Factor {
        let nl = rng.gen_range(1..=6);
        let nr = rng.gen_range(1..=6);
        let edges: Vec<(usize, usize)> =
            (0..nl).flat_map(|l| (0..nr).map(move |r| (l, r))).filter(|_| rng.gen_bool(0.4)).collect();
        let g = Arc::new(BipartiteGraph::from_edges(nl, nr, &edges));
        if rng.gen() {
            Factor::cochain(g)
        } else {
            Factor::chain(g)
        }
    }

    fn kunneth(dims: &[Vec<usize>]) -> Vec<usize> {
        let mut acc = vec![1usize];
        for d in dims {
            let mut next = vec![0; acc.len() + d.len() - 1];
            for (i, a) in acc.iter().enumerate() {
                for (j, b) in d.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            acc = next;
        }
        acc
    }

    proptest! {
        #[test]
        fn products_satisfy_kunneth(seed in any::<u64>(), r in 2usize..4) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fs: Vec<Factor> = (0..r).map(|_| random_factor(&mut rng)).collect();
            let p = ProductComplex::new(fs.clone());
            prop_assert!(p.complex.is_complex());
            let fd: Vec<Vec<usize>> = fs.iter().map(|f| { let c = f.complex(); vec![c.cohomology_dim(0), c.cohomology_dim(1)] }).collect();
            let expect = kunneth(&fd);
            let got: Vec<usize> = (0..=r).map(|i| p.complex.cohomology_dim(i)).collect();
            prop_assert_eq!(got.clone(), expect);
            let euler_c: isize = (0..=r).map(|i| if i % 2 == 0 { p.complex.size(i) as isize } else { -(p.complex.size(i) as isize) }).sum();
            let euler_h: isize = got.iter().enumerate().map(|(i, &h)| if i % 2 == 0 { h as isize } else { -(h as isize) }).sum();
            prop_assert_eq!(euler_c, euler_h);
            let d = p.complex.dual();
            prop_assert!(d.is_complex());
            for i in 0..=r {
                prop_assert_eq!(d.cohomology_dim(r - i), got[i]);
            }
        }

        #[test]
        fn up_closure_matches_reachability(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = ProductComplex::new(vec![random_factor(&mut rng), random_factor(&mut rng)]);
            let c = &p.complex;
            for c0 in 0..c.size(0) {
                for lvl in 0..=2 {
                    // reachability by repeated application of δ to indicator vectors
                    let mut frontier = BitVector::unit(c.size(0), c0);
                    for l in 0..lvl {
                        let mut next = BitVector::zeros(c.size(l + 1));
                        for x in frontier.iter_ones() {
                            for &y in c.up_adj(l, x) {
                                next.set(y as usize, true);
                            }
                        }
                        frontier = next;
                    }
                    prop_assert_eq!(c.up_set(c0, lvl), frontier.support());
                }
            }
            let w = c.locality();
            let g = c.connectivity_graph(&[0, 1, 2]);
            prop_assert!(g.max_degree() <= w * w.saturating_sub(1).max(1));
        }

        #[test]
        fn distance_matches_brute_force(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g1 = Arc::new(BipartiteGraph::cycle(rng.gen_range(2..=3)));
            let f2 = random_factor(&mut rng);
            let p = ProductComplex::new(vec![Factor::cochain(g1), f2]);
            let c = &p.complex;
            for i in 0..=2 {
                if c.size(i) > 16 {
                    continue;
                }
                let got = c.min_nontrivial_weight(i, DistanceKind::Cosystolic, 1 << 24);
                match brute_distance(c, i) {
                    None => prop_assert_eq!(got, Distance::Infinite),
                    Some(d) => prop_assert_eq!(got, Distance::Exact(d)),
                }
            }
        }

        #[test]
        fn restriction_drops_cohomology(seed in 0u64..200) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Arc::new(gen_biregular(4, 6, 3, 2, seed).unwrap());
            let (l, _) = crate::expander::build_extendable_family(&g).unwrap();
            let fa = random_factor(&mut rng);
            let p = ProductComplex::new(vec![fa.clone(), Factor::cochain(g.clone())]);
            let rp = p.restrict(1, &l).unwrap();
            prop_assert!(rp.complex.is_complex());
            let bl = rp.factors[1].complex();
            let fd = vec![
                { let c = fa.complex(); vec![c.cohomology_dim(0), c.cohomology_dim(1)] },
                vec![bl.cohomology_dim(0), bl.cohomology_dim(1)],
            ];
            let expect = kunneth(&fd);
            for i in 0..=2 {
                prop_assert_eq!(rp.complex.cohomology_dim(i), expect[i]);
            }
            let b = Factor::cochain(g).complex();
            prop_assert_eq!(bl.cohomology_dim(0), b.cohomology_dim(0));
            prop_assert_eq!(bl.cohomology_dim(1) + l.len(), b.cohomology_dim(1));
        }
    }
}
