//! Bad-set families `E(G, η, γ)`: a fault set is bad when some connected
//! vertex set `V'` with `|V'| ≥ η` has `|F ∩ V'| ≥ γ|V'|`.
//!
//! Exact avoidance enumerates connected vertex sets and is meant for graphs
//! up to about 30 vertices. Larger graphs get the greedy cluster audit,
//! which only ever reports densities of real connected sets.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::ConnectivityGraph;

#[derive(Debug, Error, PartialEq)]
pub enum BadSetError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("enumeration budget of {0} connected sets exceeded; use cluster_density_audit")]
    Budget(u64),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

type Result<T> = std::result::Result<T, BadSetError>;

/// Undirected simple graph as adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !adj[a].contains(&(b as u32)) {
                adj[a].push(b as u32);
                adj[b].push(a as u32);
            }
        }
        adj.iter_mut().for_each(|l| l.sort_unstable());
        Graph { adj }
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, &(0..n).map(|v| (v, (v + 1) % n)).collect::<Vec<_>>())
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, &(1..n).map(|v| (v - 1, v)).collect::<Vec<_>>())
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut e = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    e.push((v, v + 1));
                }
                if r + 1 < rows {
                    e.push((v, v + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &e)
    }

    pub fn petersen() -> Self {
        let mut e: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        e.extend((0..5).map(|i| (i, i + 5)));
        e.extend((0..5).map(|i| (5 + i, 5 + (i + 2) % 5)));
        Self::from_edges(10, &e)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether `set` induces a connected subgraph.
    pub fn is_connected_set(&self, set: &[usize]) -> bool {
        let Some(&s) = set.first() else { return false };
        let mut inside = vec![false; self.len()];
        set.iter().for_each(|&v| inside[v] = true);
        let mut seen = vec![false; self.len()];
        seen[s] = true;
        let mut stack = vec![s];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v] {
                let u = u as usize;
                if inside[u] && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == set.iter().filter(|&&v| inside[v]).count()
    }
}

impl From<&ConnectivityGraph> for Graph {
    fn from(g: &ConnectivityGraph) -> Self {
        Graph { adj: g.adj.clone() }
    }
}

/// Parameters of `E(G, η, γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BadSetParams {
    /// Minimum cluster size.
    pub eta: f64,
    /// Density threshold.
    pub gamma: f64,
}

impl BadSetParams {
    pub fn new(eta: f64, gamma: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(BadSetError::Params(format!("eta must be positive, got {eta}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(BadSetError::Params(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        Ok(BadSetParams { eta, gamma })
    }

    fn is_bad(&self, size: usize, hits: usize) -> bool {
        size as f64 >= self.eta && hits as f64 >= self.gamma * size as f64
    }
}

/// Outcome of an exact avoidance check.
#[derive(Clone, Debug, PartialEq)]
pub struct Avoidance {
    pub avoiding: bool,
    /// Connected set violating the density bound, when not avoiding.
    pub witness: Option<Vec<usize>>,
    /// Connected sets visited.
    pub visited: u64,
}

/// Default enumeration budget for [`is_avoiding_exact`].
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Exact test of whether `f` avoids `E(G, η, γ)`.
///
/// Enumerates connected vertex sets rooted at their smallest vertex and
/// prunes a branch once even adding every remaining fault vertex could not
/// reach density `γ` at size `≥ η`.
pub fn is_avoiding_exact(g: &Graph, f: &[usize], p: &BadSetParams, budget: u64) -> Result<Avoidance> {
    let n = g.len();
    let mut in_f = vec![false; n];
    for &v in f {
        if v >= n {
            return Err(BadSetError::Params(format!("fault vertex {v} outside graph of {n}")));
        }
        in_f[v] = true;
    }
    let total_f = in_f.iter().filter(|&&b| b).count();
    let mut visited = 0;
    // a bad set holds at least ceil(γη) faults
    if (total_f as f64) < (p.gamma * p.eta).ceil().max(1.0) || (n as f64) < p.eta {
        return Ok(Avoidance { avoiding: true, witness: None, visited });
    }
    // faults with index > root, for the pruning bound
    let mut f_above = vec![0usize; n + 1];
    for v in (0..n).rev() {
        f_above[v] = f_above[v + 1] + usize::from(in_f[v]);
    }
    let mut search = Esu { g, in_f: &in_f, p, budget, visited: 0, set: Vec::new(), mark: vec![0u32; n], witness: None };
    for root in 0..n {
        // sets rooted here contain only vertices ≥ root
        if !search.can_reach(1, usize::from(in_f[root]), f_above[root + 1]) {
            continue;
        }
        search.set.clear();
        search.set.push(root);
        search.mark[root] = 1;
        let ext: Vec<usize> = g.adj[root].iter().map(|&u| u as usize).filter(|&u| u > root).collect();
        for &u in &ext {
            search.mark[u] = 1;
        }
        let found = search.extend(root, usize::from(in_f[root]), f_above[root + 1], ext.clone())?;
        search.mark[root] = 0;
        for &u in &ext {
            search.mark[u] = 0;
        }
        if found {
            visited = search.visited;
            return Ok(Avoidance { avoiding: false, witness: search.witness.take(), visited });
        }
    }
    visited += search.visited;
    Ok(Avoidance { avoiding: true, witness: None, visited })
}

struct Esu<'a> {
    g: &'a Graph,
    in_f: &'a [bool],
    p: &'a BadSetParams,
    budget: u64,
    visited: u64,
    set: Vec<usize>,
    /// Nonzero when a vertex is in the set or in its exclusive neighborhood.
    mark: Vec<u32>,
    witness: Option<Vec<usize>>,
}

impl Esu<'_> {
    /// Best density reachable from `size` vertices with `hits` faults when up
    /// to `spare` more faults may join.
    fn can_reach(&self, size: usize, hits: usize, spare: usize) -> bool {
        let target = (size as f64).max(self.p.eta.ceil());
        let extra = target as usize - size;
        let h = hits + spare.min(extra);
        let best_at_target = h as f64 >= self.p.gamma * target;
        // growing past the target by faults alone only helps when γ < 1
        best_at_target || (hits + spare) as f64 >= self.p.gamma * (size + spare) as f64 && size + spare >= target as usize
    }

    fn extend(&mut self, root: usize, hits: usize, spare: usize, mut ext: Vec<usize>) -> Result<bool> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(BadSetError::Budget(self.budget));
        }
        if self.p.is_bad(self.set.len(), hits) {
            let mut w = self.set.clone();
            w.sort_unstable();
            self.witness = Some(w);
            return Ok(true);
        }
        if !self.can_reach(self.set.len(), hits, spare) {
            return Ok(false);
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            let mut added = Vec::new();
            for &u in &self.g.adj[w] {
                let u = u as usize;
                if u > root && self.mark[u] == 0 {
                    self.mark[u] = 1;
                    added.push(u);
                    next.push(u);
                }
            }
            self.set.push(w);
            let fw = usize::from(self.in_f[w]);
            let found = self.extend(root, hits + fw, spare - fw, next)?;
            self.set.pop();
            for u in added {
                self.mark[u] = 0;
            }
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Greedy cluster statistic for graphs too large for exact enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAudit {
    /// Largest `|F ∩ V'| / |V'|` over grown clusters with `|V'| ≥ η`.
    pub max_density: f64,
    pub witness: Vec<usize>,
    /// Connected components of `G[F]`.
    pub components: usize,
    /// Always true: the statistic under-approximates non-avoidance.
    pub approximate: bool,
}

/// Grows each component of `G[F]` by neighbor closure: repeatedly take a
/// neighbor that joins another fault component, otherwise pad with the
/// neighbor having the most fault neighbors. Every cluster reported is
/// connected, so a density `≥ γ` proves non-avoidance.
pub fn cluster_density_audit(g: &Graph, f: &[usize], eta: f64) -> ClusterAudit {
    let n = g.len();
    let mut in_f = vec![false; n];
    f.iter().for_each(|&v| in_f[v] = true);
    let comps = components(g, &in_f);
    let mut best = ClusterAudit { max_density: 0.0, witness: Vec::new(), components: comps.len(), approximate: true };
    for comp in &comps {
        let mut inside = vec![false; n];
        comp.iter().for_each(|&v| inside[v] = true);
        let mut set = comp.clone();
        let mut hits = comp.len();
        loop {
            if set.len() as f64 >= eta {
                let d = hits as f64 / set.len() as f64;
                if d > best.max_density {
                    best.max_density = d;
                    best.witness = {
                        let mut w = set.clone();
                        w.sort_unstable();
                        w
                    };
                }
            }
            // frontier vertex maximizing fault neighbors outside the set
            let mut pick: Option<(usize, usize)> = None;
            for &v in &set {
                for &u in &g.adj[v] {
                    let u = u as usize;
                    if inside[u] {
                        continue;
                    }
                    let gain = usize::from(in_f[u]) * n
                        + g.adj[u].iter().filter(|&&x| in_f[x as usize] && !inside[x as usize]).count();
                    if pick.is_none_or(|(_, g0)| gain > g0) {
                        pick = Some((u, gain));
                    }
                }
            }
            let Some((u, gain)) = pick else { break };
            if gain == 0 && set.len() as f64 >= eta {
                break;
            }
            inside[u] = true;
            set.push(u);
            hits += usize::from(in_f[u]);
            // pull in whole fault components touching u
            let mut stack = vec![u];
            while let Some(v) = stack.pop() {
                for &x in &g.adj[v] {
                    let x = x as usize;
                    if in_f[x] && !inside[x] {
                        inside[x] = true;
                        set.push(x);
                        hits += 1;
                        stack.push(x);
                    }
                }
            }
        }
    }
    best
}

fn components(g: &Graph, in_f: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    for s in 0..g.len() {
        if !in_f[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for &u in &g.adj[v] {
                let u = u as usize;
                if in_f[u] && !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// `|V| · 2 (eε/γ)^η` with no precondition check.
pub fn percolation_formula(nv: usize, eta: f64, gamma: f64, eps: f64) -> f64 {
    nv as f64 * 2.0 * (E * eps / gamma).powf(eta)
}

/// The percolation bound `|V| · 2 (eε/γ)^η`, rejecting parameters outside
/// `ε ≤ γ/e` and `Δ² (eε/γ)^γ ≤ 1/2`.
pub fn percolation_bound(nv: usize, delta: usize, eta: f64, gamma: f64, eps: f64) -> Result<f64> {
    BadSetParams::new(eta, gamma)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(BadSetError::Params(format!("eps must lie in [0, 1], got {eps}")));
    }
    if eps > gamma / E {
        return Err(BadSetError::Precondition(format!("eps = {eps} > gamma/e = {}", gamma / E)));
    }
    let lhs = (delta * delta) as f64 * (E * eps / gamma).powf(gamma);
    if lhs > 0.5 {
        return Err(BadSetError::Precondition(format!("Delta^2 (e eps/gamma)^gamma = {lhs} > 1/2")));
    }
    Ok(percolation_formula(nv, eta, gamma, eps))
}

/// Union bound before its final simplification:
/// `Σ_{u=⌈η⌉}^{|V|} |V| Δ^{2u} (eε/γ)^{γu}`.
///
/// For `γ < 1` this can exceed [`percolation_formula`], and so can the
/// true non-avoidance probability.
pub fn percolation_union_sum(nv: usize, delta: usize, eta: f64, gamma: f64, eps: f64) -> f64 {
    let ratio = (delta * delta) as f64 * (E * eps / gamma).powf(gamma);
    (eta.ceil().max(1.0) as usize..=nv).map(|u| nv as f64 * ratio.powi(u as i32)).sum()
}

/// Largest `ε` meeting both percolation preconditions for `(Δ, γ)`.
pub fn max_admissible_eps(delta: usize, gamma: f64) -> f64 {
    let d2 = (delta * delta).max(1) as f64;
    // Δ² (eε/γ)^γ = 1/2  ⇔  ε = (γ/e) (1 / 2Δ²)^{1/γ}
    (gamma / E) * (1.0 / (2.0 * d2)).powf(1.0 / gamma).min(1.0)
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (n, ph) = (n as f64, k as f64 / n as f64);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (ph + z2 / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// One Monte Carlo trial row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: u64,
    pub faults: usize,
    /// Witness density, or 0 when avoiding.
    pub worst_density: f64,
    pub avoiding: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub trials: u64,
    pub non_avoiding: u64,
    pub frequency: f64,
    /// 99% Wilson interval.
    pub ci: (f64, f64),
    pub rows: Vec<TrialRow>,
}

/// Draws iid `F` at rate `p` per vertex `trials` times and counts draws that
/// are not `E(G, η, γ)`-avoiding. Trial `t` uses stream `t` of the seed.
pub fn mc_percolation(g: &Graph, p: f64, params: &BadSetParams, trials: u64, seed: u64) -> Result<McReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BadSetError::Params(format!("p must lie in [0, 1], got {p}")));
    }
    let rows: Vec<TrialRow> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let f: Vec<usize> = (0..g.len()).filter(|_| rng.gen_bool(p)).collect();
            let a = is_avoiding_exact(g, &f, params, DEFAULT_BUDGET)?;
            let worst = a.witness.as_ref().map_or(0.0, |w| w.iter().filter(|v| f.contains(v)).count() as f64 / w.len() as f64);
            Ok(TrialRow { trial: t, faults: f.len(), worst_density: worst, avoiding: a.avoiding })
        })
        .collect::<Result<_>>()?;
    let bad = rows.iter().filter(|r| !r.avoiding).count() as u64;
    Ok(McReport {
        trials,
        non_avoiding: bad,
        frequency: if trials == 0 { 0.0 } else { bad as f64 / trials as f64 },
        ci: wilson(bad, trials, Z99),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest};

    /// Brute-force oracle over all vertex subsets.
    fn oracle(g: &Graph, f: &[usize], p: &BadSetParams) -> bool {
        let n = g.len();
        (1u32..(1 << n)).all(|mask| {
            let set: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let hits = set.iter().filter(|v| f.contains(v)).count();
            !(p.is_bad(set.len(), hits) && g.is_connected_set(&set))
        })
    }

    fn random_graph(n: usize, bits: u64) -> Graph {
        let mut e = Vec::new();
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                if bits.rotate_left(k) & 3 == 0 {
                    e.push((a, b));
                }
                k += 7;
            }
        }
        Graph::from_edges(n, &e)
    }

    #[test]
    fn empty_faults_avoid() {
        let g = Graph::cycle(8);
        let p = BadSetParams::new(2.0, 0.5).unwrap();
        assert!(is_avoiding_exact(&g, &[], &p, DEFAULT_BUDGET).unwrap().avoiding);
    }

    #[test]
    fn full_faults_do_not_avoid() {
        let g = Graph::grid(3, 3);
        let p = BadSetParams::new(9.0, 1.0).unwrap();
        let all: Vec<usize> = (0..9).collect();
        let a = is_avoiding_exact(&g, &all, &p, DEFAULT_BUDGET).unwrap();
        assert!(!a.avoiding);
        let w = a.witness.unwrap();
        assert!(w.len() >= 9 && g.is_connected_set(&w));
    }

    #[test]
    fn alternating_path_avoids() {
        let g = Graph::path(10);
        let f = [0, 2, 4, 6, 8];
        let p = BadSetParams::new(10.0, 0.6).unwrap();
        assert!(is_avoiding_exact(&g, &f, &p, DEFAULT_BUDGET).unwrap().avoiding);
        // the whole path has density exactly 0.5
        let p = BadSetParams::new(10.0, 0.5).unwrap();
        assert!(!is_avoiding_exact(&g, &f, &p, DEFAULT_BUDGET).unwrap().avoiding);
    }

    #[test]
    fn budget_is_reported() {
        let g = Graph::grid(5, 6);
        let f: Vec<usize> = (0..30).step_by(2).collect();
        let p = BadSetParams::new(20.0, 0.5).unwrap();
        assert_eq!(is_avoiding_exact(&g, &f, &p, 10), Err(BadSetError::Budget(10)));
    }

    #[test]
    fn params_validated() {
        assert!(BadSetParams::new(0.0, 0.5).is_err());
        assert!(BadSetParams::new(1.0, 1.5).is_err());
        assert!(BadSetParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn audit_isolated_faults_vacuous() {
        let g = Graph::cycle(30);
        let a = cluster_density_audit(&g, &[0, 10, 20], 31.0);
        assert_eq!((a.max_density, a.components), (0.0, 3));
    }

    #[test]
    fn audit_dense_blob() {
        let g = Graph::grid(6, 6);
        let blob: Vec<usize> = (0..4).flat_map(|r| (0..4).map(move |c| r * 6 + c)).collect();
        let a = cluster_density_audit(&g, &blob, 16.0);
        assert_eq!(a.max_density, 1.0);
        assert!(g.is_connected_set(&a.witness));
    }

    #[test]
    fn bound_formula_values() {
        assert_eq!(percolation_bound(100, 1, 10.0, 0.5, 0.0).unwrap(), 0.0);
        // example parameters fail the degree precondition; the bare formula
        // still evaluates to 200 (0.1 e)^10
        let v = percolation_formula(100, 10.0, 0.5, 0.05);
        assert!((v - 200.0 * (0.1 * E).powi(10)).abs() < 1e-15);
        // frozen from an independent float evaluation
        assert!((v - 4.405_293_158_961_346_6e-4).abs() < 1e-15, "{v}");
        assert!(matches!(percolation_bound(100, 3, 10.0, 0.5, 0.05), Err(BadSetError::Precondition(_))));
        assert!(matches!(percolation_bound(100, 1, 10.0, 0.5, 0.5), Err(BadSetError::Precondition(_))));
        // doubling η squares the power factor
        let (a, b) = (percolation_formula(1, 4.0, 0.5, 0.01) / 2.0, percolation_formula(1, 8.0, 0.5, 0.01) / 2.0);
        assert!((a * a - b).abs() < 1e-18);
    }

    #[test]
    fn admissible_eps_is_tight() {
        for (d, g) in [(2, 0.5), (3, 1.0), (4, 0.25)] {
            let e = max_admissible_eps(d, g);
            assert!(percolation_bound(10, d, 2.0, g, e * (1.0 - 1e-9)).is_ok());
            assert!(percolation_bound(10, d, 2.0, g, e * 1.001).is_err());
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson(0, 10, Z99).0, 0.0);
    }

    #[test]
    fn mc_extremes() {
        let g = Graph::petersen();
        let p = BadSetParams::new(10.0, 1.0).unwrap();
        assert_eq!(mc_percolation(&g, 0.0, &p, 50, 1).unwrap().non_avoiding, 0);
        assert_eq!(mc_percolation(&g, 1.0, &p, 50, 1).unwrap().non_avoiding, 50);
    }

    #[test]
    fn mc_is_deterministic() {
        let g = Graph::cycle(12);
        let p = BadSetParams::new(3.0, 0.5).unwrap();
        let a = mc_percolation(&g, 0.2, &p, 200, 9).unwrap();
        let b = mc_percolation(&g, 0.2, &p, 200, 9).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn exact_matches_oracle(n in 3usize..11, bits in any::<u64>(), fbits in any::<u16>(), eta in 1u8..6, g10 in 1u8..11) {
            let g = random_graph(n, bits);
            let f: Vec<usize> = (0..n).filter(|&v| fbits >> v & 1 == 1).collect();
            let p = BadSetParams::new(eta as f64, g10 as f64 / 10.0).unwrap();
            let a = is_avoiding_exact(&g, &f, &p, DEFAULT_BUDGET).unwrap();
            prop_assert!(a.avoiding == oracle(&g, &f, &p));
            if let Some(w) = a.witness {
                let hits = w.iter().filter(|v| f.contains(v)).count();
                prop_assert!(g.is_connected_set(&w) && p.is_bad(w.len(), hits));
            }
        }

        #[test]
        fn avoidance_is_monotone(n in 4usize..12, bits in any::<u64>(), fbits in any::<u16>(), drop in 0usize..12) {
            let g = random_graph(n, bits);
            let f: Vec<usize> = (0..n).filter(|&v| fbits >> v & 1 == 1).collect();
            let smaller: Vec<usize> = f.iter().copied().filter(|&v| v != drop).collect();
            let p = BadSetParams::new(3.0, 0.5).unwrap();
            if is_avoiding_exact(&g, &f, &p, DEFAULT_BUDGET).unwrap().avoiding {
                prop_assert!(is_avoiding_exact(&g, &smaller, &p, DEFAULT_BUDGET).unwrap().avoiding);
            }
        }

        #[test]
        fn audit_is_sound(n in 4usize..15, bits in any::<u64>(), fbits in any::<u16>(), eta in 1u8..8, g10 in 1u8..11) {
            let g = random_graph(n, bits);
            let f: Vec<usize> = (0..n).filter(|&v| fbits >> v & 1 == 1).collect();
            let p = BadSetParams::new(eta as f64, g10 as f64 / 10.0).unwrap();
            let audit = cluster_density_audit(&g, &f, p.eta);
            if audit.max_density >= p.gamma {
                prop_assert!(!is_avoiding_exact(&g, &f, &p, DEFAULT_BUDGET).unwrap().avoiding);
            }
        }
    }
}
