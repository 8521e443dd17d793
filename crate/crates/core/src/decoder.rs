//! Small-set flip decoders with footprint recording, the audits built on
//! footprints, and a robustness oracle for products of repetition complexes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::complex::{CochainComplex, ConnectivityGraph, Factor, ProductComplex};
use crate::expander::BipartiteGraph;
use crate::f2la::BitVector;

/// Up-sets larger than this are rejected: the flip enumeration is `2^|U|`.
pub const DEFAULT_MAX_UP_SET: usize = 22;

#[derive(Debug, Error, PartialEq)]
pub enum DecoderError {
    #[error("up-set of anchor {anchor} has {size} cells, above the enumeration cap {max}")]
    UpSetTooLarge { anchor: usize, size: usize, max: usize },
    #[error("robustness search needs 2^{rank} coboundaries, above the cap 2^{max}")]
    TooLarge { rank: usize, max: usize },
}

/// Acceptance rule for level-i flips in the error-flip decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FlipRule {
    /// Any strict decrease of syndrome weight.
    #[default]
    Decrease,
    /// `|δ(e + c)| < |δ(e)| − (1 − ν)|δ(c)|` with `ν = num/den`.
    Strengthened { num: u32, den: u32 },
}

impl FlipRule {
    fn accepts(self, gain: i64, dw: i64) -> bool {
        match self {
            FlipRule::Decrease => gain > 0,
            FlipRule::Strengthened { num, den } => gain * den as i64 > (den as i64 - num as i64) * dw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderConfig {
    pub max_up_set: usize,
    pub rule: FlipRule,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { max_up_set: DEFAULT_MAX_UP_SET, rule: FlipRule::Decrease }
    }
}

/// A flip supported in one up-set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipCandidate {
    pub anchor: usize,
    pub level: usize,
    /// Flipped cells, sorted.
    pub flip: Vec<usize>,
    /// Bit `j` set when the `j`-th cell of the anchor's up-set is flipped.
    pub bits: u64,
    /// Decrease of the residual weight.
    pub gain: i64,
    /// `|δ(flip)|`.
    pub coboundary_weight: usize,
}

/// Cumulative cells touched by a decoder run, per level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Footprint {
    pub cells: BTreeMap<usize, BitVector>,
    /// Footprint size after each iteration (index 0 is the start).
    pub sizes: Vec<usize>,
}

impl Footprint {
    fn absorb(&mut self, level: usize, v: &BitVector) {
        self.cells.entry(level).or_insert_with(|| BitVector::zeros(v.len())).or_assign(v);
    }

    fn mark(&mut self) {
        self.sizes.push(self.len());
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(BitVector::weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds cells at `level` (used to seed with error or noise supports).
    pub fn add(&mut self, level: usize, v: &BitVector) {
        self.absorb(level, v);
    }

    pub fn level(&self, level: usize) -> Option<&BitVector> {
        self.cells.get(&level)
    }

    /// Vertex ids of the footprint in `g`, skipping levels `g` does not hold.
    pub fn vertices(&self, g: &ConnectivityGraph) -> Vec<usize> {
        let mut out = Vec::new();
        for (&l, v) in &self.cells {
            if g.contains_level(l) {
                out.extend(v.iter_ones().map(|c| g.vertex(l, c)));
            }
        }
        out
    }
}

/// One accepted flip.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub anchor: usize,
    pub level: usize,
    pub flip: Vec<usize>,
    pub before: usize,
    pub after: usize,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flip: Vec<String> = self.flip.iter().map(usize::to_string).collect();
        write!(
            f,
            "iter={} anchor={} level={} flip={} before={} after={}",
            self.iteration,
            self.anchor,
            self.level,
            flip.join(","),
            self.before,
            self.after
        )
    }
}

/// Best flip at `level` against a residual in `C^{level+1}`: the largest
/// `gain/|δ(c)|` among accepted flips, ties to the fewest flipped cells and
/// then the lowest `(anchor, bits)`.
pub fn find_flip(
    c: &CochainComplex,
    level: usize,
    residual: &BitVector,
    rule: FlipRule,
    max_up_set: usize,
) -> Result<Option<FlipCandidate>, DecoderError> {
    if residual.is_zero() {
        return Ok(None);
    }
    let mut anchors: Vec<usize> = residual.iter_ones().flat_map(|rho| c.down_closure(level + 1, rho, 0)).collect();
    anchors.sort_unstable();
    anchors.dedup();
    let mut best: Option<FlipCandidate> = None;
    let mut local_of = vec![u32::MAX; c.size(level + 1)];
    for &a in &anchors {
        let up = c.up_set(a, level);
        if up.len() > max_up_set {
            return Err(DecoderError::UpSetTooLarge { anchor: a, size: up.len(), max: max_up_set });
        }
        let mut local: Vec<usize> = up.iter().flat_map(|&q| c.up_adj(level, q).iter().map(|&x| x as usize)).collect();
        local.sort_unstable();
        local.dedup();
        for (j, &x) in local.iter().enumerate() {
            local_of[x] = j as u32;
        }
        let words = local.len().div_ceil(64).max(1);
        let mut masks = vec![0u64; up.len() * words];
        for (j, &q) in up.iter().enumerate() {
            for &x in c.up_adj(level, q) {
                let b = local_of[x as usize] as usize;
                masks[j * words + b / 64] ^= 1 << (b % 64);
            }
        }
        let mut s = vec![0u64; words];
        for (b, &x) in local.iter().enumerate() {
            if residual.get(x) {
                s[b / 64] |= 1 << (b % 64);
            }
        }
        let mut d = vec![0u64; words];
        let mut bits = 0u64;
        for t in 1u64..(1u64 << up.len()) {
            let j = t.trailing_zeros() as usize;
            bits ^= 1 << j;
            for (w, dw) in d.iter_mut().enumerate() {
                *dw ^= masks[j * words + w];
            }
            let dw: i64 = d.iter().map(|x| x.count_ones() as i64).sum();
            let inter: i64 = d.iter().zip(&s).map(|(x, y)| (x & y).count_ones() as i64).sum();
            let gain = 2 * inter - dw;
            if !rule.accepts(gain, dw) {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    let lhs = gain * b.coboundary_weight as i64;
                    let rhs = b.gain * dw;
                    let (wa, wb) = (bits.count_ones(), b.bits.count_ones());
                    lhs > rhs || (lhs == rhs && (wa < wb || (wa == wb && b.anchor == a && bits < b.bits)))
                }
            };
            if better {
                best = Some(FlipCandidate {
                    anchor: a,
                    level,
                    flip: Vec::new(),
                    bits,
                    gain,
                    coboundary_weight: dw as usize,
                });
            }
        }
        for &x in &local {
            local_of[x] = u32::MAX;
        }
        if let Some(b) = best.as_mut().filter(|b| b.anchor == a && b.flip.is_empty()) {
            b.flip = (0..up.len()).filter(|j| b.bits >> j & 1 == 1).map(|j| up[j]).collect();
        }
    }
    Ok(best)
}

/// `find_flip` for the syndrome decoder at qubit level `i`.
pub fn find_flip_syn(
    c: &CochainComplex,
    i: usize,
    residual: &BitVector,
    cfg: &DecoderConfig,
) -> Result<Option<FlipCandidate>, DecoderError> {
    find_flip(c, i, residual, FlipRule::Decrease, cfg.max_up_set)
}

#[derive(Clone, Debug)]
pub struct SynResult {
    /// Correction `a^i`.
    pub correction: BitVector,
    /// `s + δ(a^i)` at termination.
    pub residual: BitVector,
    pub iterations: usize,
    pub footprint: Footprint,
    pub trace: Vec<TraceRecord>,
}

/// Greedy syndrome decoder: flips the best small set until no flip lowers
/// the residual weight.
pub fn ss_flip_syn(c: &CochainComplex, i: usize, s: &BitVector, cfg: &DecoderConfig) -> Result<SynResult, DecoderError> {
    let mut a = BitVector::zeros(c.size(i));
    let mut residual = s.clone();
    let mut fp = Footprint::default();
    fp.absorb(i + 1, s);
    fp.absorb(i, &a);
    fp.mark();
    let mut trace = Vec::new();
    let mut it = 0;
    while let Some(cand) = find_flip(c, i, &residual, FlipRule::Decrease, cfg.max_up_set)? {
        debug_assert!(cand.flip.iter().all(|q| c.up_set(cand.anchor, i).contains(q)));
        let before = residual.weight();
        for &q in &cand.flip {
            a.toggle(q);
            for &x in c.up_adj(i, q) {
                residual.toggle(x as usize);
            }
        }
        it += 1;
        assert!(residual.weight() < before, "accepted flip must lower the residual");
        trace.push(TraceRecord {
            iteration: it,
            anchor: cand.anchor,
            level: i,
            flip: cand.flip,
            before,
            after: residual.weight(),
        });
        fp.absorb(i, &a);
        fp.absorb(i + 1, &residual);
        fp.mark();
    }
    Ok(SynResult { correction: a, residual, iterations: it, footprint: fp, trace })
}

#[derive(Clone, Debug)]
pub struct ErrResult {
    pub a_prev: BitVector,
    pub a: BitVector,
    pub footprint: Footprint,
    pub trace: Vec<TraceRecord>,
}

/// Error decoder failure: neither branch applies while `e ≠ a^i + δ(a^{i−1})`.
#[derive(Clone, Debug)]
pub struct FlipFail {
    pub a_prev: BitVector,
    pub a: BitVector,
    pub footprint: Footprint,
    pub trace: Vec<TraceRecord>,
}

/// Decomposes `e = a^i + δ(a^{i−1})` by alternating level-(i−1) flips, which
/// lower `|e + a^i + δ(a^{i−1})|`, with level-i flips, which lower
/// `|δ(e + a^i)|`. Requires `i ≥ 1`.
pub fn ss_flip_err(
    c: &CochainComplex,
    i: usize,
    e: &BitVector,
    cfg: &DecoderConfig,
) -> Result<Result<ErrResult, FlipFail>, DecoderError> {
    assert!(i >= 1, "error decoder needs a level below");
    let mut a_prev = BitVector::zeros(c.size(i - 1));
    let mut a = BitVector::zeros(c.size(i));
    let mut r = e.clone();
    let mut syn = c.coboundary(i, e);
    let mut fp = Footprint::default();
    fp.absorb(i, &r);
    if i < c.dim() {
        fp.absorb(i + 1, &syn);
    }
    fp.absorb(i - 1, &a_prev);
    fp.mark();
    let mut trace = Vec::new();
    let mut it = 0;
    while !r.is_zero() {
        let before_r = r.weight();
        if let Some(cand) = find_flip(c, i - 1, &r, FlipRule::Decrease, cfg.max_up_set)? {
            for &q in &cand.flip {
                a_prev.toggle(q);
                for &x in c.up_adj(i - 1, q) {
                    r.toggle(x as usize);
                }
            }
            it += 1;
            trace.push(TraceRecord {
                iteration: it,
                anchor: cand.anchor,
                level: i - 1,
                flip: cand.flip,
                before: before_r,
                after: r.weight(),
            });
        } else if let Some(cand) = find_flip(c, i, &syn, cfg.rule, cfg.max_up_set)? {
            let before = syn.weight();
            for &q in &cand.flip {
                a.toggle(q);
                r.toggle(q);
                for &x in c.up_adj(i, q) {
                    syn.toggle(x as usize);
                }
            }
            it += 1;
            trace.push(TraceRecord {
                iteration: it,
                anchor: cand.anchor,
                level: i,
                flip: cand.flip,
                before,
                after: syn.weight(),
            });
        } else {
            return Ok(Err(FlipFail { a_prev, a, footprint: fp, trace }));
        }
        fp.absorb(i - 1, &a_prev);
        fp.absorb(i, &r);
        fp.absorb(i, &a);
        if i < c.dim() {
            fp.absorb(i + 1, &syn);
        }
        fp.mark();
    }
    Ok(Ok(ErrResult { a_prev, a, footprint: fp, trace }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditKind {
    Syn,
    Err,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityAudit {
    /// `(component size, seeds inside)` per component.
    pub components: Vec<(usize, usize)>,
    /// Required density as `1/denominator`.
    pub denominator: u64,
    pub pass: bool,
}

impl DensityAudit {
    pub fn min_density(&self) -> Option<f64> {
        self.components.iter().map(|&(n, s)| s as f64 / n as f64).min_by(f64::total_cmp)
    }
}

/// Checks that each connected component of the footprint holds at least a
/// `1/4w³` (syn) or `1/8w⁴` (err) fraction of seed cells.
pub fn footprint_density_audit(
    footprint: &Footprint,
    seeds: &Footprint,
    g: &ConnectivityGraph,
    w: usize,
    which: AuditKind,
) -> DensityAudit {
    let w = w as u64;
    let denominator = match which {
        AuditKind::Syn => 4 * w.pow(3),
        AuditKind::Err => 8 * w.pow(4),
    };
    let verts = footprint.vertices(g);
    let mut seed_mark = vec![false; g.len()];
    for v in seeds.vertices(g) {
        seed_mark[v] = true;
    }
    let components: Vec<(usize, usize)> = g
        .components(&verts)
        .iter()
        .map(|comp| (comp.len(), comp.iter().filter(|&&v| seed_mark[v]).count()))
        .collect();
    let pass = components.iter().all(|&(n, s)| s as u64 * denominator >= n as u64);
    DensityAudit { components, denominator, pass }
}

/// Runs the syndrome decoder on `δ(e) + f` globally and then on each
/// footprint component alone; true when every component's output equals the
/// global output restricted to it.
pub fn locality_audit(
    c: &CochainComplex,
    i: usize,
    e: &BitVector,
    f: &BitVector,
    g: &ConnectivityGraph,
    cfg: &DecoderConfig,
) -> Result<bool, DecoderError> {
    let s = c.coboundary(i, e).xor(f);
    let global = ss_flip_syn(c, i, &s, cfg)?;
    let mut fp = global.footprint.clone();
    fp.add(i, e);
    fp.add(i + 1, f);
    let verts = fp.vertices(g);
    for comp in g.components(&verts) {
        let mut e_v = BitVector::zeros(c.size(i));
        let mut f_v = BitVector::zeros(c.size(i + 1));
        let mut in_v = BitVector::zeros(c.size(i));
        for &v in &comp {
            let (l, cell) = g.vertices[v];
            if l == i {
                in_v.set(cell, true);
                if e.get(cell) {
                    e_v.set(cell, true);
                }
            } else if l == i + 1 && f.get(cell) {
                f_v.set(cell, true);
            }
        }
        let s_v = c.coboundary(i, &e_v).xor(&f_v);
        let local = ss_flip_syn(c, i, &s_v, cfg)?;
        let mut expect = global.correction.clone();
        expect.and_assign(&in_v);
        if local.correction != expect {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Product of repetition complexes `F2 → F2^{n_h}`.
pub fn repetition_product(lengths: &[usize]) -> ProductComplex {
    let factors =
        lengths.iter().map(|&n| Factor::cochain(Arc::new(BipartiteGraph::complete(1, n)))).collect();
    ProductComplex::new(factors)
}

/// Robustness ratio `|δ(c)| / min_b |b + c|` over coboundaries `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Robustness {
    /// Minimizing coboundary.
    pub b: BitVector,
    pub coboundary_weight: usize,
    pub distance: usize,
}

impl Robustness {
    /// `None` when `c` is itself a coboundary.
    pub fn ratio(&self) -> Option<f64> {
        (self.distance > 0).then(|| self.coboundary_weight as f64 / self.distance as f64)
    }
}

/// Exhaustive search over `B^i` of a product of repetition complexes.
pub fn robustness_check(lengths: &[usize], i: usize, c: &BitVector, max_rank: usize) -> Result<Robustness, DecoderError> {
    let p = repetition_product(lengths);
    let cx = &p.complex;
    let basis = cx.coboundary_basis(i);
    if basis.len() > max_rank {
        return Err(DecoderError::TooLarge { rank: basis.len(), max: max_rank });
    }
    let mut cur = c.clone();
    let mut b = BitVector::zeros(c.len());
    let mut best = (cur.weight(), b.clone());
    for t in 1u64..(1u64 << basis.len()) {
        let j = t.trailing_zeros() as usize;
        cur.xor_assign(&basis[j]);
        b.xor_assign(&basis[j]);
        if cur.weight() < best.0 {
            best = (cur.weight(), b.clone());
        }
    }
    let dw = if i < cx.dim() { cx.coboundary(i, c).weight() } else { 0 };
    Ok(Robustness { b: best.1, coboundary_weight: dw, distance: best.0 })
}

/// Correction radius `µ|V_L| / (rΔ^{r+1} + 1)` of the analysis, minimized
/// over directions. Recorded for reports; experiments measure radii instead.
pub fn analytic_radius(mu: f64, left_sizes: &[usize], delta_max: usize) -> f64 {
    let r = left_sizes.len() as f64;
    let denom = r * (delta_max as f64).powi(left_sizes.len() as i32 + 1) + 1.0;
    left_sizes.iter().map(|&n| mu * n as f64 / denom).fold(f64::INFINITY, f64::min)
}
