//! Seeded experiment drivers shared by the acceptance suite and the CLI:
//! decoder trials, syndrome-noise trials, footprint audits, and a
//! frame-engine memory experiment.
//!
//! Trial `t` of a run with root seed `s` draws from stream `t` of a
//! ChaCha8 generator seeded with `s`, so results do not depend on thread
//! count or scheduling.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::badsets::{wilson, Z95};
use crate::circuits::CircuitError;
use crate::codes::{CssCode, Pauli};
use crate::complex::{CochainComplex, Factor, ProductComplex};
use crate::decoder::{
    footprint_density_audit, ss_flip_err, ss_flip_syn, AuditKind, DecoderConfig, DecoderError, DensityAudit, Footprint,
};
use crate::expander::{gen_biregular, random_subset, BipartiteGraph, ExpanderError, Side};
use crate::f2la::BitVector;
use crate::gadgets::{z_memory, Ctx, DecoratedCode, GadgetError};
use crate::sim::{frame_run, sample_fault, NoiseModel, Reference, SimError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Expander(#[from] ExpanderError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("level {level} has no checks above it in a {dim}-dimensional complex")]
    TopLevel { level: usize, dim: usize },
}

type Result<T> = std::result::Result<T, ExperimentError>;

/// Generator for trial `t` under root seed `seed`.
pub fn trial_rng(seed: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

/// Hypergraph product `[cochain, chain]` of one graph: the level-1 code has
/// qubits `V_R × V_R ⊔ V_L × V_L`.
pub fn hgp(g: Arc<BipartiteGraph>) -> ProductComplex {
    ProductComplex::new(vec![Factor::cochain(g.clone()), Factor::chain(g)])
}

/// Random `(deg_left, deg_right)`-biregular hypergraph product.
pub fn random_hgp(n_left: usize, deg_left: usize, deg_right: usize, seed: u64) -> Result<ProductComplex> {
    let n_right = n_left * deg_left / deg_right;
    Ok(hgp(Arc::new(gen_biregular(n_left, n_right, deg_left, deg_right, seed)?)))
}

/// Whether no two vertices on the same side share two neighbors.
pub fn four_cycle_free(g: &BipartiteGraph) -> bool {
    [Side::Left, Side::Right].into_iter().all(|side| {
        let n = g.side_len(side);
        (0..n).all(|a| {
            let na = g.adj(side, a);
            (a + 1..n).all(|b| g.adj(side, b).iter().filter(|x| na.contains(x)).count() <= 1)
        })
    })
}

/// First `(Δ_L, Δ_R)`-biregular configuration-model graph without
/// 4-cycles, scanning seeds `seed, seed + 1, …` for `attempts` draws.
/// Returns the seed that produced it.
pub fn four_cycle_free_graph(
    n_left: usize,
    deg_left: usize,
    deg_right: usize,
    seed: u64,
    attempts: u64,
) -> Option<(u64, BipartiteGraph)> {
    let n_right = n_left * deg_left / deg_right;
    (seed..seed.saturating_add(attempts)).find_map(|s| {
        gen_biregular(n_left, n_right, deg_left, deg_right, s).ok().filter(four_cycle_free).map(|g| (s, g))
    })
}

/// Point-line incidence graph of the affine plane over `F_3`: 9 points of
/// degree 4 on the left, 12 lines of size 3 on the right.
pub fn affine_plane_3() -> BipartiteGraph {
    let mut lines: Vec<Vec<usize>> = Vec::new();
    // direction (dx, dy) through base point b
    for (dx, dy) in [(0, 1), (1, 0), (1, 1), (1, 2)] {
        let mut seen = [false; 9];
        for b in 0..9 {
            if seen[b] {
                continue;
            }
            let (x0, y0) = (b % 3, b / 3);
            let line: Vec<usize> = (0..3).map(|t| (x0 + t * dx) % 3 + 3 * ((y0 + t * dy) % 3)).collect();
            line.iter().for_each(|&p| seen[p] = true);
            lines.push(line);
        }
    }
    let edges: Vec<(usize, usize)> = lines.iter().enumerate().flat_map(|(l, pts)| pts.iter().map(move |&p| (p, l))).collect();
    BipartiteGraph::from_edges(9, 12, &edges)
}

/// Point-line incidence graph of the projective plane over `F_q` for a
/// prime `q`: `q² + q + 1` points and lines, `(q + 1)`-regular, no 4-cycles.
pub fn projective_plane(q: usize) -> BipartiteGraph {
    assert!(q >= 2 && (2..q).all(|d| q % d != 0), "q must be prime");
    // normalized nonzero vectors of F_q^3: first nonzero coordinate is 1
    let pts: Vec<[usize; 3]> = (0..q * q * q)
        .map(|x| [x % q, x / q % q, x / (q * q)])
        .filter(|v| v.iter().find(|&&c| c != 0) == Some(&1))
        .collect();
    let edges: Vec<(usize, usize)> = (0..pts.len())
        .flat_map(|p| (0..pts.len()).map(move |l| (p, l)))
        .filter(|&(p, l)| (0..3).map(|j| pts[p][j] * pts[l][j]).sum::<usize>() % q == 0)
        .collect();
    BipartiteGraph::from_edges(pts.len(), pts.len(), &edges)
}

/// Array graph with `rows × cols` blocks of `l × l` circulant permutations:
/// left vertex `(c, j)` meets right vertex `(r, j + r·c mod l)`. Degrees are
/// `rows` on the left and `cols` on the right; no 4-cycles once `l` is a
/// prime exceeding both `rows - 1` and `cols - 1`.
pub fn array_graph(rows: usize, cols: usize, l: usize) -> BipartiteGraph {
    let edges: Vec<(usize, usize)> = (0..cols)
        .flat_map(|c| (0..l).flat_map(move |j| (0..rows).map(move |r| (c * l + j, r * l + (j + r * c) % l))))
        .collect();
    BipartiteGraph::from_edges(cols * l, rows * l, &edges)
}

/// Decoder test bed: a complex, a level, and its CSS code.
pub struct DecodeBed {
    pub complex: Arc<CochainComplex>,
    pub level: usize,
    pub code: CssCode,
    pub cfg: DecoderConfig,
}

impl DecodeBed {
    pub fn new(complex: Arc<CochainComplex>, level: usize) -> Result<Self> {
        if level >= complex.dim() {
            return Err(ExperimentError::TopLevel { level, dim: complex.dim() });
        }
        let code = CssCode::new(complex.clone(), level).map_err(GadgetError::from)?;
        Ok(DecodeBed { complex, level, code, cfg: DecoderConfig::default() })
    }

    pub fn n(&self) -> usize {
        self.complex.size(self.level)
    }

    /// Decodes `δ(e) + f`; success when the residual error `e + a` is a
    /// coboundary.
    pub fn decode(&self, e: &BitVector, f: Option<&BitVector>) -> Result<bool> {
        let mut s = self.complex.coboundary(self.level, e);
        if let Some(f) = f {
            s.xor_assign(f);
        }
        let a = ss_flip_syn(&self.complex, self.level, &s, &self.cfg)?.correction;
        Ok(self.code.logical_class_trivial(&e.xor(&a), Pauli::X))
    }

    /// Noisy round on `δ(e) + f`, then a clean round on what is left.
    pub fn decode_two_rounds(&self, e: &BitVector, f: &BitVector) -> Result<bool> {
        let s = self.complex.coboundary(self.level, e).xor(f);
        let a = ss_flip_syn(&self.complex, self.level, &s, &self.cfg)?.correction;
        let rest = e.xor(&a);
        self.decode(&rest, None)
    }
}

/// Exhaustive low-weight decoding summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Exhaustive {
    pub max_weight: usize,
    pub tried: u64,
    pub failures: u64,
    pub first_failure: Option<Vec<usize>>,
}

/// Decodes every error of weight `1..=max_weight` (at most 3).
pub fn exhaustive_decode(bed: &DecodeBed, max_weight: usize) -> Result<Exhaustive> {
    assert!(max_weight <= 3, "exhaustive sweep limited to weight 3");
    let n = bed.n();
    let results: Vec<(u64, u64, Option<Vec<usize>>)> = (0..n)
        .into_par_iter()
        .map(|a| -> Result<(u64, u64, Option<Vec<usize>>)> {
            let mut sets = vec![vec![a]];
            if max_weight >= 2 {
                for b in a + 1..n {
                    sets.push(vec![a, b]);
                    if max_weight >= 3 {
                        sets.extend((b + 1..n).map(|c| vec![a, b, c]));
                    }
                }
            }
            let (mut tried, mut fail, mut first) = (0, 0, None);
            for s in sets {
                tried += 1;
                if !bed.decode(&BitVector::from_indices(n, s.iter().copied()), None)? {
                    fail += 1;
                    first.get_or_insert(s);
                }
            }
            Ok((tried, fail, first))
        })
        .collect::<Result<_>>()?;
    Ok(Exhaustive {
        max_weight,
        tried: results.iter().map(|r| r.0).sum(),
        failures: results.iter().map(|r| r.1).sum(),
        first_failure: results.into_iter().find_map(|r| r.2),
    })
}

/// Successes over random trials at one error weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightRow {
    pub weight: usize,
    pub trials: u64,
    pub successes: u64,
    pub seed: u64,
}

impl WeightRow {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Random errors of weight exactly `w`, with syndrome noise of weight
/// `⌊|δ(e)| · noise⌋` when `noise > 0` followed by a clean round.
pub fn random_decode(bed: &DecodeBed, w: usize, noise: f64, trials: u64, seed: u64) -> Result<WeightRow> {
    let n = bed.n();
    let m = bed.complex.size(bed.level + 1);
    let ok: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let e = BitVector::from_indices(n, random_subset(&mut rng, n, w.min(n)));
            if noise > 0.0 {
                let budget = (bed.complex.coboundary(bed.level, &e).weight() as f64 * noise).floor() as usize;
                let fw = if budget == 0 { 0 } else { rng.gen_range(0..=budget) };
                let f = BitVector::from_indices(m, random_subset(&mut rng, m, fw));
                bed.decode_two_rounds(&e, &f)
            } else {
                bed.decode(&e, None)
            }
        })
        .collect::<Result<_>>()?;
    Ok(WeightRow { weight: w, trials, successes: ok.iter().filter(|&&b| b).count() as u64, seed })
}

/// Pilot sweep: raises the weight from 1 while the success rate stays at
/// least `target`. Returns the last passing weight `t*` and every row.
pub fn pilot_radius(bed: &DecodeBed, max_w: usize, trials: u64, target: f64, seed: u64) -> Result<(usize, Vec<WeightRow>)> {
    let mut rows = Vec::new();
    let mut t_star = 0;
    for w in 1..=max_w {
        let row = random_decode(bed, w, 0.0, trials, seed.wrapping_add(w as u64))?;
        let pass = row.rate() >= target;
        rows.push(row);
        if !pass {
            break;
        }
        t_star = w;
    }
    Ok((t_star, rows))
}

/// Footprint audits over `runs` random decoder runs with error weight up to
/// `max_w` and syndrome noise up to a tenth of the syndrome weight. Each run
/// contributes one syndrome-decoder audit and, when the level allows it, one
/// error-decoder audit.
pub fn footprint_runs(bed: &DecodeBed, max_w: usize, runs: u64, seed: u64) -> Result<Vec<(AuditKind, DensityAudit)>> {
    let (cx, i) = (&bed.complex, bed.level);
    let w = cx.locality();
    let g_syn = cx.connectivity_graph(&[i, i + 1]);
    let g_err = (i >= 1).then(|| cx.connectivity_graph(&[i - 1, i, i + 1]));
    let n = bed.n();
    let m = cx.size(i + 1);
    let out: Vec<Vec<(AuditKind, DensityAudit)>> = (0..runs)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let wt = rng.gen_range(1..=max_w.max(1)).min(n);
            let e = BitVector::from_indices(n, random_subset(&mut rng, n, wt));
            let fw = cx.coboundary(i, &e).weight() / 10;
            let f = BitVector::from_indices(m, random_subset(&mut rng, m, fw));
            let res = ss_flip_syn(cx, i, &cx.coboundary(i, &e).xor(&f), &bed.cfg)?;
            let mut seeds = Footprint::default();
            seeds.add(i, &e);
            seeds.add(i + 1, &f);
            let mut fp = res.footprint.clone();
            fp.add(i, &e);
            fp.add(i + 1, &f);
            let mut audits = vec![(AuditKind::Syn, footprint_density_audit(&fp, &seeds, &g_syn, w, AuditKind::Syn))];
            if let Some(g) = &g_err {
                let (fp, _) = match ss_flip_err(cx, i, &e, &bed.cfg)? {
                    Ok(r) => (r.footprint, true),
                    Err(fail) => (fail.footprint, false),
                };
                let mut seeds = Footprint::default();
                seeds.add(i, &e);
                let mut fp = fp;
                fp.add(i, &e);
                audits.push((AuditKind::Err, footprint_density_audit(&fp, &seeds, g, w, AuditKind::Err)));
            }
            Ok(audits)
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// One memory-experiment point.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryPoint {
    pub p: f64,
    pub n: usize,
    pub k: usize,
    pub rounds: usize,
    pub shots: u64,
    pub failures: u64,
    pub heralds: u64,
    pub seed: u64,
}

impl MemoryPoint {
    pub fn rate(&self) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.failures as f64 / self.shots as f64
        }
    }

    /// 95% Wilson interval of the failure rate.
    pub fn ci(&self) -> (f64, f64) {
        wilson(self.failures, self.shots, Z95)
    }
}

/// Prebuilt Z-memory circuit: reset to logical |0…0⟩, `rounds` rounds of
/// Z-check extraction with flip correction, transversal readout and decode.
pub struct MemoryBench {
    pub code: Arc<DecoratedCode>,
    pub rounds: usize,
    circuit: crate::circuits::Circuit,
    register: usize,
    reference: Reference,
}

impl MemoryBench {
    pub fn new(code: Arc<DecoratedCode>, rounds: usize) -> Result<Self> {
        let mut ctx = Ctx::new();
        let spec = z_memory(&mut ctx, &code, rounds)?;
        let reference = Reference::new(&spec.circuit, 0)?;
        Ok(MemoryBench { code, rounds, register: spec.registers[0], circuit: spec.circuit, reference })
    }

    pub fn depth(&self) -> usize {
        self.circuit.depth()
    }

    pub fn qubits(&self) -> usize {
        self.circuit.qubit_count()
    }

    /// A shot fails when any logical bit reads 1. Heralds (readouts off the
    /// cocycles) are counted separately.
    pub fn run(&self, p: f64, shots: u64, seed: u64) -> Result<MemoryPoint> {
        let model = NoiseModel::depolarizing(p)?;
        let res: Vec<(bool, bool)> = (0..shots)
            .into_par_iter()
            .map(|t| {
                let s = trial_rng(seed, t).gen::<u64>();
                let fault = sample_fault(&model, &self.circuit, s);
                let run = frame_run(&self.circuit, &fault, &self.reference, s)?;
                let flipped = run.registers[self.register] != self.reference.registers[self.register];
                Ok((flipped, run.herald))
            })
            .collect::<Result<_>>()?;
        Ok(MemoryPoint {
            p,
            n: self.code.n(),
            k: self.code.k(),
            rounds: self.rounds,
            shots,
            failures: res.iter().filter(|r| r.0).count() as u64,
            heralds: res.iter().filter(|r| r.1).count() as u64,
            seed,
        })
    }
}

/// Level-1 code of a random hypergraph product, as a decorated code.
pub fn hgp_code(n_left: usize, deg_left: usize, deg_right: usize, seed: u64) -> Result<Arc<DecoratedCode>> {
    let p = random_hgp(n_left, deg_left, deg_right, seed)?;
    Ok(Arc::new(DecoratedCode::new(p, 1)?))
}

/// Whether `a`'s failure rate is at most `b`'s at the interval level: the
/// lower end of `a`'s interval does not exceed the upper end of `b`'s.
pub fn not_worse(a: &MemoryPoint, b: &MemoryPoint) -> bool {
    a.ci().0 <= b.ci().1
}

/// Whether `a` is strictly better than `b`: intervals separate.
pub fn strictly_better(a: &MemoryPoint, b: &MemoryPoint) -> bool {
    a.ci().1 < b.ci().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::BipartiteGraph;

    fn toric_bed(m: usize) -> DecodeBed {
        let g = Arc::new(BipartiteGraph::cycle(m));
        DecodeBed::new(hgp(g).complex.clone(), 1).unwrap()
    }

    #[test]
    fn affine_plane_is_four_cycle_free() {
        let g = affine_plane_3();
        assert_eq!(g.biregular_degrees(), Some((4, 3)));
        assert!(four_cycle_free(&g));
        assert!(!four_cycle_free(&BipartiteGraph::complete(2, 2)));
        for (q, n) in [(2, 7), (3, 13), (5, 31)] {
            let g = projective_plane(q);
            assert_eq!((g.n_left(), g.biregular_degrees()), (n, Some((q + 1, q + 1))));
            assert!(four_cycle_free(&g));
        }
    }

    #[test]
    fn array_graph_girth() {
        for l in [5, 7] {
            let g = array_graph(4, 4, l);
            assert_eq!(g.side_len(Side::Left), 4 * l);
            assert!((0..4 * l).all(|v| g.adj(Side::Left, v).len() == 4 && g.adj(Side::Right, v).len() == 4));
            assert!(four_cycle_free(&g));
        }
        assert!(!four_cycle_free(&array_graph(4, 4, 3)));
    }

    #[test]
    fn weight_zero_always_succeeds() {
        let bed = toric_bed(5);
        let row = random_decode(&bed, 0, 0.0, 20, 1).unwrap();
        assert_eq!(row.successes, 20);
    }

    #[test]
    fn single_errors_corrected_on_toric() {
        let bed = toric_bed(5);
        let ex = exhaustive_decode(&bed, 1).unwrap();
        assert_eq!((ex.tried, ex.failures), (50, 0));
    }

    #[test]
    fn trials_are_reproducible() {
        let bed = toric_bed(6);
        let a = random_decode(&bed, 3, 0.1, 64, 7).unwrap();
        let b = random_decode(&bed, 3, 0.1, 64, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn top_level_rejected() {
        let g = Arc::new(BipartiteGraph::cycle(4));
        assert!(matches!(DecodeBed::new(hgp(g).complex.clone(), 2), Err(ExperimentError::TopLevel { .. })));
    }

    #[test]
    fn memory_noiseless_has_no_failures() {
        let code = hgp_code(6, 2, 3, 3).unwrap();
        let bench = MemoryBench::new(code.clone(), 2).unwrap();
        let pt = bench.run(0.0, 50, 5).unwrap();
        assert_eq!((pt.failures, pt.heralds), (0, 0));
        assert_eq!(bench.depth(), 1 + 2 * (code.w + 5) + 2);
    }

    #[test]
    fn memory_high_noise_fails_often() {
        let code = hgp_code(6, 2, 3, 3).unwrap();
        let bench = MemoryBench::new(code, 1).unwrap();
        let pt = bench.run(0.3, 200, 5).unwrap();
        assert!(pt.rate() > 0.5, "{pt:?}");
    }

    #[test]
    fn footprint_runs_pass_on_small_hgp() {
        let p = random_hgp(9, 4, 3, 5).unwrap();
        let bed = DecodeBed::new(p.complex.clone(), 1).unwrap();
        let audits = footprint_runs(&bed, 3, 40, 2).unwrap();
        assert!(audits.iter().all(|(_, a)| a.pass));
    }
}
