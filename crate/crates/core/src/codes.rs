//! CSS codes at a level of a cochain complex, with encoding maps built from
//! information sets of the factor graphs.
//!
//! Conventions: X stabilizers are `X^b` for `b ∈ B^i = im δ_{i-1}`, Z
//! stabilizers are `Z^h` for `h ∈ B_i = im ∂_{i+1}`. Logical X operators are
//! cocycles `Enc(x)`; logical Z operators are cycles paired against them.

use std::sync::Arc;

use thiserror::Error;

use crate::complex::{CochainComplex, Factor, Label, ProductComplex};
use crate::f2la::{BitMatrix, BitVector, Solver, Span};

#[derive(Debug, Error, PartialEq)]
pub enum CodesError {
    #[error("level {level} outside 0..={dim}")]
    BadLevel { level: usize, dim: usize },
    #[error("{which} is not an information set (need {expected} coordinates, rank {rank})")]
    NotInformationSet { which: &'static str, expected: usize, rank: usize },
    #[error("encoding invariant failed: {0}")]
    Invariant(String),
    #[error("restricted encoding disagrees on logical {label}")]
    RestrictionMismatch { label: String },
}

/// Which Pauli type a vector describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Z,
}

impl Pauli {
    pub fn other(self) -> Pauli {
        match self {
            Pauli::X => Pauli::Z,
            Pauli::Z => Pauli::X,
        }
    }
}

/// The CSS code with qubits `C^i`.
#[derive(Clone)]
pub struct CssCode {
    pub complex: Arc<CochainComplex>,
    pub level: usize,
    k: usize,
    cobound: Span,
    bound: Span,
}

impl std::fmt::Debug for CssCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CssCode(n={}, k={}, level={})", self.n(), self.k, self.level)
    }
}

impl CssCode {
    pub fn new(complex: Arc<CochainComplex>, level: usize) -> Result<Self, CodesError> {
        if level > complex.dim() {
            return Err(CodesError::BadLevel { level, dim: complex.dim() });
        }
        let n = complex.size(level);
        let k = complex.cohomology_dim(level);
        let cobound = Span::new(n, &complex.coboundary_basis(level));
        let bound = Span::new(n, &complex.boundary_basis(level));
        Ok(CssCode { complex, level, k, cobound, bound })
    }

    pub fn n(&self) -> usize {
        self.complex.size(self.level)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether one check side is empty (level 0 or r).
    pub fn is_boundary_level(&self) -> bool {
        self.level == 0 || self.level == self.complex.dim()
    }

    /// Z-check matrix `δ_i`: rows indexed by `C^{i+1}`.
    pub fn z_checks(&self) -> BitMatrix {
        if self.level < self.complex.dim() {
            self.complex.delta(self.level).clone()
        } else {
            BitMatrix::zeros(0, self.n())
        }
    }

    /// X-check matrix `∂_i`: rows indexed by `C^{i-1}`.
    pub fn x_checks(&self) -> BitMatrix {
        if self.level > 0 {
            self.complex.delta(self.level - 1).transpose()
        } else {
            BitMatrix::zeros(0, self.n())
        }
    }

    /// Syndrome of an X error, in `C^{i+1}`.
    pub fn syndrome_of_x(&self, e: &BitVector) -> BitVector {
        self.complex.coboundary(self.level, e)
    }

    /// Syndrome of a Z error, in `C^{i-1}`.
    pub fn syndrome_of_z(&self, e: &BitVector) -> BitVector {
        self.complex.boundary(self.level, e)
    }

    /// Whether `v` acts trivially on the code space: `v ∈ B^i` for an X-type
    /// vector, `v ∈ B_i` for a Z-type one.
    pub fn logical_class_trivial(&self, v: &BitVector, side: Pauli) -> bool {
        match side {
            Pauli::X => self.cobound.contains(v),
            Pauli::Z => self.bound.contains(v),
        }
    }

    pub fn is_stabilizer(&self, v: &BitVector, side: Pauli) -> bool {
        self.logical_class_trivial(v, side)
    }
}

/// Encoding map of a single 1-dimensional complex.
#[derive(Clone, Debug)]
pub struct Enc1d {
    /// `M^0` as level-0 cell indices.
    pub m0: Vec<usize>,
    /// Kernel codeword lifting `e_m` for each `m ∈ M^0`.
    pub lifts: Vec<BitVector>,
    /// `M^1` as level-1 cell indices.
    pub m1: Vec<usize>,
}

impl Enc1d {
    /// Generator at factor level `level` for the `j`-th information cell.
    pub fn generator(&self, level: usize, j: usize, len: usize) -> BitVector {
        if level == 0 {
            self.lifts[j].clone()
        } else {
            BitVector::unit(len, self.m1[j])
        }
    }

    pub fn info(&self, level: usize) -> &[usize] {
        if level == 0 {
            &self.m0
        } else {
            &self.m1
        }
    }
}

/// Builds `Enc^0` and `Enc^1` of a 1-dimensional complex. `m0` must be an
/// information set of `ker δ` and `m1` one of `ker ∂`.
pub fn enc_1d(c: &CochainComplex, m0: &[usize], m1: &[usize]) -> Result<Enc1d, CodesError> {
    assert_eq!(c.dim(), 1, "enc_1d takes a 1-dimensional complex");
    let d = c.delta(0);
    let ker = d.kernel_basis();
    let kmat = BitMatrix::from_rows(c.size(0), &ker);
    let restricted = kmat.select_cols(m0);
    let rank = restricted.rank();
    if m0.len() != ker.len() || rank != ker.len() {
        return Err(CodesError::NotInformationSet { which: "M^0", expected: ker.len(), rank });
    }
    // codeword = Σ_j a_j ker_j with (Σ a_j ker_j)|_{M0} = e_m, i.e. restrictedᵀ a = e_m
    let sys = restricted.transpose();
    let solver = Solver::new(&sys);
    let lifts = (0..m0.len())
        .map(|j| {
            let a = solver.solve(&BitVector::unit(m0.len(), j)).expect("square invertible system");
            kmat.tmul_vec(&a)
        })
        .collect();
    let coker = d.transpose().kernel_basis();
    let cmat = BitMatrix::from_rows(c.size(1), &coker);
    let rank1 = cmat.select_cols(m1).rank();
    if m1.len() != coker.len() || rank1 != coker.len() {
        return Err(CodesError::NotInformationSet { which: "M^1", expected: coker.len(), rank: rank1 });
    }
    Ok(Enc1d { m0: m0.to_vec(), lifts, m1: m1.to_vec() })
}

/// Encoding map of a factor, using its stored information sets.
pub fn enc_factor(f: &Factor) -> Result<Enc1d, CodesError> {
    let c = f.complex();
    let idx = |level: usize| -> Vec<usize> {
        f.info_set(level).iter().map(|cell| c.index_of(level, &[*cell]).expect("info cell present")).collect()
    };
    enc_1d(&c, &idx(0), &idx(1))
}

/// `Enc : F2^k → Z^i(C)` with logical qubits labeled by cells of `C^i`.
#[derive(Clone)]
pub struct EncodingMap {
    pub level: usize,
    n: usize,
    labels: Vec<Label>,
    cells: Vec<usize>,
    gens: Vec<BitVector>,
    /// Solver for `[Enc | δ_{i-1}] (x, c) = z`.
    decoder: Arc<Solver>,
}

impl std::fmt::Debug for EncodingMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EncodingMap(level={}, k={})", self.level, self.k())
    }
}

impl EncodingMap {
    /// Wraps generator columns after checking they are cocycles independent
    /// modulo coboundaries.
    pub fn from_generators(
        c: &CochainComplex,
        level: usize,
        labels: Vec<Label>,
        cells: Vec<usize>,
        gens: Vec<BitVector>,
    ) -> Result<Self, CodesError> {
        let n = c.size(level);
        for (m, g) in gens.iter().enumerate() {
            if level < c.dim() && !c.coboundary(level, g).is_zero() {
                return Err(CodesError::Invariant(format!("generator {m} is not a cocycle")));
            }
        }
        let mut cols = gens.clone();
        if level > 0 {
            let d = c.delta(level - 1);
            cols.extend((0..d.cols()).map(|j| d.col_vec(j)));
        }
        let m = BitMatrix::from_cols(n, &cols);
        let decoder = Solver::new(&m);
        let expect = gens.len() + c.delta_rank(level as isize - 1);
        if decoder.rank() != expect {
            return Err(CodesError::Invariant(format!(
                "generators dependent modulo coboundaries (rank {} vs {expect})",
                decoder.rank()
            )));
        }
        Ok(EncodingMap { level, n, labels, cells, gens, decoder: Arc::new(decoder) })
    }

    pub fn k(&self) -> usize {
        self.gens.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Cell index in `C^i` of each logical label.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn position(&self, label: &[crate::complex::Cell1]) -> Option<usize> {
        self.labels.iter().position(|l| l.as_slice() == label)
    }

    pub fn generator(&self, m: usize) -> &BitVector {
        &self.gens[m]
    }

    pub fn generators(&self) -> &[BitVector] {
        &self.gens
    }

    pub fn matrix(&self) -> BitMatrix {
        BitMatrix::from_cols(self.n, &self.gens)
    }

    pub fn encode(&self, x: &BitVector) -> BitVector {
        assert_eq!(x.len(), self.k());
        let mut out = BitVector::zeros(self.n);
        for m in x.iter_ones() {
            out.xor_assign(&self.gens[m]);
        }
        out
    }

    /// `x` with `z + Enc(x) ∈ B^i`, or `None` when `z` is not a cocycle.
    pub fn decode(&self, z: &BitVector) -> Option<BitVector> {
        let sol = self.decoder.solve(z)?;
        Some(sol.slice(0, self.k()))
    }

    /// `(x, c)` with `z = Enc(x) + δ_{i-1}(c)`, or `None` when `z` is not a
    /// cocycle.
    pub fn decode_full(&self, z: &BitVector) -> Option<(BitVector, BitVector)> {
        let sol = self.decoder.solve(z)?;
        let k = self.k();
        Some((sol.slice(0, k), sol.slice(k, sol.len() - k)))
    }
}

/// Alias kept for call sites that read better with the operation name.
pub fn logical_decode(enc: &EncodingMap, z: &BitVector) -> Option<BitVector> {
    enc.decode(z)
}

/// Product encoding at level `i`: logical labels run over splits
/// `(j_1..j_r)` with `Σ j_h = i` and products of factor information sets,
/// sorted by cell index.
pub fn enc_product(p: &ProductComplex, i: usize) -> Result<EncodingMap, CodesError> {
    let c = &p.complex;
    let r = p.dim();
    if i > r {
        return Err(CodesError::BadLevel { level: i, dim: r });
    }
    let fcs: Vec<CochainComplex> = p.factors.iter().map(Factor::complex).collect();
    let encs: Vec<Enc1d> = p.factors.iter().map(enc_factor).collect::<Result<_, _>>()?;
    let mut entries: Vec<(usize, Label, BitVector)> = Vec::new();
    for split in 0u32..(1 << r) {
        if split.count_ones() as usize != i {
            continue;
        }
        let lv: Vec<usize> = (0..r).map(|h| ((split >> (r - 1 - h)) & 1) as usize).collect();
        let infos: Vec<&[usize]> = (0..r).map(|h| encs[h].info(lv[h])).collect();
        if infos.iter().any(|s| s.is_empty()) {
            continue;
        }
        let info_lens: Vec<usize> = infos.iter().map(|s| s.len()).collect();
        let mut pick = vec![0usize; r];
        loop {
            let label: Label = (0..r).map(|h| fcs[h].label(lv[h], infos[h][pick[h]])[0]).collect();
            let supports: Vec<Vec<usize>> = (0..r)
                .map(|h| encs[h].generator(lv[h], pick[h], fcs[h].size(lv[h])).support())
                .collect();
            let mut gen = BitVector::zeros(c.size(i));
            let supp_lens: Vec<usize> = supports.iter().map(Vec::len).collect();
            let mut sp = vec![0usize; r];
            let mut buf: Label = Vec::with_capacity(r);
            loop {
                buf.clear();
                buf.extend((0..r).map(|h| fcs[h].label(lv[h], supports[h][sp[h]])[0]));
                gen.toggle(c.index_of(i, &buf).expect("product cell present"));
                if !advance(&mut sp, &supp_lens) {
                    break;
                }
            }
            let cell = c.index_of(i, &label).expect("logical label is a cell");
            entries.push((cell, label, gen));
            if !advance(&mut pick, &info_lens) {
                break;
            }
        }
    }
    entries.sort_by_key(|e| e.0);
    let cells = entries.iter().map(|e| e.0).collect();
    let labels = entries.iter().map(|e| e.1.clone()).collect();
    let gens = entries.into_iter().map(|e| e.2).collect();
    EncodingMap::from_generators(c, i, labels, cells, gens)
}

/// Odometer step over `0..lens[0] × … × 0..lens[r-1]`; false after the last tuple.
fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for h in (0..idx.len()).rev() {
        idx[h] += 1;
        if idx[h] < lens[h] {
            return true;
        }
        idx[h] = 0;
    }
    false
}

/// Encoding of the restriction of `p` along factor `h` by `l`, after checking
/// that `Enc(x)` restricted to the surviving cells equals `Enc_L̄` applied to
/// `x` restricted to the surviving logical labels.
pub fn enc_restricted(
    p: &ProductComplex,
    enc: &EncodingMap,
    restricted: &ProductComplex,
) -> Result<EncodingMap, CodesError> {
    let enc_l = enc_product(restricted, enc.level)?;
    check_restriction(p, enc, restricted, &enc_l)?;
    Ok(enc_l)
}

/// Checks the restriction identity on every logical basis vector; linearity
/// extends it to all `x`.
pub fn check_restriction(
    p: &ProductComplex,
    enc: &EncodingMap,
    restricted: &ProductComplex,
    enc_l: &EncodingMap,
) -> Result<(), CodesError> {
    let i = enc.level;
    let rc = &restricted.complex;
    let keep: Vec<Option<usize>> =
        (0..rc.size(i)).map(|c| p.complex.index_of(i, rc.label(i, c))).collect();
    for m in 0..enc.k() {
        let g = enc.generator(m);
        let mut lhs = BitVector::zeros(rc.size(i));
        for (c, src) in keep.iter().enumerate() {
            if let Some(s) = src {
                lhs.set(c, g.get(*s));
            }
        }
        let rhs = match enc_l.position(&enc.labels()[m]) {
            Some(ml) => enc_l.generator(ml).clone(),
            None => BitVector::zeros(rc.size(i)),
        };
        if lhs != rhs {
            return Err(CodesError::RestrictionMismatch { label: crate::complex::label_string(&enc.labels()[m]) });
        }
    }
    Ok(())
}

/// Encoding of the dual complex at the complementary level. Its generators
/// are Z-logical representatives paired with `enc`: `Enc(e_m)·Enc*(e_m') = [m = m']`.
pub fn dual_encoding(p: &ProductComplex, i: usize) -> Result<EncodingMap, CodesError> {
    enc_product(&p.dual(), p.dim() - i)
}

/// Whether `Enc(x)·Enc*(x') = x·x'` for all basis pairs.
pub fn pairing_holds(enc: &EncodingMap, dual: &EncodingMap) -> bool {
    enc.k() == dual.k()
        && enc.labels() == dual.labels()
        && (0..enc.k()).all(|a| (0..dual.k()).all(|b| enc.generator(a).dot(dual.generator(b)) == (a == b)))
}

/// Z-logical representatives `y_m ∈ ker ∂_i` with `y_m·Enc(e_m') = [m = m']`,
/// found by linear solve. Used where no dual product structure is at hand.
pub fn solve_dual_logicals(c: &CochainComplex, enc: &EncodingMap) -> Vec<BitVector> {
    let i = enc.level;
    let n = c.size(i);
    let mut rows: Vec<BitVector> = enc.generators().to_vec();
    if i > 0 {
        let d = c.delta(i - 1);
        rows.extend((0..d.cols()).map(|j| d.col_vec(j)));
    }
    let m = BitMatrix::from_rows(n, &rows);
    let solver = Solver::new(&m);
    (0..enc.k())
        .map(|j| solver.solve(&BitVector::unit(rows.len(), j)).expect("logicals independent of stabilizers"))
        .collect()
}

/// Summary fields for code reports.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeSummary {
    pub n: usize,
    pub k: usize,
    pub level: usize,
    pub r: usize,
    pub locality: usize,
    pub z_check_weight: usize,
    pub x_check_weight: usize,
    pub logical_labels: Vec<String>,
}

pub fn summarize(code: &CssCode, enc: &EncodingMap) -> CodeSummary {
    let maxw = |m: &BitMatrix| (0..m.rows()).map(|r| m.row_weight(r)).max().unwrap_or(0);
    CodeSummary {
        n: code.n(),
        k: code.k(),
        level: code.level,
        r: code.complex.dim(),
        locality: code.complex.locality(),
        z_check_weight: maxw(&code.z_checks()),
        x_check_weight: maxw(&code.x_checks()),
        logical_labels: enc.labels().iter().map(|l| crate::complex::label_string(l)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::tensor;
    use crate::expander::{build_extendable_family, gen_biregular, BipartiteGraph};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::{Rng, SeedableRng};

    fn cyc(n: usize) -> Arc<BipartiteGraph> {
        Arc::new(BipartiteGraph::cycle(n))
    }

    fn toric(m: usize) -> ProductComplex {
        ProductComplex::new(vec![Factor::cochain(cyc(m)), Factor::chain(cyc(m))])
    }

    #[test]
    fn css_examples() {
        let p = ProductComplex::new(vec![Factor::cochain(cyc(3)), Factor::cochain(cyc(3))]);
        let code = CssCode::new(p.complex.clone(), 1).unwrap();
        assert_eq!((code.n(), code.k()), (18, 2));
        let e = ProductComplex::new(vec![
            Factor::cochain(Arc::new(BipartiteGraph::complete(1, 1))),
            Factor::cochain(Arc::new(BipartiteGraph::complete(1, 1))),
        ]);
        let code = CssCode::new(e.complex.clone(), 1).unwrap();
        assert_eq!((code.n(), code.k()), (2, 0));
        let g = gen_biregular(6, 4, 2, 3, 3).unwrap();
        let p = ProductComplex::new(vec![Factor::cochain(Arc::new(g.clone())), Factor::chain(Arc::new(g))]);
        let code = CssCode::new(p.complex.clone(), 1).unwrap();
        assert!(code.z_checks().mul(&code.x_checks().transpose()).is_zero());
    }

    #[test]
    fn enc_1d_examples() {
        let c = crate::complex::complex_from_graph(&BipartiteGraph::cycle(4));
        let e = enc_1d(&c, &[1], &[0]).unwrap();
        assert_eq!(e.lifts[0], BitVector::ones(4));
        let g1 = e.generator(1, 0, 4);
        assert_eq!(g1.select(&e.m1), BitVector::ones(1));
        assert_eq!(g1.weight(), 1);
        assert!(matches!(enc_1d(&c, &[0, 1], &[0]), Err(CodesError::NotInformationSet { .. })));
    }

    #[test]
    fn product_labels_on_two_cycles() {
        let p = ProductComplex::new(vec![Factor::cochain(cyc(3)), Factor::cochain(cyc(3))]);
        let enc = enc_product(&p, 1).unwrap();
        assert_eq!(enc.k(), 2);
        let sides: Vec<_> = enc.labels().iter().map(|l| (l[0].side, l[1].side)).collect();
        use crate::expander::Side::*;
        assert_eq!(sides, vec![(Left, Right), (Right, Left)]);
        for m in 0..2 {
            assert!(p.complex.coboundary(1, enc.generator(m)).is_zero());
        }
    }

    #[test]
    fn decode_examples() {
        let p = toric(4);
        let code = CssCode::new(p.complex.clone(), 1).unwrap();
        let enc = enc_product(&p, 1).unwrap();
        for x in 0..4u64 {
            let xv = BitVector::from_u64(2, x);
            let z = enc.encode(&xv);
            assert_eq!(enc.decode(&z), Some(xv.clone()));
            let shifted = z.xor(&p.complex.coboundary(0, &BitVector::unit(p.complex.size(0), 5)));
            assert_eq!(logical_decode(&enc, &shifted), Some(xv));
        }
        let bad = BitVector::unit(code.n(), 0);
        assert_eq!(enc.decode(&bad), None);
        assert!(code.logical_class_trivial(&BitVector::zeros(code.n()), Pauli::X));
        assert!(code.logical_class_trivial(&p.complex.coboundary(0, &BitVector::unit(16, 3)), Pauli::X));
        assert!(!code.logical_class_trivial(enc.generator(0), Pauli::X));
    }

    #[test]
    fn restriction_identity_on_small_instances() {
        let g = Arc::new(gen_biregular(4, 6, 3, 2, 11).unwrap());
        let (l, _) = build_extendable_family(&g).unwrap();
        assert!(!l.is_empty());
        let p = ProductComplex::new(vec![Factor::cochain(cyc(3)), Factor::cochain(g.clone())]);
        for i in 0..=2 {
            let enc = enc_product(&p, i).unwrap();
            let same = enc_restricted(&p, &enc, &p.restrict(1, &[]).unwrap()).unwrap();
            assert_eq!(same.generators(), enc.generators());
            let rp = p.restrict(1, &l).unwrap();
            let enc_l = enc_restricted(&p, &enc, &rp).unwrap();
            let dropped = enc.labels().iter().filter(|lab| lab[1].side == crate::expander::Side::Right && l.contains(&(lab[1].idx as usize))).count();
            assert_eq!(enc_l.k() + dropped, enc.k());
        }
    }

    #[test]
    fn dual_encoding_pairs_with_primal() {
        let g = Arc::new(gen_biregular(6, 4, 2, 3, 5).unwrap());
        let p = ProductComplex::new(vec![Factor::cochain(g.clone()), Factor::chain(cyc(3)), Factor::cochain(g)]);
        for i in 0..=3 {
            let enc = enc_product(&p, i).unwrap();
            let dual = dual_encoding(&p, i).unwrap();
            assert!(pairing_holds(&enc, &dual), "level {i}");
            let solved = solve_dual_logicals(&p.complex, &enc);
            for (a, y) in solved.iter().enumerate() {
                assert!(p.complex.boundary(i, y).is_zero());
                for b in 0..enc.k() {
                    assert_eq!(y.dot(enc.generator(b)), a == b);
                }
            }
        }
    }

    #[test]
    fn stars_instance_k_audit() {
        // R|V_R| logical cells per cochain direction at the top of the mask
        let g = Arc::new(BipartiteGraph::stars(2, 2));
        let p = ProductComplex::new(vec![Factor::cochain(g.clone()), Factor::cochain(g.clone()), Factor::chain(g.clone())]);
        let enc = enc_product(&p, 2).unwrap();
        let (l, _) = build_extendable_family(&g).unwrap();
        let mask = enc
            .labels()
            .iter()
            .filter(|lab| lab.iter().all(|c| c.side == crate::expander::Side::Right && l.contains(&(c.idx as usize))))
            .count();
        assert!(mask >= l.len().pow(3));
        assert_eq!(enc.k(), p.complex.cohomology_dim(2));
    }

    fn random_factor(rng: &mut impl Rng) -> Factor {
        let nl = rng.gen_range(1..=5);
        let nr = rng.gen_range(1..=5);
        let edges: Vec<(usize, usize)> =
            (0..nl).flat_map(|a| (0..nr).map(move |b| (a, b))).filter(|_| rng.gen_bool(0.45)).collect();
        let g = Arc::new(BipartiteGraph::from_edges(nl, nr, &edges));
        if rng.gen() {
            Factor::cochain(g)
        } else {
            Factor::chain(g)
        }
    }

    proptest! {
        #[test]
        fn encodings_are_injective_into_cohomology(seed in any::<u64>(), r in 1usize..4) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = ProductComplex::new((0..r).map(|_| random_factor(&mut rng)).collect());
            for i in 0..=r {
                let enc = enc_product(&p, i).unwrap();
                prop_assert_eq!(enc.k(), p.complex.cohomology_dim(i));
                let x = BitVector::from_u64(enc.k(), rng.gen::<u64>() & ((1u64 << enc.k().min(63)) - 1));
                let mut z = enc.encode(&x);
                if i > 0 {
                    let c = BitVector::from_u64(p.complex.size(i - 1).min(64), rng.gen());
                    let c = c.concat(&BitVector::zeros(p.complex.size(i - 1).saturating_sub(64)));
                    z.xor_assign(&p.complex.coboundary(i - 1, &c));
                }
                prop_assert_eq!(enc.decode(&z), Some(x));
                let dual = dual_encoding(&p, i).unwrap();
                prop_assert!(pairing_holds(&enc, &dual));
            }
        }

        #[test]
        fn single_factor_tensor_matches(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_factor(&mut rng), random_factor(&mut rng));
            let p = ProductComplex::new(vec![a.clone(), b.clone()]);
            let t = tensor(&a.complex(), &b.complex());
            prop_assert_eq!(p.complex.dims(), t.dims());
        }
    }
}
