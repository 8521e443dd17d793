//! Adaptive Clifford circuits: gate layers with classical hooks, edge
//! coloring, syndrome extraction, and Pauli fault insertion.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::expander::BipartiteGraph;
use crate::f2la::{BitMatrix, BitVector};

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("layer {layer}: qubit {qubit} used by two gates")]
    Overlap { layer: usize, qubit: usize },
    #[error("layer {layer}: qubit {qubit} out of range")]
    QubitRange { layer: usize, qubit: usize },
    #[error("layer {layer}: hook {hook} reads record {record}, not yet measured")]
    FutureRead { layer: usize, hook: String, record: usize },
    #[error("fault at qubit {qubit}, time {time} outside {qubits} qubits x 0..={depth}")]
    FaultRange { qubit: usize, time: usize, qubits: usize, depth: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    X(u32),
    Z(u32),
    H(u32),
    Cnot(u32, u32),
    ResetZ(u32),
    ResetX(u32),
    MZ(u32),
    MX(u32),
}

impl Gate {
    pub fn qubits(&self) -> (u32, Option<u32>) {
        match *self {
            Gate::Cnot(c, t) => (c, Some(t)),
            Gate::X(q) | Gate::Z(q) | Gate::H(q) | Gate::ResetZ(q) | Gate::ResetX(q) | Gate::MZ(q) | Gate::MX(q) => {
                (q, None)
            }
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::MZ(_) | Gate::MX(_))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X(q) => write!(f, "X {q}"),
            Gate::Z(q) => write!(f, "Z {q}"),
            Gate::H(q) => write!(f, "H {q}"),
            Gate::Cnot(c, t) => write!(f, "CNOT {c} {t}"),
            Gate::ResetZ(q) => write!(f, "R {q}"),
            Gate::ResetX(q) => write!(f, "RX {q}"),
            Gate::MZ(q) => write!(f, "MZ {q}"),
            Gate::MX(q) => write!(f, "MX {q}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultPauli {
    X,
    Y,
    Z,
}

impl FaultPauli {
    pub fn has_x(self) -> bool {
        matches!(self, FaultPauli::X | FaultPauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, FaultPauli::Z | FaultPauli::Y)
    }
}

/// Pauli fault keyed by `(time, qubit)`. Time 0 acts before the first layer;
/// time `t ≥ 1` acts right after layer `t`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fault {
    pub entries: BTreeMap<(u32, u32), FaultPauli>,
}

impl Fault {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, time: usize, p: FaultPauli) -> Self {
        let mut f = Fault::new();
        f.insert(qubit, time, p);
        f
    }

    pub fn insert(&mut self, qubit: usize, time: usize, p: FaultPauli) {
        self.entries.insert((time as u32, qubit as u32), p);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Faults at time `t` as `(qubit, pauli)`.
    pub fn at(&self, t: usize) -> impl Iterator<Item = (usize, FaultPauli)> + '_ {
        self.entries.range((t as u32, 0)..(t as u32 + 1, 0)).map(|(&(_, q), &p)| (q as usize, p))
    }
}

/// What a hook sees: records and registers from its own circuit's origin.
pub struct HookInput<'a> {
    pub meas: &'a [bool],
    pub regs: &'a [BitVector],
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HookOutput {
    /// Qubits receiving X this layer.
    pub x: Vec<u32>,
    /// Qubits receiving Z this layer.
    pub z: Vec<u32>,
    /// Register writes `(register, value)`.
    pub writes: Vec<(usize, BitVector)>,
    /// Heralded failure.
    pub herald: bool,
}

pub type HookFn = dyn Fn(&HookInput) -> HookOutput + Send + Sync;

/// Named classical step run at the start of a layer.
#[derive(Clone)]
pub struct Hook {
    pub name: String,
    /// Record indices read, relative to `rec_base`.
    pub reads: Vec<usize>,
    pub reg_reads: Vec<usize>,
    pub reg_writes: Vec<usize>,
    pub rec_base: usize,
    pub reg_base: usize,
    f: Arc<HookFn>,
}

impl fmt::Debug for Hook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hook({})", self.name)
    }
}

impl Hook {
    pub fn new(
        name: impl Into<String>,
        reads: Vec<usize>,
        reg_reads: Vec<usize>,
        reg_writes: Vec<usize>,
        f: impl Fn(&HookInput) -> HookOutput + Send + Sync + 'static,
    ) -> Self {
        Hook { name: name.into(), reads, reg_reads, reg_writes, rec_base: 0, reg_base: 0, f: Arc::new(f) }
    }

    /// Runs the hook on absolute records and registers; register indices in
    /// the output are absolute.
    pub fn run(&self, meas: &[bool], regs: &[BitVector]) -> HookOutput {
        let input = HookInput { meas: &meas[self.rec_base.min(meas.len())..], regs: &regs[self.reg_base.min(regs.len())..] };
        let mut out = (self.f)(&input);
        for w in out.writes.iter_mut() {
            w.0 += self.reg_base;
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct Layer {
    pub gates: Vec<Gate>,
    pub hooks: Vec<Hook>,
    /// Fault layers come from `corrupt`; they cost no time.
    pub fault: Vec<(u32, FaultPauli)>,
}

impl Layer {
    pub fn is_fault(&self) -> bool {
        !self.fault.is_empty() && self.gates.is_empty() && self.hooks.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitKind {
    Data,
    Ancilla,
    Scratch,
}

#[derive(Clone, Debug, Default)]
pub struct Circuit {
    pub kinds: Vec<QubitKind>,
    pub layers: Vec<Layer>,
    n_meas: usize,
    reg_lens: Vec<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { kinds: vec![QubitKind::Data; n_qubits], ..Default::default() }
    }

    pub fn qubit_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn add_qubits(&mut self, kind: QubitKind, count: usize) -> std::ops::Range<usize> {
        let start = self.kinds.len();
        self.kinds.extend(std::iter::repeat(kind).take(count));
        start..start + count
    }

    pub fn ensure_qubits(&mut self, n: usize) {
        if self.kinds.len() < n {
            self.kinds.resize(n, QubitKind::Data);
        }
    }

    /// Number of time steps; fault layers excluded, hook-only layers included.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| !l.is_fault()).count()
    }

    pub fn measurement_count(&self) -> usize {
        self.n_meas
    }

    pub fn register_lens(&self) -> &[usize] {
        &self.reg_lens
    }

    pub fn new_register(&mut self, len: usize) -> usize {
        self.reg_lens.push(len);
        self.reg_lens.len() - 1
    }

    /// Appends a gate layer and returns the record indices of its
    /// measurements in gate order.
    pub fn push_gates(&mut self, gates: Vec<Gate>) -> Vec<usize> {
        self.push_layer(Layer { gates, ..Default::default() })
    }

    pub fn push_hook(&mut self, hook: Hook) {
        self.push_layer(Layer { hooks: vec![hook], ..Default::default() });
    }

    pub fn push_empty(&mut self) {
        self.push_layer(Layer::default());
    }

    pub fn push_layer(&mut self, layer: Layer) -> Vec<usize> {
        let mut recs = Vec::new();
        for g in &layer.gates {
            let (a, b) = g.qubits();
            self.ensure_qubits(a.max(b.unwrap_or(0)) as usize + 1);
            if g.is_measurement() {
                recs.push(self.n_meas);
                self.n_meas += 1;
            }
        }
        self.layers.push(layer);
        recs
    }

    /// Appends `other` on the same qubits, shifting its record and register
    /// indices past this circuit's.
    pub fn extend(&mut self, other: &Circuit) {
        self.ensure_qubits(other.qubit_count());
        for (k, kind) in other.kinds.iter().enumerate() {
            if *kind != QubitKind::Data {
                self.kinds[k] = *kind;
            }
        }
        let (rb, gb) = (self.n_meas, self.reg_lens.len());
        for l in &other.layers {
            let mut l = l.clone();
            for h in l.hooks.iter_mut() {
                h.rec_base += rb;
                h.reg_base += gb;
            }
            self.layers.push(l);
        }
        self.n_meas += other.n_meas;
        self.reg_lens.extend_from_slice(&other.reg_lens);
    }

    /// Runs `parts` side by side from the same start time. Layer `t` of the
    /// result is the union of every part's layer `t`; registers are
    /// concatenated in part order. Hooks keep seeing their own part's records
    /// in their own order.
    pub fn parallel(parts: &[Circuit]) -> Circuit {
        let len = parts.iter().map(|p| p.layers.len()).max().unwrap_or(0);
        let mut maps: Vec<Vec<usize>> = parts.iter().map(|p| Vec::with_capacity(p.n_meas)).collect();
        let mut rec = 0;
        for t in 0..len {
            for (j, p) in parts.iter().enumerate() {
                if let Some(l) = p.layers.get(t) {
                    for _ in l.gates.iter().filter(|g| g.is_measurement()) {
                        maps[j].push(rec);
                        rec += 1;
                    }
                }
            }
        }
        let maps: Vec<Arc<Vec<usize>>> = maps.into_iter().map(Arc::new).collect();
        let mut out = Circuit::default();
        let mut reg_base = Vec::with_capacity(parts.len());
        for p in parts {
            reg_base.push(out.reg_lens.len());
            out.reg_lens.extend_from_slice(&p.reg_lens);
            out.ensure_qubits(p.qubit_count());
            for (k, kind) in p.kinds.iter().enumerate() {
                if *kind != QubitKind::Data {
                    out.kinds[k] = *kind;
                }
            }
        }
        for t in 0..len {
            let mut layer = Layer::default();
            for (j, p) in parts.iter().enumerate() {
                let Some(l) = p.layers.get(t) else { continue };
                layer.gates.extend_from_slice(&l.gates);
                layer.fault.extend_from_slice(&l.fault);
                for h in &l.hooks {
                    let mut inner = h.clone();
                    inner.reg_base += reg_base[j];
                    let map = maps[j].clone();
                    let reads = h.reads.iter().map(|&r| map[r + h.rec_base]).collect();
                    let mut wrapped = Hook::new(h.name.clone(), reads, h.reg_reads.clone(), h.reg_writes.clone(), move |inp| {
                        let local: Vec<bool> = map.iter().take_while(|&&g| g < inp.meas.len()).map(|&g| inp.meas[g]).collect();
                        inner.run(&local, inp.regs)
                    });
                    wrapped.reg_reads.iter_mut().chain(wrapped.reg_writes.iter_mut()).for_each(|r| *r += reg_base[j] + h.reg_base);
                    layer.hooks.push(wrapped);
                }
            }
            out.push_layer(layer);
        }
        out
    }

    /// Checks disjoint gate supports, qubit ranges, and that hooks only read
    /// records from earlier layers.
    pub fn audit(&self) -> Result<(), CircuitError> {
        let n = self.qubit_count();
        let mut used = vec![usize::MAX; n];
        let mut rec = 0;
        for (li, l) in self.layers.iter().enumerate() {
            for h in &l.hooks {
                if let Some(&r) = h.reads.iter().find(|&&r| r + h.rec_base >= rec) {
                    return Err(CircuitError::FutureRead { layer: li, hook: h.name.clone(), record: r + h.rec_base });
                }
            }
            for g in &l.gates {
                let (a, b) = g.qubits();
                for q in std::iter::once(a).chain(b) {
                    let q = q as usize;
                    if q >= n {
                        return Err(CircuitError::QubitRange { layer: li, qubit: q });
                    }
                    if used[q] == li {
                        return Err(CircuitError::Overlap { layer: li, qubit: q });
                    }
                    used[q] = li;
                }
                if g.is_measurement() {
                    rec += 1;
                }
            }
        }
        Ok(())
    }

    /// Line-based text: one layer per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for l in &self.layers {
            let mut parts: Vec<String> = l.hooks.iter().map(|h| format!("HOOK {}", h.name)).collect();
            parts.extend(l.gates.iter().map(Gate::to_string));
            parts.extend(l.fault.iter().map(|(q, p)| format!("FAULT {p:?} {q}")));
            let _ = writeln!(s, "{}", if parts.is_empty() { "TICK".to_string() } else { parts.join("; ") });
        }
        s
    }
}

/// Interleaves fault layers: faults at time 0 go before the first layer,
/// faults at time `t` right after the `t`-th layer.
pub fn corrupt(c: &Circuit, fault: &Fault) -> Result<Circuit, CircuitError> {
    let depth = c.depth();
    for &(t, q) in fault.entries.keys() {
        if q as usize >= c.qubit_count() || t as usize > depth {
            return Err(CircuitError::FaultRange {
                qubit: q as usize,
                time: t as usize,
                qubits: c.qubit_count(),
                depth,
            });
        }
    }
    let mut out = Circuit { kinds: c.kinds.clone(), layers: Vec::new(), n_meas: c.n_meas, reg_lens: c.reg_lens.clone() };
    let fault_layer = |t: usize| {
        let f: Vec<(u32, FaultPauli)> = fault.at(t).map(|(q, p)| (q as u32, p)).collect();
        (!f.is_empty()).then(|| Layer { fault: f, ..Default::default() })
    };
    out.layers.extend(fault_layer(0));
    let mut t = 0;
    for l in &c.layers {
        out.layers.push(l.clone());
        if !l.is_fault() {
            t += 1;
            out.layers.extend(fault_layer(t));
        }
    }
    Ok(out)
}

/// Proper edge coloring with at most `Δ + 1` colors (Misra–Gries), in the
/// order of `g.edges()`. Left vertex `v` is node `v`, right vertex `u` is
/// node `n_left + u`.
pub fn edge_color(g: &BipartiteGraph) -> Vec<usize> {
    let edges = g.edges();
    let nl = g.n_left();
    let nv = nl + g.n_right();
    let delta = g.max_degree(crate::expander::Side::Left).max(g.max_degree(crate::expander::Side::Right));
    let ncol = delta + 1;
    const NONE: u32 = u32::MAX;
    // at[v][c] = neighbor joined to v by an edge of color c
    let mut at = vec![vec![NONE; ncol]; nv];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(l, r) in &edges {
        adj[l].push(nl + r);
        adj[nl + r].push(l);
    }
    let color_of = |at: &[Vec<u32>], a: usize, b: usize| at[a].iter().position(|&x| x == b as u32);
    let free = |at: &[Vec<u32>], v: usize| at[v].iter().position(|&x| x == NONE).expect("Δ+1 colors leave one free");
    let set = |at: &mut [Vec<u32>], a: usize, b: usize, c: Option<usize>| {
        if let Some(old) = at[a].iter().position(|&x| x == b as u32) {
            at[a][old] = NONE;
            at[b][old] = NONE;
        }
        if let Some(c) = c {
            at[a][c] = b as u32;
            at[b][c] = a as u32;
        }
    };
    for &(l, r) in &edges {
        let (u, v) = (l, nl + r);
        // maximal fan of u starting at v
        let mut fan = vec![v];
        loop {
            let last = *fan.last().unwrap();
            let next = adj[u].iter().copied().find(|&w| {
                !fan.contains(&w) && color_of(&at, u, w).is_some_and(|c| at[last][c] == NONE)
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }
        let c = free(&at, u);
        let d = free(&at, *fan.last().unwrap());
        // invert the cd-path starting at u
        if c != d {
            let mut path = vec![u];
            let mut cur = u;
            let mut col = d;
            while at[cur][col] != NONE {
                let nxt = at[cur][col] as usize;
                path.push(nxt);
                cur = nxt;
                col = if col == d { c } else { d };
            }
            let mut cols: Vec<usize> = Vec::new();
            for w in path.windows(2) {
                cols.push(color_of(&at, w[0], w[1]).unwrap());
            }
            for w in path.windows(2) {
                set(&mut at, w[0], w[1], None);
            }
            for (w, &old) in path.windows(2).zip(&cols) {
                let new = if old == c { d } else { c };
                set(&mut at, w[0], w[1], Some(new));
            }
        }
        // shortest fan prefix ending at a vertex with d free
        let mut end = None;
        for i in 0..fan.len() {
            if i > 0 {
                let ok = color_of(&at, u, fan[i]).is_some_and(|col| at[fan[i - 1]][col] == NONE);
                if !ok {
                    break;
                }
            }
            if at[fan[i]][d] == NONE {
                end = Some(i);
                break;
            }
        }
        let end = end.expect("Misra–Gries guarantees a rotatable fan prefix");
        for i in 0..end {
            let col = color_of(&at, u, fan[i + 1]).unwrap();
            set(&mut at, u, fan[i + 1], None);
            set(&mut at, u, fan[i], Some(col));
        }
        set(&mut at, u, fan[end], Some(d));
    }
    edges.iter().map(|&(l, r)| color_of(&at, l, nl + r).unwrap()).collect()
}

/// Check type measured by a syndrome-extraction circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckType {
    /// `Z^{H_j}`: ancilla in |0⟩, CNOT data → ancilla, measure Z.
    Z,
    /// `X^{H_j}`: ancilla in |+⟩, CNOT ancilla → data, measure X.
    X,
}

/// Appends the syndrome-extraction layers for the rows of `h` acting on
/// `data`, using `ancillas` (one per row). Returns the record index of each
/// row's outcome. Empty `h` appends nothing.
pub fn append_synd_ext(c: &mut Circuit, h: &BitMatrix, p: CheckType, data: &[usize], ancillas: &[usize]) -> Vec<usize> {
    assert_eq!(h.cols(), data.len());
    assert_eq!(h.rows(), ancillas.len());
    if h.rows() == 0 {
        return Vec::new();
    }
    let entries: Vec<(usize, usize)> = (0..h.rows()).flat_map(|r| h.row_iter_ones(r).map(move |col| (r, col))).collect();
    let g = BipartiteGraph::from_edges(h.rows(), h.cols(), &entries);
    let colors = edge_color(&g);
    let ncol = colors.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_color: Vec<Vec<Gate>> = vec![Vec::new(); ncol];
    for (&(r, col), &k) in g.edges().iter().zip(&colors) {
        let (a, d) = (ancillas[r] as u32, data[col] as u32);
        by_color[k].push(match p {
            CheckType::Z => Gate::Cnot(d, a),
            CheckType::X => Gate::Cnot(a, d),
        });
    }
    let init = ancillas.iter().map(|&a| match p {
        CheckType::Z => Gate::ResetZ(a as u32),
        CheckType::X => Gate::ResetX(a as u32),
    });
    c.push_gates(init.collect());
    for layer in by_color {
        c.push_gates(layer);
    }
    let meas = ancillas.iter().map(|&a| match p {
        CheckType::Z => Gate::MZ(a as u32),
        CheckType::X => Gate::MX(a as u32),
    });
    c.push_gates(meas.collect())
}

/// Standalone syndrome extraction: data qubits `0..cols`, ancillas after.
pub fn build_synd_ext(h: &BitMatrix, p: CheckType) -> Circuit {
    let mut c = Circuit::new(h.cols());
    let anc: Vec<usize> = c.add_qubits(QubitKind::Ancilla, h.rows()).collect();
    let data: Vec<usize> = (0..h.cols()).collect();
    append_synd_ext(&mut c, h, p, &data, &anc);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::gen_biregular;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::{Rng, SeedableRng};

    fn proper(g: &BipartiteGraph, colors: &[usize]) -> bool {
        let nl = g.n_left();
        let mut seen = std::collections::HashSet::new();
        g.edges().iter().zip(colors).all(|(&(l, r), &c)| seen.insert((l, c)) && seen.insert((nl + r, c)))
    }

    #[test]
    fn coloring_examples() {
        let m = BipartiteGraph::from_edges(3, 3, &[(0, 1), (1, 2), (2, 0)]);
        let c = edge_color(&m);
        assert!(proper(&m, &c));
        assert_eq!(c.iter().max(), Some(&0));
        let cyc = BipartiteGraph::cycle(6);
        let c = edge_color(&cyc);
        assert!(proper(&cyc, &c) && *c.iter().max().unwrap() <= 2);
        let g = gen_biregular(12, 6, 3, 6, 1).unwrap();
        let c = edge_color(&g);
        assert!(proper(&g, &c) && *c.iter().max().unwrap() < 7);
        assert_eq!(edge_color(&g), c);
    }

    #[test]
    fn synd_ext_depths() {
        let h = BitMatrix::from_entries(1, 3, [(0, 0), (0, 1), (0, 2)]);
        let c = build_synd_ext(&h, CheckType::Z);
        assert_eq!(c.depth(), 5);
        assert!(c.depth() <= 3 + 4);
        c.audit().unwrap();
        let empty = build_synd_ext(&BitMatrix::zeros(0, 4), CheckType::X);
        assert_eq!((empty.depth(), empty.measurement_count()), (0, 0));
        let g = std::sync::Arc::new(BipartiteGraph::cycle(4));
        let p = crate::complex::ProductComplex::new(vec![
            crate::complex::Factor::cochain(g.clone()),
            crate::complex::Factor::chain(g),
        ]);
        let zc = build_synd_ext(p.complex.delta(1), CheckType::Z);
        assert!(zc.depth() <= 4 + 4);
        zc.audit().unwrap();
    }

    #[test]
    fn depth_and_dump() {
        let c = Circuit::new(0);
        assert_eq!((c.depth(), c.qubit_count()), (0, 0));
        let mut a = Circuit::new(2);
        a.push_gates(vec![Gate::H(0)]);
        a.push_gates(vec![Gate::Cnot(0, 1)]);
        let mut b = Circuit::new(2);
        b.push_gates(vec![Gate::MZ(0), Gate::MX(1)]);
        let mut ab = a.clone();
        ab.extend(&b);
        assert_eq!(ab.depth(), a.depth() + b.depth());
        assert_eq!(ab.dump(), "H 0\nCNOT 0 1\nMZ 0; MX 1\n");
    }

    #[test]
    fn audit_rejects_bad_layers() {
        let mut c = Circuit::new(2);
        c.push_gates(vec![Gate::H(0), Gate::Cnot(0, 1)]);
        assert_eq!(c.audit(), Err(CircuitError::Overlap { layer: 0, qubit: 0 }));
        let mut c = Circuit::new(1);
        c.push_layer(Layer {
            gates: vec![Gate::MZ(0)],
            hooks: vec![Hook::new("peek", vec![0], vec![], vec![], |_| HookOutput::default())],
            fault: vec![],
        });
        assert!(matches!(c.audit(), Err(CircuitError::FutureRead { .. })));
    }

    #[test]
    fn parallel_keeps_part_records() {
        // part a measures twice, part b once; b's hook must see only its own record
        let part = |q: u32, flips: usize| {
            let mut c = Circuit::new(0);
            let r = c.new_register(1);
            for _ in 0..flips {
                c.push_gates(vec![Gate::X(q), Gate::ResetZ(q + 10)]);
                c.push_gates(vec![Gate::MZ(q)]);
            }
            let n = c.measurement_count();
            c.push_hook(Hook::new("last", vec![n - 1], vec![], vec![r], move |inp| HookOutput {
                writes: vec![(r, BitVector::from_bools(&[inp.meas[n - 1] && inp.meas.len() == n]))],
                ..Default::default()
            }));
            c
        };
        let m = Circuit::parallel(&[part(0, 2), part(1, 1)]);
        assert_eq!(m.depth(), 5);
        assert_eq!(m.register_lens(), &[1, 1]);
        m.audit().unwrap();
        let mut seq = Circuit::new(0);
        seq.push_gates(vec![Gate::MZ(5)]);
        seq.extend(&m);
        let run = crate::sim::exact_run(&seq, &Fault::new(), 1).unwrap();
        // part a ends with X applied twice: outcome 0; part b once: outcome 1
        assert_eq!(run.registers, vec![BitVector::from_bools(&[false]), BitVector::from_bools(&[true])]);
    }

    #[test]
    fn corrupt_places_faults() {
        let mut c = Circuit::new(2);
        c.push_gates(vec![Gate::Cnot(0, 1)]);
        c.push_gates(vec![Gate::MZ(1)]);
        assert_eq!(corrupt(&c, &Fault::new()).unwrap().dump(), c.dump());
        let f = Fault::single(0, 0, FaultPauli::X);
        let cc = corrupt(&c, &f).unwrap();
        assert_eq!(cc.depth(), 2);
        assert_eq!(cc.dump(), "FAULT X 0\nCNOT 0 1\nMZ 1\n");
        assert!(matches!(corrupt(&c, &Fault::single(0, 3, FaultPauli::Z)), Err(CircuitError::FaultRange { .. })));
        assert!(matches!(corrupt(&c, &Fault::single(2, 0, FaultPauli::Z)), Err(CircuitError::FaultRange { .. })));
    }

    proptest! {
        #[test]
        fn coloring_is_proper_within_budget(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let nl = rng.gen_range(1..12);
            let nr = rng.gen_range(1..12);
            let p = rng.gen_range(0.1..0.9);
            let edges: Vec<(usize, usize)> = (0..nl).flat_map(|a| (0..nr).map(move |b| (a, b))).filter(|_| rng.gen_bool(p)).collect();
            let g = BipartiteGraph::from_edges(nl, nr, &edges);
            let c = edge_color(&g);
            prop_assert!(proper(&g, &c));
            let delta = g.max_degree(crate::expander::Side::Left).max(g.max_degree(crate::expander::Side::Right));
            prop_assert!(c.iter().all(|&x| x <= delta));
        }

        #[test]
        fn synd_ext_depth_bound(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows = rng.gen_range(1..10);
            let cols = rng.gen_range(1..10);
            let h = BitMatrix::from_entries(rows, cols, (0..rows * cols / 2).map(|_| (rng.gen_range(0..rows), rng.gen_range(0..cols))));
            let w = (0..rows).map(|r| h.row_weight(r)).chain(h.col_weights()).max().unwrap();
            for p in [CheckType::Z, CheckType::X] {
                let c = build_synd_ext(&h, p);
                prop_assert!(c.audit().is_ok());
                prop_assert!(c.depth() <= w + 4);
            }
        }
    }
}
