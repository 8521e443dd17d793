//! Gadget circuits on product codes: state preparation, error correction,
//! logical measurement, code switching in both directions, transversal
//! gates, and the slab gadgets composed from them.
//!
//! Every builder takes a [`Ctx`], which owns qubit allocation and caches
//! codes, and returns a [`GadgetSpec`]. Blocks always carry the canonical
//! code of their factor list (`ProductComplex::new`) with qubits listed in
//! that code's cell order, so blocks of equal codes line up qubit by qubit.
//!
//! The X-basis and chain-direction variants reuse the Z-basis algorithms on
//! the dual complex with the physical bases exchanged ([`Frame`]).

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuits::{append_synd_ext, CheckType, Circuit, CircuitError, Fault, Gate, Hook, HookOutput};
use crate::codes::{dual_encoding, enc_product, pairing_holds, CodesError, CssCode, EncodingMap, Pauli};
use crate::complex::{label_string, Cell1, CochainComplex, ComplexError, Factor, FactorKind, Label, ProductComplex};
use crate::decoder::{ss_flip_syn, DecoderConfig};
use crate::f2la::{BitVector, Solver};
use crate::sim::{exact_run_from, ExactRun, SimError, StabilizerState};

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error(transparent)]
    Codes(#[from] CodesError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{gadget} needs level in {lo}..={hi}, got {level}")]
    BadLevel { gadget: &'static str, level: usize, lo: usize, hi: usize },
    #[error("direction {0} out of range")]
    BadDirection(usize),
    #[error("transversal_cnot_diff needs a cochain factor in direction {0}")]
    NotCochain(usize),
    #[error("blocks carry different codes")]
    CodeMismatch,
    #[error("logical label {0} missing from the target encoding")]
    LabelMismatch(String),
    #[error("encodings fail the pairing audit")]
    Pairing,
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("factor {0} has no message set")]
    NoMessage(usize),
    #[error("no switching route reaches the requested factor kinds")]
    NoRoute,
    #[error("syndrome extraction needs {need} layers, above w + 4 = {budget}")]
    ExtractionTooDeep { need: usize, budget: usize },
    #[error("slab position {0:?} out of range")]
    Position(Vec<usize>),
    #[error("circuit depth {actual} differs from declared {declared}")]
    DepthMismatch { actual: usize, declared: usize },
}

type Result<T> = std::result::Result<T, GadgetError>;

/// CSS code of a product complex at one level, with paired logical bases and
/// the bad-set parameters used for fault telemetry.
pub struct DecoratedCode {
    pub product: ProductComplex,
    pub code: CssCode,
    /// X-logicals: cocycle representatives.
    pub enc: EncodingMap,
    /// Z-logicals, paired with `enc` label by label.
    pub dual: EncodingMap,
    /// Locality of the complex.
    pub w: usize,
    pub eta: usize,
    pub gamma: f64,
    key: String,
    prep_solver: OnceLock<Solver>,
}

impl std::fmt::Debug for DecoratedCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DecoratedCode(r={}, level={}, n={}, k={})", self.r(), self.level(), self.n(), self.k())
    }
}

impl DecoratedCode {
    pub fn new(product: ProductComplex, level: usize) -> Result<Self> {
        let code = CssCode::new(product.complex.clone(), level)?;
        let enc = enc_product(&product, level)?;
        let dual = dual_encoding(&product, level)?;
        let w = product.complex.locality();
        let key = code_key(&product.factors, level);
        Ok(DecoratedCode {
            product,
            code,
            enc,
            dual,
            w,
            eta: w.max(1),
            gamma: 1.0 / (4.0 * (w.max(1) as f64).powi(3)),
            key,
            prep_solver: OnceLock::new(),
        })
    }

    /// The same qubits read in the dual complex at the complementary level:
    /// X and Z roles exchange, cell indices are kept.
    fn dualized(&self) -> Result<Self> {
        let product = self.product.dual();
        let level = self.r() - self.level();
        let code = CssCode::new(product.complex.clone(), level)?;
        Ok(DecoratedCode {
            product,
            code,
            enc: self.dual.clone(),
            dual: self.enc.clone(),
            w: self.w,
            eta: self.eta,
            gamma: self.gamma,
            key: format!("~{}", self.key),
            prep_solver: OnceLock::new(),
        })
    }

    pub fn level(&self) -> usize {
        self.code.level
    }

    pub fn r(&self) -> usize {
        self.product.dim()
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn k(&self) -> usize {
        self.enc.k()
    }

    pub fn complex(&self) -> &Arc<CochainComplex> {
        &self.product.complex
    }

    pub fn kinds(&self) -> Vec<FactorKind> {
        self.product.factors.iter().map(|f| f.kind).collect()
    }

    /// Cell index of `label` at the code level.
    pub fn cell_of(&self, label: &[Cell1]) -> Option<usize> {
        self.complex().index_of(self.level(), label)
    }

    /// Logical position of the slab label with message index `t[h]` in every
    /// direction `h`.
    pub fn slab_logical(&self, t: &[usize]) -> Option<usize> {
        let label = slab_label(&self.product, t)?;
        self.enc.position(&label)
    }

    /// All mask positions `t` (message indices per direction) in
    /// lexicographic order.
    pub fn mask(&self) -> Vec<Vec<usize>> {
        let sizes: Vec<usize> = self.product.factors.iter().map(|f| f.message.len()).collect();
        let total: usize = sizes.iter().product();
        (0..total)
            .map(|mut x| {
                let mut t = vec![0; sizes.len()];
                for h in (0..sizes.len()).rev() {
                    t[h] = x % sizes[h];
                    x /= sizes[h];
                }
                t
            })
            .collect()
    }

    fn prep_solver(&self) -> &Solver {
        self.prep_solver.get_or_init(|| Solver::new(self.complex().delta(self.level())))
    }
}

fn code_key(factors: &[Factor], level: usize) -> String {
    let mut s = String::new();
    for f in factors {
        let _ = write!(
            s,
            "{:x}:{:?}:{:?}:{:?}:{:?}:{:?}|",
            Arc::as_ptr(&f.graph) as usize,
            f.kind,
            f.removed,
            f.info_left,
            f.info_right,
            f.message
        );
    }
    let _ = write!(s, "@{level}");
    s
}

/// Label `(Right(L_h[t_h]))_h`.
fn slab_label(p: &ProductComplex, t: &[usize]) -> Option<Label> {
    if t.len() != p.dim() {
        return None;
    }
    t.iter().zip(&p.factors).map(|(&x, f)| f.message.get(x).map(|&u| Cell1::right(u))).collect()
}

fn insert_cell(label: &[Cell1], h: usize, c: Cell1) -> Label {
    let mut l = label.to_vec();
    l.insert(h, c);
    l
}

/// A code block: canonical code plus one qubit per cell.
#[derive(Clone, Debug)]
pub struct Block {
    pub code: Arc<DecoratedCode>,
    pub qubits: Vec<u32>,
}

impl Block {
    fn scatter(&self, v: &BitVector, n: usize) -> BitVector {
        BitVector::from_indices(n, v.iter_ones().map(|j| self.qubits[j] as usize))
    }
}

/// Which physical basis plays the role of Z in an algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frame {
    swap: bool,
}

impl Frame {
    const Z: Frame = Frame { swap: false };
    const X: Frame = Frame { swap: true };

    fn flip(self) -> Frame {
        Frame { swap: !self.swap }
    }

    fn reset_plus(self, q: u32) -> Gate {
        if self.swap {
            Gate::ResetZ(q)
        } else {
            Gate::ResetX(q)
        }
    }

    fn reset_zero(self, q: u32) -> Gate {
        self.flip().reset_plus(q)
    }

    fn mz(self, q: u32) -> Gate {
        if self.swap {
            Gate::MX(q)
        } else {
            Gate::MZ(q)
        }
    }

    fn cnot(self, c: u32, t: u32) -> Gate {
        if self.swap {
            Gate::Cnot(t, c)
        } else {
            Gate::Cnot(c, t)
        }
    }

    fn check(self) -> CheckType {
        if self.swap {
            CheckType::X
        } else {
            CheckType::Z
        }
    }

    fn push_x(self, out: &mut HookOutput, q: u32) {
        if self.swap {
            out.z.push(q)
        } else {
            out.x.push(q)
        }
    }

    fn push_z(self, out: &mut HookOutput, q: u32) {
        self.flip().push_x(out, q)
    }
}

/// Basis of a prepared logical state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrepBasis {
    Plus,
    Zero,
}

/// Switch-down data for one (code, direction): cells measured out, the
/// restricted complex and encoding, and the retained qubits per block.
struct DownPlan {
    frame: Frame,
    level: usize,
    full: Arc<CochainComplex>,
    restricted: Arc<CochainComplex>,
    enc_l: EncodingMap,
    meas: Vec<usize>,
    prev: Vec<usize>,
    out: Arc<DecoratedCode>,
    retained: Vec<Vec<usize>>,
}

/// Builder state: qubit allocator with scoped free pools and code caches.
pub struct Ctx {
    pub cfg: DecoderConfig,
    next: usize,
    scopes: Vec<Vec<u32>>,
    codes: HashMap<String, Arc<DecoratedCode>>,
    views: HashMap<String, Arc<DecoratedCode>>,
    downs: HashMap<(String, usize), Arc<DownPlan>>,
}

impl Default for Ctx {
    fn default() -> Self {
        Self::new()
    }
}

impl Ctx {
    pub fn new() -> Self {
        Ctx {
            cfg: DecoderConfig::default(),
            next: 0,
            scopes: vec![Vec::new()],
            codes: HashMap::new(),
            views: HashMap::new(),
            downs: HashMap::new(),
        }
    }

    /// Canonical code of `factors` at `level`, cached.
    pub fn code(&mut self, factors: Vec<Factor>, level: usize) -> Result<Arc<DecoratedCode>> {
        let key = code_key(&factors, level);
        if let Some(c) = self.codes.get(&key) {
            return Ok(c.clone());
        }
        let c = Arc::new(DecoratedCode::new(ProductComplex::new(factors), level)?);
        self.codes.insert(key, c.clone());
        Ok(c)
    }

    /// Allocates a fresh block of `code` (qubits start in whatever state
    /// they were left in; every gadget resets before use).
    pub fn block(&mut self, code: &Arc<DecoratedCode>) -> Block {
        Block { code: code.clone(), qubits: self.alloc(code.n()) }
    }

    /// Highest qubit index handed out so far, plus one.
    pub fn qubits_used(&self) -> usize {
        self.next
    }

    fn framed(&mut self, code: &Arc<DecoratedCode>, f: Frame) -> Result<Arc<DecoratedCode>> {
        if !f.swap {
            return Ok(code.clone());
        }
        if let Some(v) = self.views.get(&code.key) {
            return Ok(v.clone());
        }
        let v = Arc::new(code.dualized()?);
        self.views.insert(code.key.clone(), v.clone());
        Ok(v)
    }

    fn alloc(&mut self, n: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(n);
        for s in self.scopes.iter_mut().rev() {
            while out.len() < n {
                match s.pop() {
                    Some(q) => out.push(q),
                    None => break,
                }
            }
        }
        while out.len() < n {
            out.push(self.next as u32);
            self.next += 1;
        }
        out
    }

    fn release(&mut self, qs: impl IntoIterator<Item = u32>) {
        let top = self.scopes.last_mut().expect("root scope");
        top.extend(qs);
        // keep low indices on top of the stack for reuse
        top.sort_unstable_by(|a, b| b.cmp(a));
    }

    /// Builds `items` as parallel branches. Qubits freed inside one branch
    /// stay private to it until all branches are merged.
    fn par<T>(&mut self, items: impl IntoIterator<Item = T>, mut f: impl FnMut(&mut Ctx, T) -> Result<Part>) -> Result<Part> {
        let mut parts = Vec::new();
        let mut freed = Vec::new();
        for it in items {
            self.scopes.push(Vec::new());
            let r = f(self, it);
            freed.extend(self.scopes.pop().expect("branch scope"));
            parts.push(r?);
        }
        self.release(freed);
        Ok(Part::par(parts))
    }

    fn down_plan(&mut self, code: &Arc<DecoratedCode>, h: usize) -> Result<Arc<DownPlan>> {
        let key = (code.key.clone(), h);
        if let Some(p) = self.downs.get(&key) {
            return Ok(p.clone());
        }
        let r = code.r();
        if h >= r || r < 2 {
            return Err(GadgetError::BadDirection(h));
        }
        let kind = code.product.factors[h].kind;
        let frame = if kind == FactorKind::Cochain { Frame::Z } else { Frame::X };
        let fc = self.framed(code, frame)?;
        let i = fc.level();
        if !(2..r).contains(&i) {
            return Err(GadgetError::BadLevel { gadget: "switch_down", level: i, lo: 2, hi: r - 1 });
        }
        let pv = &fc.product;
        let l = pv.factors[h].message.clone();
        if l.is_empty() {
            return Err(GadgetError::NoMessage(h));
        }
        let pl = pv.restrict(h, &l)?;
        let rc = pl.complex.clone();
        let full = pv.complex.clone();
        let map = |lv: usize| -> Vec<usize> {
            (0..rc.size(lv)).map(|c| full.index_of(lv, rc.label(lv, c)).expect("restricted cell present")).collect()
        };
        let meas = map(i);
        let prev = map(i - 1);
        let enc_l = enc_product(&pl, i)?;
        let mut fs = code.product.factors.clone();
        fs.remove(h);
        let out_level = code.level() - usize::from(kind == FactorKind::Cochain);
        let out = self.code(fs, out_level)?;
        let ac = out.complex().clone();
        let retained = l
            .iter()
            .map(|&u| {
                (0..out.n())
                    .map(|c| {
                        let lab = insert_cell(ac.label(out_level, c), h, Cell1::right(u));
                        code.cell_of(&lab).ok_or_else(|| GadgetError::LabelMismatch(label_string(&lab)))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = Arc::new(DownPlan { frame, level: i, full, restricted: rc, enc_l, meas, prev, out, retained });
        self.downs.insert(key, plan.clone());
        Ok(plan)
    }
}

/// A built circuit fragment with its declared depth.
struct Part {
    c: Circuit,
    declared: usize,
    outputs: Vec<Block>,
    regs: Vec<usize>,
    components: Vec<String>,
}

impl Part {
    fn new(name: &str) -> Part {
        Part { c: Circuit::new(0), declared: 0, outputs: Vec::new(), regs: Vec::new(), components: vec![name.to_string()] }
    }

    fn identity(blocks: Vec<Block>) -> Part {
        Part { outputs: blocks, components: Vec::new(), ..Part::new("") }
    }

    /// Appends `p`; returns its outputs and its registers renumbered.
    fn then(&mut self, p: Part) -> (Vec<Block>, Vec<usize>) {
        let rb = self.c.register_lens().len();
        self.c.extend(&p.c);
        self.declared += p.declared;
        self.components.extend(p.components);
        (p.outputs, p.regs.into_iter().map(|r| r + rb).collect())
    }

    fn par(parts: Vec<Part>) -> Part {
        let circuits: Vec<Circuit> = parts.iter().map(|p| p.c.clone()).collect();
        let c = Circuit::parallel(&circuits);
        let mut out = Part { c, declared: 0, outputs: Vec::new(), regs: Vec::new(), components: Vec::new() };
        let mut rb = 0;
        for p in parts {
            out.declared = out.declared.max(p.declared);
            out.outputs.extend(p.outputs);
            out.regs.extend(p.regs.iter().map(|r| r + rb));
            rb += p.c.register_lens().len();
            out.components.extend(p.components);
        }
        out
    }
}

/// A gadget: circuit plus the metadata checked against it.
#[derive(Clone, Debug)]
pub struct GadgetSpec {
    pub name: String,
    pub inputs: Vec<Block>,
    pub outputs: Vec<Block>,
    pub circuit: Circuit,
    /// Declared depth `T`, computed from component counts.
    pub depth: usize,
    /// Declared qubit budget `N`.
    pub qubits: usize,
    /// Logical map implemented, as text.
    pub channel: String,
    pub components: Vec<String>,
    /// Registers holding classical outputs (measurement gadgets).
    pub registers: Vec<usize>,
}

impl GadgetSpec {
    /// One-line manifest: name, depth, qubit budget, channel, components.
    pub fn manifest(&self) -> String {
        let mut comps: Vec<&str> = self.components.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
        comps.sort_unstable();
        comps.dedup();
        format!(
            "name={} depth={} qubits={} channel=\"{}\" components={}",
            self.name,
            self.depth,
            self.qubits,
            self.channel,
            comps.join(",")
        )
    }

    /// Checks `depth(circuit) == T`, `qubit_count ≤ N`, and the record audit.
    pub fn check(&self) -> Result<()> {
        self.circuit.audit()?;
        if self.circuit.depth() != self.depth {
            return Err(GadgetError::DepthMismatch { actual: self.circuit.depth(), declared: self.depth });
        }
        assert!(self.circuit.qubit_count() <= self.qubits);
        Ok(())
    }
}

fn finish(ctx: &Ctx, name: &str, inputs: Vec<Block>, part: Part, channel: String) -> Result<GadgetSpec> {
    let mut c = part.c;
    c.ensure_qubits(ctx.qubits_used());
    let spec = GadgetSpec {
        name: name.to_string(),
        inputs,
        outputs: part.outputs,
        circuit: c,
        depth: part.declared,
        qubits: ctx.qubits_used(),
        channel,
        components: part.components,
        registers: part.regs,
    };
    spec.check()?;
    Ok(spec)
}

fn bits(recs: &[usize], meas: &[bool]) -> BitVector {
    BitVector::from_indices(recs.len(), (0..recs.len()).filter(|&j| meas[recs[j]]))
}

fn to_usize(qs: &[u32]) -> Vec<usize> {
    qs.iter().map(|&q| q as usize).collect()
}

/// Whether two decorated codes are the same canonical code.
pub fn same_code(a: &Arc<DecoratedCode>, b: &Arc<DecoratedCode>) -> bool {
    Arc::ptr_eq(a, b) || a.key == b.key
}

// ---------------------------------------------------------------------------
// Primitive parts

/// Z-check extraction on `qubits` in frame `f` padded to `w + 4` layers,
/// then a hook applying the small-set flip correction.
fn z_round(ctx: &mut Ctx, fc: &Arc<DecoratedCode>, f: Frame, qubits: &[u32]) -> Result<Part> {
    let i = fc.level();
    let cx = fc.complex().clone();
    let top = i >= cx.dim();
    let budget = fc.w + 4;
    let mut part = Part::new("synd_round");
    let mut c = Circuit::new(0);
    let rows = if top { 0 } else { cx.size(i + 1) };
    let anc = ctx.alloc(rows);
    let recs = if top { Vec::new() } else { append_synd_ext(&mut c, cx.delta(i), f.check(), &to_usize(qubits), &to_usize(&anc)) };
    if c.depth() > budget {
        return Err(GadgetError::ExtractionTooDeep { need: c.depth(), budget });
    }
    while c.depth() < budget {
        c.push_empty();
    }
    let cfg = ctx.cfg;
    let qs = qubits.to_vec();
    let r2 = recs.clone();
    c.push_hook(Hook::new("flip_correct", recs, vec![], vec![], move |inp| {
        let mut out = HookOutput::default();
        if top {
            return out;
        }
        let s = bits(&r2, inp.meas);
        match ss_flip_syn(&cx, i, &s, &cfg) {
            Ok(res) => res.correction.iter_ones().for_each(|q| f.push_x(&mut out, qs[q])),
            Err(_) => out.herald = true,
        }
        out
    }));
    ctx.release(anc);
    part.c = c;
    part.declared = fc.w + 5;
    Ok(part)
}

/// |+^k⟩ preparation in frame `f` on fresh qubits.
fn plus_prep(ctx: &mut Ctx, canon: &Arc<DecoratedCode>, f: Frame) -> Result<Part> {
    let fc = ctx.framed(canon, f)?;
    let (i, r) = (fc.level(), fc.r());
    let mut part = Part::new("state_prep");
    if canon.n() == 0 {
        part.outputs.push(Block { code: canon.clone(), qubits: Vec::new() });
        return Ok(part);
    }
    if i + 2 > r {
        return Err(GadgetError::BadLevel { gadget: "state_prep", level: i, lo: 0, hi: r.saturating_sub(2) });
    }
    let data = ctx.alloc(canon.n());
    let cx = fc.complex().clone();
    let anc = ctx.alloc(cx.size(i + 1));
    let mut c = Circuit::new(0);
    c.push_gates(data.iter().map(|&q| f.reset_plus(q)).collect());
    let recs = append_synd_ext(&mut c, cx.delta(i), f.check(), &to_usize(&data), &to_usize(&anc));
    let budget = fc.w + 5;
    if c.depth() > budget {
        return Err(GadgetError::ExtractionTooDeep { need: c.depth() - 1, budget: fc.w + 4 });
    }
    while c.depth() < budget {
        c.push_empty();
    }
    fc.prep_solver();
    let (cfg, qs, r2, code) = (ctx.cfg, data.clone(), recs.clone(), fc.clone());
    c.push_hook(Hook::new("prep_fix", recs, vec![], vec![], move |inp| {
        let mut out = HookOutput::default();
        let s = bits(&r2, inp.meas);
        let d = cx.coboundary(i + 1, &s);
        let a = match ss_flip_syn(&cx, i + 1, &d, &cfg) {
            Ok(res) => res.correction,
            Err(_) => {
                out.herald = true;
                return out;
            }
        };
        match code.prep_solver().solve(&s.xor(&a)) {
            Some(x) => x.iter_ones().for_each(|q| f.push_x(&mut out, qs[q])),
            None => out.herald = true,
        }
        out
    }));
    ctx.release(anc);
    part.c = c;
    part.declared = fc.w + 6;
    part.outputs.push(Block { code: canon.clone(), qubits: data });
    Ok(part)
}

fn prep_part(ctx: &mut Ctx, code: &Arc<DecoratedCode>, basis: PrepBasis) -> Result<Part> {
    match basis {
        PrepBasis::Plus => plus_prep(ctx, code, Frame::Z),
        PrepBasis::Zero => plus_prep(ctx, code, Frame::X),
    }
}

/// Basis that `state_prep` supports at this level, preferring |+⟩.
pub fn supported_prep(code: &DecoratedCode) -> Option<PrepBasis> {
    let (i, r) = (code.level(), code.r());
    if i + 2 <= r {
        Some(PrepBasis::Plus)
    } else if i >= 2 {
        Some(PrepBasis::Zero)
    } else {
        None
    }
}

fn fresh(ctx: &mut Ctx, code: &Arc<DecoratedCode>) -> Result<Part> {
    let b = supported_prep(code).ok_or(GadgetError::BadLevel {
        gadget: "state_prep",
        level: code.level(),
        lo: 0,
        hi: code.r().saturating_sub(2),
    })?;
    prep_part(ctx, code, b)
}

fn err_corr_part(ctx: &mut Ctx, b: &Block) -> Result<Part> {
    let (i, r) = (b.code.level(), b.code.r());
    if i == 0 || i >= r {
        return Err(GadgetError::BadLevel { gadget: "err_corr", level: i, lo: 1, hi: r.saturating_sub(1) });
    }
    let mut part = Part::new("err_corr");
    part.components.clear();
    part.components.push("err_corr".into());
    let zc = b.code.clone();
    part.then(z_round(ctx, &zc, Frame::Z, &b.qubits)?);
    let xc = ctx.framed(&b.code, Frame::X)?;
    part.then(z_round(ctx, &xc, Frame::X, &b.qubits)?);
    part.outputs.push(b.clone());
    Ok(part)
}

fn measure_part(ctx: &mut Ctx, b: &Block, p: Pauli) -> Result<Part> {
    let f = if p == Pauli::Z { Frame::Z } else { Frame::X };
    let fc = ctx.framed(&b.code, f)?;
    let i = fc.level();
    let cx = fc.complex().clone();
    let mut part = Part::new("measure_logical");
    let mut c = Circuit::new(0);
    let recs = c.push_gates(b.qubits.iter().map(|&q| f.mz(q)).collect());
    let reg = c.new_register(fc.k());
    let (cfg, r2, code) = (ctx.cfg, recs.clone(), fc.clone());
    c.push_hook(Hook::new("logical_decode", recs, vec![], vec![reg], move |inp| {
        let mut out = HookOutput::default();
        let z = bits(&r2, inp.meas);
        let mut zc = z.clone();
        if i < cx.dim() {
            let d = cx.coboundary(i, &z);
            match ss_flip_syn(&cx, i, &d, &cfg) {
                Ok(res) => zc.xor_assign(&res.correction),
                Err(_) => out.herald = true,
            }
        }
        // off the cocycles the reading falls back to the dual pairing,
        // which agrees with `decode` on them
        let x = code.enc.decode(&zc).unwrap_or_else(|| {
            out.herald = true;
            BitVector::from_indices(code.k(), (0..code.k()).filter(|&m| code.dual.generator(m).dot(&zc)))
        });
        out.writes.push((reg, x));
        out
    }));
    ctx.release(b.qubits.iter().copied());
    part.c = c;
    part.declared = 2;
    part.regs.push(reg);
    Ok(part)
}

fn switch_down_part(ctx: &mut Ctx, b: &Block, h: usize) -> Result<Part> {
    let plan = ctx.down_plan(&b.code, h)?;
    let mut part = Part::new("switch_down");
    let mut c = Circuit::new(0);
    let f = plan.frame;
    let recs = c.push_gates(plan.meas.iter().map(|&cell| f.mz(b.qubits[cell])).collect());
    let (cfg, r2, pl, qs) = (ctx.cfg, recs.clone(), plan.clone(), b.qubits.clone());
    c.push_hook(Hook::new("switch_fix", recs, vec![], vec![], move |inp| {
        let mut out = HookOutput::default();
        let i = pl.level;
        let z = bits(&r2, inp.meas);
        let d = pl.restricted.coboundary(i, &z);
        let a = match ss_flip_syn(&pl.restricted, i, &d, &cfg) {
            Ok(res) => res.correction,
            Err(_) => {
                out.herald = true;
                return out;
            }
        };
        let Some((_, cl)) = pl.enc_l.decode_full(&z.xor(&a)) else {
            out.herald = true;
            return out;
        };
        let cfull = cl.scatter(pl.full.size(i - 1), &pl.prev);
        let y = pl.full.coboundary(i - 1, &cfull);
        for ret in &pl.retained {
            for &cell in ret {
                if y.get(cell) {
                    f.push_x(&mut out, qs[cell]);
                }
            }
        }
        out
    }));
    ctx.release(plan.meas.iter().map(|&cell| b.qubits[cell]));
    part.c = c;
    part.declared = 2;
    part.outputs = plan
        .retained
        .iter()
        .map(|ret| Block { code: plan.out.clone(), qubits: ret.iter().map(|&cell| b.qubits[cell]).collect() })
        .collect();
    Ok(part)
}

/// Canonical code of the `|L|` blocks produced by switching `target` down in
/// direction `h`.
pub fn lower_code(ctx: &mut Ctx, target: &Arc<DecoratedCode>, h: usize) -> Result<Arc<DecoratedCode>> {
    let mut fs = target.product.factors.clone();
    let kind = fs.remove(h).kind;
    let lvl = target.level().checked_sub(usize::from(kind == FactorKind::Cochain)).ok_or(GadgetError::BadLevel {
        gadget: "switch_up",
        level: 0,
        lo: 1,
        hi: target.r(),
    })?;
    ctx.code(fs, lvl)
}

/// Encoding position in `target` of logical `m` of lower block `l` after
/// switching up in direction `h`.
pub fn lifted_position(target: &DecoratedCode, lower: &DecoratedCode, h: usize, l: usize, m: usize) -> Option<usize> {
    let u = *target.product.factors[h].message.get(l)?;
    target.enc.position(&insert_cell(lower.enc.labels().get(m)?, h, Cell1::right(u)))
}

/// For each message vertex `L[l]`: target cell of every lower-code logical
/// qubit `c` (physical cell map) with `Right(L[l])` inserted at `h`.
fn lift_cells(target: &DecoratedCode, lower: &DecoratedCode, h: usize) -> Result<Vec<Vec<usize>>> {
    let ac = lower.complex();
    target.product.factors[h]
        .message
        .iter()
        .map(|&u| {
            (0..lower.n())
                .map(|c| {
                    let lab = insert_cell(ac.label(lower.level(), c), h, Cell1::right(u));
                    target.cell_of(&lab).ok_or_else(|| GadgetError::LabelMismatch(label_string(&lab)))
                })
                .collect()
        })
        .collect()
}

fn switch_up_part(ctx: &mut Ctx, inputs: &[Block], target: &Arc<DecoratedCode>, h: usize) -> Result<Part> {
    let r = target.r();
    if h >= r {
        return Err(GadgetError::BadDirection(h));
    }
    let kind = target.product.factors[h].kind;
    let f = if kind == FactorKind::Cochain { Frame::Z } else { Frame::X };
    let fc = ctx.framed(target, f)?;
    let i = fc.level();
    if !(2..r).contains(&i) {
        return Err(GadgetError::BadLevel { gadget: "switch_up", level: i, lo: 2, hi: r - 1 });
    }
    let l = target.product.factors[h].message.clone();
    if l.is_empty() {
        return Err(GadgetError::NoMessage(h));
    }
    let lower = lower_code(ctx, target, h)?;
    if inputs.len() != l.len() || inputs.iter().any(|b| !same_code(&b.code, &lower)) {
        return Err(GadgetError::CodeMismatch);
    }
    let lift = lift_cells(target, &lower, h)?;
    // logical positions in the framed target for each (block, lower logical)
    let fl = ctx.framed(&lower, f)?;
    let lift_logical: Vec<Vec<usize>> = l
        .iter()
        .map(|&u| {
            fl.enc
                .labels()
                .iter()
                .map(|lab| {
                    let full = insert_cell(lab, h, Cell1::right(u));
                    fc.enc.position(&full).ok_or_else(|| GadgetError::LabelMismatch(label_string(&full)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut d_factors = target.product.factors.clone();
    d_factors[h] = d_factors[h].dual();
    let d_level = if f.swap { target.level() + 1 } else { target.level() - 1 };
    let d_code = ctx.code(d_factors, d_level)?;

    let mut part = Part::new("switch_up");
    // wire 3: |0⟩ of the target; wire 2: |+⟩ of the lower code via the
    // flipped-factor preparation and a switch down
    let front = ctx.par([0, 1], |ctx, w| {
        if w == 0 {
            plus_prep(ctx, target, f.flip())
        } else {
            let mut p = plus_prep(ctx, &d_code, f)?;
            let (prepped, _) = (std::mem::take(&mut p.outputs), ());
            let (outs, _) = p.then(switch_down_part(ctx, &prepped[0], h)?);
            p.outputs = outs;
            Ok(p)
        }
    })?;
    let (mut wires, _) = part.then(front);
    let wire3 = wires.remove(0);
    let wire2 = wires;
    if wire2.iter().any(|b| !same_code(&b.code, &lower)) {
        return Err(GadgetError::CodeMismatch);
    }
    let mut c = Circuit::new(0);
    let mut g = Vec::new();
    for (lidx, blk) in wire2.iter().enumerate() {
        for (cell, &q) in blk.qubits.iter().enumerate() {
            g.push(f.cnot(q, wire3.qubits[lift[lidx][cell]]));
        }
    }
    c.push_gates(g);
    let mut g = Vec::new();
    for (b1, b2) in inputs.iter().zip(&wire2) {
        for (&q1, &q2) in b1.qubits.iter().zip(&b2.qubits) {
            g.push(f.cnot(q1, q2));
        }
    }
    c.push_gates(g);
    let mut gates_part = Part::new("");
    gates_part.c = c;
    gates_part.declared = 2;
    gates_part.components.clear();
    part.then(gates_part);

    let x_basis = if f.swap { Pauli::Z } else { Pauli::X };
    let jobs: Vec<(Block, Pauli)> =
        inputs.iter().map(|b| (b.clone(), x_basis)).chain(wire2.iter().map(|b| (b.clone(), x_basis.other()))).collect();
    let mut tail = ctx.par(jobs, |ctx, (b, p)| measure_part(ctx, &b, p))?;
    let nl = l.len();
    let (m1, m2) = (tail.regs[..nl].to_vec(), tail.regs[nl..].to_vec());
    let (xs, zs): (Vec<BitVector>, Vec<BitVector>) = (
        (0..fc.k()).map(|m| fc.enc.generator(m).clone()).collect(),
        (0..fc.k()).map(|m| fc.dual.generator(m).clone()).collect(),
    );
    let qs = wire3.qubits.clone();
    let reads: Vec<usize> = m1.iter().chain(&m2).copied().collect();
    let n = target.n();
    tail.c.push_hook(Hook::new("teleport_fix", vec![], reads, vec![], move |inp| {
        let mut out = HookOutput::default();
        let mut xv = BitVector::zeros(n);
        let mut zv = BitVector::zeros(n);
        for lidx in 0..nl {
            let (a, b) = (&inp.regs[m1[lidx]], &inp.regs[m2[lidx]]);
            for (m, &pos) in lift_logical[lidx].iter().enumerate() {
                if b.get(m) {
                    xv.xor_assign(&xs[pos]);
                }
                if a.get(m) {
                    zv.xor_assign(&zs[pos]);
                }
            }
        }
        xv.iter_ones().for_each(|q| f.push_x(&mut out, qs[q]));
        zv.iter_ones().for_each(|q| f.push_z(&mut out, qs[q]));
        out
    }));
    tail.declared += 1;
    tail.regs.clear();
    part.then(tail);
    part.outputs = vec![wire3];
    Ok(part)
}

fn cnot_same_part(ctrl: &Block, tgt: &Block) -> Result<Part> {
    if !same_code(&ctrl.code, &tgt.code) {
        return Err(GadgetError::CodeMismatch);
    }
    let mut part = Part::new("transversal_cnot_same");
    part.c.push_gates(ctrl.qubits.iter().zip(&tgt.qubits).map(|(&a, &b)| Gate::Cnot(a, b)).collect());
    part.declared = 1;
    part.outputs = vec![ctrl.clone(), tgt.clone()];
    Ok(part)
}

fn h_part(ctx: &mut Ctx, b: &Block) -> Result<Part> {
    if !pairing_holds(&b.code.enc, &b.code.dual) {
        return Err(GadgetError::Pairing);
    }
    let fs: Vec<Factor> = b.code.product.factors.iter().map(Factor::dual).collect();
    let out = ctx.code(fs, b.code.r() - b.code.level())?;
    let oc = out.complex().clone();
    let qubits = (0..out.n())
        .map(|c| {
            let lab = oc.label(out.level(), c);
            b.code.cell_of(lab).map(|x| b.qubits[x]).ok_or_else(|| GadgetError::LabelMismatch(label_string(lab)))
        })
        .collect::<Result<Vec<u32>>>()?;
    let mut part = Part::new("transversal_h");
    part.c.push_gates(b.qubits.iter().map(|&q| Gate::H(q)).collect());
    part.declared = 1;
    part.outputs = vec![Block { code: out, qubits }];
    Ok(part)
}

// ---------------------------------------------------------------------------
// Switching routes

fn down_ok(kind: FactorKind, level: usize, r: usize) -> bool {
    match kind {
        FactorKind::Cochain => level >= 2 && level < r,
        FactorKind::Chain => level >= 1 && level + 2 <= r,
    }
}

fn other(kind: FactorKind) -> FactorKind {
    match kind {
        FactorKind::Cochain => FactorKind::Chain,
        FactorKind::Chain => FactorKind::Cochain,
    }
}

/// Level after switching factor `h` from `kinds[h]` to `to`.
fn level_after(kinds: &[FactorKind], level: usize, h: usize, to: FactorKind) -> Option<usize> {
    let low = level.checked_sub(usize::from(kinds[h] == FactorKind::Cochain))?;
    Some(low + usize::from(to == FactorKind::Cochain))
}

/// Shortest sequence of single-factor type flips, each valid for both its
/// switch down and switch up, from `(kinds, level)` to a state meeting
/// `goal`. Moves are tried in increasing direction order.
fn route(kinds: &[FactorKind], level: usize, goal: impl Fn(&[FactorKind], usize) -> bool) -> Option<Vec<usize>> {
    let r = kinds.len();
    let start = (kinds.to_vec(), level);
    let mut prev: HashMap<(Vec<FactorKind>, usize), Option<((Vec<FactorKind>, usize), usize)>> = HashMap::new();
    prev.insert(start.clone(), None);
    let mut q = VecDeque::from([start]);
    while let Some(s) = q.pop_front() {
        if goal(&s.0, s.1) {
            let mut path = Vec::new();
            let mut cur = s;
            while let Some(Some((p, h))) = prev.get(&cur).cloned() {
                path.push(h);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for h in 0..r {
            let to = other(s.0[h]);
            let Some(nl) = level_after(&s.0, s.1, h, to) else { continue };
            if !down_ok(s.0[h], s.1, r) || !down_ok(to, nl, r) {
                continue;
            }
            let mut nk = s.0.clone();
            nk[h] = to;
            let ns = (nk, nl);
            if !prev.contains_key(&ns) {
                prev.insert(ns.clone(), Some((s.clone(), h)));
                q.push_back(ns);
            }
        }
    }
    None
}

/// Switch factor `h` of `b` to kind `to` through a switch down and a switch up.
fn switch_pair(ctx: &mut Ctx, b: &Block, h: usize, to: FactorKind) -> Result<Part> {
    let mut part = Part::new("");
    part.components.clear();
    let (outs, _) = part.then(switch_down_part(ctx, b, h)?);
    let mut fs = b.code.product.factors.clone();
    fs[h].kind = to;
    let lvl = level_after(&b.code.kinds(), b.code.level(), h, to).ok_or(GadgetError::NoRoute)?;
    let target = ctx.code(fs, lvl)?;
    let (outs, _) = part.then(switch_up_part(ctx, &outs, &target, h)?);
    part.outputs = outs;
    Ok(part)
}

fn flips(ctx: &mut Ctx, part: &mut Part, blocks: Vec<Block>, path: &[usize]) -> Result<Vec<Block>> {
    let mut cur = blocks;
    for &h in path {
        let p = ctx.par(cur, |ctx, b| {
            let to = other(b.code.product.factors[h].kind);
            switch_pair(ctx, &b, h, to)
        })?;
        cur = part.then(p).0;
    }
    Ok(cur)
}

fn check_perm(pi: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if pi.len() != n || pi.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
        return Err(GadgetError::NotPermutation(n));
    }
    Ok(())
}

fn permute_part(ctx: &mut Ctx, blocks: &[Block], h: usize, pi: &[usize]) -> Result<Part> {
    let Some(first) = blocks.first() else { return Ok(Part::identity(Vec::new())) };
    if blocks.iter().any(|b| !same_code(&b.code, &first.code)) {
        return Err(GadgetError::CodeMismatch);
    }
    let code = first.code.clone();
    let r = code.r();
    if h >= r {
        return Err(GadgetError::BadDirection(h));
    }
    let nl = code.product.factors[h].message.len();
    if nl == 0 {
        return Err(GadgetError::NoMessage(h));
    }
    let kappa = blocks.len();
    check_perm(pi, kappa * nl)?;
    let (kinds, level) = (code.kinds(), code.level());
    let there = route(&kinds, level, |k, l| down_ok(k[h], l, r)).ok_or(GadgetError::NoRoute)?;
    let mut part = Part::new("permute_slabs");
    let cur = flips(ctx, &mut part, blocks.to_vec(), &there)?;
    let mid_code = cur[0].code.clone();
    let down = ctx.par(cur, |ctx, b| switch_down_part(ctx, &b, h))?;
    let (slabs, _) = part.then(down);
    // two rounds of three CNOT layers: slab x → ancilla x → slab π(x)
    let na = slabs[0].code.n();
    let anc: Vec<Vec<u32>> = (0..slabs.len()).map(|_| ctx.alloc(na)).collect();
    let mut sw = Part::new("");
    sw.components.clear();
    let swap3 = |c: &mut Circuit, pairs: &[(u32, u32)]| {
        for flip in [false, true, false] {
            c.push_gates(pairs.iter().map(|&(a, b)| if flip { Gate::Cnot(b, a) } else { Gate::Cnot(a, b) }).collect());
        }
    };
    let round1: Vec<(u32, u32)> = slabs.iter().zip(&anc).flat_map(|(s, a)| s.qubits.iter().copied().zip(a.iter().copied())).collect();
    swap3(&mut sw.c, &round1);
    let round2: Vec<(u32, u32)> =
        (0..slabs.len()).flat_map(|x| anc[x].iter().copied().zip(slabs[pi[x]].qubits.iter().copied())).collect();
    swap3(&mut sw.c, &round2);
    sw.declared = 6;
    part.then(sw);
    ctx.release(anc.into_iter().flatten());
    let groups: Vec<Vec<Block>> = slabs.chunks(nl).map(|c| c.to_vec()).collect();
    let up = ctx.par(groups, |ctx, g| switch_up_part(ctx, &g, &mid_code, h))?;
    let (cur, _) = part.then(up);
    let back = route(&mid_code.kinds(), mid_code.level(), |k, l| k == kinds.as_slice() && l == level).ok_or(GadgetError::NoRoute)?;
    let cur = flips(ctx, &mut part, cur, &back)?;
    let ec = ctx.par(cur, |ctx, b| err_corr_part(ctx, &b))?;
    let (cur, _) = part.then(ec);
    part.outputs = cur;
    Ok(part)
}

fn cyclic_part(ctx: &mut Ctx, b: &Block, ell: &[usize], s: &[usize]) -> Result<Part> {
    let r = b.code.r();
    if ell.len() != r || s.len() != r {
        return Err(GadgetError::BadDirection(ell.len().max(s.len())));
    }
    let mut part = Part::new("cyclic_shift");
    let mut cur = b.clone();
    for h in 0..r {
        let nl = b.code.product.factors[h].message.len();
        if ell[h] == 0 || ell[h] > nl {
            return Err(GadgetError::Position(ell.to_vec()));
        }
        if s[h] % ell[h] == 0 {
            continue;
        }
        let pi: Vec<usize> = (0..nl).map(|t| if t < ell[h] { (t + s[h]) % ell[h] } else { t }).collect();
        let (outs, _) = part.then(permute_part(ctx, &[cur], h, &pi)?);
        cur = outs.into_iter().next().expect("one block");
    }
    part.outputs = vec![cur];
    Ok(part)
}

/// Logical qubit `t` (message index per direction) of block `block`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pos {
    pub block: usize,
    pub t: Vec<usize>,
}

/// Moves the logical at `b` of `chain[0]` to slab position zero of
/// `chain[r]` and the content there back to `b`, by `2r − 1` two-block slab
/// exchanges.
fn extract(ctx: &mut Ctx, part: &mut Part, chain: &mut [Block], t: &[usize]) -> Result<()> {
    let r = t.len();
    let steps: Vec<usize> = (0..r).chain((0..r - 1).rev()).collect();
    for h in steps {
        let nl = chain[h].code.product.factors[h].message.len();
        let mut pi: Vec<usize> = (0..2 * nl).collect();
        pi.swap(t[h], nl);
        let (outs, _) = part.then(permute_part(ctx, &chain[h..h + 2], h, &pi)?);
        chain[h] = outs[0].clone();
        chain[h + 1] = outs[1].clone();
    }
    Ok(())
}

fn fresh_chain(ctx: &mut Ctx, part: &mut Part, code: &Arc<DecoratedCode>, count: usize) -> Result<Vec<Block>> {
    let p = ctx.par(0..count, |ctx, _| fresh(ctx, code))?;
    Ok(part.then(p).0)
}

fn check_pos(blocks: &[Block], p: &Pos) -> Result<()> {
    let b = blocks.get(p.block).ok_or_else(|| GadgetError::Position(p.t.clone()))?;
    if b.code.slab_logical(&p.t).is_none() {
        return Err(GadgetError::Position(p.t.clone()));
    }
    Ok(())
}

fn swap_part(ctx: &mut Ctx, blocks: &[Block], b: &Pos, b2: &Pos) -> Result<Part> {
    check_pos(blocks, b)?;
    check_pos(blocks, b2)?;
    if b == b2 {
        return Ok(Part::identity(blocks.to_vec()));
    }
    let code = blocks[b.block].code.clone();
    if !same_code(&code, &blocks[b2.block].code) {
        return Err(GadgetError::CodeMismatch);
    }
    let r = code.r();
    let mut part = Part::new("targeted_swap");
    let mut cur = blocks.to_vec();
    let mut carried = Vec::new();
    for p in [b, b2] {
        let mut chain = vec![cur[p.block].clone()];
        chain.extend(fresh_chain(ctx, &mut part, &code, r)?);
        extract(ctx, &mut part, &mut chain, &p.t)?;
        cur[p.block] = chain[0].clone();
        carried.push(chain.pop().expect("chain end"));
        ctx.release(chain.drain(1..).flat_map(|x| x.qubits));
    }
    for (p, src) in [(b, carried[1].clone()), (b2, carried[0].clone())] {
        let mut chain = vec![cur[p.block].clone()];
        chain.extend(fresh_chain(ctx, &mut part, &code, r - 1)?);
        chain.push(src);
        extract(ctx, &mut part, &mut chain, &p.t)?;
        cur[p.block] = chain[0].clone();
        ctx.release(chain.drain(1..).flat_map(|x| x.qubits));
    }
    let touched: Vec<usize> = if b.block == b2.block { vec![b.block] } else { vec![b.block, b2.block] };
    let ec = ctx.par(touched.clone(), |ctx, j| err_corr_part(ctx, &cur[j].clone()))?;
    let (outs, _) = part.then(ec);
    for (j, o) in touched.into_iter().zip(outs) {
        cur[j] = o;
    }
    part.outputs = cur;
    Ok(part)
}

fn targeted_cnot_part(ctx: &mut Ctx, blocks: &[Block], b: &Pos, b2: &Pos) -> Result<Part> {
    check_pos(blocks, b)?;
    check_pos(blocks, b2)?;
    if b == b2 {
        return Err(GadgetError::Position(b.t.clone()));
    }
    let code = blocks[b.block].code.clone();
    let r = code.r();
    let mut part = Part::new("targeted_cnot");
    let mut cur = blocks.to_vec();
    cur.extend(fresh_chain(ctx, &mut part, &code, 2)?);
    let (a1, a2) = (Pos { block: blocks.len(), t: vec![0; r] }, Pos { block: blocks.len() + 1, t: vec![0; r] });
    for (p, a) in [(b, &a1), (b2, &a2)] {
        cur = part.then(swap_part(ctx, &cur, p, a)?).0;
    }
    let (outs, _) = part.then(cnot_same_part(&cur[a1.block], &cur[a2.block])?);
    cur[a1.block] = outs[0].clone();
    cur[a2.block] = outs[1].clone();
    for (p, a) in [(b, &a1), (b2, &a2)] {
        cur = part.then(swap_part(ctx, &cur, p, a)?).0;
    }
    let ancillas = cur.split_off(blocks.len());
    ctx.release(ancillas.into_iter().flat_map(|x| x.qubits));
    let ec = ctx.par(cur, |ctx, x| err_corr_part(ctx, &x))?;
    part.outputs = part.then(ec).0;
    Ok(part)
}

fn hadamard_same_part(ctx: &mut Ctx, b: &Block) -> Result<Part> {
    let (kinds, level) = (b.code.kinds(), b.code.level());
    let mut part = Part::new("hadamard_same");
    let (outs, _) = part.then(h_part(ctx, b)?);
    let cur = outs.into_iter().next().expect("one block");
    let path = route(&cur.code.kinds(), cur.code.level(), |k, l| k == kinds.as_slice() && l == level).ok_or(GadgetError::NoRoute)?;
    let cur = flips(ctx, &mut part, vec![cur], &path)?;
    let (cur, _) = part.then(err_corr_part(ctx, &cur[0])?);
    part.outputs = cur;
    Ok(part)
}

fn targeted_h_part(ctx: &mut Ctx, blocks: &[Block], b: &Pos) -> Result<Part> {
    check_pos(blocks, b)?;
    let code = blocks[b.block].code.clone();
    let mut part = Part::new("targeted_h");
    let mut cur = blocks.to_vec();
    cur.extend(fresh_chain(ctx, &mut part, &code, 1)?);
    let a = Pos { block: blocks.len(), t: b.t.clone() };
    cur = part.then(swap_part(ctx, &cur, b, &a)?).0;
    let (outs, _) = part.then(hadamard_same_part(ctx, &cur[a.block])?);
    cur[a.block] = outs[0].clone();
    cur = part.then(swap_part(ctx, &cur, b, &a)?).0;
    let anc = cur.pop().expect("ancilla");
    ctx.release(anc.qubits);
    let ec = ctx.par(cur, |ctx, x| err_corr_part(ctx, &x))?;
    part.outputs = part.then(ec).0;
    Ok(part)
}

// ---------------------------------------------------------------------------
// Public builders

/// Single-shot preparation of `Enc(|+^k⟩)` or `Enc(|0^k⟩)` on fresh qubits.
pub fn state_prep(ctx: &mut Ctx, code: &Arc<DecoratedCode>, basis: PrepBasis) -> Result<GadgetSpec> {
    let part = prep_part(ctx, code, basis)?;
    let ch = format!("prepare Enc(|{}^k⟩), k={}", if basis == PrepBasis::Plus { "+" } else { "0" }, code.k());
    finish(ctx, "state_prep", Vec::new(), part, ch)
}

/// Z-side then X-side syndrome extraction, each followed by a flip-decoder
/// correction.
pub fn err_corr(ctx: &mut Ctx, b: &Block) -> Result<GadgetSpec> {
    let part = err_corr_part(ctx, b)?;
    finish(ctx, "err_corr", vec![b.clone()], part, "identity".into())
}

/// Transversal measurement and decoding; the logical outcome lands in
/// `registers[0]`.
pub fn measure_logical(ctx: &mut Ctx, b: &Block, basis: Pauli) -> Result<GadgetSpec> {
    let part = measure_part(ctx, b, basis)?;
    finish(ctx, "measure_logical", vec![b.clone()], part, format!("measure logical {basis:?}^k"))
}

/// Measures out direction `h`, leaving one block per message vertex.
pub fn switch_down(ctx: &mut Ctx, b: &Block, h: usize) -> Result<GadgetSpec> {
    let part = switch_down_part(ctx, b, h)?;
    let ch = format!("restrict to M^A x L in direction {h} ({} blocks)", part.outputs.len());
    finish(ctx, "switch_down", vec![b.clone()], part, ch)
}

/// Teleports `|L|` lower blocks into one block of `target`, padding the
/// remaining logicals with |0⟩.
pub fn switch_up(ctx: &mut Ctx, inputs: &[Block], target: &Arc<DecoratedCode>, h: usize) -> Result<GadgetSpec> {
    let part = switch_up_part(ctx, inputs, target, h)?;
    finish(ctx, "switch_up", inputs.to_vec(), part, format!("embed M^A x L in direction {h}, pad |0>"))
}

pub fn transversal_cnot_same(ctx: &mut Ctx, ctrl: &Block, tgt: &Block) -> Result<GadgetSpec> {
    let part = cnot_same_part(ctrl, tgt)?;
    finish(ctx, "transversal_cnot_same", vec![ctrl.clone(), tgt.clone()], part, "CNOT^k".into())
}

/// CNOTs from each lower block `l` into the target cells with `Right(L[l])`
/// in direction `h`: a logical CNOT on the shared labels.
pub fn transversal_cnot_diff(ctx: &mut Ctx, ctrl: &[Block], tgt: &Block, h: usize) -> Result<GadgetSpec> {
    if h >= tgt.code.r() {
        return Err(GadgetError::BadDirection(h));
    }
    if tgt.code.product.factors[h].kind != FactorKind::Cochain {
        return Err(GadgetError::NotCochain(h));
    }
    let lower = lower_code(ctx, &tgt.code, h)?;
    if ctrl.len() != tgt.code.product.factors[h].message.len() || ctrl.iter().any(|b| !same_code(&b.code, &lower)) {
        return Err(GadgetError::CodeMismatch);
    }
    let lift = lift_cells(&tgt.code, &lower, h)?;
    let mut part = Part::new("transversal_cnot_diff");
    let gates = ctrl
        .iter()
        .enumerate()
        .flat_map(|(l, b)| b.qubits.iter().enumerate().map(move |(c, &q)| (l, c, q)))
        .map(|(l, c, q)| Gate::Cnot(q, tgt.qubits[lift[l][c]]))
        .collect();
    part.c.push_gates(gates);
    part.declared = 1;
    let mut outs = ctrl.to_vec();
    outs.push(tgt.clone());
    part.outputs = outs.clone();
    finish(ctx, "transversal_cnot_diff", outs, part, format!("CNOT on M^A x L labels, direction {h}"))
}

/// `H` on every qubit; the output block carries the dual-complex code.
pub fn transversal_h(ctx: &mut Ctx, b: &Block) -> Result<GadgetSpec> {
    let part = h_part(ctx, b)?;
    finish(ctx, "transversal_h", vec![b.clone()], part, "H^k onto dual code".into())
}

/// Logical `H` on every mask qubit, returning to the input code.
pub fn hadamard_same(ctx: &mut Ctx, b: &Block) -> Result<GadgetSpec> {
    let part = hadamard_same_part(ctx, b)?;
    finish(ctx, "hadamard_same", vec![b.clone()], part, "H on mask".into())
}

/// Permutes the direction-`h` slabs of `blocks`: slab `t` of block `j`
/// (index `j·|L| + t`) moves to index `pi[j·|L| + t]`.
pub fn permute_slabs(ctx: &mut Ctx, blocks: &[Block], h: usize, pi: &[usize]) -> Result<GadgetSpec> {
    let part = permute_part(ctx, blocks, h, pi)?;
    finish(ctx, "permute_slabs", blocks.to_vec(), part, format!("slab permutation {pi:?} in direction {h}"))
}

/// Adds `s` to the mask position modulo `ell` in each direction.
pub fn cyclic_shift(ctx: &mut Ctx, b: &Block, ell: &[usize], s: &[usize]) -> Result<GadgetSpec> {
    let part = cyclic_part(ctx, b, ell, s)?;
    finish(ctx, "cyclic_shift", vec![b.clone()], part, format!("shift by {s:?} mod {ell:?}"))
}

pub fn targeted_swap(ctx: &mut Ctx, blocks: &[Block], b: &Pos, b2: &Pos) -> Result<GadgetSpec> {
    let part = swap_part(ctx, blocks, b, b2)?;
    finish(ctx, "targeted_swap", blocks.to_vec(), part, format!("swap {b:?} <-> {b2:?}"))
}

/// Logical CNOT from `b` to `b2`; intra-block when both name the same block.
pub fn targeted_cnot(ctx: &mut Ctx, blocks: &[Block], b: &Pos, b2: &Pos) -> Result<GadgetSpec> {
    let part = targeted_cnot_part(ctx, blocks, b, b2)?;
    finish(ctx, "targeted_cnot", blocks.to_vec(), part, format!("CNOT {b:?} -> {b2:?}"))
}

pub fn targeted_h(ctx: &mut Ctx, blocks: &[Block], b: &Pos) -> Result<GadgetSpec> {
    let part = targeted_h_part(ctx, blocks, b)?;
    finish(ctx, "targeted_h", blocks.to_vec(), part, format!("H at {b:?}"))
}

/// Prepares the `r`-dimensional code in its supported basis, then switches
/// down along the lowest valid direction: `|L|` blocks of an
/// `(r−1)`-dimensional code.
pub fn bulk_2d_prep(ctx: &mut Ctx, code: &Arc<DecoratedCode>) -> Result<GadgetSpec> {
    let basis = supported_prep(code).ok_or(GadgetError::BadLevel {
        gadget: "bulk_2d_prep",
        level: code.level(),
        lo: 0,
        hi: code.r().saturating_sub(2),
    })?;
    let r = code.r();
    let h = (0..r)
        .find(|&h| !code.product.factors[h].message.is_empty() && down_ok(code.product.factors[h].kind, code.level(), r))
        .ok_or(GadgetError::NoRoute)?;
    let mut part = Part::new("bulk_2d_prep");
    let (outs, _) = part.then(prep_part(ctx, code, basis)?);
    let (outs, _) = part.then(switch_down_part(ctx, &outs[0], h)?);
    part.outputs = outs;
    let ch = format!("{} blocks of |{}^k'⟩ (direction {h})", part.outputs.len(), if basis == PrepBasis::Plus { "+" } else { "0" });
    finish(ctx, "bulk_2d_prep", Vec::new(), part, ch)
}

/// Z-basis memory: reset data to |0…0⟩, `rounds` of Z-check extraction with
/// flip correction, then a logical Z measurement into `registers[0]`.
/// Noiselessly every logical outcome is 0.
pub fn z_memory(ctx: &mut Ctx, code: &Arc<DecoratedCode>, rounds: usize) -> Result<GadgetSpec> {
    let b = ctx.block(code);
    let mut part = Part::new("z_memory");
    let mut reset = Part::new("");
    reset.c.push_gates(b.qubits.iter().map(|&q| Frame::Z.reset_zero(q)).collect());
    reset.declared = 1;
    part.then(reset);
    for _ in 0..rounds {
        part.then(z_round(ctx, code, Frame::Z, &b.qubits)?);
    }
    let (_, regs) = part.then(measure_part(ctx, &b, Pauli::Z)?);
    part.regs = regs;
    finish(ctx, "z_memory", Vec::new(), part, "logical Z memory".into())
}

// ---------------------------------------------------------------------------
// Logical state preparation and readout for the exact engine

/// Logical input for one qubit of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicalInput {
    Zero,
    One,
    Plus,
}

/// Encoded product state on `n` qubits: each listed block holds the given
/// logical inputs (by encoding position), everything else is |0⟩.
pub fn encoded_state(n: usize, blocks: &[(&Block, &[LogicalInput])]) -> StabilizerState {
    let mut gens = Vec::new();
    let mut y = BitVector::zeros(n);
    for (b, inp) in blocks {
        assert_eq!(inp.len(), b.code.k());
        for g in b.code.complex().coboundary_basis(b.code.level()) {
            gens.push(b.scatter(&g, n));
        }
        for (m, li) in inp.iter().enumerate() {
            let g = b.scatter(b.code.enc.generator(m), n);
            match li {
                LogicalInput::Zero => {}
                LogicalInput::One => y.xor_assign(&g),
                LogicalInput::Plus => gens.push(g),
            }
        }
    }
    StabilizerState::css(n, &gens, &y)
}

/// Logical Z eigenvalue bit of position `m` (`None` if not definite).
pub fn logical_z(state: &StabilizerState, b: &Block, m: usize) -> Option<bool> {
    let n = state.n();
    state.expectation(&BitVector::zeros(n), &b.scatter(b.code.dual.generator(m), n))
}

/// Logical X eigenvalue bit of position `m`.
pub fn logical_x(state: &StabilizerState, b: &Block, m: usize) -> Option<bool> {
    let n = state.n();
    state.expectation(&b.scatter(b.code.enc.generator(m), n), &BitVector::zeros(n))
}

/// Whether every stabilizer generator of the block's code has eigenvalue +1.
pub fn in_codespace(state: &StabilizerState, b: &Block) -> bool {
    let n = state.n();
    let zero = BitVector::zeros(n);
    let zc = b.code.code.z_checks();
    let xc = b.code.code.x_checks();
    (0..zc.rows()).all(|r| state.expectation(&zero, &b.scatter(&zc.row_vec(r), n)) == Some(false))
        && (0..xc.rows()).all(|r| state.expectation(&b.scatter(&xc.row_vec(r), n), &zero) == Some(false))
}

/// Noiseless exact run of a gadget from `state`.
pub fn run_noiseless(spec: &GadgetSpec, state: StabilizerState, seed: u64) -> Result<ExactRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(exact_run_from(&spec.circuit, &Fault::new(), state, &mut rng)?)
}

/// Builds the product of star graphs `stars(1, d_h)` with factor kinds
/// `kinds` and message sets `{0, …, m_h − 1}`.
pub fn star_product(degrees: &[usize], messages: &[usize], kinds: &[FactorKind]) -> Result<Vec<Factor>> {
    degrees
        .iter()
        .zip(messages)
        .zip(kinds)
        .map(|((&d, &m), &k)| {
            let g = Arc::new(crate::expander::BipartiteGraph::stars(1, d));
            Ok(Factor::with_message(g, k, &(0..m).collect::<Vec<_>>())?)
        })
        .collect()
}
