//! Execution engines for faulted Clifford circuits: an exact stabilizer
//! tableau, a Pauli-frame engine relative to a reference run, and an iid
//! fault sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuits::{corrupt, Circuit, CircuitError, Fault, FaultPauli, Gate, HookOutput};
use crate::f2la::{BitMatrix, BitVector, Rref};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("reference has {reference} records, circuit makes {circuit}")]
    ReferenceMismatch { reference: usize, circuit: usize },
    #[error("initial state has {state} qubits, circuit uses {circuit}")]
    StateSize { state: usize, circuit: usize },
    #[error("noise parameter {0} outside [0, 1]")]
    BadProbability(f64),
}

/// Aaronson–Gottesman tableau: rows `0..n` are destabilizers, `n..2n`
/// stabilizers. Bit `(x, z) = (1, 1)` denotes `Y`.
#[derive(Clone)]
pub struct StabilizerState {
    n: usize,
    words: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<bool>,
}

impl std::fmt::Debug for StabilizerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StabilizerState(n={})", self.n)
    }
}

/// Identifies a random outcome: a recorded measurement or the hidden
/// measurement inside a reset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Meas(usize),
    Reset(usize),
}

/// Measurement outcome choice for random measurements.
pub trait OutcomeSource {
    fn draw(&mut self, slot: Slot) -> bool;
}

impl OutcomeSource for ChaCha8Rng {
    fn draw(&mut self, _slot: Slot) -> bool {
        self.gen()
    }
}

/// Forces chosen slots to given values; others come from the rng.
pub struct Forced<'a> {
    pub values: &'a dyn Fn(Slot) -> Option<bool>,
    pub rng: ChaCha8Rng,
}

impl OutcomeSource for Forced<'_> {
    fn draw(&mut self, slot: Slot) -> bool {
        (self.values)(slot).unwrap_or_else(|| self.rng.gen())
    }
}

impl StabilizerState {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let mut s = StabilizerState { n, words, xs: vec![0; 2 * n * words], zs: vec![0; 2 * n * words], signs: vec![false; 2 * n] };
        for q in 0..n {
            s.set_x(q, q, true);
            s.set_z(n + q, q, true);
        }
        s
    }

    /// The CSS state `Σ_{b ∈ span(xgens)} |y + b⟩`.
    pub fn css(n: usize, xgens: &[BitVector], y: &BitVector) -> Self {
        let words = n.div_ceil(64).max(1);
        let mut s = StabilizerState { n, words, xs: vec![0; 2 * n * words], zs: vec![0; 2 * n * words], signs: vec![false; 2 * n] };
        let rref = Rref::new(&BitMatrix::from_rows(n, xgens));
        let mut is_pivot = vec![false; n];
        for &p in &rref.pivots {
            is_pivot[p] = true;
        }
        let mut row = 0;
        // X stabilizers with Z_pivot destabilizers
        for (j, &p) in rref.pivots.iter().enumerate() {
            for q in rref.matrix.row_iter_ones(j) {
                s.set_x(n + row, q, true);
            }
            s.set_z(row, p, true);
            row += 1;
        }
        // Z stabilizers h_q = e_q + Σ_j G[j][q] e_{p_j} with X_q destabilizers
        for q in (0..n).filter(|&q| !is_pivot[q]) {
            let mut parity = y.get(q);
            s.set_z(n + row, q, true);
            for (j, &p) in rref.pivots.iter().enumerate() {
                if rref.matrix.get(j, q) {
                    s.set_z(n + row, p, true);
                    parity ^= y.get(p);
                }
            }
            s.signs[n + row] = parity;
            s.set_x(row, q, true);
            row += 1;
        }
        debug_assert_eq!(row, n);
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn xb(&self, row: usize, q: usize) -> bool {
        self.xs[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    #[inline]
    fn zb(&self, row: usize, q: usize) -> bool {
        self.zs[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn set_x(&mut self, row: usize, q: usize, b: bool) {
        let w = &mut self.xs[row * self.words + q / 64];
        *w = (*w & !(1 << (q % 64))) | ((b as u64) << (q % 64));
    }

    fn set_z(&mut self, row: usize, q: usize, b: bool) {
        let w = &mut self.zs[row * self.words + q / 64];
        *w = (*w & !(1 << (q % 64))) | ((b as u64) << (q % 64));
    }

    pub fn h(&mut self, q: usize) {
        let (w, m) = (q / 64, 1u64 << (q % 64));
        for r in 0..2 * self.n {
            let i = r * self.words + w;
            let (x, z) = (self.xs[i] & m, self.zs[i] & m);
            self.signs[r] ^= x != 0 && z != 0;
            self.xs[i] = (self.xs[i] & !m) | z;
            self.zs[i] = (self.zs[i] & !m) | x;
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        for r in 0..2 * self.n {
            let (xc, zc, xt, zt) = (self.xb(r, c), self.zb(r, c), self.xb(r, t), self.zb(r, t));
            self.signs[r] ^= xc && zt && (xt == zc);
            if xc {
                self.set_x(r, t, !xt);
            }
            if zt {
                self.set_z(r, c, !zc);
            }
        }
    }

    pub fn x(&mut self, q: usize) {
        for r in 0..2 * self.n {
            if self.zb(r, q) {
                self.signs[r] ^= true;
            }
        }
    }

    pub fn z(&mut self, q: usize) {
        for r in 0..2 * self.n {
            if self.xb(r, q) {
                self.signs[r] ^= true;
            }
        }
    }

    /// Row `h` becomes row `h` times row `i`, tracking the sign.
    fn rowsum(&mut self, h: usize, i: usize) {
        let (mut cnt1, mut cnt2) = (0u64, 0u64);
        let mut pop1 = 0u32;
        let mut pop2 = 0u32;
        for w in 0..self.words {
            let (hi, ii) = (h * self.words + w, i * self.words + w);
            let (x2, z2) = (self.xs[ii], self.zs[ii]);
            let (ox1, oz1) = (self.xs[hi], self.zs[hi]);
            let x1 = ox1 ^ x2;
            let z1 = oz1 ^ z2;
            self.xs[hi] = x1;
            self.zs[hi] = z1;
            let x1z2 = ox1 & z2;
            let anti = (x2 & oz1) ^ x1z2;
            cnt2 ^= (cnt1 ^ x1 ^ z1 ^ x1z2) & anti;
            cnt1 ^= anti;
            pop1 += cnt1.count_ones();
            pop2 += cnt2.count_ones();
            cnt1 = 0;
            cnt2 = 0;
        }
        let log_i = pop1 + 2 * pop2;
        self.signs[h] ^= self.signs[i] ^ (log_i & 2 != 0);
    }

    /// Multiplies the Pauli `(x, z, sign)` by row `i` in place.
    fn mul_into(x: &mut [u64], z: &mut [u64], sign: &mut bool, s: &StabilizerState, i: usize) {
        let mut log_i = 0u32;
        for w in 0..s.words {
            let ii = i * s.words + w;
            let (x2, z2) = (s.xs[ii], s.zs[ii]);
            let (ox1, oz1) = (x[w], z[w]);
            x[w] = ox1 ^ x2;
            z[w] = oz1 ^ z2;
            let x1z2 = ox1 & z2;
            let anti = (x2 & oz1) ^ x1z2;
            let cnt2 = (x[w] ^ z[w] ^ x1z2) & anti;
            log_i += anti.count_ones() + 2 * cnt2.count_ones();
        }
        *sign ^= s.signs[i] ^ (log_i & 2 != 0);
    }

    /// Measures `Z_q`. Returns the outcome and whether it was random.
    pub fn measure_z(&mut self, q: usize, slot: Slot, src: &mut dyn OutcomeSource) -> (bool, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&r| self.xb(r, q)) {
            for r in 0..2 * n {
                if r != p && self.xb(r, q) {
                    self.rowsum(r, p);
                }
            }
            let d = p - n;
            let (src_lo, dst_lo) = (p * self.words, d * self.words);
            self.xs.copy_within(src_lo..src_lo + self.words, dst_lo);
            self.zs.copy_within(src_lo..src_lo + self.words, dst_lo);
            self.signs[d] = self.signs[p];
            for w in 0..self.words {
                self.xs[src_lo + w] = 0;
                self.zs[src_lo + w] = 0;
            }
            self.set_z(p, q, true);
            let out = src.draw(slot);
            self.signs[p] = out;
            (out, true)
        } else {
            let mut x = vec![0u64; self.words];
            let mut z = vec![0u64; self.words];
            let mut sign = false;
            for d in 0..n {
                if self.xb(d, q) {
                    Self::mul_into(&mut x, &mut z, &mut sign, self, d + n);
                }
            }
            (sign, false)
        }
    }

    pub fn measure_x(&mut self, q: usize, slot: Slot, src: &mut dyn OutcomeSource) -> (bool, bool) {
        self.h(q);
        let r = self.measure_z(q, slot, src);
        self.h(q);
        r
    }

    /// Resets to `|0⟩`, returning the hidden measurement outcome.
    pub fn reset_z(&mut self, q: usize, slot: Slot, src: &mut dyn OutcomeSource) -> bool {
        let o = self.measure_z(q, slot, src).0;
        if o {
            self.x(q);
        }
        o
    }

    /// Resets to `|+⟩`, returning the hidden measurement outcome.
    pub fn reset_x(&mut self, q: usize, slot: Slot, src: &mut dyn OutcomeSource) -> bool {
        let o = self.measure_x(q, slot, src).0;
        if o {
            self.z(q);
        }
        o
    }

    /// Applies `X^x Z^z`.
    pub fn apply_pauli(&mut self, x: &[u32], z: &[u32]) {
        for &q in x {
            self.x(q as usize);
        }
        for &q in z {
            self.z(q as usize);
        }
    }

    /// Eigenvalue of the Hermitian Pauli with support `(x, z)` (Y where both
    /// are set): `Some(false)` for +1, `Some(true)` for −1, `None` when the
    /// outcome would be random.
    pub fn expectation(&self, x: &BitVector, z: &BitVector) -> Option<bool> {
        let n = self.n;
        let anti = |r: usize| -> bool {
            let mut par = 0u32;
            for w in 0..self.words {
                let i = r * self.words + w;
                let px = x.words().get(w).copied().unwrap_or(0);
                let pz = z.words().get(w).copied().unwrap_or(0);
                par ^= ((self.xs[i] & pz) ^ (self.zs[i] & px)).count_ones() & 1;
            }
            par == 1
        };
        if (n..2 * n).any(anti) {
            return None;
        }
        let mut ax = vec![0u64; self.words];
        let mut az = vec![0u64; self.words];
        let mut sign = false;
        for d in 0..n {
            if anti(d) {
                Self::mul_into(&mut ax, &mut az, &mut sign, self, d + n);
            }
        }
        debug_assert!(ax.iter().zip(x.words()).all(|(a, b)| a == b));
        debug_assert!(az.iter().zip(z.words()).all(|(a, b)| a == b));
        Some(sign)
    }

    /// Stabilizer generators as `(x, z, sign)`.
    pub fn stabilizers(&self) -> Vec<(BitVector, BitVector, bool)> {
        (self.n..2 * self.n)
            .map(|r| {
                let lo = r * self.words;
                (
                    BitVector::from_words(self.n, self.xs[lo..lo + self.words].to_vec()),
                    BitVector::from_words(self.n, self.zs[lo..lo + self.words].to_vec()),
                    self.signs[r],
                )
            })
            .collect()
    }

    /// Symplectic consistency: stabilizers commute, destabilizer `i`
    /// anticommutes exactly with stabilizer `i`.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        let sym = |a: usize, b: usize| -> bool {
            let mut par = 0;
            for w in 0..self.words {
                let (i, j) = (a * self.words + w, b * self.words + w);
                par ^= ((self.xs[i] & self.zs[j]) ^ (self.zs[i] & self.xs[j])).count_ones() & 1;
            }
            par == 1
        };
        (0..2 * n).all(|a| (0..2 * n).all(|b| sym(a, b) == (a % n == b % n && a != b)))
    }
}

/// Result of an exact run.
#[derive(Clone, Debug)]
pub struct ExactRun {
    pub record: Vec<bool>,
    /// Whether each record was a random outcome.
    pub random: Vec<bool>,
    /// Hidden outcomes of resets, in execution order.
    pub hidden: Vec<bool>,
    pub registers: Vec<BitVector>,
    pub hook_outputs: Vec<HookOutput>,
    pub herald: bool,
    pub state: StabilizerState,
}

/// Runs on the tableau from `|0…0⟩` with random outcomes drawn from `seed`.
pub fn exact_run(c: &Circuit, fault: &Fault, seed: u64) -> Result<ExactRun, SimError> {
    let state = StabilizerState::zero(c.qubit_count());
    exact_run_from(c, fault, state, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Runs from a given state with a given outcome source.
pub fn exact_run_from(
    c: &Circuit,
    fault: &Fault,
    mut state: StabilizerState,
    src: &mut dyn OutcomeSource,
) -> Result<ExactRun, SimError> {
    if state.n() < c.qubit_count() {
        return Err(SimError::StateSize { state: state.n(), circuit: c.qubit_count() });
    }
    let cc = corrupt(c, fault)?;
    let mut record = Vec::with_capacity(c.measurement_count());
    let mut random = Vec::with_capacity(c.measurement_count());
    let mut registers: Vec<BitVector> = c.register_lens().iter().map(|&l| BitVector::zeros(l)).collect();
    let mut hidden = Vec::new();
    let mut hook_outputs = Vec::new();
    let mut herald = false;
    for layer in &cc.layers {
        for h in &layer.hooks {
            let out = h.run(&record, &registers);
            state.apply_pauli(&out.x, &out.z);
            for (r, v) in &out.writes {
                registers[*r] = v.clone();
            }
            herald |= out.herald;
            hook_outputs.push(out);
        }
        for &(q, p) in &layer.fault {
            if p.has_x() {
                state.x(q as usize);
            }
            if p.has_z() {
                state.z(q as usize);
            }
        }
        for g in &layer.gates {
            match *g {
                Gate::X(q) => state.x(q as usize),
                Gate::Z(q) => state.z(q as usize),
                Gate::H(q) => state.h(q as usize),
                Gate::Cnot(a, b) => state.cnot(a as usize, b as usize),
                Gate::ResetZ(q) => hidden.push(state.reset_z(q as usize, Slot::Reset(hidden.len()), src)),
                Gate::ResetX(q) => hidden.push(state.reset_x(q as usize, Slot::Reset(hidden.len()), src)),
                Gate::MZ(q) | Gate::MX(q) => {
                    let rec = record.len();
                    let (o, rnd) = if matches!(g, Gate::MZ(_)) {
                        state.measure_z(q as usize, Slot::Meas(rec), src)
                    } else {
                        state.measure_x(q as usize, Slot::Meas(rec), src)
                    };
                    record.push(o);
                    random.push(rnd);
                }
            }
        }
    }
    Ok(ExactRun { record, random, hidden, registers, hook_outputs, herald, state })
}

/// Noiseless run whose records and hook outputs anchor frame simulation.
#[derive(Clone, Debug)]
pub struct Reference {
    pub record: Vec<bool>,
    pub random: Vec<bool>,
    pub hidden: Vec<bool>,
    pub hook_outputs: Vec<HookOutput>,
    pub registers: Vec<BitVector>,
}

impl Reference {
    pub fn new(c: &Circuit, seed: u64) -> Result<Self, SimError> {
        Ok(Self::from_run(exact_run(c, &Fault::new(), seed)?))
    }

    pub fn from_run(run: ExactRun) -> Self {
        Reference { record: run.record, random: run.random, hidden: run.hidden, hook_outputs: run.hook_outputs, registers: run.registers }
    }
}

/// Result of a frame run.
#[derive(Clone, Debug)]
pub struct FrameRun {
    /// Flip of each record relative to the reference.
    pub flips: Vec<bool>,
    /// `reference ⊕ flips`.
    pub record: Vec<bool>,
    /// Hidden reset outcomes on this branch.
    pub hidden: Vec<bool>,
    pub registers: Vec<BitVector>,
    pub herald: bool,
    pub x_frame: BitVector,
    pub z_frame: BitVector,
}

/// Propagates Pauli frames through the circuit. The initial Z frame,
/// measurements and resets randomize the frame bit that acts trivially on
/// the post-measurement state, so each shot follows a uniformly random
/// branch relative to the reference.
pub fn frame_run(c: &Circuit, fault: &Fault, reference: &Reference, seed: u64) -> Result<FrameRun, SimError> {
    if reference.record.len() != c.measurement_count() {
        return Err(SimError::ReferenceMismatch { reference: reference.record.len(), circuit: c.measurement_count() });
    }
    let n = c.qubit_count();
    let depth = c.depth();
    for &(t, q) in fault.entries.keys() {
        if q as usize >= n || t as usize > depth {
            return Err(CircuitError::FaultRange { qubit: q as usize, time: t as usize, qubits: n, depth }.into());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xf = vec![false; n];
    let mut zf: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let apply = |xf: &mut [bool], zf: &mut [bool], q: usize, p: FaultPauli| {
        xf[q] ^= p.has_x();
        zf[q] ^= p.has_z();
    };
    let mut flips = Vec::with_capacity(reference.record.len());
    let mut record = Vec::with_capacity(reference.record.len());
    let mut hidden = Vec::with_capacity(reference.hidden.len());
    let mut registers: Vec<BitVector> = c.register_lens().iter().map(|&l| BitVector::zeros(l)).collect();
    let mut herald = false;
    let mut hook_idx = 0;
    let mut t = 0;
    for (q, p) in fault.at(0) {
        apply(&mut xf, &mut zf, q, p);
    }
    for layer in &c.layers {
        for h in &layer.hooks {
            let out = h.run(&record, &registers);
            let r = &reference.hook_outputs[hook_idx];
            hook_idx += 1;
            for &q in out.x.iter().chain(&r.x) {
                xf[q as usize] ^= true;
            }
            for &q in out.z.iter().chain(&r.z) {
                zf[q as usize] ^= true;
            }
            for (ri, v) in out.writes {
                registers[ri] = v;
            }
            herald |= out.herald;
        }
        for &(q, p) in &layer.fault {
            apply(&mut xf, &mut zf, q as usize, p);
        }
        for g in &layer.gates {
            match *g {
                Gate::X(_) | Gate::Z(_) => {}
                Gate::H(q) => {
                    let q = q as usize;
                    std::mem::swap(&mut xf[q], &mut zf[q]);
                }
                Gate::Cnot(a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    xf[b] ^= xf[a];
                    zf[a] ^= zf[b];
                }
                Gate::ResetZ(q) => {
                    hidden.push(reference.hidden[hidden.len()] ^ xf[q as usize]);
                    xf[q as usize] = false;
                    zf[q as usize] = rng.gen();
                }
                Gate::ResetX(q) => {
                    hidden.push(reference.hidden[hidden.len()] ^ zf[q as usize]);
                    zf[q as usize] = false;
                    xf[q as usize] = rng.gen();
                }
                Gate::MZ(q) => {
                    let q = q as usize;
                    let f = xf[q];
                    zf[q] = rng.gen();
                    record.push(reference.record[flips.len()] ^ f);
                    flips.push(f);
                }
                Gate::MX(q) => {
                    let q = q as usize;
                    let f = zf[q];
                    xf[q] = rng.gen();
                    record.push(reference.record[flips.len()] ^ f);
                    flips.push(f);
                }
            }
        }
        if !layer.is_fault() {
            t += 1;
            for (q, p) in fault.at(t) {
                apply(&mut xf, &mut zf, q, p);
            }
        }
    }
    Ok(FrameRun {
        flips,
        record,
        hidden,
        registers,
        herald,
        x_frame: BitVector::from_bools(&xf),
        z_frame: BitVector::from_bools(&zf),
    })
}

/// iid Pauli noise: each location faults with probability `p`, the Pauli
/// drawn with weights `mix = [X, Y, Z]`. Locally stochastic with `ε = p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub p: f64,
    pub mix: [f64; 3],
}

impl NoiseModel {
    pub fn new(p: f64, mix: [f64; 3]) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::BadProbability(p));
        }
        Ok(NoiseModel { p, mix })
    }

    pub fn depolarizing(p: f64) -> Result<Self, SimError> {
        Self::new(p, [1.0, 1.0, 1.0])
    }

    fn pauli(&self, rng: &mut impl Rng) -> FaultPauli {
        let total: f64 = self.mix.iter().sum();
        let u = rng.gen::<f64>() * total;
        if u < self.mix[0] {
            FaultPauli::X
        } else if u < self.mix[0] + self.mix[1] {
            FaultPauli::Y
        } else {
            FaultPauli::Z
        }
    }
}

/// Samples iid faults over the locations `qubits × 0..=depth`.
pub fn sample_fault(model: &NoiseModel, c: &Circuit, seed: u64) -> Fault {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_fault_on(model, c.qubit_count(), c.depth(), &mut rng)
}

/// Geometric skipping between faulty locations keeps sampling cost
/// proportional to the number of faults.
pub fn sample_fault_on(model: &NoiseModel, n: usize, depth: usize, rng: &mut impl Rng) -> Fault {
    let mut f = Fault::new();
    let total = n * (depth + 1);
    if model.p <= 0.0 || total == 0 {
        return f;
    }
    let ln_q = (1.0 - model.p).ln();
    let mut loc = 0usize;
    loop {
        if model.p < 1.0 {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let skip = (u.ln() / ln_q).floor();
            if skip >= (total - loc) as f64 {
                break;
            }
            loc += skip as usize;
        }
        if loc >= total {
            break;
        }
        let p = model.pauli(rng);
        f.insert(loc % n, loc / n, p);
        loc += 1;
    }
    f
}

/// 64-bit FNV-1a of a record, for compact shot logs.
pub fn record_hash(bits: &[bool]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bits {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// One line-delimited shot record.
pub fn shot_line(seed: u64, fault_weight: usize, flips: &[bool], success: bool) -> String {
    format!("seed={seed} fault_weight={fault_weight} flip_hash={:016x} success={success}", record_hash(flips))
}
