//! Noiseless channel and depth checks over the gadget suite, run on the
//! exact engine from random logical inputs. Used by `gadget-verify`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuits::{Hook, HookOutput};
use crate::codes::Pauli;
use crate::gadgets::{
    bulk_2d_prep, cyclic_shift, encoded_state, err_corr, hadamard_same, in_codespace, lifted_position, logical_x,
    logical_z, measure_logical, permute_slabs, run_noiseless, state_prep, supported_prep, switch_down, switch_up,
    targeted_cnot, targeted_h, targeted_swap, transversal_cnot_same, transversal_h, Block, Ctx, DecoratedCode,
    GadgetError, GadgetSpec, LogicalInput, Pos, PrepBasis,
};

/// Every gadget name `verify_gadgets` knows.
pub const GADGETS: &[&str] = &[
    "state_prep",
    "err_corr",
    "measure_logical",
    "switch_down",
    "switch_up",
    "transversal_cnot_same",
    "transversal_h",
    "hadamard_same",
    "permute_slabs",
    "cyclic_shift",
    "targeted_swap",
    "targeted_cnot",
    "targeted_h",
    "bulk_2d_prep",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The gadget does not apply to this code.
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        })
    }
}

/// Verdict for one gadget.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub gadget: String,
    pub status: Status,
    /// Manifest line of every stage, or empty when skipped.
    pub manifest: Vec<String>,
    /// Mismatches (`want` vs `got`) or the reason for skipping.
    pub detail: String,
}

/// Expected reading of one output logical.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Expect {
    Z(bool),
    X(bool),
}

/// Stages run back to back, their inputs, and what the last stage must
/// produce.
struct Case {
    stages: Vec<(GadgetSpec, Option<usize>)>,
    inputs: Vec<(Block, Vec<LogicalInput>)>,
    outputs: Vec<Vec<Expect>>,
    register: Option<Vec<bool>>,
}

fn bit(li: LogicalInput) -> bool {
    li == LogicalInput::One
}

fn z_inputs(rng: &mut ChaCha8Rng, k: usize) -> Vec<LogicalInput> {
    (0..k).map(|_| if rng.gen() { LogicalInput::One } else { LogicalInput::Zero }).collect()
}

fn zs(inp: &[LogicalInput]) -> Vec<Expect> {
    inp.iter().map(|&li| Expect::Z(bit(li))).collect()
}

/// First direction a block of `code` can switch down along.
fn first_down(code: &Arc<DecoratedCode>) -> Option<usize> {
    (0..code.r()).find(|&h| {
        let mut probe = Ctx::new();
        let b = probe.block(code);
        switch_down(&mut probe, &b, h).is_ok()
    })
}

fn build(name: &str, ctx: &mut Ctx, code: &Arc<DecoratedCode>, rng: &mut ChaCha8Rng) -> Result<Case, GadgetError> {
    let w = code.w;
    let k = code.k();
    let single = |spec: GadgetSpec, depth: Option<usize>, inputs, outputs| Case {
        stages: vec![(spec, depth)],
        inputs,
        outputs,
        register: None,
    };
    Ok(match name {
        "state_prep" => {
            let basis = supported_prep(code).ok_or(GadgetError::BadLevel {
                gadget: "state_prep",
                level: code.level(),
                lo: 0,
                hi: code.r().saturating_sub(2),
            })?;
            let spec = state_prep(ctx, code, basis)?;
            let e = if basis == PrepBasis::Plus { Expect::X(false) } else { Expect::Z(false) };
            single(spec, Some(w + 6), vec![], vec![vec![e; k]])
        }
        "err_corr" => {
            let b = ctx.block(code);
            let spec = err_corr(ctx, &b)?;
            let inp = z_inputs(rng, k);
            let out = zs(&inp);
            single(spec, Some(2 * w + 10), vec![(b, inp)], vec![out])
        }
        "measure_logical" => {
            let b = ctx.block(code);
            let spec = measure_logical(ctx, &b, Pauli::Z)?;
            let inp = z_inputs(rng, k);
            let reg = inp.iter().map(|&li| bit(li)).collect();
            Case { stages: vec![(spec, Some(2))], inputs: vec![(b, inp)], outputs: vec![], register: Some(reg) }
        }
        "switch_down" => {
            let h = first_down(code).ok_or(GadgetError::NoRoute)?;
            let b = ctx.block(code);
            let spec = switch_down(ctx, &b, h)?;
            let inp = z_inputs(rng, k);
            let mut outs = Vec::new();
            for (l, o) in spec.outputs.iter().enumerate() {
                let mut v = Vec::new();
                for m in 0..o.code.k() {
                    let p = lifted_position(code, &o.code, h, l, m)
                        .ok_or_else(|| GadgetError::LabelMismatch(format!("block {l} logical {m}")))?;
                    v.push(Expect::Z(bit(inp[p])));
                }
                outs.push(v);
            }
            single(spec, Some(2), vec![(b, inp)], outs)
        }
        "switch_up" => {
            let h = first_down(code).ok_or(GadgetError::NoRoute)?;
            let b = ctx.block(code);
            let down = switch_down(ctx, &b, h)?;
            let up = switch_up(ctx, &down.outputs, code, h)?;
            let inp = z_inputs(rng, k);
            let out = zs(&inp);
            Case { stages: vec![(down, Some(2)), (up, None)], inputs: vec![(b, inp)], outputs: vec![out], register: None }
        }
        "transversal_cnot_same" => {
            let (a, b) = (ctx.block(code), ctx.block(code));
            let spec = transversal_cnot_same(ctx, &a, &b)?;
            let (ia, ib) = (z_inputs(rng, k), z_inputs(rng, k));
            let outs = vec![zs(&ia), ia.iter().zip(&ib).map(|(&x, &y)| Expect::Z(bit(x) ^ bit(y))).collect()];
            single(spec, Some(1), vec![(a, ia), (b, ib)], outs)
        }
        "transversal_h" => {
            let b = ctx.block(code);
            let spec = transversal_h(ctx, &b)?;
            let o = &spec.outputs[0].code;
            let inp = z_inputs(rng, k);
            let mut out = vec![Expect::X(false); o.k()];
            for (m, &li) in inp.iter().enumerate() {
                let p = o.enc.position(&code.enc.labels()[m]).ok_or_else(|| GadgetError::LabelMismatch(format!("{m}")))?;
                out[p] = Expect::X(bit(li));
            }
            single(spec, Some(1), vec![(b, inp)], vec![out])
        }
        "hadamard_same" => {
            let b = ctx.block(code);
            let spec = hadamard_same(ctx, &b)?;
            let inp = z_inputs(rng, k);
            let out = inp.iter().map(|&li| Expect::X(bit(li))).collect();
            single(spec, None, vec![(b, inp)], vec![out])
        }
        "permute_slabs" => {
            let h = (0..code.r()).rev().find(|&h| code.product.factors[h].message.len() >= 2).ok_or(GadgetError::NoMessage(0))?;
            let len = code.product.factors[h].message.len();
            let pi: Vec<usize> = (0..len).map(|x| (x + 1) % len).collect();
            let b = ctx.block(code);
            let spec = permute_slabs(ctx, &[b.clone()], h, &pi)?;
            let inp = z_inputs(rng, k);
            let mut out = zs(&inp);
            for t in code.mask() {
                let mut t2 = t.clone();
                t2[h] = pi[t[h]];
                let (s, d) = slab_pair(code, &t, &t2)?;
                out[d] = Expect::Z(bit(inp[s]));
            }
            single(spec, None, vec![(b, inp)], vec![out])
        }
        "cyclic_shift" => {
            let ell: Vec<usize> = code.product.factors.iter().map(|f| f.message.len()).collect();
            if ell.iter().any(|&l| l == 0) {
                return Err(GadgetError::NoMessage(ell.iter().position(|&l| l == 0).unwrap_or(0)));
            }
            let s = vec![1; ell.len()];
            let b = ctx.block(code);
            let spec = cyclic_shift(ctx, &b, &ell, &s)?;
            let inp = z_inputs(rng, k);
            let mut out = zs(&inp);
            for t in code.mask() {
                let t2: Vec<usize> = t.iter().zip(&ell).map(|(&x, &l)| (x + 1) % l).collect();
                let (s, d) = slab_pair(code, &t, &t2)?;
                out[d] = Expect::Z(bit(inp[s]));
            }
            single(spec, None, vec![(b, inp)], vec![out])
        }
        "targeted_swap" | "targeted_cnot" => {
            let (p, q) = mask_ends(code)?;
            let (a, b) = (ctx.block(code), ctx.block(code));
            let (pp, pq) = slab_pair(code, &p, &q)?;
            let (pp_pos, pq_pos) = (Pos { block: 0, t: p }, Pos { block: 1, t: q });
            let (mut ia, ib) = (z_inputs(rng, k), z_inputs(rng, k));
            ia[pp] = LogicalInput::One;
            let (spec, outs) = if name == "targeted_swap" {
                let spec = targeted_swap(ctx, &[a.clone(), b.clone()], &pp_pos, &pq_pos)?;
                let wa = (0..k).map(|m| Expect::Z(bit(if m == pp { ib[pq] } else { ia[m] }))).collect();
                let wb = (0..k).map(|m| Expect::Z(bit(if m == pq { ia[pp] } else { ib[m] }))).collect();
                (spec, vec![wa, wb])
            } else {
                let spec = targeted_cnot(ctx, &[a.clone(), b.clone()], &pp_pos, &pq_pos)?;
                let wb = (0..k).map(|m| Expect::Z(bit(ib[m]) ^ (m == pq))).collect();
                (spec, vec![zs(&ia), wb])
            };
            single(spec, None, vec![(a, ia), (b, ib)], outs)
        }
        "targeted_h" => {
            let (p, _) = mask_ends(code)?;
            let pp = code.slab_logical(&p).ok_or_else(|| GadgetError::Position(p.clone()))?;
            let a = ctx.block(code);
            let spec = targeted_h(ctx, &[a.clone()], &Pos { block: 0, t: p })?;
            let mut inp = z_inputs(rng, k);
            inp[pp] = LogicalInput::Zero;
            let mut out = zs(&inp);
            out[pp] = Expect::X(false);
            single(spec, None, vec![(a, inp)], vec![out])
        }
        "bulk_2d_prep" => {
            let basis = supported_prep(code);
            let spec = bulk_2d_prep(ctx, code)?;
            let e = if basis == Some(PrepBasis::Plus) { Expect::X(false) } else { Expect::Z(false) };
            let outs = spec.outputs.iter().map(|o| vec![e; o.code.k()]).collect();
            single(spec, None, vec![], outs)
        }
        _ => return Err(GadgetError::LabelMismatch(format!("unknown gadget {name}"))),
    })
}

fn slab_pair(code: &DecoratedCode, t: &[usize], t2: &[usize]) -> Result<(usize, usize), GadgetError> {
    let s = code.slab_logical(t).ok_or_else(|| GadgetError::Position(t.to_vec()))?;
    let d = code.slab_logical(t2).ok_or_else(|| GadgetError::Position(t2.to_vec()))?;
    Ok((s, d))
}

fn mask_ends(code: &DecoratedCode) -> Result<(Vec<usize>, Vec<usize>), GadgetError> {
    let mask = code.mask();
    match (mask.first(), mask.last()) {
        (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
        _ => Err(GadgetError::NoMessage(0)),
    }
}

/// Appends a hook that applies logical X on logical 0 of the first output:
/// the corrupted fixture for `gadget-verify`.
fn tamper(spec: &mut GadgetSpec) {
    let Some(o) = spec.outputs.first() else { return };
    if o.code.k() == 0 {
        return;
    }
    let qs: Vec<u32> = o.code.enc.generator(0).iter_ones().map(|c| o.qubits[c]).collect();
    spec.circuit.push_hook(Hook::new("tamper", vec![], vec![], vec![], move |_| HookOutput {
        x: qs.clone(),
        ..Default::default()
    }));
}

fn run_case(case: &Case, seed: u64) -> Result<Vec<String>, GadgetError> {
    let mut diffs = Vec::new();
    for (spec, want) in &case.stages {
        if let Some(t) = want {
            if spec.circuit.depth() != *t {
                diffs.push(format!("{} depth: want {t} got {}", spec.name, spec.circuit.depth()));
            }
        }
        if let Err(e) = spec.check() {
            diffs.push(format!("{} audit: {e}", spec.name));
        }
    }
    let n = case.stages.iter().map(|(s, _)| s.qubits).max().unwrap_or(0);
    let pairs: Vec<(&Block, &[LogicalInput])> = case.inputs.iter().map(|(b, i)| (b, i.as_slice())).collect();
    let mut state = encoded_state(n, &pairs);
    let mut last = None;
    for (j, (spec, _)) in case.stages.iter().enumerate() {
        let run = run_noiseless(spec, state, seed.wrapping_add(j as u64))?;
        if run.herald {
            diffs.push(format!("{} heralded", spec.name));
        }
        state = run.state.clone();
        last = Some(run);
    }
    let (Some(run), Some((spec, _))) = (last, case.stages.last()) else { return Ok(diffs) };
    if let Some(want) = &case.register {
        let got = &run.registers[spec.registers[0]];
        for (m, &w) in want.iter().enumerate() {
            if got.get(m) != w {
                diffs.push(format!("register bit {m}: want {} got {}", u8::from(w), u8::from(got.get(m))));
            }
        }
    }
    for (j, (o, want)) in spec.outputs.iter().zip(&case.outputs).enumerate() {
        if !in_codespace(&state, o) {
            diffs.push(format!("output {j} left the codespace"));
        }
        for (m, e) in want.iter().enumerate() {
            let (got, w, basis) = match *e {
                Expect::Z(w) => (logical_z(&state, o, m), w, 'Z'),
                Expect::X(w) => (logical_x(&state, o, m), w, 'X'),
            };
            if got != Some(w) {
                let g = got.map_or("random".to_string(), |b| u8::from(b).to_string());
                diffs.push(format!("output {j} logical {m} {basis}: want {} got {g}", u8::from(w)));
            }
        }
    }
    Ok(diffs)
}

/// Verifies the gadgets named in `select` (all of `GADGETS` when empty) on
/// `code`. The gadget named by `corrupt`, if any, gets a stray logical X
/// appended before its checks run.
pub fn verify_gadgets(code: &Arc<DecoratedCode>, select: &[String], corrupt: Option<&str>, seed: u64) -> Vec<CheckRow> {
    let names: Vec<&str> = if select.is_empty() { GADGETS.to_vec() } else { select.iter().map(String::as_str).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    names
        .into_iter()
        .map(|name| {
            let mut ctx = Ctx::new();
            let row = |status, manifest, detail| CheckRow { gadget: name.to_string(), status, manifest, detail };
            let mut case = match build(name, &mut ctx, code, &mut rng) {
                Ok(c) => c,
                Err(e) if GADGETS.contains(&name) => return row(Status::Skipped, vec![], e.to_string()),
                Err(e) => return row(Status::Fail, vec![], e.to_string()),
            };
            if corrupt == Some(name) {
                if let Some((spec, _)) = case.stages.last_mut() {
                    tamper(spec);
                }
            }
            let manifest = case.stages.iter().map(|(s, _)| s.manifest()).collect();
            match run_case(&case, rng.gen()) {
                Ok(d) if d.is_empty() => row(Status::Pass, manifest, String::new()),
                Ok(d) => row(Status::Fail, manifest, d.join("; ")),
                Err(e) => row(Status::Fail, manifest, e.to_string()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::FactorKind::{Chain, Cochain};
    use crate::gadgets::star_product;

    fn instance() -> Arc<DecoratedCode> {
        let mut ctx = Ctx::new();
        ctx.code(star_product(&[4, 4, 4], &[3, 3, 3], &[Cochain, Chain, Chain]).unwrap(), 1).unwrap()
    }

    #[test]
    fn suite_passes_on_star_product() {
        let rows = verify_gadgets(&instance(), &[], None, 1);
        assert_eq!(rows.len(), GADGETS.len());
        for r in &rows {
            assert_eq!(r.status, Status::Pass, "{}: {}", r.gadget, r.detail);
        }
    }

    #[test]
    fn corrupted_gadget_fails_with_diff() {
        let rows = verify_gadgets(&instance(), &["err_corr".into()], Some("err_corr"), 2);
        assert_eq!(rows[0].status, Status::Fail);
        assert!(rows[0].detail.contains("output 0 logical 0 Z"), "{}", rows[0].detail);
    }

    #[test]
    fn inapplicable_gadgets_are_skipped() {
        let g = Arc::new(crate::expander::BipartiteGraph::cycle(3));
        let p = crate::complex::ProductComplex::new(vec![
            crate::complex::Factor::cochain(g.clone()),
            crate::complex::Factor::chain(g),
        ]);
        let code = Arc::new(DecoratedCode::new(p, 1).unwrap());
        let rows = verify_gadgets(&code, &["cyclic_shift".into(), "err_corr".into()], None, 3);
        assert_eq!(rows[0].status, Status::Skipped);
        assert_eq!(rows[1].status, Status::Pass, "{}", rows[1].detail);
    }

    #[test]
    fn unknown_gadget_fails() {
        let rows = verify_gadgets(&instance(), &["teleport".into()], None, 0);
        assert_eq!(rows[0].status, Status::Fail);
    }
}
