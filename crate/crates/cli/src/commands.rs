//! Subcommand bodies. Each writes its data file under the output directory
//! and reports whether a verification step failed.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use log::info;
use qldpc::badsets::{
    max_admissible_eps, mc_percolation, percolation_bound, percolation_formula, percolation_union_sum, BadSetParams,
    Graph,
};
use qldpc::codes::pairing_holds;
use qldpc::complex::DistanceKind;
use qldpc::expander::{check_lossless, CheckMode, Side};
use qldpc::experiments::{exhaustive_decode, random_decode, DecodeBed, MemoryBench, MemoryPoint};
use qldpc::verify::{verify_gadgets, Status};
use qldpc::VERSION;
use serde::Serialize;

use crate::config::{derive, stream, CodeSpec, ExpanderMode, ExperimentConfig, GraphKind};
use crate::CliError;

/// Whether the command's checks all held.
pub type Verdict = bool;

fn csv_out<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<(), CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    info!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct CodeReport {
    version: &'static str,
    seed: u64,
    code: String,
    r: usize,
    level: usize,
    n: usize,
    k: usize,
    locality: usize,
    z_check_weight: usize,
    x_check_weight: usize,
    is_complex: bool,
    pairing: bool,
    /// Minimum weight of a nontrivial cocycle (X-logical) and cycle (Z-logical).
    cosystolic_distance: String,
    systolic_distance: String,
    labels: Vec<String>,
}

pub fn build_code(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let spec = cfg.code()?;
    let code = spec.build(cfg.seed)?;
    let cx = code.complex();
    let i = code.level();
    let dist = |kind| {
        if i == 0 || i == code.r() {
            "n/a".to_string()
        } else {
            cx.min_nontrivial_weight(i, kind, spec.distance_budget).to_string()
        }
    };
    let labels: Vec<String> = code.enc.labels().iter().map(|l| qldpc::complex::label_string(l)).collect();
    let maxw = |m: &qldpc::f2la::BitMatrix| (0..m.rows()).map(|r| m.row_weight(r)).max().unwrap_or(0);
    let report = CodeReport {
        version: VERSION,
        seed: cfg.seed,
        code: spec.tag(),
        r: code.r(),
        level: i,
        n: code.n(),
        k: code.k(),
        locality: cx.locality(),
        z_check_weight: maxw(&code.code.z_checks()),
        x_check_weight: maxw(&code.code.x_checks()),
        is_complex: cx.is_complex(),
        pairing: pairing_holds(&code.enc, &code.dual),
        cosystolic_distance: dist(DistanceKind::Cosystolic),
        systolic_distance: dist(DistanceKind::Systolic),
        labels,
    };
    info!("{}: n={} k={} w={}", report.code, report.n, report.k, report.locality);
    let path = out.join("code_report.jsonl");
    let mut f = File::create(&path)?;
    writeln!(f, "{}", serde_json::to_string(&report).expect("report serializes"))?;
    info!("wrote {}", path.display());
    Ok(report.is_complex && report.pairing && report.k == report.labels.len())
}

#[derive(Serialize)]
struct ExpanderRow {
    version: &'static str,
    seed: u64,
    code: String,
    factor: usize,
    n_left: usize,
    n_right: usize,
    deg_left: usize,
    deg_right: usize,
    mu: f64,
    eps: f64,
    exhaustive: bool,
    max_set_left: usize,
    max_set_right: usize,
    checked: u64,
    violations: u64,
    certified: bool,
}

pub fn check_expander(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let spec = cfg.code()?;
    let e = &cfg.expander;
    let mut rows = Vec::new();
    for (h, g) in spec.graphs(cfg.seed)?.iter().enumerate() {
        let mode = match e.mode {
            ExpanderMode::Exhaustive => CheckMode::Exhaustive { budget: e.budget },
            ExpanderMode::Sampled => {
                CheckMode::Sampled { samples: e.budget as usize, seed: derive(cfg.seed, stream::EXPANDER, h as u64) }
            }
        };
        let rep = check_lossless(g, e.mu, e.eps, mode)?;
        info!("factor {h}: {} sets checked, {} violations", rep.checked_count, rep.violation_count);
        rows.push(ExpanderRow {
            version: VERSION,
            seed: cfg.seed,
            code: spec.tag(),
            factor: h,
            n_left: g.n_left(),
            n_right: g.n_right(),
            deg_left: g.max_degree(Side::Left),
            deg_right: g.max_degree(Side::Right),
            mu: rep.mu,
            eps: rep.eps,
            exhaustive: rep.exhaustive,
            max_set_left: rep.max_set.0,
            max_set_right: rep.max_set.1,
            checked: rep.checked_count,
            violations: rep.violation_count,
            certified: rep.certified(),
        });
    }
    csv_out(out, "expander.csv", &rows)?;
    Ok(rows.iter().all(|r| r.violations == 0))
}

#[derive(Serialize)]
struct DecodeRow {
    version: &'static str,
    seed: u64,
    code: String,
    mode: &'static str,
    weight: usize,
    noise: f64,
    trials: u64,
    successes: u64,
    rate: f64,
}

pub fn decode_trials(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let spec = cfg.code()?;
    let d = &cfg.decode;
    if d.exhaustive > 3 {
        return Err(CliError::Config(format!("decode.exhaustive is at most 3, got {}", d.exhaustive)));
    }
    if !(0.0..=1.0).contains(&d.noise) {
        return Err(CliError::Config(format!("decode.noise must lie in [0, 1], got {}", d.noise)));
    }
    let bed = DecodeBed::new(spec.build(cfg.seed)?.complex().clone(), spec.level)?;
    let row = |mode, weight, trials, successes| DecodeRow {
        version: VERSION,
        seed: cfg.seed,
        code: spec.tag(),
        mode,
        weight,
        noise: d.noise,
        trials,
        successes,
        rate: if trials == 0 { 1.0 } else { successes as f64 / trials as f64 },
    };
    let mut rows = Vec::new();
    if d.exhaustive > 0 {
        let ex = exhaustive_decode(&bed, d.exhaustive)?;
        info!("exhaustive weight <= {}: {} failures of {}", d.exhaustive, ex.failures, ex.tried);
        rows.push(row("exhaustive", d.exhaustive, ex.tried, ex.tried - ex.failures));
    }
    for (j, &w) in d.weights.iter().enumerate() {
        if w > bed.n() {
            return Err(CliError::Config(format!("weight {w} exceeds n = {}", bed.n())));
        }
        let wr = random_decode(&bed, w, d.noise, cfg.shots, derive(cfg.seed, stream::DECODE, j as u64))?;
        info!("weight {w}: {}/{}", wr.successes, wr.trials);
        rows.push(row("random", w, wr.trials, wr.successes));
    }
    csv_out(out, "decode_trials.csv", &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct MemoryRow {
    version: &'static str,
    seed: u64,
    /// Seed of this point's shot streams, derived from `seed`.
    point_seed: u64,
    code: String,
    n: usize,
    k: usize,
    rounds: usize,
    p: f64,
    shots: u64,
    failures: u64,
    heralds: u64,
    rate: f64,
    ci_low: f64,
    ci_high: f64,
}

fn memory_row(root: u64, spec: &CodeSpec, pt: &MemoryPoint) -> MemoryRow {
    let (lo, hi) = pt.ci();
    MemoryRow {
        version: VERSION,
        seed: root,
        point_seed: pt.seed,
        code: spec.tag(),
        n: pt.n,
        k: pt.k,
        rounds: pt.rounds,
        p: pt.p,
        shots: pt.shots,
        failures: pt.failures,
        heralds: pt.heralds,
        rate: pt.rate(),
        ci_low: lo,
        ci_high: hi,
    }
}

fn sweep(cfg: &ExperimentConfig, codes: &[CodeSpec], grid: &[f64]) -> Result<Vec<MemoryRow>, CliError> {
    if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Config(format!("noise rate {p} outside [0, 1]")));
    }
    let mut rows = Vec::new();
    for (c, spec) in codes.iter().enumerate() {
        let bench = MemoryBench::new(spec.build(cfg.seed)?, cfg.memory.rounds)?;
        info!("{}: n={} depth={} qubits={}", spec.tag(), bench.code.n(), bench.depth(), bench.qubits());
        for (j, &p) in grid.iter().enumerate() {
            let seed = derive(cfg.seed, stream::MEMORY, ((c as u64) << 32) | j as u64);
            let pt = bench.run(p, cfg.shots, seed)?;
            info!("  p={p}: {}/{} failures", pt.failures, pt.shots);
            rows.push(memory_row(cfg.seed, spec, &pt));
        }
    }
    Ok(rows)
}

pub fn memory_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let rows = sweep(cfg, std::slice::from_ref(cfg.code()?), &cfg.memory.p)?;
    csv_out(out, "memory.csv", &rows)?;
    Ok(true)
}

pub fn threshold_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let t = &cfg.threshold;
    let codes = if t.codes.is_empty() { vec![cfg.code()?.clone()] } else { t.codes.clone() };
    let grid = if t.p.is_empty() { &cfg.memory.p } else { &t.p };
    let rows = sweep(cfg, &codes, grid)?;
    csv_out(out, "threshold.csv", &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct GadgetRow {
    version: &'static str,
    seed: u64,
    code: String,
    gadget: String,
    status: String,
    manifest: String,
    detail: String,
}

pub fn gadget_verify(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let spec = cfg.code()?;
    let code = spec.build(cfg.seed)?;
    let g = &cfg.gadgets;
    let checks = verify_gadgets(&code, &g.names, g.corrupt.as_deref(), derive(cfg.seed, stream::GADGETS, 0));
    let mut ok = true;
    let rows: Vec<GadgetRow> = checks
        .into_iter()
        .map(|c| {
            info!("{}: {} {}", c.gadget, c.status, c.detail);
            ok &= c.status != Status::Fail;
            GadgetRow {
                version: VERSION,
                seed: cfg.seed,
                code: spec.tag(),
                gadget: c.gadget,
                status: c.status.to_string(),
                manifest: c.manifest.join(" | "),
                detail: c.detail,
            }
        })
        .collect();
    csv_out(out, "gadget_verify.csv", &rows)?;
    Ok(ok)
}

#[derive(Serialize)]
struct PercolationRow {
    version: &'static str,
    seed: u64,
    graph: String,
    vertices: usize,
    max_degree: usize,
    eta: f64,
    gamma: f64,
    eps: f64,
    trials: u64,
    non_avoiding: u64,
    frequency: f64,
    ci99_low: f64,
    ci99_high: f64,
    /// `|V| · 2 (eε/γ)^η`, evaluated whether or not its preconditions hold.
    bound: f64,
    preconditions: bool,
    union_sum: f64,
}

pub fn percolation(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict, CliError> {
    let s = &cfg.percolation;
    let (g, name) = match s.graph {
        GraphKind::Cycle => (Graph::cycle(s.n), format!("cycle-{}", s.n)),
        GraphKind::Path => (Graph::path(s.n), format!("path-{}", s.n)),
        GraphKind::Grid => (Graph::grid(s.n, s.cols), format!("grid-{}x{}", s.n, s.cols)),
        GraphKind::Petersen => (Graph::petersen(), "petersen".to_string()),
    };
    if g.is_empty() {
        return Err(CliError::Config("percolation graph has no vertices".into()));
    }
    let params = BadSetParams::new(s.eta, s.gamma)?;
    let delta = g.max_degree();
    let eps = if s.eps.is_empty() { vec![max_admissible_eps(delta, s.gamma)] } else { s.eps.clone() };
    let mut rows = Vec::new();
    for (j, &e) in eps.iter().enumerate() {
        let rep = mc_percolation(&g, e, &params, cfg.shots, derive(cfg.seed, stream::PERCOLATION, j as u64))?;
        let pre = percolation_bound(g.len(), delta, s.eta, s.gamma, e).is_ok();
        info!("{name} eps={e}: {}/{} non-avoiding", rep.non_avoiding, rep.trials);
        rows.push(PercolationRow {
            version: VERSION,
            seed: cfg.seed,
            graph: name.clone(),
            vertices: g.len(),
            max_degree: delta,
            eta: s.eta,
            gamma: s.gamma,
            eps: e,
            trials: rep.trials,
            non_avoiding: rep.non_avoiding,
            frequency: rep.frequency,
            ci99_low: rep.ci.0,
            ci99_high: rep.ci.1,
            bound: percolation_formula(g.len(), s.eta, s.gamma, e),
            preconditions: pre,
            union_sum: percolation_union_sum(g.len(), delta, s.eta, s.gamma, e),
        });
    }
    csv_out(out, "percolation.csv", &rows)?;
    Ok(true)
}
