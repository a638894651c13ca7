//! Solve and continuation runs and their artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use spflow_core::cones::{calibrate_eps, ConeGeometry};
use spflow_core::continuation::{continuation_run, ContinuationOutcome};
use spflow_core::coulomb::CoulombSolver;
use spflow_core::flow::TraceRow;
use spflow_core::functional::{energy, nodal_count_default, pohozaev_residual};
use spflow_core::io::write_dump;
use spflow_core::minimax::{deflated_multisolve, solve_from_seeds, MinimaxOutcome, PathMode, SeedPair};
use spflow_core::{CoulombMode, Field, ModelConfig, Problem};

use crate::config::Loaded;
use crate::Failure;

pub const FAULT_VAR: &str = "SPFLOW_INJECT_FAULT";

/// Builds the problem, honoring the kernel fault hook.
pub fn problem(loaded: &Loaded, model: ModelConfig<f64>) -> anyhow::Result<Problem<f64>> {
    let grid = loaded.grid()?;
    match std::env::var(FAULT_VAR).ok().as_deref() {
        None | Some("") => Ok(Problem::new(model, grid)?),
        Some("kernel-sign-flip") if model.coulomb == CoulombMode::FreeSpace => {
            let solver =
                CoulombSolver::free_space_with_kernel(grid, |d, k| if d == [1, 0, 0] { -k } else { k });
            Ok(Problem::with_coulomb(model, grid, Arc::new(solver))?)
        }
        Some(other) => anyhow::bail!("unknown fault {other:?} in {FAULT_VAR}"),
    }
}

pub fn run_id(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))[..16].to_string()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory, run id and the registry of written files.
pub struct Artifacts {
    dir: PathBuf,
    id: String,
    files: Vec<Value>,
    timings: BTreeMap<String, f64>,
}

impl Artifacts {
    pub fn new(loaded: &Loaded) -> anyhow::Result<Self> {
        let dir = loaded.resolve(&loaded.config.output.dir);
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { dir, id: run_id(&loaded.bytes), files: Vec::new(), timings: BTreeMap::new() })
    }

    fn path(&self, suffix: &str) -> (String, PathBuf) {
        let name = format!("{}_{suffix}", self.id);
        let path = self.dir.join(&name);
        (name, path)
    }

    fn register(&mut self, name: String, kind: &str, path: &Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path)?;
        self.files.push(json!({ "name": name, "kind": kind, "sha256": hex(&Sha256::digest(&bytes)) }));
        Ok(())
    }

    pub fn dump(&mut self, suffix: &str, field: &Field<f64>) -> anyhow::Result<()> {
        let (name, path) = self.path(&format!("{suffix}.spf"));
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?);
        write_dump(field, &mut w)?;
        w.flush()?;
        drop(w);
        self.register(name, "field", &path)
    }

    pub fn csv(&mut self, suffix: &str, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
        let (name, path) = self.path(&format!("{suffix}.csv"));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        drop(w);
        self.register(name, "csv", &path)
    }

    pub fn time(&mut self, what: &str, since: Instant) {
        self.timings.insert(what.to_string(), since.elapsed().as_secs_f64());
    }

    /// Writes the manifest, which lists itself last.
    pub fn finish(mut self, loaded: &Loaded, command: &str, status: &str, extra: Value) -> anyhow::Result<PathBuf> {
        let (name, path) = self.path("manifest.json");
        self.files.push(json!({ "name": name, "kind": "manifest" }));
        let manifest = json!({
            "run_id": self.id,
            "command": command,
            "status": status,
            "input_sha256": hex(&Sha256::digest(&loaded.bytes)),
            "config": serde_json::to_value(&loaded.config)?,
            "rng_seed": loaded.config.output.rng_seed,
            "files": self.files,
            "timings_s": self.timings,
            "run": extra,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

const TRACE_HEADER: [&str; 6] = ["step", "s", "residual", "energy", "dist_Pplus", "dist_Pminus"];
const DIAG_HEADER: [&str; 10] =
    ["tag", "kinetic", "potential", "coupling", "nonlinear", "perturb", "total", "poho_residual", "pos_nodes", "neg_nodes"];
const CONT_HEADER: [&str; 7] = ["stage", "lambda", "energy", "residual", "coupling_energy", "poho_residual", "branch_flag"];

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn trace_rows(trace: &[TraceRow<f64>]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|r| vec![r.step.to_string(), num(r.s), num(r.residual), num(r.energy), num(r.dist_plus), num(r.dist_minus)])
        .collect()
}

fn diag_row(problem: &Problem<f64>, tag: &str, u: &Field<f64>) -> anyhow::Result<Vec<String>> {
    let e = energy(problem, u)?;
    let poho = pohozaev_residual(problem, u).map(num).unwrap_or_default();
    let (pos, neg) = nodal_count_default(u);
    Ok(vec![
        tag.to_string(),
        num(e.kinetic),
        num(e.potential),
        num(e.coupling),
        num(e.nonlinear),
        num(e.perturb),
        num(e.total),
        poho,
        pos.to_string(),
        neg.to_string(),
    ])
}

/// The cone radius from the config, or from the contraction calibration.
fn cone_radius(loaded: &Loaded, problem: &Problem<f64>, rng: &mut ChaCha8Rng) -> anyhow::Result<(f64, Value)> {
    let c = &loaded.config.cones;
    if !c.calibrate {
        return Ok((c.eps, Value::Null));
    }
    let seeds = loaded.seeds();
    let grid = *problem.grid();
    let base = Field::from_fn(grid, |x| seeds.iter().map(|b| -b.eval(x).abs()).sum());
    let cal = calibrate_eps(problem, &base, &c.candidates, c.samples, rng)?;
    let eps = cal.chosen.ok_or_else(|| anyhow::anyhow!("no candidate cone radius passes the contraction monitor"))?;
    Ok((eps, json!({ "tested": cal.tested, "chosen": eps })))
}

fn seed_pair(loaded: &Loaded) -> anyhow::Result<SeedPair<f64>> {
    let bumps = loaded.seeds();
    let neg = bumps.iter().filter(|b| b.amplitude < 0.0).copied().collect();
    let pos = bumps.iter().filter(|b| b.amplitude > 0.0).copied().collect();
    Ok(SeedPair::new(neg, pos)?)
}

fn outcome_json(out: &MinimaxOutcome<f64>, r: f64) -> Value {
    let c = &out.certificate;
    json!({
        "R": r,
        "lattice_m": out.path.m,
        "level_trace": out.level_trace,
        "argmax": out.argmax,
        "level": out.level,
        "residual": c.residual,
        "converged": c.converged,
        "dist_Pplus": c.dist_plus,
        "dist_Pminus": c.dist_minus,
        "level_bound": c.level_bound,
        "nodal": [c.nodal.0, c.nodal.1],
        "poho_residual": c.pohozaev,
        "stagnation": out.flow.stagnation,
        "steps": out.flow.steps,
    })
}

fn seeds_json(loaded: &Loaded) -> Value {
    json!(loaded.seeds().iter().map(|b| json!({"center": b.center, "radius": b.radius, "amplitude": b.amplitude})).collect::<Vec<_>>())
}

/// `solve`: the minimax (or the deflation loop) for `lambda = 0`, continuation otherwise.
pub fn solve(loaded: &Loaded) -> Result<PathBuf, Failure> {
    let model = loaded.model().map_err(Failure::Config)?;
    if model.lambda > 0.0 {
        return continuation(loaded);
    }
    let t0 = Instant::now();
    let problem = problem(loaded, model).map_err(Failure::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.config.output.rng_seed);
    let mut art = Artifacts::new(loaded).map_err(Failure::Config)?;
    let (eps, calibration) = cone_radius(loaded, &problem, &mut rng).map_err(Failure::Solver)?;
    let geom = loaded.geometry(eps).map_err(Failure::Config)?;
    let params = loaded.minimax(PathMode::Amplitude);
    let count = loaded.config.minimax.count.max(1);
    let mut solutions: Vec<(MinimaxOutcome<f64>, f64)> = Vec::new();
    let mut extra = json!({ "eps": eps, "calibration": calibration, "seeds": seeds_json(loaded) });
    if count == 1 {
        let seeds = seed_pair(loaded).map_err(Failure::Config)?;
        let (tune, out) = solve_from_seeds(&problem, &geom, &seeds, &params).map_err(|e| Failure::Solver(e.into()))?;
        extra["tune"] = json!(tune.tried);
        solutions.push((out, tune.r));
    } else {
        let multi = deflated_multisolve(&problem, &geom, &loaded.seeds(), count, loaded.config.minimax.separation, &params)
            .map_err(|e| Failure::Solver(e.into()))?;
        extra["attempts"] = json!(multi.attempts.iter().map(|(g, s)| json!({"negative": g, "result": s})).collect::<Vec<_>>());
        extra["discovery_energies"] = json!(multi.discovery_energies);
        extra["complete"] = json!(multi.complete);
        solutions.extend(multi.solutions.into_iter().map(|s| {
            let r = s.path.r;
            (s, r)
        }));
    }
    art.time("solve", t0);
    let tol = params.final_flow.residual_tol;
    let mut diag = Vec::new();
    let mut summaries = Vec::new();
    let write = |art: &mut Artifacts, diag: &mut Vec<Vec<String>>, k: Option<usize>, out: &MinimaxOutcome<f64>| -> anyhow::Result<()> {
        let tag = k.map_or("solution".to_string(), |k| format!("solution_{k}"));
        art.dump(&tag, &out.solution)?;
        art.dump(&format!("{tag}_phi"), &problem.coulomb().phi_of(&out.solution)?)?;
        let trace = k.map_or("flow_trace".to_string(), |k| format!("flow_trace_{k}"));
        art.csv(&trace, &TRACE_HEADER, trace_rows(&out.flow.trace))?;
        diag.push(diag_row(&problem, &tag, &out.solution)?);
        Ok(())
    };
    for (k, (out, r)) in solutions.iter().enumerate() {
        let idx = if count == 1 { None } else { Some(k) };
        write(&mut art, &mut diag, idx, out).map_err(Failure::Config)?;
        summaries.push(outcome_json(out, *r));
    }
    if !diag.is_empty() {
        art.csv("diagnostics", &DIAG_HEADER, diag).map_err(Failure::Config)?;
    }
    extra["solutions"] = json!(summaries);
    let ok = !solutions.is_empty() && solutions.len() >= count && solutions.iter().all(|(s, _)| s.certificate.passed(tol));
    let status = if ok { "solved" } else { "no-solution" };
    let manifest = art.finish(loaded, "solve", status, extra).map_err(Failure::Config)?;
    if ok {
        Ok(manifest)
    } else {
        Err(Failure::NoSolution(format!("certificate failed; see {}", manifest.display())))
    }
}

fn continuation_rows(out: &ContinuationOutcome<f64>) -> Vec<Vec<String>> {
    out.stages
        .iter()
        .map(|s| {
            vec![
                s.stage.to_string(),
                num(s.lambda),
                num(s.energy),
                num(s.residual),
                num(s.coupling_energy),
                s.pohozaev.map(num).unwrap_or_default(),
                s.branch_flag.to_string(),
            ]
        })
        .collect()
}

/// `continuation`: the lambda schedule from the config, ending in the `lambda = 0` polish.
pub fn continuation(loaded: &Loaded) -> Result<PathBuf, Failure> {
    let model = loaded.model().map_err(Failure::Config)?;
    let t0 = Instant::now();
    let problem = problem(loaded, model).map_err(Failure::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.config.output.rng_seed);
    let mut art = Artifacts::new(loaded).map_err(Failure::Config)?;
    let (eps, calibration) = cone_radius(loaded, &problem, &mut rng).map_err(Failure::Solver)?;
    let geom: ConeGeometry<f64> = loaded.geometry(eps).map_err(Failure::Config)?;
    let sched = loaded.schedule();
    sched.lambdas().map_err(|e| Failure::Config(e.into()))?;
    let seeds = seed_pair(loaded).map_err(Failure::Config)?;
    let out = continuation_run(&problem, &geom, &seeds, &sched).map_err(|e| Failure::Solver(e.into()))?;
    art.time("continuation", t0);
    let base = problem.with_lambda(0.0).map_err(|e| Failure::Config(e.into()))?;
    let finish = |art: &mut Artifacts| -> anyhow::Result<()> {
        art.dump("solution", &out.solution)?;
        art.dump("solution_phi", &base.coulomb().phi_of(&out.solution)?)?;
        art.csv("continuation", &CONT_HEADER, continuation_rows(&out))?;
        art.csv("diagnostics", &DIAG_HEADER, vec![diag_row(&base, "solution", &out.solution)?])?;
        Ok(())
    };
    finish(&mut art).map_err(Failure::Config)?;
    let (coupling_max, coupling_bound) = out.coupling_bounds();
    let extra = json!({
        "eps": eps,
        "calibration": calibration,
        "seeds": seeds_json(loaded),
        "lambdas": sched.lambdas().unwrap_or_default(),
        "failure": out.failure.as_ref().map(|(l, m)| json!({"lambda": l, "reason": m})),
        "accepted": out.accepted,
        "levels_monotone": out.levels_monotone(1e-9),
        "coupling_max": coupling_max,
        "coupling_bound": coupling_bound,
        "cauchy_distances": out.cauchy_distances(),
        "fallbacks": out.stages.iter().filter(|s| s.fallback).map(|s| s.stage).collect::<Vec<_>>(),
        "branch_flags": out.stages.iter().filter(|s| s.branch_flag).map(|s| s.stage).collect::<Vec<_>>(),
    });
    let status = if out.accepted { "solved" } else { "no-solution" };
    let manifest = art.finish(loaded, "continuation", status, extra).map_err(Failure::Config)?;
    if out.accepted {
        Ok(manifest)
    } else {
        Err(Failure::NoSolution(format!("continuation rejected its branch; see {}", manifest.display())))
    }
}
