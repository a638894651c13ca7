//! Continuation in the perturbation weight `lambda`.
//!
//! For `3 < p < 4` the unperturbed energy lacks the geometry the minimax
//! needs. Adding `-(lambda / r) int |u|^r` with `r > 4` restores it, so the
//! first stage runs the scaled minimax at `lambda_0`. Later stages warm-start
//! the nodal flow from the previous solution at a smaller `lambda`, and a
//! final polish runs at `lambda = 0`.
//!
//! Lowering `lambda` raises the energy, so the stage levels should be
//! non-decreasing in stage order.

use crate::cones::ConeGeometry;
use crate::error::{Error, Result};
use crate::flow::{flow_to_convergence, FlowOutcome, FlowParams, Projection};
use crate::functional::{ar_combination, ArReport};
use crate::grid::{e_norm_unchecked, Field};
use crate::minimax::{solve_from_seeds, Certificate, MinimaxParams, PathMode, SeedPair};
use crate::problem::Problem;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationSchedule<T> {
    pub lambda0: T,
    pub shrink: T,
    pub lambda_min: T,
    /// Warm-started flow of the later stages.
    pub stage_flow: FlowParams<T>,
    /// Used for stage 0 and for fallbacks.
    pub minimax: MinimaxParams<T>,
    /// Flow of the final `lambda = 0` stage.
    pub polish_flow: FlowParams<T>,
    /// A stage is flagged as a branch switch when its distance to the previous
    /// solution exceeds this fraction of the previous norm.
    pub branch_jump: T,
    /// Largest Pohozaev residual accepted for the polished field.
    pub pohozaev_tol: T,
}

impl<T: Real> Default for ContinuationSchedule<T> {
    fn default() -> Self {
        let nodal = FlowParams { projection: Projection::Nodal, max_steps: 3000, ..FlowParams::default() };
        Self {
            lambda0: T::one(),
            shrink: T::lit(0.5),
            lambda_min: T::lit(1e-4),
            stage_flow: nodal,
            minimax: MinimaxParams { mode: PathMode::Scaled, ..MinimaxParams::default() },
            polish_flow: nodal,
            branch_jump: T::lit(0.5),
            pohozaev_tol: T::lit(0.1),
        }
    }
}

impl<T: Real> ContinuationSchedule<T> {
    /// `lambda_0, lambda_0 s, lambda_0 s^2, ...` down to `lambda_min`; empty for `lambda_0 = 0`.
    pub fn lambdas(&self) -> Result<Vec<T>> {
        if self.lambda0 == T::zero() {
            return Ok(Vec::new());
        }
        if !(self.lambda0 > T::zero() && self.shrink > T::zero() && self.shrink < T::one() && self.lambda_min > T::zero()) {
            return Err(Error::InvalidConfig("continuation needs lambda0 >= 0, 0 < shrink < 1, lambda_min > 0".into()));
        }
        let mut out = Vec::new();
        let mut l = self.lambda0;
        while l >= self.lambda_min {
            out.push(l);
            l = l * self.shrink;
        }
        if out.is_empty() {
            out.push(self.lambda0);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct StageRecord<T> {
    pub stage: usize,
    pub lambda: T,
    pub energy: T,
    pub residual: T,
    /// `int phi_u u^2`.
    pub coupling_energy: T,
    pub pohozaev: Option<T>,
    pub ar: Option<ArReport<T>>,
    pub nodal: (usize, usize),
    pub outside_w: bool,
    /// Distance to the previous stage solution (up to sign).
    pub distance: Option<T>,
    pub branch_flag: bool,
    /// The warm start failed and a fresh minimax was run.
    pub fallback: bool,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct ContinuationOutcome<T> {
    /// The polished solution, or the last good stage solution on failure.
    pub solution: Field<T>,
    /// Stage records, the polish last.
    pub stages: Vec<StageRecord<T>>,
    /// Set when a stage could not be solved: its `lambda` and the reason.
    pub failure: Option<(T, String)>,
    /// The polish met the residual, sign change and Pohozaev criteria together.
    pub accepted: bool,
}

impl<T: Real> ContinuationOutcome<T> {
    fn perturbed(&self) -> impl Iterator<Item = &StageRecord<T>> {
        self.stages.iter().filter(|s| s.lambda > T::zero())
    }

    /// Levels do not decrease as `lambda` decreases, up to a relative slack.
    pub fn levels_monotone(&self, slack: T) -> bool {
        let e: Vec<T> = self.perturbed().filter(|s| !s.branch_flag).map(|s| s.energy).collect();
        e.windows(2).all(|w| w[1] >= w[0] - slack * w[0].abs().max(T::one()))
    }

    /// Largest `int phi u^2` over the perturbed stages and the largest bound
    /// implied by the Ambrosetti-Rabinowitz combination, if available.
    pub fn coupling_bounds(&self) -> (T, Option<T>) {
        let c = self.perturbed().map(|s| s.coupling_energy).fold(T::zero(), T::max);
        let b = self.perturbed().map(|s| s.ar.map(|a| a.coupling_bound)).try_fold(T::zero(), |m, b| b.map(|b| m.max(b)));
        (c, b)
    }

    /// Distances between consecutive perturbed stages.
    pub fn cauchy_distances(&self) -> Vec<T> {
        self.perturbed().filter_map(|s| s.distance).collect()
    }
}

fn record<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    stage: usize,
    flow: &FlowOutcome<T>,
    prev: Option<&Field<T>>,
    sched: &ContinuationSchedule<T>,
    fallback: bool,
) -> Result<StageRecord<T>> {
    let u = &flow.terminal;
    let cert = Certificate::evaluate(problem, geom, flow)?;
    let phi = problem.coulomb().phi_of(u)?;
    let vol = problem.grid().cell_volume();
    let coupling_energy = vol * u.values().iter().zip(phi.values()).fold(T::zero(), |s, (a, b)| s + *a * *a * *b);
    let pot = problem.potential();
    let distance = prev.map(|p| {
        let d1 = e_norm_unchecked(&(u - p), pot);
        let d2 = e_norm_unchecked(&(u + p), pot);
        d1.min(d2)
    });
    let branch_flag = match (distance, prev) {
        (Some(d), Some(p)) => d > sched.branch_jump * e_norm_unchecked(p, pot),
        _ => false,
    };
    Ok(StageRecord {
        stage,
        lambda: problem.lambda(),
        energy: cert.energy,
        residual: cert.residual,
        coupling_energy,
        pohozaev: cert.pohozaev,
        ar: ar_combination(problem, u, cert.energy).ok(),
        nodal: cert.nodal,
        outside_w: cert.outside_w(),
        distance,
        branch_flag,
        fallback,
        steps: flow.steps,
    })
}

fn acceptable<T: Real>(problem: &Problem<T>, geom: &ConeGeometry<T>, flow: &FlowOutcome<T>) -> Result<bool> {
    let cert = Certificate::evaluate(problem, geom, flow)?;
    Ok(cert.converged && cert.outside_w() && cert.sign_changing())
}

/// Solves one stage: the warm-started nodal flow if `warm` is given, else
/// (or if that fails or lands in `W`) the full scaled minimax.
///
/// Returns the flow outcome and whether the fallback ran.
pub fn stage_solve<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    warm: Option<&Field<T>>,
    seeds: &SeedPair<T>,
    sched: &ContinuationSchedule<T>,
) -> Result<(FlowOutcome<T>, bool)> {
    if let Some(w) = warm {
        if let Ok(out) = flow_to_convergence(problem, geom, w, &sched.stage_flow) {
            if acceptable(problem, geom, &out)? {
                return Ok((out, false));
            }
        }
    }
    let (_, mm) = solve_from_seeds(problem, geom, seeds, &sched.minimax)?;
    Ok((mm.flow, warm.is_some()))
}

/// Runs the stages `lambda_0 > lambda_1 > ...` and the `lambda = 0` polish.
///
/// With `lambda_0 = 0` this is a single minimax on the unperturbed problem.
pub fn continuation_run<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    seeds: &SeedPair<T>,
    sched: &ContinuationSchedule<T>,
) -> Result<ContinuationOutcome<T>> {
    let lambdas = sched.lambdas()?;
    let base = problem.with_lambda(T::zero())?;
    if lambdas.is_empty() {
        let (_, mm) = solve_from_seeds(&base, geom, seeds, &sched.minimax)?;
        let rec = record(&base, geom, 0, &mm.flow, None, sched, false)?;
        let accepted = mm.certificate.passed(sched.polish_flow.residual_tol)
            && rec.pohozaev.is_some_and(|p| p <= sched.pohozaev_tol);
        return Ok(ContinuationOutcome { solution: mm.solution, stages: vec![rec], failure: None, accepted });
    }
    let mut stages = Vec::with_capacity(lambdas.len() + 1);
    let mut current: Option<Field<T>> = None;
    for (k, &lambda) in lambdas.iter().enumerate() {
        let pr = problem.with_lambda(lambda)?;
        match stage_solve(&pr, geom, current.as_ref(), seeds, sched) {
            Ok((flow, fallback)) => {
                stages.push(record(&pr, geom, k, &flow, current.as_ref(), sched, fallback)?);
                current = Some(flow.terminal);
            }
            Err(e) => {
                return Ok(ContinuationOutcome {
                    solution: current.unwrap_or_else(|| Field::zeros(*problem.grid())),
                    stages,
                    failure: Some((lambda, e.to_string())),
                    accepted: false,
                });
            }
        }
    }
    let last = current.expect("at least one stage ran");
    match flow_to_convergence(&base, geom, &last, &sched.polish_flow) {
        Ok(flow) => {
            let rec = record(&base, geom, lambdas.len(), &flow, Some(&last), sched, false)?;
            let accepted = rec.residual <= sched.polish_flow.residual_tol
                && rec.nodal.0 >= 1
                && rec.nodal.1 >= 1
                && rec.outside_w
                && rec.pohozaev.is_some_and(|p| p <= sched.pohozaev_tol);
            stages.push(rec);
            Ok(ContinuationOutcome { solution: flow.terminal, stages, failure: None, accepted })
        }
        Err(e) => Ok(ContinuationOutcome { solution: last, stages, failure: Some((T::zero(), e.to_string())), accepted: false }),
    }
}
