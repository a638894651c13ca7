//! Two-parameter simplex minimax for sign-changing critical points, and a
//! deflation loop for several of them.
//!
//! The initial map sends `(t1, t2)` in the triangle to `R (t1 v1 + t2 v2)`
//! (amplitude mode) or to `R^2 (t1 v1(R x) + t2 v2(R x))` (scaled mode), with
//! `v1 <= 0 <= v2` of disjoint support. The edge `t1 = 0` lies in `P+`, the
//! edge `t2 = 0` in `P-`, and `R` is tuned so the energy is negative on the
//! hypotenuse, which stays fixed.
//!
//! Each sweep deforms the movable lattice samples by a few flow steps and
//! records the largest energy among samples outside `W`. The argmax is then
//! handed to the nodal flow, which converges to the critical point.

use rayon::prelude::*;

use crate::cones::{cone_dist, surrogate_dist, Cone, ConeGeometry};
use crate::error::{Error, Result};
use crate::flow::{descend_steps, flow_to_convergence, FlowOutcome, FlowParams, Projection, State};
use crate::functional::{nodal_count_default, pohozaev_residual};
use crate::grid::{e_norm_unchecked, lp_norm_unchecked, Bump, Field};
use crate::problem::Problem;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PathMode {
    #[default]
    Amplitude,
    Scaled,
}

/// Bumps forming `v1 = sum of negative bumps` and `v2 = sum of positive bumps`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedPair<T> {
    negative: Vec<Bump<T>>,
    positive: Vec<Bump<T>>,
}

impl<T: Real> SeedPair<T> {
    pub fn new(negative: Vec<Bump<T>>, positive: Vec<Bump<T>>) -> Result<Self> {
        if negative.is_empty() || positive.is_empty() {
            return Err(Error::InvalidSeeds("both v1 and v2 need at least one bump".into()));
        }
        if negative.iter().any(|b| !(b.amplitude < T::zero())) || positive.iter().any(|b| !(b.amplitude > T::zero())) {
            return Err(Error::InvalidSeeds("v1 must be negative and v2 positive".into()));
        }
        if negative.iter().chain(&positive).any(|b| !(b.radius > T::zero())) {
            return Err(Error::InvalidSeeds("bump radii must be positive".into()));
        }
        let all: Vec<&Bump<T>> = negative.iter().chain(&positive).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if !all[i].disjoint_from(all[j]) {
                    return Err(Error::InvalidSeeds(format!("bumps {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { negative, positive })
    }

    /// `v2` as the reflection of `-v1` through the origin.
    pub fn symmetric(v1: Bump<T>) -> Result<Self> {
        let v2 = Bump::new(v1.center.map(|c| -c), v1.radius, -v1.amplitude);
        Self::new(vec![v1], vec![v2])
    }

    pub fn negative(&self) -> &[Bump<T>] {
        &self.negative
    }

    pub fn positive(&self) -> &[Bump<T>] {
        &self.positive
    }

    fn scaled_bumps(&self, r: T, mode: PathMode) -> (Vec<Bump<T>>, Vec<Bump<T>>) {
        let map = |b: &Bump<T>| match mode {
            PathMode::Amplitude => Bump { amplitude: b.amplitude * r, ..*b },
            PathMode::Scaled => b.concentrated(r),
        };
        (self.negative.iter().map(map).collect(), self.positive.iter().map(map).collect())
    }

    /// `(v1, v2)` at scale `R` on the grid of `problem`.
    pub fn sample(&self, problem: &Problem<T>, r: T, mode: PathMode) -> Result<(Field<T>, Field<T>)> {
        let grid = *problem.grid();
        let (neg, pos) = self.scaled_bumps(r, mode);
        if mode == PathMode::Scaled {
            // a support narrower than two cells is no longer resolved
            let min_radius = T::lit(2.0) * grid.h();
            if neg.iter().chain(&pos).any(|b| !b.fits(&grid) || b.radius < min_radius) {
                return Err(Error::BoxCapacity(r.as_f64()));
            }
        } else if neg.iter().chain(&pos).any(|b| !b.fits(&grid)) {
            return Err(Error::InvalidSeeds("a seed support leaves the box".into()));
        }
        let sum = |bs: &[Bump<T>]| Field::from_fn(grid, |x| bs.iter().fold(T::zero(), |s, b| s + b.eval(x)));
        let (v1, v2) = (sum(&neg), sum(&pos));
        if v1.is_zero() || v2.is_zero() {
            return Err(Error::InvalidSeeds("a seed vanishes on the grid".into()));
        }
        if v1.values().iter().zip(v2.values()).any(|(a, b)| *a != T::zero() && *b != T::zero()) {
            return Err(Error::InvalidSeeds("seed supports overlap on the grid".into()));
        }
        Ok((v1, v2))
    }
}

/// Which part of the triangle boundary a sample lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Interior,
    /// `t1 + t2 = 1`: never moves.
    Fixed,
    /// `t1 = 0`: stays in `P+`.
    Plus,
    /// `t2 = 0`: stays in `P-`.
    Minus,
}

#[derive(Clone, Debug)]
pub struct Sample<T> {
    /// `(t1, t2)`, the weights of `v1` and `v2`.
    pub t: [T; 2],
    pub tag: Tag,
    pub u: Field<T>,
}

#[derive(Clone, Debug)]
pub struct SimplexPath<T> {
    pub m: usize,
    pub r: T,
    pub mode: PathMode,
    pub samples: Vec<Sample<T>>,
}

/// Lattice of `m (m + 1) / 2` samples `t = (i, j) / (m - 1)`, `i + j <= m - 1`.
pub fn build_phi0<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    seeds: &SeedPair<T>,
    r: T,
    mode: PathMode,
    m: usize,
) -> Result<SimplexPath<T>> {
    if m < 2 {
        return Err(Error::InvalidArgument("lattice resolution must be at least 2".into()));
    }
    let (v1, v2) = seeds.sample(problem, r, mode)?;
    let d = T::from_usize_lossy(m - 1);
    let mut samples = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in 0..m - i {
            let t = [T::from_usize_lossy(i) / d, T::from_usize_lossy(j) / d];
            let tag = if i + j == m - 1 {
                Tag::Fixed
            } else if i == 0 {
                Tag::Plus
            } else if j == 0 {
                Tag::Minus
            } else {
                Tag::Interior
            };
            let u = Field::lin_comb(t[0], &v1, t[1], &v2);
            let ok = match tag {
                Tag::Plus => cone_dist(geom, problem, &u, Cone::Plus)? < geom.eps,
                Tag::Minus => cone_dist(geom, problem, &u, Cone::Minus)? < geom.eps,
                _ => true,
            };
            if !ok {
                return Err(Error::InvalidSeeds("a boundary sample misses its cone".into()));
            }
            samples.push(Sample { t, tag, u });
        }
    }
    Ok(SimplexPath { m, r, mode, samples })
}

/// `2 / sqrt(lambda_1 + min V)`, the constant with `||u||_2 <= m_2 eps` on
/// both neighborhoods.
pub fn m2_constant<T: Real>(problem: &Problem<T>) -> T {
    let vmin = problem.potential().values().iter().copied().fold(T::infinity(), T::min);
    T::lit(2.0) / (problem.grid().lowest_dirichlet_eigenvalue() + vmin.max(T::zero())).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneReport<T> {
    pub r: T,
    /// `(R, sup energy over the hypotenuse, min L2 norm over it)` per tried `R`.
    pub tried: Vec<(T, T, T)>,
}

/// Doubles `R` from one until the hypotenuse has negative energy and stays
/// clear of both neighborhoods in `L2`.
pub fn tune_r<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    seeds: &SeedPair<T>,
    mode: PathMode,
    m: usize,
    max_doublings: usize,
) -> Result<TuneReport<T>> {
    let threshold = m2_constant(problem) * geom.eps;
    let d = T::from_usize_lossy(m.max(2) - 1);
    let mut r = T::one();
    let mut tried = Vec::new();
    for _ in 0..=max_doublings {
        let (v1, v2) = seeds.sample(problem, r, mode)?;
        let mut sup = T::neg_infinity();
        let mut min_l2 = T::infinity();
        for i in 0..m.max(2) {
            let t = T::from_usize_lossy(i) / d;
            let u = Field::lin_comb(t, &v1, T::one() - t, &v2);
            sup = sup.max(State::new(problem, u.clone())?.energy);
            min_l2 = min_l2.min(lp_norm_unchecked(&u, T::lit(2.0)));
        }
        tried.push((r, sup, min_l2));
        if sup < T::zero() && min_l2 > threshold {
            return Ok(TuneReport { r, tried });
        }
        r = r * T::lit(2.0);
    }
    match mode {
        PathMode::Scaled => Err(Error::BoxCapacity(r.as_f64())),
        PathMode::Amplitude => Err(Error::InvalidSeeds(format!("no admissible R up to {}", (r / T::lit(2.0)).as_f64()))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimaxParams<T> {
    pub lattice: usize,
    pub mode: PathMode,
    pub sweeps: usize,
    pub steps_per_sweep: usize,
    /// Flow used by the sweeps; its projection is ignored.
    pub sweep_flow: FlowParams<T>,
    /// Flow from the argmax to the critical point.
    pub final_flow: FlowParams<T>,
    pub max_doublings: usize,
}

impl<T: Real> Default for MinimaxParams<T> {
    fn default() -> Self {
        Self {
            lattice: 8,
            mode: PathMode::Amplitude,
            sweeps: 4,
            steps_per_sweep: 2,
            sweep_flow: FlowParams::default(),
            final_flow: FlowParams { projection: Projection::Nodal, max_steps: 3000, ..FlowParams::default() },
            max_doublings: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<T> {
    pub residual: T,
    pub converged: bool,
    pub energy: T,
    /// `eps^2 / 2`.
    pub level_bound: T,
    pub dist_plus: T,
    pub dist_minus: T,
    pub eps: T,
    pub nodal: (usize, usize),
    pub pohozaev: Option<T>,
}

impl<T: Real> Certificate<T> {
    pub fn evaluate(problem: &Problem<T>, geom: &ConeGeometry<T>, flow: &FlowOutcome<T>) -> Result<Self> {
        let u = &flow.terminal;
        Ok(Self {
            residual: flow.residual,
            converged: flow.converged,
            energy: flow.energy(),
            level_bound: geom.eps * geom.eps * T::lit(0.5),
            dist_plus: cone_dist(&geom.exact(), problem, u, Cone::Plus)?,
            dist_minus: cone_dist(&geom.exact(), problem, u, Cone::Minus)?,
            eps: geom.eps,
            nodal: nodal_count_default(u),
            pohozaev: pohozaev_residual(problem, u).ok(),
        })
    }

    pub fn outside_w(&self) -> bool {
        self.dist_plus > self.eps && self.dist_minus > self.eps
    }

    pub fn sign_changing(&self) -> bool {
        self.nodal.0 >= 1 && self.nodal.1 >= 1
    }

    pub fn passed(&self, tol: T) -> bool {
        self.converged && self.outside_w() && self.sign_changing() && self.energy >= self.level_bound - tol
    }
}

#[derive(Clone, Debug)]
pub struct MinimaxOutcome<T> {
    pub solution: Field<T>,
    pub level: T,
    /// Largest energy outside `W` over the lattice, before the first sweep
    /// and after each one.
    pub level_trace: Vec<T>,
    /// Simplex parameters of the sample handed to the final flow.
    pub argmax: [T; 2],
    pub flow: FlowOutcome<T>,
    pub certificate: Certificate<T>,
    pub path: SimplexPath<T>,
}

fn outside_w<T: Real>(geom: &ConeGeometry<T>, problem: &Problem<T>, u: &Field<T>) -> bool {
    surrogate_dist(problem, u, Cone::Plus) >= geom.eps && surrogate_dist(problem, u, Cone::Minus) >= geom.eps
}

/// Runs the sweeps on `path` and the final flow from the highest sample outside `W`.
pub fn minimax_solve<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    path: SimplexPath<T>,
    params: &MinimaxParams<T>,
) -> Result<MinimaxOutcome<T>> {
    let mut path = path;
    let sweep_flow = FlowParams { projection: Projection::None, ..params.sweep_flow };
    sweep_flow.validate()?;
    let mut states: Vec<Option<State<T>>> = path
        .samples
        .par_iter()
        .map(|s| State::new(problem, s.u.clone()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(Some)
        .collect();
    let level_of = |states: &[Option<State<T>>]| -> Option<(usize, T)> {
        states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (i, s)))
            .filter(|(_, s)| outside_w(geom, problem, &s.u))
            .map(|(i, s)| (i, s.energy))
            .fold(None, |best: Option<(usize, T)>, (i, e)| match best {
                Some((_, b)) if b >= e => best,
                _ => Some((i, e)),
            })
    };
    let mut level_trace = Vec::with_capacity(params.sweeps + 1);
    let (arg, level) = level_of(&states).ok_or(Error::AllAbsorbed)?;
    level_trace.push(level);
    // the start of the final flow: the argmax of the last sweep whose level
    // still respects the lower bound eps^2 / 2 of the minimax value
    let floor = geom.eps * geom.eps * T::lit(0.5);
    let mut best = (arg, states[arg].as_ref().map(|s| s.u.clone()).expect("argmax sample is live"));
    for _ in 0..params.sweeps {
        let tags: Vec<Tag> = path.samples.iter().map(|s| s.tag).collect();
        states = states
            .into_par_iter()
            .zip(tags)
            .map(|(st, tag)| match (st, tag) {
                (Some(st), t) if t != Tag::Fixed => {
                    // a sample that diverges or stalls drops out of the sup
                    descend_steps(problem, st, params.steps_per_sweep, &sweep_flow).ok().map(|(s, _)| s)
                }
                (st, _) => st,
            })
            .collect();
        let (arg, level) = level_of(&states).ok_or(Error::AllAbsorbed)?;
        level_trace.push(level);
        if level < floor {
            break;
        }
        best = (arg, states[arg].as_ref().map(|s| s.u.clone()).expect("argmax sample is live"));
    }
    for (sample, st) in path.samples.iter_mut().zip(&states) {
        if let (Some(st), true) = (st, sample.tag != Tag::Fixed) {
            sample.u = st.u.clone();
        }
    }
    let (arg, start) = best;
    let flow = flow_to_convergence(problem, geom, &start, &params.final_flow)?;
    let certificate = Certificate::evaluate(problem, geom, &flow)?;
    Ok(MinimaxOutcome {
        solution: flow.terminal.clone(),
        level: flow.energy(),
        level_trace,
        argmax: path.samples[arg].t,
        flow,
        certificate,
        path,
    })
}

/// Tunes `R`, builds the lattice and runs [`minimax_solve`].
pub fn solve_from_seeds<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    seeds: &SeedPair<T>,
    params: &MinimaxParams<T>,
) -> Result<(TuneReport<T>, MinimaxOutcome<T>)> {
    let tune = tune_r(problem, geom, seeds, params.mode, params.lattice, params.max_doublings)?;
    let path = build_phi0(problem, geom, seeds, tune.r, params.mode, params.lattice)?;
    Ok((tune.clone(), minimax_solve(problem, geom, path, params)?))
}

#[derive(Clone, Debug)]
pub struct Multisolve<T> {
    /// Accepted solutions sorted by energy.
    pub solutions: Vec<MinimaxOutcome<T>>,
    /// Energies in the order the solutions were found.
    pub discovery_energies: Vec<T>,
    /// False when fewer than the requested count were found.
    pub complete: bool,
    /// Per attempted partition: the negative group and what happened.
    pub attempts: Vec<(Vec<usize>, String)>,
}

impl<T: Real> Multisolve<T> {
    pub fn discovery_monotone(&self) -> bool {
        self.discovery_energies.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Splits the bumps into a negative and a positive group in every way, runs
/// the minimax on each split and keeps terminals farther than `separation`
/// (in the energy norm) from every earlier solution and its negation.
pub fn deflated_multisolve<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    bumps: &[Bump<T>],
    count: usize,
    separation: T,
    params: &MinimaxParams<T>,
) -> Result<Multisolve<T>> {
    let k = bumps.len();
    if k < 2 || k > 16 {
        return Err(Error::InvalidSeeds(format!("need between 2 and 16 bumps, got {k}")));
    }
    if count > k.saturating_sub(1).max(1) * k {
        // not a hard limit, only a guard against absurd requests
        return Err(Error::InvalidArgument(format!("count {count} is too large for {k} bumps")));
    }
    let abs = |b: &Bump<T>| Bump { amplitude: b.amplitude.abs(), ..*b };
    let mut found: Vec<MinimaxOutcome<T>> = Vec::new();
    let mut discovery_energies = Vec::new();
    let mut attempts = Vec::new();
    let pot = problem.potential();
    // the last bump always sits in the positive group; negation covers the rest
    for mask in 1u32..(1 << (k - 1)) {
        if found.len() >= count {
            break;
        }
        let neg_idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let neg = neg_idx.iter().map(|&i| abs(&bumps[i]).negated()).collect();
        let pos = (0..k).filter(|i| mask & (1 << i) == 0).map(|i| abs(&bumps[i])).collect();
        let seeds = SeedPair::new(neg, pos)?;
        match solve_from_seeds(problem, geom, &seeds, params) {
            Ok((_, out)) => {
                if !out.certificate.passed(params.final_flow.residual_tol) {
                    attempts.push((neg_idx, "rejected: certificate failed".to_string()));
                    continue;
                }
                let far = found.iter().all(|prev| {
                    let d1 = e_norm_unchecked(&(&out.solution - &prev.solution), pot);
                    let d2 = e_norm_unchecked(&(&out.solution + &prev.solution), pot);
                    d1.min(d2) > separation
                });
                if far {
                    attempts.push((neg_idx, format!("accepted at energy {:.6e}", out.level.as_f64())));
                    discovery_energies.push(out.level);
                    found.push(out);
                } else {
                    attempts.push((neg_idx, "rejected: duplicate".to_string()));
                }
            }
            Err(e) => attempts.push((neg_idx, format!("failed: {e}"))),
        }
    }
    found.sort_by(|a, b| a.level.partial_cmp(&b.level).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Multisolve { complete: found.len() >= count, solutions: found, discovery_energies, attempts })
}
