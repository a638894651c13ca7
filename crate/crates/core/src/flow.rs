//! Descending flow: the damped iteration `u <- (1 - s) u + s A(u)` with an
//! Armijo rule on the energy.
//!
//! Because `0 < s <= 1`, every iterate is a convex combination of `u` and
//! `A(u)`; convexity of the cone neighborhoods then carries their invariance
//! under `A` over to the flow.
//!
//! Plain descent can only settle at local minima of the energy, which the
//! nontrivial solutions are not. Two optional re-projections after each step
//! turn the flow into a descent on a natural constraint whose critical points
//! are critical points of the energy: `Ray` rescales the iterate to the
//! maximum of the energy along its ray (for one-signed solutions), `Nodal`
//! rescales the positive and negative parts independently to the maximum of
//! `(s, t) -> I(s w+ + t w-)` (for sign-changing solutions).

use crate::aop::{apply_a_with_phi, derivative_identity_check, ASolveResult};
use crate::cones::{surrogate_dist, Cone, ConeGeometry};
use crate::error::{Error, Result};
use crate::functional::{energy_with_phi, gradient_vector};
use crate::grid::{dot, e_inner_unchecked, e_norm_unchecked, lp_integral, Field};
use crate::problem::Problem;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Projection {
    #[default]
    None,
    Ray,
    Nodal,
}

/// Flags a run whose fixed-point gap is small while the gradient probe stays large.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StagnationParams<T> {
    pub beta_min: T,
    pub alpha: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams<T> {
    pub step_init: T,
    pub step_shrink: T,
    pub max_halvings: usize,
    pub max_steps: usize,
    /// Stop when `||u - A(u)||_E` is at most this.
    pub residual_tol: T,
    pub energy_floor: T,
    /// Armijo constant.
    pub kappa: T,
    pub projection: Projection,
    pub stagnation: Option<StagnationParams<T>>,
}

impl<T: Real> Default for FlowParams<T> {
    fn default() -> Self {
        Self {
            step_init: T::one(),
            step_shrink: T::lit(0.5),
            max_halvings: 40,
            max_steps: 500,
            residual_tol: T::lit(1e-8),
            energy_floor: T::lit(-1e12),
            kappa: T::lit(0.25),
            projection: Projection::None,
            stagnation: None,
        }
    }
}

impl<T: Real> FlowParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_init > T::zero()
            && self.step_init <= T::one()
            && self.step_shrink > T::zero()
            && self.step_shrink < T::one()
            && self.kappa > T::zero()
            && self.kappa < T::one()
            && self.residual_tol >= T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "flow needs 0 < step_init <= 1, 0 < step_shrink < 1, 0 < kappa < 1, residual_tol >= 0".into(),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub step: usize,
    /// Accepted step of the move that produced this iterate (zero for the start).
    pub s: T,
    pub residual: T,
    pub energy: T,
    pub dist_plus: T,
    pub dist_minus: T,
}

#[derive(Clone, Debug)]
pub struct FlowOutcome<T> {
    pub terminal: Field<T>,
    pub converged: bool,
    pub residual: T,
    pub energy_trace: Vec<T>,
    /// `(in P_eps+, in P_eps-)` per iterate.
    pub cone_trace: Vec<(bool, bool)>,
    pub steps: usize,
    pub trace: Vec<TraceRow<T>>,
    pub stagnation: bool,
    /// Total conjugate gradient iterations spent in `A`.
    pub cg_iterations: usize,
}

impl<T: Real> FlowOutcome<T> {
    pub fn energy(&self) -> T {
        *self.energy_trace.last().expect("trace holds the initial energy")
    }
}

/// A field together with its Coulomb potential and energy.
#[derive(Clone, Debug)]
pub struct State<T> {
    pub u: Field<T>,
    pub phi: Field<T>,
    pub energy: T,
}

impl<T: Real> State<T> {
    pub fn new(problem: &Problem<T>, u: Field<T>) -> Result<Self> {
        problem.check_field(&u)?;
        let phi = problem.coulomb().phi_of(&u)?;
        let energy = energy_with_phi(problem, &u, &phi)?.total;
        Ok(Self { u, phi, energy })
    }

    fn with_phi(problem: &Problem<T>, u: Field<T>, phi: Field<T>) -> Result<Self> {
        let energy = energy_with_phi(problem, &u, &phi)?.total;
        Ok(Self { u, phi, energy })
    }
}

/// Coefficients of `J(s, t) = I(s w+ + t w-)`, a polynomial in `s, t` and
/// their powers `p` and `r`.
#[derive(Clone, Copy, Debug)]
struct NodalPolynomial<T> {
    a: [T; 3],
    b: [T; 3],
    c: [T; 2],
    d: [T; 2],
    p: T,
    r: T,
    lambda: T,
}

impl<T: Real> NodalPolynomial<T> {
    fn value(&self, s: T, t: T) -> T {
        let (half, quarter) = (T::lit(0.5), T::lit(0.25));
        let [ap, am, a0] = self.a;
        let [bp, bm, b0] = self.b;
        half * (s * s * ap + t * t * am + T::lit(2.0) * s * t * a0)
            + quarter * (s.powi(4) * bp + t.powi(4) * bm + T::lit(2.0) * s * s * t * t * b0)
            - (s.powf(self.p) * self.c[0] + t.powf(self.p) * self.c[1]) / self.p
            - self.lambda * (s.powf(self.r) * self.d[0] + t.powf(self.r) * self.d[1]) / self.r
    }

    /// Partial derivative in the first variable; the second follows by symmetry.
    fn ds(&self, s: T, t: T, plus: bool) -> T {
        let (ap, bp, c, d) = if plus {
            (self.a[0], self.b[0], self.c[0], self.d[0])
        } else {
            (self.a[1], self.b[1], self.c[1], self.d[1])
        };
        s * ap + t * self.a[2] + s * s * s * bp + s * t * t * self.b[2]
            - s.powf(self.p - T::one()) * c
            - self.lambda * s.powf(self.r - T::one()) * d
    }

    fn dss(&self, s: T, t: T, plus: bool) -> T {
        let (ap, bp, c, d) = if plus {
            (self.a[0], self.b[0], self.c[0], self.d[0])
        } else {
            (self.a[1], self.b[1], self.c[1], self.d[1])
        };
        let one = T::one();
        ap + T::lit(3.0) * s * s * bp + t * t * self.b[2]
            - (self.p - one) * s.powf(self.p - T::lit(2.0)) * c
            - self.lambda * (self.r - one) * s.powf(self.r - T::lit(2.0)) * d
    }

    fn gradient(&self, s: T, t: T) -> [T; 2] {
        [self.ds(s, t, true), self.ds(t, s, false)]
    }
}

/// Smallest positive root of `g` at which `g` turns from positive to negative:
/// the first local maximum of its antiderivative.
fn first_descending_root<T: Real>(g: impl Fn(T) -> T) -> Option<T> {
    let mut lo = T::lit(1e-4);
    if !(g(lo) > T::zero()) {
        return Some(lo);
    }
    let factor = T::lit(1.1);
    let limit = T::lit(1e6);
    let mut hi = lo * factor;
    while g(hi) > T::zero() {
        lo = hi;
        hi = hi * factor;
        if hi > limit {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::lit(1e-15) * hi {
            break;
        }
    }
    Some((lo + hi) * T::lit(0.5))
}

fn maximize_nodal<T: Real>(poly: &NodalPolynomial<T>) -> Result<(T, T)> {
    let (mut s, mut t) = (T::one(), T::one());
    for _ in 0..500 {
        let s_new = first_descending_root(|x| poly.ds(x, t, true)).ok_or(Error::NoMaximum("the positive part"))?;
        let t_new = first_descending_root(|x| poly.ds(x, s_new, false)).ok_or(Error::NoMaximum("the negative part"))?;
        let change = (s_new - s).abs() + (t_new - t).abs();
        s = s_new;
        t = t_new;
        if change <= T::lit(1e-13) * (s + t) {
            break;
        }
    }
    // Newton polish on the joint stationarity conditions
    for _ in 0..8 {
        let [gs, gt] = poly.gradient(s, t);
        let hss = poly.dss(s, t, true);
        let htt = poly.dss(t, s, false);
        let hst = poly.a[2] + T::lit(2.0) * s * t * poly.b[2];
        let det = hss * htt - hst * hst;
        if !(hss < T::zero() && det > T::zero()) {
            break;
        }
        let ds = (htt * gs - hst * gt) / det;
        let dt = (hss * gt - hst * gs) / det;
        let (s2, t2) = (s - ds, t - dt);
        if !(s2 > T::zero() && t2 > T::zero()) || poly.value(s2, t2) < poly.value(s, t) {
            break;
        }
        s = s2;
        t = t2;
    }
    Ok((s, t))
}

/// Rescales the parts of `w` to the first local maximum of the energy: along
/// the ray for [`Projection::Ray`], along the nodal quadrant for
/// [`Projection::Nodal`]. Returns the projected state and the multipliers.
pub fn project<T: Real>(problem: &Problem<T>, w: &Field<T>, mode: Projection) -> Result<(State<T>, [T; 2])> {
    let model = problem.model();
    let lambda = model.lambda;
    let vol = problem.grid().cell_volume();
    let pot = problem.potential();
    let coulomb = problem.coulomb();
    match mode {
        Projection::None => Ok((State::new(problem, w.clone())?, [T::one(), T::one()])),
        Projection::Ray => {
            if w.is_zero() {
                return Err(Error::NoMaximum("the zero ray"));
            }
            let rho = w.map(|v| v * v);
            let phi = coulomb.potential_of_density(&rho)?;
            let a = e_inner_unchecked(w, w, pot);
            let b = vol * dot(rho.values(), phi.values());
            let c = lp_integral(w, model.p);
            let d = if lambda > T::zero() { lp_integral(w, model.r) } else { T::zero() };
            let g = |t: T| {
                t * a + t * t * t * b - t.powf(model.p - T::one()) * c - lambda * t.powf(model.r - T::one()) * d
            };
            let t = first_descending_root(g).ok_or(Error::NoMaximum("the ray"))?;
            let u = w.scaled(t);
            let phi = phi.scaled(t * t);
            Ok((State::with_phi(problem, u, phi)?, [t, t]))
        }
        Projection::Nodal => {
            let wp = w.map(|v| v.max(T::zero()));
            let wm = w.map(|v| v.min(T::zero()));
            if wp.is_zero() || wm.is_zero() {
                return Err(Error::NoMaximum("a one-signed field in the nodal quadrant"));
            }
            let rp = wp.map(|v| v * v);
            let rm = wm.map(|v| v * v);
            let php = coulomb.potential_of_density(&rp)?;
            let phm = coulomb.potential_of_density(&rm)?;
            let poly = NodalPolynomial {
                a: [e_inner_unchecked(&wp, &wp, pot), e_inner_unchecked(&wm, &wm, pot), e_inner_unchecked(&wp, &wm, pot)],
                b: [
                    vol * dot(rp.values(), php.values()),
                    vol * dot(rm.values(), phm.values()),
                    vol * dot(rm.values(), php.values()),
                ],
                c: [lp_integral(&wp, model.p), lp_integral(&wm, model.p)],
                d: if lambda > T::zero() {
                    [lp_integral(&wp, model.r), lp_integral(&wm, model.r)]
                } else {
                    [T::zero(); 2]
                },
                p: model.p,
                r: model.r,
                lambda,
            };
            let (s, t) = maximize_nodal(&poly)?;
            let u = Field::lin_comb(s, &wp, t, &wm);
            let phi = Field::lin_comb(s * s, &php, t * t, &phm);
            Ok((State::with_phi(problem, u, phi)?, [s, t]))
        }
    }
}

struct Step<T> {
    next: State<T>,
    s: T,
}

/// One Armijo step from `state`, given `a = A(state.u)`.
fn armijo_step<T: Real>(problem: &Problem<T>, state: &State<T>, a: &ASolveResult<T>, params: &FlowParams<T>) -> Result<Step<T>> {
    let res = a.fixed_point_gap;
    let slack = T::lit(1e-12) * state.energy.abs().max(T::one());
    let mut s = params.step_init;
    for _ in 0..=params.max_halvings {
        let w = Field::lin_comb(T::one() - s, &state.u, s, &a.v);
        let candidate = match params.projection {
            Projection::None => State::new(problem, w),
            mode => project(problem, &w, mode).map(|(st, _)| st),
        };
        if let Ok(next) = candidate {
            if next.energy <= state.energy - params.kappa * s * res * res + slack {
                return Ok(Step { next, s });
            }
        }
        s = s * params.step_shrink;
    }
    let id = derivative_identity_check(problem, &state.u, a)?;
    Err(Error::LineSearch { residual: res.as_f64(), derivative: id.lhs.as_f64(), gap_sq: id.gap_sq.as_f64() })
}

/// Applies [`armijo_step`] once; the public single-step entry point.
///
/// Fails with [`Error::FixedPoint`] when `u = A(u)` already.
pub fn flow_step<T: Real>(problem: &Problem<T>, u: &Field<T>, params: &FlowParams<T>) -> Result<(Field<T>, T)> {
    params.validate()?;
    let state = State::new(problem, u.clone())?;
    let a = apply_a_with_phi(problem, u, state.phi.clone())?;
    if a.fixed_point_gap == T::zero() {
        return Err(Error::FixedPoint);
    }
    let step = armijo_step(problem, &state, &a, params)?;
    Ok((step.next.u, step.s))
}

fn cone_row<T: Real>(geom: &ConeGeometry<T>, problem: &Problem<T>, u: &Field<T>) -> (T, T, bool, bool) {
    let dp = surrogate_dist(problem, u, Cone::Plus);
    let dm = surrogate_dist(problem, u, Cone::Minus);
    (dp, dm, dp < geom.eps, dm < geom.eps)
}

/// Iterates the flow until `||u - A(u)||_E <= residual_tol` or `max_steps`.
///
/// With a projection the starting field is projected first.
pub fn flow_to_convergence<T: Real>(
    problem: &Problem<T>,
    geom: &ConeGeometry<T>,
    u0: &Field<T>,
    params: &FlowParams<T>,
) -> Result<FlowOutcome<T>> {
    params.validate()?;
    let mut state = match params.projection {
        Projection::None => State::new(problem, u0.clone())?,
        _ if u0.is_zero() => State::new(problem, u0.clone())?,
        mode => project(problem, u0, mode)?.0,
    };
    let mut outcome = FlowOutcome {
        terminal: Field::zeros(*problem.grid()),
        converged: false,
        residual: T::infinity(),
        energy_trace: Vec::new(),
        cone_trace: Vec::new(),
        steps: 0,
        trace: Vec::new(),
        stagnation: false,
        cg_iterations: 0,
    };
    let mut s_prev = T::zero();
    loop {
        if state.energy < params.energy_floor {
            return Err(Error::EnergyFloor { energy: state.energy.as_f64(), floor: params.energy_floor.as_f64() });
        }
        let a = apply_a_with_phi(problem, &state.u, state.phi.clone())?;
        outcome.cg_iterations += a.cg_iterations;
        let res = a.fixed_point_gap;
        let (dp, dm, inp, inm) = cone_row(geom, problem, &state.u);
        outcome.energy_trace.push(state.energy);
        outcome.cone_trace.push((inp, inm));
        outcome.trace.push(TraceRow { step: outcome.steps, s: s_prev, residual: res, energy: state.energy, dist_plus: dp, dist_minus: dm });
        outcome.residual = res;
        if let Some(st) = params.stagnation {
            if res < st.beta_min && res > params.residual_tol {
                let g = gradient_vector(problem, &state.u, &state.phi);
                let e = e_norm_unchecked(&g, problem.potential());
                if e > T::zero() {
                    let probe = problem.grid().cell_volume() * dot(g.values(), g.values()) / e;
                    outcome.stagnation |= probe > st.alpha;
                }
            }
        }
        if res <= params.residual_tol {
            outcome.converged = true;
            break;
        }
        if outcome.steps >= params.max_steps {
            break;
        }
        let step = armijo_step(problem, &state, &a, params)?;
        s_prev = step.s;
        state = step.next;
        outcome.steps += 1;
    }
    outcome.terminal = state.u;
    Ok(outcome)
}

/// Applies up to `k` plain Armijo steps without the convergence bookkeeping;
/// used by the minimax sweeps. Returns the new state and the last residual.
pub(crate) fn descend_steps<T: Real>(problem: &Problem<T>, state: State<T>, k: usize, params: &FlowParams<T>) -> Result<(State<T>, T)> {
    let mut state = state;
    let mut res = T::infinity();
    for _ in 0..k {
        let a = apply_a_with_phi(problem, &state.u, state.phi.clone())?;
        res = a.fixed_point_gap;
        if res <= params.residual_tol {
            break;
        }
        state = armijo_step(problem, &state, &a, params)?.next;
    }
    Ok((state, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aop::apply_a;
    use crate::functional::nodal_count_default;
    use crate::grid::{Bump, Grid3};
    use crate::model::ModelConfig;

    fn problem() -> Problem<f64> {
        Problem::new(ModelConfig::new(4.5), Grid3::<f64>::new(3.0, 14).unwrap()).unwrap()
    }

    #[test]
    fn zero_is_converged() {
        let pr = problem();
        let geom = ConeGeometry::new(1e-3).unwrap();
        let z = Field::zeros(*pr.grid());
        let out = flow_to_convergence(&pr, &geom, &z, &FlowParams::default()).unwrap();
        assert!(out.converged && out.steps == 0 && out.terminal.is_zero());
        assert!(matches!(flow_step(&pr, &z, &FlowParams::default()), Err(Error::FixedPoint)));
    }

    #[test]
    fn armijo_decrease() {
        let pr = problem();
        let u = Bump::<f64>::new([0.2, 0.0, -0.3], 1.5, 3.0).sample(*pr.grid());
        let before = State::new(&pr, u.clone()).unwrap().energy;
        let params = FlowParams::default();
        let (next, s) = flow_step(&pr, &u, &params).unwrap();
        let after = State::new(&pr, next).unwrap().energy;
        let res = apply_a(&pr, &u).unwrap().fixed_point_gap;
        assert!(s > 0.0 && s <= 1.0);
        assert!(after <= before - 0.25 * s * res * res + 1e-12 * before.abs().max(1.0));
        assert!(after < before);
    }

    #[test]
    fn nodal_polynomial_maximum() {
        let poly = NodalPolynomial::<f64> { a: [2.0, 3.0, 0.1], b: [0.5, 0.4, 0.2], c: [1.0, 1.5], d: [0.0; 2], p: 4.5, r: 5.25, lambda: 0.0 };
        let (s, t) = maximize_nodal(&poly).unwrap();
        let [gs, gt] = poly.gradient(s, t);
        assert!(gs.abs() < 1e-9 && gt.abs() < 1e-9, "{gs} {gt}");
        let v = poly.value(s, t);
        for (ds, dt) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(poly.value(s + ds, t + dt) < v);
        }
    }

    #[test]
    fn ray_projection_lands_on_nehari_set() {
        let pr = problem();
        let w = Bump::<f64>::new([0.0; 3], 1.5, -1.0).sample(*pr.grid());
        let (st, [t, _]) = project(&pr, &w, Projection::Ray).unwrap();
        let d = crate::functional::di_action(&pr, &st.u, &st.u).unwrap();
        assert!(t > 0.0);
        assert!(d.abs() < 1e-9 * st.energy.abs(), "{d}");
    }

    #[test]
    fn negative_seed_converges_to_negative_solution() {
        let pr = problem();
        let geom = ConeGeometry::new(1e-3).unwrap();
        let u0 = Bump::<f64>::new([0.3, -0.2, 0.1], 1.6, -2.0).sample(*pr.grid());
        let params = FlowParams { projection: Projection::Ray, ..FlowParams::default() };
        let out = flow_to_convergence(&pr, &geom, &u0, &params).unwrap();
        assert!(out.converged, "residual {}", out.residual);
        assert!(out.cone_trace.iter().all(|c| c.1));
        assert!(out.energy_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
        assert!(out.terminal.values().iter().all(|v| *v < 0.0));
    }

    #[test]
    fn odd_equivariance() {
        let pr = problem();
        let geom = ConeGeometry::new(1e-3).unwrap();
        let a = Bump::<f64>::new([-1.0, 0.0, 0.0], 0.9, -2.0);
        let b = Bump::<f64>::new([1.0, 0.0, 0.0], 0.9, 2.5);
        let u0 = Field::from_fn(*pr.grid(), |x| a.eval(x) + b.eval(x));
        let params = FlowParams { max_steps: 5, projection: Projection::Nodal, ..FlowParams::default() };
        let p = flow_to_convergence(&pr, &geom, &u0, &params).unwrap();
        let m = flow_to_convergence(&pr, &geom, &u0.scaled(-1.0), &params).unwrap();
        let diff = (&p.terminal + &m.terminal).max_abs();
        assert!(diff <= 1e-10 * p.terminal.max_abs(), "{diff}");
        assert_eq!(nodal_count_default(&p.terminal), (1, 1));
    }
}
