//! Energy functional, its derivative, and solution diagnostics.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{dot, e_inner_unchecked, grad_sq_inner, lp_integral, Bump, Field};
use crate::model::signed_power;
use crate::problem::Problem;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown<T> {
    /// `1/2 int |grad u|^2`
    pub kinetic: T,
    /// `1/2 int V u^2`
    pub potential: T,
    /// `1/4 int phi_u u^2`
    pub coupling: T,
    /// `int F(u)`
    pub nonlinear: T,
    /// `lambda/r int |u|^r`
    pub perturb: T,
    pub total: T,
}

fn finite<T: Real>(x: T, what: usize) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { index: what, value: x.as_f64() })
    }
}

pub fn energy<T: Real>(problem: &Problem<T>, u: &Field<T>) -> Result<EnergyBreakdown<T>> {
    problem.check_field(u)?;
    let phi = problem.coulomb().phi_of(u)?;
    energy_with_phi(problem, u, &phi)
}

pub fn energy_with_phi<T: Real>(problem: &Problem<T>, u: &Field<T>, phi: &Field<T>) -> Result<EnergyBreakdown<T>> {
    let g = problem.grid();
    let vol = g.cell_volume();
    let half = T::lit(0.5);
    let model = problem.model();
    let nl = model.nonlinearity();
    let kinetic = half * grad_sq_inner(u, u)?;
    let mut pot = T::zero();
    let mut coup = T::zero();
    let mut nonl = T::zero();
    for ((&ui, &vi), &pi) in u.values().iter().zip(problem.potential().values()).zip(phi.values()) {
        let u2 = ui * ui;
        pot = pot + vi * u2;
        coup = coup + pi * u2;
        nonl = nonl + nl.primitive(ui);
    }
    let potential = half * vol * pot;
    let coupling = T::lit(0.25) * vol * coup;
    let nonlinear = finite(vol * nonl, 0)?;
    let perturb = if model.lambda > T::zero() {
        finite(model.lambda / model.r * lp_integral(u, model.r), 0)?
    } else {
        T::zero()
    };
    let total = kinetic + potential + coupling - nonlinear - perturb;
    Ok(EnergyBreakdown { kinetic, potential, coupling, nonlinear, perturb, total })
}

/// Nodal gradient `(-Delta_h + V + phi_u) u - f(u) - lambda |u|^(r-2) u`, so that
/// `<I'(u), v> = h^3 <gradient, v>`.
pub fn gradient_vector<T: Real>(problem: &Problem<T>, u: &Field<T>, phi: &Field<T>) -> Field<T> {
    let model = problem.model();
    let nl = model.nonlinearity();
    let lap = crate::grid::neg_laplacian(u);
    let lambda = model.lambda;
    let pert = (lambda > T::zero()).then(|| signed_power(u, model.r));
    let values = (0..u.values().len())
        .map(|i| {
            let ui = u.values()[i];
            let mut g = lap.values()[i] + (problem.potential().values()[i] + phi.values()[i]) * ui - nl.f(ui);
            if let Some(p) = &pert {
                g = g - lambda * p.values()[i];
            }
            g
        })
        .collect();
    Field::from_values_unchecked(*u.grid(), values)
}

/// `<I'(u), v>`, exact for the discrete energy.
pub fn di_action<T: Real>(problem: &Problem<T>, u: &Field<T>, v: &Field<T>) -> Result<T> {
    problem.check_field(u)?;
    u.check_same_grid(v)?;
    let phi = problem.coulomb().phi_of(u)?;
    Ok(di_action_with_phi(problem, u, &phi, v))
}

pub(crate) fn di_action_with_phi<T: Real>(problem: &Problem<T>, u: &Field<T>, phi: &Field<T>, v: &Field<T>) -> T {
    let g = gradient_vector(problem, u, phi);
    problem.grid().cell_volume() * dot(g.values(), v.values())
}

fn normalized_sum<T: Real>(terms: &[T]) -> T {
    let scale: T = terms.iter().map(|t| t.abs()).sum();
    if scale == T::zero() {
        T::zero()
    } else {
        terms.iter().copied().sum::<T>() / scale
    }
}

/// The Pohozaev combination
/// `1/2 int |grad u|^2 + 3/2 int V u^2 + 1/2 int (x.grad V) u^2 + 5/4 int phi u^2
///  - 3 int F(u) - 3 lambda/r int |u|^r`,
/// divided by the sum of the absolute values of its terms.
pub fn pohozaev_residual<T: Real>(problem: &Problem<T>, u: &Field<T>) -> Result<T> {
    let xg = problem.x_dot_grad_v()?;
    let e = energy(problem, u)?;
    let vol = problem.grid().cell_volume();
    let xgv = vol * dot(xg.values(), &u.values().iter().map(|v| *v * *v).collect::<Vec<_>>());
    let three = T::lit(3.0);
    let terms = [
        e.kinetic,
        three * e.potential,
        T::lit(0.5) * xgv,
        T::lit(5.0) * e.coupling,
        -three * e.nonlinear,
        -three * e.perturb,
    ];
    Ok(normalized_sum(&terms))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArReport<T> {
    /// `(3 - mu/2) c`
    pub lhs: T,
    pub rhs: T,
    /// `|lhs - rhs|` over the sum of absolute values of all terms.
    pub mismatch: T,
    /// `int phi_u u^2` at `u`.
    pub coupling: T,
    /// `(3 - mu/2) c / (mu/2 - 3/2)`, the bound on `int phi_u u^2` implied by the identity.
    pub coupling_bound: T,
}

/// Evaluates both sides of the combination
/// `(3 - mu/2) c = (mu/4 - 1/2) int (2V + x.grad V) u^2 + (mu/2 - 3/2) int phi u^2
///  + (1 - mu/r) lambda int |u|^r + int (u f(u) - mu F(u))`.
pub fn ar_combination<T: Real>(problem: &Problem<T>, u: &Field<T>, c_level: T) -> Result<ArReport<T>> {
    let model = problem.model();
    let mu = model.mu;
    let xg = problem.x_dot_grad_v()?;
    let vol = problem.grid().cell_volume();
    let phi = problem.coulomb().phi_of(u)?;
    let nl = model.nonlinearity();
    let (mut w, mut c, mut af) = (T::zero(), T::zero(), T::zero());
    for i in 0..u.values().len() {
        let ui = u.values()[i];
        let u2 = ui * ui;
        w = w + (T::lit(2.0) * problem.potential().values()[i] + xg.values()[i]) * u2;
        c = c + phi.values()[i] * u2;
        af = af + ui * nl.f(ui) - mu * nl.primitive(ui);
    }
    let (w, coupling, af) = (vol * w, vol * c, vol * af);
    let perturb = if model.lambda > T::zero() {
        (T::one() - mu / model.r) * model.lambda * lp_integral(u, model.r)
    } else {
        T::zero()
    };
    let terms = [
        (mu / T::lit(4.0) - T::lit(0.5)) * w,
        (mu / T::lit(2.0) - T::lit(1.5)) * coupling,
        perturb,
        af,
    ];
    let lhs = (T::lit(3.0) - mu / T::lit(2.0)) * c_level;
    let rhs: T = terms.iter().copied().sum();
    let scale = lhs.abs() + terms.iter().map(|t| t.abs()).sum::<T>();
    let mismatch = if scale == T::zero() { T::zero() } else { (lhs - rhs).abs() / scale };
    Ok(ArReport { lhs, rhs, mismatch, coupling, coupling_bound: lhs / (mu / T::lit(2.0) - T::lit(1.5)) })
}

/// Number of 6-connected components of `{u > threshold}` and `{u < -threshold}`.
pub fn nodal_count<T: Real>(u: &Field<T>, threshold: T) -> (usize, usize) {
    let g = u.grid();
    let n = g.n();
    let vals = u.values();
    let mut label = vec![0u8; vals.len()];
    for (idx, v) in vals.iter().enumerate() {
        label[idx] = if *v > threshold {
            1
        } else if *v < -threshold {
            2
        } else {
            0
        };
    }
    let mut seen = vec![false; vals.len()];
    let mut counts = [0usize; 3];
    let mut queue = VecDeque::new();
    for start in 0..vals.len() {
        if label[start] == 0 || seen[start] {
            continue;
        }
        let sign = label[start];
        counts[sign as usize] += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (i, j, k) = g.unravel(idx);
            let mut visit = |c: usize| {
                if !seen[c] && label[c] == sign {
                    seen[c] = true;
                    queue.push_back(c);
                }
            };
            if i > 0 {
                visit(idx - n * n);
            }
            if i + 1 < n {
                visit(idx + n * n);
            }
            if j > 0 {
                visit(idx - n);
            }
            if j + 1 < n {
                visit(idx + n);
            }
            if k > 0 {
                visit(idx - 1);
            }
            if k + 1 < n {
                visit(idx + 1);
            }
        }
    }
    (counts[1], counts[2])
}

/// [`nodal_count`] with the default threshold `1e-8 max |u|`.
pub fn nodal_count_default<T: Real>(u: &Field<T>) -> (usize, usize) {
    nodal_count(u, T::lit(1e-8) * u.max_abs())
}

/// One scaling identity: `lhs` is measured on `u_t`, `rhs = R^exponent *` the
/// same quantity on the unscaled profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingTerm<T> {
    pub exponent: T,
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> ScalingTerm<T> {
    pub fn mismatch(&self) -> T {
        let s = self.lhs.abs().max(self.rhs.abs());
        if s == T::zero() {
            T::zero()
        } else {
            (self.lhs - self.rhs).abs() / s
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingReport<T> {
    /// `int |grad u_t|^2`, `int u_t^2`, `int |u_t|^mu`, `int phi u_t^2`.
    pub terms: [ScalingTerm<T>; 4],
}

impl<T: Real> ScalingReport<T> {
    pub fn max_mismatch(&self) -> T {
        self.terms.iter().fold(T::zero(), |m, t| m.max(t.mismatch()))
    }
}

/// The four scaled quantities sampled for `t v1 + (1 - t) v2` concentrated by `r`.
fn scaled_quantities<T: Real>(problem: &Problem<T>, v1: &Bump<T>, v2: &Bump<T>, r: T, t: T) -> Result<[T; 4]> {
    let grid = *problem.grid();
    let (b1, b2) = (v1.concentrated(r), v2.concentrated(r));
    if !b1.fits(&grid) || !b2.fits(&grid) {
        return Err(Error::InvalidArgument(format!("scaled supports leave the box at R = {r}")));
    }
    let u = Field::from_fn(grid, |x| t * b1.eval(x) + (T::one() - t) * b2.eval(x));
    let zero = Field::zeros(grid);
    Ok([
        e_inner_unchecked(&u, &u, &zero),
        lp_integral(&u, T::lit(2.0)),
        lp_integral(&u, problem.model().mu),
        problem.coulomb().coupling_energy(&u)?,
    ])
}

/// Compares the quantities of `u_t = R^2 (t v1(R.) + (1-t) v2(R.))` with the
/// scaling laws `R^3`, `R`, `R^(2 mu - 3)`, `R^3` applied to `t v1 + (1-t) v2`.
pub fn scaling_check<T: Real>(problem: &Problem<T>, v1: &Bump<T>, v2: &Bump<T>, r: T, t: T) -> Result<ScalingReport<T>> {
    let base = scaled_quantities(problem, v1, v2, T::one(), t)?;
    let scaled = scaled_quantities(problem, v1, v2, r, t)?;
    let mu = problem.model().mu;
    let exps = [T::lit(3.0), T::one(), T::lit(2.0) * mu - T::lit(3.0), T::lit(3.0)];
    let terms = [0, 1, 2, 3].map(|i| ScalingTerm { exponent: exps[i], lhs: scaled[i], rhs: r.powf(exps[i]) * base[i] });
    Ok(ScalingReport { terms })
}

/// Least-squares slopes of `log quantity` against `log R` for the four quantities.
pub fn scaling_exponents<T: Real>(problem: &Problem<T>, v1: &Bump<T>, v2: &Bump<T>, t: T, radii: &[T]) -> Result<[T; 4]> {
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("need at least two scale factors".into()));
    }
    let samples = radii
        .iter()
        .map(|&r| scaled_quantities(problem, v1, v2, r, t).map(|q| (r.ln(), q.map(|v| v.ln()))))
        .collect::<Result<Vec<_>>>()?;
    let m = T::from_usize_lossy(samples.len());
    let xbar = samples.iter().map(|s| s.0).sum::<T>() / m;
    let sxx: T = samples.iter().map(|s| (s.0 - xbar) * (s.0 - xbar)).sum();
    Ok([0, 1, 2, 3].map(|i| {
        let ybar = samples.iter().map(|s| s.1[i]).sum::<T>() / m;
        samples.iter().map(|s| (s.0 - xbar) * (s.1[i] - ybar)).sum::<T>() / sxx
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_inner, Grid3};
    use crate::model::{CoulombMode, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(p: f64, lambda: f64) -> Problem<f64> {
        let g = Grid3::<f64>::new(2.0, 8).unwrap();
        Problem::new(ModelConfig::new(p).with_lambda(lambda), g).unwrap()
    }

    fn random_field(g: Grid3<f64>, rng: &mut impl Rng) -> Field<f64> {
        Field::from_values(g, (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_field() {
        let pr = problem(4.5, 0.1);
        let z = Field::zeros(*pr.grid());
        let e = energy(&pr, &z).unwrap();
        assert_eq!(e, EnergyBreakdown::default());
        assert_eq!(di_action(&pr, &z, &Field::constant(*pr.grid(), 1.0)).unwrap(), 0.0);
        assert_eq!(pohozaev_residual(&pr, &z).unwrap(), 0.0);
        let ar = ar_combination(&pr, &z, 0.0).unwrap();
        assert_eq!((ar.lhs, ar.rhs), (0.0, 0.0));
        assert_eq!(nodal_count(&z, 0.0), (0, 0));
    }

    #[test]
    fn components_match_direct_quadrature() {
        let pr = problem(3.7, 0.3);
        let g = *pr.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = random_field(g, &mut rng);
        let e = energy(&pr, &u).unwrap();
        let vol = g.cell_volume();
        let n = g.n() as isize;
        let h = g.h();
        // kinetic energy from forward differences over all cell edges, boundary included
        let mut grad = 0.0;
        for i in -1..n {
            for j in -1..n {
                for k in -1..n {
                    let c = u.at(i, j, k);
                    for (a, b, d) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                        let diff = u.at(i + a, j + b, k + d) - c;
                        grad += diff * diff / (h * h);
                    }
                }
            }
        }
        let kinetic = 0.5 * vol * grad;
        assert!(((e.kinetic - kinetic) / kinetic).abs() < 1e-12, "{} vs {kinetic}", e.kinetic);
        let mut pot = 0.0;
        let mut nonl = 0.0;
        let mut pert = 0.0;
        for idx in 0..g.len() {
            let x = g.node(idx);
            let v = u.values()[idx];
            pot += (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * v * v;
            nonl += v.abs().powf(3.7) / 3.7;
            pert += v.abs().powf(pr.model().r);
        }
        assert!(((e.potential - 0.5 * vol * pot) / e.potential).abs() < 1e-12);
        assert!(((e.nonlinear - vol * nonl) / e.nonlinear).abs() < 1e-12);
        assert!(((e.perturb - 0.3 / pr.model().r * vol * pert) / e.perturb).abs() < 1e-12);
        let phi = pr.coulomb().phi_of(&u).unwrap();
        let c = 0.25 * l2_inner(&phi, &u.map(|v| v * v)).unwrap();
        assert!(((e.coupling - c) / c).abs() < 1e-12);
        let total = e.kinetic + e.potential + e.coupling - e.nonlinear - e.perturb;
        assert_eq!(e.total, total);
        assert!((energy(&pr, &u.scaled(-1.0)).unwrap().total - e.total).abs() < 1e-12 * e.total.abs());
    }

    #[test]
    fn derivative_matches_central_differences() {
        for (p, lambda) in [(4.5, 0.0), (3.5, 0.1)] {
            let pr = problem(p, lambda);
            let g = *pr.grid();
            let mut rng = ChaCha8Rng::seed_from_u64(22);
            for _ in 0..3 {
                let u = random_field(g, &mut rng);
                let v = random_field(g, &mut rng);
                let d = di_action(&pr, &u, &v).unwrap();
                let step = 1e-5;
                let ep = energy(&pr, &Field::lin_comb(1.0, &u, step, &v)).unwrap().total;
                let em = energy(&pr, &Field::lin_comb(1.0, &u, -step, &v)).unwrap().total;
                let fd = (ep - em) / (2.0 * step);
                assert!(((d - fd) / d).abs() < 1e-6, "{d} vs {fd}");
            }
        }
    }

    #[test]
    fn lower_bound_structure() {
        let pr = problem(4.5, 0.0);
        let g = *pr.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mu = 4.5;
        for _ in 0..5 {
            let u = random_field(g, &mut rng).scaled(rng.random_range(0.1..3.0));
            let e = energy(&pr, &u).unwrap();
            let lhs = e.total - di_action(&pr, &u, &u).unwrap() / mu;
            let rhs = (0.5 - 1.0 / mu) * 2.0 * (e.kinetic + e.potential) + (0.25 - 1.0 / mu) * 4.0 * e.coupling;
            assert!(lhs >= rhs - 1e-10 * rhs.abs(), "{lhs} < {rhs}");
        }
    }

    #[test]
    fn diagnostics_on_random_fields() {
        let pr = problem(4.5, 0.0);
        let g = *pr.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let u = random_field(g, &mut rng);
        assert!(pohozaev_residual(&pr, &u).unwrap().abs() > 0.01);
        let e = energy(&pr, &u).unwrap().total;
        let ar = ar_combination(&pr, &u, e).unwrap();
        assert!(ar.mismatch > 1e-3);
        let custom = ModelConfig::new(4.5).with_potential(crate::model::PotentialKind::Custom {
            values: vec![1.0; g.len()],
            x_dot_grad: None,
        });
        let pc = Problem::new(custom, g).unwrap();
        assert!(matches!(pohozaev_residual(&pc, &u), Err(Error::MissingGradient)));
    }

    #[test]
    fn nodal_components() {
        let g = Grid3::<f64>::new(4.0, 16).unwrap();
        let a = Bump::<f64>::new([-2.0, 0.0, 0.0], 1.2, 1.0);
        let b = Bump::<f64>::new([2.0, 0.0, 0.0], 1.2, -1.0);
        let u = Field::from_fn(g, |x| a.eval(x) + b.eval(x));
        assert_eq!(nodal_count_default(&u), (1, 1));
        let c = Bump::<f64>::new([0.0, 2.5, 0.0], 1.0, 0.5);
        let w = Field::from_fn(g, |x| a.eval(x) + b.eval(x) + c.eval(x));
        assert_eq!(nodal_count_default(&w), (2, 1));
    }

    #[test]
    fn scaling_identities() {
        let v1 = Bump::<f64>::new([-2.0, 0.0, 0.0], 1.8, -1.0);
        let v2 = Bump::<f64>::new([2.0, 0.0, 0.0], 1.8, 1.0);
        let mut last = f64::INFINITY;
        for n in [24, 40] {
            let g = Grid3::<f64>::new(6.0, n).unwrap();
            let pr = Problem::new(ModelConfig::new(4.5).with_coulomb(CoulombMode::FreeSpace), g).unwrap();
            let rep = scaling_check(&pr, &v1, &v2, 1.0, 0.4).unwrap();
            assert!(rep.max_mismatch() < 1e-14);
            let rep = scaling_check(&pr, &v1, &v2, 2.0, 0.4).unwrap();
            assert!(rep.max_mismatch() < last, "{rep:?}");
            last = rep.max_mismatch();
            assert!(scaling_check(&pr, &v1, &v2, 0.5, 0.4).is_err());
        }
        assert!(last < 0.15);
    }
}
