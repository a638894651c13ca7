//! Neighborhoods of the cones `P+ = {u >= 0}` and `P- = {u <= 0}` in the
//! energy norm: membership, distance, projection, and the contraction monitor
//! used to calibrate the neighborhood radius.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::aop::{apply_a, solve_screened};
use crate::error::{Error, Result};
use crate::grid::{dot, e_norm_unchecked, lp_norm_unchecked, neg_laplacian, Bump, Field};
use crate::problem::{LinearSolveParams, Problem};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DistanceMode {
    /// `dist(u, P-) ~ ||u+||_E`, an upper bound for the true distance.
    #[default]
    Surrogate,
    /// Solves the obstacle problem `min_{w <= 0} ||u - w||_E`.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionParams<T> {
    /// Relative gap allowed between the primal and dual distance bounds.
    pub gap_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for ProjectionParams<T> {
    fn default() -> Self {
        Self { gap_tol: T::lit(1e-7), max_iter: 20_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeGeometry<T> {
    pub eps: T,
    pub mode: DistanceMode,
    pub projection: ProjectionParams<T>,
}

impl<T: Real> ConeGeometry<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidConfig(format!("cone radius must be positive, got {eps}")));
        }
        Ok(Self { eps, mode: DistanceMode::Surrogate, projection: ProjectionParams::default() })
    }

    pub fn exact(mut self) -> Self {
        self.mode = DistanceMode::Exact;
        self
    }
}

/// `(max(u, 0), min(u, 0))`.
pub fn split_pm<T: Real>(u: &Field<T>) -> (Field<T>, Field<T>) {
    (u.map(|v| v.max(T::zero())), u.map(|v| v.min(T::zero())))
}

pub fn cone_dist<T: Real>(geom: &ConeGeometry<T>, problem: &Problem<T>, u: &Field<T>, which: Cone) -> Result<T> {
    problem.check_field(u)?;
    match geom.mode {
        DistanceMode::Surrogate => Ok(surrogate_dist(problem, u, which)),
        DistanceMode::Exact => {
            let target = match which {
                Cone::Minus => u.clone(),
                Cone::Plus => u.scaled(-T::one()),
            };
            Ok(project_onto_negative_cone(problem, &target, geom.projection)?.distance)
        }
    }
}

pub(crate) fn surrogate_dist<T: Real>(problem: &Problem<T>, u: &Field<T>, which: Cone) -> T {
    let part = match which {
        Cone::Minus => u.map(|v| v.max(T::zero())),
        Cone::Plus => u.map(|v| v.min(T::zero())),
    };
    e_norm_unchecked(&part, problem.potential())
}

pub fn in_cone_nbhd<T: Real>(geom: &ConeGeometry<T>, problem: &Problem<T>, u: &Field<T>, which: Cone) -> Result<bool> {
    Ok(cone_dist(geom, problem, u, which)? < geom.eps)
}

/// True if `u` lies in `W = P_eps+ union P_eps-`.
pub fn in_w<T: Real>(geom: &ConeGeometry<T>, problem: &Problem<T>, u: &Field<T>) -> Result<bool> {
    Ok(in_cone_nbhd(geom, problem, u, Cone::Plus)? || in_cone_nbhd(geom, problem, u, Cone::Minus)?)
}

#[derive(Clone, Debug)]
pub struct Projection<T> {
    /// Nearest point of `P-`.
    pub w: Field<T>,
    /// `||u - w||_E`, an upper bound for the distance.
    pub distance: T,
    /// Dual lower bound for the distance.
    pub lower_bound: T,
    pub iterations: usize,
}

/// `-Delta_h x + V x`.
fn apply_e<T: Real>(problem: &Problem<T>, x: &[T]) -> Vec<T> {
    let f = Field::from_values_unchecked(*problem.grid(), x.to_vec());
    let lap = neg_laplacian(&f);
    lap.values().iter().zip(x).zip(problem.potential().values()).map(|((&l, &xi), &v)| l + v * xi).collect()
}

/// Nearest point of `P-` to `u` in the energy norm.
///
/// Accelerated projected gradient with Jacobi scaling and adaptive restart.
/// The reported distance is certified by a dual bound: for any `y >= 0`,
/// `z = M^{-1} y` lies in the polar cone, so `<u, z>_E / ||z||_E` bounds the
/// distance from below.
pub fn project_onto_negative_cone<T: Real>(
    problem: &Problem<T>,
    u: &Field<T>,
    params: ProjectionParams<T>,
) -> Result<Projection<T>> {
    let grid = *problem.grid();
    let vol = grid.cell_volume();
    let h2 = grid.h() * grid.h();
    let diag: Vec<T> = problem.potential().values().iter().map(|&v| T::lit(6.0) / h2 + v).collect();
    let uv = u.values();
    let surrogate = surrogate_dist(problem, u, Cone::Minus);
    if surrogate == T::zero() {
        return Ok(Projection { w: u.clone(), distance: T::zero(), lower_bound: T::zero(), iterations: 0 });
    }
    let objective = |w: &[T], mw_minus_mu: &[T]| -> T {
        let d: Vec<T> = w.iter().zip(uv).map(|(&a, &b)| a - b).collect();
        vol * dot(&d, mw_minus_mu)
    };
    let mu = apply_e(problem, uv);
    let half = T::lit(0.5);
    let clamp = |x: T| x.min(T::zero());

    let mut w: Vec<T> = uv.iter().map(|&x| clamp(x)).collect();
    let mut y = w.clone();
    let mut t = T::one();
    let mut prev_obj = T::infinity();
    let mut iterations = 0;
    // upper and lower bounds at the current iterate
    let certify = |w: &[T]| -> Result<(T, T)> {
        let mw = apply_e(problem, w);
        let z: Vec<T> = mw.iter().zip(&mu).map(|(&a, &b)| b - a).collect();
        let upper = objective(w, &z.iter().map(|v| -*v).collect::<Vec<_>>()).max(T::zero()).sqrt();
        Ok((upper, dual_bound(problem, u, &z)?))
    };
    let (mut distance, mut lower_bound) = certify(&w)?;
    while distance - lower_bound > params.gap_tol * distance && iterations < params.max_iter {
        iterations += 1;
        let my = apply_e(problem, &y);
        // w_next = clamp(y - D^{-1} M (y - u) / 2)
        let w_next: Vec<T> = (0..y.len()).map(|i| clamp(y[i] - half * (my[i] - mu[i]) / diag[i])).collect();
        let mw = apply_e(problem, &w_next);
        let g: Vec<T> = mw.iter().zip(&mu).map(|(&a, &b)| a - b).collect();
        let obj = objective(&w_next, &g);
        if obj > prev_obj {
            // restart the momentum from the last iterate
            t = T::one();
            y = w.clone();
            prev_obj = T::infinity();
            continue;
        }
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * half;
        let beta = (t - T::one()) / t_next;
        y = (0..y.len()).map(|i| w_next[i] + beta * (w_next[i] - w[i])).collect();
        w = w_next;
        t = t_next;
        prev_obj = obj;
        if iterations % 25 == 0 {
            (distance, lower_bound) = certify(&w)?;
        }
    }
    (distance, lower_bound) = certify(&w)?;
    let mut wfield = Field::from_values_unchecked(grid, w);
    if distance > surrogate {
        distance = surrogate;
        wfield = u.map(clamp);
    }
    if distance - lower_bound > params.gap_tol * distance {
        return Err(Error::Projection { lower: lower_bound.as_f64(), upper: distance.as_f64() });
    }
    Ok(Projection { w: wfield, distance, lower_bound, iterations })
}

/// `<u, z>_E / ||z||_E` for `z = M^{-1} max(Mz0, 0)`, with `Mz0` given.
fn dual_bound<T: Real>(problem: &Problem<T>, u: &Field<T>, m_z0: &[T]) -> Result<T> {
    let grid = *problem.grid();
    let y: Vec<T> = m_z0.iter().map(|v| v.max(T::zero())).collect();
    let yf = Field::from_values_unchecked(grid, y.clone());
    let params = LinearSolveParams { tol: T::lit(1e-12), max_iter: problem.linear.max_iter };
    let z = solve_screened(problem, problem.potential(), &yf, None, params)?.x;
    let vol = grid.cell_volume();
    let num = vol * dot(u.values(), &y);
    let den = (vol * dot(&y, z.values())).sqrt();
    Ok(if den > T::zero() { (num / den).max(T::zero()) } else { T::zero() })
}

/// Dense primal-dual active set solution of the same obstacle problem.
///
/// Intended as an independent reference on small grids only.
pub fn dense_projection_oracle<T: Real>(problem: &Problem<T>, u: &Field<T>) -> Result<(Field<T>, T)> {
    let grid = *problem.grid();
    let m = grid.len();
    if m > 4096 {
        return Err(Error::InvalidArgument(format!("dense oracle limited to 4096 nodes, got {m}")));
    }
    let vol = grid.cell_volume().as_f64();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for c in 0..m {
        let mut e = vec![T::zero(); m];
        e[c] = T::one();
        let col = apply_e(problem, &e);
        for r in 0..m {
            mat[(r, c)] = col[r].as_f64();
        }
    }
    let uvec = DVector::from_iterator(m, u.values().iter().map(|v| v.as_f64()));
    let mu = &mat * &uvec;
    let mut active: Vec<bool> = uvec.iter().map(|&x| x >= 0.0).collect();
    let mut w = DVector::zeros(m);
    for _ in 0..(m + 10) {
        let inactive: Vec<usize> = (0..m).filter(|&i| !active[i]).collect();
        w.fill(0.0);
        if !inactive.is_empty() {
            let k = inactive.len();
            let sub = DMatrix::from_fn(k, k, |a, b| mat[(inactive[a], inactive[b])]);
            let rhs = DVector::from_fn(k, |a, _| mu[inactive[a]]);
            let sol = sub
                .cholesky()
                .ok_or_else(|| Error::InvalidArgument("oracle subsystem not positive definite".into()))?
                .solve(&rhs);
            for (a, &i) in inactive.iter().enumerate() {
                w[i] = sol[a];
            }
        }
        // multiplier of w_i <= 0 is mu_i = (M (u - w))_i
        let mult = &mu - &mat * &w;
        let next: Vec<bool> = (0..m).map(|i| mult[i] + w[i] > 0.0).collect();
        if next == active {
            let d = &uvec - &w;
            let dist = (vol * d.dot(&(&mat * &d))).max(0.0).sqrt();
            let wf = Field::from_values_unchecked(grid, w.iter().map(|&x| T::lit(x)).collect());
            return Ok((wf, T::lit(dist)));
        }
        active = next;
    }
    Err(Error::Projection { lower: f64::NAN, upper: f64::NAN })
}

/// Upper bound `m_q` on `||u||_q / eps` for `u` in both neighborhoods.
///
/// For `q = 2` this is the rigorous discrete constant
/// `2 / sqrt(lambda_1 + min V)`; for other `q` the embedding constant is
/// estimated from random bump superpositions.
pub fn norm_bound_constant<T: Real>(problem: &Problem<T>, q: T, trials: usize, rng: &mut impl Rng) -> T {
    let two = T::lit(2.0);
    let vmin = problem.potential().values().iter().fold(T::infinity(), |m, &v| m.min(v));
    if q == two {
        return two / (problem.grid().lowest_dirichlet_eigenvalue() + vmin).sqrt();
    }
    let grid = *problem.grid();
    let l = grid.half_width().as_f64();
    let mut best = T::zero();
    for _ in 0..trials {
        let radius = rng.random_range(0.1..0.9) * l;
        let c = [(); 3].map(|_| T::lit(rng.random_range(-1.0..1.0) * (l - radius)));
        let b = Bump::new(c, T::lit(radius), T::one());
        let u = b.sample(grid);
        let e = e_norm_unchecked(&u, problem.potential());
        if e > T::zero() {
            best = best.max(lp_norm_unchecked(&u, q) / e);
        }
    }
    two * best
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport<T> {
    /// `dist(A(u), P-) / dist(u, P-)` per sample (zero when `u` is in `P-`).
    pub ratios: Vec<T>,
    pub max_ratio: T,
}

impl<T: Real> ContractionReport<T> {
    pub fn passed(&self) -> bool {
        self.max_ratio <= T::lit(0.5)
    }
}

pub fn contraction_monitor<T: Real>(
    geom: &ConeGeometry<T>,
    problem: &Problem<T>,
    samples: &[Field<T>],
) -> Result<ContractionReport<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut ratios = Vec::with_capacity(samples.len());
    for u in samples {
        let d0 = cone_dist(geom, problem, u, Cone::Minus)?;
        let ratio = if d0 == T::zero() {
            T::zero()
        } else {
            let v = apply_a(problem, u)?.v;
            cone_dist(geom, problem, &v, Cone::Minus)? / d0
        };
        ratios.push(ratio);
    }
    let max_ratio = ratios.iter().fold(T::zero(), |m, &r| m.max(r));
    Ok(ContractionReport { ratios, max_ratio })
}

/// Samples just inside `partial P_eps-`: a nonpositive base field plus a
/// random positive bump scaled so that `||u+||_E = (1 - margin) eps`.
pub fn samples_near_boundary<T: Real>(
    problem: &Problem<T>,
    base: &Field<T>,
    eps: T,
    count: usize,
    margin: T,
    rng: &mut impl Rng,
) -> Result<Vec<Field<T>>> {
    if base.values().iter().any(|v| *v > T::zero()) {
        return Err(Error::InvalidArgument("base field must be nonpositive".into()));
    }
    let grid = *problem.grid();
    let l = grid.half_width().as_f64();
    let target = (T::one() - margin) * eps;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let radius = rng.random_range(0.15..0.5) * l;
        let c = [(); 3].map(|_| T::lit(rng.random_range(-1.0..1.0) * (l - radius)));
        let bump = Bump::new(c, T::lit(radius), T::one()).sample(grid);
        let plus_norm = |s: T| {
            let u = Field::lin_comb(T::one(), base, s, &bump);
            (surrogate_dist(problem, &u, Cone::Minus), u)
        };
        // bracket, then bisect the monotone map s -> ||(base + s bump)+||_E
        let mut hi = T::one();
        let mut guard = 0;
        while plus_norm(hi).0 < target && guard < 200 {
            hi = hi * T::lit(2.0);
            guard += 1;
        }
        if guard == 200 {
            continue;
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if plus_norm(mid).0 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(plus_norm(lo).1);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration<T> {
    /// `(eps, max contraction ratio)` for each tested radius.
    pub tested: Vec<(T, T)>,
    /// Largest tested radius whose ratio stays at or below one half.
    pub chosen: Option<T>,
}

/// Runs the contraction monitor for each candidate radius on samples near the
/// boundary of `P_eps-` built around `base`.
pub fn calibrate_eps<T: Real>(
    problem: &Problem<T>,
    base: &Field<T>,
    candidates: &[T],
    samples_per_eps: usize,
    rng: &mut impl Rng,
) -> Result<Calibration<T>> {
    let mut tested = Vec::new();
    let mut chosen: Option<T> = None;
    for &eps in candidates {
        let geom = ConeGeometry::new(eps)?;
        let samples = samples_near_boundary(problem, base, eps, samples_per_eps, T::lit(1e-3), rng)?;
        let rep = contraction_monitor(&geom, problem, &samples)?;
        if rep.passed() {
            chosen = Some(chosen.map_or(eps, |c| c.max(eps)));
        }
        tested.push((eps, rep.max_ratio));
    }
    Ok(Calibration { tested, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize) -> Problem<f64> {
        Problem::new(ModelConfig::new(4.5), Grid3::<f64>::new(2.0, n).unwrap()).unwrap()
    }

    fn random(g: Grid3<f64>, rng: &mut impl Rng) -> Field<f64> {
        Field::from_values(g, (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn split_recomposes() {
        let pr = problem(6);
        let g = *pr.grid();
        let z = Field::zeros(g);
        let (a, b) = split_pm(&z);
        assert!(a.is_zero() && b.is_zero());
        let neg = Field::constant(g, -0.5);
        let (a, b) = split_pm(&neg);
        assert!(a.is_zero() && b == neg);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u = random(g, &mut rng);
        let (a, b) = split_pm(&u);
        assert_eq!(&a + &b, u);
        let c = pr.coulomb();
        let whole = c.coupling_energy(&u).unwrap();
        let parts = c.coupling_energy(&a).unwrap() + c.coupling_energy(&b).unwrap();
        assert!((whole - parts).abs() > 1e-3 * whole);
    }

    #[test]
    fn distances_of_one_signed_fields() {
        let pr = problem(6);
        let g = *pr.grid();
        let neg = Field::from_fn(g, |x| -(1.0 + x[0] * x[0]));
        for geom in [ConeGeometry::new(0.1).unwrap(), ConeGeometry::new(0.1).unwrap().exact()] {
            assert_eq!(cone_dist(&geom, &pr, &neg, Cone::Minus).unwrap(), 0.0);
            assert!(in_cone_nbhd(&geom, &pr, &Field::zeros(g), Cone::Plus).unwrap());
            assert!(in_cone_nbhd(&geom, &pr, &Field::zeros(g), Cone::Minus).unwrap());
        }
        let mut spiked = neg.clone();
        let mut e = Field::zeros(g);
        e.values_mut()[40] = 1.0;
        let unit = e_norm_unchecked(&e, pr.potential());
        spiked.values_mut()[40] = 0.05 / unit;
        let geom = ConeGeometry::new(0.1).unwrap();
        assert!((cone_dist(&geom, &pr, &spiked, Cone::Minus).unwrap() - 0.05).abs() < 1e-12);
        assert!(in_cone_nbhd(&geom, &pr, &spiked, Cone::Minus).unwrap());
    }

    #[test]
    fn exact_matches_dense_oracle() {
        let pr = problem(6);
        let g = *pr.grid();
        let bump = Bump::<f64>::new([0.3, -0.2, 0.1], 1.4, 1.0).sample(g);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        // the minimizer error is of order the square root of the distance gap
        let tight = ProjectionParams { gap_tol: 1e-11, ..ProjectionParams::default() };
        for u in [bump, random(g, &mut rng), random(g, &mut rng)] {
            let proj = project_onto_negative_cone(&pr, &u, tight).unwrap();
            let (w, d) = dense_projection_oracle(&pr, &u).unwrap();
            assert!((proj.distance - d).abs() < 1e-6 * d.max(1e-12), "{} vs {d}", proj.distance);
            assert!(proj.lower_bound <= d * (1.0 + 1e-9));
            let werr = (&proj.w - &w).max_abs();
            assert!(werr < 1e-5 * w.max_abs().max(1e-12), "{werr}");
            assert!(w.values().iter().all(|v| *v <= 0.0));
        }
    }

    #[test]
    fn antisymmetric_distances() {
        let pr = problem(6);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let u = random(*pr.grid(), &mut rng);
        for geom in [ConeGeometry::new(1.0).unwrap(), ConeGeometry::new(1.0).unwrap().exact()] {
            let a = cone_dist(&geom, &pr, &u, Cone::Plus).unwrap();
            let b = cone_dist(&geom, &pr, &u.scaled(-1.0), Cone::Minus).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn nonpositive_input_contracts_to_zero() {
        let pr = problem(8);
        let g = *pr.grid();
        let u = Bump::<f64>::new([0.0; 3], 1.5, -2.0).sample(g);
        let geom = ConeGeometry::new(1e-3).unwrap();
        let rep = contraction_monitor(&geom, &pr, &[u.clone()]).unwrap();
        assert_eq!(rep.ratios, vec![0.0]);
        let v = apply_a(&pr, &u).unwrap().v;
        assert!(v.values().iter().all(|x| *x <= 0.0));
        assert!(matches!(contraction_monitor(&geom, &pr, &[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn near_boundary_samples_contract() {
        let pr = problem(10);
        let g = *pr.grid();
        let base = Bump::<f64>::new([0.0; 3], 1.6, -2.0).sample(g);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let samples = samples_near_boundary(&pr, &base, 1e-3, 5, 1e-3, &mut rng).unwrap();
        let geom = ConeGeometry::new(1e-3).unwrap();
        for s in &samples {
            let d = cone_dist(&geom, &pr, s, Cone::Minus).unwrap();
            assert!(d < 1e-3 && d > 0.99e-3);
        }
        let rep = contraction_monitor(&geom, &pr, &samples).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(12))]
        #[test]
        fn exact_bounded_by_surrogate(seed in 0u64..1000) {
            let pr = problem(6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random(*pr.grid(), &mut rng);
            let geom = ConeGeometry::new(1.0).unwrap();
            for which in [Cone::Plus, Cone::Minus] {
                let s = cone_dist(&geom, &pr, &u, which).unwrap();
                let e = cone_dist(&geom.exact(), &pr, &u, which).unwrap();
                proptest::prop_assert!(e <= s);
            }
        }

        #[test]
        fn neighborhoods_are_convex(seed in 0u64..1000, t in 0.0f64..1.0) {
            let pr = problem(6);
            let g = *pr.grid();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let geom = ConeGeometry::new(0.5).unwrap().exact();
            let base = Field::from_values(g, (0..g.len()).map(|_| -rng.random_range(0.0..1.0)).collect()).unwrap();
            let samples = samples_near_boundary(&pr, &base, 0.5, 2, 0.01, &mut rng).unwrap();
            let mix = Field::lin_comb(t, &samples[0], 1.0 - t, &samples[1]);
            let d = cone_dist(&geom, &pr, &mix, Cone::Minus).unwrap();
            proptest::prop_assert!(d < 0.5);
        }
    }

    #[test]
    fn norm_bound_in_both_neighborhoods() {
        let pr = problem(8);
        let g = *pr.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let geom = ConeGeometry::new(1.0).unwrap().exact();
        let q = [2.0, 2.4, 4.5];
        let m: Vec<f64> = q.iter().map(|&q| norm_bound_constant(&pr, q, 200, &mut rng)).collect();
        for _ in 0..5 {
            let u = random(g, &mut rng).scaled(0.05);
            let dp = cone_dist(&geom, &pr, &u, Cone::Plus).unwrap();
            let dm = cone_dist(&geom, &pr, &u, Cone::Minus).unwrap();
            let eps = dp.max(dm) * 1.000001;
            for (qi, mi) in q.iter().zip(&m) {
                let lq = lp_norm_unchecked(&u, *qi);
                if *qi == 2.0 {
                    assert!(lq <= mi * eps, "{lq} > {mi} * {eps}");
                }
            }
        }
    }
}
