//! The auxiliary operator `A(u) = v`, where
//! `-Delta_h v + V v + phi_u v = f(u) + lambda |u|^(r-2) u`.
//!
//! The system matrix is symmetric positive definite (Dirichlet stencil plus a
//! nonnegative diagonal) and is solved by conjugate gradients preconditioned
//! with the exact sine-transform inverse of `-Delta_h + mean(V + phi_u)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::functional::{di_action_with_phi, gradient_vector};
use crate::grid::{dot, e_inner_unchecked, e_norm_unchecked, neg_laplacian, Field};
use crate::model::signed_power;
use crate::problem::{LinearSolveParams, Problem};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ASolveResult<T> {
    /// `A(u)`.
    pub v: Field<T>,
    /// `phi_u`, reused by callers that also need the energy at `u`.
    pub phi: Field<T>,
    pub cg_iterations: usize,
    /// Final `||b - M v|| / ||b||`.
    pub linear_residual: T,
    /// `||u - A(u)||_E`.
    pub fixed_point_gap: T,
}

#[derive(Clone, Debug)]
pub struct LinearSolution<T> {
    pub x: Field<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Solves `(-Delta_h + c) x = b` for a nonnegative nodal coefficient `c`.
pub fn solve_screened<T: Real>(
    problem: &Problem<T>,
    coeff: &Field<T>,
    rhs: &Field<T>,
    x0: Option<&Field<T>>,
    params: LinearSolveParams<T>,
) -> Result<LinearSolution<T>> {
    let grid = *problem.grid();
    let b = rhs.values();
    let bnorm = dot(b, b).sqrt();
    if bnorm == T::zero() {
        return Ok(LinearSolution { x: Field::zeros(grid), iterations: 0, residual: T::zero() });
    }
    let c = coeff.values();
    let shift = c.iter().copied().sum::<T>() / T::from_usize_lossy(c.len());
    let apply = |x: &Field<T>| -> Vec<T> {
        let lap = neg_laplacian(x);
        lap.values().iter().zip(x.values()).zip(c).map(|((&l, &xi), &ci)| l + ci * xi).collect()
    };
    let precond = |r: &[T]| -> Vec<T> {
        let mut z = r.to_vec();
        problem.sine_transform().solve_shifted_in_place(&mut z, shift);
        z
    };

    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => Field::zeros(grid),
    };
    let ax = apply(&x);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= params.tol * bnorm {
        return Ok(LinearSolution { x, iterations: 0, residual: rnorm / bnorm });
    }
    let mut z = precond(&r);
    let mut p = Field::from_values_unchecked(grid, z.clone());
    let mut rz = dot(&r, &z);
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for it in 1..=params.max_iter {
        let ap = apply(&p);
        let pap = dot(p.values(), &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        alphas.push(alpha);
        for (xi, &pi) in x.values_mut().iter_mut().zip(p.values()) {
            *xi = *xi + alpha * pi;
        }
        for (ri, &api) in r.iter_mut().zip(&ap) {
            *ri = *ri - alpha * api;
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= params.tol * bnorm {
            return Ok(LinearSolution { x, iterations: it, residual: rnorm / bnorm });
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        for (pi, &zi) in p.values_mut().iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let (lambda_min, lambda_max) = lanczos_bounds(&alphas, &betas);
    Err(Error::LinearSolve {
        iterations: alphas.len(),
        residual: (rnorm / bnorm).as_f64(),
        lambda_min,
        lambda_max,
    })
}

/// Extreme Ritz values of the preconditioned operator from the CG coefficients.
fn lanczos_bounds<T: Real>(alphas: &[T], betas: &[T]) -> (f64, f64) {
    let k = alphas.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let a: Vec<f64> = alphas.iter().map(|v| v.as_f64()).collect();
    let b: Vec<f64> = betas.iter().map(|v| v.as_f64()).collect();
    let mut t = DMatrix::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / a[j] + if j > 0 { b[j - 1] / a[j - 1] } else { 0.0 };
        if j + 1 < k {
            let off = b[j].sqrt() / a[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let eig = SymmetricEigen::new(t).eigenvalues;
    (eig.min(), eig.max())
}

/// Right-hand side `f(u) + lambda |u|^(r-2) u`.
pub fn a_rhs<T: Real>(problem: &Problem<T>, u: &Field<T>) -> Result<Field<T>> {
    let model = problem.model();
    let mut b = crate::model::eval_f(model, u)?;
    if model.lambda > T::zero() {
        let pert = signed_power(u, model.r);
        for (bi, &pi) in b.values_mut().iter_mut().zip(pert.values()) {
            *bi = *bi + model.lambda * pi;
        }
    }
    Ok(b)
}

pub fn apply_a<T: Real>(problem: &Problem<T>, u: &Field<T>) -> Result<ASolveResult<T>> {
    problem.check_field(u)?;
    let phi = problem.coulomb().phi_of(u)?;
    apply_a_with_phi(problem, u, phi)
}

pub fn apply_a_with_phi<T: Real>(problem: &Problem<T>, u: &Field<T>, phi: Field<T>) -> Result<ASolveResult<T>> {
    let coeff = problem.potential() + &phi;
    let rhs = a_rhs(problem, u)?;
    let sol = solve_screened(problem, &coeff, &rhs, Some(u), problem.linear)?;
    let gap = e_norm_unchecked(&(u - &sol.x), problem.potential());
    Ok(ASolveResult {
        v: sol.x,
        phi,
        cg_iterations: sol.iterations,
        linear_residual: sol.residual,
        fixed_point_gap: gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport<T> {
    /// `<I'(u), u - A(u)>`
    pub lhs: T,
    /// `||u - A(u)||_E^2 + int phi_u (u - A(u))^2`
    pub rhs: T,
    /// `||u - A(u)||_E^2`
    pub gap_sq: T,
    pub relative_mismatch: T,
}

impl<T: Real> IdentityReport<T> {
    /// `<I'(u), u - A(u)> >= ||u - A(u)||_E^2` up to `slack` relative.
    pub fn descent_inequality_holds(&self, slack: T) -> bool {
        self.lhs >= self.gap_sq - slack * self.gap_sq.abs().max(T::min_positive_value())
    }
}

/// Evaluates both sides of
/// `<I'(u), u - A(u)> = ||u - A(u)||_E^2 + int phi_u (u - A(u))^2`.
pub fn derivative_identity_check<T: Real>(problem: &Problem<T>, u: &Field<T>, a: &ASolveResult<T>) -> Result<IdentityReport<T>> {
    problem.check_field(u)?;
    let w = u - &a.v;
    let lhs = di_action_with_phi(problem, u, &a.phi, &w);
    let gap_sq = e_inner_unchecked(&w, &w, problem.potential());
    let vol = problem.grid().cell_volume();
    let coupling: T = vol * a.phi.values().iter().zip(w.values()).map(|(&p, &x)| p * x * x).sum::<T>();
    let rhs = gap_sq + coupling;
    let scale = lhs.abs().max(rhs.abs());
    let relative_mismatch = if scale == T::zero() { T::zero() } else { (lhs - rhs).abs() / scale };
    Ok(IdentityReport { lhs, rhs, gap_sq, relative_mismatch })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientBoundReport<T> {
    /// `max |<I'(u), v>| / ||v||_E` over the probes.
    pub dual_norm_estimate: T,
    /// `||u - A(u)||_E`
    pub gap: T,
    /// `gap (1 + C ||u||_E^2)`
    pub bound: T,
}

impl<T: Real> GradientBoundReport<T> {
    pub fn ratio(&self) -> T {
        if self.bound == T::zero() {
            T::zero()
        } else {
            self.dual_norm_estimate / self.bound
        }
    }
}

/// Probes the dual norm of `I'(u)` with random directions and `u - A(u)`, and
/// compares it with `||u - A(u)||_E (1 + C ||u||_E^2)` for an empirical `C`.
pub fn gradient_bound_check<T: Real>(
    problem: &Problem<T>,
    u: &Field<T>,
    coupling_constant: T,
    probes: usize,
    rng: &mut impl Rng,
) -> Result<GradientBoundReport<T>> {
    let a = apply_a(problem, u)?;
    let grad = gradient_vector(problem, u, &a.phi);
    let vol = problem.grid().cell_volume();
    let pot = problem.potential();
    let mut best = T::zero();
    let mut probe = |v: &Field<T>| {
        let e = e_norm_unchecked(v, pot);
        if e > T::zero() {
            best = best.max((vol * dot(grad.values(), v.values())).abs() / e);
        }
    };
    probe(&(u - &a.v));
    for _ in 0..probes {
        let v = Field::from_values_unchecked(
            *u.grid(),
            (0..u.values().len()).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect(),
        );
        probe(&v);
    }
    let un = e_norm_unchecked(u, pot);
    Ok(GradientBoundReport {
        dual_norm_estimate: best,
        gap: a.fixed_point_gap,
        bound: a.fixed_point_gap * (T::one() + coupling_constant * un * un),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::model::ModelConfig;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem(p: f64, lambda: f64) -> Problem<f64> {
        Problem::new(ModelConfig::new(p).with_lambda(lambda), Grid3::<f64>::new(2.0, 8).unwrap()).unwrap()
    }

    fn random(pr: &Problem<f64>, rng: &mut impl Rng, amp: f64) -> Field<f64> {
        let g = *pr.grid();
        Field::from_values(g, (0..g.len()).map(|_| amp * rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let pr = problem(4.5, 0.0);
        let z = Field::zeros(*pr.grid());
        let a = apply_a(&pr, &z).unwrap();
        assert!(a.v.is_zero());
        assert_eq!(a.fixed_point_gap, 0.0);
        let rep = derivative_identity_check(&pr, &z, &a).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
    }

    #[test]
    fn odd_operator() {
        let pr = problem(4.5, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = random(&pr, &mut rng, 1.0);
        let a = apply_a(&pr, &u).unwrap();
        let b = apply_a(&pr, &u.scaled(-1.0)).unwrap();
        for (x, y) in a.v.values().iter().zip(b.v.values()) {
            assert!((x + y).abs() <= 1e-10 * a.v.max_abs());
        }
    }

    #[test]
    fn matches_dense_solve() {
        let pr = problem(3.5, 0.1);
        let g = *pr.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let u = random(&pr, &mut rng, 1.0);
        let a = apply_a(&pr, &u).unwrap();
        assert!(a.linear_residual <= 1e-10);
        let m = g.len();
        let coeff = pr.potential() + &a.phi;
        let mut mat = DMatrix::zeros(m, m);
        for c in 0..m {
            let mut e = Field::zeros(g);
            e.values_mut()[c] = 1.0;
            let col = neg_laplacian(&e);
            for r in 0..m {
                mat[(r, c)] = col.values()[r];
            }
            mat[(c, c)] += coeff.values()[c];
        }
        let rhs = a_rhs(&pr, &u).unwrap();
        let x = mat.cholesky().unwrap().solve(&DVector::from_column_slice(rhs.values()));
        let err = (0..m).map(|i| (x[i] - a.v.values()[i]).powi(2)).sum::<f64>().sqrt() / x.norm();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn identity_and_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for (p, lambda) in [(4.5, 0.0), (3.5, 0.1)] {
            let pr = problem(p, lambda);
            for _ in 0..4 {
                let u = random(&pr, &mut rng, 1.5);
                let a = apply_a(&pr, &u).unwrap();
                let rep = derivative_identity_check(&pr, &u, &a).unwrap();
                assert!(rep.relative_mismatch < 1e-8, "{rep:?}");
                assert!(rep.descent_inequality_holds(1e-8));
            }
        }
    }

    #[test]
    fn gradient_bound() {
        let pr = problem(4.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let c = pr.coulomb().estimate_coupling_constant(pr.potential(), 100, &mut rng).unwrap();
        let z = Field::zeros(*pr.grid());
        let rep = gradient_bound_check(&pr, &z, c, 5, &mut rng).unwrap();
        assert_eq!((rep.dual_norm_estimate, rep.bound), (0.0, 0.0));
        for _ in 0..3 {
            let u = random(&pr, &mut rng, 1.0);
            let rep = gradient_bound_check(&pr, &u, c, 20, &mut rng).unwrap();
            assert!(rep.dual_norm_estimate > 0.0 && rep.bound > 0.0);
            assert!(rep.ratio().is_finite());
        }
    }

    #[test]
    fn continuity_in_u() {
        let pr = problem(4.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let u = random(&pr, &mut rng, 1.0);
        let w = random(&pr, &mut rng, 1.0);
        let base = apply_a(&pr, &u).unwrap().v;
        let mut prev = f64::INFINITY;
        for delta in [1e-2, 1e-3, 1e-4] {
            let moved = apply_a(&pr, &Field::lin_comb(1.0, &u, delta, &w)).unwrap().v;
            let d = e_norm_unchecked(&(&moved - &base), pr.potential());
            assert!(d < prev * 0.2, "{d} vs {prev}");
            prev = d;
        }
    }

    #[test]
    fn bounded_on_balls() {
        let pr = problem(4.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let u = random(&pr, &mut rng, 1.0);
            let u = u.scaled(rng.random_range(0.0..1.0) / e_norm_unchecked(&u, pr.potential()));
            let a = apply_a(&pr, &u).unwrap();
            worst = worst.max(e_norm_unchecked(&a.v, pr.potential()));
        }
        assert!(worst.is_finite() && worst < 10.0, "{worst}");
    }

    #[test]
    fn stalled_solve_reports_spectrum() {
        let pr = problem(4.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u = random(&pr, &mut rng, 1.0);
        let phi = pr.coulomb().phi_of(&u).unwrap();
        let coeff = pr.potential() + &phi;
        let rhs = a_rhs(&pr, &u).unwrap();
        let params = LinearSolveParams { tol: 1e-14, max_iter: 3 };
        match solve_screened(&pr, &coeff, &rhs, None, params) {
            Err(Error::LinearSolve { iterations, lambda_min, lambda_max, .. }) => {
                assert_eq!(iterations, 3);
                assert!(lambda_min > 0.0 && lambda_max >= lambda_min);
            }
            other => panic!("{other:?}"),
        }
    }
}
