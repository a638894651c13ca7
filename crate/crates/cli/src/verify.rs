//! The `verify` battery: inequalities and identities the discrete operators
//! must satisfy on the configured box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spflow_core::aop::{apply_a, derivative_identity_check};
use spflow_core::cones::{
    calibrate_eps, contraction_monitor, dense_projection_oracle, project_onto_negative_cone, samples_near_boundary,
    ProjectionParams,
};
use spflow_core::functional::{di_action, energy, scaling_check};
use spflow_core::model::check_v1;
use spflow_core::{Bump, Field, Grid3, ModelConfig, Problem};

use crate::config::{ConeModeSection, Loaded};
use crate::run::problem;

pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.to_string(), value, limit, passed: value <= limit }
    }
}

fn random_field(grid: Grid3<f64>, rng: &mut ChaCha8Rng, scale: f64) -> Field<f64> {
    Field::from_values(grid, (0..grid.len()).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
        .expect("finite samples")
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Largest violation over `trials` random pairs of the symmetry of `D` and of
/// `D(f, g)^2 <= D(f, f) D(g, g)` and `D(uv, uv)^2 <= D(u^2, u^2) D(v^2, v^2)`.
fn coulomb_checks(pr: &Problem<f64>, rng: &mut ChaCha8Rng, trials: usize) -> anyhow::Result<Vec<Check>> {
    let g = *pr.grid();
    let c = pr.coulomb();
    let (mut sym, mut cs, mut prod) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let f = random_field(g, rng, 1.0);
        let q = random_field(g, rng, 1.0);
        sym = sym.max(rel(c.d_form(&f, &q)?, c.d_form(&q, &f)?));
        let (fg, ff, gg) = (c.d_form(&f, &q)?, c.d_form(&f, &f)?, c.d_form(&q, &q)?);
        cs = cs.max((fg * fg - ff * gg) / (ff * gg).abs().max(f64::MIN_POSITIVE));
        let uv = f.zip_map(&q, |a, b| a * b);
        let lhs = c.d_form(&uv, &uv)?;
        let rhs = c.coupling_energy(&f)? * c.coupling_energy(&q)?;
        prod = prod.max((lhs * lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE));
    }
    Ok(vec![
        Check::at_most("D-form symmetry", sym, 1e-12),
        Check::at_most("D(f,g)^2 <= D(f,f) D(g,g)", cs, 1e-12),
        Check::at_most("D(uv,uv)^2 <= D(u^2,u^2) D(v^2,v^2)", prod, 1e-12),
    ])
}

fn identity_check(pr: &Problem<f64>, rng: &mut ChaCha8Rng, trials: usize) -> anyhow::Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_field(*pr.grid(), rng, 1.0);
        let a = apply_a(pr, &u)?;
        worst = worst.max(derivative_identity_check(pr, &u, &a)?.relative_mismatch);
    }
    Ok(Check::at_most("<I'(u),u-A(u)> identity", worst, 1e-8))
}

fn gradient_check(pr: &Problem<f64>, rng: &mut ChaCha8Rng, trials: usize) -> anyhow::Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_field(*pr.grid(), rng, 1.0);
        let v = random_field(*pr.grid(), rng, 1.0);
        let h = 1e-4;
        let ep = energy(pr, &Field::lin_comb(1.0, &u, h, &v))?.total;
        let em = energy(pr, &Field::lin_comb(1.0, &u, -h, &v))?.total;
        worst = worst.max(rel((ep - em) / (2.0 * h), di_action(pr, &u, &v)?));
    }
    Ok(Check::at_most("dI action vs central differences", worst, 1e-6))
}

fn contraction_check(loaded: &Loaded, pr: &Problem<f64>, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<Check>> {
    let cones = &loaded.config.cones;
    let g = *pr.grid();
    let base = Field::from_values(g, (0..g.len()).map(|_| -rng.random_range(0.0..1.0)).collect())?;
    let eps = if cones.calibrate {
        let cal = calibrate_eps(pr, &base, &cones.candidates, cones.samples, rng)?;
        cal.chosen.unwrap_or(cones.eps)
    } else {
        cones.eps
    };
    let geom = loaded.geometry(eps)?;
    let samples = samples_near_boundary(pr, &base, eps, cones.samples.max(1), 1e-3, rng)?;
    let rep = contraction_monitor(&geom, pr, &samples)?;
    let mut out = vec![Check::at_most("cone contraction ratio", rep.max_ratio, 0.5)];
    if cones.mode == ConeModeSection::Exact && g.len() <= 4096 {
        let tight = ProjectionParams { gap_tol: 1e-11, ..ProjectionParams::default() };
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let u = random_field(g, rng, 1.0);
            let p = project_onto_negative_cone(pr, &u, tight)?;
            let (_, d) = dense_projection_oracle(pr, &u)?;
            worst = worst.max(rel(p.distance, d));
        }
        out.push(Check::at_most("exact cone distance vs QP oracle", worst, 1e-6));
    }
    Ok(out)
}

/// Scaling identities on a dedicated grid fine enough to resolve `R = 2`.
fn scaling_checks(model: &ModelConfig<f64>) -> anyhow::Result<Check> {
    let grid = Grid3::new(4.0, 48)?;
    let pr = Problem::new(model.clone().with_lambda(0.0), grid)?;
    let v1 = Bump::new([-2.05, 0.0, 0.0], 1.9, -1.0);
    let v2 = Bump::new([2.05, 0.0, 0.0], 1.9, 1.0);
    let rep = scaling_check(&pr, &v1, &v2, 2.0, 0.5)?;
    Ok(Check::at_most("scaling identities at R = 2", rep.max_mismatch(), 0.05))
}

pub fn battery(loaded: &Loaded) -> anyhow::Result<Vec<Check>> {
    let model = loaded.model()?;
    let pr = problem(loaded, model.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.config.output.rng_seed);
    let mut checks = coulomb_checks(&pr, &mut rng, 20)?;
    let v1 = check_v1(&model, *pr.grid())?;
    checks.push(Check { name: "2V + x.grad V >= 0".into(), value: v1.min_value, limit: 0.0, passed: v1.passed() });
    checks.push(identity_check(&pr, &mut rng, 10)?);
    checks.push(gradient_check(&pr, &mut rng, 10)?);
    checks.extend(contraction_check(loaded, &pr, &mut rng)?);
    checks.push(scaling_checks(&model)?);
    Ok(checks)
}
