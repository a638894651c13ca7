//! Problem data: potential, monomial nonlinearity, exponents and the
//! perturbation weight.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid3};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind<T> {
    /// `V(x) = |x|^2`.
    Harmonic,
    /// `V(x) = c` with `c >= 0`.
    Constant(T),
    /// Nodal table on a specific grid, optionally with the values of `x . grad V`.
    Custom { values: Vec<T>, x_dot_grad: Option<Vec<T>> },
}

/// Which discretization of `-Delta phi = u^2` is used.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoulombMode {
    #[default]
    FreeSpace,
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig<T> {
    pub potential: PotentialKind<T>,
    /// Exponent of `f(t) = |t|^(p-2) t`.
    pub p: T,
    /// Ambrosetti-Rabinowitz exponent, `3 < mu <= p`.
    pub mu: T,
    /// Weight of the perturbation `lambda |u|^(r-2) u`.
    pub lambda: T,
    /// Perturbation exponent, `p < r < 6` whenever `lambda > 0`.
    pub r: T,
    pub coulomb: CoulombMode,
}

impl<T: Real> ModelConfig<T> {
    /// Harmonic potential, `mu = p`, no perturbation, `r = (p+6)/2`.
    pub fn new(p: T) -> Self {
        Self {
            potential: PotentialKind::Harmonic,
            p,
            mu: p,
            lambda: T::zero(),
            r: (p + T::lit(6.0)) / T::lit(2.0),
            coulomb: CoulombMode::FreeSpace,
        }
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_r(mut self, r: T) -> Self {
        self.r = r;
        self
    }

    pub fn with_potential(mut self, potential: PotentialKind<T>) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_coulomb(mut self, mode: CoulombMode) -> Self {
        self.coulomb = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (three, six) = (T::lit(3.0), T::lit(6.0));
        if !(self.p > three && self.p < six) {
            return Err(Error::InvalidConfig(format!("p out of (3,6): {}", self.p)));
        }
        if !(self.mu > three && self.mu <= self.p) {
            return Err(Error::InvalidConfig(format!(
                "mu must satisfy 3 < mu <= p, got mu = {} with p = {}",
                self.mu, self.p
            )));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.lambda > T::zero() && !(self.r > self.p && self.r < six) {
            return Err(Error::InvalidConfig(format!(
                "r out of (p,6) = ({},6): {}",
                self.p, self.r
            )));
        }
        if let PotentialKind::Constant(c) = self.potential {
            if !(c >= T::zero()) {
                return Err(Error::InvalidConfig(format!("constant potential must be >= 0, got {c}")));
            }
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Nonlinearity<T> {
        Nonlinearity { p: self.p }
    }
}

/// `f(t) = |t|^(p-2) t`, `F(t) = |t|^p / p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nonlinearity<T> {
    pub p: T,
}

impl<T: Real> Nonlinearity<T> {
    #[inline]
    pub fn f(&self, t: T) -> T {
        if t == T::zero() {
            T::zero()
        } else {
            t.abs().powf(self.p - T::lit(2.0)) * t
        }
    }

    #[inline]
    pub fn primitive(&self, t: T) -> T {
        t.abs().powf(self.p) / self.p
    }
}

fn check_finite<T: Real>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, value: values[index].as_f64() }),
        None => Ok(()),
    }
}

/// `f(u)` nodewise.
pub fn eval_f<T: Real>(cfg: &ModelConfig<T>, u: &Field<T>) -> Result<Field<T>> {
    let nl = cfg.nonlinearity();
    let out = u.map(|t| nl.f(t));
    check_finite(out.values())?;
    Ok(out)
}

/// `|u|^(q-2) u` nodewise.
pub(crate) fn signed_power<T: Real>(u: &Field<T>, q: T) -> Field<T> {
    Nonlinearity { p: q }.eval_field(u)
}

impl<T: Real> Nonlinearity<T> {
    pub(crate) fn eval_field(&self, u: &Field<T>) -> Field<T> {
        u.map(|t| self.f(t))
    }
}

pub fn eval_v<T: Real>(cfg: &ModelConfig<T>, grid: Grid3<T>) -> Result<Field<T>> {
    let v = match &cfg.potential {
        PotentialKind::Harmonic => Field::from_fn(grid, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]),
        PotentialKind::Constant(c) => Field::constant(grid, *c),
        PotentialKind::Custom { values, .. } => Field::from_values(grid, values.clone())?,
    };
    if let Some(index) = v.values().iter().position(|x| *x < T::zero()) {
        return Err(Error::NegativePotential { index, value: v.values()[index].as_f64() });
    }
    Ok(v)
}

/// `x . grad V` nodewise, analytic for the built-in kinds.
pub fn eval_x_dot_grad_v<T: Real>(cfg: &ModelConfig<T>, grid: Grid3<T>) -> Result<Field<T>> {
    match &cfg.potential {
        PotentialKind::Harmonic => {
            Ok(Field::from_fn(grid, |x| T::lit(2.0) * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])))
        }
        PotentialKind::Constant(_) => Ok(Field::zeros(grid)),
        PotentialKind::Custom { x_dot_grad: Some(g), .. } => Field::from_values(grid, g.clone()),
        PotentialKind::Custom { x_dot_grad: None, .. } => Err(Error::MissingGradient),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct V1Report<T> {
    /// `min_x (2V + x . grad V)`.
    pub min_value: T,
    pub min_index: usize,
    /// Nodes where the condition fails.
    pub violations: Vec<usize>,
}

impl<T> V1Report<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `2V(x) + x . grad V(x) >= 0` at every node.
pub fn check_v1<T: Real>(cfg: &ModelConfig<T>, grid: Grid3<T>) -> Result<V1Report<T>> {
    let v = eval_v(cfg, grid)?;
    let xg = eval_x_dot_grad_v(cfg, grid)?;
    let mut min_value = T::infinity();
    let mut min_index = 0;
    let mut violations = Vec::new();
    for (i, (&a, &b)) in v.values().iter().zip(xg.values()).enumerate() {
        let w = T::lit(2.0) * a + b;
        if w < min_value {
            min_value = w;
            min_index = i;
        }
        if w < T::zero() {
            violations.push(i);
        }
    }
    Ok(V1Report { min_value, min_index, violations })
}
