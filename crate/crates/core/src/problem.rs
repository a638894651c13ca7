//! A fully assembled discrete problem: model data, grid, sampled potential and
//! the precomputed transforms shared by every solver stage.

use std::sync::Arc;

use crate::coulomb::CoulombSolver;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid3};
use crate::model::{eval_v, eval_x_dot_grad_v, ModelConfig};
use crate::scalar::Real;
use crate::spectral::SineTransform3;

/// Stopping rule of the preconditioned conjugate gradient solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolveParams<T> {
    /// Relative residual `||b - Ax|| / ||b||`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for LinearSolveParams<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_iter: 2000 }
    }
}

#[derive(Clone)]
pub struct Problem<T: Real> {
    model: ModelConfig<T>,
    grid: Grid3<T>,
    potential: Arc<Field<T>>,
    x_dot_grad_v: Option<Arc<Field<T>>>,
    coulomb: Arc<CoulombSolver<T>>,
    sine: Arc<SineTransform3<T>>,
    pub linear: LinearSolveParams<T>,
}

impl<T: Real> std::fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("model", &self.model).field("grid", &self.grid).finish()
    }
}

impl<T: Real> Problem<T> {
    pub fn new(model: ModelConfig<T>, grid: Grid3<T>) -> Result<Self> {
        let coulomb = Arc::new(CoulombSolver::new(grid, model.coulomb));
        Self::with_coulomb(model, grid, coulomb)
    }

    /// Reuses an existing Coulomb solver, which must live on `grid`.
    pub fn with_coulomb(model: ModelConfig<T>, grid: Grid3<T>, coulomb: Arc<CoulombSolver<T>>) -> Result<Self> {
        model.validate()?;
        if !coulomb.grid().same_as(&grid) {
            return Err(Error::GridMismatch);
        }
        let potential = Arc::new(eval_v(&model, grid)?);
        let x_dot_grad_v = eval_x_dot_grad_v(&model, grid).ok().map(Arc::new);
        Ok(Self {
            model,
            grid,
            potential,
            x_dot_grad_v,
            coulomb,
            sine: Arc::new(SineTransform3::new(&grid)),
            linear: LinearSolveParams::default(),
        })
    }

    /// The same discretization with another perturbation weight.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        let mut model = self.model.clone();
        model.lambda = lambda;
        model.validate()?;
        Ok(Self { model, ..self.clone() })
    }

    pub fn model(&self) -> &ModelConfig<T> {
        &self.model
    }

    pub fn grid(&self) -> &Grid3<T> {
        &self.grid
    }

    pub fn potential(&self) -> &Field<T> {
        &self.potential
    }

    pub fn x_dot_grad_v(&self) -> Result<&Field<T>> {
        self.x_dot_grad_v.as_deref().ok_or(Error::MissingGradient)
    }

    pub fn coulomb(&self) -> &CoulombSolver<T> {
        &self.coulomb
    }

    pub fn coulomb_arc(&self) -> Arc<CoulombSolver<T>> {
        Arc::clone(&self.coulomb)
    }

    pub fn sine_transform(&self) -> &SineTransform3<T> {
        &self.sine
    }

    pub fn lambda(&self) -> T {
        self.model.lambda
    }

    pub(crate) fn check_field(&self, u: &Field<T>) -> Result<()> {
        if self.grid.same_as(u.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
