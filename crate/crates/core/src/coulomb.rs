//! The Poisson layer: `phi_u` from `u` and the Coulomb form
//! `D(f, g) = int int f(x) g(y) / (4 pi |x - y|)`.
//!
//! Free-space mode convolves with the Newtonian kernel on a zero-padded grid of
//! `2n` points per axis, so the discrete convolution is acyclic. The kernel
//! table holds `h^3 / (4 pi |x_i - x_j|)`; the singular self cell uses the mean
//! of `1/(4 pi |x|)` over a cube of side `h`. Dirichlet mode solves
//! `-Delta_h phi = rho` in the box with the sine transform.

use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{dot, e_norm_unchecked, Field, Grid3};
use crate::model::CoulombMode;
use crate::scalar::Real;
use crate::spectral::SineTransform3;

/// `int_{[-1/2,1/2]^3} dx / |x| = 3 ln(2 + sqrt 3) - pi/2`.
const CUBE_INVERSE_DISTANCE: f64 = 2.380077363979553;

/// Roundoff allowance for negative potential values, relative to `max(1, max phi)`.
const NEGATIVE_PHI_TOL: f64 = 1e-12;

pub struct CoulombSolver<T: Real> {
    grid: Grid3<T>,
    inner: Inner<T>,
}

enum Inner<T: Real> {
    FreeSpace(FreeSpace<T>),
    Dirichlet(SineTransform3<T>),
}

struct FreeSpace<T: Real> {
    m: usize,
    forward: Arc<dyn Fft<T>>,
    backward: Arc<dyn Fft<T>>,
    /// DFT of the padded kernel table.
    symbol: Vec<Complex<T>>,
}

impl<T: Real> std::fmt::Debug for CoulombSolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoulombSolver").field("grid", &self.grid).field("mode", &self.mode()).finish()
    }
}

impl<T: Real> CoulombSolver<T> {
    pub fn new(grid: Grid3<T>, mode: CoulombMode) -> Self {
        match mode {
            CoulombMode::FreeSpace => Self::free_space_with_kernel(grid, |_, k| k),
            CoulombMode::Dirichlet => Self { grid, inner: Inner::Dirichlet(SineTransform3::new(&grid)) },
        }
    }

    /// Free-space solver whose kernel entries pass through `edit(offset, value)`.
    ///
    /// Exists so verification suites can inject faults into the kernel table.
    pub fn free_space_with_kernel(grid: Grid3<T>, edit: impl Fn([isize; 3], T) -> T) -> Self {
        let n = grid.n();
        let m = 2 * n;
        let h = grid.h();
        let four_pi = T::lit(4.0) * T::PI();
        let self_cell = h * h * T::lit(CUBE_INVERSE_DISTANCE) / four_pi;
        let wrap = |a: usize| if a <= n { a as isize } else { a as isize - m as isize };
        let mut table = vec![Complex::new(T::zero(), T::zero()); m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let d = [wrap(a), wrap(b), wrap(c)];
                    let r2 = d.iter().map(|v| (v * v) as usize).sum::<usize>();
                    let k = if r2 == 0 {
                        self_cell
                    } else {
                        h * h / (four_pi * T::from_usize_lossy(r2).sqrt())
                    };
                    table[(a * m + b) * m + c] = Complex::new(edit(d, k), T::zero());
                }
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let backward = planner.plan_fft_inverse(m);
        let mut fs = FreeSpace { m, forward, backward, symbol: Vec::new() };
        fs.fft3(&mut table, n, false, Direction::Forward);
        fs.symbol = table;
        Self { grid, inner: Inner::FreeSpace(fs) }
    }

    pub fn grid(&self) -> &Grid3<T> {
        &self.grid
    }

    pub fn mode(&self) -> CoulombMode {
        match self.inner {
            Inner::FreeSpace(_) => CoulombMode::FreeSpace,
            Inner::Dirichlet(_) => CoulombMode::Dirichlet,
        }
    }

    /// The potential generated by a density, without the sign check.
    pub fn potential_of_density(&self, rho: &Field<T>) -> Result<Field<T>> {
        if !self.grid.same_as(rho.grid()) {
            return Err(Error::GridMismatch);
        }
        let values = match &self.inner {
            Inner::FreeSpace(fs) => fs.convolve(rho.values(), self.grid.n()),
            Inner::Dirichlet(dst) => {
                let mut v = rho.values().to_vec();
                dst.solve_shifted_in_place(&mut v, T::zero());
                v
            }
        };
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index, value: values[index].as_f64() });
        }
        Ok(Field::from_values_unchecked(self.grid, values))
    }

    /// `phi_u`, the solution of `-Delta phi = u^2`.
    pub fn phi_of(&self, u: &Field<T>) -> Result<Field<T>> {
        let phi = self.potential_of_density(&u.map(|v| v * v))?;
        let floor = -T::lit(NEGATIVE_PHI_TOL) * phi.max_abs().max(T::one());
        if let Some(index) = phi.values().iter().position(|v| *v < floor) {
            return Err(Error::NegativeCoulomb { index, value: phi.values()[index].as_f64() });
        }
        Ok(phi)
    }

    /// `D(f, g) = int f * (K g)`.
    pub fn d_form(&self, fdens: &Field<T>, gdens: &Field<T>) -> Result<T> {
        fdens.check_same_grid(gdens)?;
        let kg = self.potential_of_density(gdens)?;
        Ok(self.grid.cell_volume() * dot(fdens.values(), kg.values()))
    }

    /// `int phi_u u^2 = D(u^2, u^2)`.
    pub fn coupling_energy(&self, u: &Field<T>) -> Result<T> {
        let rho = u.map(|v| v * v);
        self.d_form(&rho, &rho)
    }

    /// Largest observed `int phi_u u^2 / ||u||_E^4` over random bump superpositions.
    ///
    /// Stands in for the unquantified Sobolev-type constant of the quartic bound.
    pub fn estimate_coupling_constant(
        &self,
        potential: &Field<T>,
        trials: usize,
        rng: &mut impl Rng,
    ) -> Result<T> {
        let l = self.grid.half_width().as_f64();
        let mut best = T::zero();
        for _ in 0..trials {
            let count = rng.random_range(1..=3);
            let bumps: Vec<_> = (0..count)
                .map(|_| {
                    let radius = rng.random_range(0.2..0.9) * l;
                    let c = [(); 3].map(|_| rng.random_range(-1.0..1.0) * (l - radius).max(0.0));
                    crate::grid::Bump::new(
                        c.map(T::lit),
                        T::lit(radius),
                        T::lit(rng.random_range(-1.0..1.0)),
                    )
                })
                .collect();
            let u = Field::from_fn(self.grid, |x| bumps.iter().fold(T::zero(), |s, b| s + b.eval(x)));
            let e = e_norm_unchecked(&u, potential);
            if e > T::zero() {
                let ratio = self.coupling_energy(&u)? / (e * e * e * e);
                best = best.max(ratio);
            }
        }
        Ok(best)
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

impl<T: Real> FreeSpace<T> {
    fn plan(&self, dir: Direction) -> &Arc<dyn Fft<T>> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    /// 3D DFT of an `m^3` array. With `prune`, stages skip lines that are
    /// known to be zero (forward) or whose output is discarded (backward):
    /// only the first `live` indices of the first two axes carry data.
    fn fft3(&self, data: &mut [Complex<T>], live: usize, prune: bool, dir: Direction) {
        let m = self.m;
        let live = if prune { live } else { m };
        let fft = self.plan(dir);
        let zero = Complex::new(T::zero(), T::zero());
        let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
        let mut buf = vec![zero; m * m];
        match dir {
            Direction::Forward => {
                self.along_last(data, live, fft, &mut scratch);
                self.along_middle(data, live, fft, &mut buf, &mut scratch);
                self.along_first(data, fft, &mut buf, &mut scratch);
            }
            Direction::Backward => {
                self.along_first(data, fft, &mut buf, &mut scratch);
                self.along_middle(data, live, fft, &mut buf, &mut scratch);
                self.along_last(data, live, fft, &mut scratch);
            }
        }
    }

    fn along_last(&self, data: &mut [Complex<T>], live: usize, fft: &Arc<dyn Fft<T>>, scratch: &mut [Complex<T>]) {
        let m = self.m;
        for a in 0..live {
            let start = a * m * m;
            fft.process_with_scratch(&mut data[start..start + live * m], scratch);
        }
    }

    fn along_middle(
        &self,
        data: &mut [Complex<T>],
        live: usize,
        fft: &Arc<dyn Fft<T>>,
        buf: &mut [Complex<T>],
        scratch: &mut [Complex<T>],
    ) {
        let m = self.m;
        for a in 0..live {
            let plane = &mut data[a * m * m..(a + 1) * m * m];
            for b in 0..m {
                for c in 0..m {
                    buf[c * m + b] = plane[b * m + c];
                }
            }
            fft.process_with_scratch(buf, scratch);
            for b in 0..m {
                for c in 0..m {
                    plane[b * m + c] = buf[c * m + b];
                }
            }
        }
    }

    fn along_first(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        let m = self.m;
        for b in 0..m {
            for a in 0..m {
                let row = (a * m + b) * m;
                for c in 0..m {
                    buf[c * m + a] = data[row + c];
                }
            }
            fft.process_with_scratch(buf, scratch);
            for a in 0..m {
                let row = (a * m + b) * m;
                for c in 0..m {
                    data[row + c] = buf[c * m + a];
                }
            }
        }
    }

    fn convolve(&self, rho: &[T], n: usize) -> Vec<T> {
        let m = self.m;
        let zero = Complex::new(T::zero(), T::zero());
        let mut data = vec![zero; m * m * m];
        for i in 0..n {
            for j in 0..n {
                let src = (i * n + j) * n;
                let dst = (i * m + j) * m;
                for k in 0..n {
                    data[dst + k] = Complex::new(rho[src + k], T::zero());
                }
            }
        }
        self.fft3(&mut data, n, true, Direction::Forward);
        for (d, s) in data.iter_mut().zip(&self.symbol) {
            *d = *d * *s;
        }
        self.fft3(&mut data, n, true, Direction::Backward);
        let scale = T::one() / T::from_usize_lossy(m * m * m);
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let src = (i * m + j) * m;
                out.extend(data[src..src + n].iter().map(|z| z.re * scale));
            }
        }
        out
    }
}
