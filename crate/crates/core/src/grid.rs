//! Cubic box `[-L, L]^3` with homogeneous Dirichlet data, sampled fields and
//! the discrete inner products used by every other module.
//!
//! Interior nodes are `x_ijk = (-L + (i+1)h, -L + (j+1)h, -L + (k+1)h)` with
//! `h = 2L/(n+1)`. Values are stored row-major: the flat index of `(i, j, k)`
//! is `(i*n + j)*n + k`, so `k` (the z axis) is contiguous. All integrals use
//! the midpoint rule `h^3 * sum`, which pairs exactly with the 7-point
//! Laplacian.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3<T> {
    half_width: T,
    n: usize,
    h: T,
}

impl<T: Real> Grid3<T> {
    pub const MIN_POINTS: usize = 4;

    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!("n = {n} < {}", Self::MIN_POINTS)));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        let h = T::lit(2.0) * half_width / T::from_usize_lossy(n + 1);
        Ok(Self { half_width, n, h })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    #[inline]
    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// Number of interior nodes, `n^3`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        self.h * self.h * self.h
    }

    /// Coordinate of node index `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        -self.half_width + T::from_usize_lossy(i + 1) * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> [T; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Flat index of the mirror image of `idx` under `x -> -x`.
    #[inline]
    pub fn reflect_through_origin(&self, idx: usize) -> usize {
        let (i, j, k) = self.unravel(idx);
        let m = self.n - 1;
        self.index(m - i, m - j, m - k)
    }

    /// Smallest eigenvalue of `-Delta_h` with zero Dirichlet data.
    pub fn lowest_dirichlet_eigenvalue(&self) -> T {
        let theta = T::PI() / T::from_usize_lossy(self.n + 1);
        T::lit(3.0) * (T::lit(2.0) - T::lit(2.0) * theta.cos()) / (self.h * self.h)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

/// A real field sampled at the interior nodes of a [`Grid3`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid3<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: Grid3<T>) -> Self {
        Self { grid, values: vec![T::zero(); grid.len()] }
    }

    pub fn constant(grid: Grid3<T>, c: T) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at every interior node.
    pub fn from_fn(grid: Grid3<T>, f: impl Fn([T; 3]) -> T) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.node(idx))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid3<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value: v.as_f64() });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid3<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid3<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Nodewise combination `f(a_i, b_i)`. Panics on grid mismatch.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, values }
    }

    /// `a*x + b*y`.
    pub fn lin_comb(a: T, x: &Self, b: T, y: &Self) -> Self {
        x.zip_map(y, |xi, yi| a * xi + b * yi)
    }

    pub fn scaled(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Value at node `(i, j, k)`; indices outside the interior read the zero boundary.
    #[inline]
    pub fn at(&self, i: isize, j: isize, k: isize) -> T {
        let n = self.grid.n as isize;
        if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
            T::zero()
        } else {
            self.values[self.grid.index(i as usize, j as usize, k as usize)]
        }
    }

    /// Tensor Lagrange interpolation with `order` nodes per axis around `point`.
    ///
    /// The implicit zero boundary nodes at `+-L` take part in the stencil, so
    /// points near the wall are handled without special cases.
    pub fn interpolate(&self, point: [T; 3], order: usize) -> T {
        let g = self.grid;
        let order = order.max(2);
        let mut weights: [Vec<(isize, T)>; 3] = Default::default();
        for (axis, w) in weights.iter_mut().enumerate() {
            // s in [-1, n]: fractional node index (boundary nodes are -1 and n)
            let s = (point[axis] + g.half_width) / g.h - T::one();
            let lo = (s.floor().to_isize().unwrap_or(0) - (order as isize - 1) / 2)
                .clamp(-1, g.n as isize + 1 - order as isize);
            for a in 0..order as isize {
                let ia = lo + a;
                let mut wt = T::one();
                for b in 0..order as isize {
                    if a != b {
                        let ib = lo + b;
                        wt = wt * (s - T::from_isize(ib).unwrap())
                            / T::from_isize(ia - ib).unwrap();
                    }
                }
                w.push((ia, wt));
            }
        }
        let mut acc = T::zero();
        for &(i, wi) in &weights[0] {
            for &(j, wj) in &weights[1] {
                for &(k, wk) in &weights[2] {
                    acc = acc + wi * wj * wk * self.at(i, j, k);
                }
            }
        }
        acc
    }

    /// Trilinear transfer onto another grid over a possibly different box.
    pub fn resample(&self, target: Grid3<T>) -> Self {
        Self::from_fn(target, |x| self.interpolate(x, 2))
    }
}

impl<T: Real> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Real> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.map(|a| -a)
    }
}

impl<T: Real> Mul<T> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: T) -> Field<T> {
        self.scaled(rhs)
    }
}

/// `-Delta_h u` with the 7-point stencil and zero Dirichlet data.
pub fn neg_laplacian<T: Real>(u: &Field<T>) -> Field<T> {
    let g = *u.grid();
    let n = g.n;
    let inv_h2 = T::one() / (g.h * g.h);
    let six = T::lit(6.0);
    let v = u.values();
    let mut out = vec![T::zero(); g.len()];
    for i in 0..n {
        for j in 0..n {
            let row = (i * n + j) * n;
            for k in 0..n {
                let idx = row + k;
                let mut s = six * v[idx];
                if k > 0 {
                    s = s - v[idx - 1];
                }
                if k + 1 < n {
                    s = s - v[idx + 1];
                }
                if j > 0 {
                    s = s - v[idx - n];
                }
                if j + 1 < n {
                    s = s - v[idx + n];
                }
                if i > 0 {
                    s = s - v[idx - n * n];
                }
                if i + 1 < n {
                    s = s - v[idx + n * n];
                }
                out[idx] = s * inv_h2;
            }
        }
    }
    Field::from_values_unchecked(g, out)
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `int a b` by the midpoint rule.
pub fn l2_inner<T: Real>(a: &Field<T>, b: &Field<T>) -> Result<T> {
    a.check_same_grid(b)?;
    Ok(a.grid().cell_volume() * dot(a.values(), b.values()))
}

/// Discrete Dirichlet form `h^3 <a, -Delta_h b>`.
pub fn grad_sq_inner<T: Real>(a: &Field<T>, b: &Field<T>) -> Result<T> {
    a.check_same_grid(b)?;
    Ok(a.grid().cell_volume() * dot(a.values(), neg_laplacian(b).values()))
}

fn check_potential<T: Real>(v: &Field<T>) -> Result<()> {
    match v.values().iter().enumerate().find(|(_, x)| **x < T::zero()) {
        Some((index, x)) => Err(Error::NegativePotential { index, value: x.as_f64() }),
        None => Ok(()),
    }
}

/// Inner product of the energy space, `int grad a . grad b + V a b`.
pub fn e_inner<T: Real>(a: &Field<T>, b: &Field<T>, potential: &Field<T>) -> Result<T> {
    a.check_same_grid(b)?;
    a.check_same_grid(potential)?;
    check_potential(potential)?;
    Ok(e_inner_unchecked(a, b, potential))
}

pub(crate) fn e_inner_unchecked<T: Real>(a: &Field<T>, b: &Field<T>, potential: &Field<T>) -> T {
    let lb = neg_laplacian(b);
    let s = a
        .values()
        .iter()
        .zip(lb.values())
        .zip(b.values().iter().zip(potential.values()))
        .fold(T::zero(), |acc, ((&ai, &li), (&bi, &vi))| acc + ai * (li + vi * bi));
    a.grid().cell_volume() * s
}

pub fn e_norm<T: Real>(u: &Field<T>, potential: &Field<T>) -> Result<T> {
    Ok(e_inner(u, u, potential)?.max(T::zero()).sqrt())
}

pub(crate) fn e_norm_unchecked<T: Real>(u: &Field<T>, potential: &Field<T>) -> T {
    e_inner_unchecked(u, u, potential).max(T::zero()).sqrt()
}

/// `(h^3 sum |a|^q)^(1/q)` for `q >= 1`.
pub fn lp_norm<T: Real>(a: &Field<T>, q: T) -> Result<T> {
    if !(q >= T::one()) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("L^q norm needs q >= 1, got {q}")));
    }
    Ok(lp_norm_unchecked(a, q))
}

pub(crate) fn lp_norm_unchecked<T: Real>(a: &Field<T>, q: T) -> T {
    let s: T = a.values().iter().map(|v| v.abs().powf(q)).sum();
    (a.grid().cell_volume() * s).powf(T::one() / q)
}

/// `int |a|^q` (no root).
pub(crate) fn lp_integral<T: Real>(a: &Field<T>, q: T) -> T {
    let s: T = a.values().iter().map(|v| v.abs().powf(q)).sum();
    a.grid().cell_volume() * s
}

/// A smooth compactly supported bump
/// `amplitude * exp(1 - 1/(1 - |x - c|^2/radius^2))` for `|x - c| < radius`.
///
/// The peak value at the center equals `amplitude`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump<T> {
    pub center: [T; 3],
    pub radius: T,
    pub amplitude: T,
}

impl<T: Real> Bump<T> {
    pub fn new(center: [T; 3], radius: T, amplitude: T) -> Self {
        Self { center, radius, amplitude }
    }

    pub fn eval(&self, x: [T; 3]) -> T {
        let d2 = (0..3).map(|a| (x[a] - self.center[a]).powi(2)).fold(T::zero(), |s, v| s + v);
        let s2 = d2 / (self.radius * self.radius);
        if s2 >= T::one() {
            T::zero()
        } else {
            self.amplitude * (T::one() - T::one() / (T::one() - s2)).exp()
        }
    }

    /// The bump `x -> R^2 v(R x)`.
    pub fn concentrated(&self, r: T) -> Self {
        Self {
            center: self.center.map(|c| c / r),
            radius: self.radius / r,
            amplitude: self.amplitude * r * r,
        }
    }

    pub fn negated(&self) -> Self {
        Self { amplitude: -self.amplitude, ..*self }
    }

    pub fn sample(&self, grid: Grid3<T>) -> Field<T> {
        Field::from_fn(grid, |x| self.eval(x))
    }

    /// True if the closed supports are disjoint.
    pub fn disjoint_from(&self, other: &Self) -> bool {
        let d2 = (0..3)
            .map(|a| (self.center[a] - other.center[a]).powi(2))
            .fold(T::zero(), |s, v| s + v);
        d2.sqrt() > self.radius + other.radius
    }

    /// True if the support lies strictly inside the box.
    pub fn fits(&self, grid: &Grid3<T>) -> bool {
        self.center.iter().all(|c| c.abs() + self.radius < grid.half_width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid3<f64>, rng: &mut impl Rng) -> Field<f64> {
        Field::from_values(grid, (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Dense 7-point matrix, built entry by entry from the stencil definition.
    fn dense_stencil(grid: &Grid3<f64>) -> Vec<Vec<f64>> {
        let n = grid.n() as isize;
        let m = grid.len();
        let h2 = grid.h() * grid.h();
        let mut a = vec![vec![0.0; m]; m];
        for idx in 0..m {
            let (i, j, k) = grid.unravel(idx);
            a[idx][idx] = 6.0 / h2;
            for (di, dj, dk) in
                [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
            {
                let (a2, b2, c2) = (i as isize + di, j as isize + dj, k as isize + dk);
                if (0..n).contains(&a2) && (0..n).contains(&b2) && (0..n).contains(&c2) {
                    a[idx][grid.index(a2 as usize, b2 as usize, c2 as usize)] = -1.0 / h2;
                }
            }
        }
        a
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid3::<f64>::new(1.0, 3).is_err());
        assert!(Grid3::<f64>::new(-1.0, 8).is_err());
        let g = Grid3::<f64>::new(2.0, 4).unwrap();
        assert!((g.h() - 0.8).abs() < 1e-15);
        assert!((g.coord(0) + 1.2).abs() < 1e-15);
    }

    #[test]
    fn l2_of_ones_on_small_box() {
        let g = Grid3::<f64>::new(2.0, 4).unwrap();
        let one = Field::constant(g, 1.0);
        let v = l2_inner(&one, &one).unwrap();
        assert!((v - 32.768).abs() < 1e-12, "{v}");
        let z = Field::zeros(g);
        assert_eq!(l2_inner(&z, &one).unwrap(), 0.0);
    }

    #[test]
    fn inner_products_match_dense_oracles() {
        let g = Grid3::<f64>::new(1.5, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_field(g, &mut rng);
        let b = random_field(g, &mut rng);
        let vol = g.cell_volume();
        let direct: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>() * vol;
        assert!((l2_inner(&a, &b).unwrap() - direct).abs() < 1e-12 * direct.abs().max(1.0));

        let dense = dense_stencil(&g);
        let pot = Field::from_fn(g, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let mut grad = 0.0;
        let mut e = 0.0;
        for r in 0..g.len() {
            let row: f64 = (0..g.len()).map(|c| dense[r][c] * b.values()[c]).sum();
            grad += a.values()[r] * row;
            e += a.values()[r] * (row + pot.values()[r] * b.values()[r]);
        }
        grad *= vol;
        e *= vol;
        let gs = grad_sq_inner(&a, &b).unwrap();
        assert!((gs - grad).abs() < 1e-11 * grad.abs().max(1.0), "{gs} vs {grad}");
        let ei = e_inner(&a, &b, &pot).unwrap();
        assert!((ei - e).abs() < 1e-11 * e.abs().max(1.0), "{ei} vs {e}");
        // V = 0 reduces to the Dirichlet form
        let zero = Field::zeros(g);
        assert!((e_inner(&a, &b, &zero).unwrap() - gs).abs() < 1e-12 * gs.abs().max(1.0));
    }

    #[test]
    fn eigenmode_rayleigh_quotient() {
        let g = Grid3::<f64>::new(3.0, 9).unwrap();
        let n1 = (g.n() + 1) as f64;
        let mode = Field::from_fn(g, |x| {
            x.iter()
                .map(|c| (std::f64::consts::PI * (c + g.half_width()) / (g.h() * n1)).sin())
                .product()
        });
        let rq = grad_sq_inner(&mode, &mode).unwrap() / l2_inner(&mode, &mode).unwrap();
        let exact = 3.0 * (2.0 - 2.0 * (std::f64::consts::PI / n1).cos()) / (g.h() * g.h());
        assert!(((rq - exact) / exact).abs() < 1e-12, "{rq} vs {exact}");
        assert!((g.lowest_dirichlet_eigenvalue() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn lp_norm_cases() {
        let g = Grid3::<f64>::new(1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_field(g, &mut rng);
        assert!(lp_norm(&a, 0.5).is_err());
        let l2 = lp_norm(&a, 2.0).unwrap();
        assert!((l2 - l2_inner(&a, &a).unwrap().sqrt()).abs() < 1e-14);
        let direct = (g.cell_volume() * a.values().iter().map(|v| v.abs().powf(3.5)).sum::<f64>())
            .powf(1.0 / 3.5);
        assert!((lp_norm(&a, 3.5).unwrap() - direct).abs() < 1e-14);
        assert_eq!(lp_norm(&Field::zeros(g), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_potential_is_rejected() {
        let g = Grid3::<f64>::new(1.0, 4).unwrap();
        let mut v = Field::constant(g, 1.0);
        v.values_mut()[5] = -0.5;
        let u = Field::constant(g, 1.0);
        assert!(matches!(e_inner(&u, &u, &v), Err(Error::NegativePotential { index: 5, .. })));
        let other = Field::zeros(Grid3::<f64>::new(1.0, 5).unwrap());
        assert!(matches!(l2_inner(&u, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let g = Grid3::<f64>::new(2.0, 12).unwrap();
        let f = Field::from_fn(g, |x| 1.0 + x[0] - 2.0 * x[1] * x[2] + 0.5 * x[0] * x[0]);
        let p = [0.13, -0.41, 0.27];
        let exact = 1.0 + p[0] - 2.0 * p[1] * p[2] + 0.5 * p[0] * p[0];
        assert!((f.interpolate(p, 4) - exact).abs() < 1e-12);
        assert!((f.interpolate(g.node(17), 2) - f.values()[17]).abs() < 1e-14);
    }

    #[test]
    fn bump_profile_and_concentration() {
        let b = Bump::<f64>::new([1.0, 0.0, 0.0], 0.5, 2.0);
        assert!((b.eval([1.0, 0.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(b.eval([1.6, 0.0, 0.0]), 0.0);
        let c = b.concentrated(2.0);
        let x = [0.6, 0.05, 0.0];
        let expect = 4.0 * b.eval([1.2, 0.1, 0.0]);
        assert!((c.eval(x) - expect).abs() < 1e-14);
        assert!(b.disjoint_from(&Bump::<f64>::new([-1.0, 0.0, 0.0], 0.5, 1.0)));
        assert!(!b.disjoint_from(&Bump::<f64>::new([0.2, 0.0, 0.0], 0.5, 1.0)));
    }

    proptest::proptest! {
        #[test]
        fn forms_are_symmetric(seed in 0u64..500) {
            let g = Grid3::<f64>::new(1.0, 5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_field(g, &mut rng);
            let b = random_field(g, &mut rng);
            let v = random_field(g, &mut rng).map(f64::abs);
            let ab = e_inner(&a, &b, &v).unwrap();
            let ba = e_inner(&b, &a, &v).unwrap();
            proptest::prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
            let gab = grad_sq_inner(&a, &b).unwrap();
            let gba = grad_sq_inner(&b, &a).unwrap();
            proptest::prop_assert!((gab - gba).abs() <= 1e-12 * gab.abs().max(1.0));
            proptest::prop_assert!(grad_sq_inner(&a, &a).unwrap() > 0.0);
        }
    }
}
