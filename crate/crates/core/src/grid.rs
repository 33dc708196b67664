//! Periodic uniform grid, central finite-difference operators and the
//! discrete L² inner product.
//!
//! Nodes are stored row-major with `x` fastest: node `(i, j)` lives at flat
//! index `i + j * nx` and sits at `(i * hx, j * hy)`. Every operator wraps
//! indices periodically. Reductions (`inner`, `mean`) sum sequentially in
//! flat order so results are reproducible bit for bit.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Periodic rectangular grid on `(0, lx) × (0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid2D {
    /// Smallest admissible number of cells per direction; the `±1` neighbours
    /// of every node are distinct from it and from each other.
    pub const MIN_CELLS: usize = 3;

    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < Self::MIN_CELLS || ny < Self::MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} cells per direction, got {nx}x{ny}",
                Self::MIN_CELLS
            )));
        }
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// The `n × n` grid on `(0, 2π)²`.
    pub fn square_2pi(n: usize) -> Result<Self> {
        Self::new(n, n, TAU, TAU)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `hx * hy`.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// `|Ω| = lx * ly`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    /// Node coordinates `(i * hx, j * hy)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }
}

/// Scalar field sampled at the nodes of a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field2D {
    /// Wraps `values` (flat index `i + j * nx`). Rejects wrong lengths and
    /// non-finite entries.
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                i: k % grid.nx,
                j: k / grid.nx,
                value: values[k],
            });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn from_vec(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.coords(i, j);
                values.push(f(x, y));
            }
        }
        Self::from_vec(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Returns `Err` if any entry is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFinite {
                i: k % self.grid.nx,
                j: k / self.grid.nx,
                value: self.values[k],
            }),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Result<Field2D> {
        same_grid(self, other)?;
        Ok(Self::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &Field2D) -> Result<Field2D> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field2D) -> Result<Field2D> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field2D {
        self.map(|v| s * v)
    }

    /// `self += a * x`.
    pub(crate) fn axpy(&mut self, a: f64, x: &Field2D) {
        for (y, &xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }
}

/// Central-difference gradient `(∂x f, ∂y f)` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    grid: Grid2D,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField2D {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `|v|²` per node.
    pub fn norm_squared(&self) -> Field2D {
        Field2D::from_vec(
            self.grid,
            self.x
                .iter()
                .zip(&self.y)
                .map(|(a, b)| a * a + b * b)
                .collect(),
        )
    }

    /// Node-wise dot product `v · w`.
    pub fn dot(&self, other: &VectorField2D) -> Result<Field2D> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field2D::from_vec(
            self.grid,
            (0..self.grid.len())
                .map(|k| self.x[k] * other.x[k] + self.y[k] * other.y[k])
                .collect(),
        ))
    }
}

fn same_grid(a: &Field2D, b: &Field2D) -> Result<()> {
    if a.grid == b.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Central difference in x: `(f[i+1,j] - f[i-1,j]) / (2 hx)`.
pub(crate) fn diff_x_into(grid: &Grid2D, src: &[f64], dst: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let two_h = 2.0 * grid.hx();
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let ip = if i + 1 == nx { 0 } else { i + 1 };
            let im = if i == 0 { nx - 1 } else { i - 1 };
            dst[row + i] = (src[row + ip] - src[row + im]) / two_h;
        }
    }
}

/// Central difference in y: `(f[i,j+1] - f[i,j-1]) / (2 hy)`.
pub(crate) fn diff_y_into(grid: &Grid2D, src: &[f64], dst: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let two_h = 2.0 * grid.hy();
    for j in 0..ny {
        let up = if j + 1 == ny { 0 } else { j + 1 } * nx;
        let dn = if j == 0 { ny - 1 } else { j - 1 } * nx;
        let row = j * nx;
        for i in 0..nx {
            dst[row + i] = (src[up + i] - src[dn + i]) / two_h;
        }
    }
}

/// Five-point Laplacian written into `dst`.
pub(crate) fn laplacian_into(grid: &Grid2D, src: &[f64], dst: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    // bitwise equal to the textbook stencil: divide, never scale by 1/h²
    let hx2 = grid.hx() * grid.hx();
    let hy2 = grid.hy() * grid.hy();
    for j in 0..ny {
        let up = if j + 1 == ny { 0 } else { j + 1 } * nx;
        let dn = if j == 0 { ny - 1 } else { j - 1 } * nx;
        let row = j * nx;
        for i in 0..nx {
            let ip = if i + 1 == nx { 0 } else { i + 1 };
            let im = if i == 0 { nx - 1 } else { i - 1 };
            let c = src[row + i];
            dst[row + i] = (src[row + ip] - 2.0 * c + src[row + im]) / hx2
                + (src[up + i] - 2.0 * c + src[dn + i]) / hy2;
        }
    }
}

pub fn gradient(f: &Field2D) -> VectorField2D {
    let g = f.grid;
    let mut x = vec![0.0; g.len()];
    let mut y = vec![0.0; g.len()];
    diff_x_into(&g, &f.values, &mut x);
    diff_y_into(&g, &f.values, &mut y);
    VectorField2D { grid: g, x, y }
}

pub fn laplacian(f: &Field2D) -> Field2D {
    let mut out = vec![0.0; f.grid.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    Field2D::from_vec(f.grid, out)
}

/// `Δ_h(Δ_h f)`: two applications of the five-point stencil.
pub fn biharmonic(f: &Field2D) -> Field2D {
    laplacian(&laplacian(f))
}

/// Discrete L² inner product `Σ f g hx hy`.
pub fn inner(f: &Field2D, g: &Field2D) -> Result<f64> {
    same_grid(f, g)?;
    Ok(dot_slices(&f.values, &g.values) * f.grid.cell_area())
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

pub fn l2_norm(f: &Field2D) -> f64 {
    (dot_slices(&f.values, &f.values) * f.grid.cell_area()).sqrt()
}

pub fn mean(f: &Field2D) -> f64 {
    let mut s = 0.0;
    for v in &f.values {
        s += v;
    }
    s / f.values.len() as f64
}

/// Periodic translation: `out[i, j] = f[i - sx, j - sy]`.
pub fn shift(f: &Field2D, sx: i64, sy: i64) -> Field2D {
    let g = f.grid;
    let (nx, ny) = (g.nx as i64, g.ny as i64);
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        let sj = (j - sy).rem_euclid(ny) as usize;
        for i in 0..nx {
            let si = (i - sx).rem_euclid(nx) as usize;
            out[g.index(i as usize, j as usize)] = f.values[g.index(si, sj)];
        }
    }
    Field2D::from_vec(g, out)
}
