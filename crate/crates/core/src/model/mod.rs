//! Primitives: gridded distributions, the joint (value, profitability)
//! model, demand curves and precision-indexed signal families.

mod demand;
mod family;
mod grid;

pub use demand::{classify_curvature, Curvature, DemandCurve, DemandKind, CURVATURE_TOL};
pub use family::{replacement_family, uniform_replacement_family, CostFunction, SignalFamily};
pub use grid::Grid1D;

use ndarray::Array2;

use crate::error::{Axis, Error, Result};

/// Joint distribution of the posterior-mean value `x` and profitability `y`.
///
/// `mass[[j, i]]` is the probability of the cell (y_j, x_i). The weights of
/// the two axis grids are always the marginals of `mass`.
#[derive(Debug, Clone)]
pub struct JointModel {
    x: Grid1D,
    y: Grid1D,
    mass: Array2<f64>,
    mean_x: f64,
    mean_y: f64,
    // Per x column, running sums over y of mass and of mass * y (ny + 1 entries each).
    col_mass: Vec<f64>,
    col_ymass: Vec<f64>,
}

impl JointModel {
    /// Independent product of two marginals.
    pub fn product(x: Grid1D, y: Grid1D) -> Result<Self> {
        let mass =
            Array2::from_shape_fn((y.len(), x.len()), |(j, i)| y.weights()[j] * x.weights()[i]);
        Self::from_mass(x, y, mass)
    }

    /// Builds a model from an arbitrary nonnegative `(ny, nx)` mass matrix.
    /// The matrix is normalized and the axis weights are replaced by its
    /// marginals.
    pub fn from_mass(x: Grid1D, y: Grid1D, mut mass: Array2<f64>) -> Result<Self> {
        let (ny, nx) = mass.dim();
        if ny != y.len() || nx != x.len() {
            return Err(Error::InvalidModel(format!(
                "mass has shape {ny}x{nx}, grids need {}x{}",
                y.len(),
                x.len()
            )));
        }
        if mass.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidModel(
                "mass entries must be finite and nonnegative".into(),
            ));
        }
        let total = mass.sum();
        if !(total > 0.0) {
            return Err(Error::InvalidModel("mass sums to zero".into()));
        }
        mass.mapv_inplace(|v| v / total);
        let wx: Vec<f64> = (0..nx).map(|i| mass.column(i).sum()).collect();
        let wy: Vec<f64> = (0..ny).map(|j| mass.row(j).sum()).collect();
        let x = Grid1D::with_bounds(x.points().to_vec(), wx, x.bounds())?;
        let y = Grid1D::with_bounds(y.points().to_vec(), wy, y.bounds())?;

        let mut col_mass = vec![0.0; nx * (ny + 1)];
        let mut col_ymass = vec![0.0; nx * (ny + 1)];
        for i in 0..nx {
            let base = i * (ny + 1);
            for j in 0..ny {
                let w = mass[[j, i]];
                col_mass[base + j + 1] = col_mass[base + j] + w;
                col_ymass[base + j + 1] = col_ymass[base + j] + w * y.points()[j];
            }
        }
        let mean_x = x.mean();
        let mean_y = y.mean();
        Ok(Self {
            x,
            y,
            mass,
            mean_x,
            mean_y,
            col_mass,
            col_ymass,
        })
    }

    /// Convenience constructor from raw points and a `(ny, nx)` mass matrix.
    pub fn from_cells(x_points: Vec<f64>, y_points: Vec<f64>, mass: Array2<f64>) -> Result<Self> {
        let x = Grid1D::new(x_points.clone(), vec![1.0; x_points.len()])?;
        let y = Grid1D::new(y_points.clone(), vec![1.0; y_points.len()])?;
        Self::from_mass(x, y, mass)
    }

    pub fn x(&self) -> &Grid1D {
        &self.x
    }

    pub fn y(&self) -> &Grid1D {
        &self.y
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn mass(&self) -> &Array2<f64> {
        &self.mass
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    pub fn mean_y(&self) -> f64 {
        self.mean_y
    }

    /// E[x y], which also equals E[y E(x|y)].
    pub fn mean_xy(&self) -> f64 {
        self.expect(|x, y| x * y)
    }

    pub fn cov_xy(&self) -> f64 {
        self.mean_xy() - self.mean_x * self.mean_y
    }

    pub fn expect(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let (xs, ys) = (self.x.points(), self.y.points());
        self.mass
            .indexed_iter()
            .map(|((j, i), &w)| if w == 0.0 { 0.0 } else { w * f(xs[i], ys[j]) })
            .sum()
    }

    pub fn conditional_x_given_y(&self, j: usize) -> Result<Grid1D> {
        let row: Vec<f64> = self.mass.row(j).to_vec();
        if !(row.iter().sum::<f64>() > 0.0) {
            return Err(Error::ZeroMassCell {
                axis: Axis::Profitability,
                index: j,
            });
        }
        Grid1D::with_bounds(self.x.points().to_vec(), row, self.x.bounds())
    }

    pub fn conditional_y_given_x(&self, i: usize) -> Result<Grid1D> {
        let col: Vec<f64> = self.mass.column(i).to_vec();
        if !(col.iter().sum::<f64>() > 0.0) {
            return Err(Error::ZeroMassCell {
                axis: Axis::Value,
                index: i,
            });
        }
        Grid1D::with_bounds(self.y.points().to_vec(), col, self.y.bounds())
    }

    /// Sum of mass over y cells `0..j` in column `i`.
    pub(crate) fn col_mass_below(&self, i: usize, j: usize) -> f64 {
        self.col_mass[i * (self.ny() + 1) + j]
    }

    /// Sum of mass * y over y cells `0..j` in column `i`.
    pub(crate) fn col_ymass_below(&self, i: usize, j: usize) -> f64 {
        self.col_ymass[i * (self.ny() + 1) + j]
    }
}
