//! Cell-average fields and the midpoint quadratures on them.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Cell averages of a density (or velocity) on a [`Grid`] at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but the grid has {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value {} in cell {i}",
                values[i]
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "field time must be finite and >= 0, got {time}"
            )));
        }
        Ok(Self { grid, values, time })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self { grid, values, time }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.n_cells()], 0.0)
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_cells()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, values, time)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// `M = dx * sum(u_i)`.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    /// Discrete `L^p` norm; pass `f64::INFINITY` for the max norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "norm index must satisfy p >= 1, got {p}"
            )));
        }
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if p == f64::INFINITY {
            return Ok(max);
        }
        if max == 0.0 {
            return Ok(0.0);
        }
        let dx = self.grid.dx();
        if p == 1.0 {
            return Ok(dx * self.values.iter().map(|v| v.abs()).sum::<f64>());
        }
        if p == 2.0 {
            return Ok((dx * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt());
        }
        // Scale by the max so large p cannot overflow.
        let s: f64 = self.values.iter().map(|v| (v.abs() / max).powf(p)).sum();
        Ok(max * (dx * s).powf(1.0 / p))
    }

    /// `I = dx * sum(|x_i| u_i)`.
    pub fn first_moment(&self) -> f64 {
        self.grid.dx()
            * self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| self.grid.center(i).abs() * v)
                .sum::<f64>()
    }

    /// Proxy for `u(0, t)`: mean of the two cells adjacent to the `x = 0` face.
    pub fn value_at_origin(&self) -> f64 {
        let h = self.grid.n_cells() / 2;
        0.5 * (self.values[h - 1] + self.values[h])
    }

    /// Largest density in the two boundary cells.
    pub fn boundary_density(&self) -> f64 {
        let n = self.values.len();
        self.values[0].abs().max(self.values[n - 1].abs())
    }

    /// Piecewise-linear interpolant through the cell centres. Constant between
    /// the outermost centre and the domain face, zero outside `[-L, L]`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        let l = g.half_width();
        if !(x.abs() <= l) {
            return 0.0;
        }
        let n = g.n_cells();
        let s = (x + l) / g.dx() - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        let i = s.floor() as usize;
        if i >= n - 1 {
            return self.values[n - 1];
        }
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Parabolic rescaling `u_lambda(x) = lambda * u(lambda x)` sampled on `target`.
    ///
    /// The time stamp becomes `t / lambda^2`, so rescaling the state at time
    /// `lambda^2 t` yields `u_lambda` at time `t`.
    pub fn rescale(&self, lambda: f64, target: &Grid) -> Result<Field> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rescaling factor must be positive, got {lambda}"
            )));
        }
        let values = (0..target.n_cells())
            .map(|i| lambda * self.interpolate(lambda * target.center(i)))
            .collect();
        Ok(Field::from_parts(
            *target,
            values,
            self.time / (lambda * lambda),
        ))
    }

    /// `self + alpha * other`, on the same grid.
    pub fn axpy(&self, alpha: f64, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Field::from_parts(self.grid, values, self.time))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid, mass: f64, var: f64) -> Field {
        Field::from_fn(grid, 0.0, |x| {
            mass * (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        let g = Grid::new(1.0, 4).unwrap();
        assert!(Field::new(g, vec![0.0; 3], 0.0).is_err());
        assert!(Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0], 0.0).is_err());
        assert!(Field::new(g, vec![0.0; 4], -1.0).is_err());
    }

    #[test]
    fn mass_of_simple_fields() {
        let g = Grid::new(1.0, 8).unwrap();
        assert_eq!(Field::zeros(g).mass(), 0.0);
        let one = Field::new(g, vec![1.0; 8], 0.0).unwrap();
        assert_eq!(one.mass(), 2.0);
    }

    #[test]
    fn mass_of_unit_heat_kernel() {
        // G(x, 1) has variance 2; tails beyond |x| = 20 are below e^-100.
        let g = Grid::new(20.0, 4096).unwrap();
        let u = gaussian(g, 1.0, 2.0);
        assert!((u.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lp_norm_of_constant_field() {
        let g = Grid::new(1.5, 16).unwrap();
        let c = 0.7;
        let u = Field::new(g, vec![c; 16], 0.0).unwrap();
        for &p in &[1.0, 1.5, 2.0, 3.0, 7.0] {
            let expected = c * (2.0_f64 * 1.5).powf(1.0 / p);
            assert!((u.lp_norm(p).unwrap() - expected).abs() < 1e-14, "p = {p}");
        }
        assert_eq!(u.lp_norm(f64::INFINITY).unwrap(), c);
    }

    #[test]
    fn max_norm_picks_peak() {
        let g = Grid::new(1.0, 8).unwrap();
        let mut v = vec![0.5; 8];
        v[3] = 3.0;
        let u = Field::new(g, v, 0.0).unwrap();
        assert_eq!(u.lp_norm(f64::INFINITY).unwrap(), 3.0);
    }

    #[test]
    fn l2_norm_of_heat_kernel() {
        // ||G(., 1)||_2 = (8 pi)^(-1/4).
        let g = Grid::new(20.0, 4096).unwrap();
        let u = gaussian(g, 1.0, 2.0);
        let expected = (8.0 * PI).powf(-0.25);
        assert!((u.lp_norm(2.0).unwrap() - expected).abs() < 1e-4);
        assert!((expected - 0.4466).abs() < 1e-4);
    }

    #[test]
    fn rejects_p_below_one() {
        let g = Grid::new(1.0, 8).unwrap();
        let u = Field::zeros(g);
        assert!(matches!(u.lp_norm(0.5), Err(Error::InvalidArgument(_))));
        assert!(u.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn first_moment_of_two_cell_spike() {
        let g = Grid::new(1.0, 8).unwrap();
        let (m, i0) = (3.0, 6);
        let x0 = g.center(i0);
        let mut v = vec![0.0; 8];
        v[i0] = m / (2.0 * g.dx());
        v[g.mirror(i0)] = m / (2.0 * g.dx());
        let u = Field::new(g, v, 0.0).unwrap();
        assert!((u.first_moment() - m * x0).abs() < 1e-15);
        assert_eq!(Field::zeros(g).first_moment(), 0.0);
    }

    #[test]
    fn first_moment_of_standard_normal() {
        let g = Grid::new(20.0, 4096).unwrap();
        let u = gaussian(g, 1.0, 1.0);
        let expected = (2.0 / PI).sqrt();
        assert!((u.first_moment() - expected).abs() < 1e-4);
    }

    #[test]
    fn rescale_identity() {
        let g = Grid::new(10.0, 64).unwrap();
        let u = gaussian(g, 1.0, 1.0).with_time(2.0);
        let r = u.rescale(1.0, &g).unwrap();
        assert_eq!(r.values(), u.values());
        assert_eq!(r.time(), 2.0);
    }

    #[test]
    fn rescale_heat_kernel_is_self_similar() {
        let g = Grid::new(40.0, 2048).unwrap();
        for &lambda in &[2.0, 4.0] {
            let t = 1.0;
            let u = Field::from_fn(g, lambda * lambda * t, |x| {
                let s = lambda * lambda * t;
                (-x * x / (4.0 * s)).exp() / (4.0 * PI * s).sqrt()
            })
            .unwrap();
            let r = u.rescale(lambda, &g).unwrap();
            assert_eq!(r.time(), t);
            let exact = gaussian(g, 1.0, 2.0 * t);
            let err = r
                .values()
                .iter()
                .zip(exact.values())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            // Linear interpolation error ~ (lambda dx)^2 |G''| / 8.
            let h = lambda * g.dx();
            assert!(err < h * h * 0.1, "lambda = {lambda}: err = {err}");
            assert!(((r.mass() - 1.0) / 1.0).abs() < h * h);
        }
    }

    #[test]
    fn rescale_keeps_nonnegativity() {
        let g = Grid::new(5.0, 32).unwrap();
        let v: Vec<f64> = (0..32)
            .map(|i| if i % 3 == 0 { 1.0 } else { 0.0 })
            .collect();
        let u = Field::new(g, v, 1.0).unwrap();
        let r = u.rescale(1.37, &Grid::new(4.0, 100).unwrap()).unwrap();
        assert!(r.values().iter().all(|&v| v >= 0.0));
    }
}
