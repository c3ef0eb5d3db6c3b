//! Linear (non-circular) convolution `b_i = dx * sum_j K'_{i-j} u_j`.
//!
//! The fast path zero-pads to a power of two `N >= 2n` so that wrap-around
//! never reaches the `n` output entries; [`convolve_direct`] is the O(n^2)
//! reference.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::field::Field;
use crate::kernel::Kernel;

/// A kernel with its transform precomputed, reusable across many fields.
#[derive(Clone)]
pub struct Convolver {
    kernel: Kernel,
    len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Convolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Convolver")
            .field("kernel", &self.kernel)
            .field("len", &self.len)
            .finish_non_exhaustive()
    }
}

impl Convolver {
    pub fn new(kernel: Kernel) -> Self {
        let n = kernel.grid().n_cells();
        let len = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum = vec![Complex::new(0.0, 0.0); len];
        for (s, &k) in spectrum.iter_mut().zip(kernel.samples()) {
            s.re = k;
        }
        forward.process(&mut spectrum);
        // Fold the dx quadrature weight and the 1/N normalisation in once.
        let scale = kernel.grid().dx() / len as f64;
        for s in &mut spectrum {
            *s *= scale;
        }
        Self {
            kernel,
            len,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        let grid = self.kernel.grid();
        grid.ensure_same(u.grid())?;
        let n = grid.n_cells();
        if self.kernel.is_zero() {
            return Ok(Field::from_parts(*grid, vec![0.0; n], u.time()));
        }
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        for (b, &v) in buf.iter_mut().zip(u.values()) {
            b.re = v;
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        // Full convolution index i + n - 1 holds output cell i.
        let values = buf[n - 1..2 * n - 1].iter().map(|c| c.re).collect();
        Ok(Field::from_parts(*grid, values, u.time()))
    }
}

/// FFT convolution `K' * u`, returned as a velocity field on the same grid.
pub fn convolve(kernel: &Kernel, u: &Field) -> Result<Field> {
    kernel.grid().ensure_same(u.grid())?;
    Convolver::new(kernel.clone()).apply(u)
}

/// Direct O(n^2) summation of the same convolution.
pub fn convolve_direct(kernel: &Kernel, u: &Field) -> Result<Field> {
    let grid = kernel.grid();
    grid.ensure_same(u.grid())?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let k = kernel.samples();
    let uv = u.values();
    let values = (0..n)
        .map(|i| dx * (0..n).map(|j| k[i + n - 1 - j] * uv[j]).sum::<f64>())
        .collect();
    Ok(Field::from_parts(*grid, values, u.time()))
}
