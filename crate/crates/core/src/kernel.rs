//! Aggregation kernels `K'` and their cell-integrated discretization.
//!
//! A [`Kernel`] stores, for every cell offset `j = -(n-1)..=(n-1)`, the average
//! of `K'` over `[(j - 1/2) dx, (j + 1/2) dx]`. Cell integration (rather than
//! point sampling) makes `A = int K'` and `||K'||_1` quadrature-exact for the
//! closed-form kernels and represents the kink of `e^{-|x|}/2` at the origin.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::gauss_legendre;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// `K(x) = e^{-|x|}/2`, `K'(x) = -sign(x) e^{-|x|}/2`: the parabolic-elliptic
    /// chemotaxis system `-v'' + v = u`.
    Chemotaxis,
    /// `K'(x) = a exp(-x^2 / (2 sigma^2))`, with `A = a sigma sqrt(2 pi)`.
    GaussianMollifier {
        amplitude: f64,
        width: f64,
    },
    /// `K'(x) = a x exp(-x^2 / (2 sigma^2))`, odd, `A = 0`.
    OddGaussian {
        amplitude: f64,
        width: f64,
    },
    Zero,
    /// Piecewise-linear through `(x, K'(x))` pairs, zero outside the table.
    Tabulated {
        x: Vec<f64>,
        values: Vec<f64>,
    },
}

impl KernelSpec {
    /// Reads a two-column whitespace-separated table `x  K'(x)`. Blank lines
    /// and `#` comments are skipped.
    pub fn tabulated_from_str(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::InvalidData(format!(
                    "kernel table line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::InvalidData(format!("kernel table line {}: {e}: {s:?}", lineno + 1))
                })
            };
            x.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        let spec = KernelSpec::Tabulated { x, values };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tabulated_from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::tabulated_from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Chemotaxis | KernelSpec::Zero => Ok(()),
            KernelSpec::GaussianMollifier { amplitude, width }
            | KernelSpec::OddGaussian { amplitude, width } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "kernel amplitude must be finite, got {amplitude}"
                    )));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "kernel width must be positive, got {width}"
                    )));
                }
                Ok(())
            }
            KernelSpec::Tabulated { x, values } => {
                if x.len() != values.len() || x.len() < 2 {
                    return Err(Error::InvalidData(
                        "kernel table needs at least two (x, value) rows".into(),
                    ));
                }
                if x.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidData(
                        "kernel table has non-finite entries".into(),
                    ));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidData(
                        "kernel table abscissae must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Odd kernels have exactly antisymmetric samples and `A = 0`.
    pub fn is_odd(&self) -> bool {
        matches!(
            self,
            KernelSpec::Chemotaxis | KernelSpec::OddGaussian { .. }
        )
    }

    /// Pointwise value of `K'`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            KernelSpec::Chemotaxis => {
                if x == 0.0 {
                    0.0
                } else {
                    -x.signum() * 0.5 * (-x.abs()).exp()
                }
            }
            KernelSpec::GaussianMollifier { amplitude, width } => {
                amplitude * (-x * x / (2.0 * width * width)).exp()
            }
            KernelSpec::OddGaussian { amplitude, width } => {
                amplitude * x * (-x * x / (2.0 * width * width)).exp()
            }
            KernelSpec::Zero => 0.0,
            KernelSpec::Tabulated { x: xs, values } => interp_table(xs, values, x),
        }
    }
}

fn interp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= n {
        return ys[n - 1];
    }
    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    (1.0 - w) * ys[k - 1] + w * ys[k]
}

/// Discretized `K'` on a grid: cell averages at offsets `j = -(n-1)..=(n-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    grid: Grid,
    samples: Vec<f64>,
    total_integral: f64,
    l1_norm: f64,
}

impl Kernel {
    /// Builds a kernel from cell averages indexed `j + n - 1`.
    pub fn from_samples(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        let n = grid.n_cells();
        if samples.len() != 2 * n - 1 {
            return Err(Error::InvalidArgument(format!(
                "kernel needs {} samples, got {}",
                2 * n - 1,
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidData("kernel samples must be finite".into()));
        }
        let dx = grid.dx();
        // Pairwise symmetric summation: antisymmetric samples give exactly 0.
        let c = n - 1;
        let mut sum = samples[c];
        let mut abs = samples[c].abs();
        for j in 1..n {
            sum += samples[c + j] + samples[c - j];
            abs += samples[c + j].abs() + samples[c - j].abs();
        }
        Ok(Self {
            grid,
            samples,
            total_integral: dx * sum,
            l1_norm: dx * abs,
        })
    }

    /// Cell averages of the potential `K(x) = e^{-|x|}/2` itself, used to form
    /// `K * u` when checking the chemotaxis elliptic solve.
    pub fn chemotaxis_potential(grid: Grid) -> Self {
        let n = grid.n_cells();
        let dx = grid.dx();
        let h = 0.5 * dx;
        let mut samples = vec![0.0; 2 * n - 1];
        samples[n - 1] = -(-h).exp_m1() / dx;
        for j in 1..n {
            let a = (j as f64 - 0.5) * dx;
            let v = -0.5 * (-a).exp() * (-dx).exp_m1() / dx;
            samples[n - 1 + j] = v;
            samples[n - 1 - j] = v;
        }
        Self::from_samples(grid, samples).expect("closed-form samples are finite")
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// All `2n - 1` samples; index `j + n - 1` holds offset `j`.
    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Cell average of `K'` at offset `j`.
    #[inline]
    pub fn sample(&self, j: isize) -> f64 {
        self.samples[(j + self.grid.n_cells() as isize - 1) as usize]
    }

    /// `A = dx * sum_j samples[j]`.
    #[inline]
    pub fn total_integral(&self) -> f64 {
        self.total_integral
    }

    #[inline]
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }
}

/// Cell-integrates `spec` on `grid`.
pub fn sample_kernel(spec: &KernelSpec, grid: &Grid) -> Result<Kernel> {
    spec.validate()?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let c = n - 1;
    let mut samples = vec![0.0; 2 * n - 1];
    let bounds = |j: usize| ((j as f64 - 0.5) * dx, (j as f64 + 0.5) * dx);
    match spec {
        KernelSpec::Zero => {}
        KernelSpec::Chemotaxis => {
            // int_a^b -e^{-y}/2 dy = e^{-a} expm1(-dx) / 2 for 0 <= a < b.
            for j in 1..n {
                let (a, _) = bounds(j);
                let v = 0.5 * (-a).exp() * (-dx).exp_m1() / dx;
                samples[c + j] = v;
                samples[c - j] = -v;
            }
        }
        KernelSpec::OddGaussian { amplitude, width } => {
            let s2 = 2.0 * width * width;
            for j in 1..n {
                let (a, b) = bounds(j);
                let v =
                    amplitude * width * width * ((-a * a / s2).exp() - (-b * b / s2).exp()) / dx;
                samples[c + j] = v;
                samples[c - j] = -v;
            }
        }
        KernelSpec::GaussianMollifier { amplitude, width } => {
            let scale = FRAC_1_SQRT_2 / width;
            let pre = amplitude * width * (PI / 2.0).sqrt() / dx;
            samples[c] = pre * 2.0 * libm::erf(0.5 * dx * scale);
            for j in 1..n {
                let (a, b) = bounds(j);
                let v = pre * (libm::erfc(a * scale) - libm::erfc(b * scale));
                samples[c + j] = v;
                samples[c - j] = v;
            }
        }
        KernelSpec::Tabulated { x, values } => {
            let (gx, gw) = gauss_legendre(8);
            let integrate = |lo: f64, hi: f64| -> f64 {
                // Split at table breakpoints so each piece is linear.
                let mut cuts = vec![lo];
                let start = x.partition_point(|&v| v <= lo);
                for &xk in &x[start..] {
                    if xk >= hi {
                        break;
                    }
                    cuts.push(xk);
                }
                cuts.push(hi);
                cuts.windows(2)
                    .map(|w| {
                        let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                        h * gx
                            .iter()
                            .zip(&gw)
                            .map(|(t, wt)| wt * interp_table(x, values, m + h * t))
                            .sum::<f64>()
                    })
                    .sum()
            };
            for (k, s) in samples.iter_mut().enumerate() {
                let j = k as f64 - c as f64;
                *s = integrate((j - 0.5) * dx, (j + 0.5) * dx) / dx;
            }
        }
    }
    Kernel::from_samples(*grid, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_kernel() {
        let g = Grid::new(3.0, 16).unwrap();
        let k = sample_kernel(&KernelSpec::Zero, &g).unwrap();
        assert!(k.samples().iter().all(|&s| s == 0.0));
        assert_eq!(k.total_integral(), 0.0);
        assert_eq!(k.l1_norm(), 0.0);
        assert!(k.is_zero());
    }

    #[test]
    fn chemotaxis_kernel_integrals() {
        let g = Grid::new(20.0, 4096).unwrap();
        let k = sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap();
        assert_eq!(k.total_integral(), 0.0);
        // The j = 0 cell straddles the kink and averages to zero, so the
        // discrete norm is int |K'| over dx/2 <= |x| <= (n - 1/2) dx.
        let reach = (g.n_cells() as f64 - 0.5) * g.dx();
        let h = 0.5 * g.dx();
        let oracle = 2.0 * simpson(|x| 0.5 * (-x).exp(), h, reach, 400_000);
        assert!((k.l1_norm() - oracle).abs() < 1e-6);
        let full = 2.0 * simpson(|x| 0.5 * (-x).exp(), 0.0, reach, 400_000);
        assert!((full - 1.0).abs() < 1e-12);
        assert!((k.l1_norm() - 1.0).abs() <= h);
    }

    #[test]
    fn gaussian_mollifier_integral() {
        let g = Grid::new(20.0, 4096).unwrap();
        let spec = KernelSpec::GaussianMollifier {
            amplitude: 1.0,
            width: 1.0,
        };
        let k = sample_kernel(&spec, &g).unwrap();
        assert!((k.total_integral() - (2.0 * PI).sqrt()).abs() < 1e-8);
        assert!((k.l1_norm() - k.total_integral()).abs() < 1e-12);
    }

    #[test]
    fn odd_kernels_are_exactly_antisymmetric() {
        let g = Grid::new(7.0, 256).unwrap();
        for spec in [
            KernelSpec::Chemotaxis,
            KernelSpec::OddGaussian {
                amplitude: -1.3,
                width: 0.7,
            },
        ] {
            let k = sample_kernel(&spec, &g).unwrap();
            for j in 0..256isize {
                assert_eq!(k.sample(-j), -k.sample(j));
            }
            assert_eq!(k.total_integral().to_bits(), 0.0f64.to_bits());
        }
    }

    #[test]
    fn cell_averages_match_quadrature_oracle() {
        let g = Grid::new(4.0, 32).unwrap();
        let dx = g.dx();
        for spec in [
            KernelSpec::Chemotaxis,
            KernelSpec::OddGaussian {
                amplitude: 2.0,
                width: 0.5,
            },
            KernelSpec::GaussianMollifier {
                amplitude: 0.3,
                width: 1.2,
            },
        ] {
            let k = sample_kernel(&spec, &g).unwrap();
            for j in -31isize..=31 {
                let (a, b) = ((j as f64 - 0.5) * dx, (j as f64 + 0.5) * dx);
                // Chemotaxis kink at 0 lies on the j = 0 cell midpoint: split there.
                let avg = if j == 0 {
                    (simpson(|x| spec.eval(x), a, 0.0, 2000)
                        + simpson(|x| spec.eval(x), 0.0, b, 2000))
                        / dx
                } else {
                    simpson(|x| spec.eval(x), a, b, 2000) / dx
                };
                assert!((k.sample(j) - avg).abs() < 1e-12, "{spec:?} j={j}");
            }
        }
    }

    #[test]
    fn tabulated_kernel_reproduces_closed_form_on_linear_pieces() {
        // K'(x) = 1 - |x| on [-1, 1] (a hat): exactly linear between table nodes.
        let text = "# hat\n-1 0\n0 1\n1 0\n";
        let spec = KernelSpec::tabulated_from_str(text).unwrap();
        let g = Grid::new(2.0, 16).unwrap();
        let k = sample_kernel(&spec, &g).unwrap();
        assert!((k.total_integral() - 1.0).abs() < 1e-14);
        let dx = g.dx();
        for j in -15isize..=15 {
            let (a, b) = ((j as f64 - 0.5) * dx, (j as f64 + 0.5) * dx);
            let f = |x: f64| (1.0 - x.abs()).max(0.0);
            let mut cuts = vec![a];
            cuts.extend([-1.0, 0.0, 1.0].into_iter().filter(|&c| c > a && c < b));
            cuts.push(b);
            let exact = cuts
                .windows(2)
                .map(|w| simpson(f, w[0], w[1], 2))
                .sum::<f64>()
                / dx;
            assert!((k.sample(j) - exact).abs() < 1e-14, "j={j}");
        }
    }

    #[test]
    fn tabulated_errors() {
        assert!(matches!(
            KernelSpec::tabulated_from_str("0 1\n1 nan\n"),
            Err(Error::InvalidData(_))
        ));
        assert!(KernelSpec::tabulated_from_str("0 1\n0 2\n").is_err());
        assert!(KernelSpec::tabulated_from_str("0 1 2\n").is_err());
        assert!(KernelSpec::tabulated_from_str("0 1\n").is_err());
    }

    #[test]
    fn potential_has_unit_mass() {
        let g = Grid::new(20.0, 1024).unwrap();
        let k = Kernel::chemotaxis_potential(g);
        assert!((k.total_integral() - 1.0).abs() < 1e-12);
    }
}
