//! Finite-volume IMEX integration of `u_t = u_xx - (u b)_x` with `b` the drift
//! velocity, plus the elliptic solve of the chemotaxis system.
//!
//! One step is
//!
//! ```text
//! (I - dt D) u^{n+1} = u^n - (dt/dx) (F_{i+1/2} - F_{i-1/2})
//! ```
//!
//! with `F` the first-order upwind flux of `u b^n` (zero at both domain faces)
//! and `D` the three-point Laplacian with zero-flux closure. Both operators are
//! in flux form, so `sum u` is conserved up to rounding. Under
//! `dt max|b| <= dx / 2` the explicit part maps nonnegative data to
//! nonnegative data, and `(I - dt D)` is an M-matrix, so positivity holds.

use log::warn;

use crate::convolution::Convolver;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::Kernel;
use crate::tridiag;

/// Density in the boundary cells above this fraction of `max u` triggers a
/// truncation warning.
pub const BOUNDARY_MONITOR_THRESHOLD: f64 = 1e-10;

/// Guard for the zero-velocity case in the CFL formula.
const VELOCITY_FLOOR: f64 = 1e-30;

/// How the drift velocity is obtained from the density.
#[derive(Clone, Debug)]
pub enum VelocityMode {
    /// `b = K' * u`.
    Nonlocal(Convolver),
    /// `b = A u`, giving the viscous Burgers equation `u_t = u_xx - A (u^2)_x`.
    LocalBurgers { a: f64 },
    /// `b = 0`: the heat equation.
    None,
}

impl VelocityMode {
    pub fn nonlocal(kernel: Kernel) -> Self {
        VelocityMode::Nonlocal(Convolver::new(kernel))
    }

    pub fn velocity(&self, u: &Field) -> Result<Field> {
        match self {
            VelocityMode::Nonlocal(conv) => conv.apply(u),
            VelocityMode::LocalBurgers { a } => Ok(Field::from_parts(
                *u.grid(),
                u.values().iter().map(|v| a * v).collect(),
                u.time(),
            )),
            VelocityMode::None => Ok(Field::from_parts(
                *u.grid(),
                vec![0.0; u.grid().n_cells()],
                u.time(),
            )),
        }
    }

    /// `int K'` (or `A` for the local mode); zero for the heat equation.
    pub fn kernel_integral(&self) -> f64 {
        match self {
            VelocityMode::Nonlocal(conv) => conv.kernel().total_integral(),
            VelocityMode::LocalBurgers { a } => *a,
            VelocityMode::None => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: Grid,
    pub velocity_mode: VelocityMode,
    pub t_end: f64,
    pub cfl_advection: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub output_times: Vec<f64>,
}

impl SolverConfig {
    /// Config with default CFL number 0.5, `dt_min = 1e-12` and a single
    /// output at `t_end`.
    pub fn new(grid: Grid, velocity_mode: VelocityMode, t_end: f64, dt_max: f64) -> Self {
        Self {
            grid,
            velocity_mode,
            t_end,
            cfl_advection: 0.5,
            dt_max,
            dt_min: 1e-12,
            output_times: vec![t_end],
        }
    }

    pub fn with_output_times(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.cfl_advection > 0.0 && self.cfl_advection <= 1.0) {
            return bad(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl_advection
            ));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max && self.dt_max.is_finite()) {
            return bad(format!(
                "need 0 < dt_min < dt_max, got dt_min = {}, dt_max = {}",
                self.dt_min, self.dt_max
            ));
        }
        if self.output_times.windows(2).any(|w| w[1] < w[0]) {
            return bad("output times must be sorted".into());
        }
        if self
            .output_times
            .iter()
            .any(|&t| !(t >= 0.0 && t <= self.t_end))
        {
            return bad(format!("output times must lie in [0, {}]", self.t_end));
        }
        if let VelocityMode::Nonlocal(conv) = &self.velocity_mode {
            self.grid.ensure_same(conv.kernel().grid())?;
        }
        Ok(())
    }

    fn next_output_after(&self, t: f64) -> f64 {
        self.output_times
            .iter()
            .copied()
            .find(|&s| s > t)
            .unwrap_or(self.t_end)
            .min(self.t_end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub dt_used: f64,
    pub max_velocity: f64,
    /// Density in the boundary cells (the face fluxes themselves are zero).
    pub boundary_leak: f64,
}

/// Upwind face fluxes `F_{i+1/2}`, `i = -1..n-1`; the two outermost are zero.
pub fn advective_flux(u: &Field, b: &Field) -> Result<Vec<f64>> {
    u.grid().ensure_same(b.grid())?;
    Ok(upwind_flux(u.values(), b.values()))
}

fn upwind_flux(u: &[f64], b: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut flux = vec![0.0; n + 1];
    for i in 0..n - 1 {
        flux[i + 1] = face_flux(u, b, i);
    }
    flux
}

/// Upwind flux through the interior face between cells `i` and `i + 1`.
#[inline]
fn face_flux(u: &[f64], b: &[f64], i: usize) -> f64 {
    let face = 0.5 * (b[i] + b[i + 1]);
    if face >= 0.0 {
        face * u[i]
    } else {
        face * u[i + 1]
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// CFL step `min(dt_max, cfl dx / max|b|)`, clamped to land on the next
/// output time. The clamp may return less than `dt_min`; only the CFL value
/// itself triggers the stiffness abort.
pub fn choose_dt(u: &Field, b: &Field, cfg: &SolverConfig) -> Result<f64> {
    u.grid().ensure_same(b.grid())?;
    let vmax = max_abs(b.values());
    let dt_cfl = cfg
        .dt_max
        .min(cfg.cfl_advection * u.grid().dx() / vmax.max(VELOCITY_FLOOR));
    if dt_cfl < cfg.dt_min {
        return Err(Error::StiffnessAbort {
            time: u.time(),
            dt: dt_cfl,
            dt_min: cfg.dt_min,
            max_velocity: vmax,
        });
    }
    let remaining = cfg.next_output_after(u.time()) - u.time();
    Ok(dt_cfl.min(remaining))
}

/// One IMEX step with the caller's `dt`, which must lie in `[dt_min, dt_max]`.
pub fn step(u: &Field, cfg: &SolverConfig, dt: f64) -> Result<(Field, StepReport)> {
    if !(dt >= cfg.dt_min && dt <= cfg.dt_max) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} outside [{}, {}]",
            cfg.dt_min, cfg.dt_max
        )));
    }
    cfg.grid.ensure_same(u.grid())?;
    let b = cfg.velocity_mode.velocity(u)?;
    advance(u, &b, &Diffusion::new(&cfg.grid, dt), u.time() + dt)
}

/// Backward-Euler diffusion matrix `I - dt D` (zero-flux closure), factorized.
struct Diffusion {
    dt: f64,
    /// `dt / dx^2`.
    ratio: f64,
    factors: tridiag::Factorized,
}

impl Diffusion {
    fn new(grid: &Grid, dt: f64) -> Self {
        let n = grid.n_cells();
        let r = dt / (grid.dx() * grid.dx());
        let off = vec![-r; n];
        let mut diag = vec![1.0 + 2.0 * r; n];
        diag[0] = 1.0 + r;
        diag[n - 1] = 1.0 + r;
        Self {
            dt,
            ratio: r,
            factors: tridiag::Factorized::new(&off, &diag, &off),
        }
    }

    /// Reuses the factorization while `dt` is unchanged.
    fn for_dt<'a>(cache: &'a mut Option<Diffusion>, grid: &Grid, dt: f64) -> &'a Diffusion {
        if cache
            .as_ref()
            .is_none_or(|d| d.dt.to_bits() != dt.to_bits())
        {
            *cache = Some(Diffusion::new(grid, dt));
        }
        cache.as_ref().expect("filled above")
    }
}

/// Step from `u` to time `t_new` with the precomputed velocity `b`.
fn advance(u: &Field, b: &Field, diffusion: &Diffusion, t_new: f64) -> Result<(Field, StepReport)> {
    let grid = *u.grid();
    let dt = diffusion.dt;
    let uv = u.values();
    let bv = b.values();
    let ratio = dt / grid.dx();
    let mut rhs = uv.to_vec();
    let mut left = 0.0;
    for i in 0..rhs.len() {
        let right = if i + 1 < uv.len() {
            face_flux(uv, bv, i)
        } else {
            0.0
        };
        rhs[i] -= ratio * (right - left);
        left = right;
    }
    let mut w = rhs.clone();
    diffusion.factors.solve(&mut w);
    // Rebuild the update from telescoping diffusive fluxes of the implicit
    // solution, so rounding in the solve does not drift the total mass.
    let r = diffusion.ratio;
    let mut left = 0.0;
    for i in 0..rhs.len() {
        let right = if i + 1 < w.len() {
            r * (w[i + 1] - w[i])
        } else {
            0.0
        };
        rhs[i] += right - left;
        left = right;
    }

    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup { time: t_new });
    }
    let next = Field::from_parts(grid, rhs, t_new);
    let report = StepReport {
        time: t_new,
        dt_used: dt,
        max_velocity: max_abs(bv),
        boundary_leak: next.boundary_density(),
    };
    Ok((next, report))
}

/// Integrates from `u0` to `cfg.t_end`, calling `sink` at every output time.
pub fn run(u0: &Field, cfg: &SolverConfig, sink: impl FnMut(&Field)) -> Result<Field> {
    run_with_telemetry(u0, cfg, sink, |_| {})
}

/// As [`run`], additionally handing every [`StepReport`] to `telemetry`.
pub fn run_with_telemetry(
    u0: &Field,
    cfg: &SolverConfig,
    mut sink: impl FnMut(&Field),
    mut telemetry: impl FnMut(&StepReport),
) -> Result<Field> {
    cfg.validate()?;
    cfg.grid.ensure_same(u0.grid())?;
    if let Some(i) = u0.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "initial density is negative in cell {i}"
        )));
    }
    let mut u = u0.clone().with_time(0.0);
    if cfg.t_end == 0.0 {
        sink(&u);
        return Ok(u);
    }
    let mut monitor = BoundaryMonitor::default();
    let mut diffusion = None;
    let mut next_out = 0;
    let mut emit = |u: &Field, next_out: &mut usize| {
        let mut hit = false;
        while *next_out < cfg.output_times.len() && cfg.output_times[*next_out] <= u.time() {
            *next_out += 1;
            hit = true;
        }
        if hit {
            monitor.check(u);
            sink(u);
        }
    };
    emit(&u, &mut next_out);
    while u.time() < cfg.t_end {
        let b = cfg.velocity_mode.velocity(&u)?;
        let dt = choose_dt(&u, &b, cfg)?;
        let target = cfg.next_output_after(u.time());
        let t_new = if u.time() + dt >= target {
            target
        } else {
            u.time() + dt
        };
        let op = Diffusion::for_dt(&mut diffusion, &cfg.grid, dt);
        let (next, report) = advance(&u, &b, op, t_new)?;
        telemetry(&report);
        u = next;
        emit(&u, &mut next_out);
    }
    Ok(u)
}

/// Warns once when density reaches the truncation boundary.
#[derive(Default)]
struct BoundaryMonitor {
    warned: bool,
}

impl BoundaryMonitor {
    fn check(&mut self, u: &Field) {
        if self.warned {
            return;
        }
        let peak = max_abs(u.values());
        if peak > 0.0 && u.boundary_density() > BOUNDARY_MONITOR_THRESHOLD * peak {
            warn!(
                "t = {}: boundary density {:e} exceeds {:e} of the peak; enlarge the domain",
                u.time(),
                u.boundary_density(),
                BOUNDARY_MONITOR_THRESHOLD
            );
            self.warned = true;
        }
    }
}

/// Solves the three-point discretisation of `-v'' + v = u` with `v = 0` on
/// both domain faces (ghost cells mirror with a sign change).
pub fn solve_elliptic(u: &Field) -> Result<Field> {
    let grid = *u.grid();
    let n = grid.n_cells();
    let h2 = grid.dx() * grid.dx();
    let lower = vec![-1.0 / h2; n];
    let upper = vec![-1.0 / h2; n];
    let mut diag = vec![2.0 / h2 + 1.0; n];
    diag[0] = 3.0 / h2 + 1.0;
    diag[n - 1] = 3.0 / h2 + 1.0;
    let mut rhs = u.values().to_vec();
    tridiag::solve(&lower, &diag, &upper, &mut rhs);
    Field::new(grid, rhs, u.time())
}
