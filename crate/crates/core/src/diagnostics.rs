//! Trajectory diagnostics: scaled profile distances, decay-exponent fits,
//! convergence verdicts and the first-moment concentration audit.

use log::warn;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::Kernel;
use crate::profiles::{DiffusionWave, HeatProfile};

/// Norm indices always recorded.
pub const DEFAULT_NORMS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

/// Margin for "strictly decreasing" first moments, relative to `I(0)`.
pub const STRICT_DECREASE_MARGIN: f64 = 1e-12;

/// Log-values varying by less than this count as a constant series in fits.
const FLAT_LOG_SPREAD: f64 = 1e-12;

/// `(p, value)` pairs keyed by norm index; `f64::INFINITY` is the max norm.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormTable(Vec<(f64, f64)>);

impl NormTable {
    pub fn get(&self, p: f64) -> Option<f64> {
        self.0.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    /// Distance to `M G(t)`.
    Heat,
    /// Distance to the diffusion wave `U_{M,A}(t)`.
    Wave,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    pub norms: NormTable,
    /// `u(0, t)` proxy: mean of the two cells next to the origin.
    pub peak: f64,
    pub first_moment: f64,
    /// `t^{(1-1/p)/2} ||u(t) - M G(t)||_p`; absent at `t = 0`.
    pub scaled_heat_distance: Option<NormTable>,
    /// Same against `U_{M,A}`; absent at `t = 0` or when `A = 0`.
    pub scaled_wave_distance: Option<NormTable>,
    /// Fraction of the mass held by the two boundary cells.
    pub boundary_mass_fraction: f64,
}

impl DiagnosticsRecord {
    pub fn norm(&self, p: f64) -> Option<f64> {
        self.norms.get(p)
    }

    pub fn scaled_distance(&self, kind: DistanceKind, p: f64) -> Option<f64> {
        match kind {
            DistanceKind::Heat => self.scaled_heat_distance.as_ref()?.get(p),
            DistanceKind::Wave => self.scaled_wave_distance.as_ref()?.get(p),
        }
    }
}

/// `t^{(1 - 1/p)/2}`, the decay rate of `||G(t)||_p`.
pub fn decay_scale(t: f64, p: f64) -> f64 {
    t.powf(0.5 * (1.0 - 1.0 / p))
}

/// Builds records against fixed comparison profiles.
#[derive(Clone, Debug)]
pub struct Recorder {
    heat: HeatProfile,
    wave: Option<DiffusionWave>,
    norms: Vec<f64>,
}

impl Recorder {
    /// `extra_norms` are appended to `{1, 2, inf}`.
    pub fn new(profile_mass: f64, a: f64, extra_norms: &[f64]) -> Result<Self> {
        let mut norms = DEFAULT_NORMS.to_vec();
        for &p in extra_norms {
            if p.is_nan() || p < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "norm index must satisfy p >= 1, got {p}"
                )));
            }
            if !norms.contains(&p) {
                norms.push(p);
            }
        }
        let wave = if a != 0.0 && profile_mass != 0.0 {
            match DiffusionWave::new(profile_mass, a) {
                Ok(w) => Some(w),
                Err(e) => {
                    warn!("no diffusion-wave comparison: {e}");
                    None
                }
            }
        } else {
            None
        };
        Ok(Self {
            heat: HeatProfile::new(profile_mass),
            wave,
            norms,
        })
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn wave(&self) -> Option<&DiffusionWave> {
        self.wave.as_ref()
    }

    pub fn record(&self, u: &Field) -> Result<DiagnosticsRecord> {
        let t = u.time();
        let mass = u.mass();
        let norms = NormTable(
            self.norms
                .iter()
                .map(|&p| Ok((p, u.lp_norm(p)?)))
                .collect::<Result<_>>()?,
        );
        let distances = |profile: &dyn Fn(f64) -> f64| -> Result<NormTable> {
            let diff = Field::from_fn(*u.grid(), t, |x| 0.0 - profile(x))?.axpy(1.0, u)?;
            Ok(NormTable(
                self.norms
                    .iter()
                    .map(|&p| Ok((p, decay_scale(t, p) * diff.lp_norm(p)?)))
                    .collect::<Result<_>>()?,
            ))
        };
        let (heat, wave) = if t > 0.0 {
            let heat = distances(&|x| self.heat.value(x, t))?;
            let wave = match &self.wave {
                Some(w) => Some(distances(&|x| w.value(x, t))?),
                None => None,
            };
            (Some(heat), wave)
        } else {
            (None, None)
        };
        let n = u.grid().n_cells();
        let edge = u.grid().dx() * (u.values()[0].abs() + u.values()[n - 1].abs());
        Ok(DiagnosticsRecord {
            time: t,
            mass,
            norms,
            peak: u.value_at_origin(),
            first_moment: u.first_moment(),
            scaled_heat_distance: heat,
            scaled_wave_distance: wave,
            boundary_mass_fraction: if mass != 0.0 { edge / mass.abs() } else { 0.0 },
        })
    }
}

/// One-off record against `M G` and, when `A != 0`, `U_{M,A}`.
pub fn record(u: &Field, profile_mass: f64, a: f64) -> Result<DiagnosticsRecord> {
    Recorder::new(profile_mass, a, &[])?.record(u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares slope of `log(value)` against `log(t)` over `window`.
pub fn fit_decay_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument(format!(
            "fit window must satisfy 0 < t_lo <= t_hi, got [{lo}, {hi}]"
        )));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .copied()
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} points in [{lo}, {hi}], need at least 5",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InsufficientData(format!(
            "value {v} at t = {t} is not positive"
        )));
    }
    let n = pts.len() as f64;
    let logs: Vec<(f64, f64)> = pts.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = logs.iter().map(|(_, y)| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all fit points share one time".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    // A flat series (log-values equal to within rounding) is fitted exactly;
    // the ratio below would only measure rounding noise.
    let flat = syy <= n * FLAT_LOG_SPREAD * FLAT_LOG_SPREAD;
    let r_squared = if flat { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// The last three inter-record differences are negative.
    pub eventually_decreasing: bool,
    /// Strictly decreasing across all records with `t >= t_last / 10`.
    pub decreasing_over_last_decade: bool,
    /// Value at the first record with `t >= 1`.
    pub reference: f64,
    pub terminal: f64,
    /// `terminal < 0.2 * reference`.
    pub converging: bool,
}

/// Convergence verdict for the scaled distance of `kind` at norm index `p`.
pub fn convergence_report(
    records: &[DiagnosticsRecord],
    p: f64,
    kind: DistanceKind,
) -> Result<ConvergenceReport> {
    if records.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidArgument(
            "records are not sorted by time".into(),
        ));
    }
    let series: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.time >= 1.0)
        .map(|r| {
            r.scaled_distance(kind, p)
                .map(|d| (r.time, d))
                .ok_or_else(|| {
                    Error::InsufficientData(format!(
                        "record at t = {} lacks the {kind:?} distance at p = {p}",
                        r.time
                    ))
                })
        })
        .collect::<Result<_>>()?;
    if series.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} records with t >= 1, need at least 4",
            series.len()
        )));
    }
    let values: Vec<f64> = series.iter().map(|s| s.1).collect();
    let k = values.len();
    let eventually_decreasing = values[k - 4..].windows(2).all(|w| w[1] < w[0]);
    let t_last = series[k - 1].0;
    let tail: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= t_last / 10.0)
        .map(|s| s.1)
        .collect();
    let decreasing_over_last_decade = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0]);
    let reference = values[0];
    let terminal = values[k - 1];
    Ok(ConvergenceReport {
        eventually_decreasing,
        decreasing_over_last_decade,
        reference,
        terminal,
        converging: terminal < 0.2 * reference,
    })
}

/// Even, nonnegative base datum `u_0` of a concentration experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseBump {
    Gaussian {
        mass: f64,
        sigma: f64,
    },
    /// `(M / w) (1 + cos(pi x / w)) / 2` on `|x| < w`.
    Cosine {
        mass: f64,
        half_width: f64,
    },
}

impl BaseBump {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            BaseBump::Gaussian { mass, sigma } => {
                mass * (-x * x / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            BaseBump::Cosine { mass, half_width } => {
                let r = x.abs();
                if r >= half_width {
                    0.0
                } else {
                    mass / half_width * 0.5 * (1.0 + (std::f64::consts::PI * r / half_width).cos())
                }
            }
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            BaseBump::Gaussian { mass, .. } | BaseBump::Cosine { mass, .. } => mass,
        }
    }

    fn validate(&self) -> Result<()> {
        let (m, w) = match *self {
            BaseBump::Gaussian { mass, sigma } => (mass, sigma),
            BaseBump::Cosine { mass, half_width } => (mass, half_width),
        };
        if !(m >= 0.0 && m.is_finite() && w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "base bump needs mass >= 0 and width > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `u_{0,P}(x) = P^3 u_0(P x)` together with the kernel constants `delta`,
/// `gamma` of the hypothesis `sup_{0 < x <= delta} K'(x) <= -gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationSpec {
    pub base: BaseBump,
    pub scale: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl ConcentrationSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scaling parameter P must be positive, got {}",
                self.scale
            )));
        }
        if !(self.delta > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need delta > 0 and gamma > 0, got delta = {}, gamma = {}",
                self.delta, self.gamma
            )));
        }
        Ok(())
    }

    /// `P^2 int u_0`.
    pub fn scaled_mass(&self) -> f64 {
        self.scale * self.scale * self.base.mass()
    }

    /// The scaled datum sampled at cell centres; exactly even on the grid.
    pub fn initial_field(&self, grid: &Grid) -> Result<Field> {
        self.validate()?;
        let p = self.scale;
        Field::from_fn(*grid, 0.0, |x| p * p * p * self.base.value(p * x))
    }

    /// Checks the three kernel hypotheses on cell averages: oddness,
    /// `K' <= 0` for `x > 0`, and `K' <= -gamma` on cells centred in `(0, delta]`.
    pub fn check_kernel(&self, kernel: &Kernel) -> Result<()> {
        self.validate()?;
        let n = kernel.grid().n_cells() as isize;
        let scale = kernel.samples().iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        let tol = 1e-14 * scale;
        if let Some(j) = (1..n).find(|&j| (kernel.sample(j) + kernel.sample(-j)).abs() > tol) {
            return Err(Error::PreconditionFailed(format!(
                "kernel is not odd: K'({j} dx) = {}, K'(-{j} dx) = {}",
                kernel.sample(j),
                kernel.sample(-j)
            )));
        }
        if let Some(j) = (1..n).find(|&j| kernel.sample(j) > tol) {
            return Err(Error::PreconditionFailed(format!(
                "kernel is not nonpositive for x > 0: cell {j} average is {}",
                kernel.sample(j)
            )));
        }
        let last = (self.delta / kernel.grid().dx()).floor() as isize;
        if last < 1 {
            return Err(Error::PreconditionFailed(format!(
                "delta = {} is shorter than one cell (dx = {})",
                self.delta,
                kernel.grid().dx()
            )));
        }
        let sup = (1..=last.min(n - 1))
            .map(|j| kernel.sample(j))
            .fold(f64::NEG_INFINITY, f64::max);
        if sup > -self.gamma {
            return Err(Error::PreconditionFailed(format!(
                "sup of K' over (0, delta] is {sup}, above -gamma = {}",
                -self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationAudit {
    /// Sign of `I(t_1) - I(0)`: -1, 0 or +1 (zero within the strict margin).
    pub initial_moment_trend: i8,
    /// `2 u(0,0) - (gamma/2) M^2 + (2 gamma / delta) M I(0)`, an upper bound
    /// for `dI/dt` at `t = 0`.
    pub derivative_bound: f64,
    /// Largest `T` such that `I` strictly decreases over the records in `[0, T]`.
    pub t_obs: f64,
    /// `u(0, T_obs) > u(0, 0)`.
    pub peak_increased: bool,
    /// `I` never decreases by more than the margin across the records.
    pub moment_nondecreasing: bool,
    pub concentrating: bool,
}

impl ConcentrationAudit {
    pub fn describe(&self) -> String {
        format!(
            "initial dI/dt sign: {:+}\n\
             derivative bound at t=0: {:.10e}\n\
             T_obs: {:.10e}\n\
             peak increased on [0, T_obs]: {}\n\
             first moment nondecreasing: {}\n\
             verdict: {}\n\
             note: kernel hypotheses checked on cell averages, not pointwise\n",
            self.initial_moment_trend,
            self.derivative_bound,
            self.t_obs,
            self.peak_increased,
            self.moment_nondecreasing,
            if self.concentrating {
                "concentrating"
            } else {
                "no concentration detected"
            }
        )
    }
}

/// First-moment audit of a concentration trajectory. `records[0]` must be
/// the `t = 0` record.
pub fn concentration_audit(
    records: &[DiagnosticsRecord],
    spec: &ConcentrationSpec,
    kernel: &Kernel,
) -> Result<ConcentrationAudit> {
    spec.check_kernel(kernel)?;
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("no records".into()))?;
    if first.time != 0.0 {
        return Err(Error::PreconditionFailed(format!(
            "audit needs the t = 0 record first, got t = {}",
            first.time
        )));
    }
    if records.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidArgument(
            "records are not sorted by time".into(),
        ));
    }
    let (m, i0, peak0) = (first.mass, first.first_moment, first.peak);
    let margin = STRICT_DECREASE_MARGIN * i0.abs();
    let derivative_bound =
        2.0 * peak0 - 0.5 * spec.gamma * m * m + 2.0 * spec.gamma / spec.delta * m * i0;

    let initial_moment_trend = match records.get(1) {
        Some(r) if r.first_moment - i0 < -margin => -1,
        Some(r) if r.first_moment - i0 > margin => 1,
        _ => 0,
    };
    let mut obs = 0;
    while obs + 1 < records.len()
        && records[obs + 1].first_moment - records[obs].first_moment < -margin
    {
        obs += 1;
    }
    let t_obs = records[obs].time;
    let peak_increased = obs > 0 && records[obs].peak > peak0;
    let moment_nondecreasing = records
        .windows(2)
        .all(|w| w[1].first_moment - w[0].first_moment >= -margin);
    Ok(ConcentrationAudit {
        initial_moment_trend,
        derivative_bound,
        t_obs,
        peak_increased,
        moment_nondecreasing,
        concentrating: t_obs > 0.0 && peak_increased,
    })
}

/// Brute-force constant of the discrete inequality
/// `M^{3/2} <= C ||u||_2 I^{1/2}` over nonnegative fields on `grid`.
///
/// For fixed mass and `L^2` norm the first moment is minimised by the
/// truncated cones `(mu - |x|)_+`, so the supremum is taken over that family:
/// `mu` is swept in steps of `dx / 16` and the best bracket is then refined
/// by golden-section search.
pub fn moment_inequality_constant(grid: &Grid) -> f64 {
    let n = grid.n_cells();
    let dx = grid.dx();
    let half: Vec<f64> = (n / 2..n).map(|i| grid.center(i)).collect();
    let ratio = |mu: f64| -> f64 {
        let (mut m, mut l2, mut mom) = (0.0, 0.0, 0.0);
        for &x in half.iter().take_while(|&&x| x < mu) {
            let v = mu - x;
            m += v;
            l2 += v * v;
            mom += x * v;
        }
        // Both halves of the symmetric profile.
        let (m, l2, mom) = (2.0 * dx * m, (2.0 * dx * l2).sqrt(), 2.0 * dx * mom);
        if l2 > 0.0 && mom > 0.0 {
            m.powf(1.5) / (l2 * mom.sqrt())
        } else {
            0.0
        }
    };
    let step = dx / 16.0;
    let mut best = (0.0_f64, half[0]);
    let mut mu = half[0];
    while mu <= grid.half_width() + 0.5 * dx {
        let r = ratio(mu);
        if r > best.0 {
            best = (r, mu);
        }
        mu += step;
    }
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best.1 - step).max(half[0]), best.1 + step);
    for _ in 0..60 {
        let a = hi - inv_phi * (hi - lo);
        let b = lo + inv_phi * (hi - lo);
        if ratio(a) > ratio(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.0.max(ratio(0.5 * (lo + hi)))
}

/// Lower bound `I >= M^3 / (C^2 ||u||_2^2)` implied by the moment inequality.
pub fn first_moment_lower_bound(mass: f64, l2: f64, constant: f64) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    mass.powi(3) / (constant * constant * l2 * l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sample_kernel, KernelSpec};
    use crate::profiles::{evaluate_heat, evaluate_wave};

    fn synthetic(distances: &[f64]) -> Vec<DiagnosticsRecord> {
        distances
            .iter()
            .enumerate()
            .map(|(k, &d)| DiagnosticsRecord {
                time: (k + 1) as f64,
                mass: 1.0,
                norms: NormTable::default(),
                peak: 0.0,
                first_moment: 0.0,
                scaled_heat_distance: Some(NormTable(vec![(1.0, d)])),
                scaled_wave_distance: None,
                boundary_mass_fraction: 0.0,
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let series: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let t = 10f64.powf(k as f64 / 10.0);
                (t, t.powf(-0.5))
            })
            .collect();
        let fit = fit_decay_exponent(&series, (1.0, 100.0)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let series: Vec<(f64, f64)> = series
            .iter()
            .map(|&(t, _)| (t, 3.0 * t.powf(-0.25)))
            .collect();
        let fit = fit_decay_exponent(&series, (1.0, 100.0)).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
    }

    #[test]
    fn flat_series_fits_exactly() {
        let series: Vec<(f64, f64)> = (0..10)
            .map(|k| (1.0 + k as f64, 0.7 * (1.0 + 1e-15 * (k % 3) as f64)))
            .collect();
        let fit = fit_decay_exponent(&series, (1.0, 100.0)).unwrap();
        assert!(fit.slope.abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_needs_five_positive_points() {
        let few: Vec<(f64, f64)> = (1..=4).map(|k| (k as f64, 1.0)).collect();
        assert!(matches!(
            fit_decay_exponent(&few, (1.0, 10.0)),
            Err(Error::InsufficientData(_))
        ));
        let mut bad: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64, 1.0)).collect();
        bad[2].1 = 0.0;
        assert!(matches!(
            fit_decay_exponent(&bad, (1.0, 10.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn fit_is_scale_invariant() {
        let series: Vec<(f64, f64)> = (1..=30)
            .map(|k| {
                let t = k as f64;
                (t, t.powf(-0.37) * (1.0 + 0.1 * (t * 0.7).sin()))
            })
            .collect();
        let base = fit_decay_exponent(&series, (1.0, 30.0)).unwrap().slope;
        for &lambda in &[1e-6, 0.5, 3.0, 1e8] {
            let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, lambda * v)).collect();
            let s = fit_decay_exponent(&scaled, (1.0, 30.0)).unwrap().slope;
            assert!((s - base).abs() < 1e-12, "lambda = {lambda}");
        }
    }

    #[test]
    fn convergence_verdicts() {
        let r = convergence_report(&synthetic(&[1.0, 0.5, 0.2, 0.05]), 1.0, DistanceKind::Heat)
            .unwrap();
        assert!(r.converging && r.eventually_decreasing);
        let r = convergence_report(&synthetic(&[0.3; 6]), 1.0, DistanceKind::Heat).unwrap();
        assert!(!r.converging && !r.eventually_decreasing);
    }

    #[test]
    fn convergence_verdict_survives_duplicate_last_record() {
        for d in [
            vec![1.0, 0.5, 0.2, 0.05],
            vec![0.3; 5],
            vec![1.0, 0.9, 0.3, 0.19, 0.1],
        ] {
            let mut recs = synthetic(&d);
            let before = convergence_report(&recs, 1.0, DistanceKind::Heat).unwrap();
            recs.push(recs.last().unwrap().clone());
            let after = convergence_report(&recs, 1.0, DistanceKind::Heat).unwrap();
            assert_eq!(before.converging, after.converging);
        }
    }

    #[test]
    fn convergence_rejects_unsorted_and_short_input() {
        let mut recs = synthetic(&[1.0, 0.5, 0.2, 0.05]);
        recs.swap(1, 2);
        assert!(matches!(
            convergence_report(&recs, 1.0, DistanceKind::Heat),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            convergence_report(&synthetic(&[1.0, 0.5]), 1.0, DistanceKind::Heat),
            Err(Error::InsufficientData(_))
        ));
        assert!(convergence_report(&synthetic(&[1.0; 5]), 1.0, DistanceKind::Wave).is_err());
    }

    #[test]
    fn record_of_exact_heat_kernel() {
        let g = Grid::new(30.0, 4096).unwrap();
        let u = evaluate_heat(&HeatProfile::new(0.7), &g, 2.0).unwrap();
        let r = record(&u, 0.7, 0.0).unwrap();
        assert!(r.scaled_wave_distance.is_none());
        for p in DEFAULT_NORMS {
            assert!(r.scaled_distance(DistanceKind::Heat, p).unwrap() < 1e-14);
        }
        assert!((r.mass - g.dx() * u.values().iter().sum::<f64>()).abs() == 0.0);
        assert!((r.mass - 0.7).abs() < 1e-10);
    }

    #[test]
    fn record_of_exact_wave() {
        let g = Grid::new(30.0, 4096).unwrap();
        let w = DiffusionWave::new(2.0, 1.0).unwrap();
        let u = evaluate_wave(&w, &g, 1.0).unwrap();
        let r = record(&u, 2.0, 1.0).unwrap();
        for p in DEFAULT_NORMS {
            assert!(r.scaled_distance(DistanceKind::Wave, p).unwrap() < 1e-14);
        }
        assert!(
            r.scaled_distance(DistanceKind::Heat, f64::INFINITY)
                .unwrap()
                > 0.1
        );
    }

    #[test]
    fn record_at_time_zero_omits_distances() {
        let g = Grid::new(10.0, 64).unwrap();
        let u = Field::from_fn(g, 0.0, |x| (-x * x).exp()).unwrap();
        let r = record(&u, 1.0, 0.5).unwrap();
        assert!(r.scaled_heat_distance.is_none() && r.scaled_wave_distance.is_none());
        assert!(r.norm(2.0).is_some());
    }

    fn chemotaxis_spec(scale: f64) -> ConcentrationSpec {
        ConcentrationSpec {
            base: BaseBump::Gaussian {
                mass: 1.0,
                sigma: 1.0,
            },
            scale,
            delta: 1.0,
            gamma: (-1.0f64).exp() / 2.0,
        }
    }

    #[test]
    fn kernel_hypotheses() {
        let g = Grid::new(10.0, 1024).unwrap();
        let spec = chemotaxis_spec(10.0);
        spec.check_kernel(&sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap())
            .unwrap();

        let even = sample_kernel(
            &KernelSpec::GaussianMollifier {
                amplitude: 1.0,
                width: 1.0,
            },
            &g,
        )
        .unwrap();
        let e = spec.check_kernel(&even).unwrap_err().to_string();
        assert!(e.contains("not odd"), "{e}");

        let repulsive = sample_kernel(
            &KernelSpec::OddGaussian {
                amplitude: 1.0,
                width: 1.0,
            },
            &g,
        )
        .unwrap();
        let e = spec.check_kernel(&repulsive).unwrap_err().to_string();
        assert!(e.contains("nonpositive"), "{e}");

        let weak = ConcentrationSpec { gamma: 0.3, ..spec };
        let e = weak
            .check_kernel(&sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap())
            .unwrap_err()
            .to_string();
        assert!(e.contains("gamma"), "{e}");
    }

    #[test]
    fn scaled_datum_is_even_with_scaled_mass() {
        let g = Grid::new(10.0, 4096).unwrap();
        for base in [
            BaseBump::Gaussian {
                mass: 1.0,
                sigma: 1.0,
            },
            BaseBump::Cosine {
                mass: 2.0,
                half_width: 1.5,
            },
        ] {
            for &p in &[0.5, 2.0, 10.0] {
                let spec = ConcentrationSpec {
                    base,
                    ..chemotaxis_spec(p)
                };
                let u = spec.initial_field(&g).unwrap();
                for i in 0..g.n_cells() {
                    assert_eq!(u.values()[i], u.values()[g.mirror(i)]);
                }
                let rel = (u.mass() - spec.scaled_mass()).abs() / spec.scaled_mass();
                assert!(rel < 1e-5, "{base:?} P={p}: {rel}");
            }
        }
    }

    #[test]
    fn zero_datum_audit() {
        let g = Grid::new(10.0, 256).unwrap();
        let k = sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap();
        let recorder = Recorder::new(0.0, 0.0, &[]).unwrap();
        let recs: Vec<DiagnosticsRecord> = (0..5)
            .map(|k| {
                recorder
                    .record(&Field::zeros(g).with_time(k as f64 * 0.1))
                    .unwrap()
            })
            .collect();
        let audit = concentration_audit(&recs, &chemotaxis_spec(10.0), &k).unwrap();
        assert_eq!(audit.derivative_bound, 0.0);
        assert_eq!(audit.t_obs, 0.0);
        assert!(audit.moment_nondecreasing && !audit.concentrating);
    }

    #[test]
    fn moment_constant_approaches_continuum_value() {
        let c = moment_inequality_constant(&Grid::new(10.0, 512).unwrap());
        let sharp = 3.0 / 2f64.sqrt();
        assert!(c <= sharp + 1e-12 && c > sharp - 1e-3, "{c}");
    }
}
