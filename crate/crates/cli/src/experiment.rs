//! Runs one configured experiment and writes its artifacts.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aggdiff_core::{
    concentration_audit, convergence_report, evaluate_wave, fit_decay_exponent, run, sample_kernel,
    solve_elliptic, BaseBump, ConcentrationAudit, ConcentrationSpec, ConvergenceReport, Convolver,
    DecayFit, DiagnosticsRecord, DiffusionWave, DistanceKind, Field, Grid, Kernel, KernelSpec,
    Recorder, SolverConfig, VelocityMode,
};
use log::info;

use crate::config::{BaseShape, DatumConfig, ExperimentConfig, KernelConfig, Preset};
use crate::error::CliError;

/// Name of the marker file left behind by a failed run.
pub const FAILED_MARKER: &str = "FAILED";

/// Everything a finished run produced.
#[derive(Debug)]
pub struct Experiment {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: Field,
    pub summary: Summary,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub preset: Preset,
    pub dx: f64,
    pub kernel_integral: f64,
    pub initial_mass: f64,
    /// `max_t |M(t) - M(0)| / M(0)` over the records.
    pub max_mass_drift: f64,
    pub max_boundary_fraction: f64,
    pub fit_window: (f64, f64),
    pub fits: Vec<(f64, Result<DecayFit, String>)>,
    pub heat_convergence: Vec<(f64, Result<ConvergenceReport, String>)>,
    pub wave_convergence: Vec<(f64, Result<ConvergenceReport, String>)>,
    /// Earliest output time from which the wave distance stays below the heat
    /// distance at `p = 1`.
    pub wave_closer_from: Option<f64>,
    pub audit: Option<ConcentrationAudit>,
    pub burgers: Option<OracleCheck>,
    pub chemo: Option<OracleCheck>,
}

/// A measured error against the bound it must stay under.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCheck {
    pub error: f64,
    pub bound: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.error <= self.bound
    }
}

fn norm_label(p: f64) -> String {
    if p == f64::INFINITY {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// `%.16e`, the 17-significant-digit CSV number format.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header of `diagnostics.csv` for the given norm indices.
pub fn csv_header(norms: &[f64]) -> String {
    let mut cols = vec!["time".to_string(), "mass".to_string()];
    cols.extend(norms.iter().map(|p| format!("norm_{}", norm_label(*p))));
    cols.push("peak".into());
    cols.push("first_moment".into());
    cols.extend(
        norms
            .iter()
            .map(|p| format!("heat_dist_{}", norm_label(*p))),
    );
    cols.extend(
        norms
            .iter()
            .map(|p| format!("wave_dist_{}", norm_label(*p))),
    );
    cols.push("boundary_mass_fraction".into());
    cols.join(",")
}

fn csv_row(r: &DiagnosticsRecord, norms: &[f64]) -> String {
    let mut cols = vec![num(r.time), num(r.mass)];
    cols.extend(
        norms
            .iter()
            .map(|p| r.norm(*p).map(num).unwrap_or_default()),
    );
    cols.push(num(r.peak));
    cols.push(num(r.first_moment));
    for kind in [DistanceKind::Heat, DistanceKind::Wave] {
        cols.extend(
            norms
                .iter()
                .map(|p| r.scaled_distance(kind, *p).map(num).unwrap_or_default()),
        );
    }
    cols.push(num(r.boundary_mass_fraction));
    cols.join(",")
}

pub fn snapshot_name(t: f64) -> String {
    format!("profile_t{t:.6e}.csv")
}

struct Setup {
    grid: Grid,
    mode: VelocityMode,
    kernel: Option<Kernel>,
    a: f64,
    u0: Field,
    concentration: Option<ConcentrationSpec>,
    wave_datum: Option<(DiffusionWave, f64)>,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, CliError> {
    let grid = Grid::new(cfg.grid.half_width, cfg.grid.n_cells)?;
    let spec = match &cfg.kernel {
        KernelConfig::Zero => Some(KernelSpec::Zero),
        KernelConfig::Chemotaxis => Some(KernelSpec::Chemotaxis),
        KernelConfig::GaussianMollifier { amplitude, width } => {
            Some(KernelSpec::GaussianMollifier {
                amplitude: *amplitude,
                width: *width,
            })
        }
        KernelConfig::OddGaussian { amplitude, width } => Some(KernelSpec::OddGaussian {
            amplitude: *amplitude,
            width: *width,
        }),
        KernelConfig::Tabulated { file } => Some(KernelSpec::tabulated_from_file(file)?),
        KernelConfig::LocalBurgers { .. } => None,
    };
    let (mode, kernel, a) = match (&cfg.kernel, spec) {
        (KernelConfig::LocalBurgers { a }, _) => (VelocityMode::LocalBurgers { a: *a }, None, *a),
        (_, Some(spec)) => {
            let k = sample_kernel(&spec, &grid)?;
            let a = k.total_integral();
            let mode = if k.is_zero() {
                VelocityMode::None
            } else {
                VelocityMode::nonlocal(k.clone())
            };
            (mode, Some(k), a)
        }
        (_, None) => unreachable!("every kernel type but local-burgers has a spec"),
    };

    let mut concentration = None;
    let mut wave_datum = None;
    let u0 = match &cfg.datum {
        DatumConfig::Gaussian {
            mass,
            sigma,
            center,
        } => Field::from_fn(grid, 0.0, |x| {
            let z = (x - center) / sigma;
            mass * (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        })?,
        DatumConfig::ScaledBump {
            scale,
            base,
            base_mass,
            base_width,
        } => {
            let base = match base {
                BaseShape::Gaussian => BaseBump::Gaussian {
                    mass: *base_mass,
                    sigma: *base_width,
                },
                BaseShape::Cosine => BaseBump::Cosine {
                    mass: *base_mass,
                    half_width: *base_width,
                },
            };
            let spec = ConcentrationSpec {
                base,
                scale: *scale,
                delta: cfg.audit.delta,
                gamma: cfg.audit.gamma,
            };
            let u0 = spec.initial_field(&grid)?;
            concentration = Some(spec);
            u0
        }
        DatumConfig::File { file } => {
            let table = KernelSpec::tabulated_from_file(file)?;
            Field::from_fn(grid, 0.0, |x| table.eval(x))?
        }
        DatumConfig::BurgersWave { mass, a, time } => {
            let w = DiffusionWave::new(*mass, *a)?;
            let u0 = evaluate_wave(&w, &grid, *time)?.with_time(0.0);
            wave_datum = Some((w, *time));
            u0
        }
    };
    if cfg.preset == Preset::Concentration {
        let (Some(spec), Some(k)) = (&concentration, &kernel) else {
            unreachable!("the parser enforces a scaled bump and a kernel");
        };
        spec.check_kernel(k)?;
    }
    Ok(Setup {
        grid,
        mode,
        kernel,
        a,
        u0,
        concentration,
        wave_datum,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Runs `cfg`, writing artifacts under `out_dir`. On failure the artifacts
/// written so far stay on disk next to a `FAILED` marker.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Experiment, CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let marker = out_dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(io_err(&marker))?;
    }
    let result = execute(cfg, out_dir);
    if let Err(e) = &result {
        // Best effort: the original error matters more than a marker failure.
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Experiment, CliError> {
    let s = setup(cfg)?;
    let mass0 = s.u0.mass();
    let profile_mass = match &s.wave_datum {
        Some((w, _)) => w.mass(),
        None => mass0,
    };
    let recorder = Recorder::new(profile_mass, s.a, &cfg.output.norms)?;
    let norms = recorder.norms().to_vec();
    let mut solver_cfg = SolverConfig::new(s.grid, s.mode.clone(), cfg.time.t_end, cfg.time.dt_max);
    solver_cfg.dt_min = cfg.time.dt_min;
    solver_cfg.cfl_advection = cfg.time.cfl;
    solver_cfg.output_times = cfg.output_times();

    let csv_path = out_dir.join("diagnostics.csv");
    let mut csv = BufWriter::new(File::create(&csv_path).map_err(io_err(&csv_path))?);
    writeln!(csv, "{}", csv_header(&norms)).map_err(io_err(&csv_path))?;

    let snapshots = cfg.snapshot_times();
    let chemo = (cfg.preset == Preset::ChemoEquivalence)
        .then(|| Convolver::new(Kernel::chemotaxis_potential(s.grid)));
    let mut chemo_error = 0.0_f64;
    let mut written = Vec::new();
    let mut records = Vec::new();
    let mut sink_error: Option<CliError> = None;

    let outcome = run(&s.u0, &solver_cfg, |u| {
        if sink_error.is_some() {
            return;
        }
        let mut step = || -> Result<(), CliError> {
            let rec = recorder.record(u)?;
            writeln!(csv, "{}", csv_row(&rec, &norms)).map_err(io_err(&csv_path))?;
            csv.flush().map_err(io_err(&csv_path))?;
            records.push(rec);
            if snapshots.contains(&u.time()) {
                let extra = match &chemo {
                    Some(conv) => {
                        let v = solve_elliptic(u)?;
                        let ku = conv.apply(u)?;
                        let peak = u.lp_norm(f64::INFINITY)?;
                        if peak > 0.0 {
                            let gap = v.axpy(-1.0, &ku)?.lp_norm(f64::INFINITY)?;
                            chemo_error = chemo_error.max(gap / peak);
                        }
                        Some((v, ku))
                    }
                    None => None,
                };
                let name = snapshot_name(u.time());
                write_snapshot(
                    &out_dir.join(&name),
                    u,
                    profile_mass,
                    &recorder,
                    extra.as_ref(),
                )?;
                written.push((u.time(), name));
            }
            Ok(())
        };
        if let Err(e) = step() {
            sink_error = Some(e);
        }
    });
    if let Some(e) = sink_error {
        return Err(e);
    }
    let final_state = outcome?;
    info!("run finished at t = {}", final_state.time());

    let mut summary = summarize(cfg, &s, &records, mass0, &norms)?;
    if chemo.is_some() {
        summary.chemo = Some(OracleCheck {
            error: chemo_error,
            bound: 10.0 * s.grid.dx() * s.grid.dx(),
        });
    }
    if let Some((w, t0)) = &s.wave_datum {
        let exact = evaluate_wave(w, &s.grid, t0 + final_state.time())?;
        let scale = exact.lp_norm(f64::INFINITY)?;
        let err = final_state.axpy(-1.0, &exact)?.lp_norm(f64::INFINITY)? / scale;
        summary.burgers = Some(OracleCheck {
            error: err,
            bound: cfg.analysis.tolerance,
        });
    }
    write_file(&out_dir.join("summary.txt"), &summary.render())?;
    write_file(
        &out_dir.join("plot.gp"),
        &plot_script(
            &norms,
            &written,
            s.wave_datum.is_some() || recorder.wave().is_some(),
        ),
    )?;
    Ok(Experiment {
        records,
        final_state,
        summary,
    })
}

fn write_snapshot(
    path: &Path,
    u: &Field,
    profile_mass: f64,
    recorder: &Recorder,
    chemo: Option<&(Field, Field)>,
) -> Result<(), CliError> {
    let t = u.time();
    let heat = aggdiff_core::HeatProfile::new(profile_mass);
    let mut text = String::from("x,u,heat_profile");
    if recorder.wave().is_some() {
        text.push_str(",wave_profile");
    }
    if chemo.is_some() {
        text.push_str(",v,k_conv_u");
    }
    text.push('\n');
    let grid = u.grid();
    for (i, &v) in u.values().iter().enumerate() {
        let x = grid.center(i);
        // Rounding-level negatives are clipped here only, never in the state.
        let _ = write!(text, "{},{}", num(x), num(v.max(0.0)));
        let _ = write!(
            text,
            ",{}",
            if t > 0.0 {
                num(heat.value(x, t))
            } else {
                String::new()
            }
        );
        if let Some(w) = recorder.wave() {
            let _ = write!(
                text,
                ",{}",
                if t > 0.0 {
                    num(w.value(x, t))
                } else {
                    String::new()
                }
            );
        }
        if let Some((ve, ku)) = chemo {
            let _ = write!(text, ",{},{}", num(ve.values()[i]), num(ku.values()[i]));
        }
        text.push('\n');
    }
    write_file(path, &text)
}

fn summarize(
    cfg: &ExperimentConfig,
    s: &Setup,
    records: &[DiagnosticsRecord],
    mass0: f64,
    norms: &[f64],
) -> Result<Summary, CliError> {
    let max_mass_drift = if mass0 != 0.0 {
        records
            .iter()
            .map(|r| ((r.mass - mass0) / mass0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let max_boundary_fraction = records
        .iter()
        .map(|r| r.boundary_mass_fraction)
        .fold(0.0, f64::max);
    let window = (
        cfg.analysis.fit_window.0,
        cfg.analysis.fit_window.1.min(cfg.time.t_end),
    );
    // Runs that stop before the fit window have nothing to fit.
    let in_window = cfg.time.t_end > window.0;
    let norms: &[f64] = if in_window { norms } else { &[] };
    let fits = norms
        .iter()
        .map(|&p| {
            let series: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| r.norm(p).map(|v| (r.time, v)))
                .collect();
            (
                p,
                fit_decay_exponent(&series, window).map_err(|e| e.to_string()),
            )
        })
        .collect();
    let verdicts = |kind| {
        norms
            .iter()
            .map(|&p| {
                (
                    p,
                    convergence_report(records, p, kind).map_err(|e| e.to_string()),
                )
            })
            .collect::<Vec<_>>()
    };
    let heat_convergence = verdicts(DistanceKind::Heat);
    let has_wave = records.iter().any(|r| r.scaled_wave_distance.is_some());
    let wave_convergence = if has_wave {
        verdicts(DistanceKind::Wave)
    } else {
        Vec::new()
    };
    let wave_closer_from = if has_wave {
        let mut from = None;
        for r in records.iter().filter(|r| r.time > 0.0) {
            let closer = matches!(
                (r.scaled_distance(DistanceKind::Wave, 1.0), r.scaled_distance(DistanceKind::Heat, 1.0)),
                (Some(w), Some(h)) if w < h
            );
            match (closer, from) {
                (true, None) => from = Some(r.time),
                (false, _) => from = None,
                _ => {}
            }
        }
        from
    } else {
        None
    };
    let audit = match (&s.concentration, &s.kernel, cfg.preset) {
        (Some(spec), Some(k), Preset::Concentration) => {
            Some(concentration_audit(records, spec, k)?)
        }
        _ => None,
    };
    Ok(Summary {
        preset: cfg.preset,
        dx: s.grid.dx(),
        kernel_integral: s.a,
        initial_mass: mass0,
        max_mass_drift,
        max_boundary_fraction,
        fit_window: window,
        fits,
        heat_convergence,
        wave_convergence,
        wave_closer_from,
        audit,
        burgers: None,
        chemo: None,
    })
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "preset: {}", self.preset);
        let _ = writeln!(w, "dx: {:.10e}", self.dx);
        let _ = writeln!(w, "kernel integral A: {:.10e}", self.kernel_integral);
        let _ = writeln!(w, "initial mass: {:.16e}", self.initial_mass);
        let _ = writeln!(w, "max relative mass drift: {:.3e}", self.max_mass_drift);
        let _ = writeln!(
            w,
            "max boundary mass fraction: {:.3e}",
            self.max_boundary_fraction
        );
        if self.fits.is_empty() {
            let _ = writeln!(
                w,
                "\ndecay exponents: skipped, the run ends before the fit window starts at t = {}",
                self.fit_window.0
            );
        } else {
            let _ = writeln!(
                w,
                "\ndecay exponents over [{}, {}] (heat rate -(1-1/p)/2):",
                self.fit_window.0, self.fit_window.1
            );
        }
        for (p, fit) in &self.fits {
            let expected = -0.5 * (1.0 - 1.0 / p);
            match fit {
                Ok(f) => {
                    let _ = writeln!(
                        w,
                        "  p = {}: slope {:.6} (heat rate {:.4}), r2 {:.6}, {} points",
                        norm_label(*p),
                        f.slope,
                        expected,
                        f.r_squared,
                        f.points
                    );
                }
                Err(e) => {
                    let _ = writeln!(w, "  p = {}: n/a ({e})", norm_label(*p));
                }
            }
        }
        let mut verdicts = |title: &str, list: &[(f64, Result<ConvergenceReport, String>)]| {
            if list.is_empty() {
                return;
            }
            let _ = writeln!(w, "\nconvergence of the scaled {title} distance:");
            for (p, rep) in list {
                match rep {
                    Ok(r) => {
                        let _ = writeln!(
                            w,
                            "  p = {}: {} (value at t >= 1: {:.6e}, terminal: {:.6e}, decreasing over last decade: {})",
                            norm_label(*p),
                            if r.converging { "converging" } else { "not converging" },
                            r.reference,
                            r.terminal,
                            r.decreasing_over_last_decade
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(w, "  p = {}: n/a ({e})", norm_label(*p));
                    }
                }
            }
        };
        verdicts("heat", &self.heat_convergence);
        verdicts("wave", &self.wave_convergence);
        if !self.wave_convergence.is_empty() {
            match self.wave_closer_from {
                Some(t) => {
                    let _ = writeln!(
                        w,
                        "wave closer than heat kernel at p = 1 from t = {t:.6e} on"
                    );
                }
                None => {
                    let _ = writeln!(
                        w,
                        "wave not closer than heat kernel at p = 1 at the final time"
                    );
                }
            }
        }
        if let Some(a) = &self.audit {
            let _ = writeln!(w, "\nconcentration audit:");
            for line in a.describe().lines() {
                let _ = writeln!(w, "  {line}");
            }
        }
        if let Some(c) = &self.burgers {
            let _ = writeln!(
                w,
                "\nburgers oracle: max-norm relative error {:.6e}, bound {:.3e}: {}",
                c.error,
                c.bound,
                if c.passed() { "PASS" } else { "FAIL" }
            );
        }
        if let Some(c) = &self.chemo {
            let _ = writeln!(
                w,
                "\nchemotaxis equivalence: max |v - K*u| / max u = {:.6e}, bound 10 dx^2 = {:.3e}: {}",
                c.error,
                c.bound,
                if c.passed() { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

/// Gnuplot script drawing norms, scaled distances and profile snapshots.
pub fn plot_script(norms: &[f64], snapshots: &[(f64, String)], with_wave: bool) -> String {
    let k = norms.len();
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        "# gnuplot script; run with `gnuplot plot.gp` in this directory"
    );
    let _ = writeln!(w, "set datafile separator ','");
    let _ = writeln!(w, "set terminal pngcairo size 900,600");
    let _ = writeln!(w, "set grid\nset xlabel 't'\nset logscale xy");
    let _ = writeln!(w, "\nset output 'norms.png'\nset ylabel '||u(t)||_p'");
    let plots: Vec<String> = (0..k)
        .map(|j| {
            format!(
                "'diagnostics.csv' using 1:{} skip 1 with linespoints title 'p = {}'",
                3 + j,
                norm_label(norms[j])
            )
        })
        .collect();
    let _ = writeln!(w, "plot {}", plots.join(", \\\n     "));
    let heat0 = 2 + k + 2 + 1;
    let _ = writeln!(
        w,
        "\nset output 'distances.png'\nset ylabel 't^{{(1-1/p)/2}} ||u - profile||_p'"
    );
    let mut plots: Vec<String> = (0..k)
        .map(|j| {
            format!(
                "'diagnostics.csv' using 1:{} skip 1 with linespoints title 'heat, p = {}'",
                heat0 + j,
                norm_label(norms[j])
            )
        })
        .collect();
    if with_wave {
        plots.extend((0..k).map(|j| {
            format!(
                "'diagnostics.csv' using 1:{} skip 1 with linespoints title 'wave, p = {}'",
                heat0 + k + j,
                norm_label(norms[j])
            )
        }));
    }
    let _ = writeln!(w, "plot {}", plots.join(", \\\n     "));
    let _ = writeln!(w, "\nset output 'first_moment.png'\nset ylabel 'I(t)'");
    let _ = writeln!(
        w,
        "plot 'diagnostics.csv' using 1:{} skip 1 with linespoints title 'first moment'",
        2 + k + 2
    );
    if !snapshots.is_empty() {
        let _ = writeln!(
            w,
            "\nunset logscale\nset output 'profiles.png'\nset xlabel 'x'\nset ylabel 'u'"
        );
        let plots: Vec<String> = snapshots
            .iter()
            .map(|(t, name)| format!("'{name}' using 1:2 skip 1 with lines title 't = {t}'"))
            .collect();
        let _ = writeln!(w, "plot {}", plots.join(", \\\n     "));
    }
    s
}

/// Output directory: `--out` when given, else the configured directory.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| cfg.output.directory.clone(), Path::to_path_buf)
}
