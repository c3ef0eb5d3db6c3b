use std::f64::consts::PI;

use aggdiff_core::diagnostics::{first_moment_lower_bound, moment_inequality_constant};
use aggdiff_core::{
    concentration_audit, convergence_report, fit_decay_exponent, run, sample_kernel, BaseBump,
    ConcentrationSpec, DiagnosticsRecord, DistanceKind, Field, Grid, KernelSpec, Recorder,
    SolverConfig, VelocityMode,
};
use proptest::prelude::*;

fn gaussian(grid: Grid, mass: f64, var: f64) -> Field {
    Field::from_fn(grid, 0.0, |x| {
        mass * (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    })
    .unwrap()
}

fn log_times(first: f64, last: f64, count: usize) -> Vec<f64> {
    let r = (last / first).ln() / (count - 1) as f64;
    let mut t: Vec<f64> = (0..count).map(|k| first * (r * k as f64).exp()).collect();
    t[count - 1] = last;
    t
}

fn trajectory(u0: &Field, cfg: &SolverConfig, recorder: &Recorder) -> Vec<DiagnosticsRecord> {
    let mut records = Vec::new();
    run(u0, cfg, |u| records.push(recorder.record(u).unwrap())).unwrap();
    records
}

fn series(records: &[DiagnosticsRecord], p: f64) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.time > 0.0)
        .map(|r| (r.time, r.norm(p).unwrap()))
        .collect()
}

#[test]
fn heat_run_decays_at_the_heat_rates() {
    // A narrow datum: the exact variance is sigma^2 + 2t, so a wide one bends
    // the fitted slope away from the asymptotic rate inside the window.
    let g = Grid::new(120.0, 4096).unwrap();
    let mut times = vec![0.0];
    times.extend(log_times(0.1, 100.0, 40));
    let cfg = SolverConfig::new(g, VelocityMode::None, 100.0, 0.05).with_output_times(times);
    let records = trajectory(
        &gaussian(g, 1.0, 0.09),
        &cfg,
        &Recorder::new(1.0, 0.0, &[]).unwrap(),
    );

    let sup = fit_decay_exponent(&series(&records, f64::INFINITY), (1.0, 100.0)).unwrap();
    assert!(
        (sup.slope + 0.5).abs() <= 0.02,
        "p = inf slope {}",
        sup.slope
    );
    let l2 = fit_decay_exponent(&series(&records, 2.0), (1.0, 100.0)).unwrap();
    assert!((l2.slope + 0.25).abs() <= 0.02, "p = 2 slope {}", l2.slope);
    assert!(sup.r_squared > 0.99 && l2.r_squared > 0.99);
}

#[test]
fn mass_is_identical_across_records() {
    let g = Grid::new(30.0, 1024).unwrap();
    let k = sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap();
    let cfg = SolverConfig::new(g, VelocityMode::nonlocal(k), 20.0, 0.05)
        .with_output_times(log_times(0.01, 20.0, 25));
    let u0 = gaussian(g, 3.0, 0.5);
    let records = trajectory(&u0, &cfg, &Recorder::new(3.0, 0.0, &[]).unwrap());
    let m0 = u0.mass();
    for r in &records {
        assert!(
            ((r.mass - m0) / m0).abs() <= 1e-12,
            "t = {}: {}",
            r.time,
            r.mass
        );
    }
}

#[test]
fn first_moment_stays_above_its_lower_bound() {
    let g = Grid::new(20.0, 512).unwrap();
    let c = moment_inequality_constant(&g);
    let k = sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap();
    let mut times = vec![0.0];
    times.extend(log_times(0.001, 5.0, 30));
    let cfg = SolverConfig::new(g, VelocityMode::nonlocal(k), 5.0, 0.01).with_output_times(times);
    let spec = ConcentrationSpec {
        base: BaseBump::Gaussian {
            mass: 1.0,
            sigma: 1.0,
        },
        scale: 3.0,
        delta: 1.0,
        gamma: (-1.0f64).exp() / 2.0,
    };
    let u0 = spec.initial_field(&g).unwrap();
    let records = trajectory(&u0, &cfg, &Recorder::new(u0.mass(), 0.0, &[]).unwrap());
    for r in &records {
        let bound = first_moment_lower_bound(r.mass, r.norm(2.0).unwrap(), c);
        assert!(
            r.first_moment >= bound,
            "t = {}: I = {} < {bound}",
            r.time,
            r.first_moment
        );
    }
}

#[test]
fn odd_kernel_small_mass_converges_to_heat_kernel() {
    let g = Grid::new(150.0, 2048).unwrap();
    let k = sample_kernel(
        &KernelSpec::OddGaussian {
            amplitude: 1.0,
            width: 1.0,
        },
        &g,
    )
    .unwrap();
    assert_eq!(k.total_integral(), 0.0);
    let cfg = SolverConfig::new(g, VelocityMode::nonlocal(k), 200.0, 0.05)
        .with_output_times(log_times(0.5, 200.0, 30));
    let m = 0.1;
    let records = trajectory(
        &gaussian(g, m, 1.0),
        &cfg,
        &Recorder::new(m, 0.0, &[]).unwrap(),
    );
    let report = convergence_report(&records, 1.0, DistanceKind::Heat).unwrap();
    assert!(report.converging, "{report:?}");
    assert!(report.eventually_decreasing);
}

#[test]
fn audit_detects_concentration_for_large_scaling() {
    let g = Grid::new(4.0, 2048).unwrap();
    let k = sample_kernel(&KernelSpec::Chemotaxis, &g).unwrap();
    let spec = ConcentrationSpec {
        base: BaseBump::Gaussian {
            mass: 1.0,
            sigma: 1.0,
        },
        scale: 10.0,
        delta: 1.0,
        gamma: (-1.0f64).exp() / 2.0,
    };
    let u0 = spec.initial_field(&g).unwrap();
    let mut times = vec![0.0];
    times.extend(log_times(1e-4, 0.05, 30));
    let cfg = SolverConfig::new(g, VelocityMode::nonlocal(k.clone()), 0.05, 1e-3)
        .with_output_times(times);
    let records = trajectory(&u0, &cfg, &Recorder::new(u0.mass(), 0.0, &[]).unwrap());
    let audit = concentration_audit(&records, &spec, &k).unwrap();
    assert_eq!(audit.initial_moment_trend, -1);
    assert!(audit.t_obs > 0.0);
    assert!(audit.peak_increased);
    assert!(audit.concentrating);
}

#[test]
fn audit_rejects_kernels_violating_the_hypotheses() {
    let g = Grid::new(4.0, 256).unwrap();
    let spec = ConcentrationSpec {
        base: BaseBump::Cosine {
            mass: 1.0,
            half_width: 1.0,
        },
        scale: 2.0,
        delta: 1.0,
        gamma: 0.1,
    };
    let u0 = spec.initial_field(&g).unwrap();
    let rec = Recorder::new(u0.mass(), 0.0, &[])
        .unwrap()
        .record(&u0)
        .unwrap();
    let repulsive = sample_kernel(
        &KernelSpec::OddGaussian {
            amplitude: 1.0,
            width: 1.0,
        },
        &g,
    )
    .unwrap();
    let err = concentration_audit(&[rec.clone()], &spec, &repulsive).unwrap_err();
    assert!(err.to_string().contains("nonpositive"), "{err}");
    let even = sample_kernel(
        &KernelSpec::GaussianMollifier {
            amplitude: 1.0,
            width: 1.0,
        },
        &g,
    )
    .unwrap();
    let err = concentration_audit(&[rec], &spec, &even).unwrap_err();
    assert!(err.to_string().contains("not odd"), "{err}");
}

proptest! {
    #[test]
    fn holder_interpolation_of_norms(values in prop::collection::vec(0.0f64..10.0, 16)) {
        let g = Grid::new(2.5, 16).unwrap();
        let u = Field::new(g, values, 0.0).unwrap();
        let l1 = u.lp_norm(1.0).unwrap();
        let l2 = u.lp_norm(2.0).unwrap();
        let sup = u.lp_norm(f64::INFINITY).unwrap();
        // The two sides agree exactly for indicator-like fields; allow rounding.
        prop_assert!(l2 <= (l1 * sup).sqrt() * (1.0 + 4.0 * f64::EPSILON));
    }

    #[test]
    fn fitted_slope_ignores_value_scaling(lambda in 1e-3f64..1e3, slope in -2.0f64..0.5) {
        let s: Vec<(f64, f64)> = (0..12).map(|k| {
            let t = 1.0 + k as f64 * 8.0;
            (t, 2.0 * t.powf(slope) * (1.0 + 0.1 * (k as f64).sin()))
        }).collect();
        let scaled: Vec<(f64, f64)> = s.iter().map(|(t, v)| (*t, lambda * v)).collect();
        let a = fit_decay_exponent(&s, (1.0, 100.0)).unwrap();
        let b = fit_decay_exponent(&scaled, (1.0, 100.0)).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-12);
    }
}
