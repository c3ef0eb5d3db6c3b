//! Built-in property suite behind `aggdiff check`.

use std::fs;

use aggdiff_core::{
    choose_dt, convolve, convolve_direct, sample_kernel, step, Field, Grid, KernelSpec,
    SolverConfig, VelocityMode,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::parse_config;
use crate::error::CliError;
use crate::experiment::run_experiment;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn outcome(name: &'static str, result: Result<String, String>) -> CheckOutcome {
    match result {
        Ok(detail) => CheckOutcome {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckOutcome {
            name,
            passed: false,
            detail,
        },
    }
}

fn random_field(rng: &mut StdRng, grid: Grid) -> Field {
    let v = (0..grid.n_cells())
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    Field::new(grid, v, 0.0).expect("finite values")
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::Chemotaxis,
        KernelSpec::OddGaussian {
            amplitude: 2.0,
            width: 0.7,
        },
        KernelSpec::GaussianMollifier {
            amplitude: 1.0,
            width: 0.5,
        },
    ]
}

fn convolution_oracle(rng: &mut StdRng) -> Result<String, String> {
    let mut worst = 0.0_f64;
    for n in [8usize, 64, 1024] {
        let g = Grid::new(6.0, n).map_err(|e| e.to_string())?;
        for spec in kernels() {
            let k = sample_kernel(&spec, &g).map_err(|e| e.to_string())?;
            for _ in 0..4 {
                let u = random_field(rng, g);
                let fast = convolve(&k, &u).map_err(|e| e.to_string())?;
                let slow = convolve_direct(&k, &u).map_err(|e| e.to_string())?;
                let diff = fast.axpy(-1.0, &slow).map_err(|e| e.to_string())?;
                let rel = max_abs(diff.values()) / max_abs(slow.values()).max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max relative FFT/direct gap {worst:.2e} <= 1e-12"))
    } else {
        Err(format!("max relative FFT/direct gap {worst:.2e} > 1e-12"))
    }
}

fn modes(g: Grid) -> Result<Vec<(&'static str, VelocityMode)>, String> {
    let mut out = vec![
        ("heat", VelocityMode::None),
        ("burgers", VelocityMode::LocalBurgers { a: 1.0 }),
    ];
    for (name, spec) in ["chemotaxis", "odd-gaussian", "mollifier"]
        .into_iter()
        .zip(kernels())
    {
        out.push((
            name,
            VelocityMode::nonlocal(sample_kernel(&spec, &g).map_err(|e| e.to_string())?),
        ));
    }
    Ok(out)
}

/// Marches `steps` CFL steps, calling `check` on every new state.
fn march(
    u0: &Field,
    cfg: &SolverConfig,
    steps: usize,
    mut check: impl FnMut(&Field, &Field) -> Result<(), String>,
) -> Result<(), String> {
    let mut u = u0.clone();
    for _ in 0..steps {
        let b = cfg.velocity_mode.velocity(&u).map_err(|e| e.to_string())?;
        let dt = choose_dt(&u, &b, cfg).map_err(|e| e.to_string())?;
        let (next, _) = step(&u, cfg, dt).map_err(|e| e.to_string())?;
        check(&u, &next)?;
        u = next;
    }
    Ok(())
}

fn positivity(rng: &mut StdRng) -> Result<String, String> {
    let g = Grid::new(8.0, 256).map_err(|e| e.to_string())?;
    // Rough data with exact zeros.
    let v: Vec<f64> = (0..256)
        .map(|_| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..5.0)
            }
        })
        .collect();
    let u0 = Field::new(g, v, 0.0).map_err(|e| e.to_string())?;
    for (name, mode) in modes(g)? {
        let cfg = SolverConfig::new(g, mode, 100.0, 0.02);
        march(&u0, &cfg, 200, |_, next| {
            let floor = -1e-14 * max_abs(next.values());
            match next.values().iter().copied().fold(f64::INFINITY, f64::min) {
                m if m >= floor => Ok(()),
                m => Err(format!("{name}: min {m:e} below {floor:e}")),
            }
        })?;
    }
    Ok("u >= -1e-14 max u for 200 steps in 5 velocity modes".into())
}

fn mass_conservation(rng: &mut StdRng) -> Result<String, String> {
    let g = Grid::new(8.0, 256).map_err(|e| e.to_string())?;
    let u0 = random_field(rng, g);
    let mut worst = 0.0_f64;
    for (name, mode) in modes(g)? {
        let cfg = SolverConfig::new(g, mode, 100.0, 0.02);
        march(&u0, &cfg, 200, |a, b| {
            let (sa, sb): (f64, f64) = (a.values().iter().sum(), b.values().iter().sum());
            let rel = ((sb - sa) / sa).abs();
            worst = worst.max(rel);
            if rel <= 1e-13 {
                Ok(())
            } else {
                Err(format!("{name}: per-step mass change {rel:e}"))
            }
        })?;
    }
    Ok(format!(
        "max per-step relative mass change {worst:.2e} <= 1e-13"
    ))
}

fn evenness(rng: &mut StdRng) -> Result<String, String> {
    let g = Grid::new(6.0, 256).map_err(|e| e.to_string())?;
    let n = g.n_cells();
    let mut v = vec![0.0; n];
    for i in n / 2..n {
        let x: f64 = rng.random_range(0.0..1.0);
        v[i] = x;
        v[g.mirror(i)] = x;
    }
    let u0 = Field::new(g, v, 0.0).map_err(|e| e.to_string())?;
    let odd = [
        KernelSpec::Chemotaxis,
        KernelSpec::OddGaussian {
            amplitude: 2.0,
            width: 0.7,
        },
    ];
    let mut worst = 0.0_f64;
    for spec in odd {
        let k = sample_kernel(&spec, &g).map_err(|e| e.to_string())?;
        let cfg = SolverConfig::new(g, VelocityMode::nonlocal(k), 100.0, 0.02);
        march(&u0, &cfg, 200, |_, next| {
            let w = next.values();
            let scale = max_abs(w);
            let gap = (0..n)
                .map(|i| (w[i] - w[g.mirror(i)]).abs())
                .fold(0.0, f64::max)
                / scale;
            worst = worst.max(gap);
            if gap <= 1e-13 {
                Ok(())
            } else {
                Err(format!("{spec:?}: asymmetry {gap:e}"))
            }
        })?;
    }
    Ok(format!("max relative asymmetry {worst:.2e} <= 1e-13"))
}

fn holder(rng: &mut StdRng) -> Result<String, String> {
    for trial in 0..200 {
        let n = 2 * rng.random_range(2..64);
        let g = Grid::new(rng.random_range(0.5..10.0), n).map_err(|e| e.to_string())?;
        let mut u = random_field(rng, g).into_values();
        // Sparse and spiky samples as well as smooth-ish noise.
        if trial % 2 == 0 {
            for v in u.iter_mut() {
                if rng.random_bool(0.7) {
                    *v = 0.0;
                }
            }
        }
        let u = Field::new(g, u, 0.0).map_err(|e| e.to_string())?;
        let norm = |p| u.lp_norm(p).map_err(|e| e.to_string());
        let (l1, l2, sup) = (norm(1.0)?, norm(2.0)?, norm(f64::INFINITY)?);
        if l2 > (l1 * sup).sqrt() * (1.0 + 4.0 * f64::EPSILON) {
            return Err(format!(
                "trial {trial}: ||u||_2 = {l2} > sqrt(||u||_1 ||u||_inf) = {}",
                (l1 * sup).sqrt()
            ));
        }
    }
    Ok("||u||_2 <= ||u||_1^(1/2) ||u||_inf^(1/2) on 200 random fields".into())
}

const DETERMINISM_CONFIG: &str = "\
preset = custom
[grid]
half_width = 10
n_cells = 256
[kernel]
type = chemotaxis
[datum]
type = gaussian
mass = 2
sigma = 0.7
[time]
t_end = 2
dt_max = 0.01
[output]
count = 12
";

fn determinism() -> Result<String, String> {
    let cfg = parse_config(DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        run_experiment(&cfg, &out).map_err(|e| e.to_string())?;
        files.push(fs::read(out.join("diagnostics.csv")).map_err(|e| e.to_string())?);
    }
    if files[0] == files[1] {
        Ok(format!(
            "two runs wrote identical diagnostics.csv ({} bytes)",
            files[0].len()
        ))
    } else {
        Err("diagnostics.csv differs between identical runs".into())
    }
}

/// Runs every property with RNG `seed` and returns one outcome per property.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = StdRng::seed_from_u64(seed);
    vec![
        outcome("convolution oracle", convolution_oracle(&mut rng)),
        outcome("mass conservation", mass_conservation(&mut rng)),
        outcome("positivity", positivity(&mut rng)),
        outcome("evenness", evenness(&mut rng)),
        outcome("hoelder interpolation", holder(&mut rng)),
        outcome("determinism", determinism()),
    ]
}

/// Prints one line per property; fails when any property fails.
pub fn check_command(seed: u64) -> Result<(), CliError> {
    let results = run_checks(seed);
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "{failed} of {} properties failed",
            results.len()
        )))
    }
}
