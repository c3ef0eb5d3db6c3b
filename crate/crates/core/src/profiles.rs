//! Closed-form large-time targets: the heat kernel and the viscous-Burgers
//! nonlinear diffusion wave.
//!
//! The diffusion wave is the source solution of `U_t = U_xx - A (U^2)_x` with
//! `U(., 0) = M delta_0`. The Hopf-Cole substitution `A U = -(log psi)_x`
//! with `psi` an error-function solution of the heat equation gives
//!
//! ```text
//! U(x, t) = (2A)^{-1} t^{-1/2} exp(-x^2/4t) / (C - (1/2) int_0^{x/sqrt t} exp(-s^2/4) ds)
//! ```
//!
//! and the mass condition `int U(., 1) = M` integrates in closed form to
//! `M A = log((C + sqrt(pi)/2) / (C - sqrt(pi)/2))`, i.e.
//! `C = (sqrt(pi)/2) coth(M A / 2)`. The closed form is cross-checked against
//! adaptive quadrature every time a wave is built.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::quadrature;

/// `sqrt(pi)/2`, the value of `(1/2) int_0^inf exp(-s^2/4) ds`.
const HALF_SQRT_PI: f64 = 0.886_226_925_452_758;

/// Closest approach of `|C|` to `sqrt(pi)/2` before the wave is rejected.
const DEGENERACY_GAP: f64 = 1e-12;

/// Mass tolerance for the construction-time quadrature check.
const MASS_CHECK_TOL: f64 = 1e-10;

/// `M G(x, t)` with `G` the heat kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatProfile {
    pub mass: f64,
}

impl HeatProfile {
    pub fn new(mass: f64) -> Self {
        Self { mass }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.mass * (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
    }
}

pub fn evaluate_heat(h: &HeatProfile, grid: &Grid, t: f64) -> Result<Field> {
    check_time(t)?;
    Field::from_fn(*grid, t, |x| h.value(x, t))
}

/// Nonlinear diffusion wave `U_{M,A}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionWave {
    mass: f64,
    a: f64,
    c: f64,
    /// `|C| - sqrt(pi)/2`, kept separately to avoid cancellation.
    gap: f64,
}

/// Normalisation constant `C_{M,A} = (sqrt(pi)/2) coth(M A / 2)`.
pub fn burgers_constant(mass: f64, a: f64) -> Result<f64> {
    let (c, _) = constant_and_gap(mass, a)?;
    Ok(c)
}

fn constant_and_gap(mass: f64, a: f64) -> Result<(f64, f64)> {
    if !(mass.is_finite() && a.is_finite()) || mass == 0.0 || a == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "diffusion wave needs finite nonzero M and A, got M = {mass}, A = {a}"
        )));
    }
    let z = 0.5 * mass * a;
    if z == 0.0 {
        // M A underflowed: the wave is indistinguishable from M G.
        return Err(Error::InvalidArgument(format!(
            "M A = {} underflows; use the heat profile",
            mass * a
        )));
    }
    // coth(z) - 1 = 2 / expm1(2|z|) for the gap; C itself from tanh.
    let gap = 2.0 * HALF_SQRT_PI / (2.0 * z.abs()).exp_m1();
    if gap < DEGENERACY_GAP {
        return Err(Error::DegenerateProfile { mass, a, gap });
    }
    let c = HALF_SQRT_PI / z.tanh();
    Ok((c, gap))
}

impl DiffusionWave {
    /// Builds `U_{M,A}` and verifies `int U(., 1) = M` by adaptive quadrature.
    pub fn new(mass: f64, a: f64) -> Result<Self> {
        let (c, gap) = constant_and_gap(mass, a)?;
        let wave = Self { mass, a, c, gap };
        let q = wave.quadrature_mass();
        if !((q - mass).abs() <= MASS_CHECK_TOL * mass.abs().max(1.0)) {
            return Err(Error::PreconditionFailed(format!(
                "diffusion wave mass check failed: quadrature {q} vs M = {mass}"
            )));
        }
        Ok(wave)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// `int U(eta, 1) d eta` by adaptive Gauss-Kronrod.
    pub fn quadrature_mass(&self) -> f64 {
        // Beyond |eta| = 80 the numerator is below e^-1600.
        let f = |eta: f64| self.value(eta, 1.0);
        let tol = 1e-14 * self.mass.abs().max(1e-300);
        [(-80.0, -20.0), (-20.0, 0.0), (0.0, 20.0), (20.0, 80.0)]
            .iter()
            .map(|&(a, b)| quadrature::integrate(f, a, b, tol))
            .sum()
    }

    /// `C - (sqrt(pi)/2) erf(eta/2)`, evaluated without cancellation.
    fn denominator(&self, eta: f64) -> f64 {
        let half = 0.5 * eta;
        if self.c > 0.0 {
            if eta > 0.0 {
                self.gap + HALF_SQRT_PI * libm::erfc(half)
            } else {
                self.c + HALF_SQRT_PI * libm::erf(-half)
            }
        } else if eta < 0.0 {
            -self.gap - HALF_SQRT_PI * libm::erfc(-half)
        } else {
            self.c - HALF_SQRT_PI * libm::erf(half)
        }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        let st = t.sqrt();
        let eta = x / st;
        (-0.25 * eta * eta).exp() / (2.0 * self.a * st * self.denominator(eta))
    }
}

pub fn evaluate_wave(w: &DiffusionWave, grid: &Grid, t: f64) -> Result<Field> {
    check_time(t)?;
    Field::from_fn(*grid, t, |x| w.value(x, t))
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "profiles are defined for t > 0, got {t}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on a wide interval: an integration route independent
    /// of the adaptive Gauss-Kronrod used at construction.
    fn simpson_mass(w: &DiffusionWave) -> f64 {
        let (a, b, n) = (-60.0, 60.0, 240_000);
        let h = (b - a) / n as f64;
        let mut s = w.value(a, 1.0) + w.value(b, 1.0);
        for i in 1..n {
            let wt = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += wt * w.value(a + i as f64 * h, 1.0);
        }
        s * h / 3.0
    }

    #[test]
    fn constant_for_m2_a1() {
        // coth(1) = (e^2 + 1)/(e^2 - 1).
        let e2 = 1.0f64.exp().powi(2);
        let expected = HALF_SQRT_PI * (e2 + 1.0) / (e2 - 1.0);
        let c = burgers_constant(2.0, 1.0).unwrap();
        assert!((c - expected).abs() < 1e-15);
        assert!((c - 1.163_647_224_079).abs() < 1e-12);
        let w = DiffusionWave::new(2.0, 1.0).unwrap();
        assert!((simpson_mass(&w) - 2.0).abs() < 1e-11);
    }

    #[test]
    fn peak_value_at_origin() {
        let w = DiffusionWave::new(2.0, 1.0).unwrap();
        let c = w.constant();
        assert!((w.value(0.0, 1.0) - 1.0 / (2.0 * c)).abs() < 1e-15);
        assert!((w.value(0.0, 1.0) - 0.429_683_489_681).abs() < 1e-12);
    }

    #[test]
    fn constant_is_odd_in_mass_and_in_a() {
        for &(m, a) in &[(0.3, 1.0), (2.0, -0.5), (7.0, 1.3)] {
            let c = burgers_constant(m, a).unwrap();
            assert_eq!(burgers_constant(-m, a).unwrap(), -c);
            assert_eq!(burgers_constant(m, -a).unwrap(), -c);
            assert!(c.abs() > HALF_SQRT_PI);
            assert_eq!(c.signum(), (m * a).signum());
        }
    }

    #[test]
    fn small_mass_limit_is_heat_kernel() {
        let (m, a) = (1e-4, 1.0);
        let c = burgers_constant(m, a).unwrap();
        assert!((c * m * a / PI.sqrt() - 1.0).abs() < 1e-4);
        let w = DiffusionWave::new(m, a).unwrap();
        let h = HeatProfile::new(m);
        for i in -40..=40 {
            let x = i as f64 * 0.25;
            let (u, g) = (w.value(x, 1.0), h.value(x, 1.0));
            assert!((u - g).abs() <= 1e-4 * g, "x = {x}: {u} vs {g}");
        }
    }

    #[test]
    fn invalid_and_degenerate_arguments() {
        assert!(matches!(
            burgers_constant(0.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            burgers_constant(1.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            burgers_constant(80.0, 1.0),
            Err(Error::DegenerateProfile { .. })
        ));
        assert!(evaluate_heat(&HeatProfile::new(1.0), &Grid::new(1.0, 8).unwrap(), 0.0).is_err());
    }

    #[test]
    fn near_degenerate_wave_still_has_its_mass() {
        // |M A| = 40: C - sqrt(pi)/2 ~ 4e-18 relative, far below rounding of C.
        let w = DiffusionWave::new(20.0, 2.0);
        assert!(w.is_err());
        let w = DiffusionWave::new(20.0, 1.0).unwrap();
        assert!((simpson_mass(&w) - 20.0).abs() < 1e-8);
        let w = DiffusionWave::new(-20.0, 1.0).unwrap();
        assert!((simpson_mass(&w) + 20.0).abs() < 1e-8);
    }

    #[test]
    fn wave_mass_on_grid() {
        let w = DiffusionWave::new(2.0, 1.0).unwrap();
        for &t in &[0.25f64, 1.0, 4.0] {
            let g = Grid::new(20.0 * t.sqrt().max(1.0), 4096).unwrap();
            let u = evaluate_wave(&w, &g, t).unwrap();
            assert_eq!(u.time(), t);
            assert!((u.mass() - 2.0).abs() < 1e-8, "t = {t}: {}", u.mass());
        }
    }

    #[test]
    fn wave_is_self_similar() {
        let w = DiffusionWave::new(1.5, -0.7).unwrap();
        for &t in &[0.01, 0.5, 3.0, 40.0] {
            for i in -50..=50 {
                let x = i as f64 * 0.3;
                let lhs = w.value(x, t);
                let rhs = w.value(x / t.sqrt(), 1.0) / t.sqrt();
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300),
                    "t={t} x={x}"
                );
            }
        }
    }

    #[test]
    fn wave_positive_for_positive_mass() {
        for &(m, a) in &[(1.0, 1.0), (1.0, -1.0), (5.0, 3.0), (0.01, -2.0)] {
            let w = DiffusionWave::new(m, a).unwrap();
            for i in -200..=200 {
                let x = i as f64 * 0.1;
                assert!(w.value(x, 1.0) > 0.0, "M={m} A={a} x={x}");
            }
        }
    }

    #[test]
    fn wave_solves_viscous_burgers() {
        // Residual U_t - U_xx + A (U^2)_x by centred differences is O(h^2).
        let w = DiffusionWave::new(1.0, 1.0).unwrap();
        let a = w.a();
        let t = 1.3;
        let residual = |h: f64| {
            let mut worst = 0.0_f64;
            let mut x = -6.0;
            while x <= 6.0 {
                let u = |x: f64, t: f64| w.value(x, t);
                let ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
                let uxx = (u(x + h, t) - 2.0 * u(x, t) + u(x - h, t)) / (h * h);
                let flux = (u(x + h, t).powi(2) - u(x - h, t).powi(2)) / (2.0 * h);
                worst = worst.max((ut - uxx + a * flux).abs());
                x += 0.05;
            }
            worst
        };
        let (r1, r2) = (residual(1e-2), residual(5e-3));
        assert!(r1 < 1e-4, "{r1}");
        let ratio = r1 / r2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn weak_initial_condition() {
        // int U(x, t) phi(x) dx -> M phi(0) for a smooth bump phi.
        let w = DiffusionWave::new(1.0, 1.0).unwrap();
        let phi = |x: f64| {
            if x.abs() < 1.0 {
                (-1.0 / (1.0 - x * x)).exp()
            } else {
                0.0
            }
        };
        let target = w.mass() * phi(0.0);
        let mut last = f64::INFINITY;
        for &t in &[1e-2f64, 1e-3, 1e-4] {
            let s = t.sqrt();
            let v = quadrature::integrate(|x| w.value(x, t) * phi(x), -1.0, -40.0 * s, 1e-15)
                + quadrature::integrate(|x| w.value(x, t) * phi(x), -40.0 * s, 40.0 * s, 1e-15)
                + quadrature::integrate(|x| w.value(x, t) * phi(x), 40.0 * s, 1.0, 1e-15);
            let err = (v - target).abs();
            assert!(err < last, "t = {t}: {err} !< {last}");
            last = err;
        }
        assert!(last < 1e-3 * target);
    }

    #[test]
    fn heat_limit_as_a_vanishes() {
        let m = 1.0;
        let g = Grid::new(30.0, 8192).unwrap();
        let heat = evaluate_heat(&HeatProfile::new(m), &g, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for &a in &[1.0, 0.1, 0.01] {
            let u = evaluate_wave(&DiffusionWave::new(m, a).unwrap(), &g, 1.0).unwrap();
            let d = u.axpy(-1.0, &heat).unwrap().lp_norm(1.0).unwrap();
            assert!(d < last, "A = {a}");
            last = d;
        }
    }

    #[test]
    fn heat_profile_values() {
        let h = HeatProfile::new(1.0);
        assert!((h.value(0.0, 1.0 / (4.0 * PI)) - 1.0).abs() < 1e-15);
        for &t in &[0.1f64, 1.0, 9.0] {
            let g = Grid::new(15.0 * t.sqrt(), 2048).unwrap();
            let u = evaluate_heat(&h, &g, t).unwrap();
            assert!((u.mass() - 1.0).abs() < 1e-10);
            let peak = u.lp_norm(f64::INFINITY).unwrap();
            // Cell centres straddle 0, so the sampled max sits dx/2 off the peak.
            let h = 0.5 * g.dx();
            let expected = (4.0 * PI * t).powf(-0.5) * (-h * h / (4.0 * t)).exp();
            assert!((peak - expected).abs() < 1e-14 * expected);
        }
    }
}
