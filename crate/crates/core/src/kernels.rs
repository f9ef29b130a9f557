//! Drude-Ohmic spectral density, memory kernel, symmetrized noise spectrum
//! and the discrete bath used by the oracle and the per-mode decomposition.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Below this |omega / T| the thermal factor is replaced by its series.
const SMALL_BETA_OMEGA: f64 = 1e-6;

/// J(w) = m gamma0 w wD^2 / (w^2 + wD^2). Odd in w.
#[must_use]
pub fn spectral_density(omega: f64, p: &SystemParams) -> f64 {
    let wd2 = p.omega_d * p.omega_d;
    p.mass * p.gamma0 * omega * wd2 / (omega * omega + wd2)
}

/// gamma(t) = gamma0 wD exp(-wD t), t >= 0.
#[must_use]
pub fn damping_kernel(t: f64, p: &SystemParams) -> f64 {
    p.big_omega_sq() * (-p.omega_d * t).exp()
}

pub fn damping_kernel_laplace(lambda: Complex64, p: &SystemParams) -> Result<Complex64> {
    let den = lambda + p.omega_d;
    if den.norm() <= 1e-14 * p.omega_d {
        return Err(Error::Pole(lambda.re));
    }
    Ok(p.big_omega_sq() / den)
}

/// coth(w / 2T); sign(w) at T = 0. Not defined at w = 0 for T > 0.
#[must_use]
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return omega.signum();
    }
    1.0 / (0.5 * omega / temperature).tanh()
}

/// Symmetrized noise spectrum J(w) coth(w / 2T), even in w.
#[must_use]
pub fn noise_kernel_symmetric(omega: f64, p: &SystemParams) -> f64 {
    let t = p.temperature;
    if t == 0.0 {
        return spectral_density(omega, p) * omega.signum();
    }
    let x = omega / t;
    if x.abs() < SMALL_BETA_OMEGA {
        // J(w) coth(x/2) with coth(x/2) = 2/x + x/6 + O(x^3)
        let wd2 = p.omega_d * p.omega_d;
        let lorentz = p.mass * p.gamma0 * wd2 / (omega * omega + wd2);
        return lorentz * (2.0 * t + omega * omega / (6.0 * t));
    }
    spectral_density(omega, p) / (0.5 * x).tanh()
}

/// Evenly spaced bath, w_k = k delta for k = 1..=N, with couplings that
/// reproduce the Drude spectral density in the continuum limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathDiscretization {
    pub delta: f64,
    pub n_modes: usize,
    pub mode_freqs: Vec<f64>,
    pub mode_masses: Vec<f64>,
    pub couplings: Vec<f64>,
    /// Sum of c_k^2 / (m m_k w_k^2); the finite-N counterterm frequency squared.
    pub counterterm: f64,
}

impl BathDiscretization {
    /// c_k^2 / (m_k w_k^2) for mode index k (0-based).
    #[must_use]
    pub fn static_weight(&self, k: usize) -> f64 {
        let c = self.couplings[k];
        let w = self.mode_freqs[k];
        c * c / (self.mode_masses[k] * w * w)
    }

    #[must_use]
    pub fn span(&self) -> f64 {
        self.delta * self.n_modes as f64
    }
}

pub fn build_bath(p: &SystemParams, delta: f64, n_modes: usize) -> Result<BathDiscretization> {
    p.validate()?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParams(format!("bath spacing must be > 0, got {delta}")));
    }
    if n_modes == 0 {
        return Err(Error::InvalidParams("bath needs at least one mode".into()));
    }
    let wd2 = p.omega_d * p.omega_d;
    let mode_freqs: Vec<f64> = (1..=n_modes).map(|k| k as f64 * delta).collect();
    let mode_masses = vec![p.mass; n_modes];
    let couplings: Vec<f64> = mode_freqs
        .iter()
        .zip(&mode_masses)
        .map(|(&w, &mk)| {
            w * (2.0 * p.gamma0 * p.mass * mk * delta / std::f64::consts::PI * wd2 / (wd2 + w * w)).sqrt()
        })
        .collect();
    let counterterm = mode_freqs
        .iter()
        .zip(&mode_masses)
        .zip(&couplings)
        .map(|((&w, &mk), &c)| c * c / (p.mass * mk * w * w))
        .sum();
    Ok(BathDiscretization {
        delta,
        n_modes,
        mode_freqs,
        mode_masses,
        couplings,
        counterterm,
    })
}

/// (2 gamma0 / pi) wD arctan(W / wD): the counterterm of a continuum bath cut at W.
#[must_use]
pub fn truncated_counterterm(p: &SystemParams, cutoff: f64) -> f64 {
    2.0 * p.gamma0 / std::f64::consts::PI * p.omega_d * (cutoff / p.omega_d).atan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn strong_example() -> SystemParams {
        SystemParams::natural(300.0, 2.0, 0.1).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let p = strong_example();
        assert_eq!(spectral_density(0.0, &p), 0.0);
        assert_relative_eq!(spectral_density(2.0, &p), 300.0, max_relative = 1e-15);
        let w = 1e6;
        assert_relative_eq!(spectral_density(w, &p), 300.0 * 4.0 / w, max_relative = 1e-10);
        assert_relative_eq!(spectral_density(-3.0, &p), -spectral_density(3.0, &p));
    }

    #[test]
    fn damping_kernel_values() {
        let p = strong_example();
        assert_relative_eq!(damping_kernel(0.0, &p), 600.0);
        let g0 = damping_kernel_laplace(Complex64::new(0.0, 0.0), &p).unwrap();
        assert_relative_eq!(g0.re, 300.0);
        assert!(damping_kernel_laplace(Complex64::new(-2.0, 0.0), &p).is_err());
        for &w in &[0.3, 2.0, 17.0] {
            let g = damping_kernel_laplace(Complex64::new(0.0, -w), &p).unwrap();
            assert_relative_eq!(g.re, spectral_density(w, &p) / (p.mass * w), max_relative = 1e-13);
        }
    }

    #[test]
    fn noise_kernel_limits() {
        let p = strong_example();
        assert_relative_eq!(noise_kernel_symmetric(0.0, &p), 60.0, max_relative = 1e-12);
        assert_relative_eq!(noise_kernel_symmetric(1e-9, &p), 60.0, max_relative = 1e-9);
        let cold = p.with_temperature(0.0);
        assert_relative_eq!(noise_kernel_symmetric(2.0, &cold), 300.0);
        assert_relative_eq!(noise_kernel_symmetric(-2.0, &cold), 300.0);
        // continuity across the series switch
        let a = noise_kernel_symmetric(0.99e-6 * 0.1, &p);
        let b = noise_kernel_symmetric(1.01e-6 * 0.1, &p);
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    #[test]
    fn single_mode_counterterm() {
        let p = strong_example();
        let b = build_bath(&p, 2.0, 1).unwrap();
        assert_relative_eq!(b.counterterm, 600.0 / std::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn decoupled_bath() {
        let p = SystemParams::natural(0.0, 2.0, 0.1).unwrap();
        let b = build_bath(&p, 0.1, 10).unwrap();
        assert!(b.couplings.iter().all(|&c| c == 0.0));
        assert_eq!(b.counterterm, 0.0);
    }

    #[test]
    fn counterterm_tracks_arctan_form() {
        let p = strong_example();
        for &(delta, n) in &[(0.1, 1000usize), (0.05, 2000), (0.025, 4000)] {
            let b = build_bath(&p, delta, n).unwrap();
            let cont = truncated_counterterm(&p, delta * n as f64);
            // right Riemann sum of a decreasing integrand: error below delta * f(0)
            let bound = delta * 2.0 * p.gamma0 / std::f64::consts::PI;
            assert!(b.counterterm <= cont && cont - b.counterterm <= bound);
            assert!(b.counterterm <= p.big_omega_sq());
        }
    }

    #[test]
    fn counterterm_approaches_continuum() {
        let p = strong_example();
        let b = build_bath(&p, 0.01, 200_000).unwrap();
        // deficit = truncation (2 gamma0/pi) wD^2 / W plus right-sum error ~ delta (gamma0/pi)
        let bound = 2.0 * p.gamma0 / std::f64::consts::PI * (p.omega_d.powi(2) / b.span() + 0.5 * b.delta);
        let deficit = p.big_omega_sq() - b.counterterm;
        assert!(deficit > 0.0 && deficit < 1.05 * bound, "deficit {deficit} bound {bound}");
    }
}
