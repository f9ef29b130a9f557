//! Battery energy, ergotropy, charger work and the reservoir share, all
//! assembled from the battery moments alone.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::params::SystemParams;
use crate::quad::QuadratureSpec;
use crate::response::ResponseFunction;
use crate::variances::{covariance, moments, MomentSet};

/// Below this fraction of W_on the work is treated as zero and eta_W is left undefined.
pub const WORK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub t: f64,
    /// <H_B(t)>, ground-state energy included.
    pub e_stored: f64,
    pub de_battery: f64,
    pub ergotropy: f64,
    pub h_coupling: f64,
    pub w_on: f64,
    pub w_off: f64,
    pub w_total: f64,
    /// W - dE_B.
    pub de_reservoir: f64,
    pub eta_b: f64,
    /// None while no net work has been done (t = 0, or no coupling).
    pub eta_w: Option<f64>,
    pub det_sigma: f64,
}

impl EnergyLedger {
    /// Energy handed to the coupling term, dE_C = <H_C(t)> - W_on = -W.
    #[must_use]
    pub fn de_coupling(&self) -> f64 {
        self.h_coupling - self.w_on
    }
}

/// (<H_B>, dE_B).
#[must_use]
pub fn stored_energy(ms: &MomentSet, p: &SystemParams) -> (f64, f64) {
    let h = 0.5 * p.mass * ms.v2() + 0.5 * p.mass * p.omega0 * p.omega0 * ms.x2();
    (h, h - 0.5 * p.omega0)
}

/// Gaussian ergotropy <H_B> - w0 sqrt(det sigma), clamped at zero.
pub fn ergotropy(ms: &MomentSet, p: &SystemParams) -> Result<f64> {
    let det = covariance(ms, p)?.det();
    let (h, _) = stored_energy(ms, p);
    Ok((h - p.omega0 * det.sqrt()).max(0.0))
}

/// <H_C> from <v^2>, <x^2> and the second time derivative of <x^2>.
#[must_use]
pub fn coupling_energy(ms: &MomentSet, p: &SystemParams) -> f64 {
    let k = p.omega0 * p.omega0 + 0.5 * p.big_omega_sq();
    p.mass * (ms.v2() - 0.5 * ms.x2_ddot - k * ms.x2())
}

pub fn ledger_from_moments(ms: &MomentSet, p: &SystemParams) -> Result<EnergyLedger> {
    let cov = covariance(ms, p)?;
    let det = cov.det();
    let (e_stored, de_battery) = stored_energy(ms, p);
    let erg = (e_stored - p.omega0 * det.sqrt()).max(0.0);
    let h_coupling = coupling_energy(ms, p);
    let w_on = p.w_on();
    let w_off = -h_coupling;
    let w_total = w_on + w_off;
    let eta_w = if w_total > WORK_FLOOR * w_on {
        Some(erg / w_total)
    } else {
        None
    };
    Ok(EnergyLedger {
        t: ms.t,
        e_stored,
        de_battery,
        ergotropy: erg,
        h_coupling,
        w_on,
        w_off,
        w_total,
        de_reservoir: w_total - de_battery,
        eta_b: erg / e_stored,
        eta_w,
        det_sigma: det,
    })
}

pub fn ledger(rf: &ResponseFunction, t: f64, quad: &QuadratureSpec) -> Result<EnergyLedger> {
    ledger_from_moments(&moments(rf, t, quad)?, &rf.params)
}

/// Ledgers on a time grid, evaluated in parallel; output order follows `times`.
pub fn trace(rf: &ResponseFunction, times: &[f64], quad: &QuadratureSpec) -> Result<Vec<EnergyLedger>> {
    times.par_iter().map(|&t| ledger(rf, t, quad)).collect()
}

/// Interior local maxima of a sampled curve, refined by a parabola through
/// the three samples around each peak. Returns (t, y) pairs in order.
#[must_use]
pub fn local_maxima(ts: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        if ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] {
            let (t0, t1, t2) = (ts[i - 1], ts[i], ts[i + 1]);
            let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
            // vertex of the interpolating parabola
            let d0 = (y1 - y0) / (t1 - t0);
            let d1 = (y2 - y1) / (t2 - t1);
            let a = (d1 - d0) / (t2 - t0);
            if a < 0.0 {
                let tv = 0.5 * (t0 + t1) - d0 / (2.0 * a);
                let yv = y1 + d0 * (tv - t1) + a * (tv - t0) * (tv - t1);
                out.push((tv, yv.max(y1)));
            } else {
                out.push((t1, y1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::solve_characteristic;
    use approx::assert_relative_eq;

    fn sud() -> ResponseFunction {
        solve_characteristic(&SystemParams::natural(300.0, 2.0, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn start_of_charging() {
        let rf = sud();
        let l = ledger(&rf, 0.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(l.e_stored, 0.5, max_relative = 1e-12);
        assert!(l.de_battery.abs() < 1e-12);
        assert!(l.ergotropy.abs() < 1e-9);
        assert_relative_eq!(l.w_on, 150.0, max_relative = 1e-14);
        assert_relative_eq!(l.h_coupling, 150.0, max_relative = 1e-10);
        assert!(l.w_total.abs() < 1e-9 && l.de_reservoir.abs() < 1e-9);
        assert_eq!(l.eta_w, None);
        assert_relative_eq!(l.det_sigma, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn free_oscillator_has_no_coupling_energy() {
        let rf = solve_characteristic(&SystemParams::natural(0.0, 2.0, 0.3).unwrap()).unwrap();
        for &t in &[0.0, 0.4, 3.0] {
            let l = ledger(&rf, t, &QuadratureSpec::default()).unwrap();
            assert!(l.h_coupling.abs() < 1e-12);
            assert!(l.de_battery.abs() < 1e-12);
            assert_eq!(l.eta_w, None);
        }
    }

    #[test]
    fn diagonal_covariance_ergotropy() {
        let p = SystemParams::new(1.3, 0.7, 1.0, 1.0, 0.0).unwrap();
        let (x2, v2) = (0.9, 2.1);
        let ms = MomentSet::from_totals(1.0, x2, v2, 0.0, 0.0);
        let w0 = p.omega0;
        let m = p.mass;
        let expect = 0.5 * w0 * ((m * w0 * x2).sqrt() - (m * v2 / w0).sqrt()).powi(2);
        assert_relative_eq!(ergotropy(&ms, &p).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn heisenberg_violation_propagates() {
        let p = SystemParams::natural(1.0, 1.0, 0.0).unwrap();
        let ms = MomentSet::from_totals(0.0, 0.1, 0.1, 0.0, 0.0);
        assert!(ergotropy(&ms, &p).is_err());
    }

    #[test]
    fn short_time_charging_follows_envelope() {
        // dE_B ~ (Omega^2 / 4 w0) e^{-wD t} sin^2(Omega t) for strong coupling, low T
        let rf = sud();
        let p = rf.params;
        let t0 = std::f64::consts::FRAC_PI_2 / p.big_omega();
        let l = ledger(&rf, t0, &QuadratureSpec::default()).unwrap();
        let approx = p.w_on() * (-p.omega_d * t0).exp();
        assert_relative_eq!(l.de_battery, approx, max_relative = 0.05);
    }

    #[test]
    fn parabolic_peak_refinement() {
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| -(t - 2.34f64).powi(2)).collect();
        let m = local_maxima(&ts, &ys);
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m[0].0, 2.34, max_relative = 1e-12);
    }
}
