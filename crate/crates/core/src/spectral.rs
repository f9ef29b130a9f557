//! Per-mode split of the coupling and reservoir energies on the discrete
//! bath grid, for a battery that follows the continuum dynamics.
//!
//! With z_k = xdot_k + i w_k x_k the mode energy is (m_k/2)|z_k|^2 and
//! z_k(t) = e^{i w_k t} z_k(0) + (c_k/m_k) int_0^t e^{i w_k (t-s)} x(s) ds,
//! so everything reduces to root sums and one frequency integral per mode.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cmath::window;
use crate::energetics::{ledger_from_moments, EnergyLedger};
use crate::error::{Error, Result};
use crate::kernels::{noise_kernel_symmetric, thermal_factor, BathDiscretization};
use crate::quad::{integrate_half_line_coupled, QuadratureSpec};
use crate::response::{ResponseFunction, RESIDUE_TOL};
use crate::variances::{feature_breaks, frequency_scale, moments, transfer};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Absolute accuracy of a frequency integral, as a fraction of rel_tol times
/// the closed-form term it cancels against.
const CANCEL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeEnergies {
    pub t: f64,
    pub omega_k: f64,
    /// Symmetrized <x x_k>.
    pub x_xk: f64,
    pub de_coupling: f64,
    pub de_reservoir: f64,
    /// The thermal-history part of dE_R (the piece with the linear-in-t term).
    pub reservoir_thermal: f64,
}

/// Everything about (t, k) that does not depend on the integration frequency.
struct ModeContext<'a> {
    rf: &'a ResponseFunction,
    t: f64,
    wk: f64,
    phase_k: Complex64,
    decays: [Complex64; 3],
    /// g(lambda_j + i w_k, t)
    g_up: [Complex64; 3],
    /// g(lambda_j - i w_k, t)
    g_down: [Complex64; 3],
    /// E(lambda_j) = int_0^t sin(w_k (t - s)) e^{-lambda_j s} ds
    e_root: [Complex64; 3],
}

impl<'a> ModeContext<'a> {
    fn new(rf: &'a ResponseFunction, t: f64, wk: f64) -> Self {
        let phase_k = Complex64::new(0.0, wk * t).exp();
        let mut ctx = Self {
            rf,
            t,
            wk,
            phase_k,
            decays: rf.decays(t),
            g_up: [Complex64::new(0.0, 0.0); 3],
            g_down: [Complex64::new(0.0, 0.0); 3],
            e_root: [Complex64::new(0.0, 0.0); 3],
        };
        for j in 0..3 {
            let l = rf.roots[j];
            ctx.g_up[j] = window(l + I * wk, t);
            ctx.g_down[j] = window(l - I * wk, t);
            ctx.e_root[j] = ctx.sine_window(l);
        }
        ctx
    }

    /// E(mu) = int_0^t sin(w_k (t - s)) e^{-mu s} ds.
    fn sine_window(&self, mu: Complex64) -> Complex64 {
        let up = self.phase_k * window(mu + I * self.wk, self.t);
        let down = self.phase_k.conj() * window(mu - I * self.wk, self.t);
        (up - down) / (2.0 * I)
    }

    /// Integrands at real w >= 0: the thermal <x x_k> piece and the thermal
    /// |int e^{-i w_k s} x(s) ds|^2 piece (both signs of w folded in).
    fn integrand(&self, omega: f64) -> [f64; 2] {
        let rf = self.rf;
        let l_s = noise_kernel_symmetric(omega, &rf.params);
        if l_s == 0.0 {
            return [0.0, 0.0];
        }
        let t = self.t;
        let phase = Complex64::new(0.0, omega * t).exp();
        let (a, _) = transfer(rf, omega, t, &self.decays, phase);

        let g_sum = window(I * (self.wk + omega), t);
        let g_diff = window(I * (self.wk - omega), t);
        // E(-i w) from the two windows above
        let e_w = (self.phase_k * g_diff - self.phase_k.conj() * g_sum.conj()) / (2.0 * I);

        let mut s = Complex64::new(0.0, 0.0);
        let mut d_plus = Complex64::new(0.0, 0.0);
        let mut d_minus = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            let w = rf.weights[j];
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            let l = rf.roots[j];
            let rp = w / (l + I * omega);
            let rm = w / (l - I * omega);
            s += rp * (e_w - self.e_root[j]);
            d_plus += rm * (g_sum - self.g_up[j]);
            d_minus += rp * (g_diff - self.g_up[j]);
        }
        let cross = (phase.conj() * a * s).re;
        [l_s * cross, l_s * (d_plus.norm_sqr() + d_minus.norm_sqr())]
    }

    /// d/dt of the |...|^2 integrand, for the secular check.
    fn integrand_rate(&self, omega: f64) -> f64 {
        let rf = self.rf;
        let l_s = noise_kernel_symmetric(omega, &rf.params);
        if l_s == 0.0 {
            return 0.0;
        }
        let t = self.t;
        let phase = Complex64::new(0.0, omega * t).exp();
        let (a, _) = transfer(rf, omega, t, &self.decays, phase);
        let g_sum = window(I * (self.wk + omega), t);
        let g_diff = window(I * (self.wk - omega), t);
        let mut d_plus = Complex64::new(0.0, 0.0);
        let mut d_minus = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            let w = rf.weights[j];
            let l = rf.roots[j];
            d_plus += w / (l - I * omega) * (g_sum - self.g_up[j]);
            d_minus += w / (l + I * omega) * (g_diff - self.g_up[j]);
        }
        // dD(+-w)/dt = e^{-i (w_k +- w) t} A(+-w, t), with A(-w) = conj A(w)
        let dp = self.phase_k.conj() * phase.conj() * a;
        let dm = self.phase_k.conj() * phase * a.conj();
        l_s * 2.0 * ((d_plus.conj() * dp).re + (d_minus.conj() * dm).re)
    }
}

fn real_part(z: Complex64, scale: f64, context: &'static str) -> Result<f64> {
    if z.im.abs() > RESIDUE_TOL * scale.max(z.re.abs()).max(1e-300) {
        return Err(Error::Residue { residue: z.im, context });
    }
    Ok(z.re)
}

fn check_mode(bath: &BathDiscretization, k: usize) -> Result<()> {
    if k >= bath.n_modes {
        return Err(Error::InvalidParams(format!("mode index {k} out of range (N = {})", bath.n_modes)));
    }
    Ok(())
}

/// dE_C and dE_R for mode `k` (0-based) at time t, given <x^2(t)>.
pub fn mode_energies_with_x2(
    rf: &ResponseFunction,
    bath: &BathDiscretization,
    t: f64,
    k: usize,
    x2: f64,
    quad: &QuadratureSpec,
) -> Result<ModeEnergies> {
    check_mode(bath, k)?;
    let p = rf.params;
    let (m, w0) = (p.mass, p.omega0);
    let wk = bath.mode_freqs[k];
    let mk = bath.mode_masses[k];
    let ck = bath.couplings[k];
    let static_w = 0.5 * bath.static_weight(k);
    if t == 0.0 || ck == 0.0 {
        return Ok(ModeEnergies {
            t,
            omega_k: wk,
            x_xk: 0.0,
            de_coupling: static_w * (x2 - 0.5 / (m * w0)),
            de_reservoir: 0.0,
            reservoir_thermal: 0.0,
        });
    }
    let ctx = ModeContext::new(rf, t, wk);
    let coth = thermal_factor(wk, p.temperature);
    let [chi, chi_dot, _, _] = rf.chi_all(t)?;

    // <x x_k>: initial-state part, direct thermal part, and the frequency integral
    let mut sv = Complex64::new(0.0, 0.0);
    let mut sx = Complex64::new(0.0, 0.0);
    let mut a_k = Complex64::new(0.0, 0.0);
    let mut b_k = Complex64::new(0.0, 0.0);
    let mut lin = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        let (w, l) = (rf.weights[j], rf.roots[j]);
        sv -= l * w * ctx.e_root[j];
        sx += w * ctx.e_root[j];
        let g_down = ctx.g_down[j];
        a_k += w * g_down;
        b_k += l * w * g_down;
        lin += w * (t - ctx.g_up[j]) / (l + I * wk);
    }
    let hom = ck / (mk * wk) * (chi_dot / (2.0 * m * w0) * real_part(sv, 1.0, "mode sine sum")?
        + chi * w0 / (2.0 * m) * real_part(sx, 1.0, "mode sine sum")?);
    let cutoff = quad.cutoff_factor * frequency_scale(rf);
    let mut breaks = feature_breaks(rf);
    breaks.push(wk);
    // the frequency integrals cancel against th1 and i1, so judge them on that scale
    let pref_th2 = ck / (mk * wk) / (std::f64::consts::PI * m * m);
    let pref_i2 = ck * ck / (2.0 * mk) / (2.0 * std::f64::consts::PI * m * m);
    let th1 = ck * coth / (2.0 * m * mk * wk) * a_k.re;
    let i1 = ck * ck * coth / (2.0 * m * mk) * lin.im;
    let floor = [
        CANCEL_FLOOR * quad.rel_tol * th1.abs() / pref_th2,
        CANCEL_FLOOR * quad.rel_tol * i1.abs() / pref_i2,
    ];
    let r = integrate_half_line_coupled(&|w: f64| ctx.integrand(w), cutoff, &breaks, quad, floor, None)?;
    let th2 = pref_th2 * r.value[0];
    let x_xk = hom + th1 + th2;
    let de_coupling = -ck * x_xk + static_w * (x2 - 0.5 / (m * w0));

    let hom_r = ck * ck / (2.0 * mk) * (b_k.norm_sqr() / (2.0 * m * w0) + w0 / (2.0 * m) * a_k.norm_sqr());
    let i2 = pref_i2 * r.value[1];
    Ok(ModeEnergies {
        t,
        omega_k: wk,
        x_xk,
        de_coupling,
        de_reservoir: hom_r + i1 + i2,
        reservoir_thermal: i1 + i2,
    })
}

pub fn mode_energies(
    rf: &ResponseFunction,
    bath: &BathDiscretization,
    t: f64,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<ModeEnergies> {
    let x2 = moments(rf, t, quad)?.x2();
    mode_energies_with_x2(rf, bath, t, k, x2, quad)
}

pub fn mode_coupling_energy(
    rf: &ResponseFunction,
    bath: &BathDiscretization,
    t: f64,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(mode_energies(rf, bath, t, k, quad)?.de_coupling)
}

pub fn mode_reservoir_energy(
    rf: &ResponseFunction,
    bath: &BathDiscretization,
    t: f64,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(mode_energies(rf, bath, t, k, quad)?.de_reservoir)
}

/// Time derivatives of the two thermal-history pieces of a mode energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecularRate {
    /// From the closed-form piece; tends to the constant secular slope.
    pub linear: f64,
    /// From the frequency integral; tends to minus that slope.
    pub integral: f64,
}

impl SecularRate {
    #[must_use]
    pub fn total(&self) -> f64 {
        self.linear + self.integral
    }
}

/// d/dt (I1 + I2) for mode k: the time-dependent thermal part of the mode
/// energy whose linear growth must cancel at long times.
pub fn secular_rate(
    rf: &ResponseFunction,
    bath: &BathDiscretization,
    t: f64,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<SecularRate> {
    check_mode(bath, k)?;
    let p = rf.params;
    let m = p.mass;
    let wk = bath.mode_freqs[k];
    let mk = bath.mode_masses[k];
    let ck = bath.couplings[k];
    let coth = thermal_factor(wk, p.temperature);
    let ctx = ModeContext::new(rf, t, wk);
    // d/dt I1 = pref * Im int_0^t chi(s) e^{-i w_k s} ds
    let mut a_conj = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        a_conj += rf.weights[j] * ctx.g_up[j];
    }
    let d_i1 = ck * ck * coth / (2.0 * m * mk) * a_conj.im;
    let cutoff = quad.cutoff_factor * frequency_scale(rf);
    let mut breaks = feature_breaks(rf);
    breaks.push(wk);
    let pref = ck * ck / (2.0 * mk) / (2.0 * std::f64::consts::PI * m * m);
    let floor = [CANCEL_FLOOR * quad.rel_tol * d_i1.abs() / pref];
    let r = integrate_half_line_coupled(&|w: f64| [ctx.integrand_rate(w)], cutoff, &breaks, quad, floor, None)?;
    let d_i2 = pref * r.value[0];
    Ok(SecularRate { linear: d_i1, integral: d_i2 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralGrid {
    pub bath: BathDiscretization,
    pub times: Vec<f64>,
    /// [time][mode], energy per unit bath spacing.
    pub de_c: Vec<Vec<f64>>,
    pub de_r: Vec<Vec<f64>>,
    /// Sum over modes (unnormalized) per time.
    pub sum_c: Vec<f64>,
    pub sum_r: Vec<f64>,
    /// Battery-side ledger at each time, the reference for the sum rules.
    pub ledgers: Vec<EnergyLedger>,
}

/// Sum-rule check at one time. Mode sums are compared with dE_C = -W and
/// dE_R = W - dE_B from the battery moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRule {
    pub t: f64,
    pub sum_c: f64,
    pub sum_r: f64,
    pub target_c: f64,
    pub target_r: f64,
}

impl SumRule {
    #[must_use]
    pub fn residual_c(&self) -> f64 {
        relative(self.sum_c, self.target_c)
    }

    #[must_use]
    pub fn residual_r(&self) -> f64 {
        relative(self.sum_r, self.target_r)
    }
}

fn relative(sum: f64, target: f64) -> f64 {
    if target == 0.0 {
        sum.abs()
    } else {
        (sum - target) / target.abs()
    }
}

impl SpectralGrid {
    /// Sum rule over the full bath.
    #[must_use]
    pub fn sum_rule(&self, i: usize) -> SumRule {
        self.partial_sum_rule(i, self.bath.n_modes)
    }

    /// Sum rule using only the lowest `modes` modes (a narrower bath with the same spacing).
    #[must_use]
    pub fn partial_sum_rule(&self, i: usize, modes: usize) -> SumRule {
        let d = self.bath.delta;
        let modes = modes.min(self.bath.n_modes);
        let l = &self.ledgers[i];
        SumRule {
            t: self.times[i],
            sum_c: self.de_c[i][..modes].iter().sum::<f64>() * d,
            sum_r: self.de_r[i][..modes].iter().sum::<f64>() * d,
            target_c: l.de_coupling(),
            target_r: l.de_reservoir,
        }
    }

    /// Removes the 1/span tail by combining the full bath with its lower half:
    /// 2 S(N) - S(N/2).
    #[must_use]
    pub fn span_extrapolated(&self, i: usize) -> SumRule {
        let full = self.sum_rule(i);
        let half = self.partial_sum_rule(i, self.bath.n_modes / 2);
        SumRule {
            sum_c: 2.0 * full.sum_c - half.sum_c,
            sum_r: 2.0 * full.sum_r - half.sum_r,
            ..full
        }
    }
}

/// Fills the grid in parallel over (time, mode); rows come back in the
/// order of `times`.
pub fn spectral_grid(
    rf: &ResponseFunction,
    bath: &BathDiscretization,
    times: &[f64],
    quad: &QuadratureSpec,
) -> Result<SpectralGrid> {
    if times.is_empty() {
        return Err(Error::InvalidParams("spectral grid needs at least one time".into()));
    }
    let (x2s, ledgers): (Vec<f64>, Vec<EnergyLedger>) = times
        .par_iter()
        .map(|&t| {
            let ms = moments(rf, t, quad)?;
            Ok((ms.x2(), ledger_from_moments(&ms, &rf.params)?))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let n = bath.n_modes;
    let cells: Vec<ModeEnergies> = (0..times.len() * n)
        .into_par_iter()
        .map(|idx| {
            let (i, k) = (idx / n, idx % n);
            mode_energies_with_x2(rf, bath, times[i], k, x2s[i], quad)
        })
        .collect::<Result<_>>()?;
    let mut de_c = Vec::with_capacity(times.len());
    let mut de_r = Vec::with_capacity(times.len());
    let mut sum_c = Vec::with_capacity(times.len());
    let mut sum_r = Vec::with_capacity(times.len());
    for row in cells.chunks(n) {
        de_c.push(row.iter().map(|c| c.de_coupling / bath.delta).collect());
        de_r.push(row.iter().map(|c| c.de_reservoir / bath.delta).collect());
        sum_c.push(row.iter().map(|c| c.de_coupling).sum());
        sum_r.push(row.iter().map(|c| c.de_reservoir).sum());
    }
    Ok(SpectralGrid {
        bath: bath.clone(),
        times: times.to_vec(),
        de_c,
        de_r,
        sum_c,
        sum_r,
        ledgers,
    })
}
