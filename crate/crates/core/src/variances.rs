//! Second moments of the battery coordinate. The homogeneous part comes
//! from the initial battery state through chi; the thermal part from the
//! bath noise through a frequency integral.

use num_complex::Complex64;
use serde::Serialize;

use crate::cmath::window_with;
use crate::error::{Error, Result};
use crate::kernels::{noise_kernel_symmetric, thermal_factor};
use crate::params::SystemParams;
use crate::quad::{integrate_coupled, integrate_half_line, integrate_half_line_coupled, QuadratureSpec};
use crate::response::{chi_laplace, ResponseFunction};

/// Numerical slack on det sigma_B >= 1/4 before a violation is reported.
pub const HEISENBERG_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub t: f64,
    pub x2_h: f64,
    pub x2_th: f64,
    pub v2_h: f64,
    pub v2_th: f64,
    /// Symmetrized <x xdot> = (1/2) d/dt <x^2>.
    pub xv_h: f64,
    pub xv_th: f64,
    /// d^2/dt^2 <x^2>, total.
    pub x2_ddot: f64,
}

impl MomentSet {
    #[must_use]
    pub fn x2(&self) -> f64 {
        self.x2_h + self.x2_th
    }
    #[must_use]
    pub fn v2(&self) -> f64 {
        self.v2_h + self.v2_th
    }
    #[must_use]
    pub fn xv(&self) -> f64 {
        self.xv_h + self.xv_th
    }

    /// Build from totals only (used by approximate and oracle routes).
    #[must_use]
    pub fn from_totals(t: f64, x2: f64, v2: f64, xv: f64, x2_ddot: f64) -> Self {
        Self {
            t,
            x2_h: x2,
            x2_th: 0.0,
            v2_h: v2,
            v2_th: 0.0,
            xv_h: xv,
            xv_th: 0.0,
            x2_ddot,
        }
    }
}

/// Moments of one source (initial state or bath) at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialMoments {
    pub x2: f64,
    pub v2: f64,
    pub xv: f64,
    pub x2_ddot: f64,
}

pub fn homogeneous_moments(rf: &ResponseFunction, t: f64) -> Result<PartialMoments> {
    let p = &rf.params;
    let [c0, c1, c2, c3] = rf.chi_all(t)?;
    let a = p.omega0 / (2.0 * p.mass);
    let b = 1.0 / (2.0 * p.mass * p.omega0);
    Ok(PartialMoments {
        x2: a * c0 * c0 + b * c1 * c1,
        v2: a * c1 * c1 + b * c2 * c2,
        xv: a * c0 * c1 + b * c1 * c2,
        x2_ddot: 2.0 * a * (c1 * c1 + c0 * c2) + 2.0 * b * (c2 * c2 + c1 * c3),
    })
}

/// Largest frequency scale in the problem; sets the initial integration cutoff.
#[must_use]
pub fn frequency_scale(rf: &ResponseFunction) -> f64 {
    let p = &rf.params;
    let nu = rf.roots.iter().map(|r| r.im.abs()).fold(0.0, f64::max);
    p.omega_d.max(p.big_omega()).max(p.temperature).max(nu).max(p.omega0)
}

/// Interior break points at the features of the integrands.
#[must_use]
pub fn feature_breaks(rf: &ResponseFunction) -> Vec<f64> {
    let p = &rf.params;
    let mut b = vec![p.omega0, p.omega_d];
    if p.temperature > 0.0 {
        b.push(p.temperature);
    }
    if let Some((gamma, nu)) = rf.pair() {
        let w = gamma.max(1e-3 * nu);
        for k in [-8.0, -2.0, 0.0, 2.0, 8.0] {
            let x = nu + k * w;
            if x > 0.0 {
                b.push(x);
            }
        }
    }
    for r in rf.roots {
        if r.im == 0.0 && r.re > 0.0 {
            b.push(r.re);
        }
    }
    b
}

/// A(w, t) = int_0^t chi(s) e^{i w s} ds and the same with lambda_j chi_j
/// weights (which is -int_0^t chi'(s) e^{i w s} ds).
#[inline]
pub(crate) fn transfer(
    rf: &ResponseFunction,
    omega: f64,
    t: f64,
    decays: &[Complex64; 3],
    phase: Complex64,
) -> (Complex64, Complex64) {
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        let w = rf.weights[j];
        if w.re == 0.0 && w.im == 0.0 {
            continue;
        }
        let z = rf.roots[j] - Complex64::new(0.0, omega);
        let g = window_with(z, t, decays[j] * phase);
        a += w * g;
        b += w * rf.roots[j] * g;
    }
    (a, b)
}

/// coth(z) for Re z > 0 without overflow.
#[inline]
pub(crate) fn coth_right(z: Complex64) -> Complex64 {
    let e = (-2.0 * z).exp();
    (1.0 + e) / (1.0 - e)
}

/// Noise spectrum continued to complex frequency with Re w > 0.
#[inline]
pub(crate) fn noise_kernel_complex(omega: Complex64, p: &SystemParams) -> Complex64 {
    let wd2 = p.omega_d * p.omega_d;
    let j = p.mass * p.gamma0 * omega * wd2 / (omega * omega + wd2);
    if p.temperature == 0.0 {
        j
    } else {
        j * coth_right(omega / (2.0 * p.temperature))
    }
}

/// Pieces of the thermal integrand at one time. Writing
/// A(w, t) = A0(w) - A1(w) e^{i w t}, every component is a smooth part plus
/// Re[osc(w) e^{i w t}], and osc continues analytically into Re w > nu.
struct ThermalPieces<'a> {
    rf: &'a ResponseFunction,
    p: SystemParams,
    t: f64,
    chi: f64,
    chi_dot: f64,
    decays: [Complex64; 3],
}

impl<'a> ThermalPieces<'a> {
    fn new(rf: &'a ResponseFunction, t: f64) -> Result<Self> {
        let [c0, c1, _, _] = rf.chi_all(t)?;
        Ok(Self {
            rf,
            p: rf.params,
            t,
            chi: c0,
            chi_dot: c1,
            decays: rf.decays(t),
        })
    }

    /// Stable direct form for real w.
    fn direct(&self, omega: f64) -> [f64; 4] {
        let l = noise_kernel_symmetric(omega, &self.p);
        let phase = Complex64::new(0.0, omega * self.t).exp();
        let (a, b) = transfer(self.rf, omega, self.t, &self.decays, phase);
        let da = self.chi * phase;
        let dda = Complex64::new(self.chi_dot, omega * self.chi) * phase;
        [
            l * a.norm_sqr(),
            l * b.norm_sqr(),
            l * (a.conj() * da).re,
            2.0 * l * (self.chi * self.chi + (a.conj() * dda).re),
        ]
    }

    /// sums over roots of (1, e^{-lambda t}) x (chi_j, lambda_j chi_j) / (lambda_j -/+ i w)
    fn sums(&self, omega: Complex64) -> [[Complex64; 4]; 2] {
        let iw = Complex64::new(0.0, 1.0) * omega;
        let mut minus = [Complex64::new(0.0, 0.0); 4];
        let mut plus = [Complex64::new(0.0, 0.0); 4];
        for j in 0..3 {
            let w = self.rf.weights[j];
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            let l = self.rf.roots[j];
            let rm = 1.0 / (l - iw);
            let rp = 1.0 / (l + iw);
            let d = self.decays[j];
            minus[0] += w * rm;
            minus[1] += w * d * rm;
            minus[2] += w * l * rm;
            minus[3] += w * l * d * rm;
            plus[0] += w * rp;
            plus[1] += w * d * rp;
            plus[2] += w * l * rp;
            plus[3] += w * l * d * rp;
        }
        [minus, plus]
    }

    /// Smooth part for real w.
    fn smooth(&self, omega: f64) -> [f64; 4] {
        let l = noise_kernel_symmetric(omega, &self.p);
        let [m, pl] = self.sums(Complex64::new(omega, 0.0));
        let drive = Complex64::new(self.chi_dot, omega * self.chi);
        [
            l * (m[0].norm_sqr() + m[1].norm_sqr()),
            l * (m[2].norm_sqr() + m[3].norm_sqr()),
            -l * self.chi * pl[1].re,
            2.0 * l * (self.chi * self.chi - (pl[1] * drive).re),
        ]
    }

    /// Coefficients of e^{i w t}, valid for complex w off the poles.
    fn oscillating(&self, omega: Complex64) -> [Complex64; 4] {
        let l = noise_kernel_complex(omega, &self.p);
        let [m, pl] = self.sums(omega);
        let drive = self.chi_dot + Complex64::new(0.0, 1.0) * omega * self.chi;
        [
            -2.0 * l * pl[0] * m[1],
            -2.0 * l * pl[2] * m[3],
            l * self.chi * pl[0],
            2.0 * l * pl[0] * drive,
        ]
    }
}

/// Frequency beyond which the oscillating parts are integrated along a
/// vertical contour: right of every singularity, and late enough that the
/// split does not cancel badly at short times.
fn contour_start(rf: &ResponseFunction, t: f64) -> f64 {
    let p = &rf.params;
    let pole = rf.pair().map_or(0.0, |(g, nu)| (2.0 * nu).max(nu + 20.0 * g));
    pole.max(2.0 * p.omega0).max(2.0 * p.omega_d).max(100.0 / t)
}

pub fn thermal_moments(rf: &ResponseFunction, t: f64, quad: &QuadratureSpec) -> Result<PartialMoments> {
    let p = rf.params;
    if t == 0.0 || p.gamma0 == 0.0 {
        return Ok(PartialMoments {
            x2: 0.0,
            v2: 0.0,
            xv: 0.0,
            x2_ddot: 0.0,
        });
    }
    let pieces = ThermalPieces::new(rf, t)?;
    let wc = contour_start(rf, t);
    let breaks = feature_breaks(rf);

    // x v and the second derivative can be small by cancellation; judge
    // them against the sizes of <x^2> and <v^2>.
    let stiff = p.omega0 * p.omega0 + p.big_omega_sq();
    let couple = move |m: &[f64; 4]| -> [f64; 4] {
        let x = m[0].max(m[1] / stiff);
        let v = m[1].max(m[0] * stiff);
        [x, v, (x * v).sqrt(), v]
    };
    let near = integrate_coupled(
        &|w: f64| pieces.direct(w),
        0.0,
        wc,
        &breaks,
        quad.rel_tol,
        [0.0; 4],
        Some(&couple),
        quad.max_intervals,
    )?;
    let m = couple(&std::array::from_fn(|d| near.value[d].abs().max(1e-3 * near.abs_value[d])));
    let floor: [f64; 4] = std::array::from_fn(|d| 1e-2 * quad.rel_tol * m[d]);

    // smooth remainder on the real axis
    let shifted = |u: f64| pieces.smooth(wc + u);
    let far_cut = (quad.cutoff_factor * frequency_scale(rf) - wc).max(wc);
    let tail = integrate_half_line_coupled(&shifted, far_cut, &[], quad, floor, None)?;

    // oscillating remainder along w = wc + i y
    let e0 = Complex64::new(0.0, wc * t).exp();
    let vertical = |y: f64| -> [f64; 4] {
        let w = Complex64::new(wc, y);
        let o = pieces.oscillating(w);
        let f = Complex64::new(0.0, 1.0) * e0 * (-y * t).exp();
        std::array::from_fn(|d| (o[d] * f).re)
    };
    let y_cut = wc.max(10.0 / t);
    let up = integrate_half_line_coupled(&vertical, y_cut, &[], quad, floor, None)?;

    let pref = 1.0 / (std::f64::consts::PI * p.mass * p.mass);
    let v: [f64; 4] = std::array::from_fn(|d| pref * (near.value[d] + tail.value[d] + up.value[d]));
    Ok(PartialMoments {
        x2: v[0],
        v2: v[1],
        xv: v[2],
        x2_ddot: v[3],
    })
}

/// Thermal <x^2> from the literal double root sum of bracketed terms,
/// kept as an independent check of the factorized integrand.
pub fn thermal_x2_double_sum(rf: &ResponseFunction, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let p = rf.params;
    let integrand = |omega: f64| -> [f64; 1] {
        let i = Complex64::new(0.0, omega);
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            for k in 0..3 {
                let lj = rf.roots[j];
                let lk = rf.roots[k];
                let bracket = 1.0 - (-(lj - i) * t).exp() - (-(lk + i) * t).exp() + (-(lj + lk) * t).exp();
                s += rf.weights[j] * rf.weights[k] * bracket / ((lj - i) * (lk + i));
            }
        }
        [noise_kernel_symmetric(omega, &p) * s.re]
    };
    let cutoff = quad.cutoff_factor * frequency_scale(rf);
    let r = integrate_half_line(&integrand, cutoff, &feature_breaks(rf), quad)?;
    Ok(r.value[0] / (std::f64::consts::PI * p.mass * p.mass))
}

pub fn moments(rf: &ResponseFunction, t: f64, quad: &QuadratureSpec) -> Result<MomentSet> {
    let h = homogeneous_moments(rf, t)?;
    let th = thermal_moments(rf, t, quad)?;
    Ok(MomentSet {
        t,
        x2_h: h.x2,
        x2_th: th.x2,
        v2_h: h.v2,
        v2_th: th.v2,
        xv_h: h.xv,
        xv_th: th.xv,
        x2_ddot: h.x2_ddot + th.x2_ddot,
    })
}

/// Dimensionless battery covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    pub xx: f64,
    pub xp: f64,
    pub pp: f64,
}

impl CovarianceMatrix {
    #[must_use]
    pub fn det(&self) -> f64 {
        self.xx * self.pp - self.xp * self.xp
    }
}

pub fn covariance(ms: &MomentSet, p: &SystemParams) -> Result<CovarianceMatrix> {
    let m = p.mass;
    let c = CovarianceMatrix {
        xx: m * p.omega0 * ms.x2(),
        xp: m * ms.xv(),
        pp: m * ms.v2() / p.omega0,
    };
    let det = c.det();
    if !(det >= 0.25 - HEISENBERG_SLACK) {
        return Err(Error::HeisenbergViolation { det });
    }
    Ok(c)
}

/// Stationary moments from the fluctuation-dissipation integrals
/// int dw/(2 pi m) coth(w/2T) Im chi(-iw) (times w^2 for the velocity).
pub fn fdt_moments(rf: &ResponseFunction, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    let p = rf.params;
    let integrand = |omega: f64| -> [f64; 2] {
        if omega == 0.0 {
            // coth(w/2T) Im chi(-iw) -> 2T gamma0 |chi(0)|^2 at w -> 0
            let lim = if p.temperature > 0.0 {
                2.0 * p.temperature * p.gamma0 / p.omega0.powi(4)
            } else {
                0.0
            };
            return [lim, 0.0];
        }
        let im = chi_laplace(&p, Complex64::new(0.0, -omega)).im;
        let c = if p.temperature > 0.0 && (omega / p.temperature).abs() < 1e-6 {
            2.0 * p.temperature / omega
        } else {
            thermal_factor(omega, p.temperature)
        };
        [c * im, c * im * omega * omega]
    };
    let cutoff = quad.cutoff_factor * frequency_scale(rf);
    let r = integrate_half_line(&integrand, cutoff, &feature_breaks(rf), quad)?;
    let pref = 1.0 / (std::f64::consts::PI * p.mass);
    Ok((pref * r.value[0], pref * r.value[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::solve_characteristic;
    use approx::assert_relative_eq;

    fn rf(g: f64, wd: f64, temp: f64) -> ResponseFunction {
        solve_characteristic(&SystemParams::natural(g, wd, temp).unwrap()).unwrap()
    }

    #[test]
    fn homogeneous_initial_values() {
        let r = rf(300.0, 2.0, 0.1);
        let h = homogeneous_moments(&r, 0.0).unwrap();
        assert!((h.x2 - 0.5).abs() < 1e-12);
        assert!((h.v2 - 0.5).abs() < 1e-9);
        assert!(h.xv.abs() < 1e-12);
        assert_relative_eq!(h.x2_ddot, -600.0, max_relative = 1e-10);
    }

    #[test]
    fn homogeneous_decays() {
        let r = rf(2.0, 3.0, 0.1);
        let h = homogeneous_moments(&r, 200.0).unwrap();
        assert!(h.x2.abs() < 1e-20 && h.v2.abs() < 1e-20);
    }

    #[test]
    fn homogeneous_derivatives_match_finite_differences() {
        let r = rf(300.0, 2.0, 0.1);
        let h = 1e-4 / r.params.big_omega();
        for &t in &[0.01, 0.05, 0.2] {
            let m = homogeneous_moments(&r, t).unwrap();
            let xp = homogeneous_moments(&r, t + h).unwrap().x2;
            let xm = homogeneous_moments(&r, t - h).unwrap().x2;
            let d1 = (xp - xm) / (2.0 * h);
            let d2 = (xp - 2.0 * m.x2 + xm) / (h * h);
            assert_relative_eq!(2.0 * m.xv, d1, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(m.x2_ddot, d2, max_relative = 1e-5, epsilon = 1e-4);
        }
    }

    #[test]
    fn thermal_zero_at_start() {
        let r = rf(300.0, 2.0, 0.1);
        let th = thermal_moments(&r, 0.0, &QuadratureSpec::default()).unwrap();
        assert_eq!((th.x2, th.v2, th.xv, th.x2_ddot), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn factorized_matches_double_sum() {
        let q = QuadratureSpec {
            rel_tol: 1e-7,
            ..QuadratureSpec::default()
        };
        for (g, wd, temp) in [(300.0, 2.0, 0.1), (10.0, 60.0, 1.0), (0.5, 1.0, 0.3)] {
            let r = rf(g, wd, temp);
            for &t in &[0.05, 0.7, 3.0] {
                let a = thermal_moments(&r, t, &q).unwrap().x2;
                let b = thermal_x2_double_sum(&r, t, &q).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn thermal_derivatives_match_finite_differences() {
        let q = QuadratureSpec::default();
        for (g, wd, temp) in [(300.0, 2.0, 0.1), (10.0, 60.0, 1.0), (0.5, 1.0, 0.3)] {
            let r = rf(g, wd, temp);
            for &t in &[0.02_f64, 0.3, 2.0] {
                let h = 1e-3 * t.min(1.0 / r.params.big_omega().max(1.0));
                let m = thermal_moments(&r, t, &q).unwrap();
                let xp = thermal_moments(&r, t + h, &q).unwrap().x2;
                let xm = thermal_moments(&r, t - h, &q).unwrap().x2;
                let d1 = (xp - xm) / (2.0 * h);
                let d2 = (xp - 2.0 * m.x2 + xm) / (h * h);
                let s = m.v2.abs() + m.x2_ddot.abs();
                assert_relative_eq!(2.0 * m.xv, d1, max_relative = 1e-5, epsilon = 1e-7 * s);
                assert_relative_eq!(m.x2_ddot, d2, max_relative = 1e-3, epsilon = 1e-4 * s);
            }
        }
    }

    #[test]
    fn thermal_moments_relax_to_stationary_values() {
        let q = QuadratureSpec::default();
        for (g, wd, temp) in [(10.0, 60.0, 1.0), (0.5, 1.0, 0.3)] {
            let r = rf(g, wd, temp);
            let t = 60.0 / r.slowest_rate();
            let m = moments(&r, t, &q).unwrap();
            let (x2, v2) = fdt_moments(&r, &q).unwrap();
            assert_relative_eq!(m.x2(), x2, max_relative = 1e-7);
            assert_relative_eq!(m.v2(), v2, max_relative = 1e-7);
            assert!(m.xv().abs() < 1e-8 * x2);
        }
    }
}
