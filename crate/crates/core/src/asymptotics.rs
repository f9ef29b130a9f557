//! Closed forms: strong-coupling short-time energetics, the scaled noise
//! kernel F(s), and the stationary state through digamma functions.

use num_complex::Complex64;
use serde::Serialize;

use crate::energetics::WORK_FLOOR;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quad::QuadratureSpec;
use crate::response::ResponseFunction;
use crate::special::{digamma, e1_scaled, ei_scaled, EULER_GAMMA};

/// F(s) = int_0^inf x/(1+x^2) coth(r x / 2) cos(x s) dx with r = wD / T
/// (r = inf at T = 0). Infinite at s = 0.
pub fn scaled_noise_kernel(s: f64, ratio: f64, quad: &QuadratureSpec) -> Result<f64> {
    let s = s.abs();
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    // coth = 1 + 2/(e^{rx} - 1); the "1" part is elementary in Ei, E1
    let cold = -0.5 * (ei_scaled(s) - e1_scaled(s));
    if ratio.is_infinite() {
        return Ok(cold);
    }
    if !(ratio > 0.0) {
        return Err(Error::InvalidParams(format!("wD/T must be > 0, got {ratio}")));
    }
    // 2x/(e^{rx}-1) = 2/r + (2/r)(u/(e^u - 1) - 1), u = r x; the constant
    // integrates to (pi/r) e^{-s}. The remainder g(x) cos(xs) falls off only
    // like cos(xs)/x up to x ~ 1/r, so past a crossover X the e^{ixs} form is
    // integrated up the line x = X + iy (all poles of g are on the imaginary axis).
    let g = |x: Complex64| -> Complex64 {
        let u = ratio * x;
        let b = if u.norm() < 1e-3 {
            -0.5 * u + u * u / 12.0 - u.powi(4) / 720.0
        } else {
            u / (u.exp() - 1.0) - 1.0
        };
        2.0 / ratio * b / (1.0 + x * x)
    };
    let cross = 4.0_f64.max(20.0 / s);
    let near = |x: f64| -> [f64; 1] { [g(Complex64::new(x, 0.0)).re * (x * s).cos()] };
    let breaks = [1.0 / ratio, 1.0];
    let a = crate::quad::integrate(&near, 0.0, cross, &breaks, quad.rel_tol, [0.0], quad.max_intervals)?;
    let phase = Complex64::new(0.0, cross * s).exp();
    let up = |y: f64| -> [f64; 1] {
        let v = Complex64::new(0.0, 1.0) * g(Complex64::new(cross, y)) * phase * (-y * s).exp();
        [v.re]
    };
    let floor = [1e-2 * quad.rel_tol * a.value[0].abs().max(1e-3 * a.abs_value[0])];
    let b = crate::quad::integrate_half_line_coupled(&up, 10.0 / s, &[], quad, floor, None)?;
    Ok(cold + std::f64::consts::PI / ratio * (-s).exp() + a.value[0] + b.value[0])
}

/// -(C + ln|s|), the s -> 0 form at T = 0.
#[must_use]
pub fn scaled_noise_kernel_low_t(s: f64) -> f64 {
    -(EULER_GAMMA + s.abs().ln())
}

/// (pi T / wD) e^{-|s|} = (pi / r) e^{-|s|}.
#[must_use]
pub fn scaled_noise_kernel_high_t(s: f64, ratio: f64) -> f64 {
    std::f64::consts::PI / ratio * (-s.abs()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TemperatureRegime {
    Low,
    High,
}

/// Leading-order strong-coupling energetics at short times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortTime {
    pub t: f64,
    pub de_battery: f64,
    pub ergotropy: f64,
    pub work: f64,
    pub eta_w: Option<f64>,
    /// false when wD t > 1 or Omega < 5 max(w0, wD).
    pub valid: bool,
}

pub fn sud_short_time(p: &SystemParams, t: f64, regime: TemperatureRegime) -> Result<ShortTime> {
    p.validate()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
    }
    let w0 = p.omega0;
    let wd = p.omega_d;
    let om = p.big_omega();
    let w_on = p.w_on();
    let damp = (-wd * t).exp();
    let (s, c) = (om * t).sin_cos();
    let valid = wd * t <= 1.0 && om >= 5.0 * w0.max(wd);

    let (de_battery, ergotropy, work) = match regime {
        TemperatureRegime::Low => {
            let e = w_on * damp * s * s;
            (e, e, w_on * (1.0 - damp * c * c))
        }
        TemperatureRegime::High => {
            let temp = p.temperature;
            let slow = 2.0 * wd * w0 * w0 / (om * om);
            let de = damp * s * s * (w_on + 0.5 * temp) + 0.5 * temp * (1.0 - damp);
            let work = w_on * (1.0 - damp * c * c)
                + 0.5 * temp * (damp * s * s + (om * om / (w0 * w0)) * (1.0 - (-slow * t).exp()));
            (de, high_t_ergotropy(p, t), work)
        }
    };
    let eta_w = if work > WORK_FLOOR * w_on {
        Some(ergotropy / work)
    } else {
        None
    };
    Ok(ShortTime {
        t,
        de_battery,
        ergotropy,
        work,
        eta_w,
        valid,
    })
}

/// Ergotropy of the Gaussian state built from the leading-order homogeneous
/// and high-temperature thermal variances; <x xdot> is half the time
/// derivative of the approximate <x^2>.
fn high_t_ergotropy(p: &SystemParams, t: f64) -> f64 {
    let (m, w0, wd, temp) = (p.mass, p.omega0, p.omega_d, p.temperature);
    let om = p.big_omega();
    let damp = (-wd * t).exp();
    let half = (-0.5 * wd * t).exp();
    let (s, c) = (om * t).sin_cos();
    let slow = 2.0 * wd * w0 * w0 / (om * om);
    let es = (-slow * t).exp();

    let x2_h = damp * c * c / (2.0 * m * w0);
    let v2_h = damp * om * om * s * s / (2.0 * m * w0);
    let d_x2_h = -damp / (2.0 * m * w0) * (wd * c * c + om * 2.0 * s * c);

    let pre = 2.0 * temp / (m * om * om);
    let ratio = om * om / (2.0 * w0 * w0);
    let x2_th = pre * ((1.0 - half * c) - 0.5 * damp * s * s + ratio * (1.0 - es));
    let d_x2_th = pre
        * (half * (0.5 * wd * c + om * s) - 0.5 * damp * (-wd * s * s + om * 2.0 * s * c) + ratio * slow * es);
    let v2_th = temp / m * (1.0 - damp * c * c);

    let x2 = x2_h + x2_th;
    let v2 = v2_h + v2_th;
    let xv = 0.5 * (d_x2_h + d_x2_th);
    let h = 0.5 * m * v2 + 0.5 * m * w0 * w0 * x2;
    let det = (m * w0 * x2) * (m * v2 / w0) - (m * xv) * (m * xv);
    (h - w0 * det.max(0.0).sqrt()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub x2_inf: f64,
    pub v2_inf: f64,
    pub h_b_inf: f64,
    pub ergotropy_inf: f64,
    pub w_inf: f64,
    pub eta_w_inf: f64,
}

/// k_j = lambda_j / prod_{j' != j} (lambda_j' - lambda_j).
#[must_use]
pub fn k_weights(rf: &ResponseFunction) -> [Complex64; 3] {
    let l = rf.roots;
    std::array::from_fn(|j| {
        let mut den = Complex64::new(1.0, 0.0);
        for (i, &li) in l.iter().enumerate() {
            if i != j {
                den *= li - l[j];
            }
        }
        l[j] / den
    })
}

/// Stationary moments from the digamma sums (log sums at T = 0).
pub fn steady_state(rf: &ResponseFunction) -> Result<SteadyState> {
    let p = rf.params;
    if !(p.gamma0 > 0.0) {
        return Err(Error::InvalidParams("no stationary state without damping".into()));
    }
    let (m, w0) = (p.mass, p.omega0);
    let k = k_weights(rf);
    let mut sx = Complex64::new(0.0, 0.0);
    let mut sk = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        let f = if p.temperature > 0.0 {
            let z = 1.0 + rf.roots[j] / (2.0 * std::f64::consts::PI * p.temperature);
            digamma(z)?
        } else {
            rf.roots[j].ln()
        };
        sx += rf.weights[j] * f;
        sk += k[j] * f;
    }
    let pi = std::f64::consts::PI;
    let x2_inf = p.temperature / (m * w0 * w0) - sx.re / (m * pi);
    let kk = p.big_omega_sq() / (m * pi) * sk.re;
    let v2_inf = w0 * w0 * x2_inf + kk;

    let h_b_inf = 0.5 * m * v2_inf + 0.5 * m * w0 * w0 * x2_inf;
    let ergotropy_inf = 0.5 * w0 * ((m * w0 * x2_inf).sqrt() - (m * v2_inf / w0).sqrt()).powi(2);
    let h_c = m * v2_inf - m * (w0 * w0 + 0.5 * p.big_omega_sq()) * x2_inf;
    let w_inf = p.w_on() - h_c;
    Ok(SteadyState {
        x2_inf,
        v2_inf,
        h_b_inf,
        ergotropy_inf,
        w_inf,
        eta_w_inf: ergotropy_inf / w_inf,
    })
}
