//! Roots of the characteristic cubic and the response function
//! chi(t) = sum_j chi_j exp(-lambda_j t).

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{classify_regime, RegimeKind, RegimeTag, SystemParams, CRITICAL_TOL};

/// Relative root separation below which the weight formula is refused.
pub const ROOT_SEPARATION_TOL: f64 = 1e-8;
/// Relative imaginary residue tolerated when collapsing root sums to reals.
pub const RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseFunction {
    pub params: SystemParams,
    /// In the underdamped case roots[0] = Gamma + i nu (nu > 0),
    /// roots[1] its conjugate and roots[2] real. Overdamped roots are
    /// real and ascending.
    #[serde(skip)]
    pub roots: [Complex64; 3],
    #[serde(skip)]
    pub weights: [Complex64; 3],
    pub regime: RegimeTag,
}

fn eval_cubic(p: &SystemParams, z: Complex64) -> (Complex64, Complex64) {
    let (b, c, d) = p.cubic_coefficients();
    let f = ((z + b) * z + c) * z + d;
    let df = (3.0 * z + 2.0 * b) * z + c;
    (f, df)
}

pub fn solve_characteristic(p: &SystemParams) -> Result<ResponseFunction> {
    p.validate()?;
    let regime = classify_regime(p, CRITICAL_TOL)?;
    if p.gamma0 == 0.0 {
        // free oscillator: chi = sin(w0 t) / w0, the third root carries no weight
        let w0 = p.omega0;
        let roots = [
            Complex64::new(0.0, w0),
            Complex64::new(0.0, -w0),
            Complex64::new(p.omega_d, 0.0),
        ];
        let weights = [
            Complex64::new(0.0, 0.5 / w0),
            Complex64::new(0.0, -0.5 / w0),
            Complex64::new(0.0, 0.0),
        ];
        return Ok(ResponseFunction {
            params: *p,
            roots,
            weights,
            regime,
        });
    }

    let (b, c, d) = p.cubic_coefficients();
    let companion = Matrix3::new(-b, -c, -d, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eig = companion.complex_eigenvalues();
    let mut roots = [eig[0], eig[1], eig[2]];
    for r in &mut roots {
        for _ in 0..2 {
            let (f, df) = eval_cubic(p, *r);
            if df.norm() > 0.0 {
                *r -= f / df;
            }
        }
    }

    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    match regime.kind {
        RegimeKind::Underdamped => {
            // real root = the one with the smallest |Im|
            let ir = (0..3)
                .min_by(|&i, &j| roots[i].im.abs().total_cmp(&roots[j].im.abs()))
                .unwrap();
            let others: Vec<Complex64> = (0..3).filter(|&i| i != ir).map(|i| roots[i]).collect();
            let gamma = 0.5 * (others[0].re + others[1].re);
            let nu = 0.5 * (others[0].im.abs() + others[1].im.abs());
            roots = [
                Complex64::new(gamma, nu),
                Complex64::new(gamma, -nu),
                Complex64::new(roots[ir].re, 0.0),
            ];
        }
        _ => {
            let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
            re.sort_by(f64::total_cmp);
            roots = [re[0].into(), re[1].into(), re[2].into()];
        }
    }

    let mut separation = f64::INFINITY;
    for i in 0..3 {
        for j in (i + 1)..3 {
            separation = separation.min((roots[i] - roots[j]).norm());
        }
    }
    if regime.kind == RegimeKind::CriticallyDamped || separation < ROOT_SEPARATION_TOL * scale {
        return Err(Error::DegenerateRoots { separation, scale });
    }

    let mut weights = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        let mut den = Complex64::new(1.0, 0.0);
        for k in 0..3 {
            if k != j {
                den *= roots[k] - roots[j];
            }
        }
        weights[j] = (p.omega_d - roots[j]) / den;
    }
    if regime.kind == RegimeKind::Underdamped {
        weights[1] = weights[0].conj();
        weights[2] = Complex64::new(weights[2].re, 0.0);
    } else {
        for w in &mut weights {
            *w = Complex64::new(w.re, 0.0);
        }
    }

    Ok(ResponseFunction {
        params: *p,
        roots,
        weights,
        regime,
    })
}

/// Collapse a root sum to a real number after checking the imaginary residue.
pub(crate) fn real_part(z: Complex64, scale: f64, context: &'static str) -> Result<f64> {
    if z.im.abs() > RESIDUE_TOL * scale.max(f64::MIN_POSITIVE) && z.im.abs() > 1e-300 {
        return Err(Error::Residue {
            residue: z.im.abs() / scale,
            context,
        });
    }
    Ok(z.re)
}

impl ResponseFunction {
    /// Decay rate Gamma and frequency nu of the complex pair (underdamped only).
    #[must_use]
    pub fn pair(&self) -> Option<(f64, f64)> {
        (self.roots[0].im != 0.0).then(|| (self.roots[0].re, self.roots[0].im))
    }

    /// Slowest decay rate min_j Re lambda_j.
    #[must_use]
    pub fn slowest_rate(&self) -> f64 {
        self.roots
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| w.norm() > 0.0)
            .map(|(r, _)| r.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// Residuals of the three Vieta relations, each relative to its right-hand side.
    #[must_use]
    pub fn vieta_residuals(&self) -> [f64; 3] {
        let p = &self.params;
        let [a, b, c] = self.roots;
        let s1 = a + b + c;
        let s2 = a * b + a * c + b * c;
        let s3 = a * b * c;
        let w02 = p.omega0 * p.omega0;
        let t1 = p.omega_d;
        let t2 = w02 + p.big_omega_sq();
        let t3 = p.omega_d * w02;
        [
            (s1 - t1).norm() / t1.abs().max(self.roots.iter().map(|r| r.norm()).sum()),
            (s2 - t2).norm() / t2,
            (s3 - t3).norm() / t3,
        ]
    }

    /// sum_j chi_j lambda_j^n for n = 0, 1, 2.
    #[must_use]
    pub fn moment_sums(&self) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (l, w) in self.roots.iter().zip(&self.weights) {
            out[0] += w;
            out[1] += w * l;
            out[2] += w * l * l;
        }
        out
    }

    /// chi and its first three time derivatives at t.
    pub fn chi_all(&self, t: f64) -> Result<[f64; 4]> {
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        let mut scale = [0.0f64; 4];
        for (l, w) in self.roots.iter().zip(&self.weights) {
            let mut term = w * (-l * t).exp();
            for n in 0..4 {
                acc[n] += term;
                scale[n] += term.norm();
                term *= -l;
            }
        }
        let mut out = [0.0; 4];
        for n in 0..4 {
            out[n] = real_part(acc[n], scale[n], "chi")?;
        }
        Ok(out)
    }

    /// d^order/dt^order chi(t), order 0..=3.
    pub fn chi(&self, t: f64, order: usize) -> Result<f64> {
        assert!(order <= 3, "chi derivative order must be at most 3");
        Ok(self.chi_all(t)?[order])
    }

    /// exp(-lambda_j t) for all roots.
    #[must_use]
    pub fn decays(&self, t: f64) -> [Complex64; 3] {
        [(-self.roots[0] * t).exp(), (-self.roots[1] * t).exp(), (-self.roots[2] * t).exp()]
    }

    /// Laplace transform of chi from the root expansion, sum_j chi_j / (lambda_j + s).
    #[must_use]
    pub fn laplace_from_roots(&self, s: Complex64) -> Complex64 {
        self.roots.iter().zip(&self.weights).map(|(l, w)| w / (l + s)).sum()
    }
}

/// (s + wD) / ((s^2 + w0^2)(s + wD) + s gamma0 wD), the closed-form Laplace
/// transform of chi.
#[must_use]
pub fn chi_laplace(p: &SystemParams, s: Complex64) -> Complex64 {
    let w02 = p.omega0 * p.omega0;
    (s + p.omega_d) / ((s * s + w02) * (s + p.omega_d) + s * p.big_omega_sq())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiApprox {
    WeakUD,
    SUD,
    SUDFull,
    ODLargeCutoff,
}

/// Regime-specific closed forms of chi(t). The caller decides validity.
#[must_use]
pub fn chi_approx(p: &SystemParams, t: f64, which: ChiApprox) -> f64 {
    let w0 = p.omega0;
    let wd = p.omega_d;
    let om = p.big_omega();
    match which {
        ChiApprox::WeakUD => (-0.5 * p.gamma0 * t).exp() * (w0 * t).sin() / w0,
        ChiApprox::SUD => (-0.5 * wd * t).exp() * (om * t).sin() / om,
        ChiApprox::SUDFull => {
            let fast = (-0.5 * wd * t).exp() / om * ((om * t).sin() - wd / om * (om * t).cos());
            let slow = wd / (om * om) * (-w0 * w0 * wd * t / (om * om)).exp();
            fast + slow
        }
        ChiApprox::ODLargeCutoff => {
            let h = 0.5 * p.gamma0;
            let k2 = h * h - w0 * w0;
            let e = (-h * t).exp();
            if k2 > 0.0 {
                let k = k2.sqrt();
                e * (k * t).sinh() / k
            } else if k2 < 0.0 {
                let k = (-k2).sqrt();
                e * (k * t).sin() / k
            } else {
                e * t
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rf(g: f64, wd: f64) -> ResponseFunction {
        solve_characteristic(&SystemParams::natural(g, wd, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn sud_roots() {
        let r = rf(300.0, 2.0);
        let (gamma, nu) = r.pair().unwrap();
        // independent: bisection on the real cubic below
        let f = |x: f64| ((x - 2.0) * x + 601.0) * x - 2.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_relative_eq!(r.roots[2].re, lo, max_relative = 1e-13);
        assert!((r.roots[2].re - 3.32782e-3).abs() < 1e-8);
        assert!((gamma - 0.99834).abs() < 1e-5);
        assert!((nu - 24.495).abs() < 1e-3);
        assert_relative_eq!(gamma, 0.5 * (2.0 - lo), max_relative = 1e-12);
        assert_relative_eq!(gamma * gamma + nu * nu, 2.0 / lo, max_relative = 1e-10);
    }

    #[test]
    fn free_oscillator() {
        let r = rf(0.0, 2.0);
        for &t in &[0.0, 0.3, 1.7, 10.0] {
            assert!((r.chi(t, 0).unwrap() - t.sin()).abs() < 1e-15);
            assert!((r.chi(t, 1).unwrap() - t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn overdamped_roots_real_positive() {
        let r = rf(10.0, 60.0);
        assert_eq!(r.regime.kind, RegimeKind::Overdamped);
        for l in r.roots {
            assert_eq!(l.im, 0.0);
            assert!(l.re > 0.0);
        }
    }

    #[test]
    fn initial_values() {
        for (g, wd) in [(300.0, 2.0), (10.0, 60.0), (0.5, 1.0)] {
            let r = rf(g, wd);
            let c = r.chi_all(0.0).unwrap();
            assert!(c[0].abs() < 1e-10);
            assert!((c[1] - 1.0).abs() < 1e-10);
            assert!(c[2].abs() < 1e-10);
            assert_relative_eq!(c[3], -(1.0 + g * wd), max_relative = 1e-10);
        }
    }

    #[test]
    fn critical_input_rejected() {
        let s3 = 3f64.sqrt();
        let p = SystemParams::natural(8.0 / (3.0 * s3), 3.0 * s3, 0.0).unwrap();
        assert!(matches!(solve_characteristic(&p), Err(Error::DegenerateRoots { .. })));
    }

    #[test]
    fn sud_quarter_period() {
        let r = rf(300.0, 2.0);
        let om = r.params.big_omega();
        let t = std::f64::consts::FRAC_PI_2 / om;
        let approx = (-t).exp() / om;
        let rel = (r.chi(t, 0).unwrap() - approx).abs() / approx;
        assert!(rel < 2.0 * r.params.omega_d / om, "rel = {rel}");
    }

    #[test]
    fn sud_full_form_tracks_exact() {
        let r = rf(300.0, 2.0);
        let p = r.params;
        let tmax = 4.0 * std::f64::consts::PI / p.big_omega();
        let ts: Vec<f64> = (0..=2000).map(|i| tmax * i as f64 / 2000.0).collect();
        let exact: Vec<f64> = ts.iter().map(|&t| r.chi(t, 0).unwrap()).collect();
        let peak = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = ts
            .iter()
            .zip(&exact)
            .map(|(&t, e)| (e - chi_approx(&p, t, ChiApprox::SUDFull)).abs())
            .fold(0.0f64, f64::max);
        assert!(dev / peak < 1e-2, "dev = {}", dev / peak);
    }

    #[test]
    fn overdamped_chi_has_no_sign_change() {
        let r = rf(10.0, 60.0);
        for i in 1..=500 {
            let t = 0.5 * i as f64 / 500.0;
            assert!(r.chi(t, 0).unwrap() > 0.0);
        }
    }

    #[test]
    fn weak_form_at_zero_coupling() {
        let p = SystemParams::natural(0.0, 2.0, 0.0).unwrap();
        for &t in &[0.1, 1.0, 4.0] {
            assert_eq!(chi_approx(&p, t, ChiApprox::WeakUD), t.sin());
        }
        let q = SystemParams::natural(300.0, 2.0, 0.0).unwrap();
        let t = std::f64::consts::PI / q.big_omega();
        assert!(chi_approx(&q, t, ChiApprox::SUD).abs() < 1e-17);
    }

    #[test]
    fn laplace_closed_form_matches_roots() {
        for (g, wd) in [(300.0, 2.0), (10.0, 60.0), (0.5, 1.0)] {
            let r = rf(g, wd);
            for s in [0.1, 1.0, 7.0] {
                let s = Complex64::new(s, 0.3);
                let a = r.laplace_from_roots(s);
                let b = chi_laplace(&r.params, s);
                assert!((a - b).norm() < 1e-10 * b.norm());
            }
        }
    }
}
