//! Complex digamma and the exponential integrals Ei, E1 on the positive axis.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_4;

/// psi(z) for complex z, away from the poles at 0, -1, -2, ...
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::DigammaDomain(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::DigammaDomain(format!("pole at {}", z.re)));
    }
    if z.re < 0.5 {
        // reflection: psi(z) = psi(1 - z) - pi cot(pi z)
        let pz = std::f64::consts::PI * z;
        let cot = pz.cos() / pz.sin();
        return Ok(digamma(1.0 - z)? - std::f64::consts::PI * cot);
    }
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < 10.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    Ok(acc + digamma_asymptotic(z))
}

/// ln z - 1/2z - sum B_2n / (2n z^2n), good to ~1e-16 for |z| >= 10.
fn digamma_asymptotic(z: Complex64) -> Complex64 {
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let w = 1.0 / (z * z);
    // Horner in w
    let mut s = Complex64::new(C[6], 0.0);
    for &c in C[..6].iter().rev() {
        s = s * w + c;
    }
    z.ln() - 0.5 / z - s * w
}

/// E1(x) e^{x} for x > 0.
#[must_use]
pub fn e1_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0, got {x}");
    if x <= 1.0 {
        // -gamma - ln x + sum_{n>=1} (-1)^{n+1} x^n / (n n!)
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..60 {
            term *= -x / n as f64;
            let add = -term / n as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        (-EULER_GAMMA - x.ln() + sum) * x.exp()
    } else {
        // continued fraction, modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

#[must_use]
pub fn e1(x: f64) -> f64 {
    e1_scaled(x) * (-x).exp()
}

/// Ei(x) e^{-x} for x > 0.
#[must_use]
pub fn ei_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "Ei needs x > 0, got {x}");
    if x < 40.0 {
        // gamma + ln x + sum x^n / (n n!); all terms positive
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..200 {
            term *= x / n as f64;
            let add = term / n as f64;
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        (EULER_GAMMA + x.ln() + sum) * (-x).exp()
    } else {
        // (1/x) sum n! / x^n, truncated at the smallest term
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..60 {
            let next = term * n as f64 / x;
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        sum / x
    }
}

#[must_use]
pub fn ei(x: f64) -> f64 {
    ei_scaled(x) * x.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn digamma_known_values() {
        assert_relative_eq!(digamma(c(1.0, 0.0)).unwrap().re, -EULER_GAMMA, max_relative = 1e-14);
        let half = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert_relative_eq!(digamma(c(0.5, 0.0)).unwrap().re, half, max_relative = 1e-14);
        // Im psi(1 + iy) = -1/(2y) + (pi/2) coth(pi y)
        let y: f64 = 0.7;
        let im = -0.5 / y + 0.5 * std::f64::consts::PI / (std::f64::consts::PI * y).tanh();
        assert_relative_eq!(digamma(c(1.0, y)).unwrap().im, im, max_relative = 1e-13);
    }

    #[test]
    fn digamma_rejects_poles() {
        assert!(digamma(c(0.0, 0.0)).is_err());
        assert!(digamma(c(-3.0, 0.0)).is_err());
        assert!(digamma(c(-3.0, 1e-3)).is_ok());
    }

    #[test]
    fn e1_and_ei_values() {
        // reference values from the defining integrals (A&S table 5.1)
        assert_relative_eq!(e1(0.5), 0.559_773_594_776_160_8, max_relative = 1e-14);
        assert_relative_eq!(e1(1.0), 0.219_383_934_395_520_3, max_relative = 1e-14);
        assert_relative_eq!(e1(2.0), 0.048_900_510_708_061_2, max_relative = 1e-13);
        assert_relative_eq!(ei(1.0), 1.895_117_816_355_936_8, max_relative = 1e-14);
        assert_relative_eq!(ei(2.0), 4.954_234_356_001_89, max_relative = 1e-13);
        // series/asymptotic switch is continuous
        assert_relative_eq!(ei_scaled(40.0 - 1e-9), ei_scaled(40.0 + 1e-9), max_relative = 1e-10);
    }

    #[test]
    fn e1_matches_its_integral() {
        use crate::quad::{integrate_half_line, QuadratureSpec};
        for &x in &[0.05, 0.9, 1.1, 3.0, 12.0] {
            // E1(x) e^x = int_0^inf e^{-x u} / (1 + u) du
            let r = integrate_half_line(&|u: f64| [(-x * u).exp() / (1.0 + u)], 50.0 / x, &[], &QuadratureSpec::default())
                .unwrap();
            assert_relative_eq!(e1_scaled(x), r.value[0], max_relative = 1e-10);
        }
    }
}
