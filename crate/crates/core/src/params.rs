//! Physical parameters, regime classification and the lumped-circuit mapping.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative tolerance on the cubic discriminant below which a
/// parameter point is called critically damped.
pub const CRITICAL_TOL: f64 = 1e-10;

/// Battery frequency and mass plus reservoir coupling, Drude cutoff and
/// temperature. Units: hbar = k_B = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    pub omega0: f64,
    pub mass: f64,
    pub gamma0: f64,
    pub omega_d: f64,
    pub temperature: f64,
}

impl SystemParams {
    pub fn new(omega0: f64, mass: f64, gamma0: f64, omega_d: f64, temperature: f64) -> Result<Self> {
        let p = Self {
            omega0,
            mass,
            gamma0,
            omega_d,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit battery frequency and mass.
    pub fn natural(gamma0: f64, omega_d: f64, temperature: f64) -> Result<Self> {
        Self::new(1.0, 1.0, gamma0, omega_d, temperature)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("omega0", self.omega0), ("mass", self.mass), ("omega_d", self.omega_d)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let non_negative = [("gamma0", self.gamma0), ("temperature", self.temperature)];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Emergent frequency sqrt(gamma0 * omega_d).
    #[must_use]
    pub fn big_omega(&self) -> f64 {
        (self.gamma0 * self.omega_d).sqrt()
    }

    #[must_use]
    pub fn big_omega_sq(&self) -> f64 {
        self.gamma0 * self.omega_d
    }

    /// Work needed to switch the coupling on with the battery in its ground state.
    #[must_use]
    pub fn w_on(&self) -> f64 {
        self.big_omega_sq() / (4.0 * self.omega0)
    }

    #[must_use]
    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..*self }
    }

    #[must_use]
    pub fn with_gamma0(&self, gamma0: f64) -> Self {
        Self { gamma0, ..*self }
    }

    #[must_use]
    pub fn with_omega_d(&self, omega_d: f64) -> Self {
        Self { omega_d, ..*self }
    }

    /// Coefficients (c2, c1, c0) of the monic cubic
    /// lambda^3 + c2 lambda^2 + c1 lambda + c0.
    #[must_use]
    pub fn cubic_coefficients(&self) -> (f64, f64, f64) {
        let w02 = self.omega0 * self.omega0;
        (-self.omega_d, w02 + self.gamma0 * self.omega_d, -self.omega_d * w02)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    Underdamped,
    Overdamped,
    CriticallyDamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubRegime {
    WeaklyUnderdamped,
    StronglyUnderdamped,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeTag {
    pub kind: RegimeKind,
    pub sub: SubRegime,
}

impl RegimeKind {
    #[must_use]
    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::Underdamped => "underdamped",
            RegimeKind::Overdamped => "overdamped",
            RegimeKind::CriticallyDamped => "critically damped",
        }
    }
}

impl SubRegime {
    #[must_use]
    pub fn label(self) -> &'static str {
        match self {
            SubRegime::WeaklyUnderdamped => "weakly underdamped",
            SubRegime::StronglyUnderdamped => "strongly underdamped",
            SubRegime::Unclassified => "unclassified",
        }
    }
}

/// Discriminant of the characteristic cubic together with the sum of the
/// magnitudes of its terms, which sets the scale for the critical test.
#[must_use]
pub fn cubic_discriminant(p: &SystemParams) -> (f64, f64) {
    let (b, c, d) = p.cubic_coefficients();
    let terms = [
        18.0 * b * c * d,
        -4.0 * b * b * b * d,
        b * b * c * c,
        -4.0 * c * c * c,
        -27.0 * d * d,
    ];
    let disc = terms.iter().sum();
    let scale = terms.iter().map(|t| t.abs()).sum();
    (disc, scale)
}

pub fn classify_regime(p: &SystemParams, tol: f64) -> Result<RegimeTag> {
    p.validate()?;
    let (disc, scale) = cubic_discriminant(p);
    let kind = if disc.abs() <= tol * scale {
        RegimeKind::CriticallyDamped
    } else if disc < 0.0 {
        RegimeKind::Underdamped
    } else {
        RegimeKind::Overdamped
    };
    let sub = if kind == RegimeKind::Underdamped {
        if p.gamma0 > p.omega_d && p.gamma0 > p.omega0 {
            SubRegime::StronglyUnderdamped
        } else if p.gamma0 < p.omega0.min(p.omega_d) {
            SubRegime::WeaklyUnderdamped
        } else {
            SubRegime::Unclassified
        }
    } else {
        SubRegime::Unclassified
    };
    Ok(RegimeTag { kind, sub })
}

/// Lumped LC battery with an RC environment, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitParams {
    pub inductance: f64,
    pub capacitance: f64,
    pub env_resistance: f64,
    pub env_capacitance: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
            ("env_resistance", self.env_resistance),
            ("env_capacitance", self.env_capacitance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// The charge on the capacitor plays the role of the coordinate and the
/// inductance the mass. Frequencies come out in rad/s.
pub fn circuit_to_params(c: &CircuitParams, temperature: f64) -> Result<SystemParams> {
    c.validate()?;
    SystemParams::new(
        1.0 / (c.inductance * c.capacitance).sqrt(),
        c.inductance,
        c.env_resistance / c.inductance,
        1.0 / (c.env_resistance * c.env_capacitance),
        temperature,
    )
}
