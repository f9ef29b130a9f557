//! Exact Gaussian dynamics of the battery coupled to a finite set of bath
//! modes. Nothing here uses the response function: it is the brute-force
//! reference the continuum pipeline is checked against.
//!
//! Internally coordinates are mass-weighted, q_j = sqrt(m_j) x_j and
//! pi_j = p_j / sqrt(m_j), index 0 being the battery. The potential is
//! q^T K q / 2 with K an arrow matrix: corner w0^2 + Omega_N^2, diagonal
//! w_k^2, border -c_k / sqrt(m m_k). All first moments stay zero, so a state
//! is just its symmetrized covariance.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::energetics::{ledger_from_moments, EnergyLedger};
use crate::error::{Error, Result};
use crate::kernels::{thermal_factor, BathDiscretization};
use crate::params::SystemParams;
use crate::variances::MomentSet;

/// Symplecticity / orthogonality tolerance for propagators.
pub const SYMPLECTIC_TOL: f64 = 1e-8;

/// Largest bath for which the dense matrix-exponential route is allowed.
pub const DENSE_LIMIT: usize = 512;

/// Eigen-decomposition of a symmetric arrow matrix.
#[derive(Debug, Clone)]
pub struct ArrowEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

/// Eigenpairs of [[corner, border^T], [border, diag(diag)]], with `diag`
/// strictly increasing. Each eigenvalue solves the secular equation
/// corner - L + sum b_j^2 / (L - d_j) = 0 on its own interval between poles,
/// measured from the nearer pole so that L - d_j keeps its digits.
pub fn arrow_eigen(corner: f64, border: &[f64], diag: &[f64]) -> Result<ArrowEigen> {
    let n = diag.len();
    if border.len() != n {
        return Err(Error::InvalidParams("arrow matrix border and diagonal differ in length".into()));
    }
    if diag.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("arrow matrix diagonal must be strictly increasing".into()));
    }
    let dim = n + 1;
    let mut values = Vec::with_capacity(dim);
    let mut vectors = DMatrix::zeros(dim, dim);
    let mut col = 0;

    // modes with zero coupling are eigenvectors on their own
    let active: Vec<usize> = (0..n).filter(|&k| border[k] != 0.0).collect();
    for k in (0..n).filter(|&k| border[k] == 0.0) {
        values.push(diag[k]);
        vectors[(k + 1, col)] = 1.0;
        col += 1;
    }
    if active.is_empty() {
        values.push(corner);
        vectors[(0, col)] = 1.0;
        return Ok(ArrowEigen { values, vectors });
    }

    let poles: Vec<f64> = active.iter().map(|&k| diag[k]).collect();
    let b2: Vec<f64> = active.iter().map(|&k| border[k] * border[k]).collect();
    let secular = Secular { corner, poles: &poles, b2: &b2 };
    let m = poles.len();
    let roots: Vec<(usize, f64)> = (0..=m).into_par_iter().map(|i| secular.root(i)).collect();

    for (origin, mu) in roots {
        let sigma = poles[origin];
        values.push(sigma + mu);
        let mut norm2 = 1.0;
        let mut v = vec![0.0; active.len()];
        for (j, &k) in active.iter().enumerate() {
            // L - d_j = mu - (d_j - sigma)
            let gap = mu - (poles[j] - sigma);
            v[j] = border[k] / gap;
            norm2 += v[j] * v[j];
        }
        let s = 1.0 / norm2.sqrt();
        vectors[(0, col)] = s;
        for (j, &k) in active.iter().enumerate() {
            vectors[(k + 1, col)] = v[j] * s;
        }
        col += 1;
    }
    Ok(ArrowEigen { values, vectors })
}

struct Secular<'a> {
    corner: f64,
    poles: &'a [f64],
    b2: &'a [f64],
}

impl Secular<'_> {
    /// f and f' at L = poles[origin] + mu. f is strictly decreasing between poles.
    fn eval(&self, origin: usize, mu: f64) -> (f64, f64) {
        let sigma = self.poles[origin];
        let mut f = self.corner - sigma - mu;
        let mut df = -1.0;
        for (d, b2) in self.poles.iter().zip(self.b2) {
            let gap = mu - (d - sigma);
            let r = b2 / gap;
            f += r;
            df -= r / gap;
        }
        (f, df)
    }

    /// Root number i (0 = below every pole); returns (origin pole, offset).
    fn root(&self, i: usize) -> (usize, f64) {
        let m = self.poles.len();
        let scale = self.b2.iter().sum::<f64>().sqrt() + 1.0;
        let (origin, mut lo, mut hi) = if i == 0 {
            let mut lo = (self.corner - self.poles[0]).min(0.0) - scale;
            while self.eval(0, lo).0 <= 0.0 {
                lo *= 2.0;
            }
            (0, lo, 0.0)
        } else if i == m {
            let mut hi = (self.corner - self.poles[m - 1]).max(0.0) + scale;
            while self.eval(m - 1, hi).0 >= 0.0 {
                hi *= 2.0;
            }
            (m - 1, 0.0, hi)
        } else {
            let half = 0.5 * (self.poles[i] - self.poles[i - 1]);
            if self.eval(i - 1, half).0 > 0.0 {
                // root in the upper half, nearer the upper pole
                (i, -half, 0.0)
            } else {
                (i - 1, 0.0, half)
            }
        };
        let mut mu = 0.5 * (lo + hi);
        for _ in 0..300 {
            let (f, df) = self.eval(origin, mu);
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            let newton = mu - f / df;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - mu).abs() <= 2.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE) || hi - lo <= 0.0 {
                mu = next;
                break;
            }
            mu = next;
        }
        (origin, mu)
    }
}

/// The battery + bath quadratic system, diagonalized once.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub params: SystemParams,
    pub bath: BathDiscretization,
    /// Omega_N^2 = sum_k c_k^2 / (m m_k w_k^2), the counterterm the finite bath carries.
    pub omega_n_sq: f64,
    /// Mass-weighted stiffness: corner and border of the arrow.
    corner: f64,
    border: Vec<f64>,
    eigen: ArrowEigen,
    freqs: Vec<f64>,
    /// Initial <q_j^2> and <pi_j^2>.
    init_q: Vec<f64>,
    init_pi: Vec<f64>,
}

pub fn build_dynamics(bath: &BathDiscretization, p: &SystemParams) -> Result<Dynamics> {
    p.validate()?;
    let m = p.mass;
    let omega_n_sq = bath.counterterm;
    let corner = p.omega0 * p.omega0 + omega_n_sq;
    let border: Vec<f64> = (0..bath.n_modes)
        .map(|k| -bath.couplings[k] / (m * bath.mode_masses[k]).sqrt())
        .collect();
    let diag: Vec<f64> = bath.mode_freqs.iter().map(|w| w * w).collect();
    let eigen = arrow_eigen(corner, &border, &diag)?;
    if let Some(&bad) = eigen.values.iter().find(|&&l| l <= 0.0) {
        return Err(Error::InvalidParams(format!("stiffness matrix not positive definite (eigenvalue {bad:e})")));
    }
    let freqs = eigen.values.iter().map(|l| l.sqrt()).collect();

    let mut init_q = vec![0.5 / p.omega0];
    let mut init_pi = vec![0.5 * p.omega0];
    for &w in &bath.mode_freqs {
        let c = thermal_factor(w, p.temperature);
        init_q.push(0.5 * c / w);
        init_pi.push(0.5 * c * w);
    }
    let d = Dynamics {
        params: *p,
        bath: bath.clone(),
        omega_n_sq,
        corner,
        border,
        eigen,
        freqs,
        init_q,
        init_pi,
    };
    d.check_eigenvectors()?;
    Ok(d)
}

impl Dynamics {
    #[must_use]
    pub fn dim(&self) -> usize {
        self.bath.n_modes + 1
    }

    #[must_use]
    pub fn normal_frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// Continuum parameters with the same counterterm as this bath
    /// (gamma0 replaced by Omega_N^2 / w_D).
    pub fn matched_params(&self) -> Result<SystemParams> {
        let p = self.params;
        if p.omega_d <= 0.0 {
            return Err(Error::InvalidParams("matched parameters need omega_D > 0".into()));
        }
        Ok(p.with_gamma0(self.omega_n_sq / p.omega_d))
    }

    /// Work to switch the coupling on: Omega_N^2 / (4 w0) for this bath.
    #[must_use]
    pub fn w_on(&self) -> f64 {
        0.5 * self.omega_n_sq * self.init_q[0]
    }

    /// The orthogonality of the eigenvectors is what makes every propagator
    /// built from them symplectic. Checked on a few fixed probe vectors plus
    /// the eigen-residuals, both O(N^2).
    fn check_eigenvectors(&self) -> Result<()> {
        let u = &self.eigen.vectors;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for seed in 1..=3 {
            let x = DVector::from_fn(n, |i, _| ((i + 1) as f64 * 0.618_033_988_749_895 * seed as f64).fract() - 0.5);
            let y = u.tr_mul(&x);
            let back = u * y;
            worst = worst.max((back - &x).norm() / x.norm());
        }
        for (c, &l) in self.eigen.values.iter().enumerate() {
            let v = u.column(c);
            let mut r0 = (self.corner - l) * v[0];
            let mut rr: f64 = 0.0;
            for k in 0..self.bath.n_modes {
                let w2 = self.bath.mode_freqs[k] * self.bath.mode_freqs[k];
                r0 += self.border[k] * v[k + 1];
                rr = rr.max((self.border[k] * v[0] + (w2 - l) * v[k + 1]).abs());
            }
            let scale = l.abs().max(self.corner);
            worst = worst.max(r0.abs().max(rr) / scale);
        }
        if worst > SYMPLECTIC_TOL {
            return Err(Error::PropagatorFailure(worst));
        }
        Ok(())
    }

    /// Heisenberg-equation generator in original units, phase-space order
    /// (x, p, x_1, p_1, ...): d/dt y = A y.
    #[must_use]
    pub fn generator(&self) -> DMatrix<f64> {
        let p = &self.params;
        let n = self.dim();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a[(0, 1)] = 1.0 / p.mass;
        a[(1, 0)] = -p.mass * self.corner;
        for k in 0..self.bath.n_modes {
            let (w, mk, ck) = (self.bath.mode_freqs[k], self.bath.mode_masses[k], self.bath.couplings[k]);
            let i = 2 * (k + 1);
            a[(i, i + 1)] = 1.0 / mk;
            a[(i + 1, i)] = -mk * w * w;
            a[(1, i)] = ck;
            a[(i + 1, 0)] = ck;
        }
        a
    }

    /// Factorized initial state: battery ground state, modes thermal.
    #[must_use]
    pub fn initial_state(&self) -> GaussianState {
        let n = self.dim();
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let mj = self.mass(j);
            cov[(2 * j, 2 * j)] = self.init_q[j] / mj;
            cov[(2 * j + 1, 2 * j + 1)] = self.init_pi[j] * mj;
        }
        GaussianState { t: 0.0, covariance: cov }
    }

    fn mass(&self, j: usize) -> f64 {
        if j == 0 {
            self.params.mass
        } else {
            self.bath.mode_masses[j - 1]
        }
    }
}

/// Zero-mean Gaussian state: symmetrized covariance in phase-space order
/// (x, p, x_1, p_1, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub t: f64,
    pub covariance: DMatrix<f64>,
}

/// J for the (x, p, x_1, p_1, ...) ordering.
#[must_use]
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(2 * i, 2 * i + 1)] = 1.0;
        j[(2 * i + 1, 2 * i)] = -1.0;
    }
    j
}

/// ||S^T J S - J||_F / ||J||_F.
#[must_use]
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let j = symplectic_form(s.nrows() / 2);
    (s.transpose() * &j * s - &j).norm() / j.norm()
}

/// exp(A t) by scaling and squaring; only for N <= DENSE_LIMIT.
pub fn propagator(dynamics: &Dynamics, t: f64) -> Result<DMatrix<f64>> {
    if dynamics.bath.n_modes > DENSE_LIMIT {
        return Err(Error::InvalidParams(format!(
            "dense propagation limited to {DENSE_LIMIT} modes, got {}",
            dynamics.bath.n_modes
        )));
    }
    let s = (dynamics.generator() * t).exp();
    let res = symplectic_residual(&s);
    if !(res <= SYMPLECTIC_TOL) {
        return Err(Error::PropagatorFailure(res));
    }
    Ok(s)
}

/// State after a further time `t` (dense route).
pub fn evolve(state: &GaussianState, dynamics: &Dynamics, t: f64) -> Result<GaussianState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams(format!("evolution time must be >= 0, got {t}")));
    }
    let s = propagator(dynamics, t)?;
    let mut cov = &s * &state.covariance * s.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState { t: state.t + t, covariance: cov })
}

/// Energies read off a full state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    /// Battery-side ledger, with the coupling energy from the battery moments
    /// alone (W_on and Omega taken from the finite bath).
    pub ledger: EnergyLedger,
    /// <H_C> summed term by term over the modes.
    pub h_coupling_direct: f64,
    /// Sum over modes of <H_R^(k)>, zero-point and thermal energy included.
    pub h_reservoir: f64,
    /// <H_B> + <H_C> + <H_R>.
    pub total_energy: f64,
    /// Per mode, change since t = 0 of the coupling and mode energies.
    pub mode_coupling: Vec<f64>,
    pub mode_reservoir: Vec<f64>,
}

/// Battery-only observables for the fast route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryObservables {
    pub ledger: EnergyLedger,
    pub h_coupling_direct: f64,
}

/// Mass-weighted second moments, enough for every energy.
struct Moments {
    t: f64,
    q00: f64,
    p00: f64,
    qp00: f64,
    /// <q_0 (K q)_0>
    q_kq: f64,
    q0k: Vec<f64>,
    qkk: Vec<f64>,
    pkk: Vec<f64>,
}

impl Dynamics {
    fn battery_ledger(&self, t: f64, q00: f64, p00: f64, qp00: f64, q_kq: f64) -> Result<BatteryObservables> {
        let m = self.params.mass;
        let (x2, v2, xv) = (q00 / m, p00 / m, qp00 / m);
        let x2_ddot = 2.0 * (v2 - q_kq / m);
        let ms = MomentSet::from_totals(t, x2, v2, xv, x2_ddot);
        let ledger = ledger_from_moments(&ms, &self.matched_params_or_self())?;
        // sum_k K_0k <q0 qk> + Omega_N^2 <q0^2> / 2
        let h_coupling_direct = q_kq - self.corner * q00 + 0.5 * self.omega_n_sq * q00;
        Ok(BatteryObservables { ledger, h_coupling_direct })
    }

    fn matched_params_or_self(&self) -> SystemParams {
        // with omega_D = 0 there is no bath to match, and Omega_N = 0 anyway
        self.matched_params().unwrap_or(self.params)
    }

    fn observables_from(&self, mm: &Moments) -> Result<Observables> {
        let b = self.battery_ledger(mm.t, mm.q00, mm.p00, mm.qp00, mm.q_kq)?;
        let mut direct = 0.5 * self.omega_n_sq * mm.q00;
        let mut h_res = 0.0;
        let n = self.bath.n_modes;
        let mut mode_coupling = Vec::with_capacity(n);
        let mut mode_reservoir = Vec::with_capacity(n);
        for k in 0..n {
            let w = self.bath.mode_freqs[k];
            let kb = self.border[k];
            let stat = 0.5 * kb * kb / (w * w);
            direct += kb * mm.q0k[k];
            mode_coupling.push(kb * mm.q0k[k] + stat * (mm.q00 - self.init_q[0]));
            let e = 0.5 * (mm.pkk[k] + w * w * mm.qkk[k]);
            h_res += e;
            mode_reservoir.push(e - 0.5 * (self.init_pi[k + 1] + w * w * self.init_q[k + 1]));
        }
        Ok(Observables {
            total_energy: b.ledger.e_stored + direct + h_res,
            ledger: b.ledger,
            h_coupling_direct: direct,
            h_reservoir: h_res,
            mode_coupling,
            mode_reservoir,
        })
    }
}

/// Every energy of a dense state.
pub fn observables(state: &GaussianState, dynamics: &Dynamics) -> Result<Observables> {
    let c = &state.covariance;
    let n = dynamics.bath.n_modes;
    let sq: Vec<f64> = (0..=n).map(|j| dynamics.mass(j).sqrt()).collect();
    let q = |i: usize, j: usize| c[(2 * i, 2 * j)] * sq[i] * sq[j];
    let q00 = q(0, 0);
    let q0k: Vec<f64> = (1..=n).map(|k| q(0, k)).collect();
    let q_kq = dynamics.corner * q00 + (0..n).map(|k| dynamics.border[k] * q0k[k]).sum::<f64>();
    let mm = Moments {
        t: state.t,
        q00,
        p00: c[(1, 1)] / (sq[0] * sq[0]),
        qp00: c[(0, 1)],
        q_kq,
        q0k,
        qkk: (1..=n).map(|k| q(k, k)).collect(),
        pkk: (1..=n).map(|k| c[(2 * k + 1, 2 * k + 1)] / (sq[k] * sq[k])).collect(),
    };
    dynamics.observables_from(&mm)
}

/// Every energy at time t through the normal modes, for any N. Builds the
/// three (N+1)^2 propagator blocks, so the cost is O(N^3) per time.
pub fn snapshot(dynamics: &Dynamics, t: f64) -> Result<Observables> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
    }
    let u = &dynamics.eigen.vectors;
    let nu = &dynamics.freqs;
    let scaled = |f: &dyn Fn(f64) -> f64| {
        let mut m = u.clone();
        for (c, &w) in nu.iter().enumerate() {
            m.column_mut(c).scale_mut(f(w));
        }
        &m * u.transpose()
    };
    // q(t) = C q(0) + S pi(0), pi(t) = -V q(0) + C pi(0)
    let cm = scaled(&|w| (w * t).cos());
    let sm = scaled(&|w| sin_over(w, t));
    let vm = scaled(&|w| w * (w * t).sin());
    let (cq, cp) = (&dynamics.init_q, &dynamics.init_pi);
    let n = dynamics.dim();
    // sum_l a[i, l] b[j, l] w[l]; all three blocks are symmetric, so rows are read as columns
    let row = |a: &DMatrix<f64>, b: &DMatrix<f64>, i: usize, j: usize, w: &[f64]| -> f64 {
        a.column(i).iter().zip(b.column(j).iter()).zip(w).map(|((x, y), w)| x * y * w).sum()
    };
    let q00 = row(&cm, &cm, 0, 0, cq) + row(&sm, &sm, 0, 0, cp);
    let p00 = row(&vm, &vm, 0, 0, cq) + row(&cm, &cm, 0, 0, cp);
    let qp00 = -row(&cm, &vm, 0, 0, cq) + row(&sm, &cm, 0, 0, cp);
    let per: Vec<(f64, f64, f64)> = (1..n)
        .into_par_iter()
        .map(|k| {
            let q0k = row(&cm, &cm, 0, k, cq) + row(&sm, &sm, 0, k, cp);
            let qkk = row(&cm, &cm, k, k, cq) + row(&sm, &sm, k, k, cp);
            let pkk = row(&vm, &vm, k, k, cq) + row(&cm, &cm, k, k, cp);
            (q0k, qkk, pkk)
        })
        .collect();
    let q0k: Vec<f64> = per.iter().map(|p| p.0).collect();
    let q_kq = dynamics.corner * q00 + (0..n - 1).map(|k| dynamics.border[k] * q0k[k]).sum::<f64>();
    let mm = Moments {
        t,
        q00,
        p00,
        qp00,
        q_kq,
        q0k,
        qkk: per.iter().map(|p| p.1).collect(),
        pkk: per.iter().map(|p| p.2).collect(),
    };
    dynamics.observables_from(&mm)
}

/// sin(w t) / w, finite at w = 0.
fn sin_over(w: f64, t: f64) -> f64 {
    if w * t == 0.0 {
        t
    } else {
        (w * t).sin() / w
    }
}

/// Battery ledgers on a time grid through the normal modes. Only the
/// battery row of the propagator is needed, so each time costs a few
/// matrix-vector products; times are batched into GEMMs and run in parallel.
pub fn battery_trace(dynamics: &Dynamics, times: &[f64]) -> Result<Vec<BatteryObservables>> {
    if let Some(&bad) = times.iter().find(|&&t| !(t >= 0.0)) {
        return Err(Error::InvalidParams(format!("time must be >= 0, got {bad}")));
    }
    const BLOCK: usize = 32;
    let u = &dynamics.eigen.vectors;
    let n = dynamics.dim();
    let a: Vec<f64> = u.row(0).iter().copied().collect();
    let nu = &dynamics.freqs;
    let (cq, cp) = (&dynamics.init_q, &dynamics.init_pi);
    let blocks: Vec<Vec<BatteryObservables>> = times
        .par_chunks(BLOCK)
        .map(|ts| {
            let nt = ts.len();
            // columns: a o cos, a o sin/nu, a o nu sin, a o nu^2 cos
            let mut f = DMatrix::zeros(n, 4 * nt);
            for (c, &t) in ts.iter().enumerate() {
                for l in 0..n {
                    let w = nu[l];
                    let (s, co) = (w * t).sin_cos();
                    f[(l, 4 * c)] = a[l] * co;
                    f[(l, 4 * c + 1)] = a[l] * sin_over(w, t);
                    f[(l, 4 * c + 2)] = a[l] * w * s;
                    f[(l, 4 * c + 3)] = a[l] * w * w * co;
                }
            }
            let r = u * f;
            ts.iter()
                .enumerate()
                .map(|(c, &t)| {
                    let (rc, rs, rv, rk) = (r.column(4 * c), r.column(4 * c + 1), r.column(4 * c + 2), r.column(4 * c + 3));
                    // q0(t) = rc.q + rs.pi ; pi0(t) = -rv.q + rc.pi ; (Kq)_0(t) = rk.q + rv.pi
                    let mut q00 = 0.0;
                    let mut p00 = 0.0;
                    let mut qp00 = 0.0;
                    let mut q_kq = 0.0;
                    for l in 0..n {
                        q00 += rc[l] * rc[l] * cq[l] + rs[l] * rs[l] * cp[l];
                        p00 += rv[l] * rv[l] * cq[l] + rc[l] * rc[l] * cp[l];
                        qp00 += -rc[l] * rv[l] * cq[l] + rs[l] * rc[l] * cp[l];
                        q_kq += rc[l] * rk[l] * cq[l] + rs[l] * rv[l] * cp[l];
                    }
                    dynamics.battery_ledger(t, q00, p00, qp00, q_kq)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}
