//! One function per run mode, each producing a table.

use std::f64::consts::PI;

use qbattery::asymptotics::{steady_state, sud_short_time, TemperatureRegime};
use qbattery::kernels::build_bath;
use qbattery::oracle::{battery_trace, build_dynamics};
use qbattery::params::{circuit_to_params, classify_regime, CRITICAL_TOL};
use qbattery::spectral::spectral_grid;
use qbattery::{solve_characteristic, trace, EnergyLedger, Result, SystemParams};

use crate::config::{sweep_params, Mode, RunConfig, SweepParam};
use crate::table::{Cell, Table};

pub const TRACE_COLUMNS: [&str; 10] =
    ["t", "t_scaled", "dE_B", "dE_C", "dE_R", "W", "ergotropy", "eta_B", "eta_W", "det_sigma"];

const ANALYTIC_COLUMNS: [&str; 6] =
    ["dE_B_lowT", "ergotropy_lowT", "eta_W_lowT", "dE_B_highT", "ergotropy_highT", "eta_W_highT"];

/// Oracle default: span 100 w0 with 4000 modes.
const ORACLE_DELTA: f64 = 0.025;
const ORACLE_MODES: usize = 4000;

pub fn run(cfg: &RunConfig) -> Result<Table> {
    match cfg.mode {
        Mode::Trace => trace_table(cfg, &cfg.params),
        Mode::Spectral => spectral_table(cfg),
        Mode::Steady => steady_table(&cfg.params),
        Mode::Oracle => oracle_table(cfg),
        Mode::Regime => regime_table(&cfg.params),
        Mode::Sweep => sweep_table(cfg),
        Mode::Circuit => circuit_table(cfg),
    }
}

fn time_grid(cfg: &RunConfig, p: &SystemParams) -> Vec<f64> {
    let t_max = cfg.t_max.unwrap_or(4.0 * PI / p.big_omega());
    let n = cfg.steps;
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

fn ledger_row(l: &EnergyLedger, p: &SystemParams) -> Vec<Cell> {
    vec![
        l.t.into(),
        (p.big_omega() * l.t / PI).into(),
        l.de_battery.into(),
        l.de_coupling().into(),
        l.de_reservoir.into(),
        l.w_total.into(),
        l.ergotropy.into(),
        l.eta_b.into(),
        l.eta_w.into(),
        l.det_sigma.into(),
    ]
}

fn trace_table(cfg: &RunConfig, p: &SystemParams) -> Result<Table> {
    let rf = solve_characteristic(p)?;
    let times = time_grid(cfg, p);
    let ledgers = trace(&rf, &times, &cfg.quad)?;
    let mut columns = TRACE_COLUMNS.to_vec();
    if cfg.analytic {
        columns.extend(ANALYTIC_COLUMNS);
    }
    let mut table = Table::new(&columns);
    for l in &ledgers {
        let mut row = ledger_row(l, p);
        if cfg.analytic {
            for regime in [TemperatureRegime::Low, TemperatureRegime::High] {
                let a = sud_short_time(p, l.t, regime)?;
                row.extend([a.de_battery.into(), a.ergotropy.into(), a.eta_w.into()]);
            }
        }
        table.push(row);
    }
    Ok(table)
}

fn sweep_table(cfg: &RunConfig) -> Result<Table> {
    let sweep = cfg.sweep.as_ref().expect("sweep resolved with its values");
    let name = match sweep.param {
        SweepParam::Gamma0 => "gamma0",
        SweepParam::Omegad => "omegaD",
        SweepParam::Temp => "temp",
    };
    let mut table: Option<Table> = None;
    for &v in &sweep.values {
        let p = sweep_params(&cfg.params, sweep.param, v)?;
        let part = trace_table(cfg, &p)?;
        let t = table.get_or_insert_with(|| {
            let mut cols = vec![name];
            cols.extend(part.columns.iter().map(String::as_str));
            Table::new(&cols)
        });
        for row in part.rows {
            let mut full = vec![Cell::Num(v)];
            full.extend(row);
            t.push(full);
        }
    }
    Ok(table.expect("at least one sweep value"))
}

fn spectral_table(cfg: &RunConfig) -> Result<Table> {
    let p = &cfg.params;
    let rf = solve_characteristic(p)?;
    let om = p.big_omega();
    // resolve the resonance at Omega and reach 4 Omega
    let delta = cfg.delta.unwrap_or(om / 1000.0);
    let modes = cfg.modes.unwrap_or((4.0 * om / delta).ceil() as usize);
    let bath = build_bath(p, delta, modes)?;
    let times = time_grid(cfg, p);
    let grid = spectral_grid(&rf, &bath, &times, &cfg.quad)?;
    let mut table = Table::new(&["t", "omega_k", "dE_C_over_Delta", "dE_R_over_Delta"]);
    for (i, &t) in grid.times.iter().enumerate() {
        for (k, &w) in grid.bath.mode_freqs.iter().enumerate() {
            table.push(vec![t.into(), w.into(), grid.de_c[i][k].into(), grid.de_r[i][k].into()]);
        }
    }
    Ok(table)
}

fn steady_table(p: &SystemParams) -> Result<Table> {
    let s = steady_state(&solve_characteristic(p)?)?;
    let mut table = Table::new(&["x2_inf", "v2_inf", "H_B_inf", "ergotropy_inf", "W_inf", "eta_W_inf"]);
    table.push(vec![
        s.x2_inf.into(),
        s.v2_inf.into(),
        s.h_b_inf.into(),
        s.ergotropy_inf.into(),
        s.w_inf.into(),
        s.eta_w_inf.into(),
    ]);
    Ok(table)
}

fn oracle_table(cfg: &RunConfig) -> Result<Table> {
    let p = &cfg.params;
    let bath = build_bath(p, cfg.delta.unwrap_or(ORACLE_DELTA), cfg.modes.unwrap_or(ORACLE_MODES))?;
    let dynamics = build_dynamics(&bath, p)?;
    let times = time_grid(cfg, p);
    let obs = battery_trace(&dynamics, &times)?;
    let mut table = Table::new(&TRACE_COLUMNS);
    for o in &obs {
        table.push(ledger_row(&o.ledger, p));
    }
    Ok(table)
}

fn regime_table(p: &SystemParams) -> Result<Table> {
    let tag = classify_regime(p, CRITICAL_TOL)?;
    let mut table = Table::new(&["regime", "sub_regime", "Omega", "W_on"]);
    table.push(vec![tag.kind.label().into(), tag.sub.label().into(), p.big_omega().into(), p.w_on().into()]);
    Ok(table)
}

fn circuit_table(cfg: &RunConfig) -> Result<Table> {
    let c = cfg.circuit.as_ref().expect("circuit resolved with its values");
    let p = circuit_to_params(c, cfg.params.temperature)?;
    let tag = classify_regime(&p, CRITICAL_TOL)?;
    let mut table = Table::new(&["omega0", "mass", "gamma0", "omegaD", "temp", "Omega", "W_on", "regime", "sub_regime"]);
    table.push(vec![
        p.omega0.into(),
        p.mass.into(),
        p.gamma0.into(),
        p.omega_d.into(),
        p.temperature.into(),
        p.big_omega().into(),
        p.w_on().into(),
        tag.kind.label().into(),
        tag.sub.label().into(),
    ]);
    Ok(table)
}
