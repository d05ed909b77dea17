//! Dispatch of a [`RunConfig`] to the analytic and oracle routines, with
//! results collected into a labeled table.

use std::time::Instant;

use serde::Serialize;

use crate::config::{Command, GridSpec, RunConfig, Unit, Variable};
use crate::error::{Error, Result};
use crate::fluorescence::fluorescence_spectrum;
use crate::model::ModelParams;
use crate::moments::{population_spectrum, population_unit};
use crate::oracle::{oracle_steady, MAX_MOLECULES};
use crate::spectrum::{PointFlag, SpectrumSeries};
use crate::steady::{estimate_n, lower_peak, polariton_modes, transmission_point, transmission_with_order};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A labeled output column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    pub symbol: String,
    /// Empty for dimensionless and text columns.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, symbol: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            symbol: symbol.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<PointFlag> for Cell {
    fn from(f: PointFlag) -> Self {
        Cell::Text(f.as_str().into())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric values of a column; non-numeric cells read as NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(x) => *x,
                    Cell::Int(n) => *n as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

/// A named scalar reported alongside the table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalar {
    pub name: String,
    pub symbol: String,
    pub unit: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultEnvelope {
    pub command: Command,
    pub config: RunConfig,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub table: Table,
    pub summary: Vec<Scalar>,
}

/// Default grid of each command, used when `[sweep]` (or `[grid]` for N
/// sweeps) gives none.
pub fn default_grid(command: Command) -> GridSpec {
    match command {
        Command::Fluorescence => GridSpec::range(Variable::Omega, -2.5, 1.5, 1601, Unit::Nu),
        Command::OracleCheck => GridSpec::range(Variable::DeltaC, -0.3, 0.3, 41, Unit::Nu),
        _ => GridSpec::range(Variable::DeltaC, -0.5, 0.5, 2001, Unit::Nu),
    }
}

struct Axis {
    values: Vec<f64>,
    scale: f64,
    unit: Unit,
}

impl Axis {
    fn resolve(spec: &GridSpec, fallback: GridSpec, params: &ModelParams) -> Result<Self> {
        let spec = if spec.is_empty() { fallback } else { spec.clone() };
        Ok(Self {
            values: spec.resolve(params)?,
            scale: spec.unit.scale(params)?,
            unit: spec.unit,
        })
    }

    fn display(&self, x: f64) -> f64 {
        x / self.scale
    }
}

/// Molecule numbers and the inner frequency axis of a run.
fn axes(config: &RunConfig, command: Command, inner: Variable) -> Result<(Vec<u32>, Axis, bool)> {
    let fallback = default_grid(command);
    let variable = config.sweep_variable(command);
    if variable == Variable::NMolecules {
        let ns = config.n_values()?;
        let axis = Axis::resolve(&config.grid, fallback, &config.physics)?;
        Ok((ns, axis, true))
    } else {
        if variable != inner {
            return Err(Error::Config(format!(
                "{command} sweeps {} or n_molecules, not {}",
                inner.as_str(),
                variable.as_str()
            )));
        }
        let axis = Axis::resolve(&config.sweep, fallback, &config.physics)?;
        Ok((vec![config.physics.n_molecules], axis, false))
    }
}

fn n_column() -> Column {
    Column::new("n_molecules", "N", "")
}

fn flag_column() -> Column {
    Column::new("flag", "flag", "")
}

fn series_flags(s: &SpectrumSeries) -> impl Iterator<Item = (f64, PointFlag)> + '_ {
    s.grid.iter().copied().zip(s.flags.iter().copied())
}

fn run_transmission(config: &RunConfig) -> Result<(Table, Vec<Scalar>)> {
    let (ns, axis, long) = axes(config, Command::Transmission, Variable::DeltaC)?;
    let u = axis.unit.symbol();
    let mut cols = vec![
        Column::new("delta_c", "Δ_c", u),
        Column::new("re_T", "Re 𝒯", ""),
        Column::new("im_T", "Im 𝒯", ""),
        Column::new("abs_T_sq", "|𝒯|²", ""),
        flag_column(),
    ];
    if long {
        cols.insert(0, n_column());
    }
    let mut table = Table::new(cols);
    for n in ns {
        let p = config.physics.with_n_molecules(n);
        let s = transmission_with_order(&p, &config.policy, &axis.values, config.order)?;
        let t = s.complex_values().unwrap_or_default();
        for ((x, flag), z) in series_flags(&s).zip(t) {
            let mut row: Vec<Cell> = vec![
                axis.display(x).into(),
                z.re.into(),
                z.im.into(),
                z.norm_sqr().into(),
                flag.into(),
            ];
            if long {
                row.insert(0, n.into());
            }
            table.push(row);
        }
    }
    Ok((table, Vec::new()))
}

fn run_fluorescence(config: &RunConfig) -> Result<(Table, Vec<Scalar>)> {
    let (ns, axis, long) = axes(config, Command::Fluorescence, Variable::Omega)?;
    let mut cols = vec![
        Column::new("omega", "ω", axis.unit.symbol()),
        Column::new("S", "S(ω)", "1/Γ"),
        flag_column(),
    ];
    if long {
        cols.insert(0, n_column());
    }
    let mut table = Table::new(cols);
    for n in ns {
        let p = config.physics.with_n_molecules(n);
        let s = fluorescence_spectrum(&p, &config.policy, &axis.values)?;
        let v = s.real_values().unwrap_or_default();
        for ((x, flag), y) in series_flags(&s).zip(v) {
            let mut row: Vec<Cell> = vec![axis.display(x).into(), (*y).into(), flag.into()];
            if long {
                row.insert(0, n.into());
            }
            table.push(row);
        }
    }
    Ok((table, Vec::new()))
}

fn run_population(config: &RunConfig) -> Result<(Table, Vec<Scalar>)> {
    let (ns, axis, long) = axes(config, Command::Population, Variable::DeltaC)?;
    let unit = population_unit(&config.physics, &config.policy)?;
    let mut cols = vec![
        Column::new("delta_c", "Δ_c", axis.unit.symbol()),
        Column::new("P_N", "𝒫_N", ""),
        Column::new("P_N_rel", "𝒫_N/𝒫₁(λ=0)", ""),
        flag_column(),
    ];
    if long {
        cols.insert(0, n_column());
    }
    let mut table = Table::new(cols);
    for n in ns {
        let p = config.physics.with_n_molecules(n);
        let s = population_spectrum(
            &p,
            &config.policy,
            &axis.values,
            config.order,
            config.include_intermolecular,
        )?;
        let v = s.real_values().unwrap_or_default();
        for ((x, flag), y) in series_flags(&s).zip(v) {
            let mut row: Vec<Cell> = vec![axis.display(x).into(), (*y).into(), (y / unit).into(), flag.into()];
            if long {
                row.insert(0, n.into());
            }
            table.push(row);
        }
    }
    let summary = vec![Scalar {
        name: "population_unit".into(),
        symbol: "𝒫₁(λ=0, Δ=0)".into(),
        unit: String::new(),
        value: unit,
    }];
    Ok((table, summary))
}

fn run_polaritons(config: &RunConfig) -> Result<(Table, Vec<Scalar>)> {
    let ns = match config.sweep_variable(Command::Polaritons) {
        Variable::NMolecules => config.n_values()?,
        v => {
            return Err(Error::Config(format!(
                "polaritons sweeps n_molecules, not {}",
                v.as_str()
            )))
        }
    };
    let mut table = Table::new(vec![
        n_column(),
        Column::new("omega_plus", "ω₊", "Γ"),
        Column::new("omega_minus", "ω₋", "Γ"),
        Column::new("gamma_plus", "Γ₊", "Γ"),
        Column::new("gamma_minus", "Γ₋", "Γ"),
        Column::new("splitting", "ω₊ − ω₋", "Γ"),
    ]);
    for n in ns {
        let m = polariton_modes(&config.physics.with_n_molecules(n), &config.policy)?;
        table.push(vec![
            n.into(),
            m.omega_plus.into(),
            m.omega_minus.into(),
            m.gamma_plus.into(),
            m.gamma_minus.into(),
            (m.omega_plus - m.omega_minus).into(),
        ]);
    }
    Ok((table, Vec::new()))
}

fn run_estimate_n(config: &RunConfig) -> Result<(Table, Vec<Scalar>)> {
    let (ns, axis, _) = axes(config, Command::EstimateN, Variable::DeltaC)?;
    let mut table = Table::new(vec![
        n_column(),
        Column::new("lower_peak", "Δ_c at lower |𝒯|² peak", axis.unit.symbol()),
        Column::new("n_hat", "N̂", ""),
        Column::new("rel_error", "(N̂ − N)/N", ""),
        flag_column(),
    ]);
    let mut worst = 0.0_f64;
    for n in ns {
        let p = config.physics.with_n_molecules(n);
        let s = transmission_with_order(&p, &config.policy, &axis.values, config.order)?;
        match lower_peak(&s) {
            Some(peak) => {
                let n_hat = estimate_n(peak.frequency, p.g)?;
                let rel = (n_hat - n as f64) / n as f64;
                worst = worst.max(rel.abs());
                table.push(vec![
                    n.into(),
                    axis.display(peak.frequency).into(),
                    n_hat.into(),
                    rel.into(),
                    PointFlag::Ok.into(),
                ]);
            }
            None => table.push(vec![
                n.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                Cell::Text("no_peak".into()),
            ]),
        }
    }
    let summary = vec![Scalar {
        name: "max_abs_rel_error".into(),
        symbol: "max |N̂ − N|/N".into(),
        unit: String::new(),
        value: worst,
    }];
    Ok((table, summary))
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn run_oracle_check(config: &RunConfig) -> Result<(Table, Vec<Scalar>)> {
    let (ns, axis, long) = axes(config, Command::OracleCheck, Variable::DeltaC)?;
    if let Some(n) = ns.iter().find(|n| **n > MAX_MOLECULES) {
        return Err(Error::Config(format!(
            "oracle-check supports at most {MAX_MOLECULES} molecules, got {n}"
        )));
    }
    if config.physics.eta == 0.0 {
        return Err(Error::Config("oracle-check needs physics.eta > 0".into()));
    }
    let mut cols = vec![
        Column::new("delta_c", "Δ_c", axis.unit.symbol()),
        Column::new("abs_T_sq", "|𝒯|² analytic", ""),
        Column::new("abs_T_sq_oracle", "|𝒯|² oracle", ""),
        Column::new("rel_dev_T", "relative deviation of |𝒯|²", ""),
        Column::new("P_N", "𝒫_N analytic", ""),
        Column::new("P_N_oracle", "𝒫_N oracle", ""),
        Column::new("rel_dev_P", "relative deviation of 𝒫_N", ""),
        flag_column(),
    ];
    if long {
        cols.insert(0, n_column());
    }
    let mut table = Table::new(cols);
    let (mut worst_t, mut worst_p) = (0.0_f64, 0.0_f64);
    for n in ns {
        let base = config.physics.with_n_molecules(n);
        let pop = population_spectrum(
            &base,
            &config.policy,
            &axis.values,
            config.order,
            config.include_intermolecular,
        )?;
        let pop = pop.real_values().unwrap_or_default().to_vec();
        for (i, &dc) in axis.values.iter().enumerate() {
            let p = base.with_cavity_detuning(dc);
            let analytic = transmission_point(&p, &config.policy, config.order).ok();
            let oracle = oracle_steady(&p, &config.oracle);
            let (t_a, p_a) = (analytic.map_or(f64::NAN, |z| z.norm_sqr()), pop[i]);
            let (t_o, p_o, flag) = match oracle {
                Ok((_, obs)) => {
                    let t = 2.0 * (p.kappa1 * p.kappa2).sqrt() * obs.a_ss / p.eta;
                    (t.norm_sqr(), obs.total_population(n), PointFlag::Ok)
                }
                Err(e) => match PointFlag::from_error(&e) {
                    Some(f) => (f64::NAN, f64::NAN, f),
                    None => return Err(e),
                },
            };
            let flag = if analytic.is_none() { PointFlag::Singular } else { flag };
            let (dt, dp) = (rel_dev(t_a, t_o), rel_dev(p_a, p_o));
            if flag.is_ok() {
                worst_t = worst_t.max(dt);
                worst_p = worst_p.max(dp);
            }
            let mut row: Vec<Cell> = vec![
                axis.display(dc).into(),
                t_a.into(),
                t_o.into(),
                dt.into(),
                p_a.into(),
                p_o.into(),
                dp.into(),
                flag.into(),
            ];
            if long {
                row.insert(0, n.into());
            }
            table.push(row);
        }
    }
    let summary = vec![
        Scalar {
            name: "max_rel_dev_T".into(),
            symbol: "max relative deviation of |𝒯|²".into(),
            unit: String::new(),
            value: worst_t,
        },
        Scalar {
            name: "max_rel_dev_P".into(),
            symbol: "max relative deviation of 𝒫_N".into(),
            unit: String::new(),
            value: worst_p,
        },
    ];
    Ok((table, summary))
}

/// Runs `command` under `config`. The config must already be validated.
pub fn run(command: Command, config: &RunConfig) -> Result<ResultEnvelope> {
    let start = Instant::now();
    let (table, summary) = match command {
        Command::Transmission => run_transmission(config)?,
        Command::Fluorescence => run_fluorescence(config)?,
        Command::Population => run_population(config)?,
        Command::Polaritons => run_polaritons(config)?,
        Command::EstimateN => run_estimate_n(config)?,
        Command::OracleCheck => run_oracle_check(config)?,
    };
    let mut snapshot = config.clone();
    snapshot.command = Some(command);
    Ok(ResultEnvelope {
        command,
        config: snapshot,
        version: VERSION,
        wall_time_s: start.elapsed().as_secs_f64(),
        table,
        summary,
    })
}

