//! Brute-force reference: the Lindblad master equation on a truncated
//! photon ⊗ (electronic ⊗ vibration)^N space, for N ≤ 2.

pub mod liouvillian;
pub mod solver;
pub mod space;
pub mod spectrum;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use liouvillian::{
    build_hamiltonian, build_liouvillian, DephasingConvention, Liouvillian, OracleOptions,
    VibrationalDamping,
};
pub use solver::{steady_state, DensityDiagnostics, OracleSolver, SteadyState};
pub use space::{HilbertConfig, SparseOp, DIMENSION_CAP, MAX_MOLECULES};
pub use spectrum::{regression_spectrum, steady_observables, SteadyObservables};

use crate::error::{Error, Result};
use crate::model::{KernelPolicy, ModelParams};
use crate::spectrum::{check_grid, Order, PointFlag, SpectrumSeries, Values};
use crate::steady::{sweep, sweep_meta};

/// Truncation and convention choices for one oracle run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    pub photon_cutoff: usize,
    pub vib_cutoff: usize,
    pub dephasing: DephasingConvention,
    pub vib_damping: VibrationalDamping,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            photon_cutoff: 2,
            vib_cutoff: 2,
            dephasing: DephasingConvention::default(),
            vib_damping: VibrationalDamping::default(),
        }
    }
}

impl OracleSettings {
    pub fn hilbert(&self, n_molecules: u32) -> Result<HilbertConfig> {
        HilbertConfig::new(n_molecules, self.photon_cutoff, self.vib_cutoff)
    }

    pub fn options(&self) -> OracleOptions {
        OracleOptions {
            dephasing: self.dephasing,
            vib_damping: self.vib_damping,
        }
    }

    pub fn liouvillian(&self, params: &ModelParams) -> Result<Liouvillian> {
        build_liouvillian(params, &self.hilbert(params.n_molecules)?, &self.options())
    }
}

/// Steady state and its observables at one parameter point.
pub fn oracle_steady(params: &ModelParams, settings: &OracleSettings) -> Result<(SteadyState, SteadyObservables)> {
    let liou = settings.liouvillian(params)?;
    let ss = steady_state(&liou)?;
    let obs = steady_observables(liou.config(), &ss.rho);
    Ok((ss, obs))
}

/// 𝒯 = 2√(κ₁κ₂)⟨a⟩_ss/η from the master equation.
pub fn oracle_transmission(params: &ModelParams, settings: &OracleSettings) -> Result<Complex64> {
    if params.eta == 0.0 {
        return Err(Error::InvalidParameter {
            field: "eta",
            reason: "oracle transmission needs a non-zero probe".into(),
        });
    }
    let (_, obs) = oracle_steady(params, settings)?;
    Ok(2.0 * (params.kappa1 * params.kappa2).sqrt() * obs.a_ss / params.eta)
}

fn point<T: Copy>(r: Result<T>, fill: T) -> Result<(T, PointFlag)> {
    match r {
        Ok(v) => Ok((v, PointFlag::Ok)),
        Err(Error::NonConvergence { .. }) => Ok((fill, PointFlag::Singular)),
        Err(e) => Err(e),
    }
}

/// Oracle 𝒯 over a Δ_c grid.
pub fn oracle_transmission_sweep(
    params: &ModelParams,
    settings: &OracleSettings,
    grid: &[f64],
) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    settings.hilbert(params.n_molecules)?;
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let (values, flags) = sweep(grid, nan, |dc| {
        point(oracle_transmission(&params.with_cavity_detuning(dc), settings), nan)
    })?;
    SpectrumSeries::new(
        grid.to_vec(),
        Values::Complex(values),
        flags,
        sweep_meta("oracle_transmission", "delta_c", params, &KernelPolicy::default(), Order::First),
    )
}

/// Oracle total excited population Σₘ⟨Pₘ⟩ over a Δ_c grid.
pub fn oracle_population_sweep(
    params: &ModelParams,
    settings: &OracleSettings,
    grid: &[f64],
) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    settings.hilbert(params.n_molecules)?;
    let (values, flags) = sweep(grid, f64::NAN, |dc| {
        let p = params.with_cavity_detuning(dc);
        point(
            oracle_steady(&p, settings).map(|(_, o)| o.total_population(p.n_molecules)),
            f64::NAN,
        )
    })?;
    SpectrumSeries::new(
        grid.to_vec(),
        Values::Real(values),
        flags,
        sweep_meta("oracle_population", "delta_c", params, &KernelPolicy::default(), Order::First),
    )
}

/// Collective emission spectrum 2ℜC₊(ω) in the steady state.
pub fn oracle_fluorescence(
    params: &ModelParams,
    settings: &OracleSettings,
    grid: &[f64],
) -> Result<SpectrumSeries> {
    let liou = settings.liouvillian(params)?;
    let solver = OracleSolver::new(&liou)?;
    let ss = solver.steady_state()?;
    regression_spectrum(&solver, &ss.rho, &ss.rho, true, grid)
}
