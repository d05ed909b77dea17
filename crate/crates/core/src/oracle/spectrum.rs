//! Steady observables and the regression emission spectrum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solver::OracleSolver;
use super::space::{HilbertConfig, SparseOp};
use crate::error::Result;
use crate::model::KernelPolicy;
use crate::spectrum::{check_grid, Order, PointFlag, SeriesMeta, SpectrumSeries, Values};

/// Expectations extracted from a density matrix. Molecular quantities refer
/// to molecule 0; `cross` is ⟨σ₁†σ₀⟩ and exists only for two molecules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyObservables {
    pub n_c: f64,
    pub p_m: f64,
    pub a_dag_sigma: Complex64,
    pub sigma_dag_a: Complex64,
    pub cross: Option<Complex64>,
    pub a_ss: Complex64,
    pub sigma_ss: Complex64,
}

impl SteadyObservables {
    /// Σₘ⟨Pₘ⟩ for identical molecules.
    pub fn total_population(&self, n_molecules: u32) -> f64 {
        n_molecules as f64 * self.p_m
    }

    /// ⟨δσₘ†δσₘ⟩, ⟨δσₘ†δσₙ⟩ and ⟨δσₘ†δa⟩.
    pub fn fluctuations(&self) -> (f64, Option<Complex64>, Complex64) {
        let s2 = self.sigma_ss.norm_sqr();
        (
            self.p_m - s2,
            self.cross.map(|c| c - s2),
            self.sigma_dag_a - self.sigma_ss.conj() * self.a_ss,
        )
    }
}

pub fn steady_observables(config: &HilbertConfig, rho: &DMatrix<Complex64>) -> SteadyObservables {
    let a = config.a();
    let s0 = config.sigma(0);
    let n_c = a.adjoint().mul(&a).expect(rho).re;
    let p_m = s0.adjoint().mul(&s0).expect(rho).re;
    let cross = (config.n_molecules > 1).then(|| config.sigma(1).adjoint().mul(&s0).expect(rho));
    SteadyObservables {
        n_c,
        p_m,
        a_dag_sigma: a.adjoint().mul(&s0).expect(rho),
        sigma_dag_a: s0.adjoint().mul(&a).expect(rho),
        cross,
        a_ss: a.expect(rho),
        sigma_ss: s0.expect(rho),
    }
}

/// J = Σₘσₘ when `collective`, σ₀ otherwise.
pub fn emission_operator(config: &HilbertConfig, collective: bool) -> SparseOp {
    if collective {
        (1..config.n_molecules).fold(config.sigma(0), |acc, m| acc.add(&config.sigma(m)))
    } else {
        config.sigma(0)
    }
}

/// One-sided transform C₊(ω) = ∫₀^∞ dτ e^{iωτ}⟨δJ†(0)δJ(τ)⟩ in state ρ.
/// A line emitted at ω_l + ω₀ peaks at ω = ω₀, so Stokes light sits at ω < 0.
pub fn regression_transform(
    solver: &OracleSolver,
    rho: &DMatrix<Complex64>,
    rho_ss: &DMatrix<Complex64>,
    collective: bool,
    omega: f64,
) -> Result<Complex64> {
    let config = solver.liouvillian().config();
    let j = emission_operator(config, collective);
    let mean = j.expect(rho);
    let d = config.dim();
    let shift = SparseOp::identity(d).scale(-mean);
    let dj = j.add(&shift);
    // ρ·δJ† = (δJ·ρ)†.
    let y = dj.left(rho).adjoint();
    let x = solver.resolvent(-omega, &y, rho_ss)?;
    Ok(dj.trace_with(&x))
}

/// S(ω) = 2ℜC₊(ω) over `grid`, by quantum regression from `rho`
/// (normally the steady state).
pub fn regression_spectrum(
    solver: &OracleSolver,
    rho: &DMatrix<Complex64>,
    rho_ss: &DMatrix<Complex64>,
    collective: bool,
    grid: &[f64],
) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    for &omega in grid {
        match regression_transform(solver, rho, rho_ss, collective, omega) {
            Ok(c) => {
                values.push(2.0 * c.re);
                flags.push(PointFlag::Ok);
            }
            Err(e) if e.is_numerical() => {
                values.push(f64::NAN);
                flags.push(PointFlag::Singular);
            }
            Err(e) => return Err(e),
        }
    }
    let params = *solver.liouvillian().params();
    SpectrumSeries::new(
        grid.to_vec(),
        Values::Real(values),
        flags,
        SeriesMeta {
            quantity: "oracle_fluorescence".into(),
            variable: "omega".into(),
            params,
            policy: KernelPolicy::default(),
            order: Order::First,
            validity: params.validity_flags(),
        },
    )
}
