//! Steady-state fluorescence from the 3×3 Fourier-domain correlation system.
//!
//! Unknowns are S_{σm}^m, S_{σn}^m and S_a^m, the transforms of
//! ⟨δσₘ†(0)δ𝒪(τ)⟩ for 𝒪 = σₘ, σₙ, a, with the convention
//! S(ω) = ∫₀^∞ dτ C(τ)e^{−iωτ} so that Stokes features sit at ω < 0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::KernelSet;
use crate::model::{KernelPolicy, ModelParams};
use crate::moments::{fluctuation_inputs, solve_dense, FluctuationInputs};
use crate::spectrum::{check_grid, Order, PointFlag, SpectrumSeries, Values};
use crate::steady::{sweep, sweep_meta};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSolution {
    pub s_mm: Complex64,
    pub s_mn: Complex64,
    pub s_am: Complex64,
    pub residual: f64,
}

impl CorrelationSolution {
    /// N·ℜS_{σm}^m + N(N−1)·ℜS_{σn}^m.
    pub fn total(&self, n_molecules: u32) -> f64 {
        let n = n_molecules as f64;
        n * self.s_mm.re + n * (n - 1.0) * self.s_mn.re
    }
}

fn build_ms_with(omega: f64, k: &KernelSet) -> Result<DMatrix<Complex64>> {
    let p = k.params();
    let n = p.n_molecules as f64;
    let ig = I * p.g;
    let fm = k.ftilde_m(omega)?;
    let fa = k.ftilde_a(omega)?;
    let one = Complex64::new(-1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 3, &[
        one, zero, -ig * fm,
        zero, one, -ig * fm,
        -ig * fa, -ig * (n - 1.0) * fa, one,
    ]);
    Ok(m)
}

/// Coefficient matrix ℳ_s(ω).
pub fn build_ms(omega: f64, params: &ModelParams, policy: &KernelPolicy) -> Result<DMatrix<Complex64>> {
    build_ms_with(omega, &KernelSet::new(params, policy))
}

fn solve_with(omega: f64, k: &KernelSet, inputs: &FluctuationInputs) -> Result<CorrelationSolution> {
    let m = build_ms_with(omega, k)?;
    let fm = k.ftilde_m(omega)?;
    let fa = k.ftilde_a(omega)?;
    let rhs = DVector::from_column_slice(&[
        -fm * inputs.d_sigma_sigma,
        -fm * inputs.d_sigma_cross,
        -fa * inputs.d_sigma_a,
    ]);
    let s = solve_dense(&m, &rhs)?;
    Ok(CorrelationSolution {
        s_mm: s.v[0],
        s_mn: s.v[1],
        s_am: s.v[2],
        residual: s.residual,
    })
}

/// 𝒮_Vec = −ℳ_s⁻¹𝒮_in at one frequency.
pub fn solve_correlations(
    omega: f64,
    params: &ModelParams,
    policy: &KernelPolicy,
    inputs: &FluctuationInputs,
) -> Result<CorrelationSolution> {
    solve_with(omega, &KernelSet::new(params, policy), inputs)
}

/// S(ω) over a grid of emission frequencies, with fluctuation inputs from
/// the first-order moment system.
pub fn fluorescence_spectrum(
    params: &ModelParams,
    policy: &KernelPolicy,
    grid: &[f64],
) -> Result<SpectrumSeries> {
    let inputs = fluctuation_inputs(params, policy)?;
    fluorescence_spectrum_with(params, policy, grid, &inputs)
}

pub fn fluorescence_spectrum_with(
    params: &ModelParams,
    policy: &KernelPolicy,
    grid: &[f64],
    inputs: &FluctuationInputs,
) -> Result<SpectrumSeries> {
    params.validate()?;
    policy.validate()?;
    check_grid(grid)?;
    let k = KernelSet::new(params, policy);
    let (values, flags) = sweep(grid, f64::NAN, |omega| {
        let sol = solve_with(omega, &k, inputs)?;
        let total = sol.total(params.n_molecules);
        let flag = if total.is_finite() {
            PointFlag::Ok
        } else {
            PointFlag::Singular
        };
        Ok((total, flag))
    })?;
    SpectrumSeries::new(
        grid.to_vec(),
        Values::Real(values),
        flags,
        sweep_meta("fluorescence", "omega", params, policy, Order::First),
    )
}
