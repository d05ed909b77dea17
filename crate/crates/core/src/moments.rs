//! Steady second moments from the Laplace-domain moment systems.
//!
//! First order: V₁ = (⟨n_c⟩, ⟨aσₘ†⟩, ⟨a†σₘ⟩, ⟨Pₘ⟩, ⟨σₘ†σₙ⟩).
//! Second order: V₂ = (⟨n_c⟩, ⟨a†σₘ⟩, ⟨aσₘ†⟩, ⟨Pₘ⟩).
//! Both satisfy M·V + η·V_in = 0 at s = 0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::model::{KernelPolicy, ModelParams};
use crate::spectrum::{check_grid, Order, PointFlag, SpectrumSeries, Values};
use crate::steady::{first_moments_with, sweep, sweep_meta, FirstMoments};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Condition numbers above this mark a solve as ill-conditioned.
pub const CONDITION_WARN: f64 = 1e8;
/// Relative residual every accepted solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Slack on the physical bounds of populations.
pub const PHYSICAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMoments {
    pub n_c: f64,
    /// ⟨a†σₘ⟩
    pub a_dag_sigma: Complex64,
    /// ⟨aσₘ†⟩
    pub a_sigma_dag: Complex64,
    pub p_m: f64,
    /// ⟨σₙ†σₘ⟩ for n ≠ m; first order only.
    pub cross: Option<Complex64>,
    pub order: Order,
    /// 1-norm condition number of the drift matrix.
    pub condition: f64,
    /// ‖M·V + η·V_in‖ / ‖η·V_in‖.
    pub residual: f64,
}

impl SecondMoments {
    /// Whether n_c ≥ 0 and 0 ≤ p_m ≤ 1 within tolerance.
    pub fn is_physical(&self) -> bool {
        self.n_c >= -PHYSICAL_TOL && self.p_m >= -PHYSICAL_TOL && self.p_m <= 1.0 + PHYSICAL_TOL
    }

    pub fn flag(&self) -> PointFlag {
        if self.condition > CONDITION_WARN {
            PointFlag::Singular
        } else if !self.is_physical() {
            PointFlag::Unphysical
        } else {
            PointFlag::Ok
        }
    }
}

/// Steady fluctuation correlations feeding the fluorescence system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationInputs {
    /// ⟨δσₘ†δσₘ⟩
    pub d_sigma_sigma: f64,
    /// ⟨δσₘ†δσₙ⟩
    pub d_sigma_cross: Complex64,
    /// ⟨δσₘ†δa⟩
    pub d_sigma_a: Complex64,
}

pub(crate) struct Solved {
    pub v: DVector<Complex64>,
    pub condition: f64,
    pub residual: f64,
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves M·x = rhs by LU with partial pivoting, reporting the 1-norm
/// condition number and the relative residual.
pub(crate) fn solve_dense(m: &DMatrix<Complex64>, rhs: &DVector<Complex64>) -> Result<Solved> {
    let size = m.nrows();
    let lu = m.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularMatrix {
        size,
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(m) * one_norm(&inverse);
    if !condition.is_finite() || condition > 1e15 {
        return Err(Error::SingularMatrix { size, condition });
    }
    let v = lu
        .solve(rhs)
        .ok_or(Error::SingularMatrix { size, condition })?;
    let scale = rhs.norm();
    let residual = if scale == 0.0 {
        (m * &v).norm()
    } else {
        (m * &v - rhs).norm() / scale
    };
    if residual > RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            solver: "dense LU",
            residual,
            iterations: 1,
        });
    }
    Ok(Solved {
        v,
        condition,
        residual,
    })
}

fn solve_drift(m: DMatrix<Complex64>, v_in: DVector<Complex64>, eta: f64) -> Result<Solved> {
    let rhs = v_in.map(|z| -z * eta);
    solve_dense(&m, &rhs)
}

/// First-order drift matrix and input vector.
fn m1_system(
    k: &KernelSet,
    first: &FirstMoments,
    include_intermolecular: bool,
) -> Result<(DMatrix<Complex64>, DVector<Complex64>)> {
    let p = k.params();
    let d = k.derived();
    let n = p.n_molecules as f64;
    let g = p.g;
    let s0 = ZERO;
    let fp = k.fbar_m_prime(s0)?;
    let fmn = if include_intermolecular {
        k.fbar_mn(s0)?
    } else {
        ZERO
    };
    let fpc = fp.conj();
    let ig = I * g;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(5, 5, &[
        (-2.0 * d.kappa).into(), ig * n, -ig * n, ZERO, ZERO,
        ig * fpc, (-1.0).into(), ZERO, -ig * fpc, -ig * (n - 1.0) * fpc,
        -ig * fp, ZERO, (-1.0).into(), ig * fp, ig * (n - 1.0) * fp,
        ZERO, -ig, ig, (-d.gamma_par).into(), ZERO,
        ZERO, -ig * fmn, ig * fmn, ZERO, (-1.0).into(),
    ]);
    let a = first.a_ss;
    let sigma = first.sigma_ss;
    let v_in = DVector::from_column_slice(&[
        a + a.conj(),
        fpc * sigma.conj(),
        fp * sigma,
        ZERO,
        ZERO,
    ]);
    Ok((m, v_in))
}

/// Second-order drift matrix and input vector.
fn m2_system(
    k: &KernelSet,
    first: &FirstMoments,
) -> Result<(DMatrix<Complex64>, DVector<Complex64>)> {
    let p = k.params();
    let d = k.derived();
    let n = p.n_molecules as f64;
    let g = p.g;
    let s0 = ZERO;
    let fp = k.fbar_m_prime(s0)?;
    let fmn = k.fbar_mn_cascade(s0)?;
    let fcm = k.fbar_cm_prime(s0)?;
    let ig = I * g;
    let pair = (n - 1.0) * g * g * fmn;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        (-2.0 * d.kappa).into(), -ig * n, ig * n, ZERO,
        -ig * fp, -pair - 1.0, pair, ig * fp,
        ig * fp.conj(), pair.conj(), -pair.conj() - 1.0, -ig * fp.conj(),
        ZERO, ig, -ig, (-d.gamma_par).into(),
    ]);
    let a = first.a_ss;
    let v_in = DVector::from_column_slice(&[
        a + a.conj(),
        -ig * fcm * a,
        ig * fcm.conj() * a.conj(),
        ZERO,
    ]);
    Ok((m, v_in))
}

fn m1_with(k: &KernelSet, include_intermolecular: bool) -> Result<SecondMoments> {
    let first = first_moments_with(k)?;
    let (m, v_in) = m1_system(k, &first, include_intermolecular)?;
    let s = solve_drift(m, v_in, k.params().eta)?;
    Ok(SecondMoments {
        n_c: s.v[0].re,
        a_sigma_dag: s.v[1],
        a_dag_sigma: s.v[2],
        p_m: s.v[3].re,
        cross: Some(s.v[4]),
        order: Order::First,
        condition: s.condition,
        residual: s.residual,
    })
}

fn m2_with(k: &KernelSet) -> Result<SecondMoments> {
    let first = first_moments_with(k)?;
    let (m, v_in) = m2_system(k, &first)?;
    let s = solve_drift(m, v_in, k.params().eta)?;
    Ok(SecondMoments {
        n_c: s.v[0].re,
        a_dag_sigma: s.v[1],
        a_sigma_dag: s.v[2],
        p_m: s.v[3].re,
        cross: None,
        order: Order::Second,
        condition: s.condition,
        residual: s.residual,
    })
}

/// First-order second moments. `include_intermolecular = false` drops the
/// cavity-induced pair correlation kernel F̄ₘₙ.
pub fn solve_m1(
    params: &ModelParams,
    policy: &KernelPolicy,
    include_intermolecular: bool,
) -> Result<SecondMoments> {
    params.validate()?;
    m1_with(&KernelSet::new(params, policy), include_intermolecular)
}

/// Second-order second moments; the pair correlation is resolved inside
/// the ⟨a†σₘ⟩ equation instead of carried as a separate unknown.
pub fn solve_m2(params: &ModelParams, policy: &KernelPolicy) -> Result<SecondMoments> {
    params.validate()?;
    m2_with(&KernelSet::new(params, policy))
}

pub fn solve_moments(
    params: &ModelParams,
    policy: &KernelPolicy,
    order: Order,
    include_intermolecular: bool,
) -> Result<SecondMoments> {
    match order {
        Order::First => solve_m1(params, policy, include_intermolecular),
        Order::Second => solve_m2(params, policy),
    }
}

fn single_molecule_denominator(p: &ModelParams, fp: Complex64) -> Result<f64> {
    let d = p.derive();
    let g2 = p.g * p.g;
    let den = p.gamma_electronic * d.kappa + g2 * (p.gamma_electronic + d.kappa) * fp.re;
    if den.abs() < 1e-300 {
        return Err(Error::SingularMatrix {
            size: 1,
            condition: f64::INFINITY,
        });
    }
    Ok(den)
}

/// Single-molecule population in closed form (first order).
pub fn p1_closed_form(params: &ModelParams, policy: &KernelPolicy) -> Result<f64> {
    let p = params.with_n_molecules(1);
    p.validate()?;
    let k = KernelSet::new(&p, policy);
    let first = first_moments_with(&k)?;
    let fp = k.fbar_m_prime(ZERO)?;
    let den = single_molecule_denominator(&p, fp)?;
    let kappa = p.derive().kappa;
    let num = p.eta * p.g * p.g * first.a_ss.re * fp.re
        - p.eta * p.g * kappa * (fp * first.sigma_ss).im;
    Ok(num / den)
}

/// Single-molecule population in closed form (second order).
pub fn p1_prime_closed_form(params: &ModelParams, policy: &KernelPolicy) -> Result<f64> {
    let p = params.with_n_molecules(1);
    p.validate()?;
    let k = KernelSet::new(&p, policy);
    let first = first_moments_with(&k)?;
    let fp = k.fbar_m_prime(ZERO)?;
    let fcm = k.fbar_cm_prime(ZERO)?;
    let den = single_molecule_denominator(&p, fp)?;
    let kappa = p.derive().kappa;
    let num = p.eta * p.g * p.g * (first.a_ss.re * fp.re + kappa * (fcm * first.a_ss).re);
    Ok(num / den)
}

/// Normalisation unit of population plots: the single-molecule closed form
/// at λ = 0 and Δ = Δ_c = 0.
pub fn population_unit(params: &ModelParams, policy: &KernelPolicy) -> Result<f64> {
    p1_closed_form(&params.with_lambda(0.0).at_resonance(), policy)
}

/// 𝒫_N = N·⟨Pₘ⟩ for identical molecules.
pub fn total_population(moments: &SecondMoments, n_molecules: u32) -> f64 {
    n_molecules as f64 * moments.p_m
}

pub fn fluctuations_from(first: &FirstMoments, second: &SecondMoments) -> FluctuationInputs {
    let s2 = first.sigma_ss.norm_sqr();
    FluctuationInputs {
        d_sigma_sigma: second.p_m - s2,
        d_sigma_cross: second.cross.unwrap_or(ZERO) - s2,
        d_sigma_a: second.a_dag_sigma.conj() - first.a_ss * first.sigma_ss.conj(),
    }
}

/// Fluctuation correlations from the first-order moments, pair kernel on.
pub fn fluctuation_inputs(params: &ModelParams, policy: &KernelPolicy) -> Result<FluctuationInputs> {
    params.validate()?;
    let k = KernelSet::new(params, policy);
    let first = first_moments_with(&k)?;
    let second = m1_with(&k, true)?;
    Ok(fluctuations_from(&first, &second))
}

/// Total excited population 𝒫_N over a grid of cavity detunings.
pub fn population_spectrum(
    params: &ModelParams,
    policy: &KernelPolicy,
    grid: &[f64],
    order: Order,
    include_intermolecular: bool,
) -> Result<SpectrumSeries> {
    params.validate()?;
    policy.validate()?;
    check_grid(grid)?;
    let (values, flags) = sweep(grid, f64::NAN, |dc| {
        let m = solve_moments(
            &params.with_cavity_detuning(dc),
            policy,
            order,
            include_intermolecular,
        )?;
        Ok((total_population(&m, params.n_molecules), m.flag()))
    })?;
    SpectrumSeries::new(
        grid.to_vec(),
        Values::Real(values),
        flags,
        sweep_meta("population", "delta_c", params, policy, order),
    )
}
