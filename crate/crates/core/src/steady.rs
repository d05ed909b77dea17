//! Steady first moments, cavity transmission and polariton modes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::model::{KernelPolicy, ModelParams};
use crate::spectrum::{
    check_grid, significant_peaks, Order, Peak, PointFlag, SeriesMeta, SpectrumSeries, Values,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Steady ⟨a⟩ and ⟨σₘ⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstMoments {
    pub a_ss: Complex64,
    pub sigma_ss: Complex64,
    pub order: Order,
}

/// Hybridised decay rates and frequency shifts of the two bright modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonModes {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// iΔ_c + κ + Ng²χ, the common denominator of the first-order moments.
fn cavity_denominator(k: &KernelSet) -> Result<Complex64> {
    let p = k.params();
    let d = k.derived();
    let chi = k.chi()?;
    Ok(I * d.delta_c + d.kappa + p.n_molecules as f64 * p.g * p.g * chi)
}

pub fn first_moments_with(k: &KernelSet) -> Result<FirstMoments> {
    let p = k.params();
    let chi = k.chi()?;
    let den = cavity_denominator(k)?;
    if den.norm() < crate::kernels::POLE_THRESHOLD {
        return Err(Error::PoleProximity {
            kernel: "cavity_denominator",
            k: 0,
            magnitude: den.norm(),
        });
    }
    Ok(FirstMoments {
        a_ss: p.eta / den,
        sigma_ss: -I * p.g * p.eta * chi / den,
        order: Order::First,
    })
}

pub fn second_moments_with(k: &KernelSet) -> Result<FirstMoments> {
    let p = k.params();
    let d = k.derived();
    let n = p.n_molecules as f64;
    let g2 = p.g * p.g;
    let fc = 1.0 / (I * d.delta_c + d.kappa);
    let fm = k.chi()?;
    let f2 = k.fbar_2m(Complex64::new(0.0, 0.0))?;
    let bracket = f2 + (n - 1.0) * fc * fm * fm;
    let den = -1.0 + n * g2 * g2 * fc * bracket;
    if den.norm() < crate::kernels::POLE_THRESHOLD {
        return Err(Error::PoleProximity {
            kernel: "second_order_denominator",
            k: 0,
            magnitude: den.norm(),
        });
    }
    let a_ss = p.eta * fc * (-1.0 + n * g2 * fc * fm) / den;
    let sigma_ss = -I * p.eta * p.g * (g2 * fc * bracket - fc * fm) / den;
    Ok(FirstMoments {
        a_ss,
        sigma_ss,
        order: Order::Second,
    })
}

/// ⟨a⟩_ss = η/[(iΔ_c+κ) + Ng²χ], ⟨σₘ⟩_ss = −igηχ/[(iΔ_c+κ) + Ng²χ].
pub fn steady_first_moments(params: &ModelParams, policy: &KernelPolicy) -> Result<FirstMoments> {
    params.validate()?;
    first_moments_with(&KernelSet::new(params, policy))
}

/// First moments with the four-time displacement correlator kept, i.e. the
/// six-index kernel F̄₂,ₘ in place of the factorised F̄ₘ².
pub fn steady_first_moments_2nd(
    params: &ModelParams,
    policy: &KernelPolicy,
) -> Result<FirstMoments> {
    params.validate()?;
    second_moments_with(&KernelSet::new(params, policy))
}

pub fn steady_moments(params: &ModelParams, policy: &KernelPolicy, order: Order) -> Result<FirstMoments> {
    match order {
        Order::First => steady_first_moments(params, policy),
        Order::Second => steady_first_moments_2nd(params, policy),
    }
}

/// 𝒯 at one parameter point. η cancels, so the unit-drive moments are used.
pub fn transmission_point(params: &ModelParams, policy: &KernelPolicy, order: Order) -> Result<Complex64> {
    let unit = params.with_eta(1.0);
    let k = KernelSet::new(&unit, policy);
    let a = match order {
        Order::First => first_moments_with(&k)?.a_ss,
        Order::Second => second_moments_with(&k)?.a_ss,
    };
    Ok(2.0 * (params.kappa1 * params.kappa2).sqrt() * a)
}

pub(crate) fn sweep_meta(
    quantity: &str,
    variable: &str,
    params: &ModelParams,
    policy: &KernelPolicy,
    order: Order,
) -> SeriesMeta {
    SeriesMeta {
        quantity: quantity.into(),
        variable: variable.into(),
        params: *params,
        policy: *policy,
        order,
        validity: params.validity_flags(),
    }
}

/// Evaluates `f` on every grid point in parallel, keeping grid order.
/// Point-level numerical errors become flags; anything else aborts.
pub(crate) fn sweep<T, F>(grid: &[f64], fill: T, f: F) -> Result<(Vec<T>, Vec<PointFlag>)>
where
    T: Send + Copy,
    F: Fn(f64) -> Result<(T, PointFlag)> + Sync,
{
    let results: Vec<Result<(T, PointFlag)>> = grid.par_iter().map(|x| f(*x)).collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    for r in results {
        match r {
            Ok((v, flag)) => {
                values.push(v);
                flags.push(flag);
            }
            Err(e) => match PointFlag::from_error(&e) {
                Some(flag) => {
                    values.push(fill);
                    flags.push(flag);
                }
                None => return Err(e),
            },
        }
    }
    Ok((values, flags))
}

/// Complex transmission over a grid of cavity detunings Δ_c.
pub fn transmission(params: &ModelParams, policy: &KernelPolicy, grid: &[f64]) -> Result<SpectrumSeries> {
    transmission_with_order(params, policy, grid, Order::First)
}

pub fn transmission_with_order(
    params: &ModelParams,
    policy: &KernelPolicy,
    grid: &[f64],
    order: Order,
) -> Result<SpectrumSeries> {
    params.validate()?;
    policy.validate()?;
    check_grid(grid)?;
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let (values, flags) = sweep(grid, nan, |dc| {
        let t = transmission_point(&params.with_cavity_detuning(dc), policy, order)?;
        Ok((t, PointFlag::Ok))
    })?;
    SpectrumSeries::new(
        grid.to_vec(),
        Values::Complex(values),
        flags,
        sweep_meta("transmission", "delta_c", params, policy, order),
    )
}

/// Γ_± and ω_± at Δ = Δ_c = 0, from the principal square root of
/// (Γ_eff + iΔ_eff − κ)²/4 − Ng².
pub fn polariton_modes(params: &ModelParams, policy: &KernelPolicy) -> Result<PolaritonModes> {
    params.validate()?;
    let resonant = params.at_resonance();
    let k = KernelSet::new(&resonant, policy);
    let (g_eff, d_eff) = k.effective_rates()?;
    let kappa = k.derived().kappa;
    let n = resonant.n_molecules as f64;
    let half = Complex64::new(g_eff - kappa, d_eff) / 2.0;
    let root = (half * half - n * resonant.g * resonant.g).sqrt();
    Ok(PolaritonModes {
        omega_plus: -d_eff / 2.0 + root.im,
        omega_minus: -d_eff / 2.0 - root.im,
        gamma_plus: (g_eff + kappa) / 2.0 + root.re,
        gamma_minus: (g_eff + kappa) / 2.0 - root.re,
    })
}

/// N ≈ ω₋²/g².
pub fn estimate_n(omega_minus: f64, g: f64) -> Result<f64> {
    if !(g.abs() > 0.0) || !g.is_finite() {
        return Err(Error::InvalidParameter {
            field: "g",
            reason: format!("estimator needs a non-zero coupling, got {g}"),
        });
    }
    if !omega_minus.is_finite() {
        return Err(Error::InvalidInput(format!(
            "omega_minus must be finite, got {omega_minus}"
        )));
    }
    Ok(omega_minus * omega_minus / (g * g))
}

/// Lowest-frequency peak at least 1% as tall as the tallest one.
pub fn lower_peak(series: &SpectrumSeries) -> Option<Peak> {
    significant_peaks(series, 0.01).into_iter().next()
}

/// Highest-frequency peak at least 1% as tall as the tallest one.
pub fn upper_peak(series: &SpectrumSeries) -> Option<Peak> {
    significant_peaks(series, 0.01).into_iter().last()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{detect_peaks, uniform_grid};
    use proptest::prelude::*;

    fn fig2() -> ModelParams {
        ModelParams::figure2_defaults()
    }

    fn policy() -> KernelPolicy {
        KernelPolicy::default()
    }

    fn default_grid(p: &ModelParams) -> Vec<f64> {
        uniform_grid(-0.5 * p.nu, 0.5 * p.nu, 2001).unwrap()
    }

    #[test]
    fn empty_cavity() {
        let p = fig2().with_g(0.0).with_cavity_detuning(3.0);
        let m = steady_first_moments(&p, &policy()).unwrap();
        assert!((m.a_ss - 0.01 / Complex64::new(1.0, 3.0)).norm() < 1e-16);
        assert_eq!(m.sigma_ss, Complex64::new(0.0, 0.0));
        let t = transmission_point(&fig2().with_g(0.0), &policy(), Order::First).unwrap();
        assert!((t - 1.0).norm() < 1e-15);
    }

    #[test]
    fn resonant_bare_molecules() {
        let p = fig2().with_lambda(0.0).with_n_molecules(3).at_resonance();
        let m = steady_first_moments(&p, &policy()).unwrap();
        let want = p.eta / (1.0 + 3.0 * 25.0 / 3.0);
        assert!((m.a_ss - want).norm() < 1e-16);
    }

    #[test]
    fn second_order_collapses_at_zero_lambda() {
        for dc in [-40.0, 0.0, 13.0] {
            for n in [1, 2, 20] {
                let p = fig2().with_lambda(0.0).with_n_molecules(n).with_cavity_detuning(dc);
                let a = steady_first_moments(&p, &policy()).unwrap();
                let b = steady_first_moments_2nd(&p, &policy()).unwrap();
                assert!((a.a_ss - b.a_ss).norm() <= 1e-10 * a.a_ss.norm());
                assert!((a.sigma_ss - b.sigma_ss).norm() <= 1e-10 * a.sigma_ss.norm());
            }
        }
    }

    #[test]
    fn orders_differ_at_finite_lambda() {
        let p = fig2().with_n_molecules(1).with_lambda(0.2);
        let a = steady_first_moments(&p, &policy()).unwrap();
        let b = steady_first_moments_2nd(&p, &policy()).unwrap();
        let rel = (a.a_ss.norm() - b.a_ss.norm()).abs() / a.a_ss.norm();
        assert!(rel > 0.0 && rel < 0.5, "relative difference {rel}");
    }

    /// Maximiser of |T|² for λ = 0 at resonance on Δ_c > 0, by golden
    /// section on the closed form |iΔ+Γ_⊥|² / |(iΔ+κ)(iΔ+Γ_⊥) + Ng²|².
    fn bare_peak(n: f64) -> f64 {
        let f = |d: f64| {
            let x = Complex64::new(0.0, d);
            (x + 3.0).norm_sqr() / ((x + 1.0) * (x + 3.0) + n * 25.0).norm_sqr()
        };
        let (mut a, mut b): (f64, f64) = (0.5, 200.0);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        // Bracket the maximum on a coarse scan first.
        let best = (1..4000)
            .map(|i| 0.05 * i as f64)
            .max_by(|x, y| f(*x).partial_cmp(&f(*y)).unwrap())
            .unwrap();
        a = a.max(best - 0.1);
        b = b.min(best + 0.1);
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn zero_lambda_splitting() {
        for n in [2u32, 20, 200] {
            let p = fig2().with_lambda(0.0).with_n_molecules(n);
            let grid = default_grid(&p);
            let step = grid[1] - grid[0];
            let s = transmission(&p, &policy(), &grid).unwrap();
            let peaks = detect_peaks(&s);
            assert_eq!(peaks.len(), 2);
            assert!((peaks[0].frequency + peaks[1].frequency).abs() < 1e-6);
            let split = peaks[1].frequency - peaks[0].frequency;
            let exact = 2.0 * bare_peak(n as f64);
            assert!((split - exact).abs() < 0.01, "N={n}: {split} vs {exact}");
            let modes = 2.0 * (n as f64 * 25.0 - 4.0).sqrt();
            if n == 200 {
                assert!((split - modes).abs() < step);
            }
        }
    }

    #[test]
    fn polariton_limits() {
        let strong = fig2().with_lambda(0.0).with_n_molecules(400);
        let m = polariton_modes(&strong, &policy()).unwrap();
        assert!((m.omega_plus - 100.0).abs() < 0.1);
        assert!((m.omega_minus + 100.0).abs() < 0.1);

        let weak = ModelParams {
            gamma_phi: 5.0,
            ..fig2()
        }
        .with_lambda(0.0)
        .with_n_molecules(1)
        .with_g(0.5);
        let m = polariton_modes(&weak, &policy()).unwrap();
        assert_eq!(m.omega_plus, m.omega_minus);
    }

    #[test]
    fn estimator() {
        assert!((estimate_n(5.0 * 10.0, 5.0).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(estimate_n(0.0, 5.0).unwrap(), 0.0);
        assert!(estimate_n(3.0, 0.0).is_err());
    }

    #[test]
    fn estimator_end_to_end() {
        let p = fig2().with_n_molecules(100);
        let s = transmission(&p, &policy(), &default_grid(&p)).unwrap();
        let lower = lower_peak(&s).unwrap();
        let n_hat = estimate_n(lower.frequency, p.g).unwrap();
        assert!((n_hat - 100.0).abs() < 15.0, "estimate {n_hat}");
    }

    #[test]
    fn dark_polariton_peak_at_large_lambda() {
        let p = fig2().with_n_molecules(1000).with_lambda(0.6);
        let grid = uniform_grid(-2.0 * p.nu, 2.0 * p.nu, 4001).unwrap();
        let s = transmission(&p, &policy(), &grid).unwrap();
        assert!(detect_peaks(&s).len() >= 3);
        let p = p.with_n_molecules(200);
        let s = transmission(&p, &policy(), &grid).unwrap();
        assert_eq!(detect_peaks(&s).len(), 2);
    }

    #[test]
    fn pole_points_are_flagged() {
        let p = ModelParams {
            gamma_electronic: 0.0,
            gamma_phi: 0.0,
            ..fig2()
        }
        .with_lambda(0.0);
        let s = transmission(&p, &policy(), &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.flags, vec![PointFlag::Ok, PointFlag::Pole, PointFlag::Ok]);
    }

    proptest! {
        #[test]
        fn transmission_independent_of_eta(dc in -150.0f64..150.0, lambda in 0.0f64..1.0,
                                           n in 1u32..300, eta in 1e-4f64..0.05) {
            let p = fig2().with_lambda(lambda).with_n_molecules(n).with_eta(eta).with_cavity_detuning(dc);
            let a = transmission_point(&p, &policy(), Order::First).unwrap();
            let b = transmission_point(&p.with_eta(2.0 * eta), &policy(), Order::First).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn passive_bound(dc in -150.0f64..150.0, lambda in 0.0f64..1.4, n in 1u32..400,
                         k1 in 0.01f64..2.0, k2 in 0.01f64..2.0, g in 0.0f64..10.0) {
            let p = ModelParams { kappa1: k1, kappa2: k2, g, ..fig2() }
                .with_lambda(lambda).with_n_molecules(n).with_cavity_detuning(dc);
            let t = transmission_point(&p, &policy(), Order::First).unwrap();
            let bound = 4.0 * k1 * k2 / ((k1 + k2) * (k1 + k2));
            prop_assert!(t.norm_sqr() <= bound * (1.0 + 1e-12));
            prop_assert!(bound <= 1.0 + 1e-15);
        }

        #[test]
        fn bare_symmetry(dc in 0.0f64..150.0, n in 1u32..400) {
            let p = fig2().with_lambda(0.0).with_n_molecules(n);
            let a = transmission_point(&p.with_cavity_detuning(dc), &policy(), Order::First).unwrap();
            let b = transmission_point(&p.with_cavity_detuning(-dc), &policy(), Order::First).unwrap();
            prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
        }

        #[test]
        fn polariton_sum_rules(lambda in 0.0f64..1.4, n in 1u32..400, g in 0.1f64..10.0) {
            let p = fig2().with_lambda(lambda).with_n_molecules(n).with_g(g);
            let m = polariton_modes(&p, &policy()).unwrap();
            let k = KernelSet::new(&p.at_resonance(), &policy());
            let (g_eff, d_eff) = k.effective_rates().unwrap();
            prop_assert!((m.gamma_plus + m.gamma_minus - (g_eff + 1.0)).abs() < 1e-12);
            prop_assert!((m.omega_plus + m.omega_minus + d_eff).abs() < 1e-12);
        }

        #[test]
        fn first_moments_linear_in_eta(dc in -100.0f64..100.0, eta in 1e-4f64..0.05) {
            let p = fig2().with_eta(eta).with_cavity_detuning(dc);
            let a = steady_first_moments(&p, &policy()).unwrap();
            let b = steady_first_moments(&p.with_eta(2.0 * eta), &policy()).unwrap();
            prop_assert!((b.a_ss - 2.0 * a.a_ss).norm() <= 1e-14 * b.a_ss.norm());
            prop_assert!((b.sigma_ss - 2.0 * a.sigma_ss).norm() <= 1e-14 * b.sigma_ss.norm());
        }
    }
}
