//! Displacement correlators and the Laplace/Fourier response kernels.
//!
//! Every kernel is a Poisson-weighted sum of Lorentzians: vibrational
//! sideband k carries weight λ^{2k}e^{−λ²}/k!, is shifted by kν and
//! broadened by kγ.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DerivedParams, KernelPolicy, ModelParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Denominators smaller than this are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-14;

/// Franck–Condon weights w_k = λ^{2k}e^{−λ²}/k!, truncated adaptively.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub lambda: f64,
    pub weights: Vec<f64>,
    /// Largest index kept.
    pub k_max: usize,
}

impl PoissonWeights {
    /// Keeps the smallest k_max whose discarded tail is below `tail_tol`,
    /// never exceeding `k_max_hard`.
    pub fn new(lambda: f64, policy: &KernelPolicy) -> Self {
        let mean = lambda * lambda;
        let mut w = (-mean).exp();
        let mut weights = vec![w];
        let mut kept = w;
        let mut k = 0;
        while 1.0 - kept >= policy.tail_tol && k < policy.k_max_hard {
            k += 1;
            w *= mean / k as f64;
            weights.push(w);
            kept += w;
        }
        Self {
            lambda,
            weights,
            k_max: k,
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of the discarded tail, 1 − Σ w_k.
    pub fn tail(&self) -> f64 {
        (1.0 - self.total()).max(0.0)
    }
}

fn check_pole(kernel: &'static str, k: usize, den: Complex64) -> Result<Complex64> {
    let magnitude = den.norm();
    if magnitude < POLE_THRESHOLD || !magnitude.is_finite() {
        return Err(Error::PoleProximity {
            kernel,
            k,
            magnitude,
        });
    }
    Ok(den)
}

/// ⟨D(t+τ)D†(t)⟩ = e^{−λ²} exp(λ² e^{−(γ+iν)τ}) for τ ≥ 0.
pub fn disp_corr_2t(tau: f64, lambda: f64, nu: f64, gamma_vib: f64) -> Result<Complex64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!(
            "two-time correlator needs a finite tau >= 0, got {tau}"
        )));
    }
    let l2 = lambda * lambda;
    let decay = (-(Complex64::new(gamma_vib, nu)) * tau).exp();
    Ok((-l2 + l2 * decay).exp())
}

/// ⟨D(t)D†(t₁)D(t₂)D†(t₃)⟩ for t ≥ t₁ ≥ t₂ ≥ t₃ ≥ 0.
///
/// Equal adjacent times are accepted; they are limits of the ordered case.
pub fn disp_corr_4t(
    t: f64,
    t1: f64,
    t2: f64,
    t3: f64,
    lambda: f64,
    nu: f64,
    gamma_vib: f64,
) -> Result<Complex64> {
    let finite = [t, t1, t2, t3].iter().all(|x| x.is_finite());
    if !finite || !(t >= t1 && t1 >= t2 && t2 >= t3 && t3 >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "four-time correlator needs t >= t1 >= t2 >= t3 >= 0, got ({t}, {t1}, {t2}, {t3})"
        )));
    }
    let rate = Complex64::new(gamma_vib, nu);
    let x = (-rate * (t - t1)).exp();
    let y = (-rate * (t1 - t2)).exp();
    let z = (-rate * (t2 - t3)).exp();
    let l2 = lambda * lambda;
    let exponent = x - x * y + x * y * z + y - y * z + z;
    Ok((-2.0 * l2 + l2 * exponent).exp())
}

/// Coefficients of the six-index sum regrouped by the exponents of the
/// three propagators: C[a][b][c] = Σ (−1)^{k₂+k₅} λ^{2Σk}/Πk! over
/// a = k₁+k₂+k₃, b = k₂+k₃+k₄+k₅, c = k₃+k₅+k₆ and Σk ≤ cap.
#[derive(Debug)]
struct SixIndexCoefficients {
    cap: usize,
    data: Vec<f64>,
}

impl SixIndexCoefficients {
    fn build(lambda: f64, cap: usize) -> Self {
        let n = cap + 1;
        let l2 = lambda * lambda;
        let mut f = vec![1.0; n];
        for k in 1..n {
            f[k] = f[k - 1] * l2 / k as f64;
        }
        let mut data = vec![0.0; n * n * n];
        for k2 in 0..n {
            for k5 in 0..n - k2 {
                let sign = if (k2 + k5) % 2 == 0 { 1.0 } else { -1.0 };
                let f25 = sign * f[k2] * f[k5];
                for k3 in 0..n - k2 - k5 {
                    let f235 = f25 * f[k3];
                    let used = k2 + k5 + k3;
                    for k1 in 0..n - used {
                        let f1 = f235 * f[k1];
                        let a = k1 + k2 + k3;
                        for k4 in 0..n - used - k1 {
                            let f14 = f1 * f[k4];
                            let b = k2 + k3 + k4 + k5;
                            let base = (a * n + b) * n;
                            for k6 in 0..n - used - k1 - k4 {
                                let c = k3 + k5 + k6;
                                data[base + c] += f14 * f[k6];
                            }
                        }
                    }
                }
            }
        }
        Self { cap, data }
    }

    fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.cap + 1;
        self.data[(a * n + b) * n + c]
    }

    fn cached(lambda: f64, cap: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<SixIndexCoefficients>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (lambda.to_bits(), cap);
        if let Some(hit) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return hit.clone();
        }
        let built = Arc::new(Self::build(lambda, cap));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if guard.len() > 64 {
            guard.clear();
        }
        guard.entry(key).or_insert(built).clone()
    }
}

/// Upper bound on the magnitude of all six-index terms with Σk > cap.
fn six_index_tail_bound(lambda: f64, cap: usize, rates: [f64; 3], gamma_vib: f64) -> f64 {
    let l2 = lambda * lambda;
    if l2 == 0.0 {
        return 0.0;
    }
    if rates.iter().any(|r| *r <= 0.0) {
        return f64::INFINITY;
    }
    let [r1, r2, r3] = rates;
    let base = r1 * r2 * r3;
    let pair = (r1 * r2).min(r1 * r3).min(r2 * r3);
    let mean = 6.0 * l2;
    let ln_mean = mean.ln();
    let mut total = 0.0;
    let mut ln_fact: f64 = (1..=cap + 1).map(|k| (k as f64).ln()).sum();
    let mut k = cap + 1;
    loop {
        let ln_term = k as f64 * ln_mean - ln_fact - 2.0 * l2;
        let term = ln_term.exp() / (base + gamma_vib * k as f64 * pair);
        total += term;
        if (k as f64 > mean && term < 1e-30 * total.max(f64::MIN_POSITIVE)) || k > cap + 2000 {
            break;
        }
        k += 1;
        ln_fact += (k as f64).ln();
    }
    total
}

/// All kernels for one parameter point.
#[derive(Debug, Clone)]
pub struct KernelSet {
    params: ModelParams,
    derived: DerivedParams,
    policy: KernelPolicy,
    weights: PoissonWeights,
}

impl KernelSet {
    pub fn new(params: &ModelParams, policy: &KernelPolicy) -> Self {
        Self {
            params: *params,
            derived: params.derive(),
            policy: *policy,
            weights: PoissonWeights::new(params.lambda, policy),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    pub fn policy(&self) -> &KernelPolicy {
        &self.policy
    }

    pub fn weights(&self) -> &PoissonWeights {
        &self.weights
    }

    fn sideband(&self, k: usize) -> Complex64 {
        k as f64 * Complex64::new(self.params.gamma_vib, self.params.nu)
    }

    fn single_sum(
        &self,
        kernel: &'static str,
        den: impl Fn(Complex64) -> Complex64,
    ) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, w) in self.weights.weights.iter().enumerate() {
            let d = check_pole(kernel, k, den(self.sideband(k)))?;
            acc += *w / d;
        }
        Ok(acc)
    }

    /// F̄ₘ(s) = Σ w_k / (s + i(Δ+kν) + Γ_⊥ + kγ)
    pub fn fbar_m(&self, s: Complex64) -> Result<Complex64> {
        let d = &self.derived;
        let base = s + I * d.delta + d.gamma_perp;
        self.single_sum("fbar_m", |kb| base + kb)
    }

    /// F̄′ₘ(s) = Σ w_k / (s + i(Δ−Δ_c+kν) + κ + Γ_⊥ + kγ)
    pub fn fbar_m_prime(&self, s: Complex64) -> Result<Complex64> {
        let d = &self.derived;
        let base = s + I * (d.delta - d.delta_c) + d.kappa + d.gamma_perp;
        self.single_sum("fbar_m_prime", |kb| base + kb)
    }

    /// F̄′꜀ₘ(s) = Σ w_k / ([s + i(Δ−Δ_c+kν) + κ+Γ_⊥+kγ][s + i(Δ+kν) + Γ_⊥+kγ])
    pub fn fbar_cm_prime(&self, s: Complex64) -> Result<Complex64> {
        let d = &self.derived;
        let base1 = s + I * (d.delta - d.delta_c) + d.kappa + d.gamma_perp;
        let base2 = s + I * d.delta + d.gamma_perp;
        self.single_sum("fbar_cm_prime", |kb| (base1 + kb) * (base2 + kb))
    }

    fn double_sum(
        &self,
        kernel: &'static str,
        den: impl Fn(usize, usize) -> Complex64,
    ) -> Result<Complex64> {
        let w = &self.weights.weights;
        let mut acc = Complex64::new(0.0, 0.0);
        for (km, wm) in w.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for (kn, wn) in w.iter().enumerate() {
                let d = check_pole(kernel, km.max(kn), den(km, kn))?;
                row += *wn / d;
            }
            acc += *wm * row;
        }
        Ok(acc)
    }

    /// F̄ₘₙ(s) = Σ w_{k_m} w_{k_n} / (s + i(k_m−k_n)ν + 2Γ_⊥ + (k_m+k_n)γ)
    pub fn fbar_mn(&self, s: Complex64) -> Result<Complex64> {
        let p = &self.params;
        let base = s + 2.0 * self.derived.gamma_perp;
        self.double_sum("fbar_mn", |km, kn| {
            base + I * (km as f64 - kn as f64) * p.nu + (km + kn) as f64 * p.gamma_vib
        })
    }

    /// Pair kernel of the second-order moment system, where the cavity–
    /// molecule propagator is resolved sideband by sideband:
    /// Σ w w / ([s + i(Δ−Δ_c+k_mν) + κ+Γ_⊥+k_mγ][s + i(k_m−k_n)ν + 2Γ_⊥ + (k_m+k_n)γ])
    pub fn fbar_mn_cascade(&self, s: Complex64) -> Result<Complex64> {
        let p = &self.params;
        let d = &self.derived;
        let outer = s + I * (d.delta - d.delta_c) + d.kappa + d.gamma_perp;
        let inner = s + 2.0 * d.gamma_perp;
        self.double_sum("fbar_mn_cascade", |km, kn| {
            let first = outer + self.sideband(km);
            let second =
                inner + I * (km as f64 - kn as f64) * p.nu + (km + kn) as f64 * p.gamma_vib;
            first * second
        })
    }

    /// F̄₂,ₘ(s) together with the bound on the discarded terms.
    pub fn fbar_2m_with_bound(&self, s: Complex64) -> Result<(Complex64, f64)> {
        let p = &self.params;
        let d = &self.derived;
        let cap = self.policy.total_order_cap;
        let base1 = s + I * d.delta + d.gamma_perp;
        let base2 = s + I * d.delta_c + d.kappa;
        let base3 = base1;
        let rates = [
            s.re + d.gamma_perp,
            s.re + d.kappa,
            s.re + d.gamma_perp,
        ];
        let bound = six_index_tail_bound(p.lambda, cap, rates, p.gamma_vib);
        let prefactor = (-2.0 * p.lambda * p.lambda).exp();

        if p.lambda == 0.0 {
            let d1 = check_pole("fbar_2m", 0, base1)?;
            let d2 = check_pole("fbar_2m", 0, base2)?;
            return Ok((1.0 / (d1 * d2 * d1), 0.0));
        }

        let coeff = SixIndexCoefficients::cached(p.lambda, cap);
        let n = cap + 1;
        let mut inv3 = Vec::with_capacity(n);
        let mut inv2 = Vec::with_capacity(n);
        let mut inv1 = Vec::with_capacity(n);
        for k in 0..n {
            let kb = self.sideband(k);
            inv1.push(1.0 / check_pole("fbar_2m", k, base1 + kb)?);
            inv2.push(1.0 / check_pole("fbar_2m", k, base2 + kb)?);
            inv3.push(1.0 / check_pole("fbar_2m", k, base3 + kb)?);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            let mut sum_b = Complex64::new(0.0, 0.0);
            for b in 0..n {
                let mut sum_c = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    let v = coeff.get(a, b, c);
                    if v != 0.0 {
                        sum_c += v * inv3[c];
                    }
                }
                sum_b += inv2[b] * sum_c;
            }
            acc += inv1[a] * sum_b;
        }
        Ok((prefactor * acc, bound))
    }

    /// Six-index Laplace kernel of the four-time displacement correlator.
    /// Fails when the truncation bound exceeds the policy tolerance.
    pub fn fbar_2m(&self, s: Complex64) -> Result<Complex64> {
        let (value, bound) = self.fbar_2m_with_bound(s)?;
        if bound > self.policy.tail_tol {
            return Err(Error::CapTooSmall {
                cap: self.policy.total_order_cap,
                bound,
                tol: self.policy.tail_tol,
            });
        }
        Ok(value)
    }

    /// χ = F̄ₘ(0).
    pub fn chi(&self) -> Result<Complex64> {
        self.fbar_m(Complex64::new(0.0, 0.0))
    }

    /// (Γ_eff, Δ_eff) = (ℜ 1/χ, ℑ 1/χ).
    pub fn effective_rates(&self) -> Result<(f64, f64)> {
        let inv = 1.0 / self.chi()?;
        Ok((inv.re, inv.im))
    }

    /// F̃ₘ(ω) = F̄ₘ(iω).
    pub fn ftilde_m(&self, omega: f64) -> Result<Complex64> {
        self.fbar_m(I * omega)
    }

    /// F̃_a(ω) = 1/(i(Δ_c+ω) + κ).
    pub fn ftilde_a(&self, omega: f64) -> Result<Complex64> {
        let d = &self.derived;
        Ok(1.0 / check_pole("ftilde_a", 0, I * (d.delta_c + omega) + d.kappa)?)
    }
}

pub fn fbar_m(s: Complex64, params: &ModelParams, policy: &KernelPolicy) -> Result<Complex64> {
    KernelSet::new(params, policy).fbar_m(s)
}

pub fn fbar_m_prime(
    s: Complex64,
    params: &ModelParams,
    policy: &KernelPolicy,
) -> Result<Complex64> {
    KernelSet::new(params, policy).fbar_m_prime(s)
}

pub fn fbar_mn(s: Complex64, params: &ModelParams, policy: &KernelPolicy) -> Result<Complex64> {
    KernelSet::new(params, policy).fbar_mn(s)
}

pub fn fbar_cm_prime(
    s: Complex64,
    params: &ModelParams,
    policy: &KernelPolicy,
) -> Result<Complex64> {
    KernelSet::new(params, policy).fbar_cm_prime(s)
}

pub fn fbar_2m(s: Complex64, params: &ModelParams, policy: &KernelPolicy) -> Result<Complex64> {
    KernelSet::new(params, policy).fbar_2m(s)
}

pub fn chi(params: &ModelParams, policy: &KernelPolicy) -> Result<Complex64> {
    KernelSet::new(params, policy).chi()
}

pub fn ftilde_m(omega: f64, params: &ModelParams, policy: &KernelPolicy) -> Result<Complex64> {
    KernelSet::new(params, policy).ftilde_m(omega)
}

pub fn ftilde_a(omega: f64, params: &ModelParams) -> Result<Complex64> {
    KernelSet::new(params, &KernelPolicy::default()).ftilde_a(omega)
}
