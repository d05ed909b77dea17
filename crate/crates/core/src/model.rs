//! Physical parameters of the Holstein–Tavis–Cummings system.
//!
//! Everything is expressed in natural units where the electronic decay rate
//! Γ equals one. Frequencies (ν, ω₀₀, ω_c, ω_l), couplings (g, η) and rates
//! (κ₁, κ₂, Γ_φ, γ) are all multiples of Γ.
//!
//! Detuning sweeps move the probe frequency ω_l while ω_c and ω₀₀ stay put,
//! so the electronic detuning follows the cavity detuning as
//! Δ = Δ_c + (ω₀₀ − ω_c).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bare model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Number of identical molecules N.
    pub n_molecules: u32,
    /// Dimensionless displacement λ (Huang–Rhys factor S = λ²).
    pub lambda: f64,
    /// Vibrational frequency ν.
    pub nu: f64,
    /// Bare electronic splitting ω₀₀.
    pub omega00: f64,
    /// Cavity frequency ω_c.
    pub omega_c: f64,
    /// Probe frequency ω_l.
    pub omega_l: f64,
    /// Single-molecule coupling g.
    pub g: f64,
    /// Loss rate through the input mirror.
    pub kappa1: f64,
    /// Loss rate through the output mirror.
    pub kappa2: f64,
    /// Electronic decay Γ (one in natural units).
    pub gamma_electronic: f64,
    /// Pure dephasing Γ_φ.
    pub gamma_phi: f64,
    /// Vibrational relaxation γ.
    pub gamma_vib: f64,
    /// Probe amplitude η.
    pub eta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::figure2_defaults()
    }
}

/// Parameter-set annotations. None of these stop a computation; they mark
/// regimes where the weak-drive or adiabatic approximations are strained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityFlags {
    /// η > 0.1 κ: the weak-drive linearisation is questionable.
    pub strong_drive: bool,
    /// λ² outside the typical organic range [0, 2].
    pub huang_rhys_out_of_band: bool,
    /// γ < 10 κ: vibrations are not fast compared with the cavity.
    pub slow_vibrations_vs_cavity: bool,
    /// γ < 10 Γ_⊥: vibrations are not fast compared with the exciton.
    pub slow_vibrations_vs_exciton: bool,
}

impl ValidityFlags {
    pub fn any(&self) -> bool {
        self.strong_drive
            || self.huang_rhys_out_of_band
            || self.slow_vibrations_vs_cavity
            || self.slow_vibrations_vs_exciton
    }
}

/// Symbols derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// κ = κ₁ + κ₂
    pub kappa: f64,
    /// Δ = ω₀₀ − ω_l
    pub delta: f64,
    /// Δ_c = ω_c − ω_l
    pub delta_c: f64,
    /// Γ_⊥ = Γ + 2Γ_φ
    pub gamma_perp: f64,
    /// Γ_∥ = 2Γ
    pub gamma_par: f64,
    /// ω_e = ω₀₀ + λ²ν
    pub omega_e: f64,
}

impl ModelParams {
    /// Parameters shared by all transmission panels: ν = 250, Γ_φ = 1,
    /// κ₁ = κ₂ = 0.5, γ = 50, g = 5, η = 0.01, probe and cavity resonant with
    /// the bare transition. λ = 0.2 and N = 2 select the red curve of the
    /// two-molecule panel.
    pub fn figure2_defaults() -> Self {
        Self {
            n_molecules: 2,
            lambda: 0.2,
            nu: 250.0,
            omega00: 0.0,
            omega_c: 0.0,
            omega_l: 0.0,
            g: 5.0,
            kappa1: 0.5,
            kappa2: 0.5,
            gamma_electronic: 1.0,
            gamma_phi: 1.0,
            gamma_vib: 50.0,
            eta: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_molecules < 1 {
            return Err(Error::InvalidParameter {
                field: "n_molecules",
                reason: "must be at least 1".into(),
            });
        }
        let finite = [
            ("lambda", self.lambda),
            ("nu", self.nu),
            ("omega00", self.omega00),
            ("omega_c", self.omega_c),
            ("omega_l", self.omega_l),
            ("g", self.g),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma_electronic", self.gamma_electronic),
            ("gamma_phi", self.gamma_phi),
            ("gamma_vib", self.gamma_vib),
            ("eta", self.eta),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        let non_negative = [
            ("lambda", self.lambda),
            ("nu", self.nu),
            ("g", self.g),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma_electronic", self.gamma_electronic),
            ("gamma_phi", self.gamma_phi),
            ("gamma_vib", self.gamma_vib),
            ("eta", self.eta),
        ];
        for (field, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn derive(&self) -> DerivedParams {
        DerivedParams {
            kappa: self.kappa1 + self.kappa2,
            delta: self.omega00 - self.omega_l,
            delta_c: self.omega_c - self.omega_l,
            gamma_perp: self.gamma_electronic + 2.0 * self.gamma_phi,
            gamma_par: 2.0 * self.gamma_electronic,
            omega_e: self.omega00 + self.lambda * self.lambda * self.nu,
        }
    }

    pub fn validity_flags(&self) -> ValidityFlags {
        let d = self.derive();
        let lambda_sq = self.lambda * self.lambda;
        ValidityFlags {
            strong_drive: self.eta > 0.1 * d.kappa,
            huang_rhys_out_of_band: !(0.0..=2.0).contains(&lambda_sq),
            slow_vibrations_vs_cavity: self.gamma_vib < 10.0 * d.kappa,
            slow_vibrations_vs_exciton: self.gamma_vib < 10.0 * d.gamma_perp,
        }
    }

    /// Copy with the probe moved so that Δ_c takes the given value.
    pub fn with_cavity_detuning(&self, delta_c: f64) -> Self {
        Self {
            omega_l: self.omega_c - delta_c,
            ..*self
        }
    }

    /// Copy with Δ = Δ_c = 0 (probe, cavity and bare transition resonant).
    pub fn at_resonance(&self) -> Self {
        Self {
            omega_c: self.omega00,
            omega_l: self.omega00,
            ..*self
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    pub fn with_n_molecules(&self, n_molecules: u32) -> Self {
        Self {
            n_molecules,
            ..*self
        }
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..*self }
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..*self }
    }

    /// Set a field by its serialized name.
    pub fn set_field(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "n_molecules" => {
                if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
                    return Err(Error::InvalidParameter {
                        field: "n_molecules",
                        reason: format!("must be a positive integer, got {value}"),
                    });
                }
                self.n_molecules = value as u32;
            }
            "lambda" => self.lambda = value,
            "nu" => self.nu = value,
            "omega00" => self.omega00 = value,
            "omega_c" => self.omega_c = value,
            "omega_l" => self.omega_l = value,
            "g" => self.g = value,
            "kappa1" => self.kappa1 = value,
            "kappa2" => self.kappa2 = value,
            "gamma_electronic" => self.gamma_electronic = value,
            "gamma_phi" => self.gamma_phi = value,
            "gamma_vib" => self.gamma_vib = value,
            "eta" => self.eta = value,
            _ => {
                return Err(Error::Config(format!("unknown physics key `{key}`")));
            }
        }
        Ok(())
    }

    /// Read a field by its serialized name.
    pub fn get_field(&self, key: &str) -> Result<f64> {
        Ok(match key {
            "n_molecules" => self.n_molecules as f64,
            "lambda" => self.lambda,
            "nu" => self.nu,
            "omega00" => self.omega00,
            "omega_c" => self.omega_c,
            "omega_l" => self.omega_l,
            "g" => self.g,
            "kappa1" => self.kappa1,
            "kappa2" => self.kappa2,
            "gamma_electronic" => self.gamma_electronic,
            "gamma_phi" => self.gamma_phi,
            "gamma_vib" => self.gamma_vib,
            "eta" => self.eta,
            _ => return Err(Error::Config(format!("unknown physics key `{key}`"))),
        })
    }

    pub const FIELD_NAMES: [&'static str; 13] = [
        "n_molecules",
        "lambda",
        "nu",
        "omega00",
        "omega_c",
        "omega_l",
        "g",
        "kappa1",
        "kappa2",
        "gamma_electronic",
        "gamma_phi",
        "gamma_vib",
        "eta",
    ];
}

/// Truncation controls for the Poisson-weighted Lorentzian series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelPolicy {
    /// Poisson tail mass below which single-index series are cut.
    pub tail_tol: f64,
    /// Hard cap on the number of vibrational quanta per index.
    pub k_max_hard: usize,
    /// Cap on the total order Σⱼ kⱼ of the six-index second-order kernel.
    pub total_order_cap: usize,
}

impl Default for KernelPolicy {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            k_max_hard: 64,
            total_order_cap: 40,
        }
    }
}

impl KernelPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::InvalidParameter {
                field: "tail_tol",
                reason: format!("must lie in (0, 1), got {}", self.tail_tol),
            });
        }
        if self.k_max_hard < 1 {
            return Err(Error::InvalidParameter {
                field: "k_max_hard",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_symbols() {
        let p = ModelParams {
            gamma_phi: 1.0,
            gamma_electronic: 1.0,
            kappa1: 0.5,
            kappa2: 0.5,
            lambda: 0.6,
            nu: 250.0,
            omega00: 0.0,
            ..ModelParams::figure2_defaults()
        };
        let d = p.derive();
        assert_eq!(d.gamma_perp, 3.0);
        assert_eq!(d.kappa, 1.0);
        assert!((d.omega_e - 90.0).abs() < 1e-12);
        assert_eq!(d.gamma_par, 2.0);
    }

    #[test]
    fn figure2_values() {
        let p = ModelParams::figure2_defaults();
        let d = p.derive();
        assert_eq!(p.nu, 250.0);
        assert_eq!(p.gamma_vib, 50.0);
        assert_eq!(p.g, 5.0);
        assert_eq!(p.eta, 0.01);
        assert_eq!(d.kappa, 1.0);
        assert_eq!(d.gamma_perp, 3.0);
        assert_eq!(d.gamma_par, 2.0);
        assert_eq!(p.omega_c, p.omega00);
        assert_eq!((p.lambda, p.n_molecules), (0.2, 2));
        assert!(!p.validity_flags().any());
    }

    #[test]
    fn derive_is_pure() {
        let p = ModelParams::figure2_defaults().with_cavity_detuning(12.5);
        let a = p.derive();
        let b = p.derive();
        assert_eq!(a.delta.to_bits(), b.delta.to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn detuning_convention_moves_both() {
        let p = ModelParams {
            omega_c: 3.0,
            omega00: 1.0,
            ..ModelParams::figure2_defaults()
        }
        .with_cavity_detuning(10.0);
        let d = p.derive();
        assert_eq!(d.delta_c, 10.0);
        assert_eq!(d.delta, 10.0 + (1.0 - 3.0));
    }

    #[test]
    fn flags_annotate_without_failing() {
        let p = ModelParams {
            eta: 0.5,
            gamma_vib: 5.0,
            lambda: 2.0,
            ..ModelParams::figure2_defaults()
        };
        assert!(p.validate().is_ok());
        let f = p.validity_flags();
        assert!(f.strong_drive && f.huang_rhys_out_of_band);
        assert!(f.slow_vibrations_vs_cavity && f.slow_vibrations_vs_exciton);
    }

    #[test]
    fn negative_rate_rejected() {
        let p = ModelParams {
            kappa2: -0.1,
            ..ModelParams::figure2_defaults()
        };
        match p.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "kappa2"),
            other => panic!("unexpected {other:?}"),
        }
        let p = ModelParams {
            n_molecules: 0,
            ..ModelParams::figure2_defaults()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn policy_bounds() {
        assert!(KernelPolicy::default().validate().is_ok());
        let bad = KernelPolicy {
            tail_tol: 1.5,
            ..KernelPolicy::default()
        };
        assert!(bad.validate().is_err());
        let bad = KernelPolicy {
            k_max_hard: 0,
            ..KernelPolicy::default()
        };
        assert!(bad.validate().is_err());
    }
}
