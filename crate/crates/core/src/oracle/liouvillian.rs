//! Lab-frame Hamiltonian and Lindblad generator in the frame rotating at ω_l.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::space::{HilbertConfig, SparseOp};
use crate::error::{Error, Result};
use crate::model::ModelParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rate attached to the (σ†σ − σσ†) dephasing channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingConvention {
    /// Γ_φ/2, so coherences decay at Γ + 2Γ_φ = Γ_⊥.
    #[default]
    MatchedGammaPerp,
    /// Γ_φ, coherences decay at Γ + 4Γ_φ.
    FullRate,
}

/// Jump operator of the vibrational bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VibrationalDamping {
    /// b + λσ†σ: relaxation towards the displaced equilibrium of the
    /// current electronic state.
    #[default]
    Displaced,
    /// Bare b, which adds vibration-induced electronic dephasing.
    Bare,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub dephasing: DephasingConvention,
    pub vib_damping: VibrationalDamping,
}

/// H = Σₘ[νbₘ†bₘ + (Δ + λ²ν + λν(bₘ+bₘ†))σₘ†σₘ] + Δ_c a†a
///     + gΣₘ(a†σₘ + σₘ†a) + iη(a† − a).
pub fn build_hamiltonian(params: &ModelParams, config: &HilbertConfig) -> Result<SparseOp> {
    params.validate()?;
    config.validate()?;
    if params.n_molecules != config.n_molecules {
        return Err(Error::InvalidInput(format!(
            "params have {} molecules, Hilbert space has {}",
            params.n_molecules, config.n_molecules
        )));
    }
    let d = params.derive();
    let a = config.a();
    let ad = a.adjoint();
    let mut h = ad.mul(&a).scale_re(d.delta_c);
    h = h.add(&ad.sub(&a).scale(I * params.eta));
    let shift = d.delta + params.lambda * params.lambda * params.nu;
    for m in 0..config.n_molecules {
        let b = config.b(m);
        let bd = b.adjoint();
        let s = config.sigma(m);
        let sd = s.adjoint();
        let p = sd.mul(&s);
        h = h.add(&bd.mul(&b).scale_re(params.nu));
        h = h.add(&p.scale_re(shift));
        h = h.add(&p.mul(&b.add(&bd)).scale_re(params.lambda * params.nu));
        h = h.add(&ad.mul(&s).add(&sd.mul(&a)).scale_re(params.g));
    }
    Ok(h)
}

/// One Lindblad channel γ(2OρO† − O†Oρ − ρO†O).
#[derive(Debug, Clone)]
pub struct Channel {
    pub name: String,
    pub rate: f64,
    pub op: SparseOp,
}

/// ℒρ = −i[H, ρ] + Σⱼ γⱼ(2𝒪ⱼρ𝒪ⱼ† − 𝒪ⱼ†𝒪ⱼρ − ρ𝒪ⱼ†𝒪ⱼ), applied matrix-free.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    params: ModelParams,
    config: HilbertConfig,
    options: OracleOptions,
    hamiltonian: SparseOp,
    /// K = −iH − Σⱼγⱼ𝒪ⱼ†𝒪ⱼ, so ℒρ = Kρ + ρK† + Σⱼ2γⱼ𝒪ⱼρ𝒪ⱼ†.
    effective: SparseOp,
    channels: Vec<Channel>,
}

pub fn build_liouvillian(
    params: &ModelParams,
    config: &HilbertConfig,
    options: &OracleOptions,
) -> Result<Liouvillian> {
    let hamiltonian = build_hamiltonian(params, config)?;
    let d = params.derive();
    let mut channels = vec![Channel {
        name: "a".into(),
        rate: d.kappa,
        op: config.a(),
    }];
    let dephasing = match options.dephasing {
        DephasingConvention::MatchedGammaPerp => 0.5 * params.gamma_phi,
        DephasingConvention::FullRate => params.gamma_phi,
    };
    for m in 0..config.n_molecules {
        let s = config.sigma(m);
        let p = s.adjoint().mul(&s);
        let sz = p.sub(&s.mul(&s.adjoint()));
        let vib = match options.vib_damping {
            VibrationalDamping::Displaced => config.b(m).add(&p.scale_re(params.lambda)),
            VibrationalDamping::Bare => config.b(m),
        };
        channels.push(Channel {
            name: format!("sigma{m}"),
            rate: params.gamma_electronic,
            op: s,
        });
        channels.push(Channel {
            name: format!("sigma_z{m}"),
            rate: dephasing,
            op: sz,
        });
        channels.push(Channel {
            name: format!("b{m}"),
            rate: params.gamma_vib,
            op: vib,
        });
    }
    channels.retain(|c| c.rate != 0.0);
    let mut effective = hamiltonian.scale(-I);
    for c in &channels {
        effective = effective.add(&c.op.adjoint().mul(&c.op).scale_re(-c.rate));
    }
    Ok(Liouvillian {
        params: *params,
        config: *config,
        options: *options,
        hamiltonian,
        effective,
        channels,
    })
}

impl Liouvillian {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &HilbertConfig {
        &self.config
    }

    pub fn options(&self) -> &OracleOptions {
        &self.options
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn hamiltonian(&self) -> &SparseOp {
        &self.hamiltonian
    }

    pub fn effective(&self) -> &SparseOp {
        &self.effective
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Largest rate or frequency scale in the generator, for step sizes.
    pub fn max_rate(&self) -> f64 {
        self.effective
            .entries()
            .iter()
            .map(|e| e.2.norm())
            .fold(0.0, f64::max)
            .max(1e-300)
    }

    pub fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut out = self.effective.left(x);
        self.effective.right_adj_acc(x, one, &mut out);
        for c in &self.channels {
            let ox = c.op.left(x);
            c.op.right_adj_acc(&ox, Complex64::new(2.0 * c.rate, 0.0), &mut out);
        }
        out
    }

    /// Fixed-step RK4 integration of dρ/dt = ℒρ.
    pub fn evolve(&self, rho: &DMatrix<Complex64>, t: f64, dt: f64) -> Result<DMatrix<Complex64>> {
        if !(t >= 0.0 && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "evolve needs t >= 0 and dt > 0, got t = {t}, dt = {dt}"
            )));
        }
        let steps = (t / dt).ceil() as usize;
        let h = if steps == 0 { 0.0 } else { t / steps as f64 };
        let mut x = rho.clone();
        for _ in 0..steps {
            let k1 = self.apply(&x);
            let half = Complex64::new(0.5 * h, 0.0);
            let k2 = self.apply(&(&x + &k1 * half));
            let k3 = self.apply(&(&x + &k2 * half));
            let k4 = self.apply(&(&x + &k3 * Complex64::new(h, 0.0)));
            let two = Complex64::new(2.0, 0.0);
            x += (k1 + k2 * two + k3 * two + k4) * Complex64::new(h / 6.0, 0.0);
        }
        Ok(x)
    }
}
