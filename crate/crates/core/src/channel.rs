//! Thermal-loss channel with excess noise, in shot-noise units.
//!
//! Both conventions map each mode's covariance as `Γ -> TΓ + (1 - T + Tξ) I`.
//! They differ in the displacement: `linear` scales amplitudes by `T` (which
//! reproduces the closed-form noisy BER), `symplectic` by `√T` (the
//! attenuator's symplectic action).

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{invalid, Result};
use crate::gaussian::ModeState;
use crate::protocol::CipherState;

/// Fibre attenuation at 1550 nm, dB per km.
pub const FIBRE_LOSS_DB_PER_KM: f64 = 0.22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelConvention {
    #[default]
    Linear,
    Symplectic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub transmittance: f64,
    /// Input-referred excess noise `ξ`, SNU.
    pub excess_noise: f64,
    #[serde(default)]
    pub convention: ChannelConvention,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl ChannelParams {
    pub fn new(transmittance: f64, excess_noise: f64, convention: ChannelConvention) -> Result<Self> {
        let ch = Self {
            transmittance,
            excess_noise,
            convention,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn identity() -> Self {
        Self {
            transmittance: 1.0,
            excess_noise: 0.0,
            convention: ChannelConvention::Linear,
        }
    }

    /// Channel for `km` of standard telecom fibre.
    pub fn fibre(km: f64, excess_noise: f64) -> Result<Self> {
        Self::new(fibre_transmittance(km), excess_noise, ChannelConvention::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(invalid(format!(
                "transmittance must lie in (0, 1], got {}",
                self.transmittance
            )));
        }
        if !(self.excess_noise >= 0.0) || !self.excess_noise.is_finite() {
            return Err(invalid(format!(
                "excess noise must be >= 0, got {}",
                self.excess_noise
            )));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.transmittance == 1.0 && self.excess_noise == 0.0
    }

    /// Factor applied to displacements (and hence to receiver thresholds).
    pub fn amplitude_gain(&self) -> f64 {
        match self.convention {
            ChannelConvention::Linear => self.transmittance,
            ChannelConvention::Symplectic => self.transmittance.sqrt(),
        }
    }

    /// Added diagonal noise `1 - T + Tξ`.
    pub fn added_noise(&self) -> f64 {
        1.0 - self.transmittance + self.transmittance * self.excess_noise
    }

    pub fn apply_mode(&self, mode: &ModeState) -> ModeState {
        if self.is_identity() {
            return *mode;
        }
        let t = self.transmittance;
        ModeState::from_parts(
            mode.displacement() * self.amplitude_gain(),
            mode.covariance() * t + nalgebra::Matrix2::identity() * self.added_noise(),
        )
    }

    /// Sends every mode of a cipherstate through the channel.
    pub fn apply(&self, cipher: &CipherState) -> CipherState {
        CipherState {
            modes: cipher.modes.iter().map(|m| self.apply_mode(m)).collect(),
        }
    }
}

pub fn apply_channel(cipher: &CipherState, channel: &ChannelParams) -> CipherState {
    channel.apply(cipher)
}

/// `T = 10^{-0.22 km / 10}`.
pub fn fibre_transmittance(km: f64) -> f64 {
    10f64.powf(-FIBRE_LOSS_DB_PER_KM * km / 10.0)
}

/// Effective squeezed-quadrature covariance entry after the channel:
/// `T / cosh r + (1 - T) + Tξ`. Half of it is the homodyne variance.
pub fn noisy_variance(squeezing: f64, channel: &ChannelParams) -> f64 {
    let t = channel.transmittance;
    t / squeezing.cosh() + (1.0 - t) + t * channel.excess_noise
}

/// Bit-error rate at the receiver, `½ Erfc(Tα / √v')`, with `v'` from
/// [`noisy_variance`].
pub fn noisy_ber(alpha: f64, squeezing: f64, channel: &ChannelParams) -> f64 {
    let v = noisy_variance(squeezing, channel);
    0.5 * erfc(channel.transmittance * alpha / v.sqrt())
}
