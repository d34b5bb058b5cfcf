//! Uplink/downlink rates, either tabulated directly or derived from an OMA
//! Shannon-capacity channel model.

use serde::{Deserialize, Serialize};

use crate::error::{EsflError, Result};

/// How many bytes a tabulated "KB" stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KbConvention {
    /// 1 KB = 1024 bytes.
    #[default]
    Binary,
    /// 1 KB = 1000 bytes.
    Decimal,
}

impl KbConvention {
    pub fn bytes_per_kb(self) -> f64 {
        match self {
            KbConvention::Binary => 1024.0,
            KbConvention::Decimal => 1000.0,
        }
    }
}

/// Physical channel of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Allocated bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Uplink transmit power in W.
    pub uplink_power_w: f64,
    /// Downlink transmit power in W.
    pub downlink_power_w: f64,
    pub uplink_gain: f64,
    pub downlink_gain: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_density: f64,
}

/// Link rates in bytes per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRates {
    pub up: f64,
    pub down: f64,
}

impl LinkRates {
    pub fn symmetric(bytes_per_sec: f64) -> Self {
        LinkRates {
            up: bytes_per_sec,
            down: bytes_per_sec,
        }
    }
}

/// Rates tabulated in KB/s. When `down_kbps` is absent the link is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectRates {
    pub up_kbps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub down_kbps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    Direct,
    Shannon,
}

/// A rate block as it appears in configuration documents: a mode plus the
/// payload that mode needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSource {
    pub mode: RateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<DirectRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelParams>,
}

/// Shannon capacity `B log2(1 + P γ / (B N0))` in bits per second.
pub fn shannon_rate(bandwidth_hz: f64, power_w: f64, gain: f64, noise_density: f64) -> Result<f64> {
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(EsflError::Domain(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    if !(noise_density.is_finite() && noise_density > 0.0) {
        return Err(EsflError::Domain(format!(
            "noise density must be positive, got {noise_density}"
        )));
    }
    if !(power_w.is_finite() && power_w >= 0.0) || !(gain.is_finite() && gain >= 0.0) {
        return Err(EsflError::Domain(format!(
            "power and gain must be non-negative, got P={power_w}, gain={gain}"
        )));
    }
    let snr = power_w * gain / (bandwidth_hz * noise_density);
    Ok(bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2)
}

impl ChannelParams {
    pub fn rates(&self) -> Result<LinkRates> {
        let up = shannon_rate(
            self.bandwidth_hz,
            self.uplink_power_w,
            self.uplink_gain,
            self.noise_density,
        )?;
        let down = shannon_rate(
            self.bandwidth_hz,
            self.downlink_power_w,
            self.downlink_gain,
            self.noise_density,
        )?;
        Ok(LinkRates {
            up: up / 8.0,
            down: down / 8.0,
        })
    }
}

impl DirectRates {
    pub fn rates(&self, kb: KbConvention) -> Result<LinkRates> {
        let up = self.up_kbps;
        let down = self.down_kbps.unwrap_or(up);
        if !(up.is_finite() && up >= 0.0 && down.is_finite() && down >= 0.0) {
            return Err(EsflError::Config(format!(
                "direct rates must be non-negative, got up={up}, down={down}"
            )));
        }
        let scale = kb.bytes_per_kb();
        Ok(LinkRates {
            up: up * scale,
            down: down * scale,
        })
    }
}

impl RateSource {
    pub fn direct(up_kbps: f64, down_kbps: Option<f64>) -> Self {
        RateSource {
            mode: RateMode::Direct,
            direct: Some(DirectRates { up_kbps, down_kbps }),
            channel: None,
        }
    }

    pub fn shannon(channel: ChannelParams) -> Self {
        RateSource {
            mode: RateMode::Shannon,
            direct: None,
            channel: Some(channel),
        }
    }
}

/// Resolves a rate block to bytes/s. Direct mode scales tabulated KB/s by the
/// KB convention; Shannon mode converts capacity in bits/s to bytes/s.
pub fn link_rates(source: &RateSource, kb: KbConvention) -> Result<LinkRates> {
    match (source.mode, &source.direct, &source.channel) {
        (RateMode::Direct, Some(direct), None) => direct.rates(kb),
        (RateMode::Shannon, None, Some(channel)) => channel.rates(),
        (mode, _, _) => Err(EsflError::Config(format!(
            "rate mode {mode:?} needs exactly its own payload (direct rates for 'direct', channel parameters for 'shannon')"
        ))),
    }
}

/// Checks `Σ B_i ≤ B`. Bandwidth is validated, never optimized.
pub fn validate_bandwidth_budget(channels: &[ChannelParams], budget_hz: f64) -> Result<()> {
    let used: f64 = channels.iter().map(|c| c.bandwidth_hz).sum();
    if used > budget_hz {
        return Err(EsflError::Config(format!(
            "allocated bandwidth {used} Hz exceeds the system budget {budget_hz} Hz"
        )));
    }
    Ok(())
}
