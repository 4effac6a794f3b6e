//! Scenario file schema (TOML) and its mapping onto the runtime
//! configuration. This module is the authoritative definition of the file
//! format: powers in dBm, biases and intercepts in dB, densities in m⁻²,
//! frequencies and bandwidths in Hz.

use anyhow::{bail, Context, Result};
use hybridcell::network::{BandKind, BlockageConfig, NetworkConfig, TierConfig};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub blockage: BlockageSection,
    #[serde(rename = "tier")]
    pub tiers: Vec<TierSection>,
    pub global: GlobalSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockageSection {
    /// Blockages per m².
    pub density: f64,
    /// Mean blockage length, m.
    pub mean_length: f64,
    /// Mean blockage width, m.
    pub mean_width: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSection {
    /// "sub6" | "mmwave" | "thz"
    pub band: String,
    /// BSs per m².
    pub density: f64,
    /// Antenna elements per BS; defaults to 1 (sub-6 GHz tiers must be 1).
    pub antennas: Option<u32>,
    /// Downlink transmit power, dBm.
    pub power_dl: f64,
    /// Uplink transmit power, dBm.
    pub power_ul: f64,
    /// Downlink association bias, dB (default 0).
    #[serde(default)]
    pub bias_dl: f64,
    /// Uplink association bias, dB (default 0).
    #[serde(default)]
    pub bias_ul: f64,
    pub path_loss_exp: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Nakagami fading shape (mmWave tiers).
    pub nakagami_shape: Option<u32>,
    /// Receiver noise figure, dB (default 10; ignored by THz tiers).
    pub noise_figure: Option<f64>,
    /// Carrier frequency, Hz (mmWave/THz tiers).
    pub carrier: Option<f64>,
    /// Reference path gain at 1 m, dB (sub-6 tiers).
    pub ref_intercept: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalSection {
    /// UE per m².
    pub ue_density: f64,
    /// Molecular absorption coefficient K_a, m⁻¹.
    pub absorption: f64,
    /// Induced Nakagami shape for the THz coverage series (default 10).
    pub gamma_thz: Option<u32>,
    /// Default SINR threshold, dB.
    pub tau: f64,
    /// Default rate threshold, bit/s.
    pub rho: f64,
}

impl TierSection {
    fn into_tier(self, index: usize) -> Result<TierConfig> {
        let band = match self.band.as_str() {
            "sub6" => BandKind::Sub6,
            "mmwave" => BandKind::MmWave,
            "thz" => BandKind::Thz,
            other => bail!("tier {index}: unknown band {other:?} (sub6|mmwave|thz)"),
        };
        let mut tier = match band {
            BandKind::Sub6 => {
                let intercept = self
                    .ref_intercept
                    .with_context(|| format!("tier {index}: sub6 tiers need ref_intercept"))?;
                TierConfig::sub6(
                    self.density,
                    self.power_dl,
                    self.power_ul,
                    self.path_loss_exp,
                    self.bandwidth,
                    intercept,
                )
            }
            BandKind::MmWave => {
                let carrier = self
                    .carrier
                    .with_context(|| format!("tier {index}: mmwave tiers need carrier"))?;
                TierConfig::mmwave(
                    self.density,
                    self.antennas.unwrap_or(1),
                    self.power_dl,
                    self.power_ul,
                    self.path_loss_exp,
                    self.bandwidth,
                    self.nakagami_shape.with_context(|| {
                        format!("tier {index}: mmwave tiers need nakagami_shape")
                    })?,
                    carrier,
                )
            }
            BandKind::Thz => {
                let carrier = self
                    .carrier
                    .with_context(|| format!("tier {index}: thz tiers need carrier"))?;
                TierConfig::thz(
                    self.density,
                    self.antennas.unwrap_or(1),
                    self.power_dl,
                    self.power_ul,
                    self.path_loss_exp,
                    self.bandwidth,
                    carrier,
                )
            }
        };
        if let Some(n) = self.antennas {
            tier.antennas = n;
        }
        if let Some(nf) = self.noise_figure {
            tier.noise_figure_db = nf;
        }
        tier = tier.with_bias_db(self.bias_dl, self.bias_ul);
        Ok(tier)
    }
}

impl ScenarioFile {
    pub fn into_network(self) -> Result<NetworkConfig> {
        let tiers = self
            .tiers
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.into_tier(i + 1))
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = NetworkConfig::new(
            tiers,
            BlockageConfig {
                density: self.blockage.density,
                mean_length: self.blockage.mean_length,
                mean_width: self.blockage.mean_width,
            },
            self.global.ue_density,
        );
        cfg.absorption = self.global.absorption;
        cfg.gamma_thz = self.global.gamma_thz.unwrap_or(10);
        cfg.tau_db = self.global.tau;
        cfg.rho_bps = self.global.rho;
        Ok(cfg)
    }
}

/// Parse a scenario file and map it onto the runtime configuration,
/// without validating the physical invariants (use [`load_validated`]).
pub fn load(path: &Path) -> Result<NetworkConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    let parsed: ScenarioFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse scenario {}", path.display()))?;
    parsed.into_network()
}

/// Parse and validate; warnings go to stderr, hard violations fail.
pub fn load_validated(path: &Path) -> Result<NetworkConfig> {
    let cfg = load(path)?;
    let violations = hybridcell::network::validate(&cfg);
    let (warnings, errors): (Vec<_>, Vec<_>) = violations.into_iter().partition(|v| v.is_warning());
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("error: {e}");
        }
        bail!(
            "scenario {} has {} violation(s)",
            path.display(),
            errors.len()
        );
    }
    Ok(cfg)
}
