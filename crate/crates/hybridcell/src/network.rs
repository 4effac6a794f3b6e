//! Scenario schema, validation, and derived constants shared by both engines.
//!
//! All values are stored in linear units (watts, linear gains, Hz, m⁻²);
//! dBm/dB conversion happens in the constructors and at the CLI boundary.
//! Tier indices are 0-based internally; every report and CSV row uses 1-based
//! indices.

use crate::error::{Error, Result};
use std::fmt;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant, J·s.
pub const PLANCK_CONSTANT: f64 = 6.626_070_15e-34;

/// Johnson–Nyquist thermal noise floor, dBm/Hz.
pub const NOISE_FLOOR_DBM_PER_HZ: f64 = -174.0;

/// Thermal noise power spectral density k_B·T₀ in W/Hz, fixed by the
/// −174 dBm/Hz floor (T₀ ≈ 288 K follows from it rather than the other way
/// round).
pub fn thermal_psd() -> f64 {
    dbm_to_watts(NOISE_FLOOR_DBM_PER_HZ)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Frequency band a tier transmits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandKind {
    Sub6,
    MmWave,
    Thz,
}

impl BandKind {
    /// Whether links in this band are usable only when line-of-sight.
    pub fn los_limited(self) -> bool {
        !matches!(self, BandKind::Sub6)
    }
}

impl fmt::Display for BandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandKind::Sub6 => write!(f, "sub6"),
            BandKind::MmWave => write!(f, "mmwave"),
            BandKind::Thz => write!(f, "thz"),
        }
    }
}

/// Link direction. Association decisions and transmit powers are
/// direction-specific; everything else is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Dl,
    Ul,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Dl, Direction::Ul];

    /// Stable index for direction-keyed arrays (DL = 0, UL = 1).
    pub fn index(self) -> usize {
        match self {
            Direction::Dl => 0,
            Direction::Ul => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Dl => write!(f, "dl"),
            Direction::Ul => write!(f, "ul"),
        }
    }
}

/// Per-tier physical parameters, in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct TierConfig {
    pub band: BandKind,
    /// BS density λ_k, m⁻².
    pub density: f64,
    /// Antenna elements per BS. 1 for sub-6 GHz tiers, ≥ 2 otherwise.
    pub antennas: u32,
    /// Downlink transmit power, W.
    pub power_dl: f64,
    /// Uplink transmit power of UE served by this tier, W.
    pub power_ul: f64,
    /// Downlink association bias, linear.
    pub bias_dl: f64,
    /// Uplink association bias, linear.
    pub bias_ul: f64,
    /// Path-loss exponent α_k.
    pub path_loss_exp: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
    /// Nakagami fading shape γ_k (mmWave tiers; unused elsewhere).
    pub nakagami_shape: u32,
    /// Receiver noise figure, dB (sub-6/mmWave; THz tiers use the
    /// Johnson–Nyquist model instead).
    pub noise_figure_db: f64,
    /// Carrier frequency, Hz (mmWave/THz tiers).
    pub carrier: f64,
    /// Reference path gain β₀ at 1 m, linear (sub-6 tiers).
    pub ref_intercept: f64,
}

impl TierConfig {
    /// Sub-6 GHz tier. Power in dBm, bias and intercept in dB.
    pub fn sub6(
        density: f64,
        power_dl_dbm: f64,
        power_ul_dbm: f64,
        path_loss_exp: f64,
        bandwidth: f64,
        ref_intercept_db: f64,
    ) -> Self {
        TierConfig {
            band: BandKind::Sub6,
            density,
            antennas: 1,
            power_dl: dbm_to_watts(power_dl_dbm),
            power_ul: dbm_to_watts(power_ul_dbm),
            bias_dl: 1.0,
            bias_ul: 1.0,
            path_loss_exp,
            bandwidth,
            nakagami_shape: 1,
            noise_figure_db: 10.0,
            carrier: 0.0,
            ref_intercept: db_to_linear(ref_intercept_db),
        }
    }

    /// mmWave tier. Power in dBm.
    #[allow(clippy::too_many_arguments)]
    pub fn mmwave(
        density: f64,
        antennas: u32,
        power_dl_dbm: f64,
        power_ul_dbm: f64,
        path_loss_exp: f64,
        bandwidth: f64,
        nakagami_shape: u32,
        carrier: f64,
    ) -> Self {
        TierConfig {
            band: BandKind::MmWave,
            density,
            antennas,
            power_dl: dbm_to_watts(power_dl_dbm),
            power_ul: dbm_to_watts(power_ul_dbm),
            bias_dl: 1.0,
            bias_ul: 1.0,
            path_loss_exp,
            bandwidth,
            nakagami_shape,
            noise_figure_db: 10.0,
            carrier,
            ref_intercept: 0.0,
        }
    }

    /// THz tier. Power in dBm.
    pub fn thz(
        density: f64,
        antennas: u32,
        power_dl_dbm: f64,
        power_ul_dbm: f64,
        path_loss_exp: f64,
        bandwidth: f64,
        carrier: f64,
    ) -> Self {
        TierConfig {
            band: BandKind::Thz,
            density,
            antennas,
            power_dl: dbm_to_watts(power_dl_dbm),
            power_ul: dbm_to_watts(power_ul_dbm),
            bias_dl: 1.0,
            bias_ul: 1.0,
            path_loss_exp,
            bandwidth,
            nakagami_shape: 1,
            noise_figure_db: 10.0,
            carrier,
            ref_intercept: 0.0,
        }
    }

    /// Association biases in dB, returning the modified tier.
    pub fn with_bias_db(mut self, dl_db: f64, ul_db: f64) -> Self {
        self.bias_dl = db_to_linear(dl_db);
        self.bias_ul = db_to_linear(ul_db);
        self
    }

    pub fn power(&self, q: Direction) -> f64 {
        match q {
            Direction::Dl => self.power_dl,
            Direction::Ul => self.power_ul,
        }
    }

    pub fn bias(&self, q: Direction) -> f64 {
        match q {
            Direction::Dl => self.bias_dl,
            Direction::Ul => self.bias_ul,
        }
    }

    /// Path gain at 1 m excluding absorption: β₀ for sub-6 tiers,
    /// (c / 4πf)² for mmWave and THz tiers.
    pub fn intercept(&self) -> f64 {
        match self.band {
            BandKind::Sub6 => self.ref_intercept,
            BandKind::MmWave | BandKind::Thz => {
                let w = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * self.carrier);
                w * w
            }
        }
    }
}

/// Random-rectangle blockage process parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageConfig {
    /// Blockage density λ_b, m⁻².
    pub density: f64,
    /// Mean blockage length L, m.
    pub mean_length: f64,
    /// Mean blockage width W, m.
    pub mean_width: f64,
}

impl BlockageConfig {
    pub const NONE: BlockageConfig = BlockageConfig {
        density: 0.0,
        mean_length: 15.0,
        mean_width: 15.0,
    };
}

/// Constants of the exponential LOS law derived from a blockage process:
/// P_LOS(d) = exp(−(ζd + p)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageDerived {
    pub zeta: f64,
    pub p: f64,
}

impl From<BlockageConfig> for BlockageDerived {
    fn from(b: BlockageConfig) -> Self {
        BlockageDerived {
            zeta: 2.0 * b.density * (b.mean_length + b.mean_width) / std::f64::consts::PI,
            p: b.density * b.mean_length * b.mean_width,
        }
    }
}

/// Probability that a link of length `d` is line-of-sight.
pub fn los_probability(d: f64, blk: &BlockageDerived) -> Result<f64> {
    if d < 0.0 {
        return Err(Error::Domain(format!("negative link distance {d}")));
    }
    Ok((-(blk.zeta * d + blk.p)).exp())
}

/// NLOS mmWave propagation parameters, consumed only by the Monte Carlo
/// engine when present (the analysis ignores NLOS mmWave links).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmwaveNlos {
    pub path_loss_exp: f64,
    /// Path gain at 1 m, linear.
    pub intercept: f64,
    pub nakagami_shape: u32,
}

impl Default for MmwaveNlos {
    fn default() -> Self {
        MmwaveNlos {
            path_loss_exp: 4.0,
            intercept: db_to_linear(-72.0),
            nakagami_shape: 2,
        }
    }
}

/// Full scenario: tier list (ordered sub-6, then mmWave, then THz), blockage
/// and UE processes, THz absorption, and default metric thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub tiers: Vec<TierConfig>,
    pub blockage: BlockageConfig,
    /// UE density λ_U, m⁻².
    pub ue_density: f64,
    /// Molecular absorption coefficient K_a, m⁻¹.
    pub absorption: f64,
    /// Shape of the induced Nakagami series for THz coverage.
    pub gamma_thz: u32,
    /// Default SINR threshold, dB.
    pub tau_db: f64,
    /// Default rate threshold, bit/s.
    pub rho_bps: f64,
    /// NLOS mmWave propagation toggle (Monte Carlo only).
    pub mmwave_nlos: Option<MmwaveNlos>,
}

impl NetworkConfig {
    pub fn new(tiers: Vec<TierConfig>, blockage: BlockageConfig, ue_density: f64) -> Self {
        NetworkConfig {
            tiers,
            blockage,
            ue_density,
            absorption: 0.0,
            gamma_thz: 10,
            tau_db: 10.0,
            rho_bps: 1e9,
            mmwave_nlos: None,
        }
    }

    /// The default three-tier benchmark scenario (one macro sub-6 GHz tier,
    /// one 64-antenna mmWave tier at 28 GHz, one dense 100-antenna THz tier
    /// at 340 GHz). The shipped `scenarios/default.toml` mirrors it.
    pub fn three_tier_default() -> Self {
        NetworkConfig {
            tiers: vec![
                TierConfig::sub6(2e-6, 46.0, 23.0, 4.0, 10e6, -38.5),
                TierConfig::mmwave(5e-5, 64, 33.0, 23.0, 2.0, 1e9, 3, 28e9),
                TierConfig::thz(5e-4, 100, 23.0, 23.0, 2.0, 10e9, 340e9),
            ],
            blockage: BlockageConfig {
                density: 1e-3,
                mean_length: 15.0,
                mean_width: 15.0,
            },
            ue_density: 2e-3,
            absorption: 0.01,
            gamma_thz: 10,
            tau_db: 10.0,
            rho_bps: 1e9,
            mmwave_nlos: None,
        }
    }

    pub fn blockage_derived(&self) -> BlockageDerived {
        self.blockage.into()
    }

    /// Fading/series shape used for tier `k` in the coverage analysis.
    pub fn series_shape(&self, k: usize) -> u32 {
        match self.tiers[k].band {
            BandKind::Sub6 => 1,
            BandKind::MmWave => self.tiers[k].nakagami_shape,
            BandKind::Thz => self.gamma_thz,
        }
    }

    pub fn band_indices(&self, band: BandKind) -> impl Iterator<Item = usize> + '_ {
        self.tiers
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.band == band)
            .map(|(k, _)| k)
    }
}

/// A single validation finding. `tier` fields are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DensityNonPositive {
        tier: usize,
    },
    Sub6MustBeSingleAntenna {
        tier: usize,
    },
    ArrayTooSmall {
        tier: usize,
    },
    PowerNonPositive {
        tier: usize,
        direction: Direction,
    },
    BiasNonPositive {
        tier: usize,
        direction: Direction,
    },
    PathLossExpNonPositive {
        tier: usize,
    },
    BandwidthNonPositive {
        tier: usize,
    },
    NakagamiShapeZero {
        tier: usize,
    },
    CarrierNonPositive {
        tier: usize,
    },
    InterceptNonPositive {
        tier: usize,
    },
    NegativeSideLobeGain {
        tier: usize,
    },
    TierOrderViolation {
        tier: usize,
    },
    BlockageLengthNonPositive,
    BlockageWidthNonPositive,
    BlockageDensityNegative,
    UeDensityNonPositive,
    AbsorptionNegative,
    GammaThzZero,
    /// λ_U ≥ max λ_k is an assumption of the load model, not a formula
    /// precondition; flagged as a warning.
    UeDensityBelowBsDensity {
        tier: usize,
    },
}

impl Violation {
    /// Warnings do not make a configuration unusable.
    pub fn is_warning(&self) -> bool {
        matches!(self, Violation::UeDensityBelowBsDensity { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Checks every schema invariant and returns the full list of findings;
/// an empty list means the configuration is valid. Pure and idempotent.
pub fn validate(config: &NetworkConfig) -> Vec<Violation> {
    use Violation::*;
    let mut out = Vec::new();

    if config.blockage.density < 0.0 {
        out.push(BlockageDensityNegative);
    }
    if config.blockage.mean_length <= 0.0 {
        out.push(BlockageLengthNonPositive);
    }
    if config.blockage.mean_width <= 0.0 {
        out.push(BlockageWidthNonPositive);
    }
    if config.ue_density <= 0.0 {
        out.push(UeDensityNonPositive);
    }
    if config.absorption < 0.0 {
        out.push(AbsorptionNegative);
    }
    if config.gamma_thz == 0 {
        out.push(GammaThzZero);
    }

    let mut last_rank = 0u8;
    for (i, t) in config.tiers.iter().enumerate() {
        let tier = i + 1;
        let rank = match t.band {
            BandKind::Sub6 => 0,
            BandKind::MmWave => 1,
            BandKind::Thz => 2,
        };
        if rank < last_rank {
            out.push(TierOrderViolation { tier });
        }
        last_rank = last_rank.max(rank);

        if t.density <= 0.0 {
            out.push(DensityNonPositive { tier });
        }
        match t.band {
            BandKind::Sub6 => {
                if t.antennas != 1 {
                    out.push(Sub6MustBeSingleAntenna { tier });
                }
                if t.ref_intercept <= 0.0 {
                    out.push(InterceptNonPositive { tier });
                }
            }
            BandKind::MmWave | BandKind::Thz => {
                if t.antennas < 2 {
                    out.push(ArrayTooSmall { tier });
                } else {
                    let pattern = crate::antenna::FlatTopPattern::for_array(t.antennas);
                    if pattern.g_min < 0.0 {
                        out.push(NegativeSideLobeGain { tier });
                    }
                }
                if t.carrier <= 0.0 {
                    out.push(CarrierNonPositive { tier });
                }
                if t.band == BandKind::MmWave && t.nakagami_shape == 0 {
                    out.push(NakagamiShapeZero { tier });
                }
            }
        }
        for q in Direction::BOTH {
            if t.power(q) <= 0.0 {
                out.push(PowerNonPositive { tier, direction: q });
            }
            if t.bias(q) <= 0.0 {
                out.push(BiasNonPositive { tier, direction: q });
            }
        }
        if t.path_loss_exp <= 0.0 {
            out.push(PathLossExpNonPositive { tier });
        }
        if t.bandwidth <= 0.0 {
            out.push(BandwidthNonPositive { tier });
        }
        if t.density > 0.0 && config.ue_density < t.density {
            out.push(UeDensityBelowBsDensity { tier });
        }
    }
    out
}
