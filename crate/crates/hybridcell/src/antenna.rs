//! Antenna gain patterns (exact Fejér kernel and its two-level flat-top
//! approximation), per-band propagation losses, small-scale fading samplers,
//! and receiver noise powers.

use crate::error::{Error, Result};
use crate::network::{
    dbm_to_watts, thermal_psd, BandKind, TierConfig, NOISE_FLOOR_DBM_PER_HZ, PLANCK_CONSTANT,
};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use std::f64::consts::PI;

/// Fejér kernel radiation pattern of an N-element uniform linear array,
/// in linear scale: sin²(πNφ) / (N sin²(πφ)).
///
/// `phi` is the beam offset coordinate (half the difference of direction
/// cosines); interfering links draw it uniformly from [−0.5, 0.5]. The
/// removable singularities at integer `phi` evaluate to N.
pub fn fejer_gain(n: u32, phi: f64) -> f64 {
    let nf = n as f64;
    let s = (PI * phi).sin();
    if s.abs() < 1e-9 {
        return nf;
    }
    let sn = (PI * nf * phi).sin();
    sn * sn / (nf * s * s)
}

/// Smallest φ > 0 with fejer_gain(N, φ) = N/2, located by bisection to 1e−12.
/// Always lies in (0, 1/(2N)] for N ≥ 2.
pub fn half_power_offset(n: u32) -> f64 {
    assert!(n >= 2, "half-power offset needs an array, got N={n}");
    let target = n as f64 / 2.0;
    let mut lo = 1e-12;
    let mut hi = 0.5 / n as f64;
    if fejer_gain(n, hi) > target {
        // N = 2 puts the root exactly on the bracket edge; nudge past the
        // floating-point noise there
        hi += 1e-9;
    }
    debug_assert!(fejer_gain(n, lo) > target && fejer_gain(n, hi) <= target);
    // run to machine precision: the kernel slope at the half-power point
    // grows like N², so offset error is amplified in the gain
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fejer_gain(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-level flat-top approximation of the Fejér pattern, normalised so the
/// expected gain over a uniform beam offset is exactly one:
/// G_max·P(main lobe) + G_min·P(side lobe) = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatTopPattern {
    pub g_max: f64,
    pub g_min: f64,
    /// P(|φ| ≤ φ_3dB) = 2·φ_3dB for a uniform offset on [−0.5, 0.5].
    pub p_max: f64,
    pub p_min: f64,
    pub phi_3db: f64,
}

impl FlatTopPattern {
    pub fn for_array(n: u32) -> Self {
        if n < 2 {
            return FlatTopPattern {
                g_max: 1.0,
                g_min: 1.0,
                p_max: 1.0,
                p_min: 0.0,
                phi_3db: 0.5,
            };
        }
        let phi_3db = half_power_offset(n);
        let g_max = n as f64;
        let p_max = 2.0 * phi_3db;
        let mut g_min = (1.0 - p_max * g_max) / (1.0 - p_max);
        if g_min < 0.0 && g_min > -1e-12 {
            // N = 2: the side lobe vanishes exactly; round away the noise
            g_min = 0.0;
        }
        FlatTopPattern {
            g_max,
            g_min,
            p_max,
            p_min: 1.0 - p_max,
            phi_3db,
        }
    }

    /// Draw a gain for an interfering link: main lobe with probability
    /// `p_max`, side lobe otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.gen::<f64>() < self.p_max {
            self.g_max
        } else {
            self.g_min
        }
    }
}

/// Flat-top gain at beam offset `phi` ∈ [−0.5, 0.5].
pub fn flat_top_gain(pattern: &FlatTopPattern, phi: f64) -> Result<f64> {
    if !(-0.5..=0.5).contains(&phi) {
        return Err(Error::Domain(format!(
            "beam offset {phi} outside [-0.5, 0.5]"
        )));
    }
    Ok(if phi.abs() <= pattern.phi_3db {
        pattern.g_max
    } else {
        pattern.g_min
    })
}

/// Distance-dependent propagation loss factor for a tier, excluding fading
/// and antenna gain: β₀·d^(−α) for sub-6 GHz, (c/4πf)²·d^(−α) for mmWave,
/// and (c/4πf)²·d^(−α)·e^(−K_a·d) for THz.
pub fn path_loss(tier: &TierConfig, d: f64, absorption: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::Domain(format!(
            "path loss is singular at distance {d}"
        )));
    }
    let spread = tier.intercept() * d.powf(-tier.path_loss_exp);
    Ok(match tier.band {
        BandKind::Sub6 | BandKind::MmWave => spread,
        BandKind::Thz => spread * (-absorption * d).exp(),
    })
}

/// Small-scale fading power gain model. Every variant has unit mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// Rayleigh amplitude: power ~ Exp(1). Sub-6 GHz links.
    Rayleigh,
    /// Nakagami-m amplitude: power ~ Γ(γ, 1/γ). mmWave links.
    Nakagami(u32),
    /// No small-scale fading. THz links.
    Deterministic,
}

impl FadingModel {
    pub fn for_tier(tier: &TierConfig) -> Self {
        match tier.band {
            BandKind::Sub6 => FadingModel::Rayleigh,
            BandKind::MmWave => FadingModel::Nakagami(tier.nakagami_shape),
            BandKind::Thz => FadingModel::Deterministic,
        }
    }
}

/// Draw a fading power gain.
pub fn sample_fading<R: Rng + ?Sized>(model: FadingModel, rng: &mut R) -> f64 {
    match model {
        FadingModel::Rayleigh => Exp::new(1.0).expect("valid rate").sample(rng),
        FadingModel::Nakagami(shape) => {
            let g = shape.max(1) as f64;
            Gamma::new(g, 1.0 / g).expect("valid shape").sample(rng)
        }
        FadingModel::Deterministic => 1.0,
    }
}

/// Receiver noise power δ² in watts.
///
/// Sub-6/mmWave tiers: −174 dBm/Hz + 10·log₁₀(B_W) + noise figure.
/// THz tiers: Johnson–Nyquist PSD times bandwidth; above 0.1 THz the PSD
/// rolls off as f·p / (exp(f·p / k_B·T₀) − 1).
pub fn noise_power(tier: &TierConfig) -> f64 {
    match tier.band {
        BandKind::Sub6 | BandKind::MmWave => dbm_to_watts(
            NOISE_FLOOR_DBM_PER_HZ + 10.0 * tier.bandwidth.log10() + tier.noise_figure_db,
        ),
        BandKind::Thz => {
            let kt = thermal_psd();
            let psd = if tier.carrier <= 0.1e12 {
                kt
            } else {
                let fp = tier.carrier * PLANCK_CONSTANT;
                fp / (fp / kt).exp_m1()
            };
            psd * tier.bandwidth
        }
    }
}
