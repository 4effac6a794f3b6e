//! Closed-form decoupled DL/UL cell-association analysis: nearest-LOS-BS
//! distance laws, competitor boundary functions, per-tier association
//! probabilities, and serving-distance densities.
//!
//! The association rule is strongest average biased received power
//! P·G_max·l(d)·C, decided independently per direction. A tier's probability
//! of winning integrates its nearest(-LOS) distance density against the void
//! probabilities of every competitor inside its "winning" boundary.

use crate::error::{Error, Result};
use crate::network::{BandKind, BlockageDerived, Direction, NetworkConfig, TierConfig};
use crate::numerics::{integrate, lambert_w0_of_ln, QuadratureSpec};
use std::io::Write;

fn assoc_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-6,
        abs_tol: 1e-12,
        max_subdivisions: 400,
    }
}

/// Log of the probability that an LOS-thinned HPPP of intensity `lambda`
/// has no point within distance `beta`:
/// −2πλ·e^(−p)·(1 − e^(−ζβ)(1 + ζβ)) / ζ².
///
/// The ζ → 0 limit recovers the unthinned void exponent −πλ·e^(−p)·β².
pub fn los_void_log(lambda: f64, beta: f64, blk: &BlockageDerived) -> f64 {
    if beta <= 0.0 {
        return 0.0;
    }
    let scale = -2.0 * std::f64::consts::PI * lambda * (-blk.p).exp();
    if blk.zeta == 0.0 {
        return 0.5 * scale * beta * beta;
    }
    if beta.is_infinite() {
        return scale / (blk.zeta * blk.zeta);
    }
    let u = blk.zeta * beta;
    let core = if u < 1e-6 {
        // series of 1 − e^(−u)(1+u)
        u * u * (0.5 - u / 3.0 + u * u / 8.0)
    } else {
        1.0 - (-u).exp() * (1.0 + u)
    };
    scale * core / (blk.zeta * blk.zeta)
}

/// Density of the distance from the typical UE to its nearest LOS BS in a
/// tier. Defective when blockage is present: the missing mass is the chance
/// no LOS BS exists at all.
pub fn nearest_los_distance_pdf(tier: &TierConfig, blk: &BlockageDerived, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    2.0 * std::f64::consts::PI
        * tier.density
        * x
        * (-(blk.zeta * x + blk.p) + los_void_log(tier.density, x, blk)).exp()
}

/// CDF companion of [`nearest_los_distance_pdf`].
pub fn nearest_los_distance_cdf(tier: &TierConfig, blk: &BlockageDerived, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 - los_void_log(tier.density, x, blk).exp()
}

/// Total mass of the nearest-LOS-distance law: 1 − P(no LOS BS anywhere).
pub fn nearest_los_total_mass(tier: &TierConfig, blk: &BlockageDerived) -> f64 {
    1.0 - los_void_log(tier.density, f64::INFINITY, blk).exp()
}

/// Biased average received amplitude of a tier: P·C·G_max·(path gain at 1 m).
fn ln_biased_amplitude(tier: &TierConfig, q: Direction) -> f64 {
    tier.power(q).ln() + tier.bias(q).ln() + (tier.antennas as f64).ln() + tier.intercept().ln()
}

/// Threshold distance below which a competitor BS would beat the anchor's
/// biased received power, for an anchor serving distance `x`.
///
/// Power-law competitors invert algebraically; THz competitors solve
/// D^α·e^(K_a·D) = threshold through the Lambert W function. Worked in log
/// space so extreme parameter ratios cannot overflow.
pub fn boundary(
    cfg: &NetworkConfig,
    anchor: usize,
    competitor: usize,
    q: Direction,
    x: f64,
) -> f64 {
    let ln_ratio =
        ln_biased_amplitude(&cfg.tiers[competitor], q) - ln_biased_amplitude(&cfg.tiers[anchor], q);
    boundary_from_ln_ratio(cfg, anchor, competitor, ln_ratio, x)
}

fn boundary_from_ln_ratio(
    cfg: &NetworkConfig,
    anchor: usize,
    competitor: usize,
    ln_ratio: f64,
    x: f64,
) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = &cfg.tiers[anchor];
    let b = &cfg.tiers[competitor];
    // ln of D^alpha_b [· e^(Ka·D) for THz competitors]
    let mut ln_thr = ln_ratio + a.path_loss_exp * x.ln();
    if a.band == BandKind::Thz {
        ln_thr += cfg.absorption * x;
    }
    let ln_y = ln_thr / b.path_loss_exp;
    if b.band != BandKind::Thz || cfg.absorption == 0.0 {
        return ln_y.exp();
    }
    let ka_over_alpha = cfg.absorption / b.path_loss_exp;
    let w = lambert_w0_of_ln(ka_over_alpha.ln() + ln_y);
    w / ka_over_alpha
}

/// Precomputed per-direction association context.
struct Analysis<'a> {
    cfg: &'a NetworkConfig,
    blk: BlockageDerived,
    ln_amp: Vec<f64>,
}

impl<'a> Analysis<'a> {
    fn new(cfg: &'a NetworkConfig, q: Direction) -> Self {
        Analysis {
            cfg,
            blk: cfg.blockage_derived(),
            ln_amp: cfg
                .tiers
                .iter()
                .map(|t| ln_biased_amplitude(t, q))
                .collect(),
        }
    }

    /// Anchor-distance density: nearest-BS law for sub-6 anchors (NLOS links
    /// always usable), nearest-LOS-BS law otherwise.
    fn anchor_density(&self, k: usize, x: f64) -> f64 {
        let t = &self.cfg.tiers[k];
        if x <= 0.0 {
            return 0.0;
        }
        match t.band {
            BandKind::Sub6 => {
                let pl = std::f64::consts::PI * t.density;
                2.0 * pl * x * (-pl * x * x).exp()
            }
            _ => nearest_los_distance_pdf(t, &self.blk, x),
        }
    }

    /// Association integrand: anchor density times every competitor's void
    /// probability inside its boundary. Equals A_k·f_{X_k}(x) pointwise.
    fn integrand(&self, k: usize, x: f64) -> f64 {
        let density = self.anchor_density(k, x);
        if density == 0.0 {
            return 0.0;
        }
        let mut log_void = 0.0;
        for (j, t) in self.cfg.tiers.iter().enumerate() {
            if j == k {
                continue;
            }
            let beta = boundary_from_ln_ratio(self.cfg, k, j, self.ln_amp[j] - self.ln_amp[k], x);
            log_void += match t.band {
                BandKind::Sub6 => -std::f64::consts::PI * t.density * beta * beta,
                _ => los_void_log(t.density, beta, &self.blk),
            };
        }
        density * log_void.exp()
    }
}

/// Truncation point for the outer association integrals: the smallest
/// distance where the anchor density has dropped below 1e−12 of its peak
/// (closed form 6/√(πλ) for sub-6 anchors).
pub fn integration_cutoff(cfg: &NetworkConfig, anchor: usize) -> f64 {
    let t = &cfg.tiers[anchor];
    if t.band == BandKind::Sub6 {
        return 6.0 / (std::f64::consts::PI * t.density).sqrt();
    }
    let blk = cfg.blockage_derived();
    let density = |x: f64| nearest_los_distance_pdf(t, &blk, x);
    let mut peak = 0.0f64;
    let mut x_peak = 1.0;
    let mut x = 1e-3;
    while x < 1e7 {
        let v = density(x);
        if v > peak {
            peak = v;
            x_peak = x;
        }
        x *= 1.05;
    }
    let mut x = x_peak;
    while density(x) > 1e-12 * peak && x < 1e9 {
        x *= 1.05;
    }
    x
}

/// Probability that the typical UE associates with tier `anchor` (0-based)
/// in direction `q`.
pub fn association_probability(cfg: &NetworkConfig, anchor: usize, q: Direction) -> Result<f64> {
    let analysis = Analysis::new(cfg, q);
    let cutoff = integration_cutoff(cfg, anchor);
    integrate(
        |x| analysis.integrand(anchor, x),
        0.0,
        cutoff,
        &assoc_quadrature(),
    )
}

/// Per-tier association probabilities for one direction and a tier (1-based
/// in reports).
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationEntry {
    pub tier: usize,
    pub direction: Direction,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssociationReport {
    pub entries: Vec<AssociationEntry>,
}

impl AssociationReport {
    pub fn probability(&self, tier_1based: usize, q: Direction) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.tier == tier_1based && e.direction == q)
            .map(|e| e.probability)
    }

    pub fn sum(&self, q: Direction) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.direction == q)
            .map(|e| e.probability)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tier,direction,probability")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.tier, e.direction, e.probability)?;
        }
        Ok(())
    }
}

/// Association probabilities for every tier and both directions.
pub fn association_report(cfg: &NetworkConfig) -> Result<AssociationReport> {
    let mut entries = Vec::with_capacity(cfg.tiers.len() * 2);
    for q in Direction::BOTH {
        for k in 0..cfg.tiers.len() {
            entries.push(AssociationEntry {
                tier: k + 1,
                direction: q,
                probability: association_probability(cfg, k, q)?,
            });
        }
    }
    Ok(AssociationReport { entries })
}

/// Serving-distance density f_{X_k}(x) for tier `anchor`, i.e. the anchor's
/// association integrand normalised by its association probability.
pub fn serving_distance_pdf(
    cfg: &NetworkConfig,
    anchor: usize,
    q: Direction,
    x: f64,
) -> Result<f64> {
    let mass = association_probability(cfg, anchor, q)?;
    if mass < 1e-9 {
        return Err(Error::NoMassInTier {
            tier: anchor + 1,
            direction: q,
        });
    }
    let analysis = Analysis::new(cfg, q);
    Ok(analysis.integrand(anchor, x) / mass)
}

/// Log-spaced tabulation of the (unnormalised) serving-distance integrand,
/// used by the coverage analysis to amortise its inner integrals.
#[derive(Debug, Clone)]
pub struct ServingDistanceTable {
    pub xs: Vec<f64>,
    /// A_k·f_{X_k}(x) at each grid point.
    pub weighted_density: Vec<f64>,
    /// Association probability implied by the table (trapezoid mass).
    pub mass: f64,
}

impl ServingDistanceTable {
    /// ∫ g(x)·A_k·f_{X_k}(x) dx by trapezoid on the tabulated grid.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let mut acc = 0.5 * self.xs[0] * g(self.xs[0]) * self.weighted_density[0];
        for i in 1..self.xs.len() {
            let h = self.xs[i] - self.xs[i - 1];
            let left = g(self.xs[i - 1]) * self.weighted_density[i - 1];
            let right = g(self.xs[i]) * self.weighted_density[i];
            acc += 0.5 * h * (left + right);
        }
        acc
    }

    /// Normalised density at grid index `i`.
    pub fn pdf(&self, i: usize) -> f64 {
        self.weighted_density[i] / self.mass
    }

    /// CDF of the serving distance on the grid (for distribution tests).
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len());
        let mut acc = 0.5 * self.xs[0] * self.weighted_density[0];
        out.push(acc / self.mass);
        for i in 1..self.xs.len() {
            let h = self.xs[i] - self.xs[i - 1];
            acc += 0.5 * h * (self.weighted_density[i - 1] + self.weighted_density[i]);
            out.push(acc / self.mass);
        }
        out
    }
}

pub fn serving_distance_table(
    cfg: &NetworkConfig,
    anchor: usize,
    q: Direction,
    points: usize,
) -> Result<ServingDistanceTable> {
    assert!(points >= 8);
    let analysis = Analysis::new(cfg, q);
    let cutoff = integration_cutoff(cfg, anchor);
    let x_min = cutoff * 1e-6;
    let ratio = (cutoff / x_min).ln() / (points - 1) as f64;
    let xs: Vec<f64> = (0..points)
        .map(|i| x_min * (ratio * i as f64).exp())
        .collect();
    let weighted_density: Vec<f64> = xs.iter().map(|&x| analysis.integrand(anchor, x)).collect();

    let mut mass = 0.5 * xs[0] * weighted_density[0];
    for i in 1..points {
        mass += 0.5 * (xs[i] - xs[i - 1]) * (weighted_density[i - 1] + weighted_density[i]);
    }
    if mass < 1e-9 {
        return Err(Error::NoMassInTier {
            tier: anchor + 1,
            direction: q,
        });
    }
    Ok(ServingDistanceTable {
        xs,
        weighted_density,
        mass,
    })
}
