//! Analytical conditional and total SINR coverage per band, and rate coverage
//! under the mean-load model.
//!
//! Interference is band-isolated: a UE served by a sub-6 GHz tier sees only
//! sub-6 GHz interferers, and likewise for mmWave and THz. The uplink uses
//! the interfering-UE-at-BS-position approximation, so uplink expressions are
//! the downlink ones with uplink powers and biases. The gamma tail bound
//! behind the mmWave/THz series turns each conditional coverage into an
//! alternating binomial sum of interference Laplace transforms.

use crate::association::{boundary, ServingDistanceTable};
use crate::error::{Error, Result};
use crate::network::{BandKind, Direction, NetworkConfig};
use crate::numerics::{binomial, eta, integrate_semi_infinite, QuadratureSpec};
use rayon::prelude::*;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

static CLAMP_EVENTS: AtomicUsize = AtomicUsize::new(0);

/// Number of times an alternating series left [0, 1] by more than 1e−6 and
/// was clamped. A diagnostic, not an error.
pub fn clamp_events() -> usize {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

fn inner_quadrature() -> QuadratureSpec {
    // interference integrals enter the coverage through exp(-2πλ·P·I), so an
    // absolute slack of 1e-9 here is invisible at the probability scale
    QuadratureSpec {
        rel_tol: 1e-6,
        abs_tol: 1e-9,
        max_subdivisions: 200,
    }
}

fn clamp_unit(v: f64) -> f64 {
    if !(-1e-6..=1.0 + 1e-6).contains(&v) {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
    }
    v.clamp(0.0, 1.0)
}

/// Conditional coverage P(SINR > τ | serving distance x) for a sub-6 GHz
/// anchor: Rayleigh fading gives a plain Laplace-transform product over the
/// sub-6 interfering tiers plus a noise factor.
pub fn conditional_coverage_sub6(
    cfg: &NetworkConfig,
    tier: usize,
    q: Direction,
    tau: f64,
    x: f64,
) -> Result<f64> {
    debug_assert_eq!(cfg.tiers[tier].band, BandKind::Sub6);
    check_pre(tau, x)?;
    if !tau.is_finite() {
        return Ok(0.0);
    }
    let s = &cfg.tiers[tier];
    let y = tau * x.powf(s.path_loss_exp) / s.power(q);
    let noise = crate::antenna::noise_power(s);
    let mut log_acc = -y * noise / s.ref_intercept;

    let spec = inner_quadrature();
    for j in cfg.band_indices(BandKind::Sub6) {
        let t = &cfg.tiers[j];
        let lo = boundary(cfg, tier, j, q, x);
        let coef = y * t.power(q) * t.ref_intercept / s.ref_intercept;
        let alpha = t.path_loss_exp;
        let inner = integrate_semi_infinite(|r| coef / (r.powf(alpha) + coef) * r, lo, &spec)?;
        log_acc -= 2.0 * std::f64::consts::PI * t.density * inner;
    }
    Ok(clamp_unit(log_acc.exp()))
}

/// Conditional coverage for an mmWave anchor: alternating series over the
/// Nakagami shape, each term a noise factor times per-tier per-lobe LOS
/// interference factors with the gamma moment generating function inside.
pub fn conditional_coverage_mmwave(
    cfg: &NetworkConfig,
    tier: usize,
    q: Direction,
    tau: f64,
    x: f64,
) -> Result<f64> {
    debug_assert_eq!(cfg.tiers[tier].band, BandKind::MmWave);
    check_pre(tau, x)?;
    if !tau.is_finite() {
        return Ok(0.0);
    }
    let m = &cfg.tiers[tier];
    let blk = cfg.blockage_derived();
    let shape = m.nakagami_shape.max(1);
    let eta_m = eta(shape);
    let noise = crate::antenna::noise_power(m);
    let serve = m.power(q) * m.antennas as f64 * m.intercept();
    let spec = inner_quadrature();

    // exclusion radii and lobe patterns do not depend on the series index
    let interferers: Vec<_> = cfg
        .band_indices(BandKind::MmWave)
        .map(|j| {
            let t = &cfg.tiers[j];
            (
                t,
                boundary(cfg, tier, j, q, x),
                crate::antenna::FlatTopPattern::for_array(t.antennas),
            )
        })
        .collect();

    let mut sum = KahanSum::default();
    for n in 1..=shape {
        let v = n as f64 * eta_m * tau * x.powf(m.path_loss_exp) / (m.power(q) * m.antennas as f64);
        let mut term_log = -v * noise / m.intercept();
        for (t, lo, pattern) in &interferers {
            let gamma_j = t.nakagami_shape.max(1) as f64;
            let alpha = t.path_loss_exp;
            // V·P_j·G·κ_j/κ_m, recast through the serving amplitude
            let base =
                n as f64 * eta_m * tau * x.powf(m.path_loss_exp) * t.power(q) * t.intercept()
                    / serve;
            for (gain, prob) in [
                (pattern.g_max, pattern.p_max),
                (pattern.g_min, pattern.p_min),
            ] {
                let coef = base * gain / gamma_j;
                let inner = integrate_semi_infinite(
                    |r| {
                        let frac = (1.0 + coef * r.powf(-alpha)).powf(-gamma_j);
                        (1.0 - frac) * (-(blk.zeta * r + blk.p)).exp() * r
                    },
                    *lo,
                    &spec,
                )?;
                term_log -= 2.0 * std::f64::consts::PI * t.density * prob * inner;
            }
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum.add(sign * binomial(shape, n)? as f64 * term_log.exp());
    }
    Ok(clamp_unit(sum.value()))
}

/// Conditional coverage for a THz anchor: the series shape is the induced
/// Nakagami parameter, the noise factor carries the Johnson–Nyquist term and
/// the self-absorption term e^(K_a·x) − 1, and interference factors absorb
/// each interferer's full (signal + re-radiated) contribution.
pub fn conditional_coverage_thz(
    cfg: &NetworkConfig,
    tier: usize,
    q: Direction,
    tau: f64,
    x: f64,
) -> Result<f64> {
    debug_assert_eq!(cfg.tiers[tier].band, BandKind::Thz);
    check_pre(tau, x)?;
    if !tau.is_finite() {
        return Ok(0.0);
    }
    let t0 = &cfg.tiers[tier];
    let blk = cfg.blockage_derived();
    let shape = cfg.gamma_thz.max(1);
    let eta_t = eta(shape);
    let noise = crate::antenna::noise_power(t0);
    let serve = t0.power(q) * t0.antennas as f64 * t0.intercept();
    let absorb = (cfg.absorption * x).exp();
    if !absorb.is_finite() {
        return Ok(0.0);
    }
    let j_serve = serve * x.powf(-t0.path_loss_exp);
    let spec = inner_quadrature();

    let interferers: Vec<_> = cfg
        .band_indices(BandKind::Thz)
        .map(|j| {
            let t = &cfg.tiers[j];
            (
                t,
                boundary(cfg, tier, j, q, x),
                crate::antenna::FlatTopPattern::for_array(t.antennas),
            )
        })
        .collect();

    let mut sum = KahanSum::default();
    for n in 1..=shape {
        let scale = n as f64 * eta_t * tau;
        let mut term_log = -scale * (noise * absorb / j_serve + (cfg.absorption * x).exp_m1());
        for (t, lo, pattern) in &interferers {
            let alpha = t.path_loss_exp;
            let base =
                scale * x.powf(t0.path_loss_exp) * absorb * t.power(q) * t.intercept() / serve;
            for (gain, prob) in [
                (pattern.g_max, pattern.p_max),
                (pattern.g_min, pattern.p_min),
            ] {
                let coef = base * gain;
                let inner = integrate_semi_infinite(
                    |r| {
                        let hit = -(-coef * r.powf(-alpha)).exp_m1();
                        hit * (-(blk.zeta * r + blk.p)).exp() * r
                    },
                    *lo,
                    &spec,
                )?;
                term_log -= 2.0 * std::f64::consts::PI * t.density * prob * inner;
            }
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum.add(sign * binomial(shape, n)? as f64 * term_log.exp());
    }
    Ok(clamp_unit(sum.value()))
}

/// Band dispatch for the conditional coverage of any tier.
pub fn conditional_coverage(
    cfg: &NetworkConfig,
    tier: usize,
    q: Direction,
    tau: f64,
    x: f64,
) -> Result<f64> {
    match cfg.tiers[tier].band {
        BandKind::Sub6 => conditional_coverage_sub6(cfg, tier, q, tau, x),
        BandKind::MmWave => conditional_coverage_mmwave(cfg, tier, q, tau, x),
        BandKind::Thz => conditional_coverage_thz(cfg, tier, q, tau, x),
    }
}

fn check_pre(tau: f64, x: f64) -> Result<()> {
    if tau <= 0.0 || tau.is_nan() {
        return Err(Error::Domain(format!("SINR threshold must be > 0: {tau}")));
    }
    if x <= 0.0 {
        return Err(Error::Domain(format!("serving distance must be > 0: {x}")));
    }
    Ok(())
}

#[derive(Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum
    }
}

/// Mean per-BS load per tier: Z_k = 1 + 1.28·λ_U·A_k / λ_k.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadModel {
    pub z: Vec<f64>,
}

impl LoadModel {
    pub fn new(cfg: &NetworkConfig, association: &[f64]) -> Self {
        LoadModel {
            z: cfg
                .tiers
                .iter()
                .zip(association)
                .map(|(t, a)| 1.0 + 1.28 * cfg.ue_density * a / t.density)
                .collect(),
        }
    }
}

/// One evaluated threshold: per-tier conditional coverage, per-tier weighted
/// contribution A_k·P_cov,k, and their total.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePoint {
    /// Threshold in display units (dB for SINR curves, bit/s for rate curves).
    pub threshold: f64,
    pub conditional: Vec<f64>,
    pub weighted: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Sinr,
    Rate,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricKind::Sinr => write!(f, "sinr_cov"),
            MetricKind::Rate => write!(f, "rate_cov"),
        }
    }
}

/// Metric values over a threshold grid for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub metric: MetricKind,
    pub direction: Direction,
    pub points: Vec<CoveragePoint>,
}

impl CoverageCurve {
    /// Rows are (direction, threshold, tier-or-total, value); tier rows carry
    /// the weighted contribution so that tier rows sum to the total row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "direction,threshold,tier,value")?;
        for p in &self.points {
            for (k, v) in p.weighted.iter().enumerate() {
                writeln!(w, "{},{},{},{}", self.direction, p.threshold, k + 1, v)?;
            }
            writeln!(w, "{},{},total,{}", self.direction, p.threshold, p.total)?;
        }
        Ok(())
    }
}

/// Shared per-direction state for evaluating many thresholds: the tabulated
/// serving-distance integrands on a nested log grid (512 → 1023 → 2045
/// points) so each refinement level reuses the coarser conditional values.
pub struct CoverageEvaluator<'a> {
    cfg: &'a NetworkConfig,
    q: Direction,
    grids: Vec<TierGrid>,
}

struct TierGrid {
    xs: Vec<f64>,
    weighted_density: Vec<f64>,
    mass: f64,
}

const MASTER_POINTS: usize = 2045; // stride 4 -> 512, stride 2 -> 1023

impl<'a> CoverageEvaluator<'a> {
    pub fn new(cfg: &'a NetworkConfig, q: Direction) -> Result<Self> {
        let grids = (0..cfg.tiers.len())
            .map(|k| {
                let table = crate::association::serving_distance_table(cfg, k, q, MASTER_POINTS);
                match table {
                    Ok(ServingDistanceTable {
                        xs,
                        weighted_density,
                        mass,
                    }) => Ok(TierGrid {
                        xs,
                        weighted_density,
                        mass,
                    }),
                    // a tier with no mass simply contributes nothing
                    Err(Error::NoMassInTier { .. }) => Ok(TierGrid {
                        xs: Vec::new(),
                        weighted_density: Vec::new(),
                        mass: 0.0,
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverageEvaluator { cfg, q, grids })
    }

    pub fn association(&self, k: usize) -> f64 {
        self.grids[k].mass
    }

    /// Weighted coverage contribution of one tier at one (already linear)
    /// threshold: ∫ P(SINR > τ | x)·A_k·f_{X_k}(x) dx, trapezoid on the log
    /// grid, refined by doubling until successive totals differ < 1e−3.
    fn weighted_tier(&self, k: usize, tau: f64) -> Result<f64> {
        let grid = &self.grids[k];
        if grid.mass == 0.0 {
            return Ok(0.0);
        }
        if !tau.is_finite() {
            return Ok(0.0);
        }
        let mut cond: Vec<Option<f64>> = vec![None; grid.xs.len()];
        let mut prev: Option<f64> = None;
        for stride in [4usize, 2, 1] {
            let mut value = 0.0;
            let mut last: Option<(f64, f64)> = None; // (x, cond*wd)
            for i in (0..grid.xs.len()).step_by(stride) {
                let c = match cond[i] {
                    Some(c) => c,
                    None => {
                        let c = conditional_coverage(self.cfg, k, self.q, tau, grid.xs[i])?;
                        cond[i] = Some(c);
                        c
                    }
                };
                let f = c * grid.weighted_density[i];
                if let Some((px, pf)) = last {
                    value += 0.5 * (grid.xs[i] - px) * (pf + f);
                } else {
                    // head segment [0, x_min]; the integrand vanishes at 0
                    value += 0.5 * grid.xs[i] * f;
                }
                last = Some((grid.xs[i], f));
            }
            if let Some(p) = prev {
                if (value - p).abs() < 1e-3 {
                    return Ok(value);
                }
            }
            prev = Some(value);
        }
        Ok(prev.expect("at least one refinement level evaluated"))
    }

    /// Evaluate one SINR threshold (linear).
    pub fn sinr_point(&self, tau: f64, display_threshold: f64) -> Result<CoveragePoint> {
        let taus = vec![tau; self.cfg.tiers.len()];
        self.point(&taus, display_threshold)
    }

    /// Evaluate per-tier thresholds (linear); used by the rate mapping.
    pub fn point(&self, taus: &[f64], display_threshold: f64) -> Result<CoveragePoint> {
        let mut conditional = Vec::with_capacity(self.grids.len());
        let mut weighted = Vec::with_capacity(self.grids.len());
        let mut total = 0.0;
        for (k, &tau_k) in taus.iter().enumerate() {
            let w = self.weighted_tier(k, tau_k)?;
            let a = self.grids[k].mass;
            conditional.push(if a > 0.0 { (w / a).min(1.0) } else { 0.0 });
            weighted.push(w);
            total += w;
        }
        Ok(CoveragePoint {
            threshold: display_threshold,
            conditional,
            weighted,
            total,
        })
    }

    /// Map a rate threshold to per-tier SINR thresholds via the load model.
    pub fn rate_point(&self, rho: f64, load: &LoadModel) -> Result<CoveragePoint> {
        let taus: Vec<f64> = self
            .cfg
            .tiers
            .iter()
            .zip(&load.z)
            .map(|(t, z)| {
                let exponent = rho * z / t.bandwidth;
                if exponent > 1020.0 {
                    f64::INFINITY
                } else {
                    exponent.exp2() - 1.0
                }
            })
            .collect();
        self.point(&taus, rho)
    }
}

/// Total and per-tier SINR coverage at a linear threshold.
pub fn sinr_coverage(cfg: &NetworkConfig, q: Direction, tau: f64) -> Result<CoveragePoint> {
    CoverageEvaluator::new(cfg, q)?.sinr_point(tau, tau)
}

/// SINR coverage over a grid of thresholds given in dB.
pub fn sinr_coverage_curve(
    cfg: &NetworkConfig,
    q: Direction,
    thresholds_db: &[f64],
) -> Result<CoverageCurve> {
    let eval = CoverageEvaluator::new(cfg, q)?;
    let points = thresholds_db
        .par_iter()
        .map(|&db| eval.sinr_point(crate::network::db_to_linear(db), db))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve {
        metric: MetricKind::Sinr,
        direction: q,
        points,
    })
}

/// Total and per-tier rate coverage at a rate threshold in bit/s.
pub fn rate_coverage(cfg: &NetworkConfig, q: Direction, rho: f64) -> Result<CoveragePoint> {
    if rho <= 0.0 {
        return Err(Error::Domain(format!("rate threshold must be > 0: {rho}")));
    }
    let eval = CoverageEvaluator::new(cfg, q)?;
    let assoc: Vec<f64> = (0..cfg.tiers.len()).map(|k| eval.association(k)).collect();
    let load = LoadModel::new(cfg, &assoc);
    eval.rate_point(rho, &load)
}

/// Rate coverage over a grid of thresholds in bit/s.
pub fn rate_coverage_curve(
    cfg: &NetworkConfig,
    q: Direction,
    thresholds_bps: &[f64],
) -> Result<CoverageCurve> {
    let eval = CoverageEvaluator::new(cfg, q)?;
    let assoc: Vec<f64> = (0..cfg.tiers.len()).map(|k| eval.association(k)).collect();
    let load = LoadModel::new(cfg, &assoc);
    let points = thresholds_bps
        .par_iter()
        .map(|&rho| eval.rate_point(rho, &load))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve {
        metric: MetricKind::Rate,
        direction: q,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{db_to_linear, BlockageConfig, NetworkConfig, TierConfig};

    fn table_default() -> NetworkConfig {
        NetworkConfig::three_tier_default()
    }

    #[test]
    fn conditionals_approach_one_at_vanishing_threshold() {
        let cfg = table_default();
        for (k, x) in [(0usize, 100.0), (1, 30.0), (2, 10.0)] {
            let v = conditional_coverage(&cfg, k, Direction::Dl, 1e-12, x).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "tier {k}: {v}");
        }
    }

    #[test]
    fn sub6_noise_only_limit_matches_closed_form() {
        // single sub-6 tier with vanishing density: the interference product
        // degenerates and only exp(-Y * noise / beta0) remains
        let cfg = NetworkConfig::new(
            vec![TierConfig::sub6(1e-12, 46.0, 23.0, 4.0, 1e7, -38.5)],
            BlockageConfig::NONE,
            2e-3,
        );
        let tau = db_to_linear(10.0);
        let x = 200.0;
        let got = conditional_coverage_sub6(&cfg, 0, Direction::Dl, tau, x).unwrap();
        let t = &cfg.tiers[0];
        let y = tau * x.powf(4.0) / t.power_dl;
        let want = (-y * crate::antenna::noise_power(t) / t.ref_intercept).exp();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn mmwave_single_term_series_when_rayleigh() {
        // gamma = 1 collapses the series to one Laplace-type term <= 1
        let mut cfg = table_default();
        cfg.tiers[1].nakagami_shape = 1;
        let v =
            conditional_coverage_mmwave(&cfg, 1, Direction::Dl, db_to_linear(5.0), 20.0).unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn thz_noise_only_series_without_absorption_or_interference() {
        // exponent 3 keeps the vanishing-density interference integral finite
        let mut cfg = NetworkConfig::new(
            vec![TierConfig::thz(1e-12, 100, 23.0, 23.0, 3.0, 1e10, 340e9)],
            BlockageConfig::NONE,
            2e-3,
        );
        cfg.absorption = 0.0;
        cfg.gamma_thz = 10;
        let tau = db_to_linear(10.0);
        let x = 20.0;
        let got = conditional_coverage_thz(&cfg, 0, Direction::Dl, tau, x).unwrap();
        let t = &cfg.tiers[0];
        let j = t.power_dl * 100.0 * t.intercept() * x.powf(-3.0);
        let eta_t = eta(10);
        let mut want = 0.0;
        for n in 1..=10u32 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            want += sign
                * binomial(10, n).unwrap() as f64
                * (-(n as f64) * eta_t * tau * crate::antenna::noise_power(t) / j).exp();
        }
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn coverage_total_is_bookkept_and_monotone() {
        let cfg = table_default();
        let curve = sinr_coverage_curve(&cfg, Direction::Dl, &[-10.0, 0.0, 10.0, 20.0]).unwrap();
        let mut prev = f64::INFINITY;
        for p in &curve.points {
            let sum: f64 = p.weighted.iter().sum();
            assert!((sum - p.total).abs() < 1e-12);
            assert!(p.total <= prev + 1e-9, "not monotone at {}", p.threshold);
            for (c, w) in p.conditional.iter().zip(&p.weighted) {
                assert!((0.0..=1.0 + 1e-9).contains(c));
                assert!(*w <= *c + 1e-12);
            }
            prev = p.total;
        }
    }

    #[test]
    fn vanishing_threshold_gives_full_coverage() {
        let cfg = table_default();
        let p = sinr_coverage(&cfg, Direction::Dl, db_to_linear(-40.0)).unwrap();
        assert!(p.total >= 0.99, "{}", p.total);
    }

    #[test]
    fn interference_limited_sub6_matches_reference_closed_form() {
        // dense single sub-6 tier, alpha = 4: coverage ~ 1/(1 + sqrt(t)*(pi/2 - atan(1/sqrt(t))))
        let cfg = NetworkConfig::new(
            vec![TierConfig::sub6(1e-3, 46.0, 23.0, 4.0, 1e7, -38.5)],
            BlockageConfig::NONE,
            2e-3,
        );
        for (tau_db, want) in [(0.0, 0.560_099_153_512), (10.0, 0.200_049_610_281)] {
            let p = sinr_coverage(&cfg, Direction::Dl, db_to_linear(tau_db)).unwrap();
            assert!(
                (p.total - want).abs() < 2e-3,
                "tau {tau_db} dB: {} vs {want}",
                p.total
            );
        }
    }

    #[test]
    fn splitting_a_thz_tier_in_half_changes_nothing() {
        let mut whole = table_default();
        whole.tiers[0].density = 1e-6; // keep the partition healthy
        let mut split = whole.clone();
        let mut half = split.tiers[2].clone();
        half.density /= 2.0;
        split.tiers[2] = half.clone();
        split.tiers.push(half);
        let tau = db_to_linear(5.0);
        let a = sinr_coverage(&whole, Direction::Dl, tau).unwrap();
        let b = sinr_coverage(&split, Direction::Dl, tau).unwrap();
        assert!(
            (a.total - b.total).abs() < 1e-2,
            "{} vs {}",
            a.total,
            b.total
        );
    }

    #[test]
    fn load_model_values() {
        let cfg = table_default();
        let load = LoadModel::new(&cfg, &[0.0, 0.5, 1.0]);
        assert_eq!(load.z[0], 1.0, "no association mass means unit load");
        // 1 + 1.28 * 2e-3 * 0.5 / 5e-5 = 26.6
        assert!((load.z[1] - 26.6).abs() < 1e-12);
        // half the UE on a 5e-4 tier: 1 + 1.28 * 2 = 3.56
        let mut cfg2 = cfg.clone();
        cfg2.tiers[1].density = 5e-4;
        let load2 = LoadModel::new(&cfg2, &[0.0, 0.5, 1.0]);
        assert!((load2.z[1] - 3.56).abs() < 1e-12);
    }

    #[test]
    fn unreachable_tier_contributes_nothing() {
        let mut cfg = table_default();
        cfg.tiers[1].power_dl = crate::network::dbm_to_watts(-120.0);
        let p = sinr_coverage(&cfg, Direction::Dl, db_to_linear(0.0)).unwrap();
        assert!(p.weighted[1] < 1e-6, "mmWave contribution {}", p.weighted[1]);
        assert!((p.total - p.weighted[0] - p.weighted[2]).abs() < 1e-12);
    }

    #[test]
    fn gigabit_rate_coverage_is_carried_by_thz() {
        let cfg = table_default();
        let p = rate_coverage(&cfg, Direction::Dl, 1e9).unwrap();
        assert!(p.weighted[0] < 1e-3, "sub6 {}", p.weighted[0]);
        assert!(p.weighted[1] < 1e-3, "mmwave {}", p.weighted[1]);
        assert!(p.weighted[2] > 0.2, "thz {}", p.weighted[2]);
        assert!((p.total - p.weighted[2]).abs() < 1e-3);
    }

    #[test]
    fn curve_serialises_to_csv() {
        let curve = CoverageCurve {
            metric: MetricKind::Sinr,
            direction: Direction::Dl,
            points: vec![CoveragePoint {
                threshold: 10.0,
                conditional: vec![0.5, 0.8],
                weighted: vec![0.1, 0.6],
                total: 0.7,
            }],
        };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "direction,threshold,tier,value\ndl,10,1,0.1\ndl,10,2,0.6\ndl,10,total,0.7\n"
        );
    }

    #[test]
    fn rate_coverage_is_monotone_in_threshold() {
        let cfg = table_default();
        let curve = rate_coverage_curve(&cfg, Direction::Ul, &[1e7, 1e8, 1e9, 5e9]).unwrap();
        let mut prev = f64::INFINITY;
        for p in &curve.points {
            assert!(p.total <= prev + 1e-9);
            prev = p.total;
        }
    }
}
