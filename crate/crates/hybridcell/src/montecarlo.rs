//! Monte Carlo ground truth: Poisson network realizations, decoupled (or
//! coupled) biased association, DL/UL SINR measurement, and aggregate
//! coverage / rate / percentile estimates.
//!
//! The engine mirrors the modelling assumptions of the analysis so the two
//! can validate each other: independent Bernoulli LOS flags per link (an
//! explicit rectangle mode exists for model-gap studies), flat-top interferer
//! beam gains (exact Fejér draws optional), band-isolated interference, and
//! uplink interferers placed at the base-station positions of their tiers.

use crate::antenna::{fejer_gain, noise_power, sample_fading, FadingModel, FlatTopPattern};
use crate::error::{Error, Result};
use crate::network::{BandKind, Direction, MmwaveNlos, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Copy of the configuration with NLOS mmWave propagation enabled
/// (path-loss exponent 4, −72 dB intercept, Nakagami shape 2). Only the
/// Monte Carlo engine consumes the toggle.
pub fn nlos_mmwave_toggle(cfg: &NetworkConfig) -> NetworkConfig {
    let mut out = cfg.clone();
    out.mmwave_nlos = Some(MmwaveNlos::default());
    out
}

const LN_1E6: f64 = 13.815_510_557_964_274; // ln(10^6)

/// Sampling radius for one tier: LOS-limited tiers stop where the LOS
/// probability falls below 1e−6; sub-6 tiers use 5/√(πλ_min) to bound the
/// edge bias of the interference sum.
pub fn tier_radius(cfg: &NetworkConfig, k: usize) -> f64 {
    let t = &cfg.tiers[k];
    let blk = cfg.blockage_derived();
    match t.band {
        BandKind::Sub6 => {
            let min_density = cfg
                .band_indices(BandKind::Sub6)
                .map(|j| cfg.tiers[j].density)
                .fold(f64::INFINITY, f64::min);
            5.0 / (PI * min_density).sqrt()
        }
        _ => {
            if blk.zeta > 0.0 {
                (LN_1E6 - blk.p).max(1.0) / blk.zeta
            } else {
                let fallback = 5.0 / (PI * t.density).sqrt();
                if t.band == BandKind::Thz && cfg.absorption > 0.0 {
                    fallback.max(LN_1E6 / cfg.absorption)
                } else {
                    fallback
                }
            }
        }
    }
}

/// Single simulation radius covering every tier.
pub fn sim_radius(cfg: &NetworkConfig) -> f64 {
    (0..cfg.tiers.len())
        .map(|k| tier_radius(cfg, k))
        .fold(0.0, f64::max)
}

/// One sampled base station. Fields that a band does not use stay at their
/// neutral values (gain 1, fading 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsSample {
    pub distance: f64,
    pub angle: f64,
    pub los: bool,
    /// Small-scale fading power gain on the primary path.
    pub fading: f64,
    /// Beam gain toward the typical UE when this BS interferes.
    pub beam_gain: f64,
    /// Fading on the NLOS path (mmWave NLOS toggle only).
    pub nlos_fading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockageMode {
    /// Independent Bernoulli(P_LOS(d)) per link, matching the analysis.
    Bernoulli,
    /// Explicit random rectangles with segment tests; for model-gap studies.
    /// Orientation uniform, side lengths exponential with the configured
    /// means (the blockage model only pins the means; these choices are ours).
    Rectangles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub tiers: Vec<Vec<BsSample>>,
    pub mode: BlockageMode,
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    half_len: f64,
    half_wid: f64,
}

impl Rect {
    /// Does the segment origin → (bx, by) touch this rectangle?
    fn blocks(&self, bx: f64, by: f64) -> bool {
        // rotate both endpoints into the rectangle frame
        let to_local = |x: f64, y: f64| {
            let dx = x - self.cx;
            let dy = y - self.cy;
            (
                self.cos * dx + self.sin * dy,
                -self.sin * dx + self.cos * dy,
            )
        };
        let (x0, y0) = to_local(0.0, 0.0);
        let (x1, y1) = to_local(bx, by);
        segment_hits_box(x0, y0, x1, y1, self.half_len, self.half_wid)
    }
}

fn segment_hits_box(x0: f64, y0: f64, x1: f64, y1: f64, hx: f64, hy: f64) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, d, h) in [(x0, x1 - x0, hx), (y0, y1 - y0, hy)] {
        if d.abs() < 1e-300 {
            if p.abs() > h {
                return false;
            }
        } else {
            let inv = 1.0 / d;
            let mut ta = (-h - p) * inv;
            let mut tb = (h - p) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Draw one network realization with a common radius for every tier;
/// fully determined by `(config, r_sim, seed)`.
pub fn sample_realization(cfg: &NetworkConfig, r_sim: f64, seed: u64) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nlos_rng = ChaCha8Rng::seed_from_u64(seed ^ NLOS_STREAM_SALT);
    let radii = vec![r_sim; cfg.tiers.len()];
    sample_with_rng(
        cfg,
        &radii,
        BlockageMode::Bernoulli,
        false,
        &mut rng,
        &mut nlos_rng,
    )
}

// NLOS-path channel state comes from a forked stream so that enabling the
// toggle leaves the main draw sequence untouched: toggle-on and toggle-off
// runs stay paired trial by trial.
const NLOS_STREAM_SALT: u64 = 0x4e4c_4f53;

fn sample_with_rng(
    cfg: &NetworkConfig,
    radii: &[f64],
    mode: BlockageMode,
    exact_fejer: bool,
    rng: &mut ChaCha8Rng,
    nlos_rng: &mut ChaCha8Rng,
) -> Realization {
    let blk = cfg.blockage_derived();
    let rects = match mode {
        BlockageMode::Bernoulli => Vec::new(),
        BlockageMode::Rectangles => {
            let reach = radii.iter().copied().fold(0.0, f64::max)
                + 3.0 * (cfg.blockage.mean_length + cfg.blockage.mean_width);
            let count = poisson_count(cfg.blockage.density * PI * reach * reach, rng);
            let len = Exp::new(1.0 / cfg.blockage.mean_length).expect("positive mean");
            let wid = Exp::new(1.0 / cfg.blockage.mean_width).expect("positive mean");
            (0..count)
                .map(|_| {
                    let r = reach * rng.gen::<f64>().sqrt();
                    let th = rng.gen::<f64>() * 2.0 * PI;
                    let phi = rng.gen::<f64>() * 2.0 * PI;
                    Rect {
                        cx: r * th.cos(),
                        cy: r * th.sin(),
                        cos: phi.cos(),
                        sin: phi.sin(),
                        half_len: 0.5 * len.sample(rng),
                        half_wid: 0.5 * wid.sample(rng),
                    }
                })
                .collect()
        }
    };

    let nlos_on = cfg.mmwave_nlos.is_some();
    let tiers = cfg
        .tiers
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let radius = radii[k];
            let count = poisson_count(t.density * PI * radius * radius, rng);
            let fading_model = FadingModel::for_tier(t);
            let pattern = FlatTopPattern::for_array(t.antennas);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let distance = radius * rng.gen::<f64>().sqrt();
                let angle = rng.gen::<f64>() * 2.0 * PI;
                let los = if t.band == BandKind::Sub6 {
                    true
                } else {
                    match mode {
                        BlockageMode::Bernoulli => {
                            rng.gen::<f64>() < (-(blk.zeta * distance + blk.p)).exp()
                        }
                        BlockageMode::Rectangles => {
                            let (bx, by) = (distance * angle.cos(), distance * angle.sin());
                            !rects.iter().any(|rect| rect.blocks(bx, by))
                        }
                    }
                };
                // draw channel state only for links that can matter
                let (fading, beam_gain, nlos_fading) = if los || t.band == BandKind::Sub6 {
                    let fading = sample_fading(fading_model, rng);
                    let beam_gain = if t.band == BandKind::Sub6 {
                        1.0
                    } else if exact_fejer {
                        fejer_gain(t.antennas, rng.gen::<f64>() - 0.5)
                    } else {
                        pattern.sample(rng)
                    };
                    (fading, beam_gain, 1.0)
                } else if t.band == BandKind::MmWave && nlos_on {
                    // blocked mmWave link usable over its NLOS path
                    let shape = cfg.mmwave_nlos.expect("toggle on").nakagami_shape;
                    let nlos_fading = sample_fading(FadingModel::Nakagami(shape), nlos_rng);
                    let beam_gain = if exact_fejer {
                        fejer_gain(t.antennas, nlos_rng.gen::<f64>() - 0.5)
                    } else {
                        pattern.sample(nlos_rng)
                    };
                    (1.0, beam_gain, nlos_fading)
                } else {
                    (1.0, 1.0, 1.0)
                };
                out.push(BsSample {
                    distance,
                    angle,
                    los,
                    fading,
                    beam_gain,
                    nlos_fading,
                });
            }
            out
        })
        .collect();

    Realization { tiers, mode }
}

/// The serving pick of one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    /// 0-based tier index.
    pub tier: usize,
    /// Index of the serving BS inside its tier.
    pub bs: usize,
    pub distance: f64,
    /// Serving over the NLOS mmWave path (toggle only).
    pub nlos_path: bool,
}

/// Strongest average biased received power rule, evaluated fading-free per
/// tier on the nearest eligible BS, ties resolved toward the lowest tier
/// index and then the nearest BS.
pub fn associate(real: &Realization, cfg: &NetworkConfig, q: Direction) -> Result<Association> {
    let mut best: Option<(f64, Association)> = None;
    for (k, t) in cfg.tiers.iter().enumerate() {
        let samples = &real.tiers[k];
        let mut consider = |power: f64, cand: Association| {
            if best.as_ref().is_none_or(|(bp, _)| power > *bp) {
                best = Some((power, cand));
            }
        };
        let amp = t.power(q) * t.bias(q) * t.antennas as f64 * t.intercept();
        match t.band {
            BandKind::Sub6 => {
                if let Some((i, bs)) = nearest(samples, |_| true) {
                    let power = amp * bs.distance.powf(-t.path_loss_exp);
                    consider(
                        power,
                        Association {
                            tier: k,
                            bs: i,
                            distance: bs.distance,
                            nlos_path: false,
                        },
                    );
                }
            }
            BandKind::MmWave => {
                if let Some((i, bs)) = nearest(samples, |b| b.los) {
                    let power = amp * bs.distance.powf(-t.path_loss_exp);
                    consider(
                        power,
                        Association {
                            tier: k,
                            bs: i,
                            distance: bs.distance,
                            nlos_path: false,
                        },
                    );
                }
                if let Some(nlos) = cfg.mmwave_nlos {
                    if let Some((i, bs)) = nearest(samples, |b| !b.los) {
                        let power = t.power(q)
                            * t.bias(q)
                            * t.antennas as f64
                            * nlos.intercept
                            * bs.distance.powf(-nlos.path_loss_exp);
                        consider(
                            power,
                            Association {
                                tier: k,
                                bs: i,
                                distance: bs.distance,
                                nlos_path: true,
                            },
                        );
                    }
                }
            }
            BandKind::Thz => {
                if let Some((i, bs)) = nearest(samples, |b| b.los) {
                    let power = amp
                        * bs.distance.powf(-t.path_loss_exp)
                        * (-cfg.absorption * bs.distance).exp();
                    consider(
                        power,
                        Association {
                            tier: k,
                            bs: i,
                            distance: bs.distance,
                            nlos_path: false,
                        },
                    );
                }
            }
        }
    }
    best.map(|(_, a)| a).ok_or(Error::NoCandidate)
}

fn nearest(
    samples: &[BsSample],
    eligible: impl Fn(&BsSample) -> bool,
) -> Option<(usize, &BsSample)> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, b)| eligible(b))
        .min_by(|(_, a), (_, b)| a.distance.total_cmp(&b.distance))
}

/// Measured SINR (linear) for a given serving pick. Interference is
/// band-isolated; the uplink reuses the base-station geometry at uplink
/// powers per the interfering-UE position approximation.
pub fn measure_sinr(
    real: &Realization,
    cfg: &NetworkConfig,
    q: Direction,
    assoc: &Association,
) -> f64 {
    let serving_tier = &cfg.tiers[assoc.tier];
    let x = assoc.distance;
    match serving_tier.band {
        BandKind::Sub6 => {
            let bs = &real.tiers[assoc.tier][assoc.bs];
            let signal = serving_tier.power(q)
                * serving_tier.ref_intercept
                * bs.fading
                * x.powf(-serving_tier.path_loss_exp);
            let mut interference = 0.0;
            for j in cfg.band_indices(BandKind::Sub6) {
                let t = &cfg.tiers[j];
                let coef = t.power(q) * t.ref_intercept;
                for (i, b) in real.tiers[j].iter().enumerate() {
                    if j == assoc.tier && i == assoc.bs {
                        continue;
                    }
                    interference += coef * b.fading * b.distance.powf(-t.path_loss_exp);
                }
            }
            signal / (interference + noise_power(serving_tier))
        }
        BandKind::MmWave => {
            let bs = &real.tiers[assoc.tier][assoc.bs];
            let n = serving_tier.antennas as f64;
            let signal = if assoc.nlos_path {
                let nlos = cfg.mmwave_nlos.expect("NLOS serving path requires toggle");
                serving_tier.power(q)
                    * n
                    * nlos.intercept
                    * bs.nlos_fading
                    * x.powf(-nlos.path_loss_exp)
            } else {
                serving_tier.power(q)
                    * n
                    * serving_tier.intercept()
                    * bs.fading
                    * x.powf(-serving_tier.path_loss_exp)
            };
            let mut interference = 0.0;
            for j in cfg.band_indices(BandKind::MmWave) {
                let t = &cfg.tiers[j];
                let los_coef = t.power(q) * t.intercept();
                for (i, b) in real.tiers[j].iter().enumerate() {
                    if j == assoc.tier && i == assoc.bs {
                        continue;
                    }
                    if b.los {
                        interference +=
                            los_coef * b.beam_gain * b.fading * b.distance.powf(-t.path_loss_exp);
                    } else if let Some(nlos) = cfg.mmwave_nlos {
                        interference += t.power(q)
                            * nlos.intercept
                            * b.beam_gain
                            * b.nlos_fading
                            * b.distance.powf(-nlos.path_loss_exp);
                    }
                }
            }
            signal / (interference + noise_power(serving_tier))
        }
        BandKind::Thz => {
            let full = serving_tier.power(q)
                * serving_tier.antennas as f64
                * serving_tier.intercept()
                * x.powf(-serving_tier.path_loss_exp);
            let signal = full * (-cfg.absorption * x).exp();
            // every interferer contributes its full power: the absorbed part
            // re-enters as molecular absorption noise
            let mut interference_plus_absorption = 0.0;
            for j in cfg.band_indices(BandKind::Thz) {
                let t = &cfg.tiers[j];
                let coef = t.power(q) * t.intercept();
                for (i, b) in real.tiers[j].iter().enumerate() {
                    if (j == assoc.tier && i == assoc.bs) || !b.los {
                        continue;
                    }
                    interference_plus_absorption +=
                        coef * b.beam_gain * b.distance.powf(-t.path_loss_exp);
                }
            }
            let self_absorption = full * (-(-cfg.absorption * x).exp_m1());
            signal / (interference_plus_absorption + self_absorption + noise_power(serving_tier))
        }
    }
}

/// What to estimate and how many trials to spend.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub n_trials: usize,
    pub seed: u64,
    /// Copy the DL association decision onto the UL (coupled strategy).
    pub coupled_ul: bool,
    /// Draw interfering beam gains from the exact Fejér pattern instead of
    /// the flat-top two-point law.
    pub exact_fejer_interference: bool,
    /// Geometric rectangle blockages instead of Bernoulli LOS flags.
    pub rectangle_blockage: bool,
    pub sinr_thresholds_db: Vec<f64>,
    pub rate_thresholds_bps: Vec<f64>,
    /// Percentile level for the cell-edge SINR/rate metrics.
    pub percentile: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            n_trials: 50_000,
            seed: 42,
            coupled_ul: false,
            exact_fejer_interference: false,
            rectangle_blockage: false,
            sinr_thresholds_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            rate_thresholds_bps: vec![1e9],
            percentile: 0.05,
        }
    }
}

/// A point estimate with its trial count and 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub value: f64,
    pub n: usize,
    pub ci_halfwidth: f64,
}

impl SimEstimate {
    fn proportion(count: usize, n: usize) -> Self {
        let p = if n > 0 { count as f64 / n as f64 } else { 0.0 };
        SimEstimate {
            value: p,
            n,
            ci_halfwidth: if n > 0 {
                1.96 * (p * (1.0 - p) / n as f64).sqrt()
            } else {
                0.0
            },
        }
    }
}

/// Per-direction serving outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServingSample {
    /// 0-based tier index.
    pub tier: usize,
    pub distance: f64,
    /// Linear SINR.
    pub sinr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialOutcome {
    pub dl: Option<ServingSample>,
    pub ul: Option<ServingSample>,
}

impl TrialOutcome {
    pub fn get(&self, q: Direction) -> Option<ServingSample> {
        match q {
            Direction::Dl => self.dl,
            Direction::Ul => self.ul,
        }
    }
}

/// Coverage estimates at one threshold: total plus per-tier contributions
/// (fraction of trials served by the tier AND covered, so tiers sum to the
/// total).
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEstimate {
    pub threshold: f64,
    pub total: SimEstimate,
    pub weighted: Vec<SimEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n_trials: usize,
    pub discarded: usize,
    /// Per direction, per tier.
    pub association: [Vec<SimEstimate>; 2],
    /// Mean per-BS load Z implied by the measured association frequencies.
    pub load: [Vec<f64>; 2],
    /// SINR coverage per direction per threshold (thresholds in dB).
    pub sinr: [Vec<CoverageEstimate>; 2],
    /// Rate coverage per direction per threshold (thresholds in bit/s).
    pub rate: [Vec<CoverageEstimate>; 2],
    /// Cell-edge SINR in dB at the configured percentile.
    pub percentile_sinr_db: [SimEstimate; 2],
    /// Cell-edge rate in bit/s at the configured percentile.
    pub percentile_rate: [SimEstimate; 2],
    pub percentile: f64,
    /// Raw per-trial outcomes, in trial order.
    pub trials: Vec<TrialOutcome>,
}

impl SimReport {
    pub fn association_of(&self, q: Direction, tier: usize) -> &SimEstimate {
        &self.association[q.index()][tier]
    }

    pub fn sinr_total(&self, q: Direction, threshold_db: f64) -> Option<&SimEstimate> {
        self.sinr[q.index()]
            .iter()
            .find(|c| c.threshold == threshold_db)
            .map(|c| &c.total)
    }

    /// Stream raw per-trial records: trial, direction, tier (1-based),
    /// serving distance, SINR in dB.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "trial,direction,tier,serving_distance,sinr_db")?;
        for (i, t) in self.trials.iter().enumerate() {
            for q in Direction::BOTH {
                if let Some(s) = t.get(q) {
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        i,
                        q,
                        s.tier + 1,
                        s.distance,
                        10.0 * s.sinr.log10()
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for one trial; splittable so trials are independent of worker
/// scheduling.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut s = seed;
    let a = splitmix64(&mut s);
    let mut t = a ^ trial;
    splitmix64(&mut t)
}

/// Run `opts.n_trials` independent realizations and aggregate every
/// requested metric. Deterministic in `(config, options)` regardless of the
/// rayon worker count.
pub fn estimate(cfg: &NetworkConfig, opts: &SimOptions) -> SimReport {
    assert!(opts.n_trials >= 1, "need at least one trial");
    let radii: Vec<f64> = (0..cfg.tiers.len()).map(|k| tier_radius(cfg, k)).collect();
    let mode = if opts.rectangle_blockage {
        BlockageMode::Rectangles
    } else {
        BlockageMode::Bernoulli
    };

    let trials: Vec<TrialOutcome> = (0..opts.n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(opts.seed, i));
            let mut nlos_rng =
                ChaCha8Rng::seed_from_u64(trial_seed(opts.seed ^ NLOS_STREAM_SALT, i));
            let real = sample_with_rng(
                cfg,
                &radii,
                mode,
                opts.exact_fejer_interference,
                &mut rng,
                &mut nlos_rng,
            );
            let dl = associate(&real, cfg, Direction::Dl).ok();
            let ul = match dl {
                Some(dl_assoc) if opts.coupled_ul => Some(dl_assoc),
                Some(_) => associate(&real, cfg, Direction::Ul).ok(),
                None => None,
            };
            TrialOutcome {
                dl: dl.map(|a| ServingSample {
                    tier: a.tier,
                    distance: a.distance,
                    sinr: measure_sinr(&real, cfg, Direction::Dl, &a),
                }),
                ul: ul.map(|a| ServingSample {
                    tier: a.tier,
                    distance: a.distance,
                    sinr: measure_sinr(&real, cfg, Direction::Ul, &a),
                }),
            }
        })
        .collect();

    let n_tiers = cfg.tiers.len();
    let discarded = trials.iter().filter(|t| t.dl.is_none()).count();
    let n_eff = opts.n_trials - discarded;

    let mut association = [vec![0usize; n_tiers], vec![0usize; n_tiers]];
    for t in &trials {
        for q in Direction::BOTH {
            if let Some(s) = t.get(q) {
                association[q.index()][s.tier] += 1;
            }
        }
    }
    let assoc_est: [Vec<SimEstimate>; 2] = [
        association[0]
            .iter()
            .map(|&c| SimEstimate::proportion(c, n_eff))
            .collect(),
        association[1]
            .iter()
            .map(|&c| SimEstimate::proportion(c, n_eff))
            .collect(),
    ];

    let load: [Vec<f64>; 2] = [0, 1].map(|qi| {
        cfg.tiers
            .iter()
            .enumerate()
            .map(|(k, t)| 1.0 + 1.28 * cfg.ue_density * assoc_est[qi][k].value / t.density)
            .collect()
    });

    let sinr = [Direction::Dl, Direction::Ul].map(|q| {
        opts.sinr_thresholds_db
            .iter()
            .map(|&db| {
                let tau = crate::network::db_to_linear(db);
                let mut per_tier = vec![0usize; n_tiers];
                for t in &trials {
                    if let Some(s) = t.get(q) {
                        if s.sinr > tau {
                            per_tier[s.tier] += 1;
                        }
                    }
                }
                CoverageEstimate {
                    threshold: db,
                    total: SimEstimate::proportion(per_tier.iter().sum(), n_eff),
                    weighted: per_tier
                        .iter()
                        .map(|&c| SimEstimate::proportion(c, n_eff))
                        .collect(),
                }
            })
            .collect::<Vec<_>>()
    });

    let rate_of = |q: Direction, s: &ServingSample| -> f64 {
        let z = load[q.index()][s.tier];
        cfg.tiers[s.tier].bandwidth / z * (1.0 + s.sinr).log2()
    };

    let rate = [Direction::Dl, Direction::Ul].map(|q| {
        opts.rate_thresholds_bps
            .iter()
            .map(|&rho| {
                let mut per_tier = vec![0usize; n_tiers];
                for t in &trials {
                    if let Some(s) = t.get(q) {
                        if rate_of(q, &s) > rho {
                            per_tier[s.tier] += 1;
                        }
                    }
                }
                CoverageEstimate {
                    threshold: rho,
                    total: SimEstimate::proportion(per_tier.iter().sum(), n_eff),
                    weighted: per_tier
                        .iter()
                        .map(|&c| SimEstimate::proportion(c, n_eff))
                        .collect(),
                }
            })
            .collect::<Vec<_>>()
    });

    let percentile_sinr_db = [Direction::Dl, Direction::Ul].map(|q| {
        let mut values: Vec<f64> = trials
            .iter()
            .filter_map(|t| t.get(q))
            .map(|s| 10.0 * s.sinr.log10())
            .collect();
        percentile_estimate(&mut values, opts.percentile)
    });

    let percentile_rate = [Direction::Dl, Direction::Ul].map(|q| {
        let mut values: Vec<f64> = trials
            .iter()
            .filter_map(|t| t.get(q))
            .map(|s| rate_of(q, &s))
            .collect();
        percentile_estimate(&mut values, opts.percentile)
    });

    SimReport {
        n_trials: opts.n_trials,
        discarded,
        association: assoc_est,
        load,
        sinr,
        rate,
        percentile_sinr_db,
        percentile_rate,
        percentile: opts.percentile,
        trials,
    }
}

/// Empirical percentile with an order-statistic confidence interval.
fn percentile_estimate(values: &mut [f64], p: f64) -> SimEstimate {
    let n = values.len();
    if n == 0 {
        return SimEstimate {
            value: f64::NAN,
            n: 0,
            ci_halfwidth: f64::NAN,
        };
    }
    values.sort_by(f64::total_cmp);
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
    let spread = 1.96 * (n as f64 * p * (1.0 - p)).sqrt();
    let lo = ((p * n as f64 - spread).floor().max(0.0)) as usize;
    let hi = (((p * n as f64 + spread).ceil()) as usize).min(n - 1);
    SimEstimate {
        value: values[rank],
        n,
        ci_halfwidth: 0.5 * (values[hi] - values[lo]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{BlockageConfig, NetworkConfig, TierConfig};

    fn table_default() -> NetworkConfig {
        NetworkConfig::three_tier_default()
    }

    #[test]
    fn empty_tier_draws_no_bs() {
        let mut cfg = table_default();
        cfg.tiers[1].density = 1e-300;
        let real = sample_realization(&cfg, 500.0, 7);
        assert!(real.tiers[1].is_empty());
    }

    #[test]
    fn same_seed_reproduces_realization() {
        let cfg = table_default();
        let a = sample_realization(&cfg, 400.0, 123);
        let b = sample_realization(&cfg, 400.0, 123);
        assert_eq!(a, b);
    }

    #[test]
    fn poisson_mean_bs_count() {
        let cfg = NetworkConfig::new(
            vec![TierConfig::thz(5e-4, 100, 23.0, 23.0, 2.0, 1e10, 340e9)],
            BlockageConfig::NONE,
            2e-3,
        );
        let mut total = 0usize;
        let n = 10_000u64;
        for i in 0..n {
            total += sample_realization(&cfg, 500.0, i).tiers[0].len();
        }
        let mean = total as f64 / n as f64;
        let want = 5e-4 * PI * 500.0 * 500.0;
        assert!((mean - want).abs() < 0.02 * want, "mean {mean} vs {want}");
    }

    #[test]
    fn poisson_counts_pass_chi_square() {
        // counts against the Poisson pmf at 1% significance
        let cfg = NetworkConfig::new(
            vec![TierConfig::thz(1e-5, 100, 23.0, 23.0, 2.0, 1e10, 340e9)],
            BlockageConfig::NONE,
            2e-3,
        );
        let radius = 500.0;
        let mean = 1e-5 * PI * radius * radius; // ~7.85
        let n = 10_000usize;
        let mut counts = vec![0usize; 64];
        for i in 0..n as u64 {
            let c = sample_realization(&cfg, radius, i).tiers[0].len();
            counts[c.min(63)] += 1;
        }
        // merge bins with expected < 5
        let pmf = |k: usize| -> f64 {
            let mut log_p = -mean + k as f64 * mean.ln();
            for j in 2..=k {
                log_p -= (j as f64).ln();
            }
            log_p.exp()
        };
        let mut chi2 = 0.0;
        let mut df: i64 = -1;
        let mut acc_obs = 0.0;
        let mut acc_exp = 0.0;
        for (k, &observed) in counts.iter().enumerate() {
            let e = if k < 63 {
                n as f64 * pmf(k)
            } else {
                n as f64 * (1.0 - (0..63).map(pmf).sum::<f64>())
            };
            acc_obs += observed as f64;
            acc_exp += e;
            if acc_exp >= 5.0 {
                chi2 += (acc_obs - acc_exp).powi(2) / acc_exp;
                df += 1;
                acc_obs = 0.0;
                acc_exp = 0.0;
            }
        }
        if acc_exp > 0.0 {
            chi2 += (acc_obs - acc_exp).powi(2) / acc_exp;
            df += 1;
        }
        // 99th percentile of chi-square for df 1..=30
        let crit = [
            6.63, 9.21, 11.34, 13.28, 15.09, 16.81, 18.48, 20.09, 21.67, 23.21, 24.72, 26.22,
            27.69, 29.14, 30.58, 32.00, 33.41, 34.81, 36.19, 37.57, 38.93, 40.29, 41.64, 42.98,
            44.31, 45.64, 46.96, 48.28, 49.59, 50.89,
        ];
        let df = df.clamp(1, 30) as usize;
        assert!(
            chi2 < crit[df - 1],
            "chi2 {chi2} exceeds the 1% critical value {} at df {df}",
            crit[df - 1]
        );
    }

    #[test]
    fn association_prefers_nearer_of_identical_bs() {
        let cfg = NetworkConfig::new(
            vec![TierConfig::sub6(1e-4, 46.0, 23.0, 4.0, 1e7, -38.5)],
            BlockageConfig::NONE,
            2e-3,
        );
        let mk = |d: f64| BsSample {
            distance: d,
            angle: 0.0,
            los: true,
            fading: 1.0,
            beam_gain: 1.0,
            nlos_fading: 1.0,
        };
        let real = Realization {
            tiers: vec![vec![mk(20.0), mk(10.0)]],
            mode: BlockageMode::Bernoulli,
        };
        let a = associate(&real, &cfg, Direction::Dl).unwrap();
        assert_eq!((a.tier, a.bs), (0, 1));
        assert_eq!(a.distance, 10.0);
    }

    #[test]
    fn decoupled_directions_can_pick_different_tiers() {
        // DL favours the high-power mmWave BS, UL (equal powers) the closer
        // THz BS: a hand-built geometry of the split decision
        let cfg = table_default();
        let mk = |d: f64| BsSample {
            distance: d,
            angle: 0.0,
            los: true,
            fading: 1.0,
            beam_gain: 1.0,
            nlos_fading: 1.0,
        };
        let real = Realization {
            tiers: vec![vec![mk(800.0)], vec![mk(150.0)], vec![mk(10.0)]],
            mode: BlockageMode::Bernoulli,
        };
        let dl = associate(&real, &cfg, Direction::Dl).unwrap();
        let ul = associate(&real, &cfg, Direction::Ul).unwrap();
        assert_eq!(dl.tier, 1, "DL should pick the mmWave tier");
        assert_eq!(ul.tier, 2, "UL should pick the THz tier");
        // direct evaluation of the biased average received powers
        for (q, want) in [(Direction::Dl, 1usize), (Direction::Ul, 2usize)] {
            let mut powers = vec![];
            for (k, t) in cfg.tiers.iter().enumerate() {
                let d = real.tiers[k][0].distance;
                let mut p = t.power(q)
                    * t.bias(q)
                    * t.antennas as f64
                    * t.intercept()
                    * d.powf(-t.path_loss_exp);
                if t.band == BandKind::Thz {
                    p *= (-cfg.absorption * d).exp();
                }
                powers.push(p);
            }
            let argmax = powers
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, want);
        }
    }

    #[test]
    fn no_candidate_without_any_eligible_bs() {
        let cfg = NetworkConfig::new(
            vec![TierConfig::thz(5e-4, 100, 23.0, 23.0, 2.0, 1e10, 340e9)],
            BlockageConfig::NONE,
            2e-3,
        );
        let real = Realization {
            tiers: vec![vec![BsSample {
                distance: 30.0,
                angle: 0.0,
                los: false,
                fading: 1.0,
                beam_gain: 1.0,
                nlos_fading: 1.0,
            }]],
            mode: BlockageMode::Bernoulli,
        };
        assert_eq!(
            associate(&real, &cfg, Direction::Dl).unwrap_err(),
            Error::NoCandidate
        );
    }

    #[test]
    fn measured_sinr_matches_hand_computation() {
        // single mmWave BS, no interferers: SINR = P N kappa h x^-a / noise
        let mut cfg = table_default();
        cfg.tiers[0].density = 1e-300;
        cfg.tiers[2].density = 1e-300;
        let t = cfg.tiers[1].clone();
        let bs = BsSample {
            distance: 25.0,
            angle: 0.3,
            los: true,
            fading: 0.7,
            beam_gain: t.antennas as f64,
            nlos_fading: 1.0,
        };
        let real = Realization {
            tiers: vec![vec![], vec![bs], vec![]],
            mode: BlockageMode::Bernoulli,
        };
        let a = associate(&real, &cfg, Direction::Dl).unwrap();
        let got = measure_sinr(&real, &cfg, Direction::Dl, &a);
        let want = t.power_dl * 64.0 * t.intercept() * 0.7 * 25f64.powf(-2.0) / noise_power(&t);
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn thz_sinr_with_absorption_only() {
        // lone THz link: SINR = J e^{-Ka x} / (J (1 - e^{-Ka x}) + noise)
        let mut cfg = table_default();
        cfg.tiers[0].density = 1e-300;
        cfg.tiers[1].density = 1e-300;
        let t = cfg.tiers[2].clone();
        let x = 18.0;
        let bs = BsSample {
            distance: x,
            angle: 0.0,
            los: true,
            fading: 1.0,
            beam_gain: 100.0,
            nlos_fading: 1.0,
        };
        let real = Realization {
            tiers: vec![vec![], vec![], vec![bs]],
            mode: BlockageMode::Bernoulli,
        };
        let a = associate(&real, &cfg, Direction::Ul).unwrap();
        let got = measure_sinr(&real, &cfg, Direction::Ul, &a);
        let j = t.power_ul * 100.0 * t.intercept() * x.powf(-2.0);
        let want = j * (-cfg.absorption * x).exp()
            / (j * (1.0 - (-cfg.absorption * x).exp()) + noise_power(&t));
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn estimate_is_deterministic_across_worker_counts() {
        let cfg = table_default();
        let opts = SimOptions {
            n_trials: 200,
            seed: 9,
            sinr_thresholds_db: vec![0.0, 10.0],
            ..SimOptions::default()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate(&cfg, &opts));
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| estimate(&cfg, &opts));
        assert_eq!(single, multi);
    }

    #[test]
    fn single_trial_is_deterministic() {
        let cfg = table_default();
        let opts = SimOptions {
            n_trials: 1,
            seed: 5,
            ..SimOptions::default()
        };
        let a = estimate(&cfg, &opts);
        let b = estimate(&cfg, &opts);
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 1);
    }

    #[test]
    fn association_frequencies_partition_unity() {
        let cfg = table_default();
        let opts = SimOptions {
            n_trials: 500,
            seed: 3,
            sinr_thresholds_db: vec![10.0],
            ..SimOptions::default()
        };
        let rep = estimate(&cfg, &opts);
        assert_eq!(rep.discarded, 0, "a sub-6 tier guarantees a candidate");
        for q in Direction::BOTH {
            let sum: f64 = rep.association[q.index()].iter().map(|e| e.value).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coupled_mode_keeps_dl_and_copies_decision() {
        let cfg = table_default();
        let base = SimOptions {
            n_trials: 300,
            seed: 11,
            sinr_thresholds_db: vec![5.0],
            ..SimOptions::default()
        };
        let coupled = SimOptions {
            coupled_ul: true,
            ..base.clone()
        };
        let a = estimate(&cfg, &base);
        let b = estimate(&cfg, &coupled);
        for (x, y) in a.trials.iter().zip(&b.trials) {
            assert_eq!(x.dl, y.dl, "DL metrics must not depend on coupling");
            if let (Some(du), Some(bu)) = (y.dl, y.ul) {
                assert_eq!(du.tier, bu.tier, "coupled UL must reuse the DL pick");
                assert_eq!(du.distance, bu.distance);
            }
        }
    }

    #[test]
    fn nlos_toggle_off_is_bitwise_identical() {
        let cfg = table_default();
        let opts = SimOptions {
            n_trials: 100,
            seed: 21,
            ..SimOptions::default()
        };
        let a = estimate(&cfg, &opts);
        let b = estimate(&cfg, &opts);
        assert_eq!(a, b);
    }

    #[test]
    fn nlos_paths_never_beat_los_at_equal_distance() {
        let nlos = MmwaveNlos::default();
        let cfg = table_default();
        let t = &cfg.tiers[1];
        for d in [1.0f64, 10.0, 100.0] {
            let los = t.intercept() * d.powf(-t.path_loss_exp);
            let n = nlos.intercept * d.powf(-nlos.path_loss_exp);
            assert!(n < los, "NLOS must lose at d={d}");
        }
    }

    #[test]
    fn rectangle_mode_runs_and_respects_determinism() {
        let mut cfg = table_default();
        // thin the scene so the rectangle tests stay fast
        cfg.tiers[2].density = 5e-5;
        cfg.blockage.density = 1e-4;
        let opts = SimOptions {
            n_trials: 20,
            seed: 2,
            rectangle_blockage: true,
            sinr_thresholds_db: vec![0.0],
            ..SimOptions::default()
        };
        let a = estimate(&cfg, &opts);
        let b = estimate(&cfg, &opts);
        assert_eq!(a, b);
    }

    #[test]
    fn trial_records_stream_as_csv() {
        let cfg = table_default();
        let opts = SimOptions {
            n_trials: 5,
            seed: 1,
            ..SimOptions::default()
        };
        let rep = estimate(&cfg, &opts);
        let mut buf = Vec::new();
        rep.write_trials_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "trial,direction,tier,serving_distance,sinr_db"
        );
        // two directions per kept trial
        assert_eq!(lines.count(), 10);
    }

    #[test]
    fn segment_box_intersection_cases() {
        // crossing, touching endpoint inside, and clean miss
        assert!(segment_hits_box(-2.0, 0.0, 2.0, 0.0, 1.0, 1.0));
        assert!(segment_hits_box(0.5, 0.5, 5.0, 5.0, 1.0, 1.0));
        assert!(!segment_hits_box(-2.0, 2.0, 2.0, 2.0, 1.0, 1.0));
        assert!(!segment_hits_box(3.0, -5.0, 3.0, 5.0, 1.0, 1.0));
    }
}
