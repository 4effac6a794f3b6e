//! Sweep specifications (TOML) and the experiment runner.
//!
//! A sweep names a figure family, a swept parameter addressed by a dotted
//! path (for example `tier.3.bias_ul` or `global.absorption`), a grid, the
//! engines to run, and the directions of interest. Each grid point writes
//! one CSV row per (point, direction, tier-or-total, metric, engine); when
//! both engines run, a summary file records the worst cross-engine gap per
//! metric and direction.

use crate::output::{write_header, Row};
use anyhow::{bail, ensure, Context, Result};
use hybridcell::coverage::{rate_coverage_curve, sinr_coverage_curve, CoverageCurve};
use hybridcell::montecarlo::{estimate, SimOptions, SimReport};
use hybridcell::network::{BandKind, Direction, NetworkConfig};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepId {
    AssocVsDensity,
    AssocVsBias,
    CovVsThreshold,
    CovVsDensity,
    CovVsKa,
    CovVsAntennas,
    RateVsThreshold,
    CovVsBias,
    PercentileVsBias,
}

impl SweepId {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepId::AssocVsDensity => "assoc-vs-density",
            SweepId::AssocVsBias => "assoc-vs-bias",
            SweepId::CovVsThreshold => "cov-vs-threshold",
            SweepId::CovVsDensity => "cov-vs-density",
            SweepId::CovVsKa => "cov-vs-ka",
            SweepId::CovVsAntennas => "cov-vs-antennas",
            SweepId::RateVsThreshold => "rate-vs-threshold",
            SweepId::CovVsBias => "cov-vs-bias",
            SweepId::PercentileVsBias => "percentile-vs-bias",
        }
    }

    fn default_param(self) -> Option<&'static str> {
        match self {
            SweepId::CovVsThreshold => Some("global.tau"),
            SweepId::RateVsThreshold => Some("global.rho"),
            SweepId::CovVsKa => Some("global.absorption"),
            // density/bias/antenna sweeps must name their tier explicitly;
            // percentile-vs-bias addresses every THz tier by construction
            SweepId::PercentileVsBias => Some("thz-bias"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engines {
    Analytical,
    Mc,
    Both,
}

impl Engines {
    fn analytical(self) -> bool {
        !matches!(self, Engines::Mc)
    }
    fn mc(self) -> bool {
        !matches!(self, Engines::Analytical)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    id: SweepId,
    param: Option<String>,
    grid: Vec<f64>,
    engines: Option<Engines>,
    directions: Option<Vec<String>>,
    #[serde(default)]
    coupled: bool,
    seed: Option<u64>,
    trials: Option<usize>,
    output: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub id: SweepId,
    pub param: String,
    pub grid: Vec<f64>,
    pub engines: Engines,
    pub directions: Vec<Direction>,
    pub coupled: bool,
    pub seed: u64,
    pub trials: usize,
    pub output: PathBuf,
}

pub fn load(path: &Path, base: &NetworkConfig) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read sweep {}", path.display()))?;
    let file: SweepFile =
        toml::from_str(&text).with_context(|| format!("cannot parse sweep {}", path.display()))?;

    ensure!(!file.grid.is_empty(), "sweep grid must not be empty");
    ensure!(
        file.grid.windows(2).all(|w| w[0] < w[1]),
        "sweep grid must be strictly increasing"
    );
    let param = match file.param {
        Some(p) => p,
        None => file
            .id
            .default_param()
            .with_context(|| {
                format!(
                    "sweep id {} needs an explicit `param` (for example tier.3.density)",
                    file.id.as_str()
                )
            })?
            .to_string(),
    };
    let mut engines = file.engines.unwrap_or(Engines::Both);
    if file.id == SweepId::PercentileVsBias {
        // percentile metrics are simulation-only
        engines = Engines::Mc;
    }
    let directions = match file.directions {
        None => vec![Direction::Dl, Direction::Ul],
        Some(names) => {
            let mut out = Vec::new();
            for n in names {
                out.push(match n.as_str() {
                    "dl" => Direction::Dl,
                    "ul" => Direction::Ul,
                    other => bail!("unknown direction {other:?} (dl|ul)"),
                });
            }
            ensure!(!out.is_empty(), "directions must not be empty");
            out
        }
    };
    let spec = SweepSpec {
        id: file.id,
        param,
        grid: file.grid,
        engines,
        directions,
        coupled: file.coupled,
        seed: file.seed.unwrap_or(42),
        trials: file.trials.unwrap_or(50_000),
        output: PathBuf::from(
            file.output
                .unwrap_or_else(|| format!("{}.csv", file.id.as_str())),
        ),
    };
    // fail early if the parameter path cannot be applied
    if spec.param != "thz-bias" {
        let mut probe = base.clone();
        apply_override(&mut probe, &spec.param, spec.grid[0])?;
    }
    Ok(spec)
}

/// Override one scalar in the configuration through its dotted path.
/// Tier indices are 1-based; powers are in dBm, biases and intercepts in dB.
pub fn apply_override(cfg: &mut NetworkConfig, path: &str, value: f64) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    match parts.as_slice() {
        ["global", field] => match *field {
            "ue_density" => cfg.ue_density = value,
            "absorption" | "ka" => cfg.absorption = value,
            "gamma_thz" => cfg.gamma_thz = value as u32,
            "tau" => cfg.tau_db = value,
            "rho" => cfg.rho_bps = value,
            other => bail!("unknown global field {other:?}"),
        },
        ["tier", index, field] => {
            let i: usize = index
                .parse()
                .with_context(|| format!("bad tier index {index:?}"))?;
            ensure!(
                (1..=cfg.tiers.len()).contains(&i),
                "tier index {i} out of range 1..={}",
                cfg.tiers.len()
            );
            let tier = &mut cfg.tiers[i - 1];
            match *field {
                "density" => tier.density = value,
                "antennas" => tier.antennas = value.round() as u32,
                "power_dl" => tier.power_dl = hybridcell::network::dbm_to_watts(value),
                "power_ul" => tier.power_ul = hybridcell::network::dbm_to_watts(value),
                "bias_dl" => tier.bias_dl = hybridcell::network::db_to_linear(value),
                "bias_ul" => tier.bias_ul = hybridcell::network::db_to_linear(value),
                "bias" => {
                    tier.bias_dl = hybridcell::network::db_to_linear(value);
                    tier.bias_ul = hybridcell::network::db_to_linear(value);
                }
                "path_loss_exp" => tier.path_loss_exp = value,
                "bandwidth" => tier.bandwidth = value,
                "nakagami_shape" => tier.nakagami_shape = value.round() as u32,
                "carrier" => tier.carrier = value,
                "noise_figure" => tier.noise_figure_db = value,
                "ref_intercept" => tier.ref_intercept = hybridcell::network::db_to_linear(value),
                other => bail!("unknown tier field {other:?}"),
            }
        }
        _ => bail!("cannot parse parameter path {path:?} (tier.<i>.<field> or global.<field>)"),
    }
    Ok(())
}

fn mc_options(spec: &SweepSpec, cfg: &NetworkConfig) -> SimOptions {
    SimOptions {
        n_trials: spec.trials,
        seed: spec.seed,
        coupled_ul: spec.coupled,
        sinr_thresholds_db: vec![cfg.tau_db],
        rate_thresholds_bps: vec![cfg.rho_bps],
        ..SimOptions::default()
    }
}

struct SweepOutput {
    writer: BufWriter<File>,
    rows: Vec<Row>,
}

impl SweepOutput {
    fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut writer = BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        );
        write_header(&mut writer)?;
        Ok(SweepOutput {
            writer,
            rows: Vec::new(),
        })
    }

    fn push(&mut self, row: Row) -> Result<()> {
        row.write(&mut self.writer)?;
        self.rows.push(row);
        Ok(())
    }

    /// Keep completed points on disk even if a later point fails.
    fn checkpoint(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Execute a sweep against a base scenario. Returns the paths written.
pub fn run(spec: &SweepSpec, base: &NetworkConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let csv_path = out_dir.join(&spec.output);
    let mut out = SweepOutput::create(&csv_path)?;

    match spec.id {
        SweepId::CovVsThreshold => run_threshold_sweep(spec, base, &mut out, Metric::SinrCov)?,
        SweepId::RateVsThreshold => run_threshold_sweep(spec, base, &mut out, Metric::RateCov)?,
        SweepId::PercentileVsBias => {
            crate::compare::run_bias_points(base, &spec.grid, spec.seed, spec.trials, |row| {
                out.push(row)
            })?
        }
        SweepId::AssocVsDensity | SweepId::AssocVsBias => {
            run_point_sweep(spec, base, &mut out, Metric::Assoc)?
        }
        SweepId::CovVsDensity | SweepId::CovVsKa | SweepId::CovVsAntennas | SweepId::CovVsBias => {
            run_point_sweep(spec, base, &mut out, Metric::SinrCov)?
        }
    }
    out.checkpoint()?;

    let mut written = vec![csv_path.clone()];
    if spec.engines == Engines::Both {
        let summary = summarise(&out.rows);
        let summary_path = csv_path.with_file_name(format!(
            "{}_summary.csv",
            csv_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("sweep")
        ));
        let mut w = BufWriter::new(File::create(&summary_path)?);
        writeln!(w, "metric,direction,max_abs_gap")?;
        for ((metric, direction), gap) in summary {
            writeln!(w, "{metric},{direction},{gap}")?;
        }
        w.flush()?;
        written.push(summary_path);
    }
    Ok(written)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Metric {
    Assoc,
    SinrCov,
    RateCov,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Assoc => "assoc",
            Metric::SinrCov => "sinr_cov",
            Metric::RateCov => "rate_cov",
        }
    }
}

/// Threshold sweeps reuse one evaluator (analytical) and one simulation run
/// (MC) for the whole grid; the swept parameter is the metric threshold.
fn run_threshold_sweep(
    spec: &SweepSpec,
    base: &NetworkConfig,
    out: &mut SweepOutput,
    metric: Metric,
) -> Result<()> {
    let mc_report: Option<SimReport> = if spec.engines.mc() {
        let mut opts = mc_options(spec, base);
        match metric {
            Metric::SinrCov => opts.sinr_thresholds_db = spec.grid.clone(),
            Metric::RateCov => opts.rate_thresholds_bps = spec.grid.clone(),
            Metric::Assoc => unreachable!("threshold sweeps are coverage sweeps"),
        }
        Some(estimate(base, &opts))
    } else {
        None
    };

    for &q in &spec.directions {
        if spec.engines.analytical() {
            let curve: CoverageCurve = match metric {
                Metric::SinrCov => sinr_coverage_curve(base, q, &spec.grid)?,
                Metric::RateCov => rate_coverage_curve(base, q, &spec.grid)?,
                Metric::Assoc => unreachable!(),
            };
            for p in &curve.points {
                for (k, w) in p.weighted.iter().enumerate() {
                    out.push(Row::analytical(
                        p.threshold,
                        q,
                        &(k + 1).to_string(),
                        metric.name(),
                        *w,
                    ))?;
                }
                out.push(Row::analytical(
                    p.threshold,
                    q,
                    "total",
                    metric.name(),
                    p.total,
                ))?;
            }
        }
        if let Some(rep) = &mc_report {
            let series = match metric {
                Metric::SinrCov => &rep.sinr[q.index()],
                Metric::RateCov => &rep.rate[q.index()],
                Metric::Assoc => unreachable!(),
            };
            for c in series {
                for (k, w) in c.weighted.iter().enumerate() {
                    out.push(Row::mc(
                        c.threshold,
                        q,
                        &(k + 1).to_string(),
                        metric.name(),
                        w.value,
                        w.ci_halfwidth,
                    ))?;
                }
                out.push(Row::mc(
                    c.threshold,
                    q,
                    "total",
                    metric.name(),
                    c.total.value,
                    c.total.ci_halfwidth,
                ))?;
            }
        }
        out.checkpoint()?;
    }
    Ok(())
}

/// Parameter sweeps override the configuration per grid point and evaluate
/// the metric at the scenario's own thresholds.
fn run_point_sweep(
    spec: &SweepSpec,
    base: &NetworkConfig,
    out: &mut SweepOutput,
    metric: Metric,
) -> Result<()> {
    for &point in &spec.grid {
        let mut cfg = base.clone();
        apply_override(&mut cfg, &spec.param, point)?;

        let mc_report = if spec.engines.mc() {
            Some(estimate(&cfg, &mc_options(spec, &cfg)))
        } else {
            None
        };

        for &q in &spec.directions {
            match metric {
                Metric::Assoc => {
                    if spec.engines.analytical() {
                        for k in 0..cfg.tiers.len() {
                            let a = hybridcell::association::association_probability(&cfg, k, q)?;
                            out.push(Row::analytical(point, q, &(k + 1).to_string(), "assoc", a))?;
                        }
                    }
                    if let Some(rep) = &mc_report {
                        for (k, e) in rep.association[q.index()].iter().enumerate() {
                            out.push(Row::mc(
                                point,
                                q,
                                &(k + 1).to_string(),
                                "assoc",
                                e.value,
                                e.ci_halfwidth,
                            ))?;
                        }
                    }
                }
                Metric::SinrCov | Metric::RateCov => {
                    if spec.engines.analytical() {
                        let p = match metric {
                            Metric::SinrCov => hybridcell::coverage::sinr_coverage(
                                &cfg,
                                q,
                                hybridcell::network::db_to_linear(cfg.tau_db),
                            )?,
                            _ => hybridcell::coverage::rate_coverage(&cfg, q, cfg.rho_bps)?,
                        };
                        for (k, w) in p.weighted.iter().enumerate() {
                            out.push(Row::analytical(
                                point,
                                q,
                                &(k + 1).to_string(),
                                metric.name(),
                                *w,
                            ))?;
                        }
                        out.push(Row::analytical(point, q, "total", metric.name(), p.total))?;
                    }
                    if let Some(rep) = &mc_report {
                        let c = match metric {
                            Metric::SinrCov => &rep.sinr[q.index()][0],
                            _ => &rep.rate[q.index()][0],
                        };
                        for (k, w) in c.weighted.iter().enumerate() {
                            out.push(Row::mc(
                                point,
                                q,
                                &(k + 1).to_string(),
                                metric.name(),
                                w.value,
                                w.ci_halfwidth,
                            ))?;
                        }
                        out.push(Row::mc(
                            point,
                            q,
                            "total",
                            metric.name(),
                            c.total.value,
                            c.total.ci_halfwidth,
                        ))?;
                    }
                }
            }
        }
        out.checkpoint()?;
    }
    Ok(())
}

fn summarise(rows: &[Row]) -> BTreeMap<(String, String), f64> {
    let mut ana: BTreeMap<(String, String, String, String), f64> = BTreeMap::new();
    let mut mc: BTreeMap<(String, String, String, String), f64> = BTreeMap::new();
    for r in rows {
        let key = (
            r.point.to_string(),
            r.direction.clone(),
            r.tier.clone(),
            r.metric.clone(),
        );
        match r.engine.as_str() {
            "analytical" => {
                ana.insert(key, r.value);
            }
            _ => {
                mc.insert(key, r.value);
            }
        }
    }
    let mut out: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (key, a) in &ana {
        if let Some(m) = mc.get(key) {
            let entry = out.entry((key.3.clone(), key.1.clone())).or_insert(0.0);
            *entry = entry.max((a - m).abs());
        }
    }
    out
}

/// Guard against sweeping a parameter that does not exist in the scenario,
/// e.g. a THz bias sweep on a network without THz tiers.
pub fn has_thz_tier(cfg: &NetworkConfig) -> bool {
    cfg.band_indices(BandKind::Thz).next().is_some()
}
