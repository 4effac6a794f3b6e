//! Decoupled-vs-coupled comparison over a THz bias grid: for each bias the
//! swept value applies to the THz tiers in both directions, one simulation
//! runs the decoupled strategy (giving the DL and decoupled-UL series) and a
//! second run with identical seeds copies the DL decision onto the UL
//! (coupled-UL series). Emits SINR/rate coverage at the scenario thresholds
//! plus the 5th-percentile SINR and rate.

use crate::output::Row;
use anyhow::{ensure, Context, Result};
use hybridcell::montecarlo::{estimate, SimOptions, SimReport};
use hybridcell::network::{db_to_linear, BandKind, Direction, NetworkConfig};
use std::path::{Path, PathBuf};

/// Parse a bias grid: either `start:step:end` (inclusive) or a comma list,
/// in dB.
pub fn parse_bias_grid(spec: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        ensure!(parts.len() == 3, "bias grid must be start:step:end");
        let start: f64 = parts[0].parse().context("bad grid start")?;
        let step: f64 = parts[1].parse().context("bad grid step")?;
        let end: f64 = parts[2].parse().context("bad grid end")?;
        ensure!(step > 0.0 && end >= start, "need step > 0 and end >= start");
        let mut out = Vec::new();
        let mut v = start;
        while v <= end + 1e-9 {
            out.push(v);
            v += step;
        }
        out
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().context("bad grid value"))
            .collect::<Result<Vec<f64>>>()?
    };
    ensure!(!grid.is_empty(), "bias grid must not be empty");
    ensure!(
        grid.windows(2).all(|w| w[0] < w[1]),
        "bias grid must be strictly increasing"
    );
    Ok(grid)
}

fn with_thz_bias(base: &NetworkConfig, bias_db: f64) -> NetworkConfig {
    let mut cfg = base.clone();
    for k in 0..cfg.tiers.len() {
        if cfg.tiers[k].band == BandKind::Thz {
            cfg.tiers[k].bias_dl = db_to_linear(bias_db);
            cfg.tiers[k].bias_ul = db_to_linear(bias_db);
        }
    }
    cfg
}

/// One bias point: the biased configuration and the two paired runs.
fn bias_point(
    base: &NetworkConfig,
    bias_db: f64,
    seed: u64,
    trials: usize,
) -> (NetworkConfig, SimReport, SimReport) {
    let cfg = with_thz_bias(base, bias_db);
    let opts = SimOptions {
        n_trials: trials,
        seed,
        sinr_thresholds_db: vec![cfg.tau_db],
        rate_thresholds_bps: vec![cfg.rho_bps],
        ..SimOptions::default()
    };
    let decoupled = estimate(&cfg, &opts);
    let coupled = estimate(
        &cfg,
        &SimOptions {
            coupled_ul: true,
            ..opts
        },
    );
    (cfg, decoupled, coupled)
}

fn series_rows(
    point: f64,
    series: &str,
    q: Direction,
    report: &SimReport,
    emit: &mut impl FnMut(Row) -> Result<()>,
) -> Result<()> {
    let qi = q.index();
    let sinr = &report.sinr[qi][0];
    let rate = &report.rate[qi][0];
    emit(Row::series(
        point,
        series,
        "sinr_cov",
        sinr.total.value,
        sinr.total.ci_halfwidth,
    ))?;
    emit(Row::series(
        point,
        series,
        "rate_cov",
        rate.total.value,
        rate.total.ci_halfwidth,
    ))?;
    let ps = report.percentile_sinr_db[qi];
    emit(Row::series(
        point,
        series,
        "pct_sinr_db",
        ps.value,
        ps.ci_halfwidth,
    ))?;
    let pr = report.percentile_rate[qi];
    emit(Row::series(
        point,
        series,
        "pct_rate",
        pr.value,
        pr.ci_halfwidth,
    ))?;
    Ok(())
}

/// Produce the comparison rows for every bias point through `emit`.
pub fn run_bias_points(
    base: &NetworkConfig,
    grid: &[f64],
    seed: u64,
    trials: usize,
    mut emit: impl FnMut(Row) -> Result<()>,
) -> Result<()> {
    ensure!(
        crate::sweep::has_thz_tier(base),
        "scenario has no THz tier to bias"
    );
    for &bias_db in grid {
        let (_, decoupled, coupled) = bias_point(base, bias_db, seed, trials);
        series_rows(bias_db, "dl", Direction::Dl, &decoupled, &mut emit)?;
        series_rows(
            bias_db,
            "ul_decoupled",
            Direction::Ul,
            &decoupled,
            &mut emit,
        )?;
        series_rows(bias_db, "ul_coupled", Direction::Ul, &coupled, &mut emit)?;
    }
    Ok(())
}

/// The `compare` subcommand: writes `compare.csv` under `out_dir`, plus raw
/// per-trial records per bias point when requested (for recomputing
/// percentiles offline).
pub fn run(
    base: &NetworkConfig,
    grid: &[f64],
    out_dir: &Path,
    seed: u64,
    trials: usize,
    dump_trials: bool,
) -> Result<PathBuf> {
    use std::io::Write;
    ensure!(
        crate::sweep::has_thz_tier(base),
        "scenario has no THz tier to bias"
    );
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("compare.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    crate::output::write_header(&mut file)?;
    for &bias_db in grid {
        let (_, decoupled, coupled) = bias_point(base, bias_db, seed, trials);
        let mut emit = |row: Row| -> Result<()> {
            row.write(&mut file)?;
            Ok(())
        };
        series_rows(bias_db, "dl", Direction::Dl, &decoupled, &mut emit)?;
        series_rows(
            bias_db,
            "ul_decoupled",
            Direction::Ul,
            &decoupled,
            &mut emit,
        )?;
        series_rows(bias_db, "ul_coupled", Direction::Ul, &coupled, &mut emit)?;
        if dump_trials {
            for (mode, rep) in [("decoupled", &decoupled), ("coupled", &coupled)] {
                let name = format!("trials_bias{bias_db}_{mode}.csv");
                let mut w = std::io::BufWriter::new(std::fs::File::create(out_dir.join(name))?);
                rep.write_trials_csv(&mut w)?;
                w.flush()?;
            }
        }
        file.flush()?;
    }
    file.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs_parse() {
        assert_eq!(parse_bias_grid("0:5:10").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_bias_grid("-10,0,30").unwrap(), vec![-10.0, 0.0, 30.0]);
        assert!(parse_bias_grid("5:0:10").is_err());
        assert!(parse_bias_grid("3,2,1").is_err());
        assert!(parse_bias_grid("").is_err());
    }
}
