//! CSV row format shared by every sweep: one metric value per row, with the
//! engine tagged and MC rows carrying their confidence half-width.

use hybridcell::network::Direction;
use std::io::Write;

pub const HEADER: &str = "point,direction,tier,metric,engine,value,ci_halfwidth";

#[derive(Debug, Clone)]
pub struct Row {
    pub point: f64,
    pub direction: String,
    pub tier: String,
    pub metric: String,
    pub engine: String,
    pub value: f64,
    pub ci_halfwidth: Option<f64>,
}

impl Row {
    pub fn analytical(point: f64, q: Direction, tier: &str, metric: &str, value: f64) -> Row {
        Row {
            point,
            direction: q.to_string(),
            tier: tier.to_string(),
            metric: metric.to_string(),
            engine: "analytical".to_string(),
            value,
            ci_halfwidth: None,
        }
    }

    pub fn mc(point: f64, q: Direction, tier: &str, metric: &str, value: f64, ci: f64) -> Row {
        Row {
            point,
            direction: q.to_string(),
            tier: tier.to_string(),
            metric: metric.to_string(),
            engine: "mc".to_string(),
            value,
            ci_halfwidth: Some(ci),
        }
    }

    /// MC row for a named series (used by the coupled-vs-decoupled runs,
    /// where the direction column carries the series tag).
    pub fn series(point: f64, series: &str, metric: &str, value: f64, ci: f64) -> Row {
        Row {
            point,
            direction: series.to_string(),
            tier: "total".to_string(),
            metric: metric.to_string(),
            engine: "mc".to_string(),
            value,
            ci_halfwidth: Some(ci),
        }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        match self.ci_halfwidth {
            Some(ci) => writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.point, self.direction, self.tier, self.metric, self.engine, self.value, ci
            ),
            None => writeln!(
                w,
                "{},{},{},{},{},{},",
                self.point, self.direction, self.tier, self.metric, self.engine, self.value
            ),
        }
    }
}

pub fn write_header<W: Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")
}
