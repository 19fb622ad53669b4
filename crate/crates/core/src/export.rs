//! CSV output: comma separated, `.` decimals, a mandatory header row and
//! `#`-prefixed metadata lines above it.

use std::io::Write;

use crate::bohmian::EnsembleStatistics;
use crate::error::Result;
use crate::observables::DetectionDistribution;
use crate::reflection::ReflectionPoint;
use crate::scalar::{to_f64, Real};
use crate::soft::LimitSweepResult;

/// `# key: value` lines written ahead of every table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(version: &str, digest: &str) -> Self {
        Self::default()
            .with("version", version)
            .with("config_digest", digest)
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        Ok(())
    }
}

/// Shortest round-trip form; exponent notation for very small or large values.
fn num<T: Real>(x: T) -> String {
    format!("{:?}", to_f64(x))
}

fn opt<T: Real>(x: Option<T>) -> String {
    x.map(num).unwrap_or_default()
}

fn table<W: Write>(
    mut w: W,
    meta: &Metadata,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.write_record(&r)?;
    }
    csv.flush()?;
    Ok(())
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// One row per step: interval, per-endpoint rates, total, cumulative and
/// survival at the interval end.
pub fn write_distribution<W: Write, T: Real>(
    w: W,
    meta: &Metadata,
    dist: &DetectionDistribution<T>,
) -> Result<()> {
    let meta = meta
        .clone()
        .with("initial_norm", num(dist.initial_norm))
        .with("detected", num(dist.detected()))
        .with("prob_never", num(dist.prob_never))
        .with("horizon_residual", num(dist.horizon_residual));
    let mut header = names(&["t_start", "t_end"]);
    header.extend(dist.endpoint_labels.iter().map(|l| format!("density_{l}")));
    header.extend(names(&["density_total", "cumulative", "survival"]));
    let rows = (0..dist.steps()).map(|k| {
        let mut r = vec![num(dist.times[k]), num(dist.times[k + 1])];
        r.extend(dist.density.iter().map(|d| num(d[k])));
        r.push(num(dist.total_density(k)));
        r.push(num(dist.cumulative[k + 1]));
        r.push(num(dist.initial_norm - dist.cumulative[k + 1]));
        r
    });
    table(w, &meta, &header, rows)
}

/// A reflection-scan row: analytic values, optionally with a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow<T> {
    pub k: T,
    pub kappa: T,
    pub reflection: T,
    pub absorption: T,
    /// Reflection off a soft shell, when one is configured.
    pub soft: Option<T>,
    pub numeric: Option<ReflectionPoint<T>>,
}

pub fn write_reflection_scan<W: Write, T: Real>(
    w: W,
    meta: &Metadata,
    rows: &[ScanRow<T>],
) -> Result<()> {
    let header = names(&[
        "k",
        "k_over_kappa",
        "R",
        "A",
        "R_soft",
        "R_simulated",
        "R_bandwidth_averaged",
        "abs_error",
    ]);
    let rows = rows.iter().map(|r| {
        vec![
            num(r.k),
            num(r.k / r.kappa),
            num(r.reflection),
            num(r.absorption),
            opt(r.soft),
            opt(r.numeric.map(|p| p.r_simulated)),
            opt(r.numeric.map(|p| p.r_averaged)),
            opt(r.numeric.map(|p| p.error())),
        ]
    });
    table(w, meta, &header, rows)
}

pub fn write_sweep<W: Write, T: Real>(
    w: W,
    meta: &Metadata,
    sweep: &LimitSweepResult<T>,
) -> Result<()> {
    let meta = meta
        .clone()
        .with("kappa_target", num(sweep.kappa_target))
        .with("back_wall", sweep.back_boundary.name())
        .with("reference_bc", format!("{:?}", sweep.reference))
        .with("verdict", sweep.verdict.label());
    let header = names(&[
        "v",
        "L",
        "vL",
        "l1_distance",
        "kappa_eff",
        "detected_mass",
        "kappa_constant",
        "mean_detection_position",
    ]);
    let rows = sweep.items.iter().map(|i| {
        vec![
            num(i.strength),
            num(i.width),
            num(i.vl),
            num(i.l1_distance),
            num(i.kappa_eff),
            num(i.detected_mass),
            num(i.kappa_constant),
            num(i.mean_detection_position),
        ]
    });
    table(w, &meta, &header, rows)
}

/// One row per particle; `exit_time` is empty for particles that never left
/// and for stalled ones (`stalled = 1`).
pub fn write_trajectories<W: Write, T: Real>(
    w: W,
    meta: &Metadata,
    stats: &EnsembleStatistics<T>,
) -> Result<()> {
    let meta = meta.clone().with("seed", stats.seed);
    let header = names(&["sample_id", "x0", "exit_time", "exit_velocity", "stalled"]);
    let rows = (0..stats.n_samples()).map(|i| {
        vec![
            i.to_string(),
            num(stats.initial_positions[i]),
            opt(stats.exit_times[i]),
            opt(stats.exit_velocities[i]),
            u8::from(stats.stalled[i]).to_string(),
        ]
    });
    table(w, &meta, &header, rows)
}

/// Two columns, `k_over_kappa` and `A`.
pub fn write_figure1<W: Write, T: Real>(w: W, meta: &Metadata, curve: &[(T, T)]) -> Result<()> {
    let rows = curve.iter().map(|&(r, a)| vec![num(r), num(a)]);
    table(w, meta, &names(&["k_over_kappa", "A"]), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::absorption_curve;

    #[test]
    fn figure_table_layout() {
        let mut buf = Vec::new();
        let meta = Metadata::new("0.1.0", "abc");
        write_figure1(&mut buf, &meta, &absorption_curve(5.0f64, 0.01).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# version: 0.1.0");
        assert_eq!(lines[1], "# config_digest: abc");
        assert_eq!(lines[2], "k_over_kappa,A");
        assert_eq!(lines[3], "0.0,0.0");
        assert_eq!(lines[103], "1.0,1.0");
        assert_eq!(lines.len(), 3 + 501);
    }
}
