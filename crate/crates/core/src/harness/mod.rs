//! Monte Carlo sweeps: TOML configuration, seeded parallel trial
//! execution, CSV records, scaling fits, plots and diagnostics.

pub mod config;
pub mod diagnostics;
pub mod plot;
pub mod records;
pub mod scaling;
pub mod sweep;

pub use config::{Axes, Axis, Cell, InstanceSpec, LearnerOptions, SweepConfig};
pub use plot::{emit_plot, render_svg, Series};
pub use records::{read_records, summarize, write_records, CellSummary, TrialRecord, CSV_HEADER};
pub use scaling::{crossover, fit_scaling, ScalingFit, ScalingPoint};
pub use sweep::{run_sweep, run_sweep_to, run_trial};

use crate::error::Result;
use crate::rates::{rate_report, RateQuery};

/// Rate query for one cell, with the instance's problem constants.
pub fn cell_query(cfg: &SweepConfig, cell: &Cell) -> RateQuery {
    let mut q = RateQuery::new(cell.n_pub as u64, cell.n_priv as u64, cell.d as u64, cell.epsilon, cfg.delta);
    q.g = cfg.instance.lipschitz();
    q.d_radius = cfg.instance.radius();
    q.norm_x = cfg.instance.norm_x();
    q.r = match cfg.instance {
        InstanceSpec::Fingerprint { radius, .. } => radius,
        _ => q.d_radius * q.norm_x,
    };
    if let InstanceSpec::StronglyConvex { lambda, .. } = cfg.instance {
        q.lambda = lambda;
    }
    q
}

/// Rate overlay curves along `axis`, one point per distinct x value (the
/// first cell in config order wins). Formulas that fail at a cell are skipped.
pub fn overlay_series(cfg: &SweepConfig, axis: Axis) -> Result<Vec<Series>> {
    let mut out = Vec::new();
    for name in &cfg.overlays {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for cell in cfg.cells() {
            let x = cell.axis_value(axis);
            if points.iter().any(|p| p.0 == x) {
                continue;
            }
            let report = match rate_report(&cell_query(cfg, &cell)) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if let Some(y) = report.get(name).and_then(|v| v.as_f64()) {
                points.push((x, y));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.push(Series {
            name: name.clone(),
            points,
        });
    }
    Ok(out)
}
