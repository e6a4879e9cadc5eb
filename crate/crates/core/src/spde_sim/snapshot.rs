use std::io::Write;

use crate::error::Result;

use super::grid::DensityGrid;
use super::semi_lagrangian::DensityState;

/// CSV rows `(chart, i, j, rho)` after a one-line JSON header.
pub fn write_snapshot<const D: usize, G: DensityGrid<D>, W: Write>(
    out: W,
    grid: &G,
    state: &DensityState,
    seed: u64,
) -> Result<()> {
    let (charts, n) = grid.shape();
    let mut w = csv::Writer::from_writer(out);
    let header = serde_json::json!({ "nx": n, "ny": n, "charts": charts, "t": state.t, "seed": seed, "path": state.path_id });
    w.flush()?;
    let mut inner = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    writeln!(inner, "# {header}")?;
    let mut w = csv::Writer::from_writer(inner);
    w.write_record(["chart", "i", "j", "rho"])?;
    for (k, v) in state.values.iter().enumerate() {
        let chart = k / (n * n);
        let rem = k % (n * n);
        w.write_record([chart.to_string(), (rem % n).to_string(), (rem / n).to_string(), format!("{v:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}
