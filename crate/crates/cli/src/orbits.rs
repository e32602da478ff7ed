use std::path::PathBuf;
use std::time::Instant;

use zetawb_core::{catalog_validate, write_catalog_file};

use crate::config::JobConfig;
use crate::model::build_catalog;
use crate::CliError;

pub fn run(job: &JobConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let catalog = build_catalog(&job.model)?;
    let elapsed = start.elapsed();
    let path = job.files.catalog.clone().unwrap_or_else(|| PathBuf::from("catalog.json"));
    write_catalog_file(&catalog, &path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;

    let report = catalog_validate(&catalog);
    say!("primes: {}", catalog.len());
    for (k, n) in &report.length_bins {
        say!("  [{k}, {}): {n}", k + 1);
    }
    if catalog.t_complete.is_finite() {
        say!("T_complete: {}", catalog.t_complete);
    } else {
        say!("T_complete: unbounded");
    }
    for d in &catalog.diagnostics {
        say!("note: {d}");
    }
    say!("wall time: {:.3} s", elapsed.as_secs_f64());
    say!("catalog: {}", path.display());
    report.into_result().map(|_| ()).map_err(CliError::model)
}
