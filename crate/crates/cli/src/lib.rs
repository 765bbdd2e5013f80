//! Command-line front end for the cldyn experiments: configuration, mode
//! dispatch and tabular output.

pub mod config;
pub mod output;
pub mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::Instant;

use cldyn_core::Execution;

use config::{ExperimentConfig, Format};
use output::Metadata;
use run::{RunError, RunOutput};

fn write_table(path: Option<&str>, format: Format, meta: &Metadata, table: &output::Table) -> Result<(), RunError> {
    let io_err = |source: io::Error| RunError::Io {
        context: format!("writing {}", path.unwrap_or("stdout")),
        source,
    };
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => output::write_csv(&mut out, meta, table),
        Format::Jsonl => output::write_jsonl(&mut out, meta, table),
    }
    .and_then(|_| out.flush())
    .map_err(io_err)
}

/// Runs a materialized configuration and writes every output.
pub fn execute(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let result = run::run(cfg, exec)?;
    let wall = start.elapsed().as_secs_f64();
    let meta = Metadata {
        mode: cfg.mode().as_str().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: cfg.seeds.clone(),
        wall_time_s: wall,
        config_json: cfg.to_json(),
        summary: result.summary.clone(),
    };
    let format = cfg.format.unwrap_or_default();
    write_table(cfg.out.as_deref(), format, &meta, &result.table)?;
    for (path, table) in &result.extra {
        write_table(Some(path), format, &meta, table)?;
    }
    for line in &result.summary {
        log::info!("{line}");
    }
    Ok(result)
}
