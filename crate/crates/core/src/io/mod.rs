//! File formats and output bundles.

mod svg;
mod tables;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discovery::{confidence_region, ConfidenceRegion};
use crate::error::{Error, Result};
use crate::simulate::{ExperimentConfig, ReplicationSummary, RunResult};

pub use svg::{heatmap_svg, series_svg, DEFAULT_CELL};
pub use tables::{
    linear_column, matrix_from_records, matrix_records, read_matrix_csv, read_matrix_records,
    read_series_csv, read_values, series_records, write_matrix_csv, write_matrix_records,
    write_series_csv, MatrixRecord, SeriesRecord, MATRIX_HEADER, SERIES_HEADER,
};

/// Everything needed to regenerate a bundle bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Seeds actually run; the first one produced the series and matrices.
    pub seeds: Vec<u64>,
    /// Significance levels of the region reports.
    pub alphas: Vec<f64>,
    pub files: Vec<String>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create output directory {}: {e}", dir.display()),
        ))
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    let path: PathBuf = dir.join(name);
    fs::write(&path, bytes).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })?;
    files.push(name.to_string());
    Ok(())
}

/// `r,alpha,lower_bound,members` with members separated by `;`.
pub fn write_regions_csv<W: Write>(mut w: W, regions: &[ConfidenceRegion]) -> Result<()> {
    writeln!(w, "r,alpha,lower_bound,members")?;
    for reg in regions {
        let members: Vec<String> = reg.members.iter().map(ToString::to_string).collect();
        writeln!(
            w,
            "{},{},{},{}",
            reg.r,
            reg.alpha,
            reg.lower_bound.map(|l| l.to_string()).unwrap_or_default(),
            members.join(";")
        )?;
    }
    Ok(())
}

/// `statistic,n,min_log10,q1_log10,median_log10,q3_log10,max_log10`.
pub fn write_summary_csv<W: Write>(mut w: W, summary: &ReplicationSummary) -> Result<()> {
    writeln!(w, "statistic,n,min_log10,q1_log10,median_log10,q3_log10,max_log10")?;
    for (name, s) in &summary.statistics {
        writeln!(
            w,
            "\"{name}\",{},{},{},{},{},{}",
            s.n,
            s.min.log10(),
            s.q1.log10(),
            s.median.log10(),
            s.q3.log10(),
            s.max.log10()
        )?;
    }
    Ok(())
}

/// `index,log10_value,rank,false_null`, 1-based index and rank.
pub fn write_table_csv<W: Write>(mut w: W, run: &RunResult) -> Result<()> {
    writeln!(w, "index,log10_value,rank,false_null")?;
    let ranked = run.final_table.rank();
    let mut rank_of = vec![0; ranked.len()];
    for (pos, &idx) in ranked.perm().iter().enumerate() {
        rank_of[idx] = pos + 1;
    }
    for (i, v) in run.final_table.values().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            i + 1,
            v.log10(),
            rank_of[i],
            run.false_nulls.binary_search(&i).is_ok()
        )?;
    }
    Ok(())
}

/// Writes the output bundle of a run into `dir` and returns the manifest.
///
/// Files: `manifest.json`, `series.csv`, `series.svg`, `final_table.csv`,
/// and per checkpoint `matrix_<step>.csv`, `matrix_<step>_regularized.csv`,
/// `heatmap_<step>.svg` (regularized) and `regions_<step>.csv` (tracked
/// rows at every alpha). With more than one seed, `summary.csv` as well.
pub fn write_bundle(
    dir: &Path,
    cfg: &ExperimentConfig,
    run: &RunResult,
    alphas: &[f64],
    summary: Option<&ReplicationSummary>,
) -> Result<Manifest> {
    create_dir(dir)?;
    let mut files = Vec::new();

    let mut buf = Vec::new();
    write_series_csv(&mut buf, &series_records(&run.diagonal_series, &run.subdiagonal_series))?;
    write_file(dir, "series.csv", &buf, &mut files)?;

    let all_series: Vec<_> = run
        .diagonal_series
        .iter()
        .chain(&run.subdiagonal_series)
        .cloned()
        .collect();
    write_file(dir, "series.svg", series_svg(&all_series).as_bytes(), &mut files)?;

    buf.clear();
    write_table_csv(&mut buf, run)?;
    write_file(dir, "final_table.csv", &buf, &mut files)?;

    for cp in &run.checkpoints {
        let step = cp.step;
        buf.clear();
        write_matrix_csv(&mut buf, &cp.raw)?;
        write_file(dir, &format!("matrix_{step}.csv"), &buf, &mut files)?;
        buf.clear();
        write_matrix_csv(&mut buf, &cp.regularized)?;
        write_file(dir, &format!("matrix_{step}_regularized.csv"), &buf, &mut files)?;
        write_file(
            dir,
            &format!("heatmap_{step}.svg"),
            heatmap_svg(&cp.regularized, DEFAULT_CELL).as_bytes(),
            &mut files,
        )?;
        let mut regions = Vec::new();
        for &r in &cfg.tracked_rows {
            for &alpha in alphas {
                regions.push(confidence_region(&cp.regularized, r, alpha)?);
            }
        }
        buf.clear();
        write_regions_csv(&mut buf, &regions)?;
        write_file(dir, &format!("regions_{step}.csv"), &buf, &mut files)?;
    }

    let seeds = match summary {
        Some(s) => {
            buf.clear();
            write_summary_csv(&mut buf, s)?;
            write_file(dir, "summary.csv", &buf, &mut files)?;
            s.seeds.clone()
        }
        None => vec![run.seed],
    };

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.with_seed(run.seed),
        seeds,
        alphas: alphas.to_vec(),
        files,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Parse(format!("cannot serialize manifest: {e}")))?;
    json.push(b'\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}
