//! Command-line front end.
//!
//! Data goes to files or stdout, diagnostics to stderr. Exit codes: 0 on
//! success, 1 for usage, input and I/O problems, 2 for numerical or domain
//! errors (see [`Error::exit_code`]).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discovery::{
    self, brute_force_bound, confidence_region, discovery_matrix, regularize, Constraint, SeriesKind,
};
use crate::error::{Error, Result};
use crate::io::{self, SeriesRecord};
use crate::logvalue::LogValue;
use crate::martingales::RankedValues;
use crate::merge::{
    decompose_symmetric, ie_example_f, mixture_merge, nesp_bell, nesp_log, nesp_powersum,
    validate_merging_polynomial, MergeSpec, MultiaffinePoly, Verdict,
};
use crate::oracle::nesp_by_enumeration;
use crate::simulate::{run_experiment, run_many, summarize, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "evalanche", version, about = "Multiple testing with uncorrelated test martingales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Log-domain elementary symmetric sums.
    #[default]
    Dp,
    /// Explicit power-sum formulas, orders 1 to 4.
    Powersum,
    /// Complete Bell polynomial recurrence.
    Bell,
    /// The two-argument ie-merging example `f`.
    IeF,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Gaussian simulation and write an output bundle.
    Simulate {
        /// JSON experiment config; the paper's setup when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Significance levels of the region reports (repeatable).
        #[arg(long, default_values_t = vec![10.0, 100.0])]
        alpha: Vec<f64>,
        /// Number of consecutive seeds to run; adds `summary.csv`.
        #[arg(long, default_value_t = 1)]
        replicates: u64,
    },
    /// Discovery diagonal for the given rows.
    Diagonal(RowArgs),
    /// Discovery subdiagonal for the given rows.
    Subdiag(RowArgs),
    /// Full discovery matrix.
    Matrix {
        #[arg(long)]
        values: PathBuf,
        #[arg(long, default_value = "u1")]
        merge: MergeSpec,
        #[arg(long)]
        regularize: bool,
        /// Also write an SVG heatmap.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Confidence region for one row of a matrix CSV (regularized on load).
    Region {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        row: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Merge a list of martingale values.
    Merge {
        #[arg(long)]
        values: PathBuf,
        #[arg(long, default_value = "u1")]
        merge: MergeSpec,
        #[arg(long, value_enum, default_value_t)]
        method: Method,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check a multiaffine polynomial (JSON) for being a merging function.
    ValidatePoly {
        #[arg(long)]
        poly: PathBuf,
    },
    /// Compare the fast paths against brute-force enumeration.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
}

#[derive(clap::Args, Debug)]
struct RowArgs {
    #[arg(long)]
    values: PathBuf,
    /// Comma-separated rows and ranges, e.g. `1,3,98-101`.
    #[arg(long, value_parser = parse_rows)]
    rows: Option<RowList>,
    #[arg(long, default_value = "u1")]
    merge: MergeSpec,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Clone, Debug)]
struct RowList(Vec<usize>);

fn parse_rows(s: &str) -> std::result::Result<RowList, String> {
    let mut rows = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad row {t:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                rows.extend(a..=b);
            }
            None => rows.push(num(part)?),
        }
    }
    if rows.is_empty() {
        return Err("no rows given".into());
    }
    Ok(RowList(rows))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Simulate {
            config,
            seed,
            out: dir,
            alpha,
            replicates,
        } => simulate(config.as_deref(), seed, &dir, &alpha, replicates, err),
        Command::Diagonal(args) => rows(args, SeriesKind::Diagonal, out),
        Command::Subdiag(args) => rows(args, SeriesKind::Subdiagonal, out),
        Command::Matrix {
            values,
            merge,
            regularize: reg,
            heatmap,
            out: path,
            format,
        } => {
            let ranked = RankedValues::from_values(&load_values(&values)?);
            let mut m = discovery_matrix(&ranked, &merge);
            if reg {
                m = regularize(&m);
            }
            if let Some(path) = heatmap {
                write_path(&path, io::heatmap_svg(&m, io::DEFAULT_CELL).as_bytes())?;
            }
            let mut buf = Vec::new();
            match format {
                Format::Csv => io::write_matrix_csv(&mut buf, &m)?,
                Format::Json => json_to(&mut buf, &io::matrix_records(&m))?,
            }
            match path {
                Some(p) => write_path(&p, &buf)?,
                None => out.write_all(&buf)?,
            }
            Ok(0)
        }
        Command::Region {
            matrix,
            row,
            alpha,
            format,
        } => {
            let m = io::read_matrix_csv(BufReader::new(open(&matrix)?))?;
            let region = confidence_region(&regularize(&m), row, alpha)?;
            match format {
                Format::Csv => io::write_regions_csv(&mut *out, std::slice::from_ref(&region))?,
                Format::Json => json_to(&mut *out, &region)?,
            }
            Ok(0)
        }
        Command::Merge {
            values,
            merge,
            method,
            format,
        } => {
            let values = load_values(&values)?;
            let v = merge_with(&values, &merge, method)?;
            match format {
                Format::Csv => {
                    writeln!(out, "log10_value,value")?;
                    writeln!(
                        out,
                        "{},{}",
                        v.log10(),
                        io::linear_column(v).map(|x| format!("{x:e}")).unwrap_or_default()
                    )?;
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Merged {
                        log10_value: f64,
                        value: Option<f64>,
                    }
                    json_to(
                        &mut *out,
                        &Merged {
                            log10_value: v.log10(),
                            value: io::linear_column(v),
                        },
                    )?;
                }
            }
            Ok(0)
        }
        Command::ValidatePoly { poly } => {
            let text = fs::read_to_string(&poly)?;
            let p: MultiaffinePoly = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", poly.display())))?;
            let verdict = validate_merging_polynomial(&p);
            let (weights, asymmetry) = match decompose_symmetric(&p) {
                Ok(w) => (Some(w), None),
                Err(a) => (None, Some(a.to_string())),
            };
            #[derive(Serialize)]
            struct Report {
                #[serde(flatten)]
                verdict: Verdict,
                nesp_weights: Option<Vec<f64>>,
                asymmetry: Option<String>,
            }
            let valid = verdict.is_valid();
            json_to(
                &mut *out,
                &Report {
                    verdict,
                    nesp_weights: weights,
                    asymmetry,
                },
            )?;
            Ok(if valid { 0 } else { 2 })
        }
        Command::OracleCheck { seed, instances } => oracle_check(seed, instances, out),
    }
}

fn simulate(
    config: Option<&Path>,
    seed: Option<u64>,
    dir: &Path,
    alphas: &[f64],
    replicates: u64,
    err: &mut dyn Write,
) -> Result<i32> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::paper(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(&a) = alphas.iter().find(|a| a.is_nan() || **a <= 0.0) {
        return Err(Error::InvalidAlpha(a));
    }
    if replicates == 0 {
        return Err(Error::Usage("--replicates must be at least 1".into()));
    }
    fs::create_dir_all(dir)?;
    let manifest = if replicates == 1 {
        let run = run_experiment(&cfg)?;
        io::write_bundle(dir, &cfg, &run, alphas, None)?
    } else {
        let seeds: Vec<u64> = (0..replicates).map(|i| cfg.seed.wrapping_add(i)).collect();
        let runs = run_many(&cfg, &seeds)?;
        let summary = summarize(&cfg, &runs);
        io::write_bundle(dir, &cfg, &runs[0], alphas, Some(&summary))?
    };
    writeln!(
        err,
        "wrote {} files to {}",
        manifest.files.len() + 1,
        dir.display()
    )?;
    Ok(0)
}

fn rows(args: RowArgs, kind: SeriesKind, out: &mut dyn Write) -> Result<i32> {
    let ranked = RankedValues::from_values(&load_values(&args.values)?);
    let rows = args.rows.map_or_else(|| (1..=ranked.len()).collect(), |r| r.0);
    let mut records = Vec::with_capacity(rows.len());
    for r in rows {
        let v = match kind {
            SeriesKind::Diagonal => discovery::diagonal_row(&ranked, r, &args.merge)?,
            SeriesKind::Subdiagonal => discovery::subdiagonal_row(&ranked, r, &args.merge)?,
        };
        records.push(SeriesRecord::new(0, r, kind, v));
    }
    match args.format {
        Format::Csv => {
            writeln!(out, "row,kind,log10_value,value")?;
            for rec in &records {
                writeln!(
                    out,
                    "{},{},{},{}",
                    rec.row,
                    rec.kind.as_str(),
                    rec.log10_value,
                    rec.value.map(|x| format!("{x:e}")).unwrap_or_default()
                )?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                row: usize,
                kind: SeriesKind,
                log10_value: f64,
                value: Option<f64>,
            }
            let rows: Vec<Row> = records
                .into_iter()
                .map(|r| Row {
                    row: r.row,
                    kind: r.kind,
                    log10_value: r.log10_value,
                    value: r.value,
                })
                .collect();
            json_to(&mut *out, &rows)?;
        }
    }
    Ok(0)
}

fn merge_with(values: &[LogValue], spec: &MergeSpec, method: Method) -> Result<LogValue> {
    let single_order = || match spec.kind() {
        crate::merge::MergeKind::Nesp { n } => Ok(*n),
        _ => Err(Error::Usage(format!(
            "method {method:?} needs a single uN spec, got {spec}"
        ))),
    };
    match method {
        Method::Dp => mixture_merge(spec, values),
        Method::Powersum => nesp_powersum(values, single_order()?),
        Method::Bell => nesp_bell(values, single_order()?),
        Method::IeF => match values {
            [a, b] => Ok(ie_example_f(*a, *b)),
            _ => Err(Error::Usage(format!(
                "ie-f takes exactly two values, got {}",
                values.len()
            ))),
        },
    }
}

fn oracle_check(seed: u64, instances: usize, out: &mut dyn Write) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_nesp = 0.0f64;
    let mut worst_matrix = 0.0f64;
    let ln_gap = |a: LogValue, b: LogValue| {
        if a.ln() == b.ln() {
            0.0
        } else {
            (a.ln() - b.ln()).abs()
        }
    };
    let specs = [
        MergeSpec::mean(),
        MergeSpec::nesp(2)?,
        MergeSpec::mean_and_pairs(),
    ];
    for i in 0..instances {
        let k = rng.random_range(1..=12usize);
        let values: Vec<LogValue> = (0..k)
            .map(|_| LogValue::from_log10(rng.random_range(-6.0..=6.0)))
            .collect::<Result<_>>()?;
        let n = rng.random_range(1..=k);
        worst_nesp = worst_nesp.max(ln_gap(nesp_log(&values, n)?, nesp_by_enumeration(&values, n)?));

        let small = &values[..k.min(8)];
        let ranked = RankedValues::from_values(small);
        let spec = &specs[i % specs.len()];
        let m = discovery_matrix(&ranked, spec);
        for r in 1..=small.len() {
            for j in 0..=r {
                let b = brute_force_bound(small, Constraint::ExactlyMissingFromTop(j), r, spec)?;
                worst_matrix = worst_matrix.max(ln_gap(m.get(r, j).expect("in range"), b));
            }
        }
    }
    const TOL: f64 = 1e-9;
    let ok = worst_nesp <= TOL && worst_matrix <= TOL;
    writeln!(out, "instances,{instances}")?;
    writeln!(out, "max_ln_error_nesp,{worst_nesp:e}")?;
    writeln!(out, "max_ln_error_matrix,{worst_matrix:e}")?;
    writeln!(out, "result,{}", if ok { "pass" } else { "fail" })?;
    Ok(if ok { 0 } else { 2 })
}

fn load_values(path: &Path) -> Result<Vec<LogValue>> {
    io::read_values(BufReader::new(open(path)?))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot open {}: {e}", path.display()),
        ))
    })
}

fn write_path(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn json_to<T: Serialize>(mut w: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Parse(format!("cannot serialize output: {e}")))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_lists() {
        assert_eq!(parse_rows("1,3,5-7").unwrap().0, vec![1, 3, 5, 6, 7]);
        assert!(parse_rows("4-2").is_err());
        assert!(parse_rows("x").is_err());
        assert!(parse_rows("").is_err());
    }

    #[test]
    fn help_and_unknown_flags() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["evalanche", "--help"], &mut o, &mut e), 0);
        assert!(!o.is_empty());
        assert_eq!(run(["evalanche", "merge", "--bogus"], &mut o, &mut e), 1);
        assert!(!e.is_empty());
    }

    #[test]
    fn oracle_check_passes() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["evalanche", "oracle-check", "--instances", "20"], &mut o, &mut e),
            0
        );
        assert!(String::from_utf8(o).unwrap().ends_with("result,pass\n"));
    }
}
