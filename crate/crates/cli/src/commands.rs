//! `run` and `sweep`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use critles::diagnostics::{alpha_sweep, summarize_sweep, ConvergenceRecord, SweepOutcome};

use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{Manifest, Status};
use crate::runner::{execute, into_solver_error, Inputs};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Worker threads; `None` leaves the thread pool at its default size.
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Loads a config (or manifest) and applies the command-line overrides.
pub fn prepare(path: &Path, opts: &Options) -> CliResult<RunConfig> {
    let mut cfg = config::load(path)?;
    if let Some(seed) = opts.seed {
        cfg.override_seed(seed);
    }
    if let Some(dir) = &opts.output_dir {
        cfg.output.directory = if dir.is_absolute() {
            dir.clone()
        } else {
            std::env::current_dir()
                .map_err(|e| CliError::io("current directory", e))?
                .join(dir)
        };
    }
    Ok(cfg)
}

fn make_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))
}

/// Executes one run and writes its manifest. Returns the final status; blow-ups are
/// reported through the status, config and I/O problems through `Err`.
pub fn cmd_run(path: &Path, opts: &Options) -> CliResult<Manifest> {
    let cfg = prepare(path, opts)?;
    let inputs = Inputs::build(&cfg, path)?;
    let dir = cfg.output.directory.clone();
    make_dir(&dir)?;

    let start = Instant::now();
    let outcome = execute(&cfg, &inputs, &dir)?;
    let mut manifest = Manifest::new("run", cfg, rayon::current_num_threads());
    manifest.status = outcome.status;
    manifest.message = outcome.message;
    manifest.steps_completed = outcome.steps_completed;
    manifest.final_time = outcome.final_time;
    manifest.outputs = outcome.outputs;
    manifest.outputs.push("manifest.json".into());
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(manifest)
}

fn member_dir(root: &Path, alpha: f64) -> PathBuf {
    root.join(format!("alpha-{alpha}"))
}

/// Reference run at `alpha = 0`, then one run per configured alpha, each in its own
/// subdirectory; writes `sweep.csv` and the manifest.
pub fn cmd_sweep(path: &Path, opts: &Options) -> CliResult<Manifest> {
    let cfg = prepare(path, opts)?;
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::config(path, Some("sweep"), "sweep needs a `sweep` section"))?;
    let with_alpha = |alpha: f64| {
        let mut c = cfg.clone();
        c.filter.alpha = alpha;
        c
    };
    // every member differs from the reference only in alpha; build them all first so
    // a bad input fails before any compute
    let reference_cfg = with_alpha(0.0);
    let reference_inputs = Inputs::build(&reference_cfg, path)?;
    for &alpha in &spec.alphas {
        Inputs::build(&with_alpha(alpha), path)?;
    }

    let root = cfg.output.directory.clone();
    make_dir(&root)?;
    let workers = opts.workers.unwrap_or(1).max(1);
    let start = Instant::now();
    let mut manifest = Manifest::new("sweep", cfg.clone(), workers);

    let reference = execute(&reference_cfg, &reference_inputs, &root.join("reference"))?;
    manifest.steps_completed = reference.steps_completed;
    manifest.final_time = reference.final_time;
    manifest
        .outputs
        .extend(reference.outputs.iter().map(|o| format!("reference/{o}")));
    if reference.status != Status::Completed {
        manifest.status = Status::Failed;
        manifest.message = Some(format!(
            "reference run failed: {}",
            reference.message.unwrap_or_default()
        ));
        manifest.wall_seconds = start.elapsed().as_secs_f64();
        manifest.outputs.push("manifest.json".into());
        manifest.write(&root)?;
        return Ok(manifest);
    }
    let reference_outcome = SweepOutcome {
        fields: reference.fields,
    };

    let records = alpha_sweep(
        &spec.alphas,
        &reference_outcome,
        &spec.lp,
        workers,
        |alpha| {
            let member_cfg = with_alpha(alpha);
            let dir = member_dir(&root, alpha);
            let out = Inputs::build(&member_cfg, path)
                .and_then(|inputs| execute(&member_cfg, &inputs, &dir))
                .map_err(into_solver_error)?;
            match out.failure {
                Some(e) => Err(e),
                None => Ok(SweepOutcome { fields: out.fields }),
            }
        },
    )?;

    let fields: Vec<String> = reference_outcome
        .fields
        .iter()
        .map(|(n, _)| n.clone())
        .collect();
    write_sweep_csv(&root.join("sweep.csv"), &records, &fields, &spec.lp)?;
    for &alpha in &spec.alphas {
        manifest.outputs.push(format!("alpha-{alpha}/"));
    }
    manifest.outputs.push("sweep.csv".into());
    manifest.outputs.push("manifest.json".into());

    let complete = records.iter().all(|r| r.failure.is_none());
    manifest.status = if complete {
        Status::Completed
    } else {
        Status::Partial
    };
    let summaries: Vec<_> = fields
        .iter()
        .map(|f| summarize_sweep(&records, f))
        .collect();
    manifest.sweep = Some(serde_json::json!({
        "alphas": spec.alphas,
        "lp": spec.lp,
        "records": records,
        "summary": summaries,
    }));
    if !complete {
        manifest.message = Some(
            records
                .iter()
                .filter_map(|r| {
                    r.failure
                        .as_ref()
                        .map(|f| format!("alpha {}: {f}", r.alpha))
                })
                .collect::<Vec<_>>()
                .join("; "),
        );
    }
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.write(&root)?;
    Ok(manifest)
}

/// One row per alpha: status, then `<field>_l2` (spectral) and `<field>_lp<p>` (quadrature)
/// for each field.
fn write_sweep_csv(
    path: &Path,
    records: &[ConvergenceRecord],
    fields: &[String],
    lp: &[f64],
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["alpha".to_string(), "status".to_string()];
    for f in fields {
        header.push(format!("{f}_l2"));
        header.extend(lp.iter().map(|p| format!("{f}_lp{p}")));
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.alpha.to_string()];
        row.push(match &r.failure {
            None => "completed".into(),
            Some(msg) => format!("failed: {msg}"),
        });
        for f in fields {
            let norms = r.error(f);
            row.push(norms.map_or(String::new(), |n| n.l2.to_string()));
            for &p in lp {
                row.push(
                    norms
                        .and_then(|n| n.lp(p))
                        .map_or(String::new(), |v| v.to_string()),
                );
            }
        }
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Plain-text sweep summary for the terminal.
pub fn sweep_report(manifest: &Manifest) -> String {
    let Some(sweep) = &manifest.sweep else {
        return manifest.message.clone().unwrap_or_default();
    };
    let mut out = String::new();
    if let Some(records) = sweep["records"].as_array() {
        for r in records {
            let errors: Vec<String> = r["errors"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|e| {
                    format!(
                        "{} {:.4e}",
                        e["field"].as_str().unwrap_or("?"),
                        e["norms"]["l2"].as_f64().unwrap_or(f64::NAN)
                    )
                })
                .collect();
            let status = r["failure"]
                .as_str()
                .map_or("ok".to_string(), |f| format!("FAILED ({f})"));
            out.push_str(&format!(
                "alpha {:<8} {:<10} {}\n",
                r["alpha"],
                status,
                errors.join("  ")
            ));
        }
    }
    if let Some(summary) = sweep["summary"].as_array() {
        for s in summary {
            out.push_str(&format!(
                "{:<9} strictly decreasing: {:<5} log-log slope: {}\n",
                s["field"].as_str().unwrap_or("?"),
                s["strictly_decreasing"],
                s["slope"]
                    .as_f64()
                    .map_or("n/a".into(), |v| format!("{v:.3}")),
            ));
        }
    }
    out
}
