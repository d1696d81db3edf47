//! Command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use hyprl_cli::config::RunConfig;
use hyprl_cli::runner;
use hyprl_core::grid::{read_field_raw, write_field, FieldGrid, ScalarField};
use hyprl_core::initdata;
use hyprl_core::monitor::Verdict;
use hyprl_core::norms::{gevrey_space_norm, NormCaps};
use hyprl_core::verifier::{self, Fraction};

#[derive(Parser)]
#[command(name = "hyprl", about = "Spectral laboratory for a quasi-linear hyperbolic boundary-layer system")]
struct Cli {
    /// Worker threads for verifier sweeps (also HYPRL_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a monitored simulation into a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate initial-data field files from a config.
    GenIc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gevrey-space norm of a stored field.
    GevreyNorm {
        field: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 12)]
        mmax: usize,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long, default_value_t = 1e-6)]
        tail_tol: f64,
    },
    /// Certify the appendix inequalities over finite ranges.
    VerifyAppendix {
        /// Comma-separated ids (fe1..fe6, fe10, laetimate, young, subadd) or "all".
        #[arg(long, default_value = "all")]
        ids: String,
        #[arg(long, default_value_t = 200)]
        max_m: usize,
        #[arg(long, default_value_t = 120)]
        max_mk: usize,
        /// Rational radius as "num/den".
        #[arg(long, default_value = "1/2")]
        rho: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-analyze a finished run directory offline.
    CheckApriori {
        run_dir: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Max pointwise field discrepancy between two run directories.
    Diff {
        dir_a: PathBuf,
        dir_b: PathBuf,
    },
}

fn verdict_code(v: Verdict) -> ExitCode {
    match v {
        Verdict::Holds | Verdict::Inconclusive => ExitCode::SUCCESS,
        Verdict::ViolatedAt(_) => ExitCode::from(2),
        Verdict::BlowupAt(_) => ExitCode::from(3),
    }
}

fn parse_rho(text: &str) -> anyhow::Result<Fraction> {
    let (n, d) = text
        .split_once('/')
        .with_context(|| format!("rho must look like num/den, got {text:?}"))?;
    Ok(Fraction::ratio(n.trim().parse()?, d.trim().parse()?))
}

fn cmd_simulate(config: &PathBuf, out: &PathBuf) -> anyhow::Result<ExitCode> {
    let config = RunConfig::load(config)?;
    if out.exists() {
        bail!("output directory {} already exists", out.display());
    }
    let verdict = runner::simulate_to_dir(&config, out)?;
    println!("verdict: {}", serde_json::to_string(&verdict)?);
    println!("run directory: {}", out.display());
    Ok(verdict_code(verdict))
}

fn cmd_gen_ic(config: &PathBuf, out: &PathBuf) -> anyhow::Result<()> {
    let config = RunConfig::load(config)?;
    let grid = FieldGrid::new(config.grid.nx, config.grid.ny, config.grid.ymax, config.model.ell)?;
    std::fs::create_dir_all(out)?;
    for (name, spec) in [("u0", &config.u0), ("u1", &config.u1)] {
        let field = initdata::generate(spec, &grid)?;
        write_field(&out.join(format!("{name}.bin")), &field, 0.0)?;
    }
    println!("wrote u0.bin, u1.bin to {}", out.display());
    Ok(())
}

fn cmd_gevrey_norm(
    path: &PathBuf,
    rho: f64,
    mmax: usize,
    kmax: usize,
    tail_tol: f64,
) -> anyhow::Result<()> {
    let (header, values) = read_field_raw(path)?;
    let grid = FieldGrid::new(header.nx, header.ny, header.ymax, header.ell)?;
    let field = ScalarField::from_values(&grid, values)?;
    let caps = NormCaps { mmax, kmax, tail_tol };
    let norm = gevrey_space_norm(&field, rho, grid.ell, &caps)?;
    println!("{}", serde_json::to_string_pretty(&norm)?);
    Ok(())
}

fn cmd_verify_appendix(
    ids: &str,
    max_m: usize,
    max_mk: usize,
    rho_text: &str,
    out: Option<&PathBuf>,
    workers: usize,
) -> anyhow::Result<()> {
    let rho = parse_rho(rho_text)?;
    let wanted: Vec<String> = if ids == "all" {
        ["fe1", "fe2", "fe3", "fe4", "fe5", "fe6", "fe10", "laetimate", "young", "subadd"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        ids.split(',').map(|s| s.trim().to_lowercase()).collect()
    };

    // one task per id, drained by a small worker pool
    let tasks: Vec<(String, Fraction)> =
        wanted.iter().map(|id| (id.clone(), rho.clone())).collect();
    let next = std::sync::Arc::new(std::sync::atomic::AtomicUsize::new(0));
    let results = std::sync::Arc::new(std::sync::Mutex::new(serde_json::Map::new()));
    std::thread::scope(|scope| -> anyhow::Result<()> {
        let mut handles = Vec::new();
        for _ in 0..workers.max(1).min(tasks.len().max(1)) {
            let next = next.clone();
            let results = results.clone();
            let tasks = &tasks;
            handles.push(scope.spawn(move || -> anyhow::Result<()> {
                loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= tasks.len() {
                        return Ok(());
                    }
                    let (id, rho) = &tasks[i];
                    let started = std::time::Instant::now();
                    let mut value = match id.as_str() {
                        "fe1" => serde_json::to_value(verifier::verify_fe1(max_m, rho)?)?,
                        "fe2" => serde_json::to_value(verifier::verify_fe2(max_m, rho)?)?,
                        "fe3" => serde_json::to_value(verifier::verify_fe3(max_m, rho)?)?,
                        "fe4" => serde_json::to_value(verifier::verify_fe4(max_m, rho)?)?,
                        "fe5" => serde_json::to_value(verifier::verify_fe5(max_m, rho)?)?,
                        "fe6" => serde_json::to_value(verifier::verify_fe6(max_m, rho)?)?,
                        "fe10" => serde_json::to_value(verifier::verify_fe10(max_mk, rho)?)?,
                        "laetimate" => {
                            serde_json::to_value(verifier::verify_laetimate(max_mk, rho)?)?
                        }
                        "young" => {
                            serde_json::to_value(verifier::verify_young_dis(10_000, 16, 42))?
                        }
                        "subadd" => serde_json::json!({
                            "pass": verifier::verify_factorial_subadditivity(60)
                        }),
                        other => bail!("unknown inequality id {other:?}"),
                    };
                    if let Some(obj) = value.as_object_mut() {
                        obj.insert(
                            "wall_seconds".into(),
                            serde_json::json!(started.elapsed().as_secs_f64()),
                        );
                    }
                    results.lock().unwrap().insert(id.clone(), value);
                }
            }));
        }
        for h in handles {
            h.join().expect("worker panicked")?;
        }
        Ok(())
    })?;

    let map = std::sync::Arc::try_unwrap(results).unwrap().into_inner().unwrap();
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    match out {
        Some(path) => std::fs::write(path, &text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_check_apriori(run_dir: &PathBuf, mu: Option<f64>) -> anyhow::Result<ExitCode> {
    let summary = runner::reanalyze(run_dir, mu)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(verdict_code(summary.verdict.verdict))
}

fn cmd_diff(dir_a: &PathBuf, dir_b: &PathBuf) -> anyhow::Result<()> {
    let fields_a = dir_a.join("fields");
    let mut names: Vec<String> = std::fs::read_dir(&fields_a)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".bin"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("no field dumps under {}", fields_a.display());
    }
    let mut worst = (0.0f64, String::new());
    for name in &names {
        let pb = dir_b.join("fields").join(name);
        if !pb.exists() {
            println!("{name}: missing in {}", dir_b.display());
            continue;
        }
        let (ha, va) = read_field_raw(&fields_a.join(name))?;
        let (hb, vb) = read_field_raw(&pb)?;
        if ha.nx != hb.nx || ha.ny != hb.ny {
            bail!("{name}: grid mismatch {}x{} vs {}x{}", ha.nx, ha.ny, hb.nx, hb.ny);
        }
        let d = va
            .iter()
            .zip(vb.iter())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        println!("{name}: max |a-b| = {d:e}");
        if d > worst.0 {
            worst = (d, name.clone());
        }
    }
    println!("worst: {} at {}", worst.0, worst.1);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| std::env::var("HYPRL_WORKERS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(1);
    let result = match &cli.command {
        Command::Simulate { config, out } => cmd_simulate(config, out),
        Command::GenIc { config, out } => cmd_gen_ic(config, out).map(|_| ExitCode::SUCCESS),
        Command::GevreyNorm { field, rho, mmax, kmax, tail_tol } => {
            cmd_gevrey_norm(field, *rho, *mmax, *kmax, *tail_tol).map(|_| ExitCode::SUCCESS)
        }
        Command::VerifyAppendix { ids, max_m, max_mk, rho, out } => {
            cmd_verify_appendix(ids, *max_m, *max_mk, rho, out.as_ref(), workers)
                .map(|_| ExitCode::SUCCESS)
        }
        Command::CheckApriori { run_dir, mu } => cmd_check_apriori(run_dir, *mu),
        Command::Diff { dir_a, dir_b } => cmd_diff(dir_a, dir_b).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
