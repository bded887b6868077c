//! Command line front end: run a configured selection pipeline and emit
//! artifacts, or re-verify a finished run.
//!
//! Exit codes: 0 clean, 2 configuration error, 3 stage audit or
//! certificate failure, 1 anything else (missing files, I/O).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use apxsel::config::{load_config, RunConfig};
use apxsel::pipeline::{run_pipeline, sample_grid, Variant};
use apxsel::report::{parse_samples_csv, variant_name, write_artifacts};
use apxsel::Error;

#[derive(Parser)]
#[command(name = "apxsel", about = "Certified approximate selections of set-valued mappings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Construction variant: uv_infty or uv_omega.
    #[arg(long)]
    variant: Option<String>,
    /// Verification sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory (overrides run.out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build, certify and export a selection for a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
    /// Re-certify the stored artifacts of a previous run.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
}

fn apply_overrides(cfg: &mut RunConfig, over: &Overrides) -> Result<(), Error> {
    if let Some(v) = &over.variant {
        cfg.scenario.variant = match v.as_str() {
            "uv_infty" => Variant::UvInfty,
            "uv_omega" => Variant::UvOmega,
            other => return Err(Error::Config(format!("unknown variant {other}"))),
        };
    }
    if let Some(n) = over.samples {
        cfg.scenario.samples = n;
    }
    if let Some(out) = &over.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = over.seed {
        cfg.scenario.seed = seed;
    }
    Ok(())
}

fn run(config: &PathBuf, over: &Overrides) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    apply_overrides(&mut cfg, over)?;
    let start = Instant::now();
    let res = run_pipeline(&cfg.scenario)?;
    let elapsed = start.elapsed();
    write_artifacts(&res, &cfg.scenario, &cfg.out_dir)?;
    // Timings are kept out of report.json so reports stay byte-identical
    // across repeated runs.
    std::fs::write(
        cfg.out_dir.join("timings.txt"),
        format!("pipeline_seconds={:.3}\n", elapsed.as_secs_f64()),
    )?;
    println!(
        "{} [{}]: {} samples, min margin {:.6}, containment slack {:.3e}, {:.2}s",
        cfg.scenario.name,
        variant_name(res.variant),
        res.report.records.len(),
        res.report.min_margin,
        res.containment_slack,
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn verify(config: &PathBuf, over: &Overrides) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    apply_overrides(&mut cfg, over)?;
    let csv_path = cfg.out_dir.join("samples.csv");
    if !cfg.out_dir.join("report.json").exists() || !csv_path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("run artifacts not found in {}", cfg.out_dir.display()),
        )));
    }
    let stored = parse_samples_csv(&std::fs::read_to_string(&csv_path)?)?;

    // Rebuild the selection deterministically and check the stored rows
    // against it, then re-certify on the (possibly denser) sample grid.
    let res = run_pipeline(&cfg.scenario)?;
    for (i, r) in stored.iter().enumerate() {
        let fx = res.selection.eval_batch(std::slice::from_ref(&r.x))?.remove(0);
        let dist = cfg.scenario.map.eval(&r.x).dist_point(&fx);
        if fx.dist(&r.fx) > 1e-9 || (dist - r.dist).abs() > 1e-9 {
            return Err(Error::Verification(format!(
                "stored sample {i} disagrees with the rebuilt selection"
            )));
        }
        if r.dist >= r.eps {
            return Err(Error::Verification(format!(
                "stored sample {i} violates its tolerance"
            )));
        }
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.scenario.seed.wrapping_add(1));
    let grid = sample_grid(&cfg.scenario.domain, cfg.scenario.samples, &mut rng);
    let fx = res.selection.eval_batch(&grid)?;
    let mut min_margin = f64::INFINITY;
    for (x, fx) in grid.iter().zip(&fx) {
        let margin = cfg.scenario.eps.eval(x) - cfg.scenario.map.eval(x).dist_point(fx);
        min_margin = min_margin.min(margin);
    }
    if min_margin <= 0.0 {
        return Err(Error::Verification(format!(
            "re-verification grid violates the tolerance, min margin {min_margin:e}"
        )));
    }
    println!(
        "{}: {} stored and {} fresh samples clean, min margin {min_margin:.6}",
        cfg.scenario.name,
        stored.len(),
        grid.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, over } => run(config, over),
        Command::Verify { config, over } => verify(config, over),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(
            e @ (Error::AuditFailure { .. }
            | Error::Verification(_)
            | Error::SubdivisionBudget { .. }
            | Error::RadiusUnderflow(_)),
        ) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
