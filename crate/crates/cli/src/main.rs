use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use eachaos::events::{estimate_probability, estimate_translate_probability, EventSpec, ProbabilityEstimate};
use eachaos::harness::acceptance::{run_suite, CRITERIA};
use eachaos::harness::output::{float, write_json, CsvTable};
use eachaos::harness::{default_event, droplet_census, run_chaos_curve, theorem_check, ExperimentConfig};

#[derive(Parser)]
#[command(name = "eachaos", version, about = "Exact disorder-chaos experiments for the Edwards-Anderson spin glass")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` experiment file; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Overlap curve over the t grid, with the theorem check.
    Chaos,
    /// Critical droplet census.
    Droplet,
    /// Event probability estimates, plain and for perturbed triples.
    Events,
    /// Exact thermal overlap curve (beta defaults to 1).
    Gibbs,
    /// Runs the acceptance suite; exit code 1 on any failure.
    Selftest,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn prepare(cfg: &ExperimentConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text())?;
    Ok(&cfg.out)
}

fn event_of(cfg: &ExperimentConfig) -> Result<EventSpec> {
    Ok(match &cfg.event {
        Some(e) => e.clone(),
        None => default_event(&*cfg.geometry()?)?,
    })
}

fn chaos(cfg: &ExperimentConfig) -> Result<()> {
    let out = prepare(cfg)?;
    let curve = run_chaos_curve(cfg)?;
    curve.table().write(&out.join("chaos_curve.csv"))?;
    let event = event_of(cfg)?;
    let report = theorem_check(
        &curve,
        &event,
        &cfg.geometry()?,
        &cfg.distribution,
        cfg.delta,
        cfg.probability_samples,
        cfg.level,
        eachaos::seed::derive_seed(cfg.seed, "probability", 0),
    )?;
    #[derive(serde::Serialize)]
    struct Bundle<'a> {
        theorem: &'a eachaos::harness::TheoremReport,
        curve: &'a eachaos::harness::ChaosCurve,
    }
    write_json(
        &Bundle {
            theorem: &report,
            curve: &curve,
        },
        &out.join("theorem_report.json"),
    )?;
    for p in &report.points {
        eprintln!(
            "t = {}: mean {:.6} ± {:.6}, {}",
            p.t,
            p.mean,
            p.stderr,
            if p.passed { "above threshold" } else { "below threshold" }
        );
    }
    Ok(())
}

fn droplet(cfg: &ExperimentConfig) -> Result<()> {
    let out = prepare(cfg)?;
    let census = droplet_census(cfg)?;
    census.table().write(&out.join("droplet_census.csv"))?;
    census.histogram_table().write(&out.join("droplet_histogram.csv"))?;
    eprintln!("{} rows, {} redraws", census.rows.len(), census.redraws.len());
    Ok(())
}

fn events(cfg: &ExperimentConfig) -> Result<()> {
    let out = prepare(cfg)?;
    let geometry = cfg.geometry()?;
    let event = event_of(cfg)?;
    let n = cfg.probability_samples;
    let seed = |label, i| eachaos::seed::derive_seed(cfg.seed, label, i);
    let mut estimates: Vec<ProbabilityEstimate> =
        vec![estimate_probability(&event, &geometry, &cfg.distribution, n, seed("plain", 0), cfg.level)?];
    if !matches!(event, EventSpec::FlexibleCage { .. }) {
        for (k, &t) in cfg.t_grid.iter().enumerate().filter(|(_, &t)| t > 0.0) {
            estimates.push(estimate_translate_probability(
                &event,
                &geometry,
                &cfg.distribution,
                &cfg.perturbation,
                t,
                n,
                seed("translate", k as u64),
                cfg.level,
            )?);
        }
    }
    let mut table = CsvTable::new(&["event", "estimate", "ci_lo", "ci_hi", "n", "seed"]);
    for e in &estimates {
        table.push(vec![
            e.event.clone(),
            float(e.estimate),
            float(e.ci_lo),
            float(e.ci_hi),
            e.n.to_string(),
            e.seed.to_string(),
        ]);
    }
    table.write(&out.join("event_probabilities.csv"))?;
    Ok(())
}

fn gibbs(cfg: &ExperimentConfig) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.beta.get_or_insert(1.0);
    cfg.validate()?;
    let out = prepare(&cfg)?;
    let curve = run_chaos_curve(&cfg)?;
    let geometry = cfg.geometry()?;
    curve.gibbs_table(&geometry).write(&out.join("gibbs_curve.csv"))?;
    curve.table().write(&out.join("gibbs_overlap.csv"))?;
    Ok(())
}

fn selftest(cli: &Cli) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let ids: Vec<u32> = CRITERIA.iter().map(|c| c.0).collect();
    let report = run_suite(&ids, seed, |o, took| {
        println!("{}", o.line());
        eprintln!("  criterion {} took {:.1} s", o.id, took.as_secs_f64());
    });
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    fs::write(out.join("selftest_report.txt"), report.to_text())?;
    write_json(&report, &out.join("selftest_report.json"))?;
    Ok(report.passed())
}

fn run(cli: &Cli) -> Result<bool> {
    let threads = match cli.threads {
        Some(0) => anyhow::bail!("--threads must be at least 1"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    match cli.command {
        Command::Selftest => return selftest(cli),
        Command::Chaos => chaos(&load(cli)?)?,
        Command::Droplet => droplet(&load(cli)?)?,
        Command::Events => events(&load(cli)?)?,
        Command::Gibbs => gibbs(&load(cli)?)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
