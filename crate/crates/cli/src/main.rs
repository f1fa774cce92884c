use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use treequipart::exec::Execution;
use treequipart::lab::verify::{run_suite, Suite};
use treequipart::lab::{
    render, run_decomposition, run_maximal, run_psi_decay, run_smb, BoundarySource, CsvTable,
    DecompositionSpec, ExperimentSpec, MaximalSpec, ModelRef, OutputFormat, PsiSpec,
};

#[derive(Parser)]
#[command(
    name = "treequipart",
    version,
    about = "Entropy equipartition experiments on regular trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Run replicas on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Output {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalized information along the set sequence of an experiment spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Exhaustive invariant suites.
    Verify {
        /// group, partition, automorphism, process or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Psi-mixing coefficients, decay fit and Følner block pairs.
    Psi {
        #[arg(long, required_unless_present = "model")]
        spec: Option<PathBuf>,
        #[arg(long, conflicts_with = "spec")]
        model: Option<PathBuf>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        block_n_max: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Block decomposition identity and block-sum gap on metric spheres.
    Decompose {
        #[arg(long, required_unless_present = "model")]
        spec: Option<PathBuf>,
        #[arg(long, conflicts_with = "spec")]
        model: Option<PathBuf>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Tail of the supremum of normalized information over horoballs.
    Maximal {
        #[arg(long, required_unless_present = "model")]
        spec: Option<PathBuf>,
        #[arg(long, conflicts_with = "spec")]
        model: Option<PathBuf>,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fixed boundary prefix instead of a Patterson-Sullivan draw.
        #[arg(long)]
        prefix: Option<String>,
        #[command(flatten)]
        output: Output,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Loads a spec file, or builds a default spec around a model file.
fn load_spec<T: serde::de::DeserializeOwned>(
    spec: &Option<PathBuf>,
    model: &Option<PathBuf>,
    default: impl FnOnce(ModelRef) -> T,
) -> Result<(T, Option<PathBuf>)> {
    match (spec, model) {
        (Some(path), _) => Ok((read_json(path)?, path.parent().map(Path::to_path_buf))),
        (None, Some(path)) => Ok((default(ModelRef::File(path.clone())), None)),
        (None, None) => bail!("pass --spec or --model"),
    }
}

fn emit<R: serde::Serialize + CsvTable>(
    report: &R,
    output: &Output,
    fallback: Option<(&Path, OutputFormat)>,
) -> Result<()> {
    let format = output.format.or(fallback.map(|f| f.1)).unwrap_or_default();
    let bytes = render(report, format)?;
    match output.out.as_deref().or(fallback.map(|f| f.0)) {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { spec, seed, output } => {
            let mut s = ExperimentSpec::from_path(&spec)
                .with_context(|| format!("loading spec {}", spec.display()))?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(format) = output.format {
                s.format = format;
            }
            if let Some(out) = &output.out {
                s.output = Some(out.clone());
            }
            let model = s.model.load(spec.parent())?;
            s.model = ModelRef::Inline(model.clone());
            let report = run_smb(&s, &model, output.execution())?;
            for row in &report.rows {
                eprintln!(
                    "{:<15} n={:<2} |F|={:<6} mean={:.6} sd={:.6} se={:.6}",
                    row.mode.name(),
                    row.n,
                    row.set_size,
                    row.mean,
                    row.sd,
                    row.se
                );
            }
            if let Some(c) = &report.comparison {
                eprintln!(
                    "h at n={}: horoball {:.6} ± {:.6}, sphere {:.6} ± {:.6}, difference {:.6} ({} 3 combined SE)",
                    c.n,
                    c.horoball_h,
                    c.horoball_se,
                    c.sphere_h,
                    c.sphere_se,
                    c.difference,
                    if c.within_3_sigma { "within" } else { "beyond" }
                );
            }
            eprintln!("wall time {:.3} s", report.wall_time.as_secs_f64());
            let target = match (&output.out, &s.output, spec.parent()) {
                (None, Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
                _ => s.output.clone(),
            };
            emit(&report, &output, target.as_deref().map(|p| (p, s.format)))?;
            Ok(true)
        }
        Command::Verify { suite, seed } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse()?]
            };
            let mut ok = true;
            for suite in suites {
                let report = run_suite(suite, seed)?;
                for c in &report.checks {
                    println!(
                        "{} {}: {} ({})",
                        if c.passed { "PASS" } else { "FAIL" },
                        suite.name(),
                        c.name,
                        c.detail
                    );
                }
                ok &= report.passed();
            }
            Ok(ok)
        }
        Command::Psi {
            spec,
            model,
            k_max,
            block_n_max,
            output,
        } => {
            let (mut s, base) = load_spec(&spec, &model, |model| PsiSpec {
                model,
                k_max: 6,
                block_n_max: 2,
                orientation: Default::default(),
            })?;
            s.k_max = k_max.unwrap_or(s.k_max);
            s.block_n_max = block_n_max.unwrap_or(s.block_n_max);
            let model = s.model.load(base.as_deref())?;
            let report = run_psi_decay(&s, &model)?;
            match &report.fit {
                Some(f) => eprintln!(
                    "lambda = {:.6}, C = {:.6}, threshold 2 log(d-1) = {:.6}: {}",
                    f.lambda,
                    f.c,
                    f.threshold,
                    if f.exceeds_threshold {
                        "exceeded"
                    } else {
                        "not exceeded"
                    }
                ),
                None if report.trivially_zero => eprintln!("all coefficients are zero"),
                None => eprintln!("no decay fit"),
            }
            emit(&report, &output, None)?;
            Ok(report.passed())
        }
        Command::Decompose {
            spec,
            model,
            n_max,
            replicas,
            seed,
            output,
        } => {
            let (mut s, base) = load_spec(&spec, &model, |model| DecompositionSpec {
                model,
                n_max: 3,
                replicas: 100,
                seed: 0,
                fit: None,
                k_max: 6,
                orientation: Default::default(),
            })?;
            s.n_max = n_max.unwrap_or(s.n_max);
            s.replicas = replicas.unwrap_or(s.replicas);
            s.seed = seed.unwrap_or(s.seed);
            let model = s.model.load(base.as_deref())?;
            let report = run_decomposition(&s, &model, output.execution())?;
            eprintln!(
                "lambda = {:.6}, C = {:.6}, max identity error {:e}",
                report.lambda, report.c, report.max_identity_error
            );
            for (n, gap) in &report.mean_gap {
                eprintln!("n={n}: mean gap {gap:.6e}");
            }
            emit(&report, &output, None)?;
            Ok(report.passed())
        }
        Command::Maximal {
            spec,
            model,
            n_max,
            replicas,
            seed,
            prefix,
            output,
        } => {
            let (mut s, base) = load_spec(&spec, &model, |model| MaximalSpec {
                model,
                n_range: [1, 3],
                replicas: 10_000,
                seed: 0,
                boundary: BoundarySource::PattersonSullivan,
                grid: Default::default(),
                orientation: Default::default(),
            })?;
            if let Some(n) = n_max {
                s.n_range[1] = n;
            }
            s.replicas = replicas.unwrap_or(s.replicas);
            s.seed = seed.unwrap_or(s.seed);
            if let Some(prefix) = prefix {
                s.boundary = BoundarySource::Fixed { prefix };
            }
            let model = s.model.load(base.as_deref())?;
            let report = run_maximal(&s, &model, output.execution())?;
            eprintln!(
                "r0 = {:.6}, violations {}, integral {:.6} ± {:.6} vs C = {:.6}",
                report.r0_analytic,
                report.violations,
                report.integral_estimate,
                report.integral_se,
                report.constant_c
            );
            emit(&report, &output, None)?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
