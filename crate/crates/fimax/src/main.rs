//! Command-line front end: batch sampling, integration, process simulation
//! and the verification suite, driven by one JSON configuration document.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fimax::config::RunConfig;
use fimax::error::Error;
use fimax::exec::replicate;
use fimax::integral::{
    cumulative_kernels, integrate, simulate_process, truncation_region, Backend,
    IntegrateControls,
};
use fimax::laws::{FrechetLaw, ImplicitFrechetLaw};
use fimax::measure::{lalpha_gap, monotone_approximation, Integrand};
use fimax::output;
use fimax::rng::substream;
use fimax::supmeasure::SeriesRealization;
use fimax::verify::{all_pass, reports_to_csv, run_suite, summary, SuiteOptions};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fimax",
    about = "Simulation and verification of implicit-max extremal integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV/SVG files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker thread count (0 or omitted: library default).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw implicit Fréchet samples and plot their loss-value CDF.
    Sample,
    /// Monte Carlo replications of the extremal integral of the configured
    /// integrand.
    Integrate,
    /// Simulate paths of the cumulative implicit max-stable process at the
    /// configured time points.
    Process,
    /// Run the statistical verification suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        if jobs > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.jobs;

    let mut config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }

    let outcome = match cli.command {
        Command::Sample => cmd_sample(&config, &cli.out),
        Command::Integrate => cmd_integrate(&config, &cli.out),
        Command::Process => cmd_process(&config, &cli.out),
        Command::Verify => cmd_verify(&config, &cli.out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load_config(path: Option<&Path>) -> fimax::Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_json(&text)
        }
    }
}

fn cmd_sample(config: &RunConfig, out: &Path) -> fimax::Result<u8> {
    let spec = config.build_spec()?;
    let law = ImplicitFrechetLaw::new(config.alpha, config.sigma, spec.kappa().clone())?;
    let loss = spec.loss().clone();
    let rows: Vec<(usize, fimax::algebra::Point, f64)> = replicate(config.replications, |i| {
        let mut rng = substream(config.seed, i as u64);
        let y = law.sample(&mut rng);
        let f = loss.evaluate(&y);
        (i, y, f)
    });
    let d = loss.dimension();
    std::fs::write(out.join("sample.csv"), output::sample_csv(&rows, d))?;
    let f_values: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let radial = FrechetLaw::new(config.alpha, config.sigma)?;
    std::fs::write(
        out.join("sample_cdf.svg"),
        output::cdf_overlay_svg(&f_values, |x| radial.cdf(x)),
    )?;
    println!(
        "wrote {} samples to {}",
        config.replications,
        out.join("sample.csv").display()
    );
    Ok(0)
}

fn cmd_integrate(config: &RunConfig, out: &Path) -> fimax::Result<u8> {
    let spec = config.build_spec()?;
    let g = config
        .integrand
        .as_ref()
        .ok_or_else(|| Error::Config("the integrate command needs an `integrand`".into()))?
        .build()?;
    let backend = config.backend.build();
    let controls = IntegrateControls {
        epsilon_trunc: config.epsilon_trunc,
        level: config.level,
    };
    let gap = match backend {
        Backend::Series => None,
        Backend::Cells => {
            let gn = match &g {
                Integrand::Simple(_) => g.clone(),
                _ => Integrand::simple(monotone_approximation(&g, config.level)?),
            };
            Some(lalpha_gap(&gn, &g, spec.space(), spec.alpha())?)
        }
    };
    let results: Vec<fimax::Result<(usize, fimax::integral::IntegralResult)>> =
        replicate(config.replications, |i| {
            let rng = substream(config.seed, i as u64);
            Ok((i, integrate(&spec, &g, backend, &controls, rng)?))
        });
    let rows = results.into_iter().collect::<fimax::Result<Vec<_>>>()?;
    let d = spec.loss().dimension();
    std::fs::write(out.join("integrals.csv"), output::integral_csv(&rows, d, gap))?;
    if backend == Backend::Series {
        // audit dump: the atom list behind replication 0
        let (region, _) = truncation_region(&spec, &g, config.epsilon_trunc)?;
        let mut real = SeriesRealization::new(&spec, region.clone(), substream(config.seed, 0))?;
        real.series_integral(&g.restrict(&region), g.sup_bound())?;
        std::fs::write(out.join("atoms.csv"), output::atoms_csv(real.atoms(), d))?;
    }
    println!(
        "wrote {} integral replications to {}",
        config.replications,
        out.join("integrals.csv").display()
    );
    Ok(0)
}

fn cmd_process(config: &RunConfig, out: &Path) -> fimax::Result<u8> {
    let spec = config.build_spec()?;
    if config.times.is_empty() {
        return Err(Error::Config("the process command needs `times`".into()));
    }
    let mut times = config.times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let kernels = cumulative_kernels(&times)?;
    let controls = IntegrateControls {
        epsilon_trunc: config.epsilon_trunc,
        level: config.level,
    };
    type ProcessRow = (usize, f64, fimax::algebra::Point, f64);
    let paths: Vec<fimax::Result<Vec<ProcessRow>>> =
        replicate(config.replications, |i| {
            let rng = substream(config.seed, i as u64);
            let path = simulate_process(&spec, &kernels, &controls, rng)?;
            Ok(path
                .into_iter()
                .map(|(t, r)| (i, t, r.value, r.f_value))
                .collect())
        });
    let paths = paths.into_iter().collect::<fimax::Result<Vec<_>>>()?;
    let rows: Vec<(usize, f64, fimax::algebra::Point, f64)> =
        paths.iter().flatten().cloned().collect();
    let d = spec.loss().dimension();
    std::fs::write(out.join("process.csv"), output::process_csv(&rows, d))?;
    let step_paths: Vec<Vec<(f64, f64)>> = paths
        .iter()
        .take(5)
        .map(|p| p.iter().map(|(_, t, _, f)| (*t, *f)).collect())
        .collect();
    std::fs::write(
        out.join("process_steps.svg"),
        output::process_steps_svg(&step_paths),
    )?;
    println!(
        "wrote {} process paths to {}",
        config.replications,
        out.join("process.csv").display()
    );
    Ok(0)
}

fn cmd_verify(config: &RunConfig, out: &Path) -> fimax::Result<u8> {
    let options = SuiteOptions {
        n: config.replications,
        seed: config.seed,
        reference_scale_factor: config.reference_scale_factor,
    };
    let reports = run_suite(&options)?;
    std::fs::write(out.join("verify_report.csv"), reports_to_csv(&reports))?;
    let text = summary(&reports);
    std::fs::write(out.join("verify_summary.txt"), &text)?;
    print!("{text}");
    Ok(if all_pass(&reports) { 0 } else { EXIT_VERIFY })
}
