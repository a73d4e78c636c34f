//! Command-line front end: one verb per module surface.
//!
//! Exit codes: 0 on success, 2 on validation errors, 3 when a builder
//! refuses a parameter regime. `HELIX_THREADS` caps worker parallelism.

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use helix_core::balls::{grow_balls, Ball};
use helix_core::construct::{
    admissibility_report, best_branching, build_branching, build_uniform, build_vortex_array,
    scaling_s, scaling_terms, Competitor, CompetitorKind, ScalingParams,
};
use helix_core::energy::{energy, EnergyKind};
use helix_core::field::GridSpec;
use helix_core::spin::{
    build_spiral, detect_vortices, extract_angles, renormalized_energy, spin_energy, to_continuum,
    MassConvention, ModelParams, SpinField,
};
use helix_core::sweep::{
    emit, inequality_report, run_sweep, InequalityGeometry, OutputFormat, SweepConfig,
};
use helix_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "helix",
    about = "Numerical laboratory for a singularly perturbed multi-well energy with vortices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Uniform,
    Branching,
    Vortex,
}

impl KindArg {
    fn to_kind(self) -> CompetitorKind {
        match self {
            KindArg::Uniform => CompetitorKind::Uniform,
            KindArg::Branching => CompetitorKind::Branching,
            KindArg::Vortex => CompetitorKind::VortexArray,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EnergyArg {
    E1,
    E2,
    Ea,
}

impl EnergyArg {
    fn to_kind(self) -> EnergyKind {
        match self {
            EnergyArg::E1 => EnergyKind::E1,
            EnergyArg::E2 => EnergyKind::E2,
            EnergyArg::Ea => EnergyKind::EA,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpinMode {
    Spiral,
    Constant,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an energy of a built competitor over the unit square.
    Eval {
        #[arg(long, value_enum)]
        energy: EnergyArg,
        #[arg(long, value_enum)]
        construct: KindArg,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 512)]
        grid_n: usize,
        /// Branching refinement depth (defaults to the energy-optimal scan).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Build a competitor and report its admissibility and scaling data.
    Construct {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 512)]
        grid_n: usize,
        #[arg(long)]
        levels: Option<usize>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a parameter sweep from a JSON config (defaults when omitted).
    Sweep {
        #[arg(long)]
        config: Option<String>,
        /// Print the built-in default config and exit.
        #[arg(long, default_value_t = false)]
        print_default: bool,
    },
    /// Grow a family of balls to a target time.
    Balls {
        /// JSON array of {"center": [x, y], "radius": r, "charge": q}.
        #[arg(long)]
        input: String,
        #[arg(long)]
        t: f64,
    },
    /// Discrete spin model: energies and vortex report.
    Spin {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        mode: SpinMode,
        /// Also print the continuum-mapped summary.
        #[arg(long, default_value_t = false)]
        report: bool,
    },
    /// Inequality report on a constructed competitor.
    Check {
        #[arg(long, value_enum)]
        construct: KindArg,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1024)]
        grid_n: usize,
    },
}

fn build(
    kind: CompetitorKind,
    p: &ScalingParams,
    g: &GridSpec,
    levels: Option<usize>,
) -> helix_core::Result<Competitor> {
    match kind {
        CompetitorKind::Uniform => build_uniform(p, g),
        CompetitorKind::VortexArray => build_vortex_array(p, g),
        CompetitorKind::Branching => match levels {
            Some(l) => build_branching(p, g, l),
            None => best_branching(p, g),
        },
    }
}

fn run() -> anyhow::Result<()> {
    if let Ok(threads) = std::env::var("HELIX_THREADS") {
        let threads: usize = threads
            .parse()
            .context("HELIX_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Eval {
            energy: ek,
            construct,
            sigma,
            theta,
            eps,
            grid_n,
            levels,
        } => {
            let p = ScalingParams::new(sigma, theta, eps)?;
            let g = GridSpec::unit(grid_n)?;
            let c = build(construct.to_kind(), &p, &g, levels)?;
            let e = energy(ek.to_kind(), &c.field, sigma, &g.domain())?;
            println!(
                "{{\"competitor\": \"{}\", \"energy_kind\": \"{}\", \"bulk\": {:.12e}, \
                 \"regularizer\": {:.12e}, \"total\": {:.12e}, \"s_value\": {:.12e}, \
                 \"ratio\": {:.12e}, \"grid_n\": {}}}",
                c.kind,
                ek.to_kind(),
                e.bulk,
                e.regularizer,
                e.total,
                scaling_s(&p),
                e.total / scaling_s(&p),
                grid_n
            );
        }
        Command::Construct {
            kind,
            sigma,
            theta,
            eps,
            grid_n,
            levels,
            out,
        } => {
            let p = ScalingParams::new(sigma, theta, eps)?;
            let g = GridSpec::unit(grid_n)?;
            let c = build(kind.to_kind(), &p, &g, levels)?;
            let tol = c.trace_tol.max(c.curl_tol);
            let rep = admissibility_report(&c, tol);
            let terms = scaling_terms(&p);
            let body = serde_json::json!({
                "kind": c.kind.as_str(),
                "grid_n": grid_n,
                "params": {"sigma": sigma, "theta": theta, "eps": eps},
                "levels": c.levels,
                "atoms": c.measure.atoms().len(),
                "declared": {"trace_tol": c.trace_tol, "curl_tol": c.curl_tol},
                "admissibility": rep,
                "scaling_terms": terms,
                "s_value": scaling_s(&p),
            });
            let text = serde_json::to_string_pretty(&body)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, text + "\n").with_context(|| format!("writing {path}"))?
                }
                None => println!("{text}"),
            }
        }
        Command::Sweep {
            config,
            print_default,
        } => {
            if print_default {
                let cfg = SweepConfig::default_sweep("sweep.csv", OutputFormat::Csv);
                println!("{}", serde_json::to_string_pretty(&cfg)?);
                return Ok(());
            }
            let cfg: SweepConfig = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {path}"))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?
                }
                None => SweepConfig::default_sweep("sweep.csv", OutputFormat::Csv),
            };
            let out = run_sweep(&cfg)?;
            emit(&out.records, cfg.format, &cfg.output)?;
            eprintln!(
                "wrote {} records to {} ({} skipped points)",
                out.records.len(),
                cfg.output,
                out.skipped.len()
            );
            for s in &out.skipped {
                eprintln!(
                    "  skipped {} at sigma={:.6e} theta={} eps={:.6e}: {}",
                    s.competitor, s.sigma, s.theta, s.eps, s.reason
                );
            }
        }
        Command::Balls { input, t } => {
            let text =
                std::fs::read_to_string(&input).with_context(|| format!("reading {input}"))?;
            let balls: Vec<Ball> =
                serde_json::from_str(&text).with_context(|| format!("parsing {input}"))?;
            let fam = grow_balls(&balls, t)?;
            println!("{}", serde_json::to_string_pretty(&fam)?);
        }
        Command::Spin {
            alpha,
            m,
            mode,
            report,
        } => {
            let eps = 1.0 / m as f64;
            let s: SpinField = match mode {
                SpinMode::Spiral => {
                    let p = ModelParams::new(alpha, eps)?;
                    build_spiral(&p, m, 1, 1)?
                }
                SpinMode::Constant => SpinField::from_fn(m, |_, _| 0.0)?,
            };
            let f = spin_energy(&s, alpha);
            let excess = renormalized_energy(&s, alpha);
            let angles = extract_angles(&s)?;
            let vortices = detect_vortices(&angles)?;
            let mut body = serde_json::json!({
                "alpha": alpha,
                "m": m,
                "interaction_energy": f,
                "renormalized_excess": excess,
                "vortices": vortices.len(),
            });
            if report && alpha < 4.0 {
                let p = ModelParams::new(alpha, eps)?;
                let (field, sigma, mu) = to_continuum(&s, &p, MassConvention::TwoPiSigma)?;
                let mid = field.get(m / 2, m / 2);
                body["continuum"] = serde_json::json!({
                    "sigma": sigma,
                    "delta": p.delta,
                    "beta_mid": mid,
                    "measure_atoms": mu.atoms().len(),
                });
            }
            println!("{}", serde_json::to_string_pretty(&body)?);
        }
        Command::Check {
            construct,
            sigma,
            theta,
            eps,
            grid_n,
        } => {
            let p = ScalingParams::new(sigma, theta, eps)?;
            let g = GridSpec::unit(grid_n)?;
            let c = build(construct.to_kind(), &p, &g, None)?;
            let rep = inequality_report(&c.field, &c.measure, &p, &InequalityGeometry::default())?;
            let adm = admissibility_report(&c, c.trace_tol.max(c.curl_tol));
            let body = serde_json::json!({
                "kind": c.kind.as_str(),
                "admissibility": adm,
                "inequalities": rep,
            });
            println!("{}", serde_json::to_string_pretty(&body)?);
        }
    }
    Ok(())
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<CoreError>()
                .map(|e| match e {
                    CoreError::Regime(_) => 3,
                    _ => 2,
                })
                .unwrap_or(2);
            std::process::exit(code);
        }
    }
}
