use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use parity_core::alignment::{
    gal_gaussian_coord_log, gal_gaussian_total_log, gal_mc_with, gal_perturbed_exact, junk_flow_run, GalCoord,
    GalLayer, GaussianGalQuery, NetworkSpec, PerturbedGalQuery,
};
use parity_core::exactcomb::{delta, DeltaQuery};
use parity_core::nets::{BiasLayout, TargetSpec};
use parity_lab::config::parse_config;
use parity_lab::specs::{ActCfg, InitCfg, LossCfg};
use parity_lab::{classify, report, runner, LabError};

#[derive(Parser)]
#[command(name = "parity-lab", version, about = "Parity-learning experiments and exact alignment calculators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussian,
    Perturbed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a JSON experiment config; writes records.csv and manifest.json.
    Run { config: PathBuf },
    /// Summarize records.csv in a run directory.
    Report { dir: PathBuf },
    /// Exact Δ for the `d−a` prefix parity.
    Delta {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        a: usize,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        /// relu, threshold or clipped_relu:c
        #[arg(long, default_value = "relu")]
        act: ActCfg,
    },
    /// Exact gradient alignment.
    GalExact {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        d: usize,
        /// Gaussian: co-degree of the target.
        #[arg(long, default_value_t = 0)]
        a: usize,
        /// Gaussian: bias standard deviation.
        #[arg(long, default_value_t = 0.0)]
        sigma_b: f64,
        /// Gaussian: hidden width.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Gaussian: total, bias, output or hidden:j.
        #[arg(long, default_value = "total")]
        coord: String,
        /// Perturbed: Rademacher weight of the neuron.
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Perturbed: hidden or output.
        #[arg(long, default_value = "hidden")]
        layer: String,
        /// Print the natural log instead of the value.
        #[arg(long)]
        log: bool,
    },
    /// Monte-Carlo alignment of the single neuron σ(w·x) against the full parity.
    GalMc {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "relu")]
        act: ActCfg,
        #[arg(long, default_value = "gaussian")]
        init: InitCfg,
        #[arg(long, default_value = "hinge")]
        loss: LossCfg,
        #[arg(long, default_value_t = 200)]
        n_theta: usize,
        #[arg(long, default_value_t = 2000)]
        n_inner: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Junk-flow steps applied to each draw first.
        #[arg(long, default_value_t = 0)]
        junk_steps: usize,
        #[arg(long, default_value_t = 1.0)]
        junk_gamma: f64,
        #[arg(long, default_value_t = 1000)]
        junk_batch: usize,
    },
}

fn parse_coord(s: &str) -> Result<Option<GalCoord>, LabError> {
    match s {
        "total" => Ok(None),
        "bias" => Ok(Some(GalCoord::Bias)),
        "output" => Ok(Some(GalCoord::Output)),
        _ => s
            .strip_prefix("hidden:")
            .and_then(|j| j.parse().ok())
            .map(|j| Some(GalCoord::Hidden(j)))
            .ok_or_else(|| LabError::Config(format!("bad --coord {s:?}; expected total, bias, output or hidden:j"))),
    }
}

fn main_inner(cli: Cli) -> Result<(), LabError> {
    match cli.cmd {
        Cmd::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| LabError::Config(format!("{}: {e}", config.display())))?;
            let cfg = parse_config(&text, &config.display().to_string())?;
            let s = runner::run(&cfg)?;
            println!("jobs={}", s.jobs);
            println!("records={}", s.records);
            println!("output_dir={}", cfg.output_dir.display());
        }
        Cmd::Report { dir } => print!("{}", report::report(&dir)?),
        Cmd::Delta { d, a, b, act } => {
            let v = delta(&DeltaQuery::new(d, a, b, act.to_core())).map_err(classify)?;
            println!("delta={v:e}");
        }
        Cmd::GalExact { kind, d, a, sigma_b, n, coord, mu, layer, log } => {
            let v = match kind {
                Kind::Gaussian => {
                    let q = GaussianGalQuery { d, a, sigma_b, n };
                    match parse_coord(&coord)? {
                        None => gal_gaussian_total_log(&q),
                        Some(c) => gal_gaussian_coord_log(&q, c),
                    }
                    .map_err(classify)?
                }
                Kind::Perturbed => {
                    let l = match layer.as_str() {
                        "hidden" => GalLayer::Hidden,
                        "output" => GalLayer::Output,
                        _ => return Err(LabError::Config(format!("bad --layer {layer:?}; expected hidden or output"))),
                    };
                    let v = gal_perturbed_exact(&PerturbedGalQuery { d, mu }, l).map_err(classify)?;
                    parity_core::exactcomb::LogValue::from_f64(v)
                }
            };
            if log {
                println!("ln_value={:e}", v.ln_abs);
            } else {
                println!("value={:e}", v.to_f64());
            }
        }
        Cmd::GalMc { d, act, init, loss, n_theta, n_inner, seed, junk_steps, junk_gamma, junk_batch } => {
            let spec = NetworkSpec { dims: vec![d, 1, 1], act: act.to_core(), bias: BiasLayout::None, fixed_output: Some(1.0) };
            let (init, loss) = (init.to_core(), loss.to_core());
            init.validate().map_err(classify)?;
            let mut draw = 0u64;
            let r = gal_mc_with(
                |rng| {
                    let net = spec.sample(&init, rng)?;
                    draw += 1;
                    if junk_steps == 0 {
                        return Ok(net);
                    }
                    junk_flow_run(&net, &loss, junk_gamma, 0.0, junk_steps, junk_batch, seed ^ draw.wrapping_mul(0x9e37_79b9_7f4a_7c15))
                },
                &loss,
                &TargetSpec::prefix_parity(d.max(1)),
                n_theta,
                n_inner,
                seed,
            )
            .map_err(classify)?;
            println!("value={:e}", r.value);
            println!("se={:e}", r.std_err);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("parity-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
