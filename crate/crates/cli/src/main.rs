use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use upbw::witness::PsiSelection;
use upbw_cli::{run, Command, RunConfig};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Build,
    Validate,
    State,
    Epsilon,
    Witness,
    Map,
    Certify,
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum Psi {
    /// Ψ⁺ when it has weight on the state, else the best Bell state.
    Canonical,
    /// The generalized Bell state with the largest weight.
    Best,
}

/// Bound-entangled states, witnesses and positive maps from product bases.
#[derive(Parser)]
#[command(name = "upbw", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// pyramid | gentiles:<n> | tensor:<a>,<b> | file:<path>
    #[arg(long, default_value = "pyramid")]
    upb: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    /// Uniformly sampled product states per positivity probe.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    tol_rank: Option<f64>,
    /// Witness strength; defaults to the certified lower bound on ε.
    #[arg(long)]
    mu: Option<f64>,
    /// Minimum weight of the maximally entangled state on ρ.
    #[arg(long, default_value_t = upbw::witness::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Psi::Canonical)]
    psi: Psi,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = std::env::var("UPBW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = RunConfig {
        command: match args.command {
            Cmd::Build => Command::Build,
            Cmd::Validate => Command::Validate,
            Cmd::State => Command::State,
            Cmd::Epsilon => Command::Epsilon,
            Cmd::Witness => Command::Witness,
            Cmd::Map => Command::Map,
            Cmd::Certify => Command::Certify,
            Cmd::Report => Command::Report,
        },
        upb_spec: args.upb,
        seed: args.seed,
        restarts: args.restarts,
        iters: args.iters,
        samples: args.samples,
        tol_rank: args.tol_rank,
        mu: args.mu,
        threshold: args.threshold,
        psi: match args.psi {
            Psi::Canonical => PsiSelection::Canonical,
            Psi::Best => PsiSelection::MaxOverlap,
        },
        output: args.output.clone(),
    };
    let outcome = run(&config);
    if args.output.is_none() || outcome.code != 0 {
        print!("{}", outcome.document);
    }
    ExitCode::from(outcome.code as u8)
}
