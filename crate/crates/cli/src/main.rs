use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lqss_core::io::{self, MatrixFile, ModelFile, NetlistFile, ReportFile, SynthSettings};
use lqss_core::static_decomp::ScheduleKind;
use lqss_core::tf::{self, VerifyOptions};
use lqss_core::LqssError;
use serde_json::json;

/// Synthesis of linear quantum stochastic systems from cavities, static
/// networks and feedback.
#[derive(Parser)]
#[command(name = "lqss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a model file into a netlist.
    Synth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// JSON array with one detuning per cavity.
        #[arg(long)]
        detuning_file: Option<PathBuf>,
        /// Interconnect coupling rates, one value or one per cavity.
        #[arg(long, value_delimiter = ',')]
        interconnect_kappa: Option<Vec<f64>>,
        /// Structure tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Relative rank cutoff for the passive SVD.
        #[arg(long, default_value_t = 1e-10)]
        rank_tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Compare a model's transfer function with a synthesized netlist.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long, default_value_t = 20)]
        freqs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also check channel ranges and schedule reconstruction.
        #[arg(long)]
        check: bool,
    },
    /// Decompose a unitary or Bogoliubov matrix into a device schedule.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Unitary,
    Bogoliubov,
}

impl From<Kind> for ScheduleKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Unitary => ScheduleKind::Unitary,
            Kind::Bogoliubov => ScheduleKind::Bogoliubov,
        }
    }
}

fn exit_code(e: &LqssError) -> u8 {
    match e {
        LqssError::Structural(_) | LqssError::Parameter(_) | LqssError::Format { .. } | LqssError::Io(_) => 2,
        LqssError::UnsupportedStructure(_) | LqssError::Degeneracy(_) => 3,
        LqssError::Numerical(_) | LqssError::Pole { .. } | LqssError::UnitEigenvalue { .. } => 4,
    }
}

fn error_object(e: &LqssError) -> serde_json::Value {
    let mut obj = json!({ "kind": e.kind(), "message": e.to_string(), "exit_code": exit_code(e) });
    match e {
        LqssError::Format { at, .. } => obj["at"] = json!(at),
        LqssError::UnitEigenvalue { eigenvalue } => obj["eigenvalue"] = json!([eigenvalue.re, eigenvalue.im]),
        LqssError::Pole { s } => obj["s"] = json!([s.re, s.im]),
        _ => {}
    }
    json!({ "error": obj })
}

fn synth(
    input: &Path,
    output: &Path,
    detuning_file: Option<&Path>,
    kappa: Option<Vec<f64>>,
    tol: f64,
    rank_tol: f64,
    seed: u64,
) -> Result<u8, LqssError> {
    let file: ModelFile = io::read_json(input)?;
    let detunings = detuning_file.map(io::read_json::<Vec<f64>>).transpose()?;
    let settings = SynthSettings { detunings, interconnect_kappas: kappa, tol, rank_tol, seed };
    let (_, net) = io::synthesize(&file, &settings)?;
    io::write_json(output, &net)?;

    println!("type: {}", serde_json::to_value(net.kind).unwrap_or_default().as_str().unwrap_or_default());
    println!("cavities: {} ({} with system ports)", net.cavities.len(), net.cavities_with_ports());
    for c in &net.provenance.classes {
        println!("class {}: {} + {}i (width {})", c.kind, c.value.re, c.value.im, c.width);
    }
    for (k, v) in &net.provenance.residuals {
        println!("residual {k}: {v:.3e}");
    }
    for (k, v) in net.device_counts() {
        println!("{k}: {v}");
    }
    if let Some(p) = &net.provenance.perturbation {
        println!("interconnect couplings perturbed by {p:?}");
    }
    Ok(0)
}

fn verify(
    model: &Path,
    netlist: &Path,
    opts: VerifyOptions,
    report: Option<&Path>,
    check: bool,
) -> Result<u8, LqssError> {
    let mf: ModelFile = io::read_json(model)?;
    let model = mf.to_model(1e-9)?;
    let net: NetlistFile = io::read_json(netlist)?;
    if net.kind != mf.kind || net.n != mf.n || net.m != mf.m {
        return Err(LqssError::Format {
            at: "netlist".into(),
            message: format!(
                "netlist is {:?} with n = {}, m = {} but the model is {:?} with n = {}, m = {}",
                net.kind, net.n, net.m, mf.kind, mf.n, mf.m
            ),
        });
    }
    if check {
        let worst = net.check(1e-8)?;
        log::info!("netlist schedules reconstruct to {worst:.3e}");
    }
    let rep = tf::verify_realization(&model, &net.realized_network()?, &opts)?;
    let pass = rep.pass;
    let max_error = rep.max_error;
    let rf = ReportFile { schema_version: io::SCHEMA_VERSION, report: rep };
    match report {
        Some(p) => io::write_json(p, &rf)?,
        None => println!("{}", io::to_json(&rf)?),
    }
    if pass {
        eprintln!("verification passed: max_error {max_error:.3e} < {:.1e}", opts.tol);
        Ok(0)
    } else {
        eprintln!("verification failed: max_error {max_error:.3e} >= {:.1e}", opts.tol);
        Ok(1)
    }
}

fn decompose(input: &Path, kind: Option<Kind>, output: &Path, tol: f64) -> Result<u8, LqssError> {
    let mf: MatrixFile = io::read_json(input)?;
    let kind = match (kind.map(ScheduleKind::from), mf.kind) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => {
            return Err(LqssError::Parameter("matrix kind not given by --kind or the file".into()));
        }
    };
    let m = mf.validated(kind, tol)?;
    let sched = io::decompose(m, kind, tol)?;
    let res = sched.residual(m)?;
    io::write_json(output, &sched)?;
    println!(
        "devices: {} ({} beam splitters, {} squeezers, {} phase shifters)",
        sched.devices.len(),
        sched.beam_splitters(),
        sched.squeezers(),
        sched.phase_shifters()
    );
    println!("reconstruction residual: {res:.3e}");
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LQSS_LOG", "warn")).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Synth { input, output, detuning_file, interconnect_kappa, tol, rank_tol, seed } => {
            synth(&input, &output, detuning_file.as_deref(), interconnect_kappa, tol, rank_tol, seed)
        }
        Command::Verify { model, netlist, freqs, seed, tol, report, check } => {
            verify(&model, &netlist, VerifyOptions { num_freqs: freqs, seed, tol }, report.as_deref(), check)
        }
        Command::Decompose { input, kind, output, tol } => decompose(&input, kind, &output, tol),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", error_object(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
