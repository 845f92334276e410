use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gw_mmse_core::io::{self, RawValue};
use gw_mmse_core::prn::{build_delay_table, generate_all, generate_gold_code};
use gw_mmse_core::{bench_throughput, gain_at_ber, run_sweep, Detector, GoldCodeSpec, SimConfig};

#[derive(Parser)]
#[command(
    name = "gw-mmse",
    version,
    about = "Group-weighting MMSE GPS L1 testbed"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print or save GPS C/A chip sequences.
    Codes(CodesArgs),
    /// Build the worst-case interference delay table for one code.
    Xcorr(XcorrArgs),
    /// Run a BER sweep and write CSV.
    Simulate(SimulateArgs),
    /// ISR gain of curve B over curve A at a target BER.
    Gain(GainArgs),
    /// Measure steady-state epochs per second.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeFormat {
    Csv,
    Binary,
    OctalCheck,
}

#[derive(Args)]
struct CodesArgs {
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    sv: Option<u32>,
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: CodeFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct XcorrArgs {
    #[arg(long, default_value_t = 1)]
    sv: u32,
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config-file path plus per-key overrides. Values use the config syntax;
/// lists are comma separated.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    sv: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    window_l: Option<String>,
    #[arg(long)]
    detectors: Option<String>,
    #[arg(long, visible_alias = "isr-db")]
    isr: Option<String>,
    #[arg(long)]
    n_bits: Option<String>,
    #[arg(long)]
    n_interferers: Option<String>,
    #[arg(long)]
    interferer_delays: Option<String>,
    #[arg(long)]
    bit_epoch_offsets: Option<String>,
    #[arg(long)]
    noise_var: Option<String>,
    #[arg(long)]
    solve_stride: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SimConfig> {
        let mut config = SimConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            io::apply_config_str(&mut config, &text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        let overrides = [
            ("seed", &self.seed),
            ("sv", &self.sv),
            ("g", &self.g),
            ("window_l", &self.window_l),
            ("detectors", &self.detectors),
            ("isr_db", &self.isr),
            ("n_bits", &self.n_bits),
            ("n_interferers", &self.n_interferers),
            ("interferer_delays", &self.interferer_delays),
            ("bit_epoch_offsets", &self.bit_epoch_offsets),
            ("noise_var", &self.noise_var),
            ("solve_stride", &self.solve_stride),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                let raw = RawValue::parse_cli(v);
                io::apply_value(&mut config, key, &raw)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a whitespace-separated copy for gnuplot.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "GW_MMSE_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct GainArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    target_ber: f64,
    /// Curve to take from A when the file holds several.
    #[arg(long)]
    detector_a: Option<Detector>,
    #[arg(long)]
    detector_b: Option<Detector>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 3.0)]
    seconds: f64,
    #[arg(long, default_value = "mmse")]
    detector: Detector,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_codes(args: &CodesArgs) -> Result<()> {
    let spec = GoldCodeSpec::gps_l1_ca();
    let codes = match args.sv {
        Some(sv) => vec![generate_gold_code(&spec, sv)?],
        None => generate_all(&spec)?,
    };
    let mut text = String::new();
    for code in &codes {
        let sv = code.code_id().unwrap_or(0);
        let line = match args.format {
            CodeFormat::Csv => code
                .chips()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
            CodeFormat::Binary => code
                .to_binary()
                .iter()
                .map(|b| char::from(b'0' + b))
                .collect(),
            CodeFormat::OctalCheck => format!("sv={sv} octal={}", code.octal_digest()),
        };
        text.push_str(&line);
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text)
}

fn cmd_xcorr(args: &XcorrArgs) -> Result<()> {
    let table = build_delay_table(&GoldCodeSpec::gps_l1_ca(), args.sv, args.count)?;
    write_output(args.out.as_deref(), &io::delay_table_to_json(&table))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = args.config.load()?;
    let points = run_sweep(&config, args.threads)?;
    write_output(args.out.as_deref(), &io::ber_csv_string(&points))?;
    if let Some(path) = &args.plot_data {
        fs::write(path, io::plot_data_string(&points))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn load_curve(
    path: &Path,
    detector: Option<Detector>,
) -> Result<(String, Vec<gw_mmse_core::CurvePoint>)> {
    let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let points = io::read_ber_csv(file).with_context(|| format!("in {}", path.display()))?;
    let (key, curve) =
        io::select_curve(&points, detector).with_context(|| format!("in {}", path.display()))?;
    Ok((key.to_string(), curve))
}

fn cmd_gain(args: &GainArgs) -> Result<()> {
    if !(args.target_ber > 0.0 && args.target_ber < 1.0) {
        bail!("target BER must lie in (0, 1), got {}", args.target_ber);
    }
    let (name_a, a) = load_curve(&args.a, args.detector_a)?;
    let (name_b, b) = load_curve(&args.b, args.detector_b)?;
    let report = gain_at_ber((&name_a, &a), (&name_b, &b), args.target_ber);
    println!("{}", io::gain_line(&report));
    if let Some(path) = &args.out {
        fs::write(path, io::gain_to_json(&report))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if !(args.seconds > 0.0 && args.seconds.is_finite()) {
        bail!("--seconds must be positive");
    }
    let config = args.config.load()?;
    let report = bench_throughput(
        &config,
        args.detector,
        Duration::from_secs_f64(args.seconds),
    )?;
    println!("detector={}", report.detector);
    println!("epochs={}", report.epochs);
    println!("seconds={:.3}", report.seconds);
    println!("epochs_per_second={:.0}", report.epochs_per_second);
    println!("channels_realtime={}", report.channels_realtime());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Codes(a) => cmd_codes(a),
        Command::Xcorr(a) => cmd_xcorr(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gain(a) => cmd_gain(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
