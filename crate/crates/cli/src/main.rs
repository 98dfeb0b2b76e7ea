use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use aoi_sim::engine::write_event_log;
use aoi_sim::harness::{self, render_table, ExperimentConfig, ExperimentId, Protocol};
use aoi_sim::{
    adra_average_aoi, adra_optimize_cap, adra_success_probability, aira_average_aoi,
    aira_optimal_cap, ChannelModel, NetworkConfig, Policy,
};

#[derive(Parser)]
#[command(
    name = "aoi-sim",
    version,
    about = "Age-of-information random access experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Small networks (N = 6, 7, 8) over a sweep of ADRA thresholds.
    E1(RunArgs),
    /// 8 to 40 virtual devices multiplexed onto a few radios.
    E2(RunArgs),
    /// Two receive-power groups under the capture channel.
    E3(RunArgs),
    /// A single configuration given entirely by flags or a config file.
    Custom(RunArgs),
    /// Prints the closed-form values for one configuration.
    Analytic(AnalyticArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Collision,
    Capture,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Aira,
    Adra,
}

#[derive(Args)]
struct RunArgs {
    /// key = value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Device counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u16>>,
    /// ADRA thresholds, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<u64>>,
    /// Fixed channel access probability (E3 and custom).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    protocol: Option<ProtocolArg>,
    /// High-group power gaps in dB, comma separated (E3).
    #[arg(long = "gap-db", value_delimiter = ',')]
    gap_db: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    channel: Option<ChannelArg>,
    /// Capture SINR threshold in dB.
    #[arg(long = "beta-db")]
    beta_db: Option<f64>,
    #[arg(long)]
    misdetect: Option<f64>,
    /// Radios hosting the devices.
    #[arg(long)]
    radios: Option<usize>,
    /// High-power group size (E3).
    #[arg(long = "high-group")]
    high_group: Option<u16>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single replication, as on the hardware.
    #[arg(long = "paper-faithful")]
    paper_faithful: bool,
    /// JSONL per-slot event log of the first replication (custom only).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long, default_value_t = 8)]
    n: u32,
    #[arg(long, default_value_t = 1)]
    delta: u64,
    /// Channel access probability; the optimum when omitted.
    #[arg(long)]
    p: Option<f64>,
}

fn build_config(id: ExperimentId, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults_for(id);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        cfg = harness::parse_config(&text, cfg)
            .with_context(|| format!("parsing config file {}", path.display()))?;
    }
    if let Some(v) = &args.n {
        cfg.n_values = v.clone();
    }
    if let Some(v) = &args.delta {
        cfg.deltas = v.clone();
    }
    if let Some(v) = &args.gap_db {
        cfg.gaps_db = v.clone();
    }
    if args.p.is_some() {
        cfg.cap = args.p;
    }
    if let Some(p) = args.protocol {
        cfg.protocol = match p {
            ProtocolArg::Aira => Protocol::Aira,
            ProtocolArg::Adra => Protocol::Adra,
        };
    }
    if let Some(v) = args.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = args.replications {
        cfg.replications = v;
    }
    if let Some(c) = args.channel {
        cfg.channel = match c {
            ChannelArg::Collision => ChannelModel::CollisionOnly,
            ChannelArg::Capture => ChannelModel::Capture,
        };
    }
    if let Some(v) = args.beta_db {
        cfg.beta_db = v;
    }
    if let Some(v) = args.misdetect {
        cfg.misdetection = v;
    }
    if args.radios.is_some() {
        cfg.radios = args.radios;
    }
    if args.high_group.is_some() {
        cfg.high_group_size = args.high_group;
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    if args.paper_faithful {
        cfg = cfg.paper_faithful();
    }
    Ok(cfg)
}

fn write_log(cfg: &ExperimentConfig, path: &PathBuf) -> Result<()> {
    let n = cfg.n_values[0];
    let delta = cfg.deltas.first().copied().unwrap_or(1);
    let policy = match (cfg.protocol, cfg.cap) {
        (Protocol::Aira, Some(p)) => Policy::aira(p)?,
        (Protocol::Aira, None) => Policy::aira(aira_optimal_cap(n as u32)?)?,
        (Protocol::Adra, Some(p)) => Policy::adra(delta, p)?,
        (Protocol::Adra, None) => Policy::adra(delta, adra_optimize_cap(n as u32, delta)?)?,
    };
    let mut network = NetworkConfig::homogeneous(
        n,
        policy,
        cfg.channel_params(),
        cfg.horizon,
        harness::replication_seed(cfg.master_seed, 0),
    );
    if let Some(r) = cfg.radios {
        network = network.with_radio_count(r);
    }
    let output = aoi_sim::run(&network)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_event_log(&output.log, BufWriter::new(file))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run(id: ExperimentId, args: &RunArgs) -> Result<()> {
    let cfg = build_config(id, args)?;
    if args.log.is_some() && id != ExperimentId::Custom {
        bail!("--log is only available for the custom experiment");
    }
    let report = harness::run_experiment(&cfg)?;
    print!("{}", render_table(&report));
    if let Some(path) = &cfg.output {
        harness::emit_csv(&report, path)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = &args.log {
        write_log(&cfg, path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn analytic(args: &AnalyticArgs) -> Result<()> {
    let n = args.n;
    let aira_p = args.p.unwrap_or(aira_optimal_cap(n)?);
    let adra_p = match args.p {
        Some(p) => p,
        None => adra_optimize_cap(n, args.delta)?,
    };
    println!("n={n} delta={}", args.delta);
    match aira_average_aoi(n, aira_p) {
        Ok(v) => println!("aira   p={aira_p:.6} average_aoi={v:.6}"),
        Err(e) => println!("aira   p={aira_p:.6} {e}"),
    }
    let q = adra_success_probability(n, args.delta, adra_p)?;
    match adra_average_aoi(n, args.delta, adra_p) {
        Ok(v) => println!("adra   p={adra_p:.6} q={q:.6} average_aoi={v:.6}"),
        Err(e) => println!("adra   p={adra_p:.6} q={q:.6} {e}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::E1(a) => run(ExperimentId::E1, a),
        Command::E2(a) => run(ExperimentId::E2, a),
        Command::E3(a) => run(ExperimentId::E3, a),
        Command::Custom(a) => run(ExperimentId::Custom, a),
        Command::Analytic(a) => analytic(a),
    }
}
