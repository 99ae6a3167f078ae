use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use seamgrasp::harness::{
    ingest_demo_log, load_garment, load_matrices, report, run_experiment, write_outputs, AblationMode,
    ExperimentConfig, HarnessError,
};
use seamgrasp::metrics::write_aggregate_csv;

#[derive(Parser)]
#[command(name = "seamgrasp", version, about = "Seam-guided garment unfolding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the demonstration decision matrix from a JSONL trial log.
    InitMatrix {
        demo: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        t_max: usize,
    },
    /// Run seeded simulator trials and write metrics, logs and matrices.
    Run(RunArgs),
    /// Summarise a metrics CSV or a run directory.
    Report {
        logs: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        threshold: f64,
        /// Count steps whose grasp missed the garment.
        #[arg(long)]
        include_failures: bool,
        /// Also write the per-step aggregate as CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<AblationMode>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    init_matrix: Option<PathBuf>,
    #[arg(long)]
    nint_matrix: Option<PathBuf>,
    #[arg(long)]
    int_matrix: Option<PathBuf>,
    #[arg(long)]
    garment: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    include_failures: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(n) = self.trials {
            cfg.n_trials = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        let paths = &mut cfg.paths;
        for (flag, slot) in [
            (&self.init_matrix, &mut paths.init_matrix),
            (&self.nint_matrix, &mut paths.nint_matrix),
            (&self.int_matrix, &mut paths.int_matrix),
            (&self.garment, &mut paths.garment),
            (&self.out, &mut paths.out_dir),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        cfg.include_failures |= self.include_failures;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = args.config()?;
    let out_dir = cfg
        .paths
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", cfg.mode, cfg.seed)));
    let garment = load_garment(&cfg)?;
    let start = load_matrices(&cfg)?;
    info!("running {} trials in mode {}", cfg.n_trials, cfg.mode);
    let outcome = run_experiment(&cfg, &garment, &start.matrices)?;
    write_outputs(&out_dir, &outcome, &start, cfg.success_threshold)?;
    println!("mode {}, {} trials, seed {}", cfg.mode, cfg.n_trials, cfg.seed);
    for a in &outcome.aggregate {
        println!(
            "step {}: mean ncov {:.4} ± {:.4}, mean IoU {:.4} ± {:.4}, success {:.2}",
            a.step, a.mean_ncov, a.ci95_ncov, a.mean_iou, a.ci95_iou, a.success_rate
        );
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::InitMatrix { demo, out, t_max } => {
            if t_max == 0 {
                return Err(HarnessError::Config("--t-max must be at least 1".into()));
            }
            let m = ingest_demo_log(&demo, t_max)?;
            let mut text = serde_json::to_string_pretty(&m).expect("matrices serialise");
            text.push('\n');
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| HarnessError::Io { path: p, source: e })?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Run(args) => run(&args),
        Command::Report {
            logs,
            threshold,
            include_failures,
            csv_out,
        } => {
            let r = report(&logs, threshold, include_failures)?;
            print!("{}", r.table());
            if let Some(p) = csv_out {
                let mut buf = Vec::new();
                write_aggregate_csv(&mut buf, &r.rows).map_err(|e| HarnessError::Data(e.to_string()))?;
                std::fs::write(&p, buf).map_err(|e| HarnessError::Io { path: p, source: e })?;
            }
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
