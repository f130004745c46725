use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zak_radar::experiments::{
    run_complexity_bench, run_heatmap, run_rectangles, run_snr_sweep, ExperimentConfig, Profile,
};
use zak_radar::Result;

#[derive(Parser)]
#[command(name = "zakradar", version, about = "Delay-Doppler radar experiments with chirp and Zak-OTFS probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-ambiguity surfaces and detections for one scene.
    Heatmap(Common),
    /// RMS error over the six shrinking target rectangles.
    Rectangles(Common),
    /// RMS error against SNR.
    SnrSweep(Common),
    /// DD-path versus time-domain runtime scaling.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON file overriding profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "ci")]
    profile: Profile,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p, self.profile)?,
            None => ExperimentConfig::for_profile(self.profile),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Heatmap(c) => {
            let cfg = c.load()?;
            let r = run_heatmap(&cfg, &c.out)?;
            if r.crystallization_warning {
                eprintln!("warning: scene violates the crystallization condition; detections may alias");
            }
            for e in &r.detection.estimates {
                println!("tau = {:.4e} s, nu = {:.2} Hz, |A| = {:.4e}", e.tau_s, e.nu_hz, e.peak_mag);
            }
        }
        Command::Rectangles(c) => {
            let cfg = c.load()?;
            let t = run_rectangles(&cfg)?;
            t.save(&c.out, "rectangles")?;
            t.write_csv(std::io::stdout().lock())?;
        }
        Command::SnrSweep(c) => {
            let cfg = c.load()?;
            let t = run_snr_sweep(&cfg, &cfg.snr_list_db)?;
            t.save(&c.out, "snr_sweep")?;
            t.write_csv(std::io::stdout().lock())?;
        }
        Command::Bench(c) => {
            let cfg = c.load()?;
            let r = run_complexity_bench(&cfg.bench_log2_bt, cfg.bench_repeats)?;
            std::fs::create_dir_all(&c.out)?;
            write_json(&c.out.join("bench.json"), &r)?;
            println!("bt,dd_seconds,td_seconds");
            for row in &r.rows {
                println!("{},{:e},{:e}", row.bt, row.dd_seconds, row.td_seconds);
            }
            println!("dd slope {:.3}, td slope {:.3}", r.dd_slope, r.td_slope);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
