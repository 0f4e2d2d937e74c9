use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fddmc::experiments::{emit_psd_figure, load_scenario, run_sweep, write_results, Scenario};
use std::path::{Path, PathBuf};

/// Frequency- vs time-domain detection for ligand-receptor receivers.
#[derive(Parser)]
#[command(name = "fddmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured parameter sweep and write a CSV table.
    ///
    /// Sweep variables: gamma (interferer mean over c_m|1), eta (K_Di/K_Dm,
    /// varied through the interferer unbinding rate), n (samples), dt (s).
    Sweep(Common),
    /// Write the model PSD of both symbols (CSV and SVG).
    Psd {
        #[command(flatten)]
        common: Common,
        /// Number of log-spaced frequencies.
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Check a scenario file and print its derived quantities.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); omitted means all defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo symbols per point and detector (overrides run.trials).
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut scn = match &self.config {
            Some(p) => load_scenario(p).with_context(|| format!("loading {}", p.display()))?,
            None => Scenario::default(),
        };
        if let Some(s) = self.seed {
            scn.run.seed = s;
        }
        if let Some(t) = self.trials {
            scn.run.trials = t;
        }
        scn.validate()?;
        Ok(scn)
    }

    fn init_threads(&self) -> Result<()> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
        }
        Ok(())
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep(c) => {
            c.init_threads()?;
            let scn = c.scenario()?;
            let rows = run_sweep(&scn)?;
            let path = c.out_dir()?.join(format!("sweep_{}.csv", scn.sweep.variable.name()));
            write_results(&rows, scn.sweep.variable, &path)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("wrote {} rows to {}", rows.len(), path.display());
            if failed > 0 {
                eprintln!("{failed} point(s) failed; see the error column");
            }
        }
        Command::Psd { common, points } => {
            let scn = common.scenario()?;
            let fig = emit_psd_figure(&scn, points)?;
            let dir = common.out_dir()?;
            let csv = dir.join("psd.csv");
            fig.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
            std::fs::write(dir.join("psd.svg"), fig.to_svg())?;
            println!("wrote {} and psd.svg", csv.display());
        }
        Command::Validate(c) => {
            let scn = c.scenario()?;
            let cm = scn.concentrations()?;
            let im = scn.interferer()?;
            let model = scn.psd_model();
            println!("scenario ok");
            println!("c_m [m^-3]        {:e} {:e}", cm[0], cm[1]);
            println!("mu_ci [m^-3]      {:e} (sd {:e})", im.mean, im.std_dev);
            println!("zeta [A]          {:e}", model.transducer.gain);
            println!("debye length [m]  {:e}", model.transducer.debye_length);
            println!("sweep             {} x {}", scn.sweep.variable.name(), scn.sweep.values.len());
            println!("trials, seed      {} {}", scn.run.trials, scn.run.seed);
        }
    }
    Ok(())
}
