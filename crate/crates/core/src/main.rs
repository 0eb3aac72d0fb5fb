use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use logsymp::config::Config;
use logsymp::report::{run, RunOptions};
use logsymp::scene::{parse_scene, Category};

#[derive(Parser)]
#[command(name = "logsymp", version, about = "Verify and construct log-symplectic structures from scene files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in the scene.
    Run(Common),
    /// Run verification tasks only.
    Verify(Common),
    /// Run construction tasks only.
    Construct(Common),
    /// Run conversion tasks only.
    Convert(Common),
    /// Run topology checks only.
    Check {
        /// `surface` or `obstruction`; all checks when omitted.
        #[arg(long)]
        kind: Option<CheckKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit profile tables only.
    Profile(Common),
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CheckKind {
    Surface,
    Obstruction,
}

#[derive(Args)]
struct Common {
    /// Scene file (JSON).
    scene: PathBuf,
    /// Target number of grid points per chart.
    #[arg(long)]
    grid: Option<usize>,
    /// Unit-sphere directions per base point.
    #[arg(long)]
    sphere_samples: Option<usize>,
    #[arg(long)]
    tol_zero: Option<f64>,
    #[arg(long)]
    tol_margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn config(&self) -> Config {
        let mut c = Config::default();
        if let Some(g) = self.grid {
            c.grid_points = g;
        }
        if let Some(k) = self.sphere_samples {
            c.sphere_samples = k;
        }
        if let Some(t) = self.tol_zero {
            c.tol.zero = t;
        }
        if let Some(t) = self.tol_margin {
            c.tol.margin = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, categories, ops): (Common, Vec<Category>, Vec<String>) = match cli.command {
        Command::Run(c) => (c, vec![], vec![]),
        Command::Verify(c) => (c, vec![Category::Verify], vec![]),
        Command::Construct(c) => (c, vec![Category::Construct], vec![]),
        Command::Convert(c) => (c, vec![Category::Convert], vec![]),
        Command::Profile(c) => (c, vec![Category::Profile], vec![]),
        Command::Check { kind, common } => {
            let ops = match kind {
                None => vec![],
                Some(CheckKind::Surface) => vec!["surface_log_admissibility".into()],
                Some(CheckKind::Obstruction) => vec!["obstruction_a".into(), "obstruction_b".into()],
            };
            (common, vec![Category::Check], ops)
        }
    };
    let text = match std::fs::read_to_string(&common.scene) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", common.scene.display());
            return ExitCode::from(1);
        }
    };
    let scene = match parse_scene(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", common.scene.display());
            return ExitCode::from(1);
        }
    };
    let out_dir = common.out.as_ref().and_then(|p| p.parent()).map(PathBuf::from);
    let opts = RunOptions { config: common.config(), categories, ops, out_dir, timing: common.timing };
    let report = match run(&scene, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for t in report.tasks.iter().filter(|t| t.error.is_some()) {
        eprintln!("error: task `{}`: {}", t.name, t.error.as_deref().unwrap_or_default());
    }
    let json = report.to_json();
    match &common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{json}"),
    }
    ExitCode::from(report.exit_code as u8)
}
