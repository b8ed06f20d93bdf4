//! Command-line flags, the optional TOML config file and validation.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hybridplan::controller::Variant;
use hybridplan::domain::{DomainTag, Split};
use hybridplan::eval::PlannerKind;
use hybridplan::hardness::HardnessSelector;
use hybridplan::search::Algorithm;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "hybridplan", version, about = "Hybrid fast/slow planning toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with defaults for any flag; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate the maze problem set.
    GenMaze,
    /// Generate the Blocksworld problem set.
    GenBlocks,
    /// Label training problems with meta-plans and calibrate the runtime gate.
    BuildControllerData,
    /// Write the fast-planner, search-planner and controller corpora.
    EmitDatasets,
    /// Run a planner and log every run.
    Plan,
    /// Score a planner at its default setting.
    Eval,
    /// Score a planner across a grid of state budgets.
    Sweep,
}

/// Every flag is optional here so that file values can fill the gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Opts {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub domain: Option<DomainTag>,
    /// Problem file (JSON lines) produced by gen-maze or gen-blocks.
    #[arg(long, global = true)]
    pub problems: Option<PathBuf>,
    /// Controller records produced by build-controller-data.
    #[arg(long, global = true)]
    pub controller: Option<PathBuf>,
    /// Calibration file produced by build-controller-data.
    #[arg(long, global = true)]
    pub calibration: Option<PathBuf>,
    #[arg(long, global = true)]
    pub split: Option<Split>,
    /// Output file, or directory for emit-datasets.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory for outputs without an explicit --out.
    #[arg(long, global = true, env = "HYBRIDPLAN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub planner: Option<PlannerKind>,
    /// Search engine for search-planner sub-goals.
    #[arg(long, global = true)]
    pub sys2: Option<Algorithm>,
    /// Hybridization factor in [0, 1].
    #[arg(long, global = true)]
    pub x: Option<f64>,
    /// Test-time shift of the hybridization factor, in [-1, 1].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub bias: Option<f64>,
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    #[arg(long, global = true)]
    pub selector: Option<HardnessSelector>,
    /// Global states-explored budget per problem.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Comma-separated, ascending target budgets.
    #[arg(long, global = true, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    /// Also print a markdown table.
    #[arg(long, global = true)]
    #[serde(default)]
    pub markdown: bool,
    /// Plot-data output (JSON) for sweeps.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// Worker threads for per-problem planning.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub rows: Option<usize>,
    #[arg(long, global = true)]
    pub cols: Option<usize>,
    #[arg(long, global = true)]
    pub obstacle_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub train: Option<usize>,
    #[arg(long, global = true)]
    pub val: Option<usize>,
    #[arg(long, global = true)]
    pub test: Option<usize>,
    #[arg(long, global = true)]
    pub min_blocks: Option<usize>,
    #[arg(long, global = true)]
    pub max_blocks: Option<usize>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Opts { markdown: $a.markdown || $b.markdown, $($f: $a.$f.or($b.$f)),* }
    };
}

impl Opts {
    /// Values from `self` win over `file`.
    pub fn merge(self, file: Opts) -> Opts {
        let a = self;
        let b = file;
        merge_fields!(a, b; seed, domain, problems, controller, calibration, split, out, out_dir, planner, sys2, x,
            bias, variant, selector, budget, budgets, plot, jobs, rows, cols, obstacle_fraction, train, val, test,
            min_blocks, max_blocks)
    }

    pub fn load_file(path: &Path) -> Result<Opts, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn x(&self) -> f64 {
        self.x.unwrap_or(0.5)
    }

    pub fn bias(&self) -> f64 {
        self.bias.unwrap_or(0.0)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.sys2.unwrap_or(Algorithm::Astar)
    }

    pub fn variant(&self) -> Variant {
        self.variant.unwrap_or(Variant::SlidingWindow)
    }

    pub fn planner(&self) -> PlannerKind {
        self.planner.unwrap_or(PlannerKind::System1x)
    }

    pub fn selector(&self, domain: DomainTag) -> HardnessSelector {
        self.selector.unwrap_or_else(|| HardnessSelector::default_for(domain))
    }

    /// `--out`, else `name` under the output directory, else `name`.
    pub fn output(&self, name: &str) -> PathBuf {
        match (&self.out, &self.out_dir) {
            (Some(p), _) => p.clone(),
            (None, Some(d)) => d.join(name),
            (None, None) => PathBuf::from(name),
        }
    }

    pub fn require_problems(&self) -> Result<&Path, CliError> {
        self.problems
            .as_deref()
            .ok_or_else(|| CliError::Usage("--problems is required".into()))
    }

    /// Range checks that do not depend on the loaded data.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Some(x) = self.x {
            if !(0.0..=1.0).contains(&x) {
                return usage(format!("--x {x} must lie in [0, 1]"));
            }
        }
        if let Some(b) = self.bias {
            if !(-1.0..=1.0).contains(&b) {
                return usage(format!("--bias {b} must lie in [-1, 1]"));
            }
        }
        if self.budget == Some(0) {
            return usage("--budget must be positive".into());
        }
        if let Some(grid) = &self.budgets {
            if grid.is_empty() || grid.iter().any(|&b| b.is_nan() || b < 1.0) {
                return usage("--budgets must be positive numbers".into());
            }
            if grid.windows(2).any(|w| w[0] > w[1]) {
                return usage("--budgets must be ascending".into());
            }
        }
        if self.jobs == Some(0) {
            return usage("--jobs must be at least 1".into());
        }
        if let Some(f) = self.obstacle_fraction {
            if !(0.0..1.0).contains(&f) {
                return usage(format!("--obstacle-fraction {f} must lie in [0, 1)"));
            }
        }
        if let (Some(sel), Some(dom)) = (self.selector, self.domain) {
            if sel.domain() != dom {
                return usage(format!("--selector {sel} does not apply to --domain {dom}"));
            }
        }
        Ok(())
    }
}
