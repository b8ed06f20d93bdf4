//! Metrics, budget matching and budget sweeps.

use std::fmt::{self, Display, Write as _};
use std::io;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{runtime_decompose, Calibration, ControllerConfig, MetaPlan, Mode, Skeleton};
use crate::domain::{validate_plan, Problem, TokenError};
use crate::hybrid::{solve_hybrid, HybridConfig, HybridRun};
use crate::search::{Algorithm, TraceConfig};

/// An exact `hits / total` ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rate {
    pub hits: u64,
    pub total: u64,
}

impl Rate {
    pub fn value(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}

impl Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no runs to score")]
    Empty,
    #[error("problem {0} has no optimal length")]
    MissingOracle(String),
    #[error("{runs} runs for {problems} problems")]
    Mismatch { runs: usize, problems: usize },
    #[error("the hybrid planner needs a calibration")]
    MissingCalibration,
    #[error("budget grid is not sorted ascending")]
    UnsortedGrid,
}

/// Per-problem outcome of a planner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub problem_id: String,
    pub valid: bool,
    pub plan_length: Option<usize>,
    pub states_explored: u64,
}

impl Attempt {
    pub fn score<W: Skeleton>(problem: &Problem<W>, run: &HybridRun<W>) -> Self {
        let valid = run.completed && validate_plan(problem, &run.plan).is_valid();
        Attempt {
            problem_id: problem.id.clone(),
            valid,
            plan_length: valid.then(|| run.plan.len()),
            states_explored: run.states_explored,
        }
    }

    /// A problem-level error: no plan, nothing explored.
    pub fn failure(problem_id: &str) -> Self {
        Attempt {
            problem_id: problem_id.to_owned(),
            valid: false,
            plan_length: None,
            states_explored: 0,
        }
    }
}

pub fn plan_validity_rate(attempts: &[Attempt]) -> Result<Rate, EvalError> {
    if attempts.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(Rate {
        hits: attempts.iter().filter(|a| a.valid).count() as u64,
        total: attempts.len() as u64,
    })
}

/// Fraction of attempts that are valid and as short as the problem's
/// optimal length.
pub fn plan_optimality_rate<W: Skeleton>(attempts: &[Attempt], problems: &[Problem<W>]) -> Result<Rate, EvalError> {
    if attempts.is_empty() {
        return Err(EvalError::Empty);
    }
    if attempts.len() != problems.len() {
        return Err(EvalError::Mismatch {
            runs: attempts.len(),
            problems: problems.len(),
        });
    }
    let mut hits = 0;
    for (a, p) in attempts.iter().zip(problems) {
        let best = p.optimal_length.ok_or_else(|| EvalError::MissingOracle(p.id.clone()))?;
        if a.valid && a.plan_length == Some(best) {
            hits += 1;
        }
    }
    Ok(Rate {
        hits,
        total: attempts.len() as u64,
    })
}

/// Largest cap `c` with `mean(min(size, c)) <= target`, or 1 when no cap
/// qualifies.
pub fn match_budget_cap(sizes: &[u64], target: f64) -> u64 {
    let max = sizes.iter().copied().max().unwrap_or(1).max(1);
    let n = sizes.len() as f64;
    let fits = |c: u64| sizes.iter().map(|&s| s.min(c)).sum::<u64>() as f64 <= target * n;
    if !fits(1) {
        return 1;
    }
    let (mut lo, mut hi) = (1, max);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    /// Greedy fast planner on the whole problem.
    System1,
    /// Search engine on the whole problem.
    System2,
    /// Controller-driven hybrid.
    System1x,
}

impl Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerKind::System1 => "system1",
            PlannerKind::System2 => "system2",
            PlannerKind::System1x => "system1x",
        })
    }
}

impl FromStr for PlannerKind {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "system1" => Ok(PlannerKind::System1),
            "system2" => Ok(PlannerKind::System2),
            "system1x" => Ok(PlannerKind::System1x),
            other => Err(TokenError::new(other, "planner system1|system2|system1x")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerSpec {
    pub kind: PlannerKind,
    pub algorithm: Algorithm,
    pub trace: TraceConfig,
    /// Used by [`PlannerKind::System1x`] only.
    pub controller: Option<ControllerConfig>,
}

impl PlannerSpec {
    pub fn system1() -> Self {
        PlannerSpec {
            kind: PlannerKind::System1,
            algorithm: Algorithm::Astar,
            trace: TraceConfig::uncapped(),
            controller: None,
        }
    }

    pub fn system2(algorithm: Algorithm, trace: TraceConfig) -> Self {
        PlannerSpec {
            kind: PlannerKind::System2,
            algorithm,
            trace,
            controller: None,
        }
    }

    pub fn hybrid(algorithm: Algorithm, trace: TraceConfig, controller: ControllerConfig) -> Self {
        PlannerSpec {
            kind: PlannerKind::System1x,
            algorithm,
            trace,
            controller: Some(controller),
        }
    }

    pub fn label(&self) -> String {
        match (self.kind, self.controller) {
            (PlannerKind::System1, _) => "system1".into(),
            (PlannerKind::System2, _) => self.algorithm.to_string(),
            (PlannerKind::System1x, Some(c)) => format!("system1x-{}-x{}-{}", self.algorithm, c.x, c.variant),
            (PlannerKind::System1x, None) => format!("system1x-{}", self.algorithm),
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        if let Some(c) = self.controller.as_mut() {
            c.bias = bias;
        }
        self
    }
}

/// Meta-plan the planner would execute on `problem`.
pub fn meta_plan_for<W: Skeleton>(
    problem: &Problem<W>,
    spec: &PlannerSpec,
    calibration: Option<&Calibration>,
) -> Result<MetaPlan<W::State>, String> {
    let whole = |mode| MetaPlan::single(problem.start.clone(), problem.goal.clone(), mode);
    match spec.kind {
        PlannerKind::System1 => Ok(whole(Mode::Sys1)),
        PlannerKind::System2 => Ok(whole(Mode::Sys2)),
        PlannerKind::System1x => {
            let controller = spec.controller.ok_or_else(|| "hybrid planner without controller".to_owned())?;
            let calibration = calibration.ok_or_else(|| EvalError::MissingCalibration.to_string())?;
            runtime_decompose(problem, &controller, calibration).map_err(|e| e.to_string())
        }
    }
}

/// Runs the planner on every problem, in parallel, keeping input order.
/// Problem-level errors become failed attempts.
pub fn run_planner<W: Skeleton>(
    problems: &[Problem<W>],
    spec: &PlannerSpec,
    calibration: Option<&Calibration>,
    budget: Option<u64>,
) -> Vec<Attempt> {
    let config = HybridConfig::new(spec.algorithm, spec.trace).with_budget(budget);
    problems
        .par_iter()
        .map(|p| match meta_plan_for(p, spec, calibration) {
            Ok(mp) => Attempt::score(p, &solve_hybrid(p, &mp, &config)),
            Err(_) => Attempt::failure(&p.id),
        })
        .collect()
}

/// Target budget of a report row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Target(f64),
    Default,
}

impl Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Target(t) => write!(f, "{t}"),
            Budget::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub budget: Budget,
    /// Truncation cap applied, if any.
    pub cap: Option<u64>,
    /// Test-time bias applied, for hybrid rows.
    pub bias: Option<f64>,
    pub se_total: u64,
    pub validity: Rate,
    pub optimality: Rate,
    pub n: u64,
}

impl ReportRow {
    pub fn avg_se(&self) -> f64 {
        self.se_total as f64 / self.n.max(1) as f64
    }

    fn from_attempts<W: Skeleton>(
        budget: Budget,
        cap: Option<u64>,
        bias: Option<f64>,
        attempts: &[Attempt],
        problems: &[Problem<W>],
    ) -> Result<Self, EvalError> {
        Ok(ReportRow {
            budget,
            cap,
            bias,
            se_total: attempts.iter().map(|a| a.states_explored).sum(),
            validity: plan_validity_rate(attempts)?,
            optimality: plan_optimality_rate(attempts, problems)?,
            n: attempts.len() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub planner: String,
    pub rows: Vec<ReportRow>,
}

fn mean_se(attempts: &[Attempt]) -> f64 {
    attempts.iter().map(|a| a.states_explored).sum::<u64>() as f64 / attempts.len().max(1) as f64
}

/// Step of the upward bias sweep for hybrid planners.
pub const BIAS_STEP: f64 = 0.05;

/// Scores the planner at each target budget plus its default setting.
///
/// Below the default average, runs are truncated at the matched cap.
/// Above it, hybrids take the largest upward bias that stays within the
/// target; other planners keep their default runs. The fast planner's cost
/// does not depend on the budget, so it gets only the default row.
pub fn budget_sweep<W: Skeleton>(
    problems: &[Problem<W>],
    spec: &PlannerSpec,
    calibration: Option<&Calibration>,
    grid: &[f64],
) -> Result<BudgetReport, EvalError> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvalError::UnsortedGrid);
    }
    if problems.is_empty() {
        return Err(EvalError::Empty);
    }
    let base = run_planner(problems, spec, calibration, None);
    let default_avg = mean_se(&base);
    let base_bias = spec.controller.map(|c| c.bias);
    let mut rows = vec![];
    if spec.kind != PlannerKind::System1 {
        let sizes: Vec<u64> = base.iter().map(|a| a.states_explored).collect();
        for &target in grid {
            let row = if target < default_avg {
                let cap = match_budget_cap(&sizes, target);
                let cut = run_planner(problems, spec, calibration, Some(cap));
                ReportRow::from_attempts(Budget::Target(target), Some(cap), base_bias, &cut, problems)?
            } else if let (PlannerKind::System1x, Some(c)) = (spec.kind, spec.controller) {
                let mut chosen = (c.bias, base.clone());
                let mut k = 0;
                let mut bias = c.bias;
                while bias < 1.0 - 1e-9 && c.x + bias < 1.0 - 1e-9 {
                    k += 1;
                    bias = (c.bias + BIAS_STEP * k as f64).min(1.0);
                    let runs = run_planner(problems, &spec.with_bias(bias), calibration, None);
                    if mean_se(&runs) <= target {
                        chosen = (bias, runs);
                    }
                }
                ReportRow::from_attempts(Budget::Target(target), None, Some(chosen.0), &chosen.1, problems)?
            } else {
                ReportRow::from_attempts(Budget::Target(target), None, base_bias, &base, problems)?
            };
            rows.push(row);
        }
    }
    rows.push(ReportRow::from_attempts(Budget::Default, None, base_bias, &base, problems)?);
    Ok(BudgetReport {
        planner: spec.label(),
        rows,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    planner: &'a str,
    budget: String,
    avg_se: String,
    validity: String,
    optimality: String,
    n: u64,
}

/// Writes reports as CSV with columns
/// `planner,budget,avg_se,validity,optimality,n`.
pub fn write_csv<Wr: io::Write>(reports: &[BudgetReport], out: Wr) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for row in &r.rows {
            w.serialize(CsvRow {
                planner: &r.planner,
                budget: row.budget.to_string(),
                avg_se: format!("{:.4}", row.avg_se()),
                validity: format!("{:.4}", row.validity.value()),
                optimality: format!("{:.4}", row.optimality.value()),
                n: row.n,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub budget: Budget,
    pub avg_se: f64,
    pub validity: f64,
    pub optimality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub planner: String,
    pub points: Vec<PlotPoint>,
}

/// One series per planner, for external plotting.
pub fn plot_data(reports: &[BudgetReport]) -> Vec<PlotSeries> {
    reports
        .iter()
        .map(|r| PlotSeries {
            planner: r.planner.clone(),
            points: r
                .rows
                .iter()
                .map(|row| PlotPoint {
                    budget: row.budget,
                    avg_se: row.avg_se(),
                    validity: row.validity.value(),
                    optimality: row.optimality.value(),
                })
                .collect(),
        })
        .collect()
}

/// Markdown table, percentages and averages to one decimal.
pub fn markdown_table(reports: &[BudgetReport]) -> String {
    let mut s = String::from("| Planner | Budget | Validity (%) | Optimality (%) | Avg. states explored | n |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for r in reports {
        for row in &r.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {:.1} | {:.1} | {:.1} | {} |",
                r.planner,
                row.budget,
                100.0 * row.validity.value(),
                100.0 * row.optimality.value(),
                row.avg_se(),
                row.n
            );
        }
    }
    s
}
