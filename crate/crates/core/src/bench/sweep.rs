use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_scaling, FitResult};
use crate::driver::{run_bbhc, structure_correct, RunConfig, RunResult};
use crate::error::{BbhcError, Result};
use crate::hfuncs::{exact_log, LevelWeight, Problem, ProblemKind, ProblemSpec};
use crate::seeds;

fn default_runs() -> usize {
    30
}

fn default_true() -> bool {
    true
}

fn default_max_evals() -> u64 {
    RunConfig::DEFAULT_MAX_EVALS
}

fn default_stagnation() -> usize {
    RunConfig::DEFAULT_STAGNATION
}

/// Sweep description, usually read from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub problem: ProblemKind,
    pub sizes: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs_per_size: usize,
    /// Defaults to 8 for hIFF/hXOR and 18 for hTrap.
    #[serde(default)]
    pub memory_const: Option<usize>,
    #[serde(default = "default_max_evals")]
    pub max_evals: u64,
    #[serde(default = "default_stagnation")]
    pub stagnation_epochs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub level_weight: LevelWeight,
    /// Fresh random shuffle per run when set.
    #[serde(default = "default_true")]
    pub shuffled: bool,
    /// Run indices whose traces and merge trees are kept for output.
    #[serde(default)]
    pub trace_runs: Vec<usize>,
}

impl SweepSpec {
    pub fn new(problem: ProblemKind, sizes: Vec<usize>, runs_per_size: usize) -> Self {
        SweepSpec {
            problem,
            sizes,
            runs_per_size,
            memory_const: None,
            max_evals: RunConfig::DEFAULT_MAX_EVALS,
            stagnation_epochs: RunConfig::DEFAULT_STAGNATION,
            base_seed: 0,
            level_weight: LevelWeight::default(),
            shuffled: true,
            trace_runs: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_size < 1 {
            return Err(BbhcError::InvalidInput("runs_per_size must be >= 1".into()));
        }
        let k = self.problem.k();
        for &s in &self.sizes {
            if exact_log(s, k).is_none() {
                return Err(BbhcError::InvalidInput(format!(
                    "size {s} is not a power of {k} for {}",
                    self.problem
                )));
            }
        }
        Ok(())
    }

    /// Problem and run configuration for one `(size, run)` cell.
    pub fn instance(&self, size: usize, run: usize) -> Result<(Problem, RunConfig, u64)> {
        let seed = seeds::derive(self.base_seed, &[size as u64, run as u64]);
        let mut spec = ProblemSpec::with_length(self.problem, size)?;
        spec.level_weight = self.level_weight;
        if self.shuffled {
            spec.shuffle_seed = Some(seeds::derive(seed, &[0x5348_5546]));
        }
        let problem = Problem::new(spec)?;
        let config = RunConfig {
            memory_const: self
                .memory_const
                .unwrap_or_else(|| self.problem.default_memory_const()),
            log_base: self.problem.k(),
            max_evals: self.max_evals,
            stagnation_epochs: self.stagnation_epochs,
            seed,
        };
        Ok((problem, config, seed))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub run: usize,
    pub seed: u64,
    pub evals: u64,
    pub success: bool,
    pub structure_ok: bool,
    pub optimum_id: Option<u8>,
}

#[derive(Clone, Debug)]
pub struct TracedRun {
    pub size: usize,
    pub run: usize,
    pub problem: Problem,
    pub result: RunResult,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    /// Sorted by `(size, seed)`.
    pub rows: Vec<SweepRow>,
    pub traced: Vec<TracedRun>,
}

/// Execute every `(size, run)` cell of a sweep in parallel.
pub fn run_sweep(sweep: &SweepSpec) -> Result<SweepOutcome> {
    sweep.validate()?;
    let cells: Vec<(usize, usize)> = sweep
        .sizes
        .iter()
        .flat_map(|&s| (0..sweep.runs_per_size).map(move |r| (s, r)))
        .collect();
    let results: Vec<(SweepRow, Option<TracedRun>)> = cells
        .par_iter()
        .map(|&(size, run)| {
            let (problem, config, seed) = sweep.instance(size, run)?;
            let result = run_bbhc(&problem, &config)?;
            let row = SweepRow {
                size,
                run,
                seed,
                evals: result.total_evals,
                success: result.reached_optimum,
                structure_ok: structure_correct(&result, &problem),
                optimum_id: result.optimum_id,
            };
            let traced = sweep.trace_runs.contains(&run).then_some(TracedRun {
                size,
                run,
                problem,
                result,
            });
            Ok((row, traced))
        })
        .collect::<Result<_>>()?;

    let mut outcome = SweepOutcome::default();
    for (row, traced) in results {
        outcome.rows.push(row);
        outcome.traced.extend(traced);
    }
    outcome.rows.sort_by_key(|r| (r.size, r.seed));
    outcome.traced.sort_by_key(|t| (t.size, t.run));
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub size: usize,
    pub runs: usize,
    pub mean_evals: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_evals: f64,
    pub min_evals: u64,
    pub max_evals: u64,
    pub success_rate: f64,
    pub structure_rate: f64,
    /// Count of runs ending on each optimum id.
    pub optimum_counts: BTreeMap<u8, usize>,
    /// Mean evals divided by the previous size's mean.
    pub ratio_to_previous: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub problem: ProblemKind,
    pub sizes: Vec<SizeStats>,
    pub fit: Option<FitResult>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SweepSummary {
    pub fn stats(&self, size: usize) -> Option<&SizeStats> {
        self.sizes.iter().find(|s| s.size == size)
    }

    pub fn mean_points(&self) -> Vec<(f64, f64)> {
        self.sizes.iter().map(|s| (s.size as f64, s.mean_evals)).collect()
    }
}

/// Aggregate rows into per-size statistics and fit the scaling model to the means.
pub fn summarize(problem: ProblemKind, rows: &[SweepRow]) -> SweepSummary {
    let mut by_size: BTreeMap<usize, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        by_size.entry(r.size).or_default().push(r);
    }
    let mut sizes: Vec<SizeStats> = Vec::with_capacity(by_size.len());
    for (size, rs) in by_size {
        let n = rs.len() as f64;
        let mean = rs.iter().map(|r| r.evals as f64).sum::<f64>() / n;
        let std = if rs.len() > 1 {
            (rs.iter().map(|r| (r.evals as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut optimum_counts = BTreeMap::new();
        for id in rs.iter().filter_map(|r| r.optimum_id) {
            *optimum_counts.entry(id).or_insert(0) += 1;
        }
        let ratio_to_previous = sizes.last().map(|p: &SizeStats| mean / p.mean_evals);
        sizes.push(SizeStats {
            size,
            runs: rs.len(),
            mean_evals: mean,
            std_evals: std,
            min_evals: rs.iter().map(|r| r.evals).min().unwrap_or(0),
            max_evals: rs.iter().map(|r| r.evals).max().unwrap_or(0),
            success_rate: rs.iter().filter(|r| r.success).count() as f64 / n,
            structure_rate: rs.iter().filter(|r| r.structure_ok).count() as f64 / n,
            optimum_counts,
            ratio_to_previous,
        });
    }

    let mut warnings = Vec::new();
    let ratios: Vec<f64> = sizes.iter().filter_map(|s| s.ratio_to_previous).collect();
    if ratios.windows(2).any(|w| w[1] > w[0]) {
        warnings.push(format!(
            "size-to-size ratios are not monotonically decreasing: {ratios:?}"
        ));
    }
    let points: Vec<(f64, f64)> = sizes.iter().map(|s| (s.size as f64, s.mean_evals)).collect();
    let fit = match fit_scaling(&points) {
        Ok(f) => Some(f),
        Err(e) => {
            if sizes.len() >= 2 {
                warnings.push(format!("scaling fit failed: {e}"));
            }
            None
        }
    };
    SweepSummary {
        problem,
        sizes,
        fit,
        warnings,
    }
}
