use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BbhcError, Result};
use crate::hfuncs::{Evaluator, Problem, ProblemSpec};
use crate::hillclimb::random_restart_bitflip;
use crate::seeds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub run: usize,
    pub seed: u64,
    pub evals: u64,
    pub best_score: f64,
    pub fraction_of_optimum: f64,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub budget: u64,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_fraction_of_optimum: f64,
    pub best_fraction_of_optimum: f64,
    pub rows: Vec<BaselineRow>,
}

/// Run the random-restart bit-flip hill-climber `runs` times with `budget`
/// evaluations each.
///
/// When `spec` carries a shuffle seed, each run gets its own permutation
/// derived from it.
pub fn compare_baseline(spec: &ProblemSpec, budget: u64, runs: usize, seed: u64) -> Result<BaselineReport> {
    if budget < 1 {
        return Err(BbhcError::InvalidArgument("budget must be >= 1".into()));
    }
    let rows: Vec<BaselineRow> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = seeds::derive(seed, &[run as u64]);
            let mut run_spec = spec.clone();
            if let Some(s) = spec.shuffle_seed {
                run_spec.shuffle_seed = Some(seeds::derive(s, &[run as u64]));
            }
            let problem = Problem::new(run_spec)?;
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let mut evaluator = Evaluator::new(&problem).with_optimum_target();
            let r = random_restart_bitflip(&mut evaluator, &mut rng, budget)?;
            let optimum = problem.global_optimum_value();
            let fraction = if optimum > 0.0 { r.score / optimum } else { 1.0 };
            Ok(BaselineRow {
                run,
                seed: run_seed,
                evals: r.evals_used,
                best_score: r.score,
                fraction_of_optimum: fraction,
                success: problem.is_optimal(r.score),
            })
        })
        .collect::<Result<_>>()?;

    let successes = rows.iter().filter(|r| r.success).count();
    let n = rows.len().max(1) as f64;
    Ok(BaselineReport {
        budget,
        runs,
        successes,
        success_rate: successes as f64 / n,
        mean_fraction_of_optimum: rows.iter().map(|r| r.fraction_of_optimum).sum::<f64>() / n,
        best_fraction_of_optimum: rows.iter().map(|r| r.fraction_of_optimum).fold(0.0, f64::max),
        rows,
    })
}
