//! Outer loop: accumulate climbs in memory, learn linkage, rebuild, repeat.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bbmodel::{BbStructure, BlockExport};
use crate::error::{BbhcError, Result};
use crate::hfuncs::{floor_log, Evaluator, Genotype, Problem};
use crate::hillclimb::bb_hill_climb;
use crate::linkage::{detect_clusters, rebuild_structure, MemoryBuffer, MemoryEntry};

/// Smallest memory that linkage learning is ever run on.
pub const MIN_MEMORY: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Constant `c` in `c + floor(log_k(blocks))`.
    pub memory_const: usize,
    pub log_base: usize,
    pub max_evals: u64,
    /// Stop after this many consecutive learning phases without a block-count change.
    pub stagnation_epochs: usize,
    pub seed: u64,
}

impl RunConfig {
    pub const DEFAULT_MAX_EVALS: u64 = 5_000_000;
    pub const DEFAULT_STAGNATION: usize = 5;

    /// Defaults used for the published scaling runs of each problem kind.
    pub fn for_problem(problem: &Problem, seed: u64) -> Self {
        RunConfig {
            memory_const: problem.kind().default_memory_const(),
            log_base: problem.k(),
            max_evals: Self::DEFAULT_MAX_EVALS,
            stagnation_epochs: Self::DEFAULT_STAGNATION,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_const < 1 {
            return Err(BbhcError::InvalidArgument("memory constant must be >= 1".into()));
        }
        if self.log_base < 2 {
            return Err(BbhcError::InvalidArgument("log base must be >= 2".into()));
        }
        if self.max_evals < 1 {
            return Err(BbhcError::InvalidArgument("max_evals must be >= 1".into()));
        }
        if self.stagnation_epochs < 1 {
            return Err(BbhcError::InvalidArgument(
                "stagnation_epochs must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// `c + floor(log_base(num_blocks))`, never below [`MIN_MEMORY`].
pub fn memory_size(num_blocks: usize, config: &RunConfig) -> usize {
    let blocks = num_blocks.max(1);
    (config.memory_const + floor_log(blocks, config.log_base) as usize).max(MIN_MEMORY)
}

/// One learning phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Block count after the phase.
    pub num_blocks: usize,
    /// Memory capacity that was filled before learning.
    pub memory_size: usize,
    pub evals_so_far: u64,
    pub best_score: f64,
    /// Groups of 0-based block indices (into the previous structure) merged this phase.
    pub merges: Vec<Vec<usize>>,
    /// Loci of each merged block, in genotype coordinates, same order as `merges`.
    pub new_blocks: Vec<Vec<usize>>,
    /// False when learning was skipped because the memory held a single distinct genotype.
    pub learned: bool,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub best_genotype: Genotype,
    pub best_score: f64,
    pub total_evals: u64,
    pub epochs: usize,
    pub final_structure: BbStructure,
    pub reached_optimum: bool,
    pub optimum_id: Option<u8>,
    pub trace: Vec<EpochRecord>,
}

/// Serializable summary of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub best_genotype: Genotype,
    pub best_score: f64,
    pub total_evals: u64,
    pub epochs: usize,
    pub reached_optimum: bool,
    pub optimum_id: Option<u8>,
    pub final_num_blocks: usize,
    pub final_structure: Vec<BlockExport>,
}

impl RunResult {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            best_genotype: self.best_genotype.clone(),
            best_score: self.best_score,
            total_evals: self.total_evals,
            epochs: self.epochs,
            reached_optimum: self.reached_optimum,
            optimum_id: self.optimum_id,
            final_num_blocks: self.final_structure.num_blocks(),
            final_structure: self.final_structure.export(None),
        }
    }
}

/// Run the building-block hill-climber on `problem`.
///
/// Each iteration draws a random state from the current structure, climbs
/// it, and stores the result. When the memory is full, linkage is learned,
/// the structure is rebuilt, the memory is emptied and resized from the new
/// block count. The run stops at the first evaluation of a global optimum,
/// after `stagnation_epochs` learning phases in a row that leave the block
/// count unchanged, or when `max_evals` is spent.
pub fn run_bbhc(problem: &Problem, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluator = Evaluator::new(problem)
        .with_optimum_target()
        .with_budget(config.max_evals);

    let mut structure = BbStructure::initial(problem.length());
    let mut memory = MemoryBuffer::new(memory_size(structure.num_blocks(), config));
    let mut best: Option<(Genotype, f64)> = None;
    let mut trace = Vec::new();
    let mut stagnant = 0;

    while !evaluator.should_stop() {
        let start = structure.random_state(&mut rng);
        let climb = bb_hill_climb(&structure, &start, &mut evaluator, &mut rng)?;
        if best.as_ref().is_none_or(|(_, s)| climb.score > *s) {
            best = Some((climb.final_genotype.clone(), climb.score));
        }
        if evaluator.should_stop() {
            break;
        }
        memory.push(MemoryEntry {
            state: climb.final_state,
            genotype: climb.final_genotype,
            score: climb.score,
        })?;
        if !memory.is_full() {
            continue;
        }

        let epoch = trace.len() + 1;
        let best_score = best.as_ref().map_or(f64::MIN, |b| b.1);
        if memory.distinct_genotypes() < 2 {
            // Degenerate memory: keep it and top it up with the next climb.
            memory.pop();
            stagnant += 1;
            trace.push(EpochRecord {
                epoch,
                num_blocks: structure.num_blocks(),
                memory_size: memory.capacity(),
                evals_so_far: evaluator.evals(),
                best_score,
                merges: Vec::new(),
                new_blocks: Vec::new(),
                learned: false,
            });
        } else {
            let clusters = detect_clusters(&structure, &memory)?;
            let rebuilt = rebuild_structure(&structure, &clusters, &memory)?;
            let (merges, new_blocks): (Vec<_>, Vec<_>) = clusters
                .into_iter()
                .filter(|c| c.len() > 1)
                .map(|c| {
                    let mut loci: Vec<usize> = c
                        .iter()
                        .flat_map(|&b| structure.block(b).loci().iter().copied())
                        .collect();
                    loci.sort_unstable();
                    (c, loci)
                })
                .unzip();
            if rebuilt.num_blocks() == structure.num_blocks() {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
            trace.push(EpochRecord {
                epoch,
                num_blocks: rebuilt.num_blocks(),
                memory_size: memory.capacity(),
                evals_so_far: evaluator.evals(),
                best_score,
                merges,
                new_blocks,
                learned: true,
            });
            structure = rebuilt;
            memory.clear();
            memory.set_capacity(memory_size(structure.num_blocks(), config));
        }
        if stagnant >= config.stagnation_epochs {
            break;
        }
    }

    let (best_genotype, best_score) = best.expect("at least one climb runs");
    let reached_optimum = problem.is_optimal(best_score);
    let optimum_id = if reached_optimum {
        problem.optimum_id(&best_genotype)
    } else {
        None
    };
    Ok(RunResult {
        best_genotype,
        best_score,
        total_evals: evaluator.evals(),
        epochs: trace.len(),
        final_structure: structure,
        reached_optimum,
        optimum_id,
        trace,
    })
}

/// Block loci (genotype coordinates) after every epoch, starting from the
/// all-singleton structure. Reconstructed from the trace alone.
pub fn replay_structures(trace: &[EpochRecord], length: usize) -> Vec<Vec<Vec<usize>>> {
    let mut current: Vec<Vec<usize>> = (0..length).map(|l| vec![l]).collect();
    let mut history = vec![current.clone()];
    for rec in trace {
        if rec.merges.is_empty() {
            history.push(current.clone());
            continue;
        }
        let merged: std::collections::HashSet<usize> = rec.merges.iter().flatten().copied().collect();
        let mut next: Vec<Vec<usize>> = current
            .iter()
            .enumerate()
            .filter(|(i, _)| !merged.contains(i))
            .map(|(_, b)| b.clone())
            .collect();
        next.extend(rec.new_blocks.iter().cloned());
        next.sort_by_key(|b| b[0]);
        current = next;
        history.push(current.clone());
    }
    history
}

/// Whether a set of structural positions is a node of the balanced k-ary
/// tree over `[0, length)`: a contiguous run of `k^m` positions starting at a
/// multiple of `k^m`.
pub fn is_tree_node(positions: &[usize], k: usize, length: usize) -> bool {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    let size = sorted.len();
    if size == 0 || crate::hfuncs::exact_log(size, k).is_none() {
        return false;
    }
    let first = sorted[0];
    first.is_multiple_of(size)
        && first + size <= length
        && sorted.iter().enumerate().all(|(i, &p)| p == first + i)
}

/// Whether every block the run ever formed, mapped back to structural
/// coordinates, is a node of the problem's balanced k-ary tree.
pub fn structure_correct(result: &RunResult, problem: &Problem) -> bool {
    let k = problem.k();
    let length = problem.length();
    let unshuffle =
        |loci: &[usize]| -> Vec<usize> { loci.iter().map(|&l| problem.structural_locus(l)).collect() };
    let formed_ok = result
        .trace
        .iter()
        .flat_map(|r| r.new_blocks.iter())
        .all(|b| is_tree_node(&unshuffle(b), k, length));
    let final_ok = result
        .final_structure
        .blocks()
        .iter()
        .all(|b| is_tree_node(&unshuffle(b.loci()), k, length));
    formed_ok && final_ok
}
