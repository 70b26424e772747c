//! Block-wise hill-climbing and the bit-flip baseline.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::bbmodel::{BbState, BbStructure};
use crate::error::{BbhcError, Result};
use crate::hfuncs::{Evaluator, Genotype};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClimbResult {
    pub final_state: BbState,
    pub final_genotype: Genotype,
    pub score: f64,
    pub evals_used: u64,
}

/// One pass of building-block hill-climbing.
///
/// Blocks are visited once each in random order. For the current block every
/// configuration is tried once, again in random order; a change is undone
/// only if it strictly lowers the score, so equal-score moves are kept.
///
/// A full pass costs exactly `sum |V_i|` evaluations. The start state is
/// scored up front and that query stands in for the first block's trial of
/// its own starting configuration. The pass ends early when the evaluator
/// reports a reached target or an exhausted budget.
pub fn bb_hill_climb<R: Rng + ?Sized>(
    structure: &BbStructure,
    start: &BbState,
    evaluator: &mut Evaluator<'_>,
    rng: &mut R,
) -> Result<ClimbResult> {
    structure.check_state(start)?;
    let evals_before = evaluator.evals();
    let mut state = start.clone();
    let mut genotype = structure.decode(&state)?;
    let start_score = evaluator.evaluate(&genotype)?;
    let mut current = start_score;

    let mut order: Vec<usize> = (0..structure.num_blocks()).collect();
    order.shuffle(rng);
    let mut configs = Vec::new();

    'blocks: for (pos, &b) in order.iter().enumerate() {
        let incumbent = state.get(b);
        configs.clear();
        configs.extend(0..structure.block(b).num_configs());
        configs.shuffle(rng);

        for &c in &configs {
            let previous = state.get(b);
            if pos == 0 && c == incumbent {
                // Already scored as the start state.
                if previous != c && start_score >= current {
                    structure.write_block(&mut genotype, b, c);
                    state.set(b, c);
                    current = start_score;
                }
                continue;
            }
            if evaluator.should_stop() {
                break 'blocks;
            }
            structure.write_block(&mut genotype, b, c);
            let score = evaluator.evaluate(&genotype)?;
            if score < current {
                structure.write_block(&mut genotype, b, previous);
            } else {
                state.set(b, c);
                current = score;
            }
        }
        if evaluator.should_stop() {
            break;
        }
    }

    Ok(ClimbResult {
        final_state: state,
        final_genotype: genotype,
        score: current,
        evals_used: evaluator.evals() - evals_before,
    })
}

/// Random mutation hill-climber: flip one uniformly chosen bit per step and
/// keep the flip unless the score drops. Runs until `max_evals` evaluations
/// have been spent or the evaluator's target is reached.
pub fn bitflip_hill_climb<R: Rng + ?Sized>(
    evaluator: &mut Evaluator<'_>,
    start: &Genotype,
    rng: &mut R,
    max_evals: u64,
) -> Result<ClimbResult> {
    if max_evals == 0 {
        return Err(BbhcError::InvalidArgument("max_evals must be at least 1".into()));
    }
    let evals_before = evaluator.evals();
    let mut genotype = start.clone();
    let mut current = evaluator.evaluate(&genotype)?;
    let mut used = 1;
    let len = genotype.len();
    while used < max_evals && !evaluator.target_hit() {
        let i = rng.random_range(0..len);
        genotype.flip(i);
        let score = evaluator.evaluate(&genotype)?;
        used += 1;
        if score < current {
            genotype.flip(i);
        } else {
            current = score;
        }
    }
    let final_state = BbState::new(genotype.bits().iter().map(|&b| b as usize).collect());
    Ok(ClimbResult {
        final_state,
        final_genotype: genotype,
        score: current,
        evals_used: evaluator.evals() - evals_before,
    })
}

/// Evaluations given to each restart of [`random_restart_bitflip`]:
/// `4 * l * ceil(log2 l)`, enough for every bit to be tried a few times.
pub fn restart_segment(length: usize) -> u64 {
    let log = (usize::BITS - length.max(2).saturating_sub(1).leading_zeros()) as u64;
    (4 * length as u64 * log).max(1)
}

/// Random-restart bit-flip climbing: independent [`bitflip_hill_climb`]
/// segments from fresh random strings until `max_evals` is spent or the
/// evaluator's target is reached. Returns the best segment, with
/// `evals_used` covering all segments.
pub fn random_restart_bitflip<R: Rng + ?Sized>(
    evaluator: &mut Evaluator<'_>,
    rng: &mut R,
    max_evals: u64,
) -> Result<ClimbResult> {
    if max_evals == 0 {
        return Err(BbhcError::InvalidArgument("max_evals must be at least 1".into()));
    }
    let evals_before = evaluator.evals();
    let len = evaluator.problem().length();
    let segment = restart_segment(len);
    let mut best: Option<ClimbResult> = None;
    loop {
        let used = evaluator.evals() - evals_before;
        if used >= max_evals || evaluator.target_hit() {
            break;
        }
        let start = Genotype::new((0..len).map(|_| rng.random()).collect());
        let r = bitflip_hill_climb(evaluator, &start, rng, segment.min(max_evals - used))?;
        if best.as_ref().is_none_or(|b| r.score > b.score) {
            best = Some(r);
        }
    }
    let mut best = best.expect("budget allows at least one segment");
    best.evals_used = evaluator.evals() - evals_before;
    Ok(best)
}
