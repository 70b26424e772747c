#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use bbhc_core::linkage::MemoryEntry;
use bbhc_core::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PROPERTY_CASES: u32 = 1000;

/// Recursive hIFF/hXOR straight from the block definitions: a block is valid
/// when it is a single bit, or when both halves are valid and are equal
/// (hIFF) or complementary (hXOR). A valid block contributes its length.
fn binary_block(bits: &[bool], xor: bool) -> (bool, f64) {
    if bits.len() == 1 {
        return (true, 1.0);
    }
    let (l, r) = bits.split_at(bits.len() / 2);
    let (lv, lf) = binary_block(l, xor);
    let (rv, rf) = binary_block(r, xor);
    let related = if xor {
        l.iter().zip(r).all(|(a, b)| a != b)
    } else {
        l == r
    };
    let valid = lv && rv && related;
    let own = if valid { bits.len() as f64 } else { 0.0 };
    (valid, own + lf + rf)
}

pub fn oracle_hiff(bits: &[bool]) -> f64 {
    binary_block(bits, false).1
}

pub fn oracle_hxor(bits: &[bool]) -> f64 {
    binary_block(bits, true).1
}

/// Recursive hTrap with k = 3. Returns the block symbol (None for null) and
/// the score of the subtree.
fn trap_block(bits: &[bool], top: usize, weight: LevelWeight) -> (Option<bool>, f64) {
    if bits.len() == 1 {
        return (Some(bits[0]), 0.0);
    }
    let third = bits.len() / 3;
    let mut syms = Vec::new();
    let mut sub = 0.0;
    for chunk in bits.chunks(third) {
        let (s, f) = trap_block(chunk, top, weight);
        syms.push(s);
        sub += f;
    }
    if syms.iter().any(Option::is_none) {
        return (None, sub);
    }
    let u = syms.iter().filter(|s| **s == Some(true)).count();
    let (hi, lo) = if bits.len() == top { (1.0, 0.9) } else { (1.0, 1.0) };
    let t = if u == 3 { hi } else { lo * (2 - u) as f64 / 2.0 };
    let w = match weight {
        LevelWeight::BlockSize => bits.len() as f64,
        LevelWeight::Uniform => 1.0,
    };
    let sym = match u {
        0 => Some(false),
        3 => Some(true),
        _ => None,
    };
    (sym, sub + w * t)
}

pub fn oracle_htrap(bits: &[bool], weight: LevelWeight) -> f64 {
    trap_block(bits, bits.len(), weight).1
}

pub fn oracle(kind: ProblemKind, bits: &[bool], weight: LevelWeight) -> f64 {
    match kind {
        ProblemKind::Hiff => oracle_hiff(bits),
        ProblemKind::Hxor => oracle_hxor(bits),
        ProblemKind::Htrap => oracle_htrap(bits, weight),
    }
}

pub fn all_strings(len: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << len).map(move |m| (0..len).map(|i| m >> i & 1 == 1).collect())
}

/// Structural string of a genotype, read through the permutation directly.
pub fn structural_bits(problem: &Problem, g: &Genotype) -> Vec<bool> {
    match problem.permutation() {
        Some(perm) => perm.iter().map(|&p| g.get(p)).collect(),
        None => g.bits().to_vec(),
    }
}

/// Single-pass BB hill-climb replayed from scratch against the oracle, using
/// the same random draws as the library climber.
pub fn simulate_climb(
    problem: &Problem,
    structure: &BbStructure,
    start: &BbState,
    seed: u64,
) -> (Genotype, f64, u64) {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let score = |g: &Genotype| {
        oracle(
            problem.kind(),
            &structural_bits(problem, g),
            problem.spec().level_weight,
        )
    };
    let mut g = structure.decode(start).unwrap();
    let mut current = score(&g);
    let mut order: Vec<usize> = (0..structure.num_blocks()).collect();
    order.shuffle(&mut rng);
    let mut evals = 0;
    for b in order {
        let block = structure.block(b);
        let mut configs: Vec<usize> = (0..block.num_configs()).collect();
        configs.shuffle(&mut rng);
        for c in configs {
            let before = g.clone();
            for (&l, &bit) in block.loci().iter().zip(&block.configs()[c]) {
                g.set(l, bit);
            }
            evals += 1;
            let s = score(&g);
            if s < current {
                g = before;
            } else {
                current = s;
            }
        }
    }
    (g, current, evals)
}

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn kind_of(i: usize) -> ProblemKind {
    [ProblemKind::Hiff, ProblemKind::Hxor, ProblemKind::Htrap][i]
}

/// Any problem with at most 32 bits.
pub fn arb_spec() -> impl Strategy<Value = ProblemSpec> {
    (
        0usize..3,
        0u32..=5,
        proptest::option::of(any::<u64>()),
        any::<bool>(),
    )
        .prop_map(|(k, p, seed, uniform)| {
            let kind = kind_of(k);
            let p = if kind == ProblemKind::Htrap { p.min(3) } else { p };
            let mut spec = ProblemSpec::new(kind, p);
            spec.shuffle_seed = seed;
            if uniform {
                spec.level_weight = LevelWeight::Uniform;
            }
            spec
        })
}

pub fn arb_problem_and_bits() -> impl Strategy<Value = (ProblemSpec, Vec<bool>)> {
    arb_spec().prop_flat_map(|spec| {
        let len = spec.length().unwrap();
        (Just(spec), proptest::collection::vec(any::<bool>(), len))
    })
}

/// A memory with planted groups: every entry draws one bit per group and each
/// locus stores that bit xor a fixed per-locus mask.
#[derive(Clone, Debug)]
pub struct Planted {
    pub len: usize,
    pub group_of: Vec<usize>,
    pub genotypes: Vec<Genotype>,
}

pub fn arb_planted() -> impl Strategy<Value = Planted> {
    (1u32..=5, 2usize..=12).prop_flat_map(|(p, m)| {
        let len = 1usize << p;
        (
            proptest::collection::vec(0..len, len),
            proptest::collection::vec(any::<bool>(), len),
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), len), m),
        )
            .prop_map(move |(group_of, mask, draws)| Planted {
                len,
                genotypes: draws
                    .iter()
                    .map(|d| Genotype::new((0..len).map(|l| d[group_of[l]] ^ mask[l]).collect()))
                    .collect(),
                group_of: group_of.clone(),
            })
    })
}

fn memory_of(structure: &BbStructure, genotypes: &[Genotype]) -> MemoryBuffer {
    let mut m = MemoryBuffer::new(genotypes.len());
    for g in genotypes {
        let state = structure.encode(g).expect("genotype expressible");
        m.push(MemoryEntry {
            state,
            genotype: g.clone(),
            score: 0.0,
        })
        .unwrap();
    }
    m
}

fn check_rebuild(structure: &BbStructure, memory: &MemoryBuffer) -> Result<BbStructure, TestCaseError> {
    let clusters = detect_clusters(structure, memory).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let rebuilt =
        rebuild_structure(structure, &clusters, memory).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(rebuilt.validate().is_ok());
    prop_assert!(rebuilt.num_blocks() <= structure.num_blocks());
    let mut loci: Vec<usize> = rebuilt
        .blocks()
        .iter()
        .flat_map(|b| b.loci().iter().copied())
        .collect();
    loci.sort_unstable();
    prop_assert_eq!(loci, (0..structure.total_length()).collect::<Vec<_>>());
    for e in memory.entries() {
        let s = rebuilt.encode(&e.genotype);
        prop_assert!(s.is_some(), "stored genotype not expressible");
        prop_assert_eq!(&rebuilt.decode(&s.unwrap()).unwrap(), &e.genotype);
    }
    Ok(rebuilt)
}

/// A structure with merged blocks: one round of learning on the planted
/// memory, then a second round on random states of the result.
fn learned_structure(planted: &Planted, seed: u64) -> BbStructure {
    let s0 = BbStructure::initial(planted.len);
    let m0 = memory_of(&s0, &planted.genotypes);
    let c0 = detect_clusters(&s0, &m0).unwrap();
    let s1 = rebuild_structure(&s0, &c0, &m0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<BbState> = (0..planted.genotypes.len())
        .map(|_| s1.random_state(&mut rng))
        .collect();
    let m1 = MemoryBuffer::from_states(&s1, &states).unwrap();
    let c1 = detect_clusters(&s1, &m1).unwrap();
    rebuild_structure(&s1, &c1, &m1).unwrap()
}

fn binary_kind(kind: ProblemKind) -> ProblemKind {
    match kind {
        ProblemKind::Htrap => ProblemKind::Hiff,
        k => k,
    }
}

fn fail<E: std::fmt::Display>(e: E) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

pub fn prop_matches_oracle(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&arb_problem_and_bits(), |(spec, bits)| {
            let problem = Problem::new(spec.clone()).map_err(fail)?;
            let g = Genotype::new(bits);
            let expected = oracle(spec.kind, &structural_bits(&problem, &g), spec.level_weight);
            prop_assert_eq!(problem.score(&g).map_err(fail)?, expected);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn prop_complement_symmetry(cases: u32) -> Result<(), String> {
    let strat =
        (any::<bool>(), 0u32..=5, proptest::option::of(any::<u64>())).prop_flat_map(|(xor, p, seed)| {
            (
                Just((xor, p, seed)),
                proptest::collection::vec(any::<bool>(), 1 << p),
            )
        });
    runner(cases)
        .run(&strat, |((xor, p, seed), bits)| {
            let kind = if xor { ProblemKind::Hxor } else { ProblemKind::Hiff };
            let mut spec = ProblemSpec::new(kind, p);
            spec.shuffle_seed = seed;
            let problem = Problem::new(spec).map_err(fail)?;
            let g = Genotype::new(bits);
            prop_assert_eq!(
                problem.score(&g).map_err(fail)?,
                problem.score(&g.complement()).map_err(fail)?
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn prop_shuffle_invariance(cases: u32) -> Result<(), String> {
    let strat = (arb_problem_and_bits(), any::<u64>());
    runner(cases)
        .run(&strat, |((spec, bits), seed)| {
            let mut plain_spec = spec.clone();
            plain_spec.shuffle_seed = None;
            let plain = Problem::new(plain_spec).map_err(fail)?;
            let shuffled = Problem::new(spec.shuffled(seed)).map_err(fail)?;
            let structural = Genotype::new(bits);
            let permuted = shuffled.from_structural(&structural);
            let perm = shuffled.permutation().unwrap();
            for (i, &p) in perm.iter().enumerate() {
                prop_assert_eq!(permuted.get(p), structural.get(i));
            }
            prop_assert_eq!(shuffled.to_structural(&permuted), structural.clone());
            prop_assert_eq!(
                shuffled.score(&permuted).map_err(fail)?,
                plain.score(&structural).map_err(fail)?
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn prop_score_range(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&arb_problem_and_bits(), |(spec, bits)| {
            let problem = Problem::new(spec).map_err(fail)?;
            let g = Genotype::new(bits);
            let mut ev = Evaluator::new(&problem);
            let s = ev.evaluate(&g).map_err(fail)?;
            prop_assert_eq!(ev.evals(), 1);
            prop_assert!(s >= 0.0 && s <= problem.global_optimum_value());
            prop_assert_eq!(problem.is_optimal(s), s == problem.global_optimum_value());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Climbs never end below their start, spend exactly one evaluation per
/// configuration, and agree with an oracle replay of the same random draws.
pub fn prop_monotone_climb(cases: u32) -> Result<(), String> {
    let strat = (
        any::<bool>(),
        proptest::option::of(any::<u64>()),
        arb_planted(),
        any::<u64>(),
    );
    runner(cases)
        .run(&strat, |(xor, shuffle, planted, seed)| {
            let kind = if xor { ProblemKind::Hxor } else { ProblemKind::Hiff };
            let mut spec = ProblemSpec::new(kind, planted.len.trailing_zeros());
            spec.shuffle_seed = shuffle;
            let problem = Problem::new(spec).map_err(fail)?;
            let structure = learned_structure(&planted, seed);
            let start = structure.random_state(&mut ChaCha8Rng::seed_from_u64(!seed));
            let start_score = problem
                .score(&structure.decode(&start).map_err(fail)?)
                .map_err(fail)?;
            let mut ev = Evaluator::new(&problem);
            let r = bb_hill_climb(&structure, &start, &mut ev, &mut ChaCha8Rng::seed_from_u64(seed))
                .map_err(fail)?;
            let total: u64 = structure.blocks().iter().map(|b| b.num_configs() as u64).sum();
            prop_assert!(r.score >= start_score);
            prop_assert_eq!(r.evals_used, total);
            prop_assert_eq!(ev.evals(), total);
            prop_assert_eq!(r.score, problem.score(&r.final_genotype).map_err(fail)?);
            prop_assert_eq!(
                structure.decode(&r.final_state).map_err(fail)?,
                r.final_genotype.clone()
            );
            let (g, s, n) = simulate_climb(&problem, &structure, &start, seed);
            prop_assert_eq!(g, r.final_genotype);
            prop_assert_eq!(s, r.score);
            prop_assert_eq!(n, r.evals_used);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Learning keeps the loci a partition, never adds blocks, keeps every stored
/// genotype expressible, and never separates a planted group.
pub fn prop_partition_invariants(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(arb_planted(), any::<u64>()), |(planted, seed)| {
            let s0 = BbStructure::initial(planted.len);
            let m0 = memory_of(&s0, &planted.genotypes);
            let s1 = check_rebuild(&s0, &m0)?;
            let block_of: HashMap<usize, usize> = s1
                .blocks()
                .iter()
                .enumerate()
                .flat_map(|(i, b)| b.loci().iter().map(move |&l| (l, i)))
                .collect();
            for a in 0..planted.len {
                for b in 0..planted.len {
                    if planted.group_of[a] == planted.group_of[b] {
                        prop_assert_eq!(block_of[&a], block_of[&b]);
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let states: Vec<BbState> = (0..planted.genotypes.len())
                .map(|_| s1.random_state(&mut rng))
                .collect();
            for s in &states {
                prop_assert_eq!(s1.encode(&s1.decode(s).map_err(fail)?), Some(s.clone()));
            }
            let m1 = MemoryBuffer::from_states(&s1, &states).map_err(fail)?;
            check_rebuild(&s1, &m1)?;
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `linked` is reflexive, symmetric and transitive, and its classes are
/// exactly the detected clusters.
#[allow(clippy::needless_range_loop)]
pub fn prop_linkage_equivalence(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(
            &(arb_planted(), any::<u64>(), 1usize..=10),
            |(planted, seed, m)| {
                let structure = learned_structure(&planted, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
                let states: Vec<BbState> = (0..m).map(|_| structure.random_state(&mut rng)).collect();
                let memory = MemoryBuffer::from_states(&structure, &states).map_err(fail)?;
                let n = structure.num_blocks();
                let mut rel = vec![vec![false; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        rel[i][j] = linked(i, j, &memory).map_err(fail)?;
                    }
                }
                for i in 0..n {
                    prop_assert!(rel[i][i]);
                    for j in 0..n {
                        prop_assert_eq!(rel[i][j], rel[j][i]);
                        for k in 0..n {
                            if rel[i][j] && rel[j][k] {
                                prop_assert!(rel[i][k]);
                            }
                        }
                    }
                }
                let clusters = detect_clusters(&structure, &memory).map_err(fail)?;
                let mut cluster_of = vec![usize::MAX; n];
                for (c, members) in clusters.iter().enumerate() {
                    for &b in members {
                        prop_assert_eq!(cluster_of[b], usize::MAX);
                        cluster_of[b] = c;
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        prop_assert_eq!(rel[i][j], cluster_of[i] == cluster_of[j]);
                    }
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

/// Same problem, config and seed give the same run, trace included.
pub fn prop_determinism(cases: u32) -> Result<(), String> {
    let strat = (arb_spec(), any::<u64>(), 2usize..=8, 1u64..=4000);
    runner(cases)
        .run(&strat, |(spec, seed, c, budget)| {
            let problem = Problem::new(spec).map_err(fail)?;
            let mut config = RunConfig::for_problem(&problem, seed);
            config.memory_const = c;
            config.max_evals = budget;
            let a = run_bbhc(&problem, &config).map_err(fail)?;
            let b = run_bbhc(&problem, &config).map_err(fail)?;
            prop_assert_eq!(a.summary(), b.summary());
            prop_assert_eq!(&a.trace, &b.trace);
            prop_assert_eq!(a.best_score, problem.score(&a.best_genotype).map_err(fail)?);
            prop_assert!(a.total_evals <= budget);
            let blocks: Vec<usize> = a.trace.iter().map(|t| t.num_blocks).collect();
            prop_assert!(blocks.windows(2).all(|w| w[1] <= w[0]));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const PROPERTY_SUITES: [Suite; 8] = [
    ("evaluator matches recursive oracle", prop_matches_oracle),
    ("complement symmetry", prop_complement_symmetry),
    ("shuffle invariance", prop_shuffle_invariance),
    ("score range and eval counting", prop_score_range),
    ("monotone climb scores", prop_monotone_climb),
    ("partition invariants", prop_partition_invariants),
    ("linkage equivalence laws", prop_linkage_equivalence),
    ("determinism under fixed seeds", prop_determinism),
];

pub fn distinct<T: std::hash::Hash + Eq + Clone>(items: &[T]) -> usize {
    items.iter().cloned().collect::<HashSet<_>>().len()
}
