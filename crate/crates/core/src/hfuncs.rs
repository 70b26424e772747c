//! Hierarchical test functions: hIFF, hXOR and hTrap.
//!
//! All three are defined on strings of length `k^p` that are read as a
//! balanced k-ary tree. Each level interprets its child blocks as a symbol
//! (`0`, `1` or null) and rewards blocks whose children are valid in context.
//!
//! Shuffled variants are expressed by a forward permutation `perm`: the
//! structural position `i` is read from genotype position `perm[i]`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BbhcError, Result};

/// Symbol codes used during bottom-up reduction.
const SYM_ZERO: u8 = 0;
const SYM_ONE: u8 = 1;
const SYM_NULL: u8 = 2;

/// hTrap top-level parameters. Every lower level uses `f_high = f_low = 1`.
pub const HTRAP_TOP_F_HIGH: f64 = 1.0;
pub const HTRAP_TOP_F_LOW: f64 = 0.9;

/// Largest supported string length. Keeps `k^p` well inside `usize`.
pub const MAX_LENGTH: usize = 1 << 24;

/// A fixed-length bit string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype(Vec<bool>);

impl Genotype {
    pub fn new(bits: Vec<bool>) -> Self {
        Genotype(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Genotype(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Genotype(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }

    pub fn get(&self, locus: usize) -> bool {
        self.0[locus]
    }

    pub fn set(&mut self, locus: usize, value: bool) {
        self.0[locus] = value;
    }

    pub fn flip(&mut self, locus: usize) {
        self.0[locus] = !self.0[locus];
    }

    pub fn complement(&self) -> Genotype {
        Genotype(self.0.iter().map(|b| !b).collect())
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl From<Vec<bool>> for Genotype {
    fn from(bits: Vec<bool>) -> Self {
        Genotype(bits)
    }
}

impl FromStr for Genotype {
    type Err = BbhcError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BbhcError::InvalidInput(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Genotype)
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for Genotype {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Hiff,
    Hxor,
    Htrap,
}

impl ProblemKind {
    /// Branching factor of the underlying tree.
    pub fn k(self) -> usize {
        match self {
            ProblemKind::Hiff | ProblemKind::Hxor => 2,
            ProblemKind::Htrap => 3,
        }
    }

    /// Memory constant used for the published scaling runs.
    pub fn default_memory_const(self) -> usize {
        match self {
            ProblemKind::Hiff | ProblemKind::Hxor => 8,
            ProblemKind::Htrap => 18,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Hiff => "hiff",
            ProblemKind::Hxor => "hxor",
            ProblemKind::Htrap => "htrap",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = BbhcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hiff" => Ok(ProblemKind::Hiff),
            "hxor" => Ok(ProblemKind::Hxor),
            "htrap" => Ok(ProblemKind::Htrap),
            other => Err(BbhcError::InvalidArgument(format!(
                "unknown problem kind {other:?}"
            ))),
        }
    }
}

/// Per-level multiplier for hTrap block contributions.
///
/// hIFF and hXOR always reward a valid block with its length and ignore this.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelWeight {
    /// A level-`q` block counts `k^q` times, so every level weighs the same at the optimum.
    #[default]
    BlockSize,
    Uniform,
}

/// Serializable problem description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Number of hierarchical levels; the string length is `k^p`.
    pub p: u32,
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
    #[serde(default)]
    pub level_weight: LevelWeight,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, p: u32) -> Self {
        ProblemSpec {
            kind,
            p,
            shuffle_seed: None,
            level_weight: LevelWeight::default(),
        }
    }

    /// Build a spec from a string length, which must be a power of `k`.
    pub fn with_length(kind: ProblemKind, length: usize) -> Result<Self> {
        let p = exact_log(length, kind.k()).ok_or_else(|| {
            BbhcError::InvalidInput(format!(
                "length {length} is not a power of {} for {kind}",
                kind.k()
            ))
        })?;
        Ok(ProblemSpec::new(kind, p))
    }

    pub fn shuffled(mut self, seed: u64) -> Self {
        self.shuffle_seed = Some(seed);
        self
    }

    pub fn k(&self) -> usize {
        self.kind.k()
    }

    pub fn length(&self) -> Result<usize> {
        self.k()
            .checked_pow(self.p)
            .filter(|&l| l <= MAX_LENGTH)
            .ok_or_else(|| {
                BbhcError::InvalidInput(format!("{}^{} exceeds the supported length", self.k(), self.p))
            })
    }
}

/// `Some(p)` when `n == k^p`.
pub fn exact_log(n: usize, k: usize) -> Option<u32> {
    if n == 0 || k < 2 {
        return None;
    }
    let mut p = 0;
    let mut m = n;
    while m.is_multiple_of(k) {
        m /= k;
        p += 1;
    }
    (m == 1).then_some(p)
}

/// `floor(log_k(n))` for `n >= 1`, computed in integers.
pub fn floor_log(n: usize, k: usize) -> u32 {
    assert!(n >= 1 && k >= 2);
    let mut p = 0;
    let mut m = n;
    while m >= k {
        m /= k;
        p += 1;
    }
    p
}

/// Order-`k` trap function of unitation.
pub fn trap(u: usize, k: usize, f_high: f64, f_low: f64) -> f64 {
    if u == k {
        f_high
    } else {
        f_low * (k - 1 - u) as f64 / (k - 1) as f64
    }
}

/// Uniformly random permutation of `[0, length)`, deterministic in `seed`.
pub fn make_shuffle(length: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..length).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    perm
}

/// Inverse of a permutation.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn bits_to_symbols(bits: &[bool], out: &mut Vec<u8>) {
    out.clear();
    out.extend(bits.iter().map(|&b| if b { SYM_ONE } else { SYM_ZERO }));
}

/// In-place bottom-up reduction for hIFF (`xor == false`) and hXOR.
///
/// A valid hXOR block is determined by its first bit, so "L equals the
/// complement of R" reduces to "both valid and first bits differ".
fn reduce_binary(sym: &mut [u8], xor: bool) -> f64 {
    let mut n = sym.len();
    // Every single bit is a valid block of length 1.
    let mut score = n as u64;
    let mut block_len = 1u64;
    while n > 1 {
        block_len *= 2;
        let half = n / 2;
        for i in 0..half {
            let (l, r) = (sym[2 * i], sym[2 * i + 1]);
            let valid = l != SYM_NULL && r != SYM_NULL && ((l == r) != xor);
            sym[i] = if valid {
                score += block_len;
                l
            } else {
                SYM_NULL
            };
        }
        n = half;
    }
    score as f64
}

fn reduce_trap(sym: &mut [u8], weight: LevelWeight) -> f64 {
    const K: usize = 3;
    let mut n = sym.len();
    let mut score = 0.0;
    let mut block_len = 1usize;
    while n > 1 {
        block_len *= K;
        let parents = n / K;
        let top = parents == 1;
        let (f_high, f_low) = if top {
            (HTRAP_TOP_F_HIGH, HTRAP_TOP_F_LOW)
        } else {
            (1.0, 1.0)
        };
        let w = match weight {
            LevelWeight::BlockSize => block_len as f64,
            LevelWeight::Uniform => 1.0,
        };
        for i in 0..parents {
            let children = &sym[K * i..K * i + K];
            if children.contains(&SYM_NULL) {
                sym[i] = SYM_NULL;
                continue;
            }
            let u = children.iter().filter(|&&c| c == SYM_ONE).count();
            score += w * trap(u, K, f_high, f_low);
            sym[i] = match u {
                0 => SYM_ZERO,
                K => SYM_ONE,
                _ => SYM_NULL,
            };
        }
        n = parents;
    }
    score
}

fn check_length(len: usize, k: usize, name: &str) -> Result<()> {
    if exact_log(len, k).is_none() {
        return Err(BbhcError::InvalidInput(format!(
            "{name} needs a length that is a power of {k}, got {len}"
        )));
    }
    Ok(())
}

/// hIFF value of an unshuffled string.
pub fn eval_hiff(bits: &[bool]) -> Result<f64> {
    check_length(bits.len(), 2, "hIFF")?;
    let mut sym = Vec::with_capacity(bits.len());
    bits_to_symbols(bits, &mut sym);
    Ok(reduce_binary(&mut sym, false))
}

/// hXOR value of an unshuffled string.
pub fn eval_hxor(bits: &[bool]) -> Result<f64> {
    check_length(bits.len(), 2, "hXOR")?;
    let mut sym = Vec::with_capacity(bits.len());
    bits_to_symbols(bits, &mut sym);
    Ok(reduce_binary(&mut sym, true))
}

/// hTrap (k = 3) value of an unshuffled string.
pub fn eval_htrap(bits: &[bool], weight: LevelWeight) -> Result<f64> {
    check_length(bits.len(), 3, "hTrap")?;
    let mut sym = Vec::with_capacity(bits.len());
    bits_to_symbols(bits, &mut sym);
    Ok(reduce_trap(&mut sym, weight))
}

/// A validated problem instance with its shuffle and optimum precomputed.
#[derive(Clone, Debug)]
pub struct Problem {
    spec: ProblemSpec,
    length: usize,
    perm: Option<Vec<usize>>,
    inverse: Option<Vec<usize>>,
    optimum: f64,
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        let length = spec.length()?;
        let perm = spec.shuffle_seed.map(|s| make_shuffle(length, s));
        let inverse = perm.as_deref().map(invert_permutation);
        let mut problem = Problem {
            spec,
            length,
            perm,
            inverse,
            optimum: 0.0,
        };
        problem.optimum = problem.compute_optimum();
        Ok(problem)
    }

    /// Shuffled instance with an explicit permutation.
    pub fn with_permutation(spec: ProblemSpec, perm: Vec<usize>) -> Result<Self> {
        let mut problem = Problem::new(ProblemSpec {
            shuffle_seed: None,
            ..spec
        })?;
        if perm.len() != problem.length {
            return Err(BbhcError::InvalidInput(format!(
                "permutation has length {}, problem has {}",
                perm.len(),
                problem.length
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(BbhcError::InvalidInput("shuffle is not a bijection".into()));
            }
        }
        problem.inverse = Some(invert_permutation(&perm));
        problem.perm = Some(perm);
        Ok(problem)
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn kind(&self) -> ProblemKind {
        self.spec.kind
    }

    pub fn k(&self) -> usize {
        self.spec.k()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    /// Structural position of a genotype locus.
    pub fn structural_locus(&self, locus: usize) -> usize {
        match &self.inverse {
            Some(inv) => inv[locus],
            None => locus,
        }
    }

    /// Genotype locus holding a structural position.
    pub fn genotype_locus(&self, position: usize) -> usize {
        match &self.perm {
            Some(perm) => perm[position],
            None => position,
        }
    }

    /// Reorder a genotype into structural order.
    pub fn to_structural(&self, genotype: &Genotype) -> Genotype {
        match &self.perm {
            Some(perm) => Genotype(perm.iter().map(|&p| genotype.get(p)).collect()),
            None => genotype.clone(),
        }
    }

    /// Place a structural string at its shuffled genotype loci.
    pub fn from_structural(&self, structural: &Genotype) -> Genotype {
        match &self.perm {
            Some(perm) => {
                let mut bits = vec![false; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    bits[p] = structural.get(i);
                }
                Genotype(bits)
            }
            None => structural.clone(),
        }
    }

    pub fn global_optimum_value(&self) -> f64 {
        self.optimum
    }

    fn compute_optimum(&self) -> f64 {
        let l = self.length as f64;
        match self.spec.kind {
            ProblemKind::Hiff | ProblemKind::Hxor => l * (self.spec.p as f64 + 1.0),
            ProblemKind::Htrap => {
                let mut sym = vec![SYM_ONE; self.length];
                reduce_trap(&mut sym, self.spec.level_weight)
            }
        }
    }

    /// Score a genotype without touching any counter.
    pub fn score(&self, genotype: &Genotype) -> Result<f64> {
        let mut scratch = Vec::with_capacity(self.length);
        self.score_with(genotype, &mut scratch)
    }

    fn score_with(&self, genotype: &Genotype, sym: &mut Vec<u8>) -> Result<f64> {
        if genotype.len() != self.length {
            return Err(BbhcError::InvalidInput(format!(
                "genotype has length {}, problem expects {}",
                genotype.len(),
                self.length
            )));
        }
        sym.clear();
        match &self.perm {
            Some(perm) => sym.extend(perm.iter().map(|&p| genotype.get(p) as u8)),
            None => sym.extend(genotype.bits().iter().map(|&b| b as u8)),
        }
        Ok(match self.spec.kind {
            ProblemKind::Hiff => reduce_binary(sym, false),
            ProblemKind::Hxor => reduce_binary(sym, true),
            ProblemKind::Htrap => reduce_trap(sym, self.spec.level_weight),
        })
    }

    pub fn is_optimal(&self, score: f64) -> bool {
        score >= self.optimum
    }

    /// Which global optimum a genotype is, identified by its first structural bit.
    ///
    /// hIFF: 0 = all zeros, 1 = all ones. hXOR: the two complementary optima.
    /// hTrap has a single optimum (all ones, id 1).
    pub fn optimum_id(&self, genotype: &Genotype) -> Option<u8> {
        let score = self.score(genotype).ok()?;
        self.is_optimal(score)
            .then(|| genotype.get(self.genotype_locus(0)) as u8)
    }
}

/// Counting wrapper around a [`Problem`] owned by a single run.
///
/// The counter moves by exactly one per [`Evaluator::evaluate`] call. An
/// optional target score and budget are tracked so callers can stop as soon
/// as a global optimum is first evaluated.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a Problem,
    evals: u64,
    scratch: Vec<u8>,
    target: Option<f64>,
    budget: Option<u64>,
    target_hit_at: Option<u64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Evaluator {
            problem,
            evals: 0,
            scratch: Vec::with_capacity(problem.length()),
            target: None,
            budget: None,
            target_hit_at: None,
        }
    }

    /// Stop once the known global optimum has been evaluated.
    pub fn with_optimum_target(mut self) -> Self {
        self.target = Some(self.problem.global_optimum_value());
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn evaluate(&mut self, genotype: &Genotype) -> Result<f64> {
        let score = self.problem.score_with(genotype, &mut self.scratch)?;
        self.evals += 1;
        if self.target_hit_at.is_none() && self.target.is_some_and(|t| score >= t) {
            self.target_hit_at = Some(self.evals);
        }
        Ok(score)
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn target_hit(&self) -> bool {
        self.target_hit_at.is_some()
    }

    /// Evaluation count at which the target was first reached.
    pub fn target_hit_at(&self) -> Option<u64> {
        self.target_hit_at
    }

    pub fn budget_exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.evals >= b)
    }

    pub fn should_stop(&self) -> bool {
        self.target_hit() || self.budget_exhausted()
    }
}
