//! Building-block representation of search states.
//!
//! A [`BbStructure`] partitions the loci `[0, l)` into blocks. Each block
//! carries an explicit list of admissible bit patterns, and a [`BbState`]
//! picks one pattern per block. The neighborhood of a state is the set of
//! states reachable by changing a single block's pattern.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BbhcError, Result};
use crate::hfuncs::{Genotype, Problem};

/// A bit pattern over a block's loci, in ascending locus order.
pub type Pattern = Vec<bool>;

pub fn pattern_to_string(p: &[bool]) -> String {
    p.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn pattern_from_str(s: &str) -> Result<Pattern> {
    s.parse::<Genotype>().map(Genotype::into_bits)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildingBlock {
    loci: Vec<usize>,
    configs: Vec<Pattern>,
}

impl BuildingBlock {
    /// Build a block from loci and patterns given in the same (possibly
    /// unsorted) locus order. Loci are sorted and every pattern is reordered
    /// to match.
    pub fn new(loci: Vec<usize>, configs: Vec<Pattern>) -> Result<Self> {
        if loci.is_empty() {
            return Err(BbhcError::InvalidInput("block has no loci".into()));
        }
        if configs.is_empty() {
            return Err(BbhcError::InvalidInput("block has no configurations".into()));
        }
        let mut order: Vec<usize> = (0..loci.len()).collect();
        order.sort_by_key(|&i| loci[i]);
        let sorted: Vec<usize> = order.iter().map(|&i| loci[i]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(BbhcError::InvalidInput("block loci are not distinct".into()));
        }
        let mut seen = HashSet::new();
        let mut reordered = Vec::with_capacity(configs.len());
        for c in configs {
            if c.len() != loci.len() {
                return Err(BbhcError::InvalidInput(format!(
                    "configuration of length {} on a block of {} loci",
                    c.len(),
                    loci.len()
                )));
            }
            let c: Pattern = order.iter().map(|&i| c[i]).collect();
            if !seen.insert(c.clone()) {
                return Err(BbhcError::InvalidInput(format!(
                    "duplicate configuration {}",
                    pattern_to_string(&c)
                )));
            }
            reordered.push(c);
        }
        Ok(BuildingBlock {
            loci: sorted,
            configs: reordered,
        })
    }

    /// Single-locus block with configurations `0` and `1`.
    pub fn singleton(locus: usize) -> Self {
        BuildingBlock {
            loci: vec![locus],
            configs: vec![vec![false], vec![true]],
        }
    }

    pub fn loci(&self) -> &[usize] {
        &self.loci
    }

    pub fn configs(&self) -> &[Pattern] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.loci.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loci.is_empty()
    }

    pub fn num_configs(&self) -> usize {
        self.configs.len()
    }

    /// The pattern a genotype shows on this block's loci.
    pub fn read(&self, genotype: &Genotype) -> Pattern {
        self.loci.iter().map(|&l| genotype.get(l)).collect()
    }

    pub fn index_of(&self, pattern: &[bool]) -> Option<usize> {
        self.configs.iter().position(|c| c.as_slice() == pattern)
    }

    fn write(&self, genotype: &mut Genotype, config: usize) {
        for (&locus, &bit) in self.loci.iter().zip(&self.configs[config]) {
            genotype.set(locus, bit);
        }
    }
}

/// Configuration choice per block. Indices are 0-based in memory and
/// 1-based whenever serialized.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BbState(Vec<usize>);

impl BbState {
    pub fn new(indices: Vec<usize>) -> Self {
        BbState(indices)
    }

    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| BbhcError::InvalidState("1-based index 0".into()))
            })
            .collect::<Result<Vec<_>>>()
            .map(BbState)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, block: usize) -> usize {
        self.0[block]
    }

    pub(crate) fn set(&mut self, block: usize, config: usize) {
        self.0[block] = config;
    }
}

impl Serialize for BbState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BbState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        BbState::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for BbState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// JSON form of a block: `{"loci": [...], "configs": ["0110", ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockExport {
    pub loci: Vec<usize>,
    pub configs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BbStructure {
    blocks: Vec<BuildingBlock>,
    total_length: usize,
}

impl BbStructure {
    pub fn new(blocks: Vec<BuildingBlock>, total_length: usize) -> Result<Self> {
        let s = BbStructure { blocks, total_length };
        s.validate()?;
        Ok(s)
    }

    /// One singleton block per locus.
    pub fn initial(length: usize) -> Self {
        BbStructure {
            blocks: (0..length).map(BuildingBlock::singleton).collect(),
            total_length: length,
        }
    }

    /// Check that the block loci form an exact partition of `[0, l)`.
    pub fn validate(&self) -> Result<()> {
        if self.total_length == 0 {
            return Err(BbhcError::InvalidInput("structure over zero loci".into()));
        }
        let mut covered = vec![false; self.total_length];
        for (b, block) in self.blocks.iter().enumerate() {
            for &l in block.loci() {
                if l >= self.total_length {
                    return Err(BbhcError::InvalidInput(format!(
                        "block {b} references locus {l} outside [0, {})",
                        self.total_length
                    )));
                }
                if std::mem::replace(&mut covered[l], true) {
                    return Err(BbhcError::InvalidInput(format!(
                        "locus {l} belongs to more than one block"
                    )));
                }
            }
        }
        if let Some(gap) = covered.iter().position(|c| !c) {
            return Err(BbhcError::InvalidInput(format!("locus {gap} is not covered")));
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[BuildingBlock] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &BuildingBlock {
        &self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn check_state(&self, state: &BbState) -> Result<()> {
        if state.len() != self.blocks.len() {
            return Err(BbhcError::InvalidState(format!(
                "state has {} indices for {} blocks",
                state.len(),
                self.blocks.len()
            )));
        }
        for (b, (&idx, block)) in state.indices().iter().zip(&self.blocks).enumerate() {
            if idx >= block.num_configs() {
                return Err(BbhcError::InvalidState(format!(
                    "block {} has {} configurations, state selects #{}",
                    b + 1,
                    block.num_configs(),
                    idx + 1
                )));
            }
        }
        Ok(())
    }

    pub fn decode(&self, state: &BbState) -> Result<Genotype> {
        self.check_state(state)?;
        let mut g = Genotype::zeros(self.total_length);
        for (block, &idx) in self.blocks.iter().zip(state.indices()) {
            block.write(&mut g, idx);
        }
        Ok(g)
    }

    /// Overwrite one block's loci in an already decoded genotype.
    pub(crate) fn write_block(&self, genotype: &mut Genotype, block: usize, config: usize) {
        self.blocks[block].write(genotype, config);
    }

    /// State whose decoding is `genotype`, if the structure can express it.
    pub fn encode(&self, genotype: &Genotype) -> Option<BbState> {
        if genotype.len() != self.total_length {
            return None;
        }
        self.blocks
            .iter()
            .map(|b| b.index_of(&b.read(genotype)))
            .collect::<Option<Vec<_>>>()
            .map(BbState)
    }

    pub fn random_state<R: Rng + ?Sized>(&self, rng: &mut R) -> BbState {
        BbState(
            self.blocks
                .iter()
                .map(|b| rng.random_range(0..b.num_configs()))
                .collect(),
        )
    }

    /// Number of states the structure can express, `prod |V_i|`.
    pub fn neighborhood_size(&self) -> BigUint {
        self.blocks
            .iter()
            .fold(BigUint::from(1u32), |acc, b| acc * BigUint::from(b.num_configs()))
    }

    /// Blocks in genotype coordinates, or in structural coordinates when a
    /// problem is given (loci mapped through the inverse shuffle, sorted, and
    /// pattern bits reordered to match).
    pub fn export(&self, unshuffle: Option<&Problem>) -> Vec<BlockExport> {
        self.blocks
            .iter()
            .map(|b| match unshuffle {
                None => BlockExport {
                    loci: b.loci().to_vec(),
                    configs: b.configs().iter().map(|c| pattern_to_string(c)).collect(),
                },
                Some(problem) => {
                    let mut pairs: Vec<(usize, usize)> = b
                        .loci()
                        .iter()
                        .enumerate()
                        .map(|(i, &l)| (problem.structural_locus(l), i))
                        .collect();
                    pairs.sort_unstable();
                    BlockExport {
                        loci: pairs.iter().map(|&(s, _)| s).collect(),
                        configs: b
                            .configs()
                            .iter()
                            .map(|c| pattern_to_string(&pairs.iter().map(|&(_, i)| c[i]).collect::<Vec<_>>()))
                            .collect(),
                    }
                }
            })
            .collect()
    }

    pub fn from_export(blocks: &[BlockExport], total_length: usize) -> Result<Self> {
        let blocks = blocks
            .iter()
            .map(|b| {
                let configs = b
                    .configs
                    .iter()
                    .map(|c| pattern_from_str(c))
                    .collect::<Result<Vec<_>>>()?;
                BuildingBlock::new(b.loci.clone(), configs)
            })
            .collect::<Result<Vec<_>>>()?;
        BbStructure::new(blocks, total_length)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pats(ps: &[&str]) -> Vec<Pattern> {
        ps.iter().map(|p| pattern_from_str(p).unwrap()).collect()
    }

    /// Three-block, eight-locus structure used in the worked decode example
    /// (1-based loci in the comments, 0-based in code).
    pub(crate) fn worked_example() -> BbStructure {
        BbStructure::new(
            vec![
                // loci 2, 6
                BuildingBlock::new(vec![1, 5], pats(&["00", "11"])).unwrap(),
                // loci 3, 5
                BuildingBlock::new(vec![2, 4], pats(&["00", "01", "11", "10"])).unwrap(),
                // loci 1, 4, 7, 8
                BuildingBlock::new(vec![0, 3, 6, 7], pats(&["0000", "1111"])).unwrap(),
            ],
            8,
        )
        .unwrap()
    }

    #[test]
    fn decode_worked_example() {
        let s = worked_example();
        let st = |v: &[usize]| BbState::from_one_based(v).unwrap();
        assert_eq!(s.decode(&st(&[2, 3, 1])).unwrap().to_string(), "01101100");
        assert_eq!(s.decode(&st(&[2, 1, 1])).unwrap().to_string(), "01000100");
        assert_eq!(s.decode(&st(&[2, 2, 1])).unwrap().to_string(), "01001100");
        assert_eq!(s.decode(&st(&[2, 4, 1])).unwrap().to_string(), "01100100");
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let s = worked_example();
        let err = s.decode(&BbState::from_one_based(&[3, 1, 1]).unwrap());
        assert!(matches!(err, Err(BbhcError::InvalidState(_))));
        assert!(s.decode(&BbState::new(vec![0, 0])).is_err());
    }

    #[test]
    fn initial_structure_shapes() {
        let s = BbStructure::initial(3);
        assert_eq!(s.num_blocks(), 3);
        assert!(s
            .blocks()
            .iter()
            .all(|b| b.configs() == pats(&["0", "1"]).as_slice()));
        assert_eq!(BbStructure::initial(1).num_blocks(), 1);
        let d = BbStructure::initial(4)
            .decode(&BbState::from_one_based(&[1, 2, 1, 2]).unwrap())
            .unwrap();
        assert_eq!(d.to_string(), "0101");
    }

    #[test]
    fn neighborhood_sizes() {
        assert_eq!(worked_example().neighborhood_size(), BigUint::from(16u32));
        assert_eq!(
            BbStructure::initial(70).neighborhood_size(),
            BigUint::from(1u32) << 70usize
        );
        let one = BbStructure::new(
            vec![BuildingBlock::new(vec![0, 1], pats(&["00", "01", "11"])).unwrap()],
            2,
        )
        .unwrap();
        assert_eq!(one.neighborhood_size(), BigUint::from(3u32));
    }

    #[test]
    fn partition_violations() {
        let overlap = BbStructure::new(vec![BuildingBlock::singleton(0), BuildingBlock::singleton(0)], 2);
        assert!(overlap.is_err());
        let gap = BbStructure::new(vec![BuildingBlock::singleton(0)], 2);
        assert!(gap.is_err());
        let outside = BbStructure::new(vec![BuildingBlock::singleton(3)], 1);
        assert!(outside.is_err());
    }

    #[test]
    fn block_validation() {
        assert!(BuildingBlock::new(vec![0, 1], pats(&["00", "00"])).is_err());
        assert!(BuildingBlock::new(vec![0, 1], pats(&["0"])).is_err());
        assert!(BuildingBlock::new(vec![0, 1], vec![]).is_err());
        assert!(BuildingBlock::new(vec![1, 1], pats(&["00"])).is_err());
        // unsorted loci get their pattern bits reordered
        let b = BuildingBlock::new(vec![4, 2], pats(&["10"])).unwrap();
        assert_eq!(b.loci(), &[2, 4]);
        assert_eq!(b.configs()[0], vec![false, true]);
    }

    #[test]
    fn random_state_with_single_configs_is_unique() {
        let s = BbStructure::new(vec![BuildingBlock::new(vec![0, 1], pats(&["01"])).unwrap()], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(s.random_state(&mut rng), BbState::new(vec![0]));
        }
    }

    #[test]
    fn random_state_marginals_are_uniform() {
        // Chi-square per block against uniform; 10^4 draws.
        let s = worked_example();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 10_000;
        let mut counts: Vec<Vec<usize>> = s.blocks().iter().map(|b| vec![0; b.num_configs()]).collect();
        for _ in 0..draws {
            let st = s.random_state(&mut rng);
            for (b, &i) in st.indices().iter().enumerate() {
                counts[b][i] += 1;
            }
        }
        for c in &counts {
            let m = c.len() as f64;
            let expected = draws as f64 / m;
            let chi2: f64 = c.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
            let dof = m - 1.0;
            // mean dof, sd sqrt(2 dof); 5 sigma
            assert!(chi2 < dof + 5.0 * (2.0 * dof).sqrt(), "chi2 {chi2} for {c:?}");
        }
    }

    #[test]
    fn encode_inverts_decode() {
        let s = worked_example();
        let st = BbState::from_one_based(&[2, 4, 2]).unwrap();
        let g = s.decode(&st).unwrap();
        assert_eq!(s.encode(&g), Some(st));
        assert_eq!(s.encode(&"10000000".parse().unwrap()), None);
    }

    #[test]
    fn export_round_trip_and_unshuffle() {
        use crate::hfuncs::{ProblemKind, ProblemSpec};
        let s = worked_example();
        let json = serde_json::to_string(&s.export(None)).unwrap();
        assert!(json.starts_with(r#"[{"loci":[1,5],"configs":["00","11"]}"#));
        let back: Vec<BlockExport> = serde_json::from_str(&json).unwrap();
        assert_eq!(BbStructure::from_export(&back, 8).unwrap(), s);

        let problem = Problem::with_permutation(
            ProblemSpec::new(ProblemKind::Hiff, 3),
            vec![7, 6, 5, 4, 3, 2, 1, 0],
        )
        .unwrap();
        let ex = s.export(Some(&problem));
        assert_eq!(ex[0].loci, vec![2, 6]);
        assert_eq!(ex[1].loci, vec![3, 5]);
        // loci {2,4} map to {5,3}; sorted order flips the pattern bits
        assert_eq!(ex[1].configs, vec!["00", "10", "11", "01"]);
    }

    #[test]
    fn state_serializes_one_based() {
        let st = BbState::new(vec![1, 2, 0]);
        assert_eq!(serde_json::to_string(&st).unwrap(), "[2,3,1]");
        assert_eq!(st.to_string(), "(2,3,1)");
        let back: BbState = serde_json::from_str("[2,3,1]").unwrap();
        assert_eq!(back, st);
        assert!(serde_json::from_str::<BbState>("[0]").is_err());
    }
}
