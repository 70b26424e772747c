//! Linkage detection over a memory of local optima, and structure rebuild.
//!
//! Two blocks are linked when their observed configurations correspond
//! one-to-one across the memory. That holds exactly when both blocks split
//! the memory entries into the same groups ("entries `a` and `b` agree on
//! block `i`" iff they agree on block `j`), so linkage is tested by comparing
//! canonical partition signatures. Partition equality is an equivalence
//! relation, which is why clusters can be read off in one pass and the
//! visiting order does not matter.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::bbmodel::{BbState, BbStructure, BuildingBlock, Pattern};
use crate::error::{BbhcError, Result};
use crate::hfuncs::Genotype;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryEntry {
    pub state: BbState,
    pub genotype: Genotype,
    pub score: f64,
}

/// Bounded store of hill-climb results, all taken under one structure.
#[derive(Clone, Debug, Default)]
pub struct MemoryBuffer {
    entries: Vec<MemoryEntry>,
    capacity: usize,
}

impl MemoryBuffer {
    pub fn new(capacity: usize) -> Self {
        MemoryBuffer {
            entries: Vec::with_capacity(capacity),
            capacity,
        }
    }

    /// Build a memory directly from states, decoding each through `structure`.
    /// Scores are left at zero; linkage only looks at states and genotypes.
    pub fn from_states(structure: &BbStructure, states: &[BbState]) -> Result<Self> {
        let mut m = MemoryBuffer::new(states.len());
        for s in states {
            m.push(MemoryEntry {
                state: s.clone(),
                genotype: structure.decode(s)?,
                score: 0.0,
            })?;
        }
        Ok(m)
    }

    pub fn push(&mut self, entry: MemoryEntry) -> Result<()> {
        if self.is_full() {
            return Err(BbhcError::InvalidState(format!(
                "memory is full ({} entries)",
                self.capacity
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<MemoryEntry> {
        self.entries.pop()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity;
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn distinct_genotypes(&self) -> usize {
        self.entries
            .iter()
            .map(|e| &e.genotype)
            .collect::<HashSet<_>>()
            .len()
    }
}

/// Canonical partition of the memory entries induced by one block: each
/// entry gets the rank of first appearance of its configuration index.
fn partition_signature(memory: &MemoryBuffer, block: usize) -> Vec<u32> {
    let mut labels: HashMap<usize, u32> = HashMap::new();
    memory
        .entries
        .iter()
        .map(|e| {
            let next = labels.len() as u32;
            *labels.entry(e.state.get(block)).or_insert(next)
        })
        .collect()
}

fn require_nonempty(memory: &MemoryBuffer) -> Result<()> {
    if memory.is_empty() {
        return Err(BbhcError::InvalidState("linkage needs a non-empty memory".into()));
    }
    Ok(())
}

/// Whether blocks `i` and `j` are linked under the given memory.
///
/// Reflexive by convention (`linked(i, i)` is `true`).
pub fn linked(i: usize, j: usize, memory: &MemoryBuffer) -> Result<bool> {
    require_nonempty(memory)?;
    let n = memory.entries[0].state.len();
    if i >= n || j >= n {
        return Err(BbhcError::InvalidArgument(format!(
            "block index out of range ({i}, {j}) for {n} blocks"
        )));
    }
    Ok(i == j || partition_signature(memory, i) == partition_signature(memory, j))
}

/// Equivalence classes of the linkage relation. Each cluster is sorted, and
/// clusters are ordered by their smallest block index.
pub fn detect_clusters(structure: &BbStructure, memory: &MemoryBuffer) -> Result<Vec<Vec<usize>>> {
    require_nonempty(memory)?;
    for e in &memory.entries {
        structure.check_state(&e.state)?;
    }
    let mut by_signature: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for b in 0..structure.num_blocks() {
        let sig = partition_signature(memory, b);
        match by_signature.get(&sig) {
            Some(&c) => clusters[c].push(b),
            None => {
                by_signature.insert(sig, clusters.len());
                clusters.push(vec![b]);
            }
        }
    }
    Ok(clusters)
}

/// Rebuild the structure from linkage clusters.
///
/// A multi-block cluster becomes one block over the union of its loci, whose
/// configurations are the distinct patterns the memory genotypes show on
/// those loci (in order of first appearance). A singleton cluster keeps its
/// loci and is restricted to the configurations observed in memory. Blocks of
/// the result are ordered by their smallest locus.
pub fn rebuild_structure(
    structure: &BbStructure,
    clusters: &[Vec<usize>],
    memory: &MemoryBuffer,
) -> Result<BbStructure> {
    require_nonempty(memory)?;
    let n = structure.num_blocks();
    let mut assigned = vec![false; n];
    for &b in clusters.iter().flatten() {
        if b >= n {
            return Err(BbhcError::InvalidArgument(format!(
                "cluster references block {b}, structure has {n}"
            )));
        }
        if std::mem::replace(&mut assigned[b], true) {
            return Err(BbhcError::InvalidArgument(format!(
                "block {b} appears in more than one cluster"
            )));
        }
    }
    if let Some(missing) = assigned.iter().position(|a| !a) {
        return Err(BbhcError::InvalidArgument(format!(
            "block {missing} is not in any cluster"
        )));
    }
    for e in &memory.entries {
        structure.check_state(&e.state)?;
    }

    let mut blocks = Vec::with_capacity(clusters.len());
    for cluster in clusters.iter().filter(|c| !c.is_empty()) {
        if let [b] = cluster.as_slice() {
            let block = structure.block(*b);
            let observed: HashSet<usize> = memory.entries.iter().map(|e| e.state.get(*b)).collect();
            let configs: Vec<Pattern> = block
                .configs()
                .iter()
                .enumerate()
                .filter(|(i, _)| observed.contains(i))
                .map(|(_, c)| c.clone())
                .collect();
            blocks.push(BuildingBlock::new(block.loci().to_vec(), configs)?);
        } else {
            let mut loci: Vec<usize> = cluster
                .iter()
                .flat_map(|&b| structure.block(b).loci().iter().copied())
                .collect();
            loci.sort_unstable();
            let mut seen = HashSet::new();
            let mut configs = Vec::new();
            for e in &memory.entries {
                let p: Pattern = loci.iter().map(|&l| e.genotype.get(l)).collect();
                if seen.insert(p.clone()) {
                    configs.push(p);
                }
            }
            blocks.push(BuildingBlock::new(loci, configs)?);
        }
    }
    blocks.sort_by_key(|b| b.loci()[0]);
    BbStructure::new(blocks, structure.total_length())
}
