//! Seller quality populations, the platform's partition, and disclosure
//! structures.
//!
//! The seller side is a finite atomic measure: atoms `(quality, mass)` on
//! `[0, x̄]`, partitioned into blocks — the finest quality classes the
//! platform can tell apart. A disclosure structure groups blocks into
//! disjoint unions shown to buyers; blocks left out of every group are
//! banned from the market. Keeping the measure atomic turns every integral
//! downstream into an exact finite sum.

use std::fmt;

/// Cap on the block count for exhaustive structure enumeration. The number
/// of structures grows like a Bell number and passes 6.7e5 at ten blocks.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub quality: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PopulationError {
    /// Construction problems, one message per offending atom/block index.
    Invalid(Vec<String>),
    /// A conditional mean over a set with zero weighted mass.
    EmptySupport,
}

impl fmt::Display for PopulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PopulationError::Invalid(msgs) => {
                write!(f, "invalid seller population: {}", msgs.join("; "))
            }
            PopulationError::EmptySupport => {
                write!(f, "empty-support: conditional mean over zero weighted mass")
            }
        }
    }
}

impl std::error::Error for PopulationError {}

/// Finite atomic seller-quality measure plus the platform's partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SellerPopulation {
    atoms: Vec<Atom>,
    blocks: Vec<Vec<usize>>,
    x_bar: f64,
}

impl SellerPopulation {
    /// Every atom must land in exactly one block, every block must be
    /// nonempty with positive total mass, and qualities must lie in
    /// `[0, x_bar]`. All violations are reported together.
    pub fn new(
        atoms: Vec<Atom>,
        blocks: Vec<Vec<usize>>,
        x_bar: f64,
    ) -> Result<Self, PopulationError> {
        let mut problems = Vec::new();
        if atoms.is_empty() {
            problems.push("no atoms".to_string());
        }
        if blocks.is_empty() {
            problems.push("no blocks".to_string());
        }
        if !(x_bar.is_finite() && x_bar > 0.0) {
            problems.push(format!("x_bar must be positive, got {x_bar}"));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass.is_finite() && a.mass > 0.0) {
                problems.push(format!("atom {i}: mass must be positive, got {}", a.mass));
            }
            if !(a.quality.is_finite() && 0.0 <= a.quality && a.quality <= x_bar) {
                problems.push(format!(
                    "atom {i}: quality {} outside [0, {x_bar}]",
                    a.quality
                ));
            }
        }
        let mut owner = vec![None::<usize>; atoms.len()];
        for (b, idxs) in blocks.iter().enumerate() {
            if idxs.is_empty() {
                problems.push(format!("block {b}: empty"));
            }
            for &i in idxs {
                if i >= atoms.len() {
                    problems.push(format!(
                        "block {b}: atom index {i} out of range ({} atoms)",
                        atoms.len()
                    ));
                } else if let Some(prev) = owner[i] {
                    problems.push(format!("atom {i} assigned to blocks {prev} and {b}"));
                } else {
                    owner[i] = Some(b);
                }
            }
        }
        for (i, o) in owner.iter().enumerate() {
            if o.is_none() && i < atoms.len() {
                problems.push(format!("atom {i} belongs to no block"));
            }
        }
        if !problems.is_empty() {
            return Err(PopulationError::Invalid(problems));
        }
        Ok(SellerPopulation {
            atoms,
            blocks,
            x_bar,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn x_bar(&self) -> f64 {
        self.x_bar
    }

    pub fn block_mass(&self, block: usize) -> f64 {
        self.blocks[block].iter().map(|&i| self.atoms[i].mass).sum()
    }

    /// Atom indices of a union of blocks, in ascending block-then-atom order.
    pub fn atoms_of_blocks(&self, block_set: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &b in block_set {
            out.extend_from_slice(&self.blocks[b]);
        }
        out
    }

    /// Weighted conditional mean `Σ x·w·mass / Σ w·mass` over the given
    /// atoms. `weights` is indexed by atom; unit weights give `E[X | set]`.
    pub fn conditional_mean(
        &self,
        atom_set: &[usize],
        weights: &[f64],
    ) -> Result<f64, PopulationError> {
        let mut num = 0.0;
        let mut den = 0.0;
        for &i in atom_set {
            let w = weights[i] * self.atoms[i].mass;
            num += self.atoms[i].quality * w;
            den += w;
        }
        if den <= 0.0 {
            return Err(PopulationError::EmptySupport);
        }
        Ok(num / den)
    }

    /// `E[X | atom_set]` under the raw masses.
    pub fn conditional_mean_unweighted(&self, atom_set: &[usize]) -> Result<f64, PopulationError> {
        let unit = vec![1.0; self.atoms.len()];
        self.conditional_mean(atom_set, &unit)
    }
}

// ---------------------------------------------------------------------------
// disclosure structures
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum StructureError {
    Invalid(String),
    /// Enumeration refused: the exact structure count exceeds the cap budget.
    OverCap {
        blocks: usize,
        cap: usize,
        count: u128,
    },
}

impl fmt::Display for StructureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureError::Invalid(msg) => write!(f, "invalid information structure: {msg}"),
            StructureError::OverCap { blocks, cap, count } => write!(
                f,
                "{blocks} blocks exceed the enumeration cap of {cap}: {count} structures would be produced"
            ),
        }
    }
}

impl std::error::Error for StructureError {}

/// A family of disjoint groups of block indices. Blocks absent from every
/// group are banned. Canonical form: indices ascending within each group,
/// groups ordered by their smallest block index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InformationStructure {
    groups: Vec<Vec<usize>>,
}

impl InformationStructure {
    pub fn new(groups: Vec<Vec<usize>>, block_count: usize) -> Result<Self, StructureError> {
        if groups.is_empty() {
            return Err(StructureError::Invalid("no groups".into()));
        }
        let mut seen = vec![false; block_count];
        let mut canon: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
        for (g, group) in groups.into_iter().enumerate() {
            if group.is_empty() {
                return Err(StructureError::Invalid(format!("group {g} is empty")));
            }
            let mut group = group;
            group.sort_unstable();
            group.dedup();
            for &b in &group {
                if b >= block_count {
                    return Err(StructureError::Invalid(format!(
                        "group {g}: block index {b} out of range ({block_count} blocks)"
                    )));
                }
                if seen[b] {
                    return Err(StructureError::Invalid(format!(
                        "block {b} appears in more than one group"
                    )));
                }
                seen[b] = true;
            }
            canon.push(group);
        }
        canon.sort_by_key(|g| g[0]);
        Ok(InformationStructure { groups: canon })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn is_single_group(&self) -> bool {
        self.groups.len() == 1
    }

    /// Blocks outside every group.
    pub fn banned_blocks(&self, block_count: usize) -> Vec<usize> {
        let mut used = vec![false; block_count];
        for g in &self.groups {
            for &b in g {
                used[b] = true;
            }
        }
        (0..block_count).filter(|&b| !used[b]).collect()
    }
}

impl fmt::Display for InformationStructure {
    /// Renders as `{A1,A2}|{A3}` with 1-based block names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str("{")?;
            for (j, b) in g.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "A{}", b + 1)?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

/// Bell numbers `B(0) ..= B(n)` via the Bell triangle.
pub fn bell_numbers(n: usize) -> Vec<u128> {
    let mut bells = vec![1u128];
    let mut row = vec![1u128];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        bells.push(next[0]);
        row = next;
    }
    bells.truncate(n + 1);
    bells
}

/// Exact number of structures over `l` blocks: each nonempty block subset
/// contributes its set partitions, which telescopes to `Bell(l + 1) − 1`.
pub fn structure_count(l: usize) -> u128 {
    bell_numbers(l + 1)[l + 1] - 1
}

/// Every disclosure structure over the population's blocks, in a fixed
/// deterministic order, using the default cap.
pub fn enumerate_structures(
    pop: &SellerPopulation,
) -> Result<Vec<InformationStructure>, StructureError> {
    enumerate_structures_capped(pop, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_structures_capped(
    pop: &SellerPopulation,
    cap: usize,
) -> Result<Vec<InformationStructure>, StructureError> {
    let l = pop.block_count();
    if l > cap {
        return Err(StructureError::OverCap {
            blocks: l,
            cap,
            count: structure_count(l),
        });
    }
    let mut out = Vec::with_capacity(structure_count(l) as usize);
    // nonempty block subsets in ascending bitmask order
    for mask in 1u32..(1u32 << l) {
        let subset: Vec<usize> = (0..l).filter(|&b| mask & (1 << b) != 0).collect();
        partitions_of(&subset, &mut |parts| {
            out.push(InformationStructure {
                groups: parts.to_vec(),
            });
        });
    }
    Ok(out)
}

/// Set partitions of `items` (assumed sorted ascending) via restricted
/// growth strings. Each partition arrives with groups ordered by smallest
/// element and elements ascending, i.e. already canonical.
fn partitions_of(items: &[usize], emit: &mut impl FnMut(&[Vec<usize>])) {
    let n = items.len();
    let mut rgs = vec![0usize; n];
    loop {
        let k = rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &g) in rgs.iter().enumerate() {
            parts[g].push(items[i]);
        }
        emit(&parts);
        // next restricted growth string
        let mut i = n;
        loop {
            if i <= 1 {
                return;
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
        }
    }
}
