//! Market model where sellers set prices and compete within each disclosed
//! group.
//!
//! Production costs are constant on each block of the platform's partition
//! and strictly increasing across blocks. Within a group, buyers purchase
//! from the cheapest sellers, so price competition pushes the group price
//! down to the lowest block cost in the group, and only sellers from that
//! lowest-cost block stay in the market. That pins every equilibrium menu
//! exactly: no solver is involved, and when full disclosure is itself
//! implementable the reachable menus are precisely the nonempty submenus of
//! the full-disclosure menu.

use crate::dist::{Convexity, TypeDistribution};
use crate::par;
use crate::population::{
    enumerate_structures_capped, InformationStructure, SellerPopulation, StructureError,
    DEFAULT_ENUMERATION_CAP,
};
use crate::pricedisc::{self, ConstraintSet, Menu, MenuError};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum BertrandError {
    Invalid(String),
    /// A rule that needs an implementable structure got one without an
    /// equilibrium.
    NotImplementable(String),
    Structure(StructureError),
    Menu(MenuError),
}

impl fmt::Display for BertrandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BertrandError::Invalid(m) => write!(f, "invalid price-competition market: {m}"),
            BertrandError::NotImplementable(m) => write!(f, "structure not implementable: {m}"),
            BertrandError::Structure(e) => write!(f, "{e}"),
            BertrandError::Menu(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BertrandError {}

impl From<StructureError> for BertrandError {
    fn from(e: StructureError) -> Self {
        BertrandError::Structure(e)
    }
}

impl From<MenuError> for BertrandError {
    fn from(e: MenuError) -> Self {
        BertrandError::Menu(e)
    }
}

impl From<crate::dist::DistError> for BertrandError {
    fn from(e: crate::dist::DistError) -> Self {
        BertrandError::Menu(MenuError::Dist(e))
    }
}

impl From<crate::population::PopulationError> for BertrandError {
    fn from(e: crate::population::PopulationError) -> Self {
        BertrandError::Invalid(e.to_string())
    }
}

/// Price-competition market: buyers `dist`, sellers `pop`, one production
/// cost per block, strictly increasing in block index.
#[derive(Debug, Clone)]
pub struct PriceMarket {
    pub dist: TypeDistribution,
    pub pop: SellerPopulation,
    costs: Vec<f64>,
}

impl PriceMarket {
    pub fn new(
        dist: TypeDistribution,
        pop: SellerPopulation,
        costs: Vec<f64>,
    ) -> Result<Self, BertrandError> {
        if costs.len() != pop.block_count() {
            return Err(BertrandError::Invalid(format!(
                "need one cost per block: {} given, {} blocks",
                costs.len(),
                pop.block_count()
            )));
        }
        for (i, &c) in costs.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(BertrandError::Invalid(format!(
                    "cost of block {i} must be positive, got {c}"
                )));
            }
            if i > 0 && costs[i - 1] >= c {
                return Err(BertrandError::Invalid(format!(
                    "costs must be strictly increasing across blocks; block {i} has {c} after {}",
                    costs[i - 1]
                )));
            }
        }
        Ok(PriceMarket { dist, pop, costs })
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// The cheapest (lowest-index) block of each group, with groups sorted
    /// so those block indices ascend — equivalently, sorted by group price.
    pub fn lowest_cost_blocks(&self, structure: &InformationStructure) -> Vec<usize> {
        let mut lows: Vec<usize> = structure
            .groups()
            .iter()
            .map(|g| *g.iter().min().unwrap())
            .collect();
        lows.sort_unstable();
        lows
    }

    /// The exact equilibrium menu of a structure: each group sells at the
    /// cost of its cheapest block, and only sellers of that block stay in
    /// the market, so the pair is `(c(G), E[X | G])`.
    pub fn bertrand_menu(
        &self,
        structure: &InformationStructure,
    ) -> Result<BertrandOutcome, BertrandError> {
        // order groups by their cheapest block (= by price)
        let mut order: Vec<usize> = (0..structure.group_count()).collect();
        let lows: Vec<usize> = structure
            .groups()
            .iter()
            .map(|g| *g.iter().min().unwrap())
            .collect();
        order.sort_by_key(|&i| lows[i]);

        let mut pairs = Vec::with_capacity(order.len());
        let mut participants = Vec::with_capacity(order.len());
        let mut lowest = Vec::with_capacity(order.len());
        for &i in &order {
            let g = lows[i];
            let price = self.costs[g];
            let quality = self.pop.conditional_mean_unweighted(&self.pop.blocks()[g])?;
            pairs.push((price, quality));
            participants.push(self.pop.blocks()[g].clone());
            lowest.push(g);
        }
        Ok(BertrandOutcome {
            menu: Menu::from_tuples(&pairs)?,
            groups: order
                .iter()
                .map(|&i| structure.groups()[i].clone())
                .collect(),
            lowest_blocks: lowest,
            participating_atoms: participants,
        })
    }

    /// A structure is implementable exactly when every pair of its menu
    /// keeps positive demand.
    pub fn is_implementable(
        &self,
        structure: &InformationStructure,
    ) -> Result<(bool, Vec<f64>), BertrandError> {
        let outcome = self.bertrand_menu(structure)?;
        let split = pricedisc::demand_split(&outcome.menu, &self.dist);
        Ok((split.fully_demanded(), split.demands))
    }

    /// The feasible menus of this market. With implementable full
    /// disclosure these are all nonempty submenus of the full-disclosure
    /// menu; otherwise the menus of every implementable structure are
    /// collected directly.
    pub fn constraint_set(&self) -> Result<(ConstraintSet, bool), BertrandError> {
        let l = self.pop.block_count();
        let io = InformationStructure::new((0..l).map(|b| vec![b]).collect(), l)?;
        let (io_ok, _) = self.is_implementable(&io)?;
        if io_ok {
            let full = self.bertrand_menu(&io)?.menu;
            return Ok((ConstraintSet::power_set_of(&full)?, true));
        }
        let mut menus = Vec::new();
        for s in enumerate_structures_capped(&self.pop, DEFAULT_ENUMERATION_CAP)? {
            let (ok, _) = self.is_implementable(&s)?;
            if ok {
                let m = self.bertrand_menu(&s)?.menu;
                if !menus.contains(&m) {
                    menus.push(m);
                }
            }
        }
        Ok((ConstraintSet::new(menus)?, false))
    }

    /// Brute-force revenue search over every disclosure structure.
    pub fn search_optimal_structure(&self) -> Result<PriceSearch, BertrandError> {
        self.search_optimal_structure_with(DEFAULT_ENUMERATION_CAP, 1)
    }

    pub fn search_optimal_structure_with(
        &self,
        cap: usize,
        jobs: usize,
    ) -> Result<PriceSearch, BertrandError> {
        let structures = enumerate_structures_capped(&self.pop, cap)?;
        let outcomes = par::map_indexed(jobs, &structures, |s| -> Result<PriceRow, BertrandError> {
            let outcome = self.bertrand_menu(s)?;
            let split = pricedisc::demand_split(&outcome.menu, &self.dist);
            let implementable = split.fully_demanded();
            let revenue =
                implementable.then(|| pricedisc::menu_revenue(&outcome.menu, &self.dist));
            Ok(PriceRow {
                structure: s.clone(),
                outcome,
                demands: split.demands,
                implementable,
                revenue,
            })
        });
        let mut rows = Vec::with_capacity(outcomes.len());
        for r in outcomes {
            rows.push(r?);
        }
        let winner = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.revenue.is_some())
            .max_by(|(_, x), (_, y)| {
                x.revenue
                    .unwrap()
                    .partial_cmp(&y.revenue.unwrap())
                    .unwrap()
                    .then_with(|| y.structure.group_count().cmp(&x.structure.group_count()))
            })
            .map(|(i, _)| i)
            .ok_or_else(|| BertrandError::NotImplementable("no implementable structure".into()))?;

        let (a, b) = self.dist.support();
        let fm_class = self.dist.classify_fm_convexity(a, b)?;
        // with weakly convex F(m)m the best single-group structure must tie
        // the overall best
        let one_group_matches_best = if fm_class.is_convex() {
            let best_single = rows
                .iter()
                .filter(|r| r.structure.is_single_group())
                .filter_map(|r| r.revenue)
                .fold(f64::NEG_INFINITY, f64::max);
            Some(best_single >= rows[winner].revenue.unwrap() - 1e-12)
        } else {
            None
        };
        let l = self.pop.block_count();
        let winner_is_highest_block = rows[winner].structure.groups() == [vec![l - 1]];
        Ok(PriceSearch {
            rows,
            winner,
            fm_class,
            one_group_matches_best,
            winner_is_highest_block,
        })
    }

    /// Should the lowest group be dropped? Classifies `F(m)·m` between the
    /// first group's participation cutoff and the second group's marginal
    /// cutoff: convex means dropping cannot lose revenue, concave means
    /// keeping cannot lose.
    pub fn local_drop_rule(
        &self,
        structure: &InformationStructure,
    ) -> Result<DropRule, BertrandError> {
        if structure.group_count() < 2 {
            return Err(BertrandError::Invalid(
                "drop rule needs at least two groups".into(),
            ));
        }
        let (ok, _) = self.is_implementable(structure)?;
        if !ok {
            return Err(BertrandError::NotImplementable(
                "drop rule applies to implementable structures".into(),
            ));
        }
        let outcome = self.bertrand_menu(structure)?;
        let p = outcome.menu.pairs();
        let (p1, q1) = (p[0].price, p[0].quality);
        let (p2, q2) = (p[1].price, p[1].quality);
        if (q2 - q1).abs() < 1e-15 {
            return Err(BertrandError::Invalid(
                "adjacent groups share an expected quality".into(),
            ));
        }
        let lo = p1 / q1;
        let hi = (p2 - p1) / (q2 - q1);
        let class = self.dist.classify_fm_convexity(lo.min(hi), hi.max(lo))?;
        let verdict = if class.is_convex() {
            DropVerdict::DropLowGroup
        } else if class.is_concave() {
            DropVerdict::KeepLowGroup
        } else {
            DropVerdict::Indeterminate
        };

        let dropped =
            InformationStructure::new(outcome.groups[1..].to_vec(), self.pop.block_count())?;
        let full_rev = pricedisc::menu_revenue(&outcome.menu, &self.dist);
        let dropped_rev = pricedisc::menu_revenue(&self.bertrand_menu(&dropped)?.menu, &self.dist);
        Ok(DropRule {
            verdict,
            interval: (lo, hi),
            classification: class,
            revenue_full: full_rev,
            revenue_dropped: dropped_rev,
        })
    }

    /// Is full disclosure certifiably optimal? Concavity of `F(m)·m` over
    /// the full-disclosure menu's cutoff span certifies it without search.
    pub fn full_disclosure_rule(&self) -> Result<DisclosureRule, BertrandError> {
        let l = self.pop.block_count();
        let io = InformationStructure::new((0..l).map(|b| vec![b]).collect(), l)?;
        let (ok, _) = self.is_implementable(&io)?;
        if !ok {
            return Err(BertrandError::NotImplementable(
                "full disclosure admits no equilibrium".into(),
            ));
        }
        if l == 1 {
            // a single block has no rival structure
            return Ok(DisclosureRule {
                certified_optimal: true,
                interval: None,
                classification: None,
                revenue_full_disclosure: pricedisc::menu_revenue(
                    &self.bertrand_menu(&io)?.menu,
                    &self.dist,
                ),
            });
        }
        let menu = self.bertrand_menu(&io)?.menu;
        let pairs = menu.pairs();
        let (p1, q1) = (pairs[0].price, pairs[0].quality);
        let (pl, ql) = (pairs[l - 1].price, pairs[l - 1].quality);
        let (pl1, ql1) = (pairs[l - 2].price, pairs[l - 2].quality);
        if (ql - ql1).abs() < 1e-15 {
            return Err(BertrandError::Invalid(
                "top blocks share an expected quality".into(),
            ));
        }
        let lo = p1 / q1;
        let hi = (pl - pl1) / (ql - ql1);
        let class = self.dist.classify_fm_convexity(lo.min(hi), hi.max(lo))?;
        Ok(DisclosureRule {
            certified_optimal: class.is_concave(),
            interval: Some((lo, hi)),
            classification: Some(class),
            revenue_full_disclosure: pricedisc::menu_revenue(&menu, &self.dist),
        })
    }
}

/// Equilibrium of one structure: the menu, the groups in price order, each
/// group's cheapest block, and which atoms actually sell.
#[derive(Debug, Clone, PartialEq)]
pub struct BertrandOutcome {
    pub menu: Menu,
    pub groups: Vec<Vec<usize>>,
    pub lowest_blocks: Vec<usize>,
    pub participating_atoms: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct PriceRow {
    pub structure: InformationStructure,
    pub outcome: BertrandOutcome,
    pub demands: Vec<f64>,
    pub implementable: bool,
    pub revenue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PriceSearch {
    pub rows: Vec<PriceRow>,
    pub winner: usize,
    pub fm_class: Convexity,
    /// With weakly convex `F(m)·m`: does some single-group structure tie
    /// the winner? `None` when the classification does not apply.
    pub one_group_matches_best: Option<bool>,
    /// Whether the winner bans everyone but the top block.
    pub winner_is_highest_block: bool,
}

impl PriceSearch {
    pub fn winner_row(&self) -> &PriceRow {
        &self.rows[self.winner]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropVerdict {
    DropLowGroup,
    KeepLowGroup,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropRule {
    pub verdict: DropVerdict,
    pub interval: (f64, f64),
    pub classification: Convexity,
    pub revenue_full: f64,
    pub revenue_dropped: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisclosureRule {
    pub certified_optimal: bool,
    pub interval: Option<(f64, f64)>,
    pub classification: Option<Convexity>,
    pub revenue_full_disclosure: f64,
}
