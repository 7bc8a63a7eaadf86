//! Market model where the platform posts prices and sellers choose
//! quantities.
//!
//! A seller of quality `x` facing price `p` supplies `(p / k(x))^{1/α}`
//! units, so group supply is a power of the group price and, crucially, the
//! quantity-weighted expected quality of a group does not depend on prices.
//! For a disclosure structure with groups sorted by expected quality, the
//! per-group excess supply is the gradient of a strictly convex potential on
//! the open set of price vectors with positive demand everywhere; the unique
//! interior zero of that gradient is the only equilibrium the structure can
//! have. The solver minimizes the potential by damped Newton steps with an
//! analytic tridiagonal Hessian and feasibility backtracking, falling back
//! to bisection on the monotone excess supply for single-group structures.

use crate::dist::{Convexity, TypeDistribution};
use crate::par;
use crate::population::{
    enumerate_structures_capped, InformationStructure, SellerPopulation, StructureError,
    DEFAULT_ENUMERATION_CAP,
};
use crate::pricedisc::{self, Menu, MenuError};
use std::fmt;

/// Gradient norm below which a stationary point counts as an equilibrium.
const GRAD_TOL: f64 = 1e-12;
/// Implementability threshold on the clearing residual.
const IMPLEMENTABLE_GRAD: f64 = 1e-10;
/// Demands below this are treated as a boundary collapse.
const DEMAND_FLOOR: f64 = 1e-12;
/// Expected qualities closer than this are treated as equal.
const QUALITY_TIE_TOL: f64 = 1e-12;

const MAX_NEWTON_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum QuantityError {
    Invalid(String),
    /// Price argument outside the open domain; names the violation.
    OutsideDomain(String),
    /// Newton failed to reach the gradient tolerance away from the boundary.
    NonConvergence { iterations: usize, grad_norm: f64 },
    /// A menu was requested for a structure with no equilibrium.
    NotImplementable(Infeasibility),
    Structure(StructureError),
    Menu(MenuError),
}

impl fmt::Display for QuantityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantityError::Invalid(m) => write!(f, "invalid quantity market: {m}"),
            QuantityError::OutsideDomain(m) => write!(f, "price vector outside domain: {m}"),
            QuantityError::NonConvergence {
                iterations,
                grad_norm,
            } => write!(
                f,
                "no convergence after {iterations} iterations (gradient norm {grad_norm:e})"
            ),
            QuantityError::NotImplementable(why) => write!(f, "structure not implementable: {why}"),
            QuantityError::Structure(e) => write!(f, "{e}"),
            QuantityError::Menu(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for QuantityError {}

impl From<StructureError> for QuantityError {
    fn from(e: StructureError) -> Self {
        QuantityError::Structure(e)
    }
}

impl From<MenuError> for QuantityError {
    fn from(e: MenuError) -> Self {
        QuantityError::Menu(e)
    }
}

impl From<crate::dist::DistError> for QuantityError {
    fn from(e: crate::dist::DistError) -> Self {
        QuantityError::Menu(MenuError::Dist(e))
    }
}

/// Why a structure admits no equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// Two groups share an expected quality, so no price vector can give
    /// both positive demand.
    EqualExpectedQualities { group_a: usize, group_b: usize },
    /// The potential's minimizing path hits the boundary: this group's
    /// demand collapses to zero.
    DemandCollapse { group: usize },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::EqualExpectedQualities { group_a, group_b } => write!(
                f,
                "groups {group_a} and {group_b} have equal expected quality"
            ),
            Infeasibility::DemandCollapse { group } => {
                write!(f, "demand for group {group} collapses to zero")
            }
        }
    }
}

/// Posted-price market: buyers `dist`, sellers `pop`, per-atom cost scale
/// `k` and common cost curvature `α` (cost of `h` units is
/// `k·h^{α+1}/(α+1)`).
#[derive(Debug, Clone)]
pub struct QuantityMarket {
    pub dist: TypeDistribution,
    pub pop: SellerPopulation,
    cost_coef: Vec<f64>,
    alpha: f64,
}

impl QuantityMarket {
    pub fn new(
        dist: TypeDistribution,
        pop: SellerPopulation,
        cost_coef: Vec<f64>,
        alpha: f64,
    ) -> Result<Self, QuantityError> {
        if cost_coef.len() != pop.atoms().len() {
            return Err(QuantityError::Invalid(format!(
                "need one cost coefficient per atom: {} given, {} atoms",
                cost_coef.len(),
                pop.atoms().len()
            )));
        }
        for (i, &k) in cost_coef.iter().enumerate() {
            if !(k.is_finite() && k > 0.0) {
                return Err(QuantityError::Invalid(format!(
                    "cost coefficient of atom {i} must be positive, got {k}"
                )));
            }
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(QuantityError::Invalid(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(QuantityMarket {
            dist,
            pop,
            cost_coef,
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cost_coef(&self) -> &[f64] {
        &self.cost_coef
    }

    /// Profit-maximizing quantity `(p / k)^{1/α}` of one seller atom.
    pub fn optimal_quantity(&self, atom: usize, price: f64) -> Result<f64, QuantityError> {
        if !(price.is_finite() && price > 0.0) {
            return Err(QuantityError::Invalid(format!(
                "price must be positive, got {price}"
            )));
        }
        Ok((price / self.cost_coef[atom]).powf(1.0 / self.alpha))
    }

    /// Supply weight `K = Σ k^{-1/α} · mass` of a union of blocks; group
    /// supply at price `p` is `K · p^{1/α}`.
    pub fn group_weight(&self, blocks: &[usize]) -> f64 {
        self.pop
            .atoms_of_blocks(blocks)
            .iter()
            .map(|&i| self.cost_coef[i].powf(-1.0 / self.alpha) * self.pop.atoms()[i].mass)
            .sum()
    }

    /// Quantity-weighted expected quality of a union of blocks. Sellers with
    /// lower costs produce more, so the mean weights each atom by
    /// `k^{-1/α} · mass`; prices scale out.
    pub fn expected_quality(&self, blocks: &[usize]) -> f64 {
        let atoms = self.pop.atoms_of_blocks(blocks);
        let weights: Vec<f64> = self
            .pop
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, _)| self.cost_coef[i].powf(-1.0 / self.alpha))
            .collect();
        self.pop
            .conditional_mean(&atoms, &weights)
            .expect("blocks have positive mass")
    }

    /// Total supply of a union of blocks at a price.
    pub fn supply(&self, blocks: &[usize], price: f64) -> Result<f64, QuantityError> {
        if !(price.is_finite() && price > 0.0) {
            return Err(QuantityError::Invalid(format!(
                "price must be positive, got {price}"
            )));
        }
        Ok(self.group_weight(blocks) * price.powf(1.0 / self.alpha))
    }

    fn groups_sorted(&self, structure: &InformationStructure) -> Result<GroupData, Infeasibility> {
        let mut order: Vec<usize> = (0..structure.group_count()).collect();
        let qualities: Vec<f64> = structure
            .groups()
            .iter()
            .map(|g| self.expected_quality(g))
            .collect();
        order.sort_by(|&i, &j| qualities[i].partial_cmp(&qualities[j]).unwrap());
        let groups: Vec<Vec<usize>> = order
            .iter()
            .map(|&i| structure.groups()[i].clone())
            .collect();
        let qualities: Vec<f64> = order.iter().map(|&i| qualities[i]).collect();
        for i in 1..qualities.len() {
            if (qualities[i] - qualities[i - 1]).abs() <= QUALITY_TIE_TOL * qualities[i].max(1.0) {
                return Err(Infeasibility::EqualExpectedQualities {
                    group_a: i - 1,
                    group_b: i,
                });
            }
        }
        let weights = groups.iter().map(|g| self.group_weight(g)).collect();
        Ok(GroupData {
            groups,
            qualities,
            weights,
        })
    }

    /// Potential value at a price vector for the given structure. Prices
    /// correspond to the structure's groups sorted by expected quality
    /// ascending and must lie in the open domain (positive, increasing,
    /// every group's demand positive).
    pub fn clearing_potential(
        &self,
        structure: &InformationStructure,
        prices: &[f64],
    ) -> Result<f64, QuantityError> {
        let gd = self
            .groups_sorted(structure)
            .map_err(QuantityError::NotImplementable)?;
        self.check_domain(&gd, prices)?;
        Ok(self.potential(&gd, prices))
    }

    /// Per-group excess supply (supply minus demand) at a price vector, the
    /// gradient of [`Self::clearing_potential`].
    pub fn excess_supply(
        &self,
        structure: &InformationStructure,
        prices: &[f64],
    ) -> Result<Vec<f64>, QuantityError> {
        let gd = self
            .groups_sorted(structure)
            .map_err(QuantityError::NotImplementable)?;
        self.check_domain(&gd, prices)?;
        Ok(self.gradient(&gd, prices))
    }

    fn check_domain(&self, gd: &GroupData, prices: &[f64]) -> Result<(), QuantityError> {
        if prices.len() != gd.groups.len() {
            return Err(QuantityError::OutsideDomain(format!(
                "{} prices for {} groups",
                prices.len(),
                gd.groups.len()
            )));
        }
        let mut prev = 0.0;
        for (i, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p > prev) {
                return Err(QuantityError::OutsideDomain(format!(
                    "prices must be positive and strictly increasing; violated at index {i} ({p} after {prev})"
                )));
            }
            prev = p;
        }
        let demands = gd.demands(&self.dist, prices);
        for (i, &d) in demands.iter().enumerate() {
            if d <= 0.0 {
                let m = gd.cutoff(prices, i);
                return Err(QuantityError::OutsideDomain(format!(
                    "group {i} has zero demand (cutoff {m})"
                )));
            }
        }
        Ok(())
    }

    fn potential(&self, gd: &GroupData, prices: &[f64]) -> f64 {
        let n = prices.len();
        let a = self.alpha;
        let mut acc = 0.0;
        for (p, w) in prices.iter().zip(&gd.weights) {
            acc += p.powf((a + 1.0) / a) * w / (1.0 + 1.0 / a);
        }
        acc -= prices[n - 1];
        let (mut pp, mut qq) = (0.0, 0.0);
        for (p, q) in prices.iter().zip(&gd.qualities) {
            let dq = q - qq;
            acc += self.dist.f2_ext((p - pp) / dq) * dq;
            pp = *p;
            qq = *q;
        }
        acc
    }

    fn gradient(&self, gd: &GroupData, prices: &[f64]) -> Vec<f64> {
        let demands = gd.demands(&self.dist, prices);
        (0..prices.len())
            .map(|i| gd.weights[i] * prices[i].powf(1.0 / self.alpha) - demands[i])
            .collect()
    }

    /// Tridiagonal Hessian of the potential: a positive supply slope on the
    /// diagonal plus density terms at the cutoffs.
    fn hessian(&self, gd: &GroupData, prices: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = prices.len();
        let a = self.alpha;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)]; // off[i] couples i and i+1
        for i in 0..n {
            diag[i] = gd.weights[i] / a * prices[i].powf(1.0 / a - 1.0);
            let dq_i = gd.qualities[i] - if i == 0 { 0.0 } else { gd.qualities[i - 1] };
            let f_i = self.dist.pdf_ext(gd.cutoff(prices, i));
            diag[i] += f_i / dq_i;
            if i + 1 < n {
                let dq_next = gd.qualities[i + 1] - gd.qualities[i];
                let f_next = self.dist.pdf_ext(gd.cutoff(prices, i + 1));
                diag[i] += f_next / dq_next;
                off[i] = -f_next / dq_next;
            }
        }
        (diag, off)
    }

    /// Equilibrium of a disclosure structure, from the default start.
    pub fn solve_equilibrium(
        &self,
        structure: &InformationStructure,
    ) -> Result<EquilibriumResult, QuantityError> {
        self.solve_equilibrium_from(structure, None)
    }

    /// Equilibrium solve with an optional initial interior price vector
    /// (ordered by expected quality ascending).
    pub fn solve_equilibrium_from(
        &self,
        structure: &InformationStructure,
        init: Option<&[f64]>,
    ) -> Result<EquilibriumResult, QuantityError> {
        let gd = match self.groups_sorted(structure) {
            Ok(gd) => gd,
            Err(why) => {
                return Ok(EquilibriumResult::infeasible(structure, why));
            }
        };
        if gd.groups.len() == 1 {
            return Ok(self.solve_single(&gd));
        }
        self.solve_newton(&gd, init)
    }

    fn solve_single(&self, gd: &GroupData) -> EquilibriumResult {
        // excess supply K p^{1/α} − (1 − F(p/q)) is strictly increasing,
        // negative at zero, positive at q·b
        let q = gd.qualities[0];
        let k = gd.weights[0];
        let (_, b) = self.dist.support();
        let excess = |p: f64| k * p.powf(1.0 / self.alpha) - (1.0 - self.dist.cdf(p / q));
        let (mut lo, mut hi) = (0.0, q * b);
        let mut iters = 0;
        for _ in 0..200 {
            iters += 1;
            let mid = 0.5 * (lo + hi);
            if excess(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
        let p = 0.5 * (lo + hi);
        let supply = k * p.powf(1.0 / self.alpha);
        let demand = 1.0 - self.dist.cdf(p / q);
        EquilibriumResult {
            groups: gd.groups.clone(),
            prices: vec![p],
            expected_qualities: vec![q],
            demands: vec![demand],
            supplies: vec![supply],
            clearing_residual: (supply - demand).abs(),
            implementable: demand > DEMAND_FLOOR && (supply - demand).abs() < IMPLEMENTABLE_GRAD,
            iterations: iters,
            infeasibility: None,
        }
    }

    fn solve_newton(
        &self,
        gd: &GroupData,
        init: Option<&[f64]>,
    ) -> Result<EquilibriumResult, QuantityError> {
        let n = gd.groups.len();
        let mut p = match init {
            Some(p0) => {
                self.check_domain(gd, p0)?;
                p0.to_vec()
            }
            None => gd.default_start(&self.dist),
        };
        let mut psi = self.potential(gd, &p);
        let mut iterations = 0;
        let mut collapsed: Option<usize> = None;

        for _ in 0..MAX_NEWTON_ITER {
            iterations += 1;
            let g = self.gradient(gd, &p);
            let gnorm = linf(&g);
            if gnorm < GRAD_TOL {
                break;
            }
            let (diag, off) = self.hessian(gd, &p);
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let step = solve_tridiagonal(&diag, &off, &rhs);

            // backtrack: stay strictly inside the domain and decrease the
            // potential
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = (0..n).map(|i| p[i] + t * step[i]).collect();
                if self.interior(gd, &cand) {
                    let cand_psi = self.potential(gd, &cand);
                    if cand_psi < psi {
                        p = cand;
                        psi = cand_psi;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // the minimizing path is pinned against the boundary
                let demands = gd.demands(&self.dist, &p);
                let (worst, _) = demands
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                collapsed = Some(worst);
                break;
            }
        }

        let g = self.gradient(gd, &p);
        let gnorm = linf(&g);
        let demands = gd.demands(&self.dist, &p);
        let supplies: Vec<f64> = (0..n)
            .map(|i| gd.weights[i] * p[i].powf(1.0 / self.alpha))
            .collect();
        let min_demand = demands.iter().cloned().fold(f64::INFINITY, f64::min);

        if gnorm < IMPLEMENTABLE_GRAD && min_demand > DEMAND_FLOOR {
            return Ok(EquilibriumResult {
                groups: gd.groups.clone(),
                prices: p,
                expected_qualities: gd.qualities.clone(),
                demands,
                supplies,
                clearing_residual: gnorm,
                implementable: true,
                iterations,
                infeasibility: None,
            });
        }
        if collapsed.is_some() || min_demand <= DEMAND_FLOOR.max(1e-9) {
            let group = collapsed.unwrap_or_else(|| {
                demands
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0
            });
            return Ok(EquilibriumResult {
                groups: gd.groups.clone(),
                prices: p,
                expected_qualities: gd.qualities.clone(),
                demands,
                supplies,
                clearing_residual: gnorm,
                implementable: false,
                iterations,
                infeasibility: Some(Infeasibility::DemandCollapse { group }),
            });
        }
        Err(QuantityError::NonConvergence {
            iterations,
            grad_norm: gnorm,
        })
    }

    fn interior(&self, gd: &GroupData, p: &[f64]) -> bool {
        let mut prev = 0.0;
        for &pi in p {
            if !(pi.is_finite() && pi > prev) {
                return false;
            }
            prev = pi;
        }
        gd.demands(&self.dist, p).iter().all(|&d| d > 0.0)
    }

    /// The menu a structure puts in front of buyers: its equilibrium prices
    /// paired with the groups' expected qualities.
    pub fn induced_menu(&self, structure: &InformationStructure) -> Result<Menu, QuantityError> {
        let eq = self.solve_equilibrium(structure)?;
        if !eq.implementable {
            return Err(QuantityError::NotImplementable(
                eq.infeasibility
                    .unwrap_or(Infeasibility::DemandCollapse { group: 0 }),
            ));
        }
        Ok(eq.menu()?)
    }

    /// Solve every single-block structure, find the one with the highest
    /// equilibrium price, and test whether its supply at the monopoly price
    /// covers demand there — the condition that pins equilibrium prices
    /// below monopoly prices market-wide.
    pub fn check_supply_condition(&self) -> Result<SupplyCondition, QuantityError> {
        let l = self.pop.block_count();
        let mut prices = Vec::with_capacity(l);
        for b in 0..l {
            let s = InformationStructure::new(vec![vec![b]], l)?;
            let eq = self.solve_equilibrium(&s)?;
            if !eq.implementable {
                return Err(QuantityError::NotImplementable(
                    eq.infeasibility
                        .unwrap_or(Infeasibility::DemandCollapse { group: 0 }),
                ));
            }
            prices.push(eq.prices[0]);
        }
        let best = (0..l)
            .max_by(|&i, &j| prices[i].partial_cmp(&prices[j]).unwrap())
            .unwrap();
        let quality = self.expected_quality(&[best]);
        let monopoly = pricedisc::monopoly_price(quality, &self.dist)?;
        let supply_at = self.supply(&[best], monopoly)?;
        let demand_at = 1.0 - self.dist.cdf(monopoly / quality);
        let holds = supply_at + 1e-12 >= demand_at;

        // closed-form equivalent for unit-support uniform buyers with α = 1:
        // supply covers demand at the monopoly price iff Σ x/k · mass ≥ 1
        let uniform_unit = self.dist.family_kind() == crate::dist::FamilyKind::Uniform
            && self.dist.support() == (0.0, 1.0)
            && (self.alpha - 1.0).abs() < 1e-15;
        let uniform_alpha1_threshold = if uniform_unit {
            let sum: f64 = self
                .pop
                .atoms_of_blocks(&[best])
                .iter()
                .map(|&i| {
                    self.pop.atoms()[i].quality * self.pop.atoms()[i].mass / self.cost_coef[i]
                })
                .sum();
            Some(sum)
        } else {
            None
        };

        Ok(SupplyCondition {
            highest_price_block: best,
            singleton_prices: prices,
            monopoly_price: monopoly,
            supply_at_monopoly: supply_at,
            demand_at_monopoly: demand_at,
            holds,
            uniform_alpha1_threshold,
        })
    }

    /// Enumerate every disclosure structure, solve each, and rank the
    /// implementable ones by revenue.
    pub fn search_optimal_structure(&self) -> Result<QuantitySearch, QuantityError> {
        self.search_optimal_structure_with(DEFAULT_ENUMERATION_CAP, 1)
    }

    pub fn search_optimal_structure_with(
        &self,
        cap: usize,
        jobs: usize,
    ) -> Result<QuantitySearch, QuantityError> {
        let structures = enumerate_structures_capped(&self.pop, cap)?;
        let outcomes = par::map_indexed(jobs, &structures, |s| self.solve_equilibrium(s));
        let mut rows = Vec::with_capacity(structures.len());
        for (s, outcome) in structures.into_iter().zip(outcomes) {
            let result = outcome?;
            let revenue = result.implementable.then(|| result.revenue());
            rows.push(QuantityRow {
                structure: s,
                result,
                revenue,
            });
        }
        let winner = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.revenue.is_some())
            .max_by(|(_, x), (_, y)| {
                let rx = x.revenue.unwrap();
                let ry = y.revenue.unwrap();
                rx.partial_cmp(&ry)
                    .unwrap()
                    // fewer groups win ties; enumeration order settles the rest
                    .then_with(|| y.structure.group_count().cmp(&x.structure.group_count()))
            })
            .map(|(i, _)| i)
            .ok_or_else(|| QuantityError::Invalid("no implementable structure".into()))?;

        let (a, b) = self.dist.support();
        let fm_class = self.dist.classify_fm_convexity(a, b)?;
        let supply_condition = self.check_supply_condition()?;
        let one_group_guarantee = fm_class == Convexity::StrictlyConvex && supply_condition.holds;
        let winner_single_group = rows[winner].structure.is_single_group();
        let winner_is_original_block =
            winner_single_group && rows[winner].structure.groups()[0].len() == 1;
        Ok(QuantitySearch {
            rows,
            winner,
            fm_class,
            supply_condition,
            one_group_guarantee,
            winner_single_group,
            winner_is_original_block,
        })
    }
}

/// Groups of a structure sorted by expected quality, with their supply
/// weights.
#[derive(Debug, Clone)]
struct GroupData {
    groups: Vec<Vec<usize>>,
    qualities: Vec<f64>,
    weights: Vec<f64>,
}

impl GroupData {
    /// Cutoff below group `i`: `(p_i − p_{i−1}) / (q_i − q_{i−1})`.
    fn cutoff(&self, prices: &[f64], i: usize) -> f64 {
        let (pp, qq) = if i == 0 {
            (0.0, 0.0)
        } else {
            (prices[i - 1], self.qualities[i - 1])
        };
        (prices[i] - pp) / (self.qualities[i] - qq)
    }

    fn demands(&self, dist: &TypeDistribution, prices: &[f64]) -> Vec<f64> {
        let n = prices.len();
        (0..n)
            .map(|i| {
                let low = dist.cdf(self.cutoff(prices, i));
                let high = if i + 1 < n {
                    dist.cdf(self.cutoff(prices, i + 1))
                } else {
                    1.0
                };
                high - low
            })
            .collect()
    }

    /// Strictly interior start: evenly spaced cutoffs reconstruct prices,
    /// so every group opens with positive demand.
    fn default_start(&self, dist: &TypeDistribution) -> Vec<f64> {
        let (a, b) = dist.support();
        let n = self.qualities.len();
        let mut prices = Vec::with_capacity(n);
        let (mut pp, mut qq) = (0.0, 0.0);
        for i in 0..n {
            let m = a + (b - a) * (i + 1) as f64 / (n + 1) as f64;
            let p = pp + m * (self.qualities[i] - qq);
            prices.push(p);
            pp = p;
            qq = self.qualities[i];
        }
        prices
    }
}

/// Equilibrium outcome for one structure. Groups are ordered by expected
/// quality ascending; all vectors align with that order.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub groups: Vec<Vec<usize>>,
    pub prices: Vec<f64>,
    pub expected_qualities: Vec<f64>,
    pub demands: Vec<f64>,
    pub supplies: Vec<f64>,
    pub clearing_residual: f64,
    pub implementable: bool,
    pub iterations: usize,
    pub infeasibility: Option<Infeasibility>,
}

impl EquilibriumResult {
    fn infeasible(structure: &InformationStructure, why: Infeasibility) -> Self {
        EquilibriumResult {
            groups: structure.groups().to_vec(),
            prices: Vec::new(),
            expected_qualities: Vec::new(),
            demands: Vec::new(),
            supplies: Vec::new(),
            clearing_residual: f64::NAN,
            implementable: false,
            iterations: 0,
            infeasibility: Some(why),
        }
    }

    /// Transaction value `Σ p · min(D, S)`; at equilibrium supply equals
    /// demand, the min only guards against residual noise.
    pub fn revenue(&self) -> f64 {
        self.prices
            .iter()
            .zip(self.demands.iter().zip(&self.supplies))
            .map(|(p, (d, s))| p * d.min(*s))
            .sum()
    }

    /// The induced (price, expected quality) menu.
    pub fn menu(&self) -> Result<Menu, MenuError> {
        Menu::from_tuples(
            &self
                .prices
                .iter()
                .zip(&self.expected_qualities)
                .map(|(&p, &q)| (p, q))
                .collect::<Vec<_>>(),
        )
    }
}

/// Supply-versus-demand check at the monopoly price of the block whose
/// singleton structure clears at the highest price.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyCondition {
    pub highest_price_block: usize,
    /// Equilibrium price of each block's singleton structure.
    pub singleton_prices: Vec<f64>,
    pub monopoly_price: f64,
    pub supply_at_monopoly: f64,
    pub demand_at_monopoly: f64,
    pub holds: bool,
    /// For unit-support uniform buyers with α = 1 the condition reduces to
    /// `Σ x/k · mass ≥ 1` over the block; the sum is reported when that
    /// closed form applies.
    pub uniform_alpha1_threshold: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct QuantityRow {
    pub structure: InformationStructure,
    pub result: EquilibriumResult,
    /// Present only for implementable structures.
    pub revenue: Option<f64>,
}

/// Exhaustive search outcome over all disclosure structures.
#[derive(Debug, Clone)]
pub struct QuantitySearch {
    pub rows: Vec<QuantityRow>,
    /// Index of the revenue maximizer among implementable rows.
    pub winner: usize,
    pub fm_class: Convexity,
    pub supply_condition: SupplyCondition,
    /// Strictly convex `F(m)·m` plus the supply condition jointly guarantee
    /// a single-group winner made of one original block.
    pub one_group_guarantee: bool,
    pub winner_single_group: bool,
    pub winner_is_original_block: bool,
}

impl QuantitySearch {
    pub fn winner_row(&self) -> &QuantityRow {
        &self.rows[self.winner]
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![rhs[0] / diag[0]];
    }
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    c[0] = off[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
