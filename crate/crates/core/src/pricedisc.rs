//! Menus, demand splits, revenue, monopoly prices, and optimal-menu search —
//! the constrained price-discrimination layer both market models reduce to.
//!
//! A menu is a finite list of (price, quality) pairs. A type-`m` buyer picks
//! the pair maximizing `m·q − p` provided that is nonnegative, so demand is
//! read off the upper envelope of the lines `m ↦ m·q_i − p_i` together with
//! the zero line of the outside option. Pairs on the envelope carve `[a, b]`
//! into consecutive type intervals; pairs off the envelope sell nothing.

use crate::dist::{Convexity, DistError, TypeDistribution};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum MenuError {
    /// Nonpositive price or quality, or other construction problems.
    Invalid(String),
    /// A quality argument outside (0, ∞).
    NonpositiveQuality(f64),
    /// Submenu comparison called with a non-subset.
    NotASubmenu,
    /// Maximality query for a pair absent from the reference set.
    CandidateAbsent,
    /// Counterexample search on a distribution with convex `F(m)·m`.
    FmConvexEverywhere,
    Dist(DistError),
}

impl fmt::Display for MenuError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MenuError::Invalid(msg) => write!(f, "invalid menu: {msg}"),
            MenuError::NonpositiveQuality(q) => write!(f, "quality must be positive, got {q}"),
            MenuError::NotASubmenu => write!(f, "comparison menu is not a submenu"),
            MenuError::CandidateAbsent => write!(f, "candidate pair not in the reference set"),
            MenuError::FmConvexEverywhere => write!(
                f,
                "F(m)m is convex on the support: every two-pair menu is weakly dominated by a singleton"
            ),
            MenuError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MenuError {}

impl From<DistError> for MenuError {
    fn from(e: DistError) -> Self {
        MenuError::Dist(e)
    }
}

/// One (price, quality) entry of a menu.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MenuPair {
    pub price: f64,
    pub quality: f64,
}

impl MenuPair {
    pub fn new(price: f64, quality: f64) -> Self {
        MenuPair { price, quality }
    }
}

/// A finite menu, sorted ascending by price (then quality), duplicates
/// removed. Prices and qualities must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    pairs: Vec<MenuPair>,
}

impl Menu {
    pub fn new(mut pairs: Vec<MenuPair>) -> Result<Self, MenuError> {
        for (i, p) in pairs.iter().enumerate() {
            if !(p.price.is_finite() && p.price > 0.0) {
                return Err(MenuError::Invalid(format!(
                    "pair {i}: price must be positive, got {}",
                    p.price
                )));
            }
            if !(p.quality.is_finite() && p.quality > 0.0) {
                return Err(MenuError::Invalid(format!(
                    "pair {i}: quality must be positive, got {}",
                    p.quality
                )));
            }
        }
        pairs.sort_by(|x, y| {
            (x.price, x.quality)
                .partial_cmp(&(y.price, y.quality))
                .unwrap()
        });
        pairs.dedup();
        Ok(Menu { pairs })
    }

    pub fn from_tuples(pairs: &[(f64, f64)]) -> Result<Self, MenuError> {
        Menu::new(pairs.iter().map(|&(p, q)| MenuPair::new(p, q)).collect())
    }

    pub fn pairs(&self) -> &[MenuPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Highest-price pair.
    pub fn top(&self) -> Option<MenuPair> {
        self.pairs.last().copied()
    }

    /// True when every pair of `sub` occurs in `self`.
    pub fn contains_menu(&self, sub: &Menu) -> bool {
        sub.pairs.iter().all(|p| self.pairs.contains(p))
    }

    /// All nonempty submenus, smallest first.
    pub fn nonempty_submenus(&self) -> Vec<Menu> {
        let n = self.pairs.len();
        let mut out = Vec::with_capacity((1usize << n) - 1);
        for mask in 1u32..(1u32 << n) {
            let picked: Vec<MenuPair> = (0..n)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| self.pairs[i])
                .collect();
            out.push(Menu { pairs: picked });
        }
        out.sort_by_key(|m| m.len());
        out
    }
}

impl fmt::Display for Menu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {})", p.price, p.quality)?;
        }
        f.write_str("]")
    }
}

/// How buyer types split across the pairs of a menu.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSplit {
    /// Demand per menu pair, in menu order; zero for pairs off the envelope.
    pub demands: Vec<f64>,
    /// Indices of pairs with positive demand, in ascending cutoff order.
    pub active: Vec<usize>,
    /// Type cutoffs of the active pairs: `active.len() + 1` values ending at
    /// the support's upper end. Empty when nothing sells.
    pub cutoffs: Vec<f64>,
}

impl DemandSplit {
    pub fn total(&self) -> f64 {
        self.demands.iter().sum()
    }

    /// Every pair keeps positive demand.
    pub fn fully_demanded(&self) -> bool {
        !self.demands.is_empty() && self.demands.iter().all(|&d| d > 0.0)
    }
}

/// Demand for every pair of `menu` under the buyer law `dist`.
///
/// Works for arbitrary menus: the winner on each elementary type interval is
/// the highest utility pair (ties to the higher index, which never moves
/// mass because `F` is atomless). For menus whose pairs all retain demand
/// this reproduces the cutoffs `m_i = (p_i − p_{i−1}) / (q_i − q_{i−1})`
/// exactly, with `m_1 = max(a, p_1/q_1)`.
pub fn demand_split(menu: &Menu, dist: &TypeDistribution) -> DemandSplit {
    let (a, b) = dist.support();
    let pairs = menu.pairs();
    let n = pairs.len();
    if n == 0 {
        return DemandSplit {
            demands: Vec::new(),
            active: Vec::new(),
            cutoffs: Vec::new(),
        };
    }

    // candidate breakpoints: support ends, zero crossings, pair crossings
    let mut cand = Vec::with_capacity(2 + n + n * n / 2);
    cand.push(a);
    cand.push(b);
    for p in pairs {
        let z = p.price / p.quality;
        if z > a && z < b {
            cand.push(z);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dq = pairs[j].quality - pairs[i].quality;
            if dq != 0.0 {
                let x = (pairs[j].price - pairs[i].price) / dq;
                if x > a && x < b {
                    cand.push(x);
                }
            }
        }
    }
    cand.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cand.dedup();

    // winner on each elementary interval, judged at the midpoint
    let winner_at = |m: f64| -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut best_u = 0.0;
        for (i, p) in pairs.iter().enumerate() {
            let u = m * p.quality - p.price;
            if u >= best_u {
                best_u = u;
                best = Some(i);
            }
        }
        best
    };

    let mut demands = vec![0.0; n];
    let mut runs: Vec<(usize, f64, f64)> = Vec::new(); // (pair, lo, hi)
    for w in cand.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        if let Some(i) = winner_at(0.5 * (lo + hi)) {
            match runs.last_mut() {
                Some((j, _, run_hi)) if *j == i && *run_hi == lo => *run_hi = hi,
                _ => runs.push((i, lo, hi)),
            }
        }
    }
    let mut active = Vec::new();
    let mut cutoffs = Vec::new();
    for &(i, lo, hi) in &runs {
        let d = dist.cdf(hi) - dist.cdf(lo);
        demands[i] += d;
        if d > 0.0 {
            active.push(i);
            cutoffs.push(lo);
        }
    }
    if !active.is_empty() {
        cutoffs.push(b);
    }
    DemandSplit {
        demands,
        active,
        cutoffs,
    }
}

/// Total transaction value `Σ p_i · D_i`.
pub fn menu_revenue(menu: &Menu, dist: &TypeDistribution) -> f64 {
    let split = demand_split(menu, dist);
    menu.pairs()
        .iter()
        .zip(&split.demands)
        .map(|(p, d)| p.price * d)
        .sum()
}

/// Revenue via the telescoped cutoff form
/// `p_k − Σ (p_i − p_{i−1}) · F(m_i)`, defined only for menus whose pairs
/// all retain positive demand. Agrees with [`menu_revenue`] to 1e−12 there.
pub fn telescoped_revenue(menu: &Menu, dist: &TypeDistribution) -> Option<f64> {
    let split = demand_split(menu, dist);
    if !split.fully_demanded() {
        return None;
    }
    let pairs = menu.pairs();
    let mut acc = pairs.last().unwrap().price;
    let (mut p_prev, mut q_prev) = (0.0, 0.0);
    for p in pairs {
        let m = (p.price - p_prev) / (p.quality - q_prev);
        acc -= (p.price - p_prev) * dist.cdf(m);
        p_prev = p.price;
        q_prev = p.quality;
    }
    Some(acc)
}

/// All pairs keep positive demand.
pub fn is_fully_demanded(menu: &Menu, dist: &TypeDistribution) -> bool {
    !menu.is_empty() && demand_split(menu, dist).fully_demanded()
}

/// Drop zero-demand pairs until every remaining pair sells; revenue is
/// unchanged. May return an empty menu when nothing ever sells.
pub fn prune_to_positive_demand(menu: &Menu, dist: &TypeDistribution) -> Menu {
    let mut current = menu.clone();
    loop {
        let split = demand_split(&current, dist);
        let kept: Vec<MenuPair> = current
            .pairs()
            .iter()
            .zip(&split.demands)
            .filter(|(_, &d)| d > 0.0)
            .map(|(p, _)| *p)
            .collect();
        if kept.len() == current.len() {
            return current;
        }
        current = Menu { pairs: kept };
    }
}

/// The revenue-maximizing price for one pair of quality `q`, ignoring any
/// feasibility constraint: the leftmost maximizer of `p · (1 − F(p/q))`.
///
/// When `F(m)·m` is strictly convex the first-order condition
/// `F(x) + x·f(x) = 1` has a unique root in `x = p/q`, found by bisection on
/// its strictly increasing left side. Otherwise a dense grid over
/// `[q·a, q·b]` with golden-section refinement locates the global maximum
/// and returns the leftmost price attaining it within 1e−9.
pub fn monopoly_price(quality: f64, dist: &TypeDistribution) -> Result<f64, MenuError> {
    if !(quality.is_finite() && quality > 0.0) {
        return Err(MenuError::NonpositiveQuality(quality));
    }
    let (a, b) = dist.support();
    if dist.classify_fm_convexity(a, b)? == Convexity::StrictlyConvex {
        // G(x) = F(x) + x f(x) is strictly increasing; G(b) = 1 + b f(b) > 1
        let g = |x: f64| dist.cdf(x) + x * dist.pdf_ext(x);
        if g(a) >= 1.0 {
            // revenue rises on [0, qa] and falls beyond
            return Ok(quality * a);
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (b - a).max(1.0) {
                break;
            }
        }
        return Ok(quality * 0.5 * (lo + hi));
    }

    // global search over the price axis
    let revenue = |p: f64| p * (1.0 - dist.cdf(p / quality));
    let lo = quality * a;
    let hi = quality * b;
    let n = 8192;
    let step = (hi - lo) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|k| revenue(lo + k as f64 * step)).collect();
    let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // refine every bracket whose grid point is near the best, keep leftmost
    let mut winner: Option<f64> = None;
    let mut winner_val = f64::NEG_INFINITY;
    for (k, &val) in vals.iter().enumerate() {
        if val < best - 1e-7 {
            continue;
        }
        let bl = lo + (k.saturating_sub(1)) as f64 * step;
        let bh = lo + ((k + 1).min(n)) as f64 * step;
        let (p, v) = golden_max(revenue, bl, bh);
        if v > winner_val + 1e-9 {
            winner_val = v;
            winner = Some(p);
        } else if (v - winner_val).abs() <= 1e-9 {
            if let Some(w) = winner {
                if p < w {
                    winner = Some(p);
                }
            }
        }
    }
    Ok(winner.unwrap_or(lo))
}

/// Golden-section maximization on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (lo, hi);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// The feasible family of menus a market hands to the platform.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    menus: Vec<Menu>,
}

impl ConstraintSet {
    pub fn new(menus: Vec<Menu>) -> Result<Self, MenuError> {
        if menus.is_empty() {
            return Err(MenuError::Invalid("constraint set must be nonempty".into()));
        }
        Ok(ConstraintSet { menus })
    }

    /// All nonempty submenus of a base menu.
    pub fn power_set_of(menu: &Menu) -> Result<Self, MenuError> {
        ConstraintSet::new(menu.nonempty_submenus())
    }

    pub fn menus(&self) -> &[Menu] {
        &self.menus
    }
}

/// Outcome of the two regularity conditions on a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// Every feasible menu's top pair is weakly dominated (price and
    /// quality) by some feasible single-pair menu.
    pub top_dominated: bool,
    /// A menu whose top pair no single-pair menu dominates.
    pub top_dominated_witness: Option<Menu>,
    /// The highest-priced single-pair menu stays at or below its monopoly
    /// price.
    pub below_monopoly: bool,
    /// The offending (price, quality, monopoly price) when it does not.
    pub below_monopoly_witness: Option<(f64, f64, f64)>,
    /// Single-pair menus found after pruning (price, quality).
    pub one_separating: Vec<(f64, f64)>,
    /// Present when the set holds no single-pair menu at all.
    pub note: Option<String>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.top_dominated && self.below_monopoly
    }
}

/// Check both regularity conditions for `cs` under `dist`.
pub fn check_regularity(
    cs: &ConstraintSet,
    dist: &TypeDistribution,
) -> Result<RegularityReport, MenuError> {
    let pruned: Vec<Menu> = cs
        .menus()
        .iter()
        .map(|m| prune_to_positive_demand(m, dist))
        .filter(|m| !m.is_empty())
        .collect();
    let one_sep: Vec<(f64, f64)> = pruned
        .iter()
        .filter(|m| m.len() == 1)
        .map(|m| (m.pairs()[0].price, m.pairs()[0].quality))
        .collect();

    if one_sep.is_empty() {
        return Ok(RegularityReport {
            top_dominated: false,
            top_dominated_witness: pruned.first().cloned(),
            below_monopoly: false,
            below_monopoly_witness: None,
            one_separating: Vec::new(),
            note: Some("no single-pair menu with positive demand in the set".into()),
        });
    }

    let mut top_dominated = true;
    let mut witness = None;
    for m in &pruned {
        let top = m.top().unwrap();
        let dominated = one_sep
            .iter()
            .any(|&(p, q)| p >= top.price && q >= top.quality);
        if !dominated {
            top_dominated = false;
            witness = Some(m.clone());
            break;
        }
    }

    let &(p_max, q_max) = one_sep
        .iter()
        .max_by(|x, y| x.0.partial_cmp(&y.0).unwrap())
        .unwrap();
    let pm = monopoly_price(q_max, dist)?;
    let below = p_max <= pm + 1e-9;

    Ok(RegularityReport {
        top_dominated,
        top_dominated_witness: witness,
        below_monopoly: below,
        below_monopoly_witness: if below { None } else { Some((p_max, q_max, pm)) },
        one_separating: one_sep,
        note: None,
    })
}

/// Winner of an exhaustive revenue search over a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalMenu {
    /// Index into the constraint set.
    pub index: usize,
    pub menu: Menu,
    pub revenue: f64,
}

/// Evaluate every menu; ties break toward fewer pairs, then lexicographically
/// by price vector.
pub fn optimal_menu(cs: &ConstraintSet, dist: &TypeDistribution) -> OptimalMenu {
    let mut best: Option<OptimalMenu> = None;
    for (i, m) in cs.menus().iter().enumerate() {
        let rev = menu_revenue(m, dist);
        let better = match &best {
            None => true,
            Some(b) => {
                rev > b.revenue
                    || (rev == b.revenue
                        && (m.len() < b.menu.len()
                            || (m.len() == b.menu.len() && price_vec_lt(m, &b.menu))))
            }
        };
        if better {
            best = Some(OptimalMenu {
                index: i,
                menu: m.clone(),
                revenue: rev,
            });
        }
    }
    best.expect("constraint set is nonempty")
}

fn price_vec_lt(x: &Menu, y: &Menu) -> bool {
    let xs = x.pairs().iter().map(|p| p.price);
    let ys = y.pairs().iter().map(|p| p.price);
    for (a, b) in xs.zip(ys) {
        if a != b {
            return a < b;
        }
    }
    false
}

/// Verdict of the local submenu comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MenuComparison {
    /// `F(m)·m` convex on every merged run: the submenu earns at least as
    /// much as the full menu.
    SubBetterByConvexity,
    /// Concave on every merged run: the full menu earns at least as much.
    MenuBetterByConcavity,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub verdict: MenuComparison,
    pub menu_revenue: f64,
    pub sub_revenue: f64,
    /// Cutoff interval and classification per merged run of dropped pairs.
    pub intervals: Vec<(f64, f64, Convexity)>,
    /// False when the submenu lacks the full menu's top pair, in which case
    /// adding that pair would raise its revenue and no verdict is drawn.
    pub sub_retains_top: bool,
}

/// Compare a fully-demanded menu against one of its submenus through the
/// convexity of `F(m)·m` on the cutoff intervals its merges span.
pub fn compare_submenu(
    menu: &Menu,
    sub: &Menu,
    dist: &TypeDistribution,
) -> Result<CompareReport, MenuError> {
    if !menu.contains_menu(sub) || sub.is_empty() {
        return Err(MenuError::NotASubmenu);
    }
    if !is_fully_demanded(menu, dist) {
        return Err(MenuError::Invalid(
            "comparison needs positive demand for every pair of the full menu".into(),
        ));
    }
    let menu_rev = menu_revenue(menu, dist);
    let sub_rev = menu_revenue(sub, dist);

    let top = menu.top().unwrap();
    if sub.top() != Some(top) {
        return Ok(CompareReport {
            verdict: MenuComparison::Indeterminate,
            menu_revenue: menu_rev,
            sub_revenue: sub_rev,
            intervals: Vec::new(),
            sub_retains_top: false,
        });
    }

    // positions of the submenu's pairs inside the menu
    let positions: Vec<usize> = sub
        .pairs()
        .iter()
        .map(|p| menu.pairs().iter().position(|q| q == p).unwrap())
        .collect();

    // cutoffs of the full menu
    let cutoffs: Vec<f64> = {
        let mut out = Vec::with_capacity(menu.len());
        let (mut pp, mut qq) = (0.0, 0.0);
        for p in menu.pairs() {
            out.push((p.price - pp) / (p.quality - qq));
            pp = p.price;
            qq = p.quality;
        }
        out
    };

    let mut intervals = Vec::new();
    let mut prev = 0usize; // mu(j-1), 0 before the first kept pair
    let mut all_convex = true;
    let mut all_concave = true;
    for &mu in &positions {
        if mu + 1 - prev > 1 {
            let lo = cutoffs[prev]; // m_{mu(j-1)+1}, zero-based prev = mu(j-1)
            let hi = cutoffs[mu];
            let class = dist.classify_fm_convexity(lo, hi)?;
            all_convex &= class.is_convex();
            all_concave &= class.is_concave();
            intervals.push((lo, hi, class));
        }
        prev = mu + 1;
    }

    let verdict = if intervals.is_empty() {
        MenuComparison::Indeterminate
    } else if all_convex {
        MenuComparison::SubBetterByConvexity
    } else if all_concave {
        MenuComparison::MenuBetterByConcavity
    } else {
        MenuComparison::Indeterminate
    };
    Ok(CompareReport {
        verdict,
        menu_revenue: menu_rev,
        sub_revenue: sub_rev,
        intervals,
        sub_retains_top: true,
    })
}

/// A two-pair menu strictly beating both of its singleton submenus.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPairCounterexample {
    pub menu: Menu,
    pub menu_revenue: f64,
    pub low_singleton_revenue: f64,
    pub high_singleton_revenue: f64,
}

/// When `F(m)·m` fails convexity somewhere on the support, search a cutoff
/// lattice for a midpoint-convexity violation of `x·F(x/y)` and convert it
/// into a two-pair menu that strictly out-earns both singletons.
pub fn find_two_pair_counterexample(
    dist: &TypeDistribution,
) -> Result<Option<TwoPairCounterexample>, MenuError> {
    find_two_pair_counterexample_with_step(dist, 0.01)
}

pub fn find_two_pair_counterexample_with_step(
    dist: &TypeDistribution,
    step: f64,
) -> Result<Option<TwoPairCounterexample>, MenuError> {
    let (a, b) = dist.support();
    if dist.classify_fm_convexity(a, b)?.is_convex() {
        return Err(MenuError::FmConvexEverywhere);
    }
    let g = |m: f64| dist.cdf(m) * m;
    let n = ((b - a) / step).ceil() as usize;
    for i in 1..n {
        let z1 = a + i as f64 * step;
        if z1 >= b {
            break;
        }
        for j in (i + 1)..n {
            let z2 = a + j as f64 * step;
            if z2 >= b {
                break;
            }
            let mid = 0.5 * (z1 + z2);
            if g(mid) - 0.5 * (g(z1) + g(z2)) <= 1e-9 {
                continue;
            }
            // cutoff pair (z1, z2) realized by qualities (1, 2)
            let menu = Menu::from_tuples(&[(z1, 1.0), (z1 + z2, 2.0)])?;
            let split = demand_split(&menu, dist);
            if !split.fully_demanded() {
                continue;
            }
            let full = menu_revenue(&menu, dist);
            let low = menu_revenue(&Menu::from_tuples(&[(z1, 1.0)])?, dist);
            let high = menu_revenue(&Menu::from_tuples(&[(z1 + z2, 2.0)])?, dist);
            if full > low.max(high) + 1e-9 {
                return Ok(Some(TwoPairCounterexample {
                    menu,
                    menu_revenue: full,
                    low_singleton_revenue: low,
                    high_singleton_revenue: high,
                }));
            }
        }
    }
    Ok(None)
}

/// Maximality of a pair within a set of single-pair menus: no other pair
/// weakly dominates it in both coordinates.
pub fn is_maximal(candidate: (f64, f64), one_sep_set: &[(f64, f64)]) -> Result<bool, MenuError> {
    if !one_sep_set.contains(&candidate) {
        return Err(MenuError::CandidateAbsent);
    }
    Ok(one_sep_set
        .iter()
        .filter(|&&other| other != candidate)
        .all(|&(p, q)| candidate.0 > p || candidate.1 > q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DensityPiece, PowerTerm};

    fn uniform() -> TypeDistribution {
        TypeDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn concave_m3() -> TypeDistribution {
        TypeDistribution::piecewise(vec![DensityPiece {
            lo: 1.0,
            hi: 2.0,
            terms: vec![PowerTerm {
                coeff: 8.0 / 3.0,
                exponent: -3.0,
            }],
        }])
        .unwrap()
    }

    #[test]
    fn single_pair_demand() {
        let menu = Menu::from_tuples(&[(0.25, 1.0)]).unwrap();
        let s = demand_split(&menu, &uniform());
        assert_eq!(s.cutoffs, vec![0.25, 1.0]);
        assert!((s.demands[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_pair_demand_cutoffs() {
        let menu = Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap();
        let s = demand_split(&menu, &uniform());
        assert_eq!(s.active, vec![0, 1]);
        assert!((s.cutoffs[0] - 0.4).abs() < 1e-15);
        assert!((s.cutoffs[1] - 0.8).abs() < 1e-15);
        assert!((s.demands[0] - 0.4).abs() < 1e-15);
        assert!((s.demands[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn off_envelope_pair_sells_nothing() {
        // pair 1 needs m >= 0.8 to beat the outside option but loses to
        // pair 2 from m >= 0.6, so it never sells; pair 2 sells to types
        // above its own participation cutoff 0.5/0.75 = 2/3
        let menu = Menu::from_tuples(&[(0.2, 0.25), (0.5, 0.75)]).unwrap();
        let s = demand_split(&menu, &uniform());
        assert_eq!(s.demands[0], 0.0);
        assert!((s.demands[1] - (1.0 - 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(s.active, vec![1]);
        assert!((s.cutoffs[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn revenue_values() {
        let d = uniform();
        let menu = Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap();
        assert!((menu_revenue(&menu, &d) - 0.14).abs() < 1e-12);
        let single = Menu::from_tuples(&[(0.5, 0.75)]).unwrap();
        assert!((menu_revenue(&single, &d) - 1.0 / 6.0).abs() < 1e-12);
        // priced out of the market entirely
        let dead = Menu::from_tuples(&[(2.0, 1.0), (5.0, 2.0)]).unwrap();
        assert_eq!(menu_revenue(&dead, &d), 0.0);
        assert!(prune_to_positive_demand(&dead, &d).is_empty());
    }

    #[test]
    fn telescoped_revenue_matches() {
        let d = uniform();
        let menu = Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap();
        let tele = telescoped_revenue(&menu, &d).unwrap();
        assert!((tele - menu_revenue(&menu, &d)).abs() < 1e-12);
        // not defined once a pair is off the envelope
        let dead = Menu::from_tuples(&[(0.2, 0.25), (0.5, 0.75)]).unwrap();
        assert!(telescoped_revenue(&dead, &d).is_none());
    }

    #[test]
    fn pruning() {
        let d = uniform();
        let m = Menu::from_tuples(&[(0.2, 0.25), (0.5, 0.75)]).unwrap();
        let pruned = prune_to_positive_demand(&m, &d);
        assert_eq!(pruned.pairs(), &[MenuPair::new(0.5, 0.75)]);
        assert!(
            (menu_revenue(&pruned, &d) - menu_revenue(&m, &d)).abs() < 1e-12,
            "pruning must preserve revenue"
        );
        // fixed point
        let cp = Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap();
        assert_eq!(prune_to_positive_demand(&cp, &d), cp);
        // duplicate pairs collapse at construction
        let dup = Menu::from_tuples(&[(0.5, 0.75), (0.5, 0.75)]).unwrap();
        assert_eq!(dup.len(), 1);
    }

    #[test]
    fn monopoly_prices() {
        let d = uniform();
        assert!((monopoly_price(1.0, &d).unwrap() - 0.5).abs() < 1e-9);
        assert!((monopoly_price(0.75, &d).unwrap() - 0.375).abs() < 1e-9);

        // concave case falls back to global search; the revenue
        // p(1 - F(p)) = -p/3 + 4/(3p) is decreasing on [1,2], max at p = 1
        let c = concave_m3();
        let pm = monopoly_price(1.0, &c).unwrap();
        assert!((pm - 1.0).abs() < 1e-6, "got {pm}");
        // dense-grid oracle, step 1e-6
        let rev = |p: f64| p * (1.0 - c.cdf(p));
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut p = 1.0;
        while p <= 2.0 {
            let v = rev(p);
            if v > best.0 {
                best = (v, p);
            }
            p += 1e-6;
        }
        assert!((rev(pm) - best.0).abs() < 1e-9);
    }

    #[test]
    fn regularity_examples() {
        let d = uniform();
        let cs = ConstraintSet::new(vec![
            Menu::from_tuples(&[(0.3, 0.75)]).unwrap(),
            Menu::from_tuples(&[(1.0 / 14.0, 0.25), (2.0 / 7.0, 0.75)]).unwrap(),
        ])
        .unwrap();
        let r = check_regularity(&cs, &d).unwrap();
        assert!(r.top_dominated);
        assert!(r.below_monopoly);
        assert!(r.is_regular());

        let cs2 = ConstraintSet::new(vec![Menu::from_tuples(&[(6.0 / 11.0, 0.75)]).unwrap()])
            .unwrap();
        let r2 = check_regularity(&cs2, &d).unwrap();
        assert!(r2.top_dominated, "a singleton dominates itself");
        assert!(!r2.below_monopoly, "6/11 > 0.375");
        let w = r2.below_monopoly_witness.unwrap();
        assert!((w.2 - 0.375).abs() < 1e-9);

        let cs3 =
            ConstraintSet::new(vec![Menu::from_tuples(&[(0.3, 0.75)]).unwrap()]).unwrap();
        let r3 = check_regularity(&cs3, &d).unwrap();
        assert!(r3.is_regular());

        // no single-pair menu at all: condition fails with a reason
        let cs4 = ConstraintSet::new(vec![
            Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap()
        ])
        .unwrap();
        let r4 = check_regularity(&cs4, &d).unwrap();
        assert!(!r4.is_regular());
        assert!(r4.note.as_deref().unwrap().contains("no single-pair menu"));
    }

    #[test]
    fn optimal_menu_over_power_set() {
        let d = uniform();
        let base = Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap();
        let cs = ConstraintSet::power_set_of(&base).unwrap();
        let revenues: Vec<f64> = cs.menus().iter().map(|m| menu_revenue(m, &d)).collect();
        assert!(revenues.iter().any(|&r| (r - 0.06).abs() < 1e-12));
        assert!(revenues.iter().any(|&r| (r - 1.0 / 6.0).abs() < 1e-12));
        assert!(revenues.iter().any(|&r| (r - 0.14).abs() < 1e-12));
        let opt = optimal_menu(&cs, &d);
        assert_eq!(opt.menu.pairs(), &[MenuPair::new(0.5, 0.75)]);
        assert!((opt.revenue - 1.0 / 6.0).abs() < 1e-12);

        let lone = ConstraintSet::new(vec![base.clone()]).unwrap();
        assert_eq!(optimal_menu(&lone, &d).menu, base);
    }

    #[test]
    fn optimal_menu_concave_prefers_full_menu() {
        let c = concave_m3();
        let base = Menu::from_tuples(&[(0.3, 0.25), (1.05, 0.75)]).unwrap();
        let cs = ConstraintSet::power_set_of(&base).unwrap();
        let opt = optimal_menu(&cs, &c);
        assert_eq!(opt.menu, base);
        // closed-form F: F(m) = (4/3)(1 - m^-2)
        let f = |m: f64| (4.0 / 3.0) * (1.0 - m.powi(-2));
        let full = 1.05 - 0.3 * f(1.2) - 0.75 * f(1.5);
        let high = 1.05 * (1.0 - f(1.4));
        let low = 0.3 * (1.0 - f(1.2));
        assert!((opt.revenue - full).abs() < 1e-12);
        assert!((full - 0.372222).abs() < 1e-6);
        assert!((high - 0.364286).abs() < 1e-6);
        assert!(full > high && high > low);
    }

    #[test]
    fn submenu_comparison() {
        let d = uniform();
        let menu = Menu::from_tuples(&[(0.1, 0.25), (0.5, 0.75)]).unwrap();
        let sub = Menu::from_tuples(&[(0.5, 0.75)]).unwrap();
        let r = compare_submenu(&menu, &sub, &d).unwrap();
        assert_eq!(r.verdict, MenuComparison::SubBetterByConvexity);
        assert_eq!(r.intervals.len(), 1);
        assert!((r.intervals[0].0 - 0.4).abs() < 1e-12);
        assert!((r.intervals[0].1 - 0.8).abs() < 1e-12);
        assert!(r.sub_revenue >= r.menu_revenue);

        let c = concave_m3();
        let menu2 = Menu::from_tuples(&[(0.3, 0.25), (1.05, 0.75)]).unwrap();
        let sub2 = Menu::from_tuples(&[(1.05, 0.75)]).unwrap();
        let r2 = compare_submenu(&menu2, &sub2, &c).unwrap();
        assert_eq!(r2.verdict, MenuComparison::MenuBetterByConcavity);
        assert!((r2.intervals[0].0 - 1.2).abs() < 1e-12);
        assert!((r2.intervals[0].1 - 1.5).abs() < 1e-12);
        assert!(r2.menu_revenue >= r2.sub_revenue);

        // sub == menu: nothing merged
        let r3 = compare_submenu(&menu, &menu, &d).unwrap();
        assert_eq!(r3.verdict, MenuComparison::Indeterminate);
        assert_eq!(r3.menu_revenue, r3.sub_revenue);

        // submenu without the top pair is flagged, not compared
        let low = Menu::from_tuples(&[(0.1, 0.25)]).unwrap();
        let r4 = compare_submenu(&menu, &low, &d).unwrap();
        assert!(!r4.sub_retains_top);
        assert_eq!(r4.verdict, MenuComparison::Indeterminate);

        let foreign = Menu::from_tuples(&[(0.9, 0.9)]).unwrap();
        assert!(matches!(
            compare_submenu(&menu, &foreign, &d),
            Err(MenuError::NotASubmenu)
        ));
    }

    #[test]
    fn counterexample_search() {
        let c = concave_m3();
        let found = find_two_pair_counterexample(&c).unwrap().unwrap();
        assert!(
            found.menu_revenue
                > found
                    .low_singleton_revenue
                    .max(found.high_singleton_revenue)
                    + 1e-9
        );

        assert!(matches!(
            find_two_pair_counterexample(&uniform()),
            Err(MenuError::FmConvexEverywhere)
        ));

        let p = TypeDistribution::power(-4.0, 1.3, 3.5).unwrap();
        let found = find_two_pair_counterexample(&p).unwrap().unwrap();
        assert!(
            found.menu_revenue
                > found
                    .low_singleton_revenue
                    .max(found.high_singleton_revenue)
                    + 1e-9
        );
    }

    #[test]
    fn maximality() {
        let set = [(1.0 / 6.0, 0.25), (0.3, 0.75)];
        assert!(is_maximal((0.3, 0.75), &set).unwrap());
        assert!(!is_maximal((1.0 / 6.0, 0.25), &set).unwrap());
        let set2 = [(0.5, 0.2), (0.4, 0.9)];
        assert!(is_maximal((0.5, 0.2), &set2).unwrap());
        assert!(matches!(
            is_maximal((9.0, 9.0), &set2),
            Err(MenuError::CandidateAbsent)
        ));
    }

    #[test]
    fn indifferent_tie_moves_no_mass() {
        // two pairs sharing the cutoff m = 0.5 exactly; the tie rule picks
        // the higher pair on a null set, so revenue matches the telescoped
        // form either way
        let d = uniform();
        let menu = Menu::from_tuples(&[(0.125, 0.25), (0.25, 0.5)]).unwrap();
        let direct = menu_revenue(&menu, &d);
        let split = demand_split(&menu, &d);
        // both cutoffs collapse to 0.5: the low pair is squeezed out
        assert_eq!(split.demands[0], 0.0);
        let pruned = prune_to_positive_demand(&menu, &d);
        assert!((menu_revenue(&pruned, &d) - direct).abs() < 1e-15);
    }

    mod properties {
        use super::*;
        use rand::{Rng, SeedableRng};

        /// Random fully-demanded menu: increasing cutoffs inside (a, b) and
        /// increasing qualities reconstruct the prices.
        pub(super) fn random_cp_menu(
            rng: &mut impl Rng,
            dist: &TypeDistribution,
            max_pairs: usize,
        ) -> Menu {
            let (a, b) = dist.support();
            let k = rng.random_range(1..=max_pairs);
            let mut cutoffs: Vec<f64> = (0..k)
                .map(|_| a + (b - a) * (0.02 + 0.96 * rng.random::<f64>()))
                .collect();
            cutoffs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            cutoffs.dedup_by(|x, y| (*x - *y).abs() < 1e-6 * (b - a));
            let mut q = 0.0;
            let mut p = 0.0;
            let mut pairs = Vec::new();
            for m in cutoffs {
                let dq = 0.1 + rng.random::<f64>();
                p += m * dq;
                q += dq;
                pairs.push(MenuPair::new(p, q));
            }
            Menu::new(pairs).unwrap()
        }

        #[test]
        fn telescoped_identity_on_random_menus() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
            let dists = [
                TypeDistribution::uniform(0.0, 1.0).unwrap(),
                TypeDistribution::power(-1.5, 1.0, 3.0).unwrap(),
            ];
            for d in &dists {
                let mut done = 0;
                while done < 1000 {
                    let menu = random_cp_menu(&mut rng, d, 5);
                    if !is_fully_demanded(&menu, d) {
                        continue;
                    }
                    let direct = menu_revenue(&menu, d);
                    let tele = telescoped_revenue(&menu, d).unwrap();
                    assert!(
                        (direct - tele).abs() < 1e-12,
                        "identity broke: {direct} vs {tele} on {menu}"
                    );
                    done += 1;
                }
            }
        }

        #[test]
        fn envelope_reproduces_ratio_cutoffs_exactly() {
            // for fully-demanded menus the envelope must return the cutoffs
            // (p_i - p_{i-1}) / (q_i - q_{i-1}) bit for bit, with the first
            // one floored at the support's lower end
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
            let dists = [
                TypeDistribution::uniform(0.0, 1.0).unwrap(),
                TypeDistribution::power(-1.5, 1.0, 3.0).unwrap(),
            ];
            for d in &dists {
                let (a, b) = d.support();
                let mut done = 0;
                while done < 300 {
                    let menu = random_cp_menu(&mut rng, d, 5);
                    let split = demand_split(&menu, d);
                    if !split.fully_demanded() {
                        continue;
                    }
                    let (mut pp, mut qq) = (0.0, 0.0);
                    for (i, pair) in menu.pairs().iter().enumerate() {
                        let ratio = (pair.price - pp) / (pair.quality - qq);
                        assert_eq!(split.cutoffs[i], ratio.max(a));
                        pp = pair.price;
                        qq = pair.quality;
                    }
                    assert_eq!(*split.cutoffs.last().unwrap(), b);
                    done += 1;
                }
            }
        }

        #[test]
        fn merged_cutoff_revenue_inequality() {
            // z_k F(z_k/d_k) <= sum (z_i - z_{i-1}) F((z_i-z_{i-1})/(d_i-d_{i-1}))
            // whenever the ratios stay inside the support and F(m)m is convex
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
            let dists = [
                TypeDistribution::uniform(0.0, 1.0).unwrap(),
                TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap(),
            ];
            for d in &dists {
                let (a, b) = d.support();
                assert!(d.classify_fm_convexity(a, b).unwrap().is_convex());
                for _ in 0..500 {
                    let k = rng.random_range(1..=5);
                    let mut z = 0.0;
                    let mut dd = 0.0;
                    let mut rhs = 0.0;
                    for _ in 0..k {
                        let ratio = a.max(1e-3) + (b - a.max(1e-3)) * rng.random::<f64>();
                        let step_d = 0.1 + rng.random::<f64>();
                        z += ratio * step_d;
                        dd += step_d;
                        rhs += ratio * step_d * d.cdf(ratio);
                    }
                    let lhs = z * d.cdf(z / dd);
                    assert!(lhs <= rhs + 1e-12, "jensen step failed: {lhs} > {rhs}");
                }
            }
        }

        #[test]
        fn power_set_closure_keeps_single_pair_optimal_under_convexity() {
            // constraint sets closed under taking the top pair: with convex
            // F(m)m the best singleton ties the global best
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
            let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
            for _ in 0..50 {
                let base = random_cp_menu(&mut rng, &d, 4);
                let cs = ConstraintSet::power_set_of(&base).unwrap();
                let opt = optimal_menu(&cs, &d);
                let best_single = cs
                    .menus()
                    .iter()
                    .filter(|m| m.len() == 1)
                    .map(|m| menu_revenue(m, &d))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    best_single >= opt.revenue - 1e-12,
                    "single-pair optimum violated: {best_single} < {}",
                    opt.revenue
                );
            }
        }
    }
}
