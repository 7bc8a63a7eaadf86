//! Slow brute-force verifiers, deliberately independent of the analytic
//! implementations.
//!
//! Nothing here calls the envelope demand split, the clearing-potential
//! solver, or any closed-form equilibrium map. Demand is simulated from the
//! buyer's literal argmax choice; seller quantities come from golden-section
//! search on the raw utility; equilibria are located on a price lattice and
//! polished by coordinate bisection. The only shared surfaces are the CDF
//! and quantile of [`TypeDistribution`] and plain market data.

use crate::bertrand::PriceMarket;
use crate::dist::TypeDistribution;
use crate::population::InformationStructure;
use crate::pricedisc::Menu;
use crate::quantity::QuantityMarket;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Sample count, seed, and lattice resolution (as a fraction of the scanned
/// range) for the brute-force checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub samples: usize,
    pub seed: u64,
    pub grid_resolution: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            samples: 1_000_000,
            seed: 0x5EED,
            grid_resolution: 1e-4,
        }
    }
}

impl OracleConfig {
    pub fn new(samples: usize, seed: u64, grid_resolution: f64) -> Result<Self, OracleError> {
        if samples < 10_000 {
            return Err(OracleError::Invalid(format!(
                "need at least 10000 samples, got {samples}"
            )));
        }
        if !(grid_resolution.is_finite() && grid_resolution > 0.0) {
            return Err(OracleError::Invalid(format!(
                "grid resolution must be positive, got {grid_resolution}"
            )));
        }
        Ok(OracleConfig {
            samples,
            seed,
            grid_resolution,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    Invalid(String),
    /// The lattice scan found no candidate with a near-zero residual.
    NoInteriorEquilibrium,
    /// Group counts beyond the lattice budget.
    TooManyGroups(usize),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Invalid(m) => write!(f, "invalid oracle configuration: {m}"),
            OracleError::NoInteriorEquilibrium => write!(f, "no interior equilibrium on grid"),
            OracleError::TooManyGroups(n) => {
                write!(f, "lattice search supports at most 2 groups, got {n}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Monte Carlo demand estimate for one menu pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandEstimate {
    pub demand: f64,
    pub std_err: f64,
}

/// Simulated demand per menu pair: draw types by inverse-CDF sampling, let
/// each pick its argmax pair (ties to the higher index, outside option
/// zero), and report frequencies with binomial standard errors.
///
/// Sampling is chunked with per-chunk seeds derived from `cfg.seed`, so the
/// result is bit-identical for a fixed seed no matter how many workers run.
pub fn mc_demand(menu: &Menu, dist: &TypeDistribution, cfg: &OracleConfig) -> Vec<DemandEstimate> {
    mc_demand_jobs(menu, dist, cfg, 1)
}

pub fn mc_demand_jobs(
    menu: &Menu,
    dist: &TypeDistribution,
    cfg: &OracleConfig,
    jobs: usize,
) -> Vec<DemandEstimate> {
    const CHUNK: usize = 1 << 16;
    let n_pairs = menu.len();
    let chunks: Vec<(u64, usize)> = (0..cfg.samples.div_ceil(CHUNK))
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(cfg.samples - start);
            (derive_seed(cfg.seed, c as u64), len)
        })
        .collect();

    let counts = crate::par::map_indexed(jobs, &chunks, |&(seed, len)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; n_pairs];
        for _ in 0..len {
            let u: f64 = rng.random();
            let m = dist.quantile(u).expect("u in [0,1)");
            let mut best: Option<usize> = None;
            let mut best_u = 0.0;
            for (i, pair) in menu.pairs().iter().enumerate() {
                let util = m * pair.quality - pair.price;
                if util >= best_u {
                    best_u = util;
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                counts[i] += 1;
            }
        }
        counts
    });

    let mut total = vec![0u64; n_pairs];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let n = cfg.samples as f64;
    total
        .into_iter()
        .map(|c| {
            let p = c as f64 / n;
            DemandEstimate {
                demand: p,
                std_err: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect()
}

fn derive_seed(seed: u64, chunk: u64) -> u64 {
    // splitmix64 step keeps chunk seeds decorrelated
    let mut z = seed ^ chunk.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// lattice equilibrium search (quantity model, 1–2 groups)
// ---------------------------------------------------------------------------

/// A seller's quantity found by golden-section search on the raw utility
/// `h·p − k·h^(α+1)/(α+1)`, bracketing by doubling. Never consults the
/// closed-form optimum. Accuracy bottoms out near sqrt(machine epsilon),
/// which is orders below the 1e−6 price agreement the lattice search owes.
fn quantity_by_search(k: f64, alpha: f64, price: f64) -> f64 {
    let utility = |h: f64| h * price - k * h.powf(alpha + 1.0) / (alpha + 1.0);
    let mut hi = 1.0;
    for _ in 0..200 {
        if utility(2.0 * hi) <= utility(hi) {
            break;
        }
        hi *= 2.0;
    }
    hi *= 2.0;
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = 0.0;
    let mut c = hi - INV_PHI * hi;
    let mut d = INV_PHI * hi;
    let (mut fc, mut fd) = (utility(c), utility(d));
    for _ in 0..200 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = utility(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = utility(d);
        }
        if hi - lo < 1e-13 * (1.0 + hi) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Group state recomputed from scratch at a candidate price: per-atom
/// quantities by search, expected quality as the quantity-weighted mean
/// (the rational-expectations belief), and total supply.
struct GroupEval {
    quality: f64,
    supply: f64,
}

fn eval_group(market: &QuantityMarket, blocks: &[usize], price: f64) -> GroupEval {
    let atoms = market.pop.atoms_of_blocks(blocks);
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in &atoms {
        let h = quantity_by_search(market.cost_coef()[i], market.alpha(), price);
        let w = h * market.pop.atoms()[i].mass;
        num += market.pop.atoms()[i].quality * w;
        den += w;
    }
    GroupEval {
        quality: num / den,
        supply: den,
    }
}

/// Demand per group from the buyer's literal choice rule: scan the type
/// axis for winner changes and refine each boundary by bisection on the
/// argmax indicator.
fn demand_by_choice(
    dist: &TypeDistribution,
    qualities: &[f64],
    prices: &[f64],
) -> Vec<f64> {
    let (a, b) = dist.support();
    let winner = |m: f64| -> Option<usize> {
        let mut best = None;
        let mut best_u = 0.0;
        for i in 0..prices.len() {
            let u = m * qualities[i] - prices[i];
            if u >= best_u {
                best_u = u;
                best = Some(i);
            }
        }
        best
    };
    const SCAN: usize = 2048;
    let mut demands = vec![0.0; prices.len()];
    let mut seg_start = a;
    let mut seg_winner = winner(a);
    for k in 1..=SCAN {
        let m = a + (b - a) * k as f64 / SCAN as f64;
        let w = winner(m);
        if w != seg_winner || k == SCAN {
            // refine the boundary between seg_winner and w
            let boundary = if k == SCAN && w == seg_winner {
                b
            } else {
                let (mut lo, mut hi) = (m - (b - a) / SCAN as f64, m);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if winner(mid) == seg_winner {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            if let Some(i) = seg_winner {
                demands[i] += dist.cdf(boundary) - dist.cdf(seg_start);
            }
            seg_start = boundary;
            seg_winner = w;
        }
    }
    if let Some(i) = seg_winner {
        demands[i] += dist.cdf(b) - dist.cdf(seg_start);
    }
    demands
}

/// Clearing residual (max over groups of |supply − demand|) with everything
/// rebuilt from primitives at the candidate prices.
fn residual_at(market: &QuantityMarket, groups: &[Vec<usize>], prices: &[f64]) -> f64 {
    let evals: Vec<GroupEval> = groups
        .iter()
        .zip(prices)
        .map(|(g, &p)| eval_group(market, g, p))
        .collect();
    let qualities: Vec<f64> = evals.iter().map(|e| e.quality).collect();
    let demands = demand_by_choice(&market.dist, &qualities, prices);
    evals
        .iter()
        .zip(demands)
        .map(|(e, d)| (e.supply - d).abs())
        .fold(0.0, f64::max)
}

/// Lattice search for the clearing prices of a 1- or 2-group structure,
/// polished by coordinate bisection on each group's own excess supply.
/// Groups come back ordered by expected quality ascending.
pub fn grid_equilibrium(
    structure: &InformationStructure,
    market: &QuantityMarket,
    cfg: &OracleConfig,
) -> Result<Vec<f64>, OracleError> {
    let n = structure.group_count();
    if n > 2 {
        return Err(OracleError::TooManyGroups(n));
    }
    // order groups by expected quality, evaluated at a reference price
    let mut groups: Vec<Vec<usize>> = structure.groups().to_vec();
    groups.sort_by(|x, y| {
        let qx = eval_group(market, x, 1.0).quality;
        let qy = eval_group(market, y, 1.0).quality;
        qx.partial_cmp(&qy).unwrap()
    });

    let (_, b) = market.dist.support();
    let q_top = eval_group(market, groups.last().unwrap(), 1.0).quality;
    let p_max = q_top * b;

    // coarse lattice
    let per_axis = ((1.0 / cfg.grid_resolution).powf(1.0 / n as f64).round() as usize)
        .clamp(50, 10_000);
    let axis: Vec<f64> = (1..=per_axis)
        .map(|k| p_max * k as f64 / (per_axis + 1) as f64)
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    match n {
        1 => {
            for &p in &axis {
                let r = residual_at(market, &groups, &[p]);
                if best.as_ref().is_none_or(|(br, _)| r < *br) {
                    best = Some((r, vec![p]));
                }
            }
        }
        _ => {
            for (i, &p1) in axis.iter().enumerate() {
                for &p2 in &axis[i + 1..] {
                    let r = residual_at(market, &groups, &[p1, p2]);
                    if best.as_ref().is_none_or(|(br, _)| r < *br) {
                        best = Some((r, vec![p1, p2]));
                    }
                }
            }
        }
    }
    let (_, mut prices) = best.ok_or(OracleError::NoInteriorEquilibrium)?;

    // polish: each group's excess supply is increasing in its own price
    let excess_i = |prices: &[f64], i: usize| -> f64 {
        let evals: Vec<GroupEval> = groups
            .iter()
            .zip(prices)
            .map(|(g, &p)| eval_group(market, g, p))
            .collect();
        let qualities: Vec<f64> = evals.iter().map(|e| e.quality).collect();
        let demands = demand_by_choice(&market.dist, &qualities, prices);
        evals[i].supply - demands[i]
    };
    for _ in 0..60 {
        for i in 0..n {
            let mut lo = prices[i] * 0.25;
            let mut hi = (prices[i] * 4.0).min(p_max * 2.0);
            if excess_i(&prices, i).abs() < 1e-10 {
                continue;
            }
            // widen until the bracket straddles zero
            for _ in 0..60 {
                let mut probe = prices.clone();
                probe[i] = lo;
                if excess_i(&probe, i) < 0.0 {
                    break;
                }
                lo *= 0.5;
            }
            for _ in 0..60 {
                let mut probe = prices.clone();
                probe[i] = hi;
                if excess_i(&probe, i) > 0.0 {
                    break;
                }
                hi *= 1.5;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let mut probe = prices.clone();
                probe[i] = mid;
                if excess_i(&probe, i) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            prices[i] = 0.5 * (lo + hi);
        }
        // the searched quantities floor the residual near 1e-8
        if residual_at(market, &groups, &prices) < 5e-8 {
            break;
        }
    }
    if residual_at(market, &groups, &prices) > 1e-6 {
        return Err(OracleError::NoInteriorEquilibrium);
    }
    Ok(prices)
}

// ---------------------------------------------------------------------------
// Bertrand deviation check
// ---------------------------------------------------------------------------

/// Does no participating seller gain from deviating by `eps`?
///
/// For each group the candidate price must cover the cheapest participating
/// cost (no selling at a loss), undercutting by `eps` must land below that
/// cost, and raising by `eps` forfeits the whole demand because rival
/// sellers of positive mass remain at the lower price. Prices align with
/// groups sorted by their cheapest block.
pub fn bertrand_deviation_check(
    structure: &InformationStructure,
    market: &PriceMarket,
    prices: &[f64],
    eps: f64,
) -> bool {
    let mut lows: Vec<usize> = structure
        .groups()
        .iter()
        .map(|g| *g.iter().min().unwrap())
        .collect();
    lows.sort_unstable();
    if prices.len() != lows.len() {
        return false;
    }
    lows.iter().zip(prices).all(|(&g, &p)| {
        let floor = market.costs()[g];
        // undercut lands below cost; the price itself does not
        p >= floor && p - eps < floor
    })
}
