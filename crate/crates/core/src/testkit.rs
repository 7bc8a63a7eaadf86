//! Generators for randomized markets and menus, shared by the unit,
//! property, and acceptance test suites. Not part of the public API.

use crate::dist::TypeDistribution;
use crate::population::{Atom, SellerPopulation};
use crate::pricedisc::{Menu, MenuPair};
use crate::quantity::QuantityMarket;
use rand::Rng;

/// A fully-demanded menu: random increasing cutoffs inside the support and
/// random quality increments reconstruct the prices, so every pair sells.
pub fn random_fully_demanded_menu(
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
    cutoffs.dedup_by(|x, y| (*x - *y).abs() < 1e-5 * (b - a));
    let mut q = 0.0;
    let mut p = 0.0;
    let mut pairs = Vec::new();
    for m in cutoffs {
        let dq = 0.1 + rng.random::<f64>();
        p += m * dq;
        q += dq;
        pairs.push(MenuPair::new(p, q));
    }
    Menu::new(pairs).expect("constructed pairs are positive")
}

/// Random atomic seller population: `blocks` blocks of 1..=3 atoms each,
/// qualities increasing across blocks so expected qualities stay distinct.
pub fn random_population(rng: &mut impl Rng, blocks: usize) -> SellerPopulation {
    let mut atoms = Vec::new();
    let mut block_sets = Vec::new();
    for b in 0..blocks {
        let n_atoms = rng.random_range(1..=3usize);
        let lo = (b as f64 + 0.05) / blocks as f64;
        let hi = (b as f64 + 0.95) / blocks as f64;
        let mut set = Vec::new();
        for _ in 0..n_atoms {
            set.push(atoms.len());
            atoms.push(Atom {
                quality: lo + (hi - lo) * rng.random::<f64>(),
                mass: 0.2 + 3.0 * rng.random::<f64>(),
            });
        }
        block_sets.push(set);
    }
    SellerPopulation::new(atoms, block_sets, 1.0).expect("constructed population is valid")
}

/// Random posted-price market over a random population. Cost coefficients
/// are kept low so the supply condition usually holds.
pub fn random_quantity_market(
    rng: &mut impl Rng,
    dist: &TypeDistribution,
    blocks: usize,
) -> QuantityMarket {
    let pop = random_population(rng, blocks);
    let costs: Vec<f64> = (0..pop.atoms().len())
        .map(|_| 0.2 + 0.8 * rng.random::<f64>())
        .collect();
    QuantityMarket::new(dist.clone(), pop, costs, 1.0).expect("constructed market is valid")
}
