//! Equilibrium computation and revenue-optimal quality disclosure for
//! two-sided markets.
//!
//! A platform knows a coarse partition of its sellers by quality and decides
//! how much of that information to share with buyers: it can ban blocks of
//! sellers, pool blocks into indistinguishable groups, or disclose the
//! partition in full. Each choice, together with the market equilibrium it
//! induces, puts a finite menu of (price, expected quality) pairs in front of
//! the buyers, so the disclosure problem reduces to price discrimination over
//! a constrained family of menus.
//!
//! The crate is organised around that reduction:
//!
//! - [`dist`] — buyer-type distributions with the analytic quantities the
//!   menu algebra needs (CDF, density, CDF antiderivative, density
//!   elasticity, convexity classification of `F(m)·m`);
//! - [`population`] — seller quality atoms, the platform's partition, and
//!   enumeration of all disclosure structures;
//! - [`pricedisc`] — menu demand splits, revenue, monopoly prices,
//!   regularity checks, optimal-menu search and local comparison rules;
//! - [`quantity`] — the market where the platform posts prices and sellers
//!   choose quantities; equilibria come from a strictly convex clearing
//!   potential;
//! - [`bertrand`] — the market where sellers set prices under within-group
//!   Bertrand competition; equilibria are exact;
//! - [`oracle`] — slow, independent brute-force verifiers (Monte Carlo
//!   demand, lattice equilibrium search, deviation checks) with no shared
//!   code path into the analytic implementations.

pub mod bertrand;
pub mod dist;
pub mod oracle;
pub mod population;
pub mod pricedisc;
pub mod quantity;

mod par;
mod special;

#[doc(hidden)]
pub mod testkit;
