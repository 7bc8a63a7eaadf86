//! Acceptance suite: one test per gate criterion, each printing a pass/fail
//! line. Tolerances are pinned in the assertions, not configurable.
//!
//! Run with `cargo test -p qsel-core --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use qsel_core::bertrand::PriceMarket;
use qsel_core::dist::{Convexity, DensityPiece, PowerTerm, TypeDistribution};
use qsel_core::oracle::{self, OracleConfig};
use qsel_core::population::{enumerate_structures, Atom, InformationStructure, SellerPopulation};
use qsel_core::pricedisc::{self, ConstraintSet, Menu};
use qsel_core::quantity::QuantityMarket;
use qsel_core::testkit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Runs a criterion body and prints its pass/fail line.
fn criterion(tag: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    let outcome = std::panic::catch_unwind(body);
    match outcome {
        Ok(()) => println!("acceptance {tag}: PASS"),
        Err(e) => {
            println!("acceptance {tag}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

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

fn two_block_market(mass: f64) -> QuantityMarket {
    let pop = SellerPopulation::new(
        vec![
            Atom {
                quality: 0.25,
                mass,
            },
            Atom {
                quality: 0.75,
                mass,
            },
        ],
        vec![vec![0], vec![1]],
        1.0,
    )
    .unwrap();
    QuantityMarket::new(uniform(), pop, vec![1.0, 1.0], 1.0).unwrap()
}

/// Criterion 1: on randomized unit-uniform markets with linear supply the
/// singleton equilibrium prices match the closed form
/// `p = I_x / (I_1 (1 + I_x))` and monopoly prices equal half the quality.
#[test]
fn a01_closed_form_singleton_prices() {
    criterion("01 closed-form singleton prices", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let d = uniform();
        for _ in 0..100 {
            let blocks = rng.random_range(2..=4usize);
            let market = testkit::random_quantity_market(&mut rng, &d, blocks);
            let l = market.pop.block_count();
            for b in 0..l {
                let ix: f64 = market
                    .pop
                    .blocks()[b]
                    .iter()
                    .map(|&i| {
                        market.pop.atoms()[i].quality * market.pop.atoms()[i].mass
                            / market.cost_coef()[i]
                    })
                    .sum();
                let i1: f64 = market
                    .pop
                    .blocks()[b]
                    .iter()
                    .map(|&i| market.pop.atoms()[i].mass / market.cost_coef()[i])
                    .sum();
                let closed_form = ix / (i1 * (1.0 + ix));
                let s = InformationStructure::new(vec![vec![b]], l).unwrap();
                let eq = market.solve_equilibrium(&s).unwrap();
                assert!(eq.implementable);
                assert!(
                    (eq.prices[0] - closed_form).abs() < 1e-8,
                    "price {} vs closed form {closed_form}",
                    eq.prices[0]
                );
                let q = market.expected_quality(&[b]);
                let pm = pricedisc::monopoly_price(q, &d).unwrap();
                assert!((pm - q / 2.0).abs() < 1e-8, "monopoly {pm} vs {}", q / 2.0);
            }
        }
        assert!(start.elapsed().as_secs_f64() < 5.0, "runtime budget exceeded");
    });
}

/// Criterion 2: with strictly convex `F(m)·m` and the supply condition
/// holding, the exhaustive revenue maximizer is a single group consisting
/// of one original block, and its menu is maximal among single-group menus.
/// The menu family these markets induce also passes the regularity check
/// and hands the single-pair optimum to the menu search.
#[test]
fn a02_single_group_optimality_end_to_end() {
    criterion("02 single-group optimality end-to-end", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let dists = [
            uniform(),
            TypeDistribution::power(-1.5, 0.5, 2.0).unwrap(),
            TypeDistribution::power(1.0, 0.0, 1.2).unwrap(),
        ];
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 100 {
            attempts += 1;
            assert!(attempts < 5000, "could not find 100 qualifying markets");
            let d = &dists[rng.random_range(0..dists.len())];
            let blocks = rng.random_range(2..=4usize);
            let market = testkit::random_quantity_market(&mut rng, d, blocks);
            if market.pop.atoms().len() > 8 {
                continue;
            }
            let (a, b) = d.support();
            if d.classify_fm_convexity(a, b).unwrap() != Convexity::StrictlyConvex {
                continue;
            }
            let Ok(sc) = market.check_supply_condition() else {
                continue;
            };
            if !sc.holds {
                continue;
            }
            let search = market.search_optimal_structure().unwrap();
            assert!(search.one_group_guarantee);
            assert!(
                search.winner_single_group,
                "winner has {} groups",
                search.winner_row().structure.group_count()
            );
            assert!(
                search.winner_is_original_block,
                "winner group is not a single block: {}",
                search.winner_row().structure
            );

            // maximality among single-group menus
            let mut one_sep = Vec::new();
            for row in &search.rows {
                if row.structure.is_single_group() && row.result.implementable {
                    one_sep.push((row.result.prices[0], row.result.expected_qualities[0]));
                }
            }
            let w = &search.winner_row().result;
            let candidate = (w.prices[0], w.expected_qualities[0]);
            assert!(
                pricedisc::is_maximal(candidate, &one_sep).unwrap(),
                "winner menu not maximal"
            );

            // the induced menu family is a regular constraint set whose
            // optimum is a single pair
            let menus: Vec<Menu> = search
                .rows
                .iter()
                .filter(|r| r.result.implementable)
                .map(|r| r.result.menu().unwrap())
                .collect();
            let cs = ConstraintSet::new(menus).unwrap();
            let reg = pricedisc::check_regularity(&cs, d).unwrap();
            assert!(reg.is_regular(), "induced constraint set not regular");
            let opt = pricedisc::optimal_menu(&cs, d);
            assert_eq!(opt.menu.len(), 1, "optimal menu is not single-pair");
            let opt_pair = (opt.menu.pairs()[0].price, opt.menu.pairs()[0].quality);
            assert!(
                pricedisc::is_maximal(opt_pair, &reg.one_separating).unwrap(),
                "optimal single-pair menu not maximal in the set"
            );
            accepted += 1;
        }
        assert!(start.elapsed().as_secs_f64() < 60.0, "runtime budget exceeded");
    });
}

/// Criterion 3: the low-mass variant breaks the supply condition
/// (equilibrium price 6/11 above the monopoly price 0.375) and the
/// two-group structure out-earns the top-block ban.
#[test]
fn a03_supply_condition_failure_exhibit() {
    criterion("03 supply-condition failure exhibit", || {
        let market = two_block_market(0.5);
        let sc = market.check_supply_condition().unwrap();
        assert!((sc.singleton_prices[1] - 6.0 / 11.0).abs() < 1e-8);
        assert!((sc.monopoly_price - 0.375).abs() < 1e-8);
        assert!(sc.singleton_prices[1] > sc.monopoly_price);
        assert!(!sc.holds);

        let search = market.search_optimal_structure().unwrap();
        let revenues: std::collections::BTreeMap<String, f64> = search
            .rows
            .iter()
            .filter_map(|r| r.revenue.map(|rev| (r.structure.to_string(), rev)))
            .collect();
        let two_group = revenues["{A1}|{A2}"];
        let top_only = revenues["{A2}"];
        assert!((two_group - 0.154104).abs() < 1e-5, "got {two_group}");
        assert!((top_only - 0.148760).abs() < 1e-5, "got {top_only}");
        assert!(two_group > top_only);
    });
}

/// Criterion 4: for price-competition markets with up to five blocks and
/// implementable full disclosure, the menus induced across all
/// implementable structures equal the nonempty submenus of the
/// full-disclosure menu exactly, with prices equal to minimum group costs.
#[test]
fn a04_bertrand_menus_cover_power_set() {
    criterion("04 bertrand menu family equals the power set", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for l in 1..=5usize {
            for _ in 0..8 {
                let market = random_price_market(&mut rng, l);
                let io =
                    InformationStructure::new((0..l).map(|b| vec![b]).collect(), l).unwrap();
                assert!(market.is_implementable(&io).unwrap().0);
                let full = market.bertrand_menu(&io).unwrap().menu;

                let mut induced: Vec<Vec<(f64, f64)>> = Vec::new();
                for s in enumerate_structures(&market.pop).unwrap() {
                    let outcome = market.bertrand_menu(&s).unwrap();
                    // prices are minimum group costs, bit for bit
                    for (pair, &g) in
                        outcome.menu.pairs().iter().zip(&outcome.lowest_blocks)
                    {
                        assert_eq!(pair.price, market.costs()[g]);
                    }
                    if market.is_implementable(&s).unwrap().0 {
                        let key = menu_key(&outcome.menu);
                        if !induced.contains(&key) {
                            induced.push(key);
                        }
                    }
                }
                let mut expected: Vec<Vec<(f64, f64)>> = full
                    .nonempty_submenus()
                    .iter()
                    .map(menu_key)
                    .collect();
                induced.sort_by(|x, y| x.partial_cmp(y).unwrap());
                expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
                assert_eq!(induced, expected, "l={l}");

                // uniform buyers have convex F(m)m, so some single-group
                // structure must tie the exhaustive winner
                let search = market.search_optimal_structure().unwrap();
                assert_eq!(search.one_group_matches_best, Some(true), "l={l}");
            }
        }
        assert!(start.elapsed().as_secs_f64() < 10.0, "runtime budget exceeded");
    });
}

fn menu_key(m: &Menu) -> Vec<(f64, f64)> {
    m.pairs().iter().map(|p| (p.price, p.quality)).collect()
}

/// Random price market with implementable full disclosure: qualities rise
/// across blocks and costs are rebuilt from interior cutoffs.
fn random_price_market(rng: &mut ChaCha8Rng, l: usize) -> PriceMarket {
    let pop = testkit::random_population(rng, l);
    let qualities: Vec<f64> = (0..l)
        .map(|b| {
            pop.conditional_mean_unweighted(&pop.blocks()[b])
                .unwrap()
        })
        .collect();
    // increasing cutoffs strictly inside the unit support
    let mut cutoffs: Vec<f64> = (0..l)
        .map(|_| 0.05 + 0.9 * rng.random::<f64>())
        .collect();
    cutoffs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for i in 1..l {
        if cutoffs[i] - cutoffs[i - 1] < 1e-3 {
            cutoffs[i] = (cutoffs[i - 1] + 1e-3).min(0.999);
        }
    }
    let mut costs = Vec::with_capacity(l);
    let (mut c, mut q_prev) = (0.0, 0.0);
    for (i, &q) in qualities.iter().enumerate() {
        c += cutoffs[i] * (q - q_prev);
        costs.push(c);
        q_prev = q;
    }
    PriceMarket::new(uniform(), pop, costs).unwrap()
}

/// Criterion 5: with the concave-side density the two-pair counterexample
/// strictly beats both singletons, and full disclosure out-earns dropping
/// the low block, both matching hand-evaluated CDF arithmetic.
#[test]
fn a05_concave_side_counterexample_and_full_disclosure() {
    criterion("05 concave-side counterexample and full disclosure", || {
        let d = concave_m3();
        let found = pricedisc::find_two_pair_counterexample(&d)
            .unwrap()
            .expect("a counterexample must exist");
        assert!(
            found.menu_revenue
                > found
                    .low_singleton_revenue
                    .max(found.high_singleton_revenue)
                    + 1e-9
        );

        let pop = SellerPopulation::new(
            vec![
                Atom {
                    quality: 0.25,
                    mass: 0.5,
                },
                Atom {
                    quality: 0.75,
                    mass: 0.5,
                },
            ],
            vec![vec![0], vec![1]],
            1.0,
        )
        .unwrap();
        let market = PriceMarket::new(d, pop, vec![0.3, 1.05]).unwrap();
        let search = market.search_optimal_structure().unwrap();
        let revenues: std::collections::BTreeMap<String, f64> = search
            .rows
            .iter()
            .filter_map(|r| r.revenue.map(|rev| (r.structure.to_string(), rev)))
            .collect();
        let full_disclosure = revenues["{A1}|{A2}"];
        let drop_lowest = revenues["{A2}"];

        // hand evaluation of F(m) = (4/3)(1 − m^−2) at the menu cutoffs
        let f = |m: f64| (4.0 / 3.0) * (1.0 - m.powi(-2));
        let full_expect = 1.05 - 0.3 * f(1.2) - 0.75 * f(1.5);
        let drop_expect = 1.05 * (1.0 - f(1.4));
        assert!((full_disclosure - full_expect).abs() < 1e-6);
        assert!((drop_lowest - drop_expect).abs() < 1e-6);
        assert!((full_expect - 0.372222).abs() < 1e-6);
        assert!((drop_expect - 0.364286).abs() < 1e-6);
        assert!(full_disclosure > drop_lowest);
        assert_eq!(search.winner_row().structure.to_string(), "{A1}|{A2}");
    });
}

/// Criterion 6: gradient–finite-difference agreement, clearing residuals at
/// every reported equilibrium, and restart-invariant price vectors.
#[test]
fn a06_numerical_hygiene() {
    criterion("06 numerical hygiene", || {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let d = uniform();
        for _ in 0..10 {
            let blocks = rng.random_range(2..=4usize);
            let market = testkit::random_quantity_market(&mut rng, &d, blocks);
            let l = market.pop.block_count();
            let structure =
                InformationStructure::new((0..l).map(|b| vec![b]).collect(), l).unwrap();

            // gradient versus central differences at random interior points
            let qualities: Vec<f64> = (0..l).map(|b| market.expected_quality(&[b])).collect();
            let h = 1e-6;
            let mut checked = 0;
            while checked < 100 {
                // random interior point from random increasing cutoffs
                let mut ms: Vec<f64> = (0..l)
                    .map(|_| 0.03 + 0.94 * rng.random::<f64>())
                    .collect();
                ms.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let mut prices = Vec::with_capacity(l);
                let (mut pp, mut qq) = (0.0, 0.0);
                for i in 0..l {
                    pp += ms[i] * (qualities[i] - qq);
                    qq = qualities[i];
                    prices.push(pp);
                }
                if market.clearing_potential(&structure, &prices).is_err() {
                    continue;
                }
                let grad = market.excess_supply(&structure, &prices).unwrap();
                for i in 0..l {
                    let mut up = prices.clone();
                    let mut dn = prices.clone();
                    up[i] += h;
                    dn[i] -= h;
                    let (fu, fd) = match (
                        market.clearing_potential(&structure, &up),
                        market.clearing_potential(&structure, &dn),
                    ) {
                        (Ok(a), Ok(b)) => (a, b),
                        _ => continue,
                    };
                    let fd_grad = (fu - fd) / (2.0 * h);
                    let rel = (fd_grad - grad[i]).abs() / grad[i].abs().max(1.0);
                    assert!(rel < 1e-6, "gradient mismatch: {fd_grad} vs {}", grad[i]);
                }
                checked += 1;
            }

            // every reported equilibrium clears, restarts agree to 1e-7
            let search = market.search_optimal_structure().unwrap();
            for row in &search.rows {
                if row.result.implementable {
                    assert!(
                        row.result.clearing_residual < 1e-8,
                        "residual {} on {}",
                        row.result.clearing_residual,
                        row.structure
                    );
                }
            }
            let reference = market.solve_equilibrium(&structure).unwrap();
            if reference.implementable {
                for _ in 0..10 {
                    let mut ms: Vec<f64> = (0..l)
                        .map(|_| 0.05 + 0.9 * rng.random::<f64>())
                        .collect();
                    ms.sort_by(|x, y| x.partial_cmp(y).unwrap());
                    let mut init = Vec::with_capacity(l);
                    let (mut pp, mut qq) = (0.0, 0.0);
                    for i in 0..l {
                        pp += ms[i] * (qualities[i] - qq);
                        qq = qualities[i];
                        init.push(pp);
                    }
                    if market.clearing_potential(&structure, &init).is_err() {
                        continue;
                    }
                    let eq = market.solve_equilibrium_from(&structure, Some(&init)).unwrap();
                    for (a, b) in eq.prices.iter().zip(&reference.prices) {
                        assert!((a - b).abs() < 1e-7, "restart drift {a} vs {b}");
                    }
                }
            }
        }
    });
}

/// Criterion 7: the independent verifiers agree with the analytic paths —
/// Monte Carlo demand within three standard errors, lattice equilibria
/// within 1e−6 of the solver, and no profitable deviation at any
/// price-competition equilibrium.
#[test]
fn a07_oracle_parity() {
    criterion("07 oracle parity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        let cfg = OracleConfig::new(1_000_000, 7077, 1e-4).unwrap();
        let dists = [
            uniform(),
            TypeDistribution::power(-1.5, 0.5, 2.0).unwrap(),
            TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap(),
            TypeDistribution::beta(2.0, 1.0).unwrap(),
            concave_m3(),
        ];
        for i in 0..50 {
            let d = &dists[i % dists.len()];
            let menu = testkit::random_fully_demanded_menu(&mut rng, d, 4);
            let est = oracle::mc_demand_jobs(&menu, d, &cfg, 4);
            let split = pricedisc::demand_split(&menu, d);
            for (e, &exact) in est.iter().zip(&split.demands) {
                let band = 3.0 * e.std_err.max(1e-9);
                assert!(
                    (e.demand - exact).abs() <= band,
                    "menu {i}: MC {} vs exact {exact} (band {band})",
                    e.demand
                );
            }
        }

        // lattice equilibria versus the convex-program solver
        for market in [two_block_market(2.0), two_block_market(0.5)] {
            for groups in [vec![vec![1usize]], vec![vec![0usize, 1]], vec![vec![0], vec![1]]] {
                let s = InformationStructure::new(groups, 2).unwrap();
                let newton = market.solve_equilibrium(&s).unwrap();
                assert!(newton.implementable);
                let lattice = oracle::grid_equilibrium(&s, &market, &cfg).unwrap();
                for (a, b) in lattice.iter().zip(&newton.prices) {
                    assert!((a - b).abs() < 1e-6, "lattice {a} vs newton {b}");
                }
            }
        }

        // no profitable deviation at any exact price-competition equilibrium
        let pop = SellerPopulation::new(
            vec![
                Atom {
                    quality: 0.25,
                    mass: 0.5,
                },
                Atom {
                    quality: 0.75,
                    mass: 0.5,
                },
            ],
            vec![vec![0], vec![1]],
            1.0,
        )
        .unwrap();
        let pm = PriceMarket::new(uniform(), pop, vec![0.1, 0.5]).unwrap();
        for s in enumerate_structures(&pm.pop).unwrap() {
            if pm.is_implementable(&s).unwrap().0 {
                let outcome = pm.bertrand_menu(&s).unwrap();
                let prices: Vec<f64> =
                    outcome.menu.pairs().iter().map(|p| p.price).collect();
                assert!(
                    oracle::bertrand_deviation_check(&s, &pm, &prices, 1e-6),
                    "deviation found at {s}"
                );
            }
        }
    });
}

/// Criterion 8: wherever the classifier calls the merged-run intervals
/// convex or concave, the exact revenue comparison has the predicted sign.
#[test]
fn a08_local_comparison_signs() {
    criterion("08 local comparison rules", || {
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let dists = [
            uniform(),
            TypeDistribution::power(-1.5, 0.5, 2.0).unwrap(),
            TypeDistribution::power(-4.0, 1.3, 3.5).unwrap(),
            TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap(),
            TypeDistribution::beta(2.0, 1.0).unwrap(),
            concave_m3(),
        ];
        for d in &dists {
            let mut done = 0;
            while done < 200 {
                let menu = testkit::random_fully_demanded_menu(&mut rng, d, 5);
                if menu.len() < 2 || !pricedisc::is_fully_demanded(&menu, d) {
                    continue;
                }
                // random submenu keeping the top pair
                let keep: Vec<_> = menu
                    .pairs()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i + 1 == menu.len() || rng.random::<f64>() < 0.5)
                    .map(|(_, p)| *p)
                    .collect();
                let sub = Menu::new(keep).unwrap();
                let report = pricedisc::compare_submenu(&menu, &sub, d).unwrap();
                match report.verdict {
                    pricedisc::MenuComparison::SubBetterByConvexity => {
                        assert!(
                            report.sub_revenue >= report.menu_revenue - 1e-12,
                            "convex verdict violated: {} < {}",
                            report.sub_revenue,
                            report.menu_revenue
                        );
                    }
                    pricedisc::MenuComparison::MenuBetterByConcavity => {
                        assert!(
                            report.menu_revenue >= report.sub_revenue - 1e-12,
                            "concave verdict violated: {} < {}",
                            report.menu_revenue,
                            report.sub_revenue
                        );
                    }
                    pricedisc::MenuComparison::Indeterminate => {}
                }
                done += 1;
            }
        }
    });
}
