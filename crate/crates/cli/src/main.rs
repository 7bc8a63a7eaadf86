//! `qsel` — equilibria and revenue-optimal quality disclosure for two-sided
//! market models, driven by a declarative market file.
//!
//! Exit codes: 0 on success, 2 on a validation error, 3 when a requested
//! structure admits no equilibrium, 1 on any other failure (including
//! failed `verify` checks).

mod market;
mod report;

use clap::{Parser, Subcommand};
use market::{block_name, digest, parse_market, parse_menu, parse_structure, Market};
use qsel_core::oracle::{self, OracleConfig};
use qsel_core::population::{enumerate_structures_capped, InformationStructure};
use qsel_core::pricedisc::{self, ConstraintSet, Menu, MenuComparison};
use qsel_core::quantity::EquilibriumResult;
use report::{cell, vec_cell, CsvTable, Format, Report};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qsel",
    about = "Equilibria and revenue-optimal quality disclosure in two-sided markets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Market file (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Output format
    #[arg(long, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the buyer distribution, test the supply condition, and
    /// check regularity of the market's menu family
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Enumeration cap on the block count
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Solve one disclosure structure of a quantity-choice market
    SolveQuantity {
        #[command(flatten)]
        common: CommonArgs,
        /// Structure such as "{A1,A2}|{A3}"
        #[arg(long)]
        structure: String,
    },
    /// Equilibrium menu of one structure under price competition
    SolvePrice {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        structure: String,
    },
    /// Solve every structure of a quantity-choice market and rank by revenue
    SearchQuantity {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        cap: Option<usize>,
        /// Worker threads for the structure sweep
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate every structure of a price-competition market
    SearchPrice {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare a menu against one of its submenus under the buyer law
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Menu as "price:quality,price:quality"
        #[arg(long)]
        menu: String,
        /// Submenu in the same syntax
        #[arg(long)]
        submenu: String,
    },
    /// Run the independent brute-force verifiers against the analytic paths
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the sampling seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the Monte Carlo sample count
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

enum CliError {
    Validation(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Other(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Other(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

impl From<market::ValidationErrors> for CliError {
    fn from(e: market::ValidationErrors) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message().trim_end());
            e.exit_code()
        }
    }
}

fn load(spec: &PathBuf) -> Result<(Market, market::OptionsSpec, String), CliError> {
    let raw = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", spec.display())))?;
    let (mkt, opts) = parse_market(&raw)?;
    let dg = digest(&raw);
    Ok((mkt, opts, dg))
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Check { common, cap } => cmd_check(common, cap),
        Command::SolveQuantity { common, structure } => cmd_solve_quantity(common, &structure),
        Command::SolvePrice { common, structure } => cmd_solve_price(common, &structure),
        Command::SearchQuantity { common, cap, jobs } => cmd_search_quantity(common, cap, jobs),
        Command::SearchPrice { common, cap, jobs } => cmd_search_price(common, cap, jobs),
        Command::Compare {
            common,
            menu,
            submenu,
        } => cmd_compare(common, &menu, &submenu),
        Command::Verify {
            common,
            seed,
            samples,
            jobs,
        } => cmd_verify(common, seed, samples, jobs),
    }
}

fn group_names(groups: &[Vec<usize>]) -> Vec<Vec<String>> {
    groups
        .iter()
        .map(|g| g.iter().map(|&b| block_name(b)).collect())
        .collect()
}

/// Cutoffs of a menu whose pairs all sell, in pair order.
fn menu_cutoffs(menu: &Menu) -> Vec<f64> {
    let mut out = Vec::with_capacity(menu.len());
    let (mut pp, mut qq) = (0.0, 0.0);
    for p in menu.pairs() {
        out.push((p.price - pp) / (p.quality - qq));
        pp = p.price;
        qq = p.quality;
    }
    out
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(common: CommonArgs, cap: Option<usize>) -> Result<ExitCode, CliError> {
    let (mkt, opts, dg) = load(&common.spec)?;
    let cap = cap
        .or(opts.cap)
        .unwrap_or(qsel_core::population::DEFAULT_ENUMERATION_CAP);
    let dist = mkt.dist();
    let (a, b) = dist.support();
    let fm = dist
        .classify_fm_convexity(a, b)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let eta = dist
        .elasticity_range(a, b)
        .map_err(|e| CliError::Other(e.to_string()))?;

    let mut diagnostics = Vec::new();
    let mut rows = vec![
        vec!["fm_classification".to_string(), fm.to_string()],
        vec!["elasticity_min".to_string(), cell(eta.0)],
        vec!["elasticity_max".to_string(), cell(eta.1)],
    ];

    let results = match &mkt {
        Market::Quantity(qm) => {
            let sc = qm
                .check_supply_condition()
                .map_err(|e| CliError::Other(e.to_string()))?;
            let search = qm
                .search_optimal_structure_with(cap, 1)
                .map_err(|e| CliError::Other(e.to_string()))?;
            let menus: Vec<Menu> = search
                .rows
                .iter()
                .filter(|r| r.result.implementable)
                .map(|r| r.result.menu().expect("implementable menus are valid"))
                .collect();
            let reg = pricedisc::check_regularity(
                &ConstraintSet::new(menus).map_err(|e| CliError::Other(e.to_string()))?,
                dist,
            )
            .map_err(|e| CliError::Other(e.to_string()))?;
            if let Some(n) = &reg.note {
                diagnostics.push(n.clone());
            }
            let guarantee = fm == qsel_core::dist::Convexity::StrictlyConvex && sc.holds;
            rows.push(vec![
                "supply_condition_holds".to_string(),
                sc.holds.to_string(),
            ]);
            rows.push(vec!["regular".to_string(), reg.is_regular().to_string()]);
            rows.push(vec![
                "one_group_guarantee".to_string(),
                guarantee.to_string(),
            ]);
            json!({
                "model": "quantity",
                "support": [a, b],
                "fm_classification": fm.to_string(),
                "elasticity_range": [eta.0, eta.1],
                "supply_condition": {
                    "highest_price_block": block_name(sc.highest_price_block),
                    "singleton_prices": sc.singleton_prices,
                    "monopoly_price": sc.monopoly_price,
                    "supply_at_monopoly": sc.supply_at_monopoly,
                    "demand_at_monopoly": sc.demand_at_monopoly,
                    "holds": sc.holds,
                    "uniform_alpha1_threshold": sc.uniform_alpha1_threshold,
                },
                "regularity": {
                    "top_pair_dominated": reg.top_dominated,
                    "price_below_monopoly": reg.below_monopoly,
                    "regular": reg.is_regular(),
                },
                "one_group_guarantee": guarantee,
            })
        }
        Market::Price(pm) => {
            let (cs, io_ok) = pm
                .constraint_set()
                .map_err(|e| CliError::Other(e.to_string()))?;
            let reg = pricedisc::check_regularity(&cs, dist)
                .map_err(|e| CliError::Other(e.to_string()))?;
            if let Some(n) = &reg.note {
                diagnostics.push(n.clone());
            }
            let disclosure = if io_ok {
                let rule = pm
                    .full_disclosure_rule()
                    .map_err(|e| CliError::Other(e.to_string()))?;
                json!({
                    "certified_optimal": rule.certified_optimal,
                    "interval": rule.interval,
                    "classification": rule.classification.map(|c| c.to_string()),
                })
            } else {
                diagnostics.push("full disclosure admits no equilibrium".into());
                Value::Null
            };
            rows.push(vec![
                "full_disclosure_implementable".to_string(),
                io_ok.to_string(),
            ]);
            rows.push(vec!["regular".to_string(), reg.is_regular().to_string()]);
            json!({
                "model": "price",
                "support": [a, b],
                "fm_classification": fm.to_string(),
                "elasticity_range": [eta.0, eta.1],
                "full_disclosure_implementable": io_ok,
                "menu_count": cs.menus().len(),
                "regularity": {
                    "top_pair_dominated": reg.top_dominated,
                    "price_below_monopoly": reg.below_monopoly,
                    "regular": reg.is_regular(),
                },
                "full_disclosure_rule": disclosure,
            })
        }
    };

    Report {
        spec_digest: dg,
        command: "check".into(),
        results,
        diagnostics,
        table: CsvTable {
            headers: vec!["property", "value"],
            rows,
        },
    }
    .emit(common.format, common.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn equilibrium_json(eq: &EquilibriumResult, structure: &InformationStructure) -> Value {
    let cutoffs = eq
        .implementable
        .then(|| eq.menu().ok().map(|m| menu_cutoffs(&m)))
        .flatten();
    json!({
        "structure": structure.to_string(),
        "groups": group_names(&eq.groups),
        "prices": eq.prices,
        "expected_qualities": eq.expected_qualities,
        "demands": eq.demands,
        "supplies": eq.supplies,
        "cutoffs": cutoffs,
        "clearing_residual": if eq.clearing_residual.is_nan() { Value::Null } else { json!(eq.clearing_residual) },
        "implementable": eq.implementable,
        "iterations": eq.iterations,
        "revenue": eq.implementable.then(|| eq.revenue()),
        "infeasibility": eq.infeasibility.as_ref().map(|d| d.to_string()),
    })
}

fn quantity_row_cells(structure: &InformationStructure, eq: &EquilibriumResult) -> Vec<String> {
    vec![
        structure.to_string(),
        eq.groups.len().to_string(),
        vec_cell(&eq.prices),
        vec_cell(&eq.expected_qualities),
        vec_cell(&eq.demands),
        vec_cell(&eq.supplies),
        if eq.implementable {
            cell(eq.revenue())
        } else {
            String::new()
        },
        eq.implementable.to_string(),
        if eq.clearing_residual.is_nan() {
            String::new()
        } else {
            cell(eq.clearing_residual)
        },
    ]
}

const QUANTITY_HEADERS: [&str; 9] = [
    "structure",
    "groups",
    "prices",
    "qualities",
    "demands",
    "supplies",
    "revenue",
    "implementable",
    "residual",
];

fn cmd_solve_quantity(common: CommonArgs, structure: &str) -> Result<ExitCode, CliError> {
    let (mkt, _, dg) = load(&common.spec)?;
    let Market::Quantity(qm) = &mkt else {
        return Err(CliError::Validation(
            "solve-quantity needs a market file with a `quantity` model".into(),
        ));
    };
    let s = parse_structure(structure, qm.pop.block_count())?;
    let eq = qm
        .solve_equilibrium(&s)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let implementable = eq.implementable;
    let mut diagnostics = Vec::new();
    if let Some(d) = &eq.infeasibility {
        diagnostics.push(d.to_string());
        if let qsel_core::quantity::Infeasibility::EqualExpectedQualities { group_a, group_b } = d
        {
            diagnostics.push(format!(
                "hint: merging groups {group_a} and {group_b} into one may admit an equilibrium"
            ));
        }
    }
    Report {
        spec_digest: dg,
        command: "solve-quantity".into(),
        results: equilibrium_json(&eq, &s),
        diagnostics,
        table: CsvTable {
            headers: QUANTITY_HEADERS.to_vec(),
            rows: vec![quantity_row_cells(&s, &eq)],
        },
    }
    .emit(common.format, common.out.as_ref())?;
    if implementable {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("structure {s} admits no equilibrium");
        Ok(ExitCode::from(3))
    }
}

const PRICE_HEADERS: [&str; 8] = [
    "structure",
    "groups",
    "prices",
    "qualities",
    "demands",
    "revenue",
    "implementable",
    "participation",
];

fn cmd_solve_price(common: CommonArgs, structure: &str) -> Result<ExitCode, CliError> {
    let (mkt, _, dg) = load(&common.spec)?;
    let Market::Price(pm) = &mkt else {
        return Err(CliError::Validation(
            "solve-price needs a market file with a `price` model".into(),
        ));
    };
    let s = parse_structure(structure, pm.pop.block_count())?;
    let outcome = pm
        .bertrand_menu(&s)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let split = pricedisc::demand_split(&outcome.menu, mkt.dist());
    let implementable = split.fully_demanded();
    let revenue = implementable.then(|| pricedisc::menu_revenue(&outcome.menu, mkt.dist()));
    let prices: Vec<f64> = outcome.menu.pairs().iter().map(|p| p.price).collect();
    let qualities: Vec<f64> = outcome.menu.pairs().iter().map(|p| p.quality).collect();
    let participation: Vec<String> = outcome
        .lowest_blocks
        .iter()
        .map(|&g| block_name(g))
        .collect();
    Report {
        spec_digest: dg,
        command: "solve-price".into(),
        results: json!({
            "structure": s.to_string(),
            "groups": group_names(&outcome.groups),
            "prices": prices,
            "expected_qualities": qualities,
            "demands": split.demands,
            "cutoffs": implementable.then(|| menu_cutoffs(&outcome.menu)),
            "implementable": implementable,
            "revenue": revenue,
            "participating_blocks": participation,
        }),
        diagnostics: Vec::new(),
        table: CsvTable {
            headers: PRICE_HEADERS.to_vec(),
            rows: vec![vec![
                s.to_string(),
                outcome.groups.len().to_string(),
                vec_cell(&prices),
                vec_cell(&qualities),
                vec_cell(&split.demands),
                revenue.map(cell).unwrap_or_default(),
                implementable.to_string(),
                participation.join(";"),
            ]],
        },
    }
    .emit(common.format, common.out.as_ref())?;
    if implementable {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("structure {s} admits no equilibrium (a pair has zero demand)");
        Ok(ExitCode::from(3))
    }
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

fn cmd_search_quantity(
    common: CommonArgs,
    cap: Option<usize>,
    jobs: usize,
) -> Result<ExitCode, CliError> {
    let (mkt, opts, dg) = load(&common.spec)?;
    let Market::Quantity(qm) = &mkt else {
        return Err(CliError::Validation(
            "search-quantity needs a market file with a `quantity` model".into(),
        ));
    };
    let cap = cap
        .or(opts.cap)
        .unwrap_or(qsel_core::population::DEFAULT_ENUMERATION_CAP);
    let search = qm
        .search_optimal_structure_with(cap, jobs)
        .map_err(|e| CliError::Other(e.to_string()))?;

    let rows_json: Vec<Value> = search
        .rows
        .iter()
        .map(|r| equilibrium_json(&r.result, &r.structure))
        .collect();
    let csv_rows: Vec<Vec<String>> = search
        .rows
        .iter()
        .map(|r| quantity_row_cells(&r.structure, &r.result))
        .collect();
    let w = search.winner_row();
    Report {
        spec_digest: dg,
        command: "search-quantity".into(),
        results: json!({
            "winner": {
                "structure": w.structure.to_string(),
                "revenue": w.revenue,
            },
            "one_group_guarantee": search.one_group_guarantee,
            "winner_single_group": search.winner_single_group,
            "winner_is_original_block": search.winner_is_original_block,
            "fm_classification": search.fm_class.to_string(),
            "supply_condition_holds": search.supply_condition.holds,
            "structures": rows_json,
        }),
        diagnostics: search
            .rows
            .iter()
            .filter_map(|r| {
                r.result
                    .infeasibility
                    .as_ref()
                    .map(|d| format!("{}: {d}", r.structure))
            })
            .collect(),
        table: CsvTable {
            headers: QUANTITY_HEADERS.to_vec(),
            rows: csv_rows,
        },
    }
    .emit(common.format, common.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_search_price(
    common: CommonArgs,
    cap: Option<usize>,
    jobs: usize,
) -> Result<ExitCode, CliError> {
    let (mkt, opts, dg) = load(&common.spec)?;
    let Market::Price(pm) = &mkt else {
        return Err(CliError::Validation(
            "search-price needs a market file with a `price` model".into(),
        ));
    };
    let cap = cap
        .or(opts.cap)
        .unwrap_or(qsel_core::population::DEFAULT_ENUMERATION_CAP);
    let search = pm
        .search_optimal_structure_with(cap, jobs)
        .map_err(|e| CliError::Other(e.to_string()))?;

    let rows_json: Vec<Value> = search
        .rows
        .iter()
        .map(|r| {
            let prices: Vec<f64> = r.outcome.menu.pairs().iter().map(|p| p.price).collect();
            let qualities: Vec<f64> = r.outcome.menu.pairs().iter().map(|p| p.quality).collect();
            json!({
                "structure": r.structure.to_string(),
                "groups": group_names(&r.outcome.groups),
                "prices": prices,
                "expected_qualities": qualities,
                "demands": r.demands,
                "implementable": r.implementable,
                "revenue": r.revenue,
                "participating_blocks": r.outcome.lowest_blocks.iter().map(|&g| block_name(g)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let csv_rows: Vec<Vec<String>> = search
        .rows
        .iter()
        .map(|r| {
            let prices: Vec<f64> = r.outcome.menu.pairs().iter().map(|p| p.price).collect();
            let qualities: Vec<f64> = r.outcome.menu.pairs().iter().map(|p| p.quality).collect();
            vec![
                r.structure.to_string(),
                r.outcome.groups.len().to_string(),
                vec_cell(&prices),
                vec_cell(&qualities),
                vec_cell(&r.demands),
                r.revenue.map(cell).unwrap_or_default(),
                r.implementable.to_string(),
                r.outcome
                    .lowest_blocks
                    .iter()
                    .map(|&g| block_name(g))
                    .collect::<Vec<_>>()
                    .join(";"),
            ]
        })
        .collect();
    let w = search.winner_row();
    Report {
        spec_digest: dg,
        command: "search-price".into(),
        results: json!({
            "winner": {
                "structure": w.structure.to_string(),
                "revenue": w.revenue,
            },
            "fm_classification": search.fm_class.to_string(),
            "one_group_matches_best": search.one_group_matches_best,
            "winner_is_highest_block": search.winner_is_highest_block,
            "structures": rows_json,
        }),
        diagnostics: Vec::new(),
        table: CsvTable {
            headers: PRICE_HEADERS.to_vec(),
            rows: csv_rows,
        },
    }
    .emit(common.format, common.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn cmd_compare(common: CommonArgs, menu: &str, submenu: &str) -> Result<ExitCode, CliError> {
    let (mkt, _, dg) = load(&common.spec)?;
    let dist = mkt.dist();
    let menu = parse_menu(menu)?;
    let sub = parse_menu(submenu)?;
    let cmp = pricedisc::compare_submenu(&menu, &sub, dist)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let verdict = match cmp.verdict {
        MenuComparison::SubBetterByConvexity => "SubBetterByConvexity",
        MenuComparison::MenuBetterByConcavity => "MenuBetterByConcavity",
        MenuComparison::Indeterminate => "Indeterminate",
    };

    let menu_row = |id: &str, m: &Menu, revenue: f64| -> Vec<String> {
        let split = pricedisc::demand_split(m, dist);
        let prices: Vec<f64> = m.pairs().iter().map(|p| p.price).collect();
        let qualities: Vec<f64> = m.pairs().iter().map(|p| p.quality).collect();
        vec![
            id.to_string(),
            m.len().to_string(),
            vec_cell(&prices),
            vec_cell(&qualities),
            vec_cell(&menu_cutoffs(m)),
            vec_cell(&split.demands),
            cell(revenue),
            verdict.to_string(),
        ]
    };

    let mut diagnostics = Vec::new();
    if !cmp.sub_retains_top {
        diagnostics.push(
            "submenu lacks the full menu's top pair; adding it would raise the submenu's revenue"
                .into(),
        );
    }
    Report {
        spec_digest: dg,
        command: "compare".into(),
        results: json!({
            "verdict": verdict,
            "menu": menu.pairs().iter().map(|p| [p.price, p.quality]).collect::<Vec<_>>(),
            "submenu": sub.pairs().iter().map(|p| [p.price, p.quality]).collect::<Vec<_>>(),
            "menu_revenue": cmp.menu_revenue,
            "submenu_revenue": cmp.sub_revenue,
            "intervals": cmp.intervals.iter().map(|(lo, hi, c)| json!({
                "lo": lo, "hi": hi, "classification": c.to_string()
            })).collect::<Vec<_>>(),
            "submenu_retains_top_pair": cmp.sub_retains_top,
        }),
        diagnostics,
        table: CsvTable {
            headers: vec![
                "menu_id",
                "k",
                "prices",
                "qualities",
                "cutoffs",
                "demands",
                "revenue",
                "verdict",
            ],
            rows: vec![
                menu_row("menu", &menu, cmp.menu_revenue),
                menu_row("submenu", &sub, cmp.sub_revenue),
            ],
        },
    }
    .emit(common.format, common.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckLine {
    name: String,
    passed: bool,
    detail: String,
}

fn cmd_verify(
    common: CommonArgs,
    seed: Option<u64>,
    samples: Option<usize>,
    jobs: usize,
) -> Result<ExitCode, CliError> {
    let (mkt, opts, dg) = load(&common.spec)?;
    let cfg = OracleConfig::new(
        samples.or(opts.samples).unwrap_or(1_000_000),
        seed.or(opts.seed).unwrap_or(0x5EED),
        opts.grid_resolution.unwrap_or(1e-4),
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;
    let cap = opts
        .cap
        .unwrap_or(qsel_core::population::DEFAULT_ENUMERATION_CAP);

    let mut checks: Vec<CheckLine> = Vec::new();
    let structures = enumerate_structures_capped(mkt.pop(), cap)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    match &mkt {
        Market::Quantity(qm) => {
            let mut menus_seen: Vec<Menu> = Vec::new();
            let mut lattice_checked = 0;
            for s in &structures {
                let eq = qm
                    .solve_equilibrium(s)
                    .map_err(|e| CliError::Other(e.to_string()))?;
                if !eq.implementable {
                    continue;
                }
                let menu = eq.menu().expect("implementable menus are valid");

                // lattice agreement on small structures
                if s.group_count() <= 2 && lattice_checked < 6 {
                    lattice_checked += 1;
                    match oracle::grid_equilibrium(s, qm, &cfg) {
                        Ok(lattice) => {
                            let max_err = lattice
                                .iter()
                                .zip(&eq.prices)
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0, f64::max);
                            checks.push(CheckLine {
                                name: format!("lattice equilibrium {s}"),
                                passed: max_err < 1e-6,
                                detail: format!("max price error {max_err:.2e}"),
                            });
                        }
                        Err(e) => checks.push(CheckLine {
                            name: format!("lattice equilibrium {s}"),
                            passed: false,
                            detail: e.to_string(),
                        }),
                    }
                }

                // Monte Carlo demand parity on distinct induced menus
                if menus_seen.len() < 6 && !menus_seen.contains(&menu) {
                    menus_seen.push(menu.clone());
                    let est = oracle::mc_demand_jobs(&menu, &qm.dist, &cfg, jobs);
                    let split = pricedisc::demand_split(&menu, &qm.dist);
                    let ok = est
                        .iter()
                        .zip(&split.demands)
                        .all(|(e, &d)| (e.demand - d).abs() <= 3.0 * e.std_err.max(1e-9));
                    checks.push(CheckLine {
                        name: format!("monte carlo demand {s}"),
                        passed: ok,
                        detail: format!("{} pairs within 3 standard errors", est.len()),
                    });
                }
            }
        }
        Market::Price(pm) => {
            let mut menus_seen: Vec<Menu> = Vec::new();
            for s in &structures {
                let (ok, _) = pm
                    .is_implementable(s)
                    .map_err(|e| CliError::Other(e.to_string()))?;
                if !ok {
                    continue;
                }
                let outcome = pm
                    .bertrand_menu(s)
                    .map_err(|e| CliError::Other(e.to_string()))?;
                let prices: Vec<f64> = outcome.menu.pairs().iter().map(|p| p.price).collect();
                let passed = oracle::bertrand_deviation_check(s, pm, &prices, 1e-6);
                checks.push(CheckLine {
                    name: format!("no profitable deviation {s}"),
                    passed,
                    detail: String::new(),
                });

                if menus_seen.len() < 6 && !menus_seen.contains(&outcome.menu) {
                    menus_seen.push(outcome.menu.clone());
                    let est = oracle::mc_demand_jobs(&outcome.menu, &pm.dist, &cfg, jobs);
                    let split = pricedisc::demand_split(&outcome.menu, &pm.dist);
                    let ok = est
                        .iter()
                        .zip(&split.demands)
                        .all(|(e, &d)| (e.demand - d).abs() <= 3.0 * e.std_err.max(1e-9));
                    checks.push(CheckLine {
                        name: format!("monte carlo demand {s}"),
                        passed: ok,
                        detail: format!("{} pairs within 3 standard errors", est.len()),
                    });
                }
            }
        }
    }

    let mut all_ok = true;
    for c in &checks {
        let status = if c.passed { "ok" } else { "FAIL" };
        all_ok &= c.passed;
        if c.detail.is_empty() {
            println!("{status} {}", c.name);
        } else {
            println!("{status} {} ({})", c.name, c.detail);
        }
    }

    Report {
        spec_digest: dg,
        command: "verify".into(),
        results: json!({
            "checks": checks.iter().map(|c| json!({
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
            "all_passed": all_ok,
            "samples": cfg.samples,
            "seed": cfg.seed,
        }),
        diagnostics: Vec::new(),
        table: CsvTable {
            headers: vec!["check", "status", "detail"],
            rows: checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        if c.passed { "ok" } else { "FAIL" }.to_string(),
                        c.detail.clone(),
                    ]
                })
                .collect(),
        },
    }
    .emit(common.format, common.out.as_ref())?;
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
