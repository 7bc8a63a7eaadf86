//! Market-file ingestion: JSON schema, aggregated validation, and the
//! structure / menu string syntaxes used on the command line.

use qsel_core::bertrand::PriceMarket;
use qsel_core::dist::{DensityPiece, PowerTerm, TypeDistribution};
use qsel_core::population::{Atom, InformationStructure, SellerPopulation};
use qsel_core::pricedisc::Menu;
use qsel_core::quantity::QuantityMarket;
use serde::Deserialize;
use serde_json::Value;

/// Validation failure carrying every problem found, with field paths.
#[derive(Debug)]
pub struct ValidationErrors(pub Vec<String>);

impl std::fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "market file is invalid:")?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpecFile {
    pub buyers: BuyersSpec,
    pub sellers: SellersSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub options: OptionsSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyersSpec {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Map<String, Value>,
    pub support: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellersSpec {
    pub atoms: Vec<AtomSpec>,
    pub blocks: Vec<Vec<usize>>,
    pub x_bar: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub quality: f64,
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub quantity: Option<QuantityModelSpec>,
    pub price: Option<PriceModelSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityModelSpec {
    pub alpha: f64,
    /// One cost coefficient per atom.
    pub k: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceModelSpec {
    /// One cost per block, strictly increasing.
    pub costs: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    pub seed: Option<u64>,
    pub cap: Option<usize>,
    pub samples: Option<usize>,
    pub grid_resolution: Option<f64>,
}

/// A validated market, ready for either pipeline.
pub enum Market {
    Quantity(QuantityMarket),
    Price(PriceMarket),
}

impl Market {
    pub fn dist(&self) -> &TypeDistribution {
        match self {
            Market::Quantity(m) => &m.dist,
            Market::Price(m) => &m.dist,
        }
    }

    pub fn pop(&self) -> &SellerPopulation {
        match self {
            Market::Quantity(m) => &m.pop,
            Market::Price(m) => &m.pop,
        }
    }

}

/// Parse and fully validate a market file, aggregating every problem.
pub fn parse_market(raw: &str) -> Result<(Market, OptionsSpec), ValidationErrors> {
    let file: MarketSpecFile = serde_json::from_str(raw)
        .map_err(|e| ValidationErrors(vec![format!("schema: {e}")]))?;
    let mut problems = Vec::new();

    let dist = build_distribution(&file.buyers, &mut problems);

    let x_bar = file.sellers.x_bar.unwrap_or_else(|| {
        file.sellers
            .atoms
            .iter()
            .map(|a| a.quality)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    });
    let atoms: Vec<Atom> = file
        .sellers
        .atoms
        .iter()
        .map(|a| Atom {
            quality: a.quality,
            mass: a.mass,
        })
        .collect();
    let pop = match SellerPopulation::new(atoms, file.sellers.blocks.clone(), x_bar) {
        Ok(p) => Some(p),
        Err(qsel_core::population::PopulationError::Invalid(msgs)) => {
            problems.extend(msgs.into_iter().map(|m| format!("sellers: {m}")));
            None
        }
        Err(e) => {
            problems.push(format!("sellers: {e}"));
            None
        }
    };

    match (&file.model.quantity, &file.model.price) {
        (Some(_), Some(_)) => {
            problems.push("model: give exactly one of `quantity` or `price`, not both".into())
        }
        (None, None) => problems.push("model: give exactly one of `quantity` or `price`".into()),
        _ => {}
    }

    let market = match (dist, pop, &file.model.quantity, &file.model.price) {
        (Some(dist), Some(pop), Some(q), None) => {
            if !(q.alpha.is_finite() && q.alpha > 0.0) {
                problems.push(format!(
                    "model.quantity.alpha: must be positive, got {}",
                    q.alpha
                ));
            }
            match QuantityMarket::new(dist, pop, q.k.clone(), q.alpha) {
                Ok(m) => Some(Market::Quantity(m)),
                Err(e) => {
                    problems.push(format!("model.quantity: {e}"));
                    None
                }
            }
        }
        (Some(dist), Some(pop), None, Some(p)) => {
            match PriceMarket::new(dist, pop, p.costs.clone()) {
                Ok(m) => Some(Market::Price(m)),
                Err(e) => {
                    problems.push(format!("model.price: {e}"));
                    None
                }
            }
        }
        _ => None,
    };

    match market {
        Some(m) if problems.is_empty() => Ok((m, file.options)),
        _ => Err(ValidationErrors(problems)),
    }
}

fn get_param(
    params: &serde_json::Map<String, Value>,
    key: &str,
    problems: &mut Vec<String>,
) -> Option<f64> {
    match params.get(key) {
        Some(Value::Number(n)) => n.as_f64(),
        Some(_) => {
            problems.push(format!("buyers.params.{key}: must be a number"));
            None
        }
        None => {
            problems.push(format!("buyers.params.{key}: missing"));
            None
        }
    }
}

fn reject_unknown_params(
    params: &serde_json::Map<String, Value>,
    allowed: &[&str],
    problems: &mut Vec<String>,
) {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            problems.push(format!("buyers.params.{key}: unknown parameter"));
        }
    }
}

fn build_distribution(
    buyers: &BuyersSpec,
    problems: &mut Vec<String>,
) -> Option<TypeDistribution> {
    let support = |problems: &mut Vec<String>| -> Option<(f64, f64)> {
        match buyers.support {
            Some([a, b]) => Some((a, b)),
            None => {
                problems.push("buyers.support: required for this family".into());
                None
            }
        }
    };
    let before = problems.len();
    let dist = match buyers.family.as_str() {
        "uniform" => {
            reject_unknown_params(&buyers.params, &[], problems);
            let (a, b) = support(problems)?;
            TypeDistribution::uniform(a, b)
        }
        "power" => {
            reject_unknown_params(&buyers.params, &["exponent"], problems);
            let e = get_param(&buyers.params, "exponent", problems);
            let (a, b) = support(problems)?;
            TypeDistribution::power(e?, a, b)
        }
        "beta" => {
            reject_unknown_params(&buyers.params, &["alpha", "beta"], problems);
            if let Some([a, b]) = buyers.support {
                if a != 0.0 || b != 1.0 {
                    problems.push("buyers.support: the beta family lives on [0, 1]".into());
                }
            }
            let alpha = get_param(&buyers.params, "alpha", problems);
            let beta = get_param(&buyers.params, "beta", problems);
            TypeDistribution::beta(alpha?, beta?)
        }
        "pareto_truncated" => {
            reject_unknown_params(&buyers.params, &["shape"], problems);
            let s = get_param(&buyers.params, "shape", problems);
            let (a, b) = support(problems)?;
            TypeDistribution::pareto_truncated(s?, a, b)
        }
        "piecewise_poly" => {
            reject_unknown_params(&buyers.params, &["pieces"], problems);
            let pieces = match buyers.params.get("pieces") {
                Some(v) => match serde_json::from_value::<Vec<PieceSpec>>(v.clone()) {
                    Ok(ps) => ps,
                    Err(e) => {
                        problems.push(format!("buyers.params.pieces: {e}"));
                        return None;
                    }
                },
                None => {
                    problems.push("buyers.params.pieces: missing".into());
                    return None;
                }
            };
            TypeDistribution::piecewise(
                pieces
                    .into_iter()
                    .map(|p| DensityPiece {
                        lo: p.lo,
                        hi: p.hi,
                        terms: p
                            .terms
                            .into_iter()
                            .map(|t| PowerTerm {
                                coeff: t.coeff,
                                exponent: t.exponent,
                            })
                            .collect(),
                    })
                    .collect(),
            )
        }
        other => {
            problems.push(format!(
                "buyers.family: unknown family `{other}` (expected uniform, power, beta, pareto_truncated, or piecewise_poly)"
            ));
            return None;
        }
    };
    if problems.len() > before {
        return None;
    }
    match dist {
        Ok(d) => Some(d),
        Err(e) => {
            problems.push(format!("buyers: {e}"));
            None
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSpec {
    lo: f64,
    hi: f64,
    terms: Vec<TermSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSpec {
    coeff: f64,
    exponent: f64,
}

/// Parse `{A1,A2}|{A3}` (braces optional) into a structure over 1-based
/// block names.
pub fn parse_structure(
    text: &str,
    block_count: usize,
) -> Result<InformationStructure, ValidationErrors> {
    let mut problems = Vec::new();
    let mut groups = Vec::new();
    for (gi, part) in text.split('|').enumerate() {
        let trimmed = part.trim().trim_start_matches('{').trim_end_matches('}');
        if trimmed.is_empty() {
            problems.push(format!("structure group {gi}: empty"));
            continue;
        }
        let mut group = Vec::new();
        for name in trimmed.split(',') {
            let name = name.trim();
            let idx = name
                .strip_prefix('A')
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&i| i >= 1);
            match idx {
                Some(i) if i <= block_count => group.push(i - 1),
                Some(i) => problems.push(format!(
                    "structure group {gi}: block A{i} out of range (market has {block_count} blocks)"
                )),
                None => problems.push(format!(
                    "structure group {gi}: `{name}` is not a block name like A1"
                )),
            }
        }
        groups.push(group);
    }
    if !problems.is_empty() {
        return Err(ValidationErrors(problems));
    }
    InformationStructure::new(groups, block_count)
        .map_err(|e| ValidationErrors(vec![format!("structure: {e}")]))
}

/// Parse `price:quality,price:quality` into a menu.
pub fn parse_menu(text: &str) -> Result<Menu, ValidationErrors> {
    let mut problems = Vec::new();
    let mut pairs = Vec::new();
    for (i, part) in text.split(',').enumerate() {
        let mut it = part.trim().split(':');
        let price = it.next().and_then(|s| s.trim().parse::<f64>().ok());
        let quality = it.next().and_then(|s| s.trim().parse::<f64>().ok());
        if it.next().is_some() {
            problems.push(format!("menu pair {i}: expected `price:quality`"));
            continue;
        }
        match (price, quality) {
            (Some(p), Some(q)) => pairs.push((p, q)),
            _ => problems.push(format!(
                "menu pair {i}: `{}` is not `price:quality`",
                part.trim()
            )),
        }
    }
    if !problems.is_empty() {
        return Err(ValidationErrors(problems));
    }
    Menu::from_tuples(&pairs).map_err(|e| ValidationErrors(vec![format!("menu: {e}")]))
}

/// FNV-1a digest of the raw market file, hex encoded; identifies the input
/// in every report.
pub fn digest(raw: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in raw.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// 1-based display name of a block.
pub fn block_name(index: usize) -> String {
    format!("A{}", index + 1)
}
