//! Buyer-type distributions.
//!
//! Buyers are indexed by a scalar type `m` drawn from a law `F` on a bounded
//! interval `[a, b]`; a type-`m` buyer values quality `q` at price `p` as
//! `m·q − p`. Every market computation downstream reduces to evaluations of
//! `F`, its density `f`, the antiderivative `F2(x) = ∫_a^x F(t) dt`, and the
//! density elasticity `m·f'(m)/f(m)`, so this module ships those quantities
//! in closed form for a handful of families.
//!
//! The sign of `elasticity + 2` decides whether `m ↦ F(m)·m` is convex,
//! which is the hinge for every menu-comparison rule in [`crate::pricedisc`];
//! see [`TypeDistribution::classify_fm_convexity`].

use crate::special;
use std::fmt;

/// Sampled elasticities within this distance of −2 count as ties, reported
/// as non-strict rather than silently resolved to one side.
const ELASTICITY_TIE_TOL: f64 = 1e-9;

/// Default grid size for convexity classification of families without an
/// analytic elasticity range.
const DEFAULT_CLASSIFY_GRID: usize = 1024;

/// Exponents within this distance of an integer singularity (−1, −2) are
/// antidifferentiated through the logarithmic branch.
const EXPONENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum DistError {
    /// Parameters violate family constraints; message lists every problem.
    InvalidParams(String),
    /// The queried point lies outside the support.
    OutOfSupport { value: f64, support: (f64, f64) },
    /// The queried point sits on a support endpoint where the quantity is
    /// one-sided only.
    AtSupportBoundary { value: f64 },
    /// An interval argument with `lo >= hi`.
    DegenerateInterval { lo: f64, hi: f64 },
}

impl fmt::Display for DistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistError::InvalidParams(msg) => write!(f, "invalid distribution parameters: {msg}"),
            DistError::OutOfSupport { value, support } => write!(
                f,
                "point {value} outside support [{}, {}]",
                support.0, support.1
            ),
            DistError::AtSupportBoundary { value } => {
                write!(f, "point {value} on the support boundary")
            }
            DistError::DegenerateInterval { lo, hi } => {
                write!(f, "degenerate interval [{lo}, {hi}]")
            }
        }
    }
}

impl std::error::Error for DistError {}

/// Convexity classification of `m ↦ F(m)·m` on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    StrictlyConvex,
    Convex,
    Concave,
    Neither,
}

impl Convexity {
    /// Weakly convex (includes the strict case).
    pub fn is_convex(self) -> bool {
        matches!(self, Convexity::Convex | Convexity::StrictlyConvex)
    }

    pub fn is_concave(self) -> bool {
        matches!(self, Convexity::Concave)
    }
}

impl fmt::Display for Convexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Convexity::StrictlyConvex => "StrictlyConvex",
            Convexity::Convex => "Convex",
            Convexity::Concave => "Concave",
            Convexity::Neither => "Neither",
        };
        f.write_str(s)
    }
}

/// One power term `coeff · m^exponent` of a piecewise density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

/// One piece of a piecewise density: `f(m) = Σ terms` on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<PowerTerm>,
}

/// Which family a [`TypeDistribution`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Uniform,
    Power,
    Beta,
    ParetoTruncated,
    PiecewisePoly,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::Uniform => "uniform",
            FamilyKind::Power => "power",
            FamilyKind::Beta => "beta",
            FamilyKind::ParetoTruncated => "pareto_truncated",
            FamilyKind::PiecewisePoly => "piecewise_poly",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Uniform,
    /// Density `c · m^exponent`, `c` chosen so the mass on `[a, b]` is one.
    Power { exponent: f64, coeff: f64 },
    /// Standard beta on `[0, 1]`.
    Beta { alpha: f64, beta: f64 },
    /// Pareto with scale `a` and the given shape, renormalized to `[a, b]`.
    ParetoTruncated { shape: f64, denom: f64 },
    PiecewisePoly {
        pieces: Vec<DensityPiece>,
        /// CDF value at each piece's left endpoint.
        starts_cdf: Vec<f64>,
        /// F2 value at each piece's left endpoint.
        starts_f2: Vec<f64>,
    },
}

/// A buyer-type distribution on a bounded support.
///
/// Values are immutable after construction; every method is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    family: Family,
    a: f64,
    b: f64,
}

// ---------------------------------------------------------------------------
// power-term antiderivatives (shared by the power and piecewise families)
// ---------------------------------------------------------------------------

fn term_eval(t: &PowerTerm, m: f64) -> f64 {
    t.coeff * m.powf(t.exponent)
}

fn term_deriv(t: &PowerTerm, m: f64) -> f64 {
    t.coeff * t.exponent * m.powf(t.exponent - 1.0)
}

/// ∫ c·m^e dm (no constant).
fn term_antideriv(t: &PowerTerm, m: f64) -> f64 {
    let e = t.exponent;
    if (e + 1.0).abs() < EXPONENT_EPS {
        t.coeff * m.ln()
    } else {
        t.coeff * m.powf(e + 1.0) / (e + 1.0)
    }
}

/// ∫∫ c·m^e dm dm (no constants).
fn term_antideriv2(t: &PowerTerm, m: f64) -> f64 {
    let e = t.exponent;
    if (e + 1.0).abs() < EXPONENT_EPS {
        // ∫ c·ln m = c (m ln m − m)
        t.coeff * (m * m.ln() - m)
    } else if (e + 2.0).abs() < EXPONENT_EPS {
        // ∫ c·m^(−1)/(e+1) = c/(e+1) · ln m
        t.coeff / (e + 1.0) * m.ln()
    } else {
        t.coeff * m.powf(e + 2.0) / ((e + 1.0) * (e + 2.0))
    }
}

fn terms_eval(terms: &[PowerTerm], m: f64) -> f64 {
    terms.iter().map(|t| term_eval(t, m)).sum()
}

fn terms_deriv(terms: &[PowerTerm], m: f64) -> f64 {
    terms.iter().map(|t| term_deriv(t, m)).sum()
}

fn terms_antideriv(terms: &[PowerTerm], m: f64) -> f64 {
    terms.iter().map(|t| term_antideriv(t, m)).sum()
}

fn terms_antideriv2(terms: &[PowerTerm], m: f64) -> f64 {
    terms.iter().map(|t| term_antideriv2(t, m)).sum()
}

// ---------------------------------------------------------------------------
// constructors
// ---------------------------------------------------------------------------

impl TypeDistribution {
    /// Uniform on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self, DistError> {
        check_support(a, b)?;
        Ok(TypeDistribution {
            family: Family::Uniform,
            a,
            b,
        })
    }

    /// Density proportional to `m^exponent` on `[a, b]`, normalized to unit
    /// mass. Negative exponents require `a > 0`.
    pub fn power(exponent: f64, a: f64, b: f64) -> Result<Self, DistError> {
        check_support(a, b)?;
        if !exponent.is_finite() {
            return Err(DistError::InvalidParams(format!(
                "power exponent must be finite, got {exponent}"
            )));
        }
        if exponent < 0.0 && a <= 0.0 {
            return Err(DistError::InvalidParams(format!(
                "power exponent {exponent} < 0 requires support bounded away from zero, got a = {a}"
            )));
        }
        let coeff = if (exponent + 1.0).abs() < EXPONENT_EPS {
            1.0 / (b / a).ln()
        } else {
            (exponent + 1.0) / (b.powf(exponent + 1.0) - a.powf(exponent + 1.0))
        };
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(DistError::InvalidParams(format!(
                "power family cannot be normalized on [{a}, {b}] with exponent {exponent}"
            )));
        }
        Ok(TypeDistribution {
            family: Family::Power { exponent, coeff },
            a,
            b,
        })
    }

    /// Beta(alpha, beta) on `[0, 1]`.
    pub fn beta(alpha: f64, beta: f64) -> Result<Self, DistError> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(DistError::InvalidParams(format!(
                "beta requires alpha > 0 and beta > 0, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(TypeDistribution {
            family: Family::Beta { alpha, beta },
            a: 0.0,
            b: 1.0,
        })
    }

    /// Pareto with scale `a` and the given shape, truncated to `[a, b]` with
    /// mass renormalized: `F(m) = (1 − (a/m)^shape) / (1 − (a/b)^shape)`.
    pub fn pareto_truncated(shape: f64, a: f64, b: f64) -> Result<Self, DistError> {
        check_support(a, b)?;
        if a <= 0.0 {
            return Err(DistError::InvalidParams(format!(
                "truncated pareto requires a > 0, got a = {a}"
            )));
        }
        if !(shape.is_finite() && shape > 0.0) {
            return Err(DistError::InvalidParams(format!(
                "truncated pareto requires shape > 0, got {shape}"
            )));
        }
        let denom = 1.0 - (a / b).powf(shape);
        Ok(TypeDistribution {
            family: Family::ParetoTruncated { shape, denom },
            a,
            b,
        })
    }

    /// Piecewise density made of power terms. Pieces must be contiguous,
    /// strictly positive on their interiors, and integrate to one over the
    /// whole support (tolerance 1e−9); antiderivatives are exact.
    pub fn piecewise(pieces: Vec<DensityPiece>) -> Result<Self, DistError> {
        let mut problems = Vec::new();
        if pieces.is_empty() {
            return Err(DistError::InvalidParams("no density pieces given".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
                problems.push(format!("piece {i}: needs lo < hi, got [{}, {}]", p.lo, p.hi));
            }
            if p.terms.is_empty() {
                problems.push(format!("piece {i}: no terms"));
            }
            for (j, t) in p.terms.iter().enumerate() {
                if !(t.coeff.is_finite() && t.exponent.is_finite()) {
                    problems.push(format!("piece {i} term {j}: non-finite coefficient/exponent"));
                }
                if (t.exponent < 0.0 || (t.exponent + 1.0).abs() < EXPONENT_EPS) && p.lo <= 0.0 {
                    problems.push(format!(
                        "piece {i} term {j}: exponent {} needs the piece bounded away from zero",
                        t.exponent
                    ));
                }
            }
            if i + 1 < pieces.len() && (p.hi - pieces[i + 1].lo).abs() > 1e-12 {
                problems.push(format!(
                    "pieces {i} and {} are not contiguous ({} vs {})",
                    i + 1,
                    p.hi,
                    pieces[i + 1].lo
                ));
            }
        }
        if !problems.is_empty() {
            return Err(DistError::InvalidParams(problems.join("; ")));
        }

        // positivity on a sampling grid plus one-sided endpoints
        for (i, p) in pieces.iter().enumerate() {
            let n = 64;
            for k in 0..=n {
                let m = p.lo + (p.hi - p.lo) * k as f64 / n as f64;
                let v = terms_eval(&p.terms, m);
                if !(v.is_finite() && v > 0.0) {
                    problems.push(format!("piece {i}: density not strictly positive at m = {m}"));
                    break;
                }
            }
        }
        if !problems.is_empty() {
            return Err(DistError::InvalidParams(problems.join("; ")));
        }

        // exact cumulative constants at piece starts
        let mut starts_cdf = Vec::with_capacity(pieces.len());
        let mut starts_f2 = Vec::with_capacity(pieces.len());
        let mut acc_f = 0.0;
        let mut acc_f2 = 0.0;
        for p in &pieces {
            starts_cdf.push(acc_f);
            starts_f2.push(acc_f2);
            let da = terms_antideriv(&p.terms, p.hi) - terms_antideriv(&p.terms, p.lo);
            // ∫_lo^hi F = F(lo)·(hi−lo) + ∫∫ f
            acc_f2 += acc_f * (p.hi - p.lo) + terms_antideriv2(&p.terms, p.hi)
                - terms_antideriv2(&p.terms, p.lo)
                - terms_antideriv(&p.terms, p.lo) * (p.hi - p.lo);
            acc_f += da;
        }
        if (acc_f - 1.0).abs() > 1e-9 {
            return Err(DistError::InvalidParams(format!(
                "density mass is {acc_f}, expected 1 (normalize the coefficients)"
            )));
        }
        let a = pieces[0].lo;
        let b = pieces[pieces.len() - 1].hi;
        Ok(TypeDistribution {
            family: Family::PiecewisePoly {
                pieces,
                starts_cdf,
                starts_f2,
            },
            a,
            b,
        })
    }
}

fn check_support(a: f64, b: f64) -> Result<(), DistError> {
    if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b) {
        Err(DistError::InvalidParams(format!(
            "support must satisfy 0 <= a < b, got [{a}, {b}]"
        )))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

impl TypeDistribution {
    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn family_kind(&self) -> FamilyKind {
        match self.family {
            Family::Uniform => FamilyKind::Uniform,
            Family::Power { .. } => FamilyKind::Power,
            Family::Beta { .. } => FamilyKind::Beta,
            Family::ParetoTruncated { .. } => FamilyKind::ParetoTruncated,
            Family::PiecewisePoly { .. } => FamilyKind::PiecewisePoly,
        }
    }

    /// CDF, clamped outside the support: 0 below `a`, 1 above `b`.
    pub fn cdf(&self, m: f64) -> f64 {
        if m <= self.a {
            return 0.0;
        }
        if m >= self.b {
            return 1.0;
        }
        match &self.family {
            Family::Uniform => (m - self.a) / (self.b - self.a),
            Family::Power { exponent, coeff } => {
                let t = PowerTerm {
                    coeff: *coeff,
                    exponent: *exponent,
                };
                term_antideriv(&t, m) - term_antideriv(&t, self.a)
            }
            Family::Beta { alpha, beta } => special::reg_inc_beta(*alpha, *beta, m),
            Family::ParetoTruncated { shape, denom } => {
                (1.0 - (self.a / m).powf(*shape)) / denom
            }
            Family::PiecewisePoly {
                pieces, starts_cdf, ..
            } => {
                let i = piece_index(pieces, m);
                let p = &pieces[i];
                starts_cdf[i] + terms_antideriv(&p.terms, m) - terms_antideriv(&p.terms, p.lo)
            }
        }
    }

    /// Density at `m ∈ [a, b]`.
    pub fn pdf(&self, m: f64) -> Result<f64, DistError> {
        if m < self.a || m > self.b {
            return Err(DistError::OutOfSupport {
                value: m,
                support: (self.a, self.b),
            });
        }
        Ok(self.pdf_unchecked(m))
    }

    fn pdf_unchecked(&self, m: f64) -> f64 {
        match &self.family {
            Family::Uniform => 1.0 / (self.b - self.a),
            Family::Power { exponent, coeff } => coeff * m.powf(*exponent),
            Family::Beta { alpha, beta } => {
                ((alpha - 1.0) * m.ln() + (beta - 1.0) * (1.0 - m).ln()
                    - special::ln_beta(*alpha, *beta))
                .exp()
            }
            Family::ParetoTruncated { shape, denom } => {
                shape * self.a.powf(*shape) * m.powf(-shape - 1.0) / denom
            }
            Family::PiecewisePoly { pieces, .. } => {
                let i = piece_index(pieces, m);
                terms_eval(&pieces[i].terms, m)
            }
        }
    }

    /// Density extended by zero outside the support; used where the demand
    /// derivative vanishes off-support.
    pub(crate) fn pdf_ext(&self, m: f64) -> f64 {
        if m < self.a || m > self.b {
            0.0
        } else {
            self.pdf_unchecked(m)
        }
    }

    /// `F2(m) = ∫_a^m F(t) dt` for `m ∈ [a, b]`. `F2(a) = 0` and `F2' = F`.
    pub fn antiderivative_cdf(&self, m: f64) -> Result<f64, DistError> {
        if m < self.a || m > self.b {
            return Err(DistError::OutOfSupport {
                value: m,
                support: (self.a, self.b),
            });
        }
        Ok(self.f2_unchecked(m))
    }

    fn f2_unchecked(&self, m: f64) -> f64 {
        let a = self.a;
        match &self.family {
            Family::Uniform => (m - a) * (m - a) / (2.0 * (self.b - a)),
            Family::Power { exponent, coeff } => {
                let t = PowerTerm {
                    coeff: *coeff,
                    exponent: *exponent,
                };
                // F(t) = A(t) − A(a)  ⇒  F2(m) = A2(m) − A2(a) − A(a)(m − a)
                term_antideriv2(&t, m) - term_antideriv2(&t, a) - term_antideriv(&t, a) * (m - a)
            }
            Family::Beta { alpha, beta } => {
                // ∫_0^m I_t(α,β) dt = m·I_m(α,β) − α/(α+β)·I_m(α+1,β)
                m * special::reg_inc_beta(*alpha, *beta, m)
                    - alpha / (alpha + beta) * special::reg_inc_beta(*alpha + 1.0, *beta, m)
            }
            Family::ParetoTruncated { shape, denom } => {
                let s = *shape;
                if (s - 1.0).abs() < EXPONENT_EPS {
                    ((m - a) - a * (m / a).ln()) / denom
                } else {
                    ((m - a) - a.powf(s) * (m.powf(1.0 - s) - a.powf(1.0 - s)) / (1.0 - s)) / denom
                }
            }
            Family::PiecewisePoly {
                pieces,
                starts_cdf,
                starts_f2,
            } => {
                let i = piece_index(pieces, m);
                let p = &pieces[i];
                let const_part = starts_cdf[i] - terms_antideriv(&p.terms, p.lo);
                starts_f2[i]
                    + const_part * (m - p.lo)
                    + terms_antideriv2(&p.terms, m)
                    - terms_antideriv2(&p.terms, p.lo)
            }
        }
    }

    /// `F2` extended linearly beyond the support: 0 below `a`,
    /// `F2(b) + (m − b)` above `b`. Keeps the clearing potential C¹ on all
    /// price vectors while agreeing with `F2` on `[a, b]`.
    pub(crate) fn f2_ext(&self, m: f64) -> f64 {
        if m <= self.a {
            0.0
        } else if m >= self.b {
            self.f2_unchecked(self.b) + (m - self.b)
        } else {
            self.f2_unchecked(m)
        }
    }

    /// Density elasticity `m·f'(m)/f(m)` at an interior point. For the
    /// piecewise family the derivative is taken one-sided within the piece
    /// containing `m` (the right piece at a breakpoint); no finite
    /// differences are involved.
    pub fn density_elasticity(&self, m: f64) -> Result<f64, DistError> {
        if m < self.a || m > self.b {
            return Err(DistError::OutOfSupport {
                value: m,
                support: (self.a, self.b),
            });
        }
        if m == self.a || m == self.b {
            return Err(DistError::AtSupportBoundary { value: m });
        }
        Ok(self.elasticity_unchecked(m))
    }

    fn elasticity_unchecked(&self, m: f64) -> f64 {
        match &self.family {
            Family::Uniform => 0.0,
            Family::Power { exponent, .. } => *exponent,
            Family::Beta { alpha, beta } => (alpha - 1.0) - (beta - 1.0) * m / (1.0 - m),
            Family::ParetoTruncated { shape, .. } => -shape - 1.0,
            Family::PiecewisePoly { pieces, .. } => {
                let i = piece_index(pieces, m);
                let terms = &pieces[i].terms;
                m * terms_deriv(terms, m) / terms_eval(terms, m)
            }
        }
    }

    /// Infimum and supremum of the density elasticity on the open interval
    /// `(lo, hi)`. Analytic for every family except the piecewise one, which
    /// falls back to a grid of `grid` points with one-sided sampling at piece
    /// breakpoints.
    pub fn elasticity_range(&self, lo: f64, hi: f64) -> Result<(f64, f64), DistError> {
        self.elasticity_range_with_grid(lo, hi, DEFAULT_CLASSIFY_GRID)
    }

    pub fn elasticity_range_with_grid(
        &self,
        lo: f64,
        hi: f64,
        grid: usize,
    ) -> Result<(f64, f64), DistError> {
        if !(self.a <= lo && lo < hi && hi <= self.b) {
            return Err(DistError::DegenerateInterval { lo, hi });
        }
        let range = match &self.family {
            Family::Uniform => (0.0, 0.0),
            Family::Power { exponent, .. } => (*exponent, *exponent),
            Family::ParetoTruncated { shape, .. } => (-shape - 1.0, -shape - 1.0),
            Family::Beta { alpha, beta } => {
                // monotone in m: decreasing for beta > 1, increasing for beta < 1
                let eta = |m: f64| (alpha - 1.0) - (beta - 1.0) * m / (1.0 - m);
                let at_lo = if lo <= 0.0 { alpha - 1.0 } else { eta(lo) };
                let at_hi = if hi >= 1.0 {
                    if *beta > 1.0 {
                        f64::NEG_INFINITY
                    } else if *beta < 1.0 {
                        f64::INFINITY
                    } else {
                        alpha - 1.0
                    }
                } else {
                    eta(hi)
                };
                (at_lo.min(at_hi), at_lo.max(at_hi))
            }
            Family::PiecewisePoly { pieces, .. } => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let n = grid.max(2);
                // regular grid, nudged off the exact endpoints
                for k in 0..=n {
                    let mut m = lo + (hi - lo) * k as f64 / n as f64;
                    let eps = (hi - lo) * 1e-9;
                    if k == 0 {
                        m += eps;
                    }
                    if k == n {
                        m -= eps;
                    }
                    let e = self.elasticity_unchecked(m);
                    min = min.min(e);
                    max = max.max(e);
                }
                // refine one-sided around interior piece breakpoints
                for p in pieces {
                    for bp in [p.lo, p.hi] {
                        if bp > lo && bp < hi {
                            let eps = (hi - lo) * 1e-9;
                            for m in [bp - eps, bp + eps] {
                                let e = self.elasticity_unchecked(m);
                                min = min.min(e);
                                max = max.max(e);
                            }
                        }
                    }
                }
                (min, max)
            }
        };
        Ok(range)
    }

    /// Classify `m ↦ F(m)·m` on `[lo, hi]` through the elasticity criterion:
    /// the map is convex exactly where the density elasticity stays at or
    /// above −2, strictly convex where it stays strictly above on the open
    /// interval, concave where it stays at or below, and `Neither` when the
    /// elasticity crosses −2 by more than the tie tolerance.
    pub fn classify_fm_convexity(&self, lo: f64, hi: f64) -> Result<Convexity, DistError> {
        self.classify_fm_convexity_with_grid(lo, hi, DEFAULT_CLASSIFY_GRID)
    }

    pub fn classify_fm_convexity_with_grid(
        &self,
        lo: f64,
        hi: f64,
        grid: usize,
    ) -> Result<Convexity, DistError> {
        let (min, max) = self.elasticity_range_with_grid(lo, hi, grid)?;
        let above = max > -2.0 + ELASTICITY_TIE_TOL;
        let below = min < -2.0 - ELASTICITY_TIE_TOL;
        Ok(if above && below {
            Convexity::Neither
        } else if below {
            Convexity::Concave
        } else if min > -2.0 + ELASTICITY_TIE_TOL {
            Convexity::StrictlyConvex
        } else {
            Convexity::Convex
        })
    }

    /// Inverse CDF. Closed form for the uniform, power, and truncated pareto
    /// families; bisection on the CDF (tolerance 1e−12) for the rest, so the
    /// answer never touches a density code path.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DistError::InvalidParams(format!(
                "quantile probability must lie in [0, 1], got {p}"
            )));
        }
        let (a, b) = (self.a, self.b);
        let m = match &self.family {
            Family::Uniform => a + p * (b - a),
            Family::Power { exponent, .. } => {
                if (exponent + 1.0).abs() < EXPONENT_EPS {
                    a * (b / a).powf(p)
                } else {
                    let e1 = exponent + 1.0;
                    (a.powf(e1) + p * (b.powf(e1) - a.powf(e1))).powf(1.0 / e1)
                }
            }
            Family::ParetoTruncated { shape, denom } => {
                a * (1.0 - p * denom).powf(-1.0 / shape)
            }
            Family::Beta { .. } | Family::PiecewisePoly { .. } => {
                let mut lo = a;
                let mut hi = b;
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        Ok(m.clamp(a, b))
    }
}

/// Piece containing `m`: half-open `[lo, hi)` except the last piece, which
/// is closed. At an interior breakpoint this selects the right piece.
fn piece_index(pieces: &[DensityPiece], m: f64) -> usize {
    for (i, p) in pieces.iter().enumerate() {
        if m < p.hi {
            return i;
        }
    }
    pieces.len() - 1
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn concave_m3() -> TypeDistribution {
        // f(m) = (8/3) m^-3 on [1, 2]
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

    /// Composite Simpson quadrature, the independent route for integrals.
    fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn uniform_cdf_values() {
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(d.cdf(0.25), 0.25);
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(2.0), 1.0);
    }

    #[test]
    fn piecewise_cdf_matches_quadrature() {
        let d = concave_m3();
        let expect = simpson(|m| (8.0 / 3.0) * m.powi(-3), 1.0, 1.5, 4096);
        assert!((d.cdf(1.5) - expect).abs() < 1e-10);
        assert!((d.cdf(1.5) - (4.0 / 3.0) * (1.0 - 1.0 / 2.25)).abs() < 1e-12);
    }

    #[test]
    fn pdf_values() {
        let u = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.pdf(0.3).unwrap(), 1.0);
        assert!(u.pdf(1.5).is_err());

        let d = concave_m3();
        assert!((d.pdf(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        // beta(2,1) density is 2m; quadrature of m^(alpha-1)(1-m)^(beta-1)
        // fixes the normalizer independently
        let b = TypeDistribution::beta(2.0, 1.0).unwrap();
        let raw = simpson(|m| m, 0.0, 1.0, 4096);
        assert!((b.pdf(0.5).unwrap() - 0.5 / raw).abs() < 1e-10);
        assert!((b.pdf(0.5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let dists = [
            TypeDistribution::uniform(0.2, 1.7).unwrap(),
            TypeDistribution::power(-1.5, 1.0, 3.0).unwrap(),
            TypeDistribution::power(-1.0, 0.5, 2.0).unwrap(),
            TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap(),
            concave_m3(),
        ];
        for d in &dists {
            let (a, b) = d.support();
            let mass = simpson(|m| d.pdf(m).unwrap(), a, b, 8192);
            assert!((mass - 1.0).abs() < 1e-9, "mass {mass} for {:?}", d.family_kind());
        }
        // beta endpoints can be singular; integrate on a slightly clipped range
        let b = TypeDistribution::beta(2.0, 3.0).unwrap();
        let mass = simpson(|m| b.pdf(m).unwrap(), 1e-9, 1.0 - 1e-9, 8192);
        assert!((mass - 1.0).abs() < 1e-7);
    }

    #[test]
    fn antiderivative_values() {
        let u = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert!((u.antiderivative_cdf(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(u.antiderivative_cdf(0.0).unwrap(), 0.0);

        let d = concave_m3();
        assert_eq!(d.antiderivative_cdf(1.0).unwrap(), 0.0);
        let expect = simpson(|m| d.cdf(m), 1.0, 2.0, 8192);
        assert!((d.antiderivative_cdf(2.0).unwrap() - expect).abs() < 1e-10);

        let p = TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap();
        let expect = simpson(|m| p.cdf(m), 1.0, 3.0, 8192);
        assert!((p.antiderivative_cdf(3.0).unwrap() - expect).abs() < 1e-10);

        let b = TypeDistribution::beta(2.0, 2.0).unwrap();
        let expect = simpson(|m| b.cdf(m), 0.0, 0.8, 8192);
        assert!((b.antiderivative_cdf(0.8).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn elasticity_values() {
        let p = TypeDistribution::power(-1.5, 1.0, 3.0).unwrap();
        assert_eq!(p.density_elasticity(1.7).unwrap(), -1.5);
        let p4 = TypeDistribution::power(-4.0, 1.3, 3.5).unwrap();
        assert_eq!(p4.density_elasticity(2.0).unwrap(), -4.0);
        let u = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.density_elasticity(0.5).unwrap(), 0.0);
        assert!(matches!(
            u.density_elasticity(0.0),
            Err(DistError::AtSupportBoundary { .. })
        ));
        assert!(matches!(
            u.density_elasticity(1.5),
            Err(DistError::OutOfSupport { .. })
        ));

        let d = concave_m3();
        assert!((d.density_elasticity(1.5).unwrap() + 3.0).abs() < 1e-12);

        // beta: eta(m) = (alpha-1) - (beta-1) m/(1-m)
        let b = TypeDistribution::beta(2.0, 3.0).unwrap();
        let expect = 1.0 - 2.0 * 0.25 / 0.75;
        assert!((b.density_elasticity(0.25).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn classification_per_family() {
        let u = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            u.classify_fm_convexity(0.0, 1.0).unwrap(),
            Convexity::StrictlyConvex
        );

        let d = concave_m3();
        assert_eq!(d.classify_fm_convexity(1.0, 2.0).unwrap(), Convexity::Concave);

        // elasticity −1.5 everywhere: convex (and in fact strictly so)
        let par = TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap();
        let c = par.classify_fm_convexity(1.0, 4.0).unwrap();
        assert!(c.is_convex());
        assert_eq!(c, Convexity::StrictlyConvex);

        // boundary case: constant elasticity exactly −2 is weakly convex
        let edge = TypeDistribution::power(-2.0, 1.0, 2.0).unwrap();
        assert_eq!(edge.classify_fm_convexity(1.0, 2.0).unwrap(), Convexity::Convex);

        // piecewise with a real crossing of −2:
        // c/m on [1,2] glued to 8c/m^4 on [2,3]; c fixed by unit mass
        let c = 1.0 / (2f64.ln() + 8.0 * (1.0 / 8.0 - 1.0 / 27.0) / 3.0);
        let mixed = TypeDistribution::piecewise(vec![
            DensityPiece {
                lo: 1.0,
                hi: 2.0,
                terms: vec![PowerTerm {
                    coeff: c,
                    exponent: -1.0,
                }],
            },
            DensityPiece {
                lo: 2.0,
                hi: 3.0,
                terms: vec![PowerTerm {
                    coeff: 8.0 * c,
                    exponent: -4.0,
                }],
            },
        ])
        .unwrap();
        assert_eq!(
            mixed.classify_fm_convexity(1.0, 3.0).unwrap(),
            Convexity::Neither
        );
        assert!(mixed
            .classify_fm_convexity(1.0, 2.0)
            .unwrap()
            .is_convex());

        assert!(matches!(
            u.classify_fm_convexity(0.5, 0.5),
            Err(DistError::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn quantile_inverts_cdf() {
        let dists = [
            TypeDistribution::uniform(0.0, 1.0).unwrap(),
            TypeDistribution::power(-1.5, 1.0, 3.0).unwrap(),
            TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap(),
            TypeDistribution::beta(2.0, 3.0).unwrap(),
            concave_m3(),
        ];
        for d in &dists {
            for k in 1..20 {
                let p = k as f64 / 20.0;
                let m = d.quantile(p).unwrap();
                assert!(
                    (d.cdf(m) - p).abs() < 1e-10,
                    "family {:?} p {p}",
                    d.family_kind()
                );
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(TypeDistribution::uniform(1.0, 1.0).is_err());
        assert!(TypeDistribution::uniform(-0.5, 1.0).is_err());
        assert!(TypeDistribution::power(-2.0, 0.0, 1.0).is_err());
        assert!(TypeDistribution::beta(0.0, 1.0).is_err());
        assert!(TypeDistribution::pareto_truncated(0.5, 0.0, 4.0).is_err());
        // mass far from one
        assert!(TypeDistribution::piecewise(vec![DensityPiece {
            lo: 1.0,
            hi: 2.0,
            terms: vec![PowerTerm {
                coeff: 1.0,
                exponent: -3.0,
            }],
        }])
        .is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn families() -> Vec<TypeDistribution> {
            vec![
                TypeDistribution::uniform(0.0, 1.0).unwrap(),
                TypeDistribution::uniform(0.3, 2.1).unwrap(),
                TypeDistribution::power(-1.5, 1.0, 3.0).unwrap(),
                TypeDistribution::power(2.0, 0.0, 1.5).unwrap(),
                TypeDistribution::beta(2.0, 3.0).unwrap(),
                TypeDistribution::pareto_truncated(0.5, 1.0, 4.0).unwrap(),
                super::concave_m3(),
            ]
        }

        #[test]
        fn finite_differences_recover_f_and_density() {
            // dF2/dm = F and dF/dm = f at random interior points
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for d in families() {
                let (a, b) = d.support();
                let h = 1e-7 * (b - a);
                let mut checked = 0;
                while checked < 1000 {
                    let m = a + rng.random::<f64>() * (b - a);
                    if m - 10.0 * h <= a || m + 10.0 * h >= b {
                        continue;
                    }
                    // keep clear of piecewise breakpoints where f may jump
                    if let Family::PiecewisePoly { pieces, .. } = &d.family {
                        if pieces
                            .iter()
                            .any(|p| (m - p.lo).abs() < 1e-4 || (m - p.hi).abs() < 1e-4)
                        {
                            continue;
                        }
                    }
                    let df2 = (d.antiderivative_cdf(m + h).unwrap()
                        - d.antiderivative_cdf(m - h).unwrap())
                        / (2.0 * h);
                    assert!(
                        (df2 - d.cdf(m)).abs() < 1e-6,
                        "F2' != F for {:?} at {m}",
                        d.family_kind()
                    );
                    let f = d.pdf(m).unwrap();
                    let df = (d.cdf(m + h) - d.cdf(m - h)) / (2.0 * h);
                    assert!(
                        (df - f).abs() / f.abs().max(1.0) < 1e-6,
                        "F' != f for {:?} at {m}: {df} vs {f}",
                        d.family_kind()
                    );
                    checked += 1;
                }
            }
        }

        #[test]
        fn convex_classification_implies_midpoint_convexity() {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
            for d in families() {
                let (a, b) = d.support();
                if !d.classify_fm_convexity(a, b).unwrap().is_convex() {
                    continue;
                }
                let g = |m: f64| d.cdf(m) * m;
                for _ in 0..1000 {
                    let m1 = a + rng.random::<f64>() * (b - a);
                    let m2 = a + rng.random::<f64>() * (b - a);
                    let (m1, m2) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
                    let mid = 0.5 * (m1 + m2);
                    assert!(
                        g(mid) <= 0.5 * (g(m1) + g(m2)) + 1e-12,
                        "midpoint convexity fails for {:?}",
                        d.family_kind()
                    );
                }
            }
        }

        proptest! {
            #[test]
            fn cdf_monotone(x in 0.0f64..1.0, y in 0.0f64..1.0) {
                for d in families() {
                    let (a, b) = d.support();
                    let m1 = a + x * (b - a);
                    let m2 = a + y * (b - a);
                    let (m1, m2) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
                    prop_assert!(d.cdf(m1) <= d.cdf(m2));
                }
            }

            #[test]
            fn f2_zero_at_left_edge(_x in 0..1i32) {
                for d in families() {
                    let (a, _) = d.support();
                    prop_assert_eq!(d.antiderivative_cdf(a).unwrap(), 0.0);
                }
            }
        }
    }
}
