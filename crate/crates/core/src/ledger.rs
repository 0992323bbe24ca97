//! Exact bookkeeping of powers `λ^{a + bδ}`.
//!
//! Every exponent is an [`AffineExponent`] with rational coefficients;
//! nothing here ever rounds. Besides the tabulated rows, the ledger keeps
//! the *factors* each composite exponent was assembled from and
//! recomputes the product, so an inconsistent total is reported instead
//! of silently trusted.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = Rational64;

/// Checked constructor; a zero denominator is an arithmetic error.
pub fn rational(num: i64, den: i64) -> Result<Rational> {
    if den == 0 {
        return Err(Error::Arithmetic(format!("zero denominator in {num}/0")));
    }
    Ok(Rational::new(num, den))
}

fn q(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

pub fn format_rational(r: Rational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"5/8"`, `"-3"`, or a decimal such as `"0.625"`. Decimals with
/// more than six fractional digits are replaced by the closest rational
/// with denominator at most `10^6`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Config(format!("cannot read {t:?} as a rational number"));
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        return rational(n, d).map_err(|_| bad());
    }
    if let Some((int_part, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.trim_start().starts_with('-');
        let whole: i64 = match int_part.trim_start_matches(['-', '+']) {
            "" => 0,
            s => s.parse().map_err(|_| bad())?,
        };
        let digits = &frac[..frac.len().min(15)];
        let den = 10i64.pow(digits.len() as u32);
        let num: i64 = digits.parse().map_err(|_| bad())?;
        let mut value = Rational::from_integer(whole) + Rational::new(num, den);
        if negative {
            value = -value;
        }
        if *value.denom() > 1_000_000 {
            value = best_rational(value, 1_000_000);
        }
        return Ok(value);
    }
    let n: i64 = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Closest rational to `x` with denominator at most `max_den`
/// (continued-fraction convergents plus the best semiconvergent).
pub fn best_rational(x: Rational, max_den: i64) -> Rational {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let (mut n, mut d) = (*x.numer(), *x.denom());
    loop {
        let a = Integer::div_floor(&n, &d);
        let q2 = q0 + a * q1;
        if q2 > max_den {
            let k = (max_den - q0) / q1;
            let semi = Rational::new(p0 + k * p1, q0 + k * q1);
            let conv = Rational::new(p1, q1);
            return if (semi - x).abs() < (conv - x).abs() { semi } else { conv };
        }
        let p2 = p0 + a * p1;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let r = n - a * d;
        if r == 0 {
            return Rational::new(p1, q1);
        }
        (n, d) = (d, r);
    }
}

/// The exponent `a + b·δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AffineExponent {
    pub a: Rational,
    pub b: Rational,
}

impl AffineExponent {
    pub const fn new(a: Rational, b: Rational) -> Self {
        Self { a, b }
    }

    pub fn from_parts(a: (i64, i64), b: (i64, i64)) -> Self {
        Self::new(q(a.0, a.1), q(b.0, b.1))
    }

    pub fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }

    pub fn constant(a: Rational) -> Self {
        Self::new(a, Rational::zero())
    }

    pub fn eval(&self, delta: Rational) -> Rational {
        self.a + self.b * delta
    }

    pub fn eval_f64(&self, delta: f64) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * delta
    }

    pub fn scale(&self, s: Rational) -> Self {
        Self::new(self.a * s, self.b * s)
    }
}

impl Add for AffineExponent {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for AffineExponent {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl Neg for AffineExponent {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl Mul<Rational> for AffineExponent {
    type Output = Self;
    fn mul(self, s: Rational) -> Self {
        self.scale(s)
    }
}

impl std::iter::Sum for AffineExponent {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for AffineExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = format_rational(self.a);
        if self.b.is_zero() {
            return write!(f, "{a}");
        }
        let mag = self.b.abs();
        let coeff = if mag.is_one() { String::new() } else { format_rational(mag) };
        let sign = if self.b.is_negative() { '-' } else { '+' };
        if self.a.is_zero() {
            let lead = if self.b.is_negative() { "-" } else { "" };
            write!(f, "{lead}{coeff}δ")
        } else {
            write!(f, "{a} {sign} {coeff}δ")
        }
    }
}

impl Serialize for AffineExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AffineExponent", 3)?;
        st.serialize_field("a", &format_rational(self.a))?;
        st.serialize_field("b", &format_rational(self.b))?;
        st.serialize_field("text", &self.to_string())?;
        st.end()
    }
}

fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(*r))
}

fn ser_opt_rational<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&format_rational(*r)),
        None => s.serialize_none(),
    }
}

/// One named exponent with the mechanism it accounts for.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub name: String,
    pub exponent: AffineExponent,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl LedgerRow {
    fn new(name: &str, exponent: AffineExponent, source: &str) -> Self {
        assert!(!source.is_empty());
        Self {
            name: name.into(),
            exponent,
            source: source.into(),
            note: None,
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Admissible `δ` range, `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaDomain {
    #[serde(serialize_with = "ser_rational")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub hi: Rational,
}

impl Default for DeltaDomain {
    fn default() -> Self {
        Self { lo: q(1, 6), hi: q(5, 8) }
    }
}

impl DeltaDomain {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Parameter(format!(
                "empty δ range ({}, {}]",
                format_rational(lo),
                format_rational(hi)
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, delta: Rational) -> bool {
        delta > self.lo && delta <= self.hi
    }
}

/// The balance table and its two totals.
#[derive(Clone, Debug, Serialize)]
pub struct Table1 {
    pub rows: Vec<LedgerRow>,
    pub total: AffineExponent,
    pub minimal_total: AffineExponent,
}

pub const ROW_LOCAL_L4: &str = "Local L4";
pub const ROW_PHASE_IBP: &str = "Phase IBP (simplified)";
pub const ROW_NULL_FORM: &str = "Null form + 2x(rho-IBP) + H^-1";
pub const ROW_ANGULAR: &str = "Angular l2 sum + tiling in time";
pub const ROW_RANK3: &str = "Rank-3 decoupling";

/// Balance of exponents per mechanism. `total` sums all rows;
/// `minimal_total` drops the optional local `L⁴` gain.
pub fn table1() -> Table1 {
    let rows = vec![
        LedgerRow::new(
            ROW_LOCAL_L4,
            AffineExponent::from_parts((0, 1), (-1, 4)),
            "local (4,4) Strichartz pair on one tile; optional",
        ),
        LedgerRow::new(
            ROW_PHASE_IBP,
            AffineExponent::from_parts((-2, 1), (1, 1)),
            "time integrations by parts against the phase, coarse bound",
        )
        .with_note("kept alongside the sharp sevenfold value -19/4 + 13/2δ; never merged"),
        LedgerRow::new(
            ROW_NULL_FORM,
            AffineExponent::from_parts((-2, 1), (3, 1)),
            "transverse null symbol, two angular integrations by parts, H^-1 divisor",
        ),
        LedgerRow::new(
            ROW_ANGULAR,
            AffineExponent::from_parts((1, 1), (-2, 1)),
            "l2 over active caps and time micro-cylinders, tile volume",
        ),
        LedgerRow::new(
            ROW_RANK3,
            AffineExponent::zero(),
            "rank-3 decoupling gain cancels the wave-packet count",
        ),
    ];
    let total: AffineExponent = rows.iter().map(|r| r.exponent).sum();
    let minimal_total = rows
        .iter()
        .filter(|r| r.name != ROW_LOCAL_L4)
        .map(|r| r.exponent)
        .sum();
    Table1 {
        rows,
        total,
        minimal_total,
    }
}

pub const ROW_IBP_FULL: &str = "sevenfold IBP, full degree";
pub const ROW_MIXED_TIME: &str = "mixed time case";
pub const ROW_AMP_L2: &str = "amplitude L2 after sevenfold IBP";
pub const ROW_COUNTING_DECOUPLING: &str = "counting-decoupling sum";
pub const ROW_K_KAPPA: &str = "tile growth (K/kappa)^(2/3)";
pub const ROW_TILE_COMPENSATION: &str = "tile growth compensated by amplitude L2";

/// Sharp variants of the coarse table rows, exactly as tabulated.
pub fn sharp_rows() -> Vec<LedgerRow> {
    vec![
        LedgerRow::new(
            ROW_IBP_FULL,
            AffineExponent::from_parts((-19, 4), (13, 2)),
            "five time and two transverse integrations by parts",
        ),
        LedgerRow::new(
            ROW_MIXED_TIME,
            AffineExponent::from_parts((-29, 4), (19, 2)),
            "fifth time derivative of the window over the phase, two transverse IBP",
        )
        .with_note("tabulated total; see product audit for the recomputed factor product"),
        LedgerRow::new(
            ROW_AMP_L2,
            AffineExponent::from_parts((-25, 4), (7, 1)),
            "L2 of the amplitude after all seven integrations by parts",
        ),
        LedgerRow::new(
            ROW_COUNTING_DECOUPLING,
            AffineExponent::from_parts((-13, 2), (19, 2)),
            "tile growth x amplitude L2 x residual spatial-block summation",
        )
        .with_note("tabulated total; see product audit for the recomputed factor product"),
        LedgerRow::new(
            ROW_K_KAPPA,
            AffineExponent::from_parts((0, 1), (2, 1)),
            "epsilon-free rank-3 decoupling loss, absorbed by tile bookkeeping",
        ),
        LedgerRow::new(
            ROW_TILE_COMPENSATION,
            AffineExponent::from_parts((-25, 4), (9, 1)),
            "tile growth times amplitude L2",
        ),
    ]
}

pub const ROW_CAPS: &str = "#active caps";
pub const ROW_TILES: &str = "#tiles (cap, packet)";
pub const ROW_L2_COST: &str = "l2 cost of tiles";
pub const ROW_NET: &str = "l2 cost x decoupling gain";
pub const ROW_MICRO_WINDOWS: &str = "#micro-windows J_k per window";
pub const ROW_WINDOWS: &str = "#windows in unit time";

/// Exponents of the counting arguments.
pub fn counting_rows() -> Vec<LedgerRow> {
    vec![
        LedgerRow::new(
            ROW_CAPS,
            AffineExponent::from_parts((4, 3), (-2, 1)),
            "caps of radius λ^-2/3 inside a cone of angle λ^-δ",
        ),
        LedgerRow::new(
            ROW_TILES,
            AffineExponent::from_parts((5, 3), (-2, 1)),
            "each packet meets λ^1/3 cylinders of length λ^-1",
        ),
        LedgerRow::new(
            ROW_L2_COST,
            AffineExponent::from_parts((5, 6), (-1, 1)),
            "square root of the tile count",
        ),
        LedgerRow::new(
            ROW_NET,
            AffineExponent::from_parts((1, 6), (-1, 1)),
            "decoupling gain λ^-2/3 against the l2 cost",
        ),
        LedgerRow::new(
            ROW_MICRO_WINDOWS,
            AffineExponent::from_parts((-1, 2), (1, 1)),
            "window length over micro-window length λ^-1",
        )
        .with_note("literal formula; below one for δ < 1/2, the harness clamps counts at 1"),
        LedgerRow::new(
            ROW_WINDOWS,
            AffineExponent::from_parts((3, 2), (-1, 1)),
            "unit time split into windows of length λ^-3/2+δ",
        ),
    ]
}

/// A composite exponent together with the factors it was built from.
#[derive(Clone, Debug, Serialize)]
pub struct ProductAudit {
    pub name: String,
    pub factors: Vec<AffineExponent>,
    pub stated: AffineExponent,
    pub recomputed: AffineExponent,
    pub consistent: bool,
}

fn audit(name: &str, factors: Vec<AffineExponent>, stated: AffineExponent) -> ProductAudit {
    let recomputed = factors.iter().copied().sum();
    ProductAudit {
        name: name.into(),
        consistent: recomputed == stated,
        factors,
        stated,
        recomputed,
    }
}

fn e(a: (i64, i64), b: (i64, i64)) -> AffineExponent {
    AffineExponent::from_parts(a, b)
}

/// Recomputes every composite exponent from its factors.
pub fn product_audits() -> Vec<ProductAudit> {
    let window_step = e((3, 4), (-1, 2));
    vec![
        audit(
            "unfolded angular row",
            vec![e((1, 6), (-1, 1)), e((1, 6), (0, 1)), e((2, 3), (-1, 1))],
            e((1, 1), (-2, 1)),
        ),
        audit("tile count", vec![e((4, 3), (-2, 1)), e((1, 3), (0, 1))], e((5, 3), (-2, 1))),
        audit("l2 cost", vec![e((5, 3), (-2, 1)).scale(q(1, 2))], e((5, 6), (-1, 1))),
        audit("decoupling net", vec![e((5, 6), (-1, 1)), e((-2, 3), (0, 1))], e((1, 6), (-1, 1))),
        audit(
            "table total",
            table1().rows.iter().map(|r| r.exponent).collect(),
            e((-3, 1), (7, 4)),
        ),
        audit("fifth window derivative", vec![window_step.scale(q(5, 1))], e((15, 4), (-5, 2))),
        audit(ROW_IBP_FULL, vec![e((-15, 4), (5, 2)), e((-1, 1), (4, 1))], e((-19, 4), (13, 2))),
        audit(
            "mixed time, fifth power",
            vec![e((-5, 1), (10, 1)), e((15, 4), (-5, 2))],
            e((-25, 4), (15, 2)),
        ),
        audit(ROW_MIXED_TIME, vec![e((-25, 4), (15, 2)), e((-1, 1), (2, 1))], e((-29, 4), (19, 2))),
        audit(ROW_TILE_COMPENSATION, vec![e((0, 1), (2, 1)), e((-25, 4), (7, 1))], e((-25, 4), (9, 1))),
        audit(
            ROW_COUNTING_DECOUPLING,
            vec![e((0, 1), (2, 1)), e((-25, 4), (7, 1)), e((-9, 4), (1, 2))],
            e((-13, 2), (19, 2)),
        ),
        audit("weak max on a window", vec![window_step, e((-2, 1), (3, 1))], e((-5, 4), (5, 2))),
        audit("endpoint on a window", vec![e((-3, 1), (7, 4)), window_step], e((-9, 4), (5, 4))),
        audit("endpoint on a window, minimal", vec![e((-3, 1), (2, 1)), window_step], e((-9, 4), (3, 2))),
        audit("Leray commutator chain", vec![e((-1, 1), (1, 1)), e((-2, 1), (2, 1))], e((-3, 1), (3, 1))),
    ]
}

/// Outcome of [`negativity_interval`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Negativity {
    pub always_negative: bool,
    #[serde(serialize_with = "ser_opt_rational")]
    pub witness: Option<Rational>,
}

/// Decides whether `a + bδ < 0` on all of `dom`; otherwise returns an
/// admissible `δ` where it is `≥ 0`.
pub fn negativity_interval(e: &AffineExponent, dom: &DeltaDomain) -> Negativity {
    // an affine function attains its supremum over (lo, hi] at an endpoint;
    // the open end only as a limit
    let at_hi = e.eval(dom.hi);
    let fails = if e.b.is_negative() {
        e.eval(dom.lo) > Rational::zero()
    } else {
        at_hi >= Rational::zero()
    };
    if !fails {
        return Negativity {
            always_negative: true,
            witness: None,
        };
    }
    let witness = if at_hi >= Rational::zero() {
        dom.hi
    } else {
        // b < 0 and the zero lies strictly inside (lo, hi)
        -e.a / e.b
    };
    Negativity {
        always_negative: false,
        witness: Some(witness),
    }
}

/// Which side of a crossing `lhs ≤ rhs` holds on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Below,
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Threshold {
    /// `lhs = rhs` exactly at `delta`; `lhs ≤ rhs` for δ on side
    /// `lhs_le_rhs` of it.
    Crossing {
        #[serde(serialize_with = "ser_rational")]
        delta: Rational,
        lhs_le_rhs: Side,
    },
    /// Parallel lines; `equal` when they coincide.
    Parallel { equal: bool },
}

impl Threshold {
    pub fn delta(&self) -> Option<Rational> {
        match self {
            Threshold::Crossing { delta, .. } => Some(*delta),
            Threshold::Parallel { .. } => None,
        }
    }
}

/// Solves `lhs(δ) = rhs(δ)` exactly.
pub fn threshold(lhs: &AffineExponent, rhs: &AffineExponent) -> Threshold {
    let d = *lhs - *rhs;
    if d.b.is_zero() {
        return Threshold::Parallel { equal: d.a.is_zero() };
    }
    Threshold::Crossing {
        delta: -d.a / d.b,
        lhs_le_rhs: if d.b.is_positive() { Side::Below } else { Side::Above },
    }
}

/// A series `Σ_λ λ^e` (or its squared-norm analogue) and whether it meets
/// its convergence target `e < target`.
#[derive(Clone, Debug, Serialize)]
pub struct Summability {
    pub name: String,
    pub exponent: AffineExponent,
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub target: Rational,
    pub converges: bool,
}

fn summability(name: &str, exponent: AffineExponent, delta: Rational, target: Rational) -> Summability {
    let value = exponent.eval(delta);
    Summability {
        name: name.into(),
        exponent,
        value,
        target,
        converges: value < target,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SupBranch {
    /// `λ^{-1-δ}` without loss.
    Endpoint,
    /// `λ^{-1-δ+ε}` for every `ε > 0`.
    EpsilonLoss,
}

/// Evaluated exponent with its value at the report's δ.
#[derive(Clone, Debug, Serialize)]
pub struct Evaluated {
    pub name: String,
    pub exponent: AffineExponent,
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
}

/// Piecewise conclusion for `sup_t Ḣ^{-1}` and friends at one δ.
#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational,
    pub domain: DeltaDomain,
    pub out_of_domain: bool,
    pub exponents: Vec<Evaluated>,
    #[serde(serialize_with = "ser_rational")]
    pub threshold: Rational,
    pub branch: SupBranch,
    /// `(endpoint on window) - (target)` at δ; positive means a gap.
    #[serde(serialize_with = "ser_rational")]
    pub gap: Rational,
    pub summability: Vec<Summability>,
    pub conclusion: String,
}

pub fn target_exponent() -> AffineExponent {
    e((-1, 1), (-1, 1))
}

pub fn endpoint_on_window() -> AffineExponent {
    e((-9, 4), (5, 4))
}

/// Evaluates the sup-in-time exponents at `delta`, picks the endpoint or
/// ε-loss branch, and checks every frequency series.
pub fn branch_report(delta: Rational) -> Result<BranchReport> {
    if delta <= Rational::zero() || delta >= Rational::one() {
        return Err(Error::Parameter(format!(
            "δ = {} must lie in (0, 1)",
            format_rational(delta)
        )));
    }
    let domain = DeltaDomain::default();
    let target = target_exponent();
    let endpoint = endpoint_on_window();
    let th = threshold(&endpoint, &target)
        .delta()
        .expect("endpoint and target are not parallel");
    let branch = if delta <= th { SupBranch::Endpoint } else { SupBranch::EpsilonLoss };
    let named = [
        ("weak max on a window", e((-5, 4), (5, 2))),
        ("weak max gap", e((-1, 4), (7, 2))),
        ("endpoint on a window", endpoint),
        ("endpoint on a window, minimal", e((-9, 4), (3, 2))),
        ("target", target),
        ("endpoint gap", endpoint - target),
        ("Leray commutator", e((-3, 1), (3, 1))),
        ("L2 H^-1 block", e((-2, 1), (3, 1))),
    ];
    let exponents = named
        .iter()
        .map(|(name, x)| Evaluated {
            name: (*name).into(),
            exponent: *x,
            value: x.eval(delta),
        })
        .collect();
    let gap = (endpoint - target).eval(delta);
    let zero = Rational::zero();
    let minus_one = -Rational::one();
    let summability = vec![
        summability("sup-in-time series", target, delta, zero),
        summability("Leray commutator series", e((-3, 1), (3, 1)), delta, zero),
        summability("Leray commutator series, strict", e((-3, 1), (3, 1)), delta, minus_one),
        summability("squared-norm series, local L4 route", e((-6, 1), (7, 2)), delta, minus_one),
        summability("squared-norm series, target", target.scale(q(2, 1)), delta, minus_one),
        summability("global summation", e((-9, 2), (5, 2)), delta, minus_one),
    ];
    let out_of_domain = !domain.contains(delta);
    let d = format_rational(delta);
    let mut conclusion = match branch {
        SupBranch::Endpoint => format!(
            "δ = {d} ≤ 5/9: endpoint bound λ^(-1-δ) = λ^({}) on every window, no ε-loss",
            format_rational(target.eval(delta))
        ),
        SupBranch::EpsilonLoss => format!(
            "δ = {d} > 5/9: tile-to-max leaves a gap of {} over λ^(-1-δ); ε-loss branch λ^(-1-δ+ε)",
            format_rational(gap)
        ),
    };
    if out_of_domain {
        conclusion.push_str(&format!(
            "; warning: δ outside the admissible range ({}, {}]",
            format_rational(domain.lo),
            format_rational(domain.hi)
        ));
    }
    Ok(BranchReport {
        delta,
        domain,
        out_of_domain,
        exponents,
        threshold: th,
        branch,
        gap,
        summability,
        conclusion,
    })
}

/// Everything the ledger knows, evaluated at one δ.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerReport {
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational,
    pub table: Table1,
    #[serde(serialize_with = "ser_rational")]
    pub total_value: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub minimal_total_value: Rational,
    pub sharp: Vec<Evaluated>,
    pub counting: Vec<Evaluated>,
    pub audits: Vec<ProductAudit>,
    pub branch: BranchReport,
}

pub fn ledger_report(delta: Rational) -> Result<LedgerReport> {
    let branch = branch_report(delta)?;
    let table = table1();
    let eval_rows = |rows: Vec<LedgerRow>| {
        rows.into_iter()
            .map(|r| Evaluated {
                value: r.exponent.eval(delta),
                name: r.name,
                exponent: r.exponent,
            })
            .collect()
    };
    Ok(LedgerReport {
        delta,
        total_value: table.total.eval(delta),
        minimal_total_value: table.minimal_total.eval(delta),
        table,
        sharp: eval_rows(sharp_rows()),
        counting: eval_rows(counting_rows()),
        audits: product_audits(),
        branch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_arithmetic() {
        let x = e((1, 6), (-1, 1)) + e((1, 6), (0, 1)) + e((2, 3), (-1, 1));
        assert_eq!(x, e((1, 1), (-2, 1)));
        assert_eq!(e((-9, 2), (5, 2)).eval(q(1, 6)), q(-49, 12));
        assert_eq!(AffineExponent::zero().eval(q(3, 7)), Rational::zero());
        assert_eq!(-(-x), x);
        assert_eq!(x - x, AffineExponent::zero());
        assert_eq!(x * q(3, 1), x + x + x);
        assert!(matches!(rational(1, 0), Err(Error::Arithmetic(_))));
    }

    #[test]
    fn display_forms() {
        assert_eq!(e((-3, 1), (7, 4)).to_string(), "-3 + 7/4δ");
        assert_eq!(e((0, 1), (-1, 4)).to_string(), "-1/4δ");
        assert_eq!(e((1, 1), (-1, 1)).to_string(), "1 - δ");
        assert_eq!(AffineExponent::zero().to_string(), "0");
    }

    #[test]
    fn table_totals() {
        let t = table1();
        assert_eq!(t.total, e((-3, 1), (7, 4)));
        assert_eq!(t.minimal_total, e((-3, 1), (2, 1)));
        assert_eq!(t.total.eval(q(5, 8)), q(-61, 32));
        assert!(negativity_interval(&t.minimal_total, &DeltaDomain::default()).always_negative);
    }

    #[test]
    fn sharp_values() {
        let rows = sharp_rows();
        let get = |n: &str| rows.iter().find(|r| r.name == n).unwrap().exponent;
        assert_eq!(get(ROW_IBP_FULL).eval(q(5, 8)), q(-11, 16));
        assert_eq!(get(ROW_COUNTING_DECOUPLING).eval(q(5, 8)), q(-9, 16));
        assert_eq!(get(ROW_TILE_COMPENSATION).eval(q(5, 8)), q(-5, 8));
        assert_eq!(get(ROW_K_KAPPA) + get(ROW_AMP_L2), get(ROW_TILE_COMPENSATION));
    }

    #[test]
    fn counting_values() {
        let rows = counting_rows();
        let get = |n: &str| rows.iter().find(|r| r.name == n).unwrap().exponent;
        assert_eq!(get(ROW_L2_COST) + e((-2, 3), (0, 1)), get(ROW_NET));
        assert_eq!(threshold(&get(ROW_NET), &AffineExponent::zero()).delta(), Some(q(1, 6)));
        assert_eq!(get(ROW_WINDOWS).eval(q(5, 8)), q(7, 8));
        assert!(rows.iter().find(|r| r.name == ROW_MICRO_WINDOWS).unwrap().note.is_some());
    }

    #[test]
    fn audits_flag_inconsistent_products() {
        let audits = product_audits();
        let bad: Vec<_> = audits.iter().filter(|a| !a.consistent).map(|a| a.name.as_str()).collect();
        assert_eq!(bad, vec!["mixed time, fifth power", ROW_COUNTING_DECOUPLING]);
        let cd = audits.iter().find(|a| a.name == ROW_COUNTING_DECOUPLING).unwrap();
        assert_eq!(cd.recomputed, e((-17, 2), (19, 2)));
    }

    #[test]
    fn negativity_cases() {
        let dom = DeltaDomain::default();
        assert!(negativity_interval(&e((-3, 1), (2, 1)), &dom).always_negative);
        assert!(negativity_interval(&e((-2, 1), (3, 1)), &dom).always_negative);
        let n = negativity_interval(&e((1, 1), (-2, 1)), &dom);
        assert!(!n.always_negative);
        let w = n.witness.unwrap();
        assert!(dom.contains(w) && e((1, 1), (-2, 1)).eval(w) >= Rational::zero());
        // zero exactly at the open end is still negative inside
        assert!(negativity_interval(&e((1, 6), (-1, 1)), &dom).always_negative);
        // zero exactly at the closed end is not
        let n = negativity_interval(&e((-5, 8), (1, 1)), &dom);
        assert_eq!(n.witness, Some(q(5, 8)));
    }

    #[test]
    fn threshold_cases() {
        assert_eq!(
            threshold(&e((-9, 4), (5, 4)), &e((-1, 1), (-1, 1))),
            Threshold::Crossing {
                delta: q(5, 9),
                lhs_le_rhs: Side::Below
            }
        );
        assert_eq!(threshold(&e((1, 2), (1, 1)), &e((1, 2), (1, 1))), Threshold::Parallel { equal: true });
        assert_eq!(threshold(&e((1, 2), (1, 1)), &e((0, 1), (1, 1))), Threshold::Parallel { equal: false });
    }

    #[test]
    fn branches() {
        let r = branch_report(q(1, 2)).unwrap();
        assert_eq!(r.branch, SupBranch::Endpoint);
        assert_eq!(target_exponent().eval(q(1, 2)), q(-3, 2));
        let r = branch_report(q(5, 8)).unwrap();
        assert_eq!(r.branch, SupBranch::EpsilonLoss);
        assert_eq!(r.gap, q(5, 32));
        assert!(r.conclusion.contains("5/32"));
        assert!(!r.out_of_domain);
        assert!(branch_report(q(3, 4)).unwrap().out_of_domain);
        assert!(branch_report(q(1, 1)).is_err());
        assert!(branch_report(q(0, 1)).is_err());
        let r = branch_report(q(5, 9)).unwrap();
        assert_eq!(r.branch, SupBranch::Endpoint);
        assert_eq!(r.gap, Rational::zero());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("5/8").unwrap(), q(5, 8));
        assert_eq!(parse_rational("0.625").unwrap(), q(5, 8));
        assert_eq!(parse_rational("-3").unwrap(), q(-3, 1));
        assert_eq!(parse_rational("-0.5").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("0.3333333333").unwrap(), q(1, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
        assert_eq!(best_rational(q(314159265, 100000000), 1000), q(355, 113));
    }

    #[test]
    fn serialization_uses_text_rationals() {
        let v = serde_json_like(&e((-3, 1), (7, 4)));
        assert!(v.contains("\"7/4\""));
    }

    fn serde_json_like(x: &AffineExponent) -> String {
        // minimal serializer check without pulling serde_json into the core crate
        format!("\"{}\" \"{}\"", format_rational(x.a), format_rational(x.b))
    }
}
