//! Closed-form thresholds and regime classification for the symmetric
//! three-opinion model with homogeneous parameters.
//!
//! Everything here is algebra over `(n, g0, a, w_pop, w_align, D)` where
//! `D = w_dist * |b|` is the unit misalignment cost. The conventions:
//!
//! - Deviation conditions are strict inequalities, so a parameter sitting
//!   exactly on a threshold classifies as no-deviation.
//! - Thresholds are returned as tagged values rather than sign sentinels:
//!   a negative closed-form value is reported verbatim (its sign is
//!   informative), `OutsideGuarantee` marks a value computed beyond the
//!   hypotheses that back it, and `Undefined` marks a formula whose defining
//!   condition fails outright (wrong regime or a degenerate denominator).

use thiserror::Error;

use crate::opinion::{EquilibriumKind, Regime, ThreeOpinionScenario, UtilityWeights};

/// A closed-form threshold value with its applicability status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Defined(f64),
    /// Computed, but the scenario violates the hypothesis that guarantees
    /// the threshold's interpretation.
    OutsideGuarantee(f64),
    Undefined(UndefinedReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UndefinedReason {
    WrongRegime,
    NoDeviationRegion,
    DegenerateDenominator,
}

impl UndefinedReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            UndefinedReason::WrongRegime => "wrong_regime",
            UndefinedReason::NoDeviationRegion => "no_deviation_region",
            UndefinedReason::DegenerateDenominator => "degenerate_denominator",
        }
    }
}

impl Threshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            Threshold::Defined(v) | Threshold::OutsideGuarantee(v) => Some(*v),
            Threshold::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Threshold::Defined(_))
    }

    /// Unwraps a `Defined` value; panics otherwise (test helper).
    pub fn expect_defined(&self, what: &str) -> f64 {
        match self {
            Threshold::Defined(v) => *v,
            other => panic!("{what} is not defined: {other:?}"),
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Defined(v) => write!(f, "{v}"),
            Threshold::OutsideGuarantee(v) => write!(f, "{v} (outside_guarantee)"),
            Threshold::Undefined(r) => write!(f, "undefined({})", r.as_str()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("operation requires the {required} regime, but the scenario is {actual}")]
    WrongRegime {
        required: &'static str,
        actual: &'static str,
    },
    #[error("no deviation region exists: w_pop must exceed the unit misalignment cost")]
    NoDeviationRegion,
}

fn require_regime(
    s: &ThreeOpinionScenario,
    required: Regime,
    label: &'static str,
) -> Result<(), AnalyticsError> {
    let actual = s.regime();
    if actual == required {
        Ok(())
    } else {
        Err(AnalyticsError::WrongRegime {
            required: label,
            actual: actual.as_str(),
        })
    }
}

/// Raw parameter bundle used by every closed form.
#[derive(Clone, Copy)]
struct P {
    n: f64,
    g0: f64,
    a: f64,
    wp: f64,
    wa: f64,
    d: f64,
}

impl P {
    fn of(s: &ThreeOpinionScenario) -> P {
        P {
            n: f64::from(s.n()),
            g0: f64::from(s.g0()),
            a: s.density_a(),
            wp: s.weights().w_pop(),
            wa: s.weights().w_align(),
            d: s.misalignment_cost(),
        }
    }
}

pub(crate) fn d_star_raw(n: f64, g0: f64, wp: f64, wa: f64) -> f64 {
    (wp * (n - 3.0 * g0) - 2.0 * wa * g0) / (n - g0)
}

pub(crate) fn d_starstar_raw(n: f64, g0: f64, wp: f64, wa: f64) -> f64 {
    (wp * (3.0 * g0 - n) - wa * (n - g0)) / (2.0 * g0)
}

fn d0_high_raw(p: P) -> f64 {
    (p.wp * (p.n - 3.0 * p.g0) - 2.0 * p.wa * p.g0 * (p.a * p.g0 + 1.0))
        / ((p.n - p.g0) * (p.a * p.g0 + 1.0))
}

fn dpm_high_raw(p: P) -> f64 {
    p.wa * p.g0 * (p.n - p.g0) / (2.0 * p.n * p.g0 - 6.0 * p.g0 * p.g0)
}

fn dpm_low_raw(p: P) -> f64 {
    (p.wp * (3.0 * p.g0 - p.n) - p.wa * (p.a * (p.n - p.g0) / 2.0 + 1.0) * (p.n - p.g0))
        / (2.0 * p.g0 + p.a * (p.n - p.g0) * (3.0 * p.g0 - p.n))
}

fn d_hat_high_raw(p: P) -> f64 {
    (p.wp * (p.n - 3.0 * p.g0)
        + (p.wa / 2.0) * (p.a * (p.n - 3.0 * p.g0) * (p.n + p.g0) - 4.0 * p.g0))
        / ((p.n - p.g0) * (p.a * (p.n - 2.0 * p.g0) + 1.0))
}

fn d_hat_low_denominator(p: P) -> f64 {
    2.0 * p.g0 + p.a * (p.n - p.g0) * (2.0 * p.g0 - p.n)
}

fn d_hat_low_raw(p: P) -> f64 {
    (p.wp * (3.0 * p.g0 - p.n)
        + (p.wa / 2.0) * (p.a * (3.0 * p.g0 - p.n) * (p.n + p.g0) - 2.0 * (p.n - p.g0)))
        / d_hat_low_denominator(p)
}

/// Aggregate welfare difference (equilibrium minus authentic benchmark) if
/// the given outcome is played, as a closed form. This is one side of the
/// dual-route welfare check; the other is per-type summation in the welfare
/// module, and the two must agree to 1e-9 relative.
pub fn delta_w_closed(s: &ThreeOpinionScenario, kind: EquilibriumKind) -> f64 {
    let p = P::of(s);
    match kind {
        EquilibriumKind::AuthenticAll => 0.0,
        EquilibriumKind::PeHighPol => {
            (p.a * p.g0 / 2.0)
                * (p.wp * (p.n - 3.0 * p.g0)
                    + (p.wa / 2.0) * (p.a * (p.n - 3.0 * p.g0) * (p.n + p.g0) - 4.0 * p.g0)
                    - p.d * (p.n - p.g0) * (p.a * (p.n - 2.0 * p.g0) + 1.0))
        }
        EquilibriumKind::PeLowPol => {
            (p.a * (p.n - p.g0) / 2.0)
                * (p.wp * (3.0 * p.g0 - p.n)
                    + (p.wa / 2.0) * (p.a * (3.0 * p.g0 - p.n) * (p.n + p.g0) - 2.0 * (p.n - p.g0))
                    - p.d * (2.0 * p.g0 + p.a * (p.n - p.g0) * (2.0 * p.g0 - p.n)))
        }
    }
}

/// Group-size thresholds: all neutrals post opinionated below `g0_star`
/// (high polarization), all opinionated post neutral above `g0_starstar`
/// (low polarization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G0Thresholds {
    pub g0_star: Threshold,
    pub g0_starstar: Threshold,
}

pub fn g0_thresholds(w: &UtilityWeights, intensity_b: f64, n: u32) -> G0Thresholds {
    let n = f64::from(n);
    let (wp, wa, d) = (w.w_pop(), w.w_align(), w.misalignment_cost(intensity_b));
    let g0_star = if wp <= d {
        Threshold::Undefined(UndefinedReason::NoDeviationRegion)
    } else {
        Threshold::Defined((wp - d) * n / (3.0 * wp - d + 2.0 * wa))
    };
    let denom = 3.0 * wp - 2.0 * d + wa;
    let g0_starstar = if denom <= 0.0 {
        Threshold::Undefined(UndefinedReason::NoDeviationRegion)
    } else {
        // Values >= n mean no opinionated group is small enough to moderate;
        // they are reported verbatim.
        Threshold::Defined((wp + wa) * n / denom)
    };
    G0Thresholds {
        g0_star,
        g0_starstar,
    }
}

/// Existence threshold for the high-polarization popularity-driven
/// equilibrium: it exists and is unique iff `D < d_star`.
pub fn d_star(s: &ThreeOpinionScenario) -> Result<f64, AnalyticsError> {
    require_regime(s, Regime::HighPolarization, "high_polarization")?;
    let p = P::of(s);
    Ok(d_star_raw(p.n, p.g0, p.wp, p.wa))
}

/// High-polarization benefit thresholds and the popularity-weight bounds
/// that make the corresponding regions non-empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighPolThresholds {
    /// Neutral agents gain from the popularity-driven equilibrium iff
    /// `D < d0_high`.
    pub d0_high: Threshold,
    /// Opinionated agents gain iff `D < dpm_high`; independent of density.
    pub dpm_high: Threshold,
    /// Above this popularity weight the all-worse interval is non-empty.
    pub wp_underline: Threshold,
    /// Above this popularity weight `d0_high > 0`, so the all-better
    /// interval is non-empty.
    pub wp_overline: Threshold,
}

pub fn d_thresholds_high(s: &ThreeOpinionScenario) -> Result<HighPolThresholds, AnalyticsError> {
    require_regime(s, Regime::HighPolarization, "high_polarization")?;
    let p = P::of(s);
    let d0_high = Threshold::Defined(d0_high_raw(p));
    let (dpm_high, wp_underline) = if p.g0 == 0.0 {
        (
            Threshold::Undefined(UndefinedReason::DegenerateDenominator),
            Threshold::Undefined(UndefinedReason::DegenerateDenominator),
        )
    } else {
        let dpm = dpm_high_raw(p);
        let wp_under = f64::max(
            ((p.n - p.g0) * dpm + 2.0 * p.wa * p.g0) / (p.n - 3.0 * p.g0),
            2.0 * p.wa * p.g0 / (p.n - 3.0 * p.g0),
        );
        (Threshold::Defined(dpm), Threshold::Defined(wp_under))
    };
    let wp_overline =
        Threshold::Defined(2.0 * p.wa * p.g0 * (p.a * p.g0 + 1.0) / (p.n - 3.0 * p.g0));
    Ok(HighPolThresholds {
        d0_high,
        dpm_high,
        wp_underline,
        wp_overline,
    })
}

/// Low-polarization existence and benefit thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPolThresholds {
    /// The popularity-driven equilibrium exists iff `D < d_starstar`.
    pub d_starstar: Threshold,
    /// Opinionated agents gain from it iff `D < dpm_low`; always below
    /// `d_starstar`.
    pub dpm_low: Threshold,
    /// `d_starstar > 0` iff `w_pop > wp_starstar`.
    pub wp_starstar: Threshold,
    /// `dpm_low > 0` iff `w_pop > wp_tilde`.
    pub wp_tilde: Threshold,
}

pub fn d_thresholds_low(s: &ThreeOpinionScenario) -> Result<LowPolThresholds, AnalyticsError> {
    require_regime(s, Regime::LowPolarization, "low_polarization")?;
    let p = P::of(s);
    let d_ss = d_starstar_raw(p.n, p.g0, p.wp, p.wa);
    let (dpm_low, wp_tilde) = if p.n == p.g0 {
        // No opinionated agents: the benefit threshold has nothing to bound.
        (
            Threshold::Undefined(UndefinedReason::DegenerateDenominator),
            Threshold::Undefined(UndefinedReason::DegenerateDenominator),
        )
    } else {
        let dpm = dpm_low_raw(p);
        debug_assert!(
            dpm < d_ss,
            "the opinionated benefit threshold must sit below the existence threshold"
        );
        let wp_tilde = p.wa * (p.a * (p.n - p.g0) / 2.0 + 1.0) * (p.n - p.g0) / (3.0 * p.g0 - p.n);
        (Threshold::Defined(dpm), Threshold::Defined(wp_tilde))
    };
    Ok(LowPolThresholds {
        d_starstar: Threshold::Defined(d_ss),
        dpm_low,
        wp_starstar: Threshold::Defined(p.wa * (p.n - p.g0) / (3.0 * p.g0 - p.n)),
        wp_tilde,
    })
}

/// Welfare-comparison thresholds: the equilibrium beats the authentic
/// benchmark in aggregate iff `D` is below the applicable `d_hat`, and the
/// popularity/alignment ratio thresholds that order `d_hat` against the
/// existence threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareThresholds {
    pub d_hat_high: Threshold,
    pub d_hat_low: Threshold,
    /// High polarization: the existence threshold is positive iff
    /// `w_pop / w_align` exceeds this.
    pub ratio_star: Threshold,
    /// High polarization: `d_hat_high < d_star` iff the ratio exceeds this;
    /// always above `ratio_star`.
    pub ratio_prime: Threshold,
    /// Low-polarization analogue of `ratio_star`.
    pub ratio_starstar: Threshold,
    /// Low-polarization analogue of `ratio_prime`; guaranteed meaningful
    /// only when the neutral group is a strict majority.
    pub ratio_doubleprime: Threshold,
}

pub fn welfare_thresholds(s: &ThreeOpinionScenario) -> Result<WelfareThresholds, AnalyticsError> {
    let p = P::of(s);
    let wrong = Threshold::Undefined(UndefinedReason::WrongRegime);
    match s.regime() {
        Regime::KnifeEdge => Err(AnalyticsError::WrongRegime {
            required: "high_polarization or low_polarization",
            actual: "knife_edge",
        }),
        Regime::HighPolarization => Ok(WelfareThresholds {
            d_hat_high: Threshold::Defined(d_hat_high_raw(p)),
            d_hat_low: wrong,
            ratio_star: Threshold::Defined(2.0 * p.g0 / (p.n - 3.0 * p.g0)),
            ratio_prime: Threshold::Defined(
                ((p.n - 3.0 * p.g0) * (p.n + p.g0) + 4.0 * p.g0 * (p.n - 2.0 * p.g0))
                    / (2.0 * (p.n - 3.0 * p.g0) * (p.n - 2.0 * p.g0)),
            ),
            ratio_starstar: wrong,
            ratio_doubleprime: wrong,
        }),
        Regime::LowPolarization => {
            let majority = 2.0 * p.g0 > p.n;
            let den = d_hat_low_denominator(p);
            let d_hat_low = if den <= 0.0 {
                Threshold::Undefined(UndefinedReason::DegenerateDenominator)
            } else if majority {
                Threshold::Defined(d_hat_low_raw(p))
            } else {
                Threshold::OutsideGuarantee(d_hat_low_raw(p))
            };
            let ratio_doubleprime = if 2.0 * p.g0 == p.n || p.g0 == p.n {
                Threshold::Undefined(UndefinedReason::DegenerateDenominator)
            } else {
                let v = (p.n - p.g0) / (3.0 * p.g0 - p.n)
                    + p.g0 * (p.n + p.g0) / ((p.n - p.g0) * (2.0 * p.g0 - p.n));
                if majority {
                    Threshold::Defined(v)
                } else {
                    Threshold::OutsideGuarantee(v)
                }
            };
            Ok(WelfareThresholds {
                d_hat_high: wrong,
                d_hat_low,
                ratio_star: wrong,
                ratio_prime: wrong,
                ratio_starstar: Threshold::Defined((p.n - p.g0) / (3.0 * p.g0 - p.n)),
                ratio_doubleprime,
            })
        }
    }
}

/// Every threshold the model defines, evaluated for one scenario. Fields
/// outside the scenario's regime are `Undefined(WrongRegime)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub g0_star: Threshold,
    pub g0_starstar: Threshold,
    pub d_star: Threshold,
    pub d_starstar: Threshold,
    pub d0_high: Threshold,
    pub dpm_high: Threshold,
    pub dpm_low: Threshold,
    pub wp_underline: Threshold,
    pub wp_overline: Threshold,
    pub wp_tilde: Threshold,
    pub wp_starstar: Threshold,
    pub d_hat_high: Threshold,
    pub d_hat_low: Threshold,
    pub ratio_star: Threshold,
    pub ratio_prime: Threshold,
    pub ratio_starstar: Threshold,
    pub ratio_doubleprime: Threshold,
}

impl ThresholdSet {
    /// `(name, value)` pairs in a fixed order, for key-value and CSV output.
    pub fn entries(&self) -> Vec<(&'static str, Threshold)> {
        vec![
            ("g0_star", self.g0_star),
            ("g0_starstar", self.g0_starstar),
            ("d_star", self.d_star),
            ("d_starstar", self.d_starstar),
            ("d0_high", self.d0_high),
            ("dpm_high", self.dpm_high),
            ("dpm_low", self.dpm_low),
            ("wp_underline", self.wp_underline),
            ("wp_overline", self.wp_overline),
            ("wp_tilde", self.wp_tilde),
            ("wp_starstar", self.wp_starstar),
            ("d_hat_high", self.d_hat_high),
            ("d_hat_low", self.d_hat_low),
            ("ratio_star", self.ratio_star),
            ("ratio_prime", self.ratio_prime),
            ("ratio_starstar", self.ratio_starstar),
            ("ratio_doubleprime", self.ratio_doubleprime),
        ]
    }
}

pub fn threshold_set(s: &ThreeOpinionScenario) -> Result<ThresholdSet, AnalyticsError> {
    let wrong = Threshold::Undefined(UndefinedReason::WrongRegime);
    let g0t = g0_thresholds(s.weights(), s.intensity_b(), s.n());
    let wt = welfare_thresholds(s)?;
    let mut set = ThresholdSet {
        g0_star: g0t.g0_star,
        g0_starstar: g0t.g0_starstar,
        d_star: wrong,
        d_starstar: wrong,
        d0_high: wrong,
        dpm_high: wrong,
        dpm_low: wrong,
        wp_underline: wrong,
        wp_overline: wrong,
        wp_tilde: wrong,
        wp_starstar: wrong,
        d_hat_high: wt.d_hat_high,
        d_hat_low: wt.d_hat_low,
        ratio_star: wt.ratio_star,
        ratio_prime: wt.ratio_prime,
        ratio_starstar: wt.ratio_starstar,
        ratio_doubleprime: wt.ratio_doubleprime,
    };
    match s.regime() {
        Regime::HighPolarization => {
            set.d_star = Threshold::Defined(d_star(s)?);
            let high = d_thresholds_high(s)?;
            set.d0_high = high.d0_high;
            set.dpm_high = high.dpm_high;
            set.wp_underline = high.wp_underline;
            set.wp_overline = high.wp_overline;
        }
        Regime::LowPolarization => {
            let low = d_thresholds_low(s)?;
            set.d_starstar = low.d_starstar;
            set.dpm_low = low.dpm_low;
            set.wp_starstar = low.wp_starstar;
            set.wp_tilde = low.wp_tilde;
        }
        Regime::KnifeEdge => unreachable!("welfare_thresholds rejects the knife edge"),
    }
    Ok(set)
}

/// Which agent types the popularity-driven equilibrium leaves worse off than
/// the authentic benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityRegion {
    AllBetter,
    OnlyNeutralWorse,
    OnlyOpinionatedWorse,
    AllWorse,
    /// No popularity-driven equilibrium: both benchmarks coincide.
    NotApplicable,
}

impl UtilityRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            UtilityRegion::AllBetter => "all_better",
            UtilityRegion::OnlyNeutralWorse => "only_neutral_worse",
            UtilityRegion::OnlyOpinionatedWorse => "only_opinionated_worse",
            UtilityRegion::AllWorse => "all_worse",
            UtilityRegion::NotApplicable => "not_applicable",
        }
    }
}

/// Equilibrium aggregate welfare relative to the authentic benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WelfareOrder {
    Higher,
    Lower,
    Equal,
}

impl WelfareOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            WelfareOrder::Higher => "higher",
            WelfareOrder::Lower => "lower",
            WelfareOrder::Equal => "equal",
        }
    }
}

/// One evaluated inequality behind a classification.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdComparison {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ThresholdComparison {
    fn less(name: &'static str, lhs: f64, rhs: f64) -> Self {
        ThresholdComparison {
            name,
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

/// Full classification of a scenario: equilibrium kind, who wins and loses,
/// and the aggregate welfare comparison, with the comparisons that produced
/// it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub equilibrium_kind: EquilibriumKind,
    pub utility_region: UtilityRegion,
    pub welfare_vs_authentic: WelfareOrder,
    pub active_thresholds: Vec<ThresholdComparison>,
}

/// The equilibrium kind implied by the closed-form deviation conditions.
/// A scenario with no agents of the deviating type counts as authentic.
pub fn equilibrium_kind(s: &ThreeOpinionScenario) -> Result<EquilibriumKind, AnalyticsError> {
    let d = s.misalignment_cost();
    match s.regime() {
        Regime::KnifeEdge => Err(AnalyticsError::WrongRegime {
            required: "high_polarization or low_polarization",
            actual: "knife_edge",
        }),
        Regime::HighPolarization => {
            if s.g0() > 0 && d < d_star(s)? {
                Ok(EquilibriumKind::PeHighPol)
            } else {
                Ok(EquilibriumKind::AuthenticAll)
            }
        }
        Regime::LowPolarization => {
            let low = d_thresholds_low(s)?;
            if s.g0() < s.n() && d < low.d_starstar.expect_defined("d_starstar") {
                Ok(EquilibriumKind::PeLowPol)
            } else {
                Ok(EquilibriumKind::AuthenticAll)
            }
        }
    }
}

pub fn classify_regime(s: &ThreeOpinionScenario) -> Result<RegimeReport, AnalyticsError> {
    let regime = s.regime();
    let kind = equilibrium_kind(s)?;
    let d = s.misalignment_cost();
    let mut comparisons = Vec::new();

    let (utility_region, welfare) = match kind {
        EquilibriumKind::AuthenticAll => {
            match regime {
                Regime::HighPolarization => {
                    comparisons.push(ThresholdComparison::less("d < d_star", d, d_star(s)?));
                }
                Regime::LowPolarization => {
                    let low = d_thresholds_low(s)?;
                    comparisons.push(ThresholdComparison::less(
                        "d < d_starstar",
                        d,
                        low.d_starstar.expect_defined("d_starstar"),
                    ));
                }
                Regime::KnifeEdge => unreachable!(),
            }
            (UtilityRegion::NotApplicable, WelfareOrder::Equal)
        }
        EquilibriumKind::PeHighPol => {
            let ds = d_star(s)?;
            let high = d_thresholds_high(s)?;
            let d0 = high.d0_high.expect_defined("d0_high");
            let dpm = high.dpm_high.expect_defined("dpm_high");
            comparisons.push(ThresholdComparison::less("d < d_star", d, ds));
            comparisons.push(ThresholdComparison::less("d < d0_high", d, d0));
            comparisons.push(ThresholdComparison::less("d < dpm_high", d, dpm));
            let region = match (d > d0, d > dpm) {
                (false, false) => UtilityRegion::AllBetter,
                (true, false) => UtilityRegion::OnlyNeutralWorse,
                (false, true) => UtilityRegion::OnlyOpinionatedWorse,
                (true, true) => UtilityRegion::AllWorse,
            };
            (region, welfare_order(s, kind, d, &mut comparisons))
        }
        EquilibriumKind::PeLowPol => {
            let low = d_thresholds_low(s)?;
            let dss = low.d_starstar.expect_defined("d_starstar");
            let dpm = low.dpm_low.expect_defined("dpm_low");
            comparisons.push(ThresholdComparison::less("d < d_starstar", d, dss));
            comparisons.push(ThresholdComparison::less("d < dpm_low", d, dpm));
            // Neutral agents are strictly better off in every low-polarization
            // popularity-driven equilibrium; only the opinionated side varies.
            let region = if d > dpm {
                UtilityRegion::OnlyOpinionatedWorse
            } else {
                UtilityRegion::AllBetter
            };
            (region, welfare_order(s, kind, d, &mut comparisons))
        }
    };

    Ok(RegimeReport {
        regime,
        equilibrium_kind: kind,
        utility_region,
        welfare_vs_authentic: welfare,
        active_thresholds: comparisons,
    })
}

/// Sign of the closed-form welfare difference. Where the applicable `d_hat`
/// is defined this is exactly the `D` vs `d_hat` comparison; the direct sign
/// also covers the low-polarization points whose `d_hat` denominator is
/// non-positive.
fn welfare_order(
    s: &ThreeOpinionScenario,
    kind: EquilibriumKind,
    d: f64,
    comparisons: &mut Vec<ThresholdComparison>,
) -> WelfareOrder {
    if let Ok(wt) = welfare_thresholds(s) {
        let d_hat = match kind {
            EquilibriumKind::PeHighPol => wt.d_hat_high,
            EquilibriumKind::PeLowPol => wt.d_hat_low,
            EquilibriumKind::AuthenticAll => Threshold::Undefined(UndefinedReason::WrongRegime),
        };
        if let Some(v) = d_hat.value() {
            comparisons.push(ThresholdComparison::less("d < d_hat", d, v));
        }
    }
    let delta_w = delta_w_closed(s, kind);
    if delta_w > 0.0 {
        WelfareOrder::Higher
    } else if delta_w < 0.0 {
        WelfareOrder::Lower
    } else {
        WelfareOrder::Equal
    }
}

/// The gap between the two full-deviation thresholds: the neutral-group size
/// below which every neutral posts opinionated and the opinionated-group
/// size below which every opinionated agent posts neutral. The gap is
/// strictly positive whenever deviations are possible at all, i.e.
/// moderation on unified topics sets in more easily than polarization on
/// divided ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationGap {
    /// `g0_star`: all neutrals deviate below this neutral-group size.
    pub g_neutral: f64,
    /// `n - g0_starstar`: all opinionated agents deviate below this
    /// opinionated-group size.
    pub g_opin: f64,
    pub gap: f64,
}

pub fn deviation_gap(
    w: &UtilityWeights,
    intensity_b: f64,
    n: u32,
) -> Result<DeviationGap, AnalyticsError> {
    if w.w_pop() <= w.misalignment_cost(intensity_b) {
        return Err(AnalyticsError::NoDeviationRegion);
    }
    let t = g0_thresholds(w, intensity_b, n);
    let g_neutral = t.g0_star.expect_defined("g0_star");
    let g_opin = f64::from(n) - t.g0_starstar.expect_defined("g0_starstar");
    Ok(DeviationGap {
        g_neutral,
        g_opin,
        gap: g_opin - g_neutral,
    })
}
