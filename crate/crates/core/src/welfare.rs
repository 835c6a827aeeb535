//! Per-agent utilities and aggregate welfare for three-opinion scenarios
//! under the three benchmarks: autarky, authentic expression by everyone,
//! and the posting equilibrium.
//!
//! Feeds are representative and fractional: an agent is exposed to their own
//! post plus `a*n` others in platform proportions `C_m / n`, and a post with
//! value `c` earns `a * G_c` likes (its reach among authentic holders of
//! `c`). Exposure counts are carried as reals, which reproduces the model's
//! closed forms exactly instead of sampling feeds.
//!
//! Self-exposure is always included: an agent's own post contributes to
//! their aligned exposure when they post authentically and to their
//! misaligned exposure when they post away from their opinion.

use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{self, AnalyticsError, UtilityRegion};
use crate::equilibrium::PostProfile;
use crate::fmt_num::{csv_line, f64_field};
use crate::opinion::{AgentType, EquilibriumKind, Regime, ThreeOpinionScenario, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WelfareError {
    #[error("post profile is not one of the supported benchmark profiles: {0}")]
    UnsupportedProfile(String),
    #[error(
        "welfare consistency failure: closed form {closed_form} vs summation {summation} \
         (relative error {relative_error})"
    )]
    ConsistencyFailure {
        closed_form: f64,
        summation: f64,
        relative_error: f64,
    },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// One agent type's utility under one profile, split into the components of
/// the utility definition. `misaligned` is reported non-negative and enters
/// the total with a minus sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityBreakdown {
    pub baseline: f64,
    pub popularity: f64,
    pub aligned: f64,
    pub misaligned: f64,
    pub total: f64,
    /// Utility from others' content only (own-post terms removed, signs
    /// kept).
    pub exposure_excl_self: f64,
}

impl UtilityBreakdown {
    fn new(baseline: f64, popularity: f64, aligned: f64, misaligned: f64, excl: f64) -> Self {
        UtilityBreakdown {
            baseline,
            popularity,
            aligned,
            misaligned,
            total: baseline + popularity + aligned - misaligned,
            exposure_excl_self: excl,
        }
    }

    /// Utility net of the autarky baseline.
    pub fn delta(&self) -> f64 {
        self.total - self.baseline
    }
}

/// Per-type breakdowns for one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeUtilities {
    pub neutral: UtilityBreakdown,
    pub opinionated: UtilityBreakdown,
}

impl TypeUtilities {
    pub fn of(&self, t: AgentType) -> &UtilityBreakdown {
        match t {
            AgentType::Neutral => &self.neutral,
            AgentType::Opinionated => &self.opinionated,
        }
    }
}

/// Utility breakdowns per agent type under a benchmark profile.
///
/// The profile fixes everyone's post: authentic everywhere, neutrals split
/// evenly across the poles (high-polarization equilibrium), or all
/// opinionated agents posting neutral (low-polarization equilibrium). The
/// breakdowns for types with no members in the scenario are the same closed
/// forms evaluated vacuously; aggregation weights them by group size.
pub fn feed_utilities(profile: EquilibriumKind, s: &ThreeOpinionScenario) -> TypeUtilities {
    let n = f64::from(s.n());
    let g0 = f64::from(s.g0());
    let a = s.density_a();
    let h = s.weights().baseline();
    let wp = s.weights().w_pop();
    let wa = s.weights().w_align();
    let d = s.misalignment_cost();
    let pole_reach = a * (n - g0) / 2.0;
    let neutral_reach = a * g0;

    match profile {
        EquilibriumKind::AuthenticAll => {
            // Neutral: own post plus a*g0 neutral posts aligned, each with
            // reach a*g0; the poles contribute a^2 (n-g0)^2 / 2 misalignment
            // at unit distance.
            let aligned_n = wa * (neutral_reach + 1.0) * neutral_reach;
            let mis_n = d * a * a * (n - g0) * (n - g0) / 2.0;
            let neutral = UtilityBreakdown::new(
                h,
                wp * neutral_reach,
                aligned_n,
                mis_n,
                wa * neutral_reach * neutral_reach - mis_n,
            );
            // Opinionated: neutral posts sit at distance 1, the opposite pole
            // at distance 2 (in units of |b|).
            let aligned_o = wa * (pole_reach + 1.0) * pole_reach;
            let mis_o = d * (neutral_reach * neutral_reach + 2.0 * pole_reach * pole_reach);
            let opinionated = UtilityBreakdown::new(
                h,
                wp * pole_reach,
                aligned_o,
                mis_o,
                wa * pole_reach * pole_reach - mis_o,
            );
            TypeUtilities {
                neutral,
                opinionated,
            }
        }
        EquilibriumKind::PeHighPol => {
            // Every post on the platform sits on a pole with reach
            // a*(n-g0)/2. A deviating neutral sees all a*n+1 posts (own
            // included) at distance 1.
            let mis_n = d * (a * n + 1.0) * pole_reach;
            let neutral =
                UtilityBreakdown::new(h, wp * pole_reach, 0.0, mis_n, -d * a * n * pole_reach);
            // An opinionated agent sees a*n/2 + 1 aligned posts (own
            // included) and a*n/2 posts of the opposite pole at distance 2.
            let aligned_o = wa * (a * n / 2.0 + 1.0) * pole_reach;
            let mis_o = 2.0 * d * (a * n / 2.0) * pole_reach;
            let opinionated = UtilityBreakdown::new(
                h,
                wp * pole_reach,
                aligned_o,
                mis_o,
                wa * (a * n / 2.0) * pole_reach - mis_o,
            );
            TypeUtilities {
                neutral,
                opinionated,
            }
        }
        EquilibriumKind::PeLowPol => {
            // Every post is neutral with reach a*g0. Neutrals see a*n+1
            // aligned posts; opinionated agents see the same feed at
            // distance 1, own deviating post included.
            let aligned_n = wa * (a * n + 1.0) * neutral_reach;
            let neutral = UtilityBreakdown::new(
                h,
                wp * neutral_reach,
                aligned_n,
                0.0,
                wa * a * n * neutral_reach,
            );
            let mis_o = d * (a * n + 1.0) * neutral_reach;
            let opinionated = UtilityBreakdown::new(
                h,
                wp * neutral_reach,
                0.0,
                mis_o,
                -d * a * n * neutral_reach,
            );
            TypeUtilities {
                neutral,
                opinionated,
            }
        }
    }
}

/// Maps an engine post profile onto one of the three benchmark profiles,
/// rejecting anything else.
pub fn classify_profile(
    profile: &PostProfile,
    s: &ThreeOpinionScenario,
) -> Result<EquilibriumKind, WelfareError> {
    let society = s
        .society()
        .map_err(|e| WelfareError::UnsupportedProfile(e.to_string()))?;
    let posts = profile.posts();
    if posts.len() != society.n() {
        return Err(WelfareError::UnsupportedProfile(format!(
            "profile has {} posts for {} agents",
            posts.len(),
            society.n()
        )));
    }
    let b = s.intensity_b();
    let mut neutral_to_minus = 0u32;
    let mut neutral_to_plus = 0u32;
    let mut opinionated_to_zero = 0u32;
    let mut authentic = 0u32;
    for (agent, &post) in posts.iter().enumerate() {
        let opinion = society.agent_opinion(agent);
        if post == opinion {
            authentic += 1;
        } else if opinion == 0.0 && post == -b {
            neutral_to_minus += 1;
        } else if opinion == 0.0 && post == b {
            neutral_to_plus += 1;
        } else if opinion != 0.0 && post == 0.0 {
            opinionated_to_zero += 1;
        } else {
            return Err(WelfareError::UnsupportedProfile(format!(
                "agent {agent} holding {opinion} posts {post}"
            )));
        }
    }
    let n = s.n();
    let g0 = s.g0();
    if authentic == n {
        Ok(EquilibriumKind::AuthenticAll)
    } else if authentic == n - g0
        && neutral_to_minus == g0 / 2
        && neutral_to_plus == g0 / 2
        && g0 > 0
    {
        Ok(EquilibriumKind::PeHighPol)
    } else if authentic == g0 && opinionated_to_zero == n - g0 && g0 < n {
        Ok(EquilibriumKind::PeLowPol)
    } else {
        Err(WelfareError::UnsupportedProfile(format!(
            "mixed profile: {authentic} authentic, {neutral_to_minus}+{neutral_to_plus} \
             neutrals on the poles, {opinionated_to_zero} opinionated at neutral"
        )))
    }
}

/// One agent type's utility levels under the three benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeBenchmark {
    pub u_autarky: f64,
    pub u_authentic: f64,
    pub u_equilibrium: f64,
    /// `u_authentic - u_autarky`.
    pub delta_auth: f64,
    /// `u_equilibrium - u_autarky`.
    pub delta_eq: f64,
    /// Strategic effect `u_equilibrium - u_authentic`.
    pub strategic: f64,
}

/// Benchmark utilities for both agent types plus the realized equilibrium
/// kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkUtilities {
    pub kind: EquilibriumKind,
    pub neutral: TypeBenchmark,
    pub opinionated: TypeBenchmark,
}

impl BenchmarkUtilities {
    pub fn of(&self, t: AgentType) -> &TypeBenchmark {
        match t {
            AgentType::Neutral => &self.neutral,
            AgentType::Opinionated => &self.opinionated,
        }
    }
}

pub fn benchmark_utilities(s: &ThreeOpinionScenario) -> Result<BenchmarkUtilities, WelfareError> {
    let kind = analytics::equilibrium_kind(s)?;
    let h = s.weights().baseline();
    let auth = feed_utilities(EquilibriumKind::AuthenticAll, s);
    // When no popularity-driven equilibrium exists the benchmarks coincide
    // exactly, by construction rather than by re-derivation.
    let eq = match kind {
        EquilibriumKind::AuthenticAll => auth,
        pe => feed_utilities(pe, s),
    };
    let per_type = |t: AgentType| TypeBenchmark {
        u_autarky: h,
        u_authentic: auth.of(t).total,
        u_equilibrium: eq.of(t).total,
        delta_auth: auth.of(t).total - h,
        delta_eq: eq.of(t).total - h,
        strategic: eq.of(t).total - auth.of(t).total,
    };
    Ok(BenchmarkUtilities {
        kind,
        neutral: per_type(AgentType::Neutral),
        opinionated: per_type(AgentType::Opinionated),
    })
}

/// Aggregate welfare under the three benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareReport {
    pub w_autarky: f64,
    pub w_authentic: f64,
    pub w_equilibrium: f64,
    /// `w_equilibrium - w_authentic`.
    pub delta_w: f64,
    pub per_type: BenchmarkUtilities,
}

const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Aggregates per-type utilities and cross-checks the equilibrium-vs-
/// authentic difference against its closed form. The two routes are
/// algebraically identical; a disagreement beyond 1e-9 relative is an
/// internal error, not a property of the scenario.
pub fn aggregate_welfare(s: &ThreeOpinionScenario) -> Result<WelfareReport, WelfareError> {
    let per_type = benchmark_utilities(s)?;
    let n = f64::from(s.n());
    let g0 = f64::from(s.g0());
    let g_pm = n - g0;
    let w_autarky = n * s.weights().baseline();
    let w_authentic = g0 * per_type.neutral.u_authentic + g_pm * per_type.opinionated.u_authentic;
    let w_equilibrium =
        g0 * per_type.neutral.u_equilibrium + g_pm * per_type.opinionated.u_equilibrium;
    let delta_w = w_equilibrium - w_authentic;

    let closed = analytics::delta_w_closed(s, per_type.kind);
    let scale = delta_w.abs().max(closed.abs()).max(1.0);
    let relative_error = (delta_w - closed).abs() / scale;
    if relative_error > CONSISTENCY_TOLERANCE {
        return Err(WelfareError::ConsistencyFailure {
            closed_form: closed,
            summation: delta_w,
            relative_error,
        });
    }
    Ok(WelfareReport {
        w_autarky,
        w_authentic,
        w_equilibrium,
        delta_w,
        per_type,
    })
}

/// Parameter axes a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Neutral group size (grid values must be even integers).
    G0,
    /// Unit misalignment cost `D`, varied through `w_dist` at fixed `|b|`.
    MisalignmentCost,
    /// Topic intensity `|b|` at fixed `w_dist`.
    IntensityB,
    /// Representative density `a`.
    DensityA,
    /// Popularity weight.
    WPop,
}

impl Axis {
    pub fn parse(name: &str) -> Option<Axis> {
        match name {
            "g0" => Some(Axis::G0),
            "d" | "misalignment_cost" => Some(Axis::MisalignmentCost),
            "intensity_b" | "b" => Some(Axis::IntensityB),
            "density_a" | "a" => Some(Axis::DensityA),
            "w_pop" => Some(Axis::WPop),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::G0 => "g0",
            Axis::MisalignmentCost => "d",
            Axis::IntensityB => "intensity_b",
            Axis::DensityA => "density_a",
            Axis::WPop => "w_pop",
        }
    }
}

/// Everything one sweep row reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub regime: Regime,
    pub eq_kind: EquilibriumKind,
    pub utility_region: UtilityRegion,
    pub u_auth_neutral: f64,
    pub u_auth_opin: f64,
    pub u_eq_neutral: f64,
    pub u_eq_opin: f64,
    pub strategic_neutral: f64,
    pub strategic_opin: f64,
    pub w_auth: f64,
    pub w_eq: f64,
    pub delta_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub outcome: Result<SweepRecord, String>,
}

fn scenario_at(
    template: &ThreeOpinionScenario,
    axis: Axis,
    value: f64,
) -> Result<ThreeOpinionScenario, String> {
    let validation =
        |r: Result<ThreeOpinionScenario, ValidationReport>| r.map_err(|e| e.codes().join("+"));
    match axis {
        Axis::G0 => {
            let rounded = value.round();
            if (value - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > f64::from(u32::MAX) {
                return Err("non_integer_g0".to_string());
            }
            validation(template.with_g0(rounded as u32))
        }
        Axis::MisalignmentCost => validation(template.with_misalignment_cost(value)),
        Axis::IntensityB => validation(template.with_intensity(value)),
        Axis::DensityA => validation(template.with_density(value)),
        Axis::WPop => validation(template.with_w_pop(value)),
    }
}

fn record_for(s: &ThreeOpinionScenario) -> Result<SweepRecord, String> {
    let report = analytics::classify_regime(s).map_err(|e| match e {
        AnalyticsError::WrongRegime { .. } => "knife_edge".to_string(),
        AnalyticsError::NoDeviationRegion => "no_deviation_region".to_string(),
    })?;
    let welfare = aggregate_welfare(s).map_err(|e| e.to_string())?;
    let per = &welfare.per_type;
    Ok(SweepRecord {
        regime: report.regime,
        eq_kind: report.equilibrium_kind,
        utility_region: report.utility_region,
        u_auth_neutral: per.neutral.u_authentic,
        u_auth_opin: per.opinionated.u_authentic,
        u_eq_neutral: per.neutral.u_equilibrium,
        u_eq_opin: per.opinionated.u_equilibrium,
        strategic_neutral: per.neutral.strategic,
        strategic_opin: per.opinionated.strategic,
        w_auth: welfare.w_authentic,
        w_eq: welfare.w_equilibrium,
        delta_w: welfare.delta_w,
    })
}

/// Evaluates the template at every grid point. Rows are independent and run
/// in parallel; output order is grid order regardless of thread count.
/// Validation failures become row-level error markers instead of aborting
/// the sweep.
pub fn sweep(template: &ThreeOpinionScenario, axis: Axis, grid: &[f64]) -> Vec<SweepRow> {
    grid.par_iter()
        .map(|&axis_value| SweepRow {
            axis_value,
            outcome: scenario_at(template, axis, axis_value).and_then(|s| record_for(&s)),
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "axis_value,regime,eq_kind,utility_region,u_auth_neutral,\
u_auth_opin,u_eq_neutral,u_eq_opin,strategic_neutral,strategic_opin,w_auth,w_eq,delta_w";

/// Renders sweep rows in the fixed column order with LF line endings.
/// Error rows carry the error code in the `regime` column and empty
/// numeric fields.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let fields = match &row.outcome {
            Ok(r) => vec![
                f64_field(row.axis_value),
                r.regime.as_str().to_string(),
                r.eq_kind.as_str().to_string(),
                r.utility_region.as_str().to_string(),
                f64_field(r.u_auth_neutral),
                f64_field(r.u_auth_opin),
                f64_field(r.u_eq_neutral),
                f64_field(r.u_eq_opin),
                f64_field(r.strategic_neutral),
                f64_field(r.strategic_opin),
                f64_field(r.w_auth),
                f64_field(r.w_eq),
                f64_field(r.delta_w),
            ],
            Err(code) => {
                let mut fields = vec![f64_field(row.axis_value), format!("error:{code}")];
                fields.extend(std::iter::repeat_n(String::new(), 11));
                fields
            }
        };
        out.push_str(&csv_line(&fields));
    }
    out
}
