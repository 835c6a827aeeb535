//! Equilibrium posting behavior, polarization, and welfare accounting for a
//! strategic-expression model of social media.
//!
//! Agents hold fixed opinions on a topic and choose what to post. A post
//! earns likes from exactly the followers whose own opinion matches it, so
//! posting popular content and posting authentic content can pull in
//! different directions. The crate computes:
//!
//! - the unique equilibrium posting profile under representative exposure
//!   ([`equilibrium`]),
//! - closed-form deviation, benefit, and welfare thresholds for the
//!   symmetric three-opinion society ([`analytics`]),
//! - per-type utilities and aggregate welfare against autarky and
//!   authentic-expression benchmarks, plus parameter sweeps ([`welfare`]),
//! - posting behavior under capped platform algorithms that allocate
//!   visibility representatively or by post-viewer matching ([`algorithms`]),
//! - a brute-force subgame-perfect-equilibrium enumerator used as an
//!   independent oracle for everything above ([`oracle`]).
//!
//! All computations are deterministic; parallel sweeps produce output in
//! grid order regardless of thread count.

pub mod algorithms;
pub mod analytics;
pub mod equilibrium;
pub mod opinion;
pub mod oracle;
pub mod welfare;

pub(crate) mod fmt_num;

pub use algorithms::{
    cap_sweep, compare_algorithms, equilibrium_under, likes_under, AlgorithmComparison,
    AlgorithmConfig, AlgorithmKind, AlgorithmOutcome, AlgorithmsError, CapSweepRow,
};
pub use analytics::{
    classify_regime, d_star, d_thresholds_high, d_thresholds_low, delta_w_closed, deviation_gap,
    equilibrium_kind, g0_thresholds, threshold_set, welfare_thresholds, AnalyticsError,
    DeviationGap, G0Thresholds, HighPolThresholds, LowPolThresholds, RegimeReport, Threshold,
    ThresholdComparison, ThresholdSet, UndefinedReason, UtilityRegion, WelfareOrder,
    WelfareThresholds,
};
pub use equilibrium::{
    best_response, equilibrium_posts, post_payoff, reaction, three_opinion_equilibrium,
    AudienceProfile, BestResponse, EquilibriumError, EquilibriumSummary, PolarizationOrder,
    PostProfile, Reaction, ThreeOpinionOutcome, TieBreak, TiePolicy, WeightAssignment,
};
pub use opinion::{
    AgentType, EquilibriumKind, ExposureError, ExposureModel, OpinionSpace, Regime,
    ScenarioViolation, Society, SocietyError, SpaceError, ThreeOpinionScenario, UtilityWeights,
    ValidationReport, WeightsError,
};
pub use oracle::{
    cross_validate, engine_predicted_set, enumerate_equilibria, full_utility, off_menu_probe,
    random_instance, random_suite, verify_retained_profiles, CrossValidationReport, EquilibriumSet,
    ExplicitInstance, OracleError, SuiteReport, DEFAULT_ENUMERATION_BUDGET,
};
pub use welfare::{
    aggregate_welfare, benchmark_utilities, classify_profile, feed_utilities, sweep, sweep_csv,
    Axis, BenchmarkUtilities, SweepRecord, SweepRow, TypeBenchmark, TypeUtilities,
    UtilityBreakdown, WelfareError, WelfareReport,
};
