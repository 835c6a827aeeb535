//! Posting behavior under two engagement-maximizing visibility algorithms
//! with a per-post cap `k`.
//!
//! The platform's like-maximizing visibility sets are known in closed form,
//! so no optimization runs here: the representative algorithm (RA) shows a
//! post to `k` users in representative proportions, giving `k * G_c / n`
//! likes; the post-viewer-match algorithm (PVM) shows it only to users whose
//! own opinion equals the posted value, giving `min(k, G_c)` likes.
//! Fractional RA like counts are carried exactly (no divisibility
//! requirement on `k * G_c / n`).

use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::ThresholdComparison;
use crate::fmt_num::csv_line;
use crate::opinion::{AgentType, EquilibriumKind, Regime, Society, ThreeOpinionScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Ra,
    Pvm,
}

impl AlgorithmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Ra => "ra",
            AlgorithmKind::Pvm => "pvm",
        }
    }

    pub fn parse(name: &str) -> Option<AlgorithmKind> {
        match name {
            "ra" => Some(AlgorithmKind::Ra),
            "pvm" => Some(AlgorithmKind::Pvm),
            _ => None,
        }
    }
}

/// A visibility algorithm with its homogeneous cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    pub cap_k: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmsError {
    #[error("visibility cap must satisfy 1 <= k <= n, got k={cap_k} with n={n}")]
    CapOutOfRange { cap_k: u32, n: u32 },
    #[error("post value {0} is not a realized opinion")]
    UnknownOpinion(f64),
    #[error("operation requires a non-knife-edge regime")]
    WrongRegime,
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind, cap_k: u32) -> AlgorithmConfig {
        AlgorithmConfig { kind, cap_k }
    }

    fn check_cap(&self, n: u32) -> Result<(), AlgorithmsError> {
        if self.cap_k == 0 || self.cap_k > n {
            return Err(AlgorithmsError::CapOutOfRange {
                cap_k: self.cap_k,
                n,
            });
        }
        Ok(())
    }
}

fn likes_raw(config: AlgorithmConfig, group_size: f64, n: f64) -> f64 {
    let k = f64::from(config.cap_k);
    match config.kind {
        AlgorithmKind::Ra => k * group_size / n,
        AlgorithmKind::Pvm => k.min(group_size),
    }
}

/// Like counts as used inside deviation comparisons. Under the
/// representative rule both candidates scale by the same `k / n`, which
/// cancels, so the comparison runs on raw group sizes; this keeps the
/// decision bit-identical to the uncapped engine and to the closed-form
/// conditions even when a group size sits exactly on a threshold.
fn decision_reaches(config: AlgorithmConfig, g0: f64, g_pole: f64) -> (f64, f64) {
    let k = f64::from(config.cap_k);
    match config.kind {
        AlgorithmKind::Ra => (g0, g_pole),
        AlgorithmKind::Pvm => (k.min(g0), k.min(g_pole)),
    }
}

/// Likes a post earns under the algorithm, given the societal group size of
/// the posted opinion.
pub fn likes_under(
    config: AlgorithmConfig,
    post_value: f64,
    society: &Society,
) -> Result<f64, AlgorithmsError> {
    config.check_cap(society.n() as u32)?;
    let idx = society
        .space()
        .index_of(post_value)
        .ok_or(AlgorithmsError::UnknownOpinion(post_value))?;
    Ok(likes_raw(
        config,
        f64::from(society.group_size_of(idx)),
        society.n() as f64,
    ))
}

/// Equilibrium posting counts for a three-opinion scenario under a capped
/// visibility algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmOutcome {
    pub c_minus: u32,
    pub c_zero: u32,
    pub c_plus: u32,
    pub kind: EquilibriumKind,
    /// Which agent type deviated from authentic posting, if any.
    pub deviated: Option<AgentType>,
}

/// Per-type best responses with algorithmic like counts in place of
/// representative audience reach; ties between the two poles split evenly
/// (the scenario guarantees an even neutral group).
pub fn equilibrium_under(
    config: AlgorithmConfig,
    s: &ThreeOpinionScenario,
) -> Result<AlgorithmOutcome, AlgorithmsError> {
    config.check_cap(s.n())?;
    let g0 = f64::from(s.g0());
    let g_pole = f64::from(s.g_pole());
    let wp = s.weights().w_pop();
    let wa = s.weights().w_align();
    let d = s.misalignment_cost();

    let (r_zero, r_pole) = decision_reaches(config, g0, g_pole);

    // Neutral agents: authentic vs either pole (the poles are symmetric, so
    // a strict preference for them is a two-way tie, split evenly).
    let neutral_deviates = s.g0() > 0 && (wp - d) * r_pole > (wp + wa) * r_zero;
    // Opinionated agents: authentic vs the neutral center vs the opposite
    // pole. The opposite pole pays (wp - 2d) on the same reach as authentic,
    // which (wp + wa) strictly dominates, so the binding comparison is the
    // center.
    let opinionated_deviates = s.g_pole() > 0 && (wp - d) * r_zero > (wp + wa) * r_pole;

    let (c_minus, c_zero, c_plus, kind, deviated) = if neutral_deviates {
        (
            s.g_pole() + s.g0() / 2,
            0,
            s.g_pole() + s.g0() / 2,
            EquilibriumKind::PeHighPol,
            Some(AgentType::Neutral),
        )
    } else if opinionated_deviates {
        (
            0,
            s.n(),
            0,
            EquilibriumKind::PeLowPol,
            Some(AgentType::Opinionated),
        )
    } else {
        (
            s.g_pole(),
            s.g0(),
            s.g_pole(),
            EquilibriumKind::AuthenticAll,
            None,
        )
    };
    Ok(AlgorithmOutcome {
        c_minus,
        c_zero,
        c_plus,
        kind,
        deviated,
    })
}

/// Platform neutral counts under both algorithms plus the strictness
/// verdict and the evaluated conditions behind it.
///
/// In high polarization "strict" means RA is strictly more polarized than
/// PVM (`c0_ra < c0_pvm`); in low polarization it means RA is strictly less
/// polarized (`c0_ra > c0_pvm`). The cap conditions are evaluated in
/// product form, `k * (wp - D) <= bound * (wp + wa)`, which agrees with the
/// quotient form whenever `wp > D` and stays meaningful when it is not.
pub fn compare_algorithms(
    s: &ThreeOpinionScenario,
    cap_k: u32,
) -> Result<AlgorithmComparison, AlgorithmsError> {
    let regime = s.regime();
    if regime == Regime::KnifeEdge {
        return Err(AlgorithmsError::WrongRegime);
    }
    let ra = equilibrium_under(AlgorithmConfig::new(AlgorithmKind::Ra, cap_k), s)?;
    let pvm = equilibrium_under(AlgorithmConfig::new(AlgorithmKind::Pvm, cap_k), s)?;

    let g0 = f64::from(s.g0());
    let g_pole = f64::from(s.g_pole());
    let k = f64::from(cap_k);
    let wp = s.weights().w_pop();
    let wa = s.weights().w_align();
    let d = s.misalignment_cost();

    // The deviation conditions reuse the exact expressions the equilibrium
    // computation compares, so verdict and conditions cannot drift apart at
    // boundary group sizes.
    let (conditions, strict) = match regime {
        Regime::HighPolarization => {
            let ra_dev = ThresholdComparison {
                name: "g0 < g_star (ra deviates)",
                lhs: (wp + wa) * g0,
                rhs: (wp - d) * g_pole,
                holds: s.g0() > 0 && (wp - d) * g_pole > (wp + wa) * g0,
            };
            // Cap bound k <= g0 (wp+wa)/(wp-D), in product form.
            let cap = ThresholdComparison {
                name: "k (wp - d) <= g0 (wp + wa)",
                lhs: k * (wp - d),
                rhs: g0 * (wp + wa),
                holds: k * (wp - d) <= g0 * (wp + wa),
            };
            let strict = ra_dev.holds && cap.holds;
            (vec![ra_dev, cap], strict)
        }
        Regime::LowPolarization => {
            let ra_dev = ThresholdComparison {
                name: "g0 > g_starstar (ra deviates)",
                lhs: (wp + wa) * g_pole,
                rhs: (wp - d) * g0,
                holds: s.g_pole() > 0 && (wp - d) * g0 > (wp + wa) * g_pole,
            };
            let cap = ThresholdComparison {
                name: "k (wp - d) <= g_pole (wp + wa)",
                lhs: k * (wp - d),
                rhs: g_pole * (wp + wa),
                holds: k * (wp - d) <= g_pole * (wp + wa),
            };
            let strict = ra_dev.holds && cap.holds;
            (vec![ra_dev, cap], strict)
        }
        Regime::KnifeEdge => unreachable!(),
    };

    Ok(AlgorithmComparison {
        c0_ra: ra.c0(),
        c0_pvm: pvm.c0(),
        strict,
        conditions,
    })
}

impl AlgorithmOutcome {
    pub fn c0(&self) -> u32 {
        self.c_zero
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmComparison {
    pub c0_ra: u32,
    pub c0_pvm: u32,
    pub strict: bool,
    pub conditions: Vec<ThresholdComparison>,
}

/// One row of a cap sweep: a neutral-group size, a cap, one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct CapSweepRow {
    pub g0: u32,
    pub cap_k: u32,
    pub kind: AlgorithmKind,
    pub outcome: Result<AlgorithmOutcome, String>,
}

/// Evaluates both algorithms over a `g0 x cap` grid, rows in grid order
/// (g0 outermost, then cap, RA before PVM) regardless of thread count.
pub fn cap_sweep(
    template: &ThreeOpinionScenario,
    g0_grid: &[u32],
    caps: &[u32],
) -> Vec<CapSweepRow> {
    let mut cells = Vec::new();
    for &g0 in g0_grid {
        for &cap_k in caps {
            for kind in [AlgorithmKind::Ra, AlgorithmKind::Pvm] {
                cells.push((g0, cap_k, kind));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(g0, cap_k, kind)| {
            let outcome = template
                .with_g0(g0)
                .map_err(|e| e.codes().join("+"))
                .and_then(|s| {
                    equilibrium_under(AlgorithmConfig::new(kind, cap_k), &s)
                        .map_err(|e| e.to_string())
                });
            CapSweepRow {
                g0,
                cap_k,
                kind,
                outcome,
            }
        })
        .collect()
}

pub const CAP_SWEEP_CSV_HEADER: &str = "g0,k,algorithm,c_minus,c_zero,c_plus,deviated_group";

pub fn cap_sweep_csv(rows: &[CapSweepRow]) -> String {
    let mut out = String::new();
    out.push_str(CAP_SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let fields = match &row.outcome {
            Ok(o) => vec![
                row.g0.to_string(),
                row.cap_k.to_string(),
                row.kind.as_str().to_string(),
                o.c_minus.to_string(),
                o.c_zero.to_string(),
                o.c_plus.to_string(),
                o.deviated
                    .map_or("none".to_string(), |t| t.as_str().to_string()),
            ],
            Err(code) => vec![
                row.g0.to_string(),
                row.cap_k.to_string(),
                row.kind.as_str().to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("error:{code}"),
            ],
        };
        out.push_str(&csv_line(&fields));
    }
    out
}

/// Expected per-type utilities when feeds themselves are assembled by the
/// PVM rule.
///
/// The visibility rule specifies who may see a given post, not the full feed
/// an agent receives; this accounting is one consistent completion of it and
/// is NOT part of the model's analyzed results. A viewer's feed contains
/// their own post plus the matching posts the algorithm routes to them: each
/// platform post with value equal to the viewer's opinion is visible to
/// `min(k, G_c)` of the `G_c` matching users, so a fraction
/// `min(k, G_c) / G_c` of those posts lands in the feed. Cross-type
/// visibility is zero, so misaligned exposure can only come from the
/// viewer's own deviating post.
pub fn experimental_pvm_feed_utilities(
    cap_k: u32,
    s: &ThreeOpinionScenario,
) -> Result<crate::welfare::TypeUtilities, AlgorithmsError> {
    let config = AlgorithmConfig::new(AlgorithmKind::Pvm, cap_k);
    let outcome = equilibrium_under(config, s)?;
    let h = s.weights().baseline();
    let wp = s.weights().w_pop();
    let wa = s.weights().w_align();
    let d = s.misalignment_cost();
    let n = f64::from(s.n());
    let g0 = f64::from(s.g0());
    let g_pole = f64::from(s.g_pole());

    // Platform post counts by value index (-b, 0, +b) and the post each
    // type makes. The two poles are symmetric, so the deviating neutral is
    // evaluated at +b without loss of generality.
    let group_of = [g_pole, g0, g_pole];
    let (c_by_value, neutral_post, opinionated_post) = match outcome.kind {
        EquilibriumKind::AuthenticAll => ([g_pole, g0, g_pole], 1usize, 2usize),
        EquilibriumKind::PeHighPol => ([g_pole + g0 / 2.0, 0.0, g_pole + g0 / 2.0], 2, 2),
        EquilibriumKind::PeLowPol => ([0.0, n, 0.0], 1, 1),
    };
    let likes_of = |value_idx: usize| likes_raw(config, group_of[value_idx], n);

    let breakdown_for = |opinion_idx: usize, own_post_idx: usize| {
        let own_likes = likes_of(own_post_idx);
        let popularity = wp * own_likes;
        // A post matching this viewer reaches min(k, G) of the G matching
        // users, so a fraction likes/G of matching posts lands in the feed.
        let matched_likes = likes_of(opinion_idx);
        let visible_fraction = if group_of[opinion_idx] > 0.0 {
            matched_likes / group_of[opinion_idx]
        } else {
            0.0
        };
        let own_matches = own_post_idx == opinion_idx;
        let routed_posts = (c_by_value[opinion_idx] - if own_matches { 1.0 } else { 0.0 }).max(0.0)
            * visible_fraction;
        let own_aligned = if own_matches { wa * own_likes } else { 0.0 };
        let aligned = own_aligned + wa * routed_posts * matched_likes;
        // Cross-type visibility is zero, so the only possible misaligned
        // exposure is the agent's own deviating post.
        let own_distance = (opinion_idx as f64 - own_post_idx as f64).abs();
        let misaligned = d * own_distance * own_likes;
        crate::welfare::UtilityBreakdown {
            baseline: h,
            popularity,
            aligned,
            misaligned,
            total: h + popularity + aligned - misaligned,
            exposure_excl_self: aligned - own_aligned,
        }
    };
    Ok(crate::welfare::TypeUtilities {
        neutral: breakdown_for(1, neutral_post),
        opinionated: breakdown_for(2, opinionated_post),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opinion::{OpinionSpace, Society, ThreeOpinionScenario, UtilityWeights};

    fn fig_scenario(g0: u32) -> ThreeOpinionScenario {
        // w_dist * |b| = 1 with the baseline weights.
        let w = UtilityWeights::new(2.0, 1.0, 1.0).unwrap();
        ThreeOpinionScenario::new(100, g0, w, 1.0, 0.1).unwrap()
    }

    #[test]
    fn like_rules() {
        let space = OpinionSpace::new(1.0, vec![-1.0, 0.0, 1.0]).unwrap();
        let society = Society::from_group_sizes(space, vec![50, 10, 40]).unwrap();

        let pvm = AlgorithmConfig::new(AlgorithmKind::Pvm, 5);
        assert_eq!(likes_under(pvm, 0.0, &society).unwrap(), 5.0);

        let ra = AlgorithmConfig::new(AlgorithmKind::Ra, 60);
        assert_eq!(likes_under(ra, -1.0, &society).unwrap(), 30.0);

        let pvm = AlgorithmConfig::new(AlgorithmKind::Pvm, 60);
        assert_eq!(likes_under(pvm, 0.0, &society).unwrap(), 10.0);

        assert!(matches!(
            likes_under(pvm, 0.5, &society),
            Err(AlgorithmsError::UnknownOpinion(_))
        ));
        let too_big = AlgorithmConfig::new(AlgorithmKind::Ra, 101);
        assert!(matches!(
            likes_under(too_big, 0.0, &society),
            Err(AlgorithmsError::CapOutOfRange { .. })
        ));
    }

    #[test]
    fn ra_deviation_is_cap_independent() {
        for k in [5, 20, 60] {
            let out = equilibrium_under(
                AlgorithmConfig::new(AlgorithmKind::Ra, k),
                &fig_scenario(10),
            )
            .unwrap();
            assert_eq!(out.c_zero, 0);
            assert_eq!(out.deviated, Some(AgentType::Neutral));
        }
    }

    #[test]
    fn pvm_tight_cap_restores_authenticity() {
        let out = equilibrium_under(
            AlgorithmConfig::new(AlgorithmKind::Pvm, 5),
            &fig_scenario(10),
        )
        .unwrap();
        assert_eq!(out.c_zero, 10);
        assert_eq!(out.deviated, None);
    }

    #[test]
    fn pvm_slack_cap_brings_deviation_back() {
        let out = equilibrium_under(
            AlgorithmConfig::new(AlgorithmKind::Pvm, 60),
            &fig_scenario(10),
        )
        .unwrap();
        assert_eq!(out.c_zero, 0);
        assert_eq!(out.deviated, Some(AgentType::Neutral));
    }

    #[test]
    fn comparison_verdicts() {
        // High polarization, binding cap: strict.
        let cmp = compare_algorithms(&fig_scenario(10), 20).unwrap();
        assert_eq!((cmp.c0_ra, cmp.c0_pvm), (0, 10));
        assert!(cmp.strict);

        // Low polarization: RA pushes everyone to the center while a binding
        // cap keeps PVM authentic.
        let cmp = compare_algorithms(&fig_scenario(70), 20).unwrap();
        assert_eq!((cmp.c0_ra, cmp.c0_pvm), (100, 70));
        assert!(cmp.strict);

        // No deviation region under either algorithm: equality.
        let cmp = compare_algorithms(&fig_scenario(40), 20).unwrap();
        assert_eq!(cmp.c0_ra, cmp.c0_pvm);
        assert!(!cmp.strict);
    }

    #[test]
    fn pvm_cap_below_min_group_size_is_always_authentic() {
        for g0 in [4u32, 10, 40, 70, 96] {
            let s = fig_scenario(g0);
            let k = s.g0().min(s.g_pole()).max(1);
            let out = equilibrium_under(AlgorithmConfig::new(AlgorithmKind::Pvm, k), &s).unwrap();
            assert_eq!(out.deviated, None, "g0={g0} k={k}");
        }
    }

    #[test]
    fn pvm_with_full_cap_matches_ra_deviation_regions() {
        for g0 in (0..=100).step_by(2) {
            let s = fig_scenario(g0);
            let ra = equilibrium_under(AlgorithmConfig::new(AlgorithmKind::Ra, 100), &s).unwrap();
            let pvm = equilibrium_under(AlgorithmConfig::new(AlgorithmKind::Pvm, 100), &s).unwrap();
            assert_eq!(ra.deviated, pvm.deviated, "g0={g0}");
        }
    }

    #[test]
    fn experimental_pvm_feed_accounting() {
        // Authentic society under a binding cap: a neutral agent earns
        // min(5, 40) = 5 likes, sees 5/40 of the other 39 neutral posts, and
        // nothing misaligned ever reaches the feed.
        let s = fig_scenario(40);
        let u = experimental_pvm_feed_utilities(5, &s).unwrap();
        assert!((u.neutral.popularity - 10.0).abs() < 1e-12);
        let expected_aligned = 1.0 * 5.0 + 1.0 * (39.0 * (5.0 / 40.0)) * 5.0;
        assert!((u.neutral.aligned - expected_aligned).abs() < 1e-12);
        assert_eq!(u.neutral.misaligned, 0.0);
        assert_eq!(u.opinionated.misaligned, 0.0);

        // A slack cap brings the deviation back; the deviating neutral's own
        // pole post is their only misaligned exposure.
        let s = fig_scenario(10);
        let u = experimental_pvm_feed_utilities(60, &s).unwrap();
        let own_likes = 45.0; // min(60, g_pole)
        assert!((u.neutral.misaligned - 1.0 * own_likes).abs() < 1e-12);
        assert_eq!(u.neutral.aligned, 0.0);
    }

    #[test]
    fn cap_sweep_rows_are_in_grid_order() {
        let rows = cap_sweep(&fig_scenario(10), &[0, 2, 10], &[5, 60]);
        assert_eq!(rows.len(), 3 * 2 * 2);
        assert_eq!(
            (rows[0].g0, rows[0].cap_k, rows[0].kind),
            (0, 5, AlgorithmKind::Ra)
        );
        assert_eq!(
            (rows[1].g0, rows[1].cap_k, rows[1].kind),
            (0, 5, AlgorithmKind::Pvm)
        );
        assert_eq!(
            (rows[2].g0, rows[2].cap_k, rows[2].kind),
            (0, 60, AlgorithmKind::Ra)
        );
        let csv = cap_sweep_csv(&rows);
        assert!(csv.starts_with("g0,k,algorithm,"));
    }
}
