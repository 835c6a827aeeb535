//! Equilibrium reactions and posts for finite-opinion societies under
//! representative exposure.
//!
//! Backward induction pins the reaction stage first: a viewer likes a post
//! exactly when it matches their own opinion. Given that rule, an agent's
//! posting payoff depends only on their own post, so the pointwise
//! best response is the unique equilibrium posting rule and no iteration is
//! needed. Payoffs for a candidate post `c` are
//!
//! `A_c * (w_pop + w_align * 1{c = b_i} - w_dist * |b_i - c| * 1{c != b_i})`
//!
//! where `A_c` is the audience the agent reaches among holders of `c`.

use thiserror::Error;

use crate::opinion::{
    EquilibriumKind, ExposureModel, OpinionSpace, Society, ThreeOpinionScenario, UtilityWeights,
};

/// A viewer's reaction to a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    Like,
    NoReaction,
}

/// The dominant reaction: like iff the post matches the viewer's opinion
/// exactly.
pub fn reaction(viewer_opinion: f64, post_value: f64) -> Reaction {
    if post_value == viewer_opinion {
        Reaction::Like
    } else {
        Reaction::NoReaction
    }
}

/// One agent's audience reach per realized opinion. Counts are reals so the
/// representative fractions `a * G` carry through the algebra exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AudienceProfile {
    counts: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("audience counts must be finite and non-negative")]
    BadAudienceCounts,
    #[error("agent {agent} has no audience at all; posting payoffs are undefined")]
    EmptyAudience { agent: usize },
    #[error("candidate post {0} is not a realized opinion")]
    UnknownOpinion(f64),
    #[error("representative density must lie strictly inside (0, 1), got {0}")]
    DensityOutOfRange(f64),
    #[error("this engine only supports representative exposure")]
    NonRepresentativeExposure,
    #[error("expected one weight set per agent ({expected}), got {got}")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error(
        "a group of {group_size} agents holding {opinion} is indifferent between {options} \
         options; an even split is impossible in strict tie mode"
    )]
    OddIndifferentGroup {
        opinion: f64,
        group_size: usize,
        options: usize,
    },
}

impl AudienceProfile {
    /// Representative audiences `A_m = a * G_m` for one agent.
    pub fn representative(society: &Society, density_a: f64) -> Result<Self, EquilibriumError> {
        if !(density_a.is_finite() && density_a > 0.0 && density_a < 1.0) {
            return Err(EquilibriumError::DensityOutOfRange(density_a));
        }
        Ok(Self {
            counts: society
                .group_sizes()
                .iter()
                .map(|&g| density_a * f64::from(g))
                .collect(),
        })
    }

    /// Explicit per-opinion follower counts, e.g. from a concrete network.
    pub fn from_counts(counts: Vec<f64>) -> Result<Self, EquilibriumError> {
        if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(EquilibriumError::BadAudienceCounts);
        }
        Ok(Self { counts })
    }

    pub fn count_for(&self, opinion_idx: usize) -> f64 {
        self.counts[opinion_idx]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Posting payoff for one candidate: audience reach times the per-like value
/// of that content for this agent.
pub fn post_payoff(
    space: &OpinionSpace,
    agent_opinion: f64,
    candidate: f64,
    audience: &AudienceProfile,
    w: &UtilityWeights,
) -> Result<f64, EquilibriumError> {
    let idx = space
        .index_of(candidate)
        .ok_or(EquilibriumError::UnknownOpinion(candidate))?;
    let per_like = if candidate == agent_opinion {
        w.w_pop() + w.w_align()
    } else {
        w.w_pop() - w.w_dist() * (agent_opinion - candidate).abs()
    };
    Ok(audience.count_for(idx) * per_like)
}

/// The full argmax set of a posting problem, ties preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// Indices into the realized list, ascending. The authentic opinion is
    /// present whenever its payoff weakly dominates.
    pub argmax: Vec<usize>,
    pub payoff: f64,
}

pub fn best_response(
    space: &OpinionSpace,
    agent_opinion: f64,
    audience: &AudienceProfile,
    w: &UtilityWeights,
) -> Result<BestResponse, EquilibriumError> {
    if audience.total() <= 0.0 {
        return Err(EquilibriumError::EmptyAudience { agent: 0 });
    }
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for (idx, &candidate) in space.realized().iter().enumerate() {
        let payoff = post_payoff(space, agent_opinion, candidate, audience, w)?;
        if payoff > best {
            best = payoff;
            argmax.clear();
            argmax.push(idx);
        } else if payoff == best {
            argmax.push(idx);
        }
    }
    Ok(BestResponse {
        argmax,
        payoff: best,
    })
}

/// Per-agent expressed opinions plus a log of how ties were resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct PostProfile {
    posts: Vec<f64>,
    tie_break_log: Vec<TieBreak>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TieBreak {
    pub agent: usize,
    pub options: Vec<f64>,
    pub resolution: f64,
}

impl PostProfile {
    pub fn posts(&self) -> &[f64] {
        &self.posts
    }

    pub fn tie_break_log(&self) -> &[TieBreak] {
        &self.tie_break_log
    }
}

/// Platform polarization relative to society (three-opinion comparison:
/// strictly more polarized iff `C0 < G0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationOrder {
    MorePolarized,
    Equal,
    LessPolarized,
}

impl PolarizationOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolarizationOrder::MorePolarized => "more_polarized",
            PolarizationOrder::Equal => "equal",
            PolarizationOrder::LessPolarized => "less_polarized",
        }
    }
}

/// Group sizes on the platform, per-agent like counts, and the polarization
/// comparison when the space is a symmetric three-opinion one.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSummary {
    platform_sizes: Vec<u32>,
    likes: Vec<f64>,
    polarization_order: Option<PolarizationOrder>,
}

impl EquilibriumSummary {
    /// Platform group sizes, parallel to the realized list.
    pub fn platform_sizes(&self) -> &[u32] {
        &self.platform_sizes
    }

    pub fn count_for(&self, space: &OpinionSpace, opinion: f64) -> u32 {
        space
            .index_of(opinion)
            .map_or(0, |idx| self.platform_sizes[idx])
    }

    /// Likes each agent's post receives (audience reach among holders of the
    /// posted opinion).
    pub fn likes(&self) -> &[f64] {
        &self.likes
    }

    pub fn polarization_order(&self) -> Option<PolarizationOrder> {
        self.polarization_order
    }
}

/// How non-authentic ties are assigned.
///
/// An agent whose argmax set contains the authentic opinion always posts it:
/// every deviation condition in the model is a strict inequality. A group of
/// identical agents tied between non-authentic options is split evenly across
/// them. In strict mode a group that cannot split evenly is an error; in
/// lenient mode remainder agents go to the lower opinion values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TiePolicy {
    pub strict: bool,
}

impl Default for TiePolicy {
    fn default() -> Self {
        TiePolicy { strict: true }
    }
}

/// Homogeneous or per-agent utility weights.
#[derive(Debug, Clone, Copy)]
pub enum WeightAssignment<'a> {
    Homogeneous(&'a UtilityWeights),
    PerAgent(&'a [UtilityWeights]),
}

impl<'a> WeightAssignment<'a> {
    fn for_agent(&self, agent: usize) -> &'a UtilityWeights {
        match self {
            WeightAssignment::Homogeneous(w) => w,
            WeightAssignment::PerAgent(ws) => &ws[agent],
        }
    }
}

/// Computes the equilibrium post of every agent under representative
/// exposure, applying the even-split convention to indifferent groups.
///
/// Because posting payoffs decouple across agents, the per-agent argmax is
/// the unique equilibrium posting rule; the output does not depend on agent
/// processing order.
pub fn equilibrium_posts(
    society: &Society,
    weights: WeightAssignment<'_>,
    exposure: &ExposureModel,
    ties: TiePolicy,
) -> Result<(PostProfile, EquilibriumSummary), EquilibriumError> {
    let density_a = match exposure {
        ExposureModel::Representative { density_a } => *density_a,
        _ => return Err(EquilibriumError::NonRepresentativeExposure),
    };
    if let WeightAssignment::PerAgent(ws) = weights {
        if ws.len() != society.n() {
            return Err(EquilibriumError::WeightCountMismatch {
                expected: society.n(),
                got: ws.len(),
            });
        }
    }
    let space = society.space();
    let audience = AudienceProfile::representative(society, density_a)?;
    let n = society.n();

    // Per-agent argmax sets. Identical (opinion, weights) agents share one.
    let mut argmax_sets: Vec<Vec<usize>> = Vec::with_capacity(n);
    for agent in 0..n {
        let opinion = society.agent_opinion(agent);
        let w = weights.for_agent(agent);
        let br = best_response(space, opinion, &audience, w).map_err(|e| match e {
            EquilibriumError::EmptyAudience { .. } => EquilibriumError::EmptyAudience { agent },
            other => other,
        })?;
        argmax_sets.push(br.argmax);
    }

    let mut posts = vec![f64::NAN; n];
    let mut tie_break_log = Vec::new();

    // Agents with the authentic opinion in their argmax post it outright.
    // The rest form tie groups keyed by (opinion, argmax set) and are split
    // evenly across the tied options, lowest options filled first.
    let mut tie_groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for agent in 0..n {
        let opinion_idx = society.agent_opinion_indices()[agent];
        let argmax = &argmax_sets[agent];
        if argmax.contains(&opinion_idx) {
            posts[agent] = space.realized()[opinion_idx];
            if argmax.len() > 1 {
                tie_break_log.push(TieBreak {
                    agent,
                    options: argmax.iter().map(|&i| space.realized()[i]).collect(),
                    resolution: space.realized()[opinion_idx],
                });
            }
        } else if argmax.len() == 1 {
            posts[agent] = space.realized()[argmax[0]];
        } else {
            match tie_groups
                .iter_mut()
                .find(|(op, options, _)| *op == opinion_idx && options == argmax)
            {
                Some((_, _, members)) => members.push(agent),
                None => tie_groups.push((opinion_idx, argmax.clone(), vec![agent])),
            }
        }
    }

    for (opinion_idx, options, members) in &tie_groups {
        let t = options.len();
        let size = members.len();
        if ties.strict && size % t != 0 {
            return Err(EquilibriumError::OddIndifferentGroup {
                opinion: space.realized()[*opinion_idx],
                group_size: size,
                options: t,
            });
        }
        let base = size / t;
        let rem = size % t;
        let mut member_iter = members.iter().copied();
        for (slot, &option_idx) in options.iter().enumerate() {
            let take = base + usize::from(slot < rem);
            for agent in member_iter.by_ref().take(take) {
                let value = space.realized()[option_idx];
                posts[agent] = value;
                tie_break_log.push(TieBreak {
                    agent,
                    options: options.iter().map(|&i| space.realized()[i]).collect(),
                    resolution: value,
                });
            }
        }
    }
    tie_break_log.sort_by_key(|t| t.agent);

    let mut platform_sizes = vec![0u32; space.opinion_count()];
    let mut likes = Vec::with_capacity(n);
    for &post in &posts {
        let idx = space
            .index_of(post)
            .expect("every equilibrium post is a realized opinion");
        platform_sizes[idx] += 1;
        likes.push(audience.count_for(idx));
    }

    let polarization_order = if space.is_symmetric_three() {
        let c0 = platform_sizes[1];
        let g0 = society.group_sizes()[1];
        Some(match c0.cmp(&g0) {
            std::cmp::Ordering::Less => PolarizationOrder::MorePolarized,
            std::cmp::Ordering::Equal => PolarizationOrder::Equal,
            std::cmp::Ordering::Greater => PolarizationOrder::LessPolarized,
        })
    } else {
        None
    };

    Ok((
        PostProfile {
            posts,
            tie_break_log,
        },
        EquilibriumSummary {
            platform_sizes,
            likes,
            polarization_order,
        },
    ))
}

/// Equilibrium of a three-opinion scenario, reduced to the pole/neutral
/// counts used throughout the closed-form analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeOpinionOutcome {
    pub c_minus: u32,
    pub c_zero: u32,
    pub c_plus: u32,
    pub kind: EquilibriumKind,
    pub profile: PostProfile,
    pub summary: EquilibriumSummary,
}

impl ThreeOpinionOutcome {
    pub fn polarization_order(&self) -> PolarizationOrder {
        // Definition over C0 vs G0 also covers the degenerate g0 = 0 / g0 = n
        // societies whose realized set is smaller than three.
        self.summary
            .polarization_order()
            .unwrap_or(PolarizationOrder::Equal)
    }
}

pub fn three_opinion_equilibrium(
    s: &ThreeOpinionScenario,
    ties: TiePolicy,
) -> Result<ThreeOpinionOutcome, EquilibriumError> {
    let society = s.society().expect("validated scenario yields a society");
    let exposure = ExposureModel::Representative {
        density_a: s.density_a(),
    };
    let (profile, summary) = equilibrium_posts(
        &society,
        WeightAssignment::Homogeneous(s.weights()),
        &exposure,
        ties,
    )?;
    let space = society.space();
    let c_minus = summary.count_for(space, -s.intensity_b());
    let c_zero = summary.count_for(space, 0.0);
    let c_plus = summary.count_for(space, s.intensity_b());
    let kind = if c_zero < s.g0() {
        EquilibriumKind::PeHighPol
    } else if c_zero > s.g0() {
        EquilibriumKind::PeLowPol
    } else {
        EquilibriumKind::AuthenticAll
    };
    let mut outcome = ThreeOpinionOutcome {
        c_minus,
        c_zero,
        c_plus,
        kind,
        profile,
        summary,
    };
    // Restore the polarization comparison for the degenerate societies where
    // an unheld opinion was dropped from the realized set.
    if outcome.summary.polarization_order.is_none() {
        outcome.summary.polarization_order = Some(PolarizationOrder::Equal);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opinion::{OpinionSpace, Society, ThreeOpinionScenario, UtilityWeights};

    fn fig_weights() -> UtilityWeights {
        UtilityWeights::new(2.0, 1.0, 1.0).unwrap()
    }

    fn scenario(n: u32, g0: u32) -> ThreeOpinionScenario {
        ThreeOpinionScenario::new(n, g0, fig_weights(), 1.0, 0.1).unwrap()
    }

    #[test]
    fn reaction_is_exact_match() {
        assert_eq!(reaction(1.0, 1.0), Reaction::Like);
        assert_eq!(reaction(0.0, 1.0), Reaction::NoReaction);
        assert_eq!(reaction(-1.0, -1.0), Reaction::Like);
    }

    #[test]
    fn post_payoff_matches_hand_computations() {
        // Neutral agent tempted by a pole: payoff = A * (w_pop - D).
        let s = scenario(100, 10);
        let society = s.society().unwrap();
        let audience = AudienceProfile::representative(&society, 0.1).unwrap();
        let payoff = post_payoff(society.space(), 0.0, 1.0, &audience, s.weights()).unwrap();
        assert!((payoff - 4.5 * (2.0 - 1.0)).abs() < 1e-12);

        // Authentic post with ten matching followers: 10 * (3 + 1) = 40.
        let space = OpinionSpace::symmetric_three(1.0).unwrap();
        let audience = AudienceProfile::from_counts(vec![5.0, 2.0, 10.0]).unwrap();
        let w = UtilityWeights::new(3.0, 1.0, 1.0).unwrap();
        let payoff = post_payoff(&space, 1.0, 1.0, &audience, &w).unwrap();
        assert_eq!(payoff, 40.0);

        // Worked-example parameters: neutral deviating earns 4.5 * 1.5.
        let w = UtilityWeights::new(3.0, 1.0, 1.0).unwrap();
        let s = ThreeOpinionScenario::new(100, 10, w, 1.5, 0.1).unwrap();
        let society = s.society().unwrap();
        let audience = AudienceProfile::representative(&society, 0.1).unwrap();
        let payoff = post_payoff(society.space(), 0.0, 1.5, &audience, s.weights()).unwrap();
        assert!((payoff - 6.75).abs() < 1e-12);
    }

    #[test]
    fn post_payoff_rejects_unrealized_candidate() {
        let space = OpinionSpace::symmetric_three(1.0).unwrap();
        let audience = AudienceProfile::from_counts(vec![1.0, 1.0, 1.0]).unwrap();
        let err = post_payoff(&space, 0.0, 0.5, &audience, &fig_weights()).unwrap_err();
        assert_eq!(err, EquilibriumError::UnknownOpinion(0.5));
    }

    #[test]
    fn best_response_thresholds() {
        // Below the deviation threshold (~14.29) neutrals tie between poles.
        let s = scenario(100, 10);
        let society = s.society().unwrap();
        let audience = AudienceProfile::representative(&society, 0.1).unwrap();
        let br = best_response(society.space(), 0.0, &audience, s.weights()).unwrap();
        assert_eq!(br.argmax, vec![0, 2]);

        // Between the thresholds everyone is authentic.
        let s = scenario(100, 20);
        let society = s.society().unwrap();
        let audience = AudienceProfile::representative(&society, 0.1).unwrap();
        for opinion in [-1.0, 0.0, 1.0] {
            let br = best_response(society.space(), opinion, &audience, s.weights()).unwrap();
            assert_eq!(br.argmax, vec![society.space().index_of(opinion).unwrap()]);
        }

        // Beyond the unification threshold (60) a pole agent moderates.
        let s = scenario(100, 70);
        let society = s.society().unwrap();
        let audience = AudienceProfile::representative(&society, 0.1).unwrap();
        let br = best_response(society.space(), 1.0, &audience, s.weights()).unwrap();
        assert_eq!(br.argmax, vec![1]);
    }

    #[test]
    fn equilibrium_counts_across_regimes() {
        let out = three_opinion_equilibrium(&scenario(100, 10), TiePolicy::default()).unwrap();
        assert_eq!((out.c_minus, out.c_zero, out.c_plus), (50, 0, 50));
        assert_eq!(out.kind, EquilibriumKind::PeHighPol);
        assert_eq!(out.polarization_order(), PolarizationOrder::MorePolarized);

        let out = three_opinion_equilibrium(&scenario(100, 40), TiePolicy::default()).unwrap();
        assert_eq!((out.c_minus, out.c_zero, out.c_plus), (30, 40, 30));
        assert_eq!(out.kind, EquilibriumKind::AuthenticAll);

        let out = three_opinion_equilibrium(&scenario(100, 70), TiePolicy::default()).unwrap();
        assert_eq!((out.c_minus, out.c_zero, out.c_plus), (0, 100, 0));
        assert_eq!(out.kind, EquilibriumKind::PeLowPol);
        assert_eq!(out.polarization_order(), PolarizationOrder::LessPolarized);
    }

    #[test]
    fn equilibrium_likes_follow_audience_reach() {
        let out = three_opinion_equilibrium(&scenario(100, 10), TiePolicy::default()).unwrap();
        // Every post sits on a pole held by 45 agents; likes = 0.1 * 45.
        for &r in out.summary.likes() {
            assert!((r - 4.5).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_tie_group_errors_in_strict_mode_and_splits_leniently() {
        // One lone neutral agent tied between the poles.
        let space = OpinionSpace::symmetric_three(1.0).unwrap();
        let society = Society::from_group_sizes(space, vec![5, 1, 5]).unwrap();
        let w = UtilityWeights::new(4.0, 1.0, 1.0).unwrap();
        let exposure = ExposureModel::representative(0.5).unwrap();

        let err = equilibrium_posts(
            &society,
            WeightAssignment::Homogeneous(&w),
            &exposure,
            TiePolicy { strict: true },
        )
        .unwrap_err();
        assert!(matches!(err, EquilibriumError::OddIndifferentGroup { .. }));

        let (profile, summary) = equilibrium_posts(
            &society,
            WeightAssignment::Homogeneous(&w),
            &exposure,
            TiePolicy { strict: false },
        )
        .unwrap();
        // The remainder agent goes to the lower opinion value.
        assert_eq!(profile.posts()[5], -1.0);
        assert_eq!(summary.platform_sizes(), &[6, 0, 5]);
        assert_eq!(profile.tie_break_log().len(), 1);
    }

    #[test]
    fn heterogeneous_weights_are_applied_per_agent() {
        let space = OpinionSpace::symmetric_three(1.0).unwrap();
        let society = Society::from_group_sizes(space, vec![45, 10, 45]).unwrap();
        let exposure = ExposureModel::representative(0.1).unwrap();
        // Popularity-hungry neutrals deviate; a content one stays put.
        let hungry = UtilityWeights::new(2.0, 1.0, 1.0).unwrap();
        let content = UtilityWeights::new(1.0, 1.0, 1.0).unwrap();
        let mut per_agent = vec![hungry; 100];
        per_agent[45] = content;
        let (profile, summary) = equilibrium_posts(
            &society,
            WeightAssignment::PerAgent(&per_agent),
            &exposure,
            TiePolicy { strict: false },
        )
        .unwrap();
        assert_eq!(profile.posts()[45], 0.0);
        assert_eq!(summary.platform_sizes()[1], 1);
    }

    #[test]
    fn non_representative_exposure_is_rejected() {
        let s = scenario(100, 10);
        let society = s.society().unwrap();
        let err = equilibrium_posts(
            &society,
            WeightAssignment::Homogeneous(s.weights()),
            &ExposureModel::Ra { cap_k: 5 },
            TiePolicy::default(),
        )
        .unwrap_err();
        assert_eq!(err, EquilibriumError::NonRepresentativeExposure);
    }
}
