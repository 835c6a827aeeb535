//! Brute-force equilibrium verification on small explicit instances.
//!
//! The oracle enumerates every post profile over the realized set, derives
//! the dominant reactions, and keeps the profiles where no single agent can
//! strictly gain by switching to any realized opinion or to one off-menu
//! probe value. It evaluates the full utility definition with exact
//! set-based sums and never uses the decoupling argument the fast engine
//! relies on, so agreement between the two is a real check.
//!
//! Reactions are each viewer's dominant action, so checking on-path
//! reactions plus single post deviations is equivalent to checking every
//! subgame; `verify_retained_profiles` additionally confirms the dominance
//! by flipping individual reactions.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::equilibrium::{best_response, AudienceProfile};
use crate::opinion::{OpinionSpace, ThreeOpinionScenario, UtilityWeights};

/// Default ceiling on `n * k^n` before enumeration refuses to run.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration budget exceeded: n * k^n = {required} > {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("invalid explicit instance: {0}")]
    InvalidInstance(String),
    #[error("cannot downscale the scenario: {0}")]
    Downscale(String),
}

/// A small society with explicit directed follower sets and per-agent
/// weights, suitable for exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitInstance {
    space: OpinionSpace,
    opinions: Vec<f64>,
    opinion_idx: Vec<usize>,
    /// `followers[i]` lists the agents who see agent `i`'s post.
    followers: Vec<Vec<usize>>,
    /// `feed[i]` lists the agents whose posts agent `i` sees (excluding
    /// `i` itself, which is always self-exposed).
    feed: Vec<Vec<usize>>,
    weights: Vec<UtilityWeights>,
    budget: u64,
}

impl ExplicitInstance {
    pub fn new(
        intensity_b: f64,
        opinions: Vec<f64>,
        followers: Vec<Vec<usize>>,
        weights: Vec<UtilityWeights>,
    ) -> Result<Self, OracleError> {
        let n = opinions.len();
        if n == 0 {
            return Err(OracleError::InvalidInstance("no agents".into()));
        }
        if followers.len() != n || weights.len() != n {
            return Err(OracleError::InvalidInstance(format!(
                "expected {n} follower lists and weight sets, got {} and {}",
                followers.len(),
                weights.len()
            )));
        }
        let mut realized: Vec<f64> = opinions.clone();
        realized.sort_by(|x, y| x.partial_cmp(y).expect("finite opinions"));
        realized.dedup();
        let space = OpinionSpace::new(intensity_b, realized)
            .map_err(|e| OracleError::InvalidInstance(e.to_string()))?;
        let opinion_idx = opinions
            .iter()
            .map(|&op| space.index_of(op).expect("every opinion is realized"))
            .collect();
        let mut feed = vec![Vec::new(); n];
        for (author, list) in followers.iter().enumerate() {
            let mut seen = vec![false; n];
            for &viewer in list {
                if viewer >= n || viewer == author || seen[viewer] {
                    return Err(OracleError::InvalidInstance(format!(
                        "agent {author}'s follower list is out of range, self-referencing, \
                         or duplicated"
                    )));
                }
                seen[viewer] = true;
                feed[viewer].push(author);
            }
        }
        Ok(Self {
            space,
            opinions,
            opinion_idx,
            followers,
            feed,
            weights,
            budget: DEFAULT_ENUMERATION_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Builds an instance from a society paired with explicit-network
    /// exposure and homogeneous weights.
    pub fn from_society(
        society: &crate::opinion::Society,
        exposure: &crate::opinion::ExposureModel,
        weights: UtilityWeights,
    ) -> Result<Self, OracleError> {
        let crate::opinion::ExposureModel::ExplicitNetwork { followers } = exposure else {
            return Err(OracleError::InvalidInstance(
                "expected explicit-network exposure".into(),
            ));
        };
        let opinions: Vec<f64> = (0..society.n()).map(|i| society.agent_opinion(i)).collect();
        Self::new(
            society.space().intensity_b(),
            opinions,
            followers.clone(),
            vec![weights; society.n()],
        )
    }

    pub fn n(&self) -> usize {
        self.opinions.len()
    }

    pub fn space(&self) -> &OpinionSpace {
        &self.space
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn followers(&self) -> &[Vec<usize>] {
        &self.followers
    }

    pub fn weights(&self) -> &[UtilityWeights] {
        &self.weights
    }

    /// `n * k^n`, the enumeration budget measure.
    pub fn enumeration_cost(&self) -> u128 {
        let k = self.space.opinion_count() as u128;
        let mut pow: u128 = 1;
        for _ in 0..self.n() {
            pow = pow.saturating_mul(k);
        }
        (self.n() as u128).saturating_mul(pow)
    }

    fn check_budget(&self) -> Result<(), OracleError> {
        let required = self.enumeration_cost();
        if required > u128::from(self.budget) {
            return Err(OracleError::BudgetExceeded {
                required,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Likes agent `agent` receives for posting `post_value`: the number of
    /// their followers whose opinion matches it exactly.
    fn likes_for(&self, agent: usize, post_value: f64) -> f64 {
        self.followers[agent]
            .iter()
            .filter(|&&j| self.opinions[j] == post_value)
            .count() as f64
    }

    /// Utility of one agent under the full definition: baseline, popularity,
    /// and alignment/misalignment terms over the exposure set (self
    /// included), each scaled by the relevant post's like count.
    fn utility_of(&self, agent: usize, posts: &[f64], likes: &[f64]) -> f64 {
        let w = &self.weights[agent];
        let b_i = self.opinions[agent];
        let mut u = w.baseline() + w.w_pop() * likes[agent];
        for &j in std::iter::once(&agent).chain(self.feed[agent].iter()) {
            if posts[j] == b_i {
                u += w.w_align() * likes[j];
            } else {
                u -= w.w_dist() * likes[j] * (b_i - posts[j]).abs();
            }
        }
        u
    }

    fn likes_vector(&self, posts: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.likes_for(i, posts[i])).collect()
    }

    fn decode(&self, mut index: u64) -> Vec<u8> {
        let k = self.space.opinion_count() as u64;
        let mut profile = vec![0u8; self.n()];
        for slot in profile.iter_mut() {
            *slot = (index % k) as u8;
            index /= k;
        }
        profile
    }

    fn profile_values(&self, profile: &[u8]) -> Vec<f64> {
        profile
            .iter()
            .map(|&idx| self.space.realized()[idx as usize])
            .collect()
    }

    /// True iff no agent has a strictly profitable single deviation to a
    /// realized opinion or to the off-menu probe, with reactions re-derived
    /// for each candidate profile.
    fn is_equilibrium(&self, profile: &[u8], probe: f64) -> bool {
        let mut posts = self.profile_values(profile);
        let mut likes = self.likes_vector(&posts);
        for agent in 0..self.n() {
            let current_post = posts[agent];
            let current_likes = likes[agent];
            let u_current = self.utility_of(agent, &posts, &likes);
            let realized = self.space.realized();
            for candidate in realized.iter().copied().chain(std::iter::once(probe)) {
                if candidate == current_post {
                    continue;
                }
                posts[agent] = candidate;
                likes[agent] = self.likes_for(agent, candidate);
                let u_deviation = self.utility_of(agent, &posts, &likes);
                posts[agent] = current_post;
                likes[agent] = current_likes;
                if u_deviation > u_current {
                    return false;
                }
            }
        }
        true
    }
}

/// A value in the opinion space that nobody holds: any post with it earns
/// zero likes. The midpoint of the closest pair of realized opinions always
/// qualifies; a single-opinion set falls back to a midpoint against the
/// space boundary.
pub fn off_menu_probe(space: &OpinionSpace) -> f64 {
    let realized = space.realized();
    if realized.len() >= 2 {
        let mut best = (realized[0], realized[1]);
        for pair in realized.windows(2) {
            if pair[1] - pair[0] < best.1 - best.0 {
                best = (pair[0], pair[1]);
            }
        }
        (best.0 + best.1) / 2.0
    } else {
        let b = space.intensity_b();
        let candidates = [(realized[0] + b) / 2.0, (realized[0] - b) / 2.0, 0.0];
        candidates
            .into_iter()
            .find(|&c| space.index_of(c).is_none())
            .expect("a bounded space with one realized opinion has an off-menu value")
    }
}

/// The set of equilibrium post profiles, stored as opinion-index vectors in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumSet {
    profiles: BTreeSet<Vec<u8>>,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn contains(&self, profile: &[u8]) -> bool {
        self.profiles.contains(profile)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<u8>> {
        self.profiles.iter()
    }
}

/// Enumerates every profile over the realized set and retains the
/// equilibria. Partitioned across threads by profile index; the result is a
/// set, so the partitioning cannot affect it.
pub fn enumerate_equilibria(instance: &ExplicitInstance) -> Result<EquilibriumSet, OracleError> {
    instance.check_budget()?;
    let k = instance.space.opinion_count() as u64;
    let total: u64 = k.pow(instance.n() as u32);
    let probe = off_menu_probe(&instance.space);
    let profiles: BTreeSet<Vec<u8>> = (0..total)
        .into_par_iter()
        .filter_map(|index| {
            let profile = instance.decode(index);
            instance.is_equilibrium(&profile, probe).then_some(profile)
        })
        .collect();
    Ok(EquilibriumSet { profiles })
}

/// Utilities for an arbitrary post profile (values, not indices), with
/// reactions derived from exact opinion matching.
pub fn full_utility(instance: &ExplicitInstance, posts: &[f64]) -> Vec<f64> {
    assert_eq!(posts.len(), instance.n(), "one post per agent");
    let likes = instance.likes_vector(posts);
    (0..instance.n())
        .map(|i| instance.utility_of(i, posts, &likes))
        .collect()
}

/// Checks the retained profiles' reaction stage and the off-menu guarantee:
/// flipping any single like weakly (in fact strictly) decreases the
/// flipper's utility, and the probe never strictly improves any agent.
/// Returns human-readable violation descriptions, empty when clean.
pub fn verify_retained_profiles(instance: &ExplicitInstance, set: &EquilibriumSet) -> Vec<String> {
    let probe = off_menu_probe(&instance.space);
    let mut violations = Vec::new();
    for profile in set.iter() {
        let posts = instance.profile_values(profile);
        let mut likes = instance.likes_vector(&posts);
        for author in 0..instance.n() {
            for &viewer in &instance.followers[author] {
                // The viewer's equilibrium reaction is a like iff the post
                // matches their opinion; flipping it must not help them.
                let matches = posts[author] == instance.opinions[viewer];
                let u_before = instance.utility_of(viewer, &posts, &likes);
                likes[author] += if matches { -1.0 } else { 1.0 };
                let u_after = instance.utility_of(viewer, &posts, &likes);
                likes[author] += if matches { 1.0 } else { -1.0 };
                if u_after > u_before {
                    violations.push(format!(
                        "profile {profile:?}: viewer {viewer} gains by flipping their \
                         reaction to agent {author}'s post"
                    ));
                }
            }
        }
        let mut posts = posts;
        for agent in 0..instance.n() {
            let kept_post = posts[agent];
            let kept_likes = likes[agent];
            let u_current = instance.utility_of(agent, &posts, &likes);
            posts[agent] = probe;
            likes[agent] = instance.likes_for(agent, probe);
            let u_probe = instance.utility_of(agent, &posts, &likes);
            posts[agent] = kept_post;
            likes[agent] = kept_likes;
            if u_probe > u_current {
                violations.push(format!(
                    "profile {profile:?}: agent {agent} strictly gains from the off-menu \
                     probe {probe}"
                ));
            }
        }
    }
    violations
}

/// The equilibrium set the fast engine predicts for an explicit instance:
/// the Cartesian product of per-agent argmax sets computed from each agent's
/// actual per-opinion follower counts.
pub fn engine_predicted_set(instance: &ExplicitInstance) -> Result<EquilibriumSet, OracleError> {
    let space = &instance.space;
    let mut per_agent: Vec<Vec<u8>> = Vec::with_capacity(instance.n());
    for agent in 0..instance.n() {
        let mut counts = vec![0.0; space.opinion_count()];
        for &follower in &instance.followers[agent] {
            counts[instance.opinion_idx[follower]] += 1.0;
        }
        let audience = AudienceProfile::from_counts(counts)
            .map_err(|e| OracleError::InvalidInstance(e.to_string()))?;
        let br = best_response(
            space,
            instance.opinions[agent],
            &audience,
            &instance.weights[agent],
        )
        .map_err(|e| OracleError::InvalidInstance(format!("agent {agent}: {e}")))?;
        per_agent.push(br.argmax.iter().map(|&i| i as u8).collect());
    }
    let mut profiles = BTreeSet::new();
    let mut stack = vec![0usize; instance.n()];
    loop {
        profiles.insert(
            stack
                .iter()
                .enumerate()
                .map(|(agent, &choice)| per_agent[agent][choice])
                .collect::<Vec<u8>>(),
        );
        // Odometer increment over the per-agent argmax sets.
        let mut pos = instance.n();
        loop {
            if pos == 0 {
                return Ok(EquilibriumSet { profiles });
            }
            pos -= 1;
            stack[pos] += 1;
            if stack[pos] < per_agent[pos].len() {
                break;
            }
            stack[pos] = 0;
        }
    }
}

/// Outcome of checking the fast engine against the oracle on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidationReport {
    pub n: usize,
    pub group_sizes: Vec<(f64, u32)>,
    pub equilibria: usize,
    pub mismatches: Vec<String>,
    pub reaction_violations: Vec<String>,
}

impl CrossValidationReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.reaction_violations.is_empty()
    }
}

fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor().max(0.0) as u32
}

/// Downscales a three-opinion scenario to `small_n` agents and checks the
/// engine's predicted equilibrium set against brute-force enumeration.
///
/// Group sizes scale proportionally (largest-remainder on the poles), and
/// audiences become explicit follower sets of size `round(a * G_m)` per
/// group, rounded half up and clamped to the members actually available.
pub fn cross_validate(
    scenario: &ThreeOpinionScenario,
    small_n: u32,
) -> Result<CrossValidationReport, OracleError> {
    if small_n < 2 {
        return Err(OracleError::Downscale("need at least two agents".into()));
    }
    let scale = f64::from(small_n) / f64::from(scenario.n());
    let g0 = round_half_up(f64::from(scenario.g0()) * scale).min(small_n);
    let rest = small_n - g0;
    let g_minus = rest / 2;
    let g_plus = rest - g_minus;
    let b = scenario.intensity_b();

    let mut opinions = Vec::with_capacity(small_n as usize);
    opinions.extend(std::iter::repeat_n(-b, g_minus as usize));
    opinions.extend(std::iter::repeat_n(0.0, g0 as usize));
    opinions.extend(std::iter::repeat_n(b, g_plus as usize));

    let groups: Vec<(f64, u32)> = [(-b, g_minus), (0.0, g0), (b, g_plus)]
        .into_iter()
        .filter(|&(_, g)| g > 0)
        .collect();

    let n = small_n as usize;
    let mut followers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let a = scenario.density_a();
    for (agent, follower_list) in followers.iter_mut().enumerate() {
        for &(value, group_size) in &groups {
            let members: Vec<usize> = opinions
                .iter()
                .enumerate()
                .filter(|&(j, &op)| j != agent && op == value)
                .map(|(j, _)| j)
                .collect();
            let want = round_half_up(a * f64::from(group_size)).min(members.len() as u32);
            follower_list.extend(members.into_iter().take(want as usize));
        }
        if follower_list.is_empty() {
            return Err(OracleError::Downscale(format!(
                "agent {agent} would have no followers; increase small_n or the density"
            )));
        }
    }

    let weights = vec![*scenario.weights(); n];
    let instance = ExplicitInstance::new(b, opinions, followers, weights)?;
    let actual = enumerate_equilibria(&instance)?;
    let predicted = engine_predicted_set(&instance)?;
    let mismatches = describe_mismatches(&instance, &predicted, &actual);
    let reaction_violations = verify_retained_profiles(&instance, &actual);
    Ok(CrossValidationReport {
        n,
        group_sizes: groups,
        equilibria: actual.len(),
        mismatches,
        reaction_violations,
    })
}

fn describe_mismatches(
    instance: &ExplicitInstance,
    predicted: &EquilibriumSet,
    actual: &EquilibriumSet,
) -> Vec<String> {
    let mut out = Vec::new();
    let probe = off_menu_probe(&instance.space);
    for profile in predicted.iter() {
        if !actual.contains(profile) {
            // Find the profitable deviation the engine missed.
            let detail = (0..instance.n())
                .find_map(|agent| {
                    let mut posts = instance.profile_values(profile);
                    let mut likes = instance.likes_vector(&posts);
                    let u = instance.utility_of(agent, &posts, &likes);
                    for candidate in instance
                        .space
                        .realized()
                        .iter()
                        .copied()
                        .chain(std::iter::once(probe))
                    {
                        posts[agent] = candidate;
                        likes[agent] = instance.likes_for(agent, candidate);
                        if instance.utility_of(agent, &posts, &likes) > u {
                            return Some(format!("agent {agent} profits by posting {candidate}"));
                        }
                    }
                    None
                })
                .unwrap_or_else(|| "no profitable deviation found".into());
            out.push(format!(
                "engine predicts {profile:?} but the oracle rejects it ({detail})"
            ));
        }
    }
    for profile in actual.iter() {
        if !predicted.contains(profile) {
            out.push(format!(
                "oracle retains {profile:?} but the engine does not predict it"
            ));
        }
    }
    out
}

/// Random model-consistent instance: every realized opinion is held by at
/// least two agents and every agent has at least one follower from every
/// opinion group, matching the audience-positivity assumption. Weights are
/// quarter-integer valued so every payoff comparison is exact in floating
/// point.
pub fn random_instance(rng: &mut StdRng, max_n: usize, max_opinions: usize) -> ExplicitInstance {
    let k = rng.gen_range(1..=max_opinions.min(3)).min(max_n / 2).max(1);
    let n = rng.gen_range((2 * k).max(2)..=max_n);
    let values: Vec<f64> = match k {
        1 => vec![[-1.0, 0.0, 1.0][rng.gen_range(0..3)]],
        2 => {
            let pairs = [[-1.0, 0.0], [-1.0, 1.0], [0.0, 1.0]];
            pairs[rng.gen_range(0..3)].to_vec()
        }
        _ => vec![-1.0, 0.0, 1.0],
    };
    // Two agents per group, the rest assigned uniformly.
    let mut opinions = Vec::with_capacity(n);
    for &v in &values {
        opinions.push(v);
        opinions.push(v);
    }
    while opinions.len() < n {
        opinions.push(values[rng.gen_range(0..values.len())]);
    }
    opinions.shuffle(rng);

    let quarter = |rng: &mut StdRng| f64::from(rng.gen_range(1..=16)) * 0.25;
    let homogeneous = rng.gen_bool(0.5);
    let shared = UtilityWeights::new(quarter(rng), quarter(rng), quarter(rng)).unwrap();
    let weights: Vec<UtilityWeights> = (0..n)
        .map(|_| {
            if homogeneous {
                shared
            } else {
                UtilityWeights::new(quarter(rng), quarter(rng), quarter(rng)).unwrap()
            }
        })
        .collect();

    let mut followers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (agent, list) in followers.iter_mut().enumerate() {
        for &v in &values {
            let mut members: Vec<usize> =
                (0..n).filter(|&j| j != agent && opinions[j] == v).collect();
            members.shuffle(rng);
            let take = rng.gen_range(1..=members.len());
            list.extend(members.into_iter().take(take));
        }
        list.sort_unstable();
    }

    ExplicitInstance::new(1.0, opinions, followers, weights)
        .expect("randomly generated instances are well-formed")
}

/// Aggregate result of the randomized engine-vs-oracle suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub instances: usize,
    pub total_equilibria: usize,
    pub mismatches: Vec<String>,
    pub reaction_violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.reaction_violations.is_empty()
    }
}

/// Runs `count` random instances, comparing the engine's predicted set with
/// the enumerated one and verifying the retained profiles. Instances are
/// seeded individually, so the report does not depend on thread count.
type InstanceOutcome = Result<(usize, Vec<String>, Vec<String>), OracleError>;

pub fn random_suite(
    seed: u64,
    count: usize,
    max_n: usize,
    max_opinions: usize,
    budget: u64,
) -> Result<SuiteReport, OracleError> {
    let results: Vec<InstanceOutcome> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(i as u64));
            let instance = random_instance(&mut rng, max_n, max_opinions).with_budget(budget);
            let actual = enumerate_equilibria(&instance)?;
            let predicted = engine_predicted_set(&instance)?;
            let mut mismatches = describe_mismatches(&instance, &predicted, &actual);
            for m in &mut mismatches {
                *m = format!("instance {i}: {m}");
            }
            let mut violations = verify_retained_profiles(&instance, &actual);
            for v in &mut violations {
                *v = format!("instance {i}: {v}");
            }
            Ok((actual.len(), mismatches, violations))
        })
        .collect();
    let mut report = SuiteReport {
        instances: count,
        total_equilibria: 0,
        mismatches: Vec::new(),
        reaction_violations: Vec::new(),
    };
    for r in results {
        let (count_eq, mismatches, violations) = r?;
        report.total_equilibria += count_eq;
        report.mismatches.extend(mismatches);
        report.reaction_violations.extend(violations);
    }
    Ok(report)
}
