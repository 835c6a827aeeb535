//! Domain types shared across the crate: opinion spaces, societies, utility
//! weights, exposure structures, and the symmetric three-opinion scenario
//! with its validation rules.
//!
//! Opinion values are labels, not measurements: every lookup uses exact
//! equality after canonicalization to the realized list. Group sizes are
//! integers at the type level but all derived quantities (audiences, feed
//! compositions) are carried as reals so the closed-form algebra applies on
//! continuous parameter grids.

use thiserror::Error;

/// A bounded opinion space `[-b, +b]` together with the finite, strictly
/// increasing set of opinions actually held in society.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionSpace {
    intensity_b: f64,
    realized: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("topic intensity must be positive and finite, got {0}")]
    NonPositiveIntensity(f64),
    #[error("realized opinion set must not be empty")]
    EmptyRealizedSet,
    #[error("realized opinions must be finite and strictly increasing")]
    UnsortedRealizedSet,
    #[error("realized opinion {value} lies outside [-{intensity}, +{intensity}]")]
    OpinionOutOfRange { value: f64, intensity: f64 },
}

impl OpinionSpace {
    pub fn new(intensity_b: f64, realized: Vec<f64>) -> Result<Self, SpaceError> {
        if !(intensity_b.is_finite() && intensity_b > 0.0) {
            return Err(SpaceError::NonPositiveIntensity(intensity_b));
        }
        if realized.is_empty() {
            return Err(SpaceError::EmptyRealizedSet);
        }
        for pair in realized.windows(2) {
            if pair[1].partial_cmp(&pair[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(SpaceError::UnsortedRealizedSet);
            }
        }
        for &v in &realized {
            if !v.is_finite() {
                return Err(SpaceError::UnsortedRealizedSet);
            }
            if v.abs() > intensity_b {
                return Err(SpaceError::OpinionOutOfRange {
                    value: v,
                    intensity: intensity_b,
                });
            }
        }
        Ok(Self {
            intensity_b,
            realized,
        })
    }

    /// The space `{-b, 0, +b}` used by the three-opinion model.
    pub fn symmetric_three(intensity_b: f64) -> Result<Self, SpaceError> {
        Self::new(intensity_b, vec![-intensity_b, 0.0, intensity_b])
    }

    pub fn intensity_b(&self) -> f64 {
        self.intensity_b
    }

    pub fn realized(&self) -> &[f64] {
        &self.realized
    }

    pub fn opinion_count(&self) -> usize {
        self.realized.len()
    }

    /// Exact-equality lookup of a realized opinion.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.realized.iter().position(|&v| v == value)
    }

    /// Whether the realized set has the shape `{-x, 0, +x}`, which is the
    /// precondition for the platform-vs-society polarization comparison.
    pub fn is_symmetric_three(&self) -> bool {
        self.realized.len() == 3 && self.realized[1] == 0.0 && self.realized[0] == -self.realized[2]
    }
}

/// A population of agents with fixed opinions drawn from an [`OpinionSpace`].
///
/// Agents are identified by index. When built from group sizes the agents of
/// each opinion are contiguous, in realized order; `from_opinions` preserves
/// the caller's ordering instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Society {
    space: OpinionSpace,
    group_sizes: Vec<u32>,
    agent_opinion_idx: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SocietyError {
    #[error("expected {expected} group sizes (one per realized opinion), got {got}")]
    GroupCountMismatch { expected: usize, got: usize },
    #[error("every realized opinion must be held by at least one agent")]
    EmptyGroup,
    #[error("the number of realized opinions must be smaller than the number of agents")]
    TooFewAgents,
    #[error("opinion {0} is not in the realized set")]
    UnknownOpinion(f64),
}

impl Society {
    pub fn from_group_sizes(
        space: OpinionSpace,
        group_sizes: Vec<u32>,
    ) -> Result<Self, SocietyError> {
        if group_sizes.len() != space.opinion_count() {
            return Err(SocietyError::GroupCountMismatch {
                expected: space.opinion_count(),
                got: group_sizes.len(),
            });
        }
        if group_sizes.contains(&0) {
            return Err(SocietyError::EmptyGroup);
        }
        let n: u64 = group_sizes.iter().map(|&g| u64::from(g)).sum();
        if (space.opinion_count() as u64) >= n {
            return Err(SocietyError::TooFewAgents);
        }
        let mut agent_opinion_idx = Vec::with_capacity(n as usize);
        for (idx, &g) in group_sizes.iter().enumerate() {
            agent_opinion_idx.extend(std::iter::repeat_n(idx, g as usize));
        }
        Ok(Self {
            space,
            group_sizes,
            agent_opinion_idx,
        })
    }

    /// Builds a society from an explicit per-agent opinion list; the realized
    /// set of `space` must cover every opinion that appears.
    pub fn from_opinions(space: OpinionSpace, opinions: &[f64]) -> Result<Self, SocietyError> {
        let mut group_sizes = vec![0u32; space.opinion_count()];
        let mut agent_opinion_idx = Vec::with_capacity(opinions.len());
        for &op in opinions {
            let idx = space.index_of(op).ok_or(SocietyError::UnknownOpinion(op))?;
            group_sizes[idx] += 1;
            agent_opinion_idx.push(idx);
        }
        if group_sizes.contains(&0) {
            return Err(SocietyError::EmptyGroup);
        }
        if space.opinion_count() >= opinions.len() {
            return Err(SocietyError::TooFewAgents);
        }
        Ok(Self {
            space,
            group_sizes,
            agent_opinion_idx,
        })
    }

    pub fn n(&self) -> usize {
        self.agent_opinion_idx.len()
    }

    pub fn space(&self) -> &OpinionSpace {
        &self.space
    }

    pub fn group_sizes(&self) -> &[u32] {
        &self.group_sizes
    }

    pub fn group_size_of(&self, opinion_idx: usize) -> u32 {
        self.group_sizes[opinion_idx]
    }

    /// Per-agent opinion, as indices into the realized list.
    pub fn agent_opinion_indices(&self) -> &[usize] {
        &self.agent_opinion_idx
    }

    pub fn agent_opinion(&self, agent: usize) -> f64 {
        self.space.realized()[self.agent_opinion_idx[agent]]
    }
}

/// Positive utility weights for popularity, aligned exposure, and misaligned
/// exposure, plus the autarky baseline `H` (default 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    w_pop: f64,
    w_align: f64,
    w_dist: f64,
    baseline: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum WeightsError {
    #[error("utility weight {name} must be positive and finite, got {value}")]
    NonPositiveWeight { name: &'static str, value: f64 },
    #[error("baseline utility must be finite, got {0}")]
    NonFiniteBaseline(f64),
}

impl UtilityWeights {
    pub fn new(w_pop: f64, w_align: f64, w_dist: f64) -> Result<Self, WeightsError> {
        for (name, value) in [("w_pop", w_pop), ("w_align", w_align), ("w_dist", w_dist)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(WeightsError::NonPositiveWeight { name, value });
            }
        }
        Ok(Self {
            w_pop,
            w_align,
            w_dist,
            baseline: 0.0,
        })
    }

    pub fn with_baseline(mut self, baseline: f64) -> Result<Self, WeightsError> {
        if !baseline.is_finite() {
            return Err(WeightsError::NonFiniteBaseline(baseline));
        }
        self.baseline = baseline;
        Ok(self)
    }

    pub fn w_pop(&self) -> f64 {
        self.w_pop
    }

    pub fn w_align(&self) -> f64 {
        self.w_align
    }

    pub fn w_dist(&self) -> f64 {
        self.w_dist
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// The unit misalignment cost `D = w_dist * |b|`.
    pub fn misalignment_cost(&self, intensity_b: f64) -> f64 {
        self.w_dist * intensity_b
    }
}

/// How audiences and feeds are formed.
#[derive(Debug, Clone, PartialEq)]
pub enum ExposureModel {
    /// Audience and feed composition mirror societal opinion shares with
    /// density `a` in (0, 1).
    Representative { density_a: f64 },
    /// Capped representative visibility: a post is shown to `cap_k` users in
    /// representative proportions.
    Ra { cap_k: u32 },
    /// Capped post-viewer matching: a post is shown only to users whose own
    /// opinion equals the posted value, up to `cap_k` of them.
    Pvm { cap_k: u32 },
    /// Explicit directed follower sets; `followers[i]` lists the agents who
    /// see agent `i`'s post.
    ExplicitNetwork { followers: Vec<Vec<usize>> },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExposureError {
    #[error("representative density must lie strictly inside (0, 1), got {0}")]
    DensityOutOfRange(f64),
    #[error("visibility cap must be at least 1")]
    ZeroCap,
    #[error("agent {agent}'s follower list contains itself or a duplicate")]
    BadFollowerList { agent: usize },
}

impl ExposureModel {
    pub fn representative(density_a: f64) -> Result<Self, ExposureError> {
        if !(density_a.is_finite() && density_a > 0.0 && density_a < 1.0) {
            return Err(ExposureError::DensityOutOfRange(density_a));
        }
        Ok(Self::Representative { density_a })
    }

    pub fn ra(cap_k: u32) -> Result<Self, ExposureError> {
        if cap_k == 0 {
            return Err(ExposureError::ZeroCap);
        }
        Ok(Self::Ra { cap_k })
    }

    pub fn pvm(cap_k: u32) -> Result<Self, ExposureError> {
        if cap_k == 0 {
            return Err(ExposureError::ZeroCap);
        }
        Ok(Self::Pvm { cap_k })
    }

    pub fn explicit_network(followers: Vec<Vec<usize>>) -> Result<Self, ExposureError> {
        for (agent, list) in followers.iter().enumerate() {
            let mut seen = vec![false; followers.len()];
            for &f in list {
                if f == agent || f >= followers.len() || seen[f] {
                    return Err(ExposureError::BadFollowerList { agent });
                }
                seen[f] = true;
            }
        }
        Ok(Self::ExplicitNetwork { followers })
    }
}

/// Which side of the `G0 = n/3` boundary a three-opinion society falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Neutral agents are the smallest group (`G0 < n/3`).
    HighPolarization,
    /// Exactly `3 G0 = n`; the closed-form threshold machinery declines to
    /// classify this boundary, all deviation conditions being strict.
    KnifeEdge,
    /// Neutral agents are the largest group (`G0 > n/3`).
    LowPolarization,
}

impl Regime {
    pub fn of(n: u32, g0: u32) -> Regime {
        match (3 * u64::from(g0)).cmp(&u64::from(n)) {
            std::cmp::Ordering::Less => Regime::HighPolarization,
            std::cmp::Ordering::Equal => Regime::KnifeEdge,
            std::cmp::Ordering::Greater => Regime::LowPolarization,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::HighPolarization => "high_polarization",
            Regime::KnifeEdge => "knife_edge",
            Regime::LowPolarization => "low_polarization",
        }
    }
}

/// The kind of posting equilibrium a three-opinion scenario produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// Every agent posts authentically.
    AuthenticAll,
    /// Neutral agents post opinionated content, split evenly across the two
    /// poles; opinionated agents stay authentic.
    PeHighPol,
    /// Opinionated agents post neutral content; neutral agents stay
    /// authentic.
    PeLowPol,
}

impl EquilibriumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumKind::AuthenticAll => "authentic_all",
            EquilibriumKind::PeHighPol => "pe_high_pol",
            EquilibriumKind::PeLowPol => "pe_low_pol",
        }
    }
}

/// The two agent types of the three-opinion model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentType {
    Neutral,
    Opinionated,
}

impl AgentType {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentType::Neutral => "neutral",
            AgentType::Opinionated => "opinionated",
        }
    }
}

/// A single violated invariant found while validating a scenario.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum ScenarioViolation {
    #[error("population size n must be a positive even number")]
    OddPopulation,
    #[error("neutral group size g0 must be even")]
    OddNeutralGroup,
    #[error("neutral group size g0 must not exceed n")]
    NeutralGroupExceedsPopulation,
    #[error("representative density must lie strictly inside (0, 1)")]
    DensityOutOfRange,
    #[error("utility weights must be positive and finite")]
    NonPositiveWeight,
    #[error("topic intensity must be positive and finite")]
    NonPositiveIntensity,
}

/// Every invariant a candidate scenario violated, reported together.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    violations: Vec<ScenarioViolation>,
}

impl ValidationReport {
    pub fn violations(&self) -> &[ScenarioViolation] {
        &self.violations
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.violations.iter().map(violation_code).collect()
    }
}

fn violation_code(v: &ScenarioViolation) -> &'static str {
    match v {
        ScenarioViolation::OddPopulation => "odd_population",
        ScenarioViolation::OddNeutralGroup => "odd_neutral_group",
        ScenarioViolation::NeutralGroupExceedsPopulation => "neutral_group_exceeds_population",
        ScenarioViolation::DensityOutOfRange => "density_out_of_range",
        ScenarioViolation::NonPositiveWeight => "non_positive_weight",
        ScenarioViolation::NonPositiveIntensity => "non_positive_intensity",
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid scenario: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} ({})", violation_code(v), v)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// A symmetric three-opinion society `{-b, 0, +b}` with `G- = G+ = (n-g0)/2`,
/// homogeneous weights, and representative exposure density `a`.
///
/// Construction validates every invariant at once and reports all failures,
/// so `new` doubles as the scenario validator; it is pure and idempotent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeOpinionScenario {
    n: u32,
    g0: u32,
    weights: UtilityWeights,
    intensity_b: f64,
    density_a: f64,
}

impl ThreeOpinionScenario {
    pub fn new(
        n: u32,
        g0: u32,
        weights: UtilityWeights,
        intensity_b: f64,
        density_a: f64,
    ) -> Result<Self, ValidationReport> {
        let mut violations = Vec::new();
        if n == 0 || !n.is_multiple_of(2) {
            violations.push(ScenarioViolation::OddPopulation);
        }
        if !g0.is_multiple_of(2) {
            violations.push(ScenarioViolation::OddNeutralGroup);
        }
        if g0 > n {
            violations.push(ScenarioViolation::NeutralGroupExceedsPopulation);
        }
        if !(density_a.is_finite() && density_a > 0.0 && density_a < 1.0) {
            violations.push(ScenarioViolation::DensityOutOfRange);
        }
        // Weights arrive through `UtilityWeights::new`, but re-check here so a
        // scenario assembled from raw parts still fails closed.
        if !(weights.w_pop().is_finite() && weights.w_pop() > 0.0)
            || !(weights.w_align().is_finite() && weights.w_align() > 0.0)
            || !(weights.w_dist().is_finite() && weights.w_dist() > 0.0)
        {
            violations.push(ScenarioViolation::NonPositiveWeight);
        }
        if !(intensity_b.is_finite() && intensity_b > 0.0) {
            violations.push(ScenarioViolation::NonPositiveIntensity);
        }
        if violations.is_empty() {
            Ok(Self {
                n,
                g0,
                weights,
                intensity_b,
                density_a,
            })
        } else {
            Err(ValidationReport { violations })
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn g0(&self) -> u32 {
        self.g0
    }

    /// Size of each opinionated group, `(n - g0) / 2`.
    pub fn g_pole(&self) -> u32 {
        (self.n - self.g0) / 2
    }

    pub fn weights(&self) -> &UtilityWeights {
        &self.weights
    }

    pub fn intensity_b(&self) -> f64 {
        self.intensity_b
    }

    pub fn density_a(&self) -> f64 {
        self.density_a
    }

    /// The unit misalignment cost `D = w_dist * |b|`.
    pub fn misalignment_cost(&self) -> f64 {
        self.weights.misalignment_cost(self.intensity_b)
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.n, self.g0)
    }

    /// The scenario as a general society. Groups nobody holds (`g0 = 0` or
    /// `g0 = n`) are dropped: the realized set only contains opinions that
    /// are actually held, and posting an opinion nobody holds earns zero
    /// likes, so the equilibrium is unchanged.
    pub fn society(&self) -> Result<Society, SocietyError> {
        let b = self.intensity_b;
        let g_pole = self.g_pole();
        let mut realized = Vec::new();
        let mut sizes = Vec::new();
        if g_pole > 0 {
            realized.push(-b);
            sizes.push(g_pole);
        }
        if self.g0 > 0 {
            realized.push(0.0);
            sizes.push(self.g0);
        }
        if g_pole > 0 {
            realized.push(b);
            sizes.push(g_pole);
        }
        let space = OpinionSpace::new(b, realized).expect("scenario opinions are valid");
        Society::from_group_sizes(space, sizes)
    }

    pub fn with_g0(&self, g0: u32) -> Result<Self, ValidationReport> {
        Self::new(self.n, g0, self.weights, self.intensity_b, self.density_a)
    }

    pub fn with_density(&self, density_a: f64) -> Result<Self, ValidationReport> {
        Self::new(self.n, self.g0, self.weights, self.intensity_b, density_a)
    }

    pub fn with_w_pop(&self, w_pop: f64) -> Result<Self, ValidationReport> {
        let weights = UtilityWeights::new(w_pop, self.weights.w_align(), self.weights.w_dist())
            .map_err(|_| ValidationReport {
                violations: vec![ScenarioViolation::NonPositiveWeight],
            })?
            .with_baseline(self.weights.baseline())
            .expect("baseline already validated");
        Self::new(self.n, self.g0, weights, self.intensity_b, self.density_a)
    }

    pub fn with_intensity(&self, intensity_b: f64) -> Result<Self, ValidationReport> {
        Self::new(self.n, self.g0, self.weights, intensity_b, self.density_a)
    }

    /// Rescales `w_dist` so the unit misalignment cost equals `d` while the
    /// topic intensity stays fixed.
    pub fn with_misalignment_cost(&self, d: f64) -> Result<Self, ValidationReport> {
        let w_dist = d / self.intensity_b;
        let weights = UtilityWeights::new(self.weights.w_pop(), self.weights.w_align(), w_dist)
            .map_err(|_| ValidationReport {
                violations: vec![ScenarioViolation::NonPositiveWeight],
            })?
            .with_baseline(self.weights.baseline())
            .expect("baseline already validated");
        Self::new(self.n, self.g0, weights, self.intensity_b, self.density_a)
    }
}
