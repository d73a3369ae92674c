//! The three-part rejection test gating every generated fake: geographic
//! dissimilarity to the seed, zero (or bounded) slot-aligned intersection,
//! and plausible deniability against held-out alternate traces.

use crate::error::{Error, Result};
use crate::metrics::{geographic_similarity, semantic_similarity_order0};
use crate::mobility::{learn_profile, DistanceFunction, LocationId, MobilityProfile, PeriodMap, Trace};
use crate::Scalar;

/// Thresholds of the rejection test. Defaults are the tight operating
/// point: no intersection, both similarity bounds at 0.1, anonymity set 2.
#[derive(Debug, Clone)]
pub struct PrivacyParams {
    /// Geographic similarity threshold (fake vs seed must stay below).
    pub par_s: Scalar,
    /// Maximum tolerated slot-aligned intersection count.
    pub par_i: usize,
    /// Differential semantic similarity bound for deniability witnesses.
    pub par_d: Scalar,
    /// Anonymity set size; `k - 1` witnesses are required.
    pub k: usize,
    /// Score the geographic test as max of both directions instead of
    /// fake-to-seed only.
    pub geo_both_directions: bool,
}

impl Default for PrivacyParams {
    fn default() -> Self {
        PrivacyParams {
            par_s: 0.1,
            par_i: 0,
            par_d: 0.1,
            k: 2,
            geo_both_directions: false,
        }
    }
}

impl PrivacyParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.par_s) {
            return Err(Error::InvalidParameter(format!("par_s = {}", self.par_s)));
        }
        if !(0.0..=1.0).contains(&self.par_d) {
            return Err(Error::InvalidParameter(format!("par_d = {}", self.par_d)));
        }
        if self.k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    Geographic,
    Intersection,
    Deniability,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::Geographic => write!(f, "geographic"),
            FailureReason::Intersection => write!(f, "intersection"),
            FailureReason::Deniability => write!(f, "deniability"),
        }
    }
}

/// Outcome of one privacy test, with all three measurements reported even
/// on failure.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub sim_g: Scalar,
    pub intersection: usize,
    pub deniability_witnesses: usize,
    pub failure_reasons: Vec<FailureReason>,
}

/// Number of slots at which two equal-length traces coincide.
pub fn intersection(fake: &[LocationId], seed: &[LocationId]) -> Result<usize> {
    if fake.len() != seed.len() {
        return Err(Error::LengthMismatch(fake.len(), seed.len()));
    }
    Ok(fake.iter().zip(seed).filter(|(a, b)| a == b).count())
}

/// Reusable tester holding the alternate profiles for the deniability
/// check. Pure and stateless after construction.
pub struct PrivacyTester {
    pub params: PrivacyParams,
    r: usize,
    period_map: PeriodMap,
    alternate_profiles: Vec<MobilityProfile>,
}

impl PrivacyTester {
    pub fn new(
        params: PrivacyParams,
        r: usize,
        period_map: PeriodMap,
        alternates: &[Trace],
    ) -> Result<Self> {
        params.validate()?;
        if params.k >= 2 && alternates.is_empty() {
            return Err(Error::NoAlternates);
        }
        let alternate_profiles = alternates
            .iter()
            .map(|t| learn_profile(t, r, &period_map))
            .collect::<Result<_>>()?;
        Ok(PrivacyTester {
            params,
            r,
            period_map,
            alternate_profiles,
        })
    }

    pub fn test(&self, fake: &[LocationId], seed: &Trace) -> Result<Verdict> {
        let inter = intersection(fake, &seed.locations)?;
        let fake_profile = learn_profile(&Trace::new("fake", fake.to_vec()), self.r, &self.period_map)?;
        let seed_profile = learn_profile(seed, self.r, &self.period_map)?;

        let d = DistanceFunction::Hamming;
        let mut sim_g = geographic_similarity(&fake_profile, &seed_profile, &d)?.score;
        if self.params.geo_both_directions {
            sim_g = sim_g.max(geographic_similarity(&seed_profile, &fake_profile, &d)?.score);
        }

        let sim_s_seed = semantic_similarity_order0(&seed_profile, &fake_profile)?.score;
        let witnesses = self
            .alternate_profiles
            .iter()
            .map(|alt| semantic_similarity_order0(alt, &fake_profile))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .filter(|s| (sim_s_seed - s.score).abs() < self.params.par_d)
            .count();

        let mut failure_reasons = Vec::new();
        if sim_g >= self.params.par_s {
            failure_reasons.push(FailureReason::Geographic);
        }
        if inter > self.params.par_i {
            failure_reasons.push(FailureReason::Intersection);
        }
        if witnesses + 1 < self.params.k {
            failure_reasons.push(FailureReason::Deniability);
        }
        Ok(Verdict {
            passed: failure_reasons.is_empty(),
            sim_g,
            intersection: inter,
            deniability_witnesses: witnesses,
            failure_reasons,
        })
    }
}
