//! Location-based-service scenario: a user exposes slots with probability
//! beta, hiding the true location among the fakes' locations; the
//! adversary runs a maximum-likelihood localization over the candidate
//! sets. Privacy is the adversary's miss rate, utility cost is the number
//! of distinct locations (and semantic classes) sent per exposed slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::generator::{sample_by_likelihood, FakeTrace};
use crate::mobility::{AggregateModel, LocationId, MobilityProfile, PeriodMap, Trace};
use crate::numeric::{mat_mul, mat_pow};
use crate::semantics::SemanticClasses;
use crate::Scalar;

/// What the adversary observes: for each exposed slot, the deduplicated
/// set of locations sent (true location plus one per fake trace).
#[derive(Debug, Clone)]
pub struct ExposureRecord {
    /// Trace length the record was drawn from.
    pub l: usize,
    /// `(slot, candidate set)` sorted by slot; sets sorted and deduplicated.
    pub slots: Vec<(usize, Vec<LocationId>)>,
}

/// Per-run attack outcome.
#[derive(Debug, Clone)]
pub struct AttackResult {
    /// Fraction of exposed slots where the adversary's guess misses.
    pub privacy: Scalar,
    /// Mean distinct locations sent per exposed slot.
    pub diversity_overhead: Scalar,
    /// Mean distinct semantic classes sent per exposed slot.
    pub semantic_overhead: Scalar,
}

/// Expose each slot independently with probability `beta`; the exposed
/// set is the true location plus the fakes' locations at that slot.
pub fn expose(
    truth: &Trace,
    fakes: &[Vec<LocationId>],
    beta: Scalar,
    rng: &mut impl Rng,
) -> Result<ExposureRecord> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta}")));
    }
    for fake in fakes {
        if fake.len() != truth.len() {
            return Err(Error::LengthMismatch(fake.len(), truth.len()));
        }
    }
    let mut slots = Vec::new();
    for (t, &loc) in truth.locations.iter().enumerate() {
        if rng.gen_bool(beta) {
            let mut set: BTreeSet<LocationId> = fakes.iter().map(|f| f[t]).collect();
            set.insert(loc);
            slots.push((t, set.into_iter().collect()));
        }
    }
    Ok(ExposureRecord {
        l: truth.len(),
        slots,
    })
}

/// Maximum-likelihood path through the exposed candidate sets under the
/// aggregate model. Gaps between exposed slots are marginalized exactly by
/// raising the transition matrix to the gap length.
pub fn localization_attack(
    record: &ExposureRecord,
    model: &AggregateModel,
    period_map: &PeriodMap,
) -> Result<Vec<LocationId>> {
    if record.slots.is_empty() {
        return Ok(Vec::new());
    }
    for (t, set) in &record.slots {
        if set.is_empty() {
            return Err(Error::EmptySlot(*t));
        }
    }

    // effective transition across a gap: product of the per-step matrices
    // (a plain matrix power in the single-period case)
    let gap_matrix = |from_slot: usize, to_slot: usize| -> Vec<Vec<Scalar>> {
        if model.t == 1 {
            mat_pow(
                &model.transition_matrix(0, 0),
                (to_slot - from_slot) as u32,
            )
        } else {
            let mut m = model.transition_matrix(
                period_map.period_of(from_slot),
                period_map.period_of(from_slot + 1),
            );
            for s in from_slot + 1..to_slot {
                let step =
                    model.transition_matrix(period_map.period_of(s), period_map.period_of(s + 1));
                m = mat_mul(&m, &step);
            }
            m
        }
    };

    let (t0, first_set) = &record.slots[0];
    let mut score: Vec<Scalar> = first_set
        .iter()
        .map(|&x| model.visit(period_map.period_of(*t0), x).ln())
        .collect();
    let mut backptr: Vec<Vec<usize>> = Vec::new();
    for w in record.slots.windows(2) {
        let (prev_t, prev_set) = &w[0];
        let (cur_t, cur_set) = &w[1];
        let m = gap_matrix(*prev_t, *cur_t);
        let mut next_score = Vec::with_capacity(cur_set.len());
        let mut next_back = Vec::with_capacity(cur_set.len());
        for &x in cur_set {
            let mut best = Scalar::NEG_INFINITY;
            let mut best_prev = 0;
            for (i, &y) in prev_set.iter().enumerate() {
                let s = score[i] + m[y][x].ln();
                if s > best {
                    best = s;
                    best_prev = i;
                }
            }
            next_score.push(best);
            next_back.push(best_prev);
        }
        score = next_score;
        backptr.push(next_back);
    }

    let n = record.slots.len();
    let mut idx = score
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("comparable scores"))
        .map(|(i, _)| i)
        .expect("nonempty slot");
    let mut path = vec![0usize; n];
    path[n - 1] = idx;
    for i in (1..n).rev() {
        idx = backptr[i - 1][idx];
        path[i - 1] = idx;
    }
    Ok(path
        .iter()
        .enumerate()
        .map(|(i, &j)| record.slots[i].1[j])
        .collect())
}

/// Score one attack run against the ground truth.
pub fn score_attack(
    record: &ExposureRecord,
    inferred: &[LocationId],
    truth: &Trace,
    classes: &SemanticClasses,
) -> Result<AttackResult> {
    if inferred.len() != record.slots.len() {
        return Err(Error::LengthMismatch(inferred.len(), record.slots.len()));
    }
    if record.slots.is_empty() {
        return Ok(AttackResult {
            privacy: 0.0,
            diversity_overhead: 1.0,
            semantic_overhead: 1.0,
        });
    }
    let n = record.slots.len() as Scalar;
    let misses = record
        .slots
        .iter()
        .zip(inferred)
        .filter(|((t, _), &guess)| guess != truth.locations[*t])
        .count();
    let diversity: Scalar = record.slots.iter().map(|(_, set)| set.len() as Scalar).sum();
    let semantic: Scalar = record
        .slots
        .iter()
        .map(|(_, set)| {
            set.iter()
                .map(|&x| classes.class_of(x))
                .collect::<BTreeSet<_>>()
                .len() as Scalar
        })
        .sum();
    Ok(AttackResult {
        privacy: misses as Scalar / n,
        diversity_overhead: diversity / n,
        semantic_overhead: semantic / n,
    })
}

/// The four reference fake generators from the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Each slot i.i.d. uniform over the location set.
    UniformIid,
    /// Each slot i.i.d. from the aggregate visiting distribution.
    AggregateIid,
    /// Markov chain sampled from the aggregate model.
    RwAggregate,
    /// Markov chain sampled from the user's own profile.
    RwUser,
}

fn sample_categorical(weights: &[Scalar], rng: &mut impl Rng) -> usize {
    let total: Scalar = weights.iter().sum();
    let mut draw = rng.gen_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if draw < w {
            return i;
        }
        draw -= w;
    }
    weights.len() - 1
}

/// Sample `n` baseline fakes of length `l`. `profile` is required for the
/// user random walk; dead-end rows there fall back to a uniform step.
pub fn baseline_fakes(
    kind: BaselineKind,
    model: &AggregateModel,
    profile: Option<&MobilityProfile>,
    l: usize,
    n: usize,
    period_map: &PeriodMap,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<LocationId>>> {
    if l == 0 {
        return Err(Error::EmptyTrace("baseline length 0".to_string()));
    }
    if kind == BaselineKind::RwUser && profile.is_none() {
        return Err(Error::InvalidParameter(
            "user random walk requires the user's profile".to_string(),
        ));
    }
    let r = model.r;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut fake = Vec::with_capacity(l);
        match kind {
            BaselineKind::UniformIid => {
                for _ in 0..l {
                    fake.push(rng.gen_range(0..r));
                }
            }
            BaselineKind::AggregateIid => {
                for t in 0..l {
                    fake.push(sample_categorical(
                        model.visit_row(period_map.period_of(t)),
                        rng,
                    ));
                }
            }
            BaselineKind::RwAggregate => {
                let mut state = sample_categorical(model.visit_row(period_map.period_of(0)), rng);
                fake.push(state);
                for t in 1..l {
                    let row = model.transition_row(
                        state,
                        period_map.period_of(t - 1),
                        period_map.period_of(t),
                    );
                    state = sample_categorical(row, rng);
                    fake.push(state);
                }
            }
            BaselineKind::RwUser => {
                let p = profile.expect("checked above");
                let mut state = sample_categorical(&p.visits[period_map.period_of(0)], rng);
                fake.push(state);
                for t in 1..l {
                    let tau = period_map.period_of(t - 1);
                    let tau2 = period_map.period_of(t);
                    state = match p.row(state, tau, tau2) {
                        Some(row) => sample_categorical(row, rng),
                        None => {
                            log::debug!("dead-end row at location {state}; uniform fallback");
                            rng.gen_range(0..r)
                        }
                    };
                    fake.push(state);
                }
            }
        }
        out.push(fake);
    }
    Ok(out)
}

/// How the user's decoys are produced in a scenario run.
pub enum FakeMethod<'a> {
    /// Likelihood-weighted sampling from a generated pool.
    Pool(&'a [FakeTrace]),
    Baseline(BaselineKind),
}

impl FakeMethod<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            FakeMethod::Pool(_) => "ours",
            FakeMethod::Baseline(BaselineKind::UniformIid) => "uniform_iid",
            FakeMethod::Baseline(BaselineKind::AggregateIid) => "aggregate_iid",
            FakeMethod::Baseline(BaselineKind::RwAggregate) => "rw_aggregate",
            FakeMethod::Baseline(BaselineKind::RwUser) => "rw_user",
        }
    }
}

/// Per-user scenario summary, averaged over trials.
#[derive(Debug, Clone)]
pub struct ScenarioRow {
    pub user: String,
    pub privacy: Scalar,
    pub diversity_overhead: Scalar,
    pub semantic_overhead: Scalar,
}

/// Run `trials` independent expose-and-attack rounds for every user and
/// report per-user means. Trials run on split RNG streams keyed by
/// `(user, trial)`, so results do not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn run_scenario(
    truths: &[Trace],
    model: &AggregateModel,
    method: &FakeMethod<'_>,
    num_fakes: usize,
    beta: Scalar,
    trials: usize,
    classes: &SemanticClasses,
    period_map: &PeriodMap,
    rng_seed: u64,
) -> Result<Vec<ScenarioRow>> {
    if truths.is_empty() {
        return Err(Error::NoProfiles);
    }
    truths
        .par_iter()
        .enumerate()
        .map(|(ui, truth)| -> Result<ScenarioRow> {
            let pool: Vec<FakeTrace> = match method {
                FakeMethod::Pool(pool) => {
                    let mine: Vec<FakeTrace> = pool
                        .iter()
                        .filter(|f| f.seed_user == truth.user)
                        .cloned()
                        .collect();
                    if mine.is_empty() && num_fakes > 0 {
                        return Err(Error::Corpus(format!(
                            "no pool fakes for user '{}'",
                            truth.user
                        )));
                    }
                    mine
                }
                FakeMethod::Baseline(_) => Vec::new(),
            };
            let own_profile = match method {
                FakeMethod::Baseline(BaselineKind::RwUser) => {
                    Some(crate::mobility::learn_profile(truth, model.r, period_map)?)
                }
                _ => None,
            };

            let mut sums = AttackResult {
                privacy: 0.0,
                diversity_overhead: 0.0,
                semantic_overhead: 0.0,
            };
            for trial in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
                rng.set_stream(((ui as u64) << 32) | trial as u64);
                let fakes: Vec<Vec<LocationId>> = match method {
                    FakeMethod::Pool(_) => (0..num_fakes)
                        .map(|_| sample_by_likelihood(&pool, &mut rng).map(|f| f.locations.clone()))
                        .collect::<Result<_>>()?,
                    FakeMethod::Baseline(kind) => baseline_fakes(
                        *kind,
                        model,
                        own_profile.as_ref(),
                        truth.len(),
                        num_fakes,
                        period_map,
                        &mut rng,
                    )?,
                };
                let record = expose(truth, &fakes, beta, &mut rng)?;
                let inferred = localization_attack(&record, model, period_map)?;
                let result = score_attack(&record, &inferred, truth, classes)?;
                sums.privacy += result.privacy;
                sums.diversity_overhead += result.diversity_overhead;
                sums.semantic_overhead += result.semantic_overhead;
            }
            let n = trials as Scalar;
            Ok(ScenarioRow {
                user: truth.user.clone(),
                privacy: sums.privacy / n,
                diversity_overhead: sums.diversity_overhead / n,
                semantic_overhead: sums.semantic_overhead / n,
            })
        })
        .collect()
}
