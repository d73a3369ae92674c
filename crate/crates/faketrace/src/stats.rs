//! Dataset-publishing utility statistics: how closely a published fake
//! corpus tracks the real corpus in spatial allocation, per-user time
//! allocation, aggregate-model similarity, and pairwise-similarity shape.

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{geographic_similarity, mallows_hamming};
use crate::mobility::{AggregateModel, DistanceFunction, Trace};
use crate::numeric::{kl_divergence_raw, pearson};
use crate::Scalar;

/// A popularity-sorted discrete distribution (over locations, or over
/// users' rank shares).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDistribution {
    pub probabilities: Vec<Scalar>,
}

/// Visit counts per location across all traces, sorted descending and
/// normalized. `top_m` restricts to the most popular locations before
/// normalizing.
pub fn spatial_allocation(
    dataset: &[Trace],
    r: usize,
    top_m: Option<usize>,
) -> Result<AllocationDistribution> {
    if dataset.is_empty() {
        return Err(Error::Corpus("empty dataset".to_string()));
    }
    let mut counts = vec![0u64; r];
    for trace in dataset {
        for &loc in &trace.locations {
            if loc >= r {
                return Err(Error::LocationOutOfRange { index: loc, r });
            }
            counts[loc] += 1;
        }
    }
    counts.sort_unstable_by(|a, b| b.cmp(a));
    if let Some(m) = top_m {
        counts.truncate(m);
    }
    let total: u64 = counts.iter().sum();
    Ok(AllocationDistribution {
        probabilities: counts.iter().map(|&c| c as Scalar / total as Scalar).collect(),
    })
}

/// KL divergence after flooring zeros in both distributions and
/// renormalizing. Natural log.
pub fn kl_divergence(
    p: &AllocationDistribution,
    q: &AllocationDistribution,
    floor: Scalar,
) -> Result<Scalar> {
    if p.probabilities.len() != q.probabilities.len() {
        return Err(Error::DimensionMismatch(format!(
            "supports of size {} and {}",
            p.probabilities.len(),
            q.probabilities.len()
        )));
    }
    if floor <= 0.0 {
        return Err(Error::InvalidParameter(format!("floor = {floor}")));
    }
    let floored = |xs: &[Scalar]| -> Vec<Scalar> {
        let raised: Vec<Scalar> = xs.iter().map(|&x| if x == 0.0 { floor } else { x }).collect();
        let z: Scalar = raised.iter().sum();
        raised.into_iter().map(|x| x / z).collect()
    };
    Ok(kl_divergence_raw(
        &floored(&p.probabilities),
        &floored(&q.probabilities),
    ))
}

/// Per-user rank shares: `shares[k]` lists, per user, the fraction of time
/// spent at their `(k+1)`-th most visited location.
fn rank_shares(dataset: &[Trace], r: usize, top_k: usize) -> Result<Vec<Vec<Scalar>>> {
    if top_k < 1 {
        return Err(Error::InvalidParameter("top_k must be >= 1".to_string()));
    }
    if dataset.is_empty() {
        return Err(Error::Corpus("empty dataset".to_string()));
    }
    let mut shares = vec![Vec::with_capacity(dataset.len()); top_k];
    for trace in dataset {
        if trace.is_empty() {
            return Err(Error::EmptyTrace(trace.user.clone()));
        }
        let mut counts = vec![0u64; r];
        for &loc in &trace.locations {
            if loc >= r {
                return Err(Error::LocationOutOfRange { index: loc, r });
            }
            counts[loc] += 1;
        }
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let distinct = counts.iter().filter(|&&c| c > 0).count();
        if distinct < top_k {
            log::debug!(
                "user '{}' visited only {distinct} locations; ranks padded to {top_k}",
                trace.user
            );
        }
        let total = trace.len() as Scalar;
        for k in 0..top_k {
            shares[k].push(counts.get(k).copied().unwrap_or(0) as Scalar / total);
        }
    }
    Ok(shares)
}

/// Time-allocation distributions, one per popularity rank: the across-user
/// distribution of time shares at that rank, normalized over users.
pub fn time_allocation(
    dataset: &[Trace],
    r: usize,
    top_k: usize,
) -> Result<Vec<AllocationDistribution>> {
    let shares = rank_shares(dataset, r, top_k)?;
    Ok(shares.into_iter().map(normalize_rank).collect())
}

fn normalize_rank(shares: Vec<Scalar>) -> AllocationDistribution {
    let z: Scalar = shares.iter().sum();
    AllocationDistribution {
        probabilities: if z > 0.0 {
            shares.into_iter().map(|x| x / z).collect()
        } else {
            shares
        },
    }
}

/// Baseline where every user splits time evenly over their visited
/// locations (the same share at every rank they actually have).
pub fn uniform_time_allocation(
    dataset: &[Trace],
    r: usize,
    top_k: usize,
) -> Result<Vec<AllocationDistribution>> {
    if top_k < 1 {
        return Err(Error::InvalidParameter("top_k must be >= 1".to_string()));
    }
    let mut shares = vec![Vec::with_capacity(dataset.len()); top_k];
    for trace in dataset {
        let mut seen = vec![false; r];
        for &loc in &trace.locations {
            if loc >= r {
                return Err(Error::LocationOutOfRange { index: loc, r });
            }
            seen[loc] = true;
        }
        let distinct = seen.iter().filter(|&&s| s).count();
        for (k, rank) in shares.iter_mut().enumerate() {
            rank.push(if k < distinct { 1.0 / distinct as Scalar } else { 0.0 });
        }
    }
    Ok(shares.into_iter().map(normalize_rank).collect())
}

/// Baseline where every user's time shares over their visited locations
/// are drawn uniformly at random (flat Dirichlet via normalized
/// exponentials), then rank-sorted.
pub fn random_time_allocation(
    dataset: &[Trace],
    r: usize,
    top_k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<AllocationDistribution>> {
    if top_k < 1 {
        return Err(Error::InvalidParameter("top_k must be >= 1".to_string()));
    }
    let mut shares = vec![Vec::with_capacity(dataset.len()); top_k];
    for trace in dataset {
        let mut seen = vec![false; r];
        for &loc in &trace.locations {
            if loc >= r {
                return Err(Error::LocationOutOfRange { index: loc, r });
            }
            seen[loc] = true;
        }
        let distinct = seen.iter().filter(|&&s| s).count();
        let mut draws: Vec<Scalar> = (0..distinct)
            .map(|_| -(rng.gen_range(0.0f64..1.0).max(1e-300)).ln())
            .collect();
        let z: Scalar = draws.iter().sum();
        for d in draws.iter_mut() {
            *d /= z;
        }
        draws.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        for (k, rank) in shares.iter_mut().enumerate() {
            rank.push(draws.get(k).copied().unwrap_or(0.0));
        }
    }
    Ok(shares.into_iter().map(normalize_rank).collect())
}

/// Mean / median / standard deviation of a sample.
#[derive(Debug, Clone, Copy)]
pub struct SummaryStats {
    pub mean: Scalar,
    pub median: Scalar,
    pub std: Scalar,
}

pub fn summarize(values: &[Scalar]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len() as Scalar;
    let mean = values.iter().sum::<Scalar>() / n;
    let var = values.iter().map(|&x| (x - mean).powi(2)).sum::<Scalar>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    Ok(SummaryStats {
        mean,
        median,
        std: var.sqrt(),
    })
}

/// Similarity between the real aggregate model and each fake corpus's
/// aggregate model: the transition statistic is the geographic similarity
/// of the models viewed as profiles, the visiting statistic compares the
/// visiting distributions directly.
#[derive(Debug, Clone)]
pub struct AggregateSimilarityReport {
    pub transition: SummaryStats,
    pub visiting: SummaryStats,
    pub transition_scores: Vec<Scalar>,
    pub visiting_scores: Vec<Scalar>,
}

pub fn aggregate_similarity_report(
    real: &AggregateModel,
    fakes: &[AggregateModel],
) -> Result<AggregateSimilarityReport> {
    if fakes.is_empty() {
        return Err(Error::EmptySample);
    }
    let real_profile = real.as_profile();
    let mut transition_scores = Vec::with_capacity(fakes.len());
    let mut visiting_scores = Vec::with_capacity(fakes.len());
    for fake in fakes {
        if fake.r != real.r || fake.t != real.t {
            return Err(Error::DimensionMismatch(
                "aggregate models disagree on (R, T)".to_string(),
            ));
        }
        let sim = geographic_similarity(
            &fake.as_profile(),
            &real_profile,
            &DistanceFunction::Hamming,
        )?;
        transition_scores.push(sim.score);
        let mut visiting = 0.0;
        for tau in 0..real.t {
            visiting += 1.0 - mallows_hamming(fake.visit_row(tau), real.visit_row(tau))?;
        }
        visiting_scores.push(visiting / real.t as Scalar);
    }
    Ok(AggregateSimilarityReport {
        transition: summarize(&transition_scores)?,
        visiting: summarize(&visiting_scores)?,
        transition_scores,
        visiting_scores,
    })
}

/// Number of matched quantiles in the Q-Q statistic.
pub const QQ_QUANTILES: usize = 99;

/// Linear-interpolation quantile on a sorted sample.
fn quantile(sorted: &[Scalar], q: Scalar) -> Scalar {
    let pos = q * (sorted.len() - 1) as Scalar;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as Scalar;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Matched percentile pairs of two samples (1..=99).
pub fn qq_points(sample_a: &[Scalar], sample_b: &[Scalar]) -> Result<Vec<(Scalar, Scalar)>> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    Ok((1..=QQ_QUANTILES)
        .map(|i| {
            let q = i as Scalar / (QQ_QUANTILES + 1) as Scalar;
            (quantile(&a, q), quantile(&b, q))
        })
        .collect())
}

/// Pearson correlation of the matched quantiles of two samples.
pub fn qq_correlation(sample_a: &[Scalar], sample_b: &[Scalar]) -> Result<Scalar> {
    let points: Vec<(Scalar, Scalar)> = qq_points(sample_a, sample_b)?;
    let (xs, ys): (Vec<Scalar>, Vec<Scalar>) = points.into_iter().unzip();
    pearson(&xs, &ys)
}
