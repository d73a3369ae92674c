//! Discrete trace representation, per-user mobility-profile estimation and
//! the smoothed aggregate mobility model.

use crate::error::{Error, Result};
use crate::numeric::solve_stationary;
use crate::Scalar;

/// Dense, stable index into the location set of size `R`.
pub type LocationId = usize;
/// Index into the time-period set of size `T`.
pub type TimePeriod = usize;

/// A complete discrete trace: one location per slot, slots `0..L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub user: String,
    pub locations: Vec<LocationId>,
}

impl Trace {
    pub fn new(user: impl Into<String>, locations: Vec<LocationId>) -> Self {
        Self {
            user: user.into(),
            locations,
        }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// Maps slot indices to time periods. The default is a single period.
#[derive(Debug, Clone)]
pub enum PeriodMap {
    Single,
    /// Slot `t` belongs to `pattern[t % pattern.len()]`.
    Cyclic(Vec<TimePeriod>),
}

impl PeriodMap {
    pub fn single() -> Self {
        PeriodMap::Single
    }

    pub fn periods(&self) -> usize {
        match self {
            PeriodMap::Single => 1,
            PeriodMap::Cyclic(pattern) => pattern.iter().copied().max().unwrap_or(0) + 1,
        }
    }

    pub fn period_of(&self, slot: usize) -> TimePeriod {
        match self {
            PeriodMap::Single => 0,
            PeriodMap::Cyclic(pattern) => pattern[slot % pattern.len()],
        }
    }
}

/// Ground distance between locations.
#[derive(Debug, Clone)]
pub enum DistanceFunction {
    Hamming,
    /// Euclidean distance on planar coordinates, indexed by location.
    Euclidean(Vec<(Scalar, Scalar)>),
}

impl DistanceFunction {
    pub fn d(&self, r: LocationId, r2: LocationId) -> Scalar {
        match self {
            DistanceFunction::Hamming => {
                if r == r2 {
                    0.0
                } else {
                    1.0
                }
            }
            DistanceFunction::Euclidean(coords) => {
                let (x1, y1) = coords[r];
                let (x2, y2) = coords[r2];
                ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt()
            }
        }
    }
}

/// Per-user mobility profile: transition rows `p` over `(r, tau, tau')`
/// and visiting distributions `pi` per period. Rows with no observed
/// departure are kept as explicit `None` rather than invented.
#[derive(Debug, Clone)]
pub struct MobilityProfile {
    pub r: usize,
    pub t: usize,
    rows: Vec<Option<Vec<Scalar>>>,
    /// `(r, tau) ->` share of departures landing in each next period.
    period_next: Vec<Vec<Scalar>>,
    /// `tau -> ` visiting distribution over locations (normalized per period).
    pub visits: Vec<Vec<Scalar>>,
    /// Fraction of events falling in each period.
    pub period_weight: Vec<Scalar>,
}

impl MobilityProfile {
    fn row_index(&self, r: LocationId, tau: TimePeriod, tau2: TimePeriod) -> usize {
        (r * self.t + tau) * self.t + tau2
    }

    /// Next-location distribution conditioned on `(r, tau, tau')`, or
    /// `None` if no departure was observed.
    pub fn row(&self, r: LocationId, tau: TimePeriod, tau2: TimePeriod) -> Option<&[Scalar]> {
        self.rows[self.row_index(r, tau, tau2)].as_deref()
    }

    /// Joint weight `Pr(tau) * pi_tau(r) * p^{tau'}_{r,tau}` used as the
    /// expectation measure in the similarity metrics. Zero for empty rows.
    pub fn weight(&self, r: LocationId, tau: TimePeriod, tau2: TimePeriod) -> Scalar {
        self.period_weight[tau] * self.visits[tau][r] * self.period_next[r * self.t + tau][tau2]
    }

    pub fn same_shape(&self, other: &MobilityProfile) -> bool {
        self.r == other.r && self.t == other.t
    }

    /// Build a single-period profile from explicit parts. `rows[r]` is the
    /// next-location distribution out of `r`, or `None` when unobserved.
    pub fn from_single_period(
        visits: Vec<Scalar>,
        rows: Vec<Option<Vec<Scalar>>>,
    ) -> Result<MobilityProfile> {
        let r = visits.len();
        if rows.len() != r {
            return Err(Error::DimensionMismatch(format!(
                "{} transition rows for {} locations",
                rows.len(),
                r
            )));
        }
        for row in rows.iter().flatten() {
            if row.len() != r {
                return Err(Error::DimensionMismatch(
                    "transition row length != R".to_string(),
                ));
            }
        }
        let period_next = rows
            .iter()
            .map(|row| vec![if row.is_some() { 1.0 } else { 0.0 }])
            .collect();
        Ok(MobilityProfile {
            r,
            t: 1,
            rows,
            period_next,
            visits: vec![visits],
            period_weight: vec![1.0],
        })
    }
}

/// Maximum-likelihood profile estimation from a complete trace.
pub fn learn_profile(trace: &Trace, r: usize, period_map: &PeriodMap) -> Result<MobilityProfile> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace(trace.user.clone()));
    }
    for &loc in &trace.locations {
        if loc >= r {
            return Err(Error::LocationOutOfRange { index: loc, r });
        }
    }
    let t = period_map.periods();

    let mut visit_counts = vec![vec![0u64; r]; t];
    let mut period_counts = vec![0u64; t];
    for (slot, &loc) in trace.locations.iter().enumerate() {
        let tau = period_map.period_of(slot);
        visit_counts[tau][loc] += 1;
        period_counts[tau] += 1;
    }

    let mut trans_counts = vec![vec![0u64; r]; r * t * t];
    let mut next_period_counts = vec![vec![0u64; t]; r * t];
    for slot in 0..trace.len() - 1 {
        let tau = period_map.period_of(slot);
        let tau2 = period_map.period_of(slot + 1);
        let from = trace.locations[slot];
        let to = trace.locations[slot + 1];
        trans_counts[(from * t + tau) * t + tau2][to] += 1;
        next_period_counts[from * t + tau][tau2] += 1;
    }

    let visits = visit_counts
        .iter()
        .zip(&period_counts)
        .map(|(counts, &total)| {
            counts
                .iter()
                .map(|&c| {
                    if total > 0 {
                        c as Scalar / total as Scalar
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let total_events = trace.len() as Scalar;
    let period_weight = period_counts
        .iter()
        .map(|&c| c as Scalar / total_events)
        .collect();

    let rows = trans_counts
        .iter()
        .map(|counts| {
            let total: u64 = counts.iter().sum();
            if total == 0 {
                None
            } else {
                Some(counts.iter().map(|&c| c as Scalar / total as Scalar).collect())
            }
        })
        .collect();
    let period_next = next_period_counts
        .iter()
        .map(|counts| {
            let total: u64 = counts.iter().sum();
            counts
                .iter()
                .map(|&c| {
                    if total > 0 {
                        c as Scalar / total as Scalar
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    Ok(MobilityProfile {
        r,
        t,
        rows,
        period_next,
        visits,
        period_weight,
    })
}

/// Smoothed population model: every transition row is fully supported.
#[derive(Debug, Clone)]
pub struct AggregateModel {
    pub r: usize,
    pub t: usize,
    /// `(r, tau, tau') -> ` smoothed next-location distribution.
    p_bar: Vec<Vec<Scalar>>,
    /// `tau -> ` mean visiting distribution, renormalized.
    pi_bar: Vec<Vec<Scalar>>,
    pub epsilon: Scalar,
    pub distance: DistanceFunction,
}

impl AggregateModel {
    pub fn transition_row(&self, r: LocationId, tau: TimePeriod, tau2: TimePeriod) -> &[Scalar] {
        &self.p_bar[(r * self.t + tau) * self.t + tau2]
    }

    pub fn transition(
        &self,
        r: LocationId,
        tau: TimePeriod,
        tau2: TimePeriod,
        to: LocationId,
    ) -> Scalar {
        self.transition_row(r, tau, tau2)[to]
    }

    pub fn visit_row(&self, tau: TimePeriod) -> &[Scalar] {
        &self.pi_bar[tau]
    }

    pub fn visit(&self, tau: TimePeriod, r: LocationId) -> Scalar {
        self.pi_bar[tau][r]
    }

    /// Transition matrix for one period pair, rows by source location.
    pub fn transition_matrix(&self, tau: TimePeriod, tau2: TimePeriod) -> Vec<Vec<Scalar>> {
        (0..self.r)
            .map(|r| self.transition_row(r, tau, tau2).to_vec())
            .collect()
    }

    /// View the aggregate model as a fully-supported mobility profile, so
    /// that the similarity metrics apply to model pairs directly.
    pub fn as_profile(&self) -> MobilityProfile {
        let uniform_period = vec![1.0 / self.t as Scalar; self.t];
        MobilityProfile {
            r: self.r,
            t: self.t,
            rows: self.p_bar.iter().cloned().map(Some).collect(),
            period_next: vec![uniform_period.clone(); self.r * self.t],
            visits: self.pi_bar.clone(),
            period_weight: uniform_period,
        }
    }
}

/// Average the per-user profiles and smooth every transition row with a
/// distance-decaying floor: `(sum_u p + eps * max(1, d)^-2) / z`.
pub fn aggregate_model(
    profiles: &[MobilityProfile],
    distance: DistanceFunction,
    epsilon: Scalar,
) -> Result<AggregateModel> {
    if profiles.is_empty() {
        return Err(Error::NoProfiles);
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let r = profiles[0].r;
    let t = profiles[0].t;
    if profiles.iter().any(|p| !p.same_shape(&profiles[0])) {
        return Err(Error::DimensionMismatch(
            "profiles disagree on (R, T)".to_string(),
        ));
    }

    let mut p_bar = Vec::with_capacity(r * t * t);
    for from in 0..r {
        for tau in 0..t {
            for tau2 in 0..t {
                let mut row = vec![0.0; r];
                for profile in profiles {
                    if let Some(observed) = profile.row(from, tau, tau2) {
                        for (acc, &x) in row.iter_mut().zip(observed) {
                            *acc += x;
                        }
                    }
                }
                for (to, acc) in row.iter_mut().enumerate() {
                    *acc += epsilon * distance.d(from, to).max(1.0).powi(-2);
                }
                let z: Scalar = row.iter().sum();
                for acc in row.iter_mut() {
                    *acc /= z;
                }
                p_bar.push(row);
            }
        }
    }

    let mut pi_bar = Vec::with_capacity(t);
    for tau in 0..t {
        let mut row = vec![0.0; r];
        for profile in profiles {
            for (acc, &x) in row.iter_mut().zip(&profile.visits[tau]) {
                *acc += x;
            }
        }
        let z: Scalar = row.iter().sum();
        if z > 0.0 {
            for acc in row.iter_mut() {
                *acc /= z;
            }
        }
        pi_bar.push(row);
    }

    let model = AggregateModel {
        r,
        t,
        p_bar,
        pi_bar,
        epsilon,
        distance,
    };

    if t == 1 {
        if let Ok(stationary) = stationary_distribution(&model.transition_matrix(0, 0)) {
            let l1: Scalar = stationary
                .iter()
                .zip(model.visit_row(0))
                .map(|(a, b)| (a - b).abs())
                .sum();
            if l1 > 0.05 {
                log::warn!(
                    "aggregate visiting distribution disagrees with the chain's \
                     stationary distribution (L1 = {l1:.4})"
                );
            }
        }
    }

    Ok(model)
}

/// Stationary distribution of a row-stochastic matrix.
pub fn stationary_distribution(p_bar: &[Vec<Scalar>]) -> Result<Vec<Scalar>> {
    solve_stationary(p_bar)
}
