//! Synthetic corpus with planted semantic structure: every user realizes
//! the same role-level Markov chain (e.g. home/work/leisure) through their
//! own private locations, so users are semantically alike but
//! geographically disjoint, and the role labels give a clustering ground
//! truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::mobility::{stationary_distribution, Trace};
use crate::Scalar;

/// Parameters of the planted corpus.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub users: usize,
    pub roles: usize,
    pub trace_len: usize,
    /// Shared role-level transition matrix, `roles x roles`.
    pub role_transitions: Vec<Vec<Scalar>>,
    /// Per-slot probability of replacing the location by a uniform draw.
    pub noise: Scalar,
}

impl Default for SynthSpec {
    fn default() -> Self {
        // Three roles with clearly distinct occupancy levels, so the
        // per-role visiting masses are separable, and a skewed stationary
        // distribution (~0.70/0.23/0.07) so the corpus-wide location
        // popularity curve is heavy-headed like real mobility data.
        SynthSpec {
            users: 20,
            roles: 3,
            trace_len: 72,
            role_transitions: vec![
                vec![0.88, 0.08, 0.04],
                vec![0.25, 0.68, 0.07],
                vec![0.40, 0.25, 0.35],
            ],
            noise: 0.02,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.roles == 0 || self.trace_len == 0 {
            return Err(Error::InvalidParameter(
                "users, roles and trace_len must be positive".to_string(),
            ));
        }
        if self.role_transitions.len() != self.roles {
            return Err(Error::DimensionMismatch(format!(
                "{} transition rows for {} roles",
                self.role_transitions.len(),
                self.roles
            )));
        }
        for (i, row) in self.role_transitions.iter().enumerate() {
            if row.len() != self.roles {
                return Err(Error::DimensionMismatch(format!("row {i} length")));
            }
            if row.iter().any(|&x| x < 0.0) {
                return Err(Error::NegativeEntry(i));
            }
            let s: Scalar = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::NotStochastic(i, s));
            }
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidParameter(format!("noise = {}", self.noise)));
        }
        Ok(())
    }

    /// Total locations: one private location per user per role.
    pub fn r(&self) -> usize {
        self.users * self.roles
    }

    /// The private location of `user` for `role`.
    pub fn location_of(&self, user: usize, role: usize) -> usize {
        user * self.roles + role
    }
}

/// A planted corpus plus its ground truth: `role_of[loc]` is the role the
/// location was created for.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub role_of: Vec<usize>,
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

/// Generate the corpus. Each user's role sequence starts from the role
/// chain's stationary distribution and follows the shared chain; slots are
/// then corrupted to a uniformly random location with probability `noise`.
pub fn synth_corpus(spec: &SynthSpec, rng_seed: u64) -> Result<SynthCorpus> {
    spec.validate()?;
    let r = spec.r();
    let initial = stationary_distribution(&spec.role_transitions).unwrap_or_else(|_| {
        // reducible role chains are legal (e.g. absorbing roles)
        vec![1.0 / spec.roles as Scalar; spec.roles]
    });

    let mut traces = Vec::with_capacity(spec.users);
    for user in 0..spec.users {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(user as u64);
        let mut role = sample_categorical(&initial, &mut rng);
        let mut locations = Vec::with_capacity(spec.trace_len);
        for t in 0..spec.trace_len {
            if t > 0 {
                role = sample_categorical(&spec.role_transitions[role], &mut rng);
            }
            let loc = if spec.noise > 0.0 && rng.gen_bool(spec.noise) {
                rng.gen_range(0..r)
            } else {
                spec.location_of(user, role)
            };
            locations.push(loc);
        }
        traces.push(Trace::new(format!("user{user:02}"), locations));
    }

    let role_of = (0..r).map(|loc| loc % spec.roles).collect();
    Ok(SynthCorpus {
        corpus: Corpus::new(traces, Some(r))?,
        role_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_two_role_chain_alternates() {
        let spec = SynthSpec {
            users: 3,
            roles: 2,
            trace_len: 10,
            role_transitions: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            noise: 0.0,
        };
        let synth = synth_corpus(&spec, 7).unwrap();
        for (u, trace) in synth.corpus.traces.iter().enumerate() {
            let own = [spec.location_of(u, 0), spec.location_of(u, 1)];
            for w in trace.locations.windows(2) {
                assert!(own.contains(&w[0]));
                assert_ne!(w[0], w[1], "deterministic chain must alternate");
            }
        }
    }

    #[test]
    fn default_spec_shape_and_labels() {
        let spec = SynthSpec::default();
        let synth = synth_corpus(&spec, 42).unwrap();
        assert_eq!(synth.corpus.traces.len(), 20);
        assert_eq!(synth.corpus.r, 60);
        assert_eq!(synth.corpus.l, 72);
        assert_eq!(synth.role_of.len(), 60);
        for user in 0..20 {
            for role in 0..3 {
                assert_eq!(synth.role_of[spec.location_of(user, role)], role);
            }
        }
    }

    #[test]
    fn noiseless_users_stay_on_private_locations() {
        let spec = SynthSpec {
            noise: 0.0,
            ..SynthSpec::default()
        };
        let synth = synth_corpus(&spec, 1).unwrap();
        for (u, trace) in synth.corpus.traces.iter().enumerate() {
            for &loc in &trace.locations {
                assert_eq!(loc / spec.roles, u, "location {loc} is not user {u}'s");
            }
        }
    }

    #[test]
    fn noise_rate_is_roughly_respected() {
        let spec = SynthSpec {
            users: 20,
            trace_len: 500,
            ..SynthSpec::default()
        };
        let synth = synth_corpus(&spec, 3).unwrap();
        let mut off_role = 0usize;
        let mut total = 0usize;
        for (u, trace) in synth.corpus.traces.iter().enumerate() {
            for &loc in &trace.locations {
                total += 1;
                if loc / spec.roles != u {
                    off_role += 1;
                }
            }
        }
        // a noise draw lands on a foreign location w.p. (R - roles)/R
        let expected = spec.noise * (spec.r() - spec.roles) as Scalar / spec.r() as Scalar;
        let observed = off_role as Scalar / total as Scalar;
        assert!(
            (observed - expected).abs() < 0.01,
            "observed {observed}, expected {expected}"
        );
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = SynthSpec::default();
        let a = synth_corpus(&spec, 9).unwrap();
        let b = synth_corpus(&spec, 9).unwrap();
        assert_eq!(a.corpus, b.corpus);
        let c = synth_corpus(&spec, 10).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SynthSpec::default();
        spec.role_transitions[0][0] = 0.5;
        assert!(matches!(
            synth_corpus(&spec, 0),
            Err(Error::NotStochastic(0, _))
        ));
        let spec = SynthSpec {
            noise: 1.0,
            ..SynthSpec::default()
        };
        assert!(synth_corpus(&spec, 0).is_err());
    }
}
