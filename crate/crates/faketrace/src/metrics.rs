//! Mallows/EMD distance between distributions, and the geographic and
//! semantic similarity metrics between mobility profiles.

use crate::error::{Error, Result};
use crate::mobility::{DistanceFunction, MobilityProfile};
use crate::numeric::{max_weight_assignment, min_cost_transport};
use crate::Scalar;
use rand::Rng;

/// A bijection on the location set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &j in &map {
            if j >= n || seen[j] {
                return Err(Error::InvalidPermutation);
            }
            seen[j] = true;
        }
        Ok(Permutation(map))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn map(&self, r: usize) -> usize {
        self.0[r]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Which metric produced a [`SimilarityResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Geographic,
    SemanticOrder0,
    SemanticOrder1,
}

#[derive(Debug, Clone)]
pub struct SimilarityResult {
    pub score: Scalar,
    /// The optimizing location mapping; present for the semantic metrics.
    pub mapping: Option<Permutation>,
    pub kind: SimilarityKind,
}

fn validate_distribution(p: &[Scalar]) -> Result<()> {
    if let Some(i) = p.iter().position(|&x| x < 0.0) {
        return Err(Error::NegativeEntry(i));
    }
    let s: Scalar = p.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

/// Total variation distance; equals the hamming-ground Mallows distance for
/// normalized inputs, and is exactly zero on identical rows.
fn total_variation(p: &[Scalar], q: &[Scalar]) -> Scalar {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<Scalar>()
}

/// Mallows distance as a transportation linear program over couplings with
/// marginals `p` and `q`.
pub fn mallows_distance(p: &[Scalar], q: &[Scalar], d: &DistanceFunction) -> Result<Scalar> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    validate_distribution(p)?;
    validate_distribution(q)?;
    Ok(min_cost_transport(p, q, |i, j| d.d(i, j)))
}

/// Closed form of the Mallows distance for the hamming ground distance:
/// `1 - sum_i min(p_i, q_i)`.
pub fn mallows_hamming(p: &[Scalar], q: &[Scalar]) -> Result<Scalar> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    validate_distribution(p)?;
    validate_distribution(q)?;
    let s: Scalar = p.iter().zip(q).map(|(a, b)| a.min(*b)).sum();
    Ok((1.0 - s).clamp(0.0, 1.0))
}

/// Row-level Mallows distance used inside the similarity metrics. `None`
/// on the second profile's side means no observed departures: treated as
/// maximally dissimilar.
fn row_dissimilarity(
    u_row: &[Scalar],
    v_row: Option<&[Scalar]>,
    d: &DistanceFunction,
) -> Scalar {
    match v_row {
        None => 1.0,
        Some(v_row) => match d {
            DistanceFunction::Hamming => total_variation(u_row, v_row),
            other => min_cost_transport(u_row, v_row, |i, j| other.d(i, j)),
        },
    }
}

/// Expected Mallows distance of the next location, weighted by the first
/// profile's state distribution. Asymmetric.
pub fn geographic_similarity(
    u: &MobilityProfile,
    v: &MobilityProfile,
    d: &DistanceFunction,
) -> Result<SimilarityResult> {
    if !u.same_shape(v) {
        return Err(Error::DimensionMismatch(
            "profiles disagree on (R, T)".to_string(),
        ));
    }
    let mut dissim = 0.0;
    for r in 0..u.r {
        for tau in 0..u.t {
            for tau2 in 0..u.t {
                let w = u.weight(r, tau, tau2);
                if w == 0.0 {
                    continue;
                }
                let u_row = u
                    .row(r, tau, tau2)
                    .expect("positive weight implies an observed row");
                dissim += w * row_dissimilarity(u_row, v.row(r, tau, tau2), d);
            }
        }
    }
    Ok(SimilarityResult {
        score: (1.0 - dissim).clamp(0.0, 1.0),
        mapping: None,
        kind: SimilarityKind::Geographic,
    })
}

/// Zeroth-order semantic similarity: the visiting distributions are matched
/// under the best location permutation, solved exactly as a maximum-weight
/// bipartite assignment per time period.
pub fn semantic_similarity_order0(
    u: &MobilityProfile,
    v: &MobilityProfile,
) -> Result<SimilarityResult> {
    if !u.same_shape(v) {
        return Err(Error::DimensionMismatch(
            "profiles disagree on (R, T)".to_string(),
        ));
    }
    let r = u.r;
    let mut score = 1.0;
    let mut per_period: Vec<(Scalar, Permutation)> = Vec::new();
    for tau in 0..u.t {
        let weight = u.period_weight[tau];
        let pi_u = &u.visits[tau];
        let pi_v = &v.visits[tau];
        let w: Vec<Vec<Scalar>> = (0..r)
            .map(|i| (0..r).map(|j| pi_u[i].min(pi_v[j])).collect())
            .collect();
        let (perm, _) = max_weight_assignment(&w);
        let dissim =
            0.5 * (0..r).map(|i| (pi_u[i] - pi_v[perm[i]]).abs()).sum::<Scalar>();
        score -= weight * dissim;
        if weight > 0.0 {
            per_period.push((weight, Permutation(perm)));
        }
    }
    let mapping = combine_mappings(r, &per_period);
    Ok(SimilarityResult {
        score: score.clamp(0.0, 1.0),
        mapping: Some(mapping),
        kind: SimilarityKind::SemanticOrder0,
    })
}

/// Weighted majority vote per location over the per-period mappings, with
/// a greedy pass to restore bijectivity. With a single period this is just
/// that period's permutation.
fn combine_mappings(r: usize, per_period: &[(Scalar, Permutation)]) -> Permutation {
    if per_period.len() == 1 {
        return per_period[0].1.clone();
    }
    let mut votes = vec![vec![0.0 as Scalar; r]; r];
    for (weight, perm) in per_period {
        for i in 0..r {
            votes[i][perm.map(i)] += weight;
        }
    }
    let mut taken = vec![false; r];
    let mut map = vec![usize::MAX; r];
    for i in 0..r {
        let mut best = usize::MAX;
        let mut best_vote = -1.0;
        for j in 0..r {
            if !taken[j] && votes[i][j] > best_vote {
                best_vote = votes[i][j];
                best = j;
            }
        }
        map[i] = best;
        taken[best] = true;
    }
    Permutation(map)
}

/// Knobs for the first-order local search.
#[derive(Debug, Clone)]
pub struct AnnealOptions {
    /// Metropolis iterations; defaults to `200 * R^2` when `None`.
    pub iters: Option<usize>,
    pub t_start: Scalar,
    pub t_end: Scalar,
    /// Evaluate the objective exactly as printed in its source (both min
    /// arguments from the first profile) instead of the cross-profile form.
    pub printed_objective: bool,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions {
            iters: None,
            t_start: 1.0,
            t_end: 1e-3,
            printed_objective: false,
        }
    }
}

/// First-order semantic similarity score of a fixed permutation.
pub fn order1_score(
    u: &MobilityProfile,
    v: &MobilityProfile,
    sigma: &Permutation,
    printed_objective: bool,
) -> Scalar {
    let target = if printed_objective { u } else { v };
    let mut dissim = 0.0;
    for r in 0..u.r {
        for tau in 0..u.t {
            for tau2 in 0..u.t {
                let w = u.weight(r, tau, tau2);
                if w == 0.0 {
                    continue;
                }
                let u_row = u.row(r, tau, tau2).expect("weighted row observed");
                let m = match target.row(sigma.map(r), tau, tau2) {
                    None => 1.0,
                    Some(t_row) => {
                        0.5 * (0..u.r)
                            .map(|r2| (u_row[r2] - t_row[sigma.map(r2)]).abs())
                            .sum::<Scalar>()
                    }
                };
                dissim += w * m;
            }
        }
    }
    (1.0 - dissim).clamp(0.0, 1.0)
}

/// First-order semantic similarity via simulated annealing over the
/// permutation space with transposition moves, followed by a deterministic
/// 2-opt polish. The returned score is never below `sigma0`'s.
pub fn semantic_similarity_order1(
    u: &MobilityProfile,
    v: &MobilityProfile,
    sigma0: &Permutation,
    opts: &AnnealOptions,
    rng: &mut impl Rng,
) -> Result<SimilarityResult> {
    let (result, _) = semantic_similarity_order1_traced(u, v, sigma0, opts, rng)?;
    Ok(result)
}

/// As [`semantic_similarity_order1`] but also returns the best-so-far score
/// after each iteration (non-decreasing by construction).
pub fn semantic_similarity_order1_traced(
    u: &MobilityProfile,
    v: &MobilityProfile,
    sigma0: &Permutation,
    opts: &AnnealOptions,
    rng: &mut impl Rng,
) -> Result<(SimilarityResult, Vec<Scalar>)> {
    if !u.same_shape(v) {
        return Err(Error::DimensionMismatch(
            "profiles disagree on (R, T)".to_string(),
        ));
    }
    if sigma0.len() != u.r {
        return Err(Error::InvalidPermutation);
    }
    Permutation::new(sigma0.as_slice().to_vec())?;
    let iters = opts.iters.unwrap_or(200 * u.r * u.r).max(1);

    let score_of = |p: &Permutation| order1_score(u, v, p, opts.printed_objective);

    let mut current = sigma0.clone();
    let mut current_score = score_of(&current);
    let mut best = current.clone();
    let mut best_score = current_score;
    let mut history = Vec::with_capacity(iters);

    if u.r >= 2 {
        let ratio = opts.t_end / opts.t_start;
        for i in 0..iters {
            let frac = if iters > 1 {
                i as Scalar / (iters - 1) as Scalar
            } else {
                1.0
            };
            let temp = opts.t_start * ratio.powf(frac);
            let a = rng.gen_range(0..u.r);
            let mut b = rng.gen_range(0..u.r - 1);
            if b >= a {
                b += 1;
            }
            let mut candidate = current.clone();
            candidate.0.swap(a, b);
            let candidate_score = score_of(&candidate);
            let delta = candidate_score - current_score;
            if delta >= 0.0 || rng.gen::<Scalar>() < (delta / temp).exp() {
                current = candidate;
                current_score = candidate_score;
                if current_score > best_score {
                    best_score = current_score;
                    best = current.clone();
                }
            }
            history.push(best_score);
        }

        // deterministic 2-opt polish on the incumbent
        loop {
            let mut improved = false;
            for a in 0..u.r - 1 {
                for b in a + 1..u.r {
                    let mut candidate = best.clone();
                    candidate.0.swap(a, b);
                    let s = score_of(&candidate);
                    if s > best_score + 1e-15 {
                        best = candidate;
                        best_score = s;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
            history.push(best_score);
        }
    }

    Ok((
        SimilarityResult {
            score: best_score,
            mapping: Some(best),
            kind: SimilarityKind::SemanticOrder1,
        },
        history,
    ))
}

/// Order-0 score of the identity mapping; a lower bound for the optimized
/// semantic score.
pub fn identity_order0_score(u: &MobilityProfile, v: &MobilityProfile) -> Scalar {
    let mut score = 1.0;
    for tau in 0..u.t {
        let dissim = total_variation(&u.visits[tau], &v.visits[tau]);
        score -= u.period_weight[tau] * dissim;
    }
    score.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{learn_profile, PeriodMap, Trace};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile(pi: Vec<Scalar>, rows: Vec<Option<Vec<Scalar>>>) -> MobilityProfile {
        MobilityProfile::from_single_period(pi, rows).unwrap()
    }

    fn random_profile(r: usize, rng: &mut ChaCha8Rng) -> MobilityProfile {
        let normalize = |mut v: Vec<Scalar>| {
            let s: Scalar = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        };
        let pi = normalize((0..r).map(|_| rng.gen_range(0.01..1.0)).collect());
        let rows = (0..r)
            .map(|_| Some(normalize((0..r).map(|_| rng.gen_range(0.01..1.0)).collect())))
            .collect();
        profile(pi, rows)
    }

    fn for_each_permutation(n: usize, f: &mut impl FnMut(&[usize])) {
        let mut idx: Vec<usize> = (0..n).collect();
        fn rec(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
            if k == idx.len() {
                f(idx);
                return;
            }
            for i in k..idx.len() {
                idx.swap(k, i);
                rec(idx, k + 1, f);
                idx.swap(k, i);
            }
        }
        rec(&mut idx, 0, f);
    }

    fn brute_force_order0(u: &MobilityProfile, v: &MobilityProfile) -> Scalar {
        let mut best = Scalar::NEG_INFINITY;
        for_each_permutation(u.r, &mut |perm| {
            let s: Scalar = (0..u.r)
                .map(|i| u.visits[0][i].min(v.visits[0][perm[i]]))
                .sum();
            let score = 1.0 - (1.0 - s);
            if score > best {
                best = score;
            }
        });
        best
    }

    fn brute_force_order1(u: &MobilityProfile, v: &MobilityProfile) -> Scalar {
        let mut best = Scalar::NEG_INFINITY;
        for_each_permutation(u.r, &mut |perm| {
            let sigma = Permutation::new(perm.to_vec()).unwrap();
            let s = order1_score(u, v, &sigma, false);
            if s > best {
                best = s;
            }
        });
        best
    }

    #[test]
    fn mallows_trivial_cases() {
        let d = DistanceFunction::Hamming;
        let p = vec![0.2, 0.3, 0.5];
        assert_abs_diff_eq!(mallows_distance(&p, &p, &d).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            mallows_distance(&[1.0, 0.0], &[0.0, 1.0], &d).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            mallows_distance(&[0.5, 0.5], &[0.8, 0.2], &d).unwrap(),
            0.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mallows_rejects_bad_inputs() {
        let d = DistanceFunction::Hamming;
        assert!(matches!(
            mallows_distance(&[0.4, 0.4], &[0.5, 0.5], &d),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            mallows_distance(&[1.2, -0.2], &[0.5, 0.5], &d),
            Err(Error::NegativeEntry(_))
        ));
    }

    #[test]
    fn hamming_closed_form_examples() {
        let p = vec![0.6, 0.3, 0.1];
        let q = vec![0.1, 0.3, 0.6];
        assert_abs_diff_eq!(mallows_hamming(&p, &q).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mallows_hamming(&p, &p).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            mallows_hamming(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let lp = mallows_distance(&p, &q, &DistanceFunction::Hamming).unwrap();
        assert_abs_diff_eq!(lp, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn geographic_self_similarity_is_exactly_one() {
        let trace = Trace::new("u", vec![0, 1, 2, 0, 1, 1, 2]);
        let u = learn_profile(&trace, 3, &PeriodMap::single()).unwrap();
        let s = geographic_similarity(&u, &u, &DistanceFunction::Hamming).unwrap();
        assert_eq!(s.score, 1.0);
    }

    #[test]
    fn geographic_disjoint_supports_is_zero() {
        let u = profile(
            vec![0.5, 0.5, 0.0, 0.0],
            vec![
                Some(vec![0.5, 0.5, 0.0, 0.0]),
                Some(vec![0.5, 0.5, 0.0, 0.0]),
                None,
                None,
            ],
        );
        let v = profile(
            vec![0.0, 0.0, 0.5, 0.5],
            vec![
                Some(vec![0.0, 0.0, 0.5, 0.5]),
                Some(vec![0.0, 0.0, 0.5, 0.5]),
                None,
                None,
            ],
        );
        let s = geographic_similarity(&u, &v, &DistanceFunction::Hamming).unwrap();
        assert_abs_diff_eq!(s.score, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn geographic_hand_example() {
        let u = profile(
            vec![0.5, 0.5],
            vec![Some(vec![0.0, 1.0]), Some(vec![1.0, 0.0])],
        );
        let v = profile(
            vec![0.5, 0.5],
            vec![Some(vec![0.5, 0.5]), Some(vec![1.0, 0.0])],
        );
        let s = geographic_similarity(&u, &v, &DistanceFunction::Hamming).unwrap();
        assert_abs_diff_eq!(s.score, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn order0_self_similarity_and_identity_mapping() {
        let trace = Trace::new("u", vec![0, 1, 2, 0, 1, 1, 2, 2, 2]);
        let u = learn_profile(&trace, 3, &PeriodMap::single()).unwrap();
        let s = semantic_similarity_order0(&u, &u).unwrap();
        assert_eq!(s.score, 1.0);
    }

    #[test]
    fn order0_swap_example() {
        let u = profile(vec![0.9, 0.1], vec![None, None]);
        let v = profile(vec![0.1, 0.9], vec![None, None]);
        let s = semantic_similarity_order0(&u, &v).unwrap();
        assert_eq!(s.score, 1.0);
        assert_eq!(s.mapping.unwrap().as_slice(), &[1, 0]);
    }

    #[test]
    fn order0_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let u = random_profile(4, &mut rng);
            let v = random_profile(4, &mut rng);
            let s = semantic_similarity_order0(&u, &v).unwrap();
            assert_abs_diff_eq!(s.score, brute_force_order0(&u, &v), epsilon = 1e-9);
        }
    }

    #[test]
    fn order1_self_similarity_with_identity_start() {
        let trace = Trace::new("u", vec![0, 1, 2, 0, 1, 1, 2]);
        let u = learn_profile(&trace, 3, &PeriodMap::single()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = semantic_similarity_order1(
            &u,
            &u,
            &Permutation::identity(3),
            &AnnealOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.score, 1.0);
    }

    #[test]
    fn order1_recovers_relabeling() {
        // v is u's chain relabeled by rho = (1, 2, 0)
        let rho = [1usize, 2, 0];
        let u_rows = [
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.25, 0.25, 0.5],
        ];
        let u_pi = [0.5, 0.3, 0.2];
        let mut v_rows = vec![vec![0.0; 3]; 3];
        let mut v_pi = vec![0.0; 3];
        for i in 0..3 {
            v_pi[rho[i]] = u_pi[i];
            for j in 0..3 {
                v_rows[rho[i]][rho[j]] = u_rows[i][j];
            }
        }
        let u = profile(u_pi.to_vec(), u_rows.iter().cloned().map(Some).collect());
        let v = profile(v_pi, v_rows.into_iter().map(Some).collect());
        let start = semantic_similarity_order0(&u, &v).unwrap().mapping.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = semantic_similarity_order1(&u, &v, &start, &AnnealOptions::default(), &mut rng)
            .unwrap();
        assert_abs_diff_eq!(s.score, 1.0, epsilon = 1e-12);
        assert_eq!(s.mapping.unwrap().as_slice(), &rho);
    }

    #[test]
    fn order1_matches_exhaustive_enumeration_at_r5() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let u = random_profile(5, &mut rng);
            let v = random_profile(5, &mut rng);
            let start = semantic_similarity_order0(&u, &v).unwrap().mapping.unwrap();
            let opts = AnnealOptions {
                iters: Some(10_000),
                ..AnnealOptions::default()
            };
            let s = semantic_similarity_order1(&u, &v, &start, &opts, &mut rng).unwrap();
            assert_abs_diff_eq!(s.score, brute_force_order1(&u, &v), epsilon = 1e-9);
        }
    }

    #[test]
    fn order1_never_below_start_and_history_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let u = random_profile(4, &mut rng);
            let v = random_profile(4, &mut rng);
            let start = Permutation::identity(4);
            let start_score = order1_score(&u, &v, &start, false);
            let opts = AnnealOptions {
                iters: Some(500),
                ..AnnealOptions::default()
            };
            let (s, history) =
                semantic_similarity_order1_traced(&u, &v, &start, &opts, &mut rng).unwrap();
            assert!(s.score >= start_score);
            assert!(history.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn order1_rejects_invalid_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_profile(3, &mut rng);
        let bad = Permutation::identity(2);
        assert!(semantic_similarity_order1(
            &u,
            &u,
            &bad,
            &AnnealOptions::default(),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn printed_objective_is_selfcontained() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_profile(3, &mut rng);
        let v = random_profile(3, &mut rng);
        // printed form compares u against its own relabeling; identity is optimal
        let s = order1_score(&u, &v, &Permutation::identity(3), true);
        assert_eq!(s, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn similarity_scores_bounded(seed in 0u64..1_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = 2 + (seed % 4) as usize;
            let u = random_profile(r, &mut rng);
            let v = random_profile(r, &mut rng);
            let g_uv = geographic_similarity(&u, &v, &DistanceFunction::Hamming).unwrap().score;
            let g_vu = geographic_similarity(&v, &u, &DistanceFunction::Hamming).unwrap().score;
            prop_assert!((0.0..=1.0).contains(&g_uv));
            prop_assert!((0.0..=1.0).contains(&g_vu));
            let s0 = semantic_similarity_order0(&u, &v).unwrap().score;
            prop_assert!((0.0..=1.0).contains(&s0));
            // optimized score never below the identity-mapping score
            prop_assert!(s0 >= identity_order0_score(&u, &v) - 1e-12);
            prop_assert_eq!(geographic_similarity(&u, &u, &DistanceFunction::Hamming).unwrap().score, 1.0);
            prop_assert_eq!(semantic_similarity_order0(&u, &u).unwrap().score, 1.0);
        }

        #[test]
        fn hamming_closed_form_matches_lp(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2 + (seed % 6) as usize;
            let normalize = |mut v: Vec<Scalar>| {
                let s: Scalar = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= s);
                v
            };
            let p = normalize((0..n).map(|_| rng.gen_range(0.0..1.0) + 1e-6).collect());
            let q = normalize((0..n).map(|_| rng.gen_range(0.0..1.0) + 1e-6).collect());
            let closed = mallows_hamming(&p, &q).unwrap();
            let lp = mallows_distance(&p, &q, &DistanceFunction::Hamming).unwrap();
            prop_assert!((closed - lp).abs() <= 1e-9);
        }
    }
}
