//! Location semantic graph construction from pairwise optimal mappings,
//! and its partition into semantic classes.

use crate::error::{Error, Result};
use crate::metrics::semantic_similarity_order0;
use crate::mobility::{LocationId, MobilityProfile};
use crate::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Symmetric, non-negative edge weights over the location set. Self
/// matches are recorded separately for diagnostics.
#[derive(Debug, Clone)]
pub struct SemanticGraph {
    pub r: usize,
    weights: Vec<Scalar>,
    pub self_weight: Vec<Scalar>,
}

impl SemanticGraph {
    pub fn new(r: usize) -> Self {
        SemanticGraph {
            r,
            weights: vec![0.0; r * r],
            self_weight: vec![0.0; r],
        }
    }

    pub fn weight(&self, a: LocationId, b: LocationId) -> Scalar {
        self.weights[a * self.r + b]
    }

    pub fn add_edge(&mut self, a: LocationId, b: LocationId, w: Scalar) {
        assert!(a != b, "no self-loops in the semantic graph");
        self.weights[a * self.r + b] += w;
        self.weights[b * self.r + a] += w;
    }

    /// Similarity-vector embedding of one location (its weight-matrix row,
    /// zero diagonal).
    pub fn row(&self, a: LocationId) -> &[Scalar] {
        &self.weights[a * self.r..(a + 1) * self.r]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Scalar)> + '_ {
        (0..self.r).flat_map(move |a| {
            (a + 1..self.r).filter_map(move |b| {
                let w = self.weight(a, b);
                (w > 0.0).then_some((a, b, w))
            })
        })
    }
}

/// A partition of the location set into `k` dense class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticClasses {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl SemanticClasses {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if assignment.iter().any(|&c| c >= k) {
            return Err(Error::ClusterCountOutOfRange {
                k,
                r: assignment.len(),
            });
        }
        Ok(SemanticClasses { assignment, k })
    }

    pub fn class_of(&self, r: LocationId) -> usize {
        self.assignment[r]
    }

    pub fn members(&self, class: usize) -> Vec<LocationId> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(r, &c)| (c == class).then_some(r))
            .collect()
    }
}

/// Accumulate, for every ordered profile pair, the order-0 optimal mapping
/// weighted by its similarity score.
pub fn build_semantic_graph(profiles: &[MobilityProfile]) -> Result<SemanticGraph> {
    if profiles.len() < 2 {
        return Err(Error::TooFewProfiles(profiles.len()));
    }
    let r = profiles[0].r;
    let pairs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|u| (0..profiles.len()).filter_map(move |v| (u != v).then_some((u, v))))
        .collect();
    let results: Vec<(Scalar, Vec<usize>)> = pairs
        .par_iter()
        .map(|&(u, v)| {
            let sim = semantic_similarity_order0(&profiles[u], &profiles[v])?;
            let mapping = sim.mapping.expect("semantic result carries a mapping");
            Ok((sim.score, mapping.as_slice().to_vec()))
        })
        .collect::<Result<_>>()?;

    let visit_mass = |p: &MobilityProfile, loc: usize| -> Scalar {
        (0..p.t).map(|tau| p.period_weight[tau] * p.visits[tau][loc]).sum()
    };

    let mut graph = SemanticGraph::new(r);
    for (&(u, v), (score, mapping)) in pairs.iter().zip(&results) {
        for (loc, &mapped) in mapping.iter().enumerate() {
            // matches of never-visited locations are assignment-completion
            // artifacts and carry no semantic evidence
            if visit_mass(&profiles[u], loc) == 0.0 || visit_mass(&profiles[v], mapped) == 0.0 {
                continue;
            }
            if loc == mapped {
                graph.self_weight[loc] += *score;
            } else {
                graph.add_edge(loc, mapped, *score);
            }
        }
    }
    Ok(graph)
}

fn normalized_rows(graph: &SemanticGraph) -> Vec<Vec<Scalar>> {
    (0..graph.r)
        .map(|a| {
            let row = graph.row(a);
            let norm = row.iter().map(|x| x * x).sum::<Scalar>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row.to_vec()
            }
        })
        .collect()
}

/// Cosine distance between a unit (or zero) row and a centroid.
fn cosine_distance(x: &[Scalar], c: &[Scalar]) -> Scalar {
    let dot: Scalar = x.iter().zip(c).map(|(a, b)| a * b).sum();
    let norm_c = c.iter().map(|v| v * v).sum::<Scalar>().sqrt();
    if norm_c == 0.0 {
        return 1.0;
    }
    (1.0 - dot / norm_c).max(0.0)
}

struct KmeansRun {
    assignment: Vec<usize>,
    objective: Scalar,
}

fn kmeans_once(rows: &[Vec<Scalar>], k: usize, rng: &mut ChaCha8Rng) -> KmeansRun {
    let n = rows.len();
    let dim = rows[0].len();

    // k-means++ seeding with squared-cosine-distance weighting
    let mut centroids: Vec<Vec<Scalar>> = Vec::with_capacity(k);
    centroids.push(rows[rng.gen_range(0..n)].clone());
    let mut dists: Vec<Scalar> = rows
        .iter()
        .map(|x| cosine_distance(x, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: Scalar = dists.iter().map(|d| d * d).sum();
        let pick = if total > 0.0 {
            let mut draw = rng.gen::<Scalar>() * total;
            let mut chosen = n - 1;
            for (i, d) in dists.iter().enumerate() {
                draw -= d * d;
                if draw <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(rows[pick].clone());
        for (i, d) in dists.iter_mut().enumerate() {
            let nd = cosine_distance(&rows[i], centroids.last().unwrap());
            if nd < *d {
                *d = nd;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, x) in rows.iter().enumerate() {
            let mut best = assignment[i];
            let mut best_d = cosine_distance(x, &centroids[best]);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = cosine_distance(x, centroid);
                if d < best_d - 1e-15 {
                    best_d = d;
                    best = c;
                }
            }
            if best != assignment[i] {
                assignment[i] = best;
                changed = true;
            }
        }

        // repair empty clusters with the worst-fitting point
        loop {
            let mut counts = vec![0usize; k];
            for &c in &assignment {
                counts[c] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let worst = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    let da = cosine_distance(&rows[a], &centroids[assignment[a]]);
                    let db = cosine_distance(&rows[b], &centroids[assignment[b]]);
                    da.partial_cmp(&db).unwrap()
                })
                .expect("some cluster has more than one point");
            assignment[worst] = empty;
            changed = true;
        }

        // recompute centroids
        let mut sums = vec![vec![0.0 as Scalar; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, x) in rows.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(x) {
                *s += v;
            }
        }
        for (c, sum) in sums.iter_mut().enumerate() {
            if counts[c] > 0 {
                for v in sum.iter_mut() {
                    *v /= counts[c] as Scalar;
                }
            }
        }
        centroids = sums;

        if !changed {
            break;
        }
    }

    let objective = rows
        .iter()
        .zip(&assignment)
        .map(|(x, &c)| cosine_distance(x, &centroids[c]))
        .sum();
    KmeansRun {
        assignment,
        objective,
    }
}

fn relabel_dense(assignment: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(assignment.len());
    for &c in assignment {
        let next = map.len();
        let label = *map.entry(c).or_insert(next);
        out.push(label);
    }
    (out, map.len())
}

const KMEANS_RESTARTS: usize = 50;

/// Partition locations into `k` classes: k-means over the similarity-row
/// embedding with cosine distance, k-means++ seeding, 50 restarts.
/// Deterministic for a fixed seed.
pub fn cluster_graph(graph: &SemanticGraph, k: usize, seed: u64) -> Result<SemanticClasses> {
    if k < 1 || k > graph.r {
        return Err(Error::ClusterCountOutOfRange { k, r: graph.r });
    }
    let rows = normalized_rows(graph);
    let mut best: Option<KmeansRun> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let run = kmeans_once(&rows, k, &mut rng);
        if best.as_ref().map_or(true, |b| run.objective < b.objective - 1e-12) {
            best = Some(run);
        }
    }
    let best = best.unwrap();
    let (assignment, k_actual) = relabel_dense(&best.assignment);
    SemanticClasses::new(assignment, k_actual)
}

/// Direction of the clustering quality ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityRatio {
    /// Mean intra-class pair weight over mean inter-class pair weight (the
    /// default).
    IntraOverInter,
    /// The literal inverse; selects degenerate clusterings, kept selectable.
    InterOverIntra,
}

/// Quality of a partition as a density ratio: mean weight over intra-class
/// pairs vs mean weight over inter-class pairs. Raw mass totals would
/// always favor the smallest k (merging clusters moves mass from inter to
/// intra unconditionally); dividing by pair counts makes over-merged and
/// over-split partitions both score worse than the planted one.
fn partition_quality(graph: &SemanticGraph, classes: &SemanticClasses, ratio: QualityRatio) -> Scalar {
    let mut intra = 0.0;
    let mut inter = 0.0;
    let mut intra_pairs = 0usize;
    let mut inter_pairs = 0usize;
    for a in 0..graph.r {
        for b in a + 1..graph.r {
            let w = graph.weight(a, b);
            if classes.class_of(a) == classes.class_of(b) {
                intra += w;
                intra_pairs += 1;
            } else {
                inter += w;
                inter_pairs += 1;
            }
        }
    }
    let density = |mass: Scalar, pairs: usize| if pairs > 0 { mass / pairs as Scalar } else { 0.0 };
    let intra = density(intra, intra_pairs);
    let inter = density(inter, inter_pairs);
    let (num, den) = match ratio {
        QualityRatio::IntraOverInter => (intra, inter),
        QualityRatio::InterOverIntra => (inter, intra),
    };
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            Scalar::INFINITY
        }
    } else {
        num / den
    }
}

/// Pick the cluster count in `[k_lo, k_hi]` maximizing the quality ratio;
/// ties break toward the smaller count.
pub fn select_cluster_count(
    graph: &SemanticGraph,
    k_lo: usize,
    k_hi: usize,
    seed: u64,
    ratio: QualityRatio,
) -> Result<usize> {
    if k_lo > k_hi {
        return Err(Error::EmptyRange);
    }
    let mut best_k = None;
    let mut best_q = Scalar::NEG_INFINITY;
    for k in k_lo..=k_hi {
        let classes = cluster_graph(graph, k, seed)?;
        let q = partition_quality(graph, &classes, ratio);
        if q > best_q {
            best_q = q;
            best_k = Some(k);
        }
    }
    best_k.ok_or(Error::EmptyRange)
}

/// Adjusted Rand index between two partitions of the same ground set.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Scalar {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let choose2 = |n: u64| (n * n.saturating_sub(1) / 2) as Scalar;
    let sum_ij: Scalar = table.iter().flatten().map(|&n| choose2(n)).sum();
    let sum_a: Scalar = table
        .iter()
        .map(|row| choose2(row.iter().sum::<u64>()))
        .sum();
    let sum_b: Scalar = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum::<u64>()))
        .sum();
    let total = choose2(a.len() as u64);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}
