use super::Real;

/// Maximum-weight perfect assignment on a square weight matrix.
///
/// Returns `perm` with `perm[row] = column` and the achieved total weight.
/// O(n^3) Hungarian method on the negated weights.
pub fn max_weight_assignment<F: Real>(weights: &[Vec<F>]) -> (Vec<usize>, F) {
    let n = weights.len();
    if n == 0 {
        return (Vec::new(), F::zero());
    }
    debug_assert!(weights.iter().all(|row| row.len() == n));

    let cost = |i: usize, j: usize| -weights[i][j];

    // 1-based Hungarian with row/column potentials.
    let mut u = vec![F::zero(); n + 1];
    let mut v = vec![F::zero(); n + 1];
    let mut col_row = vec![0usize; n + 1]; // col_row[j] = row assigned to column j
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![F::infinity(); n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = F::infinity();
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] = u[col_row[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[col_row[j] - 1] = j - 1;
    }
    let total = (0..n)
        .map(|i| weights[i][perm[i]])
        .fold(F::zero(), |a, b| a + b);
    (perm, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(w: &[Vec<f64>]) -> f64 {
        let n = w.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut best = f64::NEG_INFINITY;
        permute(&mut idx, 0, &mut |p| {
            let s: f64 = (0..n).map(|i| w[i][p[i]]).sum();
            if s > best {
                best = s;
            }
        });
        best
    }

    fn permute(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == idx.len() {
            f(idx);
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, f);
            idx.swap(k, i);
        }
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let n = rng.gen_range(1..7);
            let w: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let (perm, total) = max_weight_assignment(&w);
            let mut seen = vec![false; n];
            for &j in &perm {
                assert!(!seen[j]);
                seen[j] = true;
            }
            assert_abs_diff_eq!(total, brute_force(&w), epsilon = 1e-9);
        }
    }

    #[test]
    fn swap_beats_identity() {
        let w = vec![vec![0.1, 0.9], vec![0.9, 0.1]];
        let (perm, total) = max_weight_assignment(&w);
        assert_eq!(perm, vec![1, 0]);
        assert_abs_diff_eq!(total, 1.8, epsilon = 1e-12);
    }
}
