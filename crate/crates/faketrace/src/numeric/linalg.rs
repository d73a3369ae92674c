use super::Real;
use crate::error::{Error, Result};

/// Stationary distribution of a row-stochastic matrix, via a direct linear
/// solve of the balance equations with the normalization constraint.
///
/// Rejects matrices whose positive-support digraph is not strongly
/// connected (no unique stationary distribution).
pub fn solve_stationary<F: Real>(p: &[Vec<F>]) -> Result<Vec<F>> {
    let n = p.len();
    let row_tol = F::val(1e-6);
    for (i, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has length {} in a {n}-state chain",
                row.len()
            )));
        }
        let s = row.iter().copied().fold(F::zero(), |a, b| a + b);
        if (s - F::one()).abs() > row_tol {
            return Err(Error::NotStochastic(i, s.to_f64().unwrap_or(f64::NAN)));
        }
        if let Some(j) = row.iter().position(|x| *x < F::zero()) {
            return Err(Error::NegativeEntry(j));
        }
    }
    if !strongly_connected(p) {
        return Err(Error::Reducible);
    }

    // A = P^T - I, with the last row replaced by the normalization sum.
    let mut a = vec![vec![F::zero(); n]; n];
    let mut b = vec![F::zero(); n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i];
        }
        a[i][i] = a[i][i] - F::one();
    }
    for j in 0..n {
        a[n - 1][j] = F::one();
    }
    b[n - 1] = F::one();

    let mut pi = gauss_solve(&mut a, &mut b).ok_or(Error::Reducible)?;
    let neg_tol = F::val(-1e-9);
    for x in &mut pi {
        if *x < neg_tol {
            return Err(Error::Reducible);
        }
        if *x < F::zero() {
            *x = F::zero();
        }
    }
    let total = pi.iter().copied().fold(F::zero(), |a, b| a + b);
    for x in &mut pi {
        *x = *x / total;
    }

    let mut residual = F::zero();
    for j in 0..n {
        let mut col = F::zero();
        for i in 0..n {
            col = col + pi[i] * p[i][j];
        }
        residual = residual + (col - pi[j]).abs();
    }
    if residual > F::val(1e-8) {
        return Err(Error::NonConvergence(residual.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(pi)
}

fn strongly_connected<F: Real>(p: &[Vec<F>]) -> bool {
    let n = p.len();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward { p[i][j] } else { p[j][i] };
                if edge > F::zero() && i != j && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

fn gauss_solve<F: Real>(a: &mut [Vec<F>], b: &mut [F]) -> Option<Vec<F>> {
    let n = a.len();
    let pivot_tol = F::val(1e-12);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < pivot_tol {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] = a[r][c] - factor * a[col][c];
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc = acc - a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Dense row-major square matrix product.
pub fn mat_mul<F: Real>(a: &[Vec<F>], b: &[Vec<F>]) -> Vec<Vec<F>> {
    let n = a.len();
    let mut out = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == F::zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] = out[i][j] + aik * b[k][j];
            }
        }
    }
    out
}

/// `m^e` by repeated squaring; `e >= 1`.
pub fn mat_pow<F: Real>(m: &[Vec<F>], e: u32) -> Vec<Vec<F>> {
    assert!(e >= 1);
    let mut result: Option<Vec<Vec<F>>> = None;
    let mut base = m.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => mat_mul(&r, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
        }
    }
    result.unwrap()
}

/// KL divergence of already-normalized distributions; terms with `p_i = 0`
/// contribute zero. Natural log.
pub fn kl_divergence_raw<F: Real>(p: &[F], q: &[F]) -> F {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi > F::zero() {
                pi * (pi / qi).ln()
            } else {
                F::zero()
            }
        })
        .fold(F::zero(), |a, b| a + b)
}

/// Pearson correlation coefficient. Errors on constant samples.
pub fn pearson<F: Real>(a: &[F], b: &[F]) -> Result<F> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "pearson over samples of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = F::val(a.len() as f64);
    let mean = |xs: &[F]| xs.iter().copied().fold(F::zero(), |x, y| x + y) / n;
    let ma = mean(a);
    let mb = mean(b);
    let mut cov = F::zero();
    let mut va = F::zero();
    let mut vb = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        cov = cov + (x - ma) * (y - mb);
        va = va + (x - ma) * (x - ma);
        vb = vb + (y - mb) * (y - mb);
    }
    if va == F::zero() || vb == F::zero() {
        return Err(Error::ConstantSample);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_chain_is_rejected() {
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(solve_stationary(&p), Err(Error::Reducible)));
    }

    #[test]
    fn doubly_stochastic_gives_uniform() {
        let p = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let pi = solve_stationary(&p).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn two_state_balance_equation() {
        // [[0.9, 0.1], [0.5, 0.5]] -> (5/6, 1/6)
        let p = vec![vec![0.9, 0.1], vec![0.5, 0.5]];
        let pi = solve_stationary(&p).unwrap();
        assert_abs_diff_eq!(pi[0], 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn periodic_chain_still_has_unique_stationary() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let pi = solve_stationary(&p).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn non_stochastic_rejected() {
        let p = vec![vec![0.9, 0.2], vec![0.5, 0.5]];
        assert!(matches!(solve_stationary(&p), Err(Error::NotStochastic(..))));
    }

    #[test]
    fn mat_pow_matches_repeated_mul() {
        let m = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
        let m3 = mat_pow(&m, 3);
        let manual = mat_mul(&mat_mul(&m, &m), &m);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(m3[i][j], manual[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kl_hand_value() {
        let p = [0.9, 0.1];
        let q = [0.5, 0.5];
        let expected = 0.9 * (1.8f64).ln() + 0.1 * (0.2f64).ln();
        assert_abs_diff_eq!(kl_divergence_raw(&p, &q), expected, epsilon = 1e-12);
    }

    #[test]
    fn pearson_affine_invariance_and_errors() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        assert_abs_diff_eq!(pearson(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            pearson(&a, &[1.0, 1.0, 1.0, 1.0]),
            Err(Error::ConstantSample)
        ));
    }
}
