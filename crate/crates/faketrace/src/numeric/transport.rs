use super::Real;

/// Minimum-cost transportation between two nonnegative vectors of equal
/// total mass: `min_f sum f_ij c(i,j)` subject to `sum_j f_ij = supply_i`
/// and `sum_i f_ij = demand_j`.
///
/// Solved exactly by successive shortest paths with Johnson potentials on
/// the complete bipartite network (plus super source/sink). Each
/// augmentation saturates a source or a sink, so there are at most
/// `n + m` Dijkstra passes.
pub fn min_cost_transport<F: Real>(
    supply: &[F],
    demand: &[F],
    cost: impl Fn(usize, usize) -> F,
) -> F {
    let n = supply.len();
    let m = demand.len();
    let eps = F::val(1e-15);

    // node ids: sources 0..n, sinks n..n+m, super source s, super sink t
    let s = n + m;
    let t = n + m + 1;
    let v_count = n + m + 2;

    let mut rem_supply = supply.to_vec();
    let mut rem_demand = demand.to_vec();
    let mut flow = vec![vec![F::zero(); m]; n];
    let mut potential = vec![F::zero(); v_count];
    let mut total_cost = F::zero();

    let clamp = |x: F| if x < F::zero() { F::zero() } else { x };

    loop {
        let pending = rem_supply.iter().copied().fold(F::zero(), |a, b| a + b);
        if pending <= eps {
            break;
        }

        let mut dist = vec![F::infinity(); v_count];
        let mut prev = vec![usize::MAX; v_count];
        let mut done = vec![false; v_count];
        dist[s] = F::zero();

        loop {
            let mut best = usize::MAX;
            let mut best_d = F::infinity();
            for v in 0..v_count {
                if !done[v] && dist[v] < best_d {
                    best_d = dist[v];
                    best = v;
                }
            }
            if best == usize::MAX || best == t {
                break;
            }
            done[best] = true;

            if best == s {
                for i in 0..n {
                    if rem_supply[i] > eps {
                        let rc = clamp(potential[s] - potential[i]);
                        if dist[s] + rc < dist[i] {
                            dist[i] = dist[s] + rc;
                            prev[i] = s;
                        }
                    }
                }
            } else if best < n {
                let i = best;
                for j in 0..m {
                    // forward edge i -> sink j, unlimited capacity
                    let rc = clamp(cost(i, j) + potential[i] - potential[n + j]);
                    if dist[i] + rc < dist[n + j] {
                        dist[n + j] = dist[i] + rc;
                        prev[n + j] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    // residual edge sink j -> source i, capacity flow[i][j]
                    if flow[i][j] > eps {
                        let rc = clamp(-cost(i, j) + potential[n + j] - potential[i]);
                        if dist[n + j] + rc < dist[i] {
                            dist[i] = dist[n + j] + rc;
                            prev[i] = n + j;
                        }
                    }
                }
                if rem_demand[j] > eps {
                    let rc = clamp(potential[n + j] - potential[t]);
                    if dist[n + j] + rc < dist[t] {
                        dist[t] = dist[n + j] + rc;
                        prev[t] = n + j;
                    }
                }
            }
        }

        assert!(
            prev[t] != usize::MAX,
            "transportation network disconnected: supply/demand mass mismatch"
        );

        // cap at dist[t]: nodes not finalized before the sink was reached
        // carry overestimates, and using those would break the invariant
        // that reduced costs stay nonnegative
        let d_t = dist[t];
        for v in 0..v_count {
            if dist[v] < F::infinity() {
                potential[v] = potential[v] + if dist[v] < d_t { dist[v] } else { d_t };
            }
        }

        // bottleneck along the path s -> ... -> t
        let last_sink = prev[t] - n;
        let mut push = rem_demand[last_sink];
        let mut v = prev[t];
        while prev[v] != s {
            let u = prev[v];
            if !(u < n && v >= n && v < n + m) {
                // residual edge sink u -> source v: capacity flow[v][u - n]
                if flow[v][u - n] < push {
                    push = flow[v][u - n];
                }
            }
            v = u;
        }
        let first_source = v;
        if rem_supply[first_source] < push {
            push = rem_supply[first_source];
        }

        // apply
        let mut v = prev[t];
        while prev[v] != s {
            let u = prev[v];
            if u < n && v >= n && v < n + m {
                flow[u][v - n] = flow[u][v - n] + push;
                total_cost = total_cost + push * cost(u, v - n);
            } else {
                flow[v][u - n] = flow[v][u - n] - push;
                total_cost = total_cost - push * cost(v, u - n);
            }
            v = u;
        }
        rem_supply[first_source] = rem_supply[first_source] - push;
        rem_demand[last_sink] = rem_demand[last_sink] - push;
    }

    total_cost
}
