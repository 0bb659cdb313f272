/// Euclidean projection of `v` onto `{x ≥ 0, Σ x = 1}`, in place.
///
/// Sort-based: find the largest `k` with `u_k > (Σ_{j≤k} u_j − 1)/k` over the
/// values sorted in decreasing order, then shift by that threshold.
pub fn project_onto_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Projection onto the simplex in the norm `Σ (x_j − v_j)² / d_j`, with
/// every `d_j > 0`. The minimizer is `max(0, v_j − θ d_j)`; breakpoints
/// `v_j / d_j` are scanned in decreasing order as in the Euclidean case.
pub fn project_onto_simplex_scaled(v: &mut [f64], d: &[f64]) {
    debug_assert_eq!(v.len(), d.len());
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_unstable_by(|&a, &b| (v[b] / d[b]).total_cmp(&(v[a] / d[a])));
    let (mut sum_v, mut sum_d) = (0.0, 0.0);
    let mut theta = 0.0;
    for &j in &order {
        sum_v += v[j];
        sum_d += d[j];
        let candidate = (sum_v - 1.0) / sum_d;
        if v[j] - candidate * d[j] > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for (x, &dj) in v.iter_mut().zip(d) {
        *x = (*x - theta * dj).max(0.0);
    }
}
