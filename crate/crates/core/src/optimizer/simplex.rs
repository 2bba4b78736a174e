/// Euclidean projection onto the probability simplex `{w >= 0, sum w = 1}`.
///
/// Sort-based: find the largest `rho` with `u_rho > (sum_{i<=rho} u_i - 1) / rho`
/// over the values sorted in decreasing order, then shift and clip.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
