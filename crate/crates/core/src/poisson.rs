//! Poisson weights and truncation of the series over the transmitter count.

/// `P(N = k)` for `k = 0..=n_max`, computed in log space so large means do
/// not underflow at `k = 0`.
pub fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    if mean <= 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(ln_p.exp());
    for k in 1..=n_max {
        ln_p += ln_mean - (k as f64).ln();
        out.push(ln_p.exp());
    }
    out
}

/// `P(N > n)`, summed explicitly from the far tail inwards.
pub fn poisson_tail(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let top = tail_horizon(mean).max(n + 1);
    let pmf = poisson_pmf(mean, top);
    pmf[n + 1..].iter().rev().sum()
}

// beyond this index the pmf is below ~1e-300 relative to the mode
fn tail_horizon(mean: f64) -> usize {
    (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize
}

/// Smallest `N` with `P(Poisson(mean) > N) < eps_tail`. Returns `(N, tail)`.
pub fn poisson_truncation(mean: f64, eps_tail: f64) -> (usize, f64) {
    if mean <= 0.0 {
        return (0, 0.0);
    }
    let top = tail_horizon(mean);
    let pmf = poisson_pmf(mean, top);
    // tails[k] = P(N >= k), built smallest-first
    let mut tails = vec![0.0; top + 2];
    for k in (0..=top).rev() {
        tails[k] = tails[k + 1] + pmf[k];
    }
    for n in 0..=top {
        let tail = tails[n + 1];
        if tail < eps_tail {
            return (n, tail);
        }
    }
    (top, tails[top + 1])
}
