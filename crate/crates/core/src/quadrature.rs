//! Nested Gauss–Legendre integration over the ordered simplex
//! `a <= x_1 <= ... <= x_n <= b`.
//!
//! Integrands here vary on the obstacle length scale `1/mu` near the simplex
//! faces `x_k = x_{k-1}` and are flat elsewhere, so each one-dimensional
//! integral is split into panels graded towards both ends of its interval.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Panel breakpoints, in multiples of the feature scale, measured from each
/// end of an interval.
const GRADING: [f64; 3] = [2.0, 8.0, 32.0];

#[derive(Debug, Clone)]
pub struct SimplexQuadrature {
    nodes_per_dim: usize,
    feature_scale: f64,
    // rules[m] holds the m-point rule on [-1, 1]
    rules: Vec<Vec<(f64, f64)>>,
}

impl SimplexQuadrature {
    /// `nodes_per_dim` Gauss–Legendre nodes are shared among the panels of
    /// each one-dimensional integral.
    pub fn new(nodes_per_dim: usize, feature_scale: f64) -> Self {
        let nodes_per_dim = nodes_per_dim.max(2);
        let rules = (0..=nodes_per_dim)
            .map(|m| match NonZeroUsize::new(m) {
                Some(m) => GaussLegendre::new(m).as_node_weight_pairs().to_vec(),
                None => Vec::new(),
            })
            .collect();
        SimplexQuadrature {
            nodes_per_dim,
            feature_scale,
            rules,
        }
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    fn panels(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut cuts = vec![lo, hi];
        for g in GRADING {
            let d = g * self.feature_scale;
            cuts.push(lo + d);
            cuts.push(hi - d);
        }
        cuts.retain(|&c| c >= lo && c <= hi);
        cuts.sort_by(f64::total_cmp);
        let min_width = 1e-9 * (hi - lo).max(self.feature_scale);
        cuts.dedup_by(|b, a| *b - *a < min_width);
        if *cuts.last().unwrap() < hi {
            *cuts.last_mut().unwrap() = hi;
        }
        cuts
    }

    /// `integral over [lo, hi] of f`, composite over graded panels.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let cuts = self.panels(lo, hi);
        let panels = cuts.len() - 1;
        let m = self.nodes_per_dim.div_ceil(panels).clamp(2, self.nodes_per_dim);
        let rule = &self.rules[m];
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            total += half * rule.iter().map(|&(x, wt)| wt * f(mid + half * x)).sum::<f64>();
        }
        total
    }

    /// `E[g(U_(1), ..., U_(n))]` for the order statistics of `n` i.i.d.
    /// uniforms on `[a, b]`. Cost is `nodes_per_dim^n` evaluations of `g`.
    pub fn expect_sorted<G: Fn(&[f64]) -> f64>(&self, n: usize, a: f64, b: f64, g: G) -> f64 {
        if n == 0 {
            return g(&[]);
        }
        if !(b > a) {
            return g(&vec![a; n]);
        }
        let mut pts = Vec::with_capacity(n);
        let integral = self.nested(n, a, b, &mut pts, &g);
        // density of the sorted sample is n! / (b - a)^n on the simplex
        let mut norm = 1.0;
        for k in 1..=n {
            norm *= k as f64 / (b - a);
        }
        integral * norm
    }

    fn nested<G: Fn(&[f64]) -> f64>(&self, remaining: usize, lo: f64, hi: f64, pts: &mut Vec<f64>, g: &G) -> f64 {
        if remaining == 0 {
            return g(pts);
        }
        self.integrate(lo, hi, |x| {
            pts.push(x);
            let v = self.nested(remaining - 1, x, hi, pts, g);
            pts.pop();
            v
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = SimplexQuadrature::new(64, 0.7);
        assert_relative_eq!(q.integrate(-3.0, 5.0, |x| x.powi(7)), (5f64.powi(8) - 3f64.powi(8)) / 8.0, max_relative = 1e-13);
        assert_eq!(q.integrate(1.0, 1.0, |x| x), 0.0);
    }

    #[test]
    fn order_statistic_moments() {
        let q = SimplexQuadrature::new(16, 0.05);
        // E[U(1) U(2)] = E[U1] E[U2] = 1/4
        assert_relative_eq!(q.expect_sorted(2, 0.0, 1.0, |p| p[0] * p[1]), 0.25, max_relative = 1e-12);
        // E[min of 3] = 1/4, E[max of 3] = 3/4
        assert_relative_eq!(q.expect_sorted(3, 0.0, 1.0, |p| p[0]), 0.25, max_relative = 1e-12);
        assert_relative_eq!(q.expect_sorted(3, 0.0, 1.0, |p| p[2]), 0.75, max_relative = 1e-12);
        // symmetric functions see the unordered product law
        assert_relative_eq!(q.expect_sorted(3, -1.0, 3.0, |p| p[0] * p[1] * p[2]), 1.0, max_relative = 1e-12);
        assert_relative_eq!(q.expect_sorted(1, 2.0, 4.0, |p| p[0] * p[0]), 28.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn probability_integrates_to_one() {
        let q = SimplexQuadrature::new(64, 2.5);
        assert_relative_eq!(q.expect_sorted(3, -750.0, 750.0, |_| 1.0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn panels_cover_interval() {
        let q = SimplexQuadrature::new(64, 1.0);
        let cuts = q.panels(0.0, 100.0);
        assert_eq!(cuts, vec![0.0, 2.0, 8.0, 32.0, 68.0, 92.0, 98.0, 100.0]);
        let cuts = q.panels(0.0, 3.0);
        assert_eq!(cuts.first(), Some(&0.0));
        assert_eq!(cuts.last(), Some(&3.0));
        assert!(cuts.windows(2).all(|w| w[1] > w[0]));
    }
}
