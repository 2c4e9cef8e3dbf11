//! k-LOS probabilities for transmitters at fixed positions by
//! inclusion–exclusion over joint-LOS events.
//!
//! For any index set `S` of `j` transmitters, `P(L_S)` is the joint LOS
//! probability of the sub-sequence of their projections, with leading term
//! `-2 lambda_b j / mu`. Because that log-probability is a sum of per-point
//! terms and terms for *consecutive* chosen points, the subset sums
//! `S_j = sum_{|S| = j} P(L_S)` and the whole inclusion–exclusion series can be
//! accumulated by a dynamic program over the last chosen index in `O(n^3)`
//! instead of enumerating `2^n` subsets. [`at_least_k_enumerated`] keeps the
//! literal enumeration for small `n`.

use crate::analytic::{log_joint_sorted, pair_overlap};
use crate::error::{Error, Result};

/// Largest `n` accepted by [`at_least_k_enumerated`].
pub const ENUMERATION_CAP: usize = 20;

struct Chain {
    single: f64,
    // link[i][j] = exp(pair_overlap(p_j - p_i)), i < j
    link: Vec<Vec<f64>>,
}

impl Chain {
    fn new(lambda_b: f64, mu: f64, proj: &[f64]) -> Self {
        let n = proj.len();
        let link = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i < j {
                            pair_overlap(lambda_b, mu, proj[j] - proj[i]).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Chain {
            single: (-2.0 * lambda_b / mu).exp(),
            link,
        }
    }
}

/// `S_0 = 1, S_1, ..., S_n`: sums of joint-LOS probabilities over all index
/// sets of each size. Projections must be sorted.
pub fn subset_sums(lambda_b: f64, mu: f64, proj: &[f64]) -> Vec<f64> {
    let n = proj.len();
    let chain = Chain::new(lambda_b, mu, proj);
    // ending[j][s]: sum over sets of size s whose largest index is j
    let mut ending = vec![vec![0.0; n + 1]; n];
    let mut sums = vec![0.0; n + 1];
    sums[0] = 1.0;
    for j in 0..n {
        ending[j][1] = chain.single;
        for s in 2..=j + 1 {
            let acc: f64 = (0..j).map(|i| ending[i][s - 1] * chain.link[i][j]).sum();
            ending[j][s] = chain.single * acc;
        }
        for s in 1..=j + 1 {
            sums[s] += ending[j][s];
        }
    }
    sums
}

/// `P(exactly m transmitters are LOS)` for `m = 0..=n`.
///
/// Evaluates `sum_S P(L_S) (z - 1)^|S| = E[z^N]`, the inclusion–exclusion
/// series in generating-function form, with the same chain recursion as
/// [`subset_sums`] but carrying polynomials in `z`.
pub fn count_distribution(lambda_b: f64, mu: f64, proj: &[f64]) -> Vec<f64> {
    let n = proj.len();
    let chain = Chain::new(lambda_b, mu, proj);
    // ending[j]: polynomial coefficients (in z) of sum over sets with max j
    let mut ending: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut total = vec![0.0; n + 1];
    total[0] = 1.0;
    for j in 0..n {
        let mut inner = vec![0.0; j + 1];
        inner[0] = 1.0;
        for (i, poly) in ending.iter().enumerate() {
            let w = chain.link[i][j];
            for (c, &p) in inner.iter_mut().zip(poly) {
                *c += w * p;
            }
        }
        // multiply by single * (z - 1)
        let mut poly = vec![0.0; j + 2];
        for (d, &c) in inner.iter().enumerate() {
            poly[d + 1] += chain.single * c;
            poly[d] -= chain.single * c;
        }
        for (t, &p) in total.iter_mut().zip(&poly) {
            *t += p;
        }
        ending.push(poly);
    }
    total
}

/// `P(at least k of the transmitters are LOS)`; `k = 0` gives one.
pub fn at_least_k(lambda_b: f64, mu: f64, proj: &[f64], k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > proj.len() {
        return 0.0;
    }
    let dist = count_distribution(lambda_b, mu, proj);
    dist[k..].iter().sum::<f64>().clamp(0.0, 1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Partial sums `B_J = sum_{j=k}^{J} (-1)^(j-k) C(j-1, k-1) S_j` for
/// `J = k..=n`, given `S_0..S_n`. The last one equals `P(at least k)`;
/// the others alternate between upper (`J - k` even) and lower bounds.
pub fn bonferroni_partial_sums(sums: &[f64], k: usize) -> Vec<f64> {
    let n = sums.len().saturating_sub(1);
    if k == 0 || k > n {
        return Vec::new();
    }
    let mut acc = 0.0;
    (k..=n)
        .map(|j| {
            let sign = if (j - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * binomial(j - 1, k - 1) * sums[j];
            acc
        })
        .collect()
}

/// Literal route: enumerate every non-empty subset, evaluate its joint-LOS
/// probability, and apply the at-least-k identity.
pub fn at_least_k_enumerated(lambda_b: f64, mu: f64, proj: &[f64], k: usize) -> Result<f64> {
    let n = proj.len();
    if n > ENUMERATION_CAP {
        return Err(Error::BudgetExceeded {
            what: "subset enumeration",
            needed: n,
            cap: ENUMERATION_CAP,
        });
    }
    if k == 0 {
        return Ok(1.0);
    }
    let mut sums = vec![0.0; n + 1];
    sums[0] = 1.0;
    let mut sub = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        sub.clear();
        sub.extend((0..n).filter(|i| mask & (1 << i) != 0).map(|i| proj[i]));
        sums[sub.len()] += log_joint_sorted(lambda_b, mu, &sub).exp();
    }
    Ok(bonferroni_partial_sums(&sums, k)
        .last()
        .copied()
        .unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{los_prob_joint_projected, los_prob_single};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const LB: f64 = 0.02;
    const MU: f64 = 0.4;

    /// Union over pair events `L_{i,j}`, inclusion–exclusion over sets of
    /// pairs, each conjunction reduced to its distinct transmitters.
    fn at_least_two_by_pairs(proj: &[f64]) -> f64 {
        let n = proj.len();
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut total = 0.0;
        for mask in 1u64..(1u64 << pairs.len()) {
            let mut used = vec![false; n];
            let mut m = 0;
            for (b, &(i, j)) in pairs.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    used[i] = true;
                    used[j] = true;
                    m += 1;
                }
            }
            let pts: Vec<f64> = (0..n).filter(|&i| used[i]).map(|i| proj[i]).collect();
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * los_prob_joint_projected(LB, MU, &pts).unwrap();
        }
        total
    }

    #[test]
    fn two_transmitters_union() {
        // P(L1 or L2) = 2 P(L1) - P(L1 and L2)
        let proj = [0.0, 5.0];
        let pair = los_prob_joint_projected(LB, MU, &proj).unwrap();
        let expected = 2.0 * los_prob_single(LB, MU) - pair;
        assert_relative_eq!(at_least_k(LB, MU, &proj, 1), expected, max_relative = 1e-14);
        assert_relative_eq!(at_least_k(LB, MU, &proj, 2), pair, max_relative = 1e-14);
        assert_relative_eq!(at_least_k_enumerated(LB, MU, &proj, 1).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn pair_event_expansion_agrees() {
        for proj in [vec![0.0, 3.0, 4.0], vec![-10.0, 0.0, 1.0, 30.0], vec![2.0, 2.0, 9.0, 9.5]] {
            let by_pairs = at_least_two_by_pairs(&proj);
            assert_relative_eq!(at_least_k(LB, MU, &proj, 2), by_pairs, epsilon = 1e-13);
            assert_relative_eq!(at_least_k_enumerated(LB, MU, &proj, 2).unwrap(), by_pairs, epsilon = 1e-13);
        }
    }

    #[test]
    fn obstacle_free_counts_everyone() {
        let proj = [0.0, 1.0, 2.0];
        let dist = count_distribution(0.0, MU, &proj);
        assert_eq!(dist, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(at_least_k(0.0, MU, &proj, 3), 1.0);
        assert_eq!(at_least_k(LB, MU, &proj, 4), 0.0);
        assert_eq!(at_least_k(LB, MU, &proj, 0), 1.0);
    }

    #[test]
    fn far_apart_is_binomial() {
        let proj: Vec<f64> = (0..6).map(|i| 1e4 * i as f64).collect();
        let q = los_prob_single(LB, MU);
        let dist = count_distribution(LB, MU, &proj);
        for (m, &p) in dist.iter().enumerate() {
            let b = binomial(6, m) * q.powi(m as i32) * (1.0 - q).powi(6 - m as i32);
            assert_relative_eq!(p, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn coincident_points_move_together() {
        let q = los_prob_single(LB, MU);
        let dist = count_distribution(LB, MU, &[3.0; 5]);
        assert_relative_eq!(dist[5], q, epsilon = 1e-14);
        assert_relative_eq!(dist[0], 1.0 - q, epsilon = 1e-14);
        assert!(dist[1..5].iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            at_least_k_enumerated(LB, MU, &[0.0; 21], 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn stable_for_many_dense_transmitters() {
        // 60 points with gaps comparable to the obstacle length
        let proj: Vec<f64> = (0..60).map(|i| 1.7 * i as f64 + (i as f64 * 0.37).sin()).collect();
        let dist = count_distribution(0.05, 0.3, &proj);
        let total: f64 = dist.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(dist.iter().all(|&p| p > -1e-12), "{dist:?}");
        assert_relative_eq!(dist[60], los_prob_joint_projected(0.05, 0.3, &proj).unwrap(), max_relative = 1e-9);
    }

    fn layout() -> impl Strategy<Value = (f64, f64, Vec<f64>)> {
        (
            0.001..0.05f64,
            0.1..1.0f64,
            prop::collection::vec(-60.0..60.0f64, 1..11),
        )
            .prop_map(|(lb, mu, mut xs)| {
                xs.sort_by(f64::total_cmp);
                (lb, mu, xs)
            })
    }

    proptest! {
        #[test]
        fn dynamic_program_matches_enumeration((lb, mu, xs) in layout(), k in 1usize..5) {
            let fast = at_least_k(lb, mu, &xs, k);
            let slow = at_least_k_enumerated(lb, mu, &xs, k).unwrap();
            prop_assert!((fast - slow).abs() < 1e-10, "{} vs {}", fast, slow);
        }

        #[test]
        fn bonferroni_brackets((lb, mu, xs) in layout(), k in 1usize..4) {
            let exact = at_least_k(lb, mu, &xs, k);
            let partial = bonferroni_partial_sums(&subset_sums(lb, mu, &xs), k);
            let tol = 1e-10;
            for (offset, b) in partial.iter().enumerate() {
                if offset % 2 == 0 {
                    prop_assert!(*b >= exact - tol, "upper {} < {}", b, exact);
                } else {
                    prop_assert!(*b <= exact + tol, "lower {} > {}", b, exact);
                }
            }
            if let Some(last) = partial.last() {
                prop_assert!((last - exact).abs() < 1e-9);
            }
        }

        #[test]
        fn nonincreasing_in_k_and_bounded((lb, mu, xs) in layout()) {
            let mut prev = 1.0;
            for k in 0..=xs.len() + 1 {
                let p = at_least_k(lb, mu, &xs, k);
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!(p <= prev + 1e-12);
                prev = p;
            }
            let all = los_prob_joint_projected(lb, mu, &xs).unwrap();
            prop_assert!((at_least_k(lb, mu, &xs, xs.len()) - all).abs() < 1e-12);
        }
    }
}
