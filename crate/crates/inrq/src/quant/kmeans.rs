//! Exact 1D K-means by dynamic programming.
//!
//! Optimal clusters of sorted scalars are contiguous, so the problem reduces
//! to partitioning the sorted distinct values (weighted by multiplicity) into
//! at most `m` runs minimizing within-cluster squared error. Rows of the
//! program have monotone split points, which divide-and-conquer exploits for
//! an `O(m n log n)` fill after the `O(n log n)` sort.

use crate::error::{Error, Result};

/// Centroids of the globally optimal k-means partition of `values` into at
/// most `max_levels` clusters, in increasing order. When the number of
/// distinct values does not exceed `max_levels` the distinct values are
/// returned and the clustering error is exactly zero.
pub fn kmeans_1d(values: &[f64], max_levels: usize) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Config("k-means needs at least one value".into()));
    }
    if max_levels == 0 {
        return Err(Error::Config("k-means needs at least one cluster".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("k-means input must be finite".into()));
    }

    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);

    // Collapse duplicates into (value, multiplicity) pairs.
    let mut xs: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for &v in &sorted {
        if xs.last() == Some(&v) {
            *counts.last_mut().expect("counts tracks xs") += 1.0;
        } else {
            xs.push(v);
            counts.push(1.0);
        }
    }
    let n = xs.len();
    if n <= max_levels {
        return Ok(xs);
    }
    let m = max_levels;

    // Weighted prefix sums for O(1) cluster cost: for the run [i, j],
    // cost = sum w x^2 - (sum w x)^2 / sum w.
    let mut pw = vec![0.0; n + 1];
    let mut px = vec![0.0; n + 1];
    let mut pxx = vec![0.0; n + 1];
    for i in 0..n {
        pw[i + 1] = pw[i] + counts[i];
        px[i + 1] = px[i] + counts[i] * xs[i];
        pxx[i + 1] = pxx[i] + counts[i] * xs[i] * xs[i];
    }
    let cost = |i: usize, j: usize| -> f64 {
        let w = pw[j + 1] - pw[i];
        let sx = px[j + 1] - px[i];
        let sxx = pxx[j + 1] - pxx[i];
        (sxx - sx * sx / w).max(0.0)
    };

    // dp[j] = best cost of clustering xs[0..=j] into the first r+1 clusters.
    // splits[r][j] = start index of the last cluster on that path.
    let mut dp_prev: Vec<f64> = (0..n).map(|j| cost(0, j)).collect();
    let mut dp_cur = vec![0.0; n];
    let mut splits: Vec<Vec<u32>> = vec![Vec::new(); m];

    for r in 1..m {
        let mut split_row = vec![0u32; n];
        fill_row(r, n, &cost, &dp_prev, &mut dp_cur, &mut split_row);
        splits[r] = split_row;
        std::mem::swap(&mut dp_prev, &mut dp_cur);
    }

    // Walk the split chain back from the full range.
    let mut bounds = vec![0usize; m + 1];
    bounds[m] = n;
    let mut j = n - 1;
    for r in (1..m).rev() {
        let s = splits[r][j] as usize;
        bounds[r] = s;
        j = s - 1;
    }
    // Centroids by direct summation over each run; prefix-sum differences
    // would lose exactness on singleton clusters.
    let centroids = (0..m)
        .map(|r| {
            let (i, j) = (bounds[r], bounds[r + 1] - 1);
            if i == j {
                return xs[i];
            }
            let mut sw = 0.0;
            let mut sx = 0.0;
            for t in i..=j {
                sw += counts[t];
                sx += counts[t] * xs[t];
            }
            sx / sw
        })
        .collect();
    Ok(centroids)
}

/// Fills DP row `r` for `j in r..n` by divide and conquer over the monotone
/// argmin. The split for `j` is the start index `s` of the last cluster,
/// searched within `[r, j]`.
fn fill_row(
    r: usize,
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
    dp_prev: &[f64],
    dp_cur: &mut [f64],
    split_row: &mut [u32],
) {
    // Explicit work stack to avoid recursion depth limits on large layers.
    let mut stack = vec![(r, n - 1, r, n - 1)];
    while let Some((jlo, jhi, slo, shi)) = stack.pop() {
        if jlo > jhi {
            continue;
        }
        let jm = jlo + (jhi - jlo) / 2;
        let mut best = f64::INFINITY;
        let mut best_s = slo;
        for s in slo..=shi.min(jm) {
            let c = dp_prev[s - 1] + cost(s, jm);
            if c < best {
                best = c;
                best_s = s;
            }
        }
        dp_cur[jm] = best;
        split_row[jm] = best_s as u32;
        if jm > jlo {
            stack.push((jlo, jm - 1, slo, best_s));
        }
        if jm < jhi {
            stack.push((jm + 1, jhi, best_s, shi));
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::matrix::Matrix;
    use crate::quant::{apply_map, layer_error, QuantizationMap, QuantMethod};

    /// Minimum SSE over every contiguous partition of the sorted values into
    /// at most `m` clusters, by exhaustive enumeration of split positions.
    pub(crate) fn brute_force_sse(values: &[f64], m: usize) -> f64 {
        let mut xs = values.to_vec();
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len();
        let sse = |i: usize, j: usize| -> f64 {
            let seg = &xs[i..=j];
            let mean = seg.iter().sum::<f64>() / seg.len() as f64;
            seg.iter().map(|&v| (v - mean) * (v - mean)).sum()
        };
        fn go(xs_len: usize, start: usize, clusters_left: usize, sse: &dyn Fn(usize, usize) -> f64) -> f64 {
            if start == xs_len {
                return 0.0;
            }
            if clusters_left == 1 {
                return sse(start, xs_len - 1);
            }
            let mut best = f64::INFINITY;
            for end in start..xs_len {
                let c = sse(start, end) + go(xs_len, end + 1, clusters_left - 1, sse);
                if c < best {
                    best = c;
                }
            }
            best
        }
        go(n, 0, m, &sse)
    }

    fn solver_sse(values: &[f64], m: usize, bits: u8) -> f64 {
        let levels = kmeans_1d(values, m).unwrap();
        let map = QuantizationMap::new(levels, QuantMethod::Kmeans, bits).unwrap();
        let w = Matrix::from_vec(1, values.len(), values.to_vec());
        layer_error(&w, &map)
    }

    #[test]
    fn separable_clusters_have_zero_error() {
        let levels = kmeans_1d(&[0.0, 0.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(levels, vec![0.0, 1.0]);
        assert_eq!(solver_sse(&[0.0, 0.0, 1.0, 1.0], 2, 1), 0.0);
    }

    #[test]
    fn three_point_instance_prefers_balanced_split() {
        // {0, 0.4} | {1} has SSE 0.08, beating {0} | {0.4, 1} at 0.18.
        let levels = kmeans_1d(&[0.0, 0.4, 1.0], 2).unwrap();
        assert!((levels[0] - 0.2).abs() < 1e-15);
        assert_eq!(levels[1], 1.0);
        assert!((solver_sse(&[0.0, 0.4, 1.0], 2, 1) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn fewer_distinct_values_than_clusters_is_exact() {
        let levels = kmeans_1d(&[0.5, 0.5, -0.25, 0.5, -0.25], 4).unwrap();
        assert_eq!(levels, vec![-0.25, 0.5]);
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..400 {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(1..=4);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = solver_sse(&values, m, 4);
            let want = brute_force_sse(&values, m);
            assert!((got - want).abs() < 1e-9, "trial {trial}: got {got} want {want}");
        }
    }

    #[test]
    fn handles_duplicates_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..=10);
            let m = rng.gen_range(1..=4);
            // Duplicates are likely with a coarse value alphabet.
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-2i32..=2) as f64 * 0.25).collect();
            let got = solver_sse(&values, m, 4);
            let want = brute_force_sse(&values, m);
            assert!((got - want).abs() < 1e-9, "{values:?} m={m}: got {got} want {want}");
        }
    }

    #[test]
    fn sse_is_monotone_in_cluster_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut prev = f64::INFINITY;
        for bits in 1..=6u8 {
            let sse = solver_sse(&values, 1 << bits, bits);
            assert!(sse <= prev + 1e-12, "bits {bits}: {sse} > {prev}");
            prev = sse;
        }
    }

    #[test]
    fn large_input_agrees_with_quadratic_reference() {
        // Straight O(m n^2) DP as an independent check at a size the
        // exhaustive oracle cannot reach.
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let values: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = 8;

        let mut xs = values.clone();
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len();
        let mut px = vec![0.0; n + 1];
        let mut pxx = vec![0.0; n + 1];
        for i in 0..n {
            px[i + 1] = px[i] + xs[i];
            pxx[i + 1] = pxx[i] + xs[i] * xs[i];
        }
        let cost = |i: usize, j: usize| {
            let w = (j + 1 - i) as f64;
            let sx = px[j + 1] - px[i];
            (pxx[j + 1] - pxx[i] - sx * sx / w).max(0.0)
        };
        let mut dp: Vec<f64> = (0..n).map(|j| cost(0, j)).collect();
        for _ in 1..m {
            let mut next = vec![f64::INFINITY; n];
            for j in 0..n {
                let mut best = dp[j];
                for s in 1..=j {
                    let c = dp[s - 1] + cost(s, j);
                    if c < best {
                        best = c;
                    }
                }
                next[j] = best;
            }
            dp = next;
        }
        let want = dp[n - 1];
        let got = solver_sse(&values, m, 3);
        assert!((got - want).abs() < 1e-9, "got {got} want {want}");
    }

    proptest! {
        #[test]
        fn never_worse_than_exhaustive(values in proptest::collection::vec(-1.0f64..1.0, 1..9), m in 1usize..4) {
            let got = solver_sse(&values, m, 2);
            let want = brute_force_sse(&values, m);
            prop_assert!((got - want).abs() < 1e-9);
        }

        #[test]
        fn centroids_are_strictly_increasing(values in proptest::collection::vec(-1.0f64..1.0, 1..40), m in 1usize..16) {
            let levels = kmeans_1d(&values, m).unwrap();
            prop_assert!(levels.windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn assignment_error_equals_partition_error(values in proptest::collection::vec(-1.0f64..1.0, 2..30)) {
            // Nearest-centroid assignment must not beat or lose to the
            // partition the DP found; both routes report the same SSE.
            let m = 4;
            let levels = kmeans_1d(&values, m).unwrap();
            let map = QuantizationMap::new(levels, QuantMethod::Kmeans, 2).unwrap();
            let w = Matrix::from_vec(1, values.len(), values.clone());
            let q = apply_map(&w, &map);
            let direct: f64 = w.data().iter().zip(q.data()).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!((direct - layer_error(&w, &map)).abs() < 1e-12);
        }
    }
}
