//! Three dynamic defensive lines from a 1D k-means on defenders' depth.

use serde::{Deserialize, Serialize};

use super::TacticalError;

const K: usize = 3;
const MAX_ITERATIONS: usize = 100;

/// Line depths sorted ascending: `line_x[0]` is the first line (furthest from
/// the defended `+x` goal) and `line_x[2]` the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicLines {
    pub line_x: [f64; 3],
    /// Line index of each input value, in input order.
    pub membership: Vec<usize>,
}

impl DynamicLines {
    pub fn first(&self) -> f64 {
        self.line_x[0]
    }

    pub fn last(&self) -> f64 {
        self.line_x[2]
    }

    /// Within-cluster sum of squares for the values the lines were fitted on.
    pub fn sse(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .zip(&self.membership)
            .map(|(x, &m)| (x - self.line_x[m]).powi(2))
            .sum()
    }
}

fn nearest(x: f64, centroids: &[f64; K]) -> usize {
    let mut best = 0;
    for k in 1..K {
        if (x - centroids[k]).abs() < (x - centroids[best]).abs() {
            best = k;
        }
    }
    best
}

/// Lloyd's algorithm seeded at the 1/6, 3/6 and 5/6 quantiles, iterated to an
/// assignment fixpoint. Empty clusters are reseeded at the point farthest
/// from its centroid. If Lloyd stops in a local optimum the exact
/// contiguous-partition optimum replaces it.
pub fn fit_lines(xs: &[f64]) -> Result<DynamicLines, TacticalError> {
    if xs.len() < K {
        return Err(TacticalError::TooFewDefenders { visible: xs.len() });
    }
    let n = xs.len();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut centroids = [0.0; K];
    for (k, c) in centroids.iter_mut().enumerate() {
        let q = (2 * k + 1) as f64 / (2 * K) as f64;
        *c = sorted[((q * n as f64) as usize).min(n - 1)];
    }

    // Lloyd runs on the sorted values so the result cannot depend on input
    // order.
    let mut assignment = vec![usize::MAX; n];
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<usize> = sorted.iter().map(|&x| nearest(x, &centroids)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
        let mut sums = [0.0; K];
        let mut counts = [0usize; K];
        for (&x, &a) in sorted.iter().zip(&assignment) {
            sums[a] += x;
            counts[a] += 1;
        }
        for k in 0..K {
            if counts[k] > 0 {
                centroids[k] = sums[k] / counts[k] as f64;
            }
        }
        for k in 0..K {
            if counts[k] == 0 {
                let far = (0..n)
                    .max_by(|&i, &j| {
                        let di = (sorted[i] - centroids[assignment[i]]).abs();
                        let dj = (sorted[j] - centroids[assignment[j]]).abs();
                        di.total_cmp(&dj).then(j.cmp(&i))
                    })
                    .expect("n >= 3");
                centroids[k] = sorted[far];
            }
        }
    }
    let membership: Vec<usize> = xs.iter().map(|&x| nearest(x, &centroids)).collect();
    let mut lines = sorted_lines(centroids, &membership);

    let (opt_sse, opt_lines) = optimal_partition(xs, &sorted);
    if opt_sse < lines.sse(xs) - 1e-9 * (1.0 + opt_sse) {
        lines = opt_lines;
    }
    Ok(lines)
}

fn sorted_lines(centroids: [f64; K], assignment: &[usize]) -> DynamicLines {
    let mut order: Vec<usize> = (0..K).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]).then(a.cmp(&b)));
    let mut rank = [0; K];
    for (r, &k) in order.iter().enumerate() {
        rank[k] = r;
    }
    DynamicLines {
        line_x: [centroids[order[0]], centroids[order[1]], centroids[order[2]]],
        membership: assignment.iter().map(|&a| rank[a]).collect(),
    }
}

/// Exact 1D k-means for k = 3 by dynamic programming over the sorted values;
/// optimal 1D clusters are contiguous in sorted order.
fn optimal_partition(xs: &[f64], sorted: &[f64]) -> (f64, DynamicLines) {
    let n = sorted.len();
    let mut s1 = vec![0.0; n + 1];
    for (i, &x) in sorted.iter().enumerate() {
        s1[i + 1] = s1[i] + x;
    }
    // Sum of squares computed directly to avoid cancellation.
    let cost = |i: usize, j: usize| {
        let m = (s1[j] - s1[i]) / (j - i) as f64;
        sorted[i..j].iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let mut best = (f64::INFINITY, 0, 0);
    for a in 1..n - 1 {
        for b in a + 1..n {
            let c = cost(0, a) + cost(a, b) + cost(b, n);
            if c < best.0 {
                best = (c, a, b);
            }
        }
    }
    let (_, a, b) = best;
    let mean = |i: usize, j: usize| (s1[j] - s1[i]) / (j - i) as f64;
    let centroids = [mean(0, a), mean(a, b), mean(b, n)];
    let (lo_cut, hi_cut) = (sorted[a], sorted[b]);
    let assignment: Vec<usize> = xs
        .iter()
        .map(|&x| {
            if x >= hi_cut {
                2
            } else if x >= lo_cut {
                1
            } else {
                0
            }
        })
        .collect();
    let lines = sorted_lines(centroids, &assignment);
    (lines.sse(xs), lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive search over every contiguous 3-partition of the sorted
    /// values.
    fn brute_force_sse(xs: &[f64]) -> f64 {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let sse = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        let n = s.len();
        let mut best = f64::INFINITY;
        for a in 1..n - 1 {
            for b in a + 1..n {
                best = best.min(sse(&s[..a]) + sse(&s[a..b]) + sse(&s[b..]));
            }
        }
        best
    }

    #[test]
    fn three_pairs() {
        let xs = [10.0, 11.0, 25.0, 26.0, 40.0, 41.0];
        let l = fit_lines(&xs).unwrap();
        assert_eq!(l.line_x, [10.5, 25.5, 40.5]);
        assert_eq!(l.membership, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn coincident_defenders() {
        let l = fit_lines(&[30.0; 5]).unwrap();
        assert_eq!(l.line_x, [30.0; 3]);
    }

    #[test]
    fn too_few_defenders() {
        assert_eq!(
            fit_lines(&[1.0, 2.0]).unwrap_err(),
            TacticalError::TooFewDefenders { visible: 2 }
        );
    }

    #[test]
    fn escapes_lloyd_local_optimum() {
        // One far outlier and a tight pile at zero.
        let xs = [0.0, 0.0, 0.0, 0.0, 10.0, 11.0, 30.0, 100.0];
        let l = fit_lines(&xs).unwrap();
        assert!((l.sse(&xs) - brute_force_sse(&xs)).abs() < 1e-9);
    }

    /// Centroids of the best contiguous 3-partition, by exhaustive search.
    fn brute_force_centroids(xs: &[f64]) -> [f64; 3] {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sse = |v: &[f64]| v.iter().map(|x| (x - mean(v)).powi(2)).sum::<f64>();
        let n = s.len();
        let mut best = (f64::INFINITY, [0.0; 3]);
        for a in 1..n - 1 {
            for b in a + 1..n {
                let c = sse(&s[..a]) + sse(&s[a..b]) + sse(&s[b..]);
                if c < best.0 {
                    best = (c, [mean(&s[..a]), mean(&s[a..b]), mean(&s[b..])]);
                }
            }
        }
        best.1
    }

    #[test]
    fn noisy_back_mid_front_recovered() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut ok = 0;
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut xs = Vec::new();
            for (center, count) in [(20.0, 4), (35.0, 4), (50.0, 2)] {
                for _ in 0..count {
                    xs.push(center + noise.sample(&mut rng));
                }
            }
            let l = fit_lines(&xs).unwrap();
            let oracle = brute_force_centroids(&xs);
            if (0..3).all(|k| (l.line_x[k] - oracle[k]).abs() < 1.0) {
                ok += 1;
            }
        }
        assert!(ok >= 99, "{ok}/100");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn optimal_and_permutation_invariant(
                xs in proptest::collection::vec(0.0f64..105.0, 3..=12),
                rot in 0usize..12,
            ) {
                let l = fit_lines(&xs).unwrap();
                let best = brute_force_sse(&xs);
                prop_assert!(l.sse(&xs) <= best + 1e-9 * (1.0 + best));
                let mut shuffled = xs.clone();
                shuffled.rotate_left(rot % xs.len());
                shuffled.reverse();
                let l2 = fit_lines(&shuffled).unwrap();
                for k in 0..3 {
                    prop_assert!((l.line_x[k] - l2.line_x[k]).abs() < 1e-9);
                }
            }
        }
    }
}
