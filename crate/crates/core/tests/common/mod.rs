//! Oracles shared by the integration tests.

#![allow(dead_code)]

/// `counts[r][q]` = number of partitions of `{1..p}` into `q` blocks, each
/// of size ≥ `r`, for `0 ≤ r ≤ max_r`, by exhaustive enumeration of
/// restricted growth strings.
pub fn brute_force_counts(p: usize, max_r: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; p + 1]; max_r + 1];
    let mut sizes = Vec::with_capacity(p);
    enumerate(p, &mut sizes, &mut counts);
    counts
}

fn enumerate(remaining: usize, sizes: &mut Vec<usize>, counts: &mut [Vec<u64>]) {
    if remaining == 0 {
        let q = sizes.len();
        let smallest = sizes.iter().copied().min().unwrap_or(usize::MAX);
        // a partition with smallest block m counts for every r ≤ m
        for row in counts.iter_mut().take(smallest.saturating_add(1)) {
            row[q] += 1;
        }
        return;
    }
    for b in 0..sizes.len() {
        sizes[b] += 1;
        enumerate(remaining - 1, sizes, counts);
        sizes[b] -= 1;
    }
    sizes.push(1);
    enumerate(remaining - 1, sizes, counts);
    sizes.pop();
}

/// Relative difference `|a/b − 1|` of two log values, `|e^{a−b} − 1|`.
pub fn rel_from_logs(log_a: &rug::Float, log_b: &rug::Float) -> f64 {
    let d = rug::Float::with_val(log_a.prec().max(log_b.prec()), log_a - log_b);
    d.exp_m1().abs().to_f64()
}
