use std::collections::HashMap;

use rug::ops::Pow;
use rug::Integer;

use super::{factorial, ExactCount};
use crate::config::Caps;
use crate::error::{Error, Result};

/// Integer partition `λ = 1^{μ_1} 2^{μ_2} ⋯` in multiplicity form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerPartition {
    /// `multiplicities[i − 1] = μ_i`, the number of parts equal to `i`.
    multiplicities: Vec<u64>,
    size: u64,
    parts: u64,
}

impl IntegerPartition {
    pub fn from_multiplicities(multiplicities: Vec<u64>) -> Self {
        let size = multiplicities
            .iter()
            .enumerate()
            .map(|(i, m)| (i as u64 + 1) * m)
            .sum();
        let parts = multiplicities.iter().sum();
        IntegerPartition {
            multiplicities,
            size,
            parts,
        }
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    /// `μ_i` for part size `i ≥ 1`.
    pub fn multiplicity(&self, part: u64) -> u64 {
        part.checked_sub(1)
            .and_then(|i| self.multiplicities.get(i as usize))
            .copied()
            .unwrap_or(0)
    }

    /// `a = Σ i·μ_i`.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// `k = Σ μ_i`.
    pub fn parts(&self) -> u64 {
        self.parts
    }
}

/// All partitions of `a`, generated by recursion over the largest part.
pub fn integer_partitions(a: u64) -> Vec<IntegerPartition> {
    let mut out = Vec::new();
    let mut mult = vec![0u64; a as usize];
    partitions_rec(a, a, &mut mult, &mut out);
    out
}

fn partitions_rec(rest: u64, largest: u64, mult: &mut Vec<u64>, out: &mut Vec<IntegerPartition>) {
    if rest == 0 {
        out.push(IntegerPartition::from_multiplicities(mult.clone()));
        return;
    }
    for part in (1..=largest.min(rest)).rev() {
        mult[part as usize - 1] += 1;
        partitions_rec(rest - part, part, mult, out);
        mult[part as usize - 1] -= 1;
    }
}

/// `S_r(rq + a, q)` as a sum over partitions `λ ⊢ a` with at most `q` parts:
///
/// `Σ_λ (rq+a)! / [ (r!)^{q−k} (q−k)! Π_i ((i+r)!)^{μ_i} μ_i! ]`.
///
/// Each summand counts set partitions whose blocks have sizes
/// `r^{q−k} (r+1)^{μ_1} (r+2)^{μ_2} ⋯`, so every term is an exact integer.
pub fn stirling_partition_sum(r: u32, q: u64, a: u64, caps: &Caps) -> Result<ExactCount> {
    if r < 1 {
        return Err(Error::domain("r must be ≥ 1"));
    }
    if q < 1 {
        return Err(Error::domain("partition sum requires q ≥ 1"));
    }
    if a > caps.max_a {
        return Err(Error::Capacity {
            what: "a",
            requested: a,
            cap: caps.max_a,
        });
    }
    let r = u64::from(r);
    let numerator = factorial(r * q + a);
    let r_fact = factorial(r);
    let mut shifted_fact: HashMap<u64, Integer> = HashMap::new();
    let mut tail_fact: HashMap<u64, Integer> = HashMap::new();
    let mut sum = Integer::new();
    for lambda in integer_partitions(a) {
        let k = lambda.parts();
        if k > q {
            continue;
        }
        let mut denom = Integer::from((&r_fact).pow((q - k) as u32));
        denom *= tail_fact.entry(q - k).or_insert_with(|| factorial(q - k)) as &Integer;
        for (i, &mu) in lambda.multiplicities().iter().enumerate() {
            if mu == 0 {
                continue;
            }
            let part = i as u64 + 1;
            let f = shifted_fact
                .entry(part)
                .or_insert_with(|| factorial(part + r));
            denom *= Integer::from((&*f).pow(mu as u32));
            denom *= factorial(mu);
        }
        sum += Integer::from(numerator.div_exact_ref(&denom));
    }
    ExactCount::new(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let counts = [1usize, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
        for (a, &c) in counts.iter().enumerate() {
            let parts = integer_partitions(a as u64);
            assert_eq!(parts.len(), c, "a = {a}");
            for p in &parts {
                assert_eq!(p.size(), a as u64);
                assert_eq!(p.parts(), p.multiplicities().iter().sum::<u64>());
            }
        }
    }

    #[test]
    fn partitions_are_distinct() {
        let parts = integer_partitions(12);
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn partition_sum_examples() {
        let caps = Caps::default();
        assert_eq!(
            stirling_partition_sum(2, 2, 0, &caps).unwrap(),
            ExactCount::from(3)
        );
        assert_eq!(
            stirling_partition_sum(2, 2, 2, &caps).unwrap(),
            ExactCount::from(25)
        );
        assert_eq!(
            stirling_partition_sum(1, 2, 2, &caps).unwrap(),
            ExactCount::from(7)
        );
    }

    #[test]
    fn partition_sum_one_merged_pair() {
        // S_1(q+1, q) = C(q+1, 2)
        let caps = Caps::default();
        assert_eq!(
            stirling_partition_sum(1, 100, 1, &caps).unwrap(),
            ExactCount::from(5050)
        );
    }

    #[test]
    fn partition_sum_cap_and_domain() {
        let caps = Caps {
            max_a: 4,
            ..Caps::default()
        };
        assert!(matches!(
            stirling_partition_sum(2, 3, 5, &caps),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            stirling_partition_sum(2, 0, 1, &caps),
            Err(Error::Domain(_))
        ));
    }
}
