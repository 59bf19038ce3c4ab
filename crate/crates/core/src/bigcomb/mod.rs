//! Exact values of `S_r(p, q)`, the number of partitions of a `p`-set into
//! `q` blocks each of size at least `r`.
//!
//! The recurrence table is the method of record. [`stirling_alekseyev_r2`],
//! [`stirling_partition_sum`] and [`stirling_contour`] are independent routes
//! used to cross-check it.

mod contour;
mod partition;

use std::collections::VecDeque;
use std::fmt;

use rug::{Float, Integer};

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::prec::PrecReal;

pub use contour::{stirling_contour, ContourEstimate, ContourOptions};
pub use partition::{integer_partitions, stirling_partition_sum, IntegerPartition};

/// Arbitrary-precision non-negative integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactCount(Integer);

impl ExactCount {
    pub fn new(value: Integer) -> Result<Self> {
        if value < 0 {
            return Err(Error::Consistency(format!("negative count {value}")));
        }
        Ok(ExactCount(value))
    }

    pub fn zero() -> Self {
        ExactCount(Integer::new())
    }

    pub fn value(&self) -> &Integer {
        &self.0
    }

    pub fn into_inner(self) -> Integer {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0
    }

    /// Natural log at the given precision; see [`log_of_count`].
    pub fn ln(&self, prec: u32) -> Result<PrecReal> {
        log_of_count(self, prec)
    }
}

impl From<u64> for ExactCount {
    fn from(v: u64) -> Self {
        ExactCount(Integer::from(v))
    }
}

impl fmt::Display for ExactCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn factorial(n: u64) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}

pub fn binomial(n: u64, k: u64) -> Integer {
    if k > n {
        return Integer::new();
    }
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

/// `ln n` from the bit length and the leading `prec + 64` bits of `n`.
///
/// Relative error is below `2^{−(prec−4)}`.
pub fn log_of_count(n: &ExactCount, prec: u32) -> Result<PrecReal> {
    let n = n.value();
    if n.cmp0().is_le() {
        return Err(Error::domain("log of a zero count"));
    }
    let bits = n.significant_bits();
    let keep = prec + 64;
    let work = prec + 32;
    if bits <= keep {
        return Ok(Float::with_val(
            prec,
            Float::with_val(bits.max(work), n).ln(),
        ));
    }
    let shift = bits - keep;
    let top = Integer::from(n >> shift);
    let mut ln = Float::with_val(work, Float::with_val(keep, &top).ln());
    let ln2 = Float::with_val(work, rug::float::Constant::Log2);
    ln += ln2 * shift;
    Ok(Float::with_val(prec, ln))
}

fn check_p_cap(p: u64, caps: &Caps) -> Result<()> {
    if p > caps.max_p {
        return Err(Error::Capacity {
            what: "p",
            requested: p,
            cap: caps.max_p,
        });
    }
    Ok(())
}

/// All `S_r(p, q)` for `0 ≤ p ≤ max_p`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    r: u32,
    max_p: u64,
    rows: Vec<Vec<Integer>>,
}

impl StirlingTable {
    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn max_p(&self) -> u64 {
        self.max_p
    }

    /// `S_r(p, q)`; zero outside `1 ≤ q ≤ ⌊p/r⌋` except `S_r(0, 0) = 1`.
    ///
    /// Panics if `p > max_p`.
    pub fn get(&self, p: u64, q: u64) -> ExactCount {
        assert!(
            p <= self.max_p,
            "p = {p} beyond table max_p = {}",
            self.max_p
        );
        let row = &self.rows[p as usize];
        row.get(q as usize)
            .map_or_else(ExactCount::zero, |v| ExactCount(v.clone()))
    }

    pub fn row(&self, p: u64) -> &[Integer] {
        &self.rows[p as usize]
    }
}

/// Next row of the recurrence
/// `S_r(p, q) = q·S_r(p−1, q) + C(p−1, r−1)·S_r(p−r, q−1)`.
fn next_row(r: u32, p: u64, prev: &[Integer], back_r: Option<&[Integer]>) -> Vec<Integer> {
    let width = (p / u64::from(r)) as usize + 1;
    let mut row = vec![Integer::new(); width];
    let c = binomial(p - 1, u64::from(r) - 1);
    for (q, slot) in row.iter_mut().enumerate().skip(1) {
        if let Some(prev_q) = prev.get(q) {
            *slot += Integer::from(prev_q * q as u32);
        }
        if let Some(back) = back_r.and_then(|b| b.get(q - 1)) {
            *slot += Integer::from(back * &c);
        }
    }
    row
}

pub fn build_table(r: u32, max_p: u64, caps: &Caps) -> Result<StirlingTable> {
    if r < 1 || max_p < 1 {
        return Err(Error::domain(format!(
            "table needs r ≥ 1 and max_p ≥ 1, got r = {r}, max_p = {max_p}"
        )));
    }
    check_p_cap(max_p, caps)?;
    let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(max_p as usize + 1);
    rows.push(vec![Integer::from(1)]);
    for p in 1..=max_p {
        let back = p
            .checked_sub(u64::from(r))
            .map(|i| rows[i as usize].as_slice());
        let row = next_row(r, p, &rows[p as usize - 1], back);
        rows.push(row);
    }
    Ok(StirlingTable { r, max_p, rows })
}

/// Row `S_r(p, ·)` for `q = 0..=⌊p/r⌋`, keeping only `r` rows in memory.
pub fn stirling_row(r: u32, p: u64, caps: &Caps) -> Result<Vec<ExactCount>> {
    if r < 1 {
        return Err(Error::domain("r must be ≥ 1"));
    }
    check_p_cap(p, caps)?;
    let mut window: VecDeque<Vec<Integer>> = VecDeque::with_capacity(r as usize + 1);
    window.push_back(vec![Integer::from(1)]);
    for i in 1..=p {
        let back = if i >= u64::from(r) {
            Some(window[window.len() - r as usize].as_slice())
        } else {
            None
        };
        let row = next_row(r, i, window.back().expect("window is never empty"), back);
        window.push_back(row);
        if window.len() > r as usize {
            window.pop_front();
        }
    }
    Ok(window
        .pop_back()
        .expect("window is never empty")
        .into_iter()
        .map(ExactCount)
        .collect())
}

/// `S_r(p, q)` through the recurrence.
pub fn stirling(r: u32, p: u64, q: u64, caps: &Caps) -> Result<ExactCount> {
    let row = stirling_row(r, p, caps)?;
    Ok(row
        .get(q as usize)
        .cloned()
        .unwrap_or_else(ExactCount::zero))
}

/// `S_2(p, q) = Σ_{i=0}^{q} (−1)^i C(p, i)·S_1(p−i, q−i)`.
pub fn stirling_alekseyev_r2(p: u64, q: u64, caps: &Caps) -> Result<ExactCount> {
    if p < 1 {
        return Err(Error::domain("Alekseyev sum requires p ≥ 1"));
    }
    if q > p / 2 {
        return Err(Error::domain(format!(
            "Alekseyev sum requires q ≤ ⌊p/2⌋, got p = {p}, q = {q}"
        )));
    }
    let table = build_table(1, p, caps)?;
    alekseyev_with_table(&table, p, q)
}

/// Alekseyev sum reusing a prebuilt `r = 1` table with `max_p ≥ p`.
pub fn alekseyev_with_table(s1: &StirlingTable, p: u64, q: u64) -> Result<ExactCount> {
    assert_eq!(s1.r(), 1, "Alekseyev sum needs the classical (r = 1) table");
    let mut sum = Integer::new();
    for i in 0..=q {
        let term = binomial(p, i) * s1.get(p - i, q - i).value();
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    ExactCount::new(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn table_examples() {
        let t2 = build_table(2, 6, &caps()).unwrap();
        assert_eq!(t2.get(4, 2), ExactCount::from(3));
        assert_eq!(t2.get(6, 2), ExactCount::from(25));
        let t1 = build_table(1, 4, &caps()).unwrap();
        assert_eq!(t1.get(4, 2), ExactCount::from(7));
    }

    #[test]
    fn table_boundaries() {
        let t = build_table(3, 20, &caps()).unwrap();
        assert_eq!(t.get(0, 0), ExactCount::from(1));
        for p in 1..=20 {
            assert!(t.get(p, 0).is_zero());
            assert!(t.get(p, p / 3 + 1).is_zero());
        }
        // all blocks of size exactly r: (rq)!/(q!(r!)^q)
        for q in 1..=6u64 {
            let expected = factorial(3 * q) / (factorial(q) * Integer::from(6u32).pow(q as u32));
            assert_eq!(t.get(3 * q, q).value(), &expected);
        }
    }

    #[test]
    fn bell_numbers_from_r1_rows() {
        let bell = [
            1u64, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597,
        ];
        let t = build_table(1, 12, &caps()).unwrap();
        for (p, b) in bell.iter().enumerate() {
            let sum: Integer = t.row(p as u64).iter().sum();
            assert_eq!(sum, *b, "p = {p}");
        }
    }

    #[test]
    fn rolling_row_matches_table() {
        for r in 1..=4 {
            let t = build_table(r, 40, &caps()).unwrap();
            for p in [1u64, 7, 23, 40] {
                let row = stirling_row(r, p, &caps()).unwrap();
                let expected: Vec<ExactCount> = t.row(p).iter().cloned().map(ExactCount).collect();
                assert_eq!(row, expected, "r = {r}, p = {p}");
            }
        }
    }

    #[test]
    fn table_caps_and_domain() {
        let small = Caps {
            max_p: 10,
            ..Caps::default()
        };
        assert!(matches!(
            build_table(2, 11, &small),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(build_table(0, 5, &small), Err(Error::Domain(_))));
        assert!(matches!(
            stirling_row(2, 11, &small),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn alekseyev_examples() {
        assert_eq!(
            stirling_alekseyev_r2(5, 2, &caps()).unwrap(),
            ExactCount::from(10)
        );
        assert_eq!(
            stirling_alekseyev_r2(4, 2, &caps()).unwrap(),
            ExactCount::from(3)
        );
        assert!(stirling_alekseyev_r2(3, 0, &caps()).unwrap().is_zero());
        assert!(matches!(
            stirling_alekseyev_r2(5, 3, &caps()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn log_of_count_examples() {
        assert!(log_of_count(&ExactCount::from(1), 128).unwrap().is_zero());
        let ln1024 = log_of_count(&ExactCount::from(1024), 128).unwrap();
        let expected = Float::with_val(128, rug::float::Constant::Log2) * 10u32;
        assert!(Float::with_val(128, &ln1024 - &expected).abs() < 1e-36);
        let ln25 = log_of_count(&ExactCount::from(25), 128).unwrap();
        assert!((ln25.to_f64() - 3.2188758248682006).abs() < 1e-15);
        assert!(matches!(
            log_of_count(&ExactCount::zero(), 64),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn log_of_huge_count_is_accurate() {
        // ln(3^5000) = 5000·ln 3
        let n = ExactCount(Integer::from(3u32).pow(5000));
        for prec in [64u32, 128, 256] {
            let ln = log_of_count(&n, prec).unwrap();
            let expected = Float::with_val(prec + 64, 3u32).ln() * 5000u32;
            let rel = Float::with_val(prec + 64, &ln - &expected).abs() / &expected;
            let bound = Float::with_val(64, 1u32) >> (prec - 4);
            assert!(rel <= bound, "prec = {prec}: rel = {rel}");
        }
    }
}
