//! Exact binomial coefficients.

use num_bigint::BigUint;
use num_traits::One;

/// Pascal triangle of `C(i, j)` for `i <= rows`, `j <= cols`.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl BinomialTable {
    /// Builds the triangle; `None` if an entry overflows `u64`.
    pub fn new(rows: usize, cols: usize) -> Option<Self> {
        let w = cols + 1;
        let mut data = vec![0u64; (rows + 1) * w];
        for i in 0..=rows {
            data[i * w] = 1;
            for j in 1..=cols.min(i) {
                let a = data[(i - 1) * w + j - 1];
                let b = data[(i - 1) * w + j];
                data[i * w + j] = a.checked_add(b)?;
            }
        }
        Some(Self { rows, cols, data })
    }

    /// `C(n, r)`, zero when `r > n`.
    #[inline]
    pub fn get(&self, n: usize, r: usize) -> u64 {
        debug_assert!(n <= self.rows && r <= self.cols);
        self.data[n * (self.cols + 1) + r]
    }

    /// Like [`get`](Self::get) but accepts a signed top index, zero when negative.
    #[inline]
    pub fn get_signed(&self, n: i64, r: usize) -> u64 {
        if n < 0 {
            0
        } else {
            self.get(n as usize, r)
        }
    }
}

/// `C(n, r)` in `u64`, or `None` on overflow.
pub fn binomial(n: u64, r: u64) -> Option<u64> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// `C(n, r)` with arbitrary precision.
pub fn binomial_big(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::default();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}
