//! Deterministic low-discrepancy sample points.

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// The first `count` Halton points in `[0,1)^dim`, skipping the origin.
pub fn halton(count: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "halton: at most {} dimensions", PRIMES.len());
    (1..=count as u64)
        .map(|i| PRIMES[..dim].iter().map(|b| radical_inverse(i, *b)).collect())
        .collect()
}
