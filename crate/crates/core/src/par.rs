//! Deterministic parallel reductions: fixed chunking, then an ordered fold, so
//! results do not depend on the thread count.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// `Σ_{i<n} f(i)` componentwise, bit-reproducible across thread counts.
pub fn sum_n<const K: usize, F>(n: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<[f64; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0; K];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let v = f(i);
                for k in 0..K {
                    acc[k] += v[k];
                }
            }
            acc
        })
        .collect();
    let mut out = [0.0; K];
    for p in partial {
        for k in 0..K {
            out[k] += p[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_match_sequential() {
        let n = 10_001;
        let s = sum_n::<2, _>(n, |i| [i as f64, 1.0]);
        assert_eq!(s, [(n * (n - 1) / 2) as f64, n as f64]);
    }
}
