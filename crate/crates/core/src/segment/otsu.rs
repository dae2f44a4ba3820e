//! Otsu threshold selection on an 8-bit histogram.

pub fn histogram(data: &[u8]) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in data {
        hist[v as usize] += 1;
    }
    hist
}

/// Between-class variance scaled by `N^2`, from class-0 count/sum and totals.
/// Pixels `<= t` form class 0.
pub(crate) fn scaled_between_class_variance(n0: u64, s0: u64, n: u64, s: u64) -> f64 {
    let n1 = n - n0;
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let s1 = s - s0;
    let diff = n1 as f64 * s0 as f64 - n0 as f64 * s1 as f64;
    diff * diff / (n0 as f64 * n1 as f64)
}

/// Threshold `t` maximising the between-class variance of `{<= t}` vs `{> t}`,
/// found with running class sums. The first maximum wins. `None` when fewer
/// than two distinct intensities are present.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let n: u64 = hist.iter().sum();
    let s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, f64)> = None;
    for (t, &count) in hist.iter().enumerate().take(255) {
        n0 += count;
        s0 += t as u64 * count;
        let var = scaled_between_class_variance(n0, s0, n, s);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    best.map(|(t, _)| t)
}
