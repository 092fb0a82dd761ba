//! Small statistics helpers shared by analyses and reports.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Ranks starting at 1, ties get the average of the positions they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Least-squares slope of `ln y` against `ln x` over points with `x, y > 0`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Maximum-likelihood power-law fit of a discrete sample's tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: usize,
    /// Kolmogorov-Smirnov distance between the tail and the fitted law.
    pub ks: f64,
    pub tail: usize,
}

/// Clauset-Shalizi-Newman style fit: for each candidate `x_min` the exponent
/// uses the discrete approximation `1 + n / Σ ln(x / (x_min - 1/2))`, and the
/// `x_min` minimizing the KS distance wins. Candidates leaving fewer than
/// `min_tail` samples are skipped.
pub fn fit_power_law(sample: &[usize], min_tail: usize) -> Option<PowerLawFit> {
    let mut xs: Vec<usize> = sample.iter().copied().filter(|&x| x > 0).collect();
    xs.sort_unstable();
    let mut candidates: Vec<usize> = xs.clone();
    candidates.dedup();
    let mut best: Option<PowerLawFit> = None;
    for &x_min in &candidates {
        let start = xs.partition_point(|&x| x < x_min);
        let tail = &xs[start..];
        if tail.len() < min_tail.max(2) {
            break;
        }
        let denom = x_min as f64 - 0.5;
        let s: f64 = tail.iter().map(|&x| (x as f64 / denom).ln()).sum();
        if s <= 0.0 {
            continue;
        }
        let alpha = 1.0 + tail.len() as f64 / s;
        // continuous-approximation CDF P(X < x) = 1 - ((x - 1/2) / (x_min - 1/2))^(1 - alpha)
        let n = tail.len() as f64;
        let mut ks: f64 = 0.0;
        let mut i = 0;
        while i < tail.len() {
            let x = tail[i];
            let mut j = i;
            while j < tail.len() && tail[j] == x {
                j += 1;
            }
            let model_below = 1.0 - ((x as f64 - 0.5) / denom).powf(1.0 - alpha);
            let model_upto = 1.0 - ((x as f64 + 0.5) / denom).powf(1.0 - alpha);
            let emp_below = i as f64 / n;
            let emp_upto = j as f64 / n;
            ks = ks
                .max((emp_below - model_below).abs())
                .max((emp_upto - model_upto).abs());
            i = j;
        }
        if best.is_none_or(|b| ks < b.ks) {
            best = Some(PowerLawFit {
                alpha,
                x_min,
                ks,
                tail: tail.len(),
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 5.0]),
            vec![2.5, 4.0, 2.5, 1.0]
        );
    }

    #[test]
    fn spearman_monotone_and_constant() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[1.0, 4.0, 9.0, 16.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&x, &[1.0; 4]).is_none());
    }

    #[test]
    fn loglog_slope_of_inverse() {
        let pts: Vec<(f64, f64)> = (1..20).map(|k| (k as f64, 2.0 / k as f64)).collect();
        assert!((loglog_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn std_dev_sample() {
        assert!((std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - 2.138_089_935).abs() < 1e-9);
    }
}
