//! Small deterministic statistics helpers shared by the estimators.

/// Pairwise (cascade) summation with a fixed split order, so results depend
/// only on the input order and not on how a reduction was scheduled.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if v.len() <= BLOCK {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Population variance (divides by `n`).
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    let d: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&d) / v.len() as f64
}

/// Standard error of the mean of `v`, treating entries as independent.
pub fn std_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    (variance(v) * n / (n - 1.0) / n).sqrt()
}

/// Block jackknife of a statistic that is a smooth function of sample means.
///
/// `columns` holds per-sample observables (all the same length); the data are
/// cut into `n_blocks` contiguous blocks. Returns `(estimate, error)` where the
/// estimate uses all data.
pub fn jackknife<F>(columns: &[&[f64]], n_blocks: usize, stat: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = columns[0].len();
    let k = columns.len();
    let full: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let estimate = stat(&full);
    let n_blocks = n_blocks.min(n);
    if n_blocks < 2 {
        return (estimate, 0.0);
    }
    let totals: Vec<f64> = columns.iter().map(|c| pairwise_sum(c)).collect();
    let bounds: Vec<usize> = (0..=n_blocks).map(|b| b * n / n_blocks).collect();
    let mut leave_out = Vec::with_capacity(n_blocks);
    let mut means = vec![0.0; k];
    for b in 0..n_blocks {
        let (lo, hi) = (bounds[b], bounds[b + 1]);
        let kept = (n - (hi - lo)) as f64;
        for (j, c) in columns.iter().enumerate() {
            means[j] = (totals[j] - pairwise_sum(&c[lo..hi])) / kept;
        }
        leave_out.push(stat(&means));
    }
    let m = mean(&leave_out);
    let d: Vec<f64> = leave_out.iter().map(|v| (v - m) * (v - m)).collect();
    let nb = n_blocks as f64;
    (estimate, ((nb - 1.0) / nb * pairwise_sum(&d)).sqrt())
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sample skewness and excess kurtosis (population moments).
pub fn skew_kurtosis(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let d2: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
    let d3: Vec<f64> = v.iter().map(|x| (x - m).powi(3)).collect();
    let d4: Vec<f64> = v.iter().map(|x| (x - m).powi(4)).collect();
    let n = v.len() as f64;
    let m2 = pairwise_sum(&d2) / n;
    let m3 = pairwise_sum(&d3) / n;
    let m4 = pairwise_sum(&d4) / n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Jarque-Bera normality test; returns `(statistic, p-value)`.
pub fn jarque_bera(v: &[f64]) -> (f64, f64) {
    let (s, k) = skew_kurtosis(v);
    let jb = v.len() as f64 / 6.0 * (s * s + k * k / 4.0);
    // chi-square with two degrees of freedom
    (jb, (-jb / 2.0).exp())
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, stderr_b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = pairwise_sum(&x.iter().map(|v| (v - mx) * (v - mx)).collect::<Vec<_>>());
    let sxy: f64 = pairwise_sum(&x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = pairwise_sum(&x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).collect::<Vec<_>>());
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (a, b, se)
}
