//! Summary statistics used when aggregating seeds and comparing methods.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub std: f64,
    pub stderr: f64,
}

impl Summary {
    fn from_moments(n: usize, mean: f64, sum_sq_dev: f64) -> Self {
        let std = if n > 1 { (sum_sq_dev / (n - 1) as f64).sqrt() } else { 0.0 };
        let stderr = if n > 0 { std / (n as f64).sqrt() } else { f64::NAN };
        Summary { n, mean, std, stderr }
    }
}

/// Two-pass mean and deviation.
pub fn summarize(xs: &[f64]) -> Summary {
    if xs.is_empty() {
        return Summary { n: 0, mean: f64::NAN, std: f64::NAN, stderr: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum();
    Summary::from_moments(xs.len(), mean, ss)
}

/// Welford's one-pass accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn summary(&self) -> Summary {
        if self.n == 0 {
            return summarize(&[]);
        }
        Summary::from_moments(self.n, self.mean, self.m2)
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation; NaN when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (summarize(a).mean, summarize(b).mean);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return f64::NAN;
    }
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman needs equal lengths");
    pearson(&ranks(a), &ranks(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    /// Mean of `a − b`.
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for the alternative `mean(a − b) < 0`.
    pub p_less: f64,
}

/// Paired t-test on `a − b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> PairedTest {
    assert_eq!(a.len(), b.len(), "paired test needs equal lengths");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = summarize(&d);
    let df = d.len() as f64 - 1.0;
    if df < 1.0 {
        return PairedTest { mean_diff: s.mean, t: f64::NAN, df, p_less: f64::NAN };
    }
    if s.std == 0.0 {
        let p_less = if s.mean < 0.0 { 0.0 } else { 1.0 };
        let t = if s.mean == 0.0 { 0.0 } else { s.mean.signum() * f64::INFINITY };
        return PairedTest { mean_diff: s.mean, t, df, p_less };
    }
    let t = s.mean / s.stderr;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    PairedTest { mean_diff: s.mean, t, df, p_less: dist.cdf(t) }
}
