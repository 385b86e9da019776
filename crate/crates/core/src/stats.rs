//! Small statistics helpers shared by tests and the experiment harness.

/// Compensated (Kahan) summation; keeps enumeration and Monte Carlo
/// accumulations accurate to ~1e-12 per term.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sample mean, sample standard deviation, and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, sd: f64::NAN, se: f64::NAN };
    }
    let mut s = KahanSum::default();
    for &v in values {
        s.add(v);
    }
    let mean = s.value() / n as f64;
    if n == 1 {
        return Summary { n, mean, sd: 0.0, se: 0.0 };
    }
    let mut sq = KahanSum::default();
    for &v in values {
        sq.add((v - mean) * (v - mean));
    }
    let var = sq.value() / (n - 1) as f64;
    let sd = var.max(0.0).sqrt();
    Summary { n, mean, sd, se: sd / (n as f64).sqrt() }
}

/// Binomial standard error sqrt(p(1-p)/n) for an empirical proportion.
pub fn proportion_se(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Median of an integer sample (average of the middle pair on even sizes).
pub fn median_u64(values: &[u64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    }
}

pub fn median_f64(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Total-variation distance between empirical counts and a reference pmf,
/// restricted to the support points `lo..=hi` (mass outside is ignored).
pub fn tv_on_support<F: Fn(u64) -> f64>(
    counts: &[(u64, u64)],
    total: u64,
    pmf: F,
    lo: u64,
    hi: u64,
) -> f64 {
    let mut acc = 0.0;
    for k in lo..=hi {
        let c = counts
            .iter()
            .find(|(v, _)| *v == k)
            .map(|(_, c)| *c)
            .unwrap_or(0);
        let emp = c as f64 / total as f64;
        acc += (emp - pmf(k)).abs();
    }
    acc / 2.0
}

/// Harmonic number H_n.
pub fn harmonic(n: u64) -> f64 {
    let mut s = KahanSum::default();
    for k in 1..=n {
        s.add(1.0 / k as f64);
    }
    s.value()
}
