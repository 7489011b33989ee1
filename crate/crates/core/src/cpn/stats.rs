//! Time-weighted monitor statistics and Student-t critical values.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::simulate::MonitorLog;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("probability must lie strictly between 0 and 1")]
    Probability,
    #[error("degrees of freedom must be positive")]
    DegreesOfFreedom,
    #[error("log spans {0} time units, at least 2 are needed")]
    ShortLog(u64),
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).expect("constant representable in the float type")
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma<F: Float>(x: F) -> F {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let pi = c::<F>(std::f64::consts::PI);
    if x < c(0.5) {
        // reflection
        return (pi / (pi * x).sin()).ln() - ln_gamma(F::one() - x);
    }
    let x = x - F::one();
    let mut a = c::<F>(COEF[0]);
    for (i, k) in COEF.iter().enumerate().skip(1) {
        a = a + c::<F>(*k) / (x + c(i as f64));
    }
    let t = x + c(G + 0.5);
    c::<F>(0.5) * (c::<F>(2.0) * pi).ln() + (x + c(0.5)) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf<F: Float>(a: F, b: F, x: F) -> F {
    let tiny = c::<F>(1e-300).max(F::min_positive_value());
    let eps = F::epsilon();
    let one = F::one();
    let (qab, qap, qam) = (a + b, a + one, a - one);
    let mut cc = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..=300 {
        let m = c::<F>(m as f64);
        let m2 = m + m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = one + aa / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = d.recip();
        h = h * d * cc;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = one + aa / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = d.recip();
        let del = d * cc;
        h = h * del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// Regularised incomplete beta function I_x(a, b).
pub fn inc_beta<F: Float>(a: F, b: F, x: F) -> F {
    let one = F::one();
    if x <= F::zero() {
        return F::zero();
    }
    if x >= one {
        return one;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (one - x).ln()).exp();
    if x < (a + one) / (a + b + c(2.0)) {
        front * beta_cf(a, b, x) / a
    } else {
        one - front * beta_cf(b, a, one - x) / b
    }
}

/// Student-t cumulative distribution function.
pub fn t_cdf<F: Float>(t: F, df: u32) -> F {
    let nu = c::<F>(df as f64);
    let tail = c::<F>(0.5) * inc_beta(nu / c(2.0), c(0.5), nu / (nu + t * t));
    if t > F::zero() {
        F::one() - tail
    } else {
        tail
    }
}

/// Inverse of [`t_cdf`]: the `p` quantile of Student's t with `df` degrees
/// of freedom, found by bracketing and bisection.
pub fn t_quantile<F: Float>(p: F, df: u32) -> Result<F, StatsError> {
    if !(p > F::zero() && p < F::one()) {
        return Err(StatsError::Probability);
    }
    if df == 0 {
        return Err(StatsError::DegreesOfFreedom);
    }
    let half = c::<F>(0.5);
    if p == half {
        return Ok(F::zero());
    }
    if p < half {
        return t_quantile(F::one() - p, df).map(|q| -q);
    }
    let mut lo = F::zero();
    let mut hi = F::one();
    while t_cdf(hi, df) < p {
        lo = hi;
        hi = hi + hi;
        if hi > c(1e12) {
            break;
        }
    }
    for _ in 0..500 {
        let mid = (lo + hi) * half;
        if t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= F::epsilon() * (F::one() + hi) {
            break;
        }
    }
    Ok((lo + hi) * half)
}

/// How half-lengths obtain their t critical values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalValues {
    /// Rounded to three decimals, as printed in statistical tables.
    #[default]
    Table,
    Exact,
}

impl CriticalValues {
    pub fn value<F: Float>(self, p: F, df: u32) -> Result<F, StatsError> {
        let q = t_quantile(p, df)?;
        Ok(match self {
            CriticalValues::Exact => q,
            CriticalValues::Table => (q * c(1000.0)).round() / c(1000.0),
        })
    }
}

pub const CONFIDENCE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedStats<F> {
    /// Number of samples in the log.
    pub count: usize,
    pub avg: F,
    pub ssd: F,
    pub variance: F,
    pub std: F,
    /// Confidence interval half-lengths at 90, 95 and 99 percent; `None`
    /// when fewer than two samples exist.
    pub half_length: [Option<F>; 3],
}

pub fn timed_stats<F: Float>(log: &MonitorLog) -> Result<TimedStats<F>, StatsError> {
    timed_stats_with(log, CriticalValues::Table)
}

/// Time-weighted statistics of a piecewise constant monitor. Each sample's
/// value holds until the next sample; the last one only marks the end.
pub fn timed_stats_with<F: Float>(log: &MonitorLog, crit: CriticalValues) -> Result<TimedStats<F>, StatsError> {
    let span = log.span();
    if span <= 1 {
        return Err(StatsError::ShortLog(span));
    }
    let total = c::<F>(span as f64);
    let pieces: Vec<(F, F)> = log
        .samples
        .windows(2)
        .map(|w| (c::<F>(w[0].value as f64), c::<F>((w[1].time - w[0].time) as f64)))
        .collect();
    let avg = pieces.iter().fold(F::zero(), |acc, &(x, dt)| acc + x * dt) / total;
    let ssd = pieces
        .iter()
        .fold(F::zero(), |acc, &(x, dt)| acc + (x - avg) * (x - avg) * dt);
    let variance = ssd / (total - F::one());
    let std = variance.sqrt();
    let count = log.samples.len();
    let mut half_length = [None; 3];
    if count >= 2 {
        let n = c::<F>(count as f64);
        for (h, level) in half_length.iter_mut().zip(CONFIDENCE_LEVELS) {
            let t = crit.value(c::<F>((1.0 + level) / 2.0), (count - 1) as u32)?;
            *h = Some(t * std / n.sqrt());
        }
    }
    Ok(TimedStats {
        count,
        avg,
        ssd,
        variance,
        std,
        half_length,
    })
}

pub const STATS_HEADER: &str =
    "Name\tCount\tAvg\t90% Half Length\t95% Half Length\t99% Half Length\tSSD\tVariance\tStd";

/// One tab-separated row in the column order of [`STATS_HEADER`].
pub fn stats_row<F: Float + std::fmt::Display>(name: &str, s: &TimedStats<F>) -> String {
    let hl = |h: Option<F>| h.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.6}"));
    format!(
        "{name}\t{}\t{:.6}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
        s.count,
        s.avg,
        hl(s.half_length[0]),
        hl(s.half_length[1]),
        hl(s.half_length[2]),
        s.ssd,
        s.variance,
        s.std
    )
}
