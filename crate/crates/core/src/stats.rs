//! Small statistics helpers shared by the samplers, estimators and tests:
//! running moments, binomial standard errors, and empirical characteristic
//! functions.

use num_complex::Complex;

use crate::scalar::Real;

/// Streaming (count, sum, sum of squares) accumulator with an associative
/// merge, so parallel reductions stay deterministic under a fixed order.
#[derive(Debug, Clone, Copy)]
pub struct RunningMoments<R> {
    pub count: u64,
    pub sum: R,
    pub sum_sq: R,
}

impl<R: Real> Default for RunningMoments<R> {
    fn default() -> Self {
        Self { count: 0, sum: R::zero(), sum_sq: R::zero() }
    }
}

impl<R: Real> RunningMoments<R> {
    pub fn push(&mut self, x: R) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> R {
        if self.count == 0 {
            return R::nan();
        }
        self.sum / R::of_usize(self.count as usize)
    }

    pub fn variance(&self) -> R {
        if self.count < 2 {
            return R::zero();
        }
        let n = R::of_usize(self.count as usize);
        let m = self.mean();
        ((self.sum_sq - n * m * m) / (n - R::one())).max(R::zero())
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> R {
        if self.count == 0 {
            return R::infinity();
        }
        (self.variance() / R::of_usize(self.count as usize)).sqrt()
    }
}

/// Binomial standard error for k successes in n trials, with a Jeffreys-style
/// shrink so it never reports zero for empty or full cells.
pub fn binomial_stderr<R: Real>(k: u64, n: u64) -> R {
    if n == 0 {
        return R::infinity();
    }
    let nf = R::of_usize(n as usize);
    let p = (R::of_usize(k as usize) + R::of(0.5)) / (nf + R::one());
    (p * (R::one() - p) / nf).sqrt()
}

/// Empirical characteristic function of d-dimensional samples at one
/// frequency, with standard errors of the real and imaginary parts.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalCf<R> {
    pub value: Complex<R>,
    pub se_re: R,
    pub se_im: R,
    pub n: usize,
}

pub fn empirical_cf<R: Real>(samples: &[Vec<R>], z: &[R]) -> EmpiricalCf<R> {
    let mut re = RunningMoments::default();
    let mut im = RunningMoments::default();
    for x in samples {
        let dot = x.iter().zip(z).map(|(a, b)| *a * *b).sum::<R>();
        re.push(dot.cos());
        im.push(dot.sin());
    }
    EmpiricalCf {
        value: Complex::new(re.mean(), im.mean()),
        se_re: re.stderr(),
        se_im: im.stderr(),
        n: samples.len(),
    }
}

/// z-score of the empirical CF against a target value: max over the real and
/// imaginary parts of |gap| / se.
pub fn cf_z_score<R: Real>(cf: &EmpiricalCf<R>, target: Complex<R>) -> R {
    let zr = (cf.value.re - target.re).abs() / cf.se_re.max(R::of(1e-300));
    let zi = (cf.value.im - target.im).abs() / cf.se_im.max(R::of(1e-300));
    zr.max(zi)
}

/// z-score between two empirical CFs (two-sample comparison).
pub fn cf_two_sample_z<R: Real>(a: &EmpiricalCf<R>, b: &EmpiricalCf<R>) -> R {
    let se_re = (a.se_re * a.se_re + b.se_re * b.se_re).sqrt().max(R::of(1e-300));
    let se_im = (a.se_im * a.se_im + b.se_im * b.se_im).sqrt().max(R::of(1e-300));
    let zr = (a.value.re - b.value.re).abs() / se_re;
    let zi = (a.value.im - b.value.im).abs() / se_im;
    zr.max(zi)
}

/// Deterministic spread of test frequencies: `count` directions around the
/// sphere at geometrically spread magnitudes within [lo, hi].
pub fn test_frequencies<R: Real>(d: usize, count: usize, lo: R, hi: R) -> Vec<Vec<R>> {
    let golden = R::of(1.618033988749895);
    let two_pi = R::of(2.0) * R::PI();
    (0..count)
        .map(|k| {
            let t = R::of_usize(k) / R::of_usize(count.max(2) - 1);
            let mag = lo * (hi / lo).powf(t);
            let theta = two_pi * R::of_usize(k + 1) / golden;
            let mut z = vec![R::zero(); d];
            if d == 2 {
                z[0] = mag * theta.cos();
                z[1] = mag * theta.sin();
            } else {
                // deterministic direction from trigonometric mixing
                let mut norm = R::zero();
                for (j, zj) in z.iter_mut().enumerate() {
                    let v = (theta * R::of_usize(j + 1)).sin() + R::of(0.31) * (theta + R::of_usize(j).cos()).cos();
                    *zj = v;
                    norm += v * v;
                }
                let norm = norm.sqrt();
                for zj in &mut z {
                    *zj = *zj / norm * mag;
                }
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_direct_computation() {
        let mut m = RunningMoments::<f64>::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn merge_is_associative_enough() {
        let mut a = RunningMoments::<f64>::default();
        let mut b = RunningMoments::<f64>::default();
        for x in [1.0, 2.0] {
            a.push(x);
        }
        for x in [3.0, 4.0] {
            b.push(x);
        }
        let mut ab = a;
        ab.merge(&b);
        assert_eq!(ab.count, 4);
        assert_eq!(ab.mean(), 2.5);
    }

    #[test]
    fn binomial_se_never_zero() {
        assert!(binomial_stderr::<f64>(0, 100) > 0.0);
        assert!(binomial_stderr::<f64>(100, 100) > 0.0);
        let se: f64 = binomial_stderr(50, 100);
        assert!((se - 0.05).abs() < 0.005);
    }

    #[test]
    fn frequencies_have_requested_magnitudes() {
        let zs = test_frequencies::<f64>(2, 20, 0.5, 3.0);
        assert_eq!(zs.len(), 20);
        let n0 = (zs[0][0].powi(2) + zs[0][1].powi(2)).sqrt();
        let n19 = (zs[19][0].powi(2) + zs[19][1].powi(2)).sqrt();
        assert!((n0 - 0.5).abs() < 1e-12);
        assert!((n19 - 3.0).abs() < 1e-12);
    }
}
