use crate::error::{Error, Result};
use crate::{lit, Real};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval<T: Real>(successes: u64, trials: u64, z: T) -> (T, T) {
    if trials == 0 {
        return (T::zero(), T::one());
    }
    let n = lit::<T>(trials as f64);
    let p = lit::<T>(successes as f64) / n;
    let z2 = z * z;
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let denom = T::one() + z2 / n;
    let centre = (p + z2 / (two * n)) / denom;
    let half = z * (p * (T::one() - p) / n + z2 / (four * n * n)).sqrt() / denom;
    (
        (centre - half).max(T::zero()),
        (centre + half).min(T::one()),
    )
}

/// A failure-probability estimate at one coding delay.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorEstimate<T> {
    pub delta: T,
    pub estimate: T,
    pub lower: T,
    pub upper: T,
    pub failures: u64,
    pub replications: u64,
}

/// Slope of `-ln p_e` against the coding delay.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_lower: T,
    pub slope_upper: T,
    /// Number of grid points that entered the fit.
    pub points: usize,
}

/// Weighted least-squares fit of `-ln p̂_e` against `Δ`. Points with
/// `p̂_e` outside `(0, 1)` are skipped; each remaining point is weighted by
/// the inverse variance implied by its interval on the log scale. The slope
/// interval is a 95% normal interval.
pub fn fit_empirical_exponent<T: Real>(table: &[ErrorEstimate<T>]) -> Result<ExponentFit<T>> {
    let usable: Vec<&ErrorEstimate<T>> = table
        .iter()
        .filter(|e| e.estimate > T::zero() && e.estimate < T::one())
        .collect();
    if usable.len() < 3 {
        return Err(Error::NoFit(format!(
            "{} of {} grid points have an estimate strictly between 0 and 1; need 3",
            usable.len(),
            table.len()
        )));
    }
    let z = lit::<T>(Z95);
    let two = lit::<T>(2.0);
    let sigmas: Vec<T> = usable
        .iter()
        .map(|e| {
            let lo = e.lower.max(T::min_positive_value());
            let hi = e.upper.max(lo);
            (hi.ln() - lo.ln()) / (two * z)
        })
        .collect();
    let weighted = sigmas.iter().all(|&s| s > T::zero() && s.is_finite());
    let w: Vec<T> = sigmas
        .iter()
        .map(|&s| if weighted { T::one() / (s * s) } else { T::one() })
        .collect();
    let x: Vec<T> = usable.iter().map(|e| e.delta).collect();
    let y: Vec<T> = usable.iter().map(|e| -e.estimate.ln()).collect();
    let sw: T = w.iter().copied().sum();
    let xm = x.iter().zip(&w).map(|(&x, &w)| w * x).sum::<T>() / sw;
    let ym = y.iter().zip(&w).map(|(&y, &w)| w * y).sum::<T>() / sw;
    let sxx: T = x.iter().zip(&w).map(|(&x, &w)| w * (x - xm) * (x - xm)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::NoFit("grid points share a single delay".into()));
    }
    let sxy: T = (0..x.len()).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let se = if weighted {
        (T::one() / sxx).sqrt()
    } else {
        let n = lit::<T>(x.len() as f64);
        let rss: T = (0..x.len())
            .map(|i| {
                let r = y[i] - intercept - slope * x[i];
                r * r
            })
            .sum();
        (rss / (n - two) / sxx).sqrt()
    };
    Ok(ExponentFit {
        slope,
        intercept,
        slope_lower: slope - z * se,
        slope_upper: slope + z * se,
        points: usable.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact(delta: f64, p: f64) -> ErrorEstimate<f64> {
        ErrorEstimate {
            delta,
            estimate: p,
            lower: p,
            upper: p,
            failures: 0,
            replications: 0,
        }
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-4);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        assert_eq!(wilson_interval::<f64>(0, 0, Z95), (0.0, 1.0));
    }

    #[test]
    fn exact_exponential_is_fit_exactly() {
        let t: Vec<_> = [20.0, 40.0, 60.0, 80.0]
            .iter()
            .map(|&d| exact(d, (-0.15f64 * d).exp()))
            .collect();
        let f = fit_empirical_exponent(&t).unwrap();
        assert!((f.slope - 0.15).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-10);
    }

    #[test]
    fn noisy_exponential_covers_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut covered = 0;
        for _ in 0..200 {
            let t: Vec<_> = (1..=6)
                .map(|i| {
                    let d = 10.0 * i as f64;
                    let p = (-0.15f64 * d).exp() * (1.0 + 0.1 * (2.0 * rng.gen::<f64>() - 1.0));
                    // ±10% noise: uniform with sd 0.1/sqrt(3) on the log scale
                    let s = 0.1 / 3f64.sqrt();
                    ErrorEstimate {
                        delta: d,
                        estimate: p,
                        lower: p * (-Z95 * s).exp(),
                        upper: p * (Z95 * s).exp(),
                        failures: 0,
                        replications: 0,
                    }
                })
                .collect();
            let f = fit_empirical_exponent(&t).unwrap();
            if f.slope_lower <= 0.15 && 0.15 <= f.slope_upper {
                covered += 1;
            }
        }
        assert!(covered >= 180, "coverage {covered}/200");
    }

    #[test]
    fn degenerate_tables_do_not_fit() {
        let zeros: Vec<_> = (1..=4).map(|i| exact(i as f64, 0.0)).collect();
        assert!(matches!(fit_empirical_exponent(&zeros), Err(Error::NoFit(_))));
        let ones: Vec<_> = (1..=4).map(|i| exact(i as f64, 1.0)).collect();
        assert!(matches!(fit_empirical_exponent(&ones), Err(Error::NoFit(_))));
        let same: Vec<_> = (1..=4).map(|_| exact(3.0, 0.1)).collect();
        assert!(matches!(fit_empirical_exponent(&same), Err(Error::NoFit(_))));
    }
}
