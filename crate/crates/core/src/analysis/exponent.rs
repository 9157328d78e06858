use super::fluid::innovation_factor;
use crate::error::{domain, Result};
use crate::gf::random_invertibility_probability;
use crate::{lit, Real};

/// Which error-exponent expression to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentVariant {
    /// `C - R - R ln(C/R)`: the exact decay rate for Poisson traffic.
    Asymptotic,
    /// The same expression, arising as the bound implied by counting
    /// distinct packets across a minimum cut.
    LowerBound,
    /// The Chernoff-bound exponent at innovation order `rho`, with `C`
    /// replaced by `C' = (1 - q^-rho) C`.
    UpperBound { q: u32, rho: u32 },
}

fn decay<T: Real>(c: T, r: T) -> T {
    c - r - r * (c / r).ln()
}

/// Error exponent in nats per unit time. Requires `0 < R <= C` (and
/// `R <= C'` for the upper-bound variant).
pub fn error_exponent<T: Real>(c: T, r: T, variant: ExponentVariant) -> Result<T> {
    if !(c > T::zero()) || !c.is_finite() {
        return domain(format!("capacity {c} must be positive"));
    }
    if !(r > T::zero()) {
        return domain(format!("rate {r} must be positive"));
    }
    if r > c {
        return domain(format!("rate {r} exceeds capacity {c}"));
    }
    let c = match variant {
        ExponentVariant::Asymptotic | ExponentVariant::LowerBound => c,
        ExponentVariant::UpperBound { q, rho } => {
            let cp = innovation_factor::<T>(q, rho)? * c;
            if r > cp {
                return domain(format!("rate {r} exceeds the thinned capacity {cp}"));
            }
            cp
        }
    };
    // the expression vanishes at R = C; clamp rounding noise
    Ok(decay(c, r).max(T::zero()))
}

/// Exponents for one (C, R) operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentCurve<T> {
    pub capacity: T,
    /// `C' = (1 - q^-rho) C`.
    pub thinned_capacity: T,
    pub rate: T,
    pub asymptotic: T,
    pub lower: T,
    /// `None` when `R > C'`, where the Chernoff bound says nothing.
    pub upper: Option<T>,
}

impl<T: Real> ExponentCurve<T> {
    pub fn new(c: T, r: T, q: u32, rho: u32) -> Result<Self> {
        let asymptotic = error_exponent(c, r, ExponentVariant::Asymptotic)?;
        let upper = error_exponent(c, r, ExponentVariant::UpperBound { q, rho }).ok();
        Ok(Self {
            capacity: c,
            thinned_capacity: innovation_factor::<T>(q, rho)? * c,
            rate: r,
            asymptotic,
            lower: asymptotic,
            upper,
        })
    }
}

/// Limiting log moment generating function of the innovative-packet arrival
/// times at a sink: `ln(C' / (C' - theta))` for `0 <= theta < C'`.
pub fn arrival_log_mgf<T: Real>(c_prime: T, theta: T) -> Result<T> {
    if !(theta >= T::zero()) || !(theta < c_prime) {
        return domain(format!("theta {theta} must lie in [0, {c_prime})"));
    }
    Ok((c_prime / (c_prime - theta)).ln())
}

/// `ceil(x)` tolerant of rounding just above an integer, as in
/// `0.4 * 500 = 200.00000000000003`.
pub fn ceil_count<T: Real>(x: T) -> u64 {
    let slack = lit::<T>(1e-9) * x.abs().max(T::one());
    (x - slack).ceil().max(T::zero()).to_u64().unwrap_or(u64::MAX)
}

/// `Pr(Poisson(mean) <= n)`, summed in log space.
pub fn poisson_cdf<T: Real>(mean: T, n: u64) -> T {
    if mean <= T::zero() {
        return T::one();
    }
    let ln_mean = mean.ln();
    let mut log_term = -mean; // l = 0
    let mut max = log_term;
    let mut logs = Vec::with_capacity(n as usize + 1);
    logs.push(log_term);
    for l in 1..=n {
        log_term = log_term + ln_mean - lit::<T>(l as f64).ln();
        max = max.max(log_term);
        logs.push(log_term);
    }
    let sum: T = logs.iter().map(|&x| (x - max).exp()).sum();
    (max + sum.ln()).exp().min(T::one())
}

/// Lower bound on the decoding error probability with Poisson traffic:
/// `Pr(Poisson(C Δ) <= ceil(R Δ) - 1)`.
pub fn poisson_tail_lower_bound<T: Real>(c: T, r: T, delta: T) -> Result<T> {
    if !(c > T::zero()) || !(delta > T::zero()) || !(r >= T::zero()) {
        return domain("need C > 0, R >= 0 and delta > 0");
    }
    let need = ceil_count(r * delta);
    if need == 0 {
        return Ok(T::zero());
    }
    Ok(poisson_cdf(c * delta, need - 1))
}

/// Probability that `received` uniformly random coding vectors over GF(q)
/// span all `k` dimensions; zero when `received < k`.
pub fn decode_success_probability(q: u32, k: usize, received: usize) -> Result<f64> {
    if received < k {
        return Ok(0.0);
    }
    random_invertibility_probability(q, received, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{DiscreteCDF, Poisson};

    #[test]
    fn exponent_examples() {
        assert_eq!(error_exponent(1.0f64, 1.0, ExponentVariant::Asymptotic).unwrap(), 0.0);
        let e = error_exponent(1.0f64, 0.5, ExponentVariant::Asymptotic).unwrap();
        assert!((e - (0.5 - 0.5 * 2f64.ln())).abs() < 1e-15);
        assert!((e - 0.15343).abs() < 1e-5);
        let u = error_exponent(1.0f64, 0.4, ExponentVariant::UpperBound { q: 2, rho: 1 }).unwrap();
        assert!((u - 0.01074).abs() < 1e-5);
        let a = error_exponent(1.0f64, 0.4, ExponentVariant::Asymptotic).unwrap();
        assert!((a - 0.23348).abs() < 1e-5);
        assert!(u <= a);
        assert!(error_exponent(1.0f64, 1.1, ExponentVariant::Asymptotic).is_err());
        assert!(error_exponent(1.0f64, 0.6, ExponentVariant::UpperBound { q: 2, rho: 1 }).is_err());
        assert_eq!(
            error_exponent(2.0f64, 0.7, ExponentVariant::LowerBound).unwrap(),
            error_exponent(2.0f64, 0.7, ExponentVariant::Asymptotic).unwrap()
        );
    }

    #[test]
    fn exponent_shape() {
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let e = error_exponent(1.0f64, i as f64 / 100.0, ExponentVariant::Asymptotic).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn upper_converges_monotonically_in_rho() {
        for &(c, r) in &[(1.0f64, 0.5), (2.0, 0.3), (0.8, 0.4)] {
            let a = error_exponent(c, r, ExponentVariant::Asymptotic).unwrap();
            for &q in &[2u32, 16, 256] {
                let mut prev = 0.0;
                for rho in 1..=16 {
                    let Ok(u) = error_exponent(c, r, ExponentVariant::UpperBound { q, rho }) else {
                        continue;
                    };
                    assert!(u <= a + 1e-15);
                    assert!(u >= prev - 1e-15);
                    prev = u;
                }
                assert!((a - prev).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn curve() {
        let c = ExponentCurve::new(1.0f64, 0.5, 256, 8).unwrap();
        assert!(c.upper.unwrap() <= c.asymptotic);
        assert!((c.asymptotic - 0.15343).abs() < 1e-5);
        assert!(ExponentCurve::new(1.0f64, 0.9, 2, 1).unwrap().upper.is_none());
    }

    #[test]
    fn mgf() {
        assert_eq!(arrival_log_mgf(1.0f64, 0.0).unwrap(), 0.0);
        assert!((arrival_log_mgf(1.0f64, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(arrival_log_mgf(1.0f64, 1.0).is_err());
    }

    #[test]
    fn ceil_count_handles_rounding() {
        assert_eq!(ceil_count(0.4f64 * 500.0), 200);
        assert_eq!(ceil_count(10.0f64), 10);
        assert_eq!(ceil_count(10.2f64), 11);
        assert_eq!(ceil_count(0.0f64), 0);
    }

    #[test]
    fn tail_bound_against_statrs() {
        let b = poisson_tail_lower_bound(1.0f64, 0.5, 20.0).unwrap();
        assert!((b - 0.00500).abs() < 5e-6);
        for &(c, r, d) in &[(1.0f64, 0.5f64, 20.0f64), (1.0, 0.5, 80.0), (2.0, 0.7, 35.0), (0.5, 0.1, 400.0)] {
            let need = (r * d).ceil() as u64;
            let want = Poisson::new(c * d).unwrap().cdf(need - 1);
            let got = poisson_tail_lower_bound(c, r, d).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.max(1e-300), "{got} vs {want}");
        }
        // R -> 0: a single term e^{-CΔ}
        let b = poisson_tail_lower_bound(1.0f64, 0.01, 10.0).unwrap();
        assert!((b - (-10f64).exp()).abs() < 1e-18);
        assert_eq!(poisson_tail_lower_bound(1.0f64, 0.0, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn tail_bound_is_nonincreasing_and_matches_exponent() {
        let mut prev = 1.0;
        for d in (10..=400).step_by(10) {
            let b = poisson_tail_lower_bound(1.0f64, 0.5, d as f64).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        // Stirling's prefactor decays like ln(Δ)/Δ; at Δ = 400/C the implied
        // exponent is within 5% for R/C up to 0.4 (R/C = 0.5 needs Δ ≈ 600).
        for &(c, r) in &[(1.0f64, 0.1), (1.0, 0.25), (1.0, 0.4), (2.0, 0.8)] {
            let e = error_exponent(c, r, ExponentVariant::Asymptotic).unwrap();
            let d = 400.0 / c;
            let implied = -poisson_tail_lower_bound(c, r, d).unwrap().ln() / d;
            assert!((implied - e).abs() / e < 0.05, "R={r}: {implied} vs {e}");
        }
        let e = error_exponent(1.0f64, 0.5, ExponentVariant::Asymptotic).unwrap();
        let gaps: Vec<f64> = [400.0, 1000.0, 2000.0, 4000.0]
            .iter()
            .map(|&d| -poisson_tail_lower_bound(1.0f64, 0.5, d).unwrap().ln() / d - e)
            .collect();
        assert!(gaps.windows(2).all(|w| 0.0 < w[1] && w[1] < w[0]));
        assert!(gaps[1] / e < 0.05);
    }

    #[test]
    fn decode_probability() {
        assert_eq!(decode_success_probability(2, 3, 2).unwrap(), 0.0);
        assert_eq!(decode_success_probability(2, 2, 2).unwrap(), 0.375);
        assert!(decode_success_probability(256, 20, 30).unwrap() >= 0.996);
    }
}
