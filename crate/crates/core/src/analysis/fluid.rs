use crate::error::{domain, Result};
use crate::{lit, Real};

/// Fraction of gated receptions that are innovative at innovation order
/// `rho`: `1 - q^-rho`.
pub fn innovation_factor<T: Real>(q: u32, rho: u32) -> Result<T> {
    if q < 2 || rho == 0 {
        return domain(format!("need q >= 2 and rho >= 1, got q={q}, rho={rho}"));
    }
    Ok(T::one() - lit::<T>(q as f64).powi(-(rho.min(i32::MAX as u32) as i32)))
}

/// Predicted linear growth rates of the innovative-packet queues along a
/// tandem.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidPrediction<T> {
    /// Link rates `z_{i(i+1)}`, `i = 1..L`.
    pub z: Vec<T>,
    pub q: u32,
    pub rho: u32,
    /// Growth rate of the queue at node `i + 2` (nodes `2..L`), per unit time.
    pub growth: Vec<T>,
}

fn check_rates<T: Real>(z: &[T]) -> Result<()> {
    if z.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return domain("link rates must be finite and nonnegative");
    }
    Ok(())
}

/// Queue growth at nodes `2..L` of an `L`-link tandem:
/// `(min(z_12, min_{2<=j<i} c z_{j(j+1)}) - c z_{i(i+1)})^+` with
/// `c = 1 - q^-rho`.
pub fn fluid_queue_rates<T: Real>(z: &[T], q: u32, rho: u32) -> Result<FluidPrediction<T>> {
    if z.len() < 2 {
        return domain(format!("a tandem needs at least two links, got {}", z.len()));
    }
    check_rates(z)?;
    let c = innovation_factor::<T>(q, rho)?;
    let mut inflow = z[0];
    let mut growth = Vec::with_capacity(z.len() - 1);
    for &zi in &z[1..] {
        growth.push((inflow - c * zi).max(T::zero()));
        inflow = inflow.min(c * zi);
    }
    Ok(FluidPrediction {
        z: z.to_vec(),
        q,
        rho,
        growth,
    })
}

/// Normalised rate at which innovative packets reach the end of a tandem:
/// `min(z_12, min_{i>=2} c z_{i(i+1)}) / c`.
pub fn fluid_throughput<T: Real>(z: &[T], q: u32, rho: u32) -> Result<T> {
    if z.is_empty() {
        return domain("a tandem needs at least one link");
    }
    check_rates(z)?;
    let c = innovation_factor::<T>(q, rho)?;
    let m = z[1..].iter().fold(z[0], |m, &zi| m.min(c * zi));
    Ok(m / c)
}

/// Largest rate a tandem supports: `min_i z_{i(i+1)}`.
pub fn achievable_rate_tandem<T: Real>(z: &[T]) -> Result<T> {
    if z.is_empty() {
        return domain("a tandem needs at least one link");
    }
    check_rates(z)?;
    Ok(z.iter().copied().fold(T::infinity(), T::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let p = fluid_queue_rates(&[1.0f64, 1.0], 1 << 30, 1).unwrap();
        assert!(p.growth[0] < 1e-8);

        let p = fluid_queue_rates(&[2.0f64, 1.0], 2, 1).unwrap();
        assert_eq!(p.growth, vec![1.5]);

        let p = fluid_queue_rates(&[1.0f64, 2.0, 0.5], 256, 1).unwrap();
        let c = 1.0 - 1.0 / 256.0;
        assert_eq!(p.growth[0], 0.0);
        assert!((p.growth[1] - (1.0 - 0.5 * c)).abs() < 1e-15);
        assert!((p.growth[1] - 0.502).abs() < 1e-3);

        assert!(fluid_queue_rates(&[1.0], 2, 1).is_err());
        assert!(fluid_queue_rates(&[1.0f64, 1.0], 2, 0).is_err());
    }

    #[test]
    fn three_link_case_used_in_checks() {
        let p = fluid_queue_rates(&[2.0f64, 1.5, 0.5], 2, 1).unwrap();
        assert_eq!(p.growth, vec![1.25, 0.5]);
    }

    #[test]
    fn achievable_rate() {
        assert_eq!(achievable_rate_tandem(&[1.0, 0.5]).unwrap(), 0.5);
        assert_eq!(achievable_rate_tandem(&[0.7, 0.7, 0.7]).unwrap(), 0.7);
        assert_eq!(achievable_rate_tandem(&[0.5f32, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn works_in_f32() {
        let p = fluid_queue_rates(&[2.0f32, 1.0], 2, 1).unwrap();
        assert_eq!(p.growth, vec![1.5f32]);
    }

    proptest! {
        #[test]
        fn two_link_form(z12 in 0.0f64..5.0, z23 in 0.0f64..5.0, rho in 1u32..6, qi in 0usize..3) {
            let q = [2u32, 16, 256][qi];
            let c = 1.0 - (q as f64).powi(-(rho as i32));
            let p = fluid_queue_rates(&[z12, z23], q, rho).unwrap();
            prop_assert_eq!(p.growth[0], (z12 - c * z23).max(0.0));
        }

        #[test]
        fn min_is_permutation_invariant(mut z in prop::collection::vec(0.0f64..5.0, 1..8)) {
            let a = achievable_rate_tandem(&z).unwrap();
            z.reverse();
            prop_assert_eq!(a, achievable_rate_tandem(&z).unwrap());
        }

        #[test]
        fn throughput_exceeds_rate_iff_below_min_cut_for_large_rho(
            z in prop::collection::vec(0.1f64..5.0, 1..6),
            r in 0.05f64..5.0,
        ) {
            let c = achievable_rate_tandem(&z).unwrap();
            prop_assume!((r - c).abs() > 1e-6);
            let t = fluid_throughput(&z, 2, 40).unwrap();
            prop_assert_eq!(t > r, r < c);
        }
    }
}
