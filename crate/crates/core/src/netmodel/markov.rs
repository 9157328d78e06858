use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{domain, Result};

/// A continuous-time Markov chain given by its off-diagonal transition rates.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    rates: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// `rates[k][l]` is the transition rate from state `k` to state `l`;
    /// diagonal entries are ignored. The chain must be irreducible.
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.len();
        if n == 0 {
            return domain("Markov chain needs at least one state");
        }
        for (k, row) in rates.iter().enumerate() {
            if row.len() != n {
                return domain(format!("transition row {k} has {} entries, expected {n}", row.len()));
            }
            for (l, &r) in row.iter().enumerate() {
                if k != l && (!(r >= 0.0) || !r.is_finite()) {
                    return domain(format!("transition rate {k}->{l} is {r}"));
                }
            }
        }
        if !strongly_connected(&rates) {
            return domain("Markov chain is reducible");
        }
        let stationary = solve_stationary(&rates)?;
        Ok(Self { rates, stationary })
    }

    /// Two-state chain with rates `good -> bad` and `bad -> good`.
    pub fn two_state(to_bad: f64, to_good: f64) -> Result<Self> {
        Self::new(vec![vec![0.0, to_bad], vec![to_good, 0.0]])
    }

    pub fn states(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            0.0
        } else {
            self.rates[from][to]
        }
    }

    pub fn exit_rate(&self, k: usize) -> f64 {
        (0..self.states()).map(|l| self.rate(k, l)).sum()
    }

    /// Steady-state distribution `π` with `πQ = 0`, `Σπ = 1`.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Samples an initial state from the stationary distribution.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.stationary, rng)
    }

    /// Samples the holding time in `k` and the next state. A single-state
    /// chain never jumps.
    pub fn sample_jump<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Option<(f64, usize)> {
        let q = self.exit_rate(k);
        if q <= 0.0 {
            return None;
        }
        let hold = Exp::new(q).expect("positive rate").sample(rng);
        let probs: Vec<f64> = (0..self.states()).map(|l| self.rate(k, l) / q).collect();
        Some((hold, sample_index(&probs, rng)))
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last state with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn strongly_connected(rates: &[Vec<f64>]) -> bool {
    let n = rates.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(k) = stack.pop() {
            for l in 0..n {
                let r = if forward { rates[k][l] } else { rates[l][k] };
                if l != k && r > 0.0 && !seen[l] {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn solve_stationary(rates: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rates.len();
    // Q^T π = 0 with the last balance equation replaced by Σπ = 1
    let mut a = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut exit = 0.0;
        for l in 0..n {
            if l != k {
                a[(l, k)] = rates[k][l];
                exit += rates[k][l];
            }
        }
        a[(k, k)] = -exit;
    }
    for k in 0..n {
        a[(n - 1, k)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| crate::Error::Domain("singular balance equations".into()))?;
    Ok(pi.iter().map(|&p| p.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_examples() {
        let c = MarkovChain::new(vec![vec![0.0]]).unwrap();
        assert_eq!(c.stationary(), &[1.0]);

        let c = MarkovChain::two_state(1.0, 1.0).unwrap();
        assert!((c.stationary()[0] - 0.5).abs() < 1e-12);

        let c = MarkovChain::two_state(1.0, 3.0).unwrap();
        assert!((c.stationary()[0] - 0.75).abs() < 1e-12);
        assert!((c.stationary()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn three_state_balance() {
        let c = MarkovChain::new(vec![
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![4.0, 0.5, 0.0],
        ])
        .unwrap();
        let pi = c.stationary();
        // global balance: inflow = outflow for every state
        for k in 0..3 {
            let out = pi[k] * c.exit_rate(k);
            let inflow: f64 = (0..3).map(|l| pi[l] * c.rate(l, k)).sum();
            assert!((out - inflow).abs() < 1e-12);
        }
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducible_and_malformed_chains_are_rejected() {
        assert!(MarkovChain::two_state(1.0, 0.0).is_err());
        assert!(MarkovChain::new(vec![]).is_err());
        assert!(MarkovChain::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).is_err());
        assert!(MarkovChain::new(vec![vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn occupancy_matches_stationary() {
        let c = MarkovChain::two_state(1.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut k = c.sample_stationary(&mut rng);
        let mut time = [0.0; 2];
        for _ in 0..200_000 {
            let (h, next) = c.sample_jump(k, &mut rng).unwrap();
            time[k] += h;
            k = next;
        }
        let frac = time[0] / (time[0] + time[1]);
        assert!((frac - 0.75).abs() < 0.01, "{frac}");
    }
}
