use crate::error::{invalid, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Above this rate the inversion sampler hands over to `rand_distr`.
const INVERSION_LIMIT: f64 = 30.0;

fn check_rate(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(invalid(format!("Poisson rate must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// `ln(x!)`, exact summation for small `x`, Stirling series beyond.
pub fn ln_factorial(x: u64) -> f64 {
    if x < 128 {
        return (2..=x).map(|k| (k as f64).ln()).sum();
    }
    let n = x as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `P(X = x)` for `X ~ Po(lambda)`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, x: u64) -> Result<f64> {
    check_rate(lambda)?;
    if lambda == 0.0 {
        return Ok(if x == 0 { 1.0 } else { 0.0 });
    }
    Ok((-lambda + x as f64 * lambda.ln() - ln_factorial(x)).exp())
}

pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    check_rate(lambda)?;
    Ok(draw(lambda, rng))
}

/// Unchecked draw; `lambda` must already be a valid rate.
pub(crate) fn draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    if lambda >= INVERSION_LIMIT {
        return Poisson::new(lambda).expect("validated rate").sample(rng) as u64;
    }
    // Sequential inversion of the CDF.
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let cap = (lambda + 40.0 * lambda.sqrt() + 40.0) as u64;
    while u > cdf && k < cap {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn pmf_at_zero() {
        assert!((poisson_pmf(1.0, 0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((poisson_pmf(1.0, 0).unwrap() - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn degenerate_rate() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(0.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_rates() {
        for bad in [-0.1, f64::NAN, f64::INFINITY] {
            assert!(poisson_pmf(bad, 0).is_err());
            assert!(sample_poisson(bad, &mut seeded(0)).is_err());
        }
    }

    #[test]
    fn pmf_matches_direct_formula() {
        // Oracle: e^-l l^x / x! with an iteratively built factorial.
        let lambda: f64 = 2.5;
        let mut fact = 1.0f64;
        for x in 0..=30u64 {
            if x > 0 {
                fact *= x as f64;
            }
            let direct = (-lambda).exp() * lambda.powi(x as i32) / fact;
            let ours = poisson_pmf(lambda, x).unwrap();
            assert!((ours - direct).abs() <= 1e-13 * direct.max(1e-300) + 1e-300, "x={x}");
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (0..=30).map(|x| poisson_pmf(2.5, x).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for lambda in [0.1f64, 1.0, 2.69, 10.0] {
            let upper = (lambda + 20.0 * lambda.sqrt() + 20.0) as u64;
            let s: f64 = (0..=upper).map(|x| poisson_pmf(lambda, x).unwrap()).sum();
            assert!(s >= 1.0 - 1e-9, "lambda={lambda} sum={s}");
        }
    }

    #[test]
    fn stirling_branch_is_continuous() {
        let exact: f64 = (2..=200u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(200) - exact).abs() < 1e-9);
        let exact128: f64 = (2..=128u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(128) - exact128).abs() < 1e-9);
    }

    #[test]
    fn zero_rate_always_zero() {
        let mut rng = seeded(3);
        assert!((0..1000).all(|_| sample_poisson(0.0, &mut rng).unwrap() == 0));
    }

    #[test]
    fn sample_mean_within_three_standard_errors() {
        let mut rng = seeded(1234);
        let n = 1_000_000;
        let lambda = 1.35;
        let sum: u64 = (0..n).map(|_| draw(lambda, &mut rng)).sum();
        let mean = sum as f64 / n as f64;
        assert!((1.3465..=1.3535).contains(&mean), "mean={mean}");
    }

    #[test]
    fn large_rate_uses_library_sampler() {
        let mut rng = seeded(8);
        let n = 200_000;
        let lambda = 55.0;
        let sum: u64 = (0..n).map(|_| draw(lambda, &mut rng)).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - lambda).abs() < 3.0 * (lambda / n as f64).sqrt());
    }

    #[test]
    fn reproducible_sequence() {
        let a: Vec<u64> = {
            let mut rng = seeded(77);
            (0..100).map(|_| sample_poisson(2.0, &mut rng).unwrap()).collect()
        };
        let b: Vec<u64> = {
            let mut rng = seeded(77);
            (0..100).map(|_| sample_poisson(2.0, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }
}
