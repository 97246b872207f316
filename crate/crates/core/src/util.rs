//! Small shared numeric helpers: seeded RNG streams, percentiles, erfc.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic per-task RNG derived from a master seed and a stream id.
///
/// Results must not depend on scheduling, so every parallel task (tree,
/// fold, grid cell, bootstrap resample) draws from its own stream.
pub fn seeded_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Nearest-rank percentile (inclusive): the smallest element such that at
/// least `p`% of the data is ≤ it. `p` in (0, 100).
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!(p > 0.0 && p < 100.0);
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Linear-interpolation quantile (`h = (n-1)q` convention), `q` in [0, 1].
pub fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

const LN_GAMMA_HALF: f64 = 0.5723649429247001; // ln Γ(1/2) = ln √π

/// Complementary error function via the regularized upper incomplete
/// gamma function: erfc(x) = Q(1/2, x²) for x ≥ 0.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x == 0.0 {
        1.0
    } else {
        gamma_q_half(x * x)
    }
}

/// Survival function of the chi-square distribution with one degree of
/// freedom: P(X ≥ x) = erfc(sqrt(x / 2)).
pub fn chi2_sf_1df(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erfc((x / 2.0).sqrt())
    }
}

// Regularized upper incomplete gamma Q(1/2, x), series/continued-fraction
// split at x = a + 1.
fn gamma_q_half(x: f64) -> f64 {
    let a = 0.5;
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_contfrac(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..300 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - LN_GAMMA_HALF).exp()
}

fn gamma_q_contfrac(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..300 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - LN_GAMMA_HALF).exp() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_reference_points() {
        // Reference values from standard tables.
        let cases = [
            (0.0, 1.0),
            (0.5, 0.4795001221869535),
            (1.0, 0.15729920705028513),
            (2.0, 0.004677734981063128),
            (3.0, 2.2090496998585445e-5),
            (-1.0, 1.8427007929497148),
        ];
        for (x, want) in cases {
            let got = erfc(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "erfc({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn chi2_sf_matches_normal_tail() {
        // chi2(1df) sf at z² equals the two-sided normal tail mass of z.
        let z: f64 = 1.959963984540054; // 95% two-sided point
        let p = chi2_sf_1df(z * z);
        assert!((p - 0.05).abs() < 1e-9, "p = {p}");
    }

    #[test]
    fn nearest_rank_percentile() {
        let v = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(percentile_nearest_rank(&v, 10.0), 1.0);
        assert_eq!(percentile_nearest_rank(&v, 50.0), 5.0);
        assert_eq!(percentile_nearest_rank(&v, 99.0), 10.0);
    }

    #[test]
    fn linear_quantile_interpolates() {
        let v = vec![0.0, 10.0];
        assert_eq!(quantile_linear(&v, 0.25), 2.5);
    }

    #[test]
    fn rng_streams_are_independent_of_each_other() {
        use rand::RngCore;
        let a = seeded_rng(42, 0).next_u64();
        let b = seeded_rng(42, 1).next_u64();
        let a2 = seeded_rng(42, 0).next_u64();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }
}
