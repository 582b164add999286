use spreadlab::noise::*;
use spreadlab::rng::rng_from_seed;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Direct summation of p·log(p/q) over a window wide enough that the tail
/// mass is below 1e-18.
fn brute_force_kl(lambda: f64, alpha: f64, shift: i64) -> f64 {
    let p = SymGeomParams::new(0, lambda, alpha, 1.0).unwrap();
    let q = SymGeomParams::new(shift, lambda, alpha, 1.0).unwrap();
    let width = (45.0 / -(-lambda).ln_1p()).ceil() as i64;
    (-width..=shift + width)
        .map(|k| {
            let (a, b) = (p.pmf(k), q.pmf(k));
            if a > 0.0 {
                a * (a / b).ln()
            } else {
                0.0
            }
        })
        .sum()
}

#[test]
fn closed_form_matches_series_on_grid() {
    for alpha in [0.05, 0.1, 0.25] {
        let mut lambdas = vec![2.0 * alpha];
        for d in [5.0f64, 10.0] {
            lambdas.push(2.0 * alpha * d.powi(-5));
        }
        for lambda in lambdas {
            let p = SymGeomParams::new(0, lambda, alpha, 1.0).unwrap();
            for shift in 1..=10 {
                let k = kl_shift(&p, shift).unwrap();
                assert!((k.kl - k.series).abs() <= 1e-9, "alpha {alpha} lambda {lambda} shift {shift}");
                assert!(k.kl >= 0.0);
            }
        }
    }
}

#[test]
fn closed_form_matches_brute_force() {
    for alpha in [0.05, 0.1, 0.25] {
        for shift in 1..=10 {
            let closed = kl_shift(&SymGeomParams::new(0, 2.0 * alpha, alpha, 1.0).unwrap(), shift).unwrap().kl;
            let brute = brute_force_kl(2.0 * alpha, alpha, shift as i64);
            assert!((closed - brute).abs() < 1e-12, "alpha {alpha} shift {shift}: {closed} vs {brute}");
        }
    }
}

#[test]
fn unit_shift_kl_is_below_four_alpha_squared() {
    for i in 1..=100 {
        let alpha = 0.25 * i as f64 / 100.0;
        let p = SymGeomParams { c: 0, lambda: 2.0 * alpha, alpha, sigma: 1.0 };
        if p.validate().is_err() {
            continue;
        }
        let kl = kl_shift(&p, 1).unwrap().kl;
        assert!(kl <= 4.0 * alpha * alpha, "alpha {alpha}: {kl}");
    }
}

#[test]
fn unit_shift_kl_at_alpha_tenth() {
    let kl = kl_shift(&SymGeomParams::new(0, 0.2, 0.1, 1.0).unwrap(), 1).unwrap().kl;
    let closed = 0.1 * 0.9 * 1.25f64.ln() + 0.01 * (1.0f64 / 0.9).ln();
    assert!((kl - closed).abs() < 1e-15);
    assert!((kl - brute_force_kl(0.2, 0.1, 1)).abs() < 1e-14);
}

#[test]
fn kl_is_increasing_in_shift() {
    let p = SymGeomParams::new(0, 0.1, 0.05, 1.0).unwrap();
    let v: Vec<f64> = (1..=20).map(|s| kl_shift(&p, s).unwrap().kl).collect();
    assert!(v.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sampler_passes_chi_square() {
    let p = SymGeomParams::new(2, 0.3, 0.2, 1.0).unwrap();
    let n = 200_000;
    let draws = symgeom_sample(&p, n, &mut rng_from_seed(21));
    let lo = -8i64;
    let hi = 12i64;
    let mut counts = vec![0usize; (hi - lo + 3) as usize];
    for x in &draws {
        let k = x.round() as i64;
        assert_eq!(x.fract(), 0.0);
        let idx = if k < lo { 0 } else if k > hi { counts.len() - 1 } else { (k - lo + 1) as usize };
        counts[idx] += 1;
    }
    let mut expected = vec![0.0; counts.len()];
    for k in lo..=hi {
        expected[(k - lo + 1) as usize] = p.pmf(k);
    }
    let inner: f64 = expected.iter().sum();
    let tail = 0.5 * (1.0 - inner);
    expected[0] = tail;
    let last = expected.len() - 1;
    expected[last] = tail;
    let stat: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let e = e * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    assert!(1.0 - dist.cdf(stat) > 1e-4, "chi2 = {stat}");
}

#[test]
fn sampler_scales_by_sigma() {
    let p = SymGeomParams::new(0, 0.5, 0.5, 2.5).unwrap();
    for x in symgeom_sample(&p, 1000, &mut rng_from_seed(1)) {
        assert_eq!((x / 2.5).fract(), 0.0);
    }
}

#[test]
fn inlier_fraction_matches_alpha() {
    let alpha = 0.3;
    let p = SymGeomParams::new(0, 0.4, alpha, 1.0).unwrap();
    let n = 100_000;
    let inliers = symgeom_sample(&p, n, &mut rng_from_seed(2)).iter().filter(|x| x.abs() < 1.0).count();
    let se = (alpha * (1.0 - alpha) / n as f64).sqrt();
    assert!((inliers as f64 / n as f64 - alpha).abs() < 4.0 * se);
}

#[test]
fn nbr_moments_match_monte_carlo() {
    let p = NbrParams::new(0.1, 0.5).unwrap();
    let n = 1_000_000;
    let x = nbr_sample(&p, n, &mut rng_from_seed(3));
    for r in [2u32, 4] {
        let vals: Vec<f64> = x.iter().map(|v| v.powi(r as i32)).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - nbr_moment(&p, r)).abs() < 4.0 * se, "r = {r}: {mean} vs {}", nbr_moment(&p, r));
    }
}

#[test]
fn double_factorials() {
    assert_eq!(double_factorial_odd(0), 1.0);
    assert_eq!(double_factorial_odd(2), 1.0);
    assert_eq!(double_factorial_odd(6), 15.0);
    assert_eq!(double_factorial_odd(8), 105.0);
}
