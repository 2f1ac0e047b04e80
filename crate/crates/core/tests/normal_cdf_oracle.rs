use rgbm_core::{norm_cdf, norm_sf};

/// `Phi(x)` for `x >= 0` from the all-positive Taylor series
/// `erf(y) = (2/sqrt pi) e^{-y^2} sum_n (2y^2)^n y / (2n+1)!!`.
fn phi_series(x: f64) -> f64 {
    let y = x / std::f64::consts::SQRT_2;
    let mut term = y;
    let mut sum = y;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * y * y / (2.0 * n + 1.0);
        sum += term;
    }
    let erf = 2.0 / std::f64::consts::PI.sqrt() * (-y * y).exp() * sum;
    0.5 * (1.0 + erf)
}

#[test]
fn agrees_with_series_oracle() {
    for i in 0..=600 {
        let x = i as f64 / 100.0;
        let oracle = phi_series(x);
        assert!((norm_cdf(x) - oracle).abs() < 1e-14, "x = {x}");
        assert!((norm_cdf(-x) - (1.0 - oracle)).abs() < 1e-14, "x = -{x}");
    }
}

#[test]
fn frozen_values() {
    assert_eq!(norm_cdf(0.0), 0.5);
    assert!((norm_cdf(1.96) - 0.975_002_104_851_779_57).abs() < 1e-15);
    for x in [0.1, 1.0, 3.0, 7.0] {
        assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() <= 1e-14);
    }
}

#[test]
fn tail_keeps_relative_accuracy() {
    // Mills-ratio asymptotics: sf(x) ~ phi(x)/x (1 - 1/x^2 + 3/x^4 - 15/x^6).
    for x in [10.0f64, 15.0, 25.0] {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let approx = density / x * (1.0 - 1.0 / x.powi(2) + 3.0 / x.powi(4) - 15.0 / x.powi(6));
        assert!(((norm_sf(x) - approx) / approx).abs() < 2e-6, "x = {x}");
        assert_eq!(norm_sf(x), norm_cdf(-x));
    }
}

#[test]
fn monotone_on_a_fine_grid() {
    let mut prev = 0.0;
    for i in -4000..=4000 {
        let v = norm_cdf(i as f64 / 400.0);
        assert!(v >= prev && (0.0..=1.0).contains(&v));
        prev = v;
    }
}
