mod common;

use common::{chisq1_quantile_oracle, chisq1_upper, normal_cdf};
use tplcov::{chisq1_quantile, normal_quantile};

#[test]
fn chisq1_quantile_matches_cdf_inversion() {
    for alpha in [0.5, 0.2, 0.1, 0.05, 0.01, 0.001, 0.3, 0.9] {
        let got = chisq1_quantile(alpha).unwrap();
        let oracle = chisq1_quantile_oracle(alpha);
        assert!((got - oracle).abs() <= 1e-9 * oracle.max(1.0), "alpha {alpha}: {got} vs {oracle}");
        assert!((chisq1_upper(got) - alpha).abs() < 1e-12);
    }
}

#[test]
fn chisq1_reference_values() {
    assert!((chisq1_quantile(0.5).unwrap() - 0.4549364).abs() < 1e-7);
    assert!((chisq1_quantile(0.1).unwrap() - 2.7055435).abs() < 1e-7);
    assert!((chisq1_quantile(0.01).unwrap() - 6.6348966).abs() < 1e-7);
}

#[test]
fn normal_quantile_inverts_cdf() {
    for i in 1..200 {
        let p = i as f64 / 200.0;
        let z = normal_quantile(p);
        assert!((normal_cdf(z) - p).abs() < 1e-12, "p {p}");
    }
    for p in [1e-8, 1e-5, 1e-3] {
        let z = normal_quantile(p);
        assert!((normal_cdf(z) / p - 1.0).abs() < 1e-10, "p {p}");
    }
}
