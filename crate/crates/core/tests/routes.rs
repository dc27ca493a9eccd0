//! Cross-route consistency: every closed form must be reproduced by the
//! integral routes, and independent estimators must agree with each other.

use approx::assert_relative_eq;
use tailcorrect::density::{catalog_with_defaults, CovarianceSpec, JointDensitySpec, MarginalFamily};
use tailcorrect::kg::{
    eval_g, kg_f_integral, kg_ost_quadrature, kg_tst_gaussian, kg_tst_quadrature, table1_kg,
    KgOptions, TestSpec,
};
use tailcorrect::rng::chunk_rng;
use tailcorrect::special::ln_gamma;
use tailcorrect::tails::{shrink_ball_k, ShrinkBallContext};

const PI: f64 = std::f64::consts::PI;

/// Every family of the closed-form catalog, quadrature vs formula, for
/// n = 2, 3, 4. This covers the inverse gamma/chi-squared rows sharing the
/// direct families' constants.
#[test]
fn table1_reproduced_by_quadrature_for_all_families() {
    let opts = KgOptions::default();
    for fam in catalog_with_defaults() {
        for n in [2usize, 3, 4] {
            let want = table1_kg(&fam, n).unwrap();
            let g = JointDensitySpec::iid(fam.clone(), n).unwrap();
            let got = kg_ost_quadrature(&g, n, &opts).unwrap();
            assert!(
                (got.value / want - 1.0).abs() < 1e-6,
                "{fam:?} n={n}: quadrature {} vs closed form {want}",
                got.value
            );
        }
    }
}

/// One-sample route equivalence through the shrinking ball: for G(0)
/// computed by eval_g, K_{G,2} must equal the direct radial quadrature.
#[test]
fn ost_ball_route_matches_direct() {
    let opts = KgOptions::default();
    for fam in [
        MarginalFamily::Cauchy,
        MarginalFamily::Uniform { a: -1.0, b: 1.0 },
        MarginalFamily::CenteredExponential { lambda: 1.0 },
        MarginalFamily::LogNormal { mu: 0.0, sigma: 1.0 },
        MarginalFamily::Beta { alpha: 2.0, beta: 3.0 },
    ] {
        for n in [2usize, 3, 4] {
            let g = JointDensitySpec::iid(fam.clone(), n).unwrap();
            let spec = TestSpec::OneSampleT { n };
            let g0 = eval_g(&spec, &g, &vec![0.0; n - 1], &opts).unwrap();
            let via_ball = shrink_ball_k(&ShrinkBallContext::new(n - 1, 1.0, 2.0, g0));
            let direct = kg_ost_quadrature(&g, n, &opts).unwrap().value;
            assert!(
                (via_ball / direct - 1.0).abs() < 1e-6,
                "{fam:?} n={n}: ball {via_ball} vs direct {direct}"
            );
        }
    }
}

/// Two-sample route equivalence on Gaussian specs, including a covariance
/// with cross-sample correlation (nothing block-diagonal about it).
#[test]
fn tst_quadrature_matches_gaussian_reduction() {
    let opts = KgOptions { rel_tol: 1e-9, abs_tol: 1e-11, ..Default::default() };
    let covs = vec![
        CovarianceSpec::from_rows(&[
            vec![1.0, 0.3, 0.1, 0.0],
            vec![0.3, 2.0, 0.0, -0.2],
            vec![0.1, 0.0, 1.5, 0.4],
            vec![0.0, -0.2, 0.4, 1.0],
        ])
        .unwrap(),
        CovarianceSpec::from_rows(&[
            vec![4.0, 0.0, 0.0, 0.0],
            vec![0.0, 4.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap(),
    ];
    for cov in covs {
        for spec in [TestSpec::TwoSampleT { n1: 2, n2: 2 }, TestSpec::Welch { n1: 2, n2: 2 }] {
            let reduced = kg_tst_gaussian(&cov, &spec, &opts).unwrap();
            let g = JointDensitySpec::mvn(cov.clone()).unwrap();
            let nested = kg_tst_quadrature(&g, &spec, &opts).unwrap();
            assert!(
                (nested.value / reduced.value - 1.0).abs() < 1e-6,
                "{spec:?}: nested {} vs reduced {}",
                nested.value,
                reduced.value
            );
        }
    }
}

/// Rescaled data leaves each statistic's constant unchanged:
/// g(x) -> lambda^n g(lambda x).
#[test]
fn scale_invariance_of_kg() {
    let opts = KgOptions { rel_tol: 1e-9, abs_tol: 1e-11, ..Default::default() };
    for lambda in [0.5f64, 3.0] {
        // One-sample on i.i.d. exponential: rate scales by lambda.
        let base = JointDensitySpec::iid(MarginalFamily::Exponential { lambda: 1.0 }, 3).unwrap();
        let scaled =
            JointDensitySpec::iid(MarginalFamily::Exponential { lambda }, 3).unwrap();
        let a = kg_ost_quadrature(&base, 3, &opts).unwrap().value;
        let b = kg_ost_quadrature(&scaled, 3, &opts).unwrap().value;
        assert_relative_eq!(a, b, max_relative = 1e-7);

        // Two-sample (Student and Welch) on a Gaussian: Sigma -> Sigma /
        // lambda^2.
        let rows = vec![
            vec![1.0, 0.4, 0.0, 0.0],
            vec![0.4, 2.0, 0.1, 0.0],
            vec![0.0, 0.1, 1.0, -0.3],
            vec![0.0, 0.0, -0.3, 1.5],
        ];
        let scaled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| v / (lambda * lambda)).collect()).collect();
        let cov = CovarianceSpec::from_rows(&rows).unwrap();
        let cov_scaled = CovarianceSpec::from_rows(&scaled_rows).unwrap();
        for spec in [TestSpec::TwoSampleT { n1: 2, n2: 2 }, TestSpec::Welch { n1: 2, n2: 2 }] {
            let a = kg_tst_gaussian(&cov, &spec, &opts).unwrap().value;
            let b = kg_tst_gaussian(&cov_scaled, &spec, &opts).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }
}

/// Semi-analytic factorization oracle for the F-statistic constant with
/// independent Gaussian samples:
///
/// `K_g = pre * (2 pi)^{(1-n2)/2} |Sigma2|^{-1/2} (I Sigma2^{-1} I')^{-1/2}
///        * E[ s1(X)^{n2-1} ]` for `X ~ MVN(0, Sigma1)`.
///
/// The expectation is estimated by plain Monte Carlo from the Gaussian
/// itself, a route fully independent of the importance-sampled integral.
fn factorized_gaussian_kg(
    cov1: &CovarianceSpec,
    cov2: &CovarianceSpec,
    n_mc: usize,
    seed: u64,
) -> (f64, f64) {
    let n1 = cov1.dim();
    let n2 = cov2.dim();
    let pre = (ln_gamma(0.5 * (n1 as f64 - 1.0))
        + 0.5 * (n2 as f64 - 1.0) * (PI * (n1 as f64 - 1.0)).ln()
        - ln_gamma(0.5 * ((n1 + n2) as f64 - 2.0)))
    .exp();
    let diag = vec![1.0 / (n2 as f64).sqrt(); n2];
    let r_integral = (2.0 * PI).powf(0.5 * (1.0 - n2 as f64))
        * (-0.5 * cov2.log_det()).exp()
        / cov2.inv_quadratic_form(&diag).sqrt();

    let mut rng = chunk_rng(seed, 99);
    let mut x = vec![0.0; n1];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_mc {
        cov1.sample_into(&mut rng, &mut x);
        let mean = x.iter().sum::<f64>() / n1 as f64;
        let s1sq =
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n1 as f64 - 1.0);
        let w = s1sq.sqrt().powi(n2 as i32 - 1);
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n_mc as f64;
    let se = ((sum_sq / n_mc as f64 - mean * mean).max(0.0) / n_mc as f64).sqrt();
    (pre * r_integral * mean, pre * r_integral * se)
}

/// Independent Gaussians with general covariances, including a Sigma2 whose
/// row sums differ (the diagonal direction is not an eigenvector): the
/// importance-sampled integral must match the factorization oracle.
#[test]
fn f_integral_matches_gaussian_factorization() {
    let cov1 = CovarianceSpec::from_rows(&[vec![1.5, 0.4], vec![0.4, 0.8]]).unwrap();
    let cov2 =
        CovarianceSpec::from_rows(&[vec![1.0, 0.0, 0.3], vec![0.0, 2.5, 0.0], vec![0.3, 0.0, 0.7]])
            .unwrap();
    let g = JointDensitySpec::product(vec![
        JointDensitySpec::mvn(cov1.clone()).unwrap(),
        JointDensitySpec::mvn(cov2.clone()).unwrap(),
    ])
    .unwrap();
    let opts = KgOptions { mc_samples: 2_000_000, ..Default::default() };
    let mc = kg_f_integral(&g, 2, 3, &opts).unwrap();
    let (oracle, oracle_se) = factorized_gaussian_kg(&cov1, &cov2, 2_000_000, 7);
    let tol = 3.0 * (mc.abs_error_estimate.powi(2) + oracle_se.powi(2)).sqrt();
    assert!(
        (mc.value - oracle).abs() < tol,
        "importance MC {} +- {} vs factorization {} +- {}",
        mc.value,
        mc.abs_error_estimate,
        oracle,
        oracle_se
    );
}

/// The x-space representation of the same constant (multivariate-t-shaped
/// integrand over R^{n1}), evaluated by an independent plain Monte Carlo
/// with a different proposal. The constant in front matches the
/// factorization form exactly; with an exchangeable Sigma2 both published
/// normalizations coincide.
#[test]
fn f_integral_matches_x_space_representation() {
    let cov1 = CovarianceSpec::from_rows(&[vec![2.0, -0.5], vec![-0.5, 1.0]]).unwrap();
    let cov2 = CovarianceSpec::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap();
    let (n1, n2) = (2usize, 2usize);
    let n = n1 + n2;
    let g = JointDensitySpec::product(vec![
        JointDensitySpec::mvn(cov1.clone()).unwrap(),
        JointDensitySpec::mvn(cov2.clone()).unwrap(),
    ])
    .unwrap();
    let opts = KgOptions { mc_samples: 2_000_000, ..Default::default() };
    let mc = kg_f_integral(&g, n1, n2, &opts).unwrap();

    // K_g = C int s1(x)^{n2-1} (1 + x Sigma1^{-1} x')^{-n/2} dx with
    // C = (n-2) (n1-1)^{(n2-1)/2} Gamma((n1-1)/2)
    //     / (2 pi^{(n1+1)/2} |Sigma1|^{1/2} |Sigma2|^{1/2}
    //        (I Sigma2^{-1} I')^{1/2}).
    let diag = vec![1.0 / (n2 as f64).sqrt(); n2];
    let c = (n as f64 - 2.0) * (n1 as f64 - 1.0).powf(0.5 * (n2 as f64 - 1.0))
        * ln_gamma(0.5 * (n1 as f64 - 1.0)).exp()
        / (2.0
            * PI.powf(0.5 * (n1 as f64 + 1.0))
            * (0.5 * cov1.log_det()).exp()
            * (0.5 * cov2.log_det()).exp()
            * cov2.inv_quadratic_form(&diag).sqrt());

    // Plain MC over x from a multivariate Cauchy (t with 1 df, shape
    // Sigma1): its rho^{-3} tail keeps the importance weights of the
    // rho^{-3}-decaying integrand square-integrable.
    let mut rng = chunk_rng(11, 3);
    let n_mc = 4_000_000usize;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut x = vec![0.0; n1];
    use rand_distr::Distribution;
    let chisq1 = rand_distr::ChiSquared::new(1.0).unwrap();
    let q_norm = ln_gamma(0.5 * (1.0 + n1 as f64)).exp()
        / (ln_gamma(0.5).exp() * PI.powf(0.5 * n1 as f64) * (0.5 * cov1.log_det()).exp());
    for _ in 0..n_mc {
        cov1.sample_into(&mut rng, &mut x);
        let wdf: f64 = chisq1.sample(&mut rng);
        let scale = 1.0 / wdf.sqrt().max(1e-12);
        for xi in x.iter_mut() {
            *xi *= scale;
        }
        let quad = cov1.inv_quadratic_form(&x);
        let q = q_norm * (1.0 + quad).powf(-0.5 * (1.0 + n1 as f64));
        let mean = 0.5 * (x[0] + x[1]);
        let s1 = ((x[0] - mean).powi(2) + (x[1] - mean).powi(2)).sqrt();
        let w = s1.powi(n2 as i32 - 1) * (1.0 + quad).powf(-0.5 * n as f64) / q;
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n_mc as f64;
    let se = ((sum_sq / n_mc as f64 - mean * mean).max(0.0) / n_mc as f64).sqrt();
    let oracle = c * mean;
    let oracle_se = c * se;

    let tol = 3.0 * (mc.abs_error_estimate.powi(2) + oracle_se.powi(2)).sqrt();
    assert!(
        (mc.value - oracle).abs() < tol,
        "importance MC {} +- {} vs x-space MC {} +- {}",
        mc.value,
        mc.abs_error_estimate,
        oracle,
        oracle_se
    );
}

/// Welch and Student two-sample constants coincide on the diagonal
/// (n1 = n2) since the weights are then identical.
#[test]
fn welch_student_agree_on_diagonal_sizes() {
    let opts = KgOptions::default();
    for n in [2usize, 3] {
        for k in [0.5f64, 1.0, 2.0] {
            let dim = 2 * n;
            let mut rows = vec![vec![0.0; dim]; dim];
            for (i, row) in rows.iter_mut().enumerate() {
                row[i] = if i < n { k * k } else { 1.0 };
            }
            let cov = CovarianceSpec::from_rows(&rows).unwrap();
            let student =
                kg_tst_gaussian(&cov, &TestSpec::TwoSampleT { n1: n, n2: n }, &opts).unwrap();
            let welch = kg_tst_gaussian(&cov, &TestSpec::Welch { n1: n, n2: n }, &opts).unwrap();
            assert_relative_eq!(student.value, welch.value, max_relative = 1e-9);
            if k == 1.0 {
                assert_relative_eq!(student.value, 1.0, max_relative = 1e-9);
            }
        }
    }
}

/// s1(x)^{n2-1} for one known case: sample std of two points is
/// |x1 - x2| / sqrt(2); quick guard for the oracle helpers above.
#[test]
fn sample_std_two_points() {
    let x = [1.0, 4.0];
    let mean = 2.5;
    let s = ((x[0] - mean).powi(2) + (x[1] - mean).powi(2)).sqrt();
    assert_relative_eq!(s, 3.0 / 2f64.sqrt(), max_relative = 1e-14);
}
