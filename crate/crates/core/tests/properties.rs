//! Distribution-level smoke properties and randomized invariants.

use proptest::prelude::*;
use tailcorrect::density::{catalog_with_defaults, JointDensitySpec, MarginalFamily};
use tailcorrect::quad::integrate;
use tailcorrect::sim::fmt_g;
use tailcorrect::tails::{f_tail, t_tail};

/// Histogram of 10^6 draws vs binned pdf mass: total variation below 0.02
/// for every family of the catalog.
#[test]
fn sampler_matches_pdf_in_total_variation() {
    const DRAWS: usize = 1_000_000;
    const BINS: usize = 100;
    for fam in catalog_with_defaults() {
        let g = JointDensitySpec::iid(fam.clone(), 2).unwrap();
        let rows = g.sample_matrix(0xFEED ^ fam.name().len() as u64, DRAWS / 2).unwrap();
        let mut draws: Vec<f64> = rows; // 2 coordinates per row, all i.i.d.
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Bin the central 99.9% of the sample; the pdf integral over each
        // bin is the model mass.
        let lo = draws[(draws.len() as f64 * 0.0005) as usize];
        let hi = draws[(draws.len() as f64 * 0.9995) as usize];
        let width = (hi - lo) / BINS as f64;
        assert!(width > 0.0, "{}", fam.name());
        let mut observed = vec![0.0f64; BINS];
        let mut outside = 0usize;
        for &d in &draws {
            let b = ((d - lo) / width).floor();
            if b < 0.0 || b >= BINS as f64 {
                outside += 1;
            } else {
                observed[b as usize] += 1.0;
            }
        }
        let n = draws.len() as f64;
        let mut tv = (outside as f64 / n
            - (1.0 - model_mass(&fam, lo, hi)))
        .abs();
        for (i, obs) in observed.iter().enumerate() {
            let a = lo + i as f64 * width;
            let b = a + width;
            let model = model_mass(&fam, a, b);
            tv += (obs / n - model).abs();
        }
        tv *= 0.5;
        assert!(tv < 0.02, "{}: TV = {tv:.4}", fam.name());
    }
}

fn model_mass(fam: &MarginalFamily, a: f64, b: f64) -> f64 {
    integrate(|x| fam.pdf(x), a, b, 1e-11, 1e-9, 600).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The i.i.d. joint pdf equals the exponentiated sum of marginal log
    /// densities wherever the point is in the support.
    #[test]
    fn iid_pdf_is_exp_log_sum(xs in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let fam = MarginalFamily::StudentT { nu: 2.0 };
        let g = JointDensitySpec::iid(fam.clone(), 4).unwrap();
        let joint = g.pdf(&xs).unwrap();
        let log_sum: f64 = xs.iter().map(|&x| fam.pdf(x).ln()).sum();
        prop_assert!((joint - log_sum.exp()).abs() <= 1e-12 * joint.abs().max(1e-300));
    }

    /// Survival functions are proper and monotone.
    #[test]
    fn tails_monotone_and_bounded(k in 1.0f64..20.0, u1 in 0.0f64..30.0, du in 0.001f64..10.0) {
        let a = t_tail(k, u1);
        let b = t_tail(k, u1 + du);
        prop_assert!((0.0..=0.5).contains(&a));
        prop_assert!(b <= a);
        let fa = f_tail(2.5, k, u1).unwrap();
        let fb = f_tail(2.5, k, u1 + du).unwrap();
        prop_assert!((0.0..=1.0).contains(&fa));
        prop_assert!(fb <= fa);
    }

    /// The identity between the Student tail and the halved F tail holds
    /// everywhere, not only on the acceptance grid.
    #[test]
    fn t_f_identity_random(k in 1.0f64..30.0, u in 0.0f64..60.0) {
        let lhs = t_tail(k, u);
        let rhs = 0.5 * f_tail(1.0, k, u * u).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    /// %g formatting round-trips through parse at 12 significant digits.
    #[test]
    fn fmt_g_round_trip(x in -1e12f64..1e12) {
        let s = fmt_g(x, 12);
        let back: f64 = s.parse().unwrap();
        let tol = 1e-11 * x.abs().max(1e-300);
        prop_assert!((back - x).abs() <= tol, "{x} -> {s} -> {back}");
    }

    /// Marginal pdfs are nonnegative and finite on finite inputs.
    #[test]
    fn pdfs_nonnegative(x in -50.0f64..50.0, idx in 0usize..17) {
        let fams = catalog_with_defaults();
        let fam = &fams[idx % fams.len()];
        let v = fam.pdf(x);
        prop_assert!(v.is_finite() && v >= 0.0, "{}: pdf({x}) = {v}", fam.name());
    }
}
