use boltzgap::carleman::{kernel_gamma, p_gamma, KernelPoint};
use boltzgap::discretize::{assemble, build_grid, GeneratorMatrix, Normalization};
use boltzgap::model::{weight_inv_radial, ModelSpec, WeightSpec};
use boltzgap::spectral::RateFunctions;
use proptest::prelude::*;
use std::sync::OnceLock;

prop_compose! {
    fn admissible_triple()(
        r in 0.05f64..6.0,
        rho in 0.05f64..6.0,
        lambda in 0.02f64..0.98,
    ) -> (f64, f64, f64) {
        let lo = (r - rho).abs();
        let hi = r + rho;
        (r, rho, (lo + lambda * (hi - lo)).max(1e-3))
    }
}

fn shared_gen() -> &'static GeneratorMatrix {
    static G: OnceLock<GeneratorMatrix> = OnceLock::new();
    G.get_or_init(|| {
        let spec = ModelSpec::new(3, 1.0, 1.0, WeightSpec::Unit).unwrap();
        let grid = build_grid(64, 16, 8.0, 3).unwrap();
        assemble(&grid, &spec, Normalization::ColumnStochastic).unwrap()
    })
}

proptest! {
    #[test]
    fn symmetrized_kernel_is_symmetric((r, rho, d) in admissible_triple()) {
        let spec = ModelSpec::new(3, 0.5, 1.0, WeightSpec::Unit).unwrap();
        let fwd = KernelPoint::new(r, rho, d).unwrap();
        let bwd = KernelPoint::new(rho, r, d).unwrap();
        let a = p_gamma(&fwd, &spec).unwrap();
        let b = p_gamma(&bwd, &spec).unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn kernel_is_positive_and_dominated((r, rho, d) in admissible_triple(), g in -2.5f64..1.0) {
        let soft = ModelSpec::new(3, g, 1.0, WeightSpec::Unit).unwrap();
        let hard = ModelSpec::new(3, 1.0, 1.0, WeightSpec::Unit).unwrap();
        let p = KernelPoint::new(r, rho, d).unwrap();
        let kg = kernel_gamma(&p, &soft).unwrap();
        let kh = kernel_gamma(&p, &hard).unwrap();
        prop_assert!(kg > 0.0);
        let bound = d.powf(g - 1.0) * kh;
        prop_assert!(kg <= bound * (1.0 + 1e-8), "k_gamma = {kg}, bound = {bound}");
    }

    #[test]
    fn points_outside_the_triangle_are_rejected(r in 0.1f64..5.0, rho in 0.1f64..5.0, pad in 0.01f64..3.0) {
        prop_assert!(KernelPoint::new(r, rho, r + rho + pad).is_err());
        if (r - rho).abs() > 0.02 {
            prop_assert!(KernelPoint::new(r, rho, ((r - rho).abs() - 0.01).max(0.0)).is_err());
        }
    }

    #[test]
    fn weights_never_amplify(r in 0.0f64..40.0, a in 0.0f64..2.0, beta in 0.0f64..4.0) {
        let exp = WeightSpec::Exponential { a, s: 0.7 };
        let alg = WeightSpec::Algebraic { beta };
        prop_assert!(weight_inv_radial(r, &WeightSpec::Unit) == 1.0);
        prop_assert!(weight_inv_radial(r, &exp) >= 1.0);
        prop_assert!(weight_inv_radial(r, &alg) >= 1.0);
    }

    #[test]
    fn model_spec_roundtrips_through_json(
        g in -2.9f64..1.0,
        ell in 0.1f64..20.0,
        a in 0.01f64..2.0,
    ) {
        let spec = ModelSpec::new(3, g, ell, WeightSpec::Exponential { a, s: 1.0 }).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.gamma.to_bits(), spec.gamma.to_bits());
        prop_assert_eq!(back.ell_b.to_bits(), spec.ell_b.to_bits());
    }

    #[test]
    fn euler_step_is_substochastic(lambda in 0.01f64..1.0) {
        let gen = shared_gen();
        let sigma_max = gen.sigma.iter().cloned().fold(0.0, f64::max);
        let dt = lambda / sigma_max;
        let l = gen.generator();
        let n = gen.n();
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 } + dt * l[(i, j)];
                prop_assert!(e >= 0.0, "entry ({i}, {j}) = {e}");
            }
        }
    }

    #[test]
    fn rate_function_is_monotone(r1 in 1e-3f64..1e3, factor in 1.01f64..10.0, s in 0.5f64..8.0) {
        let rf = RateFunctions::new(s).unwrap();
        let lo = rf.theta(r1).unwrap();
        let hi = rf.theta(r1 * factor).unwrap();
        prop_assert!(hi < lo);
        let tl = rf.theta_log(r1).unwrap();
        let back = rf.theta_log_inv(tl).unwrap();
        prop_assert!((back / r1 - 1.0).abs() < 1e-6, "{back} vs {r1}");
    }
}

#[test]
fn grids_build_across_the_supported_range() {
    for n in (64..=128).step_by(8) {
        for &r_max in &[7.0, 8.0, 9.0] {
            let grid = build_grid(n, 16, r_max, 3).unwrap();
            assert_eq!(grid.len(), n);
            assert!(grid.nodes.windows(2).all(|p| p[1] > p[0]));
            assert!((grid.mass(&grid.maxwellian()) - 1.0).abs() < 1e-8);
        }
    }
}
