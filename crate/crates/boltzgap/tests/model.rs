use boltzgap::model::{
    collision_frequency, collision_frequency_radial, sigma_bounds, weight_inv_radial,
    weighted_l1_norm, ModelSpec, QuadConfig, WeightSpec,
};
use boltzgap::Error;
use statrs::function::gamma::gamma;

fn spec(g: f64) -> ModelSpec {
    ModelSpec::new(3, g, 1.0, WeightSpec::Unit).unwrap()
}

fn sigma(r: f64, g: f64) -> f64 {
    collision_frequency_radial(r, &spec(g), &QuadConfig::default()).unwrap()
}

/// Values computed independently with 40-digit arithmetic on the convolution
/// `Sigma(v) = ell_b ∫ |v-u|^gamma M(u) du`.
#[test]
fn collision_frequency_reference_table() {
    let table = [
        (1.0, 0.0, 1.5957691216057313),
        (1.0, 1.0, 1.8493204333124589),
        (1.0, 8.0, 8.125),
        (0.5, 0.0, 1.2332684379936878),
        (0.5, 1.0, 1.3289292930829777),
        (0.5, 8.0, 2.8450496575072655),
        (-1.0, 0.0, 0.7978845608028654),
        (-1.0, 1.0, 0.68268949213708596),
        (-1.0, 8.0, 0.125),
        (-2.0, 0.0, 1.0),
        (-2.0, 1.0, 0.72477845900707605),
        (-2.0, 8.0, 0.015881593326532557),
        (-2.9, 0.5, 7.126838069168966),
        (-2.9, 2.0, 1.2088183071255004),
    ];
    for &(g, r, want) in &table {
        let got = sigma(r, g);
        assert!(
            (got / want - 1.0).abs() < 1e-12,
            "Sigma({r}; gamma = {g}) = {got:.17e}, want {want:.17e}"
        );
    }
}

#[test]
fn collision_frequency_at_rest_closed_form() {
    // Sigma(0) = ell_b sqrt(2/pi) 2^{(gamma+1)/2} Gamma((gamma+3)/2).
    for &g in &[1.0, 0.5, 0.0, -0.5, -1.0, -1.5, -2.0, -2.5] {
        let want = (2.0 / std::f64::consts::PI).sqrt()
            * 2f64.powf(0.5 * (g + 1.0))
            * gamma(0.5 * (g + 3.0));
        let got = sigma(0.0, g);
        assert!((got / want - 1.0).abs() < 5e-10, "gamma = {g}: {got} vs {want}");
    }
}

#[test]
fn collision_frequency_soft_coulomb_closed_form() {
    // For gamma = -1 the convolution reduces to erf(r / sqrt 2) / r.
    for &r in &[0.5, 1.0, 2.0, 4.0] {
        let want = statrs::function::erf::erf(r / 2f64.sqrt()) / r;
        let got = sigma(r, -1.0);
        assert!((got / want - 1.0).abs() < 1e-9, "r = {r}: {got} vs {want}");
    }
}

#[test]
fn collision_frequency_scales_linearly_in_cutoff_mass() {
    let s1 = collision_frequency_radial(
        1.3,
        &ModelSpec::new(3, 0.5, 1.0, WeightSpec::Unit).unwrap(),
        &QuadConfig::default(),
    )
    .unwrap();
    let s2 = collision_frequency_radial(
        1.3,
        &ModelSpec::new(3, 0.5, 2.5, WeightSpec::Unit).unwrap(),
        &QuadConfig::default(),
    )
    .unwrap();
    assert!((s2 / s1 - 2.5).abs() < 1e-13);
}

#[test]
fn collision_frequency_monotonicity_matches_hardness() {
    let radii: Vec<f64> = (0..=16).map(|k| 0.5 * k as f64).collect();
    for &g in &[1.0, 0.5] {
        let vals: Vec<f64> = radii.iter().map(|&r| sigma(r, g)).collect();
        assert!(vals.windows(2).all(|p| p[1] > p[0]), "gamma = {g} not increasing");
    }
    for &g in &[-0.5, -1.0, -2.0] {
        let vals: Vec<f64> = radii.iter().map(|&r| sigma(r, g)).collect();
        assert!(vals.windows(2).all(|p| p[1] < p[0]), "gamma = {g} not decreasing");
    }
}

#[test]
fn vector_and_radial_frequencies_agree() {
    let m = spec(0.5);
    let cfg = QuadConfig::default();
    let v = [0.3, -1.1, 0.7];
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = collision_frequency(&v, &m, &cfg).unwrap();
    let b = collision_frequency_radial(r, &m, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(matches!(
        collision_frequency(&[1.0, 2.0], &m, &cfg),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn sigma_envelope_brackets_the_frequency() {
    let radii: Vec<f64> = (0..=32).map(|k| 0.25 * k as f64).collect();
    for &g in &[1.0, -1.0] {
        let m = spec(g);
        let b = sigma_bounds(&m, &radii, &QuadConfig::default()).unwrap();
        assert!(b.sigma1 > 0.0 && b.sigma1 <= b.sigma2);
        assert!(b.eta > 0.0 && b.eta <= b.sigma_max);
        for &r in &radii {
            let s = sigma(r, g);
            let env = (1.0 + r).powf(g);
            assert!(s >= b.sigma1 * env - 1e-12 && s <= b.sigma2 * env + 1e-12);
        }
        if m.is_hard() {
            assert!((b.eta - sigma(0.0, g)).abs() < 1e-12);
            assert!((b.sigma_max - sigma(8.0, g)).abs() < 1e-12);
        } else {
            assert!((b.sigma_max - sigma(0.0, g)).abs() < 1e-12);
        }
    }
}

#[test]
fn weights_are_bounded_below_by_one() {
    let ws = [
        WeightSpec::Unit,
        WeightSpec::Exponential { a: 0.25, s: 1.0 },
        WeightSpec::Exponential { a: 1.0, s: 0.5 },
        WeightSpec::Algebraic { beta: 2.0 },
    ];
    for w in &ws {
        for k in 0..=40 {
            let r = 0.25 * k as f64;
            assert!(weight_inv_radial(r, w) >= 1.0);
        }
    }
    let e = WeightSpec::Exponential { a: 0.25, s: 1.0 };
    assert!((weight_inv_radial(2.0, &e) - 0.5f64.exp()).abs() < 1e-15);
    let alg = WeightSpec::Algebraic { beta: 2.0 };
    assert!((weight_inv_radial(3.0, &alg) - 10.0).abs() < 1e-15);
}

#[test]
fn weighted_norm_reduces_to_mass_for_unit_weight() {
    let grid = boltzgap::discretize::build_grid(64, 16, 8.0, 3).unwrap();
    let m = grid.maxwellian();
    let norm = weighted_l1_norm(&m, &grid.nodes, &grid.weights, &WeightSpec::Unit);
    assert!((norm - 1.0).abs() < 1e-10);
    let heavier = weighted_l1_norm(
        &m,
        &grid.nodes,
        &grid.weights,
        &WeightSpec::Exponential { a: 0.25, s: 1.0 },
    );
    assert!(heavier > norm);
}

#[test]
fn quadrature_check_flags_absurd_orders() {
    let cfg = QuadConfig { order_u: 2, order_mu: 2, rel_tol: 1e-10, skip_check: false };
    let err = collision_frequency_radial(1.0, &spec(-2.5), &cfg);
    assert!(matches!(err, Err(Error::QuadratureNonConvergence { .. })));
}
