use boltzgap::discretize::{assemble, assemble_hilbert, build_grid, GeneratorMatrix, Normalization};
use boltzgap::model::{ModelSpec, WeightSpec};
use boltzgap::report::SpectrumSummary;
use boltzgap::spectral::{
    hilbert_spectrum, resolvent_norm, spectrum, RateFunctions, SpectrumReport,
};
use std::sync::OnceLock;

fn assemble_for(gamma: f64, ell_b: f64, n: usize, r_max: f64) -> GeneratorMatrix {
    let spec = ModelSpec::new(3, gamma, ell_b, WeightSpec::Unit).unwrap();
    let grid = build_grid(n, 16, r_max, 3).unwrap();
    assemble(&grid, &spec, Normalization::Raw).unwrap()
}

fn hard_64() -> &'static SpectrumReport {
    static R: OnceLock<SpectrumReport> = OnceLock::new();
    R.get_or_init(|| spectrum(&assemble_for(1.0, 1.0, 64, 8.0)).unwrap())
}

fn hard_128() -> &'static SpectrumReport {
    static R: OnceLock<SpectrumReport> = OnceLock::new();
    R.get_or_init(|| spectrum(&assemble_for(1.0, 1.0, 128, 8.0)).unwrap())
}

fn soft_16() -> &'static SpectrumReport {
    static R: OnceLock<SpectrumReport> = OnceLock::new();
    R.get_or_init(|| spectrum(&assemble_for(-2.0, 1.0, 96, 16.0)).unwrap())
}

#[test]
fn hard_sphere_gap_is_stable_under_grid_doubling() {
    let coarse = hard_64();
    let fine = hard_128();
    assert!((fine.lambda_star - 1.30697308).abs() < 1e-6, "{}", fine.lambda_star);
    assert!(
        (coarse.lambda_star / fine.lambda_star - 1.0).abs() < 0.02,
        "{} vs {}",
        coarse.lambda_star,
        fine.lambda_star
    );
    let top = |rep: &SpectrumReport| -> Vec<f64> {
        rep.eigenvalues.iter().map(|z| z.re).filter(|&x| x < -1e-6).take(5).collect()
    };
    for (a, b) in top(coarse).iter().zip(top(fine)) {
        assert!((a / b - 1.0).abs() < 0.02, "{a} vs {b}");
    }
}

#[test]
fn hard_sphere_gap_is_stable_under_domain_growth() {
    let a = spectrum(&assemble_for(1.0, 1.0, 96, 8.0)).unwrap();
    let b = spectrum(&assemble_for(1.0, 1.0, 96, 10.0)).unwrap();
    assert!((a.lambda_star / b.lambda_star - 1.0).abs() < 0.02);
}

#[test]
fn gap_sits_inside_the_essential_bound() {
    let rep = hard_64();
    assert!(rep.lambda_star > 0.0 && rep.lambda_star < rep.eta);
    assert!((rep.mu2 / rep.lambda_star - 1.0).abs() < 0.01);
    assert!(rep.zero_mode_residual < 1e-8);
    assert!(rep.zero_mode.iter().all(|&x| x > 0.0));
    let nonzero = rep.eigenvalues.iter().filter(|z| z.norm() > 1e-6).count();
    assert_eq!(nonzero + 1, rep.eigenvalues.len());
    assert!(rep.eigenvalues.iter().all(|z| z.re < 1e-6));
}

#[test]
fn generator_and_symmetrized_spectra_agree() {
    let gen = assemble_for(1.0, 1.0, 64, 8.0);
    let rep = spectrum(&gen).unwrap();
    let h = assemble_hilbert(&gen).unwrap();
    let sym = hilbert_spectrum(&h);
    for k in 1..6 {
        let a = rep.eigenvalues[k].re;
        let b = sym[k];
        assert!((a / b - 1.0).abs() < 0.01, "mode {k}: {a} vs {b}");
    }
}

#[test]
fn maxwell_molecules_spectrum_is_confined() {
    let ell_b = 1.25;
    let rep = spectrum(&assemble_for(0.0, ell_b, 64, 8.0)).unwrap();
    assert!((rep.sigma_max / ell_b - 1.0).abs() < 1e-10);
    assert!((rep.eta / ell_b - 1.0).abs() < 1e-10);
    for z in &rep.eigenvalues {
        assert!(z.re <= 1e-6 && z.re >= -ell_b - 1e-6, "{z}");
        assert!(z.im.abs() < 1e-8, "{z}");
    }
    assert!(rep.lambda_star > 0.0 && rep.lambda_star <= ell_b + 1e-9);
}

#[test]
fn soft_potential_gap_closes_with_the_domain() {
    let mags = |rep: &SpectrumReport| -> Vec<f64> {
        rep.eigenvalues
            .iter()
            .map(|z| -z.re)
            .filter(|&x| x > 1e-6)
            .take(3)
            .collect()
    };
    let m8 = mags(&spectrum(&assemble_for(-2.0, 1.0, 96, 8.0)).unwrap());
    let m12 = mags(&spectrum(&assemble_for(-2.0, 1.0, 96, 12.0)).unwrap());
    let m16 = mags(soft_16());
    for k in 0..3 {
        assert!(
            m8[k] > m12[k] && m12[k] > m16[k],
            "mode {k}: {} -> {} -> {}",
            m8[k],
            m12[k],
            m16[k]
        );
    }
    assert!(m16[0] < 1e-2, "leading magnitude {}", m16[0]);
}

#[test]
fn no_gap_flag_tracks_the_threshold() {
    let hard = SpectrumSummary::new(hard_64(), 1e-2);
    assert!(!hard.no_gap);
    let soft = soft_16();
    let soft_summary = SpectrumSummary::new(soft, 1e-2);
    assert!(soft_summary.no_gap, "lambda_star = {}", soft.lambda_star);
}

#[test]
fn resolvent_norm_obeys_the_theta_bound() {
    let gen = assemble_for(-1.0, 1.0, 64, 8.0);
    let rep = spectrum(&gen).unwrap();
    let rf = RateFunctions::new(rep.sigma_max).unwrap();
    for &alpha in &[0.5, 5.0] {
        let norm = resolvent_norm(&gen, alpha).unwrap();
        let bound = rf.theta(alpha).unwrap();
        assert!(norm <= bound * (1.0 + 1e-6), "alpha = {alpha}: {norm} vs {bound}");
    }
}

#[test]
fn inverse_rate_slope_matches_the_soft_decay_exponent() {
    for &sigma_max in &[1.6, 4.0] {
        let rf = RateFunctions::new(sigma_max).unwrap();
        let f3 = rf.theta_log_inv(1e3).unwrap();
        let f6 = rf.theta_log_inv(1e6).unwrap();
        let slope = (f6 / f3).ln() / 1e3f64.ln();
        assert!(
            slope > -1.0 / 3.0 && slope < -1.0 / 4.0,
            "sigma_max = {sigma_max}: slope {slope}"
        );
    }
}
