use boltzgap::discretize::{assemble, build_grid, GeneratorMatrix, Normalization};
use boltzgap::evolve::{
    dyson_phillips, envelope_check, equilibrium_projection, evolve, EvolveConfig, TimeMethod,
};
use boltzgap::model::{ModelSpec, WeightSpec};
use boltzgap::spectral::RateFunctions;
use boltzgap::Error;
use std::sync::OnceLock;

fn shared_gen() -> &'static GeneratorMatrix {
    static G: OnceLock<GeneratorMatrix> = OnceLock::new();
    G.get_or_init(|| {
        let spec = ModelSpec::new(3, 1.0, 1.0, WeightSpec::Unit).unwrap();
        let grid = build_grid(64, 16, 8.0, 3).unwrap();
        assemble(&grid, &spec, Normalization::ColumnStochastic).unwrap()
    })
}

fn bump(gen: &GeneratorMatrix) -> Vec<f64> {
    gen.grid
        .maxwellian()
        .iter()
        .zip(&gen.grid.nodes)
        .map(|(&m, &r)| m * (1.0 + 0.2 * (r * r - 3.0)).max(0.0))
        .collect()
}

#[test]
fn default_run_keeps_mass_and_positivity() {
    let gen = shared_gen();
    let f0 = bump(gen);
    let traj = evolve(gen, &f0, &EvolveConfig { t_final: 2.0, ..Default::default() }).unwrap();
    assert!(matches!(traj.method, TimeMethod::ExponentialEuler));
    let m0 = traj.mass[0];
    for &m in &traj.mass {
        assert!((m / m0 - 1.0).abs() < 1e-8);
    }
    for state in &traj.states {
        assert!(state.iter().all(|&x| x >= 0.0));
    }
    assert!(*traj.times.last().unwrap() > 2.0 - 1e-12);
}

#[test]
fn norms_decrease_after_the_transient() {
    let gen = shared_gen();
    let f0 = bump(gen);
    let cfg = EvolveConfig {
        t_final: 6.0,
        dt: Some(0.02),
        method: TimeMethod::Rk4,
        store_every: 25,
    };
    let traj = evolve(gen, &f0, &cfg).unwrap();
    let norms = &traj.norms;
    assert!(norms.len() > 8);
    for w in norms[2..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} -> {}", w[0], w[1]);
    }
    assert!(norms.last().unwrap() / norms[2] < 1e-2);
}

#[test]
fn composition_matches_a_single_run() {
    let gen = shared_gen();
    let f0 = bump(gen);
    let leg = |f: &[f64], t: f64, dt: f64| -> Vec<f64> {
        let cfg = EvolveConfig {
            t_final: t,
            dt: Some(dt),
            method: TimeMethod::Rk4,
            store_every: usize::MAX,
        };
        evolve(gen, f, &cfg).unwrap().states.last().unwrap().clone()
    };
    let direct = leg(&f0, 1.1, 0.03);
    let composed = {
        let half = leg(&f0, 0.55, 0.03);
        leg(&half, 0.55, 0.03)
    };
    let refined = leg(&f0, 1.1, 0.015);
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        gen.grid
            .weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * (x - y).abs())
            .sum()
    };
    let tol = dist(&direct, &refined).max(1e-14);
    assert!(
        dist(&direct, &composed) <= 10.0 * tol,
        "composition defect {} vs tolerance {}",
        dist(&direct, &composed),
        tol
    );
}

#[test]
fn hard_sphere_envelope_ratio_collapses() {
    let gen = shared_gen();
    let f0 = bump(gen);
    let cfg = EvolveConfig {
        t_final: 30.0,
        dt: Some(0.05),
        method: TimeMethod::Rk4,
        store_every: 40,
    };
    let traj = evolve(gen, &f0, &cfg).unwrap();
    let rf = RateFunctions::new(gen.sigma.iter().cloned().fold(0.0, f64::max)).unwrap();
    let report = envelope_check(&traj, &rf, 0.5).unwrap();
    assert!(report.bounded);
    assert!(report.tail_max < 1e-6 * report.head_max.max(1e-300));
}

#[test]
fn tampered_generator_trips_the_mass_guard() {
    let mut gen = shared_gen().clone();
    let n = gen.n();
    for i in 0..n {
        gen.gain[(i, n / 2)] *= 1.05;
    }
    let f0 = bump(&gen);
    let cfg = EvolveConfig {
        t_final: 5.0,
        dt: Some(0.02),
        method: TimeMethod::Rk4,
        store_every: 10,
    };
    assert!(matches!(evolve(&gen, &f0, &cfg), Err(Error::MassDrift { .. })));
}

#[test]
fn duhamel_order_zero_is_free_flow() {
    let gen = shared_gen();
    let f0 = bump(gen);
    let t = 0.02;
    let sums = dyson_phillips(gen, &f0, t, 4, 12).unwrap();
    for (i, (&s, &f)) in sums[0].iter().zip(&f0).enumerate() {
        let free = f * (-gen.sigma[i] * t).exp();
        assert!((s - free).abs() <= 1e-13 * free.abs().max(1e-300), "component {i}");
    }
    for pair in sums.windows(2) {
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            assert!(*b >= a - 1e-12 * a.abs().max(1e-300));
        }
    }
    let frozen = dyson_phillips(gen, &f0, 0.0, 3, 12).unwrap();
    for s in &frozen {
        assert_eq!(s, &f0);
    }
}

#[test]
fn projection_preserves_mass_exactly() {
    let gen = shared_gen();
    let f0 = bump(gen);
    let proj = equilibrium_projection(&gen.grid, &f0);
    let mass = |f: &[f64]| gen.grid.mass(f);
    assert!((mass(&proj) / mass(&f0) - 1.0).abs() < 1e-12);
    let m = gen.grid.maxwellian();
    let pm = equilibrium_projection(&gen.grid, &m);
    for (a, b) in pm.iter().zip(&m) {
        assert!((a - b).abs() < 1e-14);
    }
}
