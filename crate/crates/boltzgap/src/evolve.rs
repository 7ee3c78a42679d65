//! Time evolution under the discretized generator: a fourth-order explicit
//! integrator, a positivity- and mass-preserving exponential scheme, decay
//! rate extraction, envelope checks against the algebraic rate functions,
//! and iterated-Duhamel partial sums for the semigroup.

use crate::discretize::{assemble_hilbert, GeneratorMatrix, RadialGrid};
use crate::model;
use crate::spectral::RateFunctions;
use crate::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Relative mass drift that aborts a trajectory.
pub const MASS_TOL: f64 = 1e-6;
/// Relative negativity tolerated before a positivity violation is raised.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Absolute floor below which norm samples are considered rounding noise.
pub const NORM_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMethod {
    /// Classical fourth-order Runge-Kutta on `f' = L f`.
    Rk4,
    /// First-order exponential scheme `f <- e^{-Sigma dt} f + K_h(phi f)`
    /// with `phi = (1 - e^{-Sigma dt}) / Sigma`.  Preserves positivity and
    /// conserves quadrature mass exactly.
    ExponentialEuler,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub t_final: f64,
    /// Step size; `None` picks `0.1 / max Sigma`.
    pub dt: Option<f64>,
    pub method: TimeMethod,
    /// Keep every k-th step in the trajectory (the initial and final states
    /// are always kept).
    pub store_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            t_final: 1.0,
            dt: None,
            method: TimeMethod::ExponentialEuler,
            store_every: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Weighted L¹ distance to the equilibrium projection of the initial
    /// mass, per stored time.
    pub norms: Vec<f64>,
    /// Quadrature mass per stored time.
    pub mass: Vec<f64>,
    pub method: TimeMethod,
}

/// Integrate `f' = L f` from nonnegative initial data.
///
/// Both schemes abort on mass drift beyond [`MASS_TOL`] or on state
/// components below `-`[`POSITIVITY_TOL`]` * max |f|`.  The explicit
/// scheme additionally requires `dt * max Sigma <= 0.5`.
pub fn evolve(gen: &GeneratorMatrix, f0: &[f64], cfg: &EvolveConfig) -> Result<Trajectory> {
    let n = gen.n();
    if f0.len() != n {
        return Err(Error::Precondition(format!(
            "initial data has {} values for {} nodes",
            f0.len(),
            n
        )));
    }
    if f0.iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("initial data must be nonnegative".into()));
    }
    if !(cfg.t_final > 0.0) {
        return Err(Error::Precondition(format!("t_final must be positive, got {}", cfg.t_final)));
    }
    if cfg.store_every == 0 {
        return Err(Error::Precondition("store_every must be at least 1".into()));
    }
    let sigma_max = gen.sigma.iter().cloned().fold(f64::MIN, f64::max);
    let dt_raw = cfg.dt.unwrap_or(0.1 / sigma_max);
    if !(dt_raw > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt_raw}")));
    }
    let steps = (cfg.t_final / dt_raw).ceil().max(1.0) as usize;
    let dt = cfg.t_final / steps as f64;
    if cfg.method == TimeMethod::Rk4 && dt * sigma_max > 0.5 + 1e-12 {
        return Err(Error::Precondition(format!(
            "explicit step dt * max Sigma = {:.3} exceeds 0.5; decrease dt",
            dt * sigma_max
        )));
    }

    let w = &gen.grid.weights;
    let proj0 = equilibrium_projection(&gen.grid, f0);
    let norm_of = |f: &[f64]| -> f64 {
        let dev: Vec<f64> = f.iter().zip(&proj0).map(|(a, b)| a - b).collect();
        model::weighted_l1_norm(&dev, &gen.grid.nodes, w, &gen.spec.weight)
    };
    let mass0: f64 = w.iter().zip(f0).map(|(&wi, &v)| wi * v).sum();
    let mass_scale = mass0.abs().max(w.iter().zip(f0).map(|(&wi, &v)| wi * v.abs()).sum());

    let exp_tables = if cfg.method == TimeMethod::ExponentialEuler {
        let e: Vec<f64> = gen.sigma.iter().map(|&s| (-s * dt).exp()).collect();
        let phi: Vec<f64> = gen.sigma.iter().map(|&s| (-(-s * dt).exp_m1()) / s).collect();
        Some((e, phi))
    } else {
        None
    };

    let mut f: Vec<f64> = f0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![f.clone()];
    let mut norms = vec![norm_of(&f)];
    let mut mass = vec![mass0];
    let mut scratch = vec![0.0; n];

    for step in 1..=steps {
        match cfg.method {
            TimeMethod::Rk4 => {
                let k1 = gen.apply(&f);
                for i in 0..n {
                    scratch[i] = f[i] + 0.5 * dt * k1[i];
                }
                let k2 = gen.apply(&scratch);
                for i in 0..n {
                    scratch[i] = f[i] + 0.5 * dt * k2[i];
                }
                let k3 = gen.apply(&scratch);
                for i in 0..n {
                    scratch[i] = f[i] + dt * k3[i];
                }
                let k4 = gen.apply(&scratch);
                for i in 0..n {
                    f[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            TimeMethod::ExponentialEuler => {
                let (e, phi) = exp_tables.as_ref().unwrap();
                for i in 0..n {
                    scratch[i] = phi[i] * f[i];
                }
                let gained = &gen.gain * DVector::from_column_slice(&scratch);
                for i in 0..n {
                    f[i] = e[i] * f[i] + gained[i];
                }
            }
        }
        let t = step as f64 * dt;
        let m: f64 = w.iter().zip(&f).map(|(&wi, &v)| wi * v).sum();
        let drift = (m - mass0).abs() / mass_scale.max(f64::MIN_POSITIVE);
        if drift > MASS_TOL {
            return Err(Error::MassDrift { drift, tol: MASS_TOL });
        }
        let min = f.iter().cloned().fold(f64::MAX, f64::min);
        let scale = f.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs()));
        if min < -POSITIVITY_TOL * scale {
            return Err(Error::PositivityViolation { t, min, tol: POSITIVITY_TOL * scale });
        }
        if step % cfg.store_every == 0 || step == steps {
            times.push(t);
            states.push(f.clone());
            norms.push(norm_of(&f));
            mass.push(m);
        }
    }
    Ok(Trajectory { times, states, norms, mass, method: cfg.method })
}

/// Projection of a grid function onto the conserved equilibrium direction,
/// normalized so the projection carries exactly the quadrature mass of `f`.
pub fn equilibrium_projection(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let m = grid.maxwellian();
    let w = &grid.weights;
    let rho: f64 = w.iter().zip(f).map(|(&wi, &v)| wi * v).sum();
    let mmass: f64 = w.iter().zip(&m).map(|(&wi, &v)| wi * v).sum();
    m.iter().map(|&mi| rho * mi / mmass).collect()
}

/// Initial data of the form `rho0 M + L g`: mass exactly `rho0`, deviation
/// lying in the range of the generator.  `damp` scales the deviation part;
/// it is reduced automatically (and reported in the result) if needed to
/// keep the data nonnegative.
pub fn certified_data(gen: &GeneratorMatrix, g: &[f64], rho0: f64, damp: f64) -> Result<Vec<f64>> {
    if g.len() != gen.n() {
        return Err(Error::Precondition(format!(
            "source term has {} values for {} nodes",
            g.len(),
            gen.n()
        )));
    }
    if !(rho0 > 0.0) {
        return Err(Error::Precondition(format!("rho0 must be positive, got {rho0}")));
    }
    let lg = gen.apply(g);
    let m = gen.grid.maxwellian();
    let w = &gen.grid.weights;
    let mmass: f64 = w.iter().zip(&m).map(|(&wi, &v)| wi * v).sum();
    let base: Vec<f64> = m.iter().map(|&mi| rho0 * mi / mmass).collect();
    let mut s = damp;
    for _ in 0..60 {
        if base.iter().zip(&lg).all(|(&b, &l)| b + s * l >= 0.0) {
            return Ok(base.iter().zip(&lg).map(|(&b, &l)| b + s * l).collect());
        }
        s *= 0.5;
    }
    Err(Error::Precondition(
        "deviation term cannot be damped into nonnegativity; choose a milder source".into(),
    ))
}

/// Exponential least-squares fit `norm(t) ~ prefactor * e^{-rate t}` over a
/// time window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    /// Largest relative deviation of the samples from the fitted
    /// exponential over the window.
    pub residual: f64,
}

/// Fit a decay rate to the trajectory's norm samples inside `window` by
/// least squares on the logarithm.  Windows reaching the rounding floor of
/// the norm ([`NORM_FLOOR`]) are rejected.
pub fn fit_decay(traj: &Trajectory, window: (f64, f64)) -> Result<DecayFit> {
    let (t_lo, t_hi) = window;
    if !(t_lo < t_hi) {
        return Err(Error::WindowError(format!("empty window [{t_lo}, {t_hi}]")));
    }
    let pairs: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.norms)
        .filter(|&(&t, _)| t >= t_lo && t <= t_hi)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::WindowError(format!(
            "window [{t_lo}, {t_hi}] holds {} samples, need at least 3",
            pairs.len()
        )));
    }
    if pairs.iter().any(|&(_, v)| !(v > NORM_FLOOR)) {
        return Err(Error::WindowError(
            "norm samples reach the rounding floor; shrink the fit window".into(),
        ));
    }
    let n = pairs.len() as f64;
    let st: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1.ln()).sum();
    let stt: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sty: f64 = pairs.iter().map(|p| p.0 * p.1.ln()).sum();
    let slope = (n * sty - st * sy) / (n * stt - st * st);
    let intercept = (sy - slope * st) / n;
    let mut worst = 0.0_f64;
    for &(t, v) in &pairs {
        let fitted = (slope * t + intercept).exp();
        worst = worst.max((v / fitted - 1.0).abs());
    }
    Ok(DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        window,
        residual: worst,
    })
}

/// Ratio of trajectory norms to the algebraic decay envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub c: f64,
    /// Times in the tail window the check ran over.
    pub times: Vec<f64>,
    /// Envelope values `theta_log_inv(c t)` at those times.
    pub envelope: Vec<f64>,
    /// Ratios `norm(t) / envelope(t)`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Largest ratio over the leading quarter of the tail window.
    pub head_max: f64,
    /// Largest ratio over the trailing quarter of the tail window.
    pub tail_max: f64,
    /// Whether the ratio stays bounded: trailing quarter at most twice the
    /// leading quarter.
    pub bounded: bool,
}

/// Compare trajectory norms against the envelope `theta_log_inv(c t)` over
/// the tail of the run (times past a tenth of the final time).  The decay
/// statement carries no constant, so the check is for boundedness of the
/// ratio, not for a particular value.
pub fn envelope_check(
    traj: &Trajectory,
    rf: &RateFunctions,
    c: f64,
) -> Result<EnvelopeReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Precondition(format!("envelope constant must lie in (0, 1), got {c}")));
    }
    let t_final = *traj.times.last().ok_or_else(|| {
        Error::WindowError("trajectory holds no samples".into())
    })?;
    let t_start = 0.1 * t_final;
    let mut times = Vec::new();
    let mut envelope = Vec::new();
    let mut ratios = Vec::new();
    for (&t, &v) in traj.times.iter().zip(&traj.norms) {
        if t < t_start || t <= 0.0 {
            continue;
        }
        let env = rf.theta_log_inv(c * t)?;
        times.push(t);
        envelope.push(env);
        ratios.push(v / env);
    }
    if times.len() < 8 {
        return Err(Error::WindowError(format!(
            "tail window holds {} samples, need at least 8",
            times.len()
        )));
    }
    let k = (times.len() + 3) / 4;
    let head_max = ratios[..k].iter().cloned().fold(0.0_f64, f64::max);
    let tail_max = ratios[ratios.len() - k..].iter().cloned().fold(0.0_f64, f64::max);
    let max_ratio = ratios.iter().cloned().fold(0.0_f64, f64::max);
    let bounded = tail_max <= 2.0 * head_max || tail_max < 1e-300;
    Ok(EnvelopeReport { c, times, envelope, ratios, max_ratio, head_max, tail_max, bounded })
}

/// Apply the exact semigroup `e^{tL}` through the eigendecomposition of the
/// symmetrized form.
pub fn expm_action(gen: &GeneratorMatrix, f: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = gen.n();
    if f.len() != n {
        return Err(Error::Precondition(format!(
            "state has {} values for {} nodes",
            f.len(),
            n
        )));
    }
    let hil = assemble_hilbert(gen)?;
    let sym = hil.matrix.symmetric_eigen();
    let m = gen.grid.maxwellian();
    let w = &gen.grid.weights;
    let d: Vec<f64> = m.iter().zip(w).map(|(&mi, &wi)| (mi / wi).sqrt()).collect();
    let mut y = DVector::zeros(n);
    for i in 0..n {
        y[i] = f[i] / d[i];
    }
    let coeff = sym.eigenvectors.transpose() * y;
    let mut z = DVector::zeros(n);
    for k in 0..n {
        z[k] = coeff[k] * (t * sym.eigenvalues[k]).exp();
    }
    let back = &sym.eigenvectors * z;
    Ok((0..n).map(|i| back[i] * d[i]).collect())
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for k in 0..n {
        for l in 0..n {
            if l != k {
                w[k] /= nodes[k] - nodes[l];
            }
        }
    }
    w
}

fn lagrange_coeffs(nodes: &[f64], bw: &[f64], s: f64, scale: f64) -> Vec<f64> {
    let n = nodes.len();
    for k in 0..n {
        if (s - nodes[k]).abs() < 1e-14 * scale {
            let mut c = vec![0.0; n];
            c[k] = 1.0;
            return c;
        }
    }
    let mut c = vec![0.0; n];
    let mut denom = 0.0;
    for k in 0..n {
        let term = bw[k] / (s - nodes[k]);
        c[k] = term;
        denom += term;
    }
    for ck in &mut c {
        *ck /= denom;
    }
    c
}

/// Partial sums of the iterated Duhamel expansion of the semigroup at time
/// `t`: the free flow `e^{-Sigma t} f0` plus successively higher gain
/// iterates.  Returns the sums for orders `0..=terms`.
pub fn dyson_phillips(
    gen: &GeneratorMatrix,
    f0: &[f64],
    t: f64,
    terms: usize,
    n_quad: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = gen.n();
    if f0.len() != n {
        return Err(Error::Precondition(format!(
            "initial data has {} values for {} nodes",
            f0.len(),
            n
        )));
    }
    if t < 0.0 {
        return Err(Error::Precondition(format!("time must be nonnegative, got {t}")));
    }
    if n_quad < 4 {
        return Err(Error::Precondition(format!(
            "Duhamel quadrature needs at least 4 nodes, got {n_quad}"
        )));
    }
    if t == 0.0 {
        return Ok(vec![f0.to_vec(); terms + 1]);
    }
    let rule = crate::quad::gauss_legendre(n_quad);
    let (ref xs, ref ws) = *rule;
    let tau: Vec<f64> = xs.iter().map(|&x| 0.5 * t * (x + 1.0)).collect();
    let bw = barycentric_weights(&tau);

    let free = |target: f64| -> Vec<f64> {
        gen.sigma.iter().zip(f0).map(|(&s, &v)| (-s * target).exp() * v).collect()
    };

    let mut g_nodes: Vec<Vec<f64>> = tau.iter().map(|&tk| free(tk)).collect();
    let mut sum = free(t);
    let mut out = vec![sum.clone()];

    for _ in 1..=terms {
        let kg: Vec<DVector<f64>> = g_nodes
            .iter()
            .map(|g| &gen.gain * DVector::from_column_slice(g))
            .collect();
        let eval_kg = |s: f64| -> Vec<f64> {
            let c = lagrange_coeffs(&tau, &bw, s, t);
            let mut v = vec![0.0; n];
            for (k, &ck) in c.iter().enumerate() {
                if ck != 0.0 {
                    for i in 0..n {
                        v[i] += ck * kg[k][i];
                    }
                }
            }
            v
        };
        let duhamel = |target: f64| -> Vec<f64> {
            let mut acc = vec![0.0; n];
            let half = 0.5 * target;
            for (&x, &wq) in xs.iter().zip(ws) {
                let s = half * (x + 1.0);
                let kgs = eval_kg(s);
                for i in 0..n {
                    acc[i] += wq * half * (-gen.sigma[i] * (target - s)).exp() * kgs[i];
                }
            }
            acc
        };
        let new_nodes: Vec<Vec<f64>> = tau.iter().map(|&tk| duhamel(tk)).collect();
        let new_at_t = duhamel(t);
        for i in 0..n {
            sum[i] += new_at_t[i];
        }
        out.push(sum.clone());
        g_nodes = new_nodes;
    }
    Ok(out)
}
