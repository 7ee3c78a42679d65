//! Nyström discretization of the generator on the isotropic sector:
//! radial quadrature grids, the dense gain matrix, the symmetrized
//! (Hilbert-space) matrix, and an independent scattering-angle oracle for
//! the gain term.

use crate::carleman;
use crate::model::{self, ModelSpec, QuadConfig};
use crate::quad;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radial quadrature grid on `(0, r_max]`.  The weights include the
/// surface factor `|S^{d-1}| r^{d-1}`, so `sum_i w_i f(r_i)` approximates
/// the full velocity-space integral of an isotropic function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_angle: usize,
    pub d: usize,
    pub r_max: f64,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature mass `sum_i w_i f_i`.
    pub fn mass(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(&w, &v)| w * v).sum()
    }

    /// Maxwellian sampled at the nodes.
    pub fn maxwellian(&self) -> Vec<f64> {
        self.nodes.iter().map(|&r| model::maxwellian_radial(r, self.d)).collect()
    }
}

/// Panel boundaries of the radial grid: fixed graded panels through the
/// bulk of the Maxwellian, then unit panels out to `r_max`.
fn grid_panel_bounds(r_max: f64) -> Vec<f64> {
    let base = [
        0.0, 0.125, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0,
    ];
    let mut b: Vec<f64> = base.iter().copied().filter(|&x| x <= r_max + 1e-12).collect();
    let mut t = *b.last().unwrap();
    while t < r_max - 1e-9 {
        t += 1.0;
        b.push(t.min(r_max));
    }
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    b
}

/// Composite Gauss-Legendre grid with `n_radial` total nodes distributed
/// over the graded panels, weights carrying the `|S^{d-1}| r^{d-1}` factor.
///
/// Fails if fewer than 8 nodes are requested or if the resulting rule does
/// not integrate the Maxwellian to unit mass within `1e-8`.
pub fn build_grid(n_radial: usize, n_angle: usize, r_max: f64, d: usize) -> Result<RadialGrid> {
    if n_radial < 8 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 8 radial nodes, got {n_radial}"
        )));
    }
    if n_angle < 8 {
        return Err(Error::GridTooCoarse(format!(
            "need angular order >= 8, got {n_angle}"
        )));
    }
    if !(r_max > 0.0) {
        return Err(Error::Precondition(format!("r_max must be positive, got {r_max}")));
    }
    if d != 3 {
        return Err(Error::Precondition("radial grids are implemented for d = 3 only".into()));
    }
    let bounds = grid_panel_bounds(r_max);
    let npan = bounds.len() - 1;
    let base_order = (n_radial / npan).max(2);
    let mut orders = vec![base_order; npan];
    let mut remainder = n_radial.saturating_sub(base_order * npan);
    // Hand surplus nodes to the widest panels first.
    let mut widths: Vec<(usize, f64)> =
        bounds.windows(2).enumerate().map(|(k, p)| (k, p[1] - p[0])).collect();
    widths.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut wi = 0;
    while remainder > 0 {
        orders[widths[wi % npan].0] += 1;
        remainder -= 1;
        wi += 1;
    }
    let mut nodes = Vec::with_capacity(n_radial);
    let mut weights = Vec::with_capacity(n_radial);
    let surface = model::sphere_surface(d);
    for (k, p) in bounds.windows(2).enumerate() {
        let rule = quad::gauss_legendre(orders[k]);
        let (ref xs, ref ws) = *rule;
        let c = 0.5 * (p[0] + p[1]);
        let h = 0.5 * (p[1] - p[0]);
        for (x, w) in xs.iter().zip(ws) {
            let r = c + h * x;
            nodes.push(r);
            weights.push(surface * r * r * h * w);
        }
    }
    let grid = RadialGrid { nodes, weights, n_angle, d, r_max };
    let mass = grid.mass(&grid.maxwellian());
    let tol = 1e-8;
    if (mass - 1.0).abs() > tol {
        return Err(Error::GridTooCoarse(format!(
            "Maxwellian quadrature mass is {mass:.12e}, off unity beyond {tol:.1e}"
        )));
    }
    Ok(grid)
}

/// Angular average of the kernel at a pair of speeds, with an
/// order-doubling acceptance check on the distance quadrature.
pub fn reduced_kernel(r: f64, r_prime: f64, spec: &ModelSpec, n_angle: usize) -> Result<f64> {
    spec.validate()?;
    if spec.d != 3 {
        return Err(Error::Precondition("kernel quadratures are implemented for d = 3 only".into()));
    }
    if !(r > 0.0) || !(r_prime > 0.0) {
        return Err(Error::Precondition(format!(
            "reduced kernel needs positive speeds, got ({r}, {r_prime})"
        )));
    }
    let coarse = carleman::kernel_angular_average(r, r_prime, spec.gamma, spec.ell_b, n_angle);
    let fine = carleman::kernel_angular_average(r, r_prime, spec.gamma, spec.ell_b, 2 * n_angle);
    let defect = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if defect > 1e-8 && fine.abs() > 1e-300 {
        return Err(Error::QuadratureNonConvergence {
            what: format!("angular kernel average at ({r}, {r_prime})"),
            defect,
            tol: 1e-8,
        });
    }
    Ok(fine)
}

/// Normalization mode of the assembled gain matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Plain Nyström matrix (with the equilibrium-restoring diagonal).
    Raw,
    /// Each column rescaled so the discrete column identity
    /// `sum_i w_i kappa(r_i, r_j) = Sigma(r_j)` holds exactly.
    ColumnStochastic,
}

/// Dense discretization of the generator `L = K - Sigma` on a radial grid.
///
/// `gain[(i, j)]` already contains the quadrature weight `w_j`, so the gain
/// term acts on a grid function by plain matrix multiplication and
/// `L = gain - diag(sigma)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    pub gain: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub grid: RadialGrid,
    pub spec: ModelSpec,
    pub normalization: Normalization,
    /// Per-column rescale factors applied in column-stochastic mode
    /// (`None` in raw mode).
    pub rescale: Option<Vec<f64>>,
    /// Equilibrium-restoring diagonal added to the angular-average matrix:
    /// the defect of the row identity `sum_j kappa_ij w_j M_j = Sigma_i M_i`
    /// divided by `w_i M_i`.
    pub diagonal_correction: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    /// Dense generator `L = gain - diag(sigma)`.
    pub fn generator(&self) -> DMatrix<f64> {
        let mut l = self.gain.clone();
        for i in 0..self.n() {
            l[(i, i)] -= self.sigma[i];
        }
        l
    }

    /// Apply the generator to a grid function.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = self.gain.row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * f[j];
            }
            out[i] = acc - self.sigma[i] * f[i];
        }
        out
    }

    /// Relative equilibrium residual `‖L M_h‖ / ‖M_h‖` in the grid's
    /// weighted L¹ norm (unit weight).
    pub fn equilibrium_residual(&self) -> f64 {
        let m = self.grid.maxwellian();
        let lm = self.apply(&m);
        let num: f64 = self.grid.weights.iter().zip(&lm).map(|(&w, &v)| w * v.abs()).sum();
        let den: f64 = self.grid.mass(&m);
        num / den
    }

    /// Largest relative defect of discrete mass conservation over columns:
    /// `max_j |sum_i w_i L_ij| / Sigma_j`.
    pub fn mass_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += self.grid.weights[i] * self.gain[(i, j)];
            }
            col -= self.grid.weights[j] * self.sigma[j];
            worst = worst.max(col.abs() / (self.grid.weights[j] * self.sigma[j]));
        }
        worst
    }
}

/// Assemble the dense gain matrix and collision-frequency vector.
///
/// The angular-average matrix alone cannot satisfy the discrete equilibrium
/// identity: the kernel has a kink (or integrable singularity) across the
/// diagonal `r = r'`, which fixed-panel radial quadrature resolves only to
/// a few digits.  The assembly therefore adds to each diagonal entry the
/// defect of the row identity `sum_j kappa_ij w_j M_j = Sigma_i M_i`.  By
/// detailed balance the same correction makes the column identity, discrete
/// mass conservation, and the equilibrium null vector exact simultaneously
/// (to rounding).  The correction is a quadrature-consistent `O(h^p)` term;
/// it must stay nonnegative, else assembly reports an inconsistency.
pub fn assemble(
    grid: &RadialGrid,
    spec: &ModelSpec,
    normalization: Normalization,
) -> Result<GeneratorMatrix> {
    spec.validate()?;
    if spec.d != 3 || grid.d != 3 {
        return Err(Error::Precondition("assembly is implemented for d = 3 only".into()));
    }
    let n = grid.len();
    let radii = &grid.nodes;
    let quad_cfg = QuadConfig::default();
    let sigma: Vec<f64> = radii
        .par_iter()
        .map(|&r| model::collision_frequency_radial(r, spec, &quad_cfg))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<f64>> = radii
        .par_iter()
        .map(|&ri| {
            radii
                .iter()
                .map(|&rj| carleman::kernel_angular_average(ri, rj, spec.gamma, spec.ell_b, grid.n_angle))
                .collect()
        })
        .collect();
    let mut kappa = DMatrix::from_fn(n, n, |i, j| rows[i][j]);

    let m = grid.maxwellian();
    let mut diagonal_correction = Vec::with_capacity(n);
    for i in 0..n {
        let target = sigma[i] * m[i];
        let mut row_mass = 0.0;
        for j in 0..n {
            row_mass += kappa[(i, j)] * grid.weights[j] * m[j];
        }
        let defect = (target - row_mass) / (grid.weights[i] * m[i]);
        let corrected = kappa[(i, i)] + defect;
        if corrected < -1e-12 * kappa[(i, i)].abs().max(sigma[i]) {
            return Err(Error::DiscretizationInconsistent(format!(
                "equilibrium correction {defect:.3e} at node {i} (r = {:.4}) would drive \
                 the gain diagonal negative",
                radii[i]
            )));
        }
        kappa[(i, i)] = corrected.max(0.0);
        diagonal_correction.push(defect);
    }

    let mut rescale = None;
    if normalization == Normalization::ColumnStochastic {
        let mut factors = Vec::with_capacity(n);
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += grid.weights[i] * kappa[(i, j)];
            }
            let s = sigma[j] / col;
            if !(0.9..=1.1).contains(&s) {
                return Err(Error::DiscretizationInconsistent(format!(
                    "column rescale factor {s:.6} at node {j} outside [0.9, 1.1]"
                )));
            }
            factors.push(s);
        }
        for j in 0..n {
            for i in 0..n {
                kappa[(i, j)] *= factors[j];
            }
        }
        rescale = Some(factors);
    }

    let mut gain = kappa;
    for j in 0..n {
        for i in 0..n {
            gain[(i, j)] *= grid.weights[j];
        }
    }

    Ok(GeneratorMatrix {
        gain,
        sigma,
        grid: grid.clone(),
        spec: *spec,
        normalization,
        rescale,
        diagonal_correction,
    })
}

/// Symmetrized generator and its pre-symmetrization asymmetry.
#[derive(Debug, Clone)]
pub struct HilbertMatrix {
    pub matrix: DMatrix<f64>,
    /// Largest absolute entry mismatch `|S_ij - S_ji|` relative to the
    /// largest entry magnitude, before averaging with the transpose.
    pub asymmetry: f64,
}

/// Similarity transform of the generator into the Hilbert-space picture:
/// `S = D^{-1} L D` with `D = diag(sqrt(M_i / w_i))`, which carries the
/// detailed-balance symmetry `kappa_ij M_j = kappa_ji M_i` into matrix
/// symmetry.  The result is symmetrized explicitly; the asymmetry beforehand
/// must be below `1e-6`.
pub fn assemble_hilbert(gen: &GeneratorMatrix) -> Result<HilbertMatrix> {
    let n = gen.n();
    let m = gen.grid.maxwellian();
    let w = &gen.grid.weights;
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // gain already carries w_j; move to the sqrt(w_i w_j) scaling.
            let val = gen.gain[(i, j)] * (w[i] / w[j]).sqrt() * (m[j] / m[i]).sqrt();
            s[(i, j)] = val;
        }
        s[(i, i)] -= gen.sigma[i];
    }
    let mut max_entry: f64 = 0.0;
    let mut max_asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            max_entry = max_entry.max(s[(i, j)].abs());
            if j > i {
                max_asym = max_asym.max((s[(i, j)] - s[(j, i)]).abs());
            }
        }
    }
    let asymmetry = max_asym / max_entry.max(f64::MIN_POSITIVE);
    if asymmetry > 1e-6 {
        return Err(Error::DiscretizationInconsistent(format!(
            "Hilbert-form asymmetry {asymmetry:.3e} exceeds 1e-6; detailed balance is \
             broken at the quadrature level"
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(HilbertMatrix { matrix: s, asymmetry })
}

/// Natural cubic spline through `(x_i, y_i)` with clamped-to-constant
/// extrapolation handled by the caller.
pub(crate) struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    y2: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3);
        let mut y2 = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
            let p = sig * y2[i - 1] + 2.0;
            y2[i] = (sig - 1.0) / p;
            let d =
                (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
            u[i] = (6.0 * d / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
        }
        for i in (1..n - 1).rev() {
            y2[i] = y2[i] * y2[i + 1] + u[i];
        }
        CubicSpline { x, y, y2 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] > t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let h = self.x[hi] - self.x[lo];
        let a = (self.x[hi] - t) / h;
        let b = (t - self.x[lo]) / h;
        a * self.y[lo]
            + b * self.y[hi]
            + ((a * a * a - a) * self.y2[lo] + (b * b * b - b) * self.y2[hi]) * h * h / 6.0
    }
}

/// Quadrature configuration for the scattering-angle form of the gain term.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaFormConfig {
    pub order_u: usize,
    pub order_mu: usize,
    pub order_c: usize,
    pub rel_tol: f64,
    pub skip_check: bool,
}

impl Default for SigmaFormConfig {
    fn default() -> Self {
        SigmaFormConfig { order_u: 20, order_mu: 12, order_c: 12, rel_tol: 1e-6, skip_check: true }
    }
}

fn graded_from(edge: f64, toward: f64, h0: f64) -> Vec<f64> {
    // Panel bounds from `edge` to `toward` with geometrically growing steps.
    let sign = if toward > edge { 1.0 } else { -1.0 };
    let mut b = vec![edge];
    let mut h = h0;
    loop {
        let t = b.last().unwrap() + sign * h;
        if (toward - t) * sign <= 0.0 {
            break;
        }
        b.push(t);
        h *= 2.0;
    }
    b.push(toward);
    if sign < 0.0 {
        b.reverse();
    }
    b
}

fn sigma_form_once(
    f: &[f64],
    grid: &RadialGrid,
    v_mag: f64,
    spec: &ModelSpec,
    order_u: usize,
    order_mu: usize,
    order_c: usize,
) -> f64 {
    let mw: Vec<f64> = grid.maxwellian();
    let ratio: Vec<f64> = f.iter().zip(&mw).map(|(&fi, &mi)| fi / mi).collect();
    let mut xs = Vec::with_capacity(grid.len() + 1);
    let mut ys = Vec::with_capacity(grid.len() + 1);
    xs.push(0.0);
    ys.push(ratio[0]);
    xs.extend_from_slice(&grid.nodes);
    ys.extend_from_slice(&ratio);
    let spline = CubicSpline::natural(xs, ys);
    let tail = *ratio.last().unwrap();
    let r_last = *grid.nodes.last().unwrap();
    let f_eval = move |r: f64| -> f64 {
        let q = if r <= r_last { spline.eval(r) } else { tail };
        q * model::maxwellian_radial(r, 3)
    };

    let r = v_mag;
    let u_max = r + 12.0;
    let mut bu = vec![0.0, 1e-2, 0.1, 0.5];
    let mut t = 1.0;
    while t < u_max - 1e-9 {
        bu.push(t);
        t += 1.0;
    }
    bu.push(u_max);
    let (us, wus) = quad::composite(&bu, order_u);
    let h0 = (4.0 / (1.0 + r * u_max)).min(0.5);
    let (mus, wmus) = quad::composite(&graded_from(-1.0, 1.0, h0), order_mu);
    let (cs, wcs) = quad::composite(&graded_from(1.0, -1.0, h0), order_c);

    let b0 = spec.ell_b / (4.0 * std::f64::consts::PI);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    for (&u, &wu) in us.iter().zip(&wus) {
        let fu = wu * u.powf(spec.gamma + 2.0);
        for (&mu, &wmu) in mus.iter().zip(&wmus) {
            let v2 = r * r + r * u * mu + 0.25 * u * u;
            let v_half = v2.max(0.0).sqrt();
            let w_tot = v2 + 0.25 * u * u;
            let mut inner = 0.0;
            for (&c, &wc) in cs.iter().zip(&wcs) {
                let p2 = (w_tot + u * v_half * c).max(0.0);
                let q2 = (w_tot - u * v_half * c).max(0.0);
                inner += wc * f_eval(p2.sqrt()) * model::maxwellian_radial(q2.sqrt(), 3);
            }
            total += fu * wmu * inner;
        }
    }
    b0 * two_pi * two_pi * total
}

/// Gain term evaluated from the scattering-angle representation
/// `Kf(v) = b0 ∫ du ∫ dσ |u|^gamma f(v') M(v_*')` with the pre-collisional
/// velocities expressed through `(|u|, cos(v,u), cos(u,σ))`.  Completely
/// independent of the Carleman kernel machinery; `f` is interpolated from
/// its node values (cubic in `f/M`, Maxwellian-proportional beyond the last
/// node).
pub fn gain_sigma_form(
    f: &[f64],
    grid: &RadialGrid,
    v_mag: f64,
    spec: &ModelSpec,
    cfg: &SigmaFormConfig,
) -> Result<f64> {
    spec.validate()?;
    if f.len() != grid.len() {
        return Err(Error::Precondition(format!(
            "grid function has {} values for {} nodes",
            f.len(),
            grid.len()
        )));
    }
    if !(v_mag >= 0.0) {
        return Err(Error::Precondition(format!("speed must be >= 0, got {v_mag}")));
    }
    let coarse = sigma_form_once(f, grid, v_mag, spec, cfg.order_u, cfg.order_mu, cfg.order_c);
    if cfg.skip_check {
        return Ok(coarse);
    }
    let fine = sigma_form_once(
        f,
        grid,
        v_mag,
        spec,
        2 * cfg.order_u,
        2 * cfg.order_mu,
        2 * cfg.order_c,
    );
    let defect = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if defect > cfg.rel_tol {
        return Err(Error::QuadratureNonConvergence {
            what: format!("scattering-angle gain at speed {v_mag}"),
            defect,
            tol: cfg.rel_tol,
        });
    }
    Ok(fine)
}
