//! Carleman form of the gain operator: explicit kernel `k_gamma(v, w)`, its
//! symmetrization `p_gamma`, angular averages, and the weighted tail
//! functionals used to probe weak compactness and dissipativity.
//!
//! All kernel quadratures are implemented for `d = 3`.

use crate::bessel::i0_scaled;
use crate::model::{self, ModelSpec, WeightSpec};
use crate::quad;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// `2^{d-1} (2 pi)^{-d/2}` for `d = 3`: prefactor of the kernel before the
/// hyperplane integral.
const PREF: f64 = 0.253974543736963896; // 4 (2 pi)^{-3/2}

/// Width parameter of the Gaussian support window used when integrating the
/// kernel over collision distances: contributions with
/// `|delta + c/delta| / 2` beyond roughly this value are dropped, a relative
/// truncation below `e^{-36}`.
const Q_BAND: f64 = 8.5;

/// The three rotation invariants that determine the kernel: `|v|`, `|w|`,
/// and `|v - w|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub v_mag: f64,
    pub w_mag: f64,
    pub dist: f64,
}

impl KernelPoint {
    /// Validated constructor: rejects the diagonal (`dist = 0`) and any
    /// triple violating the triangle constraint
    /// `||v| - |w|| <= |v - w| <= |v| + |w|`.
    pub fn new(v_mag: f64, w_mag: f64, dist: f64) -> Result<Self> {
        if !(v_mag >= 0.0) || !(w_mag >= 0.0) || !dist.is_finite() {
            return Err(Error::InfeasiblePoint { v_mag, w_mag, dist });
        }
        if dist <= 0.0 {
            return Err(Error::DiagonalSingularity);
        }
        let slack = 1e-12 * (1.0 + v_mag + w_mag);
        if dist > v_mag + w_mag + slack || dist < (v_mag - w_mag).abs() - slack {
            return Err(Error::InfeasiblePoint { v_mag, w_mag, dist });
        }
        Ok(KernelPoint { v_mag, w_mag, dist })
    }

    /// `|v|^2 - |w|^2`.
    fn c(&self) -> f64 {
        (self.v_mag - self.w_mag) * (self.v_mag + self.w_mag)
    }

    /// Gaussian argument `q = (|v-w| + (|v|^2-|w|^2)/|v-w|) / 2`, formed
    /// from the scalar invariants so that no catastrophic cancellation
    /// between `|v|^2` and `|w|^2` occurs for nearby large magnitudes.
    fn q(&self) -> f64 {
        0.5 * (self.dist + self.c() / self.dist)
    }

    /// `|V_perp|`, the component of the midpoint `(v+w)/2` orthogonal to
    /// `v - w`; the offset of the Gaussian inside the hyperplane integral.
    fn v_perp(&self) -> f64 {
        let (r, rho, d) = (self.v_mag, self.w_mag, self.dist);
        let half_c_over_d = 0.5 * self.c() / d;
        let a2 = 0.25 * (2.0 * (r * r + rho * rho) - d * d) - half_c_over_d * half_c_over_d;
        a2.max(0.0).sqrt()
    }
}

/// Hard-sphere kernel (`gamma = d - 2`), the closed form
/// `2^{d-1} (2 pi)^{-1/2} |v-w|^{-1} exp(-q^2/2)`.
pub fn kernel_hs(p: &KernelPoint, d: usize) -> f64 {
    let pref = 2f64.powi(d as i32 - 1) * (2.0 * std::f64::consts::PI).powf(-0.5);
    let q = p.q();
    pref / p.dist * (-0.5 * q * q).exp()
}

/// Hyperplane integral of the Carleman form,
/// `I_gamma(a, delta) = ∫_{R^{d-1}} e^{-|xi|^2/2} (|A - xi|^2 + delta^2)^{(gamma-d+2)/2} dxi`
/// with `|A| = a`, reduced for `d = 3` to a one-dimensional Bessel integral
/// `2 pi ∫_0^∞ x (x^2 + delta^2)^{(gamma-1)/2} e^{-(x-a)^2/2} i0_scaled(a x) dx`.
///
/// Checked evaluation: the quadrature order is doubled once and the two
/// values must agree to `rel_tol`.
pub fn i_gamma(vperp_mag: f64, dist: f64, gamma: f64, d: usize) -> Result<f64> {
    if d != 3 {
        return Err(Error::Precondition(
            "hyperplane integral quadrature is implemented for d = 3 only".into(),
        ));
    }
    if !(dist > 0.0) {
        return Err(Error::DiagonalSingularity);
    }
    if !(gamma > -3.0) || !(vperp_mag >= 0.0) {
        return Err(Error::Precondition(format!(
            "i_gamma needs gamma > -3 and vperp >= 0, got gamma = {gamma}, vperp = {vperp_mag}"
        )));
    }
    if gamma == 1.0 {
        return Ok(2.0 * std::f64::consts::PI);
    }
    let coarse = i_gamma_batch(&[vperp_mag], &[dist], gamma, 24)[0];
    let fine = i_gamma_batch(&[vperp_mag], &[dist], gamma, 48)[0];
    let defect = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if defect > 1e-8 {
        return Err(Error::QuadratureNonConvergence {
            what: format!("hyperplane integral at a = {vperp_mag}, dist = {dist}"),
            defect,
            tol: 1e-8,
        });
    }
    Ok(fine)
}

/// Radial panel layout for the Bessel form of the hyperplane integral: the
/// factor `(x^2 + delta^2)^{(gamma-1)/2}` steepens near `x = 0` when
/// `gamma < 1` and `delta` is small, so the first panels grow geometrically
/// from `1e-4`.
fn i_gamma_x_panels(a_max: f64, gamma: f64) -> Vec<f64> {
    let r_end = a_max + 13.0;
    let mut b = vec![0.0];
    if gamma < 1.0 {
        let mut t = 1e-4;
        while t < 1.0 {
            b.push(t);
            t *= 2.0;
        }
    }
    let mut t = 1.0;
    while t < r_end - 1e-9 {
        b.push(t);
        t += 1.0;
    }
    b.push(r_end);
    b
}

/// Batch evaluation of the hyperplane integral over paired `(a, delta)`
/// arrays sharing one radial grid.  `d = 3` only; no convergence check.
pub(crate) fn i_gamma_batch(a: &[f64], delta: &[f64], gamma: f64, order: usize) -> Vec<f64> {
    assert_eq!(a.len(), delta.len());
    let two_pi = 2.0 * std::f64::consts::PI;
    if gamma == 1.0 {
        return vec![two_pi; a.len()];
    }
    let a_max = a.iter().cloned().fold(0.0, f64::max);
    let (xs, ws) = quad::composite(&i_gamma_x_panels(a_max, gamma), order);
    let half_gm1 = 0.5 * (gamma - 1.0);
    a.iter()
        .zip(delta)
        .map(|(&ai, &di)| {
            let d2 = di * di;
            let s: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| {
                    let shift = x - ai;
                    w * x
                        * (x * x + d2).powf(half_gm1)
                        * (-0.5 * shift * shift).exp()
                        * i0_scaled(ai * x)
                })
                .sum();
            two_pi * s
        })
        .collect()
}

/// Reference evaluation of the hyperplane integral by direct 2-D tensor
/// quadrature in Cartesian coordinates (independent of the Bessel
/// machinery; used as a cross-check oracle).
pub fn i_gamma_direct(vperp_mag: f64, dist: f64, gamma: f64, order: usize) -> f64 {
    let a = vperp_mag;
    let mut bx: Vec<f64> = [-13.0, -8.0, -4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 13.0]
        .iter()
        .map(|&t| a + t)
        .collect();
    bx.dedup();
    let by = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 13.0];
    let (x, wx) = quad::composite(&bx, order);
    let (y, wy) = quad::composite(&by, order);
    let half_gm1 = 0.5 * (gamma - 1.0);
    let d2 = dist * dist;
    let mut total = 0.0;
    for (&xi, &wxi) in x.iter().zip(&wx) {
        let dx2 = (xi - a) * (xi - a);
        for (&yi, &wyi) in y.iter().zip(&wy) {
            total += wxi
                * wyi
                * (-0.5 * (xi * xi + yi * yi)).exp()
                * (dx2 + yi * yi + d2).powf(half_gm1);
        }
    }
    2.0 * total
}

/// Power-law kernel `k_gamma(v, w)` for the cutoff model: the hard-sphere
/// prefactor, the Gaussian in `q`, and the hyperplane integral, scaled by
/// the constant angular kernel `ell_b / |S^{d-1}|`.
pub fn kernel_gamma(p: &KernelPoint, spec: &ModelSpec) -> Result<f64> {
    spec.validate()?;
    if spec.d != 3 {
        return Err(Error::Precondition(
            "kernel quadratures are implemented for d = 3 only".into(),
        ));
    }
    let scale = spec.ell_b / model::sphere_surface(3);
    let ig = if spec.gamma == 1.0 {
        2.0 * std::f64::consts::PI
    } else {
        i_gamma(p.v_perp(), p.dist, spec.gamma, 3)?
    };
    let q = p.q();
    Ok(scale * PREF / p.dist * (-0.5 * q * q).exp() * ig)
}

/// Symmetrized kernel `p_gamma(v, w) = M^{-1/2}(v) k_gamma(v, w) M^{1/2}(w)`.
///
/// Uses the algebraically equivalent form
/// `scale * PREF * |v-w|^{-1} I_gamma * exp(-(delta^2 + c^2/delta^2)/8)`
/// whose exponent is manifestly symmetric under `v <-> w`, so the symmetry
/// holds to rounding rather than to quadrature accuracy.
pub fn p_gamma(p: &KernelPoint, spec: &ModelSpec) -> Result<f64> {
    spec.validate()?;
    if spec.d != 3 {
        return Err(Error::Precondition(
            "kernel quadratures are implemented for d = 3 only".into(),
        ));
    }
    let scale = spec.ell_b / model::sphere_surface(3);
    let ig = if spec.gamma == 1.0 {
        2.0 * std::f64::consts::PI
    } else {
        i_gamma(p.v_perp(), p.dist, spec.gamma, 3)?
    };
    let delta = p.dist;
    let c_over_d = p.c() / delta;
    Ok(scale * PREF / delta * ig * (-0.125 * (delta * delta + c_over_d * c_over_d)).exp())
}

/// Integration window in the collision distance `delta = |v - w|` outside
/// which the kernel is negligible for fixed speeds `r = |v|`, `rho = |w|`.
/// The window is symmetric in `r <-> rho`, which keeps detailed balance
/// exact at the quadrature level.
fn delta_window(r: f64, rho: f64) -> Option<(f64, f64)> {
    let c = (r - rho) * (r + rho);
    let qc = c.abs().sqrt() + Q_BAND;
    let s = (qc * qc - c).sqrt();
    let lo = (r - rho).abs().max(c.abs() / (qc + s));
    let hi = (r + rho).min(qc + s);
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

/// Panel layout inside a delta window: geometric growth from the lower
/// edge (where the kernel's `delta^{gamma-2}` singularity may sit when the
/// speeds are close), then unit panels.
fn delta_panels(lo: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![lo];
    let mut step = (0.05f64.min(0.5 * lo)).max((hi - lo) * 1e-5).max(1e-6);
    let knee = (lo + 1.0).min(hi);
    let mut t = lo + step;
    while t < knee {
        b.push(t);
        step *= 2.0;
        t += step;
    }
    let mut t = knee;
    while t < hi - 1e-12 {
        b.push(t);
        t += 1.0;
    }
    b.push(hi);
    b.dedup_by(|a, b| *a <= *b + 1e-15);
    b
}

/// Angular average of the kernel over directions,
/// `(1 / 4 pi) ∫_{S^2} k_gamma(v, w) dsigma(ŵ)` at speeds `r = |v|`,
/// `rho = |w|`, computed as a single graded quadrature in `delta`.
/// Symmetric under `r <-> rho` up to the exact detailed-balance factor.
pub fn kernel_angular_average(r: f64, rho: f64, gamma: f64, ell_b: f64, order: usize) -> f64 {
    debug_assert!(r > 0.0 && rho > 0.0);
    let Some((lo, hi)) = delta_window(r, rho) else {
        return 0.0;
    };
    let scale = ell_b / model::sphere_surface(3);
    let (ds, wds) = quad::composite(&delta_panels(lo, hi), order);
    let c = (r - rho) * (r + rho);
    let sum = if gamma == 1.0 {
        let two_pi = 2.0 * std::f64::consts::PI;
        ds.iter()
            .zip(&wds)
            .map(|(&d, &w)| {
                let q = 0.5 * (d + c / d);
                w * (-0.5 * q * q).exp() * two_pi
            })
            .sum::<f64>()
    } else {
        let mut aa = Vec::with_capacity(ds.len());
        for &d in &ds {
            let half_c_over_d = 0.5 * c / d;
            let a2 = 0.25 * (2.0 * (r * r + rho * rho) - d * d) - half_c_over_d * half_c_over_d;
            aa.push(a2.max(0.0).sqrt());
        }
        let ig = i_gamma_batch(&aa, &ds, gamma, 24);
        ds.iter()
            .zip(&wds)
            .zip(&ig)
            .map(|((&d, &w), &igv)| {
                let q = 0.5 * (d + c / d);
                w * (-0.5 * q * q).exp() * igv
            })
            .sum::<f64>()
    };
    // d mu = delta d delta / (r rho); angular measure 2 pi d mu; average by 4 pi.
    scale * PREF * sum / (2.0 * r * rho)
}

/// Quadrature configuration for the radial tail/weight functionals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelQuadConfig {
    /// Truncation radius of the velocity domain.
    pub r_max: f64,
    /// Gauss order per radial panel.
    pub order: usize,
    /// Relative agreement required when the order is doubled.
    pub rel_tol: f64,
    pub skip_check: bool,
}

impl Default for KernelQuadConfig {
    fn default() -> Self {
        KernelQuadConfig { r_max: 8.0, order: 24, rel_tol: 1e-8, skip_check: false }
    }
}

/// Radial panels on `[lo, hi]` with geometric refinement toward an interior
/// split point (where the integrand has a kink or integrable singularity).
fn split_panels(lo: f64, hi: f64, split: f64) -> Vec<f64> {
    let mut b: Vec<f64> = Vec::new();
    let mut t = lo;
    while t < hi - 1e-12 {
        b.push(t);
        t += 0.5;
    }
    b.push(hi);
    if split > lo + 1e-9 && split < hi - 1e-9 {
        for k in 0..=6 {
            let off = 1e-6 * 10f64.powi(k) * 0.4;
            if split - off > lo {
                b.push(split - off);
            }
            if split + off < hi {
                b.push(split + off);
            }
        }
        b.push(split);
    }
    b.sort_by(|a, b| a.partial_cmp(b).unwrap());
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    b
}

fn radial_column_integral(
    w_mag: f64,
    spec: &ModelSpec,
    lo: f64,
    hi: f64,
    order: usize,
    weighted: bool,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (rs, ws) = quad::composite(&split_panels(lo, hi, w_mag), order);
    let four_pi = 4.0 * std::f64::consts::PI;
    rs.iter()
        .zip(&ws)
        .map(|(&r, &w)| {
            let kappa = kernel_angular_average(r, w_mag, spec.gamma, spec.ell_b, 16);
            let minv = if weighted { model::weight_inv_radial(r, &spec.weight) } else { 1.0 };
            w * four_pi * r * r * kappa * minv
        })
        .sum()
}

/// Weighted column mass `H_gamma(w) = ∫_{|v| <= r_max} k_gamma(v, w) m^{-1}(v) dv`.
///
/// With the unit weight this reproduces the collision frequency `Sigma(w)`
/// (up to domain truncation), since integrating the kernel over its first
/// argument recovers the loss term.
pub fn h_gamma(w_mag: f64, spec: &ModelSpec, cfg: &KernelQuadConfig) -> Result<f64> {
    spec.validate()?;
    if spec.d != 3 {
        return Err(Error::Precondition(
            "kernel quadratures are implemented for d = 3 only".into(),
        ));
    }
    if !(spec.gamma > -1.0) {
        return Err(Error::Precondition(format!(
            "the column integral of the kernel diverges for gamma <= -1 (diagonal \
             singularity delta^(gamma-2) is not integrable in d = 3); got gamma = {}",
            spec.gamma
        )));
    }
    if !(w_mag > 0.0 && w_mag < cfg.r_max) {
        return Err(Error::Precondition(format!(
            "need 0 < |w| < r_max = {}, got |w| = {w_mag}",
            cfg.r_max
        )));
    }
    let coarse = radial_column_integral(w_mag, spec, 0.0, cfg.r_max, cfg.order, true);
    if cfg.skip_check {
        return Ok(coarse);
    }
    let fine = radial_column_integral(w_mag, spec, 0.0, cfg.r_max, 2 * cfg.order, true);
    let defect = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if defect > cfg.rel_tol {
        return Err(Error::QuadratureNonConvergence {
            what: format!("weighted column integral at |w| = {w_mag}"),
            defect,
            tol: cfg.rel_tol,
        });
    }
    Ok(fine)
}

/// Tail functional
/// `m(w) (1+|w|)^{-gamma} ∫_{r_tail < |v| < r_max} k_gamma(v, w) m^{-1}(v) dv`.
///
/// With a decaying weight this vanishes as the tail radius grows (the
/// weak-compactness input); with the unit weight and `|w|` above the tail
/// radius it stays bounded away from zero.
pub fn dp_tail(w_mag: f64, r_tail: f64, spec: &ModelSpec, cfg: &KernelQuadConfig) -> Result<f64> {
    spec.validate()?;
    if !(spec.gamma > -1.0) {
        return Err(Error::Precondition(
            "tail functional needs gamma > -1 (integrable diagonal)".into(),
        ));
    }
    if !(r_tail >= 0.0 && r_tail <= cfg.r_max) {
        return Err(Error::Precondition(format!(
            "tail radius must lie in [0, r_max = {}], got {r_tail}",
            cfg.r_max
        )));
    }
    if r_tail >= cfg.r_max {
        return Ok(0.0);
    }
    let integral = radial_column_integral(w_mag, spec, r_tail, cfg.r_max, cfg.order, true);
    let m_w = 1.0 / model::weight_inv_radial(w_mag, &spec.weight);
    Ok(m_w * (1.0 + w_mag).powf(-spec.gamma) * integral)
}

/// Squared symmetrized kernel integrated over the second argument,
/// `∫_{|w| <= r_max} p_gamma(v, w)^2 dw`, requiring `gamma > (d-2)/2`
/// (below that the diagonal `delta^{2(gamma-2)}` is not integrable
/// against `delta^2 d delta`).
pub fn lemma_g_integral(v_mag: f64, spec: &ModelSpec, cfg: &KernelQuadConfig) -> Result<f64> {
    spec.validate()?;
    if spec.d != 3 {
        return Err(Error::Precondition(
            "kernel quadratures are implemented for d = 3 only".into(),
        ));
    }
    let crit = (spec.d as f64 - 2.0) / 2.0;
    if !(spec.gamma > crit) {
        return Err(Error::Precondition(format!(
            "squared-kernel integral needs gamma > (d-2)/2 = {crit}, got {}",
            spec.gamma
        )));
    }
    if !(v_mag >= 0.0 && v_mag < cfg.r_max) {
        return Err(Error::Precondition(format!(
            "need 0 <= |v| < r_max = {}, got |v| = {v_mag}",
            cfg.r_max
        )));
    }
    let evaluate = |order: usize| -> f64 {
        let (rhos, ws) = quad::composite(&split_panels(0.0, cfg.r_max, v_mag), order);
        let four_pi = 4.0 * std::f64::consts::PI;
        rhos.iter()
            .zip(&ws)
            .map(|(&rho, &w)| w * four_pi * rho * rho * p_squared_angular_average(v_mag, rho, spec))
            .sum()
    };
    let coarse = evaluate(cfg.order);
    if cfg.skip_check {
        return Ok(coarse);
    }
    let fine = evaluate(2 * cfg.order);
    let defect = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if defect > cfg.rel_tol {
        return Err(Error::QuadratureNonConvergence {
            what: format!("squared-kernel integral at |v| = {v_mag}"),
            defect,
            tol: cfg.rel_tol,
        });
    }
    Ok(fine)
}

/// `(1 / 4 pi) ∫_{S^2} p_gamma(v, w)^2 dsigma` at speeds `(r, rho)`.
fn p_squared_angular_average(r: f64, rho: f64, spec: &ModelSpec) -> f64 {
    if r <= 0.0 {
        // At v = 0 the angular average is a single point: delta = rho.
        let p = KernelPoint::new(0.0, rho, rho).expect("feasible by construction");
        return p_gamma(&p, spec).expect("validated spec").powi(2);
    }
    let Some((lo, hi)) = delta_window(r, rho) else {
        return 0.0;
    };
    let scale = spec.ell_b / model::sphere_surface(3);
    let (ds, wds) = quad::composite(&delta_panels(lo, hi), 16);
    let c = (r - rho) * (r + rho);
    let mut aa = Vec::with_capacity(ds.len());
    for &d in &ds {
        let half_c_over_d = 0.5 * c / d;
        let a2 = 0.25 * (2.0 * (r * r + rho * rho) - d * d) - half_c_over_d * half_c_over_d;
        aa.push(a2.max(0.0).sqrt());
    }
    let ig = i_gamma_batch(&aa, &ds, spec.gamma, 24);
    let sum: f64 = ds
        .iter()
        .zip(&wds)
        .zip(&ig)
        .map(|((&d, &w), &igv)| {
            let c_over_d = c / d;
            let p = scale * PREF / d * igv * (-0.125 * (d * d + c_over_d * c_over_d)).exp();
            w * d * p * p
        })
        .sum();
    sum / (2.0 * r * rho)
}

/// Smallest radius `R` on a scan grid such that
/// `c0 (1 + v^{gamma - s}) - sigma0 (1 + v)^gamma <= -sigma0` holds for all
/// `v` in `(R, r_max]`, where `s` is the weight's decay exponent
/// (`s` for exponential weights, `2` for algebraic ones).  The inequality
/// makes the truncated loss part of the generator dissipative with margin
/// `sigma0` outside the ball of radius `R`.
pub fn dissipativity_radius(spec: &ModelSpec, c0: f64, sigma0: f64, r_max: f64) -> Result<f64> {
    spec.validate()?;
    if !(c0 > 0.0) || !(sigma0 > 0.0) {
        return Err(Error::Precondition(format!(
            "need c0 > 0 and sigma0 > 0, got c0 = {c0}, sigma0 = {sigma0}"
        )));
    }
    let s = match spec.weight {
        WeightSpec::Exponential { a, s } => {
            if !(a > 0.0) {
                return Err(Error::Precondition(
                    "dissipativity estimate needs a genuinely decaying weight (a > 0)".into(),
                ));
            }
            if !(spec.gamma + s > 1.0) {
                return Err(Error::Precondition(format!(
                    "dissipativity estimate needs gamma + s > 1, got gamma = {}, s = {s}",
                    spec.gamma
                )));
            }
            s
        }
        WeightSpec::Algebraic { beta } => {
            if !(beta > 0.0) {
                return Err(Error::Precondition(
                    "dissipativity estimate needs a genuinely decaying weight (beta > 0)".into(),
                ));
            }
            2.0
        }
        WeightSpec::Unit => {
            return Err(Error::Precondition(
                "dissipativity estimate needs a decaying weight".into(),
            ));
        }
    };
    let n = 4000usize;
    let margin = |v: f64| c0 * (1.0 + v.powf(spec.gamma - s)) - sigma0 * (1.0 + v).powf(spec.gamma) + sigma0;
    // Scan from the top: find the largest radius at which the inequality
    // fails; everything above is then feasible.
    let mut worst_fail: Option<(f64, f64)> = None;
    for i in (1..=n).rev() {
        let v = r_max * i as f64 / n as f64;
        let m = margin(v);
        if m > 0.0 {
            worst_fail = Some((v, m));
            break;
        }
    }
    match worst_fail {
        None => Ok(0.0),
        Some((v, m)) if v >= r_max * (1.0 - 0.5 / n as f64) => {
            Err(Error::Infeasible { r_max, margin: m, at: v })
        }
        Some((v, _)) => Ok(v),
    }
}

/// One compared pair inside a bound-verification report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundSample {
    pub input: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl BoundSample {
    pub fn new(input: f64, lhs: f64, rhs: f64) -> Self {
        BoundSample { input, lhs, rhs, ratio: lhs / rhs }
    }
}

/// Outcome of verifying one inequality over a sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub quantity: String,
    pub samples: Vec<BoundSample>,
    pub sup_ratio: f64,
    pub passed: bool,
}

impl BoundReport {
    /// Dominance check: passes iff `sup lhs/rhs <= 1 + tol`.
    pub fn dominance(quantity: impl Into<String>, samples: Vec<BoundSample>, tol: f64) -> Self {
        let sup_ratio = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
        BoundReport {
            quantity: quantity.into(),
            samples,
            sup_ratio,
            passed: sup_ratio <= 1.0 + tol,
        }
    }

    /// Limit check: passes iff the ratios decrease monotonically along the
    /// samples (a tail functional heading to zero).
    pub fn decreasing(quantity: impl Into<String>, samples: Vec<BoundSample>) -> Self {
        let sup_ratio = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
        let passed = samples.windows(2).all(|p| p[1].ratio <= p[0].ratio);
        BoundReport { quantity: quantity.into(), samples, sup_ratio, passed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs_point() -> KernelPoint {
        KernelPoint::new(1.3, 1.3, 1.0).unwrap()
    }

    #[test]
    fn hard_sphere_value_at_equal_speeds() {
        // 4 (2 pi)^{-1/2} e^{-1/8}
        let k = kernel_hs(&hs_point(), 3);
        assert!((k - 1.4082613070571979).abs() < 1e-14, "k = {k}");
    }

    #[test]
    fn triangle_violations_rejected() {
        assert!(matches!(
            KernelPoint::new(1.0, 1.0, 0.0),
            Err(Error::DiagonalSingularity)
        ));
        assert!(matches!(
            KernelPoint::new(1.0, 1.0, 2.5),
            Err(Error::InfeasiblePoint { .. })
        ));
        assert!(matches!(
            KernelPoint::new(3.0, 1.0, 1.5),
            Err(Error::InfeasiblePoint { .. })
        ));
    }

    #[test]
    fn gamma_one_matches_hard_sphere_closed_form() {
        let spec = ModelSpec::new(3, 1.0, model::sphere_surface(3), WeightSpec::Unit).unwrap();
        for (r, rho, d) in [(0.5, 0.7, 0.9), (2.0, 1.0, 1.5), (4.0, 4.0, 0.3)] {
            let p = KernelPoint::new(r, rho, d).unwrap();
            let kg = kernel_gamma(&p, &spec).unwrap();
            let kh = kernel_hs(&p, 3);
            assert!((kg / kh - 1.0).abs() < 1e-15, "{kg} vs {kh}");
        }
    }

    #[test]
    fn p_gamma_is_symmetric() {
        let spec = ModelSpec::new(3, 0.5, 1.0, WeightSpec::Unit).unwrap();
        let p1 = KernelPoint::new(2.0, 1.0, 1.5).unwrap();
        let p2 = KernelPoint::new(1.0, 2.0, 1.5).unwrap();
        let a = p_gamma(&p1, &spec).unwrap();
        let b = p_gamma(&p2, &spec).unwrap();
        assert!(((a - b) / a).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn dissipativity_hard_sphere_analytic_radius() {
        // gamma = 1, s = 1: the margin is 2 c0 - sigma0 v, zero at v = 2 c0 / sigma0.
        let spec =
            ModelSpec::new(3, 1.0, 1.0, WeightSpec::Exponential { a: 0.25, s: 1.0 }).unwrap();
        let r = dissipativity_radius(&spec, 1.2, 0.8, 16.0).unwrap();
        assert!((r - 3.0).abs() < 0.01, "R = {r}");
    }

    #[test]
    fn dissipativity_needs_decaying_weight_and_hard_gamma() {
        let unit = ModelSpec::new(3, 1.0, 1.0, WeightSpec::Unit).unwrap();
        assert!(dissipativity_radius(&unit, 1.0, 1.0, 16.0).is_err());
        let marginal =
            ModelSpec::new(3, 0.0, 1.0, WeightSpec::Exponential { a: 0.25, s: 1.0 }).unwrap();
        assert!(matches!(
            dissipativity_radius(&marginal, 1.0, 1.0, 16.0),
            Err(Error::Precondition(_))
        ));
        let gamma0 = ModelSpec::new(3, 0.0, 1.0, WeightSpec::Algebraic { beta: 2.0 }).unwrap();
        assert!(matches!(
            dissipativity_radius(&gamma0, 1.0, 1.0, 16.0),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn lemma_g_rejects_low_gamma() {
        let spec = ModelSpec::new(3, 0.4, 1.0, WeightSpec::Unit).unwrap();
        assert!(matches!(
            lemma_g_integral(1.0, &spec, &KernelQuadConfig::default()),
            Err(Error::Precondition(_))
        ));
    }
}
