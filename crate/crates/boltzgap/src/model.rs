//! Physical model: Maxwellian equilibrium, weight functions, power-law
//! cross section and the collision frequency with its polynomial bounds.

use crate::quad;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Weight `m(v)` defining the norm `‖f‖ = ∫ |f| m⁻¹ dv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Unit,
    /// `m(v) = exp(-a |v|^s)` with `a >= 0`, `0 < s <= 1`.
    Exponential { a: f64, s: f64 },
    /// `m(v) = (1 + |v|^beta)^{-1}` with `beta >= 0`.
    Algebraic { beta: f64 },
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Unit => Ok(()),
            WeightSpec::Exponential { a, s } => {
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "exponential weight needs a >= 0, got a = {a}"
                    )));
                }
                if !(s > 0.0 && s <= 1.0) {
                    return Err(Error::InvalidModel(format!(
                        "exponential weight needs 0 < s <= 1, got s = {s}"
                    )));
                }
                Ok(())
            }
            WeightSpec::Algebraic { beta } => {
                if !(beta >= 0.0) || !beta.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "algebraic weight needs beta >= 0, got beta = {beta}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Model configuration: dimension, cross-section exponent `Phi(r) = r^gamma`,
/// angular cutoff mass `ell_b`, and the norm weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub gamma: f64,
    pub ell_b: f64,
    pub weight: WeightSpec,
}

impl ModelSpec {
    /// Validated constructor.  Requires `d >= 3`, `-d < gamma <= d - 2`,
    /// `ell_b > 0`.
    pub fn new(d: usize, gamma: f64, ell_b: f64, weight: WeightSpec) -> Result<Self> {
        let spec = ModelSpec { d, gamma, ell_b, weight };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidModel(format!(
                "dimension must be >= 3, got {}",
                self.d
            )));
        }
        let d = self.d as f64;
        if !(self.gamma > -d && self.gamma <= d - 2.0) {
            return Err(Error::InvalidModel(format!(
                "gamma must lie in (-{d}, {}], got {}",
                d - 2.0,
                self.gamma
            )));
        }
        if !(self.ell_b > 0.0) || !self.ell_b.is_finite() {
            return Err(Error::InvalidModel(format!(
                "ell_b must be positive, got {}",
                self.ell_b
            )));
        }
        self.weight.validate()
    }

    /// Hard potentials have `gamma >= 0`.
    pub fn is_hard(&self) -> bool {
        self.gamma >= 0.0
    }
}

/// Polynomial envelope of the collision frequency over a grid:
/// `sigma1 (1+|v|)^gamma <= Sigma(v) <= sigma2 (1+|v|)^gamma`, together with
/// the extreme values of `Sigma` itself.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaBounds {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `inf Sigma` over the grid; the essential-spectrum abscissa is `-eta`.
    pub eta: f64,
    pub sigma_max: f64,
}

/// Quadrature configuration for the collision-frequency convolution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Gauss order per radial panel.
    pub order_u: usize,
    /// Gauss order per angular panel.
    pub order_mu: usize,
    /// Relative agreement required between the base rule and the rule with
    /// both orders doubled.
    pub rel_tol: f64,
    /// Skip the order-doubling check (used in hot loops after the
    /// configuration has been validated once).
    pub skip_check: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { order_u: 24, order_mu: 16, rel_tol: 1e-8, skip_check: false }
    }
}

/// Standard Maxwellian `(2 pi)^{-d/2} exp(-|v|^2 / 2)` in `R^d`.
pub fn maxwellian(v: &[f64]) -> f64 {
    let r2: f64 = v.iter().map(|x| x * x).sum();
    let d = v.len() as f64;
    (2.0 * std::f64::consts::PI).powf(-0.5 * d) * (-0.5 * r2).exp()
}

/// Maxwellian as a function of speed alone.
pub fn maxwellian_radial(r: f64, d: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-0.5 * d as f64) * (-0.5 * r * r).exp()
}

/// Inverse weight `m⁻¹(v) >= 1`.
pub fn weight_inv(v: &[f64], w: &WeightSpec) -> f64 {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    weight_inv_radial(r, w)
}

/// Inverse weight as a function of speed alone.
pub fn weight_inv_radial(r: f64, w: &WeightSpec) -> f64 {
    match *w {
        WeightSpec::Unit => 1.0,
        WeightSpec::Exponential { a, s } => (a * r.powf(s)).exp(),
        WeightSpec::Algebraic { beta } => 1.0 + r.powf(beta),
    }
}

/// Surface area of the unit sphere `S^{d-1}`, i.e. `2 pi^{d/2} / Gamma(d/2)`.
pub fn sphere_surface(d: usize) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * pi.powf(0.5 * d as f64) / gamma_half_integer(d)
}

/// `Gamma(n/2)` for a positive integer `n`.
fn gamma_half_integer(n: usize) -> f64 {
    assert!(n >= 1);
    if n % 2 == 0 {
        // Gamma(k) = (k-1)!
        (1..n / 2).map(|j| j as f64).product()
    } else {
        // Gamma(1/2 + k) = (2k-1)!! / 2^k * sqrt(pi)
        let k = n / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
        g
    }
}

/// Angular integral `∫_{-1}^{1} exp(-(r² + 2 r u μ + u²)/2) dμ` at each of
/// the supplied radial nodes `u`, with panels graded away from `μ = -1`
/// where the exponential peaks for `u` near `r`.
fn mu_integral(r: f64, u_nodes: &[f64], u_max: f64, order_mu: usize) -> Vec<f64> {
    let h0 = (4.0 / (1.0 + r * u_max)).min(0.5);
    let bounds = {
        let mut b = vec![-1.0];
        let mut h = h0;
        while b.last().unwrap() + h < 1.0 {
            let t = b.last().unwrap() + h;
            b.push(t);
            h *= 2.0;
        }
        b.push(1.0);
        b
    };
    let (mu, wm) = quad::composite(&bounds, order_mu);
    u_nodes
        .iter()
        .map(|&u| {
            mu.iter()
                .zip(&wm)
                .map(|(&m, &w)| w * (-0.5 * (r * r + 2.0 * r * u * m + u * u)).exp())
                .sum()
        })
        .collect()
}

/// One evaluation of the collision-frequency convolution at speed `r`,
/// at fixed quadrature orders.
///
/// In spherical coordinates centred at `v` (with `u = |v - w|`),
/// `Sigma(v) = ell_b (2 pi)^{-1/2} ∫ u^{gamma+2} du ∫ e^{-(r²+2ruμ+u²)/2} dμ`
/// for `d = 3`.  The factor `u^{gamma+2}` is integrable for `gamma > -3`
/// but singular at `u = 0` once `gamma < -2`; there the first radial panel
/// is mapped through `t = u^{gamma+3}`, under which
/// `u^{gamma+2} du = dt / (gamma+3)` and the remaining factor is smooth
/// (the angular integral is even in `u` to leading order).
fn sigma_once(r: f64, gamma: f64, ell_b: f64, order_u: usize, order_mu: usize) -> f64 {
    let u_max = r + 14.0;
    let mut bulk = vec![0.5];
    let mut t = 1.0;
    while t < u_max - 1e-9 {
        bulk.push(t);
        t += 1.0;
    }
    bulk.push(u_max);
    let (u_b, wu_b) = quad::composite(&bulk, order_u);
    let g_b = mu_integral(r, &u_b, u_max, order_mu);
    let mut val: f64 = u_b
        .iter()
        .zip(&wu_b)
        .zip(&g_b)
        .map(|((&u, &w), &g)| w * u.powf(gamma + 2.0) * g)
        .sum();

    if gamma >= -2.0 {
        let head = [0.0, 1e-3, 1e-2, 0.1, 0.5];
        let (u_0, wu_0) = quad::composite(&head, order_u);
        let g_0 = mu_integral(r, &u_0, u_max, order_mu);
        val += u_0
            .iter()
            .zip(&wu_0)
            .zip(&g_0)
            .map(|((&u, &w), &g)| w * u.powf(gamma + 2.0) * g)
            .sum::<f64>();
    } else {
        let p = gamma + 3.0;
        let t_max = 0.5f64.powf(p);
        let head: Vec<f64> = [0.0, 1e-3, 1e-2, 0.1, 1.0].iter().map(|&b| b * t_max).collect();
        let (t_0, wt_0) = quad::composite(&head, order_u);
        let u_s: Vec<f64> = t_0.iter().map(|&t| t.powf(1.0 / p)).collect();
        let g_s = mu_integral(r, &u_s, u_max, order_mu);
        val += wt_0.iter().zip(&g_s).map(|(&w, &g)| w * g).sum::<f64>() / p;
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    ell_b * two_pi.powf(-1.5) * two_pi * val
}

/// Collision frequency at speed `r`, with the order-doubling acceptance
/// check from `quad`.
pub fn collision_frequency_radial(r: f64, spec: &ModelSpec, quad_cfg: &QuadConfig) -> Result<f64> {
    if spec.d != 3 {
        return Err(Error::Precondition(
            "collision-frequency quadrature is implemented for d = 3 only".into(),
        ));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Precondition(format!("speed must be finite and >= 0, got {r}")));
    }
    let coarse = sigma_once(r, spec.gamma, spec.ell_b, quad_cfg.order_u, quad_cfg.order_mu);
    if quad_cfg.skip_check {
        return Ok(coarse);
    }
    let fine = sigma_once(r, spec.gamma, spec.ell_b, 2 * quad_cfg.order_u, 2 * quad_cfg.order_mu);
    let defect = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if defect > quad_cfg.rel_tol {
        return Err(Error::QuadratureNonConvergence {
            what: format!("collision frequency at speed {r}"),
            defect,
            tol: quad_cfg.rel_tol,
        });
    }
    Ok(fine)
}

/// Collision frequency `Sigma(v) = ell_b ∫ |v-w|^gamma M(w) dw`.  Radial
/// function of `|v|`.
pub fn collision_frequency(v: &[f64], spec: &ModelSpec, quad_cfg: &QuadConfig) -> Result<f64> {
    if v.len() != spec.d {
        return Err(Error::Precondition(format!(
            "velocity has {} components, model has d = {}",
            v.len(),
            spec.d
        )));
    }
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    collision_frequency_radial(r, spec, quad_cfg)
}

/// Grid estimates of the envelope constants in
/// `sigma1 (1+|v|)^gamma <= Sigma(v) <= sigma2 (1+|v|)^gamma` together with
/// `inf Sigma` and `sup Sigma` over the same nodes.
pub fn sigma_bounds(spec: &ModelSpec, radii: &[f64], quad_cfg: &QuadConfig) -> Result<SigmaBounds> {
    if radii.is_empty() {
        return Err(Error::Precondition("sigma_bounds needs a non-empty grid".into()));
    }
    let mut sigma1 = f64::INFINITY;
    let mut sigma2 = f64::NEG_INFINITY;
    let mut eta = f64::INFINITY;
    let mut sigma_max = f64::NEG_INFINITY;
    for &r in radii {
        let s = collision_frequency_radial(r, spec, quad_cfg)?;
        let ratio = s / (1.0 + r).powf(spec.gamma);
        sigma1 = sigma1.min(ratio);
        sigma2 = sigma2.max(ratio);
        eta = eta.min(s);
        sigma_max = sigma_max.max(s);
    }
    Ok(SigmaBounds { sigma1, sigma2, eta, sigma_max })
}

/// Weighted L¹ norm of an isotropic grid function:
/// `Σ_i w_i |f_i| m⁻¹(r_i)` where the grid weights `w_i` already carry the
/// volume element `|S^{d-1}| r^{d-1} dr`.
pub fn weighted_l1_norm(f: &[f64], radii: &[f64], weights: &[f64], w: &WeightSpec) -> f64 {
    assert_eq!(f.len(), radii.len());
    assert_eq!(f.len(), weights.len());
    f.iter()
        .zip(radii)
        .zip(weights)
        .map(|((&fi, &ri), &wi)| wi * fi.abs() * weight_inv_radial(ri, w))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_mode_value() {
        let got = maxwellian(&[0.0, 0.0, 0.0]);
        assert!((got - 0.06349363593424097).abs() < 1e-15);
    }

    #[test]
    fn sphere_surface_small_dimensions() {
        let pi = std::f64::consts::PI;
        assert!((sphere_surface(2) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_surface(3) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_surface(4) - 2.0 * pi * pi).abs() < 1e-13);
    }

    #[test]
    fn gamma_zero_gives_ell_b() {
        let spec = ModelSpec::new(3, 0.0, 1.25, WeightSpec::Unit).unwrap();
        let s = collision_frequency_radial(2.0, &spec, &QuadConfig::default()).unwrap();
        assert!((s - 1.25).abs() < 1e-12, "Sigma = {s}");
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ModelSpec::new(2, 1.0, 1.0, WeightSpec::Unit).is_err());
        assert!(ModelSpec::new(3, -3.0, 1.0, WeightSpec::Unit).is_err());
        assert!(ModelSpec::new(3, 1.5, 1.0, WeightSpec::Unit).is_err());
        assert!(ModelSpec::new(3, 1.0, 0.0, WeightSpec::Unit).is_err());
        assert!(ModelSpec::new(3, 1.0, 1.0, WeightSpec::Exponential { a: 1.0, s: 1.5 }).is_err());
    }
}
