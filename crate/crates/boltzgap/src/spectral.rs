//! Spectra of the discretized generator, the algebraic rate functions
//! controlling soft-potential decay, and weighted resolvent norms on the
//! imaginary axis.

use crate::discretize::{assemble_hilbert, GeneratorMatrix, HilbertMatrix};
use crate::model::{self};
use crate::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Absolute band around the origin inside which an eigenvalue is counted
/// as the conserved-mass zero mode.
pub const ZERO_TOL: f64 = 1e-6;

/// Spectrum of the generator together with the quantities the decay
/// estimates are phrased in.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// All eigenvalues, sorted by decreasing real part.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Spectral gap: minus the largest nonzero real part.
    pub lambda_star: f64,
    /// Smallest collision frequency over the grid.
    pub eta: f64,
    /// Largest collision frequency over the grid.
    pub sigma_max: f64,
    /// Gap of the symmetrized form, computed independently of the Schur
    /// factorization.
    pub mu2: f64,
    /// Stationary mode, normalized to unit quadrature mass.
    pub zero_mode: Vec<f64>,
    /// Relative generator residual of the stationary mode in the grid's
    /// L¹ norm.
    pub zero_mode_residual: f64,
}

fn zero_mode_inverse_iteration(gen: &GeneratorMatrix, sigma_max: f64) -> Result<Vec<f64>> {
    let n = gen.n();
    let mut shifted = gen.generator();
    let tau = 1e-10 * sigma_max;
    for i in 0..n {
        shifted[(i, i)] -= tau;
    }
    let lu = shifted.lu();
    let mut x = DVector::from_vec(gen.grid.maxwellian());
    for _ in 0..3 {
        x = lu.solve(&x).ok_or_else(|| {
            Error::DiscretizationInconsistent(
                "inverse iteration for the stationary mode hit a singular shift".into(),
            )
        })?;
        let scale = x.amax();
        x /= scale;
    }
    let mass: f64 = gen.grid.weights.iter().zip(x.iter()).map(|(&w, &v)| w * v).sum();
    if mass.abs() < 1e-300 {
        return Err(Error::DiscretizationInconsistent(
            "stationary mode has vanishing quadrature mass".into(),
        ));
    }
    Ok(x.iter().map(|&v| v / mass).collect())
}

/// Compute the full spectrum, identify the conserved-mass zero mode, and
/// report the gap.  Exactly one eigenvalue may sit within [`ZERO_TOL`] of
/// the origin; anything else means the grid cannot separate the conserved
/// mode from the rest of the spectrum.
pub fn spectrum(gen: &GeneratorMatrix) -> Result<SpectrumReport> {
    let l = gen.generator();
    let sigma_max = gen.sigma.iter().cloned().fold(f64::MIN, f64::max);
    let eta = gen.sigma.iter().cloned().fold(f64::MAX, f64::min);
    let mut eigenvalues: Vec<Complex<f64>> = l.complex_eigenvalues().iter().cloned().collect();
    eigenvalues.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    let zeros = eigenvalues.iter().filter(|z| z.norm() <= ZERO_TOL).count();
    if zeros != 1 {
        return Err(Error::DegenerateZero { count: zeros, tol: ZERO_TOL });
    }
    let lambda_star = eigenvalues
        .iter()
        .filter(|z| z.norm() > ZERO_TOL)
        .map(|z| -z.re)
        .fold(f64::MAX, f64::min);

    let hil = assemble_hilbert(gen)?;
    let mu2 = hilbert_gap(&hil)?;

    let zero_mode = zero_mode_inverse_iteration(gen, sigma_max)?;
    let lz = gen.apply(&zero_mode);
    let num: f64 = gen.grid.weights.iter().zip(&lz).map(|(&w, &v)| w * v.abs()).sum();
    let den: f64 = gen.grid.weights.iter().zip(&zero_mode).map(|(&w, &v)| w * v.abs()).sum();
    let zero_mode_residual = num / den;

    Ok(SpectrumReport {
        eigenvalues,
        lambda_star,
        eta,
        sigma_max,
        mu2,
        zero_mode,
        zero_mode_residual,
    })
}

/// Eigenvalues of the symmetrized generator, sorted decreasing.
pub fn hilbert_spectrum(hil: &HilbertMatrix) -> Vec<f64> {
    let sym = hil.matrix.clone().symmetric_eigen();
    let mut vals: Vec<f64> = sym.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Gap of the symmetrized generator: minus its second-largest eigenvalue.
/// The largest must vanish within [`ZERO_TOL`] and the second must be
/// strictly negative.
pub fn hilbert_gap(hil: &HilbertMatrix) -> Result<f64> {
    let vals = hilbert_spectrum(hil);
    let zeros = vals.iter().filter(|v| v.abs() <= ZERO_TOL).count();
    if vals[0].abs() > ZERO_TOL || zeros != 1 || vals[1] >= 0.0 {
        return Err(Error::DegenerateZero { count: zeros, tol: ZERO_TOL });
    }
    Ok(-vals[1])
}

/// The scale `Sigma_max` entering the resolvent and decay rate functions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFunctions {
    pub sigma_max: f64,
}

impl RateFunctions {
    pub fn new(sigma_max: f64) -> Result<Self> {
        if !(sigma_max > 0.0) {
            return Err(Error::Precondition(format!(
                "rate functions need sigma_max > 0, got {sigma_max}"
            )));
        }
        Ok(RateFunctions { sigma_max })
    }

    /// Resolvent-scale rate function
    /// `theta(r) = (1/r) / (1 - sigma_max / sqrt(r^2 + sigma_max^2))`.
    ///
    /// Behaves like `2 sigma_max^2 / r^3` for small `r` and like `1/r` for
    /// large `r`.
    pub fn theta(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Precondition(format!("theta needs r > 0, got {r}")));
        }
        let s = self.sigma_max;
        let root = (r * r + s * s).sqrt();
        // 1 - s/root loses digits for r << s; rewrite through the conjugate.
        let denom = r * r / (root * (root + s));
        Ok(1.0 / (r * denom))
    }

    /// Logarithmically corrected rate scale `theta(r) * log(1 + theta(r)/r)`.
    pub fn theta_log(&self, r: f64) -> Result<f64> {
        let th = self.theta(r)?;
        Ok(th * (th / r).ln_1p())
    }

    /// Inverse of [`RateFunctions::theta_log`] in `r`, by bisection on the
    /// monotone branch.  Values outside the attained range over `r` in
    /// `[1e-12, 1e12]` are rejected with a range error.
    pub fn theta_log_inv(&self, y: f64) -> Result<f64> {
        let mut lo = 1e-12_f64;
        let mut hi = 1e12_f64;
        let top = self.theta_log(lo)?;
        let bottom = self.theta_log(hi)?;
        if !(y <= top) || !(y >= bottom) {
            return Err(Error::RangeError { value: y, lo: bottom, hi: top });
        }
        for _ in 0..200 {
            let mid = (0.5 * (lo.ln() + hi.ln())).exp();
            if self.theta_log(mid)? >= y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        Ok((0.5 * (lo.ln() + hi.ln())).exp())
    }
}

/// Operator norm of the resolvent `(i alpha - L)^{-1}` on the weighted
/// grid space with norm `sum_i w_i m^{-1}(r_i) |f_i|`, where `m^{-1}` is
/// the model's weight function.  `alpha` must be nonzero: at the origin
/// the conserved mode makes the resolvent singular.
pub fn resolvent_norm(gen: &GeneratorMatrix, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::SingularResolvent(alpha));
    }
    let n = gen.n();
    let l = gen.generator();
    let mut a = DMatrix::<Complex<f64>>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] = Complex::new(-l[(i, j)], 0.0);
        }
    }
    for i in 0..n {
        a[(i, i)] += Complex::new(0.0, alpha);
    }
    let inv = a.lu().try_inverse().ok_or(Error::SingularResolvent(alpha))?;
    let winv: Vec<f64> = gen
        .grid
        .nodes
        .iter()
        .map(|&r| model::weight_inv_radial(r, &gen.spec.weight))
        .collect();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += gen.grid.weights[i] * winv[i] * inv[(i, j)].norm();
        }
        worst = worst.max(col / (gen.grid.weights[j] * winv[j]));
    }
    Ok(worst)
}
