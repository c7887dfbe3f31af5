//! Dimensionless positive mass functions M(x) and the coordinate map
//! u(x) = integral of sqrt(M) from 0 to x.
//!
//! Units follow the convention hbar = 2 m0 = 1, so M(x) is the dimensionless
//! factor in m(x) = m0 M(x). The lower limit of the coordinate map is fixed
//! at x = 0: any other choice shifts u by a constant that the realization
//! constant c absorbs.
//!
//! The built-in deformed profile is M(x) = (1 + q/(1+x^2))^2 with q >= 0,
//! for which u(x) = x + q arctan(x) in closed form and M -> 1 as |x| -> inf.

use crate::error::{CoreError, Result};
use crate::grid::GridFunction;

/// Relative tolerance for the monotone bisection in `inverse_coordinate_map`.
const INVERSE_MAP_TOL: f64 = 1e-14;

/// A positive mass function with two derivatives and its coordinate map.
#[derive(Debug, Clone, PartialEq)]
pub enum MassProfile {
    /// M(x) = 1, u(x) = x.
    Constant,
    /// M(x) = (1 + q/(1+x^2))^2, q >= 0; u(x) = x + q arctan(x).
    RationalDeformed { q: f64 },
    /// Uniformly sampled profile with cubic-interpolated evaluation.
    Custom(SampledProfile),
}

/// Uniform samples of a custom mass function.
///
/// Evaluation uses the local cubic through the four samples surrounding the
/// query point (stencil clamped at the edges). Derivatives interpolate the
/// centered-difference sample arrays, so the oracle path stays independent
/// of any closed form. The coordinate map integrates sqrt(M) by adaptive
/// Simpson quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    x0: f64,
    h: f64,
    m: Vec<f64>,
    mp: Vec<f64>,
    mpp: Vec<f64>,
    quad_tol: f64,
}

/// Mass data sampled on a shared grid: M, M', M'' and u.
#[derive(Debug, Clone)]
pub struct MassGrids {
    pub m: GridFunction,
    pub mp: GridFunction,
    pub mpp: GridFunction,
    pub u: GridFunction,
}

impl MassProfile {
    pub fn constant() -> Self {
        MassProfile::Constant
    }

    pub fn rational_deformed(q: f64) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "deformation parameter q = {q} must be finite and >= 0"
            )));
        }
        Ok(MassProfile::RationalDeformed { q })
    }

    /// Build a custom profile from uniform samples; default quadrature
    /// tolerance 1e-10 absolute.
    pub fn from_samples(x0: f64, h: f64, samples: Vec<f64>) -> Result<Self> {
        SampledProfile::new(x0, h, samples, 1e-10).map(MassProfile::Custom)
    }

    /// M(x), M'(x), M''(x).
    ///
    /// Exact analytic derivatives for the built-in kinds; interpolated
    /// centered differences for sampled profiles.
    pub fn mass_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        match self {
            MassProfile::Constant => Ok((1.0, 0.0, 0.0)),
            MassProfile::RationalDeformed { q } => {
                let w = 1.0 + x * x;
                let s = 1.0 + q / w;
                let sp = -2.0 * q * x / (w * w);
                let spp = -2.0 * q * (w - 4.0 * x * x) / (w * w * w);
                Ok((s * s, 2.0 * s * sp, 2.0 * (sp * sp + s * spp)))
            }
            MassProfile::Custom(p) => p.mass_at(x),
        }
    }

    /// sqrt(M(x)), computed without squaring-then-rooting for the built-ins.
    pub fn sqrt_mass_at(&self, x: f64) -> Result<f64> {
        match self {
            MassProfile::Constant => Ok(1.0),
            MassProfile::RationalDeformed { q } => Ok(1.0 + q / (1.0 + x * x)),
            MassProfile::Custom(p) => {
                let (m, _, _) = p.mass_at(x)?;
                Ok(m.sqrt())
            }
        }
    }

    /// u(x) = integral of sqrt(M(t)) dt from 0 to x.
    pub fn coordinate_map(&self, x: f64) -> Result<f64> {
        match self {
            MassProfile::Constant => Ok(x),
            MassProfile::RationalDeformed { q } => Ok(x + q * x.atan()),
            MassProfile::Custom(p) => p.coordinate_map(x),
        }
    }

    /// Inverse of the coordinate map by monotone bisection.
    pub fn inverse_coordinate_map(&self, u: f64) -> Result<f64> {
        match self {
            MassProfile::Constant => Ok(u),
            MassProfile::RationalDeformed { q } => {
                let half_span = q * std::f64::consts::FRAC_PI_2 + 1.0;
                bisect_monotone(|x| self.coordinate_map(x), u, u - half_span, u + half_span)
            }
            MassProfile::Custom(p) => {
                let lo = p.x0;
                let hi = p.x_end();
                let (ulo, uhi) = (p.coordinate_map(lo)?, p.coordinate_map(hi)?);
                if u < ulo || u > uhi {
                    return Err(CoreError::OutOfDomain { x: u, lo: ulo, hi: uhi });
                }
                bisect_monotone(|x| self.coordinate_map(x), u, lo, hi)
            }
        }
    }

    /// Vectorized `mass_at`/`coordinate_map` over a uniform grid.
    ///
    /// All four outputs share (x0, h, n). The first failing node aborts with
    /// the underlying error.
    pub fn sample_on_grid(&self, x0: f64, h: f64, n: usize) -> Result<MassGrids> {
        if n < 3 {
            return Err(CoreError::InvalidGrid(format!("n = {n} < 3")));
        }
        if !(h > 0.0) {
            return Err(CoreError::InvalidGrid(format!("h = {h} must be positive")));
        }
        let mut m = Vec::with_capacity(n);
        let mut mp = Vec::with_capacity(n);
        let mut mpp = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            let x = x0 + i as f64 * h;
            let (mi, mpi, mppi) = self.mass_at(x)?;
            m.push(mi);
            mp.push(mpi);
            mpp.push(mppi);
            u.push(self.coordinate_map(x)?);
        }
        Ok(MassGrids {
            m: GridFunction::new(x0, h, m)?,
            mp: GridFunction::new(x0, h, mp)?,
            mpp: GridFunction::new(x0, h, mpp)?,
            u: GridFunction::new(x0, h, u)?,
        })
    }
}

impl SampledProfile {
    fn new(x0: f64, h: f64, samples: Vec<f64>, quad_tol: f64) -> Result<Self> {
        if samples.len() < 4 {
            return Err(CoreError::InvalidParameter(format!(
                "sampled profile needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        if !(h > 0.0) || !h.is_finite() || !x0.is_finite() {
            return Err(CoreError::InvalidParameter(
                "sampled profile needs finite x0 and positive h".into(),
            ));
        }
        for (i, &v) in samples.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::NonPositiveMass {
                    x: x0 + i as f64 * h,
                    mass: v,
                });
            }
        }
        let n = samples.len();
        // centered differences, one-sided at the ends (order h^2 throughout)
        let mut mp = vec![0.0; n];
        let mut mpp = vec![0.0; n];
        mp[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * h);
        mp[n - 1] = (3.0 * samples[n - 1] - 4.0 * samples[n - 2] + samples[n - 3]) / (2.0 * h);
        mpp[0] = (2.0 * samples[0] - 5.0 * samples[1] + 4.0 * samples[2] - samples[3]) / (h * h);
        mpp[n - 1] = (2.0 * samples[n - 1] - 5.0 * samples[n - 2] + 4.0 * samples[n - 3]
            - samples[n - 4])
            / (h * h);
        for i in 1..n - 1 {
            mp[i] = (samples[i + 1] - samples[i - 1]) / (2.0 * h);
            mpp[i] = (samples[i + 1] - 2.0 * samples[i] + samples[i - 1]) / (h * h);
        }
        Ok(Self {
            x0,
            h,
            m: samples,
            mp,
            mpp,
            quad_tol,
        })
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + (self.m.len() - 1) as f64 * self.h
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let hi = self.x_end();
        // tolerate endpoint rounding
        let slack = 1e-12 * (1.0 + x.abs());
        if x < self.x0 - slack || x > hi + slack {
            return Err(CoreError::OutOfDomain {
                x,
                lo: self.x0,
                hi,
            });
        }
        Ok(())
    }

    /// Local cubic through the four samples around x.
    fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let n = values.len();
        let t = (x - self.x0) / self.h;
        // base index of the 4-point stencil [i0, i0+3]
        let i0 = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let s = t - i0 as f64; // position within the stencil, in units of h
        let mut acc = 0.0;
        for (j, &vj) in values[i0..i0 + 4].iter().enumerate() {
            let mut lj = 1.0;
            for l in 0..4 {
                if l != j {
                    lj *= (s - l as f64) / (j as f64 - l as f64);
                }
            }
            acc += lj * vj;
        }
        acc
    }

    fn mass_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(x)?;
        let m = self.interpolate(&self.m, x);
        if m <= 0.0 {
            return Err(CoreError::NonPositiveMass { x, mass: m });
        }
        Ok((m, self.interpolate(&self.mp, x), self.interpolate(&self.mpp, x)))
    }

    fn coordinate_map(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        self.check_domain(0.0).map_err(|_| {
            CoreError::OutOfDomain {
                x: 0.0,
                lo: self.x0,
                hi: self.x_end(),
            }
        })?;
        let sqrt_m = |t: f64| -> Result<f64> {
            let (m, _, _) = self.mass_at(t)?;
            Ok(m.sqrt())
        };
        if x >= 0.0 {
            adaptive_simpson(&sqrt_m, 0.0, x, self.quad_tol)
        } else {
            Ok(-adaptive_simpson(&sqrt_m, x, 0.0, self.quad_tol)?)
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if depth > 48 {
        return Err(CoreError::QuadratureFailure { a, b, tol });
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = (left + right - whole) / 15.0;
    if err.abs() <= tol {
        return Ok(left + right + err);
    }
    let lv = simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let rv = simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(lv + rv)
}

/// Bisection for g(x) = target with g strictly increasing on [lo, hi].
fn bisect_monotone<F>(g: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let glo = g(lo)?;
    let ghi = g(hi)?;
    if !(glo <= target && target <= ghi) {
        return Err(CoreError::InvalidParameter(format!(
            "bisection bracket [{lo}, {hi}] does not contain target {target}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= INVERSE_MAP_TOL * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
