//! Independent finite-difference oracle for the modified Schrodinger
//! equation H = -d/dx (1/M) d/dx + V_eff with Dirichlet boundaries.
//!
//! The kinetic term uses the flux-conservative stencil with analytic
//! half-point masses,
//!
//! ```text
//! (H psi)_i = -[ (psi_{i+1} - psi_i)/M_{i+1/2}
//!              - (psi_i - psi_{i-1})/M_{i-1/2} ] / h^2  +  V_i psi_i,
//! ```
//!
//! which keeps the matrix symmetric tridiagonal with strictly negative
//! off-diagonal entries for M > 0. Eigenvalues come from Sturm-sequence
//! bisection, eigenvectors from inverse iteration with partial pivoting;
//! both are deterministic.
//!
//! `verify_spectrum` assembles V_eff from the algebra module, solves at h
//! and h/2, Richardson-extrapolates (the stencil is second order), and
//! compares against the analytic tower E_n = -(k - n - 1/2)^2, including
//! eigenvector overlaps with the closed-form states where those exist.

use crate::algebra::{AlgebraRealization, RealizationClass, Sign};
use crate::error::{CoreError, Result};
use crate::grid::GridFunction;
use crate::mass_profile::MassProfile;
use crate::wavefunctions::chain_member;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Depth of the wall-side cut, in u-units past the potential minimum, used
/// for the exponentially walled omega = 0 domains. By u_min - 8 the ground
/// state has decayed like exp(-k e^8), far below machine precision, while
/// the potential stays small enough not to poison the matrix scale.
const EXP_WALL_DEPTH: f64 = 8.0;

/// Symmetric tridiagonal discretization of H on a uniform grid, Dirichlet at
/// both ends (boundary rows eliminated).
#[derive(Debug, Clone)]
pub struct DiscretizedHamiltonian {
    x0: f64,
    h: f64,
    n: usize, // full grid size including the two boundary nodes
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

/// Analytic-vs-numeric comparison of the lowest part of the spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// E_n = -(k - n - 1/2)^2 for the requested levels.
    pub analytic: Vec<f64>,
    /// Eigenvalues at the base resolution h.
    pub numeric_h: Vec<f64>,
    /// Eigenvalues at h/2 (refined run only).
    pub numeric_h2: Option<Vec<f64>>,
    /// Second-order Richardson extrapolation of the two runs.
    pub extrapolated: Option<Vec<f64>>,
    /// |best numeric - analytic| per level, where "best" is the
    /// extrapolation when available.
    pub level_errors: Vec<f64>,
    /// Overlap |<psi_numeric, psi_closed_form>| per level, for n <= 2 where
    /// the closed form exists and is normalizable.
    pub overlaps: Vec<Option<f64>>,
    /// Numeric eigenvectors at the base resolution.
    pub eigenvectors: Vec<GridFunction>,
    /// Base grid metadata.
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl SpectrumReport {
    /// Largest |numeric - analytic| across the requested levels.
    pub fn max_level_error(&self) -> f64 {
        self.level_errors.iter().fold(0.0f64, |m, e| m.max(*e))
    }
}

/// Build the tridiagonal matrix from interior V_eff samples and the mass
/// profile; masses at half points are evaluated analytically.
pub fn discretize(
    veff: &GridFunction,
    mass: &MassProfile,
) -> Result<DiscretizedHamiltonian> {
    let n = veff.len();
    let h = veff.spacing();
    let x0 = veff.x0();
    let m_half = |x: f64| -> Result<f64> {
        let (m, _, _) = mass.mass_at(x)?;
        if m <= 0.0 {
            return Err(CoreError::NonPositiveMass { x, mass: m });
        }
        Ok(m)
    };
    let interior = n - 2;
    let mut diag = Vec::with_capacity(interior);
    let mut offdiag = Vec::with_capacity(interior - 1);
    let h2 = h * h;
    for i in 1..n - 1 {
        let x = x0 + i as f64 * h;
        let ml = m_half(x - 0.5 * h)?;
        let mr = m_half(x + 0.5 * h)?;
        diag.push((1.0 / ml + 1.0 / mr) / h2 + veff.values()[i]);
        if i < n - 2 {
            offdiag.push(-1.0 / (h2 * mr));
        }
    }
    Ok(DiscretizedHamiltonian {
        x0,
        h,
        n,
        diag,
        offdiag,
    })
}

impl DiscretizedHamiltonian {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Full grid size including the two Dirichlet boundary nodes.
    pub fn grid_len(&self) -> usize {
        self.n
    }

    /// Dimension of the interior (eliminated) system.
    pub fn interior_len(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// y = H v on interior vectors.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        assert_eq!(v.len(), m);
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                acc += self.offdiag[i] * v[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence count).
    fn count_below(&self, lambda: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = 1.0f64;
        for i in 0..self.diag.len() {
            let esq = if i == 0 {
                0.0
            } else {
                self.offdiag[i - 1] * self.offdiag[i - 1]
            };
            q = (self.diag[i] - lambda) - if i == 0 { 0.0 } else { esq / q };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `count` smallest eigenvalues with L2-normalized, sign-fixed
    /// eigenvectors on the full grid (zeros at the Dirichlet nodes).
    ///
    /// Bisection runs to machine-level interval width, so results are
    /// deterministic; inverse iteration uses a fixed-seed start vector.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<Vec<(f64, GridFunction)>> {
        let m = self.diag.len();
        if count > m {
            return Err(CoreError::InvalidParameter(format!(
                "requested {count} eigenpairs from a dimension-{m} interior system"
            )));
        }
        // Gershgorin enclosure
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = (if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 })
                + (if i + 1 < m { self.offdiag[i].abs() } else { 0.0 });
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let mut pairs = Vec::with_capacity(count);
        let mut prev: Vec<Vec<f64>> = Vec::new();
        for idx in 0..count {
            let lambda = self.bisect_eigenvalue(idx, lo, hi);
            let vec = self.inverse_iteration(lambda, idx, &prev)?;
            prev.push(vec.clone());
            pairs.push((lambda, self.embed_eigenvector(vec)));
        }
        Ok(pairs)
    }

    /// Bisection for the idx-th (0-based, ascending) eigenvalue.
    fn bisect_eigenvalue(&self, idx: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
            let width = hi - lo;
            if width <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration on (T - lambda I) with partial pivoting. Previously
    /// converged eigenvectors are projected out each sweep so clustered
    /// eigenvalues stay orthogonal.
    fn inverse_iteration(
        &self,
        lambda: f64,
        idx: usize,
        prev: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        let m = self.diag.len();
        let norm_t = self
            .diag
            .iter()
            .map(|d| d.abs())
            .fold(0.0f64, f64::max)
            .max(self.offdiag.iter().map(|e| e.abs()).fold(0.0f64, f64::max));
        let factor = lu_tridiagonal(&self.diag, &self.offdiag, lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(0x7d3_57a7e ^ idx as u64);
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut v);
        for _ in 0..16 {
            let mut w = factor.solve(&v);
            for p in prev {
                let dot: f64 = w.iter().zip(p).map(|(a, b)| a * b).sum();
                for (wi, pi) in w.iter_mut().zip(p) {
                    *wi -= dot * pi;
                }
            }
            normalize(&mut w);
            // residual ||T w - lambda w|| relative to the matrix scale
            let tv = self.matvec(&w);
            let res: f64 = tv
                .iter()
                .zip(&w)
                .map(|(t, x)| (t - lambda * x) * (t - lambda * x))
                .sum::<f64>()
                .sqrt();
            v = w;
            if res <= 1e-11 * norm_t.max(1.0) {
                return Ok(v);
            }
        }
        Err(CoreError::ConvergenceFailure { index: idx })
    }

    /// Interior vector -> full grid with Dirichlet zeros, Simpson-normalized
    /// in L2(dx), positive at the leftmost extremum.
    fn embed_eigenvector(&self, interior: Vec<f64>) -> GridFunction {
        let mut full = Vec::with_capacity(self.n);
        full.push(0.0);
        full.extend(interior);
        full.push(0.0);
        let g = GridFunction::new(self.x0, self.h, full)
            .expect("eigenvector grid is valid by construction");
        g.normalized()
            .expect("eigenvector has nonzero norm")
            .with_leftmost_extremum_positive()
    }

    /// Symmetry of the operator through the matvec path: relative defect of
    /// <f, H g> - <H f, g> over seeded random vectors.
    pub fn hermiticity_defect(&self, trials: usize, seed: u64) -> f64 {
        let m = self.diag.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let f: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let hg = self.matvec(&g);
            let hf = self.matvec(&f);
            let fhg: f64 = f.iter().zip(&hg).map(|(a, b)| a * b).sum();
            let hfg: f64 = hf.iter().zip(&g).map(|(a, b)| a * b).sum();
            let scale: f64 = f
                .iter()
                .zip(&hg)
                .map(|(a, b)| (a * b).abs())
                .sum::<f64>()
                .max(f64::MIN_POSITIVE);
            worst = worst.max((fhg - hfg).abs() / scale);
        }
        worst
    }
}

/// LU factors of a shifted symmetric tridiagonal matrix with partial
/// pivoting (one superdiagonal of fill-in).
struct TridiagLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper1: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

fn lu_tridiagonal(d: &[f64], e: &[f64], shift: f64) -> TridiagLu {
    let m = d.len();
    // working copies of the three bands of T - shift I
    let mut a: Vec<f64> = d.iter().map(|x| x - shift).collect(); // diagonal
    let mut b: Vec<f64> = e.to_vec(); // superdiagonal
    let mut c: Vec<f64> = e.to_vec(); // subdiagonal
    let mut b2 = vec![0.0; m]; // second superdiagonal fill-in
    let mut lower = vec![0.0; m];
    let mut swapped = vec![false; m];
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    for i in 0..m - 1 {
        if c[i].abs() > a[i].abs() {
            // swap row i and i+1
            swapped[i] = true;
            std::mem::swap(&mut a[i], &mut c[i]);
            let bi = b[i];
            b[i] = a[i + 1];
            a[i + 1] = bi;
            if i + 2 < m {
                b2[i] = b[i + 1];
                b[i + 1] = 0.0;
            }
        }
        if a[i].abs() < tiny {
            a[i] = if a[i] >= 0.0 { tiny } else { -tiny };
        }
        let l = c[i] / a[i];
        lower[i] = l;
        a[i + 1] -= l * b[i];
        if i + 2 < m {
            b[i + 1] -= l * b2[i];
        }
    }
    if a[m - 1].abs() < tiny {
        a[m - 1] = if a[m - 1] >= 0.0 { tiny } else { -tiny };
    }
    TridiagLu {
        lower,
        diag: a,
        upper1: b,
        upper2: b2,
        swapped,
    }
}

impl TridiagLu {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        let mut y = rhs.to_vec();
        for i in 0..m - 1 {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.lower[i] * y[i];
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = y[i];
            if i + 1 < m {
                acc -= self.upper1[i] * x[i + 1];
            }
            if i + 2 < m {
                acc -= self.upper2[i] * x[i + 2];
            }
            x[i] = acc / self.diag[i];
        }
        // guard against overflow from the near-singular shift
        let mx = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if mx > 1e250 {
            for v in &mut x {
                *v /= mx;
            }
        }
        x
    }
}

fn normalize(v: &mut [f64]) {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Class-aware solver domain in x for a realization.
///
/// * omega < 0: symmetric box [x(c) - width, x(c) + width] around the well;
/// * omega = 0: the exponential wall side is cut at u_min -+ 8 past the
///   potential minimum (the state has decayed to ~exp(-k e^8) there), the
///   open side extends `width` beyond the minimum;
/// * omega > 0: [x(c + eps_sing), x(c) + width] per the hard-wall cut.
pub fn solver_domain(r: &AlgebraRealization, width: f64) -> Result<(f64, f64)> {
    if !(width > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "domain width {width} must be positive"
        )));
    }
    let mass = r.mass();
    match r.class() {
        RealizationClass::NegOmega => {
            let xc = mass.inverse_coordinate_map(r.c())?;
            Ok((xc - width, xc + width))
        }
        RealizationClass::ZeroOmega(Sign::Plus) => {
            // V_k = b^2 e^{-2u} - 2kb e^{-u}, minimum at u = ln(|b|/k)
            let u_min = (r.b().abs() / r.k()).ln();
            let xl = mass.inverse_coordinate_map(u_min - EXP_WALL_DEPTH)?;
            let xr = mass.inverse_coordinate_map(u_min)? + width;
            Ok((xl, xr))
        }
        RealizationClass::ZeroOmega(Sign::Minus) => {
            // mirror image: wall on the right, well at u = ln(k/|b|)
            let u_min = (r.k() / r.b().abs()).ln();
            let xl = mass.inverse_coordinate_map(u_min)? - width;
            let xr = mass.inverse_coordinate_map(u_min + EXP_WALL_DEPTH)?;
            Ok((xl, xr))
        }
        RealizationClass::PosOmega => {
            let xl = mass.inverse_coordinate_map(r.c() + r.eps_sing())?;
            let xr = mass.inverse_coordinate_map(r.c())? + width;
            Ok((xl, xr))
        }
    }
}

/// Discretize the V_eff of a realization (mu = k path) on [x0, x0 + (n-1) h].
pub fn discretize_realization(
    r: &AlgebraRealization,
    x0: f64,
    h: f64,
    n: usize,
) -> Result<DiscretizedHamiltonian> {
    let veff = GridFunction::from_fn(x0, h, n, |x| r.potential_veff(r.k(), x))?;
    discretize(&veff, r.mass())
}

/// Solve the discretized problem at h (and h/2 when `refine`), Richardson
/// extrapolate, and compare with the analytic tower.
pub fn verify_spectrum(
    r: &AlgebraRealization,
    n_levels: usize,
    x0: f64,
    h: f64,
    n: usize,
    refine: bool,
) -> Result<SpectrumReport> {
    if n_levels == 0 {
        return Err(CoreError::InvalidParameter("n_levels must be >= 1".into()));
    }
    if n_levels > r.bound_state_count() {
        return Err(CoreError::TooManyStates {
            requested: n_levels,
            k: r.k(),
            supported: r.bound_state_count(),
        });
    }
    let hd = discretize_realization(r, x0, h, n)?;
    let pairs = hd.lowest_eigenpairs(n_levels)?;
    let numeric_h: Vec<f64> = pairs.iter().map(|(e, _)| *e).collect();
    let eigenvectors: Vec<GridFunction> = pairs.into_iter().map(|(_, v)| v).collect();

    let (numeric_h2, extrapolated) = if refine {
        let n2 = 2 * n - 1;
        let hd2 = discretize_realization(r, x0, 0.5 * h, n2)?;
        let fine: Vec<f64> = hd2
            .lowest_eigenpairs(n_levels)?
            .into_iter()
            .map(|(e, _)| e)
            .collect();
        let extr: Vec<f64> = fine
            .iter()
            .zip(&numeric_h)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect();
        (Some(fine), Some(extr))
    } else {
        (None, None)
    };

    let analytic: Vec<f64> = (0..n_levels).map(|nn| r.energy(nn)).collect();
    let best = extrapolated.as_ref().unwrap_or(&numeric_h);
    let level_errors: Vec<f64> = best
        .iter()
        .zip(&analytic)
        .map(|(b, a)| (b - a).abs())
        .collect();

    // overlaps with the closed-form states (n <= 2, normalizable only)
    let mut overlaps = Vec::with_capacity(n_levels);
    for (nn, vec) in eigenvectors.iter().enumerate() {
        if nn > 2 {
            overlaps.push(None);
            continue;
        }
        match chain_member(r, nn, x0, h, n) {
            Ok(chi) => {
                let psi_cf = GridFunction::from_fn(x0, h, n, |x| {
                    let (m, _, _) = r.mass().mass_at(x)?;
                    Ok(m.powf(0.25))
                })?
                .zip_with(&chi, |m4, c| m4 * c)?
                .normalized()?
                .with_leftmost_extremum_positive();
                overlaps.push(Some(vec.inner_product(&psi_cf)?.abs()));
            }
            Err(CoreError::NonNormalizable { .. }) => overlaps.push(None),
            Err(e) => return Err(e),
        }
    }

    Ok(SpectrumReport {
        analytic,
        numeric_h,
        numeric_h2,
        extrapolated,
        level_errors,
        overlaps,
        eigenvectors,
        x0,
        h,
        n,
    })
}
