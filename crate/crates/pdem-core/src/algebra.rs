//! The so(2,1) structure functions F, G and the four potential layers.
//!
//! A realization is fixed by a class (the sign of omega = (F^2-1)/G^2), the
//! representation label k > 1/2, the class constants b and c, and a mass
//! profile. In the deformed coordinate u(x) the three classes read
//!
//! ```text
//! omega < 0:  F = tanh(u-c),  G = b sech(u-c)      (Scarf II shape)
//! omega = 0:  F = +-1,        G = b exp(-+u)       (Morse shape)
//! omega > 0:  F = coth(u-c),  G = b cosech(u-c)    (gen. Poschl-Teller shape)
//! ```
//!
//! and satisfy F' = sqrt(M)(1 - F^2), G' = -sqrt(M) F G together with the
//! algebraic relation F^2 + delta G^2 = 1 (delta = 1/b^2, 0, -1/b^2 by class).
//!
//! Potential layers, from the algebra outward:
//!
//! * `potential_vmu`  - the one-parameter family V_mu carried by the Casimir
//!   reduction, with F', G' eliminated analytically so the value path never
//!   differentiates numerically;
//! * `potential_vk`   - V_mu at mu = k rewritten through the algebraic
//!   relation, plus an independent closed-form route per class;
//! * `potential_veff` - the effective potential entering the
//!   -d/dx (1/M) d/dx + V_eff Hamiltonian;
//! * `potential_v`    - the bare potential for given ambiguity parameters
//!   (alpha, beta, gamma), with alpha + beta + gamma = -1.
//!
//! V_eff is independent of the ambiguity parameters: reassembling it from
//! `potential_v` must reproduce `potential_veff` to rounding. That identity,
//! the constraint residuals, and the three-way V_k equality are the module's
//! correctness anchors.

use crate::error::{CoreError, Result};
use crate::grid::GridFunction;
use crate::mass_profile::MassProfile;

/// Default guard band around the u = c singularity of the omega > 0 class,
/// in u-units.
pub const DEFAULT_EPS_SING: f64 = 1e-3;

/// Sign choice for the omega = 0 class: `Plus` means F = +1, G = b e^{-u}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// The three realization classes, tagged by the sign of omega.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealizationClass {
    /// omega = -1/b^2 < 0: F = tanh(u-c), G = b sech(u-c).
    NegOmega,
    /// omega = 0: F = +-1, G = b e^{-+u}.
    ZeroOmega(Sign),
    /// omega = +1/b^2 > 0: F = coth(u-c), G = b cosech(u-c), valid for u > c.
    PosOmega,
}

/// von Roos ambiguity parameters; gamma = -1 - alpha - beta is derived so
/// alpha + beta + gamma = -1 holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguityParams {
    alpha: f64,
    beta: f64,
}

impl AmbiguityParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "ambiguity parameters must be finite, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        -1.0 - self.alpha - self.beta
    }
}

/// A concrete so(2,1) realization over a mass profile.
#[derive(Debug, Clone)]
pub struct AlgebraRealization {
    class: RealizationClass,
    k: f64,
    b: f64,
    c: f64,
    mass: MassProfile,
    eps_sing: f64,
}

/// Max-norm residuals of the defining identities on a grid.
///
/// `r1`, `r2` difference the F and G samples numerically, so they carry the
/// O(h^2) stencil error; `r3` is algebraic and sits at rounding level.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintResiduals {
    /// max |F' - sqrt(M)(1 - F^2)|
    pub r1: f64,
    /// max |G' + sqrt(M) F G|
    pub r2: f64,
    /// max |F^2 + delta G^2 - 1|
    pub r3: f64,
}

impl AlgebraRealization {
    /// Build a realization, enforcing k > 1/2 and b > 0.
    ///
    /// b > 0 keeps the ground state of the chain normalizable (and G > 0, so
    /// non-integer powers of G are well defined). Use `new_unchecked` to study
    /// potentials with b < 0; wavefunction construction will generally fail
    /// there.
    pub fn new(
        class: RealizationClass,
        k: f64,
        b: f64,
        c: f64,
        mass: MassProfile,
    ) -> Result<Self> {
        if !(b > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "b = {b} must be positive (use new_unchecked to override)"
            )));
        }
        Self::new_unchecked(class, k, b, c, mass)
    }

    /// Like `new` but allows b < 0. k > 1/2 and b != 0 are still required.
    pub fn new_unchecked(
        class: RealizationClass,
        k: f64,
        b: f64,
        c: f64,
        mass: MassProfile,
    ) -> Result<Self> {
        if !(k > 0.5) || !k.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "representation label k = {k} must exceed 1/2"
            )));
        }
        if b == 0.0 || !b.is_finite() {
            return Err(CoreError::InvalidParameter(format!("b = {b} must be nonzero")));
        }
        if !c.is_finite() {
            return Err(CoreError::InvalidParameter(format!("c = {c} must be finite")));
        }
        Ok(Self {
            class,
            k,
            b,
            c,
            mass,
            eps_sing: DEFAULT_EPS_SING,
        })
    }

    /// Override the singular guard band (u-units) for the omega > 0 class.
    pub fn with_eps_sing(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "eps_sing = {eps} must be positive"
            )));
        }
        self.eps_sing = eps;
        Ok(self)
    }

    pub fn class(&self) -> RealizationClass {
        self.class
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mass(&self) -> &MassProfile {
        &self.mass
    }

    pub fn eps_sing(&self) -> f64 {
        self.eps_sing
    }

    /// delta of the algebraic relation F^2 + delta G^2 = 1.
    pub fn delta(&self) -> f64 {
        match self.class {
            RealizationClass::NegOmega => 1.0 / (self.b * self.b),
            RealizationClass::ZeroOmega(_) => 0.0,
            RealizationClass::PosOmega => -1.0 / (self.b * self.b),
        }
    }

    /// Analytic bound-state energy E_n = -(k - n - 1/2)^2.
    pub fn energy(&self, n: usize) -> f64 {
        let d = self.k - n as f64 - 0.5;
        -(d * d)
    }

    /// Number of indices with n < k - 1/2.
    pub fn bound_state_count(&self) -> usize {
        let t = self.k - 0.5;
        if t <= 0.0 {
            0
        } else if t.fract() == 0.0 {
            t as usize
        } else {
            t.ceil() as usize
        }
    }

    /// F(x), G(x).
    pub fn fg_at(&self, x: f64) -> Result<(f64, f64)> {
        let u = self.mass.coordinate_map(x)?;
        self.fg_at_u(x, u)
    }

    fn fg_at_u(&self, x: f64, u: f64) -> Result<(f64, f64)> {
        let t = u - self.c;
        match self.class {
            RealizationClass::NegOmega => Ok((t.tanh(), self.b / t.cosh())),
            RealizationClass::ZeroOmega(Sign::Plus) => Ok((1.0, self.b * (-u).exp())),
            RealizationClass::ZeroOmega(Sign::Minus) => Ok((-1.0, self.b * u.exp())),
            RealizationClass::PosOmega => {
                if t < self.eps_sing {
                    return Err(CoreError::SingularPoint {
                        x,
                        dist: t,
                        eps: self.eps_sing,
                    });
                }
                let sh = t.sinh();
                Ok((t.cosh() / sh, self.b / sh))
            }
        }
    }

    /// One-parameter potential family V_mu.
    ///
    /// F' and G' enter through the analytic substitutions
    /// F' = sqrt(M)(1-F^2), G' = -sqrt(M) F G, which cancel the 1/sqrt(M)
    /// prefactor: V_mu = (1/4 - mu^2)(1 - F^2) - 2 mu F G + G^2.
    pub fn potential_vmu(&self, mu: f64, x: f64) -> Result<f64> {
        let (f, g) = self.fg_at(x)?;
        Ok((0.25 - mu * mu) * (1.0 - f * f) - 2.0 * mu * f * g + g * g)
    }

    /// V_k through the algebraic relation: [1 + delta(1/4 - k^2)] G^2 - 2k F G.
    pub fn potential_vk(&self, x: f64) -> Result<f64> {
        let (f, g) = self.fg_at(x)?;
        let k = self.k;
        Ok((1.0 + self.delta() * (0.25 - k * k)) * g * g - 2.0 * k * f * g)
    }

    /// Class-specific closed form of V_k (independent route, for cross-checks):
    ///
    /// ```text
    /// omega < 0: (b^2 - k^2 + 1/4) sech^2(u-c) - 2kb sech(u-c) tanh(u-c)
    /// omega = 0: b^2 e^{-+2u} -+ 2kb e^{-+u}
    /// omega > 0: (b^2 + k^2 - 1/4) cosech^2(u-c) - 2kb cosech(u-c) coth(u-c)
    /// ```
    pub fn potential_vk_closed_form(&self, x: f64) -> Result<f64> {
        let u = self.mass.coordinate_map(x)?;
        let t = u - self.c;
        let (k, b) = (self.k, self.b);
        match self.class {
            RealizationClass::NegOmega => {
                let sech = 1.0 / t.cosh();
                Ok((b * b - k * k + 0.25) * sech * sech - 2.0 * k * b * sech * t.tanh())
            }
            RealizationClass::ZeroOmega(Sign::Plus) => {
                let e = (-u).exp();
                Ok(b * b * e * e - 2.0 * k * b * e)
            }
            RealizationClass::ZeroOmega(Sign::Minus) => {
                // lower signs throughout: b^2 e^{+2u} + 2kb e^{+u}
                let e = u.exp();
                Ok(b * b * e * e + 2.0 * k * b * e)
            }
            RealizationClass::PosOmega => {
                if t < self.eps_sing {
                    return Err(CoreError::SingularPoint {
                        x,
                        dist: t,
                        eps: self.eps_sing,
                    });
                }
                let csch = 1.0 / t.sinh();
                let coth = t.cosh() / t.sinh();
                Ok((b * b + k * k - 0.25) * csch * csch - 2.0 * k * b * csch * coth)
            }
        }
    }

    /// Effective potential V_eff = M''/(4M^2) - 7 M'^2/(16 M^3) + V_mu.
    pub fn potential_veff(&self, mu: f64, x: f64) -> Result<f64> {
        let (m, mp, mpp) = self.mass.mass_at(x)?;
        if m <= 0.0 {
            return Err(CoreError::NonPositiveMass { x, mass: m });
        }
        let vmu = self.potential_vmu(mu, x)?;
        Ok(mpp / (4.0 * m * m) - 7.0 * mp * mp / (16.0 * m * m * m) + vmu)
    }

    /// Bare potential for the given ambiguity parameters:
    /// V = [a(a+b+1) + b + 9/16] M'^2/M^3 - (1/4)(2b+1) M''/M^2 + V_mu
    /// (a = alpha, b = beta).
    pub fn potential_v(&self, ambiguity: &AmbiguityParams, mu: f64, x: f64) -> Result<f64> {
        let (m, mp, mpp) = self.mass.mass_at(x)?;
        if m <= 0.0 {
            return Err(CoreError::NonPositiveMass { x, mass: m });
        }
        let vmu = self.potential_vmu(mu, x)?;
        let (a, be) = (ambiguity.alpha(), ambiguity.beta());
        let coeff = a * (a + be + 1.0) + be + 9.0 / 16.0;
        Ok(coeff * mp * mp / (m * m * m) - 0.25 * (2.0 * be + 1.0) * mpp / (m * m) + vmu)
    }

    /// V_eff reassembled from the bare potential route:
    /// V + (1/2)(beta+1) M''/M^2 - [alpha(alpha+beta+1) + beta + 1] M'^2/M^3.
    ///
    /// Algebraically identical to `potential_veff` for every (alpha, beta);
    /// kept as a separate computation path so the invariance is testable.
    pub fn potential_veff_via_ambiguity(
        &self,
        ambiguity: &AmbiguityParams,
        mu: f64,
        x: f64,
    ) -> Result<f64> {
        let (m, mp, mpp) = self.mass.mass_at(x)?;
        if m <= 0.0 {
            return Err(CoreError::NonPositiveMass { x, mass: m });
        }
        let v = self.potential_v(ambiguity, mu, x)?;
        let (a, be) = (ambiguity.alpha(), ambiguity.beta());
        let coeff = a * (a + be + 1.0) + be + 1.0;
        Ok(v + 0.5 * (be + 1.0) * mpp / (m * m) - coeff * mp * mp / (m * m * m))
    }

    /// Sample F and G on a grid.
    pub fn fg_on_grid(&self, x0: f64, h: f64, n: usize) -> Result<(GridFunction, GridFunction)> {
        let mut fv = Vec::with_capacity(n);
        let mut gv = Vec::with_capacity(n);
        for i in 0..n {
            let x = x0 + i as f64 * h;
            let (f, g) = self.fg_at(x)?;
            fv.push(f);
            gv.push(g);
        }
        Ok((GridFunction::new(x0, h, fv)?, GridFunction::new(x0, h, gv)?))
    }

    /// Max-norm residuals of the defining identities on the given grid.
    ///
    /// r1 and r2 difference the sampled F, G with centered stencils and
    /// compare against the analytic right-hand sides; r3 checks the
    /// algebraic relation pointwise.
    pub fn check_constraints(&self, x0: f64, h: f64, n: usize) -> Result<ConstraintResiduals> {
        let (fg, gg) = self.fg_on_grid(x0, h, n)?;
        let df = fg.derivative();
        let dg = gg.derivative();
        let delta = self.delta();
        let mut r1 = 0.0f64;
        let mut r2 = 0.0f64;
        let mut r3 = 0.0f64;
        for i in 0..n {
            let x = x0 + i as f64 * h;
            let sm = self.mass.sqrt_mass_at(x)?;
            let (f, g) = (fg.values()[i], gg.values()[i]);
            if i > 0 && i + 1 < n {
                r1 = r1.max((df.values()[i] - sm * (1.0 - f * f)).abs());
                r2 = r2.max((dg.values()[i] + sm * f * g).abs());
            }
            r3 = r3.max((f * f + delta * g * g - 1.0).abs());
        }
        Ok(ConstraintResiduals { r1, r2, r3 })
    }
}

/// All four potential layers assembled on one grid.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    mu: f64,
    v_mu: GridFunction,
    v_k: GridFunction,
    v_eff: GridFunction,
    v: GridFunction,
}

impl PotentialModel {
    /// Evaluate V_mu, V_k, V_eff and V on a shared grid.
    pub fn build(
        realization: &AlgebraRealization,
        ambiguity: &AmbiguityParams,
        mu: f64,
        x0: f64,
        h: f64,
        n: usize,
    ) -> Result<Self> {
        let v_mu = GridFunction::from_fn(x0, h, n, |x| realization.potential_vmu(mu, x))?;
        let v_k = GridFunction::from_fn(x0, h, n, |x| realization.potential_vk(x))?;
        let v_eff = GridFunction::from_fn(x0, h, n, |x| realization.potential_veff(mu, x))?;
        let v = GridFunction::from_fn(x0, h, n, |x| realization.potential_v(ambiguity, mu, x))?;
        Ok(Self {
            mu,
            v_mu,
            v_k,
            v_eff,
            v,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn v_mu(&self) -> &GridFunction {
        &self.v_mu
    }

    pub fn v_k(&self) -> &GridFunction {
        &self.v_k
    }

    pub fn v_eff(&self) -> &GridFunction {
        &self.v_eff
    }

    pub fn v(&self) -> &GridFunction {
        &self.v
    }
}
