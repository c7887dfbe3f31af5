//! Uniform one-dimensional grids and the sampled functions living on them.
//!
//! `GridFunction` is the common carrier for every x-dependent quantity in the
//! crate (mass profiles, potentials, wavefunctions). All quadrature and
//! finite-difference helpers used across modules live here so that every
//! consumer integrates and differentiates the same way.

use crate::error::{CoreError, Result};

/// A real-valued function sampled on a uniform grid.
///
/// Invariants: at least 3 samples, strictly positive spacing, all values
/// finite. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(CoreError::InvalidGrid(format!(
                "need at least 3 samples, got {}",
                values.len()
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(CoreError::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if !x0.is_finite() {
            return Err(CoreError::InvalidGrid(format!("left endpoint x0 = {x0} not finite")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidGrid(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self { x0, h, values })
    }

    /// Sample `f` on `n` nodes starting at `x0`; the first evaluation error aborts.
    pub fn from_fn<F>(x0: f64, h: f64, n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            values.push(f(x0 + i as f64 * h)?);
        }
        Self::new(x0, h, values)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 3 by construction
    }

    /// Coordinate of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when `other` lives on the same nodes (exact metadata match).
    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.x0 == other.x0 && self.h == other.h && self.values.len() == other.values.len()
    }

    /// Index of the node closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x0) / self.h).round();
        (i.max(0.0) as usize).min(self.values.len() - 1)
    }

    /// New function on the same grid with values mapped through `f`.
    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.x0, self.h, self.values.iter().copied().map(f).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &Self, mut f: F) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(CoreError::InvalidGrid("grid mismatch in zip_with".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.x0, self.h, values)
    }

    /// Composite Simpson integral over the whole grid.
    ///
    /// Odd sample counts use plain composite Simpson; an even count closes the
    /// final interval with the three-point Newton-Cotes rule, keeping the
    /// result fourth-order accurate either way.
    pub fn simpson_integral(&self) -> f64 {
        simpson(&self.values, self.h)
    }

    /// Cumulative integral I(x_j) = integral from x_0 to x_j.
    ///
    /// Each interval is closed with the three-point rule through its
    /// neighboring samples (Simpson in cumulative form). Chaining single
    /// intervals keeps the error local: where the integrand is rough the
    /// estimate degrades only there, without splitting the even and odd
    /// nodes onto diverging accumulation tracks.
    pub fn cumulative_integral(&self) -> GridFunction {
        let v = &self.values;
        let h = self.h;
        let n = v.len();
        let mut out = vec![0.0; n];
        if n >= 3 {
            out[1] = h / 12.0 * (5.0 * v[0] + 8.0 * v[1] - v[2]);
        }
        for j in 2..n {
            out[j] = out[j - 1] + h / 12.0 * (-v[j - 2] + 8.0 * v[j - 1] + 5.0 * v[j]);
        }
        GridFunction {
            x0: self.x0,
            h,
            values: out,
        }
    }

    /// Centered first derivative, second-order one-sided at the two ends.
    pub fn derivative(&self) -> GridFunction {
        let v = &self.values;
        let h = self.h;
        let n = v.len();
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        GridFunction {
            x0: self.x0,
            h,
            values: d,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// L2 norm with Simpson weights: sqrt(integral of f^2 dx).
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        simpson(&sq, self.h).max(0.0).sqrt()
    }

    /// Simpson-weighted inner product of two functions on the same grid.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(CoreError::InvalidGrid("grid mismatch in inner_product".into()));
        }
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(simpson(&prod, self.h))
    }

    /// Scale so the Simpson L2 norm is 1.
    pub fn normalized(&self) -> Result<GridFunction> {
        let norm = self.l2_norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(CoreError::InvalidGrid(format!(
                "cannot normalize: L2 norm = {norm}"
            )));
        }
        self.map(|v| v / norm)
    }

    /// Flip the global sign so the function is positive at its leftmost
    /// extremum (first interior local maximum of |f| above noise level).
    pub fn with_leftmost_extremum_positive(&self) -> GridFunction {
        let v = &self.values;
        let floor = 1e-8 * self.max_abs();
        let mut sign = 1.0;
        for i in 1..v.len() - 1 {
            let a = v[i].abs();
            if a > floor && a >= v[i - 1].abs() && a >= v[i + 1].abs() {
                if v[i] < 0.0 {
                    sign = -1.0;
                }
                break;
            }
        }
        GridFunction {
            x0: self.x0,
            h: self.h,
            values: v.iter().map(|&x| sign * x).collect(),
        }
    }

    /// Number of interior sign changes, ignoring values below `rel_floor`
    /// times the maximum amplitude (tail noise does not count as a node).
    pub fn sign_changes(&self, rel_floor: f64) -> usize {
        let floor = rel_floor * self.max_abs();
        let mut count = 0;
        let mut last: Option<f64> = None;
        for &v in &self.values {
            if v.abs() <= floor {
                continue;
            }
            if let Some(prev) = last {
                if prev * v < 0.0 {
                    count += 1;
                }
            }
            last = Some(v);
        }
        count
    }
}

/// Composite Simpson rule on uniformly spaced samples.
///
/// An even sample count (odd interval count) closes with the 3/8 rule over
/// the last three intervals, so the result stays exact on cubics.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3, "simpson needs at least 3 samples");
    let pairs_end = if (n - 1) % 2 == 0 { n - 1 } else { n - 4 };
    let mut sum = 0.0;
    let mut j = 0;
    while j + 2 <= pairs_end {
        sum += h / 3.0 * (values[j] + 4.0 * values[j + 1] + values[j + 2]);
        j += 2;
    }
    if pairs_end != n - 1 {
        sum += 3.0 * h / 8.0
            * (values[n - 4] + 3.0 * values[n - 3] + 3.0 * values[n - 2] + values[n - 1]);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction::new(0.0, 1.0, vec![1.0, 2.0]).is_err());
        assert!(GridFunction::new(0.0, 0.0, vec![1.0, 2.0, 3.0]).is_err());
        assert!(GridFunction::new(0.0, -1.0, vec![1.0, 2.0, 3.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![1.0, f64::NAN, 3.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![1.0, f64::INFINITY, 3.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn simpson_exact_on_cubics() {
        // Simpson integrates cubics exactly; both parities of sample count.
        for n in [101usize, 102] {
            let h = 1.0 / (n - 1) as f64;
            let g = GridFunction::from_fn(0.0, h, n, |x| Ok(x * x * x - 2.0 * x + 1.0)).unwrap();
            assert_relative_eq!(g.simpson_integral(), 0.25 - 1.0 + 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cumulative_matches_closed_form() {
        // integral of cos from 0 to x = sin x; the chained one-interval rule
        // accumulates ~ n h^4 |f'''| / 24
        let n = 2001;
        let h = 2.0 / (n - 1) as f64;
        let g = GridFunction::from_fn(0.0, h, n, |x| Ok(x.cos())).unwrap();
        let cum = g.cumulative_integral();
        for i in (0..n).step_by(97) {
            assert_relative_eq!(cum.values()[i], g.x(i).sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn derivative_is_second_order() {
        let err_at = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let g = GridFunction::from_fn(-1.0, h, n, |x| Ok((2.0 * x).sin())).unwrap();
            let d = g.derivative();
            (0..n)
                .map(|i| (d.values()[i] - 2.0 * (2.0 * g.x(i)).cos()).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err_at(501);
        let e2 = err_at(1001);
        let slope = (e1 / e2).log2();
        assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    }

    #[test]
    fn sign_fix_and_node_count() {
        let n = 1001;
        let h = 10.0 / (n - 1) as f64;
        // one interior node, negative left lobe
        let g = GridFunction::from_fn(-5.0, h, n, |x| Ok(-x * (-x * x / 2.0).exp())).unwrap();
        let fixed = g.with_leftmost_extremum_positive();
        assert!(fixed.values()[fixed.nearest_index(-1.0)] > 0.0);
        assert_eq!(fixed.sign_changes(1e-8), 1);
        // nodeless positive bump stays put
        let g0 = GridFunction::from_fn(-5.0, h, n, |x| Ok((-x * x / 2.0).exp())).unwrap();
        assert_eq!(
            g0.with_leftmost_extremum_positive().values(),
            g0.values()
        );
        assert_eq!(g0.sign_changes(1e-8), 0);
    }

    #[test]
    fn normalized_has_unit_norm() {
        let n = 2001;
        let h = 20.0 / (n - 1) as f64;
        let g = GridFunction::from_fn(-10.0, h, n, |x| Ok(3.7 * (-x * x / 2.0).exp())).unwrap();
        let gn = g.normalized().unwrap();
        assert_relative_eq!(gn.l2_norm(), 1.0, epsilon = 1e-14);
    }
}
