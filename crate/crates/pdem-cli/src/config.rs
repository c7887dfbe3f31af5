//! Scenario configuration: a flat `key = value` text format with dotted
//! section prefixes, '#' comments and a strict schema (unknown or duplicate
//! keys are rejected, every value is validated before any computation).

use pdem_core::{AlgebraRealization, AmbiguityParams, MassProfile, RealizationClass, Sign};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got: {text}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("unsupported schema version {0} (this build reads schema 1)")]
    Schema(String),
}

/// The checks a scenario may request, in their fixed execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Constraints,
    Casimir,
    Spectrum,
    Ladder,
    Intertwine,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Constraints => "constraints",
            Check::Casimir => "casimir",
            Check::Spectrum => "spectrum",
            Check::Ladder => "ladder",
            Check::Intertwine => "intertwine",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Output artifacts a scenario may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Table,
    Report,
    Summary,
}

/// Tolerances used by the harness checks. Every field can be overridden
/// from the scenario file under the `tol.` prefix.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// |numeric - analytic| per level after Richardson extrapolation.
    pub spectrum_abs: f64,
    /// 1 - overlap for eigenvector cross-checks.
    pub overlap_deficit: f64,
    /// Algebraic identities (relation residual, V_k equality, ambiguity
    /// invariance), scaled by the local potential magnitude.
    pub algebraic: f64,
    /// Riccati residual, scaled by max(1, |V_k - lambda|).
    pub riccati: f64,
    /// Casimir eigenvalue residual at the scenario grid spacing.
    pub casimir: f64,
    /// Ladder annihilation / commutator residuals at the scenario spacing.
    pub ladder: f64,
    /// |eta psi_0| / |psi_0| for the Plus branch.
    pub eta_psi0: f64,
    /// Required residual decay factor when h is halved (second-order items).
    pub decay_ratio: f64,
    /// Required decay factor for the intertwining operator defect.
    pub defect_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spectrum_abs: 1e-4,
            overlap_deficit: 1e-6,
            algebraic: 1e-12,
            riccati: 1e-10,
            casimir: 5e-3,
            ladder: 5e-3,
            eta_psi0: 5e-3,
            decay_ratio: 2.5,
            defect_ratio: 1.4,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub class: RealizationClass,
    pub k: f64,
    pub b: f64,
    pub c: f64,
    pub mass: MassProfile,
    pub ambiguity: AmbiguityParams,
    pub half_width: f64,
    pub n_points: usize,
    pub levels: usize,
    pub checks: Vec<Check>,
    pub formats: Vec<OutputFormat>,
    pub output_dir: Option<String>,
    pub eps_sing: f64,
    pub tol: Tolerances,
}

impl Scenario {
    pub fn realization(&self) -> Result<AlgebraRealization, ConfigError> {
        AlgebraRealization::new(self.class, self.k, self.b, self.c, self.mass.clone())
            .and_then(|r| r.with_eps_sing(self.eps_sing))
            .map_err(|e| ConfigError::BadValue {
                key: "class/k/b/c".into(),
                reason: e.to_string(),
            })
    }

    /// Apply `--grid-scale`: multiply the interval count, keep n odd.
    pub fn scale_grid(&mut self, factor: f64) -> Result<(), ConfigError> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(ConfigError::BadValue {
                key: "--grid-scale".into(),
                reason: format!("scale factor {factor} must be positive"),
            });
        }
        let mut n = ((self.n_points - 1) as f64 * factor).round() as usize + 1;
        if n % 2 == 0 {
            n += 1;
        }
        if n < 201 {
            return Err(ConfigError::BadValue {
                key: "--grid-scale".into(),
                reason: format!("scaled grid has {n} points, need at least 201"),
            });
        }
        self.n_points = n;
        Ok(())
    }
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: stripped.to_string(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: stripped.to_string(),
            });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::Duplicate { line, key });
        }
    }
    Ok(map)
}

fn take(map: &mut BTreeMap<String, String>, key: &str) -> Result<String, ConfigError> {
    map.remove(key).ok_or_else(|| ConfigError::Missing(key.into()))
}

fn take_f64(map: &mut BTreeMap<String, String>, key: &str) -> Result<f64, ConfigError> {
    let raw = take(map, key)?;
    raw.parse::<f64>().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        reason: format!("`{raw}` is not a number"),
    })
}

fn opt_f64(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<f64>, ConfigError> {
    match map.remove(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<f64>()
            .map(Some)
            .map_err(|_| ConfigError::BadValue {
                key: key.into(),
                reason: format!("`{raw}` is not a number"),
            }),
    }
}

/// Parse and validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut map = parse_kv(text)?;

    let schema = take(&mut map, "schema")?;
    if schema != "1" {
        return Err(ConfigError::Schema(schema));
    }

    let class_raw = take(&mut map, "class")?;
    let class = match class_raw.as_str() {
        "scarf2" => RealizationClass::NegOmega,
        "morse" => RealizationClass::ZeroOmega(Sign::Plus),
        "morse_lower" => RealizationClass::ZeroOmega(Sign::Minus),
        "poschl_teller" => RealizationClass::PosOmega,
        other => {
            return Err(ConfigError::BadValue {
                key: "class".into(),
                reason: format!(
                    "`{other}` is not one of scarf2, morse, morse_lower, poschl_teller"
                ),
            })
        }
    };

    let k = take_f64(&mut map, "k")?;
    let b = take_f64(&mut map, "b")?;
    let c = take_f64(&mut map, "c")?;

    let mass_kind = take(&mut map, "mass.kind")?;
    let q = opt_f64(&mut map, "mass.q")?;
    let mass = match mass_kind.as_str() {
        "constant" => {
            if q.is_some() {
                return Err(ConfigError::BadValue {
                    key: "mass.q".into(),
                    reason: "mass.q is only valid for mass.kind = rational_deformed".into(),
                });
            }
            MassProfile::constant()
        }
        "rational_deformed" => {
            let q = q.ok_or_else(|| ConfigError::Missing("mass.q".into()))?;
            MassProfile::rational_deformed(q).map_err(|e| ConfigError::BadValue {
                key: "mass.q".into(),
                reason: e.to_string(),
            })?
        }
        other => {
            return Err(ConfigError::BadValue {
                key: "mass.kind".into(),
                reason: format!("`{other}` is not one of constant, rational_deformed"),
            })
        }
    };

    let alpha = take_f64(&mut map, "ambiguity.alpha")?;
    let beta = take_f64(&mut map, "ambiguity.beta")?;
    let ambiguity = AmbiguityParams::new(alpha, beta).map_err(|e| ConfigError::BadValue {
        key: "ambiguity".into(),
        reason: e.to_string(),
    })?;

    let half_width = take_f64(&mut map, "grid.L")?;
    if !(half_width > 0.0) {
        return Err(ConfigError::BadValue {
            key: "grid.L".into(),
            reason: format!("{half_width} must be positive"),
        });
    }
    let n_raw = take(&mut map, "grid.n_points")?;
    let n_points: usize = n_raw.parse().map_err(|_| ConfigError::BadValue {
        key: "grid.n_points".into(),
        reason: format!("`{n_raw}` is not a count"),
    })?;
    if n_points < 201 || n_points % 2 == 0 {
        return Err(ConfigError::BadValue {
            key: "grid.n_points".into(),
            reason: format!("{n_points} must be odd and at least 201"),
        });
    }

    let levels_raw = take(&mut map, "levels")?;
    let levels: usize = levels_raw.parse().map_err(|_| ConfigError::BadValue {
        key: "levels".into(),
        reason: format!("`{levels_raw}` is not a count"),
    })?;

    let checks_raw = take(&mut map, "checks")?;
    let mut checks = Vec::new();
    for item in checks_raw.split(',') {
        let item = item.trim();
        let check = match item {
            "constraints" => Check::Constraints,
            "casimir" => Check::Casimir,
            "spectrum" => Check::Spectrum,
            "ladder" => Check::Ladder,
            "intertwine" => Check::Intertwine,
            other => {
                return Err(ConfigError::BadValue {
                    key: "checks".into(),
                    reason: format!("unknown check `{other}`"),
                })
            }
        };
        if checks.contains(&check) {
            return Err(ConfigError::BadValue {
                key: "checks".into(),
                reason: format!("check `{check}` listed twice"),
            });
        }
        checks.push(check);
    }
    if checks.is_empty() {
        return Err(ConfigError::BadValue {
            key: "checks".into(),
            reason: "at least one check is required".into(),
        });
    }
    checks.sort(); // fixed execution order

    let formats = match map.remove("output.formats") {
        None => vec![
            OutputFormat::Table,
            OutputFormat::Report,
            OutputFormat::Summary,
        ],
        Some(raw) => {
            let mut out = Vec::new();
            for item in raw.split(',') {
                let f = match item.trim() {
                    "table" => OutputFormat::Table,
                    "report" => OutputFormat::Report,
                    "summary" => OutputFormat::Summary,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: "output.formats".into(),
                            reason: format!("unknown format `{other}`"),
                        })
                    }
                };
                if !out.contains(&f) {
                    out.push(f);
                }
            }
            out.sort();
            out
        }
    };
    let output_dir = map.remove("output.dir");

    let eps_sing = opt_f64(&mut map, "eps_sing")?.unwrap_or(1e-3);
    if !(eps_sing > 0.0) {
        return Err(ConfigError::BadValue {
            key: "eps_sing".into(),
            reason: format!("{eps_sing} must be positive"),
        });
    }

    let mut tol = Tolerances::default();
    if let Some(v) = opt_f64(&mut map, "tol.spectrum_abs")? {
        tol.spectrum_abs = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.overlap_deficit")? {
        tol.overlap_deficit = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.algebraic")? {
        tol.algebraic = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.riccati")? {
        tol.riccati = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.casimir")? {
        tol.casimir = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.ladder")? {
        tol.ladder = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.eta_psi0")? {
        tol.eta_psi0 = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.decay_ratio")? {
        tol.decay_ratio = v;
    }
    if let Some(v) = opt_f64(&mut map, "tol.defect_ratio")? {
        tol.defect_ratio = v;
    }

    if let Some(key) = map.keys().next() {
        return Err(ConfigError::UnknownKey(key.clone()));
    }

    let scenario = Scenario {
        class,
        k,
        b,
        c,
        mass,
        ambiguity,
        half_width,
        n_points,
        levels,
        checks,
        formats,
        output_dir,
        eps_sing,
        tol,
    };

    // realization validation (k > 1/2, b > 0, ...) happens before any
    // computation starts
    let realization = scenario.realization()?;
    if levels == 0 || levels > realization.bound_state_count() {
        return Err(ConfigError::BadValue {
            key: "levels".into(),
            reason: format!(
                "{levels} requested, but k = {k} supports {} level(s) (n < k - 1/2)",
                realization.bound_state_count()
            ),
        });
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
schema = 1
class = scarf2
k = 2.0
b = 1.0
c = 0.0
mass.kind = constant
ambiguity.alpha = 0.0
ambiguity.beta = -0.5
grid.L = 20.0
grid.n_points = 4001
levels = 2
checks = constraints, spectrum
";

    #[test]
    fn parses_valid_scenario() {
        let s = parse_scenario(GOOD).unwrap();
        assert_eq!(s.k, 2.0);
        assert_eq!(s.n_points, 4001);
        assert_eq!(s.checks, vec![Check::Constraints, Check::Spectrum]);
        assert_eq!(s.formats.len(), 3);
    }

    #[test]
    fn rejects_unknown_key() {
        let text = format!("{GOOD}wibble = 3\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(ConfigError::UnknownKey(k)) if k == "wibble"
        ));
    }

    #[test]
    fn rejects_too_many_levels_before_computation() {
        let text = GOOD.replace("levels = 2", "levels = 5");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { ref key, .. } if key == "levels"), "{err}");
    }

    #[test]
    fn rejects_even_or_small_grids() {
        for bad in ["grid.n_points = 4000", "grid.n_points = 101"] {
            let text = GOOD.replace("grid.n_points = 4001", bad);
            assert!(parse_scenario(&text).is_err(), "{bad}");
        }
    }

    #[test]
    fn rejects_duplicate_and_malformed_lines() {
        let dup = format!("{GOOD}k = 3.0\n");
        assert!(matches!(parse_scenario(&dup), Err(ConfigError::Duplicate { .. })));
        let malformed = format!("{GOOD}just words\n");
        assert!(matches!(
            parse_scenario(&malformed),
            Err(ConfigError::Malformed { .. })
        ));
    }

    #[test]
    fn rejects_q_for_constant_mass() {
        let text = format!("{GOOD}mass.q = 1.0\n");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn grid_scale_keeps_oddness() {
        let mut s = parse_scenario(GOOD).unwrap();
        s.scale_grid(0.5).unwrap();
        assert_eq!(s.n_points, 2001);
        let mut s2 = parse_scenario(GOOD).unwrap();
        s2.scale_grid(0.13).unwrap();
        assert!(s2.n_points % 2 == 1 && s2.n_points >= 201);
        let mut s3 = parse_scenario(GOOD).unwrap();
        assert!(s3.scale_grid(0.01).is_err());
    }
}
