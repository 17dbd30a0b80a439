//! Scenario configuration: key/value parsing, per-scenario defaults and
//! validation.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mismatch::{MismatchKind, Plane};
use crate::pdc::GainNormalization;

/// The named experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    ModeSpectrum,
    GouySweep,
    SidebandSweep,
    MismatchSweep,
    LossSweep,
    WaistMismatch,
    SincCompare,
    GouyMap,
}

impl Scenario {
    pub const ALL: [Self; 8] = [
        Self::ModeSpectrum,
        Self::GouySweep,
        Self::SidebandSweep,
        Self::MismatchSweep,
        Self::LossSweep,
        Self::WaistMismatch,
        Self::SincCompare,
        Self::GouyMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ModeSpectrum => "mode-spectrum",
            Self::GouySweep => "gouy-sweep",
            Self::SidebandSweep => "sideband-sweep",
            Self::MismatchSweep => "mismatch-sweep",
            Self::LossSweep => "loss-sweep",
            Self::WaistMismatch => "waist-mismatch",
            Self::SincCompare => "sinc-compare",
            Self::GouyMap => "gouy-map",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|sc| sc.name()).collect();
                Error::Config(format!(
                    "unknown scenario `{s}`; valid scenarios: {}",
                    names.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive linear sweep with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Config(format!(
                "sweep needs at least 2 steps, got {steps}"
            )));
        }
        if !(min.is_finite() && max.is_finite()) || max < min {
            return Err(Error::Config(format!(
                "sweep range {min}:{max} must satisfy min <= max"
            )));
        }
        Ok(Self { min, max, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| (self.min * (last - i) as f64 + self.max * i as f64) / last as f64)
            // snap to 12 significant digits so grid points print cleanly
            .map(|v| {
                format!("{v:.11e}")
                    .parse::<f64>()
                    .expect("formatted float parses")
            })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "sweep `{s}` must look like MIN:MAX:STEPS"
            )));
        }
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("sweep steps `{}` is not an integer", parts[2])))?;
        Self::new(parse_real(parts[0])?, parse_real(parts[1])?, steps)
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.steps)
    }
}

/// Parses a real number, also accepting `pi`, products with `*` and one
/// division, e.g. `1/81`, `pi/25`, `2*pi`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let err = || Error::Config(format!("`{s}` is not a number"));
    let product = |t: &str| -> Result<f64> {
        t.split('*').try_fold(1.0, |acc, factor| {
            let factor = factor.trim();
            let v = if factor.eq_ignore_ascii_case("pi") {
                PI
            } else {
                factor.parse::<f64>().map_err(|_| err())?
            };
            Ok(acc * v)
        })
    };
    let value = match s.split_once('/') {
        Some((num, den)) => product(num)? / product(den)?,
        None => product(s)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(err())
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let out: Vec<T> = s
        .split(',')
        .map(|v| item(v.trim()))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config("empty list".into()));
    }
    Ok(out)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{s}` is not a non-negative integer")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{other}` is not a boolean"))),
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                no + 1
            ))
        })?;
        pairs.push((normalize_key(key), value.trim().to_string()));
    }
    Ok(pairs)
}

pub(crate) fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Every recognized parameter key.
pub const ALL_KEYS: [&str; 18] = [
    "xi",
    "ti",
    "tl",
    "g00",
    "omega",
    "gouy",
    "nmax",
    "kind",
    "plane",
    "lo-phase",
    "sweep",
    "eta-extra",
    "orders",
    "waist-ratio",
    "alpha",
    "normalization",
    "convergence",
    "out",
];

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub xi: Vec<f64>,
    pub ti: Vec<f64>,
    pub tl: f64,
    pub g00: f64,
    /// Normalized sideband frequency; unused by the sideband sweep.
    pub omega: f64,
    /// Round-trip Gouy phases divided by 2π.
    pub gouy: Vec<f64>,
    pub nmax: usize,
    pub kind: MismatchKind,
    pub plane: Plane,
    pub lo_phase: f64,
    pub sweep: Option<Sweep>,
    pub eta_extra: Vec<f64>,
    pub orders: Vec<usize>,
    pub waist_ratio: f64,
    /// Phase-matching coefficient of the sinc kernel; fitted when absent.
    pub alpha: Option<f64>,
    pub normalization: GainNormalization,
    pub convergence: bool,
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Defaults for `scenario` with `pairs` applied in order, later pairs
    /// overriding earlier ones.
    pub fn from_pairs(scenario: Scenario, pairs: &[(String, String)]) -> Result<Self> {
        let schema = super::schema(scenario);
        let mut get = std::collections::HashMap::new();
        for (k, v) in pairs {
            let key = normalize_key(k);
            if !ALL_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown parameter `{key}`; valid parameters: {}",
                    ALL_KEYS.join(", ")
                )));
            }
            if key != "out"
                && key != "convergence"
                && !schema.parameters.iter().any(|p| p.key == key)
            {
                return Err(Error::Config(format!(
                    "parameter `{key}` does not apply to scenario `{scenario}`"
                )));
            }
            get.insert(key, v.clone());
        }
        let value = |key: &str| -> Option<&str> { get.get(key).map(String::as_str) };
        let real = |key: &str, fallback: f64| -> Result<f64> {
            value(key)
                .map(parse_real)
                .transpose()
                .map(|v| v.unwrap_or(fallback))
        };
        let reals = |key: &str, fallback: &[f64]| -> Result<Vec<f64>> {
            match value(key) {
                Some(s) => parse_list(s, parse_real),
                None => Ok(fallback.to_vec()),
            }
        };

        let kind: MismatchKind = value("kind").unwrap_or("disp").parse()?;
        let plane: Plane = match value("plane") {
            Some(p) => p.parse()?,
            None if kind == MismatchKind::Tilt => Plane::Fourier,
            None => Plane::Image,
        };
        let lo_phase = real("lo-phase", plane.default_lo_phase())?;
        let size = kind == MismatchKind::Size;

        let gouy_default: &[f64] = match scenario {
            Scenario::MismatchSweep if size => &[0.0, 0.001, 0.002, 0.003],
            Scenario::MismatchSweep => &[0.0, 0.002, 0.004, 0.006],
            Scenario::WaistMismatch | Scenario::SincCompare if size => &[0.0, 0.001],
            Scenario::WaistMismatch | Scenario::SincCompare => &[0.0, 0.002],
            Scenario::SidebandSweep => &[0.002, 0.006],
            _ => &[0.0],
        };
        let sweep_default = match scenario {
            Scenario::ModeSpectrum => None,
            Scenario::GouySweep => Some(Sweep::new(0.0, 0.01, 101)?),
            Scenario::SidebandSweep => Some(Sweep::new(0.0, 3.0, 301)?),
            Scenario::GouyMap => Some(Sweep::new(-0.04, 0.04, 81)?),
            _ if size => Some(Sweep::new(0.25, 4.0, 76)?),
            _ => Some(Sweep::new(0.0, 3.0, 61)?),
        };
        let sweep = match value("sweep") {
            Some(s) => Some(s.parse()?),
            None => sweep_default,
        };
        let xi_default: &[f64] = match scenario {
            Scenario::ModeSpectrum => &[1.0 / 9.0, 1.0 / 81.0],
            _ => &[1.0 / 81.0],
        };
        let ti_default: &[f64] = match scenario {
            Scenario::GouySweep => &[0.1, 0.2],
            _ => &[0.1],
        };
        let omega_default = match scenario {
            Scenario::ModeSpectrum | Scenario::GouySweep => 0.0,
            _ => PI / 25.0,
        };
        let eta_default: &[f64] = match scenario {
            Scenario::LossSweep => &[1.0, 0.95, 0.9],
            _ => &[1.0],
        };
        let orders = match value("orders") {
            Some(s) => parse_list(s, parse_usize)?,
            None => vec![0, 2, 4, 6],
        };
        let cfg = Self {
            scenario,
            xi: reals("xi", xi_default)?,
            ti: reals("ti", ti_default)?,
            tl: real("tl", 0.0)?,
            g00: real("g00", 0.5)?,
            omega: real("omega", omega_default)?,
            gouy: reals("gouy", gouy_default)?,
            nmax: value("nmax").map(parse_usize).transpose()?.unwrap_or(20),
            kind,
            plane,
            lo_phase,
            sweep,
            eta_extra: reals("eta-extra", eta_default)?,
            orders,
            waist_ratio: real("waist-ratio", 1.4)?,
            alpha: value("alpha").map(parse_real).transpose()?,
            normalization: value("normalization").unwrap_or("eigenvalue").parse()?,
            convergence: value("convergence")
                .map(parse_bool)
                .transpose()?
                .unwrap_or(false),
            out: value("out").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn defaults(scenario: Scenario) -> Result<Self> {
        Self::from_pairs(scenario, &[])
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for &xi in &self.xi {
            if !(xi > 0.0 && xi <= 1.0) {
                return bad(format!("xi = {xi} must satisfy 0 < xi <= 1"));
            }
        }
        for &ti in &self.ti {
            if !(ti > 0.0 && ti <= 1.0) {
                return bad(format!("ti = {ti} must satisfy 0 < ti <= 1"));
            }
        }
        let multi_curve = matches!(
            self.scenario,
            Scenario::ModeSpectrum | Scenario::GouySweep | Scenario::SidebandSweep
        );
        if !multi_curve && (self.xi.len() != 1 || self.ti.len() != 1) {
            return bad(format!(
                "scenario `{}` takes a single xi and ti value",
                self.scenario
            ));
        }
        if !(0.0..1.0).contains(&self.tl) {
            return bad(format!("tl = {} must satisfy 0 <= tl < 1", self.tl));
        }
        if !(0.0..1.0).contains(&self.g00) {
            return bad(format!(
                "g00 = {} must satisfy 0 <= g00 < 1 (below threshold)",
                self.g00
            ));
        }
        for &e in &self.eta_extra {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("eta-extra = {e} must satisfy 0 <= eta-extra <= 1"));
            }
        }
        if self.nmax > 60 {
            return bad(format!(
                "nmax = {} exceeds the supported maximum of 60",
                self.nmax
            ));
        }
        let uses_orders = matches!(self.scenario, Scenario::GouySweep | Scenario::SidebandSweep);
        if let Some(&o) = self.orders.iter().find(|&&o| uses_orders && o > self.nmax) {
            return bad(format!("order {o} exceeds nmax = {}", self.nmax));
        }
        if !(self.waist_ratio > 0.0) {
            return bad(format!(
                "waist-ratio = {} must be positive",
                self.waist_ratio
            ));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return bad(format!("alpha = {a} must be positive"));
            }
        }
        if let Some(sw) = self.sweep {
            let is_param = matches!(
                self.scenario,
                Scenario::MismatchSweep
                    | Scenario::LossSweep
                    | Scenario::WaistMismatch
                    | Scenario::SincCompare
            );
            if is_param && self.kind == MismatchKind::Size && sw.min <= 0.0 {
                return bad(format!(
                    "size-ratio sweep must start above 0, got {}",
                    sw.min
                ));
            }
            if is_param && sw.min < 0.0 {
                return bad(format!(
                    "mismatch sweep must start at or above 0, got {}",
                    sw.min
                ));
            }
            if self.scenario == Scenario::GouyMap && (sw.min <= -1.0 || sw.max >= 1.0) {
                return bad(format!(
                    "gouy-map detunings must lie inside (-1, 1), got {sw}"
                ));
            }
        }
        Ok(())
    }

    /// `key = value` lines of every resolved parameter that applies to the
    /// scenario, in schema order.
    pub fn describe(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let schema = super::schema(self.scenario);
        let mut out = vec![("scenario".to_string(), self.scenario.name().to_string())];
        for p in &schema.parameters {
            let v = match p.key {
                "xi" => list(&self.xi),
                "ti" => list(&self.ti),
                "tl" => self.tl.to_string(),
                "g00" => self.g00.to_string(),
                "omega" => self.omega.to_string(),
                "gouy" => list(&self.gouy),
                "nmax" => self.nmax.to_string(),
                "kind" => self.kind.to_string(),
                "plane" => self.plane.to_string(),
                "lo-phase" => self.lo_phase.to_string(),
                "sweep" => self.sweep.map(|s| s.to_string()).unwrap_or_default(),
                "eta-extra" => list(&self.eta_extra),
                "orders" => self
                    .orders
                    .iter()
                    .map(|o| o.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                "waist-ratio" => self.waist_ratio.to_string(),
                "alpha" => self
                    .alpha
                    .map(|a| a.to_string())
                    .unwrap_or_else(|| "fit".into()),
                "normalization" => match self.normalization {
                    GainNormalization::LargestEigenvalue => "eigenvalue".into(),
                    GainNormalization::FundamentalEntry => "fundamental".into(),
                },
                _ => continue,
            };
            out.push((p.key.to_string(), v));
        }
        out.push(("convergence".into(), self.convergence.to_string()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn real_expressions() {
        assert_abs_diff_eq!(parse_real("1/81").unwrap(), 1.0 / 81.0);
        assert_abs_diff_eq!(parse_real("pi/25").unwrap(), PI / 25.0);
        assert_abs_diff_eq!(parse_real(" 2*pi ").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("-0.04").unwrap(), -0.04);
        assert!(parse_real("abc").is_err());
        assert!(parse_real("1/0").is_err());
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "0:3:61".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 61);
        assert_eq!((v[0], v[60]), (0.0, 3.0));
        assert_abs_diff_eq!(v[20], 1.0, epsilon = 1e-15);
        assert!("0:3:1".parse::<Sweep>().is_err());
        assert!("3:0:5".parse::<Sweep>().is_err());
        assert!("0:3".parse::<Sweep>().is_err());
    }

    #[test]
    fn config_text() {
        let text = "# fig 4\nxi = 1/81\n\nlo_phase = pi/2  # shifted\n";
        let pairs = parse_config_text(text).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("xi".into(), "1/81".into()),
                ("lo-phase".into(), "pi/2".into())
            ]
        );
        assert!(parse_config_text("xi 0.3").is_err());
    }

    #[test]
    fn later_pairs_override() {
        let pairs = vec![
            ("g00".to_string(), "0.3".to_string()),
            ("g00".to_string(), "0.4".to_string()),
        ];
        let cfg = ScenarioConfig::from_pairs(Scenario::MismatchSweep, &pairs).unwrap();
        assert_eq!(cfg.g00, 0.4);
    }

    #[test]
    fn kind_sets_plane_and_gouy_defaults() {
        let tilt =
            ScenarioConfig::from_pairs(Scenario::MismatchSweep, &[("kind".into(), "tilt".into())])
                .unwrap();
        assert_eq!(tilt.plane, Plane::Fourier);
        assert_abs_diff_eq!(tilt.lo_phase, PI / 2.0);
        let size =
            ScenarioConfig::from_pairs(Scenario::MismatchSweep, &[("kind".into(), "size".into())])
                .unwrap();
        assert_eq!(size.gouy, vec![0.0, 0.001, 0.002, 0.003]);
        assert!(size.sweep.unwrap().min > 0.0);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            ("xi", "1.5"),
            ("g00", "1"),
            ("ti", "0"),
            ("nmax", "-1"),
            ("kind", "shear"),
            ("sweep", "0:1:1"),
        ];
        for (k, v) in bad {
            let r = ScenarioConfig::from_pairs(Scenario::MismatchSweep, &[(k.into(), v.into())]);
            assert!(matches!(r, Err(Error::Config(_))), "{k}={v}");
        }
        let r =
            ScenarioConfig::from_pairs(Scenario::MismatchSweep, &[("speed".into(), "1".into())]);
        assert!(matches!(r, Err(Error::Config(_))));
        let r =
            ScenarioConfig::from_pairs(Scenario::ModeSpectrum, &[("sweep".into(), "0:1:3".into())]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn unknown_scenario_lists_names() {
        let err = "fig9".parse::<Scenario>().unwrap_err().to_string();
        for sc in Scenario::ALL {
            assert!(err.contains(sc.name()));
        }
    }
}
