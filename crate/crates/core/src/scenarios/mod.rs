//! Named, reproducible experiments that assemble the library into CSV
//! datasets, one per figure panel family.
//!
//! A run produces a [`Dataset`] with fixed columns and a manifest of every
//! resolved parameter plus derived quantities. Sweep points are evaluated in
//! parallel but collected in sweep order, so identical configurations give
//! identical bytes.

mod config;
mod runners;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{parse_config_text, parse_real, Scenario, ScenarioConfig, Sweep, ALL_KEYS};

use crate::error::{Error, Result};

/// One parameter of a scenario schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSchema {
    pub key: &'static str,
    pub default: &'static str,
    pub description: &'static str,
}

/// Machine-readable description of a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSchema {
    pub name: &'static str,
    pub figures: Vec<&'static str>,
    pub description: &'static str,
    pub columns: Vec<&'static str>,
    pub parameters: Vec<ParamSchema>,
}

fn describe_key(key: &str) -> &'static str {
    match key {
        "xi" => "focusing parameter xi (comma list where the scenario draws several curves)",
        "ti" => "input coupler transmittance T_i",
        "tl" => "intracavity loss transmittance T_l",
        "g00" => "normalized fundamental-mode gain",
        "omega" => "normalized sideband frequency",
        "gouy" => "round-trip Gouy phase divided by 2 pi (comma list)",
        "nmax" => "basis cutoff m + n <= nmax",
        "kind" => "mismatch kind: disp, tilt or size",
        "plane" => "target plane: image or fourier",
        "lo-phase" => "local oscillator phase in radians",
        "sweep" => "swept range MIN:MAX:STEPS",
        "eta-extra" => "extra transmission applied to every mode (comma list)",
        "orders" => "mode orders m + n to report (comma list)",
        "waist-ratio" => "gain eigenmode waist over cavity waist",
        "alpha" => "sinc-kernel coefficient alpha; fitted when omitted",
        "normalization" => "gain normalization: eigenvalue or fundamental",
        _ => "",
    }
}

fn params(entries: &[(&'static str, &'static str)]) -> Vec<ParamSchema> {
    entries
        .iter()
        .map(|&(key, default)| ParamSchema {
            key,
            default,
            description: describe_key(key),
        })
        .collect()
}

const MISMATCH_DEFAULTS: [(&str, &str); 11] = [
    ("xi", "1/81"),
    ("ti", "0.1"),
    ("tl", "0"),
    ("g00", "0.5"),
    ("omega", "pi/25"),
    ("gouy", "0,0.002,0.004,0.006 (size: 0,0.001,0.002,0.003)"),
    ("nmax", "20"),
    ("kind", "disp"),
    ("plane", "image (tilt: fourier)"),
    (
        "lo-phase",
        "0 in the image plane, pi/2 in the Fourier plane",
    ),
    ("sweep", "0:3:61 (size: 0.25:4:76)"),
];

/// Schema of one scenario.
pub fn schema(scenario: Scenario) -> ScenarioSchema {
    let (figures, description, columns, parameters): (&[&str], _, &[&str], _) = match scenario {
        Scenario::ModeSpectrum => (
            &["fig2a"],
            "squeezing per mode order for several focusing parameters",
            &[
                "xi",
                "ti",
                "gouy_over_2pi",
                "order",
                "gain",
                "squeezing_db",
                "antisqueezing_db",
                "theta",
            ],
            params(&[
                ("xi", "1/9,1/81"),
                ("ti", "0.1"),
                ("tl", "0"),
                ("g00", "0.5"),
                ("omega", "0"),
                ("gouy", "0"),
                ("nmax", "20"),
            ]),
        ),
        Scenario::GouySweep => (
            &["fig2b", "fig2c"],
            "squeezing level and angle against the Gouy phase",
            &[
                "xi",
                "ti",
                "order",
                "gouy_over_2pi",
                "squeezing_db",
                "antisqueezing_db",
                "theta",
            ],
            params(&[
                ("xi", "1/81"),
                ("ti", "0.1,0.2"),
                ("tl", "0"),
                ("g00", "0.5"),
                ("omega", "0"),
                ("nmax", "20"),
                ("orders", "0,2,4,6"),
                ("sweep", "0:0.01:101"),
            ]),
        ),
        Scenario::SidebandSweep => (
            &["fig2d", "fig2e"],
            "squeezing level and angle against the sideband frequency",
            &[
                "xi",
                "ti",
                "gouy_over_2pi",
                "order",
                "omega",
                "squeezing_db",
                "antisqueezing_db",
                "theta",
            ],
            params(&[
                ("xi", "1/81"),
                ("ti", "0.1"),
                ("tl", "0"),
                ("g00", "0.5"),
                ("gouy", "0.002,0.006"),
                ("nmax", "20"),
                ("orders", "0,2,4,6"),
                ("sweep", "0:3:301"),
            ]),
        ),
        Scenario::MismatchSweep => (
            &["fig4a", "fig4b"],
            "target-mode squeezing against the mismatch parameter",
            &[
                "gouy_over_2pi",
                "parameter",
                "beta00_sq",
                "multimode_db",
                "single_mode_db",
                "infinite_db",
            ],
            params(&MISMATCH_DEFAULTS),
        ),
        Scenario::LossSweep => (
            &["fig5"],
            "target-mode squeezing under extra loss",
            &[
                "eta_extra",
                "gouy_over_2pi",
                "parameter",
                "multimode_db",
                "single_mode_db",
                "infinite_db",
            ],
            {
                let mut p = params(&MISMATCH_DEFAULTS);
                p.iter_mut()
                    .find(|p| p.key == "gouy")
                    .expect("gouy")
                    .default = "0";
                p.extend(params(&[("eta-extra", "1,0.95,0.9")]));
                p
            },
        ),
        Scenario::WaistMismatch => (
            &["fig6a", "fig6b"],
            "robustness when the gain eigenmodes and cavity modes differ in waist",
            &[
                "gouy_over_2pi",
                "parameter",
                "waist_mismatch_db",
                "matched_db",
                "single_mode_db",
                "infinite_db",
            ],
            {
                let mut p = params(&MISMATCH_DEFAULTS);
                p.iter_mut()
                    .find(|p| p.key == "gouy")
                    .expect("gouy")
                    .default = "0,0.002 (size: 0,0.001)";
                p.extend(params(&[
                    ("waist-ratio", "1.4"),
                    ("normalization", "eigenvalue"),
                ]));
                p
            },
        ),
        Scenario::SincCompare => (
            &["fig6c", "fig6d"],
            "exact sinc phase-matching kernel against its Gaussian approximation",
            &[
                "gouy_over_2pi",
                "parameter",
                "sinc_db",
                "gaussian_db",
                "single_mode_db",
                "infinite_db",
            ],
            {
                let mut p = params(&MISMATCH_DEFAULTS);
                p.iter_mut()
                    .find(|p| p.key == "gouy")
                    .expect("gouy")
                    .default = "0,0.002 (size: 0,0.001)";
                p.extend(params(&[("alpha", "fit"), ("normalization", "eigenvalue")]));
                p
            },
        ),
        Scenario::GouyMap => (
            &["fig8"],
            "enhancement factor over the two cavity detunings at 50% mismatch",
            &[
                "dl1_over_r",
                "dl2_over_r",
                "stable",
                "gouy_over_2pi",
                "enhancement_disp_db",
                "enhancement_size_db",
            ],
            params(&[
                ("xi", "1/81"),
                ("ti", "0.1"),
                ("tl", "0"),
                ("g00", "0.5"),
                ("omega", "pi/25"),
                ("nmax", "20"),
                ("sweep", "-0.04:0.04:81"),
            ]),
        ),
    };
    ScenarioSchema {
        name: scenario.name(),
        figures: figures.to_vec(),
        description,
        columns: columns.to_vec(),
        parameters,
    }
}

/// Schemas of all scenarios.
pub fn list_scenarios() -> Vec<ScenarioSchema> {
    Scenario::ALL.iter().map(|&s| schema(s)).collect()
}

/// Sentinel written in the `stable` column of unstable gouy-map cells.
pub const UNSTABLE: &str = "unstable";

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(usize),
    Text(&'static str),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Real(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Real(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => (*s).to_string(),
            Cell::Empty => String::new(),
        }
    }
}

/// Tabular result of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of a column; non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[i].as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let map = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(map)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(map)?;
        }
        w.into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Dataset plus manifest of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dataset: Dataset,
    pub manifest: Vec<(String, String)>,
}

impl RunOutput {
    pub fn manifest_text(&self) -> String {
        self.manifest
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Runs a scenario. With `cfg.convergence` the scenario is repeated at
/// `nmax + 5` and a `drift_db` column holds the largest dB change per row.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let (mut dataset, derived) = runners::run_once(cfg)?;
    let mut manifest = vec![("version".to_string(), env!("CARGO_PKG_VERSION").to_string())];
    manifest.extend(cfg.describe());
    manifest.push(("figures".into(), schema(cfg.scenario).figures.join(",")));
    manifest.extend(derived);
    if cfg.convergence {
        let finer = ScenarioConfig {
            nmax: cfg.nmax + 5,
            ..cfg.clone()
        };
        let (reference, _) = runners::run_once(&finer)?;
        let db_cols: Vec<usize> = dataset
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.ends_with("_db"))
            .map(|(i, _)| i)
            .collect();
        // rows pair up through their input columns; the finer run may have more rows
        let key_cols: Vec<usize> = dataset
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.ends_with("_db") && **c != "theta")
            .map(|(i, _)| i)
            .collect();
        let key = |row: &[Cell]| {
            key_cols
                .iter()
                .map(|&i| row[i].render())
                .collect::<Vec<_>>()
        };
        let finer_rows: std::collections::HashMap<_, _> =
            reference.rows.iter().map(|r| (key(r), r)).collect();
        let mut worst: f64 = 0.0;
        for row in dataset.rows.iter_mut() {
            let other = finer_rows.get(&key(row)).ok_or_else(|| {
                Error::Config(format!(
                    "convergence run has no row matching {:?}",
                    key(row)
                ))
            })?;
            let drift = db_cols
                .iter()
                .filter_map(|&i| Some((row[i].as_f64()?, other[i].as_f64()?)))
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(drift);
            row.push(Cell::Real(drift));
        }
        dataset.columns.push("drift_db");
        manifest.push(("convergence_nmax".into(), finer.nmax.to_string()));
        manifest.push(("convergence_max_drift_db".into(), worst.to_string()));
    }
    manifest.push(("rows".into(), dataset.rows.len().to_string()));
    Ok(RunOutput { dataset, manifest })
}

/// Path of the manifest written next to a CSV file.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest")
}

/// Writes the CSV to `path` and the manifest next to it. Returns the
/// manifest path.
pub fn write_outputs(out: &RunOutput, path: &Path) -> Result<PathBuf> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out.dataset.to_csv()?)?;
    let mpath = manifest_path(path);
    std::fs::write(&mpath, out.manifest_text())?;
    Ok(mpath)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_schemas_with_figures() {
        let all = list_scenarios();
        assert_eq!(all.len(), 8);
        for s in &all {
            assert!(!s.figures.is_empty());
            assert!(s.figures.iter().all(|f| f.starts_with("fig")), "{}", s.name);
            assert!(!s.columns.is_empty());
            for p in &s.parameters {
                assert!(ALL_KEYS.contains(&p.key), "{}", p.key);
                assert!(!p.description.is_empty());
            }
        }
    }

    #[test]
    fn csv_rendering() {
        let d = Dataset {
            columns: vec!["a", "b", "c"],
            rows: vec![
                vec![Cell::Real(0.1), Cell::Int(3), Cell::Text(UNSTABLE)],
                vec![Cell::Real(f64::INFINITY), Cell::Empty, Cell::Real(-2.5e-7)],
            ],
        };
        let text = String::from_utf8(d.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b,c\n0.1,3,unstable\ninf,,-0.00000025\n");
    }
}
