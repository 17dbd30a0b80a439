use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{schema, Cell, Dataset, Scenario, ScenarioConfig, UNSTABLE};
use crate::error::Result;
use crate::mismatch::{
    coupling_vector, enhancement_factor, target_variance, MismatchKind, MismatchSpec, Plane,
};
use crate::modes::{ModeBasis, ModeIndex};
use crate::opo::{apply_loss, covariance, gouy_phase, to_db, OpoConfig, QuadratureCovariance};
use crate::pdc::{
    fit_alpha, fit_pump_waist, gaussian_gain, kernel_schmidt_number, mu_from_xi, schmidt_number,
    sinc_gain, waist_mismatched_gain, GainMatrix, SincKernelParams,
};

type Derived = Vec<(String, String)>;

pub(super) fn run_once(cfg: &ScenarioConfig) -> Result<(Dataset, Derived)> {
    let columns = schema(cfg.scenario).columns;
    let (rows, derived) = match cfg.scenario {
        Scenario::ModeSpectrum => mode_spectrum(cfg)?,
        Scenario::GouySweep => gouy_sweep(cfg)?,
        Scenario::SidebandSweep => sideband_sweep(cfg)?,
        Scenario::MismatchSweep => mismatch_sweep(cfg)?,
        Scenario::LossSweep => loss_sweep(cfg)?,
        Scenario::WaistMismatch => waist_mismatch(cfg)?,
        Scenario::SincCompare => sinc_compare(cfg)?,
        Scenario::GouyMap => gouy_map(cfg)?,
    };
    Ok((Dataset { columns, rows }, derived))
}

fn sweep_values(cfg: &ScenarioConfig) -> Vec<f64> {
    cfg.sweep.map(|s| s.values()).unwrap_or_default()
}

fn gaussian_opo(cfg: &ScenarioConfig, xi: f64, ti: f64, gouy_over_2pi: f64) -> Result<OpoConfig> {
    let gain = gaussian_gain(cfg.g00, xi, &ModeBasis::new(cfg.nmax))?;
    OpoConfig::new(ti, cfg.tl, 2.0 * PI * gouy_over_2pi, gain)
}

/// Reference source: the same gain on HG00 only.
fn single_mode_covariance(cfg: &ScenarioConfig) -> Result<QuadratureCovariance> {
    let basis = ModeBasis::new(cfg.nmax);
    let mut entries = DMatrix::zeros(basis.len(), basis.len());
    entries[(0, 0)] = cfg.g00;
    let gain = GainMatrix::from_entries(basis, entries, cfg.g00)?;
    covariance(&OpoConfig::new(cfg.ti[0], cfg.tl, 0.0, gain)?, cfg.omega)
}

fn mu_derived(cfg: &ScenarioConfig) -> Result<Derived> {
    let mut d = Vec::new();
    for &xi in &cfg.xi {
        d.push((format!("mu[xi={xi}]"), mu_from_xi(xi)?.to_string()));
        d.push((
            format!("schmidt_number[xi={xi}]"),
            schmidt_number(xi)?.to_string(),
        ));
    }
    Ok(d)
}

fn mode_spectrum(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let mut rows = Vec::new();
    for &xi in &cfg.xi {
        let mu = mu_from_xi(xi)?;
        for &ti in &cfg.ti {
            for &g in &cfg.gouy {
                let v = covariance(&gaussian_opo(cfg, xi, ti, g)?, cfg.omega)?;
                for order in 0..=cfg.nmax {
                    let i = v
                        .basis()
                        .index_of(ModeIndex::new(order, 0))
                        .expect("mode in basis");
                    let s = v.mode_squeezing(i);
                    rows.push(vec![
                        Cell::Real(xi),
                        Cell::Real(ti),
                        Cell::Real(g),
                        Cell::Int(order),
                        Cell::Real(cfg.g00 * mu.powi(order as i32)),
                        Cell::Real(to_db(s.s_x)),
                        Cell::Real(to_db(s.s_p)),
                        Cell::Real(s.theta),
                    ]);
                }
            }
        }
    }
    Ok((rows, mu_derived(cfg)?))
}

fn order_rows(v: &QuadratureCovariance, orders: &[usize]) -> Vec<(usize, [f64; 3])> {
    orders
        .iter()
        .map(|&order| {
            let i = v
                .basis()
                .index_of(ModeIndex::new(order, 0))
                .expect("mode in basis");
            let s = v.mode_squeezing(i);
            (order, [to_db(s.s_x), to_db(s.s_p), s.theta])
        })
        .collect()
}

fn gouy_sweep(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let gs = sweep_values(cfg);
    let mut rows = Vec::new();
    for &xi in &cfg.xi {
        for &ti in &cfg.ti {
            let points = gs
                .par_iter()
                .map(|&g| {
                    Ok(order_rows(
                        &covariance(&gaussian_opo(cfg, xi, ti, g)?, cfg.omega)?,
                        &cfg.orders,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            for (k, &order) in cfg.orders.iter().enumerate() {
                for (&g, p) in gs.iter().zip(&points) {
                    let [sq, asq, theta] = p[k].1;
                    rows.push(vec![
                        Cell::Real(xi),
                        Cell::Real(ti),
                        Cell::Int(order),
                        Cell::Real(g),
                        Cell::Real(sq),
                        Cell::Real(asq),
                        Cell::Real(theta),
                    ]);
                }
            }
        }
    }
    Ok((rows, mu_derived(cfg)?))
}

fn sideband_sweep(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let ws = sweep_values(cfg);
    let mut rows = Vec::new();
    for &xi in &cfg.xi {
        for &ti in &cfg.ti {
            for &g in &cfg.gouy {
                let opo = gaussian_opo(cfg, xi, ti, g)?;
                let points = ws
                    .par_iter()
                    .map(|&w| Ok(order_rows(&covariance(&opo, w)?, &cfg.orders)))
                    .collect::<Result<Vec<_>>>()?;
                for (k, &order) in cfg.orders.iter().enumerate() {
                    for (&w, p) in ws.iter().zip(&points) {
                        let [sq, asq, theta] = p[k].1;
                        rows.push(vec![
                            Cell::Real(xi),
                            Cell::Real(ti),
                            Cell::Real(g),
                            Cell::Int(order),
                            Cell::Real(w),
                            Cell::Real(sq),
                            Cell::Real(asq),
                            Cell::Real(theta),
                        ]);
                    }
                }
            }
        }
    }
    Ok((rows, mu_derived(cfg)?))
}

fn spec(cfg: &ScenarioConfig, parameter: f64) -> Result<MismatchSpec> {
    Ok(MismatchSpec::new(cfg.kind, parameter, cfg.plane)?.with_lo_phase(cfg.lo_phase))
}

/// Target variances of each covariance in `vs` plus the single-mode and
/// infinite-squeezing references, for every sweep point.
struct TargetRow {
    parameter: f64,
    beta00_sq: f64,
    multi: Vec<f64>,
    single: f64,
    infinite: f64,
}

fn target_rows(
    cfg: &ScenarioConfig,
    vs: &[QuadratureCovariance],
    single: &QuadratureCovariance,
) -> Result<Vec<TargetRow>> {
    let basis = ModeBasis::new(cfg.nmax);
    sweep_values(cfg)
        .par_iter()
        .map(|&p| {
            let c = coupling_vector(&spec(cfg, p)?, &basis);
            let beta00_sq = c.fundamental_weight();
            Ok(TargetRow {
                parameter: p,
                beta00_sq,
                multi: vs
                    .iter()
                    .map(|v| target_variance(v, &c))
                    .collect::<Result<_>>()?,
                single: target_variance(single, &c)?,
                infinite: 1.0 - beta00_sq,
            })
        })
        .collect()
}

fn gaussian_covariances(cfg: &ScenarioConfig) -> Result<Vec<QuadratureCovariance>> {
    cfg.gouy
        .par_iter()
        .map(|&g| covariance(&gaussian_opo(cfg, cfg.xi[0], cfg.ti[0], g)?, cfg.omega))
        .collect()
}

fn mismatch_sweep(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let vs = gaussian_covariances(cfg)?;
    let table = target_rows(cfg, &vs, &single_mode_covariance(cfg)?)?;
    let mut rows = Vec::new();
    for (k, &g) in cfg.gouy.iter().enumerate() {
        for t in &table {
            rows.push(vec![
                Cell::Real(g),
                Cell::Real(t.parameter),
                Cell::Real(t.beta00_sq),
                Cell::Real(to_db(t.multi[k])),
                Cell::Real(to_db(t.single)),
                Cell::Real(to_db(t.infinite)),
            ]);
        }
    }
    Ok((rows, mu_derived(cfg)?))
}

fn loss_sweep(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let vs = gaussian_covariances(cfg)?;
    let single = single_mode_covariance(cfg)?;
    let mut rows = Vec::new();
    for &eta in &cfg.eta_extra {
        let lossy = vs
            .iter()
            .map(|v| apply_loss(v, eta))
            .collect::<Result<Vec<_>>>()?;
        let table = target_rows(cfg, &lossy, &apply_loss(&single, eta)?)?;
        for (k, &g) in cfg.gouy.iter().enumerate() {
            for t in &table {
                rows.push(vec![
                    Cell::Real(eta),
                    Cell::Real(g),
                    Cell::Real(t.parameter),
                    Cell::Real(to_db(t.multi[k])),
                    Cell::Real(to_db(t.single)),
                    Cell::Real(to_db(eta * t.infinite + 1.0 - eta)),
                ]);
            }
        }
    }
    Ok((rows, mu_derived(cfg)?))
}

/// Rows for scenarios comparing two gain matrices at every Gouy phase.
fn paired_rows(
    cfg: &ScenarioConfig,
    first: &GainMatrix,
    second: &GainMatrix,
) -> Result<Vec<Vec<Cell>>> {
    let pair = |gain: &GainMatrix| -> Result<Vec<QuadratureCovariance>> {
        cfg.gouy
            .par_iter()
            .map(|&g| {
                covariance(
                    &OpoConfig::new(cfg.ti[0], cfg.tl, 2.0 * PI * g, gain.clone())?,
                    cfg.omega,
                )
            })
            .collect()
    };
    let mut vs = pair(first)?;
    let n = vs.len();
    vs.extend(pair(second)?);
    let table = target_rows(cfg, &vs, &single_mode_covariance(cfg)?)?;
    let mut rows = Vec::new();
    for (k, &g) in cfg.gouy.iter().enumerate() {
        for t in &table {
            rows.push(vec![
                Cell::Real(g),
                Cell::Real(t.parameter),
                Cell::Real(to_db(t.multi[k])),
                Cell::Real(to_db(t.multi[n + k])),
                Cell::Real(to_db(t.single)),
                Cell::Real(to_db(t.infinite)),
            ]);
        }
    }
    Ok(rows)
}

fn waist_mismatch(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let basis = ModeBasis::new(cfg.nmax);
    let xi = cfg.xi[0];
    let mismatched =
        waist_mismatched_gain(cfg.g00, xi, 1.0, cfg.waist_ratio, &basis, cfg.normalization)?;
    let matched = gaussian_gain(cfg.g00, xi, &basis)?;
    let rows = paired_rows(cfg, &mismatched, &matched)?;
    let mut derived = mu_derived(cfg)?;
    derived.push((
        "gain_fundamental_entry".into(),
        mismatched.entries()[(0, 0)].to_string(),
    ));
    derived.push((
        "gain_schmidt_number".into(),
        mismatched.schmidt_number().to_string(),
    ));
    Ok((rows, derived))
}

fn sinc_compare(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let basis = ModeBasis::new(cfg.nmax);
    let xi = cfg.xi[0];
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => fit_alpha(xi)?,
    };
    let unit = SincKernelParams::new(xi, alpha, 1.0)?;
    let fit = fit_pump_waist(&unit, 1.0)?;
    let params = SincKernelParams {
        pump_waist: fit.pump_waist,
        ..unit
    };
    let sinc = sinc_gain(&params, 1.0, &basis, cfg.g00, cfg.normalization)?;
    let gaussian = gaussian_gain(cfg.g00, xi, &basis)?;
    let rows = paired_rows(cfg, &sinc, &gaussian)?;
    let mut derived = mu_derived(cfg)?;
    derived.push(("alpha".into(), alpha.to_string()));
    derived.push(("alpha_fitted".into(), cfg.alpha.is_none().to_string()));
    derived.push((
        "pump_waist_over_cavity_waist".into(),
        fit.pump_waist.to_string(),
    ));
    derived.push(("pump_fundamental_overlap".into(), fit.overlap.to_string()));
    derived.push((
        "sinc_kernel_schmidt_number".into(),
        kernel_schmidt_number(&params, 20)?.to_string(),
    ));
    derived.push((
        "gain_fundamental_entry".into(),
        sinc.entries()[(0, 0)].to_string(),
    ));
    Ok((rows, derived))
}

fn gouy_map(cfg: &ScenarioConfig) -> Result<(Vec<Vec<Cell>>, Derived)> {
    let basis = ModeBasis::new(cfg.nmax);
    let axis = sweep_values(cfg);
    let gain = gaussian_gain(cfg.g00, cfg.xi[0], &basis)?;
    let base = OpoConfig::new(cfg.ti[0], cfg.tl, 0.0, gain)?;
    let single = single_mode_covariance(cfg)?;
    let target = |kind: MismatchKind| -> Result<_> {
        let spec = MismatchSpec::new(kind, kind.half_overlap_parameter(), Plane::Image)?;
        let c = coupling_vector(&spec, &basis);
        let s = target_variance(&single, &c)?;
        Ok((c, s))
    };
    let disp = target(MismatchKind::Displacement)?;
    let size = target(MismatchKind::Size)?;
    let cells: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(a, b)| {
            let Some(theta) = gouy_phase(a, b) else {
                return Ok(vec![
                    Cell::Real(a),
                    Cell::Real(b),
                    Cell::Text(UNSTABLE),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
            };
            let v = covariance(&base.with_gouy(theta)?, cfg.omega)?;
            let f_disp = enhancement_factor(target_variance(&v, &disp.0)?, disp.1)?;
            let f_size = enhancement_factor(target_variance(&v, &size.0)?, size.1)?;
            Ok(vec![
                Cell::Real(a),
                Cell::Real(b),
                Cell::Text("stable"),
                Cell::Real(theta / (2.0 * PI)),
                Cell::Real(f_disp),
                Cell::Real(f_size),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut derived = mu_derived(cfg)?;
    derived.push((
        "disp_parameter".into(),
        MismatchKind::Displacement
            .half_overlap_parameter()
            .to_string(),
    ));
    derived.push((
        "size_parameter".into(),
        MismatchKind::Size.half_overlap_parameter().to_string(),
    ));
    Ok((rows, derived))
}
