use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Experiment, MeasurementKind};
use super::protocols::{build_all, ProtocolSetup};
use super::report::{CellReport, ProtocolSummary, RunReport};
use super::Context;
use crate::controls::FilterBank;
use crate::error::{Error, Result};
use crate::estimator::{clip_negative, EstimationResult, Method};
use crate::metrics::{fidelity, mse};
use crate::noisesim::{chi_exact, chi_montecarlo_with, MeasurementSet, NoiseModel};
use crate::spectra::SpectralDensity;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Noise seed of repetition `rep` in the cell named `tag`: the repetition
/// seed `base + rep` mixed with a hash of the tag, so that cells draw
/// independent noise.
pub fn cell_seed(base: u64, rep: usize, tag: &str) -> u64 {
    splitmix(base.wrapping_add(rep as u64) ^ splitmix(fnv1a(tag)))
}

fn report(ctx: &Context, experiment: Experiment) -> Result<RunReport> {
    Ok(RunReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.to_string(),
        seed: ctx.cfg.seed,
        wall_clock_s: 0.0,
        config: ctx.cfg.echo.clone(),
        settings: serde_json::to_value(&ctx.cfg)?,
        notes: Vec::new(),
        protocols: Vec::new(),
        cells: Vec::new(),
        failures: 0,
        outputs: Vec::new(),
    })
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R], report: &mut RunReport) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    report.outputs.push(name.to_string());
    Ok(())
}

fn banks(ctx: &Context, setups: &[ProtocolSetup], report: &mut RunReport) -> Result<Vec<FilterBank>> {
    let mut out = Vec::with_capacity(setups.len());
    for setup in setups {
        let bank = FilterBank::build(setup.sequences.clone(), ctx.grid)?;
        report.notes.extend(setup.notes.iter().cloned());
        report.protocols.push(ProtocolSummary::new(setup, &bank));
        out.push(bank);
    }
    Ok(out)
}

fn measure(ctx: &Context, sd: &SpectralDensity, bank: &FilterBank, samples: usize, seed: u64) -> Result<MeasurementSet> {
    match ctx.cfg.measurement {
        MeasurementKind::Exact => chi_exact(sd, bank),
        MeasurementKind::Montecarlo => {
            let model = NoiseModel::new(sd.clone(), seed)?;
            chi_montecarlo_with(&model, bank, samples, ctx.integrator.as_ref())
        }
    }
}

struct Scored {
    raw: EstimationResult,
    fidelity: f64,
    mse: f64,
}

fn solve(ctx: &Context, method: usize, bank: &FilterBank, chi: &[f64], s_true: &[f64]) -> Result<Scored> {
    let est = &ctx.methods[method].1;
    let policy = if est.method() == Method::Nnls { &ctx.cfg.nnls_truncation } else { &ctx.cfg.truncation };
    let raw = est.estimate(bank, chi, policy)?;
    let scored = if ctx.cfg.clip && est.method() != Method::Nnls { clip_negative(raw.clone()) } else { raw.clone() };
    let fid = fidelity(s_true, &scored.spectrum_hat, &ctx.grid, ctx.cfg.fidelity)?;
    let err = mse(s_true, &scored.spectrum_hat, &ctx.grid)?;
    Ok(Scored { raw, fidelity: fid, mse: err })
}

fn method_label(ctx: &Context, method: usize) -> String {
    ctx.methods[method].1.method().to_string()
}

type Outcome = Result<(f64, f64, usize), String>;

fn record(cell: &mut CellReport, outcome: &Outcome) -> bool {
    match outcome {
        Ok((f, m, rank)) => {
            cell.fidelity.push(*f);
            cell.mse.push(*m);
            cell.effective_rank = Some(*rank);
            false
        }
        Err(e) => {
            cell.errors.push(e.clone());
            true
        }
    }
}

pub(crate) fn design(ctx: &Context, dir: &Path) -> Result<RunReport> {
    let mut rep = report(ctx, Experiment::Design)?;
    let setups = build_all(&ctx.cfg)?;
    let single = setups.len() == 1;
    for setup in &setups {
        let design = setup
            .design
            .as_ref()
            .ok_or_else(|| Error::config(format!("design needs bod protocols, got {}", setup.label)))?;
        let rows = design.rows();
        let name = if single { "design.csv".to_string() } else { format!("design_{}.csv", setup.slug()) };
        write_csv(dir, &name, &rows, &mut rep)?;
        rep.notes.extend(setup.notes.iter().cloned());
    }
    Ok(rep)
}

#[derive(Serialize)]
struct ScanRow {
    nu_rad_s: f64,
    fidelity: f64,
    mse: f64,
    method: String,
    protocol: String,
}

pub(crate) fn scan(ctx: &Context, dir: &Path) -> Result<RunReport> {
    let cfg = &ctx.cfg;
    let mut rep = report(ctx, Experiment::Scan)?;
    let setups = build_all(cfg)?;
    let banks = banks(ctx, &setups, &mut rep)?;
    let centers = cfg.scan_centers();
    let sigma = crate::spectra::khz(cfg.scan_sigma_khz);
    let mut rows = Vec::new();
    for (setup, bank) in setups.iter().zip(&banks) {
        let tag = format!("scan/{}", setup.label);
        let outcomes: Vec<Vec<Outcome>> = centers
            .par_iter()
            .enumerate()
            .map(|(i, &nu)| {
                let attempt = || -> Result<Vec<Outcome>> {
                    let sd = SpectralDensity::single_gaussian(cfg.scan_power, nu, sigma)?;
                    let s_true = sd.sample(&ctx.grid);
                    let chi = measure(ctx, &sd, bank, cfg.samples[0], cell_seed(cfg.seed, i, &tag))?.chi;
                    Ok((0..ctx.methods.len())
                        .map(|m| {
                            solve(ctx, m, bank, &chi, &s_true)
                                .map(|s| (s.fidelity, s.mse, s.raw.effective_rank))
                                .map_err(|e| e.to_string())
                        })
                        .collect())
                };
                attempt().unwrap_or_else(|e| vec![Err(e.to_string()); ctx.methods.len()])
            })
            .collect();
        for (&nu, per_method) in centers.iter().zip(&outcomes) {
            for (m, outcome) in per_method.iter().enumerate() {
                let mut cell = CellReport::new(&setup.label, &method_label(ctx, m), bank.len());
                cell.nu_rad_s = Some(nu);
                if cfg.measurement == MeasurementKind::Montecarlo {
                    cell.samples = Some(cfg.samples[0]);
                }
                if record(&mut cell, outcome) {
                    rep.failures += 1;
                }
                let (fidelity, mse) = outcome.as_ref().map(|o| (o.0, o.1)).unwrap_or((f64::NAN, f64::NAN));
                rows.push(ScanRow {
                    nu_rad_s: nu,
                    fidelity,
                    mse,
                    method: method_label(ctx, m),
                    protocol: setup.label.clone(),
                });
                rep.cells.push(cell.finish());
            }
        }
    }
    write_csv(dir, "scan.csv", &rows, &mut rep)?;
    Ok(rep)
}

#[derive(Serialize)]
struct SpectrumRow {
    omega_rad_s: f64,
    s_true: f64,
    s_hat: f64,
}

pub(crate) fn reconstruct(ctx: &Context, dir: &Path) -> Result<RunReport> {
    let cfg = &ctx.cfg;
    let mut rep = report(ctx, Experiment::Reconstruct)?;
    rep.notes.push(format!("spectrum: {}", cfg.spectrum_label));
    let setups = build_all(cfg)?;
    let banks = banks(ctx, &setups, &mut rep)?;
    let s_true = cfg.spectrum.sample(&ctx.grid);
    let samples = cfg.samples[0];
    let plot_max = crate::spectra::khz(cfg.plot_omega_max_khz);
    for (setup, bank) in setups.iter().zip(&banks) {
        let tag = format!("reconstruct/{}", setup.label);
        let runs: Vec<Result<(MeasurementSet, Vec<Result<Scored>>)>> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|r| {
                let ms = measure(ctx, &cfg.spectrum, bank, samples, cell_seed(cfg.seed, r, &tag))?;
                let solved = (0..ctx.methods.len()).map(|m| solve(ctx, m, bank, &ms.chi, &s_true)).collect();
                Ok((ms, solved))
            })
            .collect();
        let mut cells: Vec<CellReport> = (0..ctx.methods.len())
            .map(|m| {
                let mut c = CellReport::new(&setup.label, &method_label(ctx, m), bank.len());
                if cfg.measurement == MeasurementKind::Montecarlo {
                    c.samples = Some(samples);
                }
                c
            })
            .collect();
        for (r, run) in runs.into_iter().enumerate() {
            let (ms, solved) = match run {
                Ok(v) => v,
                Err(e) => {
                    // the measurement itself failed: numerical failure for every method
                    if r == 0 {
                        return Err(e);
                    }
                    for c in &mut cells {
                        c.errors.push(e.to_string());
                        rep.failures += 1;
                    }
                    continue;
                }
            };
            if r == 0 {
                let name = format!("measurements_{}.json", setup.slug());
                std::fs::write(dir.join(&name), ms.to_json()?)?;
                rep.outputs.push(name);
            }
            for (m, outcome) in solved.into_iter().enumerate() {
                match outcome {
                    Ok(s) => {
                        if r == 0 {
                            let rows: Vec<SpectrumRow> = (0..ctx.grid.len())
                                .map(|k| SpectrumRow {
                                    omega_rad_s: ctx.grid.omega(k),
                                    s_true: s_true[k],
                                    s_hat: s.raw.spectrum_hat[k],
                                })
                                .filter(|row| row.omega_rad_s <= plot_max)
                                .collect();
                            let name = format!("reconstruct_{}_{}.csv", setup.slug(), ctx.methods[m].0);
                            write_csv(dir, &name, &rows, &mut rep)?;
                        }
                        cells[m].fidelity.push(s.fidelity);
                        cells[m].mse.push(s.mse);
                        cells[m].effective_rank = Some(s.raw.effective_rank);
                    }
                    Err(e) => {
                        if r == 0 {
                            return Err(e);
                        }
                        cells[m].errors.push(e.to_string());
                        rep.failures += 1;
                    }
                }
            }
        }
        rep.cells.extend(cells.into_iter().map(CellReport::finish));
    }
    Ok(rep)
}

#[derive(Serialize)]
struct TableRow {
    protocol: String,
    #[serde(rename = "N")]
    n: usize,
    samples: usize,
    method: String,
    fidelity_mean: f64,
    fidelity_std: f64,
}

pub(crate) fn table(ctx: &Context, dir: &Path) -> Result<RunReport> {
    let cfg = &ctx.cfg;
    let mut rep = report(ctx, Experiment::Table)?;
    rep.notes.push(format!("spectrum: {}", cfg.spectrum_label));
    let setups = build_all(cfg)?;
    let banks = banks(ctx, &setups, &mut rep)?;
    let s_true = cfg.spectrum.sample(&ctx.grid);
    let mut rows = Vec::new();
    for (setup, bank) in setups.iter().zip(&banks) {
        for &samples in &cfg.samples {
            let tag = format!("table/{}/{samples}", setup.label);
            let outcomes: Vec<Vec<Outcome>> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|r| match measure(ctx, &cfg.spectrum, bank, samples, cell_seed(cfg.seed, r, &tag)) {
                    Ok(ms) => (0..ctx.methods.len())
                        .map(|m| {
                            solve(ctx, m, bank, &ms.chi, &s_true)
                                .map(|s| (s.fidelity, s.mse, s.raw.effective_rank))
                                .map_err(|e| e.to_string())
                        })
                        .collect(),
                    Err(e) => vec![Err(e.to_string()); ctx.methods.len()],
                })
                .collect();
            for m in 0..ctx.methods.len() {
                let mut cell = CellReport::new(&setup.label, &method_label(ctx, m), bank.len());
                cell.samples = Some(samples);
                for per_rep in &outcomes {
                    if record(&mut cell, &per_rep[m]) {
                        rep.failures += 1;
                    }
                }
                let cell = cell.finish();
                rows.push(TableRow {
                    protocol: setup.label.clone(),
                    n: bank.len(),
                    samples,
                    method: cell.method.clone(),
                    fidelity_mean: cell.fidelity_mean,
                    fidelity_std: cell.fidelity_std,
                });
                rep.cells.push(cell);
            }
        }
    }
    write_csv(dir, "table.csv", &rows, &mut rep)?;
    Ok(rep)
}
