//! Config-driven drivers for the design table, the frequency scan, the
//! two-Gaussian reconstruction and the repeated-trial fidelity table.

pub mod config;
mod experiments;
mod plot;
pub mod protocols;
pub mod report;

pub use config::{Experiment, ExperimentConfig, MeasurementKind};
pub use experiments::cell_seed;
pub use report::RunReport;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::estimator::{default_estimators, Estimator};
use crate::noisesim::{default_integrators, Integrator, TrapezoidIntegrator};
use crate::spectra::FrequencyGrid;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Forces exact overlaps regardless of the config.
    pub exact_chi: bool,
    pub plot_script: bool,
}

/// Resolved strategies shared by every experiment.
pub(crate) struct Context {
    pub cfg: ExperimentConfig,
    pub grid: FrequencyGrid,
    pub methods: Vec<(String, Arc<dyn Estimator>)>,
    pub integrator: Arc<dyn Integrator>,
}

impl Context {
    fn new(cfg: ExperimentConfig) -> Result<Self> {
        let grid = FrequencyGrid::new(cfg.omega_max, cfg.delta_omega).map_err(|e| Error::config(e.to_string()))?;
        let estimators = default_estimators();
        let mut names = cfg.methods.clone();
        if cfg.experiment == Experiment::Reconstruct && cfg.pinv_baseline && !names.iter().any(|m| m == "pinv") {
            names.push("pinv".into());
        }
        let methods = names
            .iter()
            .map(|m| Ok((m.clone(), estimators.get(m)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut integrators = default_integrators();
        integrators.register("trapezoid", Arc::new(TrapezoidIntegrator { dt: cfg.dt }));
        let integrator = integrators.get(&cfg.integrator)?;
        Ok(Self { cfg, grid, methods, integrator })
    }
}

pub fn run(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.exact_chi {
        cfg.measurement = MeasurementKind::Exact;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let experiment = cfg.experiment;
    let ctx = Context::new(cfg)?;
    let mut report = match experiment {
        Experiment::Design => experiments::design(&ctx, &opts.out_dir)?,
        Experiment::Scan => experiments::scan(&ctx, &opts.out_dir)?,
        Experiment::Reconstruct => experiments::reconstruct(&ctx, &opts.out_dir)?,
        Experiment::Table => experiments::table(&ctx, &opts.out_dir)?,
    };
    if opts.plot_script {
        let name = format!("plot_{experiment}.py");
        std::fs::write(opts.out_dir.join(&name), plot::script(experiment, &report.outputs))?;
        report.outputs.push(name);
    }
    report.wall_clock_s = start.elapsed().as_secs_f64();
    report.outputs.push("report.json".into());
    report.write(&opts.out_dir.join("report.json"))?;
    Ok(report)
}
