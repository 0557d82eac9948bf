use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, ProtocolSpec};
use crate::controls::{design_bod, design_bod_with_count, BodDesign, ControlSequence, Protocol};
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Control sequences for one protocol entry of a config.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolSetup {
    pub label: String,
    #[serde(skip)]
    pub sequences: Vec<ControlSequence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<BodDesign>,
    /// Filter count produced by the harmonic stopping rule, when it applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopping_rule_count: Option<usize>,
    pub notes: Vec<String>,
}

impl ProtocolSetup {
    /// File-name friendly form of the label.
    pub fn slug(&self) -> String {
        slug(&self.label)
    }
}

pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

pub trait ProtocolFactory: Send + Sync {
    fn name(&self) -> &'static str;

    fn build(&self, spec: &ProtocolSpec, cfg: &ExperimentConfig) -> Result<ProtocolSetup>;
}

/// `count` durations linearly spaced over `[tau_min, tau_max]`, inclusive.
pub struct LinearFamily(pub Protocol);

impl ProtocolFactory for LinearFamily {
    fn name(&self) -> &'static str {
        match self.0 {
            Protocol::Pdd => "pdd",
            Protocol::Cp => "cp",
        }
    }

    fn build(&self, spec: &ProtocolSpec, cfg: &ExperimentConfig) -> Result<ProtocolSetup> {
        spec.check_params(&["count", "tau_min_us", "tau_max_us", "flips", "label"])?;
        let count: usize = spec.param("count")?.unwrap_or(cfg.count);
        let lo: f64 = spec.param("tau_min_us")?.unwrap_or(cfg.tau_min_us) / 1e6;
        let hi: f64 = spec.param("tau_max_us")?.unwrap_or(cfg.tau_max_us) / 1e6;
        let flips: usize = spec.param("flips")?.unwrap_or(cfg.flips);
        if count == 0 || !(lo > 0.0 && hi >= lo) {
            return Err(Error::config(format!("{spec}: need count >= 1 and 0 < tau_min <= tau_max")));
        }
        let sequences = (0..count)
            .map(|i| {
                let tau = if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
                ControlSequence::new(self.0, tau, flips, 1.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProtocolSetup {
            label: spec.params.get("label").cloned().unwrap_or_else(|| self.0.to_string()),
            sequences,
            design: None,
            stopping_rule_count: None,
            notes: Vec::new(),
        })
    }
}

/// Bandwidth-overlap design of PDD durations.
pub struct BandOverlap;

impl ProtocolFactory for BandOverlap {
    fn name(&self) -> &'static str {
        "bod"
    }

    fn build(&self, spec: &ProtocolSpec, cfg: &ExperimentConfig) -> Result<ProtocolSetup> {
        spec.check_params(&["cap", "eps", "n", "tau1_us", "flips", "equalize", "label"])?;
        let cap: u32 = spec.param("cap")?.unwrap_or(cfg.bod_cap);
        let eps: f64 = spec.param("eps")?.unwrap_or(cfg.bod_eps);
        let tau1: f64 = spec.param::<f64>("tau1_us")?.unwrap_or(cfg.bod_tau1_us) / 1e6;
        let flips: usize = spec.param("flips")?.unwrap_or(cfg.flips);
        let equalize: bool = spec.param("equalize")?.unwrap_or(cfg.bod_equalize);
        let explicit: Option<usize> = spec.param("n")?;

        let capped = design_bod(tau1, eps, flips, cap).map_err(|e| Error::config(format!("{spec}: {e}")))?;
        let mut notes = Vec::new();
        let design = match explicit {
            None => capped.clone(),
            Some(n) if n == capped.len() => capped.clone(),
            Some(n) => {
                let msg = format!(
                    "{spec}: harmonic stopping rule yields {} filters, config requests {n}",
                    capped.len()
                );
                if cfg.strict_counts {
                    return Err(Error::config(msg));
                }
                notes.push(format!("{msg}; using the first {n} terms of the recursion"));
                design_bod_with_count(tau1, eps, flips, n).map_err(|e| Error::config(format!("{spec}: {e}")))?
            }
        };
        let label = match spec.params.get("label") {
            Some(l) => l.clone(),
            None if spec.params.contains_key("eps") => format!("BOD{cap}(eps={eps})"),
            None => format!("BOD({cap})"),
        };
        Ok(ProtocolSetup {
            label,
            sequences: design.sequences(1.0, equalize)?,
            stopping_rule_count: Some(capped.len()),
            design: Some(design),
            notes,
        })
    }
}

pub fn default_protocols() -> Registry<dyn ProtocolFactory> {
    let mut reg: Registry<dyn ProtocolFactory> = Registry::new("protocol");
    reg.register("pdd", Arc::new(LinearFamily(Protocol::Pdd)));
    reg.register("cp", Arc::new(LinearFamily(Protocol::Cp)));
    reg.register("bod", Arc::new(BandOverlap));
    reg
}

pub fn build_all(cfg: &ExperimentConfig) -> Result<Vec<ProtocolSetup>> {
    let reg = default_protocols();
    let setups = cfg
        .protocols
        .iter()
        .map(|spec| reg.get(&spec.name)?.build(spec, cfg))
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in setups.iter().enumerate() {
        if setups[..i].iter().any(|b| b.slug() == a.slug()) {
            return Err(Error::config(format!("duplicate protocol label {:?}; set label=...", a.label)));
        }
    }
    Ok(setups)
}
