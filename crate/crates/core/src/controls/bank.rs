use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{filter_function_numeric, ControlSequence};
use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::spectra::{inner_product, FrequencyGrid};

/// Minimum number of grid samples across a main lobe `4π/(Mτ)`.
const MIN_SAMPLES_PER_PEAK: f64 = 8.0;

/// Filter functions of a set of controls sampled on one grid, plus their
/// Gramian `G_nm = ∫ F_n F_m dω` (two-sided).
#[derive(Debug, Clone)]
pub struct FilterBank {
    grid: FrequencyGrid,
    sequences: Vec<ControlSequence>,
    filters: Vec<Vec<f64>>,
    weights: Vec<f64>,
    gramian: DMatrix<f64>,
    eigen: SymmetricEigen,
}

impl FilterBank {
    pub fn build(sequences: Vec<ControlSequence>, grid: FrequencyGrid) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::invalid("filter bank needs at least one control sequence"));
        }
        for seq in &sequences {
            let width = seq.main_peak_width();
            let per_peak = width / grid.delta_omega();
            if per_peak < MIN_SAMPLES_PER_PEAK {
                return Err(Error::GridTooCoarse(format!(
                    "{:.2} samples across main lobe of tau = {:e} s (need {MIN_SAMPLES_PER_PEAK}); \
                     lower delta_omega below {:e}",
                    per_peak,
                    seq.tau(),
                    width / MIN_SAMPLES_PER_PEAK
                )));
            }
            // second null above the main peak: π/τ + 4π/(Mτ)
            let needed = PI / seq.tau() + width;
            if grid.last() < needed {
                return Err(Error::GridTooCoarse(format!(
                    "grid ends at {:e} rad/s but tau = {:e} s needs coverage to {:e}",
                    grid.last(),
                    seq.tau(),
                    needed
                )));
            }
        }
        let filters: Vec<Vec<f64>> = sequences
            .par_iter()
            .map(|s| filter_function_numeric(s, &grid))
            .collect();
        Self::assemble(sequences, filters, grid)
    }

    fn assemble(sequences: Vec<ControlSequence>, filters: Vec<Vec<f64>>, grid: FrequencyGrid) -> Result<Self> {
        let weights = grid.weights(true);
        let n = filters.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let values: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| inner_product(&filters[i], &filters[j], &weights))
            .collect();
        let mut gramian = DMatrix::zeros(n, n);
        for (&(i, j), v) in pairs.iter().zip(values) {
            gramian[(i, j)] = v;
            gramian[(j, i)] = v;
        }
        let eigen = SymmetricEigen::new(&gramian)?;
        Ok(Self { grid, sequences, filters, weights, gramian, eigen })
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn sequences(&self) -> &[ControlSequence] {
        &self.sequences
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn filter(&self, n: usize) -> &[f64] {
        &self.filters[n]
    }

    /// Two-sided trapezoid weights of the grid.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gramian(&self) -> &DMatrix<f64> {
        &self.gramian
    }

    /// Eigendecomposition of the Gramian, descending.
    pub fn eigen(&self) -> &SymmetricEigen {
        &self.eigen
    }

    /// `Σ_n a_n F_n(ω_k)` on the grid.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (a, f) in coefficients.iter().zip(&self.filters) {
            if *a == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(f) {
                *o += a * v;
            }
        }
        out
    }

    /// Two-sided overlaps `∫ S F_n dω` of sampled values with every filter.
    pub fn overlaps(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), actual: samples.len() });
        }
        Ok(self.filters.iter().map(|f| inner_product(f, samples, &self.weights)).collect())
    }
}
