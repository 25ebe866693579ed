//! Ensemble-averaged resonance spectra.
//!
//! Lines from many charge draws are broadened with a fixed-width profile,
//! accumulated on a frequency grid, and normalized to photoluminescence
//! contrast form S(nu) = 1 - C * A(nu)/max(A). Accumulation runs in fixed
//! batches whose results are folded in draw order, so the output is
//! bit-identical for any thread count.

use rayon::prelude::*;

use crate::bath::{field_at_origin, ChargeBath, ChargeConfiguration, Geometry};
use crate::error::{Error, Result};
use crate::spin::{block_transitions, DriveWeighting, HamiltonianParams, TransitionSet};
use crate::table::DataTable;

/// Line shape applied to every transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineProfile {
    #[default]
    Lorentzian,
    Gaussian,
}

impl LineProfile {
    pub fn name(&self) -> &'static str {
        match self {
            LineProfile::Lorentzian => "lorentzian",
            LineProfile::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lorentzian" => Ok(LineProfile::Lorentzian),
            "gaussian" => Ok(LineProfile::Gaussian),
            other => Err(Error::Config(format!(
                "unknown line profile '{other}' (expected 'lorentzian' or 'gaussian')"
            ))),
        }
    }
}

/// Broadening applied to each transition line; the width is a fixed model
/// parameter, not a fit output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadeningSpec {
    pub profile: LineProfile,
    pub fwhm_mhz: f64,
}

impl Default for BroadeningSpec {
    fn default() -> Self {
        Self { profile: LineProfile::Lorentzian, fwhm_mhz: 40.0 }
    }
}

impl BroadeningSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_mhz > 0.0) || !self.fwhm_mhz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fwhm_mhz must be positive, got {}",
                self.fwhm_mhz
            )));
        }
        Ok(())
    }

    /// Area-normalized profile value at `delta_mhz` from the line center.
    pub fn value(&self, delta_mhz: f64) -> f64 {
        let w = self.fwhm_mhz;
        match self.profile {
            LineProfile::Lorentzian => {
                let u = 2.0 * delta_mhz / w;
                2.0 / (std::f64::consts::PI * w) / (1.0 + u * u)
            }
            LineProfile::Gaussian => {
                let sigma = w / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
                let u = delta_mhz / sigma;
                (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }
}

/// Uniform frequency grid in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start_mhz: f64,
    pub step_mhz: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn from_range(min_mhz: f64, max_mhz: f64, step_mhz: f64) -> Result<Self> {
        if !(step_mhz > 0.0) || !min_mhz.is_finite() || !(max_mhz > min_mhz) {
            return Err(Error::InvalidParameter(format!(
                "bad frequency grid: min {min_mhz}, max {max_mhz}, step {step_mhz}"
            )));
        }
        let len = ((max_mhz - min_mhz) / step_mhz + 1e-9).floor() as usize + 1;
        Ok(Self { start_mhz: min_mhz, step_mhz, len })
    }

    /// Default acquisition window around the zero-field resonance.
    pub fn default_esr() -> Self {
        Self::from_range(3000.0, 3900.0, 1.0).expect("static grid")
    }

    pub fn value(&self, k: usize) -> f64 {
        self.start_mhz + self.step_mhz * k as f64
    }

    pub fn last(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.value(k)).collect()
    }
}

/// Provenance carried alongside computed spectra and written into table
/// headers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMeta {
    pub n_configs: usize,
    pub profile: LineProfile,
    pub fwhm_mhz: f64,
    pub contrast: f64,
    pub seed: Option<u64>,
    /// Transitions that fell more than 3 FWHM outside the grid, summed over
    /// all draws.
    pub lines_outside_grid: usize,
}

/// A normalized-photoluminescence spectrum on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies_mhz: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn new(frequencies_mhz: Vec<f64>, values: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        if frequencies_mhz.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "frequency and value lengths differ: {} vs {}",
                frequencies_mhz.len(),
                values.len()
            )));
        }
        if frequencies_mhz.len() < 2 {
            return Err(Error::InvalidParameter("spectrum needs at least 2 points".into()));
        }
        if frequencies_mhz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("frequency grid must be strictly ascending".into()));
        }
        Ok(Self { frequencies_mhz, values, meta })
    }

    pub fn len(&self) -> usize {
        self.frequencies_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_mhz.is_empty()
    }

    pub fn to_table(&self) -> DataTable {
        let mut metadata = vec![
            ("n_configs".to_string(), self.meta.n_configs.to_string()),
            ("profile".to_string(), self.meta.profile.name().to_string()),
            ("fwhm_mhz".to_string(), format!("{}", self.meta.fwhm_mhz)),
            ("contrast".to_string(), format!("{}", self.meta.contrast)),
        ];
        if let Some(seed) = self.meta.seed {
            metadata.push(("seed".to_string(), seed.to_string()));
        }
        metadata.push((
            "lines_outside_grid".to_string(),
            self.meta.lines_outside_grid.to_string(),
        ));
        DataTable {
            metadata,
            columns: vec!["frequency_mhz".to_string(), "normalized_pl".to_string()],
            rows: self
                .frequencies_mhz
                .iter()
                .zip(&self.values)
                .map(|(f, v)| vec![*f, *v])
                .collect(),
        }
    }

    /// Reads a spectrum from a table with `frequency_mhz` and `normalized_pl`
    /// columns. Header metadata is optional; absent fields get neutral
    /// defaults.
    pub fn from_table(table: &DataTable) -> Result<Self> {
        let freq = table.column("frequency_mhz")?;
        let vals = table.column("normalized_pl")?;
        let meta = SpectrumMeta {
            n_configs: table.metadata_value("n_configs").and_then(|s| s.parse().ok()).unwrap_or(0),
            profile: table
                .metadata_value("profile")
                .map(LineProfile::parse)
                .transpose()?
                .unwrap_or_default(),
            fwhm_mhz: table
                .metadata_value("fwhm_mhz")
                .and_then(|s| s.parse().ok())
                .unwrap_or(40.0),
            contrast: table.metadata_value("contrast").and_then(|s| s.parse().ok()).unwrap_or(0.0),
            seed: table.metadata_value("seed").and_then(|s| s.parse().ok()),
            lines_outside_grid: table
                .metadata_value("lines_outside_grid")
                .and_then(|s| s.parse().ok())
                .unwrap_or(0),
        };
        Self::new(freq, vals, meta)
    }
}

/// Sum of broadened lines evaluated on the grid, weighted by transition
/// weight.
pub fn convolve_lines(
    lines: &TransitionSet,
    broadening: &BroadeningSpec,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    broadening.validate()?;
    let mut acc = vec![0.0; grid.len];
    accumulate_lines(&mut acc, lines, broadening, grid);
    Ok(acc)
}

fn accumulate_lines(
    acc: &mut [f64],
    lines: &TransitionSet,
    broadening: &BroadeningSpec,
    grid: &FrequencyGrid,
) -> usize {
    let lo = grid.start_mhz - 3.0 * broadening.fwhm_mhz;
    let hi = grid.last() + 3.0 * broadening.fwhm_mhz;
    let mut outside = 0;
    for t in &lines.transitions {
        if t.frequency_mhz < lo || t.frequency_mhz > hi {
            outside += 1;
        }
        for (k, slot) in acc.iter_mut().enumerate() {
            *slot += t.weight * broadening.value(grid.value(k) - t.frequency_mhz);
        }
    }
    outside
}

const BATCH: usize = 64;

/// Monte-Carlo ensemble spectrum: `n_configs` charge draws, transition lines
/// per draw, broadened and averaged, then folded into contrast form
/// S = 1 - C * A/max(A).
///
/// Draw i depends only on (bath seed, i); batches are evaluated in parallel
/// but folded in index order, so results do not depend on thread count.
pub fn ensemble_spectrum(
    bath: &ChargeBath,
    spin: &HamiltonianParams,
    drive: DriveWeighting,
    broadening: &BroadeningSpec,
    n_configs: usize,
    grid: &FrequencyGrid,
    contrast: f64,
) -> Result<Spectrum> {
    spin.validate()?;
    broadening.validate()?;
    if n_configs == 0 {
        return Err(Error::InvalidParameter("n_configs must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&contrast) {
        return Err(Error::InvalidParameter(format!(
            "contrast must lie in [0, 1], got {contrast}"
        )));
    }

    let mut acc = vec![0.0; grid.len];
    let mut outside_total = 0usize;
    let mut start = 0usize;
    while start < n_configs {
        let end = (start + BATCH).min(n_configs);
        let batch: Result<Vec<(Vec<f64>, usize)>> = (start..end)
            .into_par_iter()
            .map(|draw| {
                let config = bath.sample(draw as u64)?;
                let field = bath.field_at_origin(&config);
                let lines = block_transitions(&field, spin, drive)?;
                let mut local = vec![0.0; grid.len];
                let outside = accumulate_lines(&mut local, &lines, broadening, grid);
                Ok((local, outside))
            })
            .collect();
        for (local, outside) in batch? {
            for (slot, v) in acc.iter_mut().zip(&local) {
                *slot += v;
            }
            outside_total += outside;
        }
        start = end;
    }

    for slot in &mut acc {
        *slot /= n_configs as f64;
    }
    let max = acc.iter().cloned().fold(0.0f64, f64::max);
    let values: Vec<f64> = if max > 0.0 {
        acc.iter().map(|a| 1.0 - contrast * (a / max)).collect()
    } else {
        vec![1.0; grid.len]
    };

    Spectrum::new(
        grid.values(),
        values,
        SpectrumMeta {
            n_configs,
            profile: broadening.profile,
            fwhm_mhz: broadening.fwhm_mhz,
            contrast,
            seed: Some(bath.params().seed),
            lines_outside_grid: outside_total,
        },
    )
}

/// Outcome of dip extraction on a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplittingEstimate {
    /// Two significant dips; `splitting_mhz` is their separation (2E).
    TwoDips { nu_minus_mhz: f64, nu_plus_mhz: f64, splitting_mhz: f64 },
    /// One dominant dip; `comb` marks three or more resolved dips
    /// (unresolved hyperfine structure reported at the deepest one).
    SingleResonance { nu_mhz: f64, comb: bool },
}

/// Locates significant dips: the spectrum is smoothed with a 5-point moving
/// average, local minima deeper than 3x the residual noise below the upper
/// baseline are kept, and the count decides between a two-dip pair, a single
/// resonance, and a multi-dip comb.
pub fn splitting_estimate(spectrum: &Spectrum) -> Result<SplittingEstimate> {
    let v = &spectrum.values;
    let n = v.len();
    if n < 11 {
        return Err(Error::InvalidParameter(format!(
            "dip extraction needs at least 11 points, got {n}"
        )));
    }
    let mut smooth = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 1);
        smooth[i] = v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
    }
    let noise = (v.iter().zip(&smooth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        / n as f64)
        .sqrt();

    // baseline: median of the upper half of the smoothed values
    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[(3 * n) / 4];

    let threshold = 3.0 * noise + 1e-12 * (1.0 + baseline.abs());
    let mut dips: Vec<(usize, f64)> = Vec::new();
    for i in 1..n - 1 {
        if smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1] {
            let depth = baseline - smooth[i];
            if depth > threshold {
                dips.push((i, depth));
            }
        }
    }

    match dips.len() {
        0 => Err(Error::NoDip),
        1 => Ok(SplittingEstimate::SingleResonance {
            nu_mhz: spectrum.frequencies_mhz[dips[0].0],
            comb: false,
        }),
        2 => {
            let lo = spectrum.frequencies_mhz[dips[0].0];
            let hi = spectrum.frequencies_mhz[dips[1].0];
            Ok(SplittingEstimate::TwoDips {
                nu_minus_mhz: lo,
                nu_plus_mhz: hi,
                splitting_mhz: hi - lo,
            })
        }
        _ => {
            let deepest = dips.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty");
            Ok(SplittingEstimate::SingleResonance {
                nu_mhz: spectrum.frequencies_mhz[deepest.0],
                comb: true,
            })
        }
    }
}

/// Median over draws of the instantaneous branch splitting 2 d_perp E_perp,
/// in MHz. Field statistics only; hyperfine structure does not enter.
pub fn median_splitting(
    bath: &ChargeBath,
    d_perp_hz_per_v_per_cm: f64,
    n_draws: usize,
) -> Result<f64> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter("median needs at least 1 draw".into()));
    }
    let mut splittings: Vec<f64> = Vec::with_capacity(n_draws);
    for draw in 0..n_draws {
        let field = bath.field_at_origin(&bath.sample(draw as u64)?);
        splittings.push(2.0 * d_perp_hz_per_v_per_cm * 1e-6 * field.transverse_v_per_cm());
    }
    Ok(median_of_unsorted(splittings))
}

/// Medians of the instantaneous splitting for several slab thicknesses at
/// one density, from draws coupled across thicknesses: every bulk-sphere
/// configuration is restricted to each slab `|z| <= t/2` in turn.
///
/// Thinning a homogeneous random configuration to a subregion reproduces
/// the subregion's own statistics, so each returned median estimates the
/// same quantity as an independent slab bath. The coupling matters for
/// *differences*: neighbouring thicknesses share all their close charges,
/// so thickness trends resolve with orders of magnitude fewer draws than
/// independent baths would need.
pub fn median_splitting_by_thickness(
    bath: &ChargeBath,
    d_perp_hz_per_v_per_cm: f64,
    thicknesses_nm: &[f64],
    n_draws: usize,
) -> Result<Vec<f64>> {
    if !matches!(bath.params().geometry, Geometry::BulkSphere) {
        return Err(Error::InvalidParameter(
            "coupled thickness medians start from a bulk-sphere bath".into(),
        ));
    }
    if n_draws == 0 {
        return Err(Error::InvalidParameter("median needs at least 1 draw".into()));
    }
    for &t in thicknesses_nm {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "slab thicknesses must be positive, got {t}"
            )));
        }
    }
    let epsilon_r = bath.params().epsilon_r;
    let mut per_thickness: Vec<Vec<f64>> =
        vec![Vec::with_capacity(n_draws); thicknesses_nm.len()];
    let mut kept = ChargeConfiguration { charges: Vec::new(), draw_index: 0 };
    for draw in 0..n_draws {
        let config = bath.sample(draw as u64)?;
        for (slot, &t) in per_thickness.iter_mut().zip(thicknesses_nm) {
            let half = 0.5 * t;
            kept.charges.clear();
            kept.charges
                .extend(config.charges.iter().filter(|c| c.position_nm.z.abs() <= half));
            let field = field_at_origin(&kept, epsilon_r);
            slot.push(2.0 * d_perp_hz_per_v_per_cm * 1e-6 * field.transverse_v_per_cm());
        }
    }
    Ok(per_thickness.into_iter().map(median_of_unsorted).collect())
}

fn median_of_unsorted(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
