//! Run configuration: a TOML file with unit-suffixed keys, one top-level
//! seed, and per-topic blocks. Unknown keys are hard errors (so a key
//! missing its unit suffix is caught by name), and every accessor applies
//! documented defaults so a minimal file is runnable.
//!
//! [`RunConfig::manifest_toml`] re-serializes the fully resolved
//! configuration (all defaults materialized, plus provenance metadata);
//! feeding that manifest back in reproduces the run bit for bit.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{
    areal_from_volumetric, BathParams, CountModel, DensityConvention, Geometry, LatticeSpec,
};
use crate::error::{Error, Result};
use crate::fit::EsrFitOptions;
use crate::optics::{Layer, LayerStack};
use crate::spectrum::{BroadeningSpec, FrequencyGrid, LineProfile};
use crate::spin::{DriveWeighting, HamiltonianParams};

/// Default top-level seed when none is given.
pub const DEFAULT_SEED: u64 = 1;
/// Default ensemble size for spectrum simulation.
pub const DEFAULT_N_CONFIGS: usize = 10_000;
/// Default simulated ODMR contrast.
pub const DEFAULT_CONTRAST: f64 = 0.06;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<SpinBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadening: Option<BroadeningBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esr: Option<EsrBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optics: Option<OpticsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<T1Block>,
}

/// Provenance written into manifests; ignored as input except for being
/// parsed, so manifests are themselves valid configs.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetaBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpinBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_perp_hz_per_v_per_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_par_hz_per_v_per_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_zz_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_nuclei: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_weighting: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_c_per_nm3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_c_per_nm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_model: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_plane_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interlayer_nm: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BroadeningBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_mhz: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EsrBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_configs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_min_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_max_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step_mhz: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_lo_per_nm3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hi_per_nm3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_lo_per_nm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hi_per_nm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_refits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float_baseline: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_configs: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OpticsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dz_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_min_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_max_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_step_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swept_layer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_thickness_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerBlock>>,
}

/// One stack layer; omit `thickness_nm` for the semi-infinite terminals.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LayerBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_nm: Option<f64>,
    pub n_re: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_im: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct T1Block {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_total_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_phonon_us: Option<f64>,
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianParams> {
        let s = self.spin.clone().unwrap_or_default();
        let defaults = HamiltonianParams::default();
        let params = HamiltonianParams {
            d_mhz: s.d_mhz.unwrap_or(defaults.d_mhz),
            d_perp_hz_per_v_per_cm: s
                .d_perp_hz_per_v_per_cm
                .unwrap_or(defaults.d_perp_hz_per_v_per_cm),
            d_par_hz_per_v_per_cm: s
                .d_par_hz_per_v_per_cm
                .unwrap_or(defaults.d_par_hz_per_v_per_cm),
            a_zz_mhz: s.a_zz_mhz.unwrap_or(defaults.a_zz_mhz),
            n_nuclei: s.n_nuclei.unwrap_or(defaults.n_nuclei),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn drive(&self) -> Result<DriveWeighting> {
        let name = self
            .spin
            .as_ref()
            .and_then(|s| s.drive_weighting.clone())
            .unwrap_or_else(|| "transverse-average".into());
        match name.as_str() {
            "transverse-average" => Ok(DriveWeighting::TransverseAverage),
            "sx" => Ok(DriveWeighting::SxDrive),
            "uniform" => Ok(DriveWeighting::Uniform),
            other => Err(Error::Config(format!(
                "unknown drive_weighting {other:?}; expected transverse-average, sx, or uniform"
            ))),
        }
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        let l = self.lattice.clone().unwrap_or_default();
        let defaults = LatticeSpec::default();
        let spec = LatticeSpec {
            in_plane_nm: l.in_plane_nm.unwrap_or(defaults.in_plane_nm),
            interlayer_nm: l.interlayer_nm.unwrap_or(defaults.interlayer_nm),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bath_params(&self) -> Result<BathParams> {
        let b = self.bath.clone().unwrap_or_default();
        let lattice = self.lattice()?;
        let geometry_name = b.geometry.clone().unwrap_or_else(|| "bulk-sphere".into());
        let geometry = match geometry_name.as_str() {
            "bulk-sphere" => {
                if b.thickness_nm.is_some() {
                    return Err(Error::Config(
                        "thickness_nm only applies to slab geometry".into(),
                    ));
                }
                Geometry::BulkSphere
            }
            "slab" => Geometry::Slab {
                thickness_nm: b.thickness_nm.ok_or_else(|| {
                    Error::Config("slab geometry requires bath.thickness_nm".into())
                })?,
            },
            "monolayer" => {
                if b.thickness_nm.is_some() {
                    return Err(Error::Config(
                        "thickness_nm only applies to slab geometry".into(),
                    ));
                }
                Geometry::Monolayer
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown geometry {other:?}; expected bulk-sphere, slab, or monolayer"
                )));
            }
        };
        let rho_c = match geometry {
            Geometry::Monolayer => {
                if b.rho_c_per_nm3.is_some() {
                    return Err(Error::Config(
                        "monolayer geometry takes an areal density: use rho_c_per_nm2".into(),
                    ));
                }
                // Default: the few-layer volume density folded into one layer.
                b.rho_c_per_nm2
                    .unwrap_or_else(|| areal_from_volumetric(0.081, &lattice))
            }
            _ => {
                if b.rho_c_per_nm2.is_some() {
                    return Err(Error::Config(
                        "bulk and slab geometries take a volumetric density: use rho_c_per_nm3"
                            .into(),
                    ));
                }
                b.rho_c_per_nm3.unwrap_or(0.054)
            }
        };
        let density_convention =
            match b.density_convention.clone().unwrap_or_else(|| "combined".into()).as_str() {
                "combined" => DensityConvention::Combined,
                "per-species" => DensityConvention::PerSpecies,
                other => {
                    return Err(Error::Config(format!(
                        "unknown density_convention {other:?}; expected combined or per-species"
                    )));
                }
            };
        let count_model = match b.count_model.clone().unwrap_or_else(|| "poisson".into()).as_str() {
            "poisson" => CountModel::Poisson,
            "fixed" => CountModel::Fixed,
            other => {
                return Err(Error::Config(format!(
                    "unknown count_model {other:?}; expected poisson or fixed"
                )));
            }
        };
        let params = BathParams {
            rho_c,
            radius_nm: b.radius_nm.unwrap_or(10.0),
            geometry,
            epsilon_r: b.epsilon_r.unwrap_or(4.0),
            seed: self.seed(),
            density_convention,
            count_model,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn broadening(&self) -> Result<BroadeningSpec> {
        let b = self.broadening.clone().unwrap_or_default();
        let profile = match b.profile.clone().unwrap_or_else(|| "lorentzian".into()).as_str() {
            "lorentzian" => LineProfile::Lorentzian,
            "gaussian" => LineProfile::Gaussian,
            other => {
                return Err(Error::Config(format!(
                    "unknown broadening profile {other:?}; expected lorentzian or gaussian"
                )));
            }
        };
        let spec = BroadeningSpec { profile, fwhm_mhz: b.fwhm_mhz.unwrap_or(40.0) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        let e = self.esr.clone().unwrap_or_default();
        FrequencyGrid::from_range(
            e.grid_min_mhz.unwrap_or(3000.0),
            e.grid_max_mhz.unwrap_or(3900.0),
            e.grid_step_mhz.unwrap_or(1.0),
        )
    }

    pub fn n_configs(&self) -> usize {
        self.esr
            .as_ref()
            .and_then(|e| e.n_configs)
            .unwrap_or(DEFAULT_N_CONFIGS)
    }

    pub fn contrast(&self) -> f64 {
        self.esr
            .as_ref()
            .and_then(|e| e.contrast)
            .unwrap_or(DEFAULT_CONTRAST)
    }

    /// Fit options; density bounds must use the unit matching the bath
    /// geometry (per_nm3 for bulk/slab, per_nm2 for monolayer).
    pub fn esr_fit_options(&self) -> Result<EsrFitOptions> {
        let f = self.fit.clone().unwrap_or_default();
        let monolayer = matches!(self.bath_params()?.geometry, Geometry::Monolayer);
        let (lo3, hi3, lo2, hi2) =
            (f.rho_lo_per_nm3, f.rho_hi_per_nm3, f.rho_lo_per_nm2, f.rho_hi_per_nm2);
        let rho_bounds = if monolayer {
            if lo3.is_some() || hi3.is_some() {
                return Err(Error::Config(
                    "monolayer fits bound an areal density: use rho_lo_per_nm2 / rho_hi_per_nm2"
                        .into(),
                ));
            }
            // Default upper bound: the bulk-range ceiling folded into one layer.
            let fallback = areal_from_volumetric(0.2, &self.lattice()?);
            (lo2.unwrap_or(0.0), hi2.unwrap_or(fallback))
        } else {
            if lo2.is_some() || hi2.is_some() {
                return Err(Error::Config(
                    "bulk and slab fits bound a volumetric density: use rho_lo_per_nm3 / rho_hi_per_nm3"
                        .into(),
                ));
            }
            (lo3.unwrap_or(0.0), hi3.unwrap_or(0.2))
        };
        let defaults = EsrFitOptions::default();
        Ok(EsrFitOptions {
            rho_bounds,
            contrast_bounds: (
                f.contrast_lo.unwrap_or(defaults.contrast_bounds.0),
                f.contrast_hi.unwrap_or(defaults.contrast_bounds.1),
            ),
            initial: None,
            n_refits: f.n_refits.unwrap_or(defaults.n_refits),
            seed: self.seed(),
            max_iters: f.max_iters.unwrap_or(defaults.max_iters),
            float_baseline: f.float_baseline.unwrap_or(false),
        })
    }

    /// Ensemble size for fit objective evaluations; defaults to the
    /// simulation block's value.
    pub fn fit_n_configs(&self) -> usize {
        self.fit
            .as_ref()
            .and_then(|f| f.n_configs)
            .unwrap_or_else(|| self.n_configs())
    }

    fn default_layers() -> Vec<LayerBlock> {
        let stack = LayerStack::hbn_on_oxide(10.0);
        stack
            .layers
            .iter()
            .map(|l| LayerBlock {
                thickness_nm: l.thickness_nm,
                n_re: l.n.re,
                n_im: Some(l.n.im),
            })
            .collect()
    }

    pub fn layer_stack(&self) -> Result<LayerStack> {
        let o = self.optics.clone().unwrap_or_default();
        let blocks = o.layers.clone().unwrap_or_else(Self::default_layers);
        let layers: Vec<Layer> = blocks
            .iter()
            .map(|b| Layer {
                thickness_nm: b.thickness_nm,
                n: Complex64::new(b.n_re, b.n_im.unwrap_or(0.0)),
            })
            .collect();
        let stack = LayerStack {
            layers,
            wavelength_nm: o.wavelength_nm.unwrap_or(532.0),
            dz_nm: o.dz_nm.unwrap_or(2.0),
        };
        stack.validate()?;
        Ok(stack)
    }

    /// (min, max, step) of the thickness sweep in nm.
    pub fn sweep_range(&self) -> (f64, f64, f64) {
        let o = self.optics.clone().unwrap_or_default();
        (
            o.sweep_min_nm.unwrap_or(1.0),
            o.sweep_max_nm.unwrap_or(400.0),
            o.sweep_step_nm.unwrap_or(1.0),
        )
    }

    pub fn swept_layer(&self) -> usize {
        self.optics.as_ref().and_then(|o| o.swept_layer).unwrap_or(1)
    }

    pub fn profile_thickness(&self) -> Option<f64> {
        self.optics.as_ref().and_then(|o| o.profile_thickness_nm)
    }

    pub fn t1_pair(&self) -> Result<(f64, f64)> {
        let t = self
            .t1
            .clone()
            .ok_or_else(|| Error::Config("this command requires a [t1] block".into()))?;
        let total = t
            .t1_total_us
            .ok_or_else(|| Error::Config("missing t1.t1_total_us".into()))?;
        let phonon = t
            .t1_phonon_us
            .ok_or_else(|| Error::Config("missing t1.t1_phonon_us".into()))?;
        Ok((total, phonon))
    }

    /// Fully resolved copy: every default materialized, provenance recorded.
    /// The result parses back to identical physics, so a manifest is a
    /// reusable config.
    pub fn resolved(&self, command: &str, input_path: Option<&str>, mode: Option<&str>) -> Result<RunConfig> {
        let ham = self.hamiltonian()?;
        let bath = self.bath_params()?;
        let lattice = self.lattice()?;
        let broadening = self.broadening()?;
        let stack = self.layer_stack()?;
        let (sweep_min, sweep_max, sweep_step) = self.sweep_range();
        let fit_in = self.fit.clone().unwrap_or_default();
        let fit_opts = self.esr_fit_options()?;
        let monolayer = matches!(bath.geometry, Geometry::Monolayer);
        let (geometry, thickness_nm) = match bath.geometry {
            Geometry::BulkSphere => ("bulk-sphere", None),
            Geometry::Slab { thickness_nm } => ("slab", Some(thickness_nm)),
            Geometry::Monolayer => ("monolayer", None),
        };
        let drive = match self.drive()? {
            DriveWeighting::TransverseAverage => "transverse-average",
            DriveWeighting::SxDrive => "sx",
            DriveWeighting::Uniform => "uniform",
        };
        let grid = self.grid()?;
        Ok(RunConfig {
            seed: Some(self.seed()),
            meta: Some(MetaBlock {
                command: Some(command.to_string()),
                tool_version: Some(env!("CARGO_PKG_VERSION").to_string()),
                input_path: input_path.map(str::to_string),
                mode: mode.map(str::to_string),
            }),
            spin: Some(SpinBlock {
                d_mhz: Some(ham.d_mhz),
                d_perp_hz_per_v_per_cm: Some(ham.d_perp_hz_per_v_per_cm),
                d_par_hz_per_v_per_cm: Some(ham.d_par_hz_per_v_per_cm),
                a_zz_mhz: Some(ham.a_zz_mhz),
                n_nuclei: Some(ham.n_nuclei),
                drive_weighting: Some(drive.to_string()),
            }),
            bath: Some(BathBlock {
                geometry: Some(geometry.to_string()),
                thickness_nm,
                rho_c_per_nm3: (!monolayer).then_some(bath.rho_c),
                rho_c_per_nm2: monolayer.then_some(bath.rho_c),
                radius_nm: Some(bath.radius_nm),
                epsilon_r: Some(bath.epsilon_r),
                density_convention: Some(
                    match bath.density_convention {
                        DensityConvention::Combined => "combined",
                        DensityConvention::PerSpecies => "per-species",
                    }
                    .to_string(),
                ),
                count_model: Some(
                    match bath.count_model {
                        CountModel::Poisson => "poisson",
                        CountModel::Fixed => "fixed",
                    }
                    .to_string(),
                ),
            }),
            lattice: Some(LatticeBlock {
                in_plane_nm: Some(lattice.in_plane_nm),
                interlayer_nm: Some(lattice.interlayer_nm),
            }),
            broadening: Some(BroadeningBlock {
                profile: Some(
                    match broadening.profile {
                        LineProfile::Lorentzian => "lorentzian",
                        LineProfile::Gaussian => "gaussian",
                    }
                    .to_string(),
                ),
                fwhm_mhz: Some(broadening.fwhm_mhz),
            }),
            esr: Some(EsrBlock {
                n_configs: Some(self.n_configs()),
                contrast: Some(self.contrast()),
                grid_min_mhz: Some(grid.start_mhz),
                grid_max_mhz: Some(grid.last()),
                grid_step_mhz: Some(grid.step_mhz),
            }),
            fit: Some(FitBlock {
                rho_lo_per_nm3: (!monolayer).then_some(fit_opts.rho_bounds.0),
                rho_hi_per_nm3: (!monolayer).then_some(fit_opts.rho_bounds.1),
                rho_lo_per_nm2: monolayer.then_some(fit_opts.rho_bounds.0),
                rho_hi_per_nm2: monolayer.then_some(fit_opts.rho_bounds.1),
                contrast_lo: Some(fit_opts.contrast_bounds.0),
                contrast_hi: Some(fit_opts.contrast_bounds.1),
                n_refits: Some(fit_opts.n_refits),
                max_iters: Some(fit_opts.max_iters),
                float_baseline: Some(fit_opts.float_baseline),
                n_configs: Some(fit_in.n_configs.unwrap_or_else(|| self.fit_n_configs())),
            }),
            optics: Some(OpticsBlock {
                wavelength_nm: Some(stack.wavelength_nm),
                dz_nm: Some(stack.dz_nm),
                sweep_min_nm: Some(sweep_min),
                sweep_max_nm: Some(sweep_max),
                sweep_step_nm: Some(sweep_step),
                swept_layer: Some(self.swept_layer()),
                profile_thickness_nm: self.profile_thickness(),
                layers: Some(
                    stack
                        .layers
                        .iter()
                        .map(|l| LayerBlock {
                            thickness_nm: l.thickness_nm,
                            n_re: l.n.re,
                            n_im: Some(l.n.im),
                        })
                        .collect(),
                ),
            }),
            t1: self.t1.clone(),
        })
    }

    /// TOML text of [`RunConfig::resolved`].
    pub fn manifest_toml(&self, command: &str, input_path: Option<&str>, mode: Option<&str>) -> Result<String> {
        let resolved = self.resolved(command, input_path, mode)?;
        toml::to_string_pretty(&resolved).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_runnable_defaults() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert_eq!(cfg.seed(), DEFAULT_SEED);
        let bath = cfg.bath_params().unwrap();
        assert_eq!(bath.rho_c, 0.054);
        assert_eq!(bath.radius_nm, 10.0);
        assert!(matches!(bath.geometry, Geometry::BulkSphere));
        assert_eq!(cfg.hamiltonian().unwrap().d_mhz, 3460.0);
        assert_eq!(cfg.grid().unwrap().len, 901);
        assert_eq!(cfg.n_configs(), DEFAULT_N_CONFIGS);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::parse_str("[bath]\nrho_c = 0.054\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rho_c"), "message should name the key: {msg}");
        let err = RunConfig::parse_str("[spin]\nd = 3460\n").unwrap_err();
        assert!(err.to_string().contains("`d`"), "message should name the key: {err}");
        let err = RunConfig::parse_str("bogus_top_level = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus_top_level"));
    }

    #[test]
    fn geometry_and_density_units_must_agree() {
        let slab_no_thickness = "[bath]\ngeometry = \"slab\"\n";
        assert!(RunConfig::parse_str(slab_no_thickness).unwrap().bath_params().is_err());

        let monolayer_volumetric = "[bath]\ngeometry = \"monolayer\"\nrho_c_per_nm3 = 0.05\n";
        assert!(RunConfig::parse_str(monolayer_volumetric).unwrap().bath_params().is_err());

        let bulk_areal = "[bath]\nrho_c_per_nm2 = 0.08\n";
        assert!(RunConfig::parse_str(bulk_areal).unwrap().bath_params().is_err());

        let good_slab = "[bath]\ngeometry = \"slab\"\nthickness_nm = 5.0\nrho_c_per_nm3 = 0.05\n";
        let bath = RunConfig::parse_str(good_slab).unwrap().bath_params().unwrap();
        assert!(matches!(bath.geometry, Geometry::Slab { thickness_nm } if thickness_nm == 5.0));

        // The monolayer default is the few-layer volume density collapsed
        // onto a single basal plane.
        let monolayer = "[bath]\ngeometry = \"monolayer\"\n";
        let cfg = RunConfig::parse_str(monolayer).unwrap();
        let bath = cfg.bath_params().unwrap();
        let expected = areal_from_volumetric(0.081, &cfg.lattice().unwrap());
        assert!((bath.rho_c - expected).abs() < 1e-15);
        assert!((expected - 0.081 * 0.33).abs() < 1e-12);
    }

    #[test]
    fn bad_enum_values_are_named() {
        let cfg = RunConfig::parse_str("[spin]\ndrive_weighting = \"sideways\"\n").unwrap();
        assert!(cfg.drive().unwrap_err().to_string().contains("sideways"));
        let cfg = RunConfig::parse_str("[broadening]\nprofile = \"voigt\"\n").unwrap();
        assert!(cfg.broadening().unwrap_err().to_string().contains("voigt"));
        let cfg = RunConfig::parse_str("[bath]\ngeometry = \"cube\"\n").unwrap();
        assert!(cfg.bath_params().unwrap_err().to_string().contains("cube"));
    }

    #[test]
    fn manifest_round_trips_to_identical_physics() {
        let text = "seed = 42\n[bath]\ngeometry = \"monolayer\"\nrho_c_per_nm2 = 0.081\n";
        let cfg = RunConfig::parse_str(text).unwrap();
        let manifest = cfg.manifest_toml("simulate-esr", None, None).unwrap();
        let reparsed = RunConfig::parse_str(&manifest).unwrap();
        assert_eq!(reparsed.seed(), 42);
        assert_eq!(reparsed.bath_params().unwrap(), cfg.bath_params().unwrap());
        assert_eq!(reparsed.hamiltonian().unwrap(), cfg.hamiltonian().unwrap());
        assert_eq!(reparsed.grid().unwrap(), cfg.grid().unwrap());
        // resolution is idempotent
        let manifest2 = reparsed.manifest_toml("simulate-esr", None, None).unwrap();
        assert_eq!(manifest, manifest2);
        assert!(manifest.contains("tool_version"));
    }

    #[test]
    fn custom_layer_stack_is_honored_and_validated() {
        let text = r#"
[optics]
wavelength_nm = 600.0
layers = [
  { n_re = 1.0 },
  { thickness_nm = 50.0, n_re = 2.0, n_im = 0.1 },
  { n_re = 1.5 },
]
"#;
        let stack = RunConfig::parse_str(text).unwrap().layer_stack().unwrap();
        assert_eq!(stack.layers.len(), 3);
        assert_eq!(stack.wavelength_nm, 600.0);
        assert_eq!(stack.layers[1].n.im, 0.1);

        let gain = r#"
[optics]
layers = [
  { n_re = 1.0 },
  { thickness_nm = 50.0, n_re = 2.0, n_im = -0.1 },
  { n_re = 1.5 },
]
"#;
        assert!(RunConfig::parse_str(gain).unwrap().layer_stack().is_err());
    }

    #[test]
    fn t1_block_is_required_for_t1_commands() {
        assert!(RunConfig::parse_str("").unwrap().t1_pair().is_err());
        let cfg =
            RunConfig::parse_str("[t1]\nt1_total_us = 1.0\nt1_phonon_us = 13.0\n").unwrap();
        assert_eq!(cfg.t1_pair().unwrap(), (1.0, 13.0));
    }

    #[test]
    fn fit_bounds_follow_the_bath_units() {
        let bulk = "[fit]\nrho_lo_per_nm2 = 0.0\nrho_hi_per_nm2 = 0.1\n";
        assert!(RunConfig::parse_str(bulk).unwrap().esr_fit_options().is_err());
        let mono = "[bath]\ngeometry = \"monolayer\"\n[fit]\nrho_lo_per_nm2 = 0.01\nrho_hi_per_nm2 = 0.15\n";
        let opts = RunConfig::parse_str(mono).unwrap().esr_fit_options().unwrap();
        assert_eq!(opts.rho_bounds, (0.01, 0.15));
    }
}
