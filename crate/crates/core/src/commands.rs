//! Command implementations behind the CLI: each one reads a [`RunConfig`],
//! drives the domain modules, and writes its outputs atomically together
//! with a manifest that reproduces the run.

use std::path::{Path, PathBuf};

use crate::bath::ChargeBath;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fit::{
    fit_esr, fit_exponential, t1_two_channel, EsrFit, ExponentialFit, TimeTrace, TraceKind,
};
use crate::optics::{energy_audit, mean_absorption_sweep, poynting_profile, transfer_matrix};
use crate::spectrum::{ensemble_spectrum, splitting_estimate, Spectrum, SplittingEstimate};
use crate::table::{write_atomic, DataTable};

/// What a command produced: files on disk plus a human-readable summary.
#[derive(Debug, Clone)]
pub struct CommandReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.toml")
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn write_manifest(
    config: &RunConfig,
    command: &str,
    input: Option<&str>,
    mode: Option<&str>,
    out: &Path,
) -> Result<PathBuf> {
    let path = manifest_path(out);
    write_atomic(&path, &config.manifest_toml(command, input, mode)?)?;
    Ok(path)
}

/// Simulates an ensemble ESR spectrum and writes it as a CSV table plus a
/// manifest. The summary reports the detected resonance structure.
pub fn cmd_simulate_esr(config: &RunConfig, out: &Path) -> Result<CommandReport> {
    let bath = ChargeBath::new(config.bath_params()?, config.lattice()?)?;
    let spectrum = ensemble_spectrum(
        &bath,
        &config.hamiltonian()?,
        config.drive()?,
        &config.broadening()?,
        config.n_configs(),
        &config.grid()?,
        config.contrast(),
    )?;

    let mut table = spectrum.to_table();
    table.push_metadata("command", "simulate-esr");
    table.write_path(out)?;
    let manifest = write_manifest(config, "simulate-esr", None, None, out)?;

    let summary = match splitting_estimate(&spectrum) {
        Ok(SplittingEstimate::TwoDips { nu_minus_mhz, nu_plus_mhz, splitting_mhz }) => format!(
            "two resonances: {nu_minus_mhz:.1} and {nu_plus_mhz:.1} MHz (splitting {splitting_mhz:.1} MHz)"
        ),
        Ok(SplittingEstimate::SingleResonance { nu_mhz, comb }) => {
            if comb {
                format!("single resonance at {nu_mhz:.1} MHz with resolved hyperfine comb")
            } else {
                format!("single resonance at {nu_mhz:.1} MHz")
            }
        }
        Err(Error::NoDip) => "no significant resonance dip".to_string(),
        Err(e) => return Err(e),
    };
    Ok(CommandReport { files: vec![out.to_path_buf(), manifest], summary })
}

fn esr_report_table(fit: &EsrFit, rho_unit: &str) -> String {
    let mut lines = vec![
        format!("rho_c_{rho_unit}: {}", fit.rho_c),
        format!("rho_c_sigma_{rho_unit}: {}", fit.rho_c_sigma),
        format!("contrast: {}", fit.contrast),
        format!("contrast_sigma: {}", fit.contrast_sigma),
        format!("baseline: {}", fit.baseline),
        format!("rss: {}", fit.rss),
        format!("iterations: {}", fit.iterations),
        format!("converged: {}", fit.converged),
        format!(
            "refit_rho_c_{rho_unit}: {}",
            fit.refit_rho_c.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
        ),
    ];
    for d in &fit.diagnostics {
        lines.push(format!("diagnostic: {d}"));
    }
    lines.push(format!(
        "record: fit-esr rho_c={} rho_c_sigma={} contrast={} contrast_sigma={} rss={} converged={}",
        fit.rho_c, fit.rho_c_sigma, fit.contrast, fit.contrast_sigma, fit.rss, fit.converged
    ));
    lines.join("\n") + "\n"
}

/// Fits (charge density, contrast) to a measured spectrum with the
/// Monte-Carlo forward model; writes a report, a measured-vs-model overlay
/// table, and a manifest.
pub fn cmd_fit_esr(config: &RunConfig, measured_path: &Path, out: &Path) -> Result<CommandReport> {
    let measured = Spectrum::from_table(&DataTable::read_path(measured_path)?)?;
    let base_bath = ChargeBath::new(config.bath_params()?, config.lattice()?)?;
    let ham = config.hamiltonian()?;
    let drive = config.drive()?;
    let broadening = config.broadening()?;
    let grid = config.grid()?;
    let n_configs = config.fit_n_configs();
    let options = config.esr_fit_options()?;

    let model = |rho: f64, contrast: f64, seed: u64| -> Result<Spectrum> {
        let bath = base_bath.reseeded(rho, seed)?;
        ensemble_spectrum(&bath, &ham, drive, &broadening, n_configs, &grid, contrast)
    };
    let fit = fit_esr(&measured, &model, &options)?;

    let rho_unit = if matches!(
        config.bath_params()?.geometry,
        crate::bath::Geometry::Monolayer
    ) {
        "per_nm2"
    } else {
        "per_nm3"
    };
    write_atomic(out, &esr_report_table(&fit, rho_unit))?;

    // overlay: best-fit model next to the measured values on the model grid
    let best = model(fit.rho_c, fit.contrast, options.seed)?;
    let mut overlay = DataTable::new(vec![
        "frequency_mhz".into(),
        "measured_pl".into(),
        "model_pl".into(),
    ]);
    overlay.push_metadata("rho_c", fit.rho_c);
    overlay.push_metadata("contrast", fit.contrast);
    let m_first = measured.frequencies_mhz[0];
    let m_last = *measured.frequencies_mhz.last().expect("validated");
    for (k, f) in best.frequencies_mhz.iter().enumerate() {
        if *f >= m_first && *f <= m_last {
            let measured_here = interp_linear(&measured.frequencies_mhz, &measured.values, *f);
            overlay
                .push_row(vec![*f, measured_here, best.values[k]])
                .expect("fixed arity");
        }
    }
    let overlay_path = sibling(out, "_overlay.csv");
    overlay.write_path(&overlay_path)?;

    let manifest = write_manifest(
        config,
        "fit-esr",
        Some(&measured_path.display().to_string()),
        None,
        out,
    )?;
    let summary = format!(
        "rho_c = {:.4} +/- {:.4}, contrast = {:.4} ({}converged)",
        fit.rho_c,
        fit.rho_c_sigma,
        fit.contrast,
        if fit.converged { "" } else { "not " }
    );
    Ok(CommandReport { files: vec![out.to_path_buf(), overlay_path, manifest], summary })
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(i) => {
            let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] * (1.0 - w) + ys[i] * w
        }
    }
}

/// Sweeps the swept layer's thickness and writes (thickness, mean
/// absorption); optionally also a depth profile at one thickness. Every
/// solved stack is energy-audited.
pub fn cmd_optics_sweep(config: &RunConfig, out: &Path) -> Result<CommandReport> {
    let stack = config.layer_stack()?;
    let (t_min, t_max, t_step) = config.sweep_range();
    let swept = config.swept_layer();

    // audit each endpoint of the sweep range plus the midpoint
    for t in [t_min, 0.5 * (t_min + t_max), t_max] {
        let mut varied = stack.clone();
        varied.layers[swept].thickness_nm = Some(t);
        let solution = transfer_matrix(&varied)?;
        energy_audit(&solution, &varied)?;
    }

    let sweep = mean_absorption_sweep(&stack, swept, t_min, t_max, t_step)?;
    let mut table = DataTable::new(vec!["thickness_nm".into(), "mean_alpha_per_nm".into()]);
    table.push_metadata("command", "optics-sweep");
    table.push_metadata("wavelength_nm", stack.wavelength_nm);
    table.push_metadata("dz_nm", stack.dz_nm);
    table.push_metadata("swept_layer", swept);
    for (t, a) in &sweep {
        table.push_row(vec![*t, *a]).expect("fixed arity");
    }
    table.write_path(out)?;
    let mut files = vec![out.to_path_buf()];

    if let Some(t_profile) = config.profile_thickness() {
        let mut varied = stack.clone();
        varied.layers[swept].thickness_nm = Some(t_profile);
        let solution = transfer_matrix(&varied)?;
        energy_audit(&solution, &varied)?;
        let profile = poynting_profile(&solution, &varied)?;
        let mut ptab = profile.to_table();
        ptab.push_metadata("thickness_nm", t_profile);
        ptab.push_metadata("reflectance", solution.reflectance);
        ptab.push_metadata("transmittance", solution.transmittance);
        let ppath = sibling(out, "_profile.csv");
        ptab.write_path(&ppath)?;
        files.push(ppath);
    }

    files.push(write_manifest(config, "optics-sweep", None, None, out)?);
    let peak = sweep
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, a)| format!("peak mean absorption {a:.3e} /nm at t = {t} nm"))
        .unwrap_or_else(|| "empty sweep".into());
    Ok(CommandReport {
        files,
        summary: format!("{} thicknesses swept; {peak}", sweep.len()),
    })
}

fn trace_report(fit: &ExponentialFit) -> String {
    let mut lines = vec![
        format!("kind: {}", fit.kind.name()),
        format!("offset: {}", fit.offset),
        format!("offset_sigma: {}", fit.offset_sigma),
        format!("amplitude: {}", fit.amplitude),
        format!("amplitude_sigma: {}", fit.amplitude_sigma),
        format!("rate_per_us: {}", fit.rate_per_us),
        format!("rate_sigma_per_us: {}", fit.rate_sigma),
        format!("time_constant_us: {}", fit.time_constant_us()),
        format!("rss: {}", fit.rss),
        format!("iterations: {}", fit.iterations),
        format!("converged: {}", fit.converged),
    ];
    for d in &fit.diagnostics {
        lines.push(format!("diagnostic: {d}"));
    }
    lines.push(format!(
        "record: fit-trace kind={} rate_per_us={} time_constant_us={} amplitude={} offset={} converged={}",
        fit.kind.name(),
        fit.rate_per_us,
        fit.time_constant_us(),
        fit.amplitude,
        fit.offset,
        fit.converged
    ));
    lines.join("\n") + "\n"
}

/// Fits an exponential rise or decay to a (time, signal) table and writes
/// the report plus a manifest.
pub fn cmd_fit_trace(
    config: &RunConfig,
    trace_path: &Path,
    mode: &str,
    out: &Path,
) -> Result<CommandReport> {
    let kind = TraceKind::parse(mode)?;
    let trace = TimeTrace::from_table(&DataTable::read_path(trace_path)?)?;
    let fit = fit_exponential(&trace, kind)?;
    write_atomic(out, &trace_report(&fit))?;
    let manifest = write_manifest(
        config,
        "fit-trace",
        Some(&trace_path.display().to_string()),
        Some(mode),
        out,
    )?;
    let summary = format!(
        "{}: rate {:.6} /us (time constant {:.4} us), {}converged",
        kind.name(),
        fit.rate_per_us,
        fit.time_constant_us(),
        if fit.converged { "" } else { "not " }
    );
    Ok(CommandReport { files: vec![out.to_path_buf(), manifest], summary })
}

/// Splits a total relaxation time into phonon and residual channels and
/// writes the report plus a manifest.
pub fn cmd_t1_model(config: &RunConfig, out: &Path) -> Result<CommandReport> {
    let (total, phonon) = config.t1_pair()?;
    let t1_noise = t1_two_channel(total, phonon)?;
    let noise_text = match t1_noise {
        Some(v) => v.to_string(),
        None => "unbounded".to_string(),
    };
    let report = format!(
        "t1_total_us: {total}\nt1_phonon_us: {phonon}\nt1_noise_us: {noise_text}\nrecord: t1-model t1_total_us={total} t1_phonon_us={phonon} t1_noise_us={noise_text}\n"
    );
    write_atomic(out, &report)?;
    let manifest = write_manifest(config, "t1-model", None, None, out)?;
    Ok(CommandReport {
        files: vec![out.to_path_buf(), manifest],
        summary: format!("t1_noise = {noise_text} us"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn quick_esr_config() -> RunConfig {
        RunConfig::parse_str(
            "seed = 11\n\
             [bath]\nrho_c_per_nm3 = 0.054\nradius_nm = 6.0\n\
             [esr]\nn_configs = 32\n",
        )
        .unwrap()
    }

    #[test]
    fn simulate_esr_writes_spectrum_and_manifest() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("spec.csv");
        let report = cmd_simulate_esr(&quick_esr_config(), &out).unwrap();
        assert_eq!(report.files.len(), 2);
        let table = DataTable::read_path(&out).unwrap();
        assert_eq!(table.metadata_value("n_configs"), Some("32"));
        let spectrum = Spectrum::from_table(&table).unwrap();
        assert_eq!(spectrum.frequencies_mhz.len(), 901);
        let manifest = RunConfig::load(&out.with_extension("manifest.toml")).unwrap();
        assert_eq!(manifest.seed(), 11);
        assert_eq!(manifest.n_configs(), 32);
    }

    #[test]
    fn rerunning_from_the_manifest_is_bit_identical() {
        let dir = tempdir().unwrap();
        let out1 = dir.path().join("a.csv");
        let out2 = dir.path().join("b.csv");
        cmd_simulate_esr(&quick_esr_config(), &out1).unwrap();
        let manifest = RunConfig::load(&out1.with_extension("manifest.toml")).unwrap();
        cmd_simulate_esr(&manifest, &out2).unwrap();
        let a = std::fs::read_to_string(&out1).unwrap();
        let b = std::fs::read_to_string(&out2).unwrap();
        // identical except the header cannot differ at all here
        assert_eq!(a, b);
    }

    #[test]
    fn optics_sweep_without_layers_uses_the_standard_stack() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let config = RunConfig::parse_str(
            "[optics]\nsweep_min_nm = 5.0\nsweep_max_nm = 50.0\nsweep_step_nm = 5.0\nprofile_thickness_nm = 30.0\n",
        )
        .unwrap();
        let report = cmd_optics_sweep(&config, &out).unwrap();
        assert_eq!(report.files.len(), 3, "sweep, profile, manifest");
        let table = DataTable::read_path(&out).unwrap();
        assert_eq!(table.rows.len(), 10);
        let profile = DataTable::read_path(&sibling(&out, "_profile.csv")).unwrap();
        assert!(profile.rows.len() > 10);
    }

    #[test]
    fn fit_trace_reports_the_decay_constant() {
        let dir = tempdir().unwrap();
        let trace_path = dir.path().join("trace.csv");
        let times: Vec<f64> = (0..100).map(|i| 0.65 * i as f64).collect();
        let signal: Vec<f64> = times.iter().map(|t| 0.4 + 0.6 * (-t / 13.0).exp()).collect();
        TimeTrace::new(times, signal).unwrap().to_table().write_path(&trace_path).unwrap();

        let out = dir.path().join("fit.txt");
        let config = RunConfig::parse_str("").unwrap();
        let report = cmd_fit_trace(&config, &trace_path, "decay", &out).unwrap();
        assert!(report.summary.contains("decay"));
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("converged: true"), "{text}");
        let tc: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("time_constant_us: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((tc - 13.0).abs() < 0.05, "time constant {tc}");
    }

    #[test]
    fn t1_model_reports_the_residual_channel() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("t1.txt");
        let config =
            RunConfig::parse_str("[t1]\nt1_total_us = 1.0\nt1_phonon_us = 13.0\n").unwrap();
        let report = cmd_t1_model(&config, &out).unwrap();
        assert!(report.summary.contains("t1_noise"));
        let text = std::fs::read_to_string(&out).unwrap();
        let value: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("t1_noise_us: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((value - 13.0 / 12.0).abs() < 1e-12);
    }
}
