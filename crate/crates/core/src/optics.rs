//! Plane-wave optics of layered stacks at normal incidence: reflectance,
//! depth-resolved energy flux, and absorption profiles.
//!
//! Fields follow the exp(-i omega t) convention, so absorbing media have
//! Im(n) >= 0. Each layer carries forward/backward amplitudes (A, B) defined
//! at its upstream boundary; the stack is solved by imposing (1, 0) in the
//! substrate and walking interface continuity back to the incidence medium.
//! Transmittance T(z) is the time-averaged Poynting flux normalized to the
//! incident flux, so layer absorption is an exact flux difference and
//! R + sum(A_layer) + T_substrate telescopes to 1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::table::DataTable;

/// Refractive index of hBN at 532 nm.
pub const N_HBN: Complex64 = Complex64::new(2.3, 0.03);
/// Refractive index of thermal SiO2 at 532 nm.
pub const N_SIO2: Complex64 = Complex64::new(1.461, 0.0);
/// Refractive index of crystalline Si at 532 nm.
pub const N_SI: Complex64 = Complex64::new(4.15, 0.044);
/// Excitation wavelength in nm.
pub const GREEN_WAVELENGTH_NM: f64 = 532.0;
/// Standard thermal-oxide thickness in nm.
pub const OXIDE_THICKNESS_NM: f64 = 90.0;

/// Energy bookkeeping must close to within this.
pub const ENERGY_AUDIT_TOL: f64 = 1e-10;

/// One layer: a finite film or a semi-infinite terminal medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    /// `None` marks the semi-infinite incidence medium or substrate.
    pub thickness_nm: Option<f64>,
    pub n: Complex64,
}

impl Layer {
    pub fn semi_infinite(n: Complex64) -> Self {
        Self { thickness_nm: None, n }
    }

    pub fn film(thickness_nm: f64, n: Complex64) -> Self {
        Self { thickness_nm: Some(thickness_nm), n }
    }
}

/// A full stack plus the discretization used for depth profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    pub wavelength_nm: f64,
    /// Depth-profile step; per-layer grids refine it so each layer thickness
    /// divides evenly.
    pub dz_nm: f64,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>, wavelength_nm: f64) -> Self {
        Self { layers, wavelength_nm, dz_nm: 2.0 }
    }

    /// air / hBN(t) / SiO2(90 nm) / Si at 532 nm.
    pub fn hbn_on_oxide(hbn_thickness_nm: f64) -> Self {
        Self::new(
            vec![
                Layer::semi_infinite(Complex64::new(1.0, 0.0)),
                Layer::film(hbn_thickness_nm, N_HBN),
                Layer::film(OXIDE_THICKNESS_NM, N_SIO2),
                Layer::semi_infinite(N_SI),
            ],
            GREEN_WAVELENGTH_NM,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::InvalidParameter(
                "a stack needs at least an incidence medium and a substrate".into(),
            ));
        }
        if !(self.wavelength_nm > 0.0) || !self.wavelength_nm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavelength_nm must be positive, got {}",
                self.wavelength_nm
            )));
        }
        if !(self.dz_nm > 0.0) || !self.dz_nm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dz_nm must be positive, got {}",
                self.dz_nm
            )));
        }
        for (idx, layer) in self.layers.iter().enumerate() {
            let terminal = idx == 0 || idx == self.layers.len() - 1;
            match (terminal, layer.thickness_nm) {
                (true, Some(_)) => {
                    return Err(Error::InvalidParameter(format!(
                        "layer {idx} is terminal and must be semi-infinite"
                    )));
                }
                (false, None) => {
                    return Err(Error::InvalidParameter(format!(
                        "layer {idx} is interior and needs a thickness"
                    )));
                }
                (false, Some(d)) if !(d > 0.0) || !d.is_finite() => {
                    return Err(Error::InvalidParameter(format!(
                        "layer {idx} thickness must be positive, got {d}"
                    )));
                }
                _ => {}
            }
            if !layer.n.re.is_finite() || !layer.n.im.is_finite() || layer.n.norm() < 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "layer {idx} has invalid refractive index {}",
                    layer.n
                )));
            }
            if layer.n.im < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "layer {idx} has gain (Im n = {} < 0); only absorbing or lossless media are supported",
                    layer.n.im
                )));
            }
        }
        if self.layers[0].n.im != 0.0 {
            return Err(Error::InvalidParameter(
                "the incidence medium must be lossless so transmittance is well defined".into(),
            ));
        }
        Ok(())
    }

    fn finite_layers(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.thickness_nm.map(|d| (i, d)))
    }
}

/// Bulk absorption coefficient 4 pi Im(n) / lambda, per nm.
pub fn absorption_coefficient_per_nm(n: Complex64, wavelength_nm: f64) -> f64 {
    4.0 * std::f64::consts::PI * n.im / wavelength_nm
}

/// Solved stack: normalized amplitudes per layer and summary coefficients.
#[derive(Debug, Clone)]
pub struct TmmSolution {
    /// (A, B) per layer, unit incident amplitude. Terminal layers hold their
    /// values at the adjacent interface; films at their upstream boundary.
    pub amplitudes: Vec<(Complex64, Complex64)>,
    /// Complex wavenumber 2 pi n / lambda per layer.
    pub k: Vec<Complex64>,
    /// z of each layer's upstream boundary (z = 0 at the first interface).
    pub starts: Vec<f64>,
    pub r: Complex64,
    pub t: Complex64,
    pub reflectance: f64,
    /// Flux entering the substrate, normalized to the incident flux.
    pub transmittance: f64,
    n: Vec<Complex64>,
    n0_re: f64,
}

impl TmmSolution {
    /// Normalized Poynting flux inside layer `layer` at depth `zeta_nm` past
    /// its upstream boundary.
    pub fn transmittance_at(&self, layer: usize, zeta_nm: f64) -> f64 {
        let (a, b) = self.amplitudes[layer];
        let arg = Complex64::i() * self.k[layer] * zeta_nm;
        let fwd = a * arg.exp();
        let bwd = b * (-arg).exp();
        let e = fwd + bwd;
        let h = fwd - bwd;
        (self.n[layer].conj() * e * h.conj()).re / self.n0_re
    }

    /// Squared electric-field magnitude |E|^2 at depth `zeta_nm` inside a
    /// layer, unit incident amplitude.
    pub fn field_intensity_at(&self, layer: usize, zeta_nm: f64) -> f64 {
        let (a, b) = self.amplitudes[layer];
        let arg = Complex64::i() * self.k[layer] * zeta_nm;
        (a * arg.exp() + b * (-arg).exp()).norm_sqr()
    }
}

/// Solves the boundary-value problem for a validated stack.
pub fn transfer_matrix(stack: &LayerStack) -> Result<TmmSolution> {
    stack.validate()?;
    let l = stack.layers.len();
    let k: Vec<Complex64> = stack
        .layers
        .iter()
        .map(|layer| layer.n * (2.0 * std::f64::consts::PI / stack.wavelength_nm))
        .collect();
    let n: Vec<Complex64> = stack.layers.iter().map(|layer| layer.n).collect();

    let mut amplitudes = vec![(Complex64::default(), Complex64::default()); l];
    amplitudes[l - 1] = (Complex64::new(1.0, 0.0), Complex64::default());
    for j in (0..l - 1).rev() {
        let (a_next, b_next) = amplitudes[j + 1];
        let ratio = n[j + 1] / n[j];
        let half = Complex64::new(0.5, 0.0);
        let at_interface_a = half * ((1.0 + ratio) * a_next + (1.0 - ratio) * b_next);
        let at_interface_b = half * ((1.0 - ratio) * a_next + (1.0 + ratio) * b_next);
        amplitudes[j] = match stack.layers[j].thickness_nm {
            Some(d) => {
                let phi = Complex64::i() * k[j] * d;
                (at_interface_a * (-phi).exp(), at_interface_b * phi.exp())
            }
            None => (at_interface_a, at_interface_b),
        };
    }

    let a0 = amplitudes[0].0;
    if a0.norm() < 1e-300 {
        return Err(Error::Optics("degenerate stack: vanishing incident amplitude".into()));
    }
    for pair in &mut amplitudes {
        pair.0 /= a0;
        pair.1 /= a0;
    }

    let mut starts = vec![0.0; l];
    let mut z = 0.0;
    for (idx, d) in stack.finite_layers() {
        starts[idx] = z;
        z += d;
    }
    starts[l - 1] = z;

    let r = amplitudes[0].1;
    let t = amplitudes[l - 1].0;
    let n0_re = n[0].re;
    let reflectance = r.norm_sqr();
    let transmittance = n[l - 1].re * t.norm_sqr() / n0_re;

    Ok(TmmSolution {
        amplitudes,
        k,
        starts,
        r,
        t,
        reflectance,
        transmittance,
        n,
        n0_re,
    })
}

/// Depth-resolved transmittance and local absorption on the profile grid.
/// `alpha_per_nm[k]` is the flux lost per nm over the interval ending at
/// `z_nm[k]`; the first point copies the first interval so the arrays align.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    pub z_nm: Vec<f64>,
    pub transmittance: Vec<f64>,
    pub alpha_per_nm: Vec<f64>,
    /// Layer index owning the interval that ends at each point.
    pub layer_index: Vec<usize>,
}

impl DepthProfile {
    pub fn to_table(&self) -> DataTable {
        let mut table = DataTable::new(vec![
            "z_nm".into(),
            "transmittance".into(),
            "alpha_per_nm".into(),
        ]);
        for i in 0..self.z_nm.len() {
            table
                .push_row(vec![self.z_nm[i], self.transmittance[i], self.alpha_per_nm[i]])
                .expect("fixed arity");
        }
        table
    }
}

fn layer_steps(d: f64, dz: f64) -> (usize, f64) {
    let steps = (d / dz).ceil().max(1.0) as usize;
    (steps, d / steps as f64)
}

/// Walks every finite layer with a step no coarser than `stack.dz_nm`
/// (refined so each thickness divides evenly) and records flux and local
/// absorption.
pub fn poynting_profile(solution: &TmmSolution, stack: &LayerStack) -> Result<DepthProfile> {
    stack.validate()?;
    let mut z_nm = vec![0.0];
    let mut transmittance = vec![solution.transmittance_at(0, 0.0)];
    let mut alpha = vec![0.0];
    let mut layer_index = vec![0];

    for (idx, d) in stack.finite_layers() {
        let (steps, h) = layer_steps(d, stack.dz_nm);
        for s in 1..=steps {
            let zeta = if s == steps { d } else { s as f64 * h };
            let t = solution.transmittance_at(idx, zeta);
            let z = solution.starts[idx] + zeta;
            let prev_t = *transmittance.last().expect("nonempty");
            let prev_z = *z_nm.last().expect("nonempty");
            z_nm.push(z);
            alpha.push((prev_t - t) / (z - prev_z));
            transmittance.push(t);
            layer_index.push(idx);
        }
    }
    if alpha.len() > 1 {
        alpha[0] = alpha[1];
        layer_index[0] = layer_index[1];
    }
    Ok(DepthProfile { z_nm, transmittance, alpha_per_nm: alpha, layer_index })
}

/// Thickness-averaged absorption of one finite layer: alpha integrated over
/// the layer by the trapezoid rule on its profile grid, divided by the
/// thickness. The value at the layer entrance reuses the first interval, so
/// the quadrature stays within the layer.
pub fn mean_absorption(solution: &TmmSolution, stack: &LayerStack, layer: usize) -> Result<f64> {
    let d = match stack.layers.get(layer).and_then(|l| l.thickness_nm) {
        Some(d) => d,
        None => {
            return Err(Error::InvalidParameter(format!(
                "layer {layer} is not a finite film"
            )));
        }
    };
    let (steps, h) = layer_steps(d, stack.dz_nm);
    let mut t_prev = solution.transmittance_at(layer, 0.0);
    let mut alphas = Vec::with_capacity(steps + 1);
    alphas.push(0.0); // placeholder, replaced by the first interval value
    let mut z_prev = 0.0;
    for s in 1..=steps {
        let zeta = if s == steps { d } else { s as f64 * h };
        let t = solution.transmittance_at(layer, zeta);
        alphas.push((t_prev - t) / (zeta - z_prev));
        t_prev = t;
        z_prev = zeta;
    }
    alphas[0] = alphas[1];
    let mut integral = 0.0;
    for w in alphas.windows(2) {
        integral += 0.5 * (w[0] + w[1]) * h;
    }
    Ok(integral / d)
}

/// Energy ledger of a solved stack; `total` must close to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAudit {
    pub reflectance: f64,
    /// Absorbed fraction per finite layer, in stack order.
    pub absorbed: Vec<f64>,
    pub transmittance: f64,
    pub total: f64,
}

/// Exact flux bookkeeping from the interface amplitudes. Fails if
/// R + sum(absorbed) + T deviates from 1 by more than [`ENERGY_AUDIT_TOL`].
pub fn energy_audit(solution: &TmmSolution, stack: &LayerStack) -> Result<EnergyAudit> {
    stack.validate()?;
    let mut absorbed = Vec::new();
    for (idx, d) in stack.finite_layers() {
        let t_in = solution.transmittance_at(idx, 0.0);
        let t_out = solution.transmittance_at(idx, d);
        absorbed.push(t_in - t_out);
    }
    let total = solution.reflectance + absorbed.iter().sum::<f64>() + solution.transmittance;
    if (total - 1.0).abs() > ENERGY_AUDIT_TOL {
        return Err(Error::Optics(format!(
            "energy audit failed: R + A + T = {total} deviates from 1 by {:.3e}",
            (total - 1.0).abs()
        )));
    }
    Ok(EnergyAudit {
        reflectance: solution.reflectance,
        absorbed,
        transmittance: solution.transmittance,
        total,
    })
}

/// Mean absorption of the swept layer as a function of its thickness, over
/// an inclusive range. Returns (thickness, mean alpha) pairs.
pub fn mean_absorption_sweep(
    stack: &LayerStack,
    swept_layer: usize,
    t_min_nm: f64,
    t_max_nm: f64,
    t_step_nm: f64,
) -> Result<Vec<(f64, f64)>> {
    stack.validate()?;
    if stack.layers.get(swept_layer).and_then(|l| l.thickness_nm).is_none() {
        return Err(Error::InvalidParameter(format!(
            "swept layer {swept_layer} is not a finite film"
        )));
    }
    if !(t_min_nm > 0.0) || !(t_step_nm > 0.0) || t_max_nm < t_min_nm {
        return Err(Error::InvalidParameter(format!(
            "bad sweep range: min {t_min_nm}, max {t_max_nm}, step {t_step_nm}"
        )));
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = t_min_nm + k as f64 * t_step_nm;
        if t > t_max_nm * (1.0 + 1e-12) {
            break;
        }
        let mut varied = stack.clone();
        varied.layers[swept_layer].thickness_nm = Some(t);
        let solution = transfer_matrix(&varied)?;
        out.push((t, mean_absorption(&solution, &varied, swept_layer)?));
        k += 1;
    }
    Ok(out)
}

/// Strict interior local maxima of a sampled curve.
pub fn local_maxima(curve: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..curve.len().saturating_sub(1) {
        if curve[i].1 > curve[i - 1].1 && curve[i].1 > curve[i + 1].1 {
            out.push(curve[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn air() -> Layer {
        Layer::semi_infinite(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn bare_silicon_matches_fresnel() {
        let stack = LayerStack::new(vec![air(), Layer::semi_infinite(N_SI)], 532.0);
        let sol = transfer_matrix(&stack).unwrap();
        let r = (Complex64::new(1.0, 0.0) - N_SI) / (Complex64::new(1.0, 0.0) + N_SI);
        assert_relative_eq!(sol.reflectance, r.norm_sqr(), max_relative = 1e-12);
        assert!((sol.reflectance - 0.374).abs() < 1e-3);
    }

    #[test]
    fn matched_media_transmit_everything() {
        let n = Complex64::new(1.5, 0.0);
        let stack = LayerStack::new(
            vec![Layer::semi_infinite(n), Layer::film(123.0, n), Layer::semi_infinite(n)],
            532.0,
        );
        let sol = transfer_matrix(&stack).unwrap();
        assert!(sol.reflectance < 1e-28);
        assert_relative_eq!(sol.transmittance, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn quarter_wave_coating_hits_the_textbook_reflectance() {
        let n1 = 1.38;
        let ns = 1.52;
        let stack = LayerStack::new(
            vec![
                air(),
                Layer::film(532.0 / (4.0 * n1), Complex64::new(n1, 0.0)),
                Layer::semi_infinite(Complex64::new(ns, 0.0)),
            ],
            532.0,
        );
        let sol = transfer_matrix(&stack).unwrap();
        let expect = ((ns - n1 * n1) / (ns + n1 * n1)).powi(2);
        assert!((sol.reflectance - expect).abs() < 1e-10);
    }

    #[test]
    fn lossless_stack_carries_constant_flux() {
        let stack = LayerStack::new(
            vec![
                air(),
                Layer::film(80.0, Complex64::new(2.3, 0.0)),
                Layer::film(90.0, N_SIO2),
                Layer::semi_infinite(Complex64::new(1.52, 0.0)),
            ],
            532.0,
        );
        let sol = transfer_matrix(&stack).unwrap();
        let profile = poynting_profile(&sol, &stack).unwrap();
        let expect = 1.0 - sol.reflectance;
        for (t, a) in profile.transmittance.iter().zip(&profile.alpha_per_nm) {
            assert_relative_eq!(*t, expect, epsilon = 1e-12);
            assert!(a.abs() < 1e-12);
        }
        assert_relative_eq!(sol.transmittance, expect, epsilon = 1e-12);
    }

    #[test]
    fn flux_is_continuous_across_interfaces() {
        let stack = LayerStack::hbn_on_oxide(35.0);
        let sol = transfer_matrix(&stack).unwrap();
        assert_relative_eq!(sol.transmittance_at(0, 0.0), 1.0 - sol.reflectance, epsilon = 1e-12);
        assert_relative_eq!(
            sol.transmittance_at(1, 35.0),
            sol.transmittance_at(2, 0.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            sol.transmittance_at(2, 90.0),
            sol.transmittance,
            epsilon = 1e-12
        );
    }

    #[test]
    fn flux_decreases_through_the_absorbing_film() {
        let stack = LayerStack::hbn_on_oxide(120.0);
        let sol = transfer_matrix(&stack).unwrap();
        let profile = poynting_profile(&sol, &stack).unwrap();
        let mut prev = f64::INFINITY;
        for (i, t) in profile.transmittance.iter().enumerate() {
            if profile.layer_index[i] == 1 && i > 0 {
                assert!(*t < prev, "flux must strictly decrease in the absorber");
            }
            prev = *t;
        }
    }

    #[test]
    fn absorption_peaks_near_the_top_of_a_thick_flake() {
        let stack = LayerStack::hbn_on_oxide(120.0);
        let sol = transfer_matrix(&stack).unwrap();
        let profile = poynting_profile(&sol, &stack).unwrap();
        let in_flake: Vec<(f64, f64)> = profile
            .z_nm
            .iter()
            .zip(&profile.alpha_per_nm)
            .zip(&profile.layer_index)
            .filter(|((_, _), li)| **li == 1)
            .map(|((z, a), _)| (*z, *a))
            .collect();
        let (z_max, _) = in_flake
            .iter()
            .cloned()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(z_max <= 30.0, "strongest absorption at z = {z_max} nm");
    }

    #[test]
    fn beer_lambert_decay_in_a_matched_absorber() {
        let n_abs = Complex64::new(2.0, 0.05);
        let stack = LayerStack::new(
            vec![
                Layer::semi_infinite(Complex64::new(2.0, 0.0)),
                Layer::film(400.0, n_abs),
                Layer::semi_infinite(n_abs),
            ],
            532.0,
        );
        let sol = transfer_matrix(&stack).unwrap();
        let profile = poynting_profile(&sol, &stack).unwrap();
        let alpha0 = absorption_coefficient_per_nm(n_abs, 532.0);
        for i in 1..profile.z_nm.len() {
            let mid = 0.5 * (profile.transmittance[i - 1] + profile.transmittance[i]);
            let rate = profile.alpha_per_nm[i] / mid;
            assert!(
                (rate / alpha0 - 1.0).abs() < 0.01,
                "decay rate {rate:.6e} vs {alpha0:.6e} at z = {}",
                profile.z_nm[i]
            );
        }
    }

    #[test]
    fn dissipation_integral_matches_flux_difference() {
        // independent route: alpha(z) = (2 pi / lambda) Im(n^2) |E|^2 / n0
        let stack = LayerStack {
            dz_nm: 0.05,
            ..LayerStack::hbn_on_oxide(120.0)
        };
        let sol = transfer_matrix(&stack).unwrap();
        let d = 120.0;
        let steps = (d / stack.dz_nm).round() as usize;
        let h = d / steps as f64;
        let coeff = 2.0 * std::f64::consts::PI / stack.wavelength_nm * (N_HBN * N_HBN).im;
        let mut integral = 0.0;
        for s in 0..=steps {
            let zeta = s as f64 * h;
            let weight = if s == 0 || s == steps { 0.5 } else { 1.0 };
            integral += weight * coeff * sol.field_intensity_at(1, zeta) * h;
        }
        let flux_drop = sol.transmittance_at(1, 0.0) - sol.transmittance_at(1, d);
        assert_relative_eq!(integral, flux_drop, max_relative = 1e-5);
    }

    #[test]
    fn audit_closes_for_the_flake_stack() {
        for t in [3.0, 15.0, 42.0, 120.0, 333.0] {
            let stack = LayerStack::hbn_on_oxide(t);
            let sol = transfer_matrix(&stack).unwrap();
            let audit = energy_audit(&sol, &stack).unwrap();
            assert!((audit.total - 1.0).abs() <= ENERGY_AUDIT_TOL);
            assert!(audit.absorbed.iter().all(|a| *a >= -1e-12));
        }
    }

    #[test]
    fn opaque_substrate_splits_power_between_r_and_a() {
        let stack = LayerStack::new(
            vec![air(), Layer::film(20_000.0, N_SI), Layer::semi_infinite(N_SI)],
            532.0,
        );
        let sol = transfer_matrix(&stack).unwrap();
        let audit = energy_audit(&sol, &stack).unwrap();
        assert!(sol.transmittance < 1e-8);
        assert_relative_eq!(audit.reflectance + audit.absorbed[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn mean_absorption_converges_at_first_order_in_the_depth_step() {
        // The depth derivative is a one-sided difference, so the mean
        // absorption carries an O(dz) bias: halving dz should roughly halve
        // the change, and the remaining bias at dz = 2 nm stays small.
        for t in [10.0, 50.0, 115.0] {
            let alpha_at = |dz: f64| {
                let stack = LayerStack { dz_nm: dz, ..LayerStack::hbn_on_oxide(t) };
                mean_absorption(&transfer_matrix(&stack).unwrap(), &stack, 1).unwrap()
            };
            let (a2, a1, a05) = (alpha_at(2.0), alpha_at(1.0), alpha_at(0.5));
            let step_21 = (a2 - a1).abs();
            let step_105 = (a1 - a05).abs();
            assert!(
                (a2 / a1 - 1.0).abs() < 0.03,
                "t = {t}: {a2:.6e} vs {a1:.6e}"
            );
            assert!(
                step_105 < 0.75 * step_21,
                "t = {t}: refinement steps {step_21:.3e} then {step_105:.3e} \
                 are not shrinking like a first-order scheme"
            );
        }
    }

    #[test]
    fn doubling_the_extinction_doubles_thin_film_absorption() {
        let base = LayerStack::hbn_on_oxide(3.0);
        let mut doubled = base.clone();
        doubled.layers[1].n = Complex64::new(2.3, 0.06);
        let a1 = mean_absorption(&transfer_matrix(&base).unwrap(), &base, 1).unwrap();
        let a2 = mean_absorption(&transfer_matrix(&doubled).unwrap(), &doubled, 1).unwrap();
        assert!((a2 / a1 / 2.0 - 1.0).abs() < 0.05, "ratio {}", a2 / a1);
    }

    #[test]
    fn gain_and_zero_index_are_rejected() {
        let bad_gain = LayerStack::new(
            vec![air(), Layer::semi_infinite(Complex64::new(2.0, -0.1))],
            532.0,
        );
        assert!(transfer_matrix(&bad_gain).is_err());
        let bad_zero = LayerStack::new(
            vec![air(), Layer::semi_infinite(Complex64::new(0.0, 0.0))],
            532.0,
        );
        assert!(transfer_matrix(&bad_zero).is_err());
        let bad_absorbing_entry = LayerStack::new(
            vec![Layer::semi_infinite(Complex64::new(1.0, 0.1)), Layer::semi_infinite(N_SI)],
            532.0,
        );
        assert!(transfer_matrix(&bad_absorbing_entry).is_err());
    }

    #[test]
    fn sweep_covers_the_inclusive_range() {
        let stack = LayerStack::hbn_on_oxide(10.0);
        let sweep = mean_absorption_sweep(&stack, 1, 5.0, 25.0, 5.0).unwrap();
        let ts: Vec<f64> = sweep.iter().map(|(t, _)| *t).collect();
        assert_eq!(ts, vec![5.0, 10.0, 15.0, 20.0, 25.0]);
        assert!(sweep.iter().all(|(_, a)| *a > 0.0));
    }
}
