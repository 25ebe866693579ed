//! Ground-state spin Hamiltonian of the boron-vacancy defect.
//!
//! The electron spin is S = 1 with zero-field splitting D. A local electric
//! field couples through the transverse Stark coefficient d_perp and mixes
//! |+1> with |-1>; the axial coefficient d_par vanishes by symmetry but is
//! kept as a parameter. The three nearest ^14N nuclei (I = 1) enter through
//! the axial hyperfine constant A_zz only, so the total nuclear projection
//! m in -3..=3 is conserved and the 81-dimensional problem factorizes into
//! 3x3 blocks with multiplicities 1:3:6:7:6:3:1.
//!
//! Basis ordering everywhere is {|+1>, |0>, |-1>}.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use crate::eigen::{eigh3, eigh_dyn};
use crate::error::{Error, Result};

/// Zero-field splitting D in MHz.
pub const ZERO_FIELD_SPLITTING_MHZ: f64 = 3460.0;
/// Transverse Stark coefficient d_perp in Hz per (V/cm).
pub const TRANSVERSE_STARK_HZ_PER_V_PER_CM: f64 = 21.0;
/// Axial Stark coefficient d_par in Hz per (V/cm); zero by symmetry.
pub const AXIAL_STARK_HZ_PER_V_PER_CM: f64 = 0.0;
/// Axial hyperfine constant A_zz to one ^14N in MHz.
pub const HYPERFINE_A_ZZ_MHZ: f64 = 47.0;

const HZ_TO_MHZ: f64 = 1e-6;

/// Number of nuclear states with total projection m for three I = 1 nuclei,
/// indexed by m + 3.
pub const NUCLEAR_MULTIPLICITIES: [u32; 7] = [1, 3, 6, 7, 6, 3, 1];

/// Static electric field at the defect site, in V/cm, defect frame (z along
/// the symmetry axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectricField {
    pub ex_v_per_cm: f64,
    pub ey_v_per_cm: f64,
    pub ez_v_per_cm: f64,
}

impl ElectricField {
    pub const ZERO: Self = Self { ex_v_per_cm: 0.0, ey_v_per_cm: 0.0, ez_v_per_cm: 0.0 };

    pub fn new(ex: f64, ey: f64, ez: f64) -> Self {
        Self { ex_v_per_cm: ex, ey_v_per_cm: ey, ez_v_per_cm: ez }
    }

    /// In-plane magnitude sqrt(ex^2 + ey^2).
    pub fn transverse_v_per_cm(&self) -> f64 {
        self.ex_v_per_cm.hypot(self.ey_v_per_cm)
    }
}

/// Spin-Hamiltonian parameters. Frequencies in MHz, Stark coefficients in
/// Hz per (V/cm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    pub d_mhz: f64,
    pub d_perp_hz_per_v_per_cm: f64,
    pub d_par_hz_per_v_per_cm: f64,
    pub a_zz_mhz: f64,
    /// Number of coupled ^14N nuclei; 0 (electron only) or 3.
    pub n_nuclei: u8,
}

impl Default for HamiltonianParams {
    fn default() -> Self {
        Self {
            d_mhz: ZERO_FIELD_SPLITTING_MHZ,
            d_perp_hz_per_v_per_cm: TRANSVERSE_STARK_HZ_PER_V_PER_CM,
            d_par_hz_per_v_per_cm: AXIAL_STARK_HZ_PER_V_PER_CM,
            a_zz_mhz: HYPERFINE_A_ZZ_MHZ,
            n_nuclei: 3,
        }
    }
}

impl HamiltonianParams {
    /// Electron-only variant (no hyperfine structure).
    pub fn electron_only(self) -> Self {
        Self { n_nuclei: 0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_mhz", self.d_mhz),
            ("d_perp_hz_per_v_per_cm", self.d_perp_hz_per_v_per_cm),
            ("d_par_hz_per_v_per_cm", self.d_par_hz_per_v_per_cm),
            ("a_zz_mhz", self.a_zz_mhz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if self.d_mhz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "d_mhz must be positive, got {}",
                self.d_mhz
            )));
        }
        if self.n_nuclei != 0 && self.n_nuclei != 3 {
            return Err(Error::InvalidParameter(format!(
                "n_nuclei must be 0 or 3, got {}",
                self.n_nuclei
            )));
        }
        Ok(())
    }
}

/// How microwave transition weights are assigned.
///
/// The in-plane drive orientation relative to the (random) local field azimuth
/// is not controlled in experiments, so the default averages the two
/// transverse drive quadratures, which is azimuth-independent. `SxDrive`
/// weights by |<f|Sx|i>|^2 alone; `Uniform` gives every allowed transition
/// equal weight. All modes coincide at zero field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriveWeighting {
    #[default]
    TransverseAverage,
    SxDrive,
    Uniform,
}

/// One resonance line: transition frequency and normalized weight, tagged
/// with the nuclear projection of the block it came from.
#[derive(Debug, Clone, Copy)]
pub struct Transition {
    pub frequency_mhz: f64,
    pub weight: f64,
    pub m_nuclear: i32,
    pub multiplicity: u32,
}

/// All resonance lines of one field configuration. Weights sum to 1.
#[derive(Debug, Clone)]
pub struct TransitionSet {
    pub transitions: Vec<Transition>,
    /// True if any block had no clearly dominant |0>-like eigenstate
    /// (overlap tie within 1e-6).
    pub degenerate_overlap: bool,
}

impl TransitionSet {
    pub fn total_weight(&self) -> f64 {
        self.transitions.iter().map(|t| t.weight).sum()
    }

    /// Collapses transitions closer than `tol_mhz` into single lines
    /// (weighted-mean position, summed weight), ascending in frequency.
    pub fn merged_lines(&self, tol_mhz: f64) -> Vec<(f64, f64)> {
        let mut sorted: Vec<&Transition> = self.transitions.iter().collect();
        sorted.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut group: Vec<&Transition> = Vec::new();
        let flush = |group: &[&Transition], out: &mut Vec<(f64, f64)>| {
            if group.is_empty() {
                return;
            }
            let w: f64 = group.iter().map(|t| t.weight).sum();
            let f = if w > 0.0 {
                group.iter().map(|t| t.weight * t.frequency_mhz).sum::<f64>() / w
            } else {
                group.iter().map(|t| t.frequency_mhz).sum::<f64>() / group.len() as f64
            };
            out.push((f, w));
        };
        for t in sorted {
            if let Some(last) = group.last() {
                if t.frequency_mhz - last.frequency_mhz > tol_mhz {
                    flush(&group, &mut out);
                    group.clear();
                }
            }
            group.push(t);
        }
        flush(&group, &mut out);
        out
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sx for S = 1 in the {|+1>, |0>, |-1>} basis.
pub fn spin1_sx() -> Matrix3<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(
        c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0),
        c(s, 0.0), c(0.0, 0.0), c(s, 0.0),
        c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0),
    )
}

/// Sy for S = 1 in the {|+1>, |0>, |-1>} basis.
pub fn spin1_sy() -> Matrix3<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(
        c(0.0, 0.0), c(0.0, -s), c(0.0, 0.0),
        c(0.0, s), c(0.0, 0.0), c(0.0, -s),
        c(0.0, 0.0), c(0.0, s), c(0.0, 0.0),
    )
}

/// Sz for S = 1 in the {|+1>, |0>, |-1>} basis.
pub fn spin1_sz() -> Matrix3<Complex64> {
    Matrix3::from_diagonal(&nalgebra::Vector3::new(c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)))
}

/// Hamiltonian of the 3x3 electron block with total nuclear projection
/// `m_nuclear`, in MHz:
///
///   H = (D + d_par ez) Sz^2
///     + d_perp [ex (Sy^2 - Sx^2) + ey (Sx Sy + Sy Sx)]
///     + A_zz m Sz
///
/// Stark terms convert Hz to MHz internally. |0> stays an exact eigenstate
/// at energy 0; the transverse field couples only |+1> and |-1>.
pub fn electron_block_hamiltonian(
    field: &ElectricField,
    params: &HamiltonianParams,
    m_nuclear: i32,
) -> Matrix3<Complex64> {
    let d_eff = params.d_mhz + params.d_par_hz_per_v_per_cm * field.ez_v_per_cm * HZ_TO_MHZ;
    let am = params.a_zz_mhz * m_nuclear as f64;
    let dp = params.d_perp_hz_per_v_per_cm * HZ_TO_MHZ;
    // matrix element of the Stark term between |+1> and <-1|
    let off = c(-dp * field.ex_v_per_cm, -dp * field.ey_v_per_cm);
    Matrix3::new(
        c(d_eff + am, 0.0), c(0.0, 0.0), off,
        c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        off.conj(), c(0.0, 0.0), c(d_eff - am, 0.0),
    )
}

/// Closed-form transition frequencies (lower, upper) of one block:
/// D + d_par ez -/+ sqrt((A_zz m)^2 + (d_perp E_perp)^2), MHz.
pub fn analytic_block_frequencies(
    field: &ElectricField,
    params: &HamiltonianParams,
    m_nuclear: i32,
) -> (f64, f64) {
    let d_eff = params.d_mhz + params.d_par_hz_per_v_per_cm * field.ez_v_per_cm * HZ_TO_MHZ;
    let am = params.a_zz_mhz * m_nuclear as f64;
    let e_perp = params.d_perp_hz_per_v_per_cm * HZ_TO_MHZ * field.transverse_v_per_cm();
    let split = am.hypot(e_perp);
    (d_eff - split, d_eff + split)
}

fn blocks_for(params: &HamiltonianParams) -> Result<Vec<(i32, u32)>> {
    match params.n_nuclei {
        0 => Ok(vec![(0, 1)]),
        3 => Ok((-3..=3).map(|m| (m, NUCLEAR_MULTIPLICITIES[(m + 3) as usize])).collect()),
        n => Err(Error::InvalidParameter(format!("n_nuclei must be 0 or 3, got {n}"))),
    }
}

/// Squared drive matrix elements |<f|Sx|i>|^2 and |<f|Sy|i>|^2 from
/// eigenvector columns of a 3x3 block.
fn drive_elements(
    vectors: &Matrix3<Complex64>,
    i: usize,
    f: usize,
) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let vi = vectors.column(i);
    let vf = vectors.column(f);
    // Sx vi = s (vi1, vi0 + vi2, vi1); Sy vi = s (-i vi1, i vi0 - i vi2, i vi1)
    let sx = s * (vf[0].conj() * vi[1] + vf[1].conj() * (vi[0] + vi[2]) + vf[2].conj() * vi[1]);
    let i1 = c(0.0, 1.0);
    let sy = s
        * (vf[0].conj() * (-i1 * vi[1])
            + vf[1].conj() * (i1 * vi[0] - i1 * vi[2])
            + vf[2].conj() * (i1 * vi[1]));
    (sx.norm_sqr(), sy.norm_sqr())
}

fn weight_from(drive: DriveWeighting, sx2: f64, sy2: f64) -> f64 {
    match drive {
        DriveWeighting::TransverseAverage => 0.5 * (sx2 + sy2),
        DriveWeighting::SxDrive => sx2,
        DriveWeighting::Uniform => 1.0,
    }
}

/// Resonance lines for one field configuration via the block decomposition.
///
/// Each block is diagonalized, the |0>-like eigenstate is identified by
/// maximal overlap with |0> (ties within 1e-6 resolved toward lower energy
/// and flagged), and the two transitions out of it are weighted by the drive
/// convention and the block multiplicity. Weights are normalized to sum to 1.
pub fn block_transitions(
    field: &ElectricField,
    params: &HamiltonianParams,
    drive: DriveWeighting,
) -> Result<TransitionSet> {
    params.validate()?;
    let mut transitions = Vec::with_capacity(14);
    let mut degenerate = false;
    for (m, mult) in blocks_for(params)? {
        let h = electron_block_hamiltonian(field, params, m);
        let eig = eigh3(&h)?;
        let overlaps = [
            eig.vectors[(1, 0)].norm_sqr(),
            eig.vectors[(1, 1)].norm_sqr(),
            eig.vectors[(1, 2)].norm_sqr(),
        ];
        // eigenvalues are ascending, so the first index attaining the maximum
        // is the lowest-energy candidate
        let mut i0 = 0;
        for k in 1..3 {
            if overlaps[k] > overlaps[i0] + 1e-6 {
                i0 = k;
            }
        }
        let runner_up = (0..3)
            .filter(|&k| k != i0)
            .map(|k| overlaps[k])
            .fold(f64::NEG_INFINITY, f64::max);
        if (overlaps[i0] - runner_up).abs() < 1e-6 {
            degenerate = true;
        }
        for f in 0..3 {
            if f == i0 {
                continue;
            }
            let (sx2, sy2) = drive_elements(&eig.vectors, i0, f);
            transitions.push(Transition {
                frequency_mhz: eig.values[f] - eig.values[i0],
                weight: weight_from(drive, sx2, sy2) * mult as f64,
                m_nuclear: m,
                multiplicity: mult,
            });
        }
    }
    let total: f64 = transitions.iter().map(|t| t.weight).sum();
    if total > 0.0 {
        for t in &mut transitions {
            t.weight /= total;
        }
    }
    transitions.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    Ok(TransitionSet { transitions, degenerate_overlap: degenerate })
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

fn identity(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

/// Resonance lines computed in the full electron (x) nuclear product space,
/// without exploiting the block structure. Slow path; used to validate
/// [`block_transitions`].
///
/// The Hamiltonian is assembled from explicit operator products and
/// Kronecker lifts: H = H_el (x) 1 + A_zz Sz (x) sum_k Iz_k. Initial states
/// are those with summed |0>-electron weight above 1/2; weights follow the
/// same drive convention and normalization as the block path.
pub fn full_hilbert_transitions(
    field: &ElectricField,
    params: &HamiltonianParams,
    drive: DriveWeighting,
) -> Result<TransitionSet> {
    params.validate()?;
    let n_nuc = params.n_nuclei as usize;
    let nuc_dim = 3usize.pow(n_nuc as u32);
    let dim = 3 * nuc_dim;

    let sx = DMatrix::from_fn(3, 3, |i, j| spin1_sx()[(i, j)]);
    let sy = DMatrix::from_fn(3, 3, |i, j| spin1_sy()[(i, j)]);
    let sz = DMatrix::from_fn(3, 3, |i, j| spin1_sz()[(i, j)]);
    let d_eff = params.d_mhz + params.d_par_hz_per_v_per_cm * field.ez_v_per_cm * HZ_TO_MHZ;
    let dp = params.d_perp_hz_per_v_per_cm * HZ_TO_MHZ;
    let h_el = (&sz * &sz).scale(d_eff)
        + ((&sy * &sy - &sx * &sx).scale(field.ex_v_per_cm)
            + (&sx * &sy + &sy * &sx).scale(field.ey_v_per_cm))
        .scale(dp);

    let mut h = kron(&h_el, &identity(nuc_dim));
    if n_nuc > 0 {
        // Iz for I = 1 shares the Sz matrix
        let mut iz_total = DMatrix::zeros(nuc_dim, nuc_dim);
        for k in 0..n_nuc {
            let left = identity(3usize.pow(k as u32));
            let right = identity(3usize.pow((n_nuc - 1 - k) as u32));
            iz_total += kron(&kron(&left, &sz), &right);
        }
        h += kron(&sz, &iz_total).scale(params.a_zz_mhz);
    }

    let eig = eigh_dyn(&h)?;
    let sx_full = kron(&sx, &identity(nuc_dim));
    let sy_full = kron(&sy, &identity(nuc_dim));

    // summed |0>-electron weight of eigenstate k
    let zero_weight = |k: usize| -> f64 {
        (0..nuc_dim).map(|j| eig.vectors[(nuc_dim + j, k)].norm_sqr()).sum()
    };
    let initial: Vec<usize> = (0..dim).filter(|&k| zero_weight(k) > 0.5).collect();

    let mut transitions = Vec::new();
    for &i in &initial {
        let vi = eig.vectors.column(i);
        let sx_vi = &sx_full * vi;
        let sy_vi = &sy_full * vi;
        for f in 0..dim {
            if initial.contains(&f) {
                continue;
            }
            let vf = eig.vectors.column(f);
            let sx2 = vf.dotc(&sx_vi).norm_sqr();
            let sy2 = vf.dotc(&sy_vi).norm_sqr();
            if 0.5 * (sx2 + sy2) < 1e-12 {
                continue;
            }
            transitions.push(Transition {
                frequency_mhz: eig.values[f] - eig.values[i],
                weight: weight_from(drive, sx2, sy2),
                m_nuclear: 0,
                multiplicity: 1,
            });
        }
    }
    let total: f64 = transitions.iter().map(|t| t.weight).sum();
    if total > 0.0 {
        for t in &mut transitions {
            t.weight /= total;
        }
    }
    transitions.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    Ok(TransitionSet { transitions, degenerate_overlap: false })
}
