//! Parameter estimation: spectrum fits, exponential transients, line fits,
//! and the two-channel relaxation decomposition.

mod esr;
mod exponential;
mod linear;
mod simplex;

pub use esr::{fit_esr, EsrFit, EsrFitOptions, MIN_OVERLAP_POINTS};
pub use exponential::{
    fit_exponential, fit_exponential_decay, fit_exponential_rise, ExponentialFit, TimeTrace,
    TraceKind, MIN_TRACE_SAMPLES,
};
pub use linear::{fit_linear_slope, LinearFit};
pub use simplex::{minimize, SimplexOptions, SimplexOutcome};

use crate::error::{Error, Result};

/// Splits a measured relaxation time into its non-phonon part by subtracting
/// the phonon rate: returns (1/t1_total - 1/t1_phonon)^-1.
///
/// `Ok(None)` means the two times agree within 1e-9 relative, so the
/// remaining channel is unbounded. An infinite `t1_phonon_us` attributes
/// everything to the other channel. A total time slower than the phonon
/// channel would imply a negative rate and is rejected.
pub fn t1_two_channel(t1_total_us: f64, t1_phonon_us: f64) -> Result<Option<f64>> {
    if !(t1_total_us > 0.0) || !t1_total_us.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t1_total_us must be positive and finite, got {t1_total_us}"
        )));
    }
    if !(t1_phonon_us > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t1_phonon_us must be positive, got {t1_phonon_us}"
        )));
    }
    if t1_phonon_us.is_infinite() {
        return Ok(Some(t1_total_us));
    }
    if (t1_phonon_us - t1_total_us).abs() <= 1e-9 * t1_phonon_us {
        return Ok(None);
    }
    if t1_total_us > t1_phonon_us {
        return Err(Error::InvalidParameter(format!(
            "t1_total ({t1_total_us} us) exceeds the phonon channel ({t1_phonon_us} us); \
             the residual rate would be negative"
        )));
    }
    Ok(Some(1.0 / (1.0 / t1_total_us - 1.0 / t1_phonon_us)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_pair_gives_thirteen_twelfths() {
        let t = t1_two_channel(1.0, 13.0).unwrap().unwrap();
        assert_relative_eq!(t, 13.0 / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_times_mean_the_other_channel_is_unbounded() {
        assert_eq!(t1_two_channel(13.0, 13.0).unwrap(), None);
        assert_eq!(t1_two_channel(13.0, 13.0 * (1.0 + 1e-12)).unwrap(), None);
    }

    #[test]
    fn infinite_phonon_channel_returns_the_total() {
        assert_eq!(t1_two_channel(4.2, f64::INFINITY).unwrap(), Some(4.2));
    }

    #[test]
    fn slower_total_than_phonon_is_rejected() {
        assert!(t1_two_channel(14.0, 13.0).is_err());
    }

    #[test]
    fn nonpositive_times_are_rejected() {
        assert!(t1_two_channel(0.0, 13.0).is_err());
        assert!(t1_two_channel(-1.0, 13.0).is_err());
        assert!(t1_two_channel(1.0, 0.0).is_err());
        assert!(t1_two_channel(f64::NAN, 13.0).is_err());
    }

    #[test]
    fn decomposition_inverts_rate_addition() {
        // building T1 from two known channels and decomposing recovers one
        let t1_noise = 2.5;
        let t1_phonon = 9.0;
        let t1_total = 1.0 / (1.0 / t1_noise + 1.0 / t1_phonon);
        let recovered = t1_two_channel(t1_total, t1_phonon).unwrap().unwrap();
        assert_relative_eq!(recovered, t1_noise, epsilon = 1e-12);
    }
}
