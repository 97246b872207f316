//! Preprocessing chain: DC-removing high-pass, band-pass filtering,
//! SNR screening, and z-score standardization.

mod biquad;
mod snr;
mod zscore;

pub use biquad::{design_filter, BiquadCascade, BiquadStage, FilterDesign, FilterKind};
pub use snr::{rms, rms_db, snr_screen, snr_screen_with_floor, SnrPolicy, SnrScreen};
pub use zscore::Scaler;
