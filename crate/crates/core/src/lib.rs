//! Nonlinear rectenna model and multisine power-waveform design for
//! multi-antenna wireless power transfer.
//!
//! The crate is organised bottom-up:
//!
//! - [`signals`]: subcarrier grid, multisine waveforms, sampling and PAPR.
//! - [`channels`]: multipath channel generation and frequency responses.
//! - [`quadrature`]: period means of smooth periodic integrands.
//! - [`rectenna`]: diode model, the implicit DC-voltage equation and its inversion.
//! - [`single_er`]: closed-form beamforming, subcarrier selection and SCP-QCLP.
//! - [`qcqp`]: the convex subproblem of the multi-receiver penalty method.
//! - [`multi_er`]: weighted-sum design for several receivers with a Ky Fan
//!   cardinality penalty, plus a random-search baseline.
//!
//! ```
//! use rectwave::rectenna::{max_dc_voltage, output_dc_power, RectennaParams};
//!
//! let p = RectennaParams::default();
//! let v = max_dc_voltage(&p).exact;
//! assert!((output_dc_power(v, &p) - 337.6e-6).abs() < 0.1e-6);
//! ```

pub mod channels;
pub mod error;
pub mod multi_er;
pub mod qcqp;
pub mod quadrature;
pub mod rectenna;
pub mod signals;
pub mod single_er;
pub mod trace;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/rectenna.md")]
    mod rectenna {}
    #[doc = include_str!("../../../book/src/single_er.md")]
    mod single_er {}
    #[doc = include_str!("../../../book/src/qcqp.md")]
    mod qcqp {}
    #[doc = include_str!("../../../book/src/multi_er.md")]
    mod multi_er {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
