//! Adaptive local iterative filtering driven by synchrosqueezed
//! instantaneous-frequency estimates, with the supporting transforms,
//! ridge extraction and a synthetic benchmark harness.

pub mod alif;
pub mod bench;
pub mod curve;
pub mod error;
pub mod io;
pub mod sift;
pub mod signal;
pub mod sst;

pub use error::{Error, Result};
pub use signal::{ComplexSignal, RealSignal, Sample, SampleGrid, Signal};
