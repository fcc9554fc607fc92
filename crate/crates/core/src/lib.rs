//! No-signalling boxes, counterfactual couplings and macroscopic signalling.
//!
//! A correlation table `C(x, y)` for Alice's settings `a`, `a'` and Bob's
//! settings `b`, `b'` fixes a no-signalling box. Read counterfactually, each
//! pair carries joint values for `b` and `b'`; summing many pairs into
//! macroscopic means `B`, `B'` and asking that Bob's statistics not depend
//! on Alice's choice of setting yields `x² + y² <= 4`, whose maximum CHSH
//! value is `2√2`.
//!
//! * [`box_model`]: tables, boxes, CHSH and the locality test.
//! * [`coupling`]: joint laws of `(i, b, b')` and their extremes.
//! * [`macro_stats`]: batches of pairs and their macroscopic means.
//! * [`causality`]: variance budget, causality condition, frontier scan.
//! * [`signalling`]: Bob's detectors and the exact distinguishability bound.
//! * [`cli`]: the `superquantum` command line.

pub mod box_model;
pub mod causality;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod lp;
pub mod macro_stats;
pub mod signalling;

pub use box_model::{chsh, classify_locality, BipartiteBox, CorrelationTable, Locality};
pub use coupling::{coupling_bounds, make_scalar_extremal_couplings, TripleCoupling};
pub use error::{Error, Result};
pub use macro_stats::{NoiseModel, Strategy};
pub use signalling::{exact_tv_distance, run_protocol, Detector, ProtocolConfig, SignallingReport};
