//! File formats, synthetic phantoms, reports, the command-line tool and the
//! HTTP service around `templatecut-core`.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod formats;
pub mod io;
pub mod params;
pub mod phantom;
pub mod report;
pub mod service;
pub mod slices;

pub use templatecut_core as core;
