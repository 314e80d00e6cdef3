//! A small laboratory for studying how multilayer perceptrons learn the
//! successor function `S(N) = N + 1` on `N` in `[0, 98]` under a one-hot
//! ("count list") and a two-hot ("place value") number encoding.

pub mod encoding;
pub mod experiment;
pub mod models;
pub mod network;
pub mod plot;
pub mod report;
pub mod repr;
pub mod stats;
