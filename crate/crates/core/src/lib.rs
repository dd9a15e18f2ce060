pub mod algorithm;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod io;
pub mod kalman;
pub mod learner;
pub mod metrics;
pub mod models;
pub mod persist;
pub mod seed;
pub mod stats;
pub mod stratify;
pub mod synthetic;
