pub mod cli;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod io;
pub mod models;
pub mod nn;
pub mod rng;
