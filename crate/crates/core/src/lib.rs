//! Core engine for snowglyph.
pub mod config;
pub mod dataset;
pub mod geometry;
pub mod ingest;
pub mod model;
pub mod selection;
pub mod session;
pub mod svg;
pub mod synth;
pub mod views;
pub mod weather;
