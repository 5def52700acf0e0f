//! HTTP service and command-line front end for snowglyph.
pub mod api;
pub mod commands;
pub mod state;

pub use api::router;
pub use state::AppState;
