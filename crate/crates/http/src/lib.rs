//! HTTP surfaces of the workbench: the blind-annotation service and
//! blocking clients for external generator and QA-oracle backends.

mod client;
mod server;

pub use client::{ClientConfig, HttpGenerator, HttpOracle};
pub use server::{router, serve, CreateSessionRequest, CreateSessionResponse, ErrorBody, ServeError};
