//! Data files, chat endpoint client, mock server and benchmark harness
//! around `craftplan-core`.

pub mod bench;
pub mod config;
pub mod data;
pub mod http;
pub mod mock;
pub mod report;
