//! Command line and HTTP front end for lionex workspaces.

pub mod commands;
pub mod error;
pub mod server;
pub mod workspace;
