//! Command line and HTTP session service for the message-passing debugger.

pub mod canonical;
pub mod commands;
pub mod service;
pub mod views;
