//! Shared fixtures for integration and acceptance tests.
#![allow(dead_code)]

pub mod fuzz;
pub mod golden;
pub mod ws;
