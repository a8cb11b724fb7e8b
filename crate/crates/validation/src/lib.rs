//! Acceptance checks for the workspace, kept in their own package so they
//! run after every unit and integration test. See `tests/acceptance.rs`.
