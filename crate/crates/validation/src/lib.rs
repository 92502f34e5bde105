//! Holds the `acceptance` test target for the workspace. The library itself
//! is empty. It lives in its own package so that `cargo test --workspace`
//! runs every unit and integration test before the acceptance report.
