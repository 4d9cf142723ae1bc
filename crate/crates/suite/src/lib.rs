//! Holds the `acceptance` test target, which checks the library and runner
//! against the project's acceptance criteria at full or scaled budgets:
//!
//! ```text
//! cargo test -p envdiv-suite --test acceptance
//! cargo test -p envdiv-suite --test acceptance -- 3 5   # criteria 3 and 5 only
//! ```
