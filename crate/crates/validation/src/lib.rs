//! Holds the `acceptance` test target, which runs after the unit and
//! integration suites of the other workspace crates.
