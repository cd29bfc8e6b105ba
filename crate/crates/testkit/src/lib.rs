//! Shared test support: seeded random channels, brute-force oracles, and the
//! property suites that both the unit-level tests and the acceptance run use.

pub mod oracles;
pub mod random;
pub mod suites;
