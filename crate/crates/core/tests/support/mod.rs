#![allow(dead_code)]

pub mod oracles;
pub mod properties;

/// Fixed seed shared by the Monte-Carlo checks.
pub const SEED: u64 = 20_240_917;
