#![allow(dead_code)]

pub mod files;
pub mod oracles;
pub mod synth;
