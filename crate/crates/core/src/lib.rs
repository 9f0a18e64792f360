pub mod adversary;
pub mod noise;
pub mod protocol;
pub mod qcore;
pub mod stats;
