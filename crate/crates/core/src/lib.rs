pub mod codec;
pub mod fusion;
pub mod geometry;
pub mod jsonl;
pub mod policy;
pub mod metrics;
pub mod sim;
pub mod harness;
