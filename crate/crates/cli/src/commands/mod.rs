pub mod batch;
pub mod bench;
pub mod enhance;
pub mod features;
pub mod simulate;
