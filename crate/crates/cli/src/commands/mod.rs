pub mod fp;
pub mod testbed;
