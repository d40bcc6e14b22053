pub mod analytic;
pub mod bench;
pub mod cli;
pub mod desim;
pub mod index;
pub mod overlap;
pub mod params;
pub mod trace;
