pub mod buy_path;
pub mod groves;
pub mod public_project;
pub mod single_minded;
pub mod unit_demand;
pub mod vickrey;
pub mod walker;
