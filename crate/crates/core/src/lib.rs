pub mod error;
pub mod kernels;
pub mod model;
pub mod spectrum;
pub mod steady;
pub mod moments;
pub mod fluorescence;
pub mod oracle;
pub mod config;
pub mod run;
pub mod output;
