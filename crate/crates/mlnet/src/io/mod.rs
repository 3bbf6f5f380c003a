//! Input and output: edge lists, key-value configs, CSV tables, and the
//! command-line interface.

pub mod cli;
pub mod config;
pub mod csv;
pub mod edgelist;

pub use config::ConfigMap;
pub use csv::{format_f64, parse_trace_csv, write_experiment_csvs, write_trace_csv};
pub use edgelist::{load_multiplex_edgelist, write_edge_list, LoadedNetwork};
