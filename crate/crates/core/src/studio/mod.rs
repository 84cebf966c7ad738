//! Instance generation and file IO.

mod generator;
mod io;

pub use generator::{
    generate_instance, generate_topology, sample_scenarios, GeneratorConfig, ServiceClass, ServiceMix,
};
pub use io::{check_dimensions, instance_from_json, instance_to_json, read_instance, write_csv, write_instance};
