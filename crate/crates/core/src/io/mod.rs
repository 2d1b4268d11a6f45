//! Configuration files, run orchestration and result serialization.

pub mod config;
pub mod csv_field;
pub mod run;

pub use config::{
    parse_config, parse_config_str, InitialControl, InitialState, Mode, RunConfig, Setup,
    VerifySettings,
};
pub use csv_field::{field_to_csv, read_field_csv, read_state_csv};
pub use run::{run, sha256_hex, FileEntry, RunManifest, RunStatus, MANIFEST_FILE};
