//! Record parsing, master quarter-hour table assembly, date splits and the
//! synthetic data generator.

mod master;
mod records;
mod split;
mod synth;

pub use master::{
    build_master, read_master_csv, write_master_csv, BuildConfig, BuildDiagnostics, FeatureRow, MasterTable,
    Provenance, OPTIONAL_COLUMNS,
};
pub use records::{
    parse_flights, parse_quarter_hours, parse_weather, read_flights, read_quarter_hours, read_weather, write_flights,
    write_quarter_hours, write_weather, FlightRecord, Parsed, QuarterHourRecord, Reject, WeatherRecord, FLIGHTS_HEADER,
    QUARTER_HOUR_HEADER, WEATHER_HEADER,
};
pub use split::{split, DateRange, SplitSpec};
pub use synth::{synth_generate, write_synth, OracleRow, SynthConfig, SynthData};

use thiserror::Error;

use crate::features::FeatureError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: missing required column {column}")]
    MissingColumn { source_name: String, column: String },
    #[error("{source_name}: {msg}")]
    Csv { source_name: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("airport {0} is not in the built-in table")]
    UnknownAirport(String),
    #[error("column {column} is {:.2}% missing, above the {:.2}% limit", fraction * 100.0, threshold * 100.0)]
    MissingData { column: String, fraction: f64, threshold: f64 },
    #[error("master table: {0}")]
    Table(String),
    #[error("split: {0}")]
    Split(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}
