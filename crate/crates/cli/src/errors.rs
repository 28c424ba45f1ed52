use std::fmt;

use airdelay_core::ingest::IngestError;
use airdelay_core::interpret::InterpretError;
use airdelay_core::model::ModelError;
use airdelay_core::training::TrainError;

/// Machine-readable failure class, printed as `error[E_...]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Code {
    Usage,
    Input,
    Schema,
    Config,
    Data,
    Model,
    Io,
    Internal,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Usage => "E_USAGE",
            Code::Input => "E_INPUT",
            Code::Schema => "E_SCHEMA",
            Code::Config => "E_CONFIG",
            Code::Data => "E_DATA",
            Code::Model => "E_MODEL",
            Code::Io => "E_IO",
            Code::Internal => "E_INTERNAL",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Code::Usage => 2,
            Code::Input => 3,
            Code::Schema => 4,
            Code::Config => 5,
            Code::Data => 6,
            Code::Model => 7,
            Code::Io => 8,
            Code::Internal => 70,
        }
    }
}

#[derive(Debug)]
pub struct Coded {
    pub code: Code,
    pub msg: String,
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for Coded {}

pub fn coded(code: Code, msg: impl Into<String>) -> anyhow::Error {
    Coded { code, msg: msg.into() }.into()
}

fn ingest_code(e: &IngestError) -> Code {
    match e {
        IngestError::MissingColumn { .. } | IngestError::Csv { .. } => Code::Schema,
        IngestError::Io { .. } => Code::Input,
        IngestError::UnknownAirport(_) | IngestError::Split(_) | IngestError::Config(_) => Code::Config,
        IngestError::MissingData { .. } | IngestError::Table(_) | IngestError::Feature(_) => Code::Data,
    }
}

fn model_code(e: &ModelError) -> Code {
    match e {
        ModelError::Config(_) => Code::Config,
        ModelError::Io(_) => Code::Input,
        ModelError::StaticCode { .. } | ModelError::Window(_) => Code::Data,
        _ => Code::Model,
    }
}

/// The first cause in the chain that maps to a code wins.
pub fn classify(err: &anyhow::Error) -> Code {
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.code;
        }
        if let Some(e) = cause.downcast_ref::<IngestError>() {
            return ingest_code(e);
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return model_code(e);
        }
        if let Some(e) = cause.downcast_ref::<TrainError>() {
            match e {
                TrainError::Config(_) => return Code::Config,
                TrainError::Io(..) => return Code::Io,
                TrainError::Model(m) => return model_code(m),
                TrainError::Data(_) | TrainError::Shape(_) | TrainError::Diverged { .. } => return Code::Data,
            }
        }
        if cause.downcast_ref::<InterpretError>().is_some() {
            return Code::Data;
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return Code::Config;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() || cause.downcast_ref::<csv::Error>().is_some() {
            return Code::Schema;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return Code::Io;
        }
    }
    Code::Internal
}

/// `error[E_CODE]: message: cause: cause` on a single line.
pub fn render(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let s = cause.to_string();
        if !parts.iter().any(|p| p.contains(&s)) {
            parts.push(s);
        }
    }
    let msg = parts.join(": ").replace(['\n', '\r'], " ");
    format!("error[{}]: {msg}", classify(err).as_str())
}
