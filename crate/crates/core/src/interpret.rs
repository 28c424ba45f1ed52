//! Dataset-level summaries of attention and variable-selection weights.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::model::ForecastResult;

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error("no forecast results to aggregate")]
    Empty,
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttentionProfile {
    /// Encoder time indices, −enc … −1.
    pub lags: Vec<i64>,
    pub mean_mass: Vec<f64>,
}

impl AttentionProfile {
    /// `lag,mean_mass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), InterpretError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "mean_mass"])?;
        for (lag, m) in self.lags.iter().zip(&self.mean_mass) {
            w.write_record([lag.to_string(), m.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Lag with the largest mean mass.
    pub fn peak_lag(&self) -> Option<i64> {
        self.mean_mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.lags[i])
    }
}

/// Mean attention on each encoder position over all windows and horizons.
pub fn attention_by_lag(results: &[ForecastResult]) -> Result<AttentionProfile, InterpretError> {
    let first = results.first().ok_or(InterpretError::Empty)?;
    let shape = first.attention.shape().to_vec();
    let (dec, total) = (shape[0], shape[1]);
    let enc = total - dec;
    let mut mass = vec![0.0; enc];
    for r in results {
        if r.attention.shape() != shape.as_slice() {
            return Err(InterpretError::Mismatch(format!(
                "attention shape {:?} differs from {:?}",
                r.attention.shape(),
                shape
            )));
        }
        for t in 0..dec {
            for (j, m) in mass.iter_mut().enumerate() {
                *m += r.attention.at2(t, j);
            }
        }
    }
    let n = (results.len() * dec) as f64;
    Ok(AttentionProfile {
        lags: (0..enc).map(|j| j as i64 - enc as i64).collect(),
        mean_mass: mass.into_iter().map(|m| m / n).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedWeight {
    pub variable: String,
    pub weight: f64,
    /// 1 is the most important.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub static_vars: Vec<RankedWeight>,
    pub encoder: Vec<RankedWeight>,
    pub decoder: Vec<RankedWeight>,
}

pub struct VariableNames<'a> {
    pub static_vars: &'a [&'a str],
    pub encoder: &'a [&'a str],
    pub decoder: &'a [&'a str],
}

fn rank(names: &[&str], sums: Vec<f64>, count: f64) -> Vec<RankedWeight> {
    let mut out: Vec<RankedWeight> = names
        .iter()
        .zip(sums)
        .map(|(n, s)| RankedWeight {
            variable: n.to_string(),
            weight: s / count,
            rank: 0,
        })
        .collect();
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    for (i, r) in out.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    out
}

/// Mean selection weight per variable over every timestep and window,
/// ranked in descending order within each group.
pub fn variable_importance(results: &[ForecastResult], names: &VariableNames) -> Result<ImportanceReport, InterpretError> {
    if results.is_empty() {
        return Err(InterpretError::Empty);
    }
    let check = |group: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(InterpretError::Mismatch(format!("{group}: {want} names for {got} weights")))
        }
    };
    let mut s = vec![0.0; names.static_vars.len()];
    let mut e = vec![0.0; names.encoder.len()];
    let mut d = vec![0.0; names.decoder.len()];
    let (mut ne, mut nd) = (0usize, 0usize);
    for r in results {
        check("static", r.static_weights.len(), s.len())?;
        check("encoder", r.encoder_var_weights.cols(), e.len())?;
        check("decoder", r.decoder_var_weights.cols(), d.len())?;
        for (acc, w) in s.iter_mut().zip(&r.static_weights) {
            *acc += w;
        }
        for row in r.encoder_var_weights.data().chunks(e.len().max(1)) {
            e.iter_mut().zip(row).for_each(|(a, w)| *a += w);
            ne += 1;
        }
        for row in r.decoder_var_weights.data().chunks(d.len().max(1)) {
            d.iter_mut().zip(row).for_each(|(a, w)| *a += w);
            nd += 1;
        }
    }
    Ok(ImportanceReport {
        static_vars: rank(names.static_vars, s, results.len() as f64),
        encoder: rank(names.encoder, e, ne as f64),
        decoder: rank(names.decoder, d, nd as f64),
    })
}

/// `variable,weight,rank`.
pub fn write_importance_csv<W: Write>(group: &[RankedWeight], out: W) -> Result<(), InterpretError> {
    let mut w = csv::Writer::from_writer(out);
    for r in group {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
