use serde::{Deserialize, Serialize};

use crate::data::ScoreColumn;
use crate::error::{Error, Result};

/// Standard deviation estimator for z-scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

impl std::str::FromStr for SigmaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "population" => Ok(SigmaMode::Population),
            "sample" => Ok(SigmaMode::Sample),
            other => Err(format!("unknown sigma mode `{other}`")),
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

pub fn std_dev(values: &[f64], mode: SigmaMode) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    let denom = match mode {
        SigmaMode::Population => values.len(),
        SigmaMode::Sample => values.len() - 1,
    };
    (ss / denom as f64).sqrt()
}

/// Pearson correlation coefficient, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Degenerate(format!(
            "pearson needs at least 2 points, got {}",
            x.len()
        )));
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::Degenerate("pearson on a constant vector".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("pearson on a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `(x - μ) / σ` over all values of the column.
pub fn zscore_column(col: &ScoreColumn, mode: SigmaMode) -> Result<ScoreColumn> {
    let values: Vec<f64> = col.values.values().copied().collect();
    if values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "column `{}` has {} values; z-scores need at least 2",
            col.metric_name,
            values.len()
        )));
    }
    if is_constant(&values) {
        return Err(Error::Degenerate(format!(
            "column `{}` is constant",
            col.metric_name
        )));
    }
    let m = mean(&values);
    let sigma = std_dev(&values, mode);
    let mut out = ScoreColumn::new(col.metric_name.clone(), col.higher_is_better);
    for (id, v) in &col.values {
        out.insert(id.clone(), (v - m) / sigma)?;
    }
    Ok(out)
}
