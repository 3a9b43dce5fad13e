use serde::{Deserialize, Serialize};

use super::stats::{zscore_column, SigmaMode};
use crate::data::{ScoreColumn, ScoreTable};
use crate::error::{Error, Result};

/// Uniform average of member z-scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub name: String,
    pub members: Vec<String>,
}

impl EnsembleConfig {
    pub fn new(name: impl Into<String>, members: Vec<String>) -> Result<Self> {
        let name = name.into();
        if members.len() < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "`{name}` needs at least two members"
            )));
        }
        Ok(EnsembleConfig { name, members })
    }

    /// MIST + ROUGE-1 recall + the given BERTScore column.
    pub fn mist_comb1(bertscore_column: &str) -> Self {
        EnsembleConfig {
            name: "mist-comb1".into(),
            members: vec!["mist".into(), "rouge-1-r".into(), bertscore_column.into()],
        }
    }

    /// MIST + ROUGE-1 recall + an external BLEURT column.
    pub fn mist_comb2() -> Self {
        EnsembleConfig {
            name: "mist-comb2".into(),
            members: vec!["mist".into(), "rouge-1-r".into(), "bleurt".into()],
        }
    }

    /// Resolves a preset name; `bertscore_column` fills the BERTScore slot
    /// of `mist-comb1`.
    pub fn preset(name: &str, bertscore_column: &str) -> Option<Self> {
        match name {
            "mist-comb1" => Some(Self::mist_comb1(bertscore_column)),
            "mist-comb2" => Some(Self::mist_comb2()),
            _ => None,
        }
    }
}

/// Each member is z-scored over all of its own values; the ensemble is
/// defined on pairs that every member covers, in table order.
pub fn ensemble(table: &ScoreTable, config: &EnsembleConfig, mode: SigmaMode) -> Result<ScoreColumn> {
    let zs: Vec<ScoreColumn> = config
        .members
        .iter()
        .map(|m| {
            let col = table
                .column(m)
                .ok_or_else(|| Error::MissingMember(m.clone()))?;
            zscore_column(col, mode)
        })
        .collect::<Result<_>>()?;

    let weight = 1.0 / zs.len() as f64;
    let mut out = ScoreColumn::new(config.name.clone(), true);
    for id in &table.pair_ids {
        let values: Option<Vec<f64>> = zs.iter().map(|z| z.get(id)).collect();
        if let Some(values) = values {
            out.insert(id.clone(), values.iter().sum::<f64>() * weight)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(name: &str, values: &[(&str, f64)]) -> ScoreColumn {
        let mut c = ScoreColumn::new(name, true);
        for (id, v) in values {
            c.insert(*id, *v).unwrap();
        }
        c
    }

    #[test]
    fn needs_two_members() {
        assert!(EnsembleConfig::new("x", vec!["a".into()]).is_err());
        assert!(EnsembleConfig::new("x", vec!["a".into(), "b".into()]).is_ok());
    }

    #[test]
    fn presets() {
        let c1 = EnsembleConfig::preset("mist-comb1", "bertscore-r").unwrap();
        assert_eq!(c1.members, vec!["mist", "rouge-1-r", "bertscore-r"]);
        let c2 = EnsembleConfig::preset("mist-comb2", "bertscore-r").unwrap();
        assert_eq!(c2.members, vec!["mist", "rouge-1-r", "bleurt"]);
        assert!(EnsembleConfig::preset("other", "x").is_none());
    }

    #[test]
    fn single_shared_pair_averages_z_values() {
        // Each member covers two pairs, but only "b" is common to all three.
        let mut t = ScoreTable::new(vec!["a".into(), "b".into(), "c".into()]);
        t.push(col("m1", &[("a", 1.0), ("b", 3.0)]));
        t.push(col("m2", &[("b", 10.0), ("c", 20.0)]));
        t.push(col("m3", &[("a", 5.0), ("b", 4.0)]));
        let cfg = EnsembleConfig::new("e", vec!["m1".into(), "m2".into(), "m3".into()]).unwrap();
        let e = ensemble(&t, &cfg, SigmaMode::Population).unwrap();
        // z-values for "b": m1 = +1, m2 = -1, m3 = -1
        assert_eq!(e.len(), 1);
        assert!((e.get("b").unwrap() - (-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn self_ensemble_is_identity() {
        let mut t = ScoreTable::new(vec!["a".into(), "b".into(), "c".into()]);
        t.push(col("m", &[("a", 0.2), ("b", 0.9), ("c", 0.4)]));
        let cfg = EnsembleConfig::new("e", vec!["m".into(), "m".into(), "m".into()]).unwrap();
        let e = ensemble(&t, &cfg, SigmaMode::Population).unwrap();
        let z = zscore_column(t.column("m").unwrap(), SigmaMode::Population).unwrap();
        for id in ["a", "b", "c"] {
            assert!((e.get(id).unwrap() - z.get(id).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_member_and_degenerate() {
        let mut t = ScoreTable::new(vec!["a".into(), "b".into()]);
        t.push(col("m", &[("a", 1.0), ("b", 2.0)]));
        t.push(col("flat", &[("a", 1.0), ("b", 1.0)]));
        let missing = EnsembleConfig::new("e", vec!["m".into(), "nope".into()]).unwrap();
        assert!(matches!(
            ensemble(&t, &missing, SigmaMode::Population),
            Err(Error::MissingMember(m)) if m == "nope"
        ));
        let flat = EnsembleConfig::new("e", vec!["m".into(), "flat".into()]).unwrap();
        assert!(matches!(
            ensemble(&t, &flat, SigmaMode::Population),
            Err(Error::Degenerate(_))
        ));
    }
}
