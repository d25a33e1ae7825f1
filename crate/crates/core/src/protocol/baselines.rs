//! Label-free reference points for the attribute prediction tasks.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::AttributeLabels;
use crate::error::{Error, Result};
use crate::protocol::report::{MetricKind, MetricReport, ReportLayout};

/// Known class inventories. When absent, the distinct labels seen across
/// train and eval are used.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ClassSets {
    pub sentiment: Option<Vec<String>>,
    pub topic: Option<Vec<String>>,
}

/// Median of a non-empty slice; even counts average the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

fn column<T>(labels: &[AttributeLabels], split: &str, field: &'static str, get: impl Fn(&AttributeLabels) -> Option<T>) -> Result<Vec<T>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| get(l).ok_or_else(|| Error::InvalidInput(format!("{split} label {i} has no {field}"))))
        .collect()
}

fn class_count(explicit: Option<&Vec<String>>, train: &[String], eval: &[String], field: &str) -> Result<usize> {
    let n = match explicit {
        Some(set) => {
            let known: BTreeSet<&str> = set.iter().map(String::as_str).collect();
            if let Some(bad) = train.iter().chain(eval).find(|l| !known.contains(l.as_str())) {
                return Err(Error::InvalidInput(format!("{field} label `{bad}` is not in the class set")));
            }
            known.len()
        }
        None => train.iter().chain(eval).collect::<BTreeSet<_>>().len(),
    };
    if n == 0 {
        return Err(Error::InsufficientData(format!("no {field} classes")));
    }
    Ok(n)
}

/// Chance accuracy `1/N_C` for sentiment and topic, and the MAE of always
/// predicting the training median for length and surprisal.
pub fn attribute_baselines(train: &[AttributeLabels], eval: &[AttributeLabels], classes: &ClassSets) -> Result<MetricReport> {
    if train.is_empty() || eval.is_empty() {
        return Err(Error::InsufficientData(format!(
            "baselines need labels in both splits (train {}, eval {})",
            train.len(),
            eval.len()
        )));
    }
    let mut report = MetricReport::new(ReportLayout::Baselines, "baseline", None, classes);

    let stm = |l: &AttributeLabels| l.sentiment.clone();
    let tpc = |l: &AttributeLabels| l.topic.clone();
    for (key, field, get, explicit) in [
        ("sentiment_chance", "sentiment", &stm as &dyn Fn(&AttributeLabels) -> Option<String>, classes.sentiment.as_ref()),
        ("topic_chance", "topic", &tpc, classes.topic.as_ref()),
    ] {
        let tr = column(train, "train", field, get)?;
        let ev = column(eval, "eval", field, get)?;
        let n = class_count(explicit, &tr, &ev, field)?;
        report.insert(key, 1.0 / n as f64, MetricKind::Fraction)?;
        report.note(format!("{field}_classes"), n.to_string());
    }

    let len = |l: &AttributeLabels| l.length.map(f64::from);
    let spr = |l: &AttributeLabels| l.surprisal;
    for (key, field, get) in [
        ("length_mae", "length", &len as &dyn Fn(&AttributeLabels) -> Option<f64>),
        ("surprisal_mae", "surprisal", &spr),
    ] {
        let tr = column(train, "train", field, get)?;
        let ev = column(eval, "eval", field, get)?;
        let m = median(&tr).ok_or_else(|| Error::NonFinite(format!("train {field}")))?;
        let mae = ev.iter().map(|y| (y - m).abs()).sum::<f64>() / ev.len() as f64;
        report.insert(key, mae, MetricKind::Scalar)?;
        report.note(format!("{field}_train_median"), format!("{m}"));
    }
    Ok(report)
}
