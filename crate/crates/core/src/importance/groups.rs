//! Group importance: sums of attributed importance over feature sets.

use serde_json::Value;

use crate::error::{DfiError, Result};
use crate::importance::attribute::AttributedImportanceResult;
use crate::importance::inference::InferenceSettings;
use crate::report::ImportanceEstimate;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    /// Feature indices; groups may overlap.
    pub members: Vec<usize>,
}

/// Parses `{"group": ["feature_a", "feature_b"], ...}`, keeping file order.
pub fn parse_groups(json: &str, feature_names: &[String]) -> Result<Vec<Group>> {
    let value: Value = serde_json::from_str(json).map_err(|e| DfiError::json(json, e))?;
    let Value::Object(map) = value else {
        return Err(DfiError::InvalidConfig("groups must be a JSON object".into()));
    };
    let mut groups = Vec::with_capacity(map.len());
    for (name, members) in map {
        let Value::Array(items) = members else {
            return Err(DfiError::InvalidConfig(format!("group \"{name}\" must be a list of feature names")));
        };
        let mut idx = Vec::with_capacity(items.len());
        for item in items {
            let Value::String(feature) = item else {
                return Err(DfiError::InvalidConfig(format!("group \"{name}\" has a non-string member")));
            };
            let l = feature_names
                .iter()
                .position(|f| *f == feature)
                .ok_or_else(|| DfiError::InvalidConfig(format!("group \"{name}\" names unknown feature \"{feature}\"")))?;
            idx.push(l);
        }
        groups.push(Group { name, members: idx });
    }
    Ok(groups)
}

/// Estimate and inference for each group from attributed results sharing one
/// row alignment.
pub fn group_importance(
    attributed: &[AttributedImportanceResult],
    groups: &[Group],
    settings: InferenceSettings,
) -> Result<Vec<ImportanceEstimate>> {
    let d = attributed.len();
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        if g.members.is_empty() {
            return Err(DfiError::InvalidConfig(format!("group \"{}\" is empty", g.name)));
        }
        let mut seen = vec![false; d];
        for &l in &g.members {
            if l >= d {
                return Err(DfiError::InvalidConfig(format!(
                    "group \"{}\" has index {l} outside 0..{d}",
                    g.name
                )));
            }
            if std::mem::replace(&mut seen[l], true) {
                return Err(DfiError::InvalidConfig(format!("group \"{}\" lists feature {l} twice", g.name)));
            }
        }
        let n = attributed[g.members[0]].influence_values.len();
        let mut estimate = 0.0;
        let mut influence = vec![0.0; n];
        for &l in &g.members {
            let a = &attributed[l];
            if a.influence_values.len() != n {
                return Err(DfiError::DimensionMismatch {
                    expected: n,
                    got: a.influence_values.len(),
                });
            }
            estimate += a.phi_hat;
            for (s, v) in influence.iter_mut().zip(&a.influence_values) {
                *s += v;
            }
        }
        out.push(ImportanceEstimate::from_influence(g.name.clone(), estimate, influence, settings)?);
    }
    Ok(out)
}
