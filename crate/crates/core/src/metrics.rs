//! Table-level privacy metrics: k-anonymity, entropy l-diversity, and
//! t-closeness.
//!
//! All three are computed over the equivalence classes induced by a
//! quasi-identifier attribute set. Larger k and l mean more protection;
//! smaller t means class-level sensitive distributions stay closer to the
//! whole-table distribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{emd, DistError, GroundDistance};
use crate::table::{distribution_over, partition_equivalence_classes, AttributeTable, TableError};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("sensitive attribute `{0}` is also a quasi-identifier")]
    SensitiveInQuasi(String),
}

fn check_not_quasi(quasi: &[String], sensitive: &str) -> Result<(), MetricError> {
    if quasi.iter().any(|q| q == sensitive) {
        return Err(MetricError::SensitiveInQuasi(sensitive.to_string()));
    }
    Ok(())
}

/// Size of the smallest equivalence class. A table is k-anonymous when every
/// record is indistinguishable from at least k-1 others on the
/// quasi-identifiers.
pub fn k_anonymity(table: &AttributeTable, quasi: &[String]) -> Result<usize, MetricError> {
    if table.is_empty() {
        return Err(MetricError::Table(TableError::EmptyTable));
    }
    let classes = partition_equivalence_classes(table, quasi)?;
    Ok(classes
        .iter()
        .map(|c| c.members.len())
        .min()
        .expect("non-empty table has at least one class"))
}

/// Minimum over classes of `exp(H)`, where `H` is the Shannon entropy
/// (natural log) of the sensitive attribute inside the class. Lies in
/// `[1, arity]`; a value of l means every class's sensitive values are at
/// least as spread out as a uniform draw over l categories.
pub fn entropy_l_diversity(
    table: &AttributeTable,
    quasi: &[String],
    sensitive: &str,
) -> Result<f64, MetricError> {
    check_not_quasi(quasi, sensitive)?;
    if table.is_empty() {
        return Err(MetricError::Table(TableError::EmptyTable));
    }
    let idx = table
        .schema()
        .index_of(sensitive)
        .ok_or(TableError::UnknownAttribute(sensitive.to_string()))?;
    let classes = partition_equivalence_classes(table, quasi)?;
    let mut min_l = f64::INFINITY;
    for class in &classes {
        let dist = distribution_over(table, idx, &class.members)?;
        let entropy: f64 = dist
            .masses()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        min_l = min_l.min(entropy.exp());
    }
    Ok(min_l)
}

/// The t-closeness level of a table: the largest distance between any class's
/// sensitive distribution and the whole-table distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TCloseness {
    /// Max over classes of `emd(class distribution, table distribution)`.
    pub value: f64,
    /// Quasi-identifier values of the class attaining the max; ties go to
    /// the smallest key. Empty when `quasi` is empty.
    pub worst_class_key: Vec<u8>,
}

pub fn t_closeness(
    table: &AttributeTable,
    quasi: &[String],
    sensitive: &str,
    ground: GroundDistance,
) -> Result<TCloseness, MetricError> {
    check_not_quasi(quasi, sensitive)?;
    if table.is_empty() {
        return Err(MetricError::Table(TableError::EmptyTable));
    }
    let idx = table
        .schema()
        .index_of(sensitive)
        .ok_or(TableError::UnknownAttribute(sensitive.to_string()))?;
    let all: Vec<usize> = (0..table.len()).collect();
    let table_dist = distribution_over(table, idx, &all)?;
    let classes = partition_equivalence_classes(table, quasi)?;
    let mut worst = TCloseness {
        value: -1.0,
        worst_class_key: Vec::new(),
    };
    for class in &classes {
        let class_dist = distribution_over(table, idx, &class.members)?;
        let d = emd(&class_dist, &table_dist, ground)?;
        // Strict comparison keeps the first (smallest) key on ties; classes
        // arrive in ascending key order.
        if d > worst.value {
            worst = TCloseness {
                value: d,
                worst_class_key: class.key.clone(),
            };
        }
    }
    Ok(worst)
}

/// Per-sensitive-attribute block of a [`PrivacyReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveSummary {
    pub attribute: String,
    pub l: f64,
    pub t: f64,
    /// `(quasi attribute, value)` pairs identifying the class that attains t.
    pub worst_class_key: Vec<(String, u8)>,
}

/// Combined privacy assessment of one table under one quasi-identifier set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub table_size: usize,
    pub class_count: usize,
    pub quasi: Vec<String>,
    pub ground_distance: GroundDistance,
    pub k: usize,
    pub sensitive: Vec<SensitiveSummary>,
}

/// Computes k plus an l/t summary for each sensitive attribute.
pub fn privacy_report(
    table: &AttributeTable,
    quasi: &[String],
    sensitive: &[String],
    ground: GroundDistance,
) -> Result<PrivacyReport, MetricError> {
    let k = k_anonymity(table, quasi)?;
    let class_count = partition_equivalence_classes(table, quasi)?.len();
    let mut summaries = Vec::with_capacity(sensitive.len());
    for attr in sensitive {
        let l = entropy_l_diversity(table, quasi, attr)?;
        let t = t_closeness(table, quasi, attr, ground)?;
        let worst_class_key = quasi
            .iter()
            .cloned()
            .zip(t.worst_class_key.iter().copied())
            .collect();
        summaries.push(SensitiveSummary {
            attribute: attr.clone(),
            l,
            t: t.value,
            worst_class_key,
        });
    }
    Ok(PrivacyReport {
        table_size: table.len(),
        class_count,
        quasi: quasi.to_vec(),
        ground_distance: ground,
        k,
        sensitive: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{build_table, AttributeSchema};
    use std::collections::HashMap;

    fn strs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn table_from(names: &[&str], rows: &[&[u8]]) -> AttributeTable {
        let schema = AttributeSchema::binary(strs(names)).unwrap();
        let identities: HashMap<String, String> = (0..rows.len())
            .map(|i| (format!("{i:06}.jpg"), format!("id_{i}")))
            .collect();
        build_table(
            schema,
            rows.iter()
                .enumerate()
                .map(|(i, r)| (format!("{i:06}.jpg"), r.to_vec()))
                .collect(),
            &identities,
        )
        .unwrap()
    }

    fn toy() -> AttributeTable {
        table_from(
            &["Male", "Big_Nose", "Black_Hair"],
            &[&[1, 1, 1], &[1, 1, 0]],
        )
    }

    #[test]
    fn toy_k_depends_on_quasi_choice() {
        let t = toy();
        assert_eq!(k_anonymity(&t, &strs(&["Black_Hair"])).unwrap(), 1);
        assert_eq!(k_anonymity(&t, &strs(&["Male", "Big_Nose"])).unwrap(), 2);
        assert_eq!(k_anonymity(&t, &[]).unwrap(), 2);
    }

    #[test]
    fn toy_diversity_and_closeness() {
        let t = toy();
        let quasi = strs(&["Male", "Big_Nose"]);
        // The single class holds hair values {0, 1}: uniform over 2.
        let l = entropy_l_diversity(&t, &quasi, "Black_Hair").unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        // The single class IS the table, so its distance to the table is 0.
        let tc = t_closeness(&t, &quasi, "Black_Hair", GroundDistance::Binary).unwrap();
        assert_eq!(tc.value, 0.0);
        assert_eq!(tc.worst_class_key, vec![1, 1]);
    }

    #[test]
    fn skewed_class_entropy() {
        // Class {Male=1}: hair counts (1, 3) -> l = exp(H) = 4 / 3^(3/4).
        let t = table_from(
            &["Male", "Black_Hair"],
            &[&[1, 1], &[1, 1], &[1, 1], &[1, 0], &[0, 1], &[0, 0]],
        );
        let l = entropy_l_diversity(&t, &strs(&["Male"]), "Black_Hair").unwrap();
        let expected = 4.0 / 3.0f64.powf(0.75);
        assert!((l - expected).abs() < 1e-12, "got {l}, want {expected}");
    }

    #[test]
    fn closeness_tie_goes_to_smallest_key() {
        let t = table_from(&["Male", "Black_Hair"], &[&[1, 1], &[0, 0]]);
        let tc = t_closeness(&t, &strs(&["Male"]), "Black_Hair", GroundDistance::Binary)
            .unwrap();
        assert!((tc.value - 0.5).abs() < 1e-12);
        assert_eq!(tc.worst_class_key, vec![0]);
    }

    #[test]
    fn sensitive_must_not_be_quasi() {
        let t = toy();
        let err =
            entropy_l_diversity(&t, &strs(&["Black_Hair"]), "Black_Hair").unwrap_err();
        assert_eq!(err, MetricError::SensitiveInQuasi("Black_Hair".into()));
        assert!(t_closeness(
            &t,
            &strs(&["Black_Hair"]),
            "Black_Hair",
            GroundDistance::Binary
        )
        .is_err());
    }

    #[test]
    fn report_bundles_everything() {
        let t = toy();
        let report = privacy_report(
            &t,
            &strs(&["Male", "Big_Nose"]),
            &strs(&["Black_Hair"]),
            GroundDistance::Binary,
        )
        .unwrap();
        assert_eq!(report.k, 2);
        assert_eq!(report.table_size, 2);
        assert_eq!(report.class_count, 1);
        assert_eq!(report.sensitive.len(), 1);
        let s = &report.sensitive[0];
        assert_eq!(s.attribute, "Black_Hair");
        assert!((s.l - 2.0).abs() < 1e-12);
        assert_eq!(s.t, 0.0);
        assert_eq!(
            s.worst_class_key,
            vec![("Male".to_string(), 1), ("Big_Nose".to_string(), 1)]
        );
    }

    #[test]
    fn empty_table_is_rejected() {
        let schema = AttributeSchema::binary(strs(&["Male"])).unwrap();
        let t = AttributeTable::new(schema, vec![]).unwrap();
        assert!(matches!(
            k_anonymity(&t, &[]),
            Err(MetricError::Table(TableError::EmptyTable))
        ));
    }
}
