//! Simulated adversaries for measuring disclosure risk.
//!
//! A linkage adversary knows some attribute values of a target and tries to
//! single the target out; a homogeneity adversary needs no unique match,
//! only a class whose sensitive values all agree. `reidentification_rate`
//! runs whole populations of random linkage adversaries against a table
//! before and after obfuscation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomSource;
use crate::table::{partition_equivalence_classes, AttributeTable, TableError};

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("sensitive attribute `{0}` is also a quasi-identifier")]
    SensitiveInQuasi(String),
    #[error("attack needs at least one attribute subset")]
    NoSubsets,
    #[error("samples_per_subset must be positive")]
    NoSamples,
    #[error("tables are not aligned: {0}")]
    Misaligned(String),
}

/// What a linkage adversary knows going in.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AdversaryKnowledge {
    /// `(attribute, value)` pairs the adversary can observe out-of-band.
    pub known: Vec<(String, u8)>,
    /// Identity the adversary is hunting for, if the attack is targeted.
    /// Untargeted attacks score the chance of singling out *someone*.
    pub target_identity: Option<String>,
}

/// Result of one linkage attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageOutcome {
    /// Indices of records consistent with everything the adversary knows.
    pub candidates: Vec<usize>,
    /// Probability of a correct (re-)identification when picking uniformly
    /// among candidates: `1/|candidates|`, or 0 when none match or the
    /// target is not among them.
    pub success_probability: f64,
    /// Attributes outside the known set on which *all* candidates agree:
    /// disclosed without being observed. Empty when nothing matched.
    pub disclosed: Vec<(String, u8)>,
}

/// Matches the adversary's knowledge against the table.
pub fn linkage_attack(
    table: &AttributeTable,
    knowledge: &AdversaryKnowledge,
) -> Result<LinkageOutcome, AttackError> {
    let schema = table.schema();
    let known: Vec<(usize, u8)> = knowledge
        .known
        .iter()
        .map(|(name, value)| {
            schema
                .index_of(name)
                .map(|i| (i, *value))
                .ok_or_else(|| TableError::UnknownAttribute(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let candidates: Vec<usize> = table
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| known.iter().all(|&(i, v)| r.values[i] == v))
        .map(|(i, _)| i)
        .collect();
    let success_probability = if candidates.is_empty() {
        0.0
    } else {
        let hit = match &knowledge.target_identity {
            Some(identity) => candidates
                .iter()
                .any(|&c| table.records()[c].identity_id == *identity),
            None => true,
        };
        if hit {
            1.0 / candidates.len() as f64
        } else {
            0.0
        }
    };
    let mut disclosed = Vec::new();
    if !candidates.is_empty() {
        for (i, name) in schema.names().iter().enumerate() {
            if known.iter().any(|&(k, _)| k == i) {
                continue;
            }
            let first = table.records()[candidates[0]].values[i];
            if candidates
                .iter()
                .all(|&c| table.records()[c].values[i] == first)
            {
                disclosed.push((name.clone(), first));
            }
        }
    }
    Ok(LinkageOutcome {
        candidates,
        success_probability,
        disclosed,
    })
}

/// A class whose sensitive values all agree leaks that value for every
/// member even when k is large.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityLeak {
    /// Quasi-identifier values of the leaking class, in `quasi` order.
    pub class_key: Vec<u8>,
    pub class_size: usize,
    /// The sensitive value shared by every member.
    pub value: u8,
}

/// Finds all equivalence classes over `quasi` whose `sensitive` values are
/// constant. Classes come back in ascending key order.
pub fn homogeneity_check(
    table: &AttributeTable,
    quasi: &[String],
    sensitive: &str,
) -> Result<Vec<HomogeneityLeak>, AttackError> {
    if quasi.iter().any(|q| q == sensitive) {
        return Err(AttackError::SensitiveInQuasi(sensitive.to_string()));
    }
    let idx = table
        .schema()
        .index_of(sensitive)
        .ok_or(TableError::UnknownAttribute(sensitive.to_string()))?;
    let classes = partition_equivalence_classes(table, quasi)?;
    let mut leaks = Vec::new();
    for class in classes {
        let first = table.records()[class.members[0]].values[idx];
        if class
            .members
            .iter()
            .all(|&m| table.records()[m].values[idx] == first)
        {
            leaks.push(HomogeneityLeak {
                class_key: class.key,
                class_size: class.members.len(),
                value: first,
            });
        }
    }
    Ok(leaks)
}

/// Which table the sampled adversaries read their knowledge from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryView {
    /// Adversaries observed targets before obfuscation (the worst case for
    /// the original table, and the honest test of an obfuscated release).
    #[default]
    Original,
    /// Adversaries only ever saw the obfuscated release.
    Obfuscated,
}

/// Population of simulated linkage adversaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReidentificationSpec {
    /// Attribute subsets; each spawns its own adversaries.
    pub subsets: Vec<Vec<String>>,
    /// Adversaries per subset, each with an independently drawn target.
    pub samples_per_subset: usize,
    #[serde(default)]
    pub view: AdversaryView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub attributes: Vec<String>,
    pub mean_success_before: f64,
    pub mean_success_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidentificationSummary {
    pub n_adversaries: usize,
    pub mean_success_before: f64,
    pub mean_success_after: f64,
    pub per_subset: Vec<SubsetSummary>,
}

fn check_aligned(before: &AttributeTable, after: &AttributeTable) -> Result<(), AttackError> {
    if before.schema() != after.schema() {
        return Err(AttackError::Misaligned("schemas differ".into()));
    }
    if before.len() != after.len() {
        return Err(AttackError::Misaligned(format!(
            "{} records vs {}",
            before.len(),
            after.len()
        )));
    }
    for (i, (b, a)) in before.records().iter().zip(after.records()).enumerate() {
        if b.identity_id != a.identity_id {
            return Err(AttackError::Misaligned(format!(
                "record {i} changes identity"
            )));
        }
    }
    Ok(())
}

/// Samples targeted linkage adversaries and scores them against the table
/// before and after obfuscation.
///
/// Subset `j` draws its targets from substream `j` of `source`, so the
/// simulation is reproducible and per-subset results do not depend on the
/// order subsets are listed in.
pub fn reidentification_rate(
    before: &AttributeTable,
    after: &AttributeTable,
    spec: &ReidentificationSpec,
    source: &RandomSource,
) -> Result<ReidentificationSummary, AttackError> {
    if spec.subsets.is_empty() {
        return Err(AttackError::NoSubsets);
    }
    if spec.samples_per_subset == 0 {
        return Err(AttackError::NoSamples);
    }
    check_aligned(before, after)?;
    if before.is_empty() {
        return Err(AttackError::Table(TableError::EmptyTable));
    }
    for subset in &spec.subsets {
        before.schema().resolve(subset)?;
    }
    let mut per_subset = Vec::with_capacity(spec.subsets.len());
    let mut total_before = 0.0;
    let mut total_after = 0.0;
    for (j, subset) in spec.subsets.iter().enumerate() {
        let mut rng = source.stream(j as u64);
        let mut sum_before = 0.0;
        let mut sum_after = 0.0;
        for _ in 0..spec.samples_per_subset {
            let target = rng.random_range(0..before.len());
            let observed = match spec.view {
                AdversaryView::Original => before,
                AdversaryView::Obfuscated => after,
            };
            let knowledge = AdversaryKnowledge {
                known: subset
                    .iter()
                    .map(|name| {
                        let i = observed.schema().index_of(name).expect("resolved above");
                        (name.clone(), observed.records()[target].values[i])
                    })
                    .collect(),
                target_identity: Some(before.records()[target].identity_id.clone()),
            };
            sum_before += linkage_attack(before, &knowledge)?.success_probability;
            sum_after += linkage_attack(after, &knowledge)?.success_probability;
        }
        let n = spec.samples_per_subset as f64;
        total_before += sum_before;
        total_after += sum_after;
        per_subset.push(SubsetSummary {
            attributes: subset.clone(),
            mean_success_before: sum_before / n,
            mean_success_after: sum_after / n,
        });
    }
    let n_adversaries = spec.subsets.len() * spec.samples_per_subset;
    Ok(ReidentificationSummary {
        n_adversaries,
        mean_success_before: total_before / n_adversaries as f64,
        mean_success_after: total_after / n_adversaries as f64,
        per_subset,
    })
}
