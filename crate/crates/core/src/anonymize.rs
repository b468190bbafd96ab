//! Distance-gated attribute obfuscation.
//!
//! For every record and every binary attribute, the obfuscator compares a
//! reference distribution for that attribute against the distribution the
//! record presents to an observer (see [`QuasiPolicy`]). Attributes whose
//! distance stays within the threshold `t` are kept; the rest are flipped.
//! The gated vector then passes through randomized response, so even kept
//! attributes are deniable when `epsilon` is finite.
//!
//! All keep/flip decisions are computed against the *original* table before
//! any value changes, so records can be processed independently and in any
//! order.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{emd, DiscreteDistribution, DistError, GroundDistance};
use crate::noise::{randomized_response, Epsilon, NoiseError};
use crate::rng::RandomSource;
use crate::table::{AttributeTable, TableError};

#[derive(Debug, Error)]
pub enum AnonymizeError {
    #[error("attribute `{0}` has arity {1}; obfuscation handles binary attributes only")]
    UnsupportedArity(String, u8),
    #[error("threshold t must be nonnegative (got {0})")]
    BadThreshold(f64),
    #[error("reference probability for `{attribute}` must lie in [0, 1] (got {value})")]
    BadReference { attribute: String, value: f64 },
    #[error("reference names unknown attribute `{0}`")]
    UnknownReference(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// How a record's observable distribution for an attribute is formed when
/// deciding keep-vs-flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiPolicy {
    /// The record discloses its own value exactly: a point distribution.
    /// Flips exactly those records whose value sits in the reference
    /// minority whenever the reference is skewed beyond `t`.
    #[default]
    RecordPoint,
    /// The record is seen through its equivalence class over all *other*
    /// attributes: the class's empirical distribution of this attribute.
    ClassMarginal,
    /// The whole table's marginal stands in for every record, so each
    /// attribute is kept or flipped uniformly across the table. Only useful
    /// with an external reference distribution.
    GlobalMarginal,
}

/// Parameters of the obfuscator.
///
/// `reference` maps attribute names to the probability of value 1 under the
/// reference distribution; attributes not listed use the table's own
/// marginal. With an empty reference map, `RecordPoint` flips minority
/// values of attributes whose marginal is skewed past `t`, and the other two
/// policies reduce to comparing the table with itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnonymizeConfig {
    /// Keep/flip distance threshold; distances greater than `t` flip.
    pub t: f64,
    /// Randomized-response budget applied per attribute after gating.
    pub epsilon: Epsilon,
    #[serde(default)]
    pub quasi_policy: QuasiPolicy,
    #[serde(default)]
    pub reference: BTreeMap<String, f64>,
}

impl AnonymizeConfig {
    pub fn new(t: f64, epsilon: Epsilon) -> Result<Self, AnonymizeError> {
        if t < 0.0 || t.is_nan() {
            return Err(AnonymizeError::BadThreshold(t));
        }
        Ok(AnonymizeConfig {
            t,
            epsilon,
            quasi_policy: QuasiPolicy::default(),
            reference: BTreeMap::new(),
        })
    }

    fn validate(&self, table: &AttributeTable) -> Result<(), AnonymizeError> {
        if self.t < 0.0 || self.t.is_nan() {
            return Err(AnonymizeError::BadThreshold(self.t));
        }
        let schema = table.schema();
        for i in 0..schema.len() {
            if schema.arity(i) != 2 {
                return Err(AnonymizeError::UnsupportedArity(
                    schema.names()[i].clone(),
                    schema.arity(i),
                ));
            }
        }
        for (name, &p) in &self.reference {
            if schema.index_of(name).is_none() {
                return Err(AnonymizeError::UnknownReference(name.clone()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(AnonymizeError::BadReference {
                    attribute: name.clone(),
                    value: p,
                });
            }
        }
        Ok(())
    }

    /// Worst-case total randomized-response budget spent on one record when
    /// all `n_attrs` attributes are perturbed independently.
    pub fn composed_epsilon(&self, n_attrs: usize) -> f64 {
        self.epsilon.value() * n_attrs as f64
    }
}

/// Keep/flip decision for one attribute of one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDecision {
    pub attribute: String,
    /// Distance between the observable and reference distributions.
    pub distance: f64,
    /// True when the distance stayed within `t` and the value was kept.
    pub kept: bool,
    /// True when randomized response flipped the gated value afterwards.
    pub perturbed: bool,
}

/// Full decision trail for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTrace {
    pub record_index: usize,
    pub image_id: String,
    pub decisions: Vec<AttributeDecision>,
}

/// Obfuscated table together with per-record decision traces.
#[derive(Debug, Clone)]
pub struct Obfuscation {
    pub table: AttributeTable,
    pub traces: Vec<RecordTrace>,
}

/// A record's post-gate values plus, per attribute, its distance and keep
/// flag.
type Gated = (Vec<u8>, Vec<(f64, bool)>);

/// Precomputed per-attribute reference and observable distributions, all
/// derived from the original table.
struct DecisionContext {
    threshold: f64,
    references: Vec<DiscreteDistribution>,
    policy: Policy,
}

enum Policy {
    RecordPoint,
    /// For each attribute, the share of value 1 within each equivalence
    /// class over the remaining attributes.
    ClassMarginal(Vec<HashMap<Vec<u8>, f64>>),
    /// Per-attribute table marginal.
    GlobalMarginal(Vec<DiscreteDistribution>),
}

fn class_key(values: &[u8], skip: usize) -> Vec<u8> {
    values
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, &v)| v)
        .collect()
}

impl DecisionContext {
    fn new(table: &AttributeTable, config: &AnonymizeConfig) -> Result<Self, AnonymizeError> {
        config.validate(table)?;
        if table.is_empty() {
            return Err(AnonymizeError::Table(TableError::EmptyTable));
        }
        let schema = table.schema();
        let mut marginals = Vec::with_capacity(schema.len());
        for i in 0..schema.len() {
            let ones = table
                .records()
                .iter()
                .filter(|r| r.values[i] == 1)
                .count();
            marginals.push(ones as f64 / table.len() as f64);
        }
        let references = schema
            .names()
            .iter()
            .zip(&marginals)
            .map(|(name, &marginal)| {
                let p = config.reference.get(name).copied().unwrap_or(marginal);
                DiscreteDistribution::bernoulli(p)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let policy = match config.quasi_policy {
            QuasiPolicy::RecordPoint => Policy::RecordPoint,
            QuasiPolicy::ClassMarginal => {
                let mut per_attr = Vec::with_capacity(schema.len());
                for i in 0..schema.len() {
                    let mut classes: HashMap<Vec<u8>, (usize, usize)> = HashMap::new();
                    for record in table.records() {
                        let entry = classes.entry(class_key(&record.values, i)).or_default();
                        entry.0 += 1;
                        entry.1 += usize::from(record.values[i] == 1);
                    }
                    per_attr.push(
                        classes
                            .into_iter()
                            .map(|(key, (count, ones))| (key, ones as f64 / count as f64))
                            .collect(),
                    );
                }
                Policy::ClassMarginal(per_attr)
            }
            QuasiPolicy::GlobalMarginal => Policy::GlobalMarginal(
                marginals
                    .iter()
                    .map(|&p| DiscreteDistribution::bernoulli(p))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        Ok(DecisionContext {
            threshold: config.t,
            references,
            policy,
        })
    }

    fn observable(&self, values: &[u8], attr: usize) -> DiscreteDistribution {
        match &self.policy {
            Policy::RecordPoint => DiscreteDistribution::binary_point(values[attr]),
            Policy::ClassMarginal(per_attr) => {
                let p = per_attr[attr][&class_key(values, attr)];
                DiscreteDistribution::bernoulli(p).expect("class share lies in [0, 1]")
            }
            Policy::GlobalMarginal(marginals) => marginals[attr].clone(),
        }
    }

    /// Gates one record: returns the kept-or-flipped vector plus the
    /// distances and keep flags, before randomized response.
    fn gate(&self, table: &AttributeTable, index: usize) -> Result<Gated, AnonymizeError> {
        let values = &table.records()[index].values;
        let mut gated = Vec::with_capacity(values.len());
        let mut outcomes = Vec::with_capacity(values.len());
        for (attr, &value) in values.iter().enumerate() {
            let observable = self.observable(values, attr);
            let distance = emd(&observable, &self.references[attr], GroundDistance::Binary)?;
            let kept = distance <= self.threshold;
            gated.push(if kept { value } else { 1 - value });
            outcomes.push((distance, kept));
        }
        Ok((gated, outcomes))
    }
}

fn trace_for(
    table: &AttributeTable,
    index: usize,
    outcomes: &[(f64, bool)],
    gated: &[u8],
    reported: &[u8],
) -> RecordTrace {
    let names = table.schema().names();
    let decisions = outcomes
        .iter()
        .zip(names)
        .zip(gated.iter().zip(reported))
        .map(
            |((&(distance, kept), name), (&gated_value, &reported_value))| AttributeDecision {
                attribute: name.clone(),
                distance,
                kept,
                perturbed: gated_value != reported_value,
            },
        )
        .collect();
    RecordTrace {
        record_index: index,
        image_id: table.records()[index].image_id.clone(),
        decisions,
    }
}

/// Obfuscates a single record against the table it belongs to.
pub fn obfuscate_record<R: Rng>(
    table: &AttributeTable,
    index: usize,
    config: &AnonymizeConfig,
    rng: &mut R,
) -> Result<(Vec<u8>, RecordTrace), AnonymizeError> {
    let context = DecisionContext::new(table, config)?;
    let (gated, outcomes) = context.gate(table, index)?;
    let reported = randomized_response(&gated, config.epsilon, rng);
    let trace = trace_for(table, index, &outcomes, &gated, &reported);
    Ok((reported, trace))
}

/// Obfuscates every record. Record `i` draws from substream `i` of `source`,
/// so results are reproducible and independent of processing order.
pub fn obfuscate_table(
    table: &AttributeTable,
    config: &AnonymizeConfig,
    source: &RandomSource,
) -> Result<Obfuscation, AnonymizeError> {
    let context = DecisionContext::new(table, config)?;
    let mut values = Vec::with_capacity(table.len());
    let mut traces = Vec::with_capacity(table.len());
    for index in 0..table.len() {
        let (gated, outcomes) = context.gate(table, index)?;
        let mut rng = source.stream(index as u64);
        let reported = randomized_response(&gated, config.epsilon, &mut rng);
        traces.push(trace_for(table, index, &outcomes, &gated, &reported));
        values.push(reported);
    }
    Ok(Obfuscation {
        table: table.with_values(values)?,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::k_anonymity;
    use crate::table::{build_table, AttributeSchema};

    fn table_from(names: &[&str], rows: &[&[u8]]) -> AttributeTable {
        let schema =
            AttributeSchema::binary(names.iter().map(|s| s.to_string()).collect()).unwrap();
        let identities = (0..rows.len())
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

    fn toy_config() -> AnonymizeConfig {
        let mut config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        config.reference.insert("Black_Hair".to_string(), 0.75);
        config
    }

    #[test]
    fn toy_table_reaches_k2_on_hair() {
        let table = toy();
        let quasi = vec!["Black_Hair".to_string()];
        assert_eq!(k_anonymity(&table, &quasi).unwrap(), 1);

        let out = obfuscate_table(&table, &toy_config(), &RandomSource::new(0)).unwrap();
        assert_eq!(out.table.records()[0].values, vec![1, 1, 1]);
        assert_eq!(out.table.records()[1].values, vec![1, 1, 1]);
        assert_eq!(k_anonymity(&out.table, &quasi).unwrap(), 2);

        // Record 0's hair value (1) sits within 0.25 of the reference; it is
        // kept. Record 1's (0) sits 0.75 away; it flips.
        let hair_0 = &out.traces[0].decisions[2];
        assert!((hair_0.distance - 0.25).abs() < 1e-12 && hair_0.kept);
        let hair_1 = &out.traces[1].decisions[2];
        assert!((hair_1.distance - 0.75).abs() < 1e-12 && !hair_1.kept);
        // Infinite epsilon: randomized response never fires.
        assert!(out
            .traces
            .iter()
            .flat_map(|t| &t.decisions)
            .all(|d| !d.perturbed));
    }

    #[test]
    fn identity_when_everything_is_close_and_epsilon_infinite() {
        let table = toy();
        let config = AnonymizeConfig::new(10.0, Epsilon::INF).unwrap();
        let out = obfuscate_table(&table, &config, &RandomSource::new(5)).unwrap();
        assert_eq!(out.table, table);
    }

    #[test]
    fn table_and_per_record_paths_agree() {
        let table = table_from(&["A", "B"], &[&[0, 0], &[1, 1], &[1, 0], &[0, 1]]);
        let config = AnonymizeConfig::new(0.2, Epsilon::new(1.0).unwrap()).unwrap();
        let source = RandomSource::new(77);
        let whole = obfuscate_table(&table, &config, &source).unwrap();
        for i in 0..table.len() {
            let (values, trace) =
                obfuscate_record(&table, i, &config, &mut source.stream(i as u64)).unwrap();
            assert_eq!(values, whole.table.records()[i].values);
            assert_eq!(trace, whole.traces[i]);
        }
    }

    #[test]
    fn decisions_use_the_original_table_for_everyone() {
        // Same table twice, same config: outputs must match record-by-record
        // even though obfuscating record 0 changes what a sequential
        // implementation would see for record 1.
        let table = table_from(&["A"], &[&[1], &[0], &[0], &[0]]);
        let mut config = AnonymizeConfig::new(0.1, Epsilon::INF).unwrap();
        config.reference.insert("A".to_string(), 1.0);
        let out = obfuscate_table(&table, &config, &RandomSource::new(1)).unwrap();
        // Reference says A=1 strongly; every 0 flips, the 1 stays.
        let values: Vec<u8> = out.table.records().iter().map(|r| r.values[0]).collect();
        assert_eq!(values, vec![1, 1, 1, 1]);
    }

    #[test]
    fn class_marginal_policy_gates_by_class() {
        // Classes over A for attribute B: {A=0} has B-share 0, {A=1} has
        // B-share 2/3. Table marginal of B is 1/2. Distances: 0.5 and 1/6.
        let table = table_from(&["A", "B"], &[&[0, 0], &[1, 1], &[1, 1], &[1, 0]]);
        let mut config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        config.quasi_policy = QuasiPolicy::ClassMarginal;
        let out = obfuscate_table(&table, &config, &RandomSource::new(2)).unwrap();
        let values: Vec<Vec<u8>> = out
            .table
            .records()
            .iter()
            .map(|r| r.values.clone())
            .collect();
        assert_eq!(
            values,
            vec![vec![0, 1], vec![1, 1], vec![1, 1], vec![1, 0]]
        );
        assert!((out.traces[0].decisions[1].distance - 0.5).abs() < 1e-12);
        assert!((out.traces[1].decisions[1].distance - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn global_marginal_policy_flips_attributes_wholesale() {
        let table = table_from(&["A"], &[&[1], &[1], &[1], &[0]]);
        let mut config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        config.quasi_policy = QuasiPolicy::GlobalMarginal;
        config.reference.insert("A".to_string(), 0.2);
        // Marginal 0.75 vs reference 0.2: distance 0.55 > 0.3, flip all.
        let out = obfuscate_table(&table, &config, &RandomSource::new(3)).unwrap();
        let values: Vec<u8> = out.table.records().iter().map(|r| r.values[0]).collect();
        assert_eq!(values, vec![0, 0, 0, 1]);

        config.reference.insert("A".to_string(), 0.9);
        // Distance 0.15 <= 0.3: keep all.
        let out = obfuscate_table(&table, &config, &RandomSource::new(3)).unwrap();
        let values: Vec<u8> = out.table.records().iter().map(|r| r.values[0]).collect();
        assert_eq!(values, vec![1, 1, 1, 0]);
    }

    #[test]
    fn finite_epsilon_marks_perturbations() {
        let table = table_from(&["A", "B"], &[&[1u8, 0] as &[u8]; 64]);
        let config = AnonymizeConfig::new(10.0, Epsilon::new(0.5).unwrap()).unwrap();
        let out = obfuscate_table(&table, &config, &RandomSource::new(13)).unwrap();
        let flipped: usize = out
            .traces
            .iter()
            .flat_map(|t| &t.decisions)
            .filter(|d| d.perturbed)
            .count();
        assert!(flipped > 0, "epsilon=0.5 flips ~38% of 128 bits");
        // perturbed/kept flags reconstruct the output exactly.
        for (trace, record) in out.traces.iter().zip(out.table.records()) {
            for (j, decision) in trace.decisions.iter().enumerate() {
                let mut v = table.records()[trace.record_index].values[j];
                if !decision.kept {
                    v = 1 - v;
                }
                if decision.perturbed {
                    v = 1 - v;
                }
                assert_eq!(v, record.values[j]);
            }
        }
    }

    #[test]
    fn same_seed_same_output_different_seed_differs() {
        let rows: Vec<Vec<u8>> = (0..32).map(|i| vec![(i % 2) as u8, (i / 2 % 2) as u8]).collect();
        let row_refs: Vec<&[u8]> = rows.iter().map(|r| r.as_slice()).collect();
        let table = table_from(&["A", "B"], &row_refs);
        let config = AnonymizeConfig::new(0.0, Epsilon::new(1.0).unwrap()).unwrap();
        let a = obfuscate_table(&table, &config, &RandomSource::new(100)).unwrap();
        let b = obfuscate_table(&table, &config, &RandomSource::new(100)).unwrap();
        let c = obfuscate_table(&table, &config, &RandomSource::new(101)).unwrap();
        assert_eq!(a.table, b.table);
        assert_ne!(a.table, c.table);
    }

    #[test]
    fn config_validation() {
        let table = toy();
        assert!(matches!(
            AnonymizeConfig::new(-0.1, Epsilon::INF),
            Err(AnonymizeError::BadThreshold(_))
        ));
        let mut config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        config.reference.insert("Nope".to_string(), 0.5);
        assert!(matches!(
            obfuscate_table(&table, &config, &RandomSource::new(0)),
            Err(AnonymizeError::UnknownReference(_))
        ));
        let mut config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        config.reference.insert("Male".to_string(), 1.5);
        assert!(matches!(
            obfuscate_table(&table, &config, &RandomSource::new(0)),
            Err(AnonymizeError::BadReference { .. })
        ));
    }

    #[test]
    fn non_binary_attributes_are_rejected() {
        let schema = AttributeSchema::new(vec!["A".to_string()], vec![3]).unwrap();
        let table = AttributeTable::new(
            schema,
            vec![crate::table::Record {
                image_id: "x.jpg".into(),
                identity_id: "id".into(),
                values: vec![2],
            }],
        )
        .unwrap();
        let config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        assert!(matches!(
            obfuscate_table(&table, &config, &RandomSource::new(0)),
            Err(AnonymizeError::UnsupportedArity(_, 3))
        ));
    }

    #[test]
    fn composed_budget_scales_with_attribute_count() {
        let config = AnonymizeConfig::new(0.3, Epsilon::new(0.5).unwrap()).unwrap();
        assert!((config.composed_epsilon(40) - 20.0).abs() < 1e-12);
        let config = AnonymizeConfig::new(0.3, Epsilon::INF).unwrap();
        assert!(config.composed_epsilon(40).is_infinite());
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{"t": 0.3, "epsilon": "inf", "reference": {"Black_Hair": 0.75}}"#;
        let config: AnonymizeConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.quasi_policy, QuasiPolicy::RecordPoint);
        assert!(config.epsilon.is_infinite());
        assert_eq!(config.reference["Black_Hair"], 0.75);
        let text = serde_json::to_string(&config).unwrap();
        let back: AnonymizeConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.t, config.t);
        assert_eq!(back.quasi_policy, config.quasi_policy);
    }
}
