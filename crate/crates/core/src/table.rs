//! Person-specific attribute tables.
//!
//! A table couples a schema (attribute names and arities) with records that
//! carry an image id, an identity id, and one byte-coded value per attribute.
//! Grouping records by a quasi-identifier subset yields the equivalence
//! classes that the privacy metrics are defined over.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DiscreteDistribution;

/// Version tag embedded in serialized tables.
pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("schema must have at least one attribute")]
    EmptySchema,
    #[error("attribute names must be non-empty")]
    EmptyAttributeName,
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute `{0}` has arity {1}; arity must be at least 2")]
    BadArity(String, u8),
    #[error("record `{image_id}` has {got} values but the schema has {want} attributes")]
    RecordArityMismatch {
        image_id: String,
        got: usize,
        want: usize,
    },
    #[error("record `{image_id}` has value {value} for `{attribute}` (arity {arity})")]
    ValueOutOfRange {
        image_id: String,
        attribute: String,
        value: u8,
        arity: u8,
    },
    #[error("no identity mapping for image `{0}`")]
    MissingIdentity(String),
    #[error(
        "records {first} and {second} share identity `{identity}` and identical values; \
         the table is not person-specific"
    )]
    NotPersonSpecific {
        first: usize,
        second: usize,
        identity: String,
    },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{0}` listed twice")]
    RepeatedAttribute(String),
    #[error("table has no records")]
    EmptyTable,
    #[error("unsupported table format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid table document: {0}")]
    Document(String),
    #[error("replacement values must cover all {want} records (got {got})")]
    WrongRecordCount { got: usize, want: usize },
}

/// Attribute names and the number of categories each attribute can take.
/// Values of attribute `i` range over `0..arity[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    names: Vec<String>,
    arity: Vec<u8>,
}

impl AttributeSchema {
    pub fn new(names: Vec<String>, arity: Vec<u8>) -> Result<Self, TableError> {
        if names.is_empty() {
            return Err(TableError::EmptySchema);
        }
        if names.len() != arity.len() {
            return Err(TableError::Document(format!(
                "{} names but {} arities",
                names.len(),
                arity.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(TableError::EmptyAttributeName);
            }
            if seen.insert(name.clone(), i).is_some() {
                return Err(TableError::DuplicateAttribute(name.clone()));
            }
        }
        for (name, &a) in names.iter().zip(&arity) {
            if a < 2 {
                return Err(TableError::BadArity(name.clone(), a));
            }
        }
        Ok(AttributeSchema { names, arity })
    }

    /// Schema in which every attribute is binary.
    pub fn binary(names: Vec<String>) -> Result<Self, TableError> {
        let arity = vec![2; names.len()];
        AttributeSchema::new(names, arity)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arity(&self, index: usize) -> u8 {
        self.arity[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Maps attribute names to column indices, rejecting unknown names and
    /// repeats.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>, TableError> {
        let mut indices = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .index_of(name)
                .ok_or_else(|| TableError::UnknownAttribute(name.clone()))?;
            if indices.contains(&idx) {
                return Err(TableError::RepeatedAttribute(name.clone()));
            }
            indices.push(idx);
        }
        Ok(indices)
    }
}

/// One annotated image: which image, whose face, and the attribute values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub image_id: String,
    pub identity_id: String,
    pub values: Vec<u8>,
}

/// A schema plus records whose values have been validated against it.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    schema: AttributeSchema,
    records: Vec<Record>,
}

#[derive(Serialize, Deserialize)]
struct TableDocument {
    version: u32,
    schema: AttributeSchema,
    records: Vec<Record>,
}

impl AttributeTable {
    /// Checks every record against the schema. Does not enforce
    /// person-specificity; see [`build_table`] for ingestion-time checks.
    pub fn new(schema: AttributeSchema, records: Vec<Record>) -> Result<Self, TableError> {
        for record in &records {
            if record.values.len() != schema.len() {
                return Err(TableError::RecordArityMismatch {
                    image_id: record.image_id.clone(),
                    got: record.values.len(),
                    want: schema.len(),
                });
            }
            for (i, &value) in record.values.iter().enumerate() {
                if value >= schema.arity[i] {
                    return Err(TableError::ValueOutOfRange {
                        image_id: record.image_id.clone(),
                        attribute: schema.names[i].clone(),
                        value,
                        arity: schema.arity[i],
                    });
                }
            }
        }
        Ok(AttributeTable { schema, records })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// A copy of this table with each record's values replaced, preserving
    /// image and identity ids. Used by obfuscation transforms, whose outputs
    /// may legitimately collide on (identity, values).
    pub fn with_values(&self, values: Vec<Vec<u8>>) -> Result<Self, TableError> {
        if values.len() != self.records.len() {
            return Err(TableError::WrongRecordCount {
                got: values.len(),
                want: self.records.len(),
            });
        }
        let records = self
            .records
            .iter()
            .zip(values)
            .map(|(record, values)| Record {
                image_id: record.image_id.clone(),
                identity_id: record.identity_id.clone(),
                values,
            })
            .collect();
        AttributeTable::new(self.schema.clone(), records)
    }

    /// Serializes to a versioned JSON document with stable field order.
    pub fn to_json(&self) -> String {
        let doc = TableDocument {
            version: TABLE_FORMAT_VERSION,
            schema: self.schema.clone(),
            records: self.records.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("table serialization cannot fail")
    }

    /// Parses and re-validates a document produced by [`AttributeTable::to_json`].
    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let doc: TableDocument =
            serde_json::from_str(text).map_err(|e| TableError::Document(e.to_string()))?;
        if doc.version != TABLE_FORMAT_VERSION {
            return Err(TableError::UnsupportedVersion(doc.version));
        }
        let schema = AttributeSchema::new(doc.schema.names, doc.schema.arity)?;
        AttributeTable::new(schema, doc.records)
    }
}

/// Builds a validated table from parsed attribute rows and an image-to-identity
/// map, enforcing person-specificity: no two records may share both an
/// identity and an identical value vector.
pub fn build_table(
    schema: AttributeSchema,
    rows: Vec<(String, Vec<u8>)>,
    identities: &HashMap<String, String>,
) -> Result<AttributeTable, TableError> {
    let mut records = Vec::with_capacity(rows.len());
    for (image_id, values) in rows {
        let identity_id = identities
            .get(&image_id)
            .ok_or_else(|| TableError::MissingIdentity(image_id.clone()))?
            .clone();
        records.push(Record {
            image_id,
            identity_id,
            values,
        });
    }
    let mut seen: HashMap<(&str, &[u8]), usize> = HashMap::new();
    for (i, record) in records.iter().enumerate() {
        let key = (record.identity_id.as_str(), record.values.as_slice());
        if let Some(&first) = seen.get(&key) {
            return Err(TableError::NotPersonSpecific {
                first,
                second: i,
                identity: record.identity_id.clone(),
            });
        }
        seen.insert(key, i);
    }
    AttributeTable::new(schema, records)
}

/// Records that agree on every quasi-identifier attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// The shared quasi-identifier values, in `quasi` order.
    pub key: Vec<u8>,
    /// Indices into the table's record list, in table order.
    pub members: Vec<usize>,
}

/// Partitions the table into equivalence classes over `quasi`, returned in
/// ascending key order. An empty `quasi` yields a single class holding every
/// record.
pub fn partition_equivalence_classes(
    table: &AttributeTable,
    quasi: &[String],
) -> Result<Vec<EquivalenceClass>, TableError> {
    let indices = table.schema().resolve(quasi)?;
    let mut classes: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for (i, record) in table.records().iter().enumerate() {
        let key: Vec<u8> = indices.iter().map(|&a| record.values[a]).collect();
        classes.entry(key).or_default().push(i);
    }
    Ok(classes
        .into_iter()
        .map(|(key, members)| EquivalenceClass { key, members })
        .collect())
}

/// Empirical distribution of `attribute` over the whole table, on the support
/// `0..arity`.
pub fn marginal_distribution(
    table: &AttributeTable,
    attribute: &str,
) -> Result<DiscreteDistribution, TableError> {
    let idx = table
        .schema()
        .index_of(attribute)
        .ok_or_else(|| TableError::UnknownAttribute(attribute.to_string()))?;
    distribution_over(table, idx, (0..table.len()).collect::<Vec<_>>().as_slice())
}

/// Empirical distribution of attribute `index` over the given record indices.
pub(crate) fn distribution_over(
    table: &AttributeTable,
    index: usize,
    members: &[usize],
) -> Result<DiscreteDistribution, TableError> {
    if members.is_empty() {
        return Err(TableError::EmptyTable);
    }
    let arity = table.schema().arity(index) as usize;
    let mut counts = vec![0usize; arity];
    for &m in members {
        counts[table.records()[m].values[index] as usize] += 1;
    }
    Ok(DiscreteDistribution::from_counts(&counts).expect("non-empty counts form a distribution"))
}
