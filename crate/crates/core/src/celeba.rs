//! Parsers for CelebA-style annotation files.
//!
//! The attribute list format is: a first line holding the number of data
//! rows, a second line holding whitespace-separated attribute names, then one
//! row per image of the form `image_id v1 v2 ...` where each value is `1` or
//! `-1`. `-1` is mapped to 0 and `1` to 1. The identity list format is one
//! `image_id identity_id` pair per line. Line numbers in errors are 1-based
//! file lines; blank lines are skipped.

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

use crate::table::{AttributeSchema, TableError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: attribute value `{token}` is neither 1 nor -1")]
    BadValue { line: usize, token: String },
    #[error("line {line}: expected {want} attribute values, found {got}")]
    RowArity {
        line: usize,
        want: usize,
        got: usize,
    },
    #[error("line {line}: image `{image}` is already mapped to identity `{existing}`")]
    IdentityConflict {
        line: usize,
        image: String,
        existing: String,
    },
    #[error(transparent)]
    Schema(#[from] TableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Format {
        line,
        message: message.into(),
    }
}

/// One parsed annotation row: the image id and its 0/1 attribute values.
pub type AnnotationRow = (String, Vec<u8>);

/// Parses an attribute list into a binary schema plus `(image_id, values)`
/// rows, ready for table construction.
pub fn parse_celeba_attrs<R: BufRead>(
    reader: R,
) -> Result<(AttributeSchema, Vec<AnnotationRow>), ParseError> {
    let mut declared: Option<usize> = None;
    let mut schema: Option<AttributeSchema> = None;
    let mut rows: Vec<AnnotationRow> = Vec::new();
    let mut last_line = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if declared.is_none() {
            let count: usize = text
                .parse()
                .map_err(|_| format_err(line_no, format!("`{text}` is not a row count")))?;
            declared = Some(count);
            continue;
        }
        if schema.is_none() {
            let names: Vec<String> = text.split_whitespace().map(str::to_string).collect();
            schema = Some(AttributeSchema::binary(names)?);
            continue;
        }
        let schema_ref = schema.as_ref().expect("schema parsed above");
        let declared = declared.expect("count parsed above");
        if rows.len() == declared {
            return Err(format_err(
                line_no,
                format!("expected {declared} data rows, found more"),
            ));
        }
        let mut tokens = text.split_whitespace();
        let image_id = tokens.next().expect("non-empty line").to_string();
        let mut values = Vec::with_capacity(schema_ref.len());
        for token in tokens {
            match token {
                "1" => values.push(1u8),
                "-1" => values.push(0u8),
                _ => {
                    return Err(ParseError::BadValue {
                        line: line_no,
                        token: token.to_string(),
                    })
                }
            }
        }
        if values.len() != schema_ref.len() {
            return Err(ParseError::RowArity {
                line: line_no,
                want: schema_ref.len(),
                got: values.len(),
            });
        }
        rows.push((image_id, values));
    }
    let declared = declared.ok_or_else(|| format_err(1, "missing row-count line"))?;
    let schema = schema.ok_or_else(|| format_err(2, "missing attribute-name line"))?;
    if rows.len() < declared {
        return Err(format_err(
            last_line,
            format!("expected {declared} data rows, found {}", rows.len()),
        ));
    }
    Ok((schema, rows))
}

/// Parses an identity list into an image-to-identity map. Repeating a pair
/// is harmless; remapping an image to a different identity is an error.
pub fn parse_identity_map<R: BufRead>(reader: R) -> Result<HashMap<String, String>, ParseError> {
    let mut map: HashMap<String, String> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let image = tokens.next().expect("non-empty line").to_string();
        let identity = tokens
            .next()
            .ok_or_else(|| format_err(line_no, "expected `image_id identity_id`"))?
            .to_string();
        if tokens.next().is_some() {
            return Err(format_err(line_no, "expected exactly two fields"));
        }
        if let Some(existing) = map.get(&image) {
            if *existing != identity {
                return Err(ParseError::IdentityConflict {
                    line: line_no,
                    image,
                    existing: existing.clone(),
                });
            }
        } else {
            map.insert(image, identity);
        }
    }
    Ok(map)
}
