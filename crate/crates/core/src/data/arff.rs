//! Dense ARFF: `@relation`, `@attribute` (nominal, numeric, real, integer)
//! and comma-separated `@data` rows. `%` starts a comment line.

use std::path::Path;

use super::RawTable;
use crate::error::{Error, Result};
use crate::schema::AttributeKind;

/// Splits on commas outside single or double quotes, trimming and
/// unquoting each field.
fn split_fields(line: &str) -> std::result::Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for ch in line.chars() {
        if escaped {
            current.push(ch);
            escaped = false;
            continue;
        }
        match (quote, ch) {
            (Some(_), '\\') => escaped = true,
            (Some(q), c) if c == q => quote = None,
            (Some(_), c) => current.push(c),
            (None, '\'' | '"') if current.trim().is_empty() => {
                current.clear();
                quote = Some(ch);
            }
            (None, ',') => fields.push(std::mem::take(&mut current).trim().to_string()),
            (None, c) => current.push(c),
        }
    }
    if quote.is_some() {
        return Err("unterminated quote".into());
    }
    fields.push(current.trim().to_string());
    Ok(fields)
}

/// Splits `name type` where the name may be quoted.
fn attribute_decl(rest: &str) -> std::result::Result<(String, &str), String> {
    let rest = rest.trim_start();
    if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..]
            .find(q)
            .ok_or("unterminated quoted attribute name")?;
        Ok((rest[1..1 + end].to_string(), rest[end + 2..].trim()))
    } else {
        let end = rest
            .find(char::is_whitespace)
            .ok_or("attribute declaration lacks a type")?;
        Ok((rest[..end].to_string(), rest[end..].trim()))
    }
}

pub(super) fn read_raw(path: &Path) -> Result<RawTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut header = Vec::new();
    let mut kinds = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = (i + 1) as u64;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let err = |m: String| Error::parse(path, line_no, m);
        if in_data {
            if line.starts_with('{') {
                return Err(err("sparse ARFF rows are not supported".into()));
            }
            let fields = split_fields(line).map_err(err)?;
            if fields.len() != header.len() {
                return Err(err(format!(
                    "expected {} fields, found {}",
                    header.len(),
                    fields.len()
                )));
            }
            rows.push((line_no, fields));
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            continue;
        } else if lower.starts_with("@attribute") {
            let (name, ty) = attribute_decl(&line["@attribute".len()..]).map_err(err)?;
            let kind = if ty.starts_with('{') {
                let inner = ty
                    .strip_prefix('{')
                    .and_then(|t| t.strip_suffix('}'))
                    .ok_or_else(|| err(format!("malformed nominal domain `{ty}`")))?;
                AttributeKind::Nominal(split_fields(inner).map_err(err)?)
            } else {
                match ty.to_ascii_lowercase().as_str() {
                    "numeric" | "real" | "integer" => AttributeKind::Numeric,
                    other => return Err(err(format!("unsupported attribute type `{other}`"))),
                }
            };
            header.push(name);
            kinds.push(kind);
        } else if lower.starts_with("@data") {
            if header.is_empty() {
                return Err(err("@data before any @attribute".into()));
            }
            in_data = true;
        } else {
            return Err(err(format!("unexpected line `{line}`")));
        }
    }
    if !in_data {
        return Err(Error::parse(
            path,
            text.lines().count() as u64,
            "no @data section",
        ));
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        header,
        declared: Some(kinds),
        rows,
    })
}
