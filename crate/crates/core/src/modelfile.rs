//! The JSON model-definition file.
//!
//! Schema: `{d, root: {u0, children: [...]}, splitter: {kind, seed?,
//! magnitude?, denominator?, table?}, K}` with rationals written as "p/q"
//! strings. Splitter kinds: "equal_split", "double_half", "random",
//! "table". Address-dependent rules have no file representation.

use crate::error::{Error, Result};
use crate::model::RootData;
use crate::scalar::{parse_rational, Scalar};
use crate::splitter::{Splitter, RANDOM_DENOMINATOR_DEFAULT, RANDOM_MAGNITUDE_DEFAULT};
use crate::tree::TreeConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: u32,
    pub root: RootFile,
    pub splitter: SplitterFile,
    #[serde(rename = "K")]
    pub k: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootFile {
    pub u0: String,
    pub children: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitterFile {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<TableEntry>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableEntry {
    pub value: String,
    pub parent: String,
    pub children: Vec<String>,
}

/// A parsed model definition, ready to build at any representation/mode.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub cfg: TreeConfig,
    pub root: RootData,
    pub splitter: Splitter,
    pub depth: u32,
}

fn scalar(text: &str) -> Result<Scalar> {
    Ok(Scalar::from_rational(parse_rational(text)?))
}

pub fn parse_model_json(json: &str) -> Result<ModelSpec> {
    let file: ModelFile =
        serde_json::from_str(json).map_err(|e| Error::ModelFile(e.to_string()))?;
    let cfg = TreeConfig::new(file.d)?;
    let u0 = scalar(&file.root.u0)?;
    let children = file
        .root
        .children
        .iter()
        .map(|c| scalar(c))
        .collect::<Result<Vec<_>>>()?;
    let root = RootData::new(cfg, u0, children)?;
    let splitter = match file.splitter.kind.as_str() {
        "equal_split" => Splitter::EqualSplit,
        "double_half" => Splitter::DoubleHalf,
        "random" => Splitter::Random {
            seed: file.splitter.seed.unwrap_or(0),
            magnitude: file.splitter.magnitude.unwrap_or(RANDOM_MAGNITUDE_DEFAULT),
            denominator: file
                .splitter
                .denominator
                .unwrap_or(RANDOM_DENOMINATOR_DEFAULT),
        },
        "table" => {
            let entries = file
                .splitter
                .table
                .as_ref()
                .ok_or_else(|| Error::ModelFile("table splitter requires a table".into()))?;
            let mut map = BTreeMap::new();
            for e in entries {
                let key = (scalar(&e.value)?, scalar(&e.parent)?);
                let children = e
                    .children
                    .iter()
                    .map(|c| scalar(c))
                    .collect::<Result<Vec<_>>>()?;
                if children.len() != (file.d - 1) as usize {
                    return Err(Error::ModelFile(format!(
                        "table entry for (u={}, up={}) has {} children, expected {}",
                        e.value,
                        e.parent,
                        children.len(),
                        file.d - 1
                    )));
                }
                map.insert(key, children);
            }
            Splitter::Table(map)
        }
        other => return Err(Error::ModelFile(format!("unknown splitter kind {other:?}"))),
    };
    Ok(ModelSpec {
        cfg,
        root,
        splitter,
        depth: file.k,
    })
}

pub fn load_model_file(path: &Path) -> Result<ModelSpec> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
    parse_model_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, check_harmonic, Representation};
    use crate::scalar::parse_rational;

    #[test]
    fn parse_equal_split_model() {
        let json = r#"{
            "d": 3,
            "root": {"u0": "0", "children": ["1", "-1/2", "-1/2"]},
            "splitter": {"kind": "equal_split"},
            "K": 4
        }"#;
        let spec = parse_model_json(json).unwrap();
        assert_eq!(spec.cfg.degree(), 3);
        assert_eq!(spec.depth, 4);
        let model = build_model(
            spec.cfg,
            spec.root,
            spec.splitter,
            spec.depth,
            Representation::Enumerated,
        )
        .unwrap();
        assert!(check_harmonic(&model).is_pass());
    }

    #[test]
    fn parse_table_model() {
        let json = r#"{
            "d": 3,
            "root": {"u0": "0", "children": ["1", "-1/2", "-1/2"]},
            "splitter": {"kind": "table", "table": [
                {"value": "1", "parent": "0", "children": ["2", "1"]},
                {"value": "-1/2", "parent": "0", "children": ["-3/4", "-3/4"]}
            ]},
            "K": 2
        }"#;
        let spec = parse_model_json(json).unwrap();
        let model = build_model(
            spec.cfg,
            spec.root,
            spec.splitter,
            2,
            Representation::Enumerated,
        )
        .unwrap();
        assert!(check_harmonic(&model).is_pass());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_model_json("{").is_err());
        let bad_sum = r#"{
            "d": 3,
            "root": {"u0": "0", "children": ["1", "1", "1"]},
            "splitter": {"kind": "equal_split"},
            "K": 1
        }"#;
        assert!(matches!(
            parse_model_json(bad_sum),
            Err(Error::RootSumViolation { .. })
        ));
        let bad_kind = r#"{
            "d": 3,
            "root": {"u0": "0", "children": ["1", "-1", "0"]},
            "splitter": {"kind": "mystery"},
            "K": 1
        }"#;
        assert!(parse_model_json(bad_kind).is_err());
        let bad_rational = r#"{
            "d": 2,
            "root": {"u0": "x", "children": ["1", "-1"]},
            "splitter": {"kind": "equal_split"},
            "K": 1
        }"#;
        assert!(parse_model_json(bad_rational).is_err());
    }

    #[test]
    fn random_model_file_roundtrip() {
        let json = r#"{
            "d": 4,
            "root": {"u0": "1/2", "children": ["1", "1/2", "0", "1/2"]},
            "splitter": {"kind": "random", "seed": 11},
            "K": 5
        }"#;
        let spec = parse_model_json(json).unwrap();
        let m1 = build_model(
            spec.cfg,
            spec.root.clone(),
            spec.splitter.clone(),
            spec.depth,
            Representation::Compressed,
        )
        .unwrap();
        let m2 = build_model(
            spec.cfg,
            spec.root,
            spec.splitter,
            spec.depth,
            Representation::Compressed,
        )
        .unwrap();
        assert!(check_harmonic(&m1).is_pass());
        // deterministic rebuild
        for k in 0..=5u32 {
            assert_eq!(
                m1.level(k).unwrap().as_compressed().unwrap().classes,
                m2.level(k).unwrap().as_compressed().unwrap().classes
            );
        }
        let _ = parse_rational("1").unwrap();
    }
}
