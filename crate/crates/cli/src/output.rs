//! Deterministic writers: identical run configurations must produce
//! byte-identical files. All content is assembled in memory in a fixed
//! order before a single write.

use crate::AppError;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

/// Significant digits in the decimal rendering column.
pub const DECIMAL_DIGITS: u32 = 15;

#[derive(Debug, Clone)]
pub struct Row {
    pub k: u32,
    pub functional: String,
    pub value_exact: String,
    pub value_decimal: String,
    pub monotone_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub d: u32,
    pub p: String,
    pub mode: String,
    pub seed: u64,
    pub model: String,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    k: u32,
    functional: &'a str,
    value_exact: &'a str,
    value_decimal: &'a str,
    monotone_ok: Option<bool>,
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    header: &'a Header,
    rows: Vec<JsonRow<'a>>,
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::from("k,functional,value_exact,value_decimal,monotone_ok\n");
    for r in rows {
        let flag = match r.monotone_ok {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k, r.functional, r.value_exact, r.value_decimal, flag
        ));
    }
    out
}

pub fn render_json(header: &Header, rows: &[Row]) -> String {
    let doc = JsonDoc {
        header,
        rows: rows
            .iter()
            .map(|r| JsonRow {
                k: r.k,
                functional: &r.functional,
                value_exact: &r.value_exact,
                value_decimal: &r.value_decimal,
                monotone_ok: r.monotone_ok,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn render_tsv(rows: &[Row]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!("{}\t{}\t{}\n", r.functional, r.k, r.value_decimal));
    }
    out
}

pub fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), AppError> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}
