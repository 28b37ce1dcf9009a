//! CSV ingestion and emission, number formatting and SVG charts.

pub mod svg;
mod table;

pub use table::{
    load_csv, load_panel, load_panel_from_reader, load_response, load_response_from_reader, save_csv,
    write_csv, CellRef, Fragment, ParseReport, Role,
};

use serde_json::Value;

/// Significant digits used for every emitted number.
pub const SIG_DIGITS: usize = 15;

/// Round to 15 significant digits; the result's shortest decimal form has at
/// most 15 digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

/// A number as text: 15 significant digits, `NA` when missing.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        let r = round_sig(v);
        if r == 0.0 {
            "0".into()
        } else {
            format!("{r}")
        }
    }
}

/// Round every floating-point number in a JSON document to 15 significant digits.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
