//! Parsers for compact flag values.

use smdiff::num_complex::Complex64;
use smdiff::RootSpec;

/// `from-charpoly`, `repeated:<b>` or `explicit:<c>,<c>,..`.
pub fn root_spec(s: &str) -> Result<RootSpec, String> {
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (s, None),
    };
    match (kind, rest) {
        ("from-charpoly", None) => Ok(RootSpec::FromCharPoly),
        ("repeated", Some(b)) => b
            .trim()
            .parse::<f64>()
            .map(RootSpec::Repeated)
            .map_err(|e| format!("bad repeated root {b:?}: {e}")),
        ("explicit", Some(list)) => complex_list(list).map(RootSpec::Explicit),
        _ => Err(format!(
            "expected from-charpoly, repeated:<b> or explicit:<list>, got {s:?}"
        )),
    }
}

pub fn complex_list(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',').map(|v| complex(v.trim())).collect()
}

/// `a`, `bi`, `a+bi` or `a-bi`, with optional exponents.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let bad = |e: std::num::ParseFloatError| format!("bad complex number {s:?}: {e}");
    let Some(body) = s.strip_suffix('i') else {
        return s
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(bad);
    };
    let bytes = body.as_bytes();
    // last sign that is neither leading nor part of an exponent
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => t.parse::<f64>().map_err(bad),
    };
    match split {
        Some(i) => Ok(Complex64::new(
            body[..i].parse::<f64>().map_err(bad)?,
            imag(&body[i..])?,
        )),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}
