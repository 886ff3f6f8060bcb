//! Line-oriented input format for field and stratum data.
//!
//! Two sections, `[field]` and `[stratum]`, each holding `key = value`
//! lines; `#` starts a comment. Element literals: `u*p^k` in F0 and
//! `(u1*p^k1) + (u2*p^k2)*d` in F, with `u` a decimal integer taken mod p^N.
//! 2x2 and 3x3 matrices are row lists like `[[a, b], [c, d]]`.
//!
//! Example:
//!
//! ```text
//! [field]
//! p = 5
//! ramified = false
//! precision = 24
//!
//! [stratum]
//! type = D
//! lambda1 = 1
//! lambda2 = 1
//! lambda3 = 1
//! beta1 = (1*p^-3)*d
//! beta2 = (1*p^-1)*d
//! beta3 = (2*p^-1)*d
//! ```

use std::collections::BTreeMap;
use unitary_strata::hermitian::Matrix;
use unitary_strata::lattice::Catalogued;
use unitary_strata::padic::{parse_base, parse_ext, ExtElement, PrimeConfig};
use unitary_strata::strata::{Stratum, TypeTag};
use unitary_strata::Error;

pub const PRECISION_ENV: &str = "UNITARY_STRATA_PRECISION";

#[derive(Debug, Clone)]
pub struct ParsedInput {
    pub cfg: PrimeConfig,
    pub kind: InputKind,
}

#[derive(Debug, Clone)]
pub enum InputKind {
    Stratum(Box<Stratum>),
    DepthZero { lattice: Catalogued, sigma_generic: bool },
}

fn default_precision() -> usize {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(24)
}

struct Sections {
    field: BTreeMap<String, (usize, String)>,
    stratum: BTreeMap<String, (usize, String)>,
}

fn split_sections(text: &str) -> Result<Sections, Error> {
    #[derive(Clone, Copy, PartialEq)]
    enum Sec {
        Field,
        Stratum,
    }
    let mut field_map = BTreeMap::new();
    let mut stratum_map = BTreeMap::new();
    let mut current: Option<Sec> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[field]" => {
                current = Some(Sec::Field);
                continue;
            }
            "[stratum]" => {
                current = Some(Sec::Stratum);
                continue;
            }
            _ if line.starts_with('[') => {
                return Err(Error::Parse(format!("line {}: unknown section {line}", lineno + 1)));
            }
            _ => {}
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Parse(format!("line {}: expected key = value", lineno + 1)));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        let map = match current {
            Some(Sec::Field) => &mut field_map,
            Some(Sec::Stratum) => &mut stratum_map,
            None => {
                return Err(Error::Parse(format!("line {}: key outside of a section", lineno + 1)))
            }
        };
        if map.insert(key.clone(), (lineno + 1, value)).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    Ok(Sections { field: field_map, stratum: stratum_map })
}

fn take<'a>(
    map: &'a BTreeMap<String, (usize, String)>,
    key: &str,
) -> Option<&'a str> {
    map.get(key).map(|(_, v)| v.as_str())
}

fn require<'a>(map: &'a BTreeMap<String, (usize, String)>, key: &str, section: &str) -> Result<&'a str, Error> {
    take(map, key).ok_or_else(|| Error::Parse(format!("missing key `{key}` in [{section}]")))
}

/// Split a bracketed row list `[[a, b], [c, d]]` into element strings.
fn split_matrix(s: &str) -> Result<Vec<Vec<String>>, Error> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("matrix must be bracketed: `{s}`")))?;
    let mut rows = Vec::new();
    let mut depth = 0usize;
    let mut start = None;
    for (i, ch) in inner.char_indices() {
        match ch {
            '[' => {
                if depth == 0 {
                    start = Some(i + 1);
                }
                depth += 1;
            }
            ']' => {
                depth = depth.checked_sub(1).ok_or_else(|| Error::Parse("unbalanced brackets".into()))?;
                if depth == 0 {
                    let row = &inner[start.take().unwrap()..i];
                    rows.push(split_row(row));
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced brackets".into()));
    }
    Ok(rows)
}

/// Split a row on commas that are not inside parentheses.
fn split_row(row: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in row.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur = String::new();
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

pub fn parse_input(text: &str) -> Result<ParsedInput, Error> {
    let sections = split_sections(text)?;
    let f = &sections.field;
    let p: u64 = require(f, "p", "field")?
        .parse()
        .map_err(|_| Error::Parse("p must be an integer".into()))?;
    let ramified: bool = require(f, "ramified", "field")?
        .parse()
        .map_err(|_| Error::Parse("ramified must be true or false".into()))?;
    let precision: usize = match take(f, "precision") {
        Some(v) => v.parse().map_err(|_| Error::Parse("precision must be an integer".into()))?,
        None => default_precision(),
    };
    let cfg = match take(f, "nonsquare_unit") {
        Some(v) => {
            let w: u64 = v.parse().map_err(|_| Error::Parse("nonsquare_unit must be an integer".into()))?;
            PrimeConfig::new(p, ramified, w, precision)?
        }
        None => {
            if ramified {
                PrimeConfig::ramified(p, precision)?
            } else {
                PrimeConfig::unramified(p, precision)?
            }
        }
    };

    let st = &sections.stratum;
    let ty = require(st, "type", "stratum")?;
    if ty.eq_ignore_ascii_case("depth_zero") {
        let lattice = Catalogued::parse(require(st, "lattice", "stratum")?)
            .ok_or_else(|| Error::Parse("lattice must be L1 or L2".into()))?;
        let sigma_generic: bool = require(st, "sigma_generic", "stratum")?
            .parse()
            .map_err(|_| Error::Parse("sigma_generic must be true or false".into()))?;
        return Ok(ParsedInput { cfg, kind: InputKind::DepthZero { lattice, sigma_generic } });
    }
    let tag = match ty.to_ascii_uppercase().as_str() {
        "A" => TypeTag::A,
        "B" => TypeTag::B,
        "C" => TypeTag::C,
        "D" => TypeTag::D,
        other => return Err(Error::Parse(format!("unknown stratum type `{other}`"))),
    };
    let ext = |key: &str| -> Result<ExtElement, Error> {
        match take(st, key) {
            Some(v) => parse_ext(&cfg, v),
            None => Ok(ExtElement::zero()),
        }
    };
    let mut lambdas = Vec::new();
    for key in ["lambda1", "lambda2", "lambda3"] {
        if let Some(v) = take(st, key) {
            lambdas.push(parse_base(&cfg, v)?);
        }
    }
    let v2_isotropic = match take(st, "v2_isotropic") {
        Some(v) => v.parse().map_err(|_| Error::Parse("v2_isotropic must be true or false".into()))?,
        None => tag == TypeTag::D || tag == TypeTag::A,
    };
    let beta_block = match take(st, "beta2_matrix") {
        Some(v) => {
            let rows = split_matrix(v)?;
            if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                return Err(Error::Parse("beta2_matrix must be 2x2".into()));
            }
            let mut out: [[ExtElement; 2]; 2] =
                [[ExtElement::zero(), ExtElement::zero()], [ExtElement::zero(), ExtElement::zero()]];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = parse_ext(&cfg, &rows[i][j])?;
                }
            }
            Some(out)
        }
        None => None,
    };
    let beta_full = match take(st, "beta_matrix") {
        Some(v) => {
            let rows = split_matrix(v)?;
            if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                return Err(Error::Parse("beta_matrix must be 3x3".into()));
            }
            let mut m = Matrix::zero(3);
            for i in 0..3 {
                for j in 0..3 {
                    m.0[i][j] = parse_ext(&cfg, &rows[i][j])?;
                }
            }
            Some(m)
        }
        None => None,
    };
    let lattice_kind = match take(st, "lattice") {
        Some(v) => Some(
            Catalogued::parse(v).ok_or_else(|| Error::Parse("lattice must be L1, L2 or L3".into()))?,
        ),
        None => None,
    };
    let stratum = Stratum {
        cfg: cfg.clone(),
        tag,
        v2_isotropic,
        lambdas,
        beta1: ext("beta1")?,
        beta2: ext("beta2")?,
        beta3: ext("beta3")?,
        beta_block,
        beta_full,
        lattice_kind,
    };
    Ok(ParsedInput { cfg, kind: InputKind::Stratum(Box::new(stratum)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_d_stratum() {
        let text = "\n[field]\np = 5\nramified = false\n\n[stratum]\ntype = D\nlambda1 = 1\nlambda2 = 1\nlambda3 = 1\nbeta1 = (1*p^-3)*d\nbeta2 = (1*p^-1)*d\nbeta3 = (2*p^-1)*d\n";
        let parsed = parse_input(text).unwrap();
        match parsed.kind {
            InputKind::Stratum(s) => {
                assert!(s.validate().is_empty(), "{:?}", s.validate());
            }
            _ => panic!("expected stratum"),
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_input("[field]\np = x\n").is_err());
        assert!(parse_input("p = 5\n").is_err());
    }
}
