//! Canonical `kind:key=value,key=value` strings shared by test functions,
//! spaces, weights and domains.
//!
//! Vector-valued parameters use `;` between components (`center=0.5;-1`).
//! A scalar given for a vector parameter is broadcast to every axis.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpecString {
    pub kind: String,
    pub params: BTreeMap<String, String>,
}

impl SpecString {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, rest) = match text.split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => (text, ""),
        };
        if kind.is_empty() {
            return Err(Error::Parse(format!("missing kind in `{text}`")));
        }
        let mut params = BTreeMap::new();
        if !rest.is_empty() {
            for item in rest.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
                let k = k.trim().to_ascii_lowercase();
                if params.insert(k.clone(), v.trim().to_string()).is_some() {
                    return Err(Error::Parse(format!("duplicate key `{k}`")));
                }
            }
        }
        Ok(Self { kind: kind.to_ascii_lowercase(), params })
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .params
            .get(key)
            .ok_or_else(|| Error::Parse(format!("`{}` requires `{key}`", self.kind)))?;
        parse_f64(raw)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn vec(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .params
            .get(key)
            .ok_or_else(|| Error::Parse(format!("`{}` requires `{key}`", self.kind)))?;
        raw.split(';').map(parse_f64).collect()
    }

    pub fn vec_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        if self.has(key) {
            self.vec(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self
            .params
            .get(key)
            .ok_or_else(|| Error::Parse(format!("`{}` requires `{key}`", self.kind)))?;
        raw.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("`{key}={raw}` is not a nonnegative integer")))
    }

    /// Rejects keys outside `allowed`, so typos do not silently fall back to
    /// defaults.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown key `{k}` for `{}`", self.kind)));
            }
        }
        Ok(())
    }
}

pub fn parse_f64(raw: &str) -> Result<f64> {
    let t = raw.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => return Ok(f64::INFINITY),
        _ => {}
    }
    t.parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{raw}` is not a number")))
}

/// Shortest round-tripping representation, `inf` for infinity.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn fmt_vec(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{}", fmt_f64(*x));
    }
    s
}

/// Expands a broadcastable vector parameter to `dim` components.
pub fn broadcast(v: &[f64], dim: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v.to_vec()),
        n => Err(Error::GridMismatch(format!(
            "{what} has {n} components, grid has dimension {dim}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kind_and_params() {
        let s = SpecString::parse("lorentz:r=2,tau=3").unwrap();
        assert_eq!(s.kind, "lorentz");
        assert_eq!(s.f64("r").unwrap(), 2.0);
        assert_eq!(s.f64("tau").unwrap(), 3.0);
    }

    #[test]
    fn vectors_and_infinity() {
        let s = SpecString::parse("ball:center=0.5;-1,radius=inf").unwrap();
        assert_eq!(s.vec("center").unwrap(), vec![0.5, -1.0]);
        assert!(s.f64("radius").unwrap().is_infinite());
    }

    #[test]
    fn bare_kind_and_errors() {
        assert_eq!(SpecString::parse("full").unwrap().kind, "full");
        assert!(SpecString::parse("x:a").is_err());
        assert!(SpecString::parse("x:a=1,a=2").is_err());
        assert!(SpecString::parse(":a=1").is_err());
    }
}
