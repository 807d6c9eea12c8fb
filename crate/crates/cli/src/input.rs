//! Parsing of inline vectors, multiplier assignments and generator files.

use optcert::cone::ConeSpec;
use optcert::{ConstraintId, Multipliers, Problem};

/// Comma-separated finite decimals; scientific notation is accepted.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty vector".into());
    }
    text.split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("not a finite number: {s:?}")),
            }
        })
        .collect()
}

fn parse_id(text: &str) -> Result<ConstraintId, String> {
    text.trim().parse().map_err(|_| format!("not a constraint id: {:?}", text.trim()))
}

/// `id=value,id=value,...`; ids not mentioned get 0.
pub fn parse_multipliers(p: &Problem, text: &str) -> Result<Multipliers, String> {
    let mut pairs = Vec::new();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (id, v) = item.split_once('=').ok_or(format!("expected id=value, got {item:?}"))?;
        pairs.push((parse_id(id)?, parse_vector(v)?[0]));
    }
    Multipliers::from_pairs(p, &pairs).map_err(|_| format!("multiplier ids in {text:?} do not match the problem"))
}

/// `ID:v1,v2,...` yields one copy of `base` per value, with `ID` set.
pub fn parse_sweep(p: &Problem, base: &Multipliers, text: &str) -> Result<Vec<Multipliers>, String> {
    let (id, values) = text.split_once(':').ok_or(format!("expected ID:v1,v2,..., got {text:?}"))?;
    let id = parse_id(id)?;
    parse_vector(values)?
        .into_iter()
        .map(|v| {
            let mut m = base.clone();
            let slot = m.lambda.get_mut(&id).or(m.mu.get_mut(&id));
            *slot.ok_or(format!("problem {} has no constraint {id}", p.name()))? = v;
            Ok(m)
        })
        .collect()
}

/// Lines `free: v1,...,vn` and `nonneg: v1,...,vn`; blank lines and lines
/// starting with `#` are skipped. With no generators the dimension comes
/// from `n`.
pub fn parse_generators(text: &str, n: usize) -> Result<ConeSpec, String> {
    let (mut free, mut nonneg) = (Vec::new(), Vec::new());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |e: String| format!("line {}: {e}", lineno + 1);
        let (kind, values) = line.split_once(':').ok_or_else(|| at("expected `free:` or `nonneg:`".into()))?;
        let v = parse_vector(values).map_err(at)?;
        if v.len() != n {
            return Err(at(format!("generator has {} entries, g has {n}", v.len())));
        }
        match kind.trim() {
            "free" => free.push(v),
            "nonneg" => nonneg.push(v),
            other => return Err(at(format!("unknown generator kind {other:?}"))),
        }
    }
    ConeSpec::new(n, free, nonneg).map_err(|e| e.to_string())
}
