//! Series text format.
//!
//! A series is one JSON object: `lattice` (the common power denominator q)
//! and `terms`, a list of `{"p": "<num>/<den>", "l": <logpow>, "c": "<poly>"}`
//! sorted by (p, l). Coefficients print at full working precision in the
//! canonical polynomial text of [`ParamScalar`].

use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::param::{ParamScalar, ParamSpace};
use crate::scalar::Backend;
use crate::series::{Exponent, Series, Shape};

pub fn series_to_json(s: &Series) -> Value {
    let terms: Vec<Value> = s
        .terms()
        .map(|(&(p, l), c)| {
            json!({
                "p": p.to_string(),
                "l": l,
                "c": c.to_string(),
            })
        })
        .collect();
    json!({
        "lattice": s.lattice(),
        "terms": terms,
    })
}

pub fn serialize_series(s: &Series) -> String {
    serde_json::to_string_pretty(&series_to_json(s)).expect("series JSON")
}

pub fn parse_series(text: &str, space: &Arc<ParamSpace>, backend: &Backend) -> Result<Series> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("series JSON: {e}")))?;
    series_from_json(&v, space, backend)
}

pub fn series_from_json(
    v: &Value,
    space: &Arc<ParamSpace>,
    backend: &Backend,
) -> Result<Series> {
    let terms = v
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("series JSON: missing `terms` array".into()))?;
    let mut parsed: Vec<(Exponent, u32, ParamScalar)> = Vec::with_capacity(terms.len());
    let mut max_p = Exponent::zero();
    let mut max_l = 0u32;
    for t in terms {
        let p = t
            .get("p")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("series term: missing `p`".into()))?;
        let l = t
            .get("l")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("series term: missing `l`".into()))? as u32;
        let c = t
            .get("c")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("series term: missing `c`".into()))?;
        let power = Exponent::parse(p)?;
        let coeff = ParamScalar::parse(c, space, backend)?;
        max_p = max_p.max(power);
        max_l = max_l.max(l);
        parsed.push((power, l, coeff));
    }
    let shape = Shape::new(space.clone(), *backend, max_p, max_l);
    let mut out = shape.zero();
    for (p, l, c) in parsed {
        out.insert(p, l, c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn empty_series_round_trips() {
        let space = ParamSpace::empty();
        let b = Backend::Rational;
        let shape = Shape::new(space.clone(), b, Exponent::int(4), 4);
        let s = shape.zero();
        let text = serialize_series(&s);
        let back = parse_series(&text, &space, &b).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn fractional_power_term_round_trips() {
        let space = ParamSpace::empty();
        let b = Backend::Rational;
        let shape = Shape::new(space.clone(), b, Exponent::int(4), 4);
        let s = shape.monomial(
            Exponent::new(8, 3),
            0,
            ParamScalar::constant(&space, Scalar::from_rat(6, 7)),
        );
        let text = serialize_series(&s);
        assert!(text.contains("8/3"));
        let back = parse_series(&text, &space, &b).unwrap();
        assert_eq!(s, back);
        assert_eq!(back.lattice(), 3);
    }

    #[test]
    fn float_coefficients_round_trip_exactly() {
        let space = ParamSpace::new(vec!["c".into()]);
        let b = Backend::float_default();
        let shape = Shape::new(space.clone(), b, Exponent::int(4), 4);
        let third = Scalar::parse("1/3", &b).unwrap();
        let c = ParamScalar::parameter(&space, 0, &b);
        let coeff = c.scale(&third).add(&ParamScalar::constant(&space, third.clone())).unwrap();
        let mut s = shape.zero();
        s.insert(Exponent::new(1, 2), 2, coeff);
        let text = serialize_series(&s);
        let back = parse_series(&text, &space, &b).unwrap();
        assert_eq!(s, back);
    }
}
