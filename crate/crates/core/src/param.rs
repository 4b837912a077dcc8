//! Polynomial coefficients over a declared, fixed set of symbolic parameters.
//!
//! Solutions carry symbolic constants (free initial conditions, ansatz
//! parameters) as canonical multivariate polynomials with [`Scalar`]
//! coefficients. The parameter set is fixed when the problem is built.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Backend, Scalar};

pub const DEFAULT_DEGREE_CAP: u32 = 64;

/// The declared parameter names of a problem, shared by every coefficient.
#[derive(Debug, PartialEq, Eq)]
pub struct ParamSpace {
    names: Vec<String>,
    degree_cap: u32,
}

impl ParamSpace {
    pub fn new(names: Vec<String>) -> Arc<ParamSpace> {
        Arc::new(ParamSpace {
            names,
            degree_cap: DEFAULT_DEGREE_CAP,
        })
    }

    pub fn empty() -> Arc<ParamSpace> {
        ParamSpace::new(Vec::new())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }
}

type Mono = Vec<u16>;

/// A canonical multivariate polynomial in the problem's parameters.
#[derive(Clone, Debug)]
pub struct ParamScalar {
    space: Arc<ParamSpace>,
    terms: BTreeMap<Mono, Scalar>,
}

fn same_space(a: &Arc<ParamSpace>, b: &Arc<ParamSpace>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ParamMismatch(format!(
            "{:?} vs {:?}",
            a.names(),
            b.names()
        )))
    }
}

impl ParamScalar {
    pub fn zero(space: &Arc<ParamSpace>) -> ParamScalar {
        ParamScalar {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<ParamSpace>, v: Scalar) -> ParamScalar {
        let mut terms = BTreeMap::new();
        if !v.is_zero() {
            terms.insert(vec![0; space.len()], v);
        }
        ParamScalar {
            space: space.clone(),
            terms,
        }
    }

    /// The monomial consisting of one parameter to the first power.
    pub fn parameter(space: &Arc<ParamSpace>, idx: usize, backend: &Backend) -> ParamScalar {
        let mut mono = vec![0u16; space.len()];
        mono[idx] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(mono, backend.one());
        ParamScalar {
            space: space.clone(),
            terms,
        }
    }

    pub fn space(&self) -> &Arc<ParamSpace> {
        &self.space
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant value when the polynomial has no parameter dependence.
    pub fn as_constant(&self) -> Option<Scalar> {
        if self.terms.is_empty() {
            return Some(Scalar::zero_rational());
        }
        if self.terms.len() == 1 {
            let (mono, v) = self.terms.iter().next().unwrap();
            if mono.iter().all(|&e| e == 0) {
                return Some(v.clone());
            }
        }
        None
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    fn insert_acc(&mut self, mono: Mono, v: Scalar) {
        if v.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(cur) => {
                let next = cur.add(&v);
                if next.is_zero() {
                    self.terms.remove(&mono);
                } else {
                    *cur = next;
                }
            }
            None => {
                self.terms.insert(mono, v);
            }
        }
    }

    pub fn add(&self, other: &ParamScalar) -> Result<ParamScalar> {
        same_space(&self.space, &other.space)?;
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.insert_acc(m.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &ParamScalar) -> Result<ParamScalar> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ParamScalar {
        ParamScalar {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &Scalar) -> ParamScalar {
        if k.is_zero() {
            return ParamScalar::zero(&self.space);
        }
        ParamScalar {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v.mul(k)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    pub fn mul(&self, other: &ParamScalar) -> Result<ParamScalar> {
        same_space(&self.space, &other.space)?;
        let cap = self.space.degree_cap();
        let mut out = ParamScalar::zero(&self.space);
        for (ma, va) in &self.terms {
            for (mb, vb) in &other.terms {
                let mut mono = ma.clone();
                for (i, e) in mono.iter_mut().enumerate() {
                    *e += mb[i];
                    if u32::from(*e) > cap {
                        return Err(Error::DegreeCap {
                            param: self.space.names()[i].clone(),
                            cap,
                        });
                    }
                }
                out.insert_acc(mono, va.mul(vb));
            }
        }
        Ok(out)
    }

    /// Evaluate with every parameter bound.
    pub fn eval(&self, bindings: &[Scalar]) -> Result<Scalar> {
        if bindings.len() != self.space.len() {
            let missing = self
                .space
                .names()
                .get(bindings.len())
                .cloned()
                .unwrap_or_default();
            return Err(Error::UnboundParam(missing));
        }
        let mut acc = Scalar::zero_rational();
        for (mono, v) in &self.terms {
            let mut t = v.clone();
            for (i, &e) in mono.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&bindings[i].powi(e as u32));
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Bind a single parameter, leaving the rest symbolic.
    pub fn substitute(&self, idx: usize, value: &Scalar) -> ParamScalar {
        let mut out = ParamScalar::zero(&self.space);
        for (mono, v) in &self.terms {
            let e = mono[idx];
            let mut m = mono.clone();
            m[idx] = 0;
            let scaled = if e > 0 {
                v.mul(&value.powi(e as u32))
            } else {
                v.clone()
            };
            out.insert_acc(m, scaled);
        }
        out
    }

    /// Coefficients by power of one parameter; error if any other parameter appears.
    pub fn as_univariate(&self, idx: usize) -> Result<Vec<Scalar>> {
        let mut coeffs: Vec<Scalar> = Vec::new();
        for (mono, v) in &self.terms {
            for (i, &e) in mono.iter().enumerate() {
                if i != idx && e != 0 {
                    return Err(Error::Resolution(format!(
                        "coefficient depends on `{}` as well",
                        self.space.names()[i]
                    )));
                }
            }
            let d = mono[idx] as usize;
            if coeffs.len() <= d {
                coeffs.resize(d + 1, Scalar::zero_rational());
            }
            coeffs[d] = coeffs[d].add(v);
        }
        if coeffs.is_empty() {
            coeffs.push(Scalar::zero_rational());
        }
        Ok(coeffs)
    }

    pub fn max_abs_coeff(&self) -> Scalar {
        let mut m = Scalar::zero_rational();
        for v in self.terms.values() {
            m = m.max_abs(v);
        }
        m
    }

    pub fn degree_in(&self, idx: usize) -> u32 {
        self.terms
            .keys()
            .map(|m| u32::from(m[idx]))
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Scalar)> {
        self.terms.iter()
    }

    /// Depends on the parameter at `idx`?
    pub fn uses_param(&self, idx: usize) -> bool {
        self.terms.keys().any(|m| m[idx] != 0)
    }

    /// Exact equality of term maps (value comparison on coefficients).
    pub fn eq_terms(&self, other: &ParamScalar) -> bool {
        if self.terms.len() != other.terms.len() {
            return false;
        }
        self.terms
            .iter()
            .zip(other.terms.iter())
            .all(|((ma, va), (mb, vb))| ma == mb && va == vb)
    }

    /// Parse the canonical text form, e.g. `1/3 + 4/3*c^2 + c^4`.
    pub fn parse(text: &str, space: &Arc<ParamSpace>, backend: &Backend) -> Result<ParamScalar> {
        let mut out = ParamScalar::zero(space);
        let mut rest = text.trim();
        if rest.is_empty() {
            return Ok(out);
        }
        let mut sign = 1i64;
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r.trim_start();
        }
        loop {
            let (term_text, next) = split_term(rest);
            let (mono, coeff) = parse_term(term_text, space, backend)?;
            let signed = if sign < 0 { coeff.neg() } else { coeff };
            out.insert_acc(mono, signed);
            match next {
                None => break,
                Some((s, r)) => {
                    sign = s;
                    rest = r;
                }
            }
        }
        Ok(out)
    }
}

/// Split off one term at the next top-level `+`/`-` (not inside an exponent like `e-5`).
fn split_term(text: &str) -> (&str, Option<(i64, &str)>) {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && i > 0 {
            let prev = bytes[i - 1] as char;
            if prev != 'e' && prev != 'E' {
                let sign = if c == '-' { -1 } else { 1 };
                return (text[..i].trim(), Some((sign, text[i + 1..].trim_start())));
            }
        }
        i += 1;
    }
    (text.trim(), None)
}

fn parse_term(
    text: &str,
    space: &Arc<ParamSpace>,
    backend: &Backend,
) -> Result<(Mono, Scalar)> {
    let mut mono = vec![0u16; space.len()];
    let mut coeff = backend.one();
    for factor in text.split('*') {
        let f = factor.trim();
        if f.is_empty() {
            return Err(Error::Parse(format!("empty factor in term `{text}`")));
        }
        let (name, pow) = match f.split_once('^') {
            Some((n, p)) => {
                let e: u16 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in `{f}`")))?;
                (n.trim(), e)
            }
            None => (f, 1),
        };
        if let Some(idx) = space.index_of(name) {
            mono[idx] += pow;
        } else {
            coeff = coeff.mul(&Scalar::parse(f, backend)?);
        }
    }
    Ok((mono, coeff))
}

impl fmt::Display for ParamScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mono, v) in &self.terms {
            let neg = v.is_negative();
            let mag = v.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let names: Vec<String> = mono
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        self.space.names()[i].clone()
                    } else {
                        format!("{}^{}", self.space.names()[i], e)
                    }
                })
                .collect();
            let one = matches!(mag.cmp_val(&Scalar::from_rat(1, 1)), Some(std::cmp::Ordering::Equal));
            if names.is_empty() {
                write!(f, "{mag}")?;
            } else if one {
                write!(f, "{}", names.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, names.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c_space() -> Arc<ParamSpace> {
        ParamSpace::new(vec!["c".into()])
    }

    #[test]
    fn riccati_cubic_coefficient_prints_canonically() {
        let sp = c_space();
        let b = Backend::Rational;
        let c = ParamScalar::parameter(&sp, 0, &b);
        let c2 = c.mul(&c).unwrap();
        let c4 = c2.mul(&c2).unwrap();
        let v = ParamScalar::constant(&sp, Scalar::from_rat(1, 3))
            .add(&c2.scale(&Scalar::from_rat(4, 3)))
            .unwrap()
            .add(&c4)
            .unwrap();
        assert_eq!(v.to_string(), "1/3 + 4/3*c^2 + c^4");
        let back = ParamScalar::parse("1/3 + 4/3*c^2 + c^4", &sp, &b).unwrap();
        assert!(v.eq_terms(&back));
    }

    #[test]
    fn additive_inverse_cancels() {
        let sp = c_space();
        let b = Backend::Rational;
        let c = ParamScalar::parameter(&sp, 0, &b);
        assert!(c.sub(&c).unwrap().is_zero());
    }

    #[test]
    fn eval_binds_parameters() {
        let sp = c_space();
        let b = Backend::Rational;
        // 1 + c^2
        let c = ParamScalar::parameter(&sp, 0, &b);
        let p = c
            .mul(&c)
            .unwrap()
            .add(&ParamScalar::constant(&sp, b.one()))
            .unwrap();
        let v = p.eval(&[Scalar::from_rat(3, 1)]).unwrap();
        assert_eq!(v, Scalar::from_rat(10, 1));
        assert!(p.eval(&[]).is_err());
    }

    #[test]
    fn univariate_extraction_and_substitution() {
        let sp = c_space();
        let b = Backend::Rational;
        let c = ParamScalar::parameter(&sp, 0, &b);
        let p = c
            .scale(&Scalar::from_rat(1, 2))
            .add(&ParamScalar::constant(&sp, Scalar::from_rat(-1, 16)))
            .unwrap();
        let coeffs = p.as_univariate(0).unwrap();
        assert_eq!(coeffs[0], Scalar::from_rat(-1, 16));
        assert_eq!(coeffs[1], Scalar::from_rat(1, 2));
        let bound = p.substitute(0, &Scalar::from_rat(1, 8));
        assert!(bound.is_zero());
    }

    #[test]
    fn degree_cap_is_enforced() {
        let sp = c_space();
        let b = Backend::Rational;
        let c = ParamScalar::parameter(&sp, 0, &b);
        let mut p = c.clone();
        for _ in 0..5 {
            p = p.mul(&p).unwrap_or(p);
        }
        // degree 32; squaring once more would hit 64, once more overflows
        let q = p.mul(&p).unwrap();
        assert!(q.mul(&q).is_err());
    }

    #[test]
    fn negative_leading_term_round_trips() {
        let sp = c_space();
        let b = Backend::Rational;
        let text = "-5 + c";
        let p = ParamScalar::parse(text, &sp, &b).unwrap();
        assert_eq!(p.to_string(), text);
    }
}
