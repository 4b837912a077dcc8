//! Truncated generalized log-power series: sparse sums of c * x^(k/q) * ln(x)^m.
//!
//! This is the basis every solution lives in. Terms are indexed by an exact
//! rational power and a nonnegative log power; coefficients are parameter
//! polynomials. Powers above `power_cap` truncate silently, log powers above
//! `log_cap` are a hard error so a modeling mistake cannot silently change
//! the answer. Negative powers may appear transiently inside right-hand-side
//! evaluation (e.g. a factored variable exponent); solution-facing
//! constructors and operators reject them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::param::{ParamScalar, ParamSpace};
use crate::scalar::{rat_i64, Backend, Scalar};

/// An exact rational exponent k/q.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Exponent(Ratio<i64>);

impl Exponent {
    pub fn new(num: i64, den: i64) -> Exponent {
        Exponent(Ratio::new(num, den))
    }

    pub fn int(k: i64) -> Exponent {
        Exponent(Ratio::from_integer(k))
    }

    pub fn zero() -> Exponent {
        Exponent::int(0)
    }

    pub fn one() -> Exponent {
        Exponent::int(1)
    }

    pub fn num(&self) -> i64 {
        *self.0.numer()
    }

    pub fn den(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn add(&self, o: &Exponent) -> Exponent {
        Exponent(self.0 + o.0)
    }

    pub fn sub(&self, o: &Exponent) -> Exponent {
        Exponent(self.0 - o.0)
    }

    pub fn neg(&self) -> Exponent {
        Exponent(-self.0)
    }

    pub fn ceil_i64(&self) -> i64 {
        self.0.ceil().to_integer()
    }

    pub fn floor_i64(&self) -> i64 {
        self.0.floor().to_integer()
    }

    pub fn to_rational(&self) -> BigRational {
        rat_i64(self.num(), self.den())
    }

    pub fn to_scalar(&self, backend: &Backend) -> Scalar {
        backend.from_rational(&self.to_rational())
    }

    pub fn to_f64(&self) -> f64 {
        self.num() as f64 / self.den() as f64
    }

    /// Parse "n" or "n/d".
    pub fn parse(text: &str) -> Result<Exponent> {
        let t = text.trim();
        if let Some((n, d)) = t.split_once('/') {
            let num: i64 = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{t}`")))?;
            let den: i64 = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{t}`")))?;
            if den == 0 {
                return Err(Error::Parse(format!("zero denominator in `{t}`")));
            }
            Ok(Exponent::new(num, den))
        } else {
            let num: i64 = t
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{t}`")))?;
            Ok(Exponent::int(num))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Shared construction context: parameter space, backend, caps.
#[derive(Clone, Debug)]
pub struct Shape {
    pub space: Arc<ParamSpace>,
    pub backend: Backend,
    pub power_cap: Exponent,
    pub log_cap: u32,
}

impl Shape {
    pub fn new(
        space: Arc<ParamSpace>,
        backend: Backend,
        power_cap: Exponent,
        log_cap: u32,
    ) -> Shape {
        Shape {
            space,
            backend,
            power_cap,
            log_cap,
        }
    }

    pub fn zero(&self) -> Series {
        Series {
            shape: self.clone(),
            terms: BTreeMap::new(),
            lattice: 1,
        }
    }

    pub fn constant(&self, c: ParamScalar) -> Series {
        let mut s = self.zero();
        s.insert(Exponent::zero(), 0, c);
        s
    }

    pub fn constant_scalar(&self, c: Scalar) -> Series {
        self.constant(ParamScalar::constant(&self.space, c))
    }

    pub fn monomial(&self, power: Exponent, logpow: u32, c: ParamScalar) -> Series {
        let mut s = self.zero();
        s.insert(power, logpow, c);
        s
    }

    pub fn x(&self) -> Series {
        self.monomial(
            Exponent::one(),
            0,
            ParamScalar::constant(&self.space, self.backend.one()),
        )
    }

    pub fn lnx(&self) -> Series {
        self.monomial(
            Exponent::zero(),
            1,
            ParamScalar::constant(&self.space, self.backend.one()),
        )
    }

    pub fn one_series(&self) -> Series {
        self.constant_scalar(self.backend.one())
    }

    pub fn const_param(&self, p: &ParamScalar) -> Series {
        self.constant(p.clone())
    }
}

/// A truncated generalized log-power series.
#[derive(Clone, Debug)]
pub struct Series {
    shape: Shape,
    terms: BTreeMap<(Exponent, u32), ParamScalar>,
    lattice: u64,
}

impl Series {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn space(&self) -> &Arc<ParamSpace> {
        &self.shape.space
    }

    pub fn backend(&self) -> Backend {
        self.shape.backend
    }

    pub fn power_cap(&self) -> Exponent {
        self.shape.power_cap
    }

    pub fn log_cap(&self) -> u32 {
        self.shape.log_cap
    }

    pub fn lattice(&self) -> u64 {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Exponent, u32), &ParamScalar)> {
        self.terms.iter()
    }

    pub fn get(&self, power: Exponent, logpow: u32) -> Option<&ParamScalar> {
        self.terms.get(&(power, logpow))
    }

    pub fn coeff(&self, power: Exponent, logpow: u32) -> ParamScalar {
        self.terms
            .get(&(power, logpow))
            .cloned()
            .unwrap_or_else(|| ParamScalar::zero(&self.shape.space))
    }

    /// Constant term (power 0, no logs).
    pub fn constant_term(&self) -> ParamScalar {
        self.coeff(Exponent::zero(), 0)
    }

    /// Lowest power present, `None` for the empty series.
    pub fn valuation(&self) -> Option<Exponent> {
        self.terms.keys().map(|(p, _)| *p).min()
    }

    pub fn min_term(&self) -> Option<(Exponent, u32)> {
        self.terms.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<Exponent> {
        self.terms.keys().map(|(p, _)| *p).max()
    }

    /// Insert with accumulation; truncates on power, errors never (internal).
    pub fn insert(&mut self, power: Exponent, logpow: u32, c: ParamScalar) {
        if c.is_zero() || power > self.shape.power_cap {
            return;
        }
        self.lattice = self.lattice.lcm(&(power.den() as u64));
        match self.terms.get_mut(&(power, logpow)) {
            Some(cur) => {
                let next = cur.add(&c).expect("same space by construction");
                if next.is_zero() {
                    self.terms.remove(&(power, logpow));
                } else {
                    *cur = next;
                }
            }
            None => {
                self.terms.insert((power, logpow), c);
            }
        }
    }

    fn insert_checked(&mut self, power: Exponent, logpow: u32, c: ParamScalar) -> Result<()> {
        if power > self.shape.power_cap || c.is_zero() {
            return Ok(());
        }
        if logpow > self.shape.log_cap {
            return Err(Error::LogCapOverflow {
                m: logpow,
                cap: self.shape.log_cap,
            });
        }
        self.insert(power, logpow, c);
        Ok(())
    }

    fn merged_shape(&self, other: &Series) -> Result<Shape> {
        if !Arc::ptr_eq(&self.shape.space, &other.shape.space)
            && self.shape.space != other.shape.space
        {
            return Err(Error::ParamMismatch(format!(
                "{:?} vs {:?}",
                self.shape.space.names(),
                other.shape.space.names()
            )));
        }
        Ok(Shape {
            space: self.shape.space.clone(),
            backend: self.shape.backend,
            power_cap: self.shape.power_cap.max(other.shape.power_cap),
            log_cap: self.shape.log_cap.max(other.shape.log_cap),
        })
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        let mut out = self.merged_shape(other)?.zero();
        for (&(p, m), c) in &self.terms {
            out.insert(p, m, c.clone());
        }
        for (&(p, m), c) in &other.terms {
            out.insert(p, m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Series {
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            out.insert(p, m, c.neg());
        }
        out
    }

    pub fn scale(&self, k: &Scalar) -> Series {
        let mut out = self.shape.zero();
        if k.is_zero() {
            return out;
        }
        for (&(p, m), c) in &self.terms {
            out.insert(p, m, c.scale(k));
        }
        out
    }

    pub fn scale_coeff(&self, k: &ParamScalar) -> Result<Series> {
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            out.insert(p, m, c.mul(k)?);
        }
        Ok(out)
    }

    /// Cauchy product. Powers add, log powers add; power overflow truncates,
    /// log overflow is an error.
    pub fn mul(&self, other: &Series) -> Result<Series> {
        let mut out = self.merged_shape(other)?.zero();
        let cap = out.shape.power_cap;
        for (&(pa, ma), ca) in &self.terms {
            for (&(pb, mb), cb) in &other.terms {
                let p = pa.add(&pb);
                if p > cap {
                    continue;
                }
                let m = ma + mb;
                if m > out.shape.log_cap {
                    return Err(Error::LogCapOverflow {
                        m,
                        cap: out.shape.log_cap,
                    });
                }
                out.insert(p, m, ca.mul(cb)?);
            }
        }
        Ok(out)
    }

    /// Integer power by repeated multiplication; p = 0 gives the unit series.
    pub fn ipow(&self, p: u32) -> Result<Series> {
        let mut acc = self.shape.one_series();
        for _ in 0..p {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Every power a nonnegative integer and no log terms.
    pub fn is_polynomial(&self) -> bool {
        self.terms
            .keys()
            .all(|(p, m)| *m == 0 && p.is_integer() && !p.is_negative())
    }

    /// Projection onto the polynomial part (integer powers, no logs).
    pub fn poly_part(&self) -> Series {
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            if m == 0 && p.is_integer() && !p.is_negative() {
                out.insert(p, m, c.clone());
            }
        }
        out
    }

    /// Largest coefficient magnitude outside the polynomial part.
    pub fn non_poly_magnitude(&self) -> Scalar {
        let mut mx = Scalar::zero_rational();
        for (&(p, m), c) in &self.terms {
            if !(m == 0 && p.is_integer() && !p.is_negative()) {
                mx = mx.max_abs(&c.max_abs_coeff());
            }
        }
        mx
    }

    pub fn has_negative_power(&self) -> bool {
        self.terms.keys().any(|(p, _)| p.is_negative())
    }

    pub fn max_abs_coeff(&self) -> Scalar {
        let mut mx = Scalar::zero_rational();
        for c in self.terms.values() {
            mx = mx.max_abs(&c.max_abs_coeff());
        }
        mx
    }

    /// Largest coefficient magnitude over terms with power <= bound.
    pub fn max_abs_coeff_up_to(&self, bound: Exponent) -> Scalar {
        let mut mx = Scalar::zero_rational();
        for (&(p, _), c) in &self.terms {
            if p <= bound {
                mx = mx.max_abs(&c.max_abs_coeff());
            }
        }
        mx
    }

    /// Max |coefficient difference| over the union of term positions with power <= bound.
    pub fn max_delta(&self, other: &Series, bound: Exponent) -> Scalar {
        let mut mx = Scalar::zero_rational();
        for (&(p, m), c) in &self.terms {
            if p > bound {
                continue;
            }
            let d = c.sub(&other.coeff(p, m)).expect("same space");
            mx = mx.max_abs(&d.max_abs_coeff());
        }
        for (&(p, m), c) in &other.terms {
            if p > bound || self.terms.contains_key(&(p, m)) {
                continue;
            }
            mx = mx.max_abs(&c.max_abs_coeff());
        }
        mx
    }

    /// Bind one parameter in every coefficient.
    pub fn substitute_param(&self, idx: usize, value: &Scalar) -> Series {
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            out.insert(p, m, c.substitute(idx, value));
        }
        out
    }

    /// Drop terms whose coefficient magnitude is at most `tol`.
    pub fn chop(&self, tol: &Scalar) -> Series {
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            if c.max_abs_coeff().abs().le(tol) {
                continue;
            }
            out.insert(p, m, c.clone());
        }
        out
    }

    /// a(lambda * x + b). With b = 0 any series is accepted; a shift b != 0
    /// requires a pure polynomial.
    pub fn substitute_affine(&self, lambda: &Scalar, b: &Scalar) -> Result<Series> {
        if !lambda.is_positive() {
            return Err(Error::Domain(format!(
                "affine substitution needs lambda > 0, got {lambda}"
            )));
        }
        if !b.is_zero() {
            if !self.is_polynomial() {
                return Err(Error::NotPolynomial(
                    "affine substitution with a shift".into(),
                ));
            }
            // Horner over the affine polynomial lambda*x + b
            let mut arg = self.shape.zero();
            arg.insert(
                Exponent::one(),
                0,
                ParamScalar::constant(&self.shape.space, lambda.clone()),
            );
            arg.insert(
                Exponent::zero(),
                0,
                ParamScalar::constant(&self.shape.space, b.clone()),
            );
            return self.horner_poly(&arg);
        }
        // pure scaling: x^k ln^m x -> lambda^k x^k (ln lambda + ln x)^m
        let one = self.shape.backend.one();
        let lam_is_one = *lambda == one;
        let mut ln_lambda = Scalar::zero_rational();
        if !lam_is_one {
            let needs_log = self.terms.keys().any(|(_, m)| *m > 0);
            if needs_log {
                let bits = match self.shape.backend.precision() {
                    Some(p) => p.bits(),
                    None => {
                        return Err(Error::RationalBackend(
                            "ln(lambda) in log-term rescaling".into(),
                        ))
                    }
                };
                ln_lambda = lambda.ln(bits)?;
            }
        }
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            let lam_pow = scalar_pow_exponent(lambda, &p, &self.shape.backend)?;
            let base = c.scale(&lam_pow);
            if m == 0 || lam_is_one {
                out.insert(p, m, base);
                continue;
            }
            for j in 0..=m {
                let cmj = binom_scalar(m, j, &self.shape.backend);
                let w = cmj.mul(&ln_lambda.powi(m - j));
                out.insert(p, j, base.scale(&w));
            }
        }
        Ok(out)
    }

    /// Polynomial composition outer(inner) by Horner. The outer operand must
    /// be a pure polynomial; the inner may be any series.
    pub fn horner_poly(&self, inner: &Series) -> Result<Series> {
        if !self.is_polynomial() {
            return Err(Error::NotPolynomial("composition outer operand".into()));
        }
        let deg = self.max_power().map(|p| p.num()).unwrap_or(0);
        let mut acc = self.merged_shape(inner)?.zero();
        for k in (0..=deg).rev() {
            acc = acc.mul(inner)?;
            let c = self.coeff(Exponent::int(k), 0);
            if !c.is_zero() {
                acc = acc.add(&self.shape.const_param(&c))?;
            }
        }
        Ok(acc)
    }

    /// d/dx termwise: x^k ln^m -> k x^(k-1) ln^m + m x^(k-1) ln^(m-1).
    pub fn diff(&self) -> Result<Series> {
        let mut out = self.shape.zero();
        for (&(p, m), c) in &self.terms {
            let p1 = p.sub(&Exponent::one());
            if p1.is_negative() && (!p.is_zero() || m > 0) {
                return Err(Error::NegativePower(format!(
                    "derivative of x^{p} ln^{m} term"
                )));
            }
            if !p.is_zero() {
                out.insert(p1, m, c.scale(&p.to_scalar(&self.shape.backend)));
            }
            if m > 0 {
                out.insert(
                    p1,
                    m - 1,
                    c.scale(&self.shape.backend.from_i64(m as i64)),
                );
            }
        }
        Ok(out)
    }

    /// Termwise antiderivative with lower limit 0.
    ///
    /// int x^k ln^m dx = x^(k+1) sum_{j=0..m} (-1)^j m!/(m-j)! ln^(m-j) / (k+1)^(j+1)
    pub fn antideriv(&self) -> Result<Series> {
        let mut out = self.shape.zero();
        let backend = self.shape.backend;
        for (&(p, m), c) in &self.terms {
            if p.is_negative() {
                return Err(Error::NegativePower(format!("antiderivative of x^{p}")));
            }
            let p1 = p.add(&Exponent::one());
            let kp1 = p1.to_rational();
            let mut factor = BigRational::one() / &kp1;
            for j in 0..=m {
                // factor = (-1)^j m!/(m-j)! / (k+1)^(j+1)
                out.insert(p1, m - j, c.scale(&backend.from_rational(&factor)));
                if j < m {
                    let next = -&factor * rat_i64((m - j) as i64, 1) / &kp1;
                    factor = next;
                }
            }
        }
        Ok(out)
    }

    /// Numeric evaluation at x with all parameters bound.
    pub fn eval(&self, x: &Scalar, bindings: &[Scalar]) -> Result<Scalar> {
        if x.is_negative() {
            return Err(Error::NonPositivePoint(x.to_string()));
        }
        if x.is_zero() {
            for (p, m) in self.terms.keys() {
                if p.is_zero() && *m > 0 {
                    return Err(Error::DivergentAtZero);
                }
                if p.is_negative() {
                    return Err(Error::NonPositivePoint("0 with negative powers".into()));
                }
            }
            return self.constant_term().eval(bindings);
        }
        let bits = self.shape.backend.precision().map(|p| p.bits());
        let mut lnx: Option<Scalar> = None;
        let mut acc = Scalar::zero_rational();
        for (&(p, m), c) in &self.terms {
            let mut t = c.eval(bindings)?;
            t = t.mul(&scalar_pow_exponent(x, &p, &self.shape.backend)?);
            if m > 0 {
                let l = match &lnx {
                    Some(l) => l.clone(),
                    None => {
                        let b = bits.ok_or_else(|| {
                            Error::RationalBackend("ln(x) in evaluation".into())
                        })?;
                        let l = x.ln(b)?;
                        lnx = Some(l.clone());
                        l
                    }
                };
                t = t.mul(&l.powi(m));
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Coefficient-level evaluation at x = 1 (logs vanish, powers are 1):
    /// the sum of all log-free... all coefficients with logpow 0 contribute 1^p,
    /// log terms vanish since ln 1 = 0.
    pub fn eval_symbolic_at_one(&self) -> Result<ParamScalar> {
        let mut acc = ParamScalar::zero(&self.shape.space);
        for (&(_, m), c) in &self.terms {
            if m == 0 {
                acc = acc.add(c)?;
            }
        }
        Ok(acc)
    }

    /// Symbolic evaluation at a positive point: coefficients stay polynomial
    /// in the parameters, powers and logs become scalars.
    pub fn eval_symbolic(&self, x: &Scalar) -> Result<ParamScalar> {
        if !x.is_positive() {
            return Err(Error::NonPositivePoint(x.to_string()));
        }
        let bits = self.shape.backend.precision().map(|p| p.bits());
        let mut lnx: Option<Scalar> = None;
        let mut acc = ParamScalar::zero(&self.shape.space);
        for (&(p, m), c) in &self.terms {
            let mut w = scalar_pow_exponent(x, &p, &self.shape.backend)?;
            if m > 0 {
                let l = match &lnx {
                    Some(l) => l.clone(),
                    None => {
                        let b = bits.ok_or_else(|| {
                            Error::RationalBackend("ln(x) in evaluation".into())
                        })?;
                        let l = x.ln(b)?;
                        lnx = Some(l.clone());
                        l
                    }
                };
                w = w.mul(&l.powi(m));
            }
            acc = acc.add(&c.scale(&w))?;
        }
        Ok(acc)
    }

    /// Maclaurin composition f(arg) for f in {sin, cos, exp, ln1p}.
    /// The argument must have strictly positive valuation.
    pub fn expand_function(func: SeriesFunc, arg: &Series) -> Result<Series> {
        match arg.valuation() {
            None => {}
            Some(v) if v > Exponent::zero() => {}
            _ => return Err(Error::ZeroValuation),
        }
        let nmax = max_composition_degree(arg);
        let backend = arg.shape.backend;
        let coeffs = maclaurin_coeffs(func, nmax);
        let mut acc = arg.shape.zero();
        for k in (1..=nmax).rev() {
            acc = acc.mul(arg)?;
            let c = &coeffs[k as usize];
            if !c.is_zero() {
                acc = acc.add(&arg.shape.constant_scalar(backend.from_rational(c)))?;
            }
        }
        acc = acc.mul(arg)?;
        let c0 = &coeffs[0];
        if !c0.is_zero() {
            acc = acc.add(&arg.shape.constant_scalar(backend.from_rational(c0)))?;
        }
        Ok(acc)
    }

    /// x^base * sum_n (sign_d * d ln x)^n / n!, the engine of every variable
    /// exponent. `d` must have strictly positive valuation.
    pub fn exp_log_series(d: &Series, base: Exponent, negate: bool) -> Result<Series> {
        match d.valuation() {
            None => {}
            Some(v) if v > Exponent::zero() => {}
            _ => return Err(Error::ZeroValuation),
        }
        let dd = if negate { d.neg() } else { d.clone() };
        let mut out = d.shape.zero();
        out.insert_checked(
            base,
            0,
            ParamScalar::constant(&d.shape.space, d.shape.backend.one()),
        )?;
        let mut dpow = d.shape.one_series();
        let mut fact = BigRational::one();
        for n in 1u32.. {
            dpow = dpow.mul(&dd)?;
            if dpow.is_empty() {
                break;
            }
            fact *= rat_i64(n as i64, 1);
            let inv = d.shape.backend.from_rational(&(BigRational::one() / &fact));
            let mut all_dropped = true;
            for (&(p, m), c) in &dpow.terms {
                let tp = p.add(&base);
                if tp > out.shape.power_cap {
                    continue;
                }
                all_dropped = false;
                out.insert_checked(tp, m + n, c.scale(&inv))?;
            }
            if all_dropped {
                break;
            }
        }
        Ok(out)
    }

    /// x^(sign * beta(x)) where beta has a rational constant term.
    pub fn expand_variable_exponent(beta: &Series, positive_sign: bool) -> Result<Series> {
        let c0 = beta
            .constant_term()
            .as_constant()
            .ok_or_else(|| Error::Domain("variable exponent constant term has parameters".into()))?;
        let (n, d) = crate::scalar::rationalize(&c0, 1 << 20).ok_or_else(|| {
            Error::Domain(format!(
                "variable exponent requires an exact rational constant term, got {c0}"
            ))
        })?;
        let beta0 = Exponent::new(n, d);
        let mut rest = beta.clone();
        if !beta0.is_zero() {
            let minus = beta
                .shape
                .constant_scalar(beta0.to_scalar(&beta.shape.backend).neg());
            rest = rest.add(&minus)?;
        }
        let base = if positive_sign { beta0 } else { beta0.neg() };
        Series::exp_log_series(&rest, base, !positive_sign)
    }
}

/// x^p for scalar x > 0 and rational p. Exact on integers, float otherwise.
pub fn scalar_pow_exponent(x: &Scalar, p: &Exponent, backend: &Backend) -> Result<Scalar> {
    if p.is_zero() {
        return Ok(backend.one());
    }
    if p.is_integer() {
        let n = p.num();
        let v = x.powi(n.unsigned_abs() as u32);
        return if n < 0 { backend.one().div(&v) } else { Ok(v) };
    }
    let bits = backend
        .precision()
        .ok_or_else(|| Error::RationalBackend(format!("x^({p}) evaluation")))?
        .bits();
    x.pow(&p.to_scalar(backend), bits)
}

fn binom_scalar(n: u32, k: u32, backend: &Backend) -> Scalar {
    backend.from_rational(&BigRational::from_integer(binom_big(n, k)))
}

fn binom_big(n: u32, k: u32) -> num_bigint::BigInt {
    let mut acc = num_bigint::BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * num_bigint::BigInt::from(n - i) / num_bigint::BigInt::from(i + 1);
    }
    acc
}

fn max_composition_degree(arg: &Series) -> u32 {
    match arg.valuation() {
        None => 0,
        Some(v) => {
            let cap = arg.power_cap();
            // largest n with n * v <= cap
            let n = (cap.num() as i128 * v.den() as i128) / (cap.den() as i128 * v.num() as i128);
            n.max(0) as u32
        }
    }
}

/// Functions with built-in Maclaurin expansions for series composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesFunc {
    Sin,
    Cos,
    Exp,
    Ln1p,
}

fn maclaurin_coeffs(func: SeriesFunc, nmax: u32) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(nmax as usize + 1);
    let mut fact = BigRational::one();
    for n in 0..=nmax {
        if n > 0 {
            fact *= rat_i64(n as i64, 1);
        }
        let c = match func {
            SeriesFunc::Sin => match n % 4 {
                1 => BigRational::one() / &fact,
                3 => -BigRational::one() / &fact,
                _ => BigRational::zero(),
            },
            SeriesFunc::Cos => match n % 4 {
                0 => BigRational::one() / &fact,
                2 => -BigRational::one() / &fact,
                _ => BigRational::zero(),
            },
            SeriesFunc::Exp => BigRational::one() / &fact,
            SeriesFunc::Ln1p => {
                if n == 0 {
                    BigRational::zero()
                } else if n % 2 == 1 {
                    rat_i64(1, n as i64)
                } else {
                    rat_i64(-1, n as i64)
                }
            }
        };
        out.push(c);
    }
    out
}

impl PartialEq for Series {
    /// Term-set equality: caps and lattice are operational metadata.
    fn eq(&self, other: &Self) -> bool {
        if self.terms.len() != other.terms.len() {
            return false;
        }
        self.terms
            .iter()
            .zip(other.terms.iter())
            .all(|((ka, ca), (kb, cb))| ka == kb && ca.eq_terms(cb))
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(p, m), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if !p.is_zero() {
                write!(f, "*x^{p}")?;
            }
            if m == 1 {
                write!(f, "*ln(x)")?;
            } else if m > 1 {
                write!(f, "*ln(x)^{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape_rat(cap: i64) -> Shape {
        Shape::new(ParamSpace::empty(), Backend::Rational, Exponent::int(cap), cap as u32)
    }

    fn shape_c(cap: i64) -> Shape {
        Shape::new(
            ParamSpace::new(vec!["c".into()]),
            Backend::Rational,
            Exponent::int(cap),
            cap as u32,
        )
    }

    fn poly(shape: &Shape, coeffs: &[(i64, i64, i64)]) -> Series {
        // (power, num, den)
        let mut s = shape.zero();
        for &(p, n, d) in coeffs {
            s.insert(
                Exponent::int(p),
                0,
                ParamScalar::constant(&shape.space, Scalar::from_rat(n, d)),
            );
        }
        s
    }

    #[test]
    fn add_cancels_inverse() {
        let sh = shape_rat(8);
        let x = sh.x();
        assert!(x.add(&x.neg()).unwrap().is_empty());
    }

    #[test]
    fn riccati_first_iterate_sum() {
        // y0 = c plus (1+c^2) x equals c + (1+c^2) x
        let sh = shape_c(3);
        let c = ParamScalar::parameter(&sh.space, 0, &sh.backend);
        let y0 = sh.constant(c.clone());
        let one_c2 = c
            .mul(&c)
            .unwrap()
            .add(&ParamScalar::constant(&sh.space, Scalar::from_rat(1, 1)))
            .unwrap();
        let inc = sh.monomial(Exponent::one(), 0, one_c2.clone());
        let y1 = y0.add(&inc).unwrap();
        assert_eq!(y1.coeff(Exponent::zero(), 0).to_string(), "c");
        assert_eq!(y1.coeff(Exponent::one(), 0).to_string(), "1 + c^2");
    }

    #[test]
    fn mul_adds_powers_and_logs() {
        let sh = shape_rat(8);
        let xl = sh.monomial(
            Exponent::one(),
            1,
            ParamScalar::constant(&sh.space, Scalar::from_rat(1, 1)),
        );
        let sq = xl.mul(&xl).unwrap();
        assert_eq!(sq.len(), 1);
        assert!(sq.get(Exponent::int(2), 2).is_some());
        let a = poly(&sh, &[(0, 1, 1), (1, 1, 1)]);
        let b = poly(&sh, &[(0, 1, 1), (1, -1, 1)]);
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.coeff(Exponent::zero(), 0).to_string(), "1");
        assert!(prod.get(Exponent::one(), 0).is_none());
        assert_eq!(prod.coeff(Exponent::int(2), 0).to_string(), "-1");
    }

    #[test]
    fn riccati_x_y1_squared_truncation() {
        // x * y1^2 truncated to power 2 has x^2 coefficient 2c(1+c^2)
        let sh = shape_c(2);
        let c = ParamScalar::parameter(&sh.space, 0, &sh.backend);
        let one_c2 = c
            .mul(&c)
            .unwrap()
            .add(&ParamScalar::constant(&sh.space, Scalar::from_rat(1, 1)))
            .unwrap();
        let mut y1 = sh.constant(c.clone());
        y1.insert(Exponent::one(), 0, one_c2);
        let x = sh.x();
        let prod = x.mul(&y1.mul(&y1).unwrap()).unwrap();
        assert_eq!(prod.coeff(Exponent::int(2), 0).to_string(), "2*c + 2*c^3");
    }

    #[test]
    fn ipow_basics() {
        let sh = shape_rat(8);
        let a = poly(&sh, &[(0, 2, 1), (1, 1, 1)]);
        assert_eq!(a.ipow(0).unwrap(), sh.one_series());
        assert_eq!(a.ipow(1).unwrap(), a);
        let x3 = sh.x().ipow(3).unwrap();
        assert!(x3.get(Exponent::int(3), 0).is_some());
        assert_eq!(x3.len(), 1);
    }

    #[test]
    fn substitute_affine_scaling() {
        let sh = shape_rat(8);
        let x2 = sh.x().ipow(2).unwrap();
        let scaled = x2
            .substitute_affine(&Scalar::from_rat(1, 10), &Scalar::zero_rational())
            .unwrap();
        assert_eq!(
            scaled.coeff(Exponent::int(2), 0).as_constant().unwrap(),
            Scalar::from_rat(1, 100)
        );
    }

    #[test]
    fn substitute_affine_with_shift_evaluates_polynomials() {
        // a = x^4 - 5x + 2 at (x-1)/3: constant term 1/81 + 5/3 + 2 = 298/81
        let sh = shape_rat(8);
        let a = poly(&sh, &[(4, 1, 1), (1, -5, 1), (0, 2, 1)]);
        let out = a
            .substitute_affine(&Scalar::from_rat(1, 3), &Scalar::from_rat(-1, 3))
            .unwrap();
        assert_eq!(
            out.coeff(Exponent::zero(), 0).as_constant().unwrap(),
            Scalar::from_rat(298, 81)
        );
        // identity checks
        let id = a
            .substitute_affine(&Scalar::from_rat(1, 1), &Scalar::zero_rational())
            .unwrap();
        assert_eq!(id, a);
        let there = a
            .substitute_affine(&Scalar::from_rat(1, 7), &Scalar::zero_rational())
            .unwrap();
        let back = there
            .substitute_affine(&Scalar::from_rat(7, 1), &Scalar::zero_rational())
            .unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn affine_log_rescaling_needs_float() {
        let sh = shape_rat(8);
        let xl = sh.x().mul(&sh.lnx()).unwrap();
        assert!(xl
            .substitute_affine(&Scalar::from_rat(1, 2), &Scalar::zero_rational())
            .is_err());
        let shf = Shape::new(
            ParamSpace::empty(),
            Backend::float_default(),
            Exponent::int(8),
            8,
        );
        let e = Scalar::big_from_i64(1, 256).exp(256).unwrap();
        let xlf = shf.x().mul(&shf.lnx()).unwrap();
        // a = x ln x at lambda = e: e*x*(1 + ln x)
        let out = xlf.substitute_affine(&e, &Scalar::zero_rational()).unwrap();
        let c10 = out.coeff(Exponent::one(), 0).as_constant().unwrap();
        let c11 = out.coeff(Exponent::one(), 1).as_constant().unwrap();
        assert!(c10.sub(&e).abs().to_f64() < 1e-40);
        assert!(c11.sub(&e).abs().to_f64() < 1e-40);
    }

    #[test]
    fn compose_polynomials() {
        let sh = shape_rat(8);
        let outer = sh.x().ipow(2).unwrap();
        let inner = poly(&sh, &[(1, 1, 1), (0, 1, 1)]);
        let out = outer.horner_poly(&inner).unwrap();
        assert_eq!(out, poly(&sh, &[(2, 1, 1), (1, 2, 1), (0, 1, 1)]));
        // y(y(0)) for y = x^4 - 5x + 2: constant is y(2) = 8
        let y = poly(&sh, &[(4, 1, 1), (1, -5, 1), (0, 2, 1)]);
        let yy = y.horner_poly(&y).unwrap();
        assert_eq!(
            yy.coeff(Exponent::zero(), 0).as_constant().unwrap(),
            Scalar::from_rat(8, 1)
        );
        // identity
        assert_eq!(y.horner_poly(&sh.x()).unwrap(), y);
    }

    #[test]
    fn diff_and_antideriv() {
        let sh = shape_rat(8);
        let x2 = sh.x().ipow(2).unwrap();
        assert_eq!(x2.diff().unwrap(), poly(&sh, &[(1, 2, 1)]));
        let xl = sh.x().mul(&sh.lnx()).unwrap();
        let d = xl.diff().unwrap();
        assert_eq!(d.coeff(Exponent::zero(), 1).to_string(), "1");
        assert_eq!(d.coeff(Exponent::zero(), 0).to_string(), "1");
        // antideriv(x ln x) = x^2 ln x / 2 - x^2/4, diff recovers
        let ad = xl.antideriv().unwrap();
        assert_eq!(ad.coeff(Exponent::int(2), 1).as_constant().unwrap(), Scalar::from_rat(1, 2));
        assert_eq!(ad.coeff(Exponent::int(2), 0).as_constant().unwrap(), Scalar::from_rat(-1, 4));
        assert_eq!(ad.diff().unwrap(), xl);
        // d/dx of bare log is a negative power
        assert!(sh.lnx().diff().is_err());
    }

    #[test]
    fn eval_points() {
        let sh = shape_rat(8);
        let x3 = sh.x().ipow(3).unwrap();
        let v = x3.eval(&Scalar::from_rat(1, 2), &[]).unwrap();
        assert_eq!(v, Scalar::from_rat(1, 8));
        // at zero: constant term
        let s = poly(&sh, &[(0, 7, 1), (2, 1, 1)]);
        assert_eq!(s.eval(&Scalar::zero_rational(), &[]).unwrap(), Scalar::from_rat(7, 1));
        assert!(sh.lnx().eval(&Scalar::zero_rational(), &[]).is_err());
        assert!(x3.eval(&Scalar::from_rat(-1, 2), &[]).is_err());
    }

    #[test]
    fn expand_sin_matches_maclaurin() {
        let sh = shape_rat(9);
        let s = Series::expand_function(SeriesFunc::Sin, &sh.x()).unwrap();
        assert_eq!(s.coeff(Exponent::one(), 0).to_string(), "1");
        assert_eq!(s.coeff(Exponent::int(3), 0).as_constant().unwrap(), Scalar::from_rat(-1, 6));
        assert_eq!(s.coeff(Exponent::int(5), 0).as_constant().unwrap(), Scalar::from_rat(1, 120));
        assert!(Series::expand_function(SeriesFunc::Exp, &sh.one_series()).is_err());
    }

    #[test]
    fn exp_of_x_lnx_numeric_check() {
        // exp(x ln x) = x^x near 0; compare at x = 1/2 on the float backend
        let shf = Shape::new(
            ParamSpace::empty(),
            Backend::float_default(),
            Exponent::int(24),
            24,
        );
        let xl = shf.x().mul(&shf.lnx()).unwrap();
        let e = Series::expand_function(SeriesFunc::Exp, &xl).unwrap();
        let half = Scalar::from_rat(1, 2);
        let got = e.eval(&half, &[]).unwrap();
        let bits = 256;
        let want = half.pow(&half, bits).unwrap();
        assert!(got.sub(&want).abs().to_f64() < 1e-12);
    }

    #[test]
    fn variable_exponent_constant_is_monomial() {
        let sh = shape_rat(8);
        let beta = sh.constant_scalar(Scalar::from_rat(1, 2));
        let s = Series::expand_variable_exponent(&beta, true).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.get(Exponent::new(1, 2), 0).is_some());
        assert_eq!(s.lattice(), 2);
    }

    #[test]
    fn variable_exponent_x_sinx_numeric() {
        let shf = Shape::new(
            ParamSpace::empty(),
            Backend::float_default(),
            Exponent::int(20),
            20,
        );
        let sinx = Series::expand_function(SeriesFunc::Sin, &shf.x()).unwrap();
        let s = Series::expand_variable_exponent(&sinx, true).unwrap();
        // leading behavior 1 + x ln x + ...
        let one = Scalar::from_rat(1, 1);
        assert_eq!(s.coeff(Exponent::zero(), 0).as_constant().unwrap(), one);
        assert_eq!(s.coeff(Exponent::one(), 1).as_constant().unwrap(), one);
        let half = Scalar::from_rat(1, 2);
        let got = s.eval(&half, &[]).unwrap();
        let bits = 256;
        let want = half.pow(&half.sin(bits).unwrap(), bits).unwrap();
        assert!(got.sub(&want).abs().to_f64() < 1e-12, "{}", got.sub(&want).abs().to_f64());
    }

    #[test]
    fn eval_homomorphism_on_rationals() {
        let sh = shape_rat(16);
        let a = poly(&sh, &[(0, 1, 3), (2, 4, 1), (5, -2, 7)]);
        let b = poly(&sh, &[(1, 2, 1), (3, 1, 9)]);
        for x in [Scalar::from_rat(1, 4), Scalar::from_rat(1, 2), Scalar::from_rat(3, 4)] {
            let lhs = a.mul(&b).unwrap().eval(&x, &[]).unwrap();
            let rhs = a.eval(&x, &[]).unwrap().mul(&b.eval(&x, &[]).unwrap());
            assert_eq!(lhs, rhs);
        }
    }
}
