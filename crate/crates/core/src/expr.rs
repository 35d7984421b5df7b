//! Scalar chart functions: expression trees with exact/float evaluation and
//! forward-mode first and second derivatives.
//!
//! The grammar covers rational functions plus `sin`, `cos`, `exp` and `log`:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-'? base ('^' integer)?
//! base   := number | 'x'digit+ | '(' expr ')'
//!         | ('sin'|'cos'|'exp'|'log') '(' expr ')'
//! number := integer ('/' positive-integer)? | decimal
//! ```
//!
//! Derivatives are propagated through the tree as second-order jets rather
//! than by symbolic differentiation, so evaluation cost stays proportional
//! to the tree size. A separate symbolic [`Expression::partial`] exists for
//! building *derived coefficient fields* (e.g. curvature coefficients that
//! involve derivatives of Christoffel symbols) as expression trees again.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::error::{EvalError, ParseError};
use crate::scalar::Field;

#[derive(Debug, PartialEq)]
enum Node {
    Const(BigRational),
    ConstF(f64),
    /// 0-based coordinate index.
    Coord(usize),
    Add(Expression, Expression),
    Sub(Expression, Expression),
    Mul(Expression, Expression),
    Div(Expression, Expression),
    Pow(Expression, i32),
    Neg(Expression),
    Sin(Expression),
    Cos(Expression),
    Exp(Expression),
    Log(Expression),
}

/// An immutable scalar chart function. Cloning is cheap (reference counted).
#[derive(Debug, Clone, PartialEq)]
pub struct Expression(Rc<Node>);

/// Value, gradient and (symmetric) Hessian of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<F> {
    pub value: F,
    pub grad: Vec<F>,
    pub hess: Vec<Vec<F>>,
}

impl Expression {
    pub fn constant(r: BigRational) -> Self {
        Expression(Rc::new(Node::Const(r)))
    }

    pub fn float(v: f64) -> Self {
        Expression(Rc::new(Node::ConstF(v)))
    }

    pub fn int(v: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::constant(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    /// Coordinate function `x^(axis+1)` (0-based index).
    pub fn coord(axis: usize) -> Self {
        Expression(Rc::new(Node::Coord(axis)))
    }

    fn is_zero_const(&self) -> bool {
        match &*self.0 {
            Node::Const(r) => Zero::is_zero(r),
            Node::ConstF(v) => *v == 0.0,
            _ => false,
        }
    }

    fn is_one_const(&self) -> bool {
        match &*self.0 {
            Node::Const(r) => r.is_one(),
            Node::ConstF(v) => *v == 1.0,
            _ => false,
        }
    }

    pub fn add(a: Expression, b: Expression) -> Self {
        if a.is_zero_const() {
            return b;
        }
        if b.is_zero_const() {
            return a;
        }
        match (&*a.0, &*b.0) {
            (Node::Const(x), Node::Const(y)) => Self::constant(x + y),
            (Node::ConstF(x), Node::ConstF(y)) => Self::float(x + y),
            _ => Expression(Rc::new(Node::Add(a, b))),
        }
    }

    pub fn sub(a: Expression, b: Expression) -> Self {
        if b.is_zero_const() {
            return a;
        }
        if a.is_zero_const() {
            return Self::neg(b);
        }
        match (&*a.0, &*b.0) {
            (Node::Const(x), Node::Const(y)) => Self::constant(x - y),
            (Node::ConstF(x), Node::ConstF(y)) => Self::float(x - y),
            _ => Expression(Rc::new(Node::Sub(a, b))),
        }
    }

    pub fn mul(a: Expression, b: Expression) -> Self {
        if a.is_zero_const() || b.is_zero_const() {
            return Self::zero();
        }
        if a.is_one_const() {
            return b;
        }
        if b.is_one_const() {
            return a;
        }
        match (&*a.0, &*b.0) {
            (Node::Const(x), Node::Const(y)) => Self::constant(x * y),
            (Node::ConstF(x), Node::ConstF(y)) => Self::float(x * y),
            _ => Expression(Rc::new(Node::Mul(a, b))),
        }
    }

    /// Division is never simplified away (a division node keeps its domain
    /// restriction), except for exact constant operands.
    pub fn div(a: Expression, b: Expression) -> Self {
        if b.is_one_const() {
            return a;
        }
        match (&*a.0, &*b.0) {
            (Node::Const(x), Node::Const(y)) if !Zero::is_zero(y) => Self::constant(x / y),
            _ => Expression(Rc::new(Node::Div(a, b))),
        }
    }

    pub fn neg(a: Expression) -> Self {
        match &*a.0 {
            Node::Const(r) => Self::constant(-r),
            Node::ConstF(v) => Self::float(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Expression(Rc::new(Node::Neg(a))),
        }
    }

    pub fn powi(a: Expression, exponent: i32) -> Self {
        match exponent {
            0 => Self::one(),
            1 => a,
            _ => match &*a.0 {
                Node::Const(r) if exponent > 0 => Self::constant(pow_rational(r, exponent)),
                Node::ConstF(v) => Self::float(v.powi(exponent)),
                _ => Expression(Rc::new(Node::Pow(a, exponent))),
            },
        }
    }

    pub fn sin(a: Expression) -> Self {
        Expression(Rc::new(Node::Sin(a)))
    }

    pub fn cos(a: Expression) -> Self {
        Expression(Rc::new(Node::Cos(a)))
    }

    pub fn exp(a: Expression) -> Self {
        Expression(Rc::new(Node::Exp(a)))
    }

    pub fn log(a: Expression) -> Self {
        Expression(Rc::new(Node::Log(a)))
    }

    /// Scales by an exact rational constant.
    pub fn scale(&self, num: i64, den: i64) -> Self {
        Self::mul(Self::ratio(num, den), self.clone())
    }

    /// True if evaluation needs float arithmetic: the tree holds a float
    /// constant or a transcendental node.
    pub fn requires_float(&self) -> bool {
        match &*self.0 {
            Node::Const(_) | Node::Coord(_) => false,
            Node::ConstF(_) | Node::Sin(_) | Node::Cos(_) | Node::Exp(_) | Node::Log(_) => true,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.requires_float() || b.requires_float()
            }
            Node::Pow(a, _) | Node::Neg(a) => a.requires_float(),
        }
    }

    /// Largest coordinate index used, as a dimension (0 for constants).
    pub fn min_dimension(&self) -> usize {
        match &*self.0 {
            Node::Const(_) | Node::ConstF(_) => 0,
            Node::Coord(i) => i + 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.min_dimension().max(b.min_dimension())
            }
            Node::Pow(a, _) | Node::Neg(a) => a.min_dimension(),
            Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Log(a) => a.min_dimension(),
        }
    }

    /// Symbolic partial derivative along the given (0-based) axis.
    ///
    /// Used to materialize derived coefficient fields; pointwise derivative
    /// *evaluation* goes through [`Expression::eval_jet2`] instead.
    pub fn partial(&self, axis: usize) -> Expression {
        match &*self.0 {
            Node::Const(_) | Node::ConstF(_) => Self::zero(),
            Node::Coord(i) => {
                if *i == axis {
                    Self::one()
                } else {
                    Self::zero()
                }
            }
            Node::Add(a, b) => Self::add(a.partial(axis), b.partial(axis)),
            Node::Sub(a, b) => Self::sub(a.partial(axis), b.partial(axis)),
            Node::Mul(a, b) => Self::add(
                Self::mul(a.partial(axis), b.clone()),
                Self::mul(a.clone(), b.partial(axis)),
            ),
            Node::Div(a, b) => Self::div(
                Self::sub(
                    Self::mul(a.partial(axis), b.clone()),
                    Self::mul(a.clone(), b.partial(axis)),
                ),
                Self::powi(b.clone(), 2),
            ),
            Node::Pow(a, k) => Self::mul(
                Self::mul(Self::int(*k as i64), Self::powi(a.clone(), k - 1)),
                a.partial(axis),
            ),
            Node::Neg(a) => Self::neg(a.partial(axis)),
            Node::Sin(a) => Self::mul(Self::cos(a.clone()), a.partial(axis)),
            Node::Cos(a) => Self::neg(Self::mul(Self::sin(a.clone()), a.partial(axis))),
            Node::Exp(a) => Self::mul(Self::exp(a.clone()), a.partial(axis)),
            Node::Log(a) => Self::div(a.partial(axis), a.clone()),
        }
    }

    /// Evaluates the value together with first and second derivatives at `p`.
    pub fn eval_jet2<F: Field>(&self, p: &[F]) -> Result<Jet2<F>, EvalError> {
        let mut cache: HashMap<*const Node, Jet2<F>> = HashMap::new();
        self.eval_jet2_cached(p, &mut cache)
    }

    fn eval_jet2_cached<F: Field>(
        &self,
        p: &[F],
        cache: &mut HashMap<*const Node, Jet2<F>>,
    ) -> Result<Jet2<F>, EvalError> {
        let key = Rc::as_ptr(&self.0);
        if let Some(hit) = cache.get(&key) {
            return Ok(hit.clone());
        }
        let n = p.len();
        let jet = match &*self.0 {
            Node::Const(r) => Jet2::constant(F::from_rational(r), n),
            Node::ConstF(v) => Jet2::constant(F::from_rational_or_float(*v), n),
            Node::Coord(i) => {
                if *i >= n {
                    return Err(EvalError::PointDimension {
                        expected: *i + 1,
                        got: n,
                    });
                }
                Jet2::coordinate(p[*i].clone(), *i, n)
            }
            Node::Add(a, b) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let b = b.eval_jet2_cached(p, cache)?;
                a.add(&b)
            }
            Node::Sub(a, b) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let b = b.eval_jet2_cached(p, cache)?;
                a.sub(&b)
            }
            Node::Mul(a, b) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let b = b.eval_jet2_cached(p, cache)?;
                a.mul(&b)
            }
            Node::Div(a, b) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let b = b.eval_jet2_cached(p, cache)?;
                a.mul(&b.recip()?)
            }
            Node::Pow(a, k) => a.eval_jet2_cached(p, cache)?.powi(*k)?,
            Node::Neg(a) => a.eval_jet2_cached(p, cache)?.neg(),
            Node::Sin(a) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let (s, c) = (a.value.sin()?, a.value.cos()?);
                a.chain(s.clone(), c, s.neg())
            }
            Node::Cos(a) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let (s, c) = (a.value.sin()?, a.value.cos()?);
                a.chain(c.clone(), s.neg(), c.neg())
            }
            Node::Exp(a) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let e = a.value.exp()?;
                a.chain(e.clone(), e.clone(), e)
            }
            Node::Log(a) => {
                let a = a.eval_jet2_cached(p, cache)?;
                let v = a.value.ln()?;
                let d1 = F::one().div(&a.value)?;
                let d2 = d1.mul(&d1).neg();
                a.chain(v, d1, d2)
            }
        };
        cache.insert(key, jet.clone());
        Ok(jet)
    }

    /// Evaluates the value only.
    pub fn eval_value<F: Field>(&self, p: &[F]) -> Result<F, EvalError> {
        let mut cache: HashMap<*const Node, F> = HashMap::new();
        self.eval_value_cached(p, &mut cache)
    }

    fn eval_value_cached<F: Field>(
        &self,
        p: &[F],
        cache: &mut HashMap<*const Node, F>,
    ) -> Result<F, EvalError> {
        let key = Rc::as_ptr(&self.0);
        if let Some(hit) = cache.get(&key) {
            return Ok(hit.clone());
        }
        let v = match &*self.0 {
            Node::Const(r) => F::from_rational(r),
            Node::ConstF(v) => F::from_rational_or_float(*v),
            Node::Coord(i) => {
                if *i >= p.len() {
                    return Err(EvalError::PointDimension {
                        expected: *i + 1,
                        got: p.len(),
                    });
                }
                p[*i].clone()
            }
            Node::Add(a, b) => a
                .eval_value_cached(p, cache)?
                .add(&b.eval_value_cached(p, cache)?),
            Node::Sub(a, b) => a
                .eval_value_cached(p, cache)?
                .sub(&b.eval_value_cached(p, cache)?),
            Node::Mul(a, b) => a
                .eval_value_cached(p, cache)?
                .mul(&b.eval_value_cached(p, cache)?),
            Node::Div(a, b) => {
                let num = a.eval_value_cached(p, cache)?;
                let den = b.eval_value_cached(p, cache)?;
                num.div(&den)?
            }
            Node::Pow(a, k) => {
                let base = a.eval_value_cached(p, cache)?;
                if *k >= 0 {
                    pow_field(&base, *k as u32)
                } else {
                    F::one().div(&pow_field(&base, k.unsigned_abs()))?
                }
            }
            Node::Neg(a) => a.eval_value_cached(p, cache)?.neg(),
            Node::Sin(a) => a.eval_value_cached(p, cache)?.sin()?,
            Node::Cos(a) => a.eval_value_cached(p, cache)?.cos()?,
            Node::Exp(a) => a.eval_value_cached(p, cache)?.exp()?,
            Node::Log(a) => a.eval_value_cached(p, cache)?.ln()?,
        };
        cache.insert(key, v.clone());
        Ok(v)
    }
}

fn pow_rational(base: &BigRational, exponent: i32) -> BigRational {
    let mut acc = <BigRational as One>::one();
    for _ in 0..exponent {
        acc *= base;
    }
    acc
}

fn pow_field<F: Field>(base: &F, exponent: u32) -> F {
    let mut acc = F::one();
    for _ in 0..exponent {
        acc = acc.mul(base);
    }
    acc
}

/// Float constants must survive a trip through an exact context unscathed:
/// they only ever appear in trees that force float mode, so `from_rational`
/// is never called on them. This helper keeps the conversion in one place.
trait FromFloat: Sized {
    fn from_rational_or_float(v: f64) -> Self;
}

impl<F: Field> FromFloat for F {
    fn from_rational_or_float(v: f64) -> Self {
        // Exact representation of the (binary) float value.
        let r = BigRational::from_float(v).unwrap_or_else(<BigRational as Zero>::zero);
        F::from_rational(&r)
    }
}

impl<F: Field> Jet2<F> {
    pub fn constant(value: F, n: usize) -> Self {
        Jet2 {
            value,
            grad: vec![F::zero(); n],
            hess: vec![vec![F::zero(); n]; n],
        }
    }

    pub fn coordinate(value: F, axis: usize, n: usize) -> Self {
        let mut jet = Self::constant(value, n);
        jet.grad[axis] = F::one();
        jet
    }

    fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a.add(b))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a.sub(b))
    }

    fn zip(&self, rhs: &Self, op: impl Fn(&F, &F) -> F) -> Self {
        let n = self.dim();
        Jet2 {
            value: op(&self.value, &rhs.value),
            grad: (0..n).map(|i| op(&self.grad[i], &rhs.grad[i])).collect(),
            hess: (0..n)
                .map(|i| (0..n).map(|j| op(&self.hess[i][j], &rhs.hess[i][j])).collect())
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        let n = self.dim();
        Jet2 {
            value: self.value.neg(),
            grad: self.grad.iter().map(F::neg).collect(),
            hess: (0..n)
                .map(|i| self.hess[i].iter().map(F::neg).collect())
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.dim();
        let value = self.value.mul(&rhs.value);
        let grad: Vec<F> = (0..n)
            .map(|i| {
                self.grad[i]
                    .mul(&rhs.value)
                    .add(&self.value.mul(&rhs.grad[i]))
            })
            .collect();
        let hess = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        self.hess[i][j]
                            .mul(&rhs.value)
                            .add(&self.value.mul(&rhs.hess[i][j]))
                            .add(&self.grad[i].mul(&rhs.grad[j]))
                            .add(&self.grad[j].mul(&rhs.grad[i]))
                    })
                    .collect()
            })
            .collect();
        Jet2 { value, grad, hess }
    }

    /// Multiplicative inverse, with the usual domain error at zero.
    pub fn recip(&self) -> Result<Self, EvalError> {
        let n = self.dim();
        let inv = F::one().div(&self.value)?;
        let inv2 = inv.mul(&inv);
        let inv3 = inv2.mul(&inv);
        let two = F::from_int(2);
        let grad: Vec<F> = (0..n).map(|i| self.grad[i].mul(&inv2).neg()).collect();
        let hess = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        self.hess[i][j]
                            .mul(&inv2)
                            .neg()
                            .add(&two.mul(&self.grad[i].mul(&self.grad[j]).mul(&inv3)))
                    })
                    .collect()
            })
            .collect();
        Ok(Jet2 {
            value: inv,
            grad,
            hess,
        })
    }

    pub fn powi(&self, exponent: i32) -> Result<Self, EvalError> {
        if exponent == 0 {
            return Ok(Self::constant(F::one(), self.dim()));
        }
        let mut acc = self.clone();
        for _ in 1..exponent.unsigned_abs() {
            acc = acc.mul(self);
        }
        if exponent < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }

    /// Chain rule through a unary function with the given value and first
    /// and second derivatives at `self.value`.
    pub fn chain(&self, f0: F, f1: F, f2: F) -> Self {
        let n = self.dim();
        let grad: Vec<F> = (0..n).map(|i| f1.mul(&self.grad[i])).collect();
        let hess = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        f1.mul(&self.hess[i][j])
                            .add(&f2.mul(&self.grad[i].mul(&self.grad[j])))
                    })
                    .collect()
            })
            .collect();
        Jet2 {
            value: f0,
            grad,
            hess,
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses an expression in the chart grammar; coordinate indices must lie in
/// `1..=n`.
pub fn parse_expression(source: &str, n: usize) -> Result<Expression, ParseError> {
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
        dim: n,
    };
    parser.skip_ws();
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.term()?;
                    acc = Expression::add(acc, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.term()?;
                    acc = Expression::sub(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.factor()?;
                    acc = Expression::mul(acc, rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.factor()?;
                    acc = Expression::div(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        let negated = self.eat(b'-');
        if negated {
            self.skip_ws();
        }
        let base = self.base()?;
        self.skip_ws();
        let expr = if self.eat(b'^') {
            self.skip_ws();
            let exponent = self.integer()?;
            Expression::powi(base, exponent)
        } else {
            base
        };
        Ok(if negated { Expression::neg(expr) } else { expr })
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let negative = self.eat(b'-');
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: i32 = digits
            .parse()
            .map_err(|_| self.syntax("integer out of range"))?;
        Ok(if negative { -value } else { value })
    }

    fn base(&mut self) -> Result<Expression, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.syntax("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'x') => {
                self.pos += 1;
                let offset = self.pos;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
                if self.pos == start {
                    return Err(self.syntax("expected a coordinate index after 'x'"));
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let index: usize = digits
                    .parse()
                    .map_err(|_| self.syntax("coordinate index out of range"))?;
                if index == 0 || index > self.dim {
                    return Err(ParseError::CoordinateOutOfRange {
                        offset,
                        index,
                        dim: self.dim,
                    });
                }
                Ok(Expression::coord(index - 1))
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.function(),
            _ => Err(self.syntax("expected a number, coordinate, function or '('")),
        }
    }

    fn function(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let ctor = match name {
            "sin" => Expression::sin,
            "cos" => Expression::cos,
            "exp" => Expression::exp,
            "log" => Expression::log,
            _ => {
                self.pos = start;
                return Err(self.syntax("unknown function name"));
            }
        };
        self.skip_ws();
        if !self.eat(b'(') {
            return Err(self.syntax("expected '(' after function name"));
        }
        self.skip_ws();
        let inner = self.expr()?;
        self.skip_ws();
        if !self.eat(b')') {
            return Err(self.syntax("expected ')'"));
        }
        Ok(ctor(inner))
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        // Decimal (possibly with an exponent) => float constant.
        if self.peek() == Some(b'.') || matches!(self.peek(), Some(b'e' | b'E')) {
            if self.eat(b'.') {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
            if matches!(self.peek(), Some(b'e' | b'E')) {
                self.pos += 1;
                if matches!(self.peek(), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let value: f64 = text
                .parse()
                .map_err(|_| self.syntax("invalid decimal literal"))?;
            return Ok(Expression::float(value));
        }
        let numer_text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let numer: BigInt = numer_text
            .parse()
            .map_err(|_| self.syntax("invalid integer literal"))?;
        // A '/' immediately followed by a digit binds as an exact rational.
        if self.peek() == Some(b'/')
            && matches!(self.src.get(self.pos + 1), Some(c) if c.is_ascii_digit())
        {
            self.pos += 1;
            let den_start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            let den_text = std::str::from_utf8(&self.src[den_start..self.pos]).unwrap();
            let denom: BigInt = den_text
                .parse()
                .map_err(|_| self.syntax("invalid denominator"))?;
            if denom.is_zero() {
                return Err(self.syntax("zero denominator"));
            }
            return Ok(Expression::constant(BigRational::new(numer, denom)));
        }
        Ok(Expression::constant(BigRational::from_integer(numer)))
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Expression {
    // Precedence levels: 1 add/sub, 2 mul/div, 3 unary minus, 4 pow/atom.
    fn prec(&self) -> u8 {
        match &*self.0 {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Const(r) if r.is_negative() => 3,
            Node::ConstF(v) if *v < 0.0 => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.fmt_inner(f)?;
            write!(f, ")")
        } else {
            self.fmt_inner(f)
        }
    }

    fn fmt_inner(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(r) => {
                if r.denom() == &BigInt::from(1) {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Node::ConstF(v) => write!(f, "{v:?}"),
            Node::Coord(i) => write!(f, "x{}", i + 1),
            Node::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)
            }
            Node::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)
            }
            Node::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Node::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 4)
            }
            Node::Pow(a, k) => {
                a.fmt_prec(f, 4)?;
                write!(f, "^{k}")
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 4)
            }
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Log(a) => write!(f, "log({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn exact(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn parses_constants() {
        let one = parse_expression("1", 2).unwrap();
        assert_eq!(one, Expression::int(1));
        let half = parse_expression("3/2", 2).unwrap();
        assert_eq!(half, Expression::ratio(3, 2));
        assert!(!half.requires_float());
    }

    #[test]
    fn parses_product_tree() {
        let e = parse_expression("sin(x1)*x2", 2).unwrap();
        assert_eq!(
            e,
            Expression::mul(Expression::sin(Expression::coord(0)), Expression::coord(1))
        );
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        let err = parse_expression("x3 + 1", 2).unwrap_err();
        assert!(matches!(
            err,
            ParseError::CoordinateOutOfRange { index: 3, dim: 2, .. }
        ));
    }

    #[test]
    fn reports_syntax_offset() {
        let err = parse_expression("1 + ", 2).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }));
    }

    #[test]
    fn division_is_not_simplified_to_zero() {
        let e = parse_expression("(x1 - x1)/x2", 2).unwrap();
        // The numerator folds to zero but the division node must stay so the
        // domain restriction at x2 = 0 is kept.
        let err = e.eval_value::<f64>(&[1.0, 0.0]).unwrap_err();
        assert_eq!(err, EvalError::DivisionByZero);
    }

    #[test]
    fn bilinear_jet() {
        let e = parse_expression("x1*x2", 2).unwrap();
        let jet = e.eval_jet2(&[exact(2, 1), exact(3, 1)]).unwrap();
        assert_eq!(jet.value, exact(6, 1));
        assert_eq!(jet.grad, vec![exact(3, 1), exact(2, 1)]);
        assert_eq!(jet.hess[0][1], exact(1, 1));
        assert_eq!(jet.hess[1][0], exact(1, 1));
        assert_eq!(jet.hess[0][0], exact(0, 1));
    }

    #[test]
    fn constant_jet() {
        let e = parse_expression("1", 2).unwrap();
        let jet = e.eval_jet2(&[0.25f64, 0.75]).unwrap();
        assert_eq!(jet.value, 1.0);
        assert_eq!(jet.grad, vec![0.0, 0.0]);
        assert_eq!(jet.hess, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn log_jet_matches_closed_form() {
        let e = parse_expression("log(x1)", 2).unwrap();
        let jet = e.eval_jet2(&[2.0f64, 0.0]).unwrap();
        assert!((jet.value - 2.0f64.ln()).abs() < 1e-15);
        assert!((jet.grad[0] - 0.5).abs() < 1e-15);
        assert!((jet.grad[1]).abs() < 1e-15);
        assert!((jet.hess[0][0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn log_domain_error() {
        let e = parse_expression("log(x1)", 1).unwrap();
        assert_eq!(
            e.eval_value::<f64>(&[-1.0]).unwrap_err(),
            EvalError::LogOfNonPositive
        );
    }

    #[test]
    fn exact_mode_rejects_transcendentals() {
        let e = parse_expression("sin(x1)", 1).unwrap();
        assert!(e.requires_float());
        assert_eq!(
            e.eval_value::<BigRational>(&[exact(1, 2)]).unwrap_err(),
            EvalError::TranscendentalInExactMode
        );
    }

    #[test]
    fn symbolic_partial_agrees_with_jet_gradient() {
        let e = parse_expression("x1^3*x2 - 2/3*x2^2 + x1/x2", 2).unwrap();
        let p = [exact(1, 2), exact(5, 3)];
        let jet = e.eval_jet2(&p).unwrap();
        for axis in 0..2 {
            let d = e.partial(axis).eval_value::<BigRational>(&p).unwrap();
            assert_eq!(d, jet.grad[axis]);
        }
    }

    #[test]
    fn print_parse_roundtrip_is_structural() {
        let sources = [
            "x1*x2 + 3/2",
            "sin(x1)*cos(x2) - exp(x1^2)",
            "(x1 + x2)^3/(x2 - 1/2)",
            "-x1 + x2^-2",
            "log(x1 + 2)*x2",
            "1 - -2*x1",
        ];
        for src in sources {
            let e = parse_expression(src, 2).unwrap();
            let printed = e.to_string();
            let reparsed = parse_expression(&printed, 2)
                .unwrap_or_else(|err| panic!("reparse of {printed:?} failed: {err}"));
            assert_eq!(reparsed, e, "round trip changed {src:?} -> {printed:?}");
        }
    }

    #[test]
    fn float_constants_parse_as_floats() {
        let e = parse_expression("0.5*x1", 1).unwrap();
        assert!(e.requires_float());
        let v = e.eval_value::<f64>(&[3.0]).unwrap();
        assert_eq!(v, 1.5);
        let r = ToPrimitive::to_f64(&exact(1, 2)).unwrap();
        assert_eq!(r, 0.5);
    }
}
