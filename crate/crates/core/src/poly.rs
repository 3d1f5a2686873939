//! Polynomial vector fields and maps with exact derivatives of every order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomial syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("variable y{index} out of range for {nvars} variables")]
    VariableOutOfRange { index: usize, nvars: usize },
    #[error("{0}")]
    Shape(String),
}

/// Real polynomial in `nvars` variables, stored as exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    /// The coordinate `y_j` (0-based).
    pub fn var(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn monomial(exponents: Vec<u32>, c: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_monomial(exponents, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn add_monomial(&mut self, exponents: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&exponents);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_monomial(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, x) in &self.terms {
            out.add_monomial(e.clone(), x * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_monomial(e, c1 * c2);
            }
        }
        out
    }

    /// `∂p / ∂y_j` (0-based).
    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[j] > 0 {
                let mut e2 = e.clone();
                e2[j] -= 1;
                out.add_monomial(e2, c * e[j] as f64);
            }
        }
        out
    }

    /// `Σ_j a_j ∂p/∂y_j`.
    pub fn directional(&self, a: &[f64]) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            for (j, aj) in a.iter().enumerate() {
                if e[j] > 0 && *aj != 0.0 {
                    let mut e2 = e.clone();
                    e2[j] -= 1;
                    out.add_monomial(e2, c * e[j] as f64 * aj);
                }
            }
        }
        out
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(y).map(|(k, v)| v.powi(*k as i32)).product::<f64>())
            .sum()
    }

    /// `p^{(k)}(y)[a_1, …, a_k]`.
    pub fn derivative(&self, y: &[f64], dirs: &[&[f64]]) -> f64 {
        if dirs.len() as u32 > self.degree() {
            return 0.0;
        }
        let mut p = self.clone();
        for a in dirs {
            p = p.directional(a);
            if p.is_zero() {
                return 0.0;
            }
        }
        p.eval(y)
    }

    /// Parses text such as `2*y1^2*y2 - y2 + 0.5` (variables are 1-based).
    pub fn parse(text: &str, nvars: usize) -> Result<Self, PolyError> {
        PolyParser { text, pos: 0, nvars }.parse()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            for (j, k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*y{}", j + 1)?,
                    _ => write!(f, "*y{}^{k}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}

struct PolyParser<'a> {
    text: &'a str,
    pos: usize,
    nvars: usize,
}

impl PolyParser<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek().filter(|c| c.is_whitespace()) {
            self.pos += c.len_utf8();
        }
    }

    fn error<T>(&self, message: &str) -> Result<T, PolyError> {
        Err(PolyError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        })
    }

    fn number(&mut self) -> Result<f64, PolyError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
        {
            self.pos += 1;
            // exponent sign
            if matches!(self.text[..self.pos].chars().last(), Some('e' | 'E')) && matches!(self.peek(), Some('+' | '-'))
            {
                self.pos += 1;
            }
        }
        self.text[start..self.pos].parse().or_else(|_| {
            self.pos = start;
            self.error("expected a number")
        })
    }

    fn integer(&mut self) -> Result<u32, PolyError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.text[start..self.pos].parse().or_else(|_| {
            self.pos = start;
            self.error("expected an integer")
        })
    }

    fn factor(&mut self, exps: &mut [u32]) -> Result<f64, PolyError> {
        self.skip_ws();
        match self.peek() {
            Some('y') => {
                self.pos += 1;
                let at = self.pos;
                let j = self.integer()? as usize;
                if j == 0 || j > self.nvars {
                    self.pos = at;
                    return Err(PolyError::VariableOutOfRange {
                        index: j,
                        nvars: self.nvars,
                    });
                }
                let mut k = 1;
                self.skip_ws();
                if self.peek() == Some('^') {
                    self.pos += 1;
                    self.skip_ws();
                    k = self.integer()?;
                }
                exps[j - 1] += k;
                Ok(1.0)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            _ => self.error("expected a number or a variable"),
        }
    }

    fn parse(mut self) -> Result<Polynomial, PolyError> {
        let mut out = Polynomial::zero(self.nvars);
        let mut sign = 1.0;
        self.skip_ws();
        if self.peek() == Some('-') {
            sign = -1.0;
            self.pos += 1;
        }
        loop {
            let mut exps = vec![0u32; self.nvars];
            let mut c = sign * self.factor(&mut exps)?;
            loop {
                self.skip_ws();
                if self.peek() != Some('*') {
                    break;
                }
                self.pos += 1;
                c *= self.factor(&mut exps)?;
            }
            out.add_monomial(exps, c);
            self.skip_ws();
            match self.peek() {
                None => return Ok(out),
                Some('+') => sign = 1.0,
                Some('-') => sign = -1.0,
                Some(_) => return self.error("expected '+', '-' or '*'"),
            }
            self.pos += 1;
        }
    }
}

/// Derivative oracle for `d` vector fields `V_1, …, V_d` on `R^n`.
pub trait VectorFieldFamily: Send + Sync {
    fn driver_dim(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Highest derivative order the oracle supports.
    fn max_order(&self) -> usize;
    /// `V_i^{(k)}(y)[a_1, …, a_k]` with `k = dirs.len()` and `i` in `1..=d`.
    fn derivative(&self, i: usize, y: &[f64], dirs: &[&[f64]]) -> Vec<f64>;
}

/// Derivative oracle for a map `f: R^n → R^m`.
pub trait SmoothMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn max_order(&self) -> usize;
    /// `f^{(k)}(y)[a_1, …, a_k]`; with no directions this is `f(y)`.
    fn derivative(&self, y: &[f64], dirs: &[&[f64]]) -> Vec<f64>;
}

/// Polynomial map `R^n → R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMap {
    components: Vec<Polynomial>,
    max_order: usize,
}

impl PolynomialMap {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let n = components.first().map(Polynomial::nvars).unwrap_or(0);
        if n == 0 || components.iter().any(|p| p.nvars() != n) {
            return Err(PolyError::Shape(
                "components must share a positive number of variables".into(),
            ));
        }
        Ok(PolynomialMap {
            components,
            max_order: usize::MAX,
        })
    }

    /// Parses one component per string.
    pub fn parse(components: &[&str], nvars: usize) -> Result<Self, PolyError> {
        Self::new(
            components
                .iter()
                .map(|c| Polynomial::parse(c, nvars))
                .collect::<Result<_, _>>()?,
        )
    }

    /// `y ↦ A y` for a row-major square matrix.
    pub fn linear(matrix: &[Vec<f64>]) -> Result<Self, PolyError> {
        let n = matrix.len();
        if matrix.iter().any(|row| row.len() != n) {
            return Err(PolyError::Shape("matrix must be square".into()));
        }
        Self::new(
            matrix
                .iter()
                .map(|row| {
                    row.iter().enumerate().fold(Polynomial::zero(n), |acc, (j, a)| {
                        acc.add(&Polynomial::var(n, j).scale(*a))
                    })
                })
                .collect(),
        )
    }

    /// Declares a lower supported derivative order.
    pub fn with_max_order(mut self, order: usize) -> Self {
        self.max_order = order;
        self
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    /// The map `y ↦ g'(y)[V(y)]` for this map `g` and the field `field`.
    pub fn lie_derivative(&self, field: &PolynomialMap) -> PolynomialMap {
        let components = self
            .components
            .iter()
            .map(|g| {
                field
                    .components
                    .iter()
                    .enumerate()
                    .fold(Polynomial::zero(g.nvars()), |acc, (j, vj)| {
                        acc.add(&g.partial(j).mul(vj))
                    })
            })
            .collect();
        PolynomialMap {
            components,
            max_order: self.max_order,
        }
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(y)).collect()
    }
}

impl SmoothMap for PolynomialMap {
    fn input_dim(&self) -> usize {
        self.components[0].nvars()
    }

    fn output_dim(&self) -> usize {
        self.components.len()
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn derivative(&self, y: &[f64], dirs: &[&[f64]]) -> Vec<f64> {
        self.components.iter().map(|p| p.derivative(y, dirs)).collect()
    }
}

/// `d` polynomial vector fields on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialField {
    fields: Vec<PolynomialMap>,
}

impl PolynomialField {
    pub fn new(fields: Vec<PolynomialMap>) -> Result<Self, PolyError> {
        let n = fields.first().map(|f| f.input_dim()).unwrap_or(0);
        if n == 0 || fields.iter().any(|f| f.input_dim() != n || f.output_dim() != n) {
            return Err(PolyError::Shape("each field must map R^n to R^n for a common n".into()));
        }
        Ok(PolynomialField { fields })
    }

    /// Linear fields `V_i(y) = A_i y`.
    pub fn linear(matrices: &[Vec<Vec<f64>>]) -> Result<Self, PolyError> {
        Self::new(
            matrices
                .iter()
                .map(|m| PolynomialMap::linear(m))
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn field(&self, i: usize) -> &PolynomialMap {
        &self.fields[i - 1]
    }

    pub fn with_max_order(mut self, order: usize) -> Self {
        for f in &mut self.fields {
            f.max_order = order;
        }
        self
    }
}

impl VectorFieldFamily for PolynomialField {
    fn driver_dim(&self) -> usize {
        self.fields.len()
    }

    fn state_dim(&self) -> usize {
        self.fields[0].input_dim()
    }

    fn max_order(&self) -> usize {
        self.fields.iter().map(|f| f.max_order).min().unwrap_or(0)
    }

    fn derivative(&self, i: usize, y: &[f64], dirs: &[&[f64]]) -> Vec<f64> {
        self.fields[i - 1].derivative(y, dirs)
    }
}

/// JSON description of polynomial vector fields:
/// `{"n": 2, "fields": [["y2", "-y1"], ["0.5*y1", "0"]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldConfig {
    pub n: usize,
    pub fields: Vec<Vec<String>>,
}

impl FieldConfig {
    pub fn build(&self) -> Result<PolynomialField, PolyError> {
        PolynomialField::new(
            self.fields
                .iter()
                .map(|f| {
                    if f.len() != self.n {
                        return Err(PolyError::Shape(format!(
                            "field has {} components, expected {}",
                            f.len(),
                            self.n
                        )));
                    }
                    PolynomialMap::parse(&f.iter().map(String::as_str).collect::<Vec<_>>(), self.n)
                })
                .collect::<Result<_, _>>()?,
        )
    }
}

/// JSON description of a polynomial map: `{"n": 2, "components": ["y1^2", "y1*y2"]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapConfig {
    pub n: usize,
    pub components: Vec<String>,
}

impl MapConfig {
    pub fn build(&self) -> Result<PolynomialMap, PolyError> {
        PolynomialMap::parse(&self.components.iter().map(String::as_str).collect::<Vec<_>>(), self.n)
    }
}

/// The identity on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap(pub usize);

impl SmoothMap for IdentityMap {
    fn input_dim(&self) -> usize {
        self.0
    }

    fn output_dim(&self) -> usize {
        self.0
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, y: &[f64], dirs: &[&[f64]]) -> Vec<f64> {
        match dirs {
            [] => y.to_vec(),
            [a] => a.to_vec(),
            _ => vec![0.0; self.0],
        }
    }
}

/// `y ↦ y^{⊗k}` on `R^n`, with values flattened row-major into `R^{n^k}`.
#[derive(Debug, Clone, Copy)]
pub struct TensorPower {
    pub n: usize,
    pub k: usize,
}

impl SmoothMap for TensorPower {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.n.pow(self.k as u32)
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    /// Sum over injections of the directions into the `k` slots, the other
    /// slots holding `y`.
    fn derivative(&self, y: &[f64], dirs: &[&[f64]]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        if dirs.len() > self.k {
            return out;
        }
        let mut slots: Vec<Option<usize>> = vec![None; self.k];
        fn place(d: usize, dirs: &[&[f64]], y: &[f64], slots: &mut Vec<Option<usize>>, out: &mut [f64]) {
            if d == dirs.len() {
                let factors: Vec<&[f64]> = slots.iter().map(|s| s.map_or(y, |i| dirs[i])).collect();
                accumulate_outer(&factors, out);
                return;
            }
            for slot in 0..slots.len() {
                if slots[slot].is_none() {
                    slots[slot] = Some(d);
                    place(d + 1, dirs, y, slots, out);
                    slots[slot] = None;
                }
            }
        }
        place(0, dirs, y, &mut slots, &mut out);
        out
    }
}

/// Adds `v_1 ⊗ … ⊗ v_k` (row-major) into `out`.
pub fn accumulate_outer(factors: &[&[f64]], out: &mut [f64]) {
    let mut acc = vec![1.0];
    for v in factors {
        acc = acc.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o += a;
    }
}
