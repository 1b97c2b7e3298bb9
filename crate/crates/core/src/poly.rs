//! Sparse multivariate polynomials over per-player variable blocks.
//!
//! A variable is addressed by its `(block, coordinate)` pair. Blocks are the
//! players' strategy vectors; the certificate machinery in [`crate::gpg`] also
//! uses extra "shadow" blocks for the copies `y_i`. Flattening to a single
//! index only happens in the semidefinite layer.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Coefficients with absolute value below this are dropped after arithmetic.
pub const COEFF_EPS: f64 = 1e-14;

/// Hard cap on a single exponent; anything above is treated as malformed input.
pub const MAX_EXPONENT: u32 = 64;

/// A variable `x_{block, coord}`, both indices 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub block: usize,
    pub coord: usize,
}

impl Var {
    pub const fn new(block: usize, coord: usize) -> Self {
        Var { block, coord }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}_{}", self.block + 1, self.coord + 1)
    }
}

/// Ordered list of player blocks with their dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Input("layout needs at least one block".into()));
        }
        if let Some(i) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Input(format!("block {} has dimension 0", i + 1)));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &n in &dims {
            offsets.push(acc);
            acc += n;
        }
        Ok(BlockLayout { dims, offsets })
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, block: usize) -> usize {
        self.dims[block]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension `n = n_1 + ... + n_N`.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    /// Position of `v` in the flattened strategy vector.
    pub fn flat_index(&self, v: Var) -> Option<usize> {
        (v.block < self.dims.len() && v.coord < self.dims[v.block])
            .then(|| self.offsets[v.block] + v.coord)
    }

    pub fn contains(&self, v: Var) -> bool {
        self.flat_index(v).is_some()
    }

    pub fn block_vars(&self, block: usize) -> Vec<Var> {
        (0..self.dims[block]).map(|c| Var::new(block, c)).collect()
    }

    pub fn all_vars(&self) -> Vec<Var> {
        (0..self.dims.len()).flat_map(|b| self.block_vars(b)).collect()
    }

    /// The graded monomial basis `[x_i]_d` of one block.
    pub fn basis(&self, block: usize, d: u32) -> Vec<Monomial> {
        basis(&self.block_vars(block), d)
    }

    /// Slice of a flat point belonging to `block`.
    pub fn block_slice<'a>(&self, x: &'a [f64], block: usize) -> &'a [f64] {
        &x[self.offsets[block]..self.offsets[block] + self.dims[block]]
    }
}

/// A monomial in canonical sparse form: `(var, exponent)` pairs sorted by
/// variable, no zero exponents, total degree cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    powers: Vec<(Var, u32)>,
    degree: u32,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: Var) -> Self {
        Monomial { powers: vec![(v, 1)], degree: 1 }
    }

    /// Builds a monomial from arbitrary pairs; repeated variables are merged
    /// and zero exponents dropped.
    pub fn from_powers(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_default() += e;
        }
        let powers: Vec<_> = map.into_iter().filter(|&(_, e)| e > 0).collect();
        let degree = powers.iter().map(|&(_, e)| e).sum();
        Monomial { powers, degree }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[(Var, u32)] {
        &self.powers
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.powers
            .binary_search_by(|&(w, _)| w.cmp(&v))
            .map(|i| self.powers[i].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.powers.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.powers, &other.powers);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { powers: out, degree: self.degree + other.degree }
    }

    pub fn eval(&self, value: impl Fn(Var) -> Option<f64>) -> Result<f64> {
        let mut acc = 1.0;
        for &(v, e) in &self.powers {
            let x = value(v).ok_or_else(|| Error::Input(format!("no value for variable {v}")))?;
            acc *= x.powi(e as i32);
        }
        Ok(acc)
    }

    /// Replaces every variable through `map`; collisions are merged.
    pub fn rename(&self, map: impl Fn(Var) -> Var) -> Monomial {
        Monomial::from_powers(self.powers.iter().map(|&(v, e)| (map(v), e)))
    }

    pub fn display_with(&self, name: &dyn Fn(Var) -> String) -> String {
        if self.powers.is_empty() {
            return "1".into();
        }
        self.powers
            .iter()
            .map(|&(v, e)| if e == 1 { name(v) } else { format!("{}^{}", name(v), e) })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Ord for Monomial {
    /// Graded, then alphabetical: within a grade the monomial with the larger
    /// exponent on the earliest variable comes first, so `[x]_2` over
    /// `(x_1, x_2)` lists `1, x_1, x_2, x_1^2, x_1 x_2, x_2^2`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| {
            let (a, b) = (&self.powers, &other.powers);
            for k in 0..a.len().max(b.len()) {
                match (a.get(k), b.get(k)) {
                    (None, None) => return Ordering::Equal,
                    (None, Some(_)) => return Ordering::Greater,
                    (Some(_), None) => return Ordering::Less,
                    (Some(&(va, ea)), Some(&(vb, eb))) => {
                        if va != vb {
                            return va.cmp(&vb);
                        }
                        if ea != eb {
                            return eb.cmp(&ea);
                        }
                    }
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&|v| v.to_string()))
    }
}

/// All monomials of degree at most `d` in `vars`, in graded alphabetical order.
/// The result has `C(vars.len() + d, d)` entries.
pub fn basis(vars: &[Var], d: u32) -> Vec<Monomial> {
    let mut vars = vars.to_vec();
    vars.sort();
    vars.dedup();
    let mut out = Vec::new();
    let mut exps = vec![0u32; vars.len()];
    fn rec(k: usize, left: u32, vars: &[Var], exps: &mut [u32], out: &mut Vec<Monomial>) {
        if k == vars.len() {
            out.push(Monomial::from_powers(vars.iter().copied().zip(exps.iter().copied())));
            return;
        }
        for e in 0..=left {
            exps[k] = e;
            rec(k + 1, left - e, vars, exps, out);
        }
        exps[k] = 0;
    }
    rec(0, d, &vars, &mut exps, &mut out);
    out.sort();
    out
}

/// Number of monomials of degree at most `d` in `n` variables, `C(n + d, d)`.
pub fn basis_len(n: usize, d: u32) -> usize {
    let d = d as usize;
    let mut acc: usize = 1;
    for k in 1..=d {
        acc = acc * (n + k) / k;
    }
    acc
}

/// Sparse polynomial with real coefficients; stored terms are exactly the support.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::from_terms([(Monomial::one(), c)])
    }

    pub fn var(v: Var) -> Self {
        Polynomial::from_terms([(Monomial::var(v), 1.0)])
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        Polynomial::from_terms([(m, c)])
    }

    /// Sums duplicate monomials and drops negligible coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_default() += c;
        }
        let mut p = Polynomial { terms: map };
        p.canonicalize();
        p
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= COEFF_EPS);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Constant value if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Monomial::one()).copied(),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|(m, &v)| (m.clone(), v * c)))
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut terms = self.terms.clone();
        for (m, &c) in &other.terms {
            *terms.entry(m.clone()).or_default() += c;
        }
        let mut p = Polynomial { terms };
        p.canonicalize();
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                *terms.entry(a.mul(b)).or_default() += ca * cb;
            }
        }
        let mut p = Polynomial { terms };
        p.canonicalize();
        p
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(1.0);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Evaluates at a point given by `value`; fails if a variable in the
    /// support has no value.
    pub fn eval(&self, value: impl Fn(Var) -> Option<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (m, &c) in &self.terms {
            acc += c * m.eval(&value)?;
        }
        Ok(acc)
    }

    /// Evaluates at a flat point laid out by `layout`.
    pub fn eval_flat(&self, layout: &BlockLayout, x: &[f64]) -> Result<f64> {
        if x.len() != layout.total_dim() {
            return Err(Error::Input(format!(
                "point has dimension {}, layout expects {}",
                x.len(),
                layout.total_dim()
            )));
        }
        self.eval(|v| layout.flat_index(v).map(|k| x[k]))
    }

    /// Substitutes numeric values for every variable where `value` returns
    /// `Some`, keeping the rest symbolic.
    pub fn substitute(&self, value: impl Fn(Var) -> Option<f64>) -> Polynomial {
        let mut terms: Vec<(Monomial, f64)> = Vec::with_capacity(self.terms.len());
        for (m, &c) in &self.terms {
            let mut coeff = c;
            let mut kept = Vec::new();
            for &(v, e) in m.powers() {
                match value(v) {
                    Some(x) => coeff *= x.powi(e as i32),
                    None => kept.push((v, e)),
                }
            }
            terms.push((Monomial::from_powers(kept), coeff));
        }
        Polynomial::from_terms(terms)
    }

    /// Fixes every block except `player` to its value in the flat point `x`.
    /// The result only mentions variables of block `player`.
    pub fn restrict(&self, layout: &BlockLayout, player: usize, x: &[f64]) -> Result<Polynomial> {
        if player >= layout.num_blocks() {
            return Err(Error::Input(format!("no player {}", player + 1)));
        }
        if x.len() != layout.total_dim() {
            return Err(Error::Input(format!(
                "point has dimension {}, layout expects {}",
                x.len(),
                layout.total_dim()
            )));
        }
        for v in self.vars() {
            if !layout.contains(v) {
                return Err(Error::Input(format!("variable {v} is outside the layout")));
            }
        }
        Ok(self.substitute(|v| (v.block != player).then(|| x[layout.offset(v.block) + v.coord])))
    }

    /// Renames variables; used to build shadow copies.
    pub fn rename(&self, map: impl Fn(Var) -> Var) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|(m, &c)| (m.rename(&map), c)))
    }

    /// Partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().filter_map(|(m, &c)| {
            let e = m.exponent(v);
            (e > 0).then(|| {
                let powers = m.powers().iter().map(|&(w, k)| (w, if w == v { k - 1 } else { k }));
                (Monomial::from_powers(powers), c * e as f64)
            })
        }))
    }

    pub fn display_with(&self, name: &dyn Fn(Var) -> String) -> String {
        format_terms(self.terms.iter().map(|(m, &c)| (m, c)), name, |c| format!("{c:?}"))
    }
}

/// Joins `(monomial, coeff)` terms into `a*m1 + b*m2 - ...`, using `fmt_coeff`
/// for the absolute coefficient values.
pub(crate) fn format_terms<'a>(
    terms: impl Iterator<Item = (&'a Monomial, f64)>,
    name: &dyn Fn(Var) -> String,
    fmt_coeff: impl Fn(f64) -> String,
) -> String {
    let mut out = String::new();
    for (k, (m, c)) in terms.enumerate() {
        let neg = c < 0.0;
        let a = c.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if m.is_one() {
            out.push_str(&fmt_coeff(a));
        } else if a == 1.0 {
            out.push_str(&m.display_with(name));
        } else {
            out.push_str(&fmt_coeff(a));
            out.push('*');
            out.push_str(&m.display_with(name));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&|v| v.to_string()))
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                Polynomial::$method(self, rhs)
            }
        }
        impl $trait<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                Polynomial::$method(&self, &rhs)
            }
        }
        impl $trait<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                Polynomial::$method(&self, rhs)
            }
        }
        impl $trait<f64> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: f64) -> Polynomial {
                Polynomial::$method(&self, &Polynomial::constant(rhs))
            }
        }
        impl $trait<f64> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: f64) -> Polynomial {
                Polynomial::$method(self, &Polynomial::constant(rhs))
            }
        }
        impl $trait<&Polynomial> for f64 {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                Polynomial::$method(&Polynomial::constant(self), rhs)
            }
        }
        impl $trait<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                Polynomial::$method(self, &rhs)
            }
        }
        impl $trait<Polynomial> for f64 {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                Polynomial::$method(&Polynomial::constant(self), &rhs)
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(b: usize, c: usize) -> Polynomial {
        Polynomial::var(Var::new(b, c))
    }

    #[test]
    fn eval_constant_and_intro_objective() {
        assert_eq!(Polynomial::constant(1.0).eval(|_| Some(3.0)).unwrap(), 1.0);
        let (x1, x2) = (x(0, 0), x(1, 0));
        let f2 = &x2 * &x2 - (&x1 - 1.0) * x2.clone();
        assert_eq!(f2.eval(|_| Some(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn eval_pollution_revenue_term() {
        let x10 = x(0, 0);
        let p = x10.clone() * (2.0 - 0.5 * x10);
        assert!((p.eval(|_| Some(1.0)).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn eval_missing_variable_is_an_error() {
        let p = x(0, 0) + x(1, 0);
        let err = p.eval(|v| (v.block == 0).then_some(1.0)).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn restrict_examples() {
        let layout = BlockLayout::new(vec![1, 1]).unwrap();
        let (x1, x2) = (x(0, 0), x(1, 0));
        let f2 = &x1 * &x2;
        assert_eq!(f2.restrict(&layout, 1, &[1.0, 7.0]).unwrap(), x2.clone());
        let g = 3.0 - &x1 * &x1 - &x2 * &x2;
        assert_eq!(g.restrict(&layout, 1, &[1.0, 0.0]).unwrap(), 2.0 - &x2 * &x2);
        let f = &x1 + &x2;
        assert_eq!(f.restrict(&layout, 0, &[5.0, 0.0]).unwrap(), x1);
    }

    #[test]
    fn basis_matches_graded_listing() {
        let layout = BlockLayout::new(vec![2]).unwrap();
        let b = layout.basis(0, 3);
        let names: Vec<String> = b.iter().map(|m| m.to_string()).collect();
        assert_eq!(
            names,
            [
                "1", "x1_1", "x1_2", "x1_1^2", "x1_1*x1_2", "x1_2^2", "x1_1^3", "x1_1^2*x1_2",
                "x1_1*x1_2^2", "x1_2^3"
            ]
        );
        assert_eq!(BlockLayout::new(vec![1]).unwrap().basis(0, 0), vec![Monomial::one()]);
        assert_eq!(BlockLayout::new(vec![3]).unwrap().basis(0, 2).len(), 10);
        assert_eq!(basis_len(3, 2), 10);
        assert_eq!(basis_len(6, 4), 210);
    }

    #[test]
    fn arithmetic_examples() {
        let x1 = x(0, 0);
        assert_eq!((&x1 + 1.0) * (&x1 - 1.0), &x1 * &x1 - 1.0);
        assert_eq!(x1.clone() + Polynomial::zero(), x1);
        // (a - b)(a^2 + ab + b^2) = a^3 - b^3
        let a = x(2, 0) + x(2, 1) + 1.0;
        let b = x(0, 0) + x(0, 1) + 1.0;
        let lhs = (&a - &b) * (&a * &a + &a * &b + &b * &b);
        let rhs = a.pow(3) - b.pow(3);
        assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn canonical_form_drops_tiny_terms() {
        let p = Polynomial::from_terms([(Monomial::one(), 1e-16), (Monomial::var(Var::new(0, 0)), 2.0)]);
        assert_eq!(p.num_terms(), 1);
        assert!((x(0, 0) - x(0, 0)).is_zero());
    }

    #[test]
    fn derivative() {
        let x1 = x(0, 0);
        let p = x1.pow(3) * x(1, 0) + 2.0 * x1.clone();
        assert_eq!(p.diff(Var::new(0, 0)), 3.0 * x1.pow(2) * x(1, 0) + 2.0);
    }
}
