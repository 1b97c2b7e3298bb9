//! Truncated moment sequences, localizing matrices and moment relaxations.
//!
//! A relaxation of order `d` for
//!
//! ```text
//!   min f(x)  s.t.  g_j(x) >= 0,  h_k(x) = 0
//! ```
//!
//! is emitted as an [`SdpProblem`] whose *dual* side is the moment problem and
//! whose primal side is the SOS problem. Rows are the nonconstant monomials of
//! degree at most `2d`; the dual vector is `-y` (the moments with `y_0 = 1`
//! eliminated), so the moment matrix and the localizing matrices are exactly
//! the dual slack blocks. Equalities become linear equations on `y`, which the
//! standard form carries as free primal columns.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{basis, Monomial, Polynomial, Var};
use crate::sdp::{SdpBuilder, SdpProblem, SdpSolution};

/// A truncated multi-sequence `(y_α)` with `|α| <= degree`, graded order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tms {
    vars: Vec<Var>,
    degree: u32,
    basis: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    values: Vec<f64>,
}

fn sorted_vars(vars: &[Var]) -> Vec<Var> {
    let mut v = vars.to_vec();
    v.sort();
    v.dedup();
    v
}

impl Tms {
    pub fn zeros(vars: &[Var], degree: u32) -> Self {
        let vars = sorted_vars(vars);
        let basis = basis(&vars, degree);
        let index = basis.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let values = vec![0.0; basis.len()];
        Tms { vars, degree, basis, index, values }
    }

    /// Builds a sequence from values listed in graded order.
    pub fn new(vars: &[Var], degree: u32, values: Vec<f64>) -> Result<Self> {
        let mut t = Tms::zeros(vars, degree);
        if values.len() != t.values.len() {
            return Err(Error::Input(format!(
                "a degree-{degree} sequence in {} variables has {} entries, got {}",
                t.vars.len(),
                t.values.len(),
                values.len()
            )));
        }
        t.values = values;
        Ok(t)
    }

    /// Moments of the Dirac measure at `u` (`u[i]` is the value of the i-th sorted variable).
    pub fn point_mass(vars: &[Var], degree: u32, u: &[f64]) -> Result<Self> {
        let mut t = Tms::zeros(vars, degree);
        if u.len() != t.vars.len() {
            return Err(Error::Input(format!("point has {} coordinates, expected {}", u.len(), t.vars.len())));
        }
        let pos: HashMap<Var, usize> = t.vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        for (i, m) in t.basis.iter().enumerate() {
            t.values[i] = m.eval(|v| pos.get(&v).map(|&k| u[k]))?;
        }
        Ok(t)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn get(&self, m: &Monomial) -> Option<f64> {
        self.index_of(m).map(|i| self.values[i])
    }

    /// `Σ w_k y_k` over sequences sharing variables and degree.
    pub fn combine(parts: &[(f64, &Tms)]) -> Result<Tms> {
        let first = parts.first().ok_or_else(|| Error::Input("empty combination".into()))?.1;
        let mut out = Tms::zeros(&first.vars, first.degree);
        for (w, t) in parts {
            if t.vars != first.vars || t.degree != first.degree {
                return Err(Error::Input("sequences differ in variables or degree".into()));
            }
            for (o, v) in out.values.iter_mut().zip(&t.values) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// The moment matrix `M_t[y]`; needs `2t <= degree`.
    pub fn moment_matrix(&self, t: u32) -> Result<DMatrix<f64>> {
        localizing(&Polynomial::constant(1.0), &self.vars, t)?.eval(self)
    }
}

/// `<f, y> = Σ f_α y_α`.
pub fn pair(f: &Polynomial, y: &Tms) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in f.terms() {
        match y.get(m) {
            Some(v) => acc += c * v,
            None if m.degree() > y.degree => {
                return Err(Error::Degree(format!(
                    "polynomial of degree {} paired with a degree-{} sequence",
                    f.degree(),
                    y.degree
                )))
            }
            None => return Err(Error::Input(format!("monomial {m} uses variables outside the sequence"))),
        }
    }
    Ok(acc)
}

/// The linear map `y ↦ L_q^{(d)}[y]`, stored per upper-triangular entry.
#[derive(Clone, Debug)]
pub struct LocalizingForm {
    /// Side basis `[x]_t`.
    basis: Vec<Monomial>,
    /// `t = d - ⌈deg q / 2⌉`.
    t: u32,
    /// Entry `(a, b)`, `a <= b`, as `(monomial, coefficient)` terms.
    entries: Vec<((usize, usize), Vec<(Monomial, f64)>)>,
}

impl LocalizingForm {
    pub fn side(&self) -> usize {
        self.basis.len()
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    /// Upper-triangular entries as linear functionals of `y`.
    pub fn entries(&self) -> &[((usize, usize), Vec<(Monomial, f64)>)] {
        &self.entries
    }

    /// Assembles the symmetric matrix at `y`.
    pub fn eval(&self, y: &Tms) -> Result<DMatrix<f64>> {
        let n = self.side();
        let mut out = DMatrix::zeros(n, n);
        for ((a, b), terms) in &self.entries {
            let mut v = 0.0;
            for (m, c) in terms {
                v += c * y.get(m).ok_or_else(|| {
                    Error::Degree(format!("sequence of degree {} too short for monomial {m}", y.degree))
                })?;
            }
            out[(*a, *b)] = v;
            out[(*b, *a)] = v;
        }
        Ok(out)
    }
}

fn half_ceil(deg: u32) -> u32 {
    deg.div_ceil(2)
}

/// The localizing form of `q` at order `d` over `vars`.
pub fn localizing(q: &Polynomial, vars: &[Var], d: u32) -> Result<LocalizingForm> {
    let hq = half_ceil(q.degree());
    if hq > d {
        return Err(Error::Degree(format!("localizing a degree-{} polynomial at order {d}", q.degree())));
    }
    let vars = sorted_vars(vars);
    for v in q.vars() {
        if !vars.contains(&v) {
            return Err(Error::Input(format!("variable {v} is not among the relaxation variables")));
        }
    }
    let t = d - hq;
    let side = basis(&vars, t);
    let mut entries = Vec::with_capacity(side.len() * (side.len() + 1) / 2);
    for a in 0..side.len() {
        for b in a..side.len() {
            let ab = side[a].mul(&side[b]);
            let terms = q.terms().map(|(m, c)| (m.mul(&ab), c)).collect();
            entries.push(((a, b), terms));
        }
    }
    Ok(LocalizingForm { basis: side, t, entries })
}

/// Role of a cone block in an assembled relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Moment,
    /// Localizing block of the j-th inequality.
    Localizing(usize),
}

/// An assembled order-`d` relaxation plus the maps needed to read it back.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub order: u32,
    pub vars: Vec<Var>,
    pub sdp: SdpProblem,
    /// Kind and side basis of each cone block, in block order.
    pub blocks: Vec<(BlockKind, Vec<Monomial>)>,
    /// SDP row `k` is the moment of `row_monomials[k]`.
    pub row_monomials: Vec<Monomial>,
    /// Constant term of the objective.
    pub f0: f64,
}

/// Smallest admissible order: the largest `⌈deg/2⌉` among objective and constraints (at least 1).
pub fn min_order(f: &Polynomial, ineqs: &[Polynomial], eqs: &[Polynomial]) -> u32 {
    std::iter::once(f)
        .chain(ineqs)
        .chain(eqs)
        .map(|p| half_ceil(p.degree()))
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Assembles the order-`d` moment relaxation.
pub fn build_relaxation(
    vars: &[Var],
    f: &Polynomial,
    ineqs: &[Polynomial],
    eqs: &[Polynomial],
    d: u32,
) -> Result<Relaxation> {
    let d0 = min_order(f, ineqs, eqs);
    if d < d0 {
        return Err(Error::Degree(format!("order {d} is below the minimum admissible order {d0}")));
    }
    let vars = sorted_vars(vars);
    for p in std::iter::once(f).chain(ineqs).chain(eqs) {
        for v in p.vars() {
            if !vars.contains(&v) {
                return Err(Error::Input(format!("variable {v} is not among the relaxation variables")));
            }
        }
    }
    let all = basis(&vars, 2 * d);
    let row_monomials: Vec<Monomial> = all[1..].to_vec();
    let row: HashMap<&Monomial, usize> = row_monomials.iter().enumerate().map(|(k, m)| (m, k)).collect();
    let mut bld = SdpBuilder::new(row_monomials.len());

    // objective: max Σ f_α y_α with y = -m
    let mut f0 = 0.0;
    for (m, c) in f.terms() {
        match row.get(m) {
            Some(&k) => bld.set_b(k, c),
            None => f0 = c,
        }
    }

    let mut blocks = Vec::new();
    let mut add_psd = |bld: &mut SdpBuilder, form: &LocalizingForm, kind: BlockKind| {
        let blk = bld.add_block(form.side());
        // S = C - Σ y_k A_k equals L(m) with m_0 = 1 and y = -m
        for ((a, b), terms) in form.entries() {
            // the builder pools (a, b) with (b, a)
            let w = if a == b { 1.0 } else { 2.0 };
            for (m, c) in terms {
                match row.get(m) {
                    Some(&k) => bld.add_a(k, blk, *a, *b, w * c),
                    None => bld.add_c(blk, *a, *b, w * c),
                }
            }
        }
        blocks.push((kind, form.basis().to_vec()));
    };
    add_psd(&mut bld, &localizing(&Polynomial::constant(1.0), &vars, d)?, BlockKind::Moment);
    for (j, g) in ineqs.iter().enumerate() {
        add_psd(&mut bld, &localizing(g, &vars, d)?, BlockKind::Localizing(j));
    }

    // each h·x^β with |β| <= 2d - deg h gives  Σ_γ h_γ y_{β+γ} = h_0 [β = 0]
    for h in eqs {
        let span = 2 * d - h.degree();
        for beta in basis(&vars, span) {
            let mut cost = 0.0;
            let mut coefs = Vec::new();
            for (m, c) in h.terms() {
                let mb = m.mul(&beta);
                match row.get(&mb) {
                    Some(&k) => coefs.push((k, c)),
                    None => cost = c,
                }
            }
            let z = bld.add_free(cost);
            for (k, c) in coefs {
                bld.add_free_coef(k, z, c);
            }
        }
    }

    Ok(Relaxation { order: d, vars, sdp: bld.build(), blocks, row_monomials, f0 })
}

impl Relaxation {
    /// Moments `m = -y` with `m_0 = 1`.
    pub fn moments(&self, sol: &SdpSolution) -> Tms {
        let mut t = Tms::zeros(&self.vars, 2 * self.order);
        t.values[0] = 1.0;
        for (k, m) in self.row_monomials.iter().enumerate() {
            let i = t.index[m];
            t.values[i] = -sol.y[k];
        }
        t
    }

    /// Relaxation value `ϑ_d`, read from the moment side.
    pub fn value(&self, sol: &SdpSolution) -> f64 {
        self.f0 - sol.dual_obj
    }

    /// Relaxation value read from the SOS side.
    pub fn sos_value(&self, sol: &SdpSolution) -> f64 {
        self.f0 - sol.primal_obj
    }
}
