//! Dense primal-dual interior-point solver for small block-diagonal SDPs.
//!
//! Problems are in equality standard form
//!
//! ```text
//!   min  Σ_b <C_b, X_b> + c_f' z
//!   s.t. Σ_b <A_kb, X_b> + (F z)_k = b_k      k = 1..m
//!        X_b ⪰ 0,  z free
//! ```
//!
//! with dual `max b'y  s.t.  S_b = C_b - Σ_k y_k A_kb ⪰ 0,  F'y = c_f`.
//! A 1×1 block is a nonnegative scalar.
//!
//! The method is an infeasible-start path-following scheme with HKM search
//! directions and a Mehrotra predictor-corrector. Infeasibility is reported
//! once the iterates approach an improving ray closely enough. The Schur
//! complement is assembled densely but split into independent diagonal blocks
//! when constraint rows never share a cone block.

use std::cell::OnceCell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

/// Iterations without halving the best residual before giving up.
const STALL_ITERS: usize = 15;
/// Stalls are only declared once the iterates are this accurate, so that
/// diverging runs still reach the infeasibility tests.
const STALL_MERIT: f64 = 1e-6;

/// Relative KKT residual above which the dense saddle-point solve is used:
/// always for small systems, and only on clear failure for large ones.
const KKT_FALLBACK: f64 = 1e-10;
const KKT_FALLBACK_LARGE: f64 = 1e-3;
const KKT_SMALL: usize = 400;

/// Outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// The primal has no feasible point; `y` is (a multiple of) an improving dual ray.
    PrimalInfeasible,
    /// The dual has no feasible point; `x`/`z` approximate an improving primal ray.
    DualInfeasible,
    MaxIter,
    /// No accuracy gain for a while; the most accurate iterate is returned.
    Stalled,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { tol: 1e-9, max_iter: 100 }
    }
}

/// Symmetric sparse coefficient matrix of one constraint restricted to one
/// block, stored with both triangles expanded.
#[derive(Clone, Debug)]
struct Entries(Vec<(usize, usize, f64)>);

#[derive(Clone, Debug)]
pub struct SdpProblem {
    block_sizes: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    b: Vec<f64>,
    /// Per block: constraint rows touching it.
    a: Vec<Vec<(usize, Entries)>>,
    free_c: Vec<f64>,
    /// Per free variable: sparse column of F.
    free_cols: Vec<Vec<(usize, f64)>>,
}

/// Incremental assembly of an [`SdpProblem`].
///
/// `add_a(k, blk, i, j, v)` adds `v * X[i][j]` to the left-hand side of row
/// `k`; contributions to `(i, j)` and `(j, i)` are pooled, so the stored
/// matrices are symmetric by construction. `add_c` works the same way.
#[derive(Clone, Debug)]
pub struct SdpBuilder {
    block_sizes: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    b: Vec<f64>,
    a: Vec<std::collections::BTreeMap<usize, std::collections::BTreeMap<(usize, usize), f64>>>,
    free_c: Vec<f64>,
    free_cols: Vec<std::collections::BTreeMap<usize, f64>>,
}

impl SdpBuilder {
    pub fn new(rows: usize) -> Self {
        SdpBuilder {
            block_sizes: Vec::new(),
            c: Vec::new(),
            b: vec![0.0; rows],
            a: Vec::new(),
            free_c: Vec::new(),
            free_cols: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn add_block(&mut self, size: usize) -> usize {
        assert!(size > 0, "empty cone block");
        self.block_sizes.push(size);
        self.c.push(DMatrix::zeros(size, size));
        self.a.push(Default::default());
        self.block_sizes.len() - 1
    }

    pub fn add_free(&mut self, cost: f64) -> usize {
        self.free_c.push(cost);
        self.free_cols.push(Default::default());
        self.free_c.len() - 1
    }

    pub fn set_b(&mut self, k: usize, v: f64) {
        self.b[k] = v;
    }

    pub fn add_b(&mut self, k: usize, v: f64) {
        self.b[k] += v;
    }

    pub fn add_a(&mut self, k: usize, blk: usize, i: usize, j: usize, v: f64) {
        let key = if i <= j { (i, j) } else { (j, i) };
        let w = if i == j { v } else { 0.5 * v };
        *self.a[blk].entry(k).or_default().entry(key).or_default() += w;
    }

    pub fn add_c(&mut self, blk: usize, i: usize, j: usize, v: f64) {
        if i == j {
            self.c[blk][(i, i)] += v;
        } else {
            self.c[blk][(i, j)] += 0.5 * v;
            self.c[blk][(j, i)] += 0.5 * v;
        }
    }

    pub fn add_free_coef(&mut self, k: usize, var: usize, v: f64) {
        *self.free_cols[var].entry(k).or_default() += v;
    }

    pub fn build(self) -> SdpProblem {
        let a = self
            .a
            .into_iter()
            .map(|rows| {
                rows.into_iter()
                    .filter_map(|(k, ents)| {
                        let mut full = Vec::new();
                        for ((i, j), v) in ents {
                            if v == 0.0 {
                                continue;
                            }
                            full.push((i, j, v));
                            if i != j {
                                full.push((j, i, v));
                            }
                        }
                        (!full.is_empty()).then_some((k, Entries(full)))
                    })
                    .collect()
            })
            .collect();
        SdpProblem {
            block_sizes: self.block_sizes,
            c: self.c,
            b: self.b,
            a,
            free_c: self.free_c,
            free_cols: self
                .free_cols
                .into_iter()
                .map(|col| col.into_iter().filter(|&(_, v)| v != 0.0).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Primal blocks `X_b`.
    pub x: Vec<DMatrix<f64>>,
    /// Free primal variables.
    pub z: Vec<f64>,
    /// Dual vector.
    pub y: Vec<f64>,
    /// Dual slack blocks `S_b`.
    pub s: Vec<DMatrix<f64>>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `‖A(X) + Fz - b‖_∞ / (1 + ‖b‖_∞)`.
    pub primal_res: f64,
    /// `max(‖C - A*y - S‖_max, ‖c_f - F'y‖_∞) / (1 + ‖C‖_max + ‖c_f‖_∞)`.
    pub dual_res: f64,
    /// `|primal_obj - dual_obj| / (1 + |primal_obj| + |dual_obj|)`.
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// Largest of the three accuracy measures; NaN counts as infinitely bad.
    pub fn accuracy(&self) -> f64 {
        [self.primal_res, self.dual_res, self.gap]
            .into_iter()
            .fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
    }
}

impl SdpProblem {
    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_free(&self) -> usize {
        self.free_c.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Dense copy of `A_k` restricted to block `blk` (symmetric).
    pub fn a_matrix(&self, k: usize, blk: usize) -> DMatrix<f64> {
        let n = self.block_sizes[blk];
        let mut out = DMatrix::zeros(n, n);
        if let Some((_, e)) = self.a[blk].iter().find(|(row, _)| *row == k) {
            for &(i, j, v) in &e.0 {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn c_matrix(&self, blk: usize) -> &DMatrix<f64> {
        &self.c[blk]
    }

    /// Column of `F` for one free variable as `(row, value)` pairs.
    pub fn free_column(&self, var: usize) -> &[(usize, f64)] {
        &self.free_cols[var]
    }

    pub fn free_cost(&self, var: usize) -> f64 {
        self.free_c[var]
    }

    /// `A(X) + F z`.
    pub fn apply_a(&self, x: &[DMatrix<f64>], z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.b.len()];
        self.apply_a_into(x, &mut out);
        for (col, &zj) in self.free_cols.iter().zip(z) {
            for &(k, v) in col {
                out[k] += v * zj;
            }
        }
        out
    }

    fn apply_a_into(&self, x: &[DMatrix<f64>], out: &mut [f64]) {
        for (blk, rows) in self.a.iter().enumerate() {
            let xb = &x[blk];
            for (k, e) in rows {
                out[*k] += e.0.iter().map(|&(i, j, v)| v * xb[(i, j)]).sum::<f64>();
            }
        }
    }

    /// `Σ_k y_k A_kb` for every block.
    pub fn apply_at(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        self.a
            .iter()
            .zip(&self.block_sizes)
            .map(|(rows, &n)| {
                let mut m = DMatrix::zeros(n, n);
                for (k, e) in rows {
                    let yk = y[*k];
                    if yk != 0.0 {
                        for &(i, j, v) in &e.0 {
                            m[(i, j)] += yk * v;
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// `F' y`.
    pub fn apply_ft(&self, y: &[f64]) -> Vec<f64> {
        self.free_cols.iter().map(|col| col.iter().map(|&(k, v)| v * y[k]).sum()).collect()
    }

    fn objective(&self, x: &[DMatrix<f64>], z: &[f64]) -> f64 {
        let mut acc: f64 = self.c.iter().zip(x).map(|(c, x)| c.dot(x)).sum();
        acc += self.free_c.iter().zip(z).map(|(c, z)| c * z).sum::<f64>();
        acc
    }

    /// Residuals of a candidate primal-dual pair in the original scale.
    pub fn residuals(
        &self,
        x: &[DMatrix<f64>],
        z: &[f64],
        y: &[f64],
        s: &[DMatrix<f64>],
    ) -> (f64, f64, f64) {
        let ax = self.apply_a(x, z);
        let b_inf = inf_norm(&self.b);
        let pres = ax.iter().zip(&self.b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / (1.0 + b_inf);
        let aty = self.apply_at(y);
        let mut dres: f64 = 0.0;
        let mut c_inf: f64 = 0.0;
        for blk in 0..self.c.len() {
            let r = &self.c[blk] - &aty[blk] - &s[blk];
            dres = dres.max(r.amax());
            c_inf = c_inf.max(self.c[blk].amax());
        }
        let fty = self.apply_ft(y);
        for (c, v) in self.free_c.iter().zip(&fty) {
            dres = dres.max((c - v).abs());
            c_inf = c_inf.max(c.abs());
        }
        let dres = dres / (1.0 + c_inf);
        let pobj = self.objective(x, z);
        let dobj: f64 = self.b.iter().zip(y).map(|(b, y)| b * y).sum();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        (pres, dres, gap)
    }

    /// Solves the problem. Deterministic: identical inputs give identical iterates.
    pub fn solve(&self, opts: &SdpOptions) -> SdpSolution {
        Solver::new(self).run(opts)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-scaled copy of the problem plus the factors needed to undo it.
struct Scaled {
    p: SdpProblem,
    row_scale: Vec<f64>,
    obj_scale: f64,
    rhs_scale: f64,
}

fn scale_problem(orig: &SdpProblem) -> Scaled {
    let m = orig.b.len();
    let mut sq = vec![0.0; m];
    for rows in &orig.a {
        for (k, e) in rows {
            sq[*k] += e.0.iter().map(|&(_, _, v)| v * v).sum::<f64>();
        }
    }
    for col in &orig.free_cols {
        for &(k, v) in col {
            sq[k] += v * v;
        }
    }
    let row_scale: Vec<f64> = sq.iter().map(|&s| if s > 0.0 { 1.0 / s.sqrt() } else { 1.0 }).collect();
    let mut p = orig.clone();
    for rows in &mut p.a {
        for (k, e) in rows.iter_mut() {
            for t in &mut e.0 {
                t.2 *= row_scale[*k];
            }
        }
    }
    for col in &mut p.free_cols {
        for t in col.iter_mut() {
            t.1 *= row_scale[t.0];
        }
    }
    let mut rhs_scale: f64 = 1.0;
    for k in 0..m {
        p.b[k] *= row_scale[k];
        rhs_scale = rhs_scale.max(p.b[k].abs());
    }
    for v in &mut p.b {
        *v /= rhs_scale;
    }
    let mut obj_scale: f64 = 1.0;
    for c in &p.c {
        obj_scale = obj_scale.max(c.amax());
    }
    for c in &p.free_c {
        obj_scale = obj_scale.max(c.abs());
    }
    for c in &mut p.c {
        *c /= obj_scale;
    }
    for c in &mut p.free_c {
        *c /= obj_scale;
    }
    Scaled { p, row_scale, obj_scale, rhs_scale }
}

/// Schur complement split into independent diagonal blocks.
struct Schur {
    comps: Vec<Vec<usize>>,
    /// Unregularized blocks, kept for residuals during refinement.
    mats: Vec<DMatrix<f64>>,
    factors: Vec<Cholesky<f64, Dyn>>,
}

impl Schur {
    fn components(p: &SdpProblem) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
        let m = p.b.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for rows in &p.a {
            if let Some((first, _)) = rows.first() {
                let r0 = find(&mut parent, *first);
                for (k, _) in rows.iter().skip(1) {
                    let r = find(&mut parent, *k);
                    if r != r0 {
                        parent[r] = r0;
                    }
                }
            }
        }
        // union-by-first-root keeps things deterministic; relabel compactly
        let mut label = vec![usize::MAX; m];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut loc = vec![(0, 0); m];
        for k in 0..m {
            let r = find(&mut parent, k);
            if label[r] == usize::MAX {
                label[r] = comps.len();
                comps.push(Vec::new());
            }
            let c = label[r];
            loc[k] = (c, comps[c].len());
            comps[c].push(k);
        }
        (loc, comps)
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (c, rows) in self.comps.iter().enumerate() {
            let x = DVector::from_iterator(rows.len(), rows.iter().map(|&k| v[k]));
            let y = &self.mats[c] * x;
            for (li, &k) in rows.iter().enumerate() {
                out[k] = y[li];
            }
        }
        out
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rhs.len()];
        for (c, rows) in self.comps.iter().enumerate() {
            let v = DVector::from_iterator(rows.len(), rows.iter().map(|&k| rhs[k]));
            let sol = self.factors[c].solve(&v);
            for (li, &k) in rows.iter().enumerate() {
                out[k] = sol[li];
            }
        }
        out
    }
}

fn regularized_cholesky(mut m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    if n == 0 {
        return Cholesky::new(m);
    }
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut delta = 0.0;
    for attempt in 0..12 {
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(ch);
        }
        let next = scale * 1e-14 * 10f64.powi(attempt);
        for i in 0..n {
            m[(i, i)] += next - delta;
        }
        delta = next;
    }
    None
}

/// Largest `α ≤ cap` with `X + α dX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(l: &DMatrix<f64>, dx: &DMatrix<f64>, cap: f64) -> f64 {
    let n = l.nrows();
    if n == 1 {
        let (x, d) = (l[(0, 0)] * l[(0, 0)], dx[(0, 0)]);
        return if d < 0.0 { (-x / d).min(cap) } else { cap };
    }
    let t = l.solve_lower_triangular(dx).expect("triangular factor");
    let w = l.solve_lower_triangular(&t.transpose()).expect("triangular factor");
    let w = (&w + w.transpose()) * 0.5;
    let Some(lmin) = crate::linalg::min_sym_eigenvalue(w) else { return 0.0 };
    if lmin < 0.0 {
        (-1.0 / lmin).min(cap)
    } else {
        cap
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct Solver<'a> {
    orig: &'a SdpProblem,
    sc: Scaled,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    z: Vec<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: Vec<f64>,
    dz: Vec<f64>,
}

/// Residuals of the scaled problem at the current iterate.
struct Residuals {
    rp: Vec<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: Vec<f64>,
}

/// Per-iteration quantities shared by predictor and corrector.
struct Linearization {
    zinv: Vec<DMatrix<f64>>,
    schur: Schur,
    /// `M⁻¹ F` column by column, and the factored `F' M⁻¹ F`.
    minv_f: Vec<Vec<f64>>,
    free_schur: Option<Cholesky<f64, Dyn>>,
    /// `A(X R_d Z)`, shared by both directions.
    a_xrz: Vec<f64>,
    xrz: Vec<DMatrix<f64>>,
    /// LU factors of the full saddle-point matrix, built on demand.
    dense: OnceCell<LU<f64, Dyn, Dyn>>,
}

impl<'a> Solver<'a> {
    fn new(orig: &'a SdpProblem) -> Self {
        Solver { orig, sc: scale_problem(orig) }
    }

    fn unscale(&self, it: &Iterate) -> (Vec<DMatrix<f64>>, Vec<f64>, Vec<f64>, Vec<DMatrix<f64>>) {
        let sc = &self.sc;
        let x = it.x.iter().map(|m| m * sc.rhs_scale).collect();
        let z = it.z.iter().map(|v| v * sc.rhs_scale).collect();
        let y = it.y.iter().zip(&sc.row_scale).map(|(v, r)| v * r * sc.obj_scale).collect();
        let s = it.s.iter().map(|m| m * sc.obj_scale).collect();
        (x, z, y, s)
    }

    fn initial(&self) -> Iterate {
        let p = &self.sc.p;
        let mut x = Vec::new();
        let mut s = Vec::new();
        for (blk, &n) in p.block_sizes.iter().enumerate() {
            let nf = n as f64;
            let mut xi: f64 = 10f64.max(nf.sqrt());
            let mut eta: f64 = 10f64.max(nf.sqrt()).max(p.c[blk].norm());
            for (k, e) in &p.a[blk] {
                let an = e.0.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt();
                xi = xi.max(nf * (1.0 + p.b[*k].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
            x.push(DMatrix::identity(n, n) * xi);
            s.push(DMatrix::identity(n, n) * eta);
        }
        Iterate { x, s, y: vec![0.0; p.b.len()], z: vec![0.0; p.free_c.len()] }
    }

    fn run(&self, opts: &SdpOptions) -> SdpSolution {
        let p = &self.sc.p;
        let m = p.b.len();
        let nfree = p.free_c.len();
        let nu: usize = p.block_sizes.iter().sum::<usize>().max(1);
        let inf_tol = opts.tol.max(1e-8);
        let mut it = self.initial();
        let (loc, comps) = Schur::components(p);
        let mut small_steps = 0;
        let mut status = SdpStatus::MaxIter;
        let mut iterations = 0;
        let mut best: Option<(f64, Iterate)> = None;
        let mut last_gain = 0;

        for iter in 0..=opts.max_iter {
            iterations = iter;
            let (x, z, y, s) = self.unscale(&it);
            let (pres, dres, gap) = self.orig.residuals(&x, &z, &y, &s);
            if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol {
                status = SdpStatus::Optimal;
                best = None;
                break;
            }
            let merit = pres.max(dres).max(gap);
            if merit.is_finite() && best.as_ref().is_none_or(|(b, _)| merit < *b) {
                if best.as_ref().is_none_or(|(b, _)| merit < 0.5 * *b) {
                    last_gain = iter;
                }
                best = Some((merit, it.clone()));
            }
            if iter - last_gain >= STALL_ITERS && best.as_ref().is_some_and(|(b, _)| *b <= STALL_MERIT) {
                status = SdpStatus::Stalled;
                break;
            }
            if let Some(st) = self.infeasibility(&it, inf_tol) {
                status = st;
                best = None;
                break;
            }
            if iter == opts.max_iter {
                break;
            }

            let mu = it.x.iter().zip(&it.s).map(|(x, s)| x.dot(s)).sum::<f64>() / nu as f64;
            let res = self.residual_vectors(&it);
            let Some(lin) = self.linearize(&it, &res, &loc, &comps) else {
                status = SdpStatus::NumericalFailure;
                break;
            };

            let pred = self.direction(&it, &lin, &res, 0.0, None);
            let (ap, ad) = self.step_lengths(&it, &pred);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mu_aff = it
                .x
                .iter()
                .zip(&pred.dx)
                .zip(it.s.iter().zip(&pred.ds))
                .map(|((x, dx), (s, ds))| (x + dx * ap).dot(&(s + ds * ad)))
                .sum::<f64>()
                / nu as f64;
            let ratio = (mu_aff / mu).clamp(0.0, 1.0);
            let sigma = if ratio.is_finite() { ratio.powi(3).max(1e-8) } else { 0.5 };
            let corr = self.direction(&it, &lin, &res, sigma * mu, Some(&pred));
            let (amp, amd) = self.step_lengths(&it, &corr);
            let gamma = 0.9 + 0.09 * ap.min(ad);
            let alpha_p = (gamma * amp).min(1.0);
            let alpha_d = (gamma * amd).min(1.0);
            if !(alpha_p.is_finite() && alpha_d.is_finite()) {
                status = SdpStatus::NumericalFailure;
                break;
            }

            if alpha_p.max(alpha_d) < 1e-10 {
                small_steps += 1;
                if small_steps >= 5 {
                    status = SdpStatus::NumericalFailure;
                    break;
                }
            } else {
                small_steps = 0;
            }
            for b in 0..it.x.len() {
                it.x[b] = sym(&(&it.x[b] + &corr.dx[b] * alpha_p));
                it.s[b] = sym(&(&it.s[b] + &corr.ds[b] * alpha_d));
            }
            for k in 0..m {
                it.y[k] += alpha_d * corr.dy[k];
            }
            for j in 0..nfree {
                it.z[j] += alpha_p * corr.dz[j];
            }
        }

        // an unfinished run reports the most accurate iterate it visited
        if let Some((_, b)) = best {
            it = b;
        }
        self.finish(&it, status, iterations)
    }

    fn finish(&self, it: &Iterate, status: SdpStatus, iterations: usize) -> SdpSolution {
        let (x, z, y, s) = self.unscale(it);
        let (pres, dres, gap) = self.orig.residuals(&x, &z, &y, &s);
        let finite = x.iter().chain(&s).all(|m| m.iter().all(|v| v.is_finite()))
            && y.iter().chain(&z).all(|v| v.is_finite());
        let status = if finite { status } else { SdpStatus::NumericalFailure };
        let primal_obj = self.orig.objective(&x, &z);
        let dual_obj = dot(&self.orig.b, &y);
        SdpSolution {
            status,
            x,
            z,
            y,
            s,
            primal_obj,
            dual_obj,
            primal_res: pres,
            dual_res: dres,
            gap,
            iterations,
        }
    }

    /// Ray tests: a diverging dual objective with `A*y + S` comparatively
    /// small certifies primal infeasibility, and symmetrically for the primal.
    fn infeasibility(&self, it: &Iterate, tol: f64) -> Option<SdpStatus> {
        let p = &self.sc.p;
        let by = dot(&p.b, &it.y);
        if by > 0.0 {
            let aty = p.apply_at(&it.y);
            let mut r: f64 = 0.0;
            for b in 0..aty.len() {
                r = r.max((&aty[b] + &it.s[b]).amax());
            }
            r = r.max(inf_norm(&p.apply_ft(&it.y)));
            if r <= tol * by {
                return Some(SdpStatus::PrimalInfeasible);
            }
        }
        let cx = p.objective(&it.x, &it.z);
        if cx < 0.0 {
            let ax = p.apply_a(&it.x, &it.z);
            if inf_norm(&ax) <= tol * (-cx) {
                return Some(SdpStatus::DualInfeasible);
            }
        }
        None
    }

    fn residual_vectors(&self, it: &Iterate) -> Residuals {
        let p = &self.sc.p;
        let ax = p.apply_a(&it.x, &it.z);
        let rp = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = p.apply_at(&it.y);
        let rd = (0..p.c.len()).map(|b| &p.c[b] - &aty[b] - &it.s[b]).collect();
        let fty = p.apply_ft(&it.y);
        let rf = p.free_c.iter().zip(&fty).map(|(c, v)| c - v).collect();
        Residuals { rp, rd, rf }
    }

    fn linearize(
        &self,
        it: &Iterate,
        res: &Residuals,
        loc: &[(usize, usize)],
        comps: &[Vec<usize>],
    ) -> Option<Linearization> {
        let p = &self.sc.p;
        let m = p.b.len();
        let mut zinv = Vec::with_capacity(it.s.len());
        for s in &it.s {
            let ch = Cholesky::new(s.clone())?;
            zinv.push(sym(&ch.inverse()));
        }
        // Schur complement M_kl = tr(A_k X A_l Z), assembled per component
        let mut mats: Vec<DMatrix<f64>> = comps.iter().map(|c| DMatrix::zeros(c.len(), c.len())).collect();
        for (blk, rows) in p.a.iter().enumerate() {
            let n = p.block_sizes[blk];
            let x = &it.x[blk];
            let z = &zinv[blk];
            let mut t = DMatrix::<f64>::zeros(n, n);
            let mut g = DMatrix::<f64>::zeros(n, n);
            let mut cols: Vec<usize> = Vec::new();
            for (li, (l, el)) in rows.iter().enumerate() {
                // T = X A_l on its nonzero columns, then G = T Z
                cols.clear();
                for &(pp, q, a) in &el.0 {
                    if !cols.contains(&q) {
                        cols.push(q);
                        t.column_mut(q).fill(0.0);
                    }
                    t.column_mut(q).axpy(a, &x.column(pp), 1.0);
                }
                g.fill(0.0);
                for &q in &cols {
                    for i in 0..n {
                        let zqi = z[(q, i)];
                        if zqi != 0.0 {
                            g.column_mut(i).axpy(zqi, &t.column(q), 1.0);
                        }
                    }
                }
                let (cl, il) = loc[*l];
                for (k, ek) in rows.iter().skip(li) {
                    let (_, ik) = loc[*k];
                    let v: f64 = ek.0.iter().map(|&(i, j, a)| a * g[(j, i)]).sum();
                    mats[cl][(ik, il)] += v;
                    if ik != il {
                        mats[cl][(il, ik)] += v;
                    }
                }
            }
        }
        let mut factors = Vec::with_capacity(mats.len());
        for mat in &mut mats {
            // rows that touch no cone block only constrain free variables
            for i in 0..mat.nrows() {
                if mat[(i, i)] == 0.0 {
                    mat[(i, i)] = 1e-12;
                }
            }
            factors.push(regularized_cholesky(mat.clone())?);
        }
        let schur = Schur { comps: comps.to_vec(), mats, factors };

        let nfree = p.free_c.len();
        let mut minv_f = Vec::with_capacity(nfree);
        for col in &p.free_cols {
            let mut dense = vec![0.0; m];
            for &(k, v) in col {
                dense[k] = v;
            }
            minv_f.push(schur.solve(&dense));
        }
        let free_schur = if nfree > 0 {
            let mut gm = DMatrix::zeros(nfree, nfree);
            for i in 0..nfree {
                for j in 0..=i {
                    let v: f64 = p.free_cols[i].iter().map(|&(k, a)| a * minv_f[j][k]).sum();
                    gm[(i, j)] = v;
                    gm[(j, i)] = v;
                }
            }
            Some(regularized_cholesky(gm)?)
        } else {
            None
        };

        let xrz: Vec<DMatrix<f64>> =
            (0..p.c.len()).map(|b| sym(&(&it.x[b] * &res.rd[b] * &zinv[b]))).collect();
        let mut a_xrz = vec![0.0; m];
        p.apply_a_into(&xrz, &mut a_xrz);
        Some(Linearization { zinv, schur, minv_f, free_schur, a_xrz, xrz, dense: OnceCell::new() })
    }

    /// Solves `[M F; F' 0] [dy; dz] = [r1; r2]`, with a few rounds of
    /// iterative refinement against the unregularized `M`. When `M` is
    /// singular the elimination through `M⁻¹` loses accuracy; the whole
    /// system is then solved densely.
    fn kkt_solve(&self, lin: &Linearization, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dy, mut dz) = self.kkt_solve_once(lin, r1, r2);
        let norm = inf_norm(r1).max(inf_norm(r2));
        let mut last = f64::INFINITY;
        for round in 0..4 {
            let (e1, e2) = self.kkt_residual(lin, r1, r2, &dy, &dz);
            let err = inf_norm(&e1).max(inf_norm(&e2));
            if err <= 1e-15 * norm {
                break;
            }
            if round == 3 || err >= 0.5 * last {
                let small = r1.len() + r2.len() <= KKT_SMALL;
                let limit = if small { KKT_FALLBACK } else { KKT_FALLBACK_LARGE };
                if err > limit * norm && !dz.is_empty() {
                    if let Some(sol) = self.kkt_solve_dense(lin, r1, r2) {
                        return sol;
                    }
                }
                break;
            }
            last = err;
            let (cy, cz) = self.kkt_solve_once(lin, &e1, &e2);
            for (a, b) in dy.iter_mut().zip(&cy) {
                *a += b;
            }
            for (a, b) in dz.iter_mut().zip(&cz) {
                *a += b;
            }
        }
        (dy, dz)
    }

    fn kkt_residual(&self, lin: &Linearization, r1: &[f64], r2: &[f64], dy: &[f64], dz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = &self.sc.p;
        let mut e1 = lin.schur.mul(dy);
        for (j, col) in p.free_cols.iter().enumerate() {
            for &(k, a) in col {
                e1[k] += a * dz[j];
            }
        }
        let e1 = r1.iter().zip(&e1).map(|(r, e)| r - e).collect();
        let fty = p.apply_ft(dy);
        let e2 = r2.iter().zip(&fty).map(|(r, e)| r - e).collect();
        (e1, e2)
    }

    /// LU solve of the assembled saddle-point system, factored once per
    /// linearization.
    fn kkt_solve_dense(&self, lin: &Linearization, r1: &[f64], r2: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let p = &self.sc.p;
        let (m, nf) = (r1.len(), r2.len());
        let lu = lin.dense.get_or_init(|| {
            let mut k = DMatrix::<f64>::zeros(m + nf, m + nf);
            for (c, rows) in lin.schur.comps.iter().enumerate() {
                for (a, &ra) in rows.iter().enumerate() {
                    for (b, &rb) in rows.iter().enumerate() {
                        k[(ra, rb)] = lin.schur.mats[c][(a, b)];
                    }
                }
            }
            for (j, col) in p.free_cols.iter().enumerate() {
                for &(row, a) in col {
                    k[(row, m + j)] = a;
                    k[(m + j, row)] = a;
                }
            }
            k.lu()
        });
        let rhs = DVector::from_iterator(m + nf, r1.iter().chain(r2).copied());
        let sol = lu.solve(&rhs)?;
        if !sol.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some((sol.rows(0, m).iter().copied().collect(), sol.rows(m, nf).iter().copied().collect()))
    }

    fn kkt_solve_once(&self, lin: &Linearization, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = &self.sc.p;
        let u = lin.schur.solve(r1);
        let Some(fs) = &lin.free_schur else {
            return (u, Vec::new());
        };
        let nfree = p.free_c.len();
        // (F' M⁻¹ F) dz = F' M⁻¹ r1 - r2
        let rhs = DVector::from_iterator(
            nfree,
            (0..nfree).map(|j| p.free_cols[j].iter().map(|&(k, a)| a * u[k]).sum::<f64>() - r2[j]),
        );
        let dz = fs.solve(&rhs);
        let mut dy = u;
        for j in 0..nfree {
            for (k, v) in lin.minv_f[j].iter().enumerate() {
                dy[k] -= v * dz[j];
            }
        }
        (dy, dz.iter().copied().collect())
    }

    fn direction(
        &self,
        it: &Iterate,
        lin: &Linearization,
        res: &Residuals,
        target: f64,
        pred: Option<&Direction>,
    ) -> Direction {
        let p = &self.sc.p;
        let nb = p.c.len();
        let mut rc: Vec<DMatrix<f64>> = (0..nb).map(|b| &lin.zinv[b] * target - &it.x[b]).collect();
        if let Some(pd) = pred {
            for b in 0..nb {
                rc[b] -= sym(&(&pd.dx[b] * &pd.ds[b] * &lin.zinv[b]));
            }
        }
        let mut a_rc = vec![0.0; res.rp.len()];
        p.apply_a_into(&rc, &mut a_rc);
        let r1: Vec<f64> = (0..res.rp.len()).map(|k| res.rp[k] - a_rc[k] + lin.a_xrz[k]).collect();
        let (dy, dz) = self.kkt_solve(lin, &r1, &res.rf);
        let aty = p.apply_at(&dy);
        let ds: Vec<DMatrix<f64>> = (0..nb).map(|b| &res.rd[b] - &aty[b]).collect();
        let dx: Vec<DMatrix<f64>> = (0..nb)
            .map(|b| &rc[b] - &lin.xrz[b] + sym(&(&it.x[b] * &aty[b] * &lin.zinv[b])))
            .collect();
        Direction { dx, ds, dy, dz }
    }

    /// Maximal primal and dual step lengths (unbounded directions give `f64::MAX`).
    fn step_lengths(&self, it: &Iterate, d: &Direction) -> (f64, f64) {
        let mut ap = f64::MAX;
        let mut ad = f64::MAX;
        for b in 0..it.x.len() {
            ap = match Cholesky::new(it.x[b].clone()) {
                Some(ch) => max_step(&ch.l(), &d.dx[b], ap),
                None => 0.0,
            };
            ad = match Cholesky::new(it.s[b].clone()) {
                Some(ch) => max_step(&ch.l(), &d.ds[b], ad),
                None => 0.0,
            };
        }
        (ap, ad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_forced_by_equality() {
        let mut bld = SdpBuilder::new(1);
        let blk = bld.add_block(1);
        bld.add_a(0, blk, 0, 0, 1.0);
        bld.set_b(0, 1.0);
        bld.add_c(blk, 0, 0, 1.0);
        let sol = bld.build().solve(&SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_obj - 1.0).abs() < 1e-8);
    }

    #[test]
    fn min_trace_with_fixed_offdiagonal() {
        let mut bld = SdpBuilder::new(1);
        let blk = bld.add_block(2);
        bld.add_a(0, blk, 0, 1, 1.0);
        bld.set_b(0, 1.0);
        bld.add_c(blk, 0, 0, 1.0);
        bld.add_c(blk, 1, 1, 1.0);
        let sol = bld.build().solve(&SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_obj - 2.0).abs() < 1e-7);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((sol.x[0][(i, j)] - 1.0).abs() < 1e-4);
        }
        assert!(sol.primal_res <= 1e-8 && sol.dual_res <= 1e-8 && sol.gap <= 1e-8);
    }

    #[test]
    fn free_variable_and_lp_blocks() {
        // min z  s.t. z - x1 = 1, x1 >= 0  -> z = 1
        let mut bld = SdpBuilder::new(1);
        let blk = bld.add_block(1);
        let z = bld.add_free(1.0);
        bld.add_a(0, blk, 0, 0, -1.0);
        bld.add_free_coef(0, z, 1.0);
        bld.set_b(0, 1.0);
        let sol = bld.build().solve(&SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.z[0] - 1.0).abs() < 1e-7, "{:?}", sol.z);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x >= 0, x = -1
        let mut bld = SdpBuilder::new(1);
        let blk = bld.add_block(1);
        bld.add_a(0, blk, 0, 0, 1.0);
        bld.set_b(0, -1.0);
        let sol = bld.build().solve(&SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -z  s.t. z - x = 0, x >= 0
        let mut bld = SdpBuilder::new(1);
        let blk = bld.add_block(1);
        let z = bld.add_free(-1.0);
        bld.add_a(0, blk, 0, 0, -1.0);
        bld.add_free_coef(0, z, 1.0);
        let sol = bld.build().solve(&SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::DualInfeasible);
    }

    #[test]
    fn deterministic_iterates() {
        let mut bld = SdpBuilder::new(2);
        let blk = bld.add_block(3);
        bld.add_a(0, blk, 0, 1, 1.0);
        bld.add_a(1, blk, 2, 2, 1.0);
        bld.set_b(0, 0.3);
        bld.set_b(1, 2.0);
        for i in 0..3 {
            bld.add_c(blk, i, i, 1.0 + i as f64);
        }
        let prob = bld.build();
        let a = prob.solve(&SdpOptions::default());
        let b = prob.solve(&SdpOptions::default());
        assert_eq!(a.y, b.y);
        assert_eq!(a.iterations, b.iterations);
    }
}
