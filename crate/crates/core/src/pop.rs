//! The Moment-SOS hierarchy for a single polynomial optimization problem.
//!
//! [`pop_minimize`] solves relaxations of increasing order, tests flat
//! truncation on the moment matrix and extracts the global minimizers with the
//! Henrion–Lasserre procedure. Extracted points are refined by a few Newton
//! steps on the KKT system of the active constraints, which takes them from
//! SDP accuracy to machine accuracy whenever the active set is nondegenerate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::moment::{build_relaxation, min_order, Tms};
use crate::poly::{Monomial, Polynomial, Var};
use crate::sdp::{SdpOptions, SdpStatus};

/// Largest SDP residual at which an unfinished solve still counts; points
/// extracted from it must pass the usual feasibility and value checks.
const USABLE_ACCURACY: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub struct PopOptions {
    /// Highest relaxation order tried; `None` means `d_0 + 3`.
    pub d_max: Option<u32>,
    pub rank_tol: f64,
    pub feastol: f64,
    pub opt_tol: f64,
    pub sdp: SdpOptions,
    /// Seed of the random combination used during extraction.
    pub seed: u64,
}

impl Default for PopOptions {
    fn default() -> Self {
        PopOptions { d_max: None, rank_tol: 1e-6, feastol: 1e-8, opt_tol: 1e-6, sdp: SdpOptions::default(), seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PopStatus {
    /// The relaxation (hence the problem) has no feasible point.
    Infeasible,
    MinimizersExtracted,
    /// Only a lower bound is available: the problem is unbounded below, or a
    /// higher order failed numerically.
    BoundOnly,
    /// Every order up to the cap was tried without extracting a minimizer.
    OrderCapReached,
}

#[derive(Clone, Debug)]
pub struct PopResult {
    pub status: PopStatus,
    /// Sorted variables; coordinates of minimizers follow this order.
    pub vars: Vec<Var>,
    /// Order of the last relaxation solved.
    pub order: u32,
    /// `ϑ_d` at `order`; `-∞` when the problem is unbounded below.
    pub lower_bound: f64,
    pub unbounded: bool,
    /// `(d, ϑ_d)` for every order solved.
    pub bounds: Vec<(u32, f64)>,
    pub minimizers: Vec<Vec<f64>>,
    /// Feasibility residual of each minimizer.
    pub residuals: Vec<f64>,
    /// Rank `r` and level `t` at which flat truncation held.
    pub rank: Option<usize>,
    pub level: Option<u32>,
    /// False when the minimizer was accepted without a flat-truncation
    /// certificate (first-order moments that turned out feasible and optimal).
    pub flat: bool,
}

impl PopResult {
    /// Objective value at the first minimizer, if any.
    pub fn best_point(&self) -> Option<&[f64]> {
        self.minimizers.first().map(|v| v.as_slice())
    }
}

/// Number of singular values above `tol * max(σ_max, 1)`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    // undecidable ranks count as full, so flat truncation fails safely
    let Some(sv) = linalg::singular_values(m.clone()) else { return m.nrows().min(m.ncols()) };
    let cut = tol * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlatTruncation {
    pub holds: bool,
    /// Numerical rank of `M_t[y]`.
    pub rank: usize,
}

/// Tests `rank M_t[y] = rank M_{t-d1}[y]`.
pub fn flat_truncation(y: &Tms, d1: u32, t: u32, rank_tol: f64) -> Result<FlatTruncation> {
    if t < d1 || 2 * t > y.degree() {
        return Err(Error::Degree(format!(
            "flat truncation at t = {t} needs d1 <= t and 2t <= {}",
            y.degree()
        )));
    }
    let hi = numerical_rank(&y.moment_matrix(t)?, rank_tol);
    let lo = numerical_rank(&y.moment_matrix(t - d1)?, rank_tol);
    Ok(FlatTruncation { holds: hi == lo, rank: hi })
}

/// Recovers the `r` atoms of a flat moment matrix `M_t[y]`.
///
/// Points are returned in lexicographic order, coordinates following
/// `y.vars()`.
pub fn extract_minimizers(y: &Tms, t: u32, r: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let vars = y.vars().to_vec();
    let n = vars.len();
    let m = y.moment_matrix(t)?;
    let s = m.nrows();
    if r == 0 || r > s {
        return Err(Error::Numerical(format!("cannot extract {r} atoms from a {s}×{s} moment matrix")));
    }
    let eig = linalg::sym_eigen(m).ok_or_else(|| Error::Numerical("eigendecomposition of the moment matrix failed".into()))?;
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = DMatrix::zeros(s, r);
    for (j, &col) in order.iter().take(r).enumerate() {
        let lam = eig.eigenvalues[col];
        if lam <= 0.0 {
            return Err(Error::Numerical("moment matrix has fewer positive eigenvalues than its rank".into()));
        }
        v.set_column(j, &(eig.eigenvectors.column(col) * lam.sqrt()));
    }

    // column echelon form with pivots on the lowest possible rows
    let tol = 1e-8 * v.amax().max(1.0);
    let mut k = 0;
    let mut pivots = Vec::with_capacity(r);
    for i in 0..s {
        if k == r {
            break;
        }
        let (mut jmax, mut best) = (k, 0.0);
        for j in k..r {
            if v[(i, j)].abs() > best {
                best = v[(i, j)].abs();
                jmax = j;
            }
        }
        if best <= tol {
            for j in k..r {
                v[(i, j)] = 0.0;
            }
            continue;
        }
        v.swap_columns(k, jmax);
        let p = v[(i, k)];
        let col = v.column(k) / p;
        v.set_column(k, &col);
        for j in 0..r {
            if j != k {
                let f = v[(i, j)];
                if f != 0.0 {
                    let upd = v.column(j) - &col * f;
                    v.set_column(j, &upd);
                }
            }
        }
        pivots.push(i);
        k += 1;
    }
    if pivots.len() < r {
        return Err(Error::Numerical("column echelon form lost rank".into()));
    }

    let basis = crate::poly::basis(&vars, t);
    let row_of = |mono: &Monomial| basis.iter().position(|b| b == mono);
    let mut mult = Vec::with_capacity(n);
    for &var in &vars {
        let mut ni = DMatrix::zeros(r, r);
        for (j, &pv) in pivots.iter().enumerate() {
            let shifted = basis[pv].mul(&Monomial::var(var));
            let row = row_of(&shifted).ok_or_else(|| {
                Error::Numerical(format!("pivot monomial {} has no shift inside the basis", basis[pv]))
            })?;
            ni.set_row(j, &v.row(row));
        }
        mult.push(ni);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut comb = DMatrix::zeros(r, r);
    for (w, ni) in weights.iter().zip(&mult) {
        comb += ni * (*w / total);
    }
    let (q, _) = nalgebra::linalg::Schur::new(comb).unpack();
    let mut points: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            let qj = q.column(j);
            mult.iter().map(|ni| qj.dot(&(ni * qj))).collect()
        })
        .collect();
    points.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(points)
}

/// Objective and constraints with first and second derivatives, evaluated
/// at points indexed by sorted variable position.
struct Problem<'a> {
    vars: &'a [Var],
    f: Deriv,
    ineqs: Vec<Deriv>,
    eqs: Vec<Deriv>,
}

struct Deriv {
    p: Polynomial,
    grad: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl Deriv {
    fn new(p: &Polynomial, vars: &[Var]) -> Self {
        let grad: Vec<Polynomial> = vars.iter().map(|&v| p.diff(v)).collect();
        let hess = grad.iter().map(|g| vars.iter().map(|&v| g.diff(v)).collect()).collect();
        Deriv { p: p.clone(), grad, hess }
    }
}

impl<'a> Problem<'a> {
    fn new(vars: &'a [Var], f: &Polynomial, ineqs: &[Polynomial], eqs: &[Polynomial]) -> Self {
        Problem {
            vars,
            f: Deriv::new(f, vars),
            ineqs: ineqs.iter().map(|g| Deriv::new(g, vars)).collect(),
            eqs: eqs.iter().map(|h| Deriv::new(h, vars)).collect(),
        }
    }

    fn eval(&self, p: &Polynomial, u: &[f64]) -> f64 {
        p.eval(|v| self.vars.binary_search(&v).ok().map(|i| u[i])).unwrap_or(f64::NAN)
    }

    fn residual(&self, u: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for g in &self.ineqs {
            r = r.max(-self.eval(&g.p, u));
        }
        for h in &self.eqs {
            r = r.max(self.eval(&h.p, u).abs());
        }
        r
    }

    fn grad(&self, d: &Deriv, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.vars.len(), d.grad.iter().map(|g| self.eval(g, u)))
    }

    fn hess(&self, d: &Deriv, u: &[f64]) -> DMatrix<f64> {
        let n = self.vars.len();
        DMatrix::from_fn(n, n, |i, j| self.eval(&d.hess[i][j], u))
    }

    /// Constraints treated as equalities near `u`: every equality plus the
    /// nearly active inequalities.
    fn active(&self, u: &[f64]) -> Vec<&Deriv> {
        let mut act: Vec<&Deriv> = self.eqs.iter().collect();
        for g in &self.ineqs {
            if self.eval(&g.p, u).abs() <= 1e-4 {
                act.push(g);
            }
        }
        act
    }

    /// Newton iterations on `grad f = sum lam_k grad c_k`, `c_k = 0` started at `u`.
    fn kkt_newton(&self, u: &[f64], act: &[&Deriv]) -> (Vec<f64>, DVector<f64>) {
        let n = u.len();
        let m = act.len();
        let mut w = u.to_vec();
        let mut lam = if m > 0 {
            let j = DMatrix::from_fn(m, n, |k, i| self.eval(&act[k].grad[i], &w));
            let gf = self.grad(&self.f, &w);
            linalg::svd_solve(j.transpose(), &gf, 1e-12).unwrap_or_else(|| DVector::zeros(m))
        } else {
            DVector::zeros(0)
        };
        for _ in 0..30 {
            let mut kkt = DMatrix::zeros(n + m, n + m);
            let mut rhs = DVector::zeros(n + m);
            let mut h = self.hess(&self.f, &w);
            let mut r = self.grad(&self.f, &w);
            for (k, c) in act.iter().enumerate() {
                h -= self.hess(c, &w) * lam[k];
                let gc = self.grad(c, &w);
                r -= &gc * lam[k];
                for i in 0..n {
                    kkt[(n + k, i)] = gc[i];
                    kkt[(i, n + k)] = -gc[i];
                }
                rhs[n + k] = -self.eval(&c.p, &w);
            }
            kkt.view_mut((0, 0), (n, n)).copy_from(&h);
            rhs.rows_mut(0, n).copy_from(&(-r));
            let Some(step) = linalg::svd_solve(kkt, &rhs, 1e-13) else { break };
            for i in 0..n {
                w[i] += step[i];
            }
            for k in 0..m {
                lam[k] += step[n + k];
            }
            if step.amax() <= 1e-15 * (1.0 + w.iter().fold(0.0f64, |a, x| a.max(x.abs()))) {
                break;
            }
        }
        (w, lam)
    }

    /// Newton's method on the KKT system of the active constraints; falls
    /// back to a least-squares projection onto them, then to `u` itself.
    /// Inequalities whose multiplier comes out negative are released and the
    /// Newton solve is repeated without them.
    fn polish(&self, u: &[f64], feastol: f64) -> Vec<f64> {
        let f_raw = self.eval(&self.f.p, u);
        let accept = |w: &[f64], bound: f64| {
            w.iter().all(|x| x.is_finite())
                && self.residual(w) <= feastol
                && w.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= 1e-3
                && self.eval(&self.f.p, w) <= bound
        };
        let tolf = 1e-6 * (1.0 + f_raw.abs());
        let mut act = self.active(u);
        loop {
            let (w, lam) = self.kkt_newton(u, &act);
            let scale = 1.0 + self.grad(&self.f, &w).amax();
            let worst = act
                .iter()
                .enumerate()
                .filter(|(_, c)| self.ineqs.iter().any(|g| std::ptr::eq(g, **c)))
                .map(|(k, _)| (k, lam[k]))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((k, l)) if l < -1e-12 * scale => {
                    act.remove(k);
                }
                _ => {
                    if accept(&w, f_raw + tolf) {
                        return w;
                    }
                    break;
                }
            }
        }
        let m = act.len();
        let n = u.len();

        // projection onto the active constraints
        let mut w = u.to_vec();
        for _ in 0..30 {
            if m == 0 {
                break;
            }
            let j = DMatrix::from_fn(m, n, |k, i| self.eval(&act[k].grad[i], &w));
            let c = DVector::from_iterator(m, act.iter().map(|c| self.eval(&c.p, &w)));
            if c.amax() <= 1e-15 {
                break;
            }
            let Some(step) = linalg::svd_solve(j, &c, 1e-13) else { break };
            for i in 0..n {
                w[i] -= step[i];
            }
        }
        if accept(&w, f_raw + tolf) {
            return w;
        }
        u.to_vec()
    }
}

/// Solves `min f  s.t.  g_j >= 0, h_k = 0` over `vars` with Algorithm-3.2 style
/// order escalation.
pub fn pop_minimize(
    vars: &[Var],
    f: &Polynomial,
    ineqs: &[Polynomial],
    eqs: &[Polynomial],
    opts: &PopOptions,
) -> Result<PopResult> {
    let mut vars = vars.to_vec();
    vars.sort();
    vars.dedup();
    if vars.is_empty() {
        return Err(Error::Input("no decision variables".into()));
    }
    for p in std::iter::once(f).chain(ineqs).chain(eqs) {
        if let Some(v) = p.vars().into_iter().find(|v| vars.binary_search(v).is_err()) {
            return Err(Error::Input(format!("variable {v} is not a decision variable")));
        }
    }
    let mut result = PopResult {
        status: PopStatus::Infeasible,
        vars: vars.clone(),
        order: 0,
        lower_bound: f64::INFINITY,
        unbounded: false,
        bounds: Vec::new(),
        minimizers: Vec::new(),
        residuals: Vec::new(),
        rank: None,
        level: None,
        flat: false,
    };

    // constant constraints are either vacuous or make the problem infeasible;
    // the others are scaled to unit largest coefficient, which keeps
    // constraints with vanishing coefficients from sinking below feastol
    let mut gs = Vec::new();
    for g in ineqs {
        match g.as_constant() {
            Some(c) if c >= -opts.feastol => {}
            Some(_) => return Ok(result),
            None => gs.push(g.scale(1.0 / g.max_abs_coeff())),
        }
    }
    let mut hs = Vec::new();
    for h in eqs {
        match h.as_constant() {
            Some(c) if c.abs() <= opts.feastol => {}
            Some(_) => return Ok(result),
            None => hs.push(h.scale(1.0 / h.max_abs_coeff())),
        }
    }

    let d0 = min_order(f, &gs, &hs);
    let d1 = gs.iter().chain(&hs).map(|p| p.degree().div_ceil(2)).max().unwrap_or(1).max(1);
    let d_max = opts.d_max.unwrap_or(d0 + 3).max(d0);
    let prob = Problem::new(&vars, f, &gs, &hs);
    let f_at = |u: &[f64]| prob.eval(f, u);
    let mut last: Option<(u32, f64, Tms)> = None;
    let mut failure: Option<String> = None;

    for d in d0..=d_max {
        let relax = build_relaxation(&vars, f, &gs, &hs, d)?;
        let sol = relax.sdp.solve(&opts.sdp);
        match sol.status {
            SdpStatus::DualInfeasible => {
                result.status = PopStatus::Infeasible;
                result.order = d;
                return Ok(result);
            }
            SdpStatus::PrimalInfeasible => {
                // an unbounded relaxation says nothing about higher orders
                result.order = d;
                result.bounds.push((d, f64::NEG_INFINITY));
                if d == d_max {
                    result.status = PopStatus::BoundOnly;
                    result.lower_bound = f64::NEG_INFINITY;
                    result.unbounded = true;
                    return Ok(result);
                }
                continue;
            }
            SdpStatus::Optimal => {}
            SdpStatus::MaxIter | SdpStatus::Stalled | SdpStatus::NumericalFailure => {
                // inaccurate but usable solves still carry information
                if !(sol.accuracy() <= USABLE_ACCURACY) {
                    if last.is_some() {
                        result.status = PopStatus::BoundOnly;
                        break;
                    }
                    failure = Some(format!("order-{d} relaxation: SDP stopped with {:?}", sol.status));
                    continue;
                }
            }
        }
        let theta = relax.value(&sol);
        result.order = d;
        result.lower_bound = theta;
        result.bounds.push((d, theta));
        let y = relax.moments(&sol);

        for t in d1..=d {
            let ft = flat_truncation(&y, d1, t, opts.rank_tol)?;
            if !ft.holds {
                continue;
            }
            let Ok(points) = extract_minimizers(&y, t, ft.rank, opts.seed) else { continue };
            let accepted = accept_points(&prob, points, theta, opts, &f_at);
            if !accepted.is_empty() {
                result.status = PopStatus::MinimizersExtracted;
                result.residuals = accepted.iter().map(|u| prob.residual(u)).collect();
                result.minimizers = accepted;
                result.rank = Some(ft.rank);
                result.level = Some(t);
                result.flat = true;
                return Ok(result);
            }
        }
        last = Some((d, theta, y));
        result.status = PopStatus::OrderCapReached;
    }

    let Some((_, theta, y)) = last else {
        // nothing solved to usable accuracy
        if result.bounds.iter().any(|b| b.1 == f64::NEG_INFINITY) {
            result.status = PopStatus::BoundOnly;
            result.lower_bound = f64::NEG_INFINITY;
            result.unbounded = true;
            return Ok(result);
        }
        return Err(Error::Numerical(failure.unwrap_or_else(|| "no relaxation was solved".into())));
    };
    // no certificate: the first-order moments may still be a minimizer
    {
        let u: Vec<f64> = vars.iter().map(|&v| y.get(&Monomial::var(v)).unwrap_or(0.0)).collect();
        let accepted = accept_points(&prob, vec![u], theta, opts, &f_at);
        if !accepted.is_empty() {
            result.status = PopStatus::MinimizersExtracted;
            result.residuals = accepted.iter().map(|u| prob.residual(u)).collect();
            result.minimizers = accepted;
            result.rank = Some(1);
            result.flat = false;
        }
    }
    Ok(result)
}

/// Polishes candidates and keeps the feasible ones whose value matches the bound.
fn accept_points(
    prob: &Problem,
    points: Vec<Vec<f64>>,
    theta: f64,
    opts: &PopOptions,
    f_at: &dyn Fn(&[f64]) -> f64,
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for u in points {
        let w = prob.polish(&u, opts.feastol);
        if prob.residual(&w) <= opts.feastol
            && (f_at(&w) - theta).abs() <= opts.opt_tol * (1.0 + theta.abs())
            && !out.iter().any(|o| o.iter().zip(&w).all(|(a, b)| (a - b).abs() <= 1e-9))
        {
            out.push(w);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: usize) -> Var {
        Var::new(0, c)
    }

    fn x(c: usize) -> Polynomial {
        Polynomial::var(v(c))
    }

    fn solve(n: usize, f: &Polynomial, g: &[Polynomial], h: &[Polynomial]) -> PopResult {
        let vars: Vec<Var> = (0..n).map(v).collect();
        pop_minimize(&vars, f, g, h, &PopOptions::default()).unwrap()
    }

    #[test]
    fn prox_subproblem_on_a_ray() {
        let f = x(0) + 0.001 * (x(0) - 1.0).pow(2);
        let r = solve(1, &f, &[x(0) - 1.0], &[]);
        assert_eq!(r.status, PopStatus::MinimizersExtracted);
        assert!((r.minimizers[0][0] - 1.0).abs() < 1e-8);
        assert!((r.lower_bound - 1.0).abs() < 1e-7);
    }

    #[test]
    fn prox_subproblem_on_two_points() {
        let f = x(0) + 0.001 * (x(0) - 1.0).pow(2);
        let r = solve(1, &f, &[], &[x(0) * x(0) - 1.0]);
        assert_eq!(r.status, PopStatus::MinimizersExtracted);
        assert_eq!(r.minimizers.len(), 1);
        assert!((r.minimizers[0][0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn empty_interval_is_infeasible() {
        let r = solve(1, &x(0), &[x(0) - 1.0, -x(0)], &[]);
        assert_eq!(r.status, PopStatus::Infeasible);
    }

    #[test]
    fn violated_constant_constraint_is_infeasible() {
        let r = solve(1, &x(0), &[Polynomial::constant(-1.0)], &[]);
        assert_eq!(r.status, PopStatus::Infeasible);
    }

    #[test]
    fn unbounded_objective_is_bound_only() {
        let r = solve(1, &x(0), &[x(0) * x(0) - 1.0], &[]);
        assert_eq!(r.status, PopStatus::BoundOnly);
        assert!(r.unbounded && r.lower_bound == f64::NEG_INFINITY);
    }

    #[test]
    fn double_well_has_two_minimizers() {
        let f = (x(0) * x(0) - 1.0).pow(2);
        let r = solve(1, &f, &[], &[]);
        assert_eq!(r.status, PopStatus::MinimizersExtracted);
        assert_eq!(r.rank, Some(2));
        assert_eq!(r.minimizers.len(), 2);
        assert!((r.minimizers[0][0] + 1.0).abs() < 1e-8);
        assert!((r.minimizers[1][0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn closed_form_minimizer_of_the_prox_step() {
        let (c, tau) = (0.5, 0.02);
        let f = x(0) * x(0) - c * x(0) + tau * (x(0) - c).pow(2);
        let g = [3.0 - (c + 1.0) * (c + 1.0) - x(0) * x(0), x(0)];
        let r = solve(1, &f, &g, &[]);
        let want = ((1.0 + 2.0 * tau) / (2.0 + 2.0 * tau) * c).min((3.0 - (c + 1.0) * (c + 1.0)).sqrt());
        assert_eq!(r.status, PopStatus::MinimizersExtracted);
        assert!((r.minimizers[0][0] - want).abs() < 1e-8);
    }

    #[test]
    fn point_mass_is_flat() {
        let vars = [v(0), v(1)];
        let y = Tms::point_mass(&vars, 4, &[0.3, -0.7]).unwrap();
        let ft = flat_truncation(&y, 1, 1, 1e-6).unwrap();
        assert!(ft.holds);
        assert_eq!(ft.rank, 1);
        let pts = extract_minimizers(&y, 1, 1, 0).unwrap();
        assert!((pts[0][0] - 0.3).abs() < 1e-12 && (pts[0][1] + 0.7).abs() < 1e-12);
    }

    #[test]
    fn two_atoms_are_recovered() {
        let vars = [v(0), v(1)];
        let a = Tms::point_mass(&vars, 6, &[0.5, -1.0]).unwrap();
        let b = Tms::point_mass(&vars, 6, &[-0.25, 2.0]).unwrap();
        let y = Tms::combine(&[(0.5, &a), (0.5, &b)]).unwrap();
        let ft = flat_truncation(&y, 1, 2, 1e-6).unwrap();
        assert!(ft.holds);
        assert_eq!(ft.rank, 2);
        let pts = extract_minimizers(&y, 2, 2, 0).unwrap();
        assert!((pts[0][0] + 0.25).abs() < 1e-8 && (pts[0][1] - 2.0).abs() < 1e-8);
        assert!((pts[1][0] - 0.5).abs() < 1e-8 && (pts[1][1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn nonatomic_sequence_is_not_flat() {
        // moments of the uniform measure on [0, 1]
        let vars = [v(0)];
        let y = Tms::new(&vars, 4, (0..5).map(|k| 1.0 / (k as f64 + 1.0)).collect()).unwrap();
        let ft = flat_truncation(&y, 1, 1, 1e-6).unwrap();
        assert!(!ft.holds);
        assert_eq!(ft.rank, 2);
    }

    #[test]
    fn bounds_are_monotone_and_below_minimum() {
        // nonconvex quartic on a box; true minimum from a fine grid
        let f = x(0).pow(4) - 3.0 * x(0) * x(0) * x(1) + x(1) * x(1) + 0.5 * x(0);
        let g = [1.0 - x(0) * x(0), 1.0 - x(1) * x(1)];
        let vars = [v(0), v(1)];
        let mut opts = PopOptions::default();
        let mut prev = f64::NEG_INFINITY;
        let grid = grid_min(&f, 2000);
        for d in 2..=4 {
            opts.d_max = Some(d);
            let relax = build_relaxation(&vars, &f, &g, &[], d).unwrap();
            let sol = relax.sdp.solve(&opts.sdp);
            let theta = relax.value(&sol);
            assert!(theta <= grid + 1e-7);
            assert!(theta >= prev - 1e-7);
            prev = theta;
        }
    }

    fn grid_min(f: &Polynomial, steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let u = [-1.0 + 2.0 * i as f64 / steps as f64, -1.0 + 2.0 * j as f64 / steps as f64];
                best = best.min(f.eval(|w| Some(u[w.coord])).unwrap());
            }
        }
        best
    }

    #[test]
    fn matches_grid_oracle_on_boxes() {
        let cases = [
            (x(0).pow(3) - x(0), vec![1.0 - x(0) * x(0)], 1),
            (x(0).pow(4) - x(0) * x(1) + x(1).pow(3), vec![1.0 - x(0) * x(0), 1.0 - x(1) * x(1)], 2),
            ((x(0) - 0.3).pow(2) * (x(1) + 0.2) - x(1), vec![1.0 - x(0) * x(0), 1.0 - x(1) * x(1)], 2),
        ];
        for (f, g, n) in cases {
            let r = solve(n, &f, &g, &[]);
            let oracle = if n == 1 {
                (0..=2_000_000).map(|i| -1.0 + i as f64 * 1e-6).map(|t| f.eval(|_| Some(t)).unwrap()).fold(f64::INFINITY, f64::min)
            } else {
                grid_min(&f, 2000)
            };
            assert!((r.lower_bound - oracle).abs() < 1e-4, "{} vs {oracle}", r.lower_bound);
            if let Some(u) = r.best_point() {
                let fu = f.eval(|w| Some(u[w.coord])).unwrap();
                assert!((fu - oracle).abs() < 1e-4);
            }
        }
    }
}
