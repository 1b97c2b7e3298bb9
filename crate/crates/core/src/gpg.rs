//! Certificates that a GNEPP is a generalized potential game.
//!
//! For each player the certificate is the identity
//!
//! ```text
//!   P(y_i, x_{-i}) - P(x) = (q_{i,0} + 1) Δf_i + q_{i,1}
//! ```
//!
//! with `q_{i,0}, q_{i,1}` in the truncated quadratic module of the tuple
//! `h_i` describing `K_i`. The shadow copy `y_i` of block `i` is the variable
//! block `N + i`, where `N` is the number of players.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{GneppInstance, Relation};
use crate::linalg;
use crate::poly::{basis, format_terms, Monomial, Polynomial, Var};
use crate::sdp::{SdpBuilder, SdpOptions, SdpStatus};

/// Default identity tolerance.
pub const CERT_TOL: f64 = 1e-6;

/// Variable `j` of the shadow copy `y_i`.
pub fn shadow_var(inst: &GneppInstance, i: usize, j: usize) -> Var {
    Var::new(inst.num_players() + i, j)
}

/// Replaces block `i` by its shadow copy.
pub fn to_shadow(inst: &GneppInstance, i: usize, p: &Polynomial) -> Polynomial {
    let n = inst.num_players();
    p.rename(|v| if v.block == i { Var::new(n + i, v.coord) } else { v })
}

/// Names `x<i>_<j>` for decision variables and `y<i>_<j>` for shadow copies.
pub fn var_name(inst: &GneppInstance, v: Var) -> String {
    let n = inst.num_players();
    if v.block >= n {
        format!("y{}_{}", v.block - n + 1, v.coord + 1)
    } else {
        v.to_string()
    }
}

/// `f_i(y_i, x_{-i}) - f_i(x_i, x_{-i})`.
pub fn delta_f(inst: &GneppInstance, i: usize) -> Polynomial {
    let f = &inst.players[i].objective;
    to_shadow(inst, i, f) - f.clone()
}

/// The tuple `h_i` whose nonnegativity set is `K_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct KiTuple {
    pub player: usize,
    /// Variables `(x, y_i)`, sorted.
    pub vars: Vec<Var>,
    /// `h[0] = 1`, then the player's constraints in the `x_i` copy and, when
    /// they involve block `i`, in the `y_i` copy; `Δf_i` is last. An equality
    /// `g = 0` contributes both `g` and `-g`.
    pub h: Vec<Polynomial>,
}

pub fn build_ki(inst: &GneppInstance, i: usize) -> KiTuple {
    let mut h = vec![Polynomial::constant(1.0)];
    for c in &inst.players[i].constraints {
        let signs: &[f64] = match c.rel {
            Relation::Geq => &[1.0],
            Relation::Eq => &[1.0, -1.0],
        };
        for &s in signs {
            let g = c.poly.scale(s);
            let own = g.vars().iter().any(|v| v.block == i);
            let y = own.then(|| to_shadow(inst, i, &g));
            h.push(g);
            h.extend(y);
        }
    }
    h.push(delta_f(inst, i));
    let mut vars = inst.layout.all_vars();
    vars.extend((0..inst.layout.dim(i)).map(|j| shadow_var(inst, i, j)));
    vars.sort();
    KiTuple { player: i, vars, h }
}

/// A certificate found by [`certify`].
#[derive(Clone, Debug)]
pub struct GpgCertificate {
    /// Half degree `d`; the certificate has degree `2d`.
    pub order: u32,
    pub potential: Polynomial,
    /// `(q_{i,0}, q_{i,1})` per player.
    pub multipliers: Vec<(Polynomial, Polynomial)>,
    /// Gram matrices `(Q_{i,0}^t, Q_{i,1}^t)` per player and tuple entry used.
    pub grams: Vec<Vec<(DMatrix<f64>, DMatrix<f64>)>>,
    /// Coefficient ∞-norm of the identity mismatch per player.
    pub residuals: Vec<f64>,
    /// Smallest Gram eigenvalue per player.
    pub min_eigs: Vec<f64>,
    pub sdp_iterations: usize,
    /// Objective `Σ trace(Q)`.
    pub trace: f64,
}

impl GpgCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub enum CertifyOutcome {
    Certified(GpgCertificate),
    NotCertified { order: u32, reason: String },
}

impl CertifyOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyOutcome::Certified(_))
    }
}

/// `max_i ⌈deg f_i / 2⌉ + 1`.
pub fn default_order(inst: &GneppInstance) -> u32 {
    inst.players.iter().map(|p| p.objective.degree().div_ceil(2)).max().unwrap_or(0) + 1
}

/// Polynomial `Σ_jk Q[j,k] b_j b_k`.
fn gram_poly(b: &[Monomial], q: &DMatrix<f64>) -> Polynomial {
    let mut terms = Vec::with_capacity(b.len() * b.len());
    for j in 0..b.len() {
        for k in 0..b.len() {
            terms.push((b[j].mul(&b[k]), q[(j, k)]));
        }
    }
    Polynomial::from_terms(terms)
}

fn min_eigenvalue(q: &DMatrix<f64>) -> f64 {
    linalg::min_sym_eigenvalue(q.clone()).unwrap_or(f64::NEG_INFINITY)
}

struct Layout {
    /// Per player: (tuple index, basis) for every Gram pair.
    grams: Vec<Vec<(usize, Vec<Monomial>)>>,
}

/// Solves the min-trace certificate SDP at half degree `d`.
pub fn certify(inst: &GneppInstance, d: u32, cert_tol: f64) -> Result<CertifyOutcome> {
    if d == 0 {
        return Err(Error::Input("certificate order must be at least 1".into()));
    }
    let n = inst.num_players();
    let xvars = inst.layout.all_vars();
    let pbasis: Vec<Monomial> = basis(&xvars, 2 * d).into_iter().filter(|m| !m.is_one()).collect();
    let tuples: Vec<KiTuple> = (0..n).map(|i| build_ki(inst, i)).collect();
    let dfs: Vec<Polynomial> = (0..n).map(|i| delta_f(inst, i)).collect();

    // rows are (player, monomial); entries are collected first, indexed later
    type Key = (usize, Monomial);
    let mut a_ent: Vec<(Key, usize, usize, usize, f64)> = Vec::new();
    let mut f_ent: Vec<(Key, usize, f64)> = Vec::new();
    let mut b_ent: Vec<(Key, f64)> = Vec::new();
    let mut layout = Layout { grams: Vec::new() };
    let mut nblocks = 0usize;
    let mut block_sizes = Vec::new();

    for i in 0..n {
        for (a, m) in pbasis.iter().enumerate() {
            let shifted = Polynomial::monomial(m.clone(), 1.0);
            let dp = to_shadow(inst, i, &shifted) - shifted;
            for (mm, c) in dp.terms() {
                f_ent.push(((i, mm.clone()), a, c));
            }
        }
        for (mm, c) in dfs[i].terms() {
            b_ent.push(((i, mm.clone()), c));
        }
        let mut pairs = Vec::new();
        for (t, h) in tuples[i].h.iter().enumerate() {
            let dt = h.degree().div_ceil(2);
            if dt > d || h.is_zero() {
                continue;
            }
            let b = basis(&tuples[i].vars, d - dt);
            let hd = h.mul(&dfs[i]);
            for (which, poly) in [(0usize, &hd), (1usize, h)] {
                let blk = nblocks + which;
                for j in 0..b.len() {
                    for k in 0..b.len() {
                        let bjk = b[j].mul(&b[k]);
                        for (mm, c) in poly.terms() {
                            a_ent.push(((i, bjk.mul(mm)), blk, j, k, -c));
                        }
                    }
                }
            }
            block_sizes.push(b.len());
            block_sizes.push(b.len());
            nblocks += 2;
            pairs.push((t, b));
        }
        layout.grams.push(pairs);
    }

    let mut rows: BTreeMap<Key, usize> = BTreeMap::new();
    for key in a_ent.iter().map(|e| &e.0).chain(f_ent.iter().map(|e| &e.0)).chain(b_ent.iter().map(|e| &e.0)) {
        let next = rows.len();
        rows.entry(key.clone()).or_insert(next);
    }
    let mut sdp = SdpBuilder::new(rows.len());
    for &s in &block_sizes {
        let blk = sdp.add_block(s);
        for j in 0..s {
            sdp.add_c(blk, j, j, 1.0);
        }
    }
    for _ in &pbasis {
        sdp.add_free(0.0);
    }
    for (key, blk, j, k, v) in &a_ent {
        sdp.add_a(rows[key], *blk, *j, *k, *v);
    }
    for (key, var, v) in &f_ent {
        sdp.add_free_coef(rows[key], *var, *v);
    }
    for (key, v) in &b_ent {
        sdp.add_b(rows[key], *v);
    }
    let prob = sdp.build();
    let sol = prob.solve(&SdpOptions { tol: 1e-10, max_iter: 150 });
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::PrimalInfeasible => {
            return Ok(CertifyOutcome::NotCertified {
                order: d,
                reason: format!("no degree-{} certificate", 2 * d),
            })
        }
        s => {
            if !(sol.primal_res <= 1e-6 && sol.dual_res <= 1e-6) {
                return Ok(CertifyOutcome::NotCertified {
                    order: d,
                    reason: format!(
                        "SDP stopped with {s:?} after {} iterations (primal residual {:.1e}, dual residual {:.1e})",
                        sol.iterations, sol.primal_res, sol.dual_res
                    ),
                });
            }
        }
    }

    let potential = Polynomial::from_terms(pbasis.iter().cloned().zip(sol.z.iter().copied()));
    let mut blk = 0;
    let mut multipliers = Vec::new();
    let mut grams = Vec::new();
    let mut residuals = Vec::new();
    let mut min_eigs = Vec::new();
    for i in 0..n {
        let (mut q0, mut q1) = (Polynomial::zero(), Polynomial::zero());
        let mut mats = Vec::new();
        let mut eig = f64::INFINITY;
        for (t, b) in &layout.grams[i] {
            let (g0, g1) = (sol.x[blk].clone(), sol.x[blk + 1].clone());
            blk += 2;
            let h = &tuples[i].h[*t];
            q0 = q0 + gram_poly(b, &g0).mul(h);
            q1 = q1 + gram_poly(b, &g1).mul(h);
            eig = eig.min(min_eigenvalue(&g0)).min(min_eigenvalue(&g1));
            mats.push((g0, g1));
        }
        residuals.push(identity_residual(inst, i, &potential, &q0, &q1));
        min_eigs.push(eig);
        multipliers.push((q0, q1));
        grams.push(mats);
    }
    let cert = GpgCertificate {
        order: d,
        potential,
        multipliers,
        grams,
        residuals,
        min_eigs,
        sdp_iterations: sol.iterations,
        trace: sol.primal_obj,
    };
    if cert.max_residual() > cert_tol {
        return Ok(CertifyOutcome::NotCertified {
            order: d,
            reason: format!("identity residual {:.2e} exceeds {cert_tol:.1e}", cert.max_residual()),
        });
    }
    if cert.min_eig() < -cert_tol {
        return Ok(CertifyOutcome::NotCertified {
            order: d,
            reason: format!("Gram eigenvalue {:.2e} below -{cert_tol:.1e}", cert.min_eig()),
        });
    }
    Ok(CertifyOutcome::Certified(cert))
}

/// Tries `order` (default [`default_order`]) and, if that fails, one more.
pub fn certify_auto(inst: &GneppInstance, order: Option<u32>, cert_tol: f64) -> Result<CertifyOutcome> {
    let d = order.unwrap_or_else(|| default_order(inst));
    match certify(inst, d, cert_tol)? {
        CertifyOutcome::NotCertified { .. } => certify(inst, d + 1, cert_tol),
        ok => Ok(ok),
    }
}

/// `‖ΔP_i − (p0 + 1)Δf_i − p1‖` over coefficients.
pub fn identity_residual(inst: &GneppInstance, i: usize, p: &Polynomial, p0: &Polynomial, p1: &Polynomial) -> f64 {
    let dp = to_shadow(inst, i, p) - p.clone();
    let rhs = (p0.clone() + Polynomial::constant(1.0)).mul(&delta_f(inst, i)) + p1.clone();
    dp.sub(&rhs).max_abs_coeff()
}

/// Outcome of [`check_manual`] for one player.
#[derive(Clone, Debug, PartialEq)]
pub struct ManualCheck {
    pub residual: f64,
    /// Feasible points of `K_i` that were sampled.
    pub samples: usize,
    /// Smallest sampled values of `p_{i,0}` and `p_{i,1}`.
    pub min_p0: f64,
    pub min_p1: f64,
}

impl ManualCheck {
    pub fn passes(&self, cert_tol: f64) -> bool {
        self.residual <= cert_tol && self.min_p0 >= -cert_tol && self.min_p1 >= -cert_tol
    }
}

/// Number of points of `K_i` sampled by [`check_manual`].
pub const MANUAL_SAMPLES: usize = 1000;

/// Checks a hand-made certificate: the identity per player, then the signs
/// of `p_{i,0}, p_{i,1}` at random points of `K_i`. Sampling can only
/// refute a certificate.
pub fn check_manual(
    inst: &GneppInstance,
    potential: &Polynomial,
    p_list: &[(Polynomial, Polynomial)],
    seed: u64,
) -> Result<Vec<ManualCheck>> {
    if p_list.len() != inst.num_players() {
        return Err(Error::Input(format!(
            "expected {} multiplier pairs, got {}",
            inst.num_players(),
            p_list.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (i, (p0, p1)) in p_list.iter().enumerate() {
        let residual = identity_residual(inst, i, potential, p0, p1);
        let ki = build_ki(inst, i);
        let points = sample_ki(inst, &ki, MANUAL_SAMPLES, &mut rng);
        let mut check = ManualCheck { residual, samples: points.len(), min_p0: f64::INFINITY, min_p1: f64::INFINITY };
        for u in &points {
            let val = |v: Var| ki.vars.iter().position(|&w| w == v).map(|k| u[k]);
            check.min_p0 = check.min_p0.min(p0.eval(val)?);
            check.min_p1 = check.min_p1.min(p1.eval(val)?);
        }
        out.push(check);
    }
    Ok(out)
}

/// Rejection sampling in boxes of growing radius; equality constraints are
/// met by Gauss-Newton projection before the inequality test.
fn sample_ki(inst: &GneppInstance, ki: &KiTuple, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let i = ki.player;
    let mut eqs = Vec::new();
    for c in &inst.players[i].constraints {
        if c.rel == Relation::Eq {
            eqs.push(c.poly.clone());
            if c.poly.vars().iter().any(|v| v.block == i) {
                eqs.push(to_shadow(inst, i, &c.poly));
            }
        }
    }
    let grads: Vec<Vec<Polynomial>> = eqs.iter().map(|g| ki.vars.iter().map(|&v| g.diff(v)).collect()).collect();
    let n = ki.vars.len();
    fn at<'a>(vars: &'a [Var], u: &'a [f64]) -> impl Fn(Var) -> Option<f64> + 'a {
        move |v| vars.iter().position(|&w| w == v).map(|k| u[k])
    }
    let radii = [1.0, 2.0, 5.0, 10.0, 20.0];
    let mut out = Vec::new();
    for attempt in 0..200 * count {
        if out.len() == count {
            break;
        }
        let r = radii[attempt % radii.len()];
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-r..=r)).collect();
        if !eqs.is_empty() {
            for _ in 0..30 {
                let e: Vec<f64> = eqs.iter().map(|g| g.eval(at(&ki.vars, &u)).unwrap_or(f64::NAN)).collect();
                if e.iter().all(|v| v.abs() <= 1e-12) {
                    break;
                }
                let j = DMatrix::from_fn(eqs.len(), n, |a, b| grads[a][b].eval(at(&ki.vars, &u)).unwrap_or(f64::NAN));
                let Some(step) = linalg::svd_solve(j, &nalgebra::DVector::from_vec(e), 1e-12) else { break };
                for (x, s) in u.iter_mut().zip(step.iter()) {
                    *x -= s;
                }
            }
            let ok = eqs.iter().all(|g| g.eval(at(&ki.vars, &u)).map(|v| v.abs() <= 1e-9).unwrap_or(false));
            if !ok {
                continue;
            }
        }
        let feasible = ki.h.iter().all(|h| h.eval(at(&ki.vars, &u)).map(|v| v >= -1e-9).unwrap_or(false));
        if feasible {
            out.push(u);
        }
    }
    out
}

/// Coefficients printed with six decimals; terms that round to zero are dropped.
pub fn format_potential(inst: &GneppInstance, p: &Polynomial) -> String {
    let kept = p.terms().filter(|&(_, c)| c.abs() >= 5e-7);
    format_terms(kept, &|v| var_name(inst, v), |c| format!("{c:.6}"))
}

/// Human-readable certificate report.
pub fn report(inst: &GneppInstance, cert: &GpgCertificate) -> String {
    let mut s = String::new();
    s.push_str(&format!("certificate degree: {}\n", 2 * cert.order));
    s.push_str(&format!("P(x) = {}\n", format_potential(inst, &cert.potential)));
    for i in 0..cert.residuals.len() {
        s.push_str(&format!(
            "player {}: identity residual {:.3e}, min Gram eigenvalue {:.3e}\n",
            i + 1,
            cert.residuals[i],
            cert.min_eigs[i]
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{builtin, Constraint, PlayerProblem};
    use crate::poly::BlockLayout;

    fn x(b: usize, c: usize) -> Polynomial {
        Polynomial::var(Var::new(b, c))
    }

    fn y(inst: &GneppInstance, i: usize, c: usize) -> Polynomial {
        Polynomial::var(shadow_var(inst, i, c))
    }

    fn close(a: &Polynomial, b: &Polynomial) -> bool {
        a.sub(b).max_abs_coeff() <= 1e-12
    }

    #[test]
    fn delta_f_matches_hand_expansion() {
        let g = builtin("ex4.6").unwrap();
        let (x1, x2, y1, y2) = (x(0, 0), x(1, 0), y(&g, 0, 0), y(&g, 1, 0));
        assert!(close(&delta_f(&g, 0), &(&x1 - &y1)));
        let df2 = 2.0 * &x1 * (&x2 - &y2) + x2.pow(2) - y2.pow(2);
        assert!(close(&delta_f(&g, 1), &df2));
    }

    #[test]
    fn delta_f_vanishes_on_the_diagonal() {
        for name in ["ex4.3", "ex4.5", "ex5.3", "pollution"] {
            let g = builtin(name).unwrap();
            let n = g.num_players();
            for i in 0..n {
                let back = delta_f(&g, i).rename(|v| if v.block >= n { Var::new(v.block - n, v.coord) } else { v });
                assert!(back.is_zero(), "{name} player {i}");
            }
        }
    }

    #[test]
    fn constant_objective_has_zero_delta() {
        let layout = BlockLayout::new(vec![1, 1]).unwrap();
        let p = |f| PlayerProblem::new(f, vec![]);
        let g = GneppInstance::new("c", layout, vec![p(Polynomial::constant(3.0)), p(Polynomial::constant(0.0))]).unwrap();
        assert!(delta_f(&g, 0).is_zero());
    }

    #[test]
    fn ki_tuples_list_constraints_in_both_copies() {
        let g = builtin("ex4.6").unwrap();
        let (x1, x2, y1, y2) = (x(0, 0), x(1, 0), y(&g, 0, 0), y(&g, 1, 0));
        let one = Polynomial::constant(1.0);
        let want1 = [
            one.clone(),
            1.0 - x1.pow(2) - x2.pow(2),
            1.0 - y1.pow(2) - x2.pow(2),
            x1.clone(),
            y1.clone(),
            delta_f(&g, 0),
        ];
        let want2 = [
            one,
            1.0 - x1.pow(2) - x2.pow(2),
            1.0 - x1.pow(2) - y2.pow(2),
            x2.clone(),
            y2.clone(),
            delta_f(&g, 1),
        ];
        for (i, want) in [(0, &want1), (1, &want2)] {
            let k = build_ki(&g, i);
            assert_eq!(k.h.len(), want.len());
            for (a, b) in k.h.iter().zip(want.iter()) {
                assert!(close(a, b), "player {i}: {a} vs {b}");
            }
            assert_eq!(k.vars.len(), 3);
        }
    }

    #[test]
    fn unconstrained_player_has_only_delta_f() {
        let layout = BlockLayout::new(vec![1, 1]).unwrap();
        let x1 = Polynomial::var(Var::new(0, 0));
        let g = GneppInstance::new(
            "u",
            layout,
            vec![
                PlayerProblem::new(x1.clone(), vec![]),
                PlayerProblem::new(x1.clone(), vec![Constraint::geq(x1.clone())]),
            ],
        )
        .unwrap();
        let k = build_ki(&g, 0);
        assert_eq!(k.h, vec![Polynomial::constant(1.0), delta_f(&g, 0)]);
        // a constraint without the player's own variables gets no shadow copy
        assert_eq!(build_ki(&g, 1).h.len(), 3);
    }

    #[test]
    fn equalities_enter_as_sign_pairs() {
        let g = builtin("ex4.5").unwrap();
        let k = build_ki(&g, 0);
        // 1, four shared constraints in both copies, x2 >= 0.5 once, the
        // equality in both signs and both copies, Δf
        assert_eq!(k.h.len(), 1 + 4 * 2 + 1 + 4 + 1);
    }

    #[test]
    fn hand_certificate_of_ex4_3() {
        let g = builtin("ex4.3").unwrap();
        let (x1, x2, y1) = (x(0, 0), x(1, 0), y(&g, 0, 0));
        let p = x1.pow(3) - &x1 * &x2 + x1.clone();
        let d = &y1 - &x1;
        let p10 = d.pow(2);
        let p11 = (3.0 * &y1 * &x1 - x2.clone()) * d;
        let zero = Polynomial::zero();
        let checks = check_manual(&g, &p, &[(p10, p11), (zero.clone(), zero)], 7).unwrap();
        for c in &checks {
            assert!(c.residual <= 1e-10, "{c:?}");
            assert_eq!(c.samples, MANUAL_SAMPLES);
            assert!(c.passes(CERT_TOL), "{c:?}");
        }
    }

    #[test]
    fn hand_certificate_of_ex4_5() {
        let g = builtin("ex4.5").unwrap();
        let (x11, x12, x2) = (x(0, 0), x(0, 1), x(1, 0));
        let (y11, y12, y2) = (y(&g, 0, 0), y(&g, 0, 1), y(&g, 1, 0));
        let (sx, sy) = (&x11 + &x12, &y11 + &y12);
        let p = (sx.clone() + 1.0).pow(3) * x2.clone();
        let p10 = (sy.clone() + 1.0).pow(2) + (sx.clone() + 1.0).pow(2) + &sy * &sx + sy.clone() + sx.clone();
        let p20 = 3.0 * &x11 + 3.0 * &x12 + 5.0;
        let cubic = x11.pow(3) + x12.pow(3) + 3.0 * x11.pow(2) + 3.0 * x12.pow(2) + 3.0 * &x11 + 3.0 * &x12 + 1.0;
        let p21 = (&y2 - &x2) * cubic;
        let checks = check_manual(&g, &p, &[(p10, Polynomial::zero()), (p20, p21)], 7).unwrap();
        for c in &checks {
            assert!(c.residual <= 1e-10, "{c:?}");
            assert!(c.samples > 0 && c.passes(CERT_TOL), "{c:?}");
        }
    }

    #[test]
    fn zero_potential_leaves_delta_f_as_residual() {
        let g = builtin("ex4.6").unwrap();
        let zero = Polynomial::zero();
        let pairs = vec![(zero.clone(), zero.clone()); 2];
        let checks = check_manual(&g, &zero, &pairs, 1).unwrap();
        for (i, c) in checks.iter().enumerate() {
            assert_eq!(c.residual, delta_f(&g, i).max_abs_coeff());
            assert!(c.residual > 0.0);
        }
        assert!(check_manual(&g, &zero, &pairs[..1], 1).is_err());
    }

    #[test]
    fn certifies_ex4_6() {
        let g = builtin("ex4.6").unwrap();
        assert_eq!(default_order(&g), 2);
        let CertifyOutcome::Certified(c) = certify(&g, 2, CERT_TOL).unwrap() else { panic!("not certified") };
        assert!(c.max_residual() <= 1e-8, "{:?}", c.residuals);
        assert!(c.min_eig() >= -CERT_TOL);
        assert_eq!(c.multipliers.len(), 2);
        // independent check of the reconstructed multipliers
        let again = check_manual(&g, &c.potential, &c.multipliers, 3).unwrap();
        for (a, b) in again.iter().zip(&c.residuals) {
            assert!((a.residual - b).abs() <= 1e-12);
            assert!(a.min_p0 >= -CERT_TOL && a.min_p1 >= -CERT_TOL);
        }
    }

    #[test]
    fn potential_prints_six_decimals() {
        let g = builtin("ex4.6").unwrap();
        let p = -3.17629 * x(0, 0) - x(1, 0).pow(2) + 1e-9 * x(0, 0).pow(2);
        assert_eq!(format_potential(&g, &p), "-3.176290*x1_1 - x2_1^2");
        assert_eq!(format_potential(&g, &Polynomial::zero()), "0");
        assert_eq!(var_name(&g, shadow_var(&g, 1, 0)), "y2_1");
    }

    #[test]
    fn order_zero_is_rejected() {
        let g = builtin("ex4.6").unwrap();
        assert!(certify(&g, 0, CERT_TOL).is_err());
    }
}
