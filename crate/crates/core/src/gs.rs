//! The proximal Gauss-Seidel method and equilibrium verification.
//!
//! One outer iteration updates the players in order; player `i` minimizes
//! `f_i(·, x_{-i}) + τ ||x_i - x_i^{(k)}||^2` over its feasible set, with the
//! blocks of players `1..i-1` already replaced by their new values. Every
//! subproblem is solved globally by [`pop_minimize`].

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::instance::GneppInstance;
use crate::poly::Polynomial;
use crate::pop::{pop_minimize, PopOptions, PopResult, PopStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauRule {
    /// `τ^{(k)} = τ_0` for all `k`.
    Fixed,
    /// `τ^{(k+1)} = max{min[τ^{(k)}, max_i ||x_i^{(k+1)} - x_i^{(k)}||], 0.1 τ^{(k)}}`.
    Adaptive,
    /// No proximal term at all; only meant for diagnostics.
    Zero,
}

impl FromStr for TauRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(TauRule::Fixed),
            "adaptive" => Ok(TauRule::Adaptive),
            "zero" => Ok(TauRule::Zero),
            _ => Err(Error::Input(format!("unknown tau rule `{s}`, expected fixed, adaptive or zero"))),
        }
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TauRule::Fixed => "fixed",
            TauRule::Adaptive => "adaptive",
            TauRule::Zero => "zero",
        })
    }
}

/// Next regularization parameter; `step` is `max_i ||x_i^{(k+1)} - x_i^{(k)}||`.
pub fn update_tau(tau: f64, step: f64, rule: TauRule) -> f64 {
    match rule {
        TauRule::Fixed => tau,
        TauRule::Adaptive => tau.min(step).max(0.1 * tau),
        TauRule::Zero => 0.0,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GsConfig {
    pub tau0: f64,
    pub rule: TauRule,
    pub max_iter: usize,
    /// All pairwise ∞-norm differences over the last `conv_window` iterates
    /// must be at most `conv_tol`.
    pub conv_tol: f64,
    pub conv_window: usize,
    pub cycle_tol: f64,
    pub max_period: usize,
    pub pop: PopOptions,
}

impl Default for GsConfig {
    fn default() -> Self {
        GsConfig {
            tau0: 0.1,
            rule: TauRule::Adaptive,
            max_iter: 200,
            conv_tol: 1e-8,
            conv_window: 11,
            cycle_tol: 1e-6,
            max_period: 12,
            pop: PopOptions::default(),
        }
    }
}

impl GsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rule != TauRule::Zero && !(self.tau0 > 0.0) {
            return Err(Error::Input("tau0 must be positive unless the zero rule is requested".into()));
        }
        if self.conv_window < 2 {
            return Err(Error::Input("convergence window needs at least two iterates".into()));
        }
        Ok(())
    }

    fn initial_tau(&self) -> f64 {
        if self.rule == TauRule::Zero {
            0.0
        } else {
            self.tau0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GsStatus {
    Converged,
    /// `period` counts single-player updates, the granularity at which cycles
    /// are usually written down; `outer_period` counts full sweeps.
    CycleDetected { period: usize, outer_period: usize },
    /// Player `i` (1-based) had an empty feasible set while computing iterate `k`.
    SubproblemInfeasible { k: usize, i: usize },
    MaxIterReached,
    /// The hierarchy returned no minimizer or failed numerically.
    SubproblemFailed { k: usize, i: usize, reason: String },
}

impl GsStatus {
    pub fn name(&self) -> &'static str {
        match self {
            GsStatus::Converged => "Converged",
            GsStatus::CycleDetected { .. } => "CycleDetected",
            GsStatus::SubproblemInfeasible { .. } => "SubproblemInfeasible",
            GsStatus::MaxIterReached => "MaxIterReached",
            GsStatus::SubproblemFailed { .. } => "SubproblemFailed",
        }
    }
}

impl fmt::Display for GsStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GsStatus::CycleDetected { period, outer_period } => {
                write!(f, "CycleDetected(period={period}, outer_period={outer_period})")
            }
            GsStatus::SubproblemInfeasible { k, i } => write!(f, "SubproblemInfeasible(k={k}, i={i})"),
            GsStatus::SubproblemFailed { k, i, reason } => write!(f, "SubproblemFailed(k={k}, i={i}): {reason}"),
            other => f.write_str(other.name()),
        }
    }
}

/// What happened in one subproblem solve.
#[derive(Clone, Debug)]
pub struct SubproblemSummary {
    /// Index of the iterate being computed (1-based).
    pub k: usize,
    /// Player (1-based).
    pub i: usize,
    pub tau: f64,
    pub status: PopStatus,
    pub order: u32,
    pub lower_bound: f64,
    pub minimizers: usize,
    pub flat: bool,
    pub time: Duration,
}

#[derive(Clone, Debug)]
pub struct GsTrace {
    /// `x^{(0)}, x^{(1)}, ...`
    pub iterates: Vec<Vec<f64>>,
    /// The point after every single-player update, starting with `x^{(0)}`.
    pub substeps: Vec<Vec<f64>>,
    /// `τ^{(k)}` used to compute iterate `k + 1`.
    pub taus: Vec<f64>,
    pub subproblems: Vec<SubproblemSummary>,
    pub status: GsStatus,
    pub warnings: Vec<String>,
    pub wall_time: Duration,
}

impl GsTrace {
    pub fn final_point(&self) -> &[f64] {
        self.iterates.last().expect("a trace always holds x0")
    }

    /// Number of completed outer iterations.
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// True when all pairwise ∞-norm differences among the last `window`
/// iterates are at most `tol`.
pub fn window_converged(iterates: &[Vec<f64>], window: usize, tol: f64) -> bool {
    if iterates.len() < window {
        return false;
    }
    let tail = &iterates[iterates.len() - window..];
    tail.iter().enumerate().all(|(a, x)| tail[a + 1..].iter().all(|y| inf_dist(x, y) <= tol))
}

/// Smallest period `p <= max_period` such that the last `3p` iterates repeat
/// with period `p` to within `tol` in the ∞-norm.
pub fn detect_cycle(iterates: &[Vec<f64>], tol: f64, max_period: usize) -> Option<usize> {
    if iterates.len() < 4 {
        return None;
    }
    let n = iterates.len();
    (1..=max_period).find(|&p| {
        if 3 * p > n || !(n - 3 * p..n - p).all(|k| inf_dist(&iterates[k], &iterates[k + p]) <= tol) {
            return false;
        }
        if p == 1 {
            return true;
        }
        // a damped oscillation shrinks between repeats; a cycle does not
        let a0 = inf_dist(&iterates[n - 3 * p], &iterates[n - 3 * p + 1]);
        let a1 = inf_dist(&iterates[n - p], &iterates[n - p + 1]);
        a1 > 10.0 * tol && a1 >= 0.9 * a0
    })
}

/// Picks the minimizer closest to `prev`; ties go to the lexicographically
/// greatest point so the choice is deterministic.
fn select_minimizer<'a>(cands: &'a [Vec<f64>], prev: &[f64]) -> &'a [f64] {
    let dist = |u: &[f64]| u.iter().zip(prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut best = &cands[0];
    for u in &cands[1..] {
        let (du, db) = (dist(u), dist(best));
        if du < db - 1e-9 || ((du - db).abs() <= 1e-9 && u.partial_cmp(best) == Some(std::cmp::Ordering::Greater)) {
            best = u;
        }
    }
    best
}

/// Player `i`'s problem with the other blocks fixed at `x`, plus the
/// proximal term around `x_i` when `tau > 0`.
fn player_subproblem(
    inst: &GneppInstance,
    i: usize,
    x: &[f64],
    tau: f64,
) -> Result<(Polynomial, Vec<Polynomial>, Vec<Polynomial>)> {
    let layout = &inst.layout;
    let p = &inst.players[i];
    let mut f = p.objective.restrict(layout, i, x)?;
    if tau > 0.0 {
        let xi = layout.block_slice(x, i);
        for (v, &c) in layout.block_vars(i).into_iter().zip(xi) {
            f = f + tau * (Polynomial::var(v) - c).pow(2);
        }
    }
    let ineqs = p.inequalities().map(|g| g.restrict(layout, i, x)).collect::<Result<Vec<_>>>()?;
    let eqs = p.equalities().map(|h| h.restrict(layout, i, x)).collect::<Result<Vec<_>>>()?;
    Ok((f, ineqs, eqs))
}

/// Solves player `i`'s problem (with prox term `tau`) at the point `x`.
///
/// Feasibility is only meaningful up to `opts.feastol`: when the exact
/// problem is empty or numerically degenerate (a feasible set shrunk to a
/// point), it is solved again with every inequality loosened by half that
/// tolerance, and the first outcome stands if that fails too.
pub fn solve_player(inst: &GneppInstance, i: usize, x: &[f64], tau: f64, opts: &PopOptions) -> Result<PopResult> {
    let (f, ineqs, eqs) = player_subproblem(inst, i, x, tau)?;
    let vars = inst.layout.block_vars(i);
    let res = pop_minimize(&vars, &f, &ineqs, &eqs, opts);
    let degenerate = match &res {
        Ok(r) => r.status == PopStatus::Infeasible,
        Err(Error::Numerical(_)) => true,
        Err(_) => false,
    };
    if !degenerate || ineqs.is_empty() {
        return res;
    }
    let loose: Vec<Polynomial> = ineqs.iter().map(|g| g.clone() + 0.5 * opts.feastol).collect();
    match pop_minimize(&vars, &f, &loose, &eqs, opts) {
        Ok(r) if r.status != PopStatus::Infeasible => Ok(r),
        _ => res,
    }
}

/// Runs the proximal Gauss-Seidel method from `x0`.
pub fn gs_solve(inst: &GneppInstance, x0: &[f64], cfg: &GsConfig) -> Result<GsTrace> {
    cfg.validate()?;
    let start = Instant::now();
    let mut warnings = Vec::new();
    let viol = inst.max_violation(x0)?;
    if viol > cfg.pop.feastol {
        warnings.push(format!("starting point is infeasible (max violation {viol:.3e})"));
    }
    let layout = &inst.layout;
    let n = inst.num_players();
    let mut trace = GsTrace {
        iterates: vec![x0.to_vec()],
        substeps: vec![x0.to_vec()],
        taus: Vec::new(),
        subproblems: Vec::new(),
        status: GsStatus::MaxIterReached,
        warnings,
        wall_time: Duration::ZERO,
    };
    let mut tau = cfg.initial_tau();
    let mut pending_cycle = None;

    for k in 1..=cfg.max_iter {
        let prev = trace.iterates.last().expect("nonempty").clone();
        let mut x = prev.clone();
        trace.taus.push(tau);
        for i in 0..n {
            let t0 = Instant::now();
            let res = match solve_player(inst, i, &x, tau, &cfg.pop) {
                Ok(r) => r,
                Err(e) => {
                    trace.status = GsStatus::SubproblemFailed { k, i: i + 1, reason: e.to_string() };
                    trace.wall_time = start.elapsed();
                    return Ok(trace);
                }
            };
            trace.subproblems.push(SubproblemSummary {
                k,
                i: i + 1,
                tau,
                status: res.status,
                order: res.order,
                lower_bound: res.lower_bound,
                minimizers: res.minimizers.len(),
                flat: res.flat,
                time: t0.elapsed(),
            });
            if res.status == PopStatus::Infeasible {
                trace.status = GsStatus::SubproblemInfeasible { k, i: i + 1 };
                trace.wall_time = start.elapsed();
                return Ok(trace);
            }
            if res.minimizers.is_empty() {
                let reason = if res.unbounded {
                    "subproblem is unbounded below".to_string()
                } else {
                    format!("no minimizer extracted up to order {} (bound {:.6e})", res.order, res.lower_bound)
                };
                trace.status = GsStatus::SubproblemFailed { k, i: i + 1, reason };
                trace.wall_time = start.elapsed();
                return Ok(trace);
            }
            let u = select_minimizer(&res.minimizers, layout.block_slice(&x, i));
            let off = layout.offset(i);
            x[off..off + u.len()].copy_from_slice(u);
            trace.substeps.push(x.clone());
        }
        let step = (0..n)
            .map(|i| {
                let (a, b) = (layout.block_slice(&x, i), layout.block_slice(&prev, i));
                a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0f64, f64::max);
        tau = update_tau(tau, step, cfg.rule);
        trace.iterates.push(x);

        if window_converged(&trace.iterates, cfg.conv_window, cfg.conv_tol) {
            trace.status = GsStatus::Converged;
            break;
        }
        // once the sweeps repeat, keep going until the finer sub-step
        // sequence has repeated three times as well
        if let Some(p) = detect_cycle(&trace.iterates, cfg.cycle_tol, cfg.max_period).filter(|&p| p > 1) {
            pending_cycle = Some(p);
            if let Some(q) = detect_cycle(&trace.substeps, cfg.cycle_tol, p * n) {
                trace.status = GsStatus::CycleDetected { period: q, outer_period: p };
                break;
            }
        } else {
            pending_cycle = None;
        }
    }
    if let (GsStatus::MaxIterReached, Some(p)) = (&trace.status, pending_cycle) {
        trace.status = GsStatus::CycleDetected { period: p * n, outer_period: p };
    }
    trace.wall_time = start.elapsed();
    Ok(trace)
}

/// Per-player outcome of [`verify_gne`].
#[derive(Clone, Debug)]
pub struct PlayerCheck {
    /// `f_i(x)`.
    pub value: f64,
    /// Minimum of player `i`'s problem with `x_{-i}` fixed; `-∞` when unbounded.
    pub optimum: f64,
    /// `f_i(x) - f_i^*`.
    pub gap: f64,
    pub status: PopStatus,
    /// Better response found by the hierarchy, if any.
    pub best_response: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct GneReport {
    pub players: Vec<PlayerCheck>,
    /// `max_i |ε_i|`.
    pub eps: f64,
    /// Constraint values grouped by player.
    pub residuals: Vec<Vec<f64>>,
    pub max_violation: f64,
    pub threshold: f64,
    pub is_gne: bool,
}

/// Checks whether `x` is a GNE to accuracy `threshold`: for every player the
/// global minimum `f_i^*` with `x_{-i}` fixed is computed by the hierarchy
/// and compared with `f_i(x)`.
pub fn verify_gne(inst: &GneppInstance, x: &[f64], threshold: f64, opts: &PopOptions) -> Result<GneReport> {
    let residuals = inst.feasibility_residual(x)?;
    let max_violation = inst.max_violation(x)?;
    let values = inst.objectives(x)?;
    let mut players = Vec::with_capacity(inst.num_players());
    for (i, &value) in values.iter().enumerate() {
        let res = solve_player(inst, i, x, 0.0, opts)
            .map_err(|e| Error::Numerical(format!("verifying player {}: {e}", i + 1)))?;
        let (f, _, _) = player_subproblem(inst, i, x, 0.0)?;
        let vars = &res.vars;
        let eval = |u: &[f64]| f.eval(|v| vars.binary_search(&v).ok().map(|k| u[k]));
        let mut best: Option<(f64, Vec<f64>)> = None;
        for u in &res.minimizers {
            let fu = eval(u)?;
            if best.as_ref().is_none_or(|(b, _)| fu < *b) {
                best = Some((fu, u.clone()));
            }
        }
        let (optimum, best_response) = match (res.status, best) {
            (PopStatus::Infeasible, _) => (f64::INFINITY, None),
            (_, Some((fu, u))) => (fu, Some(u)),
            _ if res.unbounded => (f64::NEG_INFINITY, None),
            _ => (res.lower_bound, None),
        };
        players.push(PlayerCheck { value, optimum, gap: value - optimum, status: res.status, best_response });
    }
    let eps = players.iter().fold(0.0f64, |m, p| if p.gap.is_nan() { f64::INFINITY } else { m.max(p.gap.abs()) });
    let is_gne = eps <= threshold && max_violation <= opts.feastol;
    Ok(GneReport { players, eps, residuals, max_violation, threshold, is_gne })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builtin_setup;

    #[test]
    fn tau_update_identities() {
        assert_eq!(update_tau(0.1, 0.5, TauRule::Adaptive), 0.1);
        assert!((update_tau(0.1, 0.001, TauRule::Adaptive) - 0.01).abs() < 1e-15);
        assert_eq!(update_tau(0.1, 0.05, TauRule::Adaptive), 0.05);
        assert_eq!(update_tau(0.1, 0.05, TauRule::Fixed), 0.1);
        assert_eq!(update_tau(0.1, 0.05, TauRule::Zero), 0.0);
    }

    #[test]
    fn tau_is_monotone() {
        let mut tau = 0.3;
        for k in 0..50 {
            let step = ((k * 7919) % 13) as f64 / 10.0;
            let next = update_tau(tau, step, TauRule::Adaptive);
            assert!(next <= tau && next >= 0.1 * tau);
            tau = next;
        }
    }

    fn pts(v: &[[f64; 2]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn cycle_detection() {
        let pattern = [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]];
        let seq: Vec<[f64; 2]> = (0..13).map(|k| pattern[k % 4]).collect();
        assert_eq!(detect_cycle(&pts(&seq), 1e-6, 12), Some(4));
        assert_eq!(detect_cycle(&pts(&[[2.0, 2.0]; 6]), 1e-6, 12), Some(1));
        let contracting: Vec<[f64; 2]> = (0..40).map(|k| [0.5f64.powi(k), 1.0]).collect();
        assert_eq!(detect_cycle(&pts(&contracting[..10]), 1e-6, 12), None);
        assert_eq!(detect_cycle(&pts(&seq[..3]), 1e-6, 12), None);
        let damped: Vec<[f64; 2]> = (0..30).map(|k| [1.0 + 1e-7 * (-0.9f64).powi(k), 1.0]).collect();
        assert_eq!(detect_cycle(&pts(&damped), 1e-6, 12), Some(1));
        let damped: Vec<[f64; 2]> = (0..30).map(|k| [1.0 + 1e-3 * (-0.99f64).powi(k), 1.0]).collect();
        assert_eq!(detect_cycle(&pts(&damped), 1e-6, 12), None);
    }

    #[test]
    fn window_criterion() {
        let mut seq = vec![vec![0.0]; 10];
        assert!(!window_converged(&seq, 11, 1e-8));
        seq.push(vec![5e-9]);
        assert!(window_converged(&seq, 11, 1e-8));
        seq.push(vec![2e-8]);
        assert!(!window_converged(&seq, 11, 1e-8));
    }

    #[test]
    fn selection_prefers_nearest_then_greatest() {
        let c = vec![vec![-1.0], vec![1.0]];
        assert_eq!(select_minimizer(&c, &[0.5]), &[1.0]);
        assert_eq!(select_minimizer(&c, &[-0.5]), &[-1.0]);
        assert_eq!(select_minimizer(&c, &[0.0]), &[1.0]);
    }

    #[test]
    fn zero_rule_is_explicit() {
        let cfg = GsConfig { tau0: 0.0, ..GsConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = GsConfig { tau0: 0.0, rule: TauRule::Zero, ..GsConfig::default() };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn infeasible_subproblem_in_first_sweep() {
        let b = builtin_setup("ex3.1").unwrap();
        let cfg = GsConfig { tau0: b.tau0, rule: b.tau_rule, ..GsConfig::default() };
        let t = gs_solve(&b.instance, &b.x0, &cfg).unwrap();
        assert_eq!(t.status, GsStatus::SubproblemInfeasible { k: 1, i: 2 });
        assert!((t.substeps[1][0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn cycling_example() {
        let b = builtin_setup("ex3.2-cycle").unwrap();
        let cfg = GsConfig { tau0: b.tau0, rule: b.tau_rule, ..GsConfig::default() };
        let t = gs_solve(&b.instance, &b.x0, &cfg).unwrap();
        assert_eq!(t.status, GsStatus::CycleDetected { period: 4, outer_period: 2 });
        let expect = [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]];
        for (k, e) in expect.iter().enumerate() {
            assert!(inf_dist(&t.substeps[k + 1], e) < 1e-7, "substep {k}: {:?}", t.substeps[k + 1]);
        }
    }

    #[test]
    fn intro_verification() {
        let b = builtin_setup("intro-1.4").unwrap();
        let opts = PopOptions::default();
        let ok = verify_gne(&b.instance, &[0.0, 0.0], 1e-6, &opts).unwrap();
        assert!(ok.is_gne, "{ok:?}");
        let bad = verify_gne(&b.instance, &[1.0, 0.0], 1e-6, &opts).unwrap();
        assert!(!bad.is_gne);
        assert!((bad.players[0].gap - 1.0).abs() < 1e-6);
        assert!(bad.players.iter().all(|p| p.gap >= -1e-6));
    }
}
