use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Out {
    fn machine(&self) -> HashMap<String, String> {
        gnepp::cli::machine_lines(&self.stdout)
            .into_iter()
            .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
            .collect()
    }

    fn key(&self, k: &str) -> String {
        self.machine().remove(k).unwrap_or_else(|| panic!("no `{k}` in\n{}", self.stdout))
    }
}

fn gnepp(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_gnepp")).args(args).output().unwrap();
    Out {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn problem_file(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("gnepp-cli-{}-{name}.gnep", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

fn floats(s: &str) -> Vec<f64> {
    s.split(',').map(|t| t.parse().unwrap()).collect()
}

#[test]
fn solve_converges_on_a_convex_game() {
    let o = gnepp(&["solve", "--builtin", "ex5.2i", "--tau0", "0.02", "--tau-rule", "fixed"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert!(o.stdout.contains("final point (2.0000, 2.0000)"));
    assert_eq!(o.key("status"), "Converged");
    assert_eq!(o.key("verified"), "true");
    for v in floats(&o.key("point")) {
        assert!((v - 2.0).abs() <= 1e-6);
    }
}

#[test]
fn solve_reports_a_cycle() {
    let o = gnepp(&["solve", "--builtin", "ex3.2-cycle", "--tau0", "0.001", "--tau-rule", "fixed"]);
    assert_eq!(o.code, 1);
    assert_eq!(o.key("status"), "CycleDetected");
    assert_eq!(o.key("period"), "4");
    assert_eq!(o.key("outer_period"), "2");
    assert_eq!(o.key("verified"), "false");
}

#[test]
fn solve_reports_an_infeasible_subproblem() {
    let o = gnepp(&["solve", "--builtin", "ex3.1"]);
    assert_eq!(o.code, 2, "{}", o.stdout);
    assert_eq!(o.key("status"), "SubproblemInfeasible");
}

#[test]
fn missing_file_is_an_input_error() {
    let o = gnepp(&["solve", "/nonexistent/missing.gnep"]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("cannot read"));
}

#[test]
fn verify_separates_equilibria_from_non_equilibria() {
    let yes = gnepp(&["verify", "--builtin", "intro-1.4", "--point", "0,0"]);
    assert_eq!(yes.code, 0);
    assert_eq!(yes.key("verified"), "true");
    let no = gnepp(&["verify", "--builtin", "intro-1.4", "--point", "1,0"]);
    assert_eq!(no.code, 1);
    assert!(no.stdout.contains("better response (0.0000)"));
    let eps: f64 = no.key("eps").parse().unwrap();
    assert!((eps - 1.0).abs() <= 1e-6);
}

#[test]
fn verify_rejects_a_point_of_the_wrong_length() {
    let o = gnepp(&["verify", "--builtin", "intro-1.4", "--point", "0,0,0"]);
    assert_eq!(o.code, 3);
}

#[test]
fn certify_prints_a_potential() {
    let o = gnepp(&["certify", "--builtin", "ex4.6"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert_eq!(o.key("status"), "Certified");
    assert_eq!(o.key("shared_constraints"), "consistent");
    let p = o.key("potential");
    assert!(p.contains("x1_1*x2_1"), "{p}");
    // coefficients carry six decimals
    assert!(p.split_whitespace().filter(|t| t.contains('.')).all(|t| {
        let frac = t.split('.').nth(1).unwrap();
        frac.chars().take_while(char::is_ascii_digit).count() == 6
    }));
    assert!(o.key("residual").parse::<f64>().unwrap() <= 1e-6);
}

#[test]
fn certify_handles_a_four_player_game() {
    let o = gnepp(&["certify", "--builtin", "ex5.3"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert_eq!(o.key("status"), "Certified");
}

#[test]
fn certify_flags_unlisted_shared_constraints() {
    let o = gnepp(&["certify", "--builtin", "ex3.2-cycle"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert_eq!(o.key("shared_constraints"), "unverified");
    assert!(o.stdout.contains("warning: constraint 1 of player 1"));
}

#[test]
fn bench_with_no_runs_prints_an_empty_table() {
    let o = gnepp(&["bench", "--players", "2", "--dims", "1", "--deg", "2", "--constraint", "ball", "--count", "0"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.key("count"), "0");
    assert_eq!(o.key("successes"), "0");
}

#[test]
fn bench_solves_small_ball_games() {
    let o = gnepp(&["bench", "--players", "2", "--dims", "1", "--deg", "2", "--constraint", "ball", "--count", "3"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.key("count"), "3");
    assert_eq!(o.key("run.0").split_whitespace().next(), Some("random-ball-1x1-d2-seed1"));
    let rate: f64 = o.key("success_rate").parse().unwrap();
    assert!(rate >= 2.0 / 3.0 * 100.0 - 1e-9, "{}", o.stdout);
}

#[test]
fn bench_is_deterministic_in_the_seed() {
    let args = ["bench", "--players", "2", "--dims", "1", "--deg", "2", "--constraint", "simplex", "--count", "2", "--seed", "7"];
    let (a, b) = (gnepp(&args), gnepp(&args));
    let strip = |o: &Out| o.machine().into_iter().filter(|(k, _)| !k.starts_with("run.")).collect::<HashMap<_, _>>();
    assert_eq!(strip(&a), strip(&b));
    let eps = |o: &Out, k: &str| o.key(k).split_whitespace().find(|t| t.starts_with("eps=")).map(str::to_string);
    assert_eq!(eps(&a, "run.0"), eps(&b, "run.0"));
}

#[test]
fn pop_minimizes_over_a_half_line() {
    let f = problem_file("lin", "name lin\nplayers 1\nblock x1 1\nplayer 1\nobjective: x1_1\nconstraint: x1_1 - 1 >= 0\n");
    let o = gnepp(&["pop", f.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert_eq!(o.key("status"), "MinimizersExtracted");
    assert!((o.key("value").parse::<f64>().unwrap() - 1.0).abs() <= 1e-6);
    assert!((floats(&o.key("minimizers"))[0] - 1.0).abs() <= 1e-4);
}

#[test]
fn pop_finds_both_wells() {
    let f = problem_file("well", "name well\nplayers 1\nblock x1 1\nplayer 1\nobjective: (x1_1^2 - 1)^2\n");
    let o = gnepp(&["pop", f.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    let mut mins: Vec<f64> = o.key("minimizers").split(';').map(|t| t.parse().unwrap()).collect();
    mins.sort_by(f64::total_cmp);
    assert_eq!(mins.len(), 2);
    assert!((mins[0] + 1.0).abs() <= 1e-4 && (mins[1] - 1.0).abs() <= 1e-4);
}

#[test]
fn pop_detects_an_empty_feasible_set() {
    let f = problem_file(
        "empty",
        "name empty\nplayers 1\nblock x1 1\nplayer 1\nobjective: x1_1\nconstraint: x1_1 - 1 >= 0\nconstraint: -x1_1 >= 0\n",
    );
    let o = gnepp(&["pop", f.to_str().unwrap()]);
    assert_eq!(o.code, 2, "{}", o.stdout);
    assert_eq!(o.key("status"), "Infeasible");
}

#[test]
fn malformed_input_is_rejected() {
    let f = problem_file("syntax", "players 1\nblock x1 1\nplayer 1\nobjective: x1_1 +* 2\n");
    let o = gnepp(&["pop", f.to_str().unwrap()]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("line 4"), "{}", o.stderr);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(gnepp(&["frobnicate"]).code, 3);
    assert_eq!(gnepp(&["solve"]).code, 3);
    assert_eq!(gnepp(&["solve", "--builtin", "no-such-example"]).code, 3);
    assert_eq!(gnepp(&["bench", "--dims", "1", "--deg", "2", "--constraint", "cube"]).code, 3);
    assert_eq!(gnepp(&["--help"]).code, 0);
}
