//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Heavy criteria run the full schedule (α = 0.99, L = 30, 390 levels) on the
//! bundled 13-node instance.

use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use undp::output::{self, SolutionRow, TraceRow};
use undp::{execute, run_chains, sweep, Mode, RunConfig, RunReport, Session};
use undp_core::oracle::{relative_gap, solve_ue_msa, OracleConfig};
use undp_core::{
    signal_delay, solution_cost, x_kink, Annealer, CostParams, GpConfig, Link, LinkCost, Network, OdMatrix,
    OdPair, SaMode, SaParams, Solution, UeProblem,
};

const REFERENCE_BASE: f64 = 7_615_000.0;
const BASE_BAND: f64 = 0.15;
const JOINT_MIN: f64 = 0.08;
const SIGNALS_MIN: f64 = 0.03;
const SEEDS: usize = 3;
const ASSIGN_WALL: Duration = Duration::from_secs(1);
const JOINT_WALL: Duration = Duration::from_secs(60);
const SCHEDULE_EVALUATIONS: usize = 11_700;
const FLOW_AGREEMENT: f64 = 0.01;
const DERIVATIVE_REL: f64 = 1e-6;
const KINK_CONTINUITY: f64 = 1e-9;
const BECKMANN_REL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference_config(mode: Mode, out: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.run.mode = mode;
    c.run.out = out.to_path_buf();
    c
}

fn session(mode: Mode) -> Session {
    Session::new(reference_config(mode, std::path::Path::new("unused"))).expect("reference session")
}

fn ue_problem_flows(network: &Network, od: &OdMatrix, params: &CostParams, gp: &GpConfig) -> Vec<f64> {
    let s = Solution::uniform(network, 0.5);
    UeProblem::new(network, od, &s, params).unwrap().solve(gp, None).unwrap().link_flows
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let report = execute(reference_config(Mode::Assign, dir.path())).expect("assign run");
    let wall = start.elapsed();
    let a = report.assignment.as_ref().unwrap();
    let pass = a.converged && a.error <= 1e-3 && a.iterations <= 500 && wall <= ASSIGN_WALL;
    outcome(
        pass,
        format!("Err {:.2e} <= 1e-3 after {} GP iterations (<= 500), {:.1} ms (<= 1 s)", a.error, a.iterations, wall.as_secs_f64() * 1e3),
    )
}

/// Compares GP and MSA on links carrying at least 1% of total demand, both
/// driven to the same relative gap.
fn compare_with_msa(name: &str, network: &Network, od: &OdMatrix, params: &CostParams, exact: Option<&[f64]>) -> (bool, String) {
    let s = Solution::uniform(network, 0.5);
    let gp_flows = ue_problem_flows(network, od, params, &GpConfig { tolerance: 1e-10, max_iterations: 20_000, ..GpConfig::default() });
    let gp_gap = relative_gap(network, od, &s, params, &gp_flows).unwrap();
    let msa = solve_ue_msa(network, od, &s, params, &OracleConfig { max_iterations: 200_000, gap_tolerance: gp_gap.max(1e-7) }).unwrap();
    let floor = 0.01 * od.total_demand();
    let mut worst: f64 = 0.0;
    for (g, m) in gp_flows.iter().zip(&msa.link_flows) {
        if g.max(*m) >= floor {
            worst = worst.max((g - m).abs() / g.max(*m));
        }
    }
    let mut ok = worst <= FLOW_AGREEMENT;
    let mut detail = format!("{name}: max rel diff {worst:.1e} (gaps GP {gp_gap:.1e}, MSA {:.1e})", msa.relative_gap);
    if let Some(x) = exact {
        let e = gp_flows.iter().zip(x).map(|(g, x)| (g - x).abs() / x.abs().max(1.0)).fold(0.0, f64::max);
        ok &= e <= 1e-6;
        detail += &format!(", GP vs exact {e:.1e}");
    }
    (ok, detail)
}

fn criterion_2() -> Outcome {
    let linear = CostParams { bpr_alpha: 1.0, bpr_beta: 1.0, ..CostParams::default() };
    // t1 = 10 + x1, t2 = 20 + x2 (via a zero-cost connector), q = 30
    let two = Network::new(
        vec![Link::new(1, 2, 10.0, 10.0), Link::new(1, 3, 20.0, 20.0), Link::new(3, 2, 1e-9, 1e30)],
        0.0,
    )
    .unwrap();
    let two_od = OdMatrix::new(vec![OdPair { origin: 1, destination: 2, demand: 30.0 }]).unwrap();
    // 1-2 and 3-4: 1 + 10x; 2-4 and 1-3: 50 + x; 2-3: 10 + x; q = 6
    let braess = Network::new(
        vec![
            Link::new(1, 2, 1.0, 0.1),
            Link::new(2, 4, 50.0, 50.0),
            Link::new(1, 3, 50.0, 50.0),
            Link::new(3, 4, 1.0, 0.1),
            Link::new(2, 3, 10.0, 10.0),
        ],
        0.0,
    )
    .unwrap();
    let braess_od = OdMatrix::new(vec![OdPair { origin: 1, destination: 4, demand: 6.0 }]).unwrap();
    let (a, b) = (27.0 / 13.0, 24.0 / 13.0);
    let reference = session(Mode::Assign);

    let runs = [
        compare_with_msa("two-link", &two, &two_od, &linear, Some(&[20.0, 10.0, 10.0])),
        compare_with_msa("Braess", &braess, &braess_od, &linear, Some(&[a + b, a, a, a + b, b])),
        compare_with_msa("reference", reference.network(), reference.od(), &reference.params, None),
    ];
    let pass = runs.iter().all(|r| r.0);
    outcome(pass, runs.iter().map(|r| r.1.as_str()).collect::<Vec<_>>().join("; "))
}

fn criterion_3() -> Outcome {
    let s = session(Mode::Assign);
    let base = |params: &CostParams| {
        let n = s.network();
        let sol = Solution::uniform(n, 0.5);
        UeProblem::new(n, s.od(), &sol, params).unwrap().solve(&s.gp, None).unwrap().total_travel_time
    };
    let e = base(&s.params);
    let dev = (e - REFERENCE_BASE) / REFERENCE_BASE;
    let hour = base(&CostParams { study_duration: 3600.0, ..s.params });
    let linear_bpr = base(&CostParams { bpr_beta: 1.0, ..s.params });
    outcome(
        dev.abs() <= BASE_BAND,
        format!(
            "base {e:.0} s vs 7615000 ({:+.2}%, band ±15%); sensitivity: T=3600 s -> {hour:.0}, beta=1 -> {linear_bpr:.0}",
            dev * 100.0
        ),
    )
}

fn criterion_4() -> Outcome {
    let s = session(Mode::Optimize);
    let (joint, signals) = thread::scope(|scope| {
        let j = scope.spawn(|| run_chains(&s, SaMode::Joint, SEEDS).unwrap());
        let g = scope.spawn(|| run_chains(&s, SaMode::SignalsOnly, SEEDS).unwrap());
        (j.join().unwrap(), g.join().unwrap())
    });
    let ji = joint.outcome.improvement();
    let si = signals.outcome.improvement();
    let pass = ji >= JOINT_MIN && si >= SIGNALS_MIN;
    outcome(
        pass,
        format!(
            "joint {:.2}% (>= 8%, best {:.0} s), signals-only {:.2}% (>= 3%), best of {SEEDS} seeds",
            ji * 100.0,
            joint.outcome.best_objective,
            si * 100.0
        ),
    )
}

#[derive(Default)]
struct Violations {
    solutions: usize,
    complementarity: usize,
    bounds: usize,
    budget: usize,
    gp_states: usize,
    conservation: usize,
    negativity: usize,
}

fn audit_run(s: &Session, mode: SaMode, seed: u64) -> Violations {
    let network = s.network();
    let budget = network.budget();
    let (lo, hi) = s.bounds.range();
    let mut v = Violations::default();
    let sa = SaParams { seed, ..s.sa };
    let out = Annealer::new(network, s.od(), s.params, sa, s.gp, s.bounds, mode)
        .run_observed(&mut |sol, result| {
            v.solutions += 1;
            for (i, sig) in network.signals().iter().enumerate() {
                let a = sol.green_ratio(network, sig.phase_a[0]).unwrap();
                let b = sol.green_ratio(network, sig.phase_b[0]).unwrap();
                let same_phase = sig.phase_a.iter().all(|&l| sol.green_ratio(network, l) == Some(a))
                    && sig.phase_b.iter().all(|&l| sol.green_ratio(network, l) == Some(b));
                if b != 1.0 - a || (a + b - 1.0).abs() > f64::EPSILON || !same_phase {
                    v.complementarity += 1;
                }
                let g = sol.green_split[i];
                if !(lo <= g && g <= hi) {
                    v.bounds += 1;
                }
            }
            if solution_cost(network, sol) > budget {
                v.budget += 1;
            }
            if mode == SaMode::SignalsOnly && sol.expanded_links().next().is_some() {
                v.budget += 1;
            }
            if result.link_flows.iter().any(|&x| !(x >= 0.0)) {
                v.negativity += 1;
            }
        })
        .unwrap();
    v.gp_states = out.audit.gp_states_checked;
    v.conservation += out.audit.demand_violations;
    v.negativity += out.audit.negative_flows;
    v
}

fn criterion_5() -> Outcome {
    let s = session(Mode::Optimize);
    let (joint, signals) = thread::scope(|scope| {
        let j = scope.spawn(|| audit_run(&s, SaMode::Joint, 101));
        let g = scope.spawn(|| audit_run(&s, SaMode::SignalsOnly, 101));
        (j.join().unwrap(), g.join().unwrap())
    });
    let total = |f: fn(&Violations) -> usize| f(&joint) + f(&signals);
    let bad = total(|v| v.complementarity) + total(|v| v.bounds) + total(|v| v.budget) + total(|v| v.conservation) + total(|v| v.negativity);
    outcome(
        bad == 0,
        format!(
            "{} solutions and {} GP states checked over two full runs; violations: complementarity {}, bounds {}, budget {}, conservation {}, negativity {}",
            total(|v| v.solutions),
            total(|v| v.gp_states),
            total(|v| v.complementarity),
            total(|v| v.bounds),
            total(|v| v.budget),
            total(|v| v.conservation),
            total(|v| v.negativity)
        ),
    )
}

/// Low-discrepancy points in [0, 1).
fn weyl(i: usize) -> f64 {
    (0.5 + i as f64 * 0.618_033_988_749_894_9).fract()
}

fn criterion_6() -> Outcome {
    let s = session(Mode::Assign);
    let network = s.network();
    let p = s.params;
    let mut solutions = vec![Solution::uniform(network, 0.5)];
    let mut varied = Solution::uniform(network, 0.5);
    varied.green_split = vec![0.2, 0.35, 0.61, 0.8, 0.44];
    for l in network.expandable_links().step_by(3) {
        varied.expand[l.index()] = true;
    }
    solutions.push(varied);

    // derivative against a five-point difference, 20 flows per link away from the kink
    let mut worst_derivative: f64 = 0.0;
    let mut worst_kink: f64 = 0.0;
    let mut k = 0;
    for sol in &solutions {
        for id in network.link_ids() {
            let c = LinkCost::for_link(network, id, sol, &p).unwrap();
            let mut n = 0;
            while n < 20 {
                k += 1;
                let x = c.capacity * (0.1 + 1.4 * weyl(k));
                let mut h = 1e-3 * x;
                if let Some(kink) = c.kink() {
                    if (x - kink).abs() < 1.0 {
                        continue;
                    }
                    h = h.min(0.01 * (x - kink).abs());
                }
                let t = |d: f64| c.time(x + d * h, &p);
                let fd = (t(-2.0) - 8.0 * t(-1.0) + 8.0 * t(1.0) - t(2.0)) / (12.0 * h);
                let an = c.derivative(x, &p);
                worst_derivative = worst_derivative.max((an - fd).abs() / an.abs());
                n += 1;
            }
            if let Some(signal) = c.signal {
                let kink = x_kink(&signal, &p);
                let below = signal_delay(kink * (1.0 - 1e-15), &signal, &p);
                let at = signal_delay(kink, &signal, &p);
                let above = signal_delay(kink * (1.0 + 1e-15), &signal, &p);
                worst_kink = worst_kink.max((at - below).abs()).max((above - at).abs());
            }
        }
    }

    // Beckmann across GP updates, base and varied solutions
    let mut worst_rise: f64 = 0.0;
    let mut updates = 0;
    let gp = GpConfig { tolerance: 1e-9, max_iterations: 2000, ..s.gp };
    for sol in &solutions {
        let mut last = f64::INFINITY;
        UeProblem::new(network, s.od(), sol, &p)
            .unwrap()
            .solve_observed(&gp, None, &mut |r, _| {
                if last.is_finite() {
                    worst_rise = worst_rise.max((r.beckmann - last) / last.abs());
                    updates += 1;
                }
                last = r.beckmann;
            })
            .unwrap();
    }
    let pass = worst_derivative <= DERIVATIVE_REL && worst_kink <= KINK_CONTINUITY && worst_rise <= BECKMANN_REL;
    outcome(
        pass,
        format!(
            "derivative vs finite differences {worst_derivative:.1e} (<= 1e-6); delay jump at kink {worst_kink:.1e} s (<= 1e-9); max Beckmann rise {worst_rise:.1e} over {updates} updates (<= 1e-9)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let s = session(Mode::Sensitivity);
    let levels = sweep(&s).unwrap();
    let series: Vec<(f64, f64)> = levels.iter().map(|l| (l.fraction, l.best_objective)).collect();
    let monotone = series.windows(2).all(|w| w[0].0 <= w[1].0 && w[1].1 <= w[0].1);
    let at = |f: f64| series.iter().find(|p| p.0 == f).unwrap().1;
    let first_half = at(0.0) - at(0.5);
    let second_half = at(0.5) - at(1.0);
    let text: Vec<String> = series.iter().map(|(f, e)| format!("{:.0}%:{:.0}", f * 100.0, e)).collect();
    outcome(
        monotone && second_half < first_half,
        format!("series {} ; gain 0->50% {first_half:.0}, 50->100% {second_half:.0}", text.join(" ")),
    )
}

fn optimize_into(dir: &std::path::Path, chains: usize) -> (RunReport, Duration) {
    let mut c = reference_config(Mode::Optimize, dir);
    c.sa.chains = chains;
    let start = Instant::now();
    let r = execute(c).expect("optimize run");
    (r, start.elapsed())
}

fn criterion_8(dir: &std::path::Path) -> Outcome {
    let trace: Vec<TraceRow> = output::read_file(&dir.join("trace.csv")).unwrap();
    let report = RunReport::read(&dir.join("report.json")).unwrap();
    let best = report.optimization.as_ref().unwrap().best_objective;
    let envelope = trace.windows(2).all(|w| w[1].best_objective <= w[0].best_objective);
    let first = trace.first().unwrap().best_objective;
    let last = trace.last().unwrap().best_objective;
    // hot start explores, cold end settles: accepted objectives spread more early on
    let quarter = trace.len() / 4;
    let spread = |rows: &[TraceRow]| {
        let v: Vec<f64> = rows.iter().filter(|r| r.accepted && !r.null_move).map(|r| r.objective).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let (early, late) = (spread(&trace[..quarter]), spread(&trace[3 * quarter..]));
    let pass = envelope && last < first && last == best && late < early;
    outcome(
        pass,
        format!(
            "{} rows, best-so-far non-increasing {envelope}, {first:.0} -> {last:.0}; accepted-objective spread first quarter {early:.0} vs last {late:.0}",
            trace.len()
        ),
    )
}

fn criterion_9(first: &std::path::Path) -> Outcome {
    let second = tempfile::tempdir().unwrap();
    optimize_into(second.path(), 2);
    let third = tempfile::tempdir().unwrap();
    optimize_into(third.path(), 2);
    let same = |name: &str| std::fs::read(second.path().join(name)).unwrap() == std::fs::read(third.path().join(name)).unwrap();
    let trace_same = same("trace.csv");
    let solution_same = same("solution.csv");
    let rows: Vec<SolutionRow> = output::read_file(&first.join("solution.csv")).unwrap();
    let s = session(Mode::Optimize);
    let reparsed = output::solution_from_rows(s.network(), &rows, &s.bounds).is_ok();
    outcome(
        trace_same && solution_same && reparsed,
        format!("two identical 2-chain runs: trace identical {trace_same}, solution identical {solution_same}; solution file re-validates {reparsed}"),
    )
}

fn criterion_10(report: &RunReport, wall: Duration) -> Outcome {
    let o = report.optimization.as_ref().unwrap();
    let pass = o.iterations == SCHEDULE_EVALUATIONS && wall <= JOINT_WALL;
    outcome(
        pass,
        format!("{} iterations ({} equilibrium solves) in {:.2} s (<= 60 s)", o.iterations, o.evaluations, wall.as_secs_f64()),
    )
}

fn main() -> ExitCode {
    let optimized = tempfile::tempdir().unwrap();
    let (report, wall) = optimize_into(optimized.path(), 1);

    let results: Vec<(&str, Outcome)> = vec![
        ("UE convergence", criterion_1()),
        ("oracle equivalence", criterion_2()),
        ("base objective plausibility", criterion_3()),
        ("joint optimization improvement", criterion_4()),
        ("constraint suite", criterion_5()),
        ("numerical checks", criterion_6()),
        ("budget monotonicity", criterion_7()),
        ("trace convergence profile", criterion_8(optimized.path())),
        ("determinism", criterion_9(optimized.path())),
        ("full run wall time", criterion_10(&report, wall)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
