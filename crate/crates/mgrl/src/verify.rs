//! Verification suites: exact identities checked against the oracles, plus two
//! seeded learning experiments. Each suite returns its checks; the caller
//! prints and gates on them.

use std::path::Path;
use std::time::Instant;

use mgrl_core::approx::{collect_trajectory, deep_delta_dqn_step, DeepQ, DeepStepConfig, GoalEnv, Mlp, ReplayBuffer};
use mgrl_core::envs::{dyadic_tree_mdp, make_deterministic_reachable_mdp, make_random_mdp, FreezeSpec, TorusEnv};
use mgrl_core::oracle::{
    expected_update_delta_ac, expected_update_delta_ac_with_baseline, expected_update_delta_dqn,
    expected_update_delta_td, expected_update_her, finite_difference_grad_j, her_distribution, her_fixed_point,
    mass_profile, solve_m_pi, solve_q_star, uniform_state_action, uniform_state_goal, HerConfig,
};
use mgrl_core::policy::{epsilon_greedy, softmax_policy, TabularPolicy};
use mgrl_core::rng::Pcg32;
use mgrl_core::tables::sup_norm;
use mgrl_core::tabular::delta_dqn_update_moments;
use serde::Serialize;

use crate::config::{Environment, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::run::{csv_bytes, execute};

pub const SCHEMA_VERSION: u32 = 1;

pub const SUITES: [&str; 10] = [
    "her_unbiased",
    "her_bias",
    "dqn_fixed_point",
    "td_fixed_point",
    "policy_gradient",
    "dyadic_mass",
    "freeze_behavior",
    "vanishing_reward",
    "torus_learning",
    "determinism",
];

/// Shipped presets the learning suites run.
pub const PRESETS: [(&str, &str); 5] = [
    ("freeze_her.toml", include_str!("../../../configs/freeze_her.toml")),
    (
        "freeze_delta_dqn.toml",
        include_str!("../../../configs/freeze_delta_dqn.toml"),
    ),
    ("torus2_her.toml", include_str!("../../../configs/torus2_her.toml")),
    (
        "torus2_delta_dqn.toml",
        include_str!("../../../configs/torus2_delta_dqn.toml"),
    ),
    ("torus2_uvfa.toml", include_str!("../../../configs/torus2_uvfa.toml")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::Lt => measured < threshold,
            Relation::Le => measured <= threshold,
            Relation::Gt => measured > threshold,
            Relation::Ge => measured >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    /// Residual checks whose threshold `--tol` replaces.
    pub overridable: bool,
    pub passed: bool,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {}/{}: measured {:.6e} {} {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.measured,
            self.relation.symbol(),
            self.threshold
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub tolerance_override: Option<f64>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn find(&self, suite: &str, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.suite == suite && c.name == name)
    }
}

struct Recorder {
    suite: &'static str,
    tol: Option<f64>,
    checks: Vec<Check>,
}

impl Recorder {
    fn push(&mut self, name: &str, measured: f64, relation: Relation, threshold: f64, overridable: bool) {
        let threshold = match (overridable, self.tol) {
            (true, Some(t)) => t,
            _ => threshold,
        };
        self.checks.push(Check {
            suite: self.suite.to_string(),
            name: name.to_string(),
            measured,
            relation,
            threshold,
            overridable,
            // NaN never passes
            passed: relation.holds(measured, threshold),
        });
    }

    fn residual(&mut self, name: &str, measured: f64, threshold: f64) {
        self.push(name, measured, Relation::Le, threshold, true);
    }

    fn flag(&mut self, name: &str, holds: bool) {
        self.push(name, holds as u8 as f64, Relation::Ge, 1.0, false);
    }

    fn runtime(&mut self, started: Instant, limit_s: f64) {
        self.push(
            "runtime_s",
            started.elapsed().as_secs_f64(),
            Relation::Lt,
            limit_s,
            false,
        );
    }
}

fn preset(name: &str) -> ExperimentConfig {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).expect("known preset");
    ExperimentConfig::parse(text, Path::new(name)).expect("shipped presets parse")
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    dot / (na * nb).sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Exact HER update at `Q* ` on deterministic strongly connected MDPs.
fn her_unbiased(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let mut rng = Pcg32::new(101);
    let (mut worst, mut connected) = (0.0f64, true);
    for _ in 0..20 {
        let mdp = make_deterministic_reachable_mdp(2 + rng.below(5), 2 + rng.below(2), 0.9, &mut rng)?;
        connected &= mdp.is_deterministic() && mdp.is_strongly_connected();
        let q = solve_q_star(&mdp, 1e-14, 100_000)?.to_raw(&mdp);
        let cfg = HerConfig::new(epsilon_greedy(&q, 0.2), 0.8, 0.9, 0.9);
        let dist = her_distribution(&mdp, &cfg)?;
        worst = worst.max(sup_norm(expected_update_her(&mdp, &dist, &q, &q).values()));
    }
    r.flag("models_deterministic_and_connected", connected);
    r.residual("max_sup_expected_update", worst, 1e-10);
    r.runtime(started, 10.0);
    Ok(())
}

/// HER fixed point overshoots `Q*` on the freeze action.
fn her_bias(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let mut rng = Pcg32::new(202);
    let (mut margin, mut formula) = (f64::INFINITY, 0.0f64);
    for _ in 0..10 {
        let spec = FreezeSpec::new(&make_random_mdp(5, 2, 3, 0.9, &mut rng)?)?;
        let mdp = spec.mdp();
        let n = spec.base_states();
        let gamma = mdp.discount();
        let explore = TabularPolicy::uniform(mdp.n_states(), mdp.n_goals(), mdp.n_actions());
        let dist = her_distribution(mdp, &HerConfig::new(explore, 0.8, gamma, gamma))?;
        let q_star = solve_q_star(mdp, 1e-14, 100_000)?.to_raw(mdp);
        let fixed = her_fixed_point(mdp, &dist, 1e-13, 100_000)?;
        let a = spec.freeze_action();
        for s in 0..n {
            for g in 0..mdp.n_goals() {
                let unfrozen = spec.state(s, false);
                margin = margin.min(fixed.get(unfrozen, a, g) - q_star.get(unfrozen, a, g));
                let expect = mdp.reward(unfrozen, g) + gamma / (n as f64 * (1.0 - gamma));
                formula = formula.max((q_star.get(unfrozen, a, g) - expect).abs());
            }
        }
    }
    r.push("min_overestimate", margin, Relation::Gt, 0.0, false);
    r.residual("max_q_star_formula_error", formula, 1e-9);
    r.runtime(started, 30.0);
    Ok(())
}

/// Largest `|mean| / (std/√N)`; zero-variance coordinates count only if their mean moved.
fn max_z(moments: &mgrl_core::tabular::UpdateMoments) -> f64 {
    let root = (moments.samples as f64).sqrt();
    moments
        .mean
        .iter()
        .zip(&moments.std)
        .map(|(m, s)| match (*m == 0.0, *s == 0.0) {
            (true, _) => 0.0,
            (false, true) => f64::INFINITY,
            (false, false) => m.abs() * root / s,
        })
        .fold(0.0, f64::max)
}

/// δ-DQN update vanishes at the density fixed point, exactly and in sample mean.
fn dqn_fixed_point(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let mut rng = Pcg32::new(303);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let ns = 2 + rng.below(5);
        let mdp = make_random_mdp(ns, 2 + rng.below(2), (2 + rng.below(2)).min(ns), 0.9, &mut rng)?;
        let q = solve_q_star(&mdp, 1e-14, 100_000)?;
        let upd = expected_update_delta_dqn(&mdp, &q, &q, &uniform_state_action(&mdp))?;
        worst = worst.max(sup_norm(upd.values()));
    }
    r.residual("max_sup_expected_update", worst, 1e-10);
    let mdp = make_random_mdp(4, 2, 3, 0.9, &mut rng)?;
    let q = solve_q_star(&mdp, 1e-14, 100_000)?;
    let moments = delta_dqn_update_moments(&mdp, &q, &q, &uniform_state_action(&mdp), 1_000_000, &mut rng)?;
    r.residual("max_mc_z_score", max_z(&moments), 4.0);
    r.runtime(started, 60.0);
    Ok(())
}

/// δ-TD(n) update vanishes at `m^π`.
fn td_fixed_point(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let mut rng = Pcg32::new(404);
    let mut worst = [0.0f64; 3];
    for _ in 0..20 {
        let ns = 2 + rng.below(5);
        let mdp = make_random_mdp(ns, 2 + rng.below(2), (2 + rng.below(2)).min(ns), 0.9, &mut rng)?;
        let pi = TabularPolicy::random(mdp.n_states(), mdp.n_goals(), mdp.n_actions(), &mut rng);
        assert!(pi.has_full_support());
        let m = solve_m_pi(&mdp, &pi)?;
        for (i, w) in worst.iter_mut().enumerate() {
            let upd = expected_update_delta_td(&mdp, &pi, &m, &m, &uniform_state_goal(&mdp), i + 1)?;
            *w = w.max(sup_norm(upd.values()));
        }
    }
    for (i, w) in worst.iter().enumerate() {
        r.residual(&format!("max_sup_expected_update_n{}", i + 1), *w, 1e-10);
    }
    r.runtime(started, 60.0);
    Ok(())
}

/// Exact δ-AC direction against finite differences of the exact return.
fn policy_gradient(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let mut rng = Pcg32::new(505);
    let (mut min_cos, mut baseline) = (f64::INFINITY, 0.0f64);
    for _ in 0..10 {
        let (ns, na) = (2 + rng.below(3), 2 + rng.below(2));
        let mdp = make_random_mdp(ns, na, 2, 0.9, &mut rng)?;
        let logits: Vec<f64> = (0..ns * ns * na).map(|_| rng.normal()).collect();
        let pi = softmax_policy(ns, ns, na, &logits)?;
        let m = solve_m_pi(&mdp, &pi)?;
        let upd = expected_update_delta_ac(&mdp, &pi, &m)?;
        let fd = finite_difference_grad_j(&mdp, &logits, 1e-5)?;
        min_cos = min_cos.min(cosine(&upd, &fd));
        let b: Vec<f64> = (0..ns * ns).map(|_| 5.0 * rng.normal()).collect();
        let shifted = expected_update_delta_ac_with_baseline(&mdp, &pi, &m, &b)?;
        baseline = baseline.max(max_abs_diff(&upd, &shifted));
    }
    r.push("min_cosine_vs_finite_differences", min_cos, Relation::Ge, 0.999, false);
    r.residual("max_baseline_shift", baseline, 1e-10);
    r.runtime(started, 60.0);
    Ok(())
}

/// Mass of `T^t · 0` on the dyadic tree.
fn dyadic_mass(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let tree = dyadic_tree_mdp(12, 0.4)?;
    let low = mass_profile(&tree, 0.4, 12)?;
    let high = mass_profile(&tree, 0.6, 12)?;
    r.flag("monotone_low_discount", low.monotone);
    r.flag("monotone_high_discount", high.monotone);
    // 1 + Σ_{k≥1} γ^k 2^{k−1} = 1 + γ/(1 − 2γ) = 3 at γ = 0.4
    let limit = 1.0 + 0.4 / (1.0 - 0.8);
    let bound = 0.5 * 0.8f64.powi(12) / (1.0 - 0.8);
    let last = *low.masses.last().expect("horizon 12");
    // the bound is the exact tail of the series, so the gap meets it up to rounding
    r.push(
        "limit_gap_over_tail_bound",
        (limit - last - bound) / bound,
        Relation::Le,
        1e-9,
        false,
    );
    r.push("limit_gap_positive", limit - last, Relation::Gt, 0.0, false);
    r.residual(
        "reported_limit_error",
        (low.limit.unwrap_or(f64::NAN) - limit).abs(),
        1e-12,
    );
    r.flag("converges_low_discount", !low.diverges);
    r.flag("diverges_high_discount", high.diverges);
    r.runtime(started, 5.0);
    Ok(())
}

/// Greedy frequency of the freeze action after learning, HER against δ-DQN.
fn freeze_behavior(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let her = execute(&preset("freeze_her.toml"))?;
    let dqn = execute(&preset("freeze_delta_dqn.toml"))?;
    let frac = |run: &crate::run::RunResult| {
        run.final_metrics
            .get("freeze_action_fraction")
            .copied()
            .unwrap_or(f64::NAN)
    };
    r.push("her_freeze_fraction", frac(&her), Relation::Gt, 0.9, false);
    r.push("delta_dqn_freeze_fraction", frac(&dqn), Relation::Lt, 0.2, false);
    r.runtime(started, 120.0);
    Ok(())
}

/// Sparse rewards almost never fire on Torus(4); the Dirac term always does.
fn vanishing_reward(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let env = TorusEnv::new(4);
    let mut rng = Pcg32::new(808);
    let mut buffer = ReplayBuffer::new(200_000);
    let (mut hits, mut total) = (0usize, 0usize);
    while total < 100_000 {
        let traj = collect_trajectory(&env, None, 1.0, &mut rng);
        for s in &traj.states[..traj.len()] {
            hits += (env.sparse_reward(s, &traj.goal) != 0.0) as usize;
        }
        total += traj.len();
        buffer.push(traj)?;
    }
    r.push("reward_fraction", hits as f64 / total as f64, Relation::Lt, 1e-2, false);
    let mut agent = DeepQ::new(env.input_dim(), &[64, 64], GoalEnv::n_actions(&env), &mut rng)?;
    let cfg = DeepStepConfig {
        batch: 256,
        lr: 1e-5,
        c_delta: 1e-2,
        reward_scale: 1.0,
        future_prob: 0.0,
    };
    let (mut fired, mut samples) = (0usize, 0usize);
    for _ in 0..10 {
        let stats = deep_delta_dqn_step(&mut agent, &buffer, &env, &cfg, &mut rng)?;
        fired += stats.dirac_terms;
        samples += stats.samples;
    }
    r.push(
        "dirac_fraction",
        fired as f64 / samples as f64,
        Relation::Ge,
        1.0,
        false,
    );
    r.runtime(started, 30.0);
    Ok(())
}

/// Deep learners on Torus(2); the random baseline ends at distance 0.25.
fn torus_learning(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    for (name, label) in [("torus2_delta_dqn.toml", "delta_dqn"), ("torus2_her.toml", "her")] {
        let run = execute(&preset(name))?;
        let d = run
            .final_metrics
            .get("mean_final_distance")
            .copied()
            .unwrap_or(f64::NAN);
        r.push(&format!("{label}_final_distance"), d, Relation::Lt, 0.15, false);
    }
    r.runtime(started, 600.0);
    Ok(())
}

/// Central-difference check of backprop on a network; returns the largest
/// `|grad − fd| / max(max|fd|, 1e-12)`.
pub fn backprop_relative_error(net: &Mlp, input: &[f64], seed: &[f64]) -> CliResult<f64> {
    let grad = net.param_gradient(input, seed)?;
    let h = 1e-5;
    let mut probe = net.clone();
    let mut fd = Vec::with_capacity(grad.len());
    let dot = |p: &Mlp| -> f64 { p.forward(input).iter().zip(seed).map(|(y, s)| y * s).sum() };
    for i in 0..net.n_params() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + h;
        let up = dot(&probe);
        probe.params_mut()[i] = orig - h;
        let down = dot(&probe);
        probe.params_mut()[i] = orig;
        fd.push((up - down) / (2.0 * h));
    }
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    Ok(max_abs_diff(&grad, &fd) / scale)
}

/// Shipped deep presets: `[input, hidden.., actions]`.
pub fn shipped_architectures() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for (name, _) in PRESETS {
        let cfg = preset(name);
        if let (Some(algo), Ok(Environment::Torus(env))) = (cfg.algo.deep(), cfg.build_env()) {
            let mut widths = vec![env.input_dim()];
            widths.extend(cfg.deep.deep_config(algo).hidden);
            widths.push(GoalEnv::n_actions(&env));
            if !out.contains(&widths) {
                out.push(widths);
            }
        }
    }
    out
}

/// In-process repeat of a tabular run, and backprop on the shipped networks.
fn determinism(r: &mut Recorder) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = preset("freeze_her.toml");
    cfg.tabular.updates = 20_000;
    cfg.tabular.eval_interval = 2_000;
    let a = csv_bytes(&execute(&cfg)?.rows)?;
    let b = csv_bytes(&execute(&cfg)?.rows)?;
    r.flag("repeat_run_csv_identical", a == b);
    let mut rng = Pcg32::new(1010);
    let mut worst = 0.0f64;
    for widths in shipped_architectures() {
        let net = Mlp::new(&widths, &mut rng)?;
        for _ in 0..2 {
            let input: Vec<f64> = (0..widths[0]).map(|_| rng.normal()).collect();
            let seed: Vec<f64> = (0..*widths.last().expect("widths")).map(|_| rng.normal()).collect();
            worst = worst.max(backprop_relative_error(&net, &input, &seed)?);
        }
    }
    r.residual("backprop_max_relative_error", worst, 1e-4);
    r.runtime(started, 120.0);
    Ok(())
}

pub fn run_suite(suite: &str, tol: Option<f64>) -> CliResult<SuiteReport> {
    let names: Vec<&'static str> = match suite {
        "all" => SUITES.to_vec(),
        s => vec![*SUITES.iter().find(|n| **n == s).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown suite '{s}'; expected one of {} or all",
                SUITES.join(", ")
            ))
        })?],
    };
    let mut checks = Vec::new();
    for name in names {
        let mut rec = Recorder {
            suite: name,
            tol,
            checks: Vec::new(),
        };
        match name {
            "her_unbiased" => her_unbiased(&mut rec)?,
            "her_bias" => her_bias(&mut rec)?,
            "dqn_fixed_point" => dqn_fixed_point(&mut rec)?,
            "td_fixed_point" => td_fixed_point(&mut rec)?,
            "policy_gradient" => policy_gradient(&mut rec)?,
            "dyadic_mass" => dyadic_mass(&mut rec)?,
            "freeze_behavior" => freeze_behavior(&mut rec)?,
            "vanishing_reward" => vanishing_reward(&mut rec)?,
            "torus_learning" => torus_learning(&mut rec)?,
            "determinism" => determinism(&mut rec)?,
            _ => unreachable!("suite list is closed"),
        }
        checks.extend(rec.checks);
    }
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        suite: suite.to_string(),
        tolerance_override: tol,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
