//! Line-oriented text format for finite multi-goal MDPs.
//!
//! ```text
//! # comment
//! states 2
//! actions 1
//! goals 2
//! discount 0.9
//! phi 0 1
//! goal_dist 0.5 0.5
//! init 0 1 0          # init <g> ρ_0(·|g)
//! init 1 0 1
//! p 0 0 0 1           # p <s> <a> P(·|s,a)
//! p 1 0 1 0
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so save then load
//! reproduces the model exactly.

use std::fmt::Write as _;
use std::path::Path;

use mgrl_core::mdp::{FiniteMultiGoalMdp, MdpParts, PROB_TOL};

use crate::error::{CliError, CliResult};

struct Parser<'a> {
    path: &'a Path,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::MdpFile {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn count(&self, fields: &[&str]) -> CliResult<usize> {
        match fields {
            [v] => v.parse().map_err(|_| self.err(format!("'{v}' is not a count"))),
            _ => Err(self.err("expected one value")),
        }
    }

    fn floats(&self, fields: &[&str], n: usize) -> CliResult<Vec<f64>> {
        if fields.len() != n {
            return Err(self.err(format!("expected {n} probabilities, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| self.err(format!("'{v}' is not a number"))))
            .collect()
    }

    fn distribution(&self, fields: &[&str], n: usize) -> CliResult<Vec<f64>> {
        let row = self.floats(fields, n)?;
        if let Some(p) = row.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(self.err(format!("probability {p} is negative or not finite")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(self.err(format!("row sums to {total}, not 1")));
        }
        Ok(row)
    }

    fn index(&self, v: &str, bound: usize, what: &str) -> CliResult<usize> {
        match v.parse::<usize>() {
            Ok(i) if i < bound => Ok(i),
            _ => Err(self.err(format!("{what} index '{v}' outside 0..{bound}"))),
        }
    }
}

pub fn parse_mdp(text: &str, path: &Path) -> CliResult<FiniteMultiGoalMdp> {
    let mut p = Parser { path, line: 0 };
    let (mut states, mut actions, mut goals, mut discount) = (None, None, None, None);
    let mut phi: Option<Vec<usize>> = None;
    let mut goal_dist: Option<Vec<f64>> = None;
    let mut init: Vec<Option<Vec<f64>>> = Vec::new();
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (key, rest) = (fields[0], &fields[1..]);
        let header_done = |p: &Parser| -> CliResult<(usize, usize, usize)> {
            match (states, actions, goals) {
                (Some(s), Some(a), Some(g)) => Ok((s, a, g)),
                _ => Err(p.err("states, actions and goals must come first")),
            }
        };
        match key {
            "states" | "actions" | "goals" => {
                let n = p.count(rest)?;
                if n == 0 {
                    return Err(p.err(format!("{key} must be positive")));
                }
                let slot = match key {
                    "states" => &mut states,
                    "actions" => &mut actions,
                    _ => &mut goals,
                };
                if slot.replace(n).is_some() {
                    return Err(p.err(format!("duplicate '{key}'")));
                }
                if let (Some(s), Some(a), Some(g)) = (states, actions, goals) {
                    init = vec![None; g];
                    rows = vec![None; s * a];
                }
            }
            "discount" => {
                let v = p.floats(rest, 1)?[0];
                if discount.replace(v).is_some() {
                    return Err(p.err("duplicate 'discount'"));
                }
            }
            "phi" => {
                let (s, _, g) = header_done(&p)?;
                if rest.len() != s {
                    return Err(p.err(format!("expected {s} goal indices")));
                }
                let map = rest
                    .iter()
                    .map(|v| p.index(v, g, "goal"))
                    .collect::<CliResult<Vec<_>>>()?;
                if phi.replace(map).is_some() {
                    return Err(p.err("duplicate 'phi'"));
                }
            }
            "goal_dist" => {
                let (_, _, g) = header_done(&p)?;
                if goal_dist.replace(p.distribution(rest, g)?).is_some() {
                    return Err(p.err("duplicate 'goal_dist'"));
                }
            }
            "init" => {
                let (s, _, g) = header_done(&p)?;
                let (first, tail) = rest.split_first().ok_or_else(|| p.err("missing goal index"))?;
                let goal = p.index(first, g, "goal")?;
                if init[goal].replace(p.distribution(tail, s)?).is_some() {
                    return Err(p.err(format!("duplicate init row for goal {goal}")));
                }
            }
            "p" => {
                let (s, a, _) = header_done(&p)?;
                if rest.len() < 2 {
                    return Err(p.err("expected 'p <s> <a> probabilities…'"));
                }
                let state = p.index(rest[0], s, "state")?;
                let action = p.index(rest[1], a, "action")?;
                if rows[state * a + action]
                    .replace(p.distribution(&rest[2..], s)?)
                    .is_some()
                {
                    return Err(p.err(format!("duplicate row for ({state}, {action})")));
                }
            }
            other => return Err(p.err(format!("unknown keyword '{other}'"))),
        }
    }
    p.line = text.lines().count();
    let (s, a, g) = match (states, actions, goals) {
        (Some(s), Some(a), Some(g)) => (s, a, g),
        _ => return Err(p.err("missing states, actions or goals")),
    };
    let missing = |what: String| p.err(format!("missing {what}"));
    let mut transition = Vec::with_capacity(s * a * s);
    for (i, row) in rows.into_iter().enumerate() {
        transition.extend(row.ok_or_else(|| missing(format!("row p {} {}", i / a, i % a)))?);
    }
    let mut init_dist = Vec::with_capacity(g * s);
    for (goal, row) in init.into_iter().enumerate() {
        init_dist.extend(row.ok_or_else(|| missing(format!("init row for goal {goal}")))?);
    }
    let parts = MdpParts {
        n_states: s,
        n_actions: a,
        n_goals: g,
        transition,
        goal_map: phi.ok_or_else(|| missing("phi".into()))?,
        goal_dist: goal_dist.ok_or_else(|| missing("goal_dist".into()))?,
        init_dist,
        discount: discount.ok_or_else(|| missing("discount".into()))?,
    };
    FiniteMultiGoalMdp::from_parts(parts).map_err(|e| p.err(e.to_string()))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

pub fn format_mdp(mdp: &FiniteMultiGoalMdp) -> String {
    let parts = mdp.parts();
    let (s, a) = (parts.n_states, parts.n_actions);
    let mut out = String::new();
    writeln!(out, "# finite multi-goal MDP").unwrap();
    writeln!(out, "states {s}\nactions {a}\ngoals {}", parts.n_goals).unwrap();
    writeln!(out, "discount {}", parts.discount).unwrap();
    let phi: Vec<String> = parts.goal_map.iter().map(usize::to_string).collect();
    writeln!(out, "phi {}", phi.join(" ")).unwrap();
    writeln!(out, "goal_dist {}", join(&parts.goal_dist)).unwrap();
    for (g, row) in parts.init_dist.chunks(s).enumerate() {
        writeln!(out, "init {g} {}", join(row)).unwrap();
    }
    for (i, row) in parts.transition.chunks(s).enumerate() {
        writeln!(out, "p {} {} {}", i / a, i % a, join(row)).unwrap();
    }
    out
}

pub fn load_mdp(path: &Path) -> CliResult<FiniteMultiGoalMdp> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_mdp(&text, path)
}

pub fn save_mdp(mdp: &FiniteMultiGoalMdp, path: &Path) -> CliResult<()> {
    std::fs::write(path, format_mdp(mdp)).map_err(|e| CliError::io(path, e))
}
