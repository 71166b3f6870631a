use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid_param, Error, Result};
use crate::mdp::{FiniteMultiGoalMdp, MdpParts};
use crate::rng::Pcg32;

/// Random MDP with `branching` distinct successors per `(s, a)` row, weighted
/// by a Dirichlet-uniform draw. Goals are the states, `ρ_G` and `ρ_0` are uniform.
pub fn make_random_mdp(
    n_states: usize,
    n_actions: usize,
    branching: usize,
    discount: f64,
    rng: &mut Pcg32,
) -> Result<FiniteMultiGoalMdp> {
    if branching == 0 || branching > n_states {
        return Err(invalid_param("branching", format!("{branching} not in 1..={n_states}")));
    }
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    for row in transition.chunks_mut(n_states) {
        let support = rng.choose_distinct(n_states, branching);
        let weights = rng.dirichlet_uniform(branching);
        for (&s, w) in support.iter().zip(weights) {
            row[s] = w;
        }
    }
    FiniteMultiGoalMdp::with_identity_goals(n_states, n_actions, transition, discount)
}

/// Deterministic MDP where action 0 walks the cycle `s -> s + 1 mod S` and the
/// other actions jump to uniformly drawn states, so every state reaches every other.
pub fn make_deterministic_reachable_mdp(
    n_states: usize,
    n_actions: usize,
    discount: f64,
    rng: &mut Pcg32,
) -> Result<FiniteMultiGoalMdp> {
    if n_actions < 2 {
        return Err(invalid_param("n_actions", "need at least 2 actions"));
    }
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    for s in 0..n_states {
        for a in 0..n_actions {
            let next = if a == 0 {
                (s + 1) % n_states
            } else {
                rng.below(n_states)
            };
            transition[(s * n_actions + a) * n_states + next] = 1.0;
        }
    }
    let mdp = FiniteMultiGoalMdp::with_identity_goals(n_states, n_actions, transition, discount)?;
    assert!(
        mdp.is_strongly_connected(),
        "cycle action guarantees strong connectivity"
    );
    Ok(mdp)
}

/// Deterministic cyclic MDP: action `k` moves `s -> s + k + 1 mod S`. Needs
/// `A < S` so that no action self-loops.
pub fn shift_mdp(n_states: usize, n_actions: usize, discount: f64) -> Result<FiniteMultiGoalMdp> {
    if n_actions == 0 || n_actions >= n_states {
        return Err(invalid_param("n_actions", format!("{n_actions} not in 1..{n_states}")));
    }
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    for s in 0..n_states {
        for k in 0..n_actions {
            transition[(s * n_actions + k) * n_states + (s + k + 1) % n_states] = 1.0;
        }
    }
    FiniteMultiGoalMdp::with_identity_goals(n_states, n_actions, transition, discount)
}

/// Freeze-action augmentation of a base MDP.
///
/// Augmented state `(s, x)` has index `x * S + s`; `x = 1` means frozen.
/// The freeze action `a*` is the last action. Frozen states self-loop under
/// every action; `a*` from an unfrozen state lands uniformly on the frozen copies.
#[derive(Clone, Debug, PartialEq)]
pub struct FreezeSpec {
    base: FiniteMultiGoalMdp,
    augmented: FiniteMultiGoalMdp,
}

impl FreezeSpec {
    pub fn new(base: &FiniteMultiGoalMdp) -> Result<Self> {
        if looks_freeze_augmented(base) {
            return Err(Error::InvalidModel(
                "model already carries a freeze action; augmenting twice collides on a*".into(),
            ));
        }
        let (s, a) = (base.n_states(), base.n_actions());
        let (ns, na) = (2 * s, a + 1);
        let mut transition = vec![0.0; ns * na * ns];
        for x in 0..2 {
            for st in 0..s {
                let from = x * s + st;
                for act in 0..na {
                    let row = &mut transition[(from * na + act) * ns..(from * na + act + 1) * ns];
                    if x == 1 {
                        row[from] = 1.0;
                    } else if act == a {
                        row[s..].iter_mut().for_each(|p| *p = 1.0 / s as f64);
                    } else {
                        row[..s].copy_from_slice(base.transition_row(st, act));
                    }
                }
            }
        }
        let goal_map: Vec<usize> = (0..ns).map(|i| base.phi(i % s)).collect();
        let mut init_dist = vec![0.0; base.n_goals() * ns];
        for g in 0..base.n_goals() {
            init_dist[g * ns..g * ns + s].copy_from_slice(base.init_row(g));
        }
        let augmented = FiniteMultiGoalMdp::from_parts(MdpParts {
            n_states: ns,
            n_actions: na,
            n_goals: base.n_goals(),
            transition,
            goal_map,
            goal_dist: base.goal_dist().to_vec(),
            init_dist,
            discount: base.discount(),
        })?;
        Ok(FreezeSpec {
            base: base.clone(),
            augmented,
        })
    }

    pub fn base(&self) -> &FiniteMultiGoalMdp {
        &self.base
    }

    pub fn mdp(&self) -> &FiniteMultiGoalMdp {
        &self.augmented
    }

    pub fn into_mdp(self) -> FiniteMultiGoalMdp {
        self.augmented
    }

    pub fn freeze_action(&self) -> usize {
        self.base.n_actions()
    }

    pub fn base_states(&self) -> usize {
        self.base.n_states()
    }

    pub fn state(&self, s: usize, frozen: bool) -> usize {
        frozen as usize * self.base.n_states() + s
    }

    /// Inverse of [`FreezeSpec::state`].
    pub fn split(&self, index: usize) -> (usize, bool) {
        let s = self.base.n_states();
        (index % s, index >= s)
    }
}

pub fn augment_with_freeze(base: &FiniteMultiGoalMdp) -> Result<FiniteMultiGoalMdp> {
    FreezeSpec::new(base).map(FreezeSpec::into_mdp)
}

fn looks_freeze_augmented(mdp: &FiniteMultiGoalMdp) -> bool {
    let ns = mdp.n_states();
    if !ns.is_multiple_of(2) || mdp.n_actions() < 2 {
        return false;
    }
    let s = ns / 2;
    let last = mdp.n_actions() - 1;
    let frozen_self_loops = (s..ns).all(|st| (0..mdp.n_actions()).all(|a| mdp.p(st, a, st) == 1.0));
    let freeze_rows = (0..s).all(|st| {
        let row = mdp.transition_row(st, last);
        row[..s].iter().all(|&p| p == 0.0) && row[s..].iter().all(|&p| (p - 1.0 / s as f64).abs() < 1e-15)
    });
    frozen_self_loops && freeze_rows
}

/// Binary strings of length at most `depth` in heap order: the root is the
/// empty string, and the children of node `i` are `2i + 1` (append 0) and
/// `2i + 2` (append 1). Depth-`depth` nodes self-loop.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicTree {
    pub depth: usize,
    pub mdp: FiniteMultiGoalMdp,
}

impl DyadicTree {
    pub fn root(&self) -> usize {
        0
    }

    pub fn node_depth(index: usize) -> usize {
        (usize::BITS - 1 - (index + 1).leading_zeros()) as usize
    }

    /// Binary label of a node, e.g. `"01"`.
    pub fn label(index: usize) -> alloc::string::String {
        let d = Self::node_depth(index);
        let offset = index + 1 - (1 << d);
        (0..d)
            .rev()
            .map(|bit| if offset >> bit & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

pub fn dyadic_tree_mdp(depth: usize, discount: f64) -> Result<DyadicTree> {
    if depth == 0 {
        return Err(invalid_param("depth", "must be at least 1"));
    }
    let n = (1usize << (depth + 1)) - 1;
    let leaves_start = (1usize << depth) - 1;
    let mut transition = vec![0.0; n * 2 * n];
    for s in 0..n {
        for a in 0..2 {
            let next = if s >= leaves_start { s } else { 2 * s + 1 + a };
            transition[(s * 2 + a) * n + next] = 1.0;
        }
    }
    let mut init_dist = vec![0.0; n * n];
    init_dist.chunks_mut(n).for_each(|row| row[0] = 1.0);
    let mdp = FiniteMultiGoalMdp::from_parts(MdpParts {
        n_states: n,
        n_actions: 2,
        n_goals: n,
        transition,
        goal_map: (0..n).collect(),
        goal_dist: vec![1.0 / n as f64; n],
        init_dist,
        discount,
    })?;
    Ok(DyadicTree { depth, mdp })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves() {
        let mdp = shift_mdp(5, 2, 0.8).unwrap();
        assert_eq!(mdp.successor(4, 0), Some(0));
        assert_eq!(mdp.successor(4, 1), Some(1));
        assert!(mdp.is_strongly_connected());
        assert!(shift_mdp(3, 3, 0.8).is_err());
    }

    #[test]
    fn branching_one_is_deterministic() {
        let mdp = make_random_mdp(5, 3, 1, 0.9, &mut Pcg32::new(3)).unwrap();
        assert!(mdp.is_deterministic());
    }

    #[test]
    fn random_rows_are_stochastic_and_reproducible() {
        let a = make_random_mdp(4, 2, 2, 0.9, &mut Pcg32::new(7)).unwrap();
        for s in 0..4 {
            for act in 0..2 {
                let row = a.transition_row(s, act);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 2);
            }
        }
        let b = make_random_mdp(4, 2, 2, 0.9, &mut Pcg32::new(7)).unwrap();
        assert_eq!(a, b);
        assert!(make_random_mdp(4, 2, 5, 0.9, &mut Pcg32::new(7)).is_err());
    }

    #[test]
    fn cycle_action_walks_forward() {
        let mdp = make_deterministic_reachable_mdp(3, 2, 0.9, &mut Pcg32::new(0)).unwrap();
        let one = mdp.successor(0, 0).unwrap();
        assert_eq!(mdp.successor(one, 0), Some(2));
        assert!(mdp.is_deterministic());
    }

    #[test]
    fn reachable_instances_have_full_closure() {
        let mut rng = Pcg32::new(21);
        for _ in 0..25 {
            let s = 2 + rng.below(6);
            let mdp = make_deterministic_reachable_mdp(s, 2 + rng.below(2), 0.9, &mut rng).unwrap();
            assert!(mdp.reachability().iter().all(|&r| r));
        }
    }

    #[test]
    fn freeze_rows() {
        let base = make_random_mdp(5, 2, 3, 0.9, &mut Pcg32::new(1)).unwrap();
        let spec = FreezeSpec::new(&base).unwrap();
        let mdp = spec.mdp();
        assert_eq!(mdp.n_states(), 10);
        assert_eq!(mdp.n_actions(), 3);
        assert_eq!(mdp.n_goals(), 5);
        let a_star = spec.freeze_action();
        for s in 0..5 {
            let row = mdp.transition_row(spec.state(s, false), a_star);
            assert!(row[..5].iter().all(|&p| p == 0.0));
            assert!(row[5..].iter().all(|&p| p == 0.2));
            for a in 0..3 {
                let frozen = spec.state(s, true);
                assert_eq!(mdp.successor(frozen, a), Some(frozen));
            }
            for a in 0..2 {
                assert_eq!(&mdp.transition_row(s, a)[..5], base.transition_row(s, a));
            }
            assert_eq!(mdp.phi(spec.state(s, true)), base.phi(s));
        }
        for g in 0..5 {
            assert!(mdp.init_row(g)[5..].iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn freezing_twice_is_rejected() {
        let base = make_random_mdp(3, 2, 2, 0.9, &mut Pcg32::new(2)).unwrap();
        let once = augment_with_freeze(&base).unwrap();
        assert!(matches!(augment_with_freeze(&once), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn dyadic_tree_shape() {
        let tree = dyadic_tree_mdp(1, 0.5).unwrap();
        assert_eq!(tree.mdp.n_states(), 3);
        assert_eq!(tree.mdp.successor(0, 0), Some(1));
        assert_eq!(DyadicTree::label(1), "0");
        assert_eq!(DyadicTree::label(0), "");
        let tree = dyadic_tree_mdp(3, 0.5).unwrap();
        assert_eq!(tree.mdp.n_states(), 15);
        assert!(tree.mdp.is_deterministic());
        let reach = tree.mdp.reachability();
        assert!((0..15).all(|s| reach[s]));
        assert_eq!(DyadicTree::label(13), "110");
        assert_eq!(DyadicTree::node_depth(14), 3);
    }
}
