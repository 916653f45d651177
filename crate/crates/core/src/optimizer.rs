//! Zero-temperature greedy Metropolis search.
//!
//! A proposal is accepted only if it strictly lowers the cost. The search
//! stops once a run of consecutive rejections as long as the number of free
//! nodes has been observed, i.e. when one full sweep passes without a single
//! successful update.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::discretize::{Label, LabelField};
use crate::energy::{delta_unchecked, EnergyState};
use crate::error::{Error, Result};
use crate::grid::CheckerboardPartition;
use crate::seed::rng_from_seed;

/// Phases smaller than this compute their deltas on the calling thread.
const PARALLEL_PHASE_MIN: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// One node at a time in raster order.
    #[default]
    Sequential,
    /// Even sublattice, then odd sublattice. Deltas of one sublattice are
    /// computed together; commits are re-validated one by one.
    Checkerboard,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(SweepMode::Sequential),
            "checkerboard" => Ok(SweepMode::Checkerboard),
            other => Err(Error::InvalidArgument(format!("unknown sweep mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OptimizerConfig {
    pub mode: SweepMode,
    /// Safety cap; reaching it marks the result as not converged.
    pub max_sweeps: usize,
    pub seed: u64,
    /// Visit free nodes in a fresh random order every sweep (sequential mode).
    pub shuffle: bool,
    /// Keep the cost after every accepted move in [`OptimizerResult::trace`].
    pub record_trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            mode: SweepMode::Sequential,
            max_sweeps: 1000,
            seed: 0,
            shuffle: false,
            record_trace: false,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult<L> {
    pub field: LabelField<L>,
    pub energy: EnergyState,
    /// Sweeps started, counting a final partial sweep.
    pub sweeps: usize,
    pub accepted: usize,
    pub initial_cost: f64,
    pub terminal_cost: f64,
    /// `false` if `max_sweeps` was hit before a full sweep of rejections.
    pub converged: bool,
    /// Cost after each accepted move, if requested.
    pub trace: Vec<f64>,
}

/// Proposed new label for a free node: uniform over the other labels of
/// `domain`. With two labels this is a deterministic flip and draws nothing
/// from `rng`.
pub fn propose<L: Label, R: Rng + ?Sized>(
    field: &LabelField<L>,
    node: usize,
    domain: &[L],
    rng: &mut R,
) -> Result<L> {
    if field.is_frozen(node) {
        return Err(Error::FrozenNode(node));
    }
    let current = field.get(node).ok_or(Error::Unassigned(node))?;
    if domain.len() < 2 {
        return Err(Error::InvalidArgument("domain needs at least two labels".into()));
    }
    Ok(propose_unchecked(current, domain, rng))
}

#[inline]
fn propose_unchecked<L: Label, R: Rng + ?Sized>(current: L, domain: &[L], rng: &mut R) -> L {
    let n = domain.len();
    if n == 2 {
        return domain[1 - current.index()];
    }
    let k = rng.random_range(0..n - 1);
    if k >= current.index() {
        domain[k + 1]
    } else {
        domain[k]
    }
}

struct Engine<'a, L> {
    field: LabelField<L>,
    energy: EnergyState,
    domain: &'a [L],
    rng: ChaCha8Rng,
    free: usize,
    rejected_run: usize,
    accepted: usize,
    trace: Option<Vec<f64>>,
}

impl<'a, L: Label> Engine<'a, L> {
    fn converged(&self) -> bool {
        self.rejected_run >= self.free
    }

    /// Accepts `delta` iff it strictly lowers the cost.
    #[inline]
    fn decide(&mut self, node: usize, proposal: L, delta: i64) -> bool {
        if self.energy.improves(delta) {
            self.energy.apply(delta);
            self.field.put(node, proposal);
            self.accepted += 1;
            self.rejected_run = 0;
            if let Some(trace) = &mut self.trace {
                trace.push(self.energy.cost());
            }
            true
        } else {
            self.rejected_run += 1;
            false
        }
    }

    /// One sequential pass over `order`; returns early on convergence.
    fn sequential_pass(&mut self, order: &[usize]) {
        for &node in order {
            let current = self.field.get(node).expect("fully assigned");
            let proposal = propose_unchecked(current, self.domain, &mut self.rng);
            let delta = delta_unchecked(&self.field, node, current, proposal);
            self.decide(node, proposal, delta);
            if self.converged() {
                return;
            }
        }
    }

    /// Proposes for every node of one sublattice, evaluates all deltas
    /// against the current field, then commits in ascending node order,
    /// each commit re-checked against the running pair sum. Same-parity
    /// nodes share no pair, so the deltas stay exact while committing.
    fn checkerboard_phase(&mut self, nodes: &[usize], stop_on_convergence: bool) -> usize {
        let proposals: Vec<(usize, L, L)> = nodes
            .iter()
            .map(|&node| {
                let current = self.field.get(node).expect("fully assigned");
                (
                    node,
                    current,
                    propose_unchecked(current, self.domain, &mut self.rng),
                )
            })
            .collect();
        let field = &self.field;
        let delta =
            |&(node, current, proposal): &(usize, L, L)| delta_unchecked(field, node, current, proposal);
        let deltas: Vec<i64> = if proposals.len() >= PARALLEL_PHASE_MIN {
            proposals.par_iter().map(delta).collect()
        } else {
            proposals.iter().map(delta).collect()
        };
        let mut accepted = 0;
        for (&(node, _, proposal), d) in proposals.iter().zip(deltas) {
            if self.decide(node, proposal, d) {
                accepted += 1;
            }
            if stop_on_convergence && self.converged() {
                break;
            }
        }
        accepted
    }
}

fn free_subsets<L: Label>(field: &LabelField<L>, partition: &CheckerboardPartition) -> [Vec<usize>; 2] {
    partition
        .sets()
        .map(|set| set.iter().copied().filter(|&i| !field.is_frozen(i)).collect())
}

fn check_ready<L: Label>(field: &LabelField<L>, energy: &EnergyState, domain: &[L]) -> Result<()> {
    if let Some(i) = field.first_unassigned() {
        return Err(Error::Unassigned(i));
    }
    if domain.len() < 2 {
        return Err(Error::InvalidArgument("domain needs at least two labels".into()));
    }
    if let Some(k) = domain.iter().enumerate().position(|(k, l)| l.index() != k) {
        return Err(Error::InvalidArgument(format!(
            "domain label at position {k} is out of order"
        )));
    }
    if let Some(l) = field
        .labels()
        .iter()
        .flatten()
        .find(|l| l.index() >= domain.len())
    {
        return Err(Error::InvalidArgument(format!("{l:?} lies outside the domain")));
    }
    let scratch = EnergyState::new(field, energy.target())?;
    if scratch != *energy {
        return Err(Error::InvalidArgument(
            "energy state does not match the field".into(),
        ));
    }
    Ok(())
}

/// Runs the greedy search until a full sweep brings no improvement or
/// `cfg.max_sweeps` sweeps have been started.
pub fn greedy_optimize<L: Label>(
    field: LabelField<L>,
    energy: EnergyState,
    domain: &[L],
    cfg: &OptimizerConfig,
) -> Result<OptimizerResult<L>> {
    if cfg.max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
    }
    check_ready(&field, &energy, domain)?;

    let free_nodes = field.free_nodes();
    let initial_cost = energy.cost();
    let mut engine = Engine {
        energy,
        domain,
        rng: rng_from_seed(cfg.seed),
        free: free_nodes.len(),
        rejected_run: 0,
        accepted: 0,
        trace: cfg.record_trace.then(Vec::new),
        field,
    };

    let mut sweeps = 0;
    if !free_nodes.is_empty() {
        match cfg.mode {
            SweepMode::Sequential => {
                let mut order = free_nodes;
                while sweeps < cfg.max_sweeps && !engine.converged() {
                    if cfg.shuffle {
                        order.shuffle(&mut engine.rng);
                    }
                    sweeps += 1;
                    engine.sequential_pass(&order);
                }
            }
            SweepMode::Checkerboard => {
                let partition = engine.field.lattice().checkerboard();
                let subsets = free_subsets(&engine.field, &partition);
                'outer: while sweeps < cfg.max_sweeps && !engine.converged() {
                    sweeps += 1;
                    for set in &subsets {
                        engine.checkerboard_phase(set, true);
                        if engine.converged() {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let converged = engine.converged();
    let terminal_cost = engine.energy.cost();
    Ok(OptimizerResult {
        field: engine.field,
        energy: engine.energy,
        sweeps,
        accepted: engine.accepted,
        initial_cost,
        terminal_cost,
        converged,
        trace: engine.trace.unwrap_or_default(),
    })
}

/// One checkerboard sweep (even then odd sublattice) applied in place.
/// Returns the number of accepted updates.
pub fn checkerboard_sweep<L: Label, R: Rng>(
    field: &mut LabelField<L>,
    energy: &mut EnergyState,
    partition: &CheckerboardPartition,
    domain: &[L],
    rng: &mut R,
) -> Result<usize> {
    check_ready(field, energy, domain)?;
    if partition.even.len() + partition.odd.len() != field.len() {
        return Err(Error::InvalidArgument(
            "partition does not cover the field".into(),
        ));
    }
    let subsets = free_subsets(field, partition);
    let placeholder = LabelField::unassigned(field.lattice());
    let mut engine = Engine {
        field: std::mem::replace(field, placeholder),
        energy: *energy,
        domain,
        rng: rng_from_seed(rng.random()),
        free: usize::MAX,
        rejected_run: 0,
        accepted: 0,
        trace: None,
    };
    let mut accepted = 0;
    for set in &subsets {
        accepted += engine.checkerboard_phase(set, false);
    }
    *field = engine.field;
    *energy = engine.energy;
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{Class, ClassField, Spin, SpinField};
    use crate::energy::{full_correlation, sample_correlation, Correlation};
    use crate::grid::Lattice;
    use rand::SeedableRng;

    fn energy_of<L: Label>(f: &LabelField<L>, target: Correlation) -> EnergyState {
        EnergyState::new(f, target).unwrap()
    }

    #[test]
    fn proposal_rules() {
        let l = Lattice::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = SpinField::unassigned(l);
        s.put(0, Spin::Down);
        s.freeze(1, Spin::Up);
        assert_eq!(propose(&s, 0, &Spin::DOMAIN, &mut rng).unwrap(), Spin::Up);
        assert!(matches!(
            propose(&s, 1, &Spin::DOMAIN, &mut rng),
            Err(Error::FrozenNode(1))
        ));

        let mut c = ClassField::unassigned(l);
        c.put(0, Class::new(1));
        assert_eq!(
            propose(&c, 0, &Class::domain(2), &mut rng).unwrap(),
            Class::new(2)
        );

        c.put(0, Class::new(5));
        let mut hits = [0usize; 9];
        for _ in 0..7000 {
            hits[propose(&c, 0, &Class::domain(8), &mut rng).unwrap().get() as usize] += 1;
        }
        assert_eq!(hits[5], 0);
        for q in (1..=8).filter(|&q| q != 5) {
            assert!((850..1150).contains(&hits[q]), "class {q}: {}", hits[q]);
        }
    }

    #[test]
    fn zero_cost_field_stops_after_one_sweep() {
        let l = Lattice::new(4, 4).unwrap();
        let mut f = SpinField::unassigned(l);
        for i in 0..16 {
            if i % 3 == 0 {
                f.put(i, Spin::Up);
            } else {
                f.freeze(i, Spin::Up);
            }
        }
        let target = full_correlation(&f).unwrap();
        for mode in [SweepMode::Sequential, SweepMode::Checkerboard] {
            let cfg = OptimizerConfig {
                mode,
                ..Default::default()
            };
            let r = greedy_optimize(f.clone(), energy_of(&f, target), &Spin::DOMAIN, &cfg).unwrap();
            assert_eq!(r.terminal_cost, 0.0);
            assert_eq!(r.sweeps, 1);
            assert_eq!(r.accepted, 0);
            assert!(r.converged);
        }
    }

    #[test]
    fn no_free_nodes_is_a_no_op() {
        let l = Lattice::new(3, 3).unwrap();
        let f = SpinField::from_parts(l, vec![Some(Spin::Up); 9], vec![true; 9]).unwrap();
        let target = sample_correlation(&f).unwrap();
        let r = greedy_optimize(
            f.clone(),
            energy_of(&f, target),
            &Spin::DOMAIN,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.sweeps, 0);
        assert_eq!(r.accepted, 0);
        assert!(r.converged);
        assert_eq!(r.field, f);
    }

    #[test]
    fn centre_node_reaches_best_label() {
        // 3x3, centre free, N_c = 2. Brute force over both labels.
        let l = Lattice::new(3, 3).unwrap();
        let pattern = [1, 2, 2, 1, 0, 2, 1, 1, 2];
        for start in [1u16, 2] {
            let mut f = ClassField::unassigned(l);
            for (i, &q) in pattern.iter().enumerate() {
                if q > 0 {
                    f.freeze(i, Class::new(q));
                } else {
                    f.put(i, Class::new(start));
                }
            }
            let target = sample_correlation(&f).unwrap();
            let best = [1u16, 2]
                .iter()
                .map(|&q| {
                    let mut g = f.clone();
                    g.put(4, Class::new(q));
                    energy_of(&g, target).deviation()
                })
                .min()
                .unwrap();
            let r = greedy_optimize(
                f.clone(),
                energy_of(&f, target),
                &Class::domain(2),
                &Default::default(),
            )
            .unwrap();
            assert_eq!(r.energy.deviation(), best);
        }
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        let l = Lattice::new(2, 2).unwrap();
        let mut f = SpinField::unassigned(l);
        f.freeze(0, Spin::Up);
        let e = EnergyState::new(
            &SpinField::from_parts(l, vec![Some(Spin::Up); 4], vec![false; 4]).unwrap(),
            Correlation {
                pair_sum: 1,
                pairs: 1,
            },
        )
        .unwrap();
        assert!(matches!(
            greedy_optimize(f, e, &Spin::DOMAIN, &Default::default()),
            Err(Error::Unassigned(1))
        ));

        let g = SpinField::from_parts(
            l,
            vec![
                Some(Spin::Up),
                Some(Spin::Down),
                Some(Spin::Down),
                Some(Spin::Down),
            ],
            vec![false; 4],
        )
        .unwrap();
        assert!(greedy_optimize(g, e, &Spin::DOMAIN, &Default::default()).is_err());
    }

    #[test]
    fn checkerboard_sweep_without_improvement_changes_nothing() {
        let l = Lattice::new(4, 4).unwrap();
        let f = SpinField::from_parts(l, vec![Some(Spin::Up); 16], vec![false; 16]).unwrap();
        let mut g = f.clone();
        // target 1 and field already uniform: every flip worsens the cost
        let mut e = energy_of(
            &f,
            Correlation {
                pair_sum: 1,
                pairs: 1,
            },
        );
        let before = e;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = checkerboard_sweep(&mut g, &mut e, &l.checkerboard(), &Spin::DOMAIN, &mut rng).unwrap();
        assert_eq!(n, 0);
        assert_eq!(g, f);
        assert_eq!(e, before);
    }

    #[test]
    fn single_free_node_matches_sequential_visit() {
        let l = Lattice::new(3, 3).unwrap();
        let mut f = SpinField::unassigned(l);
        for i in 0..9 {
            let s = if i < 4 { Spin::Down } else { Spin::Up };
            if i == 5 {
                f.put(i, Spin::Down);
            } else {
                f.freeze(i, s);
            }
        }
        let target = Correlation {
            pair_sum: 1,
            pairs: 3,
        };
        let mut g = f.clone();
        let mut e = energy_of(&f, target);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        checkerboard_sweep(&mut g, &mut e, &l.checkerboard(), &Spin::DOMAIN, &mut rng).unwrap();

        let seq = greedy_optimize(
            f.clone(),
            energy_of(&f, target),
            &Spin::DOMAIN,
            &OptimizerConfig {
                max_sweeps: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(g, seq.field);
        assert_eq!(e, seq.energy);
    }

    #[test]
    fn deterministic_given_seed() {
        let l = Lattice::new(10, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut f = ClassField::unassigned(l);
        for i in 0..100 {
            let q = Class::new(rng.random_range(1..=4));
            if rng.random_bool(0.5) {
                f.freeze(i, q);
            } else {
                f.put(i, q);
            }
        }
        let target = sample_correlation(&f).unwrap();
        for mode in [SweepMode::Sequential, SweepMode::Checkerboard] {
            let cfg = OptimizerConfig {
                mode,
                seed: 9,
                shuffle: true,
                ..Default::default()
            };
            let a = greedy_optimize(f.clone(), energy_of(&f, target), &Class::domain(4), &cfg).unwrap();
            let b = greedy_optimize(f.clone(), energy_of(&f, target), &Class::domain(4), &cfg).unwrap();
            assert_eq!(a, b);
        }
    }
}
