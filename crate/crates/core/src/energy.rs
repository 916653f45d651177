//! Normalized nearest-neighbour correlation energies and the matching cost.
//!
//! Pair sums are kept as integers: `s_i s_j` for spins, `δ(s_i, s_j)` for
//! classes. A correlation is a pair sum divided by a pair count, and the cost
//!
//! ```text
//! U = (1 - C̃ / C_s)^2   if C_s != 0
//! U = C̃^2              if C_s == 0
//! ```
//!
//! depends on the field only through the full-grid pair sum `Σ`. With
//! `C_s = a / b` and `C̃ = Σ / M`, both branches are increasing functions of
//! `|M·a − Σ·b|`, which is what acceptance decisions compare. Comparisons are
//! therefore exact and incremental updates never drift.

use crate::discretize::{Label, LabelField};
use crate::error::{Error, Result};

/// A pair-correlation statistic `pair_sum / pairs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Correlation {
    pub pair_sum: i64,
    pub pairs: i64,
}

impl Correlation {
    pub fn value(&self) -> f64 {
        self.pair_sum as f64 / self.pairs as f64
    }
}

/// The cost for simulated correlation `c_tilde` against target `c_sample`.
pub fn cost(c_tilde: f64, c_sample: f64) -> f64 {
    if c_sample != 0.0 {
        let r = 1.0 - c_tilde / c_sample;
        r * r
    } else {
        c_tilde * c_tilde
    }
}

/// Correlation over pairs whose endpoints are both frozen.
pub fn sample_correlation<L: Label>(field: &LabelField<L>) -> Result<Correlation> {
    let lattice = field.lattice();
    let mut pair_sum = 0;
    let mut pairs = 0;
    for p in lattice.neighbor_pairs() {
        if field.is_frozen(p.a) && field.is_frozen(p.b) {
            let (a, b) = match (field.get(p.a), field.get(p.b)) {
                (Some(a), Some(b)) => (a, b),
                (None, _) => return Err(Error::Unassigned(p.a)),
                (_, None) => return Err(Error::Unassigned(p.b)),
            };
            pair_sum += a.pair_score(b);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::NoSamplePairs);
    }
    Ok(Correlation { pair_sum, pairs })
}

/// Correlation over every nearest-neighbour pair of the grid.
pub fn full_correlation<L: Label>(field: &LabelField<L>) -> Result<Correlation> {
    let labels = field.assigned_labels()?;
    let pairs = field.lattice().neighbor_pairs();
    if pairs.is_empty() {
        return Err(Error::InvalidGrid("a single-node grid has no pairs".into()));
    }
    let pair_sum = pairs.iter().map(|p| labels[p.a].pair_score(labels[p.b])).sum();
    Ok(Correlation {
        pair_sum,
        pairs: pairs.len() as i64,
    })
}

/// Change of the full-grid pair sum if `node` took the label `proposed`.
pub fn delta_pair_sum<L: Label>(field: &LabelField<L>, node: usize, proposed: L) -> Result<i64> {
    if field.is_frozen(node) {
        return Err(Error::FrozenNode(node));
    }
    let current = field.get(node).ok_or(Error::Unassigned(node))?;
    let mut delta = 0;
    for n in field.lattice().neighbors(node) {
        let other = field.get(n).ok_or(Error::Unassigned(n))?;
        delta += proposed.pair_score(other) - current.pair_score(other);
    }
    Ok(delta)
}

/// Hot-path variant of [`delta_pair_sum`] for fully assigned fields.
#[inline]
pub(crate) fn delta_unchecked<L: Label>(field: &LabelField<L>, node: usize, current: L, proposed: L) -> i64 {
    let mut delta = 0;
    for n in field.lattice().neighbors(node) {
        let other = field.get(n).expect("field is fully assigned");
        delta += proposed.pair_score(other) - current.pair_score(other);
    }
    delta
}

/// Running energy of one optimization: target sample correlation and the
/// current full-grid pair sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnergyState {
    target: Correlation,
    pair_sum: i64,
    pairs: i64,
}

impl EnergyState {
    /// Energy of a fully assigned field against `target`.
    pub fn new<L: Label>(field: &LabelField<L>, target: Correlation) -> Result<Self> {
        if target.pairs <= 0 {
            return Err(Error::NoSamplePairs);
        }
        let full = full_correlation(field)?;
        Ok(EnergyState {
            target,
            pair_sum: full.pair_sum,
            pairs: full.pairs,
        })
    }

    pub fn target(&self) -> Correlation {
        self.target
    }

    pub fn pair_sum(&self) -> i64 {
        self.pair_sum
    }

    pub fn pairs(&self) -> i64 {
        self.pairs
    }

    pub fn correlation(&self) -> Correlation {
        Correlation {
            pair_sum: self.pair_sum,
            pairs: self.pairs,
        }
    }

    /// `|M·a − Σ·b|` for `C_s = a / b`; the cost is strictly increasing in it.
    #[inline]
    pub fn deviation_at(&self, pair_sum: i64) -> u128 {
        let d =
            self.pairs as i128 * self.target.pair_sum as i128 - pair_sum as i128 * self.target.pairs as i128;
        d.unsigned_abs()
    }

    pub fn deviation(&self) -> u128 {
        self.deviation_at(self.pair_sum)
    }

    /// Cost at an arbitrary pair sum.
    pub fn cost_at(&self, pair_sum: i64) -> f64 {
        if self.target.pair_sum != 0 {
            let denom = self.pairs as f64 * self.target.pair_sum as f64;
            let r = self.deviation_at(pair_sum) as f64 / denom;
            r * r
        } else {
            let c = pair_sum as f64 / self.pairs as f64;
            c * c
        }
    }

    pub fn cost(&self) -> f64 {
        self.cost_at(self.pair_sum)
    }

    /// Whether changing the pair sum by `delta` strictly lowers the cost.
    #[inline]
    pub fn improves(&self, delta: i64) -> bool {
        self.deviation_at(self.pair_sum + delta) < self.deviation()
    }

    #[inline]
    pub fn apply(&mut self, delta: i64) {
        self.pair_sum += delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{binary_potts_of_ising, Class, ClassField, Spin, SpinField};
    use crate::grid::Lattice;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spins(lx: usize, ly: usize, v: &[i8], frozen: bool) -> SpinField {
        let labels = v
            .iter()
            .map(|&s| match s {
                1 => Some(Spin::Up),
                -1 => Some(Spin::Down),
                _ => None,
            })
            .collect();
        let f = v.iter().map(|&s| frozen && s != 0).collect();
        SpinField::from_parts(Lattice::new(lx, ly).unwrap(), labels, f).unwrap()
    }

    fn classes(lx: usize, ly: usize, v: &[u16], frozen: bool) -> ClassField {
        let labels = v.iter().map(|&q| (q > 0).then(|| Class::new(q))).collect();
        let f = v.iter().map(|&q| frozen && q > 0).collect();
        ClassField::from_parts(Lattice::new(lx, ly).unwrap(), labels, f).unwrap()
    }

    // Brute force over all ordered node pairs, independent of the pair
    // enumeration in `Lattice`.
    fn brute_pair_sum<L: Label>(field: &LabelField<L>) -> (i64, i64) {
        let l = field.lattice();
        let (mut s, mut m) = (0, 0);
        for i in 0..l.len() {
            for j in i + 1..l.len() {
                let (xi, yi) = l.coords(i);
                let (xj, yj) = l.coords(j);
                if xi.abs_diff(xj) + yi.abs_diff(yj) == 1 {
                    s += field.get(i).unwrap().pair_score(field.get(j).unwrap());
                    m += 1;
                }
            }
        }
        (s, m)
    }

    #[test]
    fn ising_sample_correlation_examples() {
        let all_up = spins(3, 3, &[1; 9], true);
        assert_eq!(sample_correlation(&all_up).unwrap().value(), 1.0);

        let cb: Vec<i8> = (0..16)
            .map(|i| if (i % 4 + i / 4) % 2 == 0 { 1 } else { -1 })
            .collect();
        assert_eq!(sample_correlation(&spins(4, 4, &cb, true)).unwrap().value(), -1.0);

        let c = sample_correlation(&spins(2, 2, &[1, 1, -1, 1], true)).unwrap();
        assert_eq!(
            c,
            Correlation {
                pair_sum: 0,
                pairs: 4
            }
        );
    }

    #[test]
    fn potts_sample_correlation_examples() {
        assert_eq!(
            sample_correlation(&classes(3, 2, &[4; 6], true)).unwrap().value(),
            1.0
        );
        assert_eq!(
            sample_correlation(&classes(4, 1, &[1, 2, 1, 2], true))
                .unwrap()
                .value(),
            0.0
        );
        assert_eq!(
            sample_correlation(&classes(2, 2, &[1, 1, 1, 2], true))
                .unwrap()
                .value(),
            0.5
        );
    }

    #[test]
    fn sample_correlation_uses_frozen_pairs_only() {
        // Middle node free: no frozen-frozen pair on a 1x3 line.
        let mut f = spins(3, 1, &[1, 1, 1], true);
        f = SpinField::from_parts(f.lattice(), f.labels().to_vec(), vec![true, false, true]).unwrap();
        assert!(matches!(sample_correlation(&f), Err(Error::NoSamplePairs)));
    }

    #[test]
    fn full_correlation_examples() {
        assert_eq!(
            full_correlation(&spins(2, 1, &[1, -1], false)).unwrap().value(),
            -1.0
        );
        assert_eq!(
            full_correlation(&spins(3, 3, &[-1; 9], false)).unwrap().value(),
            1.0
        );
        assert_eq!(
            full_correlation(&classes(3, 3, &[7; 9], false)).unwrap().value(),
            1.0
        );
        assert!(matches!(
            full_correlation(&spins(2, 1, &[1, 0], false)),
            Err(Error::Unassigned(1))
        ));
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost(0.7, 0.7), 0.0);
        assert_eq!(cost(0.5, 0.0), 0.25);
        assert!((cost(0.4, 0.8) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn delta_examples() {
        // interior node at (1,1) of 3x3, neighbours +1, flip -1 -> +1
        let mut v = [1i8; 9];
        v[4] = -1;
        let f = spins(3, 3, &v, false);
        assert_eq!(delta_pair_sum(&f, 4, Spin::Up).unwrap(), 8);
        assert_eq!(delta_pair_sum(&f, 4, Spin::Down).unwrap(), 0);

        // corner of 2x2 with neighbours 3 (right) and 5 (below)
        let f = classes(2, 2, &[3, 3, 5, 1], false);
        assert_eq!(delta_pair_sum(&f, 0, Class::new(5)).unwrap(), 0);

        let frozen = classes(2, 2, &[3, 3, 5, 1], true);
        assert!(matches!(
            delta_pair_sum(&frozen, 0, Class::new(5)),
            Err(Error::FrozenNode(0))
        ));
    }

    #[test]
    fn energy_cost_matches_formula() {
        let f = spins(3, 3, &[1, -1, 1, 1, 1, -1, -1, 1, 1], false);
        for target in [
            Correlation {
                pair_sum: 3,
                pairs: 7,
            },
            Correlation {
                pair_sum: -2,
                pairs: 5,
            },
            Correlation {
                pair_sum: 0,
                pairs: 4,
            },
        ] {
            let e = EnergyState::new(&f, target).unwrap();
            let c = full_correlation(&f).unwrap().value();
            assert!((e.cost() - cost(c, target.value())).abs() < 1e-12);
        }
    }

    #[test]
    fn incremental_sum_matches_scratch_after_many_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = Lattice::new(16, 16).unwrap();
        let labels = (0..256)
            .map(|_| Some(Class::new(rng.random_range(1..=5))))
            .collect();
        let mut field = ClassField::from_parts(l, labels, vec![false; 256]).unwrap();
        let mut e = EnergyState::new(
            &field,
            Correlation {
                pair_sum: 1,
                pairs: 3,
            },
        )
        .unwrap();
        for _ in 0..1000 {
            let node = rng.random_range(0..256);
            let new = Class::new(rng.random_range(1..=5));
            let d = delta_pair_sum(&field, node, new).unwrap();
            field.set(node, new).unwrap();
            e.apply(d);
        }
        assert_eq!(e.pair_sum(), full_correlation(&field).unwrap().pair_sum);
        assert_eq!(e.pair_sum(), brute_pair_sum(&field).0);
    }

    proptest! {
        #[test]
        fn binary_identity(bits in proptest::collection::vec(any::<bool>(), 64)) {
            let v: Vec<i8> = bits.iter().map(|b| if *b { 1 } else { -1 }).collect();
            let s = spins(8, 8, &v, false);
            let p = binary_potts_of_ising(&s).unwrap();
            let ci = full_correlation(&s).unwrap();
            let cp = full_correlation(&p).unwrap();
            prop_assert_eq!(ci.pairs, cp.pairs);
            // exact: 2·Σδ = Σss' + M
            prop_assert_eq!(2 * cp.pair_sum, ci.pair_sum + ci.pairs);
            prop_assert!((cp.value() - (ci.value() + 1.0) / 2.0).abs() < 1e-15);
        }

        #[test]
        fn full_sum_matches_brute_force(
            lx in 1usize..7, ly in 1usize..7, seed in any::<u64>(),
        ) {
            prop_assume!(lx * ly > 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = Lattice::new(lx, ly).unwrap();
            let labels = (0..l.len()).map(|_| Some(Class::new(rng.random_range(1..=3)))).collect();
            let f = ClassField::from_parts(l, labels, vec![false; l.len()]).unwrap();
            let c = full_correlation(&f).unwrap();
            prop_assert_eq!((c.pair_sum, c.pairs), brute_pair_sum(&f));
        }

        #[test]
        fn delta_round_trip_is_zero(seed in any::<u64>(), node in 0usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = Lattice::new(5, 5).unwrap();
            let labels = (0..25).map(|_| Some(Class::new(rng.random_range(1..=4)))).collect();
            let mut f = ClassField::from_parts(l, labels, vec![false; 25]).unwrap();
            let old = f.get(node).unwrap();
            let new = Class::new(rng.random_range(1..=4));
            let there = delta_pair_sum(&f, node, new).unwrap();
            f.set(node, new).unwrap();
            let back = delta_pair_sum(&f, node, old).unwrap();
            prop_assert_eq!(there + back, 0);
        }

        #[test]
        fn cost_is_nonnegative_and_zero_only_on_match(
            sum in -200i64..200, tsum in -50i64..50, tpairs in 1i64..60,
        ) {
            let l = Lattice::new(2, 1).unwrap();
            let f = SpinField::from_parts(l, vec![Some(Spin::Up); 2], vec![false; 2]).unwrap();
            let mut e = EnergyState::new(&f, Correlation { pair_sum: tsum, pairs: tpairs }).unwrap();
            e.pairs = 200;
            e.pair_sum = sum;
            prop_assert!(e.cost() >= 0.0);
            let exact_match = if tsum != 0 {
                sum as i128 * tpairs as i128 == 200i128 * tsum as i128
            } else {
                sum == 0
            };
            prop_assert_eq!(e.deviation() == 0, exact_match);
            prop_assert_eq!(e.cost() == 0.0, exact_match);
        }
    }
}
