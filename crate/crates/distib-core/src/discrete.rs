//! Exact information measures over finite joint distributions.
//!
//! A [`DiscreteJoint`] stores a dense probability table over the product of
//! its variables' outcome spaces together with a directed acyclic parent
//! structure. At this scale everything is computed by exhaustive enumeration,
//! which makes the module a ground-truth oracle for the identity
//!
//! ```text
//! multi_information(joint) = sum_i I(X_i; Parents(X_i))
//! ```
//!
//! for joints that factorize over their declared graph. The right-hand terms
//! are the transmitted information of each edge bundle.
//!
//! Conventions: all information quantities are in nats, and `0 * ln 0 := 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, SeededRng};

/// Normalization slack tolerated when validating probability tables.
const TABLE_TOL: f64 = 1e-12;

/// Slack tolerated when validating conditional rows built from `f64` draws.
const ROW_TOL: f64 = 1e-9;

/// Maximum deviation at which a joint still counts as factorized.
const FACTORIZATION_TOL: f64 = 1e-12;

/// KL divergence `sum p ln(p/q)` between two aligned distribution tables.
///
/// Requires `q > 0` wherever `p > 0`; terms with `p = 0` contribute nothing.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            op: "kl_discrete",
            left: vec![p.len()],
            right: vec![q.len()],
        });
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi < 0.0 || qi < 0.0 {
            return Err(Error::InvalidDistribution {
                reason: "negative entry",
            });
        }
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::KlUnsupported { index: i, p: pi });
        }
        total += pi * math::ln(pi / qi);
    }
    Ok(total)
}

/// Outcome of [`DiscreteJoint::transmitted_sum_check`].
///
/// `lhs` is the multi-information of the joint, `rhs` the sum of per-variable
/// transmitted information `I(X_i; Parents(X_i))`, and `gap` their absolute
/// difference. `terms` lists each variable's contribution (zero for roots).
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittedReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub terms: Vec<f64>,
}

/// A finite joint distribution with a declared parent structure.
///
/// The table is dense and row-major over outcomes, with the last variable's
/// index moving fastest. Parent lists are kept sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    names: Vec<String>,
    cards: Vec<usize>,
    parents: Vec<Vec<usize>>,
    table: Vec<f64>,
}

impl DiscreteJoint {
    /// Validates and wraps a dense joint table.
    pub fn new(
        names: Vec<String>,
        cards: Vec<usize>,
        parents: Vec<Vec<usize>>,
        table: Vec<f64>,
    ) -> Result<Self> {
        let n = cards.len();
        if names.len() != n || parents.len() != n {
            return Err(Error::InvalidDistribution {
                reason: "names, cardinalities, and parent sets disagree in length",
            });
        }
        if n == 0 || cards.iter().any(|&c| c == 0) {
            return Err(Error::InvalidDistribution {
                reason: "variables and cardinalities must be non-empty",
            });
        }
        let numel: usize = cards.iter().product();
        if table.len() != numel {
            return Err(Error::InvalidDistribution {
                reason: "table length does not match the outcome product",
            });
        }
        if table.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution {
                reason: "table entries must be finite and non-negative",
            });
        }
        let total: f64 = table.iter().sum();
        if math::abs(total - 1.0) > TABLE_TOL {
            return Err(Error::InvalidDistribution {
                reason: "table does not sum to 1",
            });
        }
        let mut parents = parents;
        for (i, pa) in parents.iter_mut().enumerate() {
            pa.sort_unstable();
            pa.dedup();
            if pa.iter().any(|&p| p >= n) {
                return Err(Error::InvalidDistribution {
                    reason: "parent index out of range",
                });
            }
            if pa.contains(&i) {
                return Err(Error::CyclicGraph { variable: i });
            }
        }
        check_acyclic(&parents)?;
        Ok(Self {
            names,
            cards,
            parents,
            table,
        })
    }

    /// Builds the joint as the product of per-variable conditional tables.
    ///
    /// `conditionals[i]` holds one probability row of length `cards[i]` per
    /// parent configuration; parent configurations are indexed mixed-radix in
    /// ascending parent order with the last parent fastest.
    pub fn from_conditionals(
        names: Vec<String>,
        cards: Vec<usize>,
        parents: Vec<Vec<usize>>,
        conditionals: &[Vec<f64>],
    ) -> Result<Self> {
        let n = cards.len();
        if conditionals.len() != n {
            return Err(Error::InvalidDistribution {
                reason: "one conditional table required per variable",
            });
        }
        let mut parents = parents;
        for pa in parents.iter_mut() {
            pa.sort_unstable();
            pa.dedup();
        }
        for (i, cond) in conditionals.iter().enumerate() {
            let pa_count: usize = parents[i].iter().map(|&p| cards[p]).product();
            if cond.len() != cards[i] * pa_count {
                return Err(Error::InvalidDistribution {
                    reason: "conditional table length mismatch",
                });
            }
            for row in cond.chunks(cards[i]) {
                if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::InvalidDistribution {
                        reason: "conditional entries must be finite and non-negative",
                    });
                }
                let s: f64 = row.iter().sum();
                if math::abs(s - 1.0) > ROW_TOL {
                    return Err(Error::InvalidDistribution {
                        reason: "conditional row does not sum to 1",
                    });
                }
            }
        }
        let numel: usize = cards.iter().product();
        let mut table = vec![0.0; numel];
        let mut digits = vec![0usize; n];
        for (flat, slot) in table.iter_mut().enumerate() {
            decode_outcome(flat, &cards, &mut digits);
            let mut p = 1.0;
            for i in 0..n {
                let cfg = parent_config(&digits, &parents[i], &cards);
                p *= conditionals[i][cfg * cards[i] + digits[i]];
            }
            *slot = p;
        }
        // Rows each sum to 1, so the product table sums to 1 up to rounding;
        // rescale away that rounding so the strict table invariant holds.
        let total: f64 = table.iter().sum();
        for p in table.iter_mut() {
            *p /= total;
        }
        Self::new(names, cards, parents, table)
    }

    /// Samples a random joint that factorizes over a random DAG.
    ///
    /// Draws 2 to `max_vars` variables with cardinalities 2 to `max_card`,
    /// includes each candidate edge with probability 1/2, and fills the
    /// conditional rows with normalized uniform draws.
    pub fn random_factorized(rng: &mut SeededRng, max_vars: usize, max_card: usize) -> Self {
        assert!(max_vars >= 2 && max_card >= 2, "need at least 2x2 joints");
        let n = 2 + (rng::uniform(rng) * (max_vars - 1) as f64) as usize % (max_vars - 1);
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let cards: Vec<usize> = (0..n)
            .map(|_| 2 + (rng::uniform(rng) * (max_card - 1) as f64) as usize % (max_card - 1))
            .collect();
        let mut parents: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut pa = Vec::new();
            for j in 0..i {
                if rng::uniform(rng) < 0.5 {
                    pa.push(j);
                }
            }
            parents.push(pa);
        }
        let mut conditionals = Vec::with_capacity(n);
        for i in 0..n {
            let pa_count: usize = parents[i].iter().map(|&p| cards[p]).product();
            let mut cond = vec![0.0; cards[i] * pa_count];
            for row in cond.chunks_mut(cards[i]) {
                let mut s = 0.0;
                for v in row.iter_mut() {
                    *v = rng::uniform(rng);
                    s += *v;
                }
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
            conditionals.push(cond);
        }
        Self::from_conditionals(names, cards, parents, &conditionals)
            .expect("constructed conditionals are valid")
    }

    pub fn n_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn parents(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Marginal distribution over `vars`, laid out mixed-radix in the order
    /// given with the last listed variable fastest.
    ///
    /// Panics if `vars` repeats a variable or indexes out of range.
    pub fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        for (i, &v) in vars.iter().enumerate() {
            assert!(v < self.n_vars(), "variable {v} out of range");
            assert!(!vars[..i].contains(&v), "variable {v} repeated");
        }
        let size: usize = vars.iter().map(|&v| self.cards[v]).product();
        let mut out = vec![0.0; size];
        let mut digits = vec![0usize; self.n_vars()];
        for (flat, &p) in self.table.iter().enumerate() {
            decode_outcome(flat, &self.cards, &mut digits);
            let mut idx = 0;
            for &v in vars {
                idx = idx * self.cards[v] + digits[v];
            }
            out[idx] += p;
        }
        out
    }

    /// Multi-information: KL between the joint and the product of its
    /// single-variable marginals.
    pub fn multi_information(&self) -> Result<f64> {
        let singles: Vec<Vec<f64>> = (0..self.n_vars()).map(|i| self.marginal(&[i])).collect();
        let mut product = vec![0.0; self.table.len()];
        let mut digits = vec![0usize; self.n_vars()];
        for (flat, slot) in product.iter_mut().enumerate() {
            decode_outcome(flat, &self.cards, &mut digits);
            *slot = digits
                .iter()
                .enumerate()
                .map(|(i, &d)| singles[i][d])
                .product();
        }
        kl_discrete(&self.table, &product)
    }

    /// Mutual information `I(group_a; group_b)` between two disjoint
    /// variable groups, by enumeration of the pair marginal.
    pub fn pair_information(&self, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
        assert!(
            group_a.iter().all(|v| !group_b.contains(v)),
            "groups must be disjoint"
        );
        let joint_vars: Vec<usize> = group_a.iter().chain(group_b).copied().collect();
        let m_ab = self.marginal(&joint_vars);
        let m_a = self.marginal(group_a);
        let m_b = self.marginal(group_b);
        let mut product = vec![0.0; m_ab.len()];
        for (ia, &pa) in m_a.iter().enumerate() {
            for (ib, &pb) in m_b.iter().enumerate() {
                product[ia * m_b.len() + ib] = pa * pb;
            }
        }
        kl_discrete(&m_ab, &product)
    }

    /// Largest absolute deviation between the table and its reconstruction
    /// from its own conditionals `product_i p(x_i | parents_i)`.
    pub fn factorization_deviation(&self) -> f64 {
        let n = self.n_vars();
        // Marginals over {i} union parents(i) and over parents(i) alone.
        let mut with_child: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut pa_only: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut vars = self.parents[i].clone();
            vars.push(i);
            with_child.push(self.marginal(&vars));
            pa_only.push(self.marginal(&self.parents[i]));
        }
        let mut digits = vec![0usize; n];
        let mut max_dev = 0.0f64;
        for (flat, &p) in self.table.iter().enumerate() {
            decode_outcome(flat, &self.cards, &mut digits);
            let mut recon = 1.0;
            for i in 0..n {
                let cfg = parent_config(&digits, &self.parents[i], &self.cards);
                let pa_p = pa_only[i][cfg];
                if pa_p == 0.0 {
                    // A zero-probability parent configuration forces the
                    // outcome itself to probability zero.
                    recon = 0.0;
                    break;
                }
                recon *= with_child[i][cfg * self.cards[i] + digits[i]] / pa_p;
            }
            max_dev = math::fmax(max_dev, math::abs(p - recon));
        }
        max_dev
    }

    /// Whether the table factorizes over its declared graph.
    pub fn is_factorized(&self) -> bool {
        self.factorization_deviation() <= FACTORIZATION_TOL
    }

    /// Compares multi-information against the summed transmitted
    /// information of all variables.
    ///
    /// Requires a factorized joint; the identity holds only then.
    pub fn transmitted_sum_check(&self) -> Result<TransmittedReport> {
        let max_dev = self.factorization_deviation();
        if max_dev > FACTORIZATION_TOL {
            return Err(Error::NotFactorized { max_dev });
        }
        let lhs = self.multi_information()?;
        let mut terms = Vec::with_capacity(self.n_vars());
        for i in 0..self.n_vars() {
            if self.parents[i].is_empty() {
                terms.push(0.0);
            } else {
                terms.push(self.pair_information(&[i], &self.parents[i])?);
            }
        }
        let rhs: f64 = terms.iter().sum();
        Ok(TransmittedReport {
            lhs,
            rhs,
            gap: math::abs(lhs - rhs),
            terms,
        })
    }
}

/// Writes the mixed-radix digits of `flat` into `digits`, last variable fastest.
fn decode_outcome(flat: usize, cards: &[usize], digits: &mut [usize]) {
    let mut rest = flat;
    for i in (0..cards.len()).rev() {
        digits[i] = rest % cards[i];
        rest /= cards[i];
    }
}

/// Mixed-radix index of the parent values within `digits`, last parent fastest.
fn parent_config(digits: &[usize], parents: &[usize], cards: &[usize]) -> usize {
    let mut idx = 0;
    for &p in parents {
        idx = idx * cards[p] + digits[p];
    }
    idx
}

/// Kahn's algorithm over the parent lists.
fn check_acyclic(parents: &[Vec<usize>]) -> Result<()> {
    let n = parents.len();
    let mut remaining_parents: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, pa) in parents.iter().enumerate() {
        for &p in pa {
            children[p].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| remaining_parents[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = ready.pop() {
        seen += 1;
        for &c in &children[i] {
            remaining_parents[c] -= 1;
            if remaining_parents[c] == 0 {
                ready.push(c);
            }
        }
    }
    if seen != n {
        let stuck = (0..n)
            .find(|&i| remaining_parents[i] > 0)
            .expect("cycle implies a stuck variable");
        return Err(Error::CyclicGraph { variable: stuck });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, labels};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn kl_of_identical_tables_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_discrete(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_example() {
        // Direct summation: 0.5 ln 2 + 0.5 ln(2/3).
        let expected = 0.5 * math::ln(2.0) + 0.5 * math::ln(2.0 / 3.0);
        let got = kl_discrete(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.143_841_036_225_89).abs() < 1e-12);
    }

    #[test]
    fn kl_rejects_support_violation() {
        let err = kl_discrete(&[1.0, 0.0], &[0.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::KlUnsupported { index: 0, p: 1.0 });
    }

    #[test]
    fn kl_rejects_length_mismatch() {
        let err = kl_discrete(&[1.0], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { op: "kl_discrete", .. }));
    }

    #[test]
    fn kl_zero_p_entries_contribute_nothing() {
        let got = kl_discrete(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((got - math::ln(2.0)).abs() < 1e-15);
    }

    #[test]
    fn independent_joint_has_zero_multi_information() {
        // Outer product of [0.3, 0.7] and [0.4, 0.6].
        let table = vec![0.12, 0.18, 0.28, 0.42];
        let j = DiscreteJoint::new(names(2), vec![2, 2], vec![vec![], vec![]], table).unwrap();
        assert!(j.multi_information().unwrap().abs() < 1e-12);
    }

    #[test]
    fn perfectly_dependent_pair_has_ln2() {
        let table = vec![0.5, 0.0, 0.0, 0.5];
        let j = DiscreteJoint::new(names(2), vec![2, 2], vec![vec![], vec![0]], table).unwrap();
        let mi = j.multi_information().unwrap();
        assert!((mi - math::ln(2.0)).abs() < 1e-12);
    }

    /// Brute-force multi-information with hand-rolled marginal loops,
    /// independent of the library's marginalization code.
    fn oracle_multi_information_3(table: &[f64], cards: [usize; 3]) -> f64 {
        let [c0, c1, c2] = cards;
        let mut m0 = vec![0.0; c0];
        let mut m1 = vec![0.0; c1];
        let mut m2 = vec![0.0; c2];
        for i in 0..c0 {
            for j in 0..c1 {
                for k in 0..c2 {
                    let p = table[(i * c1 + j) * c2 + k];
                    m0[i] += p;
                    m1[j] += p;
                    m2[k] += p;
                }
            }
        }
        let mut total = 0.0;
        for i in 0..c0 {
            for j in 0..c1 {
                for k in 0..c2 {
                    let p = table[(i * c1 + j) * c2 + k];
                    if p > 0.0 {
                        total += p * math::ln(p / (m0[i] * m1[j] * m2[k]));
                    }
                }
            }
        }
        total
    }

    #[test]
    fn random_chain_matches_enumeration_oracle() {
        let mut rng = rng::stream(42, labels::JOINTS);
        for _ in 0..10 {
            // Chain x0 -> x1 -> x2 with random conditional rows.
            let cards = vec![3, 2, 4];
            let mut conds: Vec<Vec<f64>> = Vec::new();
            for (i, &c) in cards.iter().enumerate() {
                let rows = if i == 0 { 1 } else { cards[i - 1] };
                let mut cond = vec![0.0; rows * c];
                for row in cond.chunks_mut(c) {
                    let mut s = 0.0;
                    for v in row.iter_mut() {
                        *v = rng::uniform(&mut rng);
                        s += *v;
                    }
                    for v in row.iter_mut() {
                        *v /= s;
                    }
                }
                conds.push(cond);
            }
            let j = DiscreteJoint::from_conditionals(
                names(3),
                cards,
                vec![vec![], vec![0], vec![1]],
                &conds,
            )
            .unwrap();
            let expected = oracle_multi_information_3(j.table(), [3, 2, 4]);
            let got = j.multi_information().unwrap();
            assert!((got - expected).abs() < 1e-12, "got {got}, want {expected}");
        }
    }

    #[test]
    fn multi_information_is_non_negative() {
        let mut rng = rng::stream(7, labels::JOINTS);
        for _ in 0..25 {
            let j = DiscreteJoint::random_factorized(&mut rng, 4, 4);
            assert!(j.multi_information().unwrap() >= -1e-15);
        }
    }

    #[test]
    fn pair_information_is_symmetric() {
        let mut rng = rng::stream(13, labels::JOINTS);
        for _ in 0..10 {
            let j = DiscreteJoint::random_factorized(&mut rng, 4, 3);
            if j.n_vars() < 2 {
                continue;
            }
            let ab = j.pair_information(&[0], &[1]).unwrap();
            let ba = j.pair_information(&[1], &[0]).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn edgeless_independent_joint_checks_to_zero() {
        let table = vec![0.12, 0.18, 0.28, 0.42];
        let j = DiscreteJoint::new(names(2), vec![2, 2], vec![vec![], vec![]], table).unwrap();
        let report = j.transmitted_sum_check().unwrap();
        assert!(report.lhs.abs() < 1e-12);
        assert!(report.rhs.abs() < 1e-12);
        assert!(report.gap < 1e-12);
    }

    #[test]
    fn star_graph_sums_child_informations() {
        // x0 is the root; x1, x2, x3 are children of x0.
        let mut rng = rng::stream(21, labels::JOINTS);
        let cards = vec![3, 2, 2, 3];
        let parents = vec![vec![], vec![0], vec![0], vec![0]];
        let mut conds: Vec<Vec<f64>> = Vec::new();
        for (i, &c) in cards.iter().enumerate() {
            let rows = if i == 0 { 1 } else { cards[0] };
            let mut cond = vec![0.0; rows * c];
            for row in cond.chunks_mut(c) {
                let mut s = 0.0;
                for v in row.iter_mut() {
                    *v = rng::uniform(&mut rng);
                    s += *v;
                }
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
            conds.push(cond);
        }
        let j = DiscreteJoint::from_conditionals(names(4), cards, parents, &conds).unwrap();
        let report = j.transmitted_sum_check().unwrap();
        assert!(report.gap < 1e-9, "gap {}", report.gap);
        // The right-hand side decomposes into the root's information with
        // each child, computed independently here.
        let by_hand = j.pair_information(&[0], &[1]).unwrap()
            + j.pair_information(&[0], &[2]).unwrap()
            + j.pair_information(&[0], &[3]).unwrap();
        assert!((report.rhs - by_hand).abs() < 1e-12);
    }

    #[test]
    fn deterministic_chain_doubles_entropy() {
        // x0 uniform binary, x1 = x0, x2 = x1: both sides equal 2 ln 2.
        let conds = vec![
            vec![0.5, 0.5],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ];
        let j = DiscreteJoint::from_conditionals(
            names(3),
            vec![2, 2, 2],
            vec![vec![], vec![0], vec![1]],
            &conds,
        )
        .unwrap();
        let report = j.transmitted_sum_check().unwrap();
        let expected = 2.0 * math::ln(2.0);
        assert!((report.lhs - expected).abs() < 1e-12);
        assert!((report.rhs - expected).abs() < 1e-12);
    }

    #[test]
    fn non_factorized_joint_is_rejected() {
        // Correlated pair declared as edgeless.
        let table = vec![0.5, 0.0, 0.0, 0.5];
        let j = DiscreteJoint::new(names(2), vec![2, 2], vec![vec![], vec![]], table).unwrap();
        assert!(!j.is_factorized());
        let err = j.transmitted_sum_check().unwrap_err();
        assert!(matches!(err, Error::NotFactorized { max_dev } if max_dev > 0.1));
    }

    #[test]
    fn cyclic_parent_structure_is_rejected() {
        let table = vec![0.25; 4];
        let err =
            DiscreteJoint::new(names(2), vec![2, 2], vec![vec![1], vec![0]], table).unwrap_err();
        assert!(matches!(err, Error::CyclicGraph { .. }));
    }

    #[test]
    fn unnormalized_table_is_rejected() {
        let table = vec![0.5, 0.5, 0.5, 0.5];
        let err =
            DiscreteJoint::new(names(2), vec![2, 2], vec![vec![], vec![]], table).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
    }

    #[test]
    fn bad_conditional_row_is_rejected() {
        let conds = vec![vec![0.9, 0.2]];
        let err = DiscreteJoint::from_conditionals(names(1), vec![2], vec![vec![]], &conds)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
    }

    #[test]
    fn random_factorized_joints_are_valid_and_factorized() {
        let mut rng = rng::stream(5, labels::JOINTS);
        for _ in 0..25 {
            let j = DiscreteJoint::random_factorized(&mut rng, 4, 4);
            assert!(j.n_vars() >= 2 && j.n_vars() <= 4);
            assert!(j.cards().iter().all(|&c| (2..=4).contains(&c)));
            assert!(j.is_factorized());
        }
    }
}
