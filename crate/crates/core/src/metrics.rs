//! Scalar merit functions: statistical parity, entropy, information gain,
//! fairness gain and their combinations, plus the Hoeffding bound.
//!
//! Counts are `f64` so that the same code serves exact nominal tallies and
//! Gaussian-estimated numeric partitions. Logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::config::KamiranVariant;
use crate::error::{Error, Result};
use crate::schema::Community;

/// `|fg|` below this is treated as exactly zero by [`fair_information_gain`].
pub const FG_ZERO_TOLERANCE: f64 = 1e-12;

/// Tallies of the deprived/favored × rejected/granted communities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FairnessCounts {
    pub dr: f64,
    pub dg: f64,
    pub fr: f64,
    pub fg: f64,
}

impl FairnessCounts {
    pub fn new(dr: f64, dg: f64, fr: f64, fg: f64) -> Self {
        FairnessCounts { dr, dg, fr, fg }
    }

    pub fn get(&self, community: Community) -> f64 {
        match community {
            Community::DeprivedRejected => self.dr,
            Community::DeprivedGranted => self.dg,
            Community::FavoredRejected => self.fr,
            Community::FavoredGranted => self.fg,
        }
    }

    pub fn add(&mut self, community: Community, weight: f64) {
        match community {
            Community::DeprivedRejected => self.dr += weight,
            Community::DeprivedGranted => self.dg += weight,
            Community::FavoredRejected => self.fr += weight,
            Community::FavoredGranted => self.fg += weight,
        }
    }

    pub fn deprived(&self) -> f64 {
        self.dr + self.dg
    }

    pub fn favored(&self) -> f64 {
        self.fr + self.fg
    }

    pub fn total(&self) -> f64 {
        self.deprived() + self.favored()
    }

    /// The deprived and favored roles exchanged.
    pub fn swapped(&self) -> Self {
        FairnessCounts::new(self.fr, self.fg, self.dr, self.dg)
    }
}

/// Per-class instance counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    counts: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(num_classes: usize) -> Self {
        ClassDistribution {
            counts: vec![0.0; num_classes],
        }
    }

    pub fn from_counts(counts: impl Into<Vec<f64>>) -> Self {
        ClassDistribution {
            counts: counts.into(),
        }
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn get(&self, class: usize) -> f64 {
        self.counts[class]
    }

    pub fn add(&mut self, class: usize, weight: f64) {
        self.counts[class] += weight;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Number of classes with non-zero weight.
    pub fn observed_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0.0).count()
    }
}

/// One branch of a candidate split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub classes: ClassDistribution,
    pub fairness: FairnessCounts,
}

impl Branch {
    /// `|D_v|`, the branch's share of the parent.
    pub fn weight(&self) -> f64 {
        self.classes.total()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub branches: Vec<Branch>,
}

impl PartitionStats {
    pub fn new(branches: Vec<Branch>) -> Self {
        PartitionStats { branches }
    }

    /// Branches carrying positive weight.
    pub fn populated(&self) -> usize {
        self.branches.iter().filter(|b| b.weight() > 0.0).count()
    }
}

fn check_totals(what: &str, parent: f64, parts: f64) -> Result<()> {
    if (parent - parts).abs() > 1e-6 * parent.abs().max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "{what}: branch totals sum to {parts}, parent total is {parent}"
        )));
    }
    Ok(())
}

fn positive_rate(granted: f64, rejected: f64) -> f64 {
    let n = granted + rejected;
    if n > 0.0 {
        granted / n
    } else {
        0.0
    }
}

/// Favored minus deprived positive rate. A group without members
/// contributes a rate of 0.
pub fn statistical_parity(c: &FairnessCounts) -> f64 {
    positive_rate(c.fg, c.fr) - positive_rate(c.dg, c.dr)
}

fn entropy_of(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy in bits.
pub fn entropy(d: &ClassDistribution) -> f64 {
    entropy_of(&d.counts)
}

pub fn information_gain(parent: &ClassDistribution, parts: &PartitionStats) -> Result<f64> {
    let total = parent.total();
    check_totals(
        "information gain",
        total,
        parts.branches.iter().map(Branch::weight).sum(),
    )?;
    if total <= 0.0 {
        return Ok(0.0);
    }
    let after: f64 = parts
        .branches
        .iter()
        .map(|b| b.weight() / total * entropy(&b.classes))
        .sum();
    Ok((entropy(parent) - after).max(0.0))
}

/// Reduction in weighted absolute discrimination achieved by a split.
/// Branch weights are the branches' fairness-count totals.
pub fn fairness_gain(parent: &FairnessCounts, parts: &PartitionStats) -> Result<f64> {
    let total = parent.total();
    check_totals(
        "fairness gain",
        total,
        parts.branches.iter().map(|b| b.fairness.total()).sum(),
    )?;
    if total <= 0.0 {
        return Ok(0.0);
    }
    let after: f64 = parts
        .branches
        .iter()
        .map(|b| b.fairness.total() / total * statistical_parity(&b.fairness).abs())
        .sum();
    Ok(statistical_parity(parent).abs() - after)
}

/// Information gain of a split measured on the sensitive attribute instead
/// of the class.
pub fn sensitive_information_gain(parent: &FairnessCounts, parts: &PartitionStats) -> Result<f64> {
    let total = parent.total();
    check_totals(
        "sensitive information gain",
        total,
        parts.branches.iter().map(|b| b.fairness.total()).sum(),
    )?;
    if total <= 0.0 {
        return Ok(0.0);
    }
    let after: f64 = parts
        .branches
        .iter()
        .map(|b| {
            let f = &b.fairness;
            f.total() / total * entropy_of(&[f.deprived(), f.favored()])
        })
        .sum();
    Ok((entropy_of(&[parent.deprived(), parent.favored()]) - after).max(0.0))
}

pub fn fair_information_gain(ig: f64, fg: f64) -> f64 {
    if fg.abs() < FG_ZERO_TOLERANCE {
        ig
    } else {
        ig * fg
    }
}

pub fn kamiran_merit(ig_class: f64, ig_sensitive: f64, variant: KamiranVariant) -> f64 {
    match variant {
        KamiranVariant::Subtract => ig_class - ig_sensitive,
        KamiranVariant::Add => ig_class + ig_sensitive,
        KamiranVariant::Divide if ig_sensitive <= 0.0 => ig_class,
        KamiranVariant::Divide => ig_class / ig_sensitive,
    }
}

/// `sqrt(R² ln(1/δ) / 2n)`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> Result<f64> {
    if n.is_nan() || n < 1.0 {
        return Err(Error::Precondition(format!(
            "hoeffding bound needs n >= 1, got {n}"
        )));
    }
    if range.is_nan() || range <= 0.0 {
        return Err(Error::Precondition(format!(
            "hoeffding range must be positive, got {range}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cd(c: &[f64]) -> ClassDistribution {
        ClassDistribution::from_counts(c.to_vec())
    }

    fn branch(classes: &[f64], f: FairnessCounts) -> Branch {
        Branch {
            classes: cd(classes),
            fairness: f,
        }
    }

    /// Branch whose class counts are implied by its fairness counts
    /// (class 0 = rejected, class 1 = granted).
    fn fair_branch(f: FairnessCounts) -> Branch {
        branch(&[f.dr + f.fr, f.dg + f.fg], f)
    }

    #[test]
    fn parity_examples() {
        assert_eq!(
            statistical_parity(&FairnessCounts::new(1.0, 1.0, 1.0, 1.0)),
            0.0
        );
        assert_eq!(
            statistical_parity(&FairnessCounts::new(3.0, 1.0, 1.0, 3.0)),
            0.5
        );
    }

    #[test]
    fn parity_of_empty_groups_is_finite() {
        assert_eq!(statistical_parity(&FairnessCounts::default()), 0.0);
        // Favored-only: the deprived term contributes 0.
        assert_eq!(
            statistical_parity(&FairnessCounts::new(0.0, 0.0, 1.0, 3.0)),
            0.75
        );
        assert_eq!(
            statistical_parity(&FairnessCounts::new(2.0, 2.0, 0.0, 0.0)),
            -0.5
        );
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&cd(&[5.0, 5.0])), 1.0);
        assert_eq!(entropy(&cd(&[10.0, 0.0])), 0.0);
        assert_eq!(entropy(&cd(&[0.0, 0.0])), 0.0);
        assert!((entropy(&cd(&[9.0, 3.0])) - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn information_gain_examples() {
        let none = FairnessCounts::default();
        let perfect =
            PartitionStats::new(vec![branch(&[5.0, 0.0], none), branch(&[0.0, 5.0], none)]);
        assert_eq!(information_gain(&cd(&[5.0, 5.0]), &perfect).unwrap(), 1.0);
        let useless =
            PartitionStats::new(vec![branch(&[3.0, 3.0], none), branch(&[2.0, 2.0], none)]);
        assert!(information_gain(&cd(&[5.0, 5.0]), &useless).unwrap().abs() < 1e-15);
        let mixed = PartitionStats::new(vec![branch(&[6.0, 2.0], none), branch(&[3.0, 3.0], none)]);
        let ig = information_gain(&cd(&[9.0, 5.0]), &mixed).unwrap();
        assert!((ig - 0.048_127_030_408_269_49).abs() < 1e-12, "{ig}");
    }

    #[test]
    fn information_gain_rejects_inconsistent_totals() {
        let none = FairnessCounts::default();
        let parts = PartitionStats::new(vec![branch(&[1.0, 1.0], none)]);
        assert!(matches!(
            information_gain(&cd(&[5.0, 5.0]), &parts),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn fairness_gain_examples() {
        let balanced = FairnessCounts::new(2.0, 2.0, 2.0, 2.0);
        let clean = PartitionStats::new(vec![
            fair_branch(FairnessCounts::new(1.0, 1.0, 1.0, 1.0)),
            fair_branch(FairnessCounts::new(1.0, 1.0, 1.0, 1.0)),
        ]);
        assert_eq!(fairness_gain(&balanced, &clean).unwrap(), 0.0);

        let manufactured = PartitionStats::new(vec![
            fair_branch(FairnessCounts::new(2.0, 0.0, 0.0, 2.0)),
            fair_branch(FairnessCounts::new(0.0, 2.0, 2.0, 0.0)),
        ]);
        assert_eq!(fairness_gain(&balanced, &manufactured).unwrap(), -1.0);

        let biased = FairnessCounts::new(3.0, 1.0, 1.0, 3.0);
        // Half the weight lands in a branch with |Disc| = 1.
        let half_biased = PartitionStats::new(vec![
            fair_branch(FairnessCounts::new(1.0, 1.0, 1.0, 1.0)),
            fair_branch(FairnessCounts::new(2.0, 0.0, 0.0, 2.0)),
        ]);
        assert_eq!(fairness_gain(&biased, &half_biased).unwrap(), 0.0);
        // Both branches discrimination-free: FG = |Disc(parent)|.
        let clean_split = PartitionStats::new(vec![
            fair_branch(FairnessCounts::new(3.0, 0.0, 1.0, 0.0)),
            fair_branch(FairnessCounts::new(0.0, 1.0, 0.0, 3.0)),
        ]);
        assert_eq!(fairness_gain(&biased, &clean_split).unwrap(), 0.5);
    }

    #[test]
    fn fig_examples() {
        assert_eq!(fair_information_gain(0.3, 0.0), 0.3);
        assert!((fair_information_gain(0.3, 0.5) - 0.15).abs() < 1e-15);
        assert!((fair_information_gain(0.3, -0.2) + 0.06).abs() < 1e-15);
        assert_eq!(fair_information_gain(0.4, 1e-13), 0.4);
    }

    #[test]
    fn kamiran_examples() {
        assert!((kamiran_merit(0.3, 0.1, KamiranVariant::Subtract) - 0.2).abs() < 1e-15);
        assert_eq!(kamiran_merit(0.3, 0.0, KamiranVariant::Divide), 0.3);
        assert!((kamiran_merit(0.3, 0.1, KamiranVariant::Add) - 0.4).abs() < 1e-15);
        assert!((kamiran_merit(0.3, 0.1, KamiranVariant::Divide) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sensitive_gain_of_group_split_is_group_entropy() {
        let parent = FairnessCounts::new(1.0, 1.0, 1.0, 1.0);
        let parts = PartitionStats::new(vec![
            fair_branch(FairnessCounts::new(1.0, 1.0, 0.0, 0.0)),
            fair_branch(FairnessCounts::new(0.0, 0.0, 1.0, 1.0)),
        ]);
        assert_eq!(sensitive_information_gain(&parent, &parts).unwrap(), 1.0);
    }

    #[test]
    fn hoeffding_examples() {
        let e = hoeffding_bound(1.0, 0.05, 1000.0).unwrap();
        assert!((e - 0.03870).abs() < 1e-5);
        let quarter = hoeffding_bound(1.0, 0.05, 4000.0).unwrap();
        assert!((quarter - e / 2.0).abs() < 1e-12);
        assert!((hoeffding_bound(2.0, 0.05, 1000.0).unwrap() - 2.0 * e).abs() < 1e-12);
        assert!(matches!(
            hoeffding_bound(1.0, 0.05, 0.0),
            Err(Error::Precondition(_))
        ));
        assert!(hoeffding_bound(0.0, 0.05, 10.0).is_err());
    }

    fn counts() -> impl Strategy<Value = FairnessCounts> {
        (0u32..50, 0u32..50, 0u32..50, 0u32..50)
            .prop_map(|(a, b, c, d)| FairnessCounts::new(a as f64, b as f64, c as f64, d as f64))
    }

    proptest! {
        #[test]
        fn parity_is_antisymmetric(c in counts()) {
            prop_assert_eq!(statistical_parity(&c.swapped()), -statistical_parity(&c));
        }

        #[test]
        fn parity_is_bounded(c in counts()) {
            let d = statistical_parity(&c);
            prop_assert!((-1.0..=1.0).contains(&d));
        }

        #[test]
        fn identity_partition_has_zero_fairness_gain(c in counts()) {
            let parts = PartitionStats::new(vec![fair_branch(c)]);
            prop_assert_eq!(fairness_gain(&c, &parts).unwrap(), 0.0);
        }

        #[test]
        fn fig_with_zero_fg_is_ig(ig in -10.0f64..10.0) {
            prop_assert_eq!(fair_information_gain(ig, 0.0), ig);
        }

        #[test]
        fn fig_increases_with_fg(ig in 0.001f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
            prop_assume!(a.abs() > 1e-9 && b.abs() > 1e-9 && a < b);
            prop_assert!(fair_information_gain(ig, a) < fair_information_gain(ig, b));
        }

        #[test]
        fn information_gain_matches_definition(
            cells in proptest::collection::vec((0u32..40, 0u32..40), 1..6)
        ) {
            let parts = PartitionStats::new(cells.iter()
                .map(|&(a, b)| branch(&[a as f64, b as f64], FairnessCounts::default()))
                .collect());
            let parent = cd(&[
                cells.iter().map(|c| c.0 as f64).sum(),
                cells.iter().map(|c| c.1 as f64).sum(),
            ]);
            let ig = information_gain(&parent, &parts).unwrap();
            let n = parent.total();
            let direct = if n == 0.0 { 0.0 } else {
                entropy(&parent) - parts.branches.iter()
                    .map(|b| b.weight() / n * entropy(&b.classes)).sum::<f64>()
            };
            prop_assert!((ig - direct.max(0.0)).abs() < 1e-12);
            prop_assert!(ig >= 0.0 && ig <= entropy(&parent) + 1e-12);
        }

        #[test]
        fn hoeffding_scales_as_inverse_sqrt(n in 1u32..1_000_000, r in 0.1f64..5.0) {
            let a = hoeffding_bound(r, 1e-7, n as f64).unwrap() * (n as f64).sqrt();
            let b = hoeffding_bound(r, 1e-7, 1.0).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
