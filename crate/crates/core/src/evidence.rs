//! Reports, pairwise conflict interactions, and the clustering energy.
//!
//! Each report is a simple support function: one focal proposition (a
//! nonempty subset of the type universe) carrying mass `s`, plus the
//! remainder on the whole frame. Two reports conflict exactly when their
//! propositions are disjoint; the interaction `J_ij = -ln(1 - s_i s_j)`
//! for disjoint pairs is the distance measure the annealer minimizes.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Largest mass a report may carry. A mass of 1 would make the pairwise
/// interaction infinite; loaders clamp down to this value.
pub const MASS_CAP: f64 = 0.999;

/// Maximum number of type labels in a universe, so that all subsets stay
/// enumerable as 16-bit masks.
pub const MAX_UNIVERSE: usize = 16;

/// The ordered set of all possible types at the current aggregation level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeUniverse {
    labels: Vec<String>,
}

impl TypeUniverse {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("type universe must not be empty"));
        }
        if labels.len() > MAX_UNIVERSE {
            return Err(Error::invalid(format!(
                "type universe has {} labels, max is {MAX_UNIVERSE}",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[i + 1..].contains(a) {
                return Err(Error::invalid(format!("duplicate type label {a:?}")));
            }
        }
        Ok(TypeUniverse { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Builds a proposition from member labels. Unknown labels and empty
    /// member lists are rejected.
    pub fn proposition(&self, members: &[&str]) -> Result<Proposition> {
        let mut bits = 0u16;
        for m in members {
            let idx = self
                .index_of(m)
                .ok_or_else(|| Error::invalid(format!("unknown type label {m:?}")))?;
            bits |= 1 << idx;
        }
        if bits == 0 {
            return Err(Error::invalid("proposition must not be empty"));
        }
        Ok(Proposition {
            bits,
            universe_len: self.labels.len() as u8,
        })
    }

    /// Proposition from a raw bitmask over this universe.
    pub fn proposition_from_bits(&self, bits: u16) -> Result<Proposition> {
        if bits == 0 {
            return Err(Error::invalid("proposition must not be empty"));
        }
        if bits >> self.labels.len() != 0 {
            return Err(Error::invalid("proposition bits outside the universe"));
        }
        Ok(Proposition {
            bits,
            universe_len: self.labels.len() as u8,
        })
    }

    /// Member labels of a proposition, in universe order.
    pub fn members_of(&self, p: Proposition) -> Vec<String> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(i, _)| p.bits & (1 << i) != 0)
            .map(|(_, l)| l.clone())
            .collect()
    }
}

/// A nonempty subset of the type universe, stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Proposition {
    bits: u16,
    universe_len: u8,
}

impl Proposition {
    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn universe_len(&self) -> u8 {
        self.universe_len
    }

    pub fn cardinality(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_singleton(&self) -> bool {
        self.bits.count_ones() == 1
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        self.bits & (1 << idx) != 0
    }

    pub fn is_subset_of_bits(&self, mask: u16) -> bool {
        self.bits & !mask == 0
    }

    fn check_same_universe(&self, other: &Proposition) -> Result<()> {
        if self.universe_len != other.universe_len {
            return Err(Error::UniverseMismatch(format!(
                "propositions over universes of size {} and {}",
                self.universe_len, other.universe_len
            )));
        }
        Ok(())
    }
}

/// One piece of evidence: a proposition, its mass, and an instance count.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub id: String,
    pub proposition: Proposition,
    mass: f64,
    pub count: u32,
}

impl Report {
    /// Validates and constructs a report. Masses in `(MASS_CAP, 1]` are
    /// clamped to [`MASS_CAP`]; masses outside `(0, 1]` are rejected.
    pub fn new(id: impl Into<String>, proposition: Proposition, mass: f64, count: u32) -> Result<Self> {
        let id = id.into();
        if !mass.is_finite() || mass <= 0.0 || mass > 1.0 {
            return Err(Error::invalid(format!(
                "report {id:?}: mass {mass} outside (0, 1]"
            )));
        }
        if count == 0 {
            return Err(Error::invalid(format!("report {id:?}: count must be >= 1")));
        }
        Ok(Report {
            id,
            proposition,
            mass: mass.min(MASS_CAP),
            count,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

/// Returns true when the two propositions are disjoint, i.e. the reports
/// are in conflict.
pub fn conflict_indicator(a: Proposition, b: Proposition) -> Result<bool> {
    a.check_same_universe(&b)?;
    Ok(a.bits & b.bits == 0)
}

/// Pairwise interaction `J_ij = -ln(1 - s_i s_j)` for disjoint propositions,
/// zero otherwise. Finite because masses are capped below 1.
pub fn pairwise_interaction(a: &Report, b: &Report) -> Result<f64> {
    if conflict_indicator(a.proposition, b.proposition)? {
        Ok(-(1.0 - a.mass * b.mass).ln())
    } else {
        Ok(0.0)
    }
}

/// Symmetric matrix of pairwise interactions with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConflictMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl ConflictMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Sum of interactions between report `i` and a set of member indices,
    /// skipping `i` itself if present.
    pub fn row_sum_over(&self, i: usize, members: &[usize]) -> f64 {
        members
            .iter()
            .filter(|&&m| m != i)
            .map(|&m| self.get(i, m))
            .sum()
    }
}

/// Builds the conflict matrix over all report pairs.
pub fn build_conflict_matrix(reports: &[Report]) -> Result<ConflictMatrix> {
    if reports.is_empty() {
        return Err(Error::invalid("need at least one report"));
    }
    let n = reports.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = pairwise_interaction(&reports[i], &reports[j])?;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(ConflictMatrix { n, entries })
}

/// Conflict between one report and a cluster, via the pairwise product
/// approximation `1 - exp(-sum J)`. Always in `[0, 1)`.
pub fn cluster_conflict(r: &Report, members: &[&Report]) -> Result<f64> {
    let mut sum = 0.0;
    for m in members {
        if m.id == r.id {
            continue;
        }
        sum += pairwise_interaction(r, m)?;
    }
    Ok(1.0 - (-sum).exp())
}

/// Matrix-indexed form of [`cluster_conflict`].
pub fn cluster_conflict_indexed(j: &ConflictMatrix, i: usize, members: &[usize]) -> f64 {
    1.0 - (-j.row_sum_over(i, members)).exp()
}

/// A hard partition of reports into `k` clusters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardAssignment {
    pub k: usize,
    /// Cluster index per report, in report order.
    pub cluster_of: Vec<usize>,
}

impl HardAssignment {
    pub fn new(k: usize, cluster_of: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cluster count must be >= 1"));
        }
        if let Some(&c) = cluster_of.iter().find(|&&c| c >= k) {
            return Err(Error::invalid(format!(
                "cluster index {c} out of range for k = {k}"
            )));
        }
        Ok(HardAssignment { k, cluster_of })
    }

    /// Member indices per cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Potts energy: sum of `J_ij` over unordered same-cluster pairs.
pub fn energy(assign: &HardAssignment, j: &ConflictMatrix) -> f64 {
    let n = j.n();
    debug_assert_eq!(assign.cluster_of.len(), n);
    let mut e = 0.0;
    for i in 0..n {
        for l in (i + 1)..n {
            if assign.cluster_of[i] == assign.cluster_of[l] {
                e += j.get(i, l);
            }
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn universe() -> TypeUniverse {
        TypeUniverse::new(vec!["X".into(), "Y".into(), "Z".into()]).unwrap()
    }

    fn report(id: &str, members: &[&str], mass: f64, count: u32) -> Report {
        let u = universe();
        Report::new(id, u.proposition(members).unwrap(), mass, count).unwrap()
    }

    #[test]
    fn universe_rejects_duplicates_and_oversize() {
        assert!(TypeUniverse::new(vec!["A".into(), "A".into()]).is_err());
        assert!(TypeUniverse::new(vec![]).is_err());
        let many: Vec<String> = (0..17).map(|i| format!("T{i}")).collect();
        assert!(TypeUniverse::new(many).is_err());
    }

    #[test]
    fn conflict_indicator_on_singletons_and_overlaps() {
        let u = universe();
        let x = u.proposition(&["X"]).unwrap();
        let y = u.proposition(&["Y"]).unwrap();
        let xy = u.proposition(&["X", "Y"]).unwrap();
        let xz = u.proposition(&["X", "Z"]).unwrap();
        assert!(conflict_indicator(x, y).unwrap());
        assert!(!conflict_indicator(x, xy).unwrap());
        assert!(conflict_indicator(xz, y).unwrap());
    }

    #[test]
    fn universe_mismatch_is_an_error() {
        let u2 = TypeUniverse::new(vec!["X".into(), "Y".into()]).unwrap();
        let a = universe().proposition(&["X"]).unwrap();
        let b = u2.proposition(&["Y"]).unwrap();
        assert!(matches!(
            conflict_indicator(a, b),
            Err(Error::UniverseMismatch(_))
        ));
    }

    #[test]
    fn pairwise_interaction_matches_hand_values() {
        // -ln(1 - 0.25) for disjoint half-masses.
        let a = report("a", &["X"], 0.5, 1);
        let b = report("b", &["Y"], 0.5, 1);
        let j = pairwise_interaction(&a, &b).unwrap();
        assert!((j - 0.2876820724517809).abs() < 1e-12);

        // Overlap kills the interaction regardless of mass.
        let c = report("c", &["X", "Y"], 0.9, 1);
        assert_eq!(pairwise_interaction(&a, &c).unwrap(), 0.0);

        // Capped masses keep J finite: -ln(1 - 0.999^2).
        let d = report("d", &["X"], 0.999, 1);
        let e = report("e", &["Z"], 0.999, 1);
        let j = pairwise_interaction(&d, &e).unwrap();
        assert!((j - -(1.0 - 0.999 * 0.999f64).ln()).abs() < 1e-12);
        assert!((j - 6.215_607_6).abs() < 1e-4);
        assert!(j.is_finite());
    }

    #[test]
    fn mass_is_clamped_at_the_cap() {
        let u = universe();
        let p = u.proposition(&["X"]).unwrap();
        let r = Report::new("r", p, 1.0, 1).unwrap();
        assert_eq!(r.mass(), MASS_CAP);
        assert!(Report::new("r", p, 0.0, 1).is_err());
        assert!(Report::new("r", p, 1.5, 1).is_err());
        assert!(Report::new("r", p, 0.5, 0).is_err());
    }

    #[test]
    fn conflict_matrix_examples() {
        let single = build_conflict_matrix(&[report("a", &["X"], 0.5, 1)]).unwrap();
        assert_eq!(single.n(), 1);
        assert_eq!(single.get(0, 0), 0.0);

        let m = build_conflict_matrix(&[
            report("a", &["X"], 0.5, 1),
            report("b", &["Y"], 0.5, 1),
        ])
        .unwrap();
        assert!((m.get(0, 1) - 0.2876820724517809).abs() < 1e-12);
        assert_eq!(m.get(0, 1), m.get(1, 0));

        let z = build_conflict_matrix(&[
            report("a", &["X"], 0.5, 1),
            report("b", &["X", "Y"], 0.7, 1),
        ])
        .unwrap();
        assert_eq!(z.get(0, 1), 0.0);
    }

    #[test]
    fn cluster_conflict_examples() {
        let r = report("r", &["X"], 0.5, 1);
        assert_eq!(cluster_conflict(&r, &[]).unwrap(), 0.0);

        let m = report("m", &["Y"], 0.5, 1);
        let c = cluster_conflict(&r, &[&m]).unwrap();
        assert!((c - 0.25).abs() < 1e-12);

        let o = report("o", &["X", "Z"], 0.9, 1);
        assert_eq!(cluster_conflict(&r, &[&o]).unwrap(), 0.0);

        // The report itself is excluded if present.
        let self_incl = cluster_conflict(&r, &[&r, &m]).unwrap();
        assert!((self_incl - 0.25).abs() < 1e-12);
    }

    #[test]
    fn energy_examples() {
        let reports = vec![
            report("a", &["X"], 0.5, 1),
            report("b", &["Y"], 0.5, 1),
            report("c", &["Z"], 0.5, 1),
        ];
        let j = build_conflict_matrix(&reports).unwrap();

        let singletons = HardAssignment::new(3, vec![0, 1, 2]).unwrap();
        assert_eq!(energy(&singletons, &j), 0.0);

        let pair = HardAssignment::new(2, vec![0, 0, 1]).unwrap();
        assert!((energy(&pair, &j) - 0.2876820724517809).abs() < 1e-12);

        let one = HardAssignment::new(1, vec![0, 0, 0]).unwrap();
        assert!((energy(&one, &j) - 3.0 * 0.2876820724517809).abs() < 1e-12);
    }

    #[test]
    fn merging_two_clusters_never_decreases_energy() {
        let reports = vec![
            report("a", &["X"], 0.6, 1),
            report("b", &["Y"], 0.7, 1),
            report("c", &["Z"], 0.5, 1),
            report("d", &["X", "Y"], 0.4, 1),
        ];
        let j = build_conflict_matrix(&reports).unwrap();
        let split = HardAssignment::new(2, vec![0, 1, 0, 1]).unwrap();
        let merged = HardAssignment::new(1, vec![0, 0, 0, 0]).unwrap();
        assert!(energy(&merged, &j) >= energy(&split, &j));
    }

    #[test]
    fn cluster_conflict_monotone_under_union() {
        let r = report("r", &["X"], 0.6, 1);
        let m1 = report("m1", &["Y"], 0.5, 1);
        let m2 = report("m2", &["Z"], 0.7, 1);
        let c1 = cluster_conflict(&r, &[&m1]).unwrap();
        let c2 = cluster_conflict(&r, &[&m2]).unwrap();
        let both = cluster_conflict(&r, &[&m1, &m2]).unwrap();
        assert!(both >= c1.max(c2));
    }

    proptest! {
        #[test]
        fn interaction_is_symmetric_and_zero_iff_overlap(
            bits_a in 1u16..8, bits_b in 1u16..8,
            mass_a in 0.01f64..0.99, mass_b in 0.01f64..0.99,
        ) {
            let u = universe();
            let a = Report::new("a", u.proposition_from_bits(bits_a).unwrap(), mass_a, 1).unwrap();
            let b = Report::new("b", u.proposition_from_bits(bits_b).unwrap(), mass_b, 1).unwrap();
            let ab = pairwise_interaction(&a, &b).unwrap();
            let ba = pairwise_interaction(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            if bits_a & bits_b == 0 {
                prop_assert!(ab > 0.0);
            } else {
                prop_assert_eq!(ab, 0.0);
            }
        }

        #[test]
        fn all_singleton_assignment_has_zero_energy(
            masses in proptest::collection::vec(0.05f64..0.99, 2..6),
        ) {
            let u = universe();
            let reports: Vec<Report> = masses.iter().enumerate().map(|(i, &m)| {
                Report::new(format!("r{i}"), u.proposition(&["X"]).unwrap(), m, 1).unwrap()
            }).collect();
            let j = build_conflict_matrix(&reports).unwrap();
            let n = reports.len();
            let a = HardAssignment::new(n, (0..n).collect()).unwrap();
            prop_assert_eq!(energy(&a, &j), 0.0);
        }
    }
}
