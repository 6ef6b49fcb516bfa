//! Template catalog and the integer support algebra over subsets of the
//! type universe.
//!
//! For a cluster core and a candidate template we compute, for every
//! nonempty subset `X` of types:
//!
//! - `ST(X)`: total slot count the template demands inside `X`
//! - `SC(X)`: support the core commits inside `X`
//! - `AC(X) = ST(X) - SC(X)`: what may still be brought in (negative means
//!   the core overcrowds the template)
//! - `SNC(X)`: support from the cluster's non-core inside `X`
//! - `NAC(X)`: non-core support that the template plus core cannot absorb
//!
//! All of this is exact integer arithmetic; fit measures and basic beliefs
//! are exact rationals on top of it.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evidence::{Report, TypeUniverse};
use crate::rational::Rational;
use crate::Result;

/// One slot of a template: a single type and how many of it are required.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSlot {
    pub slot_type: String,
    pub count: u32,
}

/// A named multiset of typed slots describing a force element's composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    slots: Vec<TemplateSlot>,
}

impl Template {
    /// Validates and constructs a template. Duplicate slot types are merged
    /// by summing counts; zero counts are rejected.
    pub fn new(name: impl Into<String>, slots: Vec<TemplateSlot>) -> Result<Self> {
        let name = name.into();
        let mut merged: Vec<TemplateSlot> = Vec::new();
        for s in slots {
            if s.count == 0 {
                return Err(Error::invalid(format!(
                    "template {name:?}: slot {:?} has count 0",
                    s.slot_type
                )));
            }
            match merged.iter_mut().find(|m| m.slot_type == s.slot_type) {
                Some(m) => m.count += s.count,
                None => merged.push(s),
            }
        }
        Ok(Template {
            name,
            slots: merged,
        })
    }

    pub fn slots(&self) -> &[TemplateSlot] {
        &self.slots
    }

    pub fn total_slots(&self) -> i64 {
        self.slots.iter().map(|s| s.count as i64).sum()
    }

    fn slot_indices(&self, universe: &TypeUniverse) -> Result<Vec<(usize, i64)>> {
        self.slots
            .iter()
            .map(|s| {
                universe
                    .index_of(&s.slot_type)
                    .map(|i| (i, s.count as i64))
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "template {:?}: slot type {:?} not in universe",
                            self.name, s.slot_type
                        ))
                    })
            })
            .collect()
    }
}

/// An integer-valued map over every nonempty subset of the type universe.
///
/// `ST`, `SC` and `SNC` are nonnegative and monotone under subset inclusion
/// by construction; `AC` may go negative when a core overcrowds a template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportFunction {
    universe_len: usize,
    /// Indexed by subset bitmask; entry 0 (the empty set) stays 0.
    values: Vec<i64>,
}

impl SupportFunction {
    pub fn zeros(universe_len: usize) -> Self {
        SupportFunction {
            universe_len,
            values: vec![0; 1 << universe_len],
        }
    }

    pub fn universe_len(&self) -> usize {
        self.universe_len
    }

    pub fn get(&self, mask: u16) -> i64 {
        self.values[mask as usize]
    }

    /// Value on the full universe.
    pub fn total(&self) -> i64 {
        self.values[(1usize << self.universe_len) - 1]
    }

    /// All nonempty subset masks, smallest cardinality first and
    /// lexicographic by member order within one cardinality. This is the
    /// layout used for serialized support tables.
    pub fn display_order(universe_len: usize) -> Vec<u16> {
        let mut masks: Vec<u16> = (1..(1u32 << universe_len) as u16).collect();
        masks.sort_by_key(|&m| (m.count_ones(), member_indices(m)));
        masks
    }
}

fn member_indices(mask: u16) -> Vec<u16> {
    (0..16).filter(|i| mask & (1 << i) != 0).collect()
}

/// `ST`: per subset, the slot count the template demands inside it.
pub fn template_support(t: &Template, universe: &TypeUniverse) -> Result<SupportFunction> {
    let slots = t.slot_indices(universe)?;
    let mut sf = SupportFunction::zeros(universe.len());
    for mask in 1..(1u32 << universe.len()) as u16 {
        let mut sum = 0;
        for &(idx, n) in &slots {
            if mask & (1 << idx) != 0 {
                sum += n;
            }
        }
        sf.values[mask as usize] = sum;
    }
    Ok(sf)
}

/// `SC` / `SNC`: per subset, the summed count of reports whose proposition
/// is contained in it.
pub fn evidence_support(reports: &[&Report], universe: &TypeUniverse) -> Result<SupportFunction> {
    let mut sf = SupportFunction::zeros(universe.len());
    for r in reports {
        if r.proposition.universe_len() as usize != universe.len() {
            return Err(Error::UniverseMismatch(format!(
                "report {:?} built over a universe of size {}, expected {}",
                r.id,
                r.proposition.universe_len(),
                universe.len()
            )));
        }
    }
    for mask in 1..(1u32 << universe.len()) as u16 {
        let mut sum = 0;
        for r in reports {
            if r.proposition.is_subset_of_bits(mask) {
                sum += r.count as i64;
            }
        }
        sf.values[mask as usize] = sum;
    }
    Ok(sf)
}

/// `AC = ST - SC` pointwise, plus the feasibility verdict (`AC >= 0`
/// everywhere). A negative entry means the core overcrowds the template.
pub fn admissible(st: &SupportFunction, sc: &SupportFunction) -> (SupportFunction, bool) {
    debug_assert_eq!(st.universe_len, sc.universe_len);
    let mut out = SupportFunction::zeros(st.universe_len);
    let mut feasible = true;
    for m in 1..out.values.len() {
        let v = st.values[m] - sc.values[m];
        if v < 0 {
            feasible = false;
        }
        out.values[m] = v;
    }
    (out, feasible)
}

/// `NAC = max(0, SNC - AC)` pointwise, additionally capped at `SNC` so the
/// bound `NAC <= SNC` holds even where `AC` has gone negative.
pub fn inadmissible(snc: &SupportFunction, ac: &SupportFunction) -> SupportFunction {
    debug_assert_eq!(snc.universe_len, ac.universe_len);
    let mut out = SupportFunction::zeros(snc.universe_len);
    for m in 1..out.values.len() {
        out.values[m] = (snc.values[m] - ac.values[m].max(0)).clamp(0, snc.values[m]);
    }
    out
}

/// Degree of fit between a template and a core.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TemplateFit {
    pub template: String,
    /// Worst per-slot-type coverage, `min SC({p}) / ST({p})`.
    pub mu1: Rational,
    /// Aggregate coverage over all types, `SC(TY) / ST(TY)`.
    pub mu2: Rational,
    /// `(mu1 + mu2) / 2` when feasible, zero otherwise.
    pub mu: Rational,
    pub feasible: bool,
}

/// Evaluates the fit of a template against core support `sc`, given the
/// template's own support `st` (which must be `template_support(t)`).
pub fn fit(
    t: &Template,
    sc: &SupportFunction,
    st: &SupportFunction,
    universe: &TypeUniverse,
) -> Result<TemplateFit> {
    let infeasible = |t: &Template| TemplateFit {
        template: t.name.clone(),
        mu1: Rational::zero(),
        mu2: Rational::zero(),
        mu: Rational::zero(),
        feasible: false,
    };
    if t.total_slots() == 0 {
        return Ok(infeasible(t));
    }
    let (_, feasible) = admissible(st, sc);
    if !feasible {
        return Ok(infeasible(t));
    }
    let mut mu1 = Rational::one();
    for (idx, _) in t.slot_indices(universe)? {
        let mask = 1u16 << idx;
        let q = Rational::new(sc.get(mask), st.get(mask));
        if q < mu1 {
            mu1 = q;
        }
    }
    let full = ((1u32 << sc.universe_len) - 1) as u16;
    let mu2 = Rational::new(sc.get(full), st.get(full));
    let mu = Rational::average(mu1, mu2);
    Ok(TemplateFit {
        template: t.name.clone(),
        mu1,
        mu2,
        mu,
        feasible: true,
    })
}

/// Picks the feasible template with the highest fit; ties break toward the
/// earlier catalog entry. Returns `None` when every template is infeasible.
pub fn select_template<'a>(
    core: &[&Report],
    catalog: &'a [Template],
    universe: &TypeUniverse,
) -> Result<Option<(&'a Template, TemplateFit)>> {
    if catalog.is_empty() {
        return Err(Error::invalid("template catalog must not be empty"));
    }
    let sc = evidence_support(core, universe)?;
    let mut best: Option<(&Template, TemplateFit)> = None;
    for t in catalog {
        let st = template_support(t, universe)?;
        let f = fit(t, &sc, &st, universe)?;
        if !f.feasible {
            continue;
        }
        let better = match &best {
            Some((_, b)) => f.mu > b.mu,
            None => true,
        };
        if better {
            best = Some((t, f));
        }
    }
    Ok(best)
}

/// Basic belief that a non-core report does not belong to its cluster:
/// `NAC / SNC` evaluated at the report's own proposition.
pub fn basic_belief_not_in(
    r: &Report,
    snc: &SupportFunction,
    nac: &SupportFunction,
) -> Rational {
    let mask = r.proposition.bits();
    let denom = snc.get(mask);
    assert!(
        denom > 0,
        "report {:?} does not contribute to the non-core support it is judged by",
        r.id
    );
    Rational::new(nac.get(mask), denom)
}

/// Interaction between a cluster's template and one report: zero for core
/// members, `-ln(1 - m)` otherwise, with `m` capped just below 1 to stay
/// finite.
pub fn template_interaction(m: Rational, is_core: bool) -> f64 {
    if is_core {
        return 0.0;
    }
    let m = m.to_f64().clamp(0.0, 0.999_999);
    -(1.0 - m).ln()
}
