//! Whole-domain analyses: comparison, incompleteness and conflict reports,
//! distances, the set-expression realization construction, and law checking.

mod laws;

use num_rational::Ratio;
use thiserror::Error;

use crate::kernel::{DecisionPair, TriValue};
use crate::lang::{s2p_pair, Policy, SetExpr};
use crate::schema::{AttributeSchema, PointSet};
use crate::semantics::{eval_abs, EvalError, PolicyMeaning};

pub use laws::{
    check_equivalence, check_law, law_catalog, Expectation, Law, LawConfig, LawStatus, LawVerdict,
};

/// Number of sample points kept per reported region.
pub const SAMPLE_LIMIT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("target regions overlap at point {point}")]
    NonDisjointTarget { point: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equivalent,
    LeftLower,
    RightLower,
    Incomparable,
}

impl Relation {
    pub fn token(self) -> &'static str {
        match self {
            Relation::Equivalent => "EQUIVALENT",
            Relation::LeftLower => "LEFT_LOWER",
            Relation::RightLower => "RIGHT_LOWER",
            Relation::Incomparable => "INCOMPARABLE",
        }
    }
}

/// Outcome of checking that one policy's accept and deny regions are contained
/// in another's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inclusion {
    pub holds: bool,
    /// A point accepted by the smaller side but not the larger one.
    pub accept_witness: Option<usize>,
    /// A point denied by the smaller side but not the larger one.
    pub deny_witness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompareReport {
    pub relation: Relation,
    pub applicability_disjoint: bool,
    pub left_in_right: Inclusion,
    pub right_in_left: Inclusion,
    /// Points with an unknown component, for the left and right policy. These
    /// take no part in the inclusion checks.
    pub unknown_points: (usize, usize),
}

fn first_outside(a: &PointSet, b: &PointSet) -> Option<usize> {
    a.iter().find(|&i| !b.contains(i))
}

fn inclusion(m1: &PolicyMeaning, m2: &PolicyMeaning) -> Inclusion {
    let accept_witness = first_outside(&m1.accept.t_region(), &m2.accept.t_region());
    let deny_witness = first_outside(&m1.deny.t_region(), &m2.deny.t_region());
    Inclusion {
        holds: accept_witness.is_none() && deny_witness.is_none(),
        accept_witness,
        deny_witness,
    }
}

fn unknown_points(m: &PolicyMeaning) -> usize {
    (0..m.points()).filter(|&i| m.pair(i).has_unknown()).count()
}

/// Compares two meanings on their definite (true) regions.
pub fn compare_meanings(m1: &PolicyMeaning, m2: &PolicyMeaning) -> CompareReport {
    let left_in_right = inclusion(m1, m2);
    let right_in_left = inclusion(m2, m1);
    let relation = match (left_in_right.holds, right_in_left.holds) {
        (true, true) => Relation::Equivalent,
        (true, false) => Relation::LeftLower,
        (false, true) => Relation::RightLower,
        (false, false) => Relation::Incomparable,
    };
    let (app1, app2) = (m1.applicable().t_region(), m2.applicable().t_region());
    let applicability_disjoint = app1.iter().all(|i| !app2.contains(i));
    CompareReport {
        relation,
        applicability_disjoint,
        left_in_right,
        right_in_left,
        unknown_points: (unknown_points(m1), unknown_points(m2)),
    }
}

pub fn compare(p: &Policy, q: &Policy, schema: &AttributeSchema) -> Result<CompareReport, AnalysisError> {
    Ok(compare_meanings(&eval_abs(p, schema)?, &eval_abs(q, schema)?))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionSummary {
    pub count: usize,
    /// The first few points of the region, in point order.
    pub samples: Vec<usize>,
}

impl RegionSummary {
    fn from_iter(points: impl Iterator<Item = usize>) -> Self {
        let mut s = RegionSummary::default();
        for p in points {
            if s.samples.len() < SAMPLE_LIMIT {
                s.samples.push(p);
            }
            s.count += 1;
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Where two component policies are both applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub left: usize,
    pub right: usize,
    pub region: RegionSummary,
    /// Overlap points where one component accepts and the other denies.
    pub opposing: RegionSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnalysisReport {
    pub points: usize,
    /// Points where the policy neither accepts nor denies.
    pub not_applicable: RegionSummary,
    /// Points where the accept or deny value is unknown.
    pub indeterminate: RegionSummary,
    /// Points where a policy both accepts and denies.
    pub conflict: RegionSummary,
    pub overlaps: Vec<Overlap>,
}

impl AnalysisReport {
    pub fn complete(&self) -> bool {
        self.not_applicable.is_empty() && self.indeterminate.is_empty()
    }

    /// No point both accepted and denied, and no two components disagreeing.
    pub fn conflict_free(&self) -> bool {
        self.conflict.is_empty() && self.overlaps.iter().all(|o| o.opposing.is_empty())
    }
}

fn conflict_points(m: &PolicyMeaning) -> impl Iterator<Item = usize> + '_ {
    (0..m.points()).filter(move |&i| m.pair(i) == DecisionPair::new(TriValue::T, TriValue::T))
}

pub fn incompleteness_of(m: &PolicyMeaning) -> AnalysisReport {
    AnalysisReport {
        points: m.points(),
        not_applicable: RegionSummary::from_iter(
            (0..m.points()).filter(|&i| m.pair(i) == DecisionPair::NOT_APPLICABLE),
        ),
        indeterminate: RegionSummary::from_iter((0..m.points()).filter(|&i| m.pair(i).has_unknown())),
        conflict: RegionSummary::from_iter(conflict_points(m)),
        overlaps: Vec::new(),
    }
}

/// Gaps in a policy's coverage: points not applicable and points indeterminate.
pub fn incompleteness(p: &Policy, schema: &AttributeSchema) -> Result<AnalysisReport, AnalysisError> {
    Ok(incompleteness_of(&eval_abs(p, schema)?))
}

/// Internal conflicts of each policy and pairwise overlaps of applicability.
pub fn conflict_report(policies: &[Policy], schema: &AttributeSchema) -> Result<AnalysisReport, AnalysisError> {
    let meanings = policies
        .iter()
        .map(|p| eval_abs(p, schema))
        .collect::<Result<Vec<_>, _>>()?;
    let points = schema.point_count();
    let conflict = RegionSummary::from_iter(
        (0..points).filter(|&i| meanings.iter().any(|m| m.pair(i) == DecisionPair::new(TriValue::T, TriValue::T))),
    );
    let mut overlaps = Vec::new();
    for (i, mi) in meanings.iter().enumerate() {
        for (j, mj) in meanings.iter().enumerate().skip(i + 1) {
            let (ai, aj) = (mi.applicable(), mj.applicable());
            let both = || (0..points).filter(|&k| ai.get(k).is_true() && aj.get(k).is_true());
            let region = RegionSummary::from_iter(both());
            if region.is_empty() {
                continue;
            }
            let opposing = RegionSummary::from_iter(both().filter(|&k| {
                (mi.accept.get(k).is_true() && mj.deny.get(k).is_true())
                    || (mi.deny.get(k).is_true() && mj.accept.get(k).is_true())
            }));
            overlaps.push(Overlap {
                left: i,
                right: j,
                region,
                opposing,
            });
        }
    }
    Ok(AnalysisReport {
        points,
        conflict,
        overlaps,
        ..AnalysisReport::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Share of (point, component) cells on which the definite regions differ.
    Hamming,
    /// One minus the overlap of definite regions relative to their union.
    Jaccard,
}

pub fn distance_between(m1: &PolicyMeaning, m2: &PolicyMeaning, metric: Metric) -> Ratio<u64> {
    let (a1, d1) = (m1.accept.t_region(), m1.deny.t_region());
    let (a2, d2) = (m2.accept.t_region(), m2.deny.t_region());
    let n = m1.points();
    let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&i| f(i)).count() as u64;
    match metric {
        Metric::Hamming => {
            let diff = count(&|i| a1.contains(i) != a2.contains(i)) + count(&|i| d1.contains(i) != d2.contains(i));
            if n == 0 {
                Ratio::from_integer(0)
            } else {
                Ratio::new(diff, 2 * n as u64)
            }
        }
        Metric::Jaccard => {
            let inter = count(&|i| a1.contains(i) && a2.contains(i)) + count(&|i| d1.contains(i) && d2.contains(i));
            let union = count(&|i| a1.contains(i) || a2.contains(i)) + count(&|i| d1.contains(i) || d2.contains(i));
            if union == 0 {
                Ratio::from_integer(0)
            } else {
                Ratio::from_integer(1) - Ratio::new(inter, union)
            }
        }
    }
}

pub fn distance(p: &Policy, q: &Policy, schema: &AttributeSchema, metric: Metric) -> Result<Ratio<u64>, AnalysisError> {
    Ok(distance_between(&eval_abs(p, schema)?, &eval_abs(q, schema)?, metric))
}

/// Evaluates a set expression over the true regions of two meanings.
pub fn set_region(e: &SetExpr, m: &PolicyMeaning, m2: &PolicyMeaning) -> PointSet {
    let n = m.points();
    let mut out = PointSet::empty(n);
    let regions = [
        m.accept.t_region(),
        m.deny.t_region(),
        m2.accept.t_region(),
        m2.deny.t_region(),
    ];
    for i in 0..n {
        if member(e, &regions, i) {
            out.insert(i);
        }
    }
    out
}

fn member(e: &SetExpr, r: &[PointSet; 4], i: usize) -> bool {
    match e {
        SetExpr::A => r[0].contains(i),
        SetExpr::D => r[1].contains(i),
        SetExpr::A2 => r[2].contains(i),
        SetExpr::D2 => r[3].contains(i),
        SetExpr::Union(a, b) => member(a, r, i) || member(b, r, i),
        SetExpr::Inter(a, b) => member(a, r, i) && member(b, r, i),
        SetExpr::Diff(a, b) => member(a, r, i) && !member(b, r, i),
        SetExpr::Compl(a) => !member(a, r, i),
    }
}

/// Builds a policy accepting exactly on `f` and denying exactly on `g`, where
/// both are set expressions over the regions of `p` and `p2`.
///
/// The regions must be disjoint; the first shared point is reported otherwise.
/// The construction is exact when the two policies have definite meanings at
/// every point; unknown values propagate through it in three-valued logic.
pub fn semantics_to_policy(
    p: &Policy,
    p2: &Policy,
    f: &SetExpr,
    g: &SetExpr,
    schema: &AttributeSchema,
) -> Result<Policy, AnalysisError> {
    let (m, m2) = (eval_abs(p, schema)?, eval_abs(p2, schema)?);
    let (rf, rg) = (set_region(f, &m, &m2), set_region(g, &m, &m2));
    if let Some(point) = rf.iter().find(|&i| rg.contains(i)) {
        return Err(AnalysisError::NonDisjointTarget { point });
    }
    Ok(s2p_pair(f, g, p, p2))
}
