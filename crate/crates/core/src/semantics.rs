//! Per-request evaluation and whole-domain meanings of policies.
//!
//! [`eval_rel`] evaluates a policy against one request in three-valued logic.
//! [`eval_abs`] computes, for every point of the schema, the accept and deny
//! values by set algebra on regions. The two are computed by separate code so
//! that each can serve as an oracle for the other.

use thiserror::Error;

use crate::kernel::{classify, Decision, DecisionPair, TriValue};
use crate::lang::{scope_expand, BinOp, Policy};
use crate::schema::{AttributeSchema, CompiledGuard, Guard, PointSet, Request, SchemaError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("metavariable `{0}` has no binding")]
    UnboundVariable(String),
    #[error("request has {got} bindings but the schema has {want} attributes")]
    SchemaMismatch { got: usize, want: usize },
}

/// Operator tags accepted by [`combine_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpTag {
    Neg,
    Det,
    Bin(BinOp),
}

/// Combines decision pairs the way the operator does at a single request.
///
/// # Panics
/// If the arity of `op` does not match the presence of `p2`.
pub fn combine_pair(op: OpTag, p1: DecisionPair, p2: Option<DecisionPair>) -> DecisionPair {
    match (op, p2) {
        (OpTag::Neg, None) => p1.swap(),
        (OpTag::Det, None) => DecisionPair::new(p1.accept.det(), p1.deny.det()),
        (OpTag::Bin(b), Some(p2)) => combine_bin(b, p1, p2),
        _ => panic!("operator {op:?} applied to the wrong number of operands"),
    }
}

pub fn combine_bin(op: BinOp, p1: DecisionPair, p2: DecisionPair) -> DecisionPair {
    let DecisionPair { accept: a1, deny: d1 } = p1;
    let DecisionPair { accept: a2, deny: d2 } = p2;
    let (a, d) = match op {
        BinOp::Seq => (a1.or(a2.minus(d1)), d1.or(d2.minus(a1))),
        BinOp::Pov => (a1.or(a2), d1.minus(a2).or(d2.minus(a1))),
        BinOp::Dov => (a1.minus(d2).or(a2.minus(d1)), d1.or(d2)),
        BinOp::Par => (a1.and(a2), d1.and(d2)),
        BinOp::Choice => {
            let (a, d) = (a1.or(a2), d1.or(d2));
            (a.minus(d), d.minus(a))
        }
        BinOp::Minus => {
            let applicable = a2.or(d2);
            (a1.minus(applicable), d1.minus(applicable))
        }
        BinOp::Ominus => {
            let applicable = a2.or(d2);
            (a1.ominus(applicable), d1.ominus(applicable))
        }
    };
    DecisionPair::new(a, d)
}

/// Membership of a request in a rule: accept where only the first guard holds,
/// deny where only the second does.
pub fn rule_pair(m1: TriValue, m2: TriValue) -> DecisionPair {
    DecisionPair::new(m1.and(m2.not()), m2.and(m1.not()))
}

#[derive(Debug, Clone)]
enum Node {
    Const(DecisionPair),
    Rule(CompiledGuard, CompiledGuard),
    Neg(Box<Node>),
    Det(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

/// A policy prepared for repeated per-request evaluation.
#[derive(Debug, Clone)]
pub struct Evaluator {
    root: Node,
    attrs: usize,
}

impl Evaluator {
    pub fn new(p: &Policy, schema: &AttributeSchema) -> Result<Self, EvalError> {
        let expanded = scope_expand(p, schema)?;
        Ok(Evaluator {
            root: compile(&expanded, schema)?,
            attrs: schema.len(),
        })
    }

    pub fn eval(&self, r: &Request) -> Result<DecisionPair, EvalError> {
        if r.values.len() != self.attrs {
            return Err(EvalError::SchemaMismatch {
                got: r.values.len(),
                want: self.attrs,
            });
        }
        Ok(eval_node(&self.root, r))
    }
}

fn compile(p: &Policy, schema: &AttributeSchema) -> Result<Node, EvalError> {
    Ok(match p {
        Policy::Empty => Node::Const(DecisionPair::NOT_APPLICABLE),
        Policy::Zero => Node::Const(DecisionPair::DENY),
        Policy::One => Node::Const(DecisionPair::PERMIT),
        Policy::Rule(a, d) => Node::Rule(a.compile(schema)?, d.compile(schema)?),
        Policy::Neg(q) => Node::Neg(Box::new(compile(q, schema)?)),
        Policy::Det(q) => Node::Det(Box::new(compile(q, schema)?)),
        Policy::Bin(op, l, r) => Node::Bin(*op, Box::new(compile(l, schema)?), Box::new(compile(r, schema)?)),
        Policy::Var(v) => return Err(EvalError::UnboundVariable(v.clone())),
        Policy::Scope(_, q) => match q.as_ref() {
            Policy::Var(v) => return Err(EvalError::UnboundVariable(v.clone())),
            _ => unreachable!("scopes are expanded before compilation"),
        },
    })
}

fn eval_node(n: &Node, r: &Request) -> DecisionPair {
    match n {
        Node::Const(p) => *p,
        Node::Rule(a, d) => rule_pair(a.eval(r), d.eval(r)),
        Node::Neg(q) => combine_pair(OpTag::Neg, eval_node(q, r), None),
        Node::Det(q) => combine_pair(OpTag::Det, eval_node(q, r), None),
        Node::Bin(op, a, b) => combine_bin(*op, eval_node(a, r), eval_node(b, r)),
    }
}

/// Evaluates a policy against one request.
pub fn eval_rel(p: &Policy, r: &Request, schema: &AttributeSchema) -> Result<DecisionPair, EvalError> {
    Evaluator::new(p, schema)?.eval(r)
}

pub fn decide(p: &Policy, r: &Request, schema: &AttributeSchema) -> Result<Decision, EvalError> {
    Ok(classify(eval_rel(p, r, schema)?))
}

/// A three-valued region: one truth value per schema point, in point order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriRegion {
    values: Vec<TriValue>,
}

impl TriRegion {
    pub fn constant(points: usize, v: TriValue) -> Self {
        TriRegion {
            values: vec![v; points],
        }
    }

    pub fn from_points(set: &PointSet) -> Self {
        TriRegion {
            values: (0..set.universe()).map(|i| TriValue::from_bool(set.contains(i))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, point: usize) -> TriValue {
        self.values[point]
    }

    pub fn values(&self) -> &[TriValue] {
        &self.values
    }

    /// Points whose value is `v`.
    pub fn points_with(&self, v: TriValue) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(move |(_, &x)| x == v).map(|(i, _)| i)
    }

    pub fn count(&self, v: TriValue) -> usize {
        self.values.iter().filter(|&&x| x == v).count()
    }

    /// The crisp set of points whose value is `T`.
    pub fn t_region(&self) -> PointSet {
        let mut s = PointSet::empty(self.values.len());
        for i in self.points_with(TriValue::T) {
            s.insert(i);
        }
        s
    }

    fn map(&self, f: impl Fn(TriValue) -> TriValue) -> TriRegion {
        TriRegion {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip(&self, other: &TriRegion, f: impl Fn(TriValue, TriValue) -> TriValue) -> TriRegion {
        TriRegion {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn union(&self, other: &TriRegion) -> TriRegion {
        self.zip(other, TriValue::or)
    }

    pub fn inter(&self, other: &TriRegion) -> TriRegion {
        self.zip(other, TriValue::and)
    }

    pub fn diff(&self, other: &TriRegion) -> TriRegion {
        self.zip(other, TriValue::minus)
    }

    pub fn ominus(&self, other: &TriRegion) -> TriRegion {
        self.zip(other, TriValue::ominus)
    }

    pub fn complement(&self) -> TriRegion {
        self.map(TriValue::not)
    }

    pub fn det(&self) -> TriRegion {
        self.map(TriValue::det)
    }
}

/// Accept and deny regions of a policy over the whole domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyMeaning {
    pub accept: TriRegion,
    pub deny: TriRegion,
}

impl PolicyMeaning {
    pub fn pair(&self, point: usize) -> DecisionPair {
        DecisionPair::new(self.accept.get(point), self.deny.get(point))
    }

    pub fn points(&self) -> usize {
        self.accept.len()
    }

    fn constant(points: usize, p: DecisionPair) -> Self {
        PolicyMeaning {
            accept: TriRegion::constant(points, p.accept),
            deny: TriRegion::constant(points, p.deny),
        }
    }

    /// The region where the policy either accepts or denies.
    pub fn applicable(&self) -> TriRegion {
        self.accept.union(&self.deny)
    }
}

/// Computes the whole-domain meaning by region algebra.
pub fn eval_abs(p: &Policy, schema: &AttributeSchema) -> Result<PolicyMeaning, EvalError> {
    schema.check_cap()?;
    let n = schema.point_count();
    abs(p, schema, n)
}

fn region(g: &Guard, schema: &AttributeSchema) -> Result<TriRegion, EvalError> {
    Ok(TriRegion::from_points(&g.compile(schema)?.region(schema)))
}

fn abs(p: &Policy, schema: &AttributeSchema, n: usize) -> Result<PolicyMeaning, EvalError> {
    Ok(match p {
        Policy::Empty => PolicyMeaning::constant(n, DecisionPair::NOT_APPLICABLE),
        Policy::Zero => PolicyMeaning::constant(n, DecisionPair::DENY),
        Policy::One => PolicyMeaning::constant(n, DecisionPair::PERMIT),
        Policy::Var(v) => return Err(EvalError::UnboundVariable(v.clone())),
        Policy::Rule(g1, g2) => {
            let (r1, r2) = (region(g1, schema)?, region(g2, schema)?);
            PolicyMeaning {
                accept: r1.diff(&r2),
                deny: r2.diff(&r1),
            }
        }
        Policy::Scope(g, q) => {
            let (phi, m) = (region(g, schema)?, abs(q, schema, n)?);
            PolicyMeaning {
                accept: phi.inter(&m.accept),
                deny: phi.inter(&m.deny),
            }
        }
        Policy::Neg(q) => {
            let m = abs(q, schema, n)?;
            PolicyMeaning {
                accept: m.deny,
                deny: m.accept,
            }
        }
        Policy::Det(q) => {
            let m = abs(q, schema, n)?;
            PolicyMeaning {
                accept: m.accept.det(),
                deny: m.deny.det(),
            }
        }
        Policy::Bin(op, l, r) => {
            let (m1, m2) = (abs(l, schema, n)?, abs(r, schema, n)?);
            let (a1, d1, a2, d2) = (&m1.accept, &m1.deny, &m2.accept, &m2.deny);
            let (accept, deny) = match op {
                BinOp::Seq => (a1.union(&a2.diff(d1)), d1.union(&d2.diff(a1))),
                BinOp::Pov => (a1.union(a2), d1.diff(a2).union(&d2.diff(a1))),
                BinOp::Dov => (a1.diff(d2).union(&a2.diff(d1)), d1.union(d2)),
                BinOp::Par => (a1.inter(a2), d1.inter(d2)),
                BinOp::Choice => {
                    let (a, d) = (a1.union(a2), d1.union(d2));
                    (a.diff(&d), d.diff(&a))
                }
                BinOp::Minus => {
                    let both = a2.union(d2);
                    (a1.diff(&both), d1.diff(&both))
                }
                BinOp::Ominus => {
                    let both = a2.union(d2);
                    (a1.ominus(&both), d1.ominus(&both))
                }
            };
            PolicyMeaning { accept, deny }
        }
    })
}

/// The pair a meaning assigns to a fully bound request.
pub fn lookup_meaning(
    m: &PolicyMeaning,
    x: &Request,
    schema: &AttributeSchema,
) -> Result<DecisionPair, SchemaError> {
    Ok(m.pair(x.point_index(schema)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TriValue::*;
    use crate::lang::parse_policy;
    use crate::schema::parse_schema;

    fn schema() -> AttributeSchema {
        parse_schema("attribute x : int [0, 3]\nattribute y : enum { a, b }").unwrap()
    }

    fn p(text: &str) -> Policy {
        parse_policy(text, &schema()).unwrap()
    }

    #[test]
    fn combine_examples() {
        let pov = combine_bin(BinOp::Pov, DecisionPair::new(U, F), DecisionPair::new(F, T));
        assert_eq!(pov, DecisionPair::new(U, U));
        for other in DecisionPair::ALL {
            assert_eq!(combine_bin(BinOp::Seq, DecisionPair::PERMIT, other), DecisionPair::PERMIT);
        }
        assert_eq!(
            combine_bin(BinOp::Par, DecisionPair::PERMIT, DecisionPair::PERMIT),
            DecisionPair::PERMIT
        );
        assert_eq!(combine_pair(OpTag::Neg, DecisionPair::new(U, F), None), DecisionPair::new(F, U));
        assert_eq!(combine_pair(OpTag::Det, DecisionPair::new(U, T), None), DecisionPair::DENY);
    }

    #[test]
    fn rel_examples() {
        let s = schema();
        let mut r = Request::unknown(&s);
        assert_eq!(eval_rel(&p("<{x=0}, none>"), &r, &s).unwrap(), DecisionPair::new(U, F));
        assert_eq!(decide(&p("<{x=0}, {x=1}>"), &r, &s).unwrap(), Decision::IndeterminatePD);
        assert_eq!(eval_rel(&p("0"), &r, &s).unwrap(), DecisionPair::DENY);
        assert_eq!(decide(&p("1"), &r, &s).unwrap(), Decision::Permit);
        assert_eq!(decide(&p("eps"), &r, &s).unwrap(), Decision::NotApplicable);
        r.bind("x", "0", &s).unwrap();
        assert_eq!(eval_rel(&p("<{x=0}, none>"), &r, &s).unwrap(), DecisionPair::PERMIT);
    }

    #[test]
    fn abs_examples() {
        let s = schema();
        let one = eval_abs(&Policy::One, &s).unwrap();
        assert_eq!(one.accept.count(T), 8);
        assert_eq!(one.deny.count(F), 8);
        // guard regions {x in {0,1}} and {x in {1,2}} overlap at x=1
        let m = eval_abs(&p("<{x in {0, 1}}, {x in {1, 2}}>"), &s).unwrap();
        let accepted: Vec<usize> = m.accept.points_with(T).collect();
        let denied: Vec<usize> = m.deny.points_with(T).collect();
        assert_eq!(accepted, vec![0, 1]);
        assert_eq!(denied, vec![4, 5]);
        let m = eval_abs(&p("1 (-) eps"), &s).unwrap();
        assert_eq!(m.pair(3), DecisionPair::PERMIT);
    }

    #[test]
    fn lookup_requires_binding() {
        let s = schema();
        let m = eval_abs(&Policy::Empty, &s).unwrap();
        let mut r = Request::unknown(&s);
        assert!(lookup_meaning(&m, &r, &s).is_err());
        r.bind("x", "2", &s).unwrap();
        r.bind("y", "b", &s).unwrap();
        assert_eq!(lookup_meaning(&m, &r, &s).unwrap(), DecisionPair::NOT_APPLICABLE);
    }

    #[test]
    fn coherence_on_handwritten_policies() {
        let s = schema();
        for text in [
            "{y = a} : (<{x > 1}, {x = 0}> . 0)",
            "~({x < 2} : 1 pov <none, {y = b}>) (-) det 1",
            "<{x in {1, 3}}, {y = a}> - <{x = 3}, none> + {x != 0} : 0",
            "(1 (-) 1) + (0 (-) 0) && <{}, none>",
        ] {
            let pol = p(text);
            let m = eval_abs(&pol, &s).unwrap();
            for i in 0..s.point_count() {
                assert_eq!(m.pair(i), eval_rel(&pol, &s.point(i), &s).unwrap(), "{text} at {i}");
            }
        }
    }
}
