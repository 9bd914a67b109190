//! Policy terms: the abstract syntax, its concrete text form, and rewriters.

mod parse;
mod print;
mod rewrite;

use std::collections::HashMap;

use thiserror::Error;

use crate::schema::Guard;

pub use parse::{parse_pattern, parse_policy, ParseError};
pub use print::{print_guard, print_policy};
pub use rewrite::{desugar_core, s2p, s2p_pair, scope_expand};

/// Binary policy operators, loosest-binding group first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    /// Sequential composition (first applicable).
    Seq,
    /// Permit overrides.
    Pov,
    /// Deny overrides.
    Dov,
    /// Both must agree.
    Par,
    /// Exactly one may decide.
    Choice,
    Minus,
    /// Like `Minus`, but overlap makes the result indeterminate.
    Ominus,
}

impl BinOp {
    pub const ALL: [BinOp; 7] = [
        BinOp::Seq,
        BinOp::Pov,
        BinOp::Dov,
        BinOp::Par,
        BinOp::Choice,
        BinOp::Minus,
        BinOp::Ominus,
    ];

    pub fn token(self) -> &'static str {
        match self {
            BinOp::Seq => ".",
            BinOp::Pov => "pov",
            BinOp::Dov => "dov",
            BinOp::Par => "&&",
            BinOp::Choice => "+",
            BinOp::Minus => "-",
            BinOp::Ominus => "(-)",
        }
    }

    /// Binding strength; larger binds tighter.
    pub(crate) fn level(self) -> u8 {
        match self {
            BinOp::Choice | BinOp::Minus | BinOp::Ominus => 1,
            BinOp::Pov | BinOp::Dov => 2,
            BinOp::Par => 3,
            BinOp::Seq => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Neither accepts nor denies anything.
    Empty,
    /// Denies everything.
    Zero,
    /// Accepts everything.
    One,
    /// Accepts what the first guard matches and the second does not; denies the converse.
    Rule(Guard, Guard),
    Neg(Box<Policy>),
    /// Turns indeterminate outcomes into not-applicable ones.
    Det(Box<Policy>),
    Bin(BinOp, Box<Policy>, Box<Policy>),
    /// Restriction of a policy to the points a guard matches.
    Scope(Guard, Box<Policy>),
    /// A metavariable, only produced by [`parse_pattern`].
    Var(String),
}

impl Policy {
    pub fn rule(accept: Guard, deny: Guard) -> Policy {
        Policy::Rule(accept, deny)
    }

    /// `φ → p`: permit where the guard holds.
    pub fn permit(g: Guard) -> Policy {
        Policy::Rule(g, Guard::bottom())
    }

    /// `φ → d`: deny where the guard holds.
    pub fn deny(g: Guard) -> Policy {
        Policy::Rule(Guard::bottom(), g)
    }

    pub fn neg(p: Policy) -> Policy {
        Policy::Neg(Box::new(p))
    }

    pub fn det(p: Policy) -> Policy {
        Policy::Det(Box::new(p))
    }

    pub fn bin(op: BinOp, l: Policy, r: Policy) -> Policy {
        Policy::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn seq(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Seq, l, r)
    }

    pub fn pov(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Pov, l, r)
    }

    pub fn dov(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Dov, l, r)
    }

    pub fn par(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Par, l, r)
    }

    pub fn choice(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Choice, l, r)
    }

    pub fn minus(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Minus, l, r)
    }

    pub fn ominus(l: Policy, r: Policy) -> Policy {
        Policy::bin(BinOp::Ominus, l, r)
    }

    pub fn scope(g: Guard, p: Policy) -> Policy {
        Policy::Scope(g, Box::new(p))
    }

    pub fn var(name: impl Into<String>) -> Policy {
        Policy::Var(name.into())
    }

    /// Number of nodes in the term.
    pub fn size(&self) -> usize {
        match self {
            Policy::Empty | Policy::Zero | Policy::One | Policy::Rule(..) | Policy::Var(_) => 1,
            Policy::Neg(p) | Policy::Det(p) | Policy::Scope(_, p) => 1 + p.size(),
            Policy::Bin(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Policy::Empty | Policy::Zero | Policy::One | Policy::Rule(..) | Policy::Var(_) => 0,
            Policy::Neg(p) | Policy::Det(p) | Policy::Scope(_, p) => 1 + p.depth(),
            Policy::Bin(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Substitutes metavariables. Unbound variables are left in place.
    pub fn instantiate(&self, bindings: &HashMap<String, Policy>) -> Policy {
        match self {
            Policy::Var(name) => bindings.get(name).cloned().unwrap_or_else(|| self.clone()),
            Policy::Empty | Policy::Zero | Policy::One | Policy::Rule(..) => self.clone(),
            Policy::Neg(p) => Policy::neg(p.instantiate(bindings)),
            Policy::Det(p) => Policy::det(p.instantiate(bindings)),
            Policy::Scope(g, p) => Policy::scope(g.clone(), p.instantiate(bindings)),
            Policy::Bin(op, l, r) => Policy::bin(*op, l.instantiate(bindings), r.instantiate(bindings)),
        }
    }

    /// Metavariable names in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Policy::Var(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Policy::Empty | Policy::Zero | Policy::One | Policy::Rule(..) => {}
            Policy::Neg(p) | Policy::Det(p) | Policy::Scope(_, p) => p.collect_vars(out),
            Policy::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Visits every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Policy)) {
        f(self);
        match self {
            Policy::Neg(p) | Policy::Det(p) | Policy::Scope(_, p) => p.walk(f),
            Policy::Bin(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            _ => {}
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_policy(self))
    }
}

/// Set expressions over the accept and deny regions of two policies `P` and `P'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetExpr {
    /// Accept region of `P`.
    A,
    /// Deny region of `P`.
    D,
    /// Accept region of `P'`.
    A2,
    /// Deny region of `P'`.
    D2,
    Union(Box<SetExpr>, Box<SetExpr>),
    Inter(Box<SetExpr>, Box<SetExpr>),
    Diff(Box<SetExpr>, Box<SetExpr>),
    Compl(Box<SetExpr>),
}

impl SetExpr {
    pub fn union(a: SetExpr, b: SetExpr) -> SetExpr {
        SetExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn inter(a: SetExpr, b: SetExpr) -> SetExpr {
        SetExpr::Inter(Box::new(a), Box::new(b))
    }

    pub fn diff(a: SetExpr, b: SetExpr) -> SetExpr {
        SetExpr::Diff(Box::new(a), Box::new(b))
    }

    pub fn compl(a: SetExpr) -> SetExpr {
        SetExpr::Compl(Box::new(a))
    }

    /// An expression denoting the empty set.
    pub fn empty() -> SetExpr {
        SetExpr::diff(SetExpr::A, SetExpr::A)
    }

    pub fn depth(&self) -> usize {
        match self {
            SetExpr::A | SetExpr::D | SetExpr::A2 | SetExpr::D2 => 0,
            SetExpr::Compl(e) => 1 + e.depth(),
            SetExpr::Union(a, b) | SetExpr::Inter(a, b) | SetExpr::Diff(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl std::fmt::Display for SetExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SetExpr::A => f.write_str("A"),
            SetExpr::D => f.write_str("D"),
            SetExpr::A2 => f.write_str("A'"),
            SetExpr::D2 => f.write_str("D'"),
            SetExpr::Union(a, b) => write!(f, "({a} | {b})"),
            SetExpr::Inter(a, b) => write!(f, "({a} & {b})"),
            SetExpr::Diff(a, b) => write!(f, "({a} \\ {b})"),
            SetExpr::Compl(a) => write!(f, "!{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("combinator needs at least one policy")]
    EmptySequence,
}

/// N-ary combinators that fold a binary operator from the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaryAlg {
    Pov,
    Dov,
    /// First applicable, i.e. sequential composition.
    Fa,
    Par,
    Choice,
}

impl NaryAlg {
    pub fn op(self) -> BinOp {
        match self {
            NaryAlg::Pov => BinOp::Pov,
            NaryAlg::Dov => BinOp::Dov,
            NaryAlg::Fa => BinOp::Seq,
            NaryAlg::Par => BinOp::Par,
            NaryAlg::Choice => BinOp::Choice,
        }
    }
}

pub fn combine_nary(alg: NaryAlg, policies: Vec<Policy>) -> Result<Policy, LangError> {
    fold_left(alg.op(), policies)
}

fn fold_left(op: BinOp, policies: Vec<Policy>) -> Result<Policy, LangError> {
    let mut it = policies.into_iter();
    let first = it.next().ok_or(LangError::EmptySequence)?;
    Ok(it.fold(first, |acc, p| Policy::bin(op, acc, p)))
}

/// Only-one-applicable: the choice over `j` of `Pj (-) Σ_{i≠j} Pi`.
pub fn ooa_nary(policies: Vec<Policy>) -> Result<Policy, LangError> {
    if policies.len() == 1 {
        return Ok(policies.into_iter().next().unwrap());
    }
    let terms = (0..policies.len())
        .map(|j| {
            let others: Vec<Policy> = policies
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, p)| p.clone())
                .collect();
            Ok(Policy::ominus(policies[j].clone(), fold_left(BinOp::Choice, others)?))
        })
        .collect::<Result<Vec<_>, LangError>>()?;
    fold_left(BinOp::Choice, terms)
}
