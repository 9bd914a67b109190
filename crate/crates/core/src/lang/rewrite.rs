//! Tree rewriters: scope expansion, desugaring to the core operators, and the
//! construction that realizes a set expression over two policies as a policy.

use super::{BinOp, Policy, SetExpr};
use crate::schema::{AttributeSchema, Guard, SchemaError};

/// Pushes every `guard : P` down to the rules and constants it covers.
///
/// Rules get both guards intersected with the scope, `1` and `0` become rules
/// over the scope itself, and `eps` is unchanged. Negation and determinization
/// keep the same scope (restriction commutes with swapping accept and deny),
/// and nested scopes intersect.
pub fn scope_expand(p: &Policy, schema: &AttributeSchema) -> Result<Policy, SchemaError> {
    expand(p, None, schema)
}

fn expand(p: &Policy, scope: Option<&Guard>, schema: &AttributeSchema) -> Result<Policy, SchemaError> {
    Ok(match p {
        Policy::Scope(g, q) => {
            let inner = match scope {
                Some(s) => s.and(g, schema)?,
                None => g.clone(),
            };
            expand(q, Some(&inner), schema)?
        }
        Policy::Rule(a, d) => match scope {
            Some(s) => Policy::Rule(s.and(a, schema)?, s.and(d, schema)?),
            None => p.clone(),
        },
        Policy::One => match scope {
            Some(s) => Policy::permit(s.clone()),
            None => Policy::One,
        },
        Policy::Zero => match scope {
            Some(s) => Policy::deny(s.clone()),
            None => Policy::Zero,
        },
        Policy::Empty => Policy::Empty,
        Policy::Var(_) => match scope {
            Some(s) => Policy::scope(s.clone(), p.clone()),
            None => p.clone(),
        },
        Policy::Neg(q) => Policy::neg(expand(q, scope, schema)?),
        Policy::Det(q) => Policy::det(expand(q, scope, schema)?),
        Policy::Bin(op, l, r) => Policy::bin(*op, expand(l, scope, schema)?, expand(r, scope, schema)?),
    })
}

/// Rewrites a policy so that it only uses rules, `~`, `det`, `&&`, `+` and `(-)`.
///
/// `-`, `.` and `pov` are replaced by the set-expression construction applied
/// to their (already rewritten) operands; `dov` goes through its duality with
/// `pov`. The whole-domain meaning is unchanged.
pub fn desugar_core(p: &Policy, schema: &AttributeSchema) -> Result<Policy, SchemaError> {
    Ok(core(&scope_expand(p, schema)?))
}

fn core_one() -> Policy {
    Policy::Rule(Guard::top(), Guard::bottom())
}

fn core(p: &Policy) -> Policy {
    use SetExpr::{A, A2, D, D2};
    match p {
        Policy::Empty => Policy::Rule(Guard::bottom(), Guard::bottom()),
        Policy::Zero => Policy::Rule(Guard::bottom(), Guard::top()),
        Policy::One => core_one(),
        Policy::Rule(..) | Policy::Var(_) => p.clone(),
        Policy::Neg(q) => Policy::neg(core(q)),
        Policy::Det(q) => Policy::det(core(q)),
        Policy::Scope(g, q) => Policy::Scope(g.clone(), Box::new(core(q))),
        Policy::Bin(op, l, r) => {
            let (l, r) = (core(l), core(r));
            let one = core_one();
            match op {
                BinOp::Par | BinOp::Choice | BinOp::Ominus => Policy::bin(*op, l, r),
                BinOp::Minus => {
                    let applicable = SetExpr::union(A2, D2);
                    let f = SetExpr::diff(A, applicable.clone());
                    let g = SetExpr::diff(D, applicable);
                    build_pair(&f, &g, &l, &r, &one)
                }
                BinOp::Seq => {
                    let f = SetExpr::union(A, SetExpr::diff(A2, D));
                    let g = SetExpr::union(D, SetExpr::diff(D2, A));
                    build_pair(&f, &g, &l, &r, &one)
                }
                BinOp::Pov => pov_template(&l, &r, &one),
                BinOp::Dov => Policy::neg(pov_template(&Policy::neg(l), &Policy::neg(r), &one)),
            }
        }
    }
}

fn pov_template(l: &Policy, r: &Policy, one: &Policy) -> Policy {
    use SetExpr::{A, A2, D, D2};
    let f = SetExpr::union(A, A2);
    let g = SetExpr::union(SetExpr::diff(D, A2), SetExpr::diff(D2, A));
    build_pair(&f, &g, l, r, one)
}

/// The policy realizing set expression `e` as its accept region, with no denials.
///
/// Leaves map to `P && 1`, `~P && 1`, `P' && 1` and `~P' && 1`; union to `+`;
/// intersection to `&&`; difference `f1 \ f2` to `(S(f1) + ~S(f2)) && 1`; and
/// complement to `1 + ~S(f1)`.
pub fn s2p(e: &SetExpr, p: &Policy, p2: &Policy) -> Policy {
    build(e, p, p2, &Policy::One)
}

/// `S(f) + ~S(g)`: accepts on `f` and denies on `g` when the two are disjoint.
pub fn s2p_pair(f: &SetExpr, g: &SetExpr, p: &Policy, p2: &Policy) -> Policy {
    build_pair(f, g, p, p2, &Policy::One)
}

fn build_pair(f: &SetExpr, g: &SetExpr, p: &Policy, p2: &Policy, one: &Policy) -> Policy {
    Policy::choice(build(f, p, p2, one), Policy::neg(build(g, p, p2, one)))
}

fn build(e: &SetExpr, p: &Policy, p2: &Policy, one: &Policy) -> Policy {
    let rec = |e: &SetExpr| build(e, p, p2, one);
    match e {
        SetExpr::A => Policy::par(p.clone(), one.clone()),
        SetExpr::D => Policy::par(Policy::neg(p.clone()), one.clone()),
        SetExpr::A2 => Policy::par(p2.clone(), one.clone()),
        SetExpr::D2 => Policy::par(Policy::neg(p2.clone()), one.clone()),
        SetExpr::Union(a, b) => Policy::choice(rec(a), rec(b)),
        SetExpr::Inter(a, b) => Policy::par(rec(a), rec(b)),
        SetExpr::Diff(a, b) => Policy::par(Policy::choice(rec(a), Policy::neg(rec(b))), one.clone()),
        SetExpr::Compl(a) => Policy::choice(one.clone(), Policy::neg(rec(a))),
    }
}
