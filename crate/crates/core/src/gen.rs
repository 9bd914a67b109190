//! Random policies, guards and set expressions for sampling and testing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{BinOp, Policy, SetExpr};
use crate::schema::{Atom, AttributeSchema, Domain, Guard, GuardBox, Predicate};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Maximum operator nesting depth.
    pub max_depth: usize,
    /// Whether `eps`, `0` and `1` may appear as leaves.
    pub constants: bool,
    /// Whether `(-)` may appear. Without it every generated policy has
    /// definite (two-valued) meaning at fully bound requests.
    pub ominus: bool,
    /// Whether `guard : P` nodes may appear.
    pub scopes: bool,
    /// Maximum number of boxes per generated guard.
    pub max_boxes: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 5,
            constants: true,
            ominus: true,
            scopes: true,
            max_boxes: 2,
        }
    }
}

pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, schema: &AttributeSchema, cfg: &GenConfig) -> Policy {
    gen_policy(rng, schema, cfg, cfg.max_depth)
}

fn gen_policy<R: Rng + ?Sized>(rng: &mut R, schema: &AttributeSchema, cfg: &GenConfig, depth: usize) -> Policy {
    if depth == 0 || rng.gen_bool(0.25) {
        return gen_leaf(rng, schema, cfg);
    }
    let mut ops: Vec<BinOp> = BinOp::ALL.to_vec();
    if !cfg.ominus {
        ops.retain(|&op| op != BinOp::Ominus);
    }
    match rng.gen_range(0..10) {
        0 => Policy::neg(gen_policy(rng, schema, cfg, depth - 1)),
        1 => Policy::det(gen_policy(rng, schema, cfg, depth - 1)),
        2 if cfg.scopes => Policy::scope(
            random_guard(rng, schema, cfg.max_boxes),
            gen_policy(rng, schema, cfg, depth - 1),
        ),
        _ => {
            let op = *ops.choose(rng).expect("operator list is never empty");
            Policy::bin(
                op,
                gen_policy(rng, schema, cfg, depth - 1),
                gen_policy(rng, schema, cfg, depth - 1),
            )
        }
    }
}

fn gen_leaf<R: Rng + ?Sized>(rng: &mut R, schema: &AttributeSchema, cfg: &GenConfig) -> Policy {
    if cfg.constants && rng.gen_bool(0.3) {
        return [Policy::Empty, Policy::Zero, Policy::One]
            .choose(rng)
            .unwrap()
            .clone();
    }
    Policy::rule(
        random_guard(rng, schema, cfg.max_boxes),
        random_guard(rng, schema, cfg.max_boxes),
    )
}

pub fn random_guard<R: Rng + ?Sized>(rng: &mut R, schema: &AttributeSchema, max_boxes: usize) -> Guard {
    let n = rng.gen_range(0..=max_boxes);
    Guard {
        boxes: (0..n).map(|_| random_box(rng, schema)).collect(),
    }
}

pub fn random_box<R: Rng + ?Sized>(rng: &mut R, schema: &AttributeSchema) -> GuardBox {
    let mut b = GuardBox::top();
    for attr in schema.attributes() {
        if rng.gen_bool(0.5) {
            b = b.with(Atom::new(attr.key.clone(), random_predicate(rng, &attr.domain)));
        }
    }
    b
}

fn random_predicate<R: Rng + ?Sized>(rng: &mut R, dom: &Domain) -> Predicate {
    let n = dom.len();
    let pick = |rng: &mut R| dom.text(rng.gen_range(0..n));
    let choices = if dom.is_int() { 6 } else { 3 };
    match rng.gen_range(0..choices) {
        0 => Predicate::Eq(pick(rng)),
        1 => Predicate::Neq(pick(rng)),
        2 => {
            let mut vs: Vec<String> = (0..n).filter(|_| rng.gen_bool(0.5)).map(|i| dom.text(i)).collect();
            if vs.is_empty() {
                vs.push(pick(rng));
            }
            Predicate::InSet(vs)
        }
        k => {
            let v = dom.int_value(rng.gen_range(0..n)).expect("integer domain");
            match k {
                3 => Predicate::Lt(v),
                4 => Predicate::Gt(v),
                _ => Predicate::Ge(v),
            }
        }
    }
}

pub fn random_set_expr<R: Rng + ?Sized>(rng: &mut R, max_depth: usize) -> SetExpr {
    if max_depth == 0 || rng.gen_bool(0.3) {
        return [SetExpr::A, SetExpr::D, SetExpr::A2, SetExpr::D2]
            .choose(rng)
            .unwrap()
            .clone();
    }
    let d = max_depth - 1;
    match rng.gen_range(0..4) {
        0 => SetExpr::union(random_set_expr(rng, d), random_set_expr(rng, d)),
        1 => SetExpr::inter(random_set_expr(rng, d), random_set_expr(rng, d)),
        2 => SetExpr::diff(random_set_expr(rng, d), random_set_expr(rng, d)),
        _ => SetExpr::compl(random_set_expr(rng, d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_depth_and_flags() {
        let s = parse_schema("attribute x : int [0, 3]\nattribute y : enum { a, b, c }").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = GenConfig {
            max_depth: 3,
            ominus: false,
            ..GenConfig::default()
        };
        for _ in 0..200 {
            let p = random_policy(&mut rng, &s, &cfg);
            assert!(p.depth() <= 3);
            p.walk(&mut |n| assert!(!matches!(n, Policy::Bin(BinOp::Ominus, ..))));
        }
    }

    #[test]
    fn generated_guards_are_well_formed() {
        let s = parse_schema("attribute x : int [0, 3]\nattribute y : enum { a, b, c }").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            random_guard(&mut rng, &s, 3).compile(&s).unwrap();
        }
    }
}
