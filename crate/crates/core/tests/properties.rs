use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sepl::analysis::{compare, distance, Metric, Relation};
use sepl::gen::{random_guard, random_policy, GenConfig};
use sepl::kernel::TriValue;
use sepl::lang::{desugar_core, parse_policy, print_policy, scope_expand, Policy};
use sepl::schema::{guard_eval, parse_schema, AttributeSchema, Request};
use sepl::semantics::{eval_abs, eval_rel};

use num_rational::Ratio;

fn schema() -> AttributeSchema {
    parse_schema(
        "attribute role : enum { admin, staff, guest }\n\
         attribute level : int [0, 3]\n\
         attribute op : enum { read, write }\n",
    )
    .unwrap()
}

fn policy_from(seed: u64, cfg: &GenConfig) -> Policy {
    random_policy(&mut ChaCha8Rng::seed_from_u64(seed), &schema(), cfg)
}

fn small() -> GenConfig {
    GenConfig {
        max_depth: 4,
        ..GenConfig::default()
    }
}

/// A request that leaves each attribute unknown with probability 1/3.
fn partial_request(seed: u64, s: &AttributeSchema) -> Request {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Request::unknown(s);
    for a in s.attributes() {
        if rng.gen_range(0..3) > 0 {
            let v = a.domain.text(rng.gen_range(0..a.domain.len()));
            r.bind(&a.key, &v, s).unwrap();
        }
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_then_parse_is_stable(seed in any::<u64>()) {
        let s = schema();
        let p = policy_from(seed, &small());
        let text = print_policy(&p);
        let back = parse_policy(&text, &s).unwrap_or_else(|e| panic!("{e}\n{text}"));
        prop_assert_eq!(print_policy(&back), text);
        prop_assert_eq!(eval_abs(&back, &s).unwrap(), eval_abs(&p, &s).unwrap());
    }

    #[test]
    fn relative_agrees_with_absolute(seed in any::<u64>()) {
        let s = schema();
        let p = policy_from(seed, &small());
        let m = eval_abs(&p, &s).unwrap();
        for i in 0..s.point_count() {
            prop_assert_eq!(eval_rel(&p, &s.point(i), &s).unwrap(), m.pair(i));
        }
    }

    #[test]
    fn scope_restricts_where_the_guard_is_definite(seed in any::<u64>(), rseed in any::<u64>()) {
        let s = schema();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_guard(&mut rng, &s, 2);
        let p = random_policy(&mut rng, &s, &small());
        let scoped = Policy::scope(g.clone(), p.clone());
        let r = partial_request(rseed, &s);
        let m = guard_eval(&g, &r, &s).unwrap();
        if m != TriValue::U {
            let inner = eval_rel(&p, &r, &s).unwrap();
            let outer = eval_rel(&scoped, &r, &s).unwrap();
            prop_assert_eq!(outer.accept, m.and(inner.accept));
            prop_assert_eq!(outer.deny, m.and(inner.deny));
        }
    }

    #[test]
    fn scope_expansion_keeps_meaning(seed in any::<u64>()) {
        let s = schema();
        let p = policy_from(seed, &small());
        let q = scope_expand(&p, &s).unwrap();
        q.walk(&mut |n| assert!(!matches!(n, Policy::Scope(..))));
        prop_assert_eq!(eval_abs(&q, &s).unwrap(), eval_abs(&p, &s).unwrap());
    }

    #[test]
    fn desugaring_keeps_meaning(seed in any::<u64>()) {
        let s = schema();
        let p = policy_from(seed, &small());
        let q = desugar_core(&p, &s).unwrap();
        prop_assert_eq!(eval_abs(&q, &s).unwrap(), eval_abs(&p, &s).unwrap(), "{}", print_policy(&p));
    }

    #[test]
    fn distances_are_metrics(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let s = schema();
        let cfg = small();
        let (p, q, r) = (policy_from(a, &cfg), policy_from(b, &cfg), policy_from(c, &cfg));
        for metric in [Metric::Hamming, Metric::Jaccard] {
            let d = |x: &Policy, y: &Policy| distance(x, y, &s, metric).unwrap();
            let zero = Ratio::from_integer(0);
            let one = Ratio::from_integer(1);
            prop_assert_eq!(d(&p, &p), zero);
            prop_assert_eq!(d(&p, &q), d(&q, &p));
            prop_assert!(d(&p, &q) >= zero && d(&p, &q) <= one);
            prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r));
        }
    }

    #[test]
    fn comparison_is_a_partial_order(a in any::<u64>(), b in any::<u64>()) {
        let s = schema();
        let cfg = small();
        let (p, q) = (policy_from(a, &cfg), policy_from(b, &cfg));
        prop_assert_eq!(compare(&p, &p, &s).unwrap().relation, Relation::Equivalent);
        let forward = compare(&p, &q, &s).unwrap().relation;
        let backward = compare(&q, &p, &s).unwrap().relation;
        let mirrored = match forward {
            Relation::LeftLower => Relation::RightLower,
            Relation::RightLower => Relation::LeftLower,
            other => other,
        };
        prop_assert_eq!(backward, mirrored);
        // equivalent meanings have no distance between them
        if forward == Relation::Equivalent {
            prop_assert_eq!(distance(&p, &q, &s, Metric::Hamming).unwrap(), Ratio::from_integer(0));
        }
    }
}

#[test]
fn permit_overrides_widens_acceptance() {
    let s = schema();
    let p = parse_policy("<{role = admin}, {op = write}>", &s).unwrap();
    let q = parse_policy("<{level >= 2}, none>", &s).unwrap();
    let both = Policy::pov(p.clone(), q);
    let m = eval_abs(&p, &s).unwrap();
    let mb = eval_abs(&both, &s).unwrap();
    for i in 0..s.point_count() {
        if m.accept.get(i).is_true() {
            assert!(mb.accept.get(i).is_true());
        }
    }
}
