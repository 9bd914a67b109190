use std::path::PathBuf;

use sepl::kernel::Decision;
use sepl::lang::{parse_policy, print_policy, BinOp, Policy};
use sepl::schema::{parse_request, parse_schema, AttributeSchema};
use sepl::semantics::decide;
use sepl::xacml::{parse_xacml, translate, CombiningAlg, Effect, XacmlDoc};

fn sample(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn schema() -> AttributeSchema {
    parse_schema(&sample("secret.schema")).unwrap()
}

#[test]
fn secret_policy_parses() {
    let XacmlDoc::Policy(p) = parse_xacml(&sample("secret.xml")).unwrap() else {
        panic!("expected a single policy");
    };
    assert_eq!(p.id, "SimplePolicy1");
    assert_eq!(p.version.as_deref(), Some("1.0"));
    assert_eq!(p.alg, CombiningAlg::FirstApplicable);
    assert_eq!(p.target.any_of.len(), 1);
    assert_eq!(p.rules.len(), 2);
    assert!(p.rules.iter().all(|r| r.effect == Effect::Deny));
    assert_eq!(p.rules[1].target.as_ref().unwrap().any_of.len(), 2);
}

#[test]
fn secret_policy_translates_to_scoped_sequence() {
    let s = schema();
    let p = translate(&parse_xacml(&sample("secret.xml")).unwrap(), &s).unwrap();
    let Policy::Scope(_, body) = &p else { panic!("{p:?}") };
    assert!(matches!(**body, Policy::Bin(BinOp::Seq, ..)));
    let expected = parse_policy(
        "{resource.resource-id = secret.txt} : \
         (<none, {action.action-id = write}> . <none, {access-subject.subject-id = Alice, action.action-id = read}>)",
        &s,
    )
    .unwrap();
    assert_eq!(print_policy(&p), print_policy(&expected));
}

#[test]
fn secret_policy_decisions() {
    let s = schema();
    let p = translate(&parse_xacml(&sample("secret.xml")).unwrap(), &s).unwrap();
    for (file, want) in [
        ("alice_read.req", Decision::Deny),
        ("bob_write.req", Decision::Deny),
        ("bob_read.req", Decision::NotApplicable),
        ("other_resource.req", Decision::NotApplicable),
        ("unknown_subject.req", Decision::IndeterminateD),
    ] {
        let (r, _) = parse_request(&sample(file), &s).unwrap();
        assert_eq!(decide(&p, &r, &s).unwrap(), want, "{file}");
    }
}
