//! Parse tree to policy terms.

use super::{ArgOrder, CombiningAlg, Condition, Effect, Loc, Match, MatchId, Policy as XPolicy, Rule as XRule, Target,
    XacmlDoc, XacmlError, XacmlErrorKind};
use crate::lang::{combine_nary, ooa_nary, NaryAlg, Policy};
use crate::schema::{atom_to_set, Atom, AttributeSchema, Guard, Predicate, SchemaError};

type Result<T> = std::result::Result<T, XacmlError>;

/// Combines translated children with one of the XACML algorithms. `rules` is
/// true when the children are rules, where only-one-applicable is not allowed.
pub fn expand_alg(alg: CombiningAlg, policies: Vec<Policy>, rules: bool) -> Result<Policy> {
    let empty = |_| XacmlError {
        loc: Loc::default(),
        kind: XacmlErrorKind::Incomplete {
            element: "combining algorithm".into(),
            what: "at least one policy".into(),
        },
    };
    let fold = |nary, ps| combine_nary(nary, ps).map_err(empty);
    match alg {
        CombiningAlg::PermitOverrides | CombiningAlg::OrderedPermitOverrides => fold(NaryAlg::Pov, policies),
        CombiningAlg::DenyOverrides => fold(NaryAlg::Dov, policies),
        CombiningAlg::FirstApplicable => fold(NaryAlg::Fa, policies),
        CombiningAlg::OnlyOneApplicable if rules => Err(XacmlError {
            loc: Loc::default(),
            kind: XacmlErrorKind::OnlyOneApplicableOnRules,
        }),
        CombiningAlg::OnlyOneApplicable => ooa_nary(policies).map_err(empty),
        CombiningAlg::DenyUnlessPermit => Ok(Policy::seq(Policy::det(fold(NaryAlg::Pov, policies)?), Policy::Zero)),
        CombiningAlg::PermitUnlessDeny => Ok(Policy::seq(Policy::det(fold(NaryAlg::Dov, policies)?), Policy::One)),
    }
}

pub fn translate(doc: &XacmlDoc, schema: &AttributeSchema) -> Result<Policy> {
    match doc {
        XacmlDoc::PolicySet(s) => {
            let children = s.children.iter().map(|c| translate(c, schema)).collect::<Result<Vec<_>>>()?;
            let body = expand_alg(s.alg, children, false).map_err(|e| at(e, s.loc))?;
            Ok(Policy::scope(target_guard(&s.target, schema)?, body))
        }
        XacmlDoc::Policy(p) => translate_policy(p, schema),
    }
}

/// The root's direct children, each under the root's target, so that
/// overlaps between them can be reported separately.
pub fn translate_components(doc: &XacmlDoc, schema: &AttributeSchema) -> Result<Vec<(String, Policy)>> {
    let root = target_guard(doc.target(), schema)?;
    match doc {
        XacmlDoc::PolicySet(s) => s
            .children
            .iter()
            .map(|c| Ok((c.id().to_string(), Policy::scope(root.clone(), translate(c, schema)?))))
            .collect(),
        XacmlDoc::Policy(p) => p
            .rules
            .iter()
            .map(|r| Ok((r.id.clone(), Policy::scope(root.clone(), translate_rule(r, schema)?))))
            .collect(),
    }
}

fn at(mut e: XacmlError, loc: Loc) -> XacmlError {
    if e.loc == Loc::default() {
        e.loc = loc;
    }
    e
}

fn translate_policy(p: &XPolicy, schema: &AttributeSchema) -> Result<Policy> {
    let rules = p.rules.iter().map(|r| translate_rule(r, schema)).collect::<Result<Vec<_>>>()?;
    let body = expand_alg(p.alg, rules, true).map_err(|e| at(e, p.loc))?;
    Ok(Policy::scope(target_guard(&p.target, schema)?, body))
}

fn translate_rule(r: &XRule, schema: &AttributeSchema) -> Result<Policy> {
    let mut phi = match &r.target {
        Some(t) => target_guard(t, schema)?,
        None => Guard::top(),
    };
    if let Some(c) = &r.condition {
        let g = condition_guard(c, schema)?;
        phi = phi.and(&g, schema).map_err(|e| schema_err(e, r.loc))?;
    }
    Ok(match r.effect {
        Effect::Permit => Policy::permit(phi),
        Effect::Deny => Policy::deny(phi),
    })
}

fn schema_err(e: SchemaError, loc: Loc) -> XacmlError {
    let kind = match e {
        SchemaError::UnknownKey(k) => XacmlErrorKind::UndeclaredKey(k),
        other => XacmlErrorKind::Value(other.to_string()),
    };
    XacmlError { loc, kind }
}

/// AnyOf blocks are conjoined, AllOf blocks within one are disjoined, and
/// matches within an AllOf are conjoined.
fn target_guard(t: &Target, schema: &AttributeSchema) -> Result<Guard> {
    let mut acc = Guard::top();
    for any in &t.any_of {
        let mut alts = Guard::bottom();
        for all in &any.all_of {
            let mut conj = Guard::top();
            for m in &all.matches {
                let g = match_guard(m, schema)?;
                conj = conj.and(&g, schema).map_err(|e| schema_err(e, m.loc))?;
            }
            alts = alts.or(&conj, schema).map_err(|e| schema_err(e, t.loc))?;
        }
        acc = acc.and(&alts, schema).map_err(|e| schema_err(e, t.loc))?;
    }
    Ok(acc)
}

fn match_guard(m: &Match, schema: &AttributeSchema) -> Result<Guard> {
    atom_guard(m.match_id, &m.designator.key(), &m.value, ArgOrder::AttributeFirst, m.loc, schema)
}

fn atom_guard(
    function: MatchId,
    key: &str,
    value: &str,
    order: ArgOrder,
    loc: Loc,
    schema: &AttributeSchema,
) -> Result<Guard> {
    let int = || {
        value.trim().parse::<i64>().map_err(|_| XacmlError {
            loc,
            kind: XacmlErrorKind::Value(format!("`{value}` is not an integer")),
        })
    };
    let pred = match function {
        MatchId::StringEqual => Predicate::Eq(value.to_string()),
        MatchId::IntegerEqual => Predicate::Eq(int()?.to_string()),
        MatchId::IntegerGreaterThan => match order {
            ArgOrder::AttributeFirst => Predicate::Gt(int()?),
            ArgOrder::ValueFirst => Predicate::Lt(int()?),
        },
        MatchId::StringRegexpMatch => Predicate::Regexp(value.to_string()),
    };
    let atom = Atom::new(key, pred);
    atom_to_set(&atom, schema).map_err(|e| schema_err(e, loc))?;
    Ok(Guard::atom(atom))
}

fn condition_guard(c: &Condition, schema: &AttributeSchema) -> Result<Guard> {
    match c {
        Condition::Apply {
            function,
            key,
            value,
            order,
            loc,
        } => atom_guard(*function, key, value, *order, *loc, schema),
        Condition::And(items) => {
            let mut acc = Guard::top();
            for i in items {
                acc = acc.and(&condition_guard(i, schema)?, schema).map_err(|e| schema_err(e, cond_loc(i)))?;
            }
            Ok(acc)
        }
        Condition::Or(items) => {
            let mut acc = Guard::bottom();
            for i in items {
                acc = acc.or(&condition_guard(i, schema)?, schema).map_err(|e| schema_err(e, cond_loc(i)))?;
            }
            Ok(acc)
        }
        Condition::Not(inner) => condition_guard(inner, schema)?
            .complement(schema)
            .map_err(|e| schema_err(e, cond_loc(inner))),
    }
}

fn cond_loc(c: &Condition) -> Loc {
    match c {
        Condition::Apply { loc, .. } => *loc,
        Condition::And(items) | Condition::Or(items) => items.first().map(cond_loc).unwrap_or_default(),
        Condition::Not(inner) => cond_loc(inner),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_policy, print_policy};
    use crate::schema::parse_schema;
    use crate::semantics::{decide, eval_abs};
    use crate::xacml::parse_xacml;

    const SCHEMA: &str = "attribute resource.resource-id : enum { secret.txt, public.txt }\n\
                          attribute action.action-id : enum { read, write }\n\
                          attribute access-subject.subject-id : enum { Alice, Bob, Carol }\n\
                          attribute environment.hour : int [0, 23]\n";

    fn m(cat: &str, id: &str, value: &str) -> String {
        format!(
            r#"<Match MatchId="urn:oasis:names:tc:xacml:1.0:function:string-equal">
                 <AttributeValue DataType="http://www.w3.org/2001/XMLSchema#string">{value}</AttributeValue>
                 <AttributeDesignator Category="urn:oasis:names:tc:xacml:3.0:attribute-category:{cat}"
                   AttributeId="urn:oasis:names:tc:xacml:1.0:{cat}:{id}" MustBePresent="false"
                   DataType="http://www.w3.org/2001/XMLSchema#string"/>
               </Match>"#
        )
    }

    #[test]
    fn rules_translate_by_effect() {
        let s = parse_schema(SCHEMA).unwrap();
        let xml = format!(
            r#"<Policy PolicyId="p" RuleCombiningAlgId="deny-unless-permit">
                 <Rule RuleId="r" Effect="Permit"><Target><AnyOf><AllOf>{}</AllOf></AnyOf></Target></Rule>
               </Policy>"#,
            m("action", "action-id", "read")
        );
        let p = translate(&parse_xacml(&xml).unwrap(), &s).unwrap();
        let expected = parse_policy("{} : (det <{action.action-id = read}, none> . 0)", &s).unwrap();
        assert_eq!(print_policy(&p), print_policy(&expected));
    }

    #[test]
    fn conditions_and_comparisons() {
        let s = parse_schema(SCHEMA).unwrap();
        let xml = r#"<Policy PolicyId="p" RuleCombiningAlgId="first-applicable">
                 <Rule RuleId="r" Effect="Deny">
                   <Condition>integer-greater-than(environment.hour, 17) or not string-regexp-match(access-subject.subject-id, "A.*|B.*")</Condition>
                 </Rule>
               </Policy>"#;
        let p = translate(&parse_xacml(xml).unwrap(), &s).unwrap();
        let meaning = eval_abs(&p, &s).unwrap();
        for i in 0..s.point_count() {
            let b = s.point_bindings(i);
            let hour: i64 = b[3].1.parse().unwrap();
            let carol = b[2].1 == "Carol";
            let expect = if hour > 17 || carol { DecisionPair::DENY } else { DecisionPair::NOT_APPLICABLE };
            assert_eq!(meaning.pair(i), expect, "{b:?}");
        }
    }

    use crate::kernel::DecisionPair;

    #[test]
    fn translation_errors() {
        let s = parse_schema(SCHEMA).unwrap();
        let doc = |body: &str| {
            parse_xacml(&format!(
                r#"<Policy PolicyId="p" RuleCombiningAlgId="first-applicable"><Rule RuleId="r" Effect="Deny">{body}</Rule></Policy>"#
            ))
            .unwrap()
        };
        let e = translate(&doc("<Condition>string-equal(subject.role, admin)</Condition>"), &s).unwrap_err();
        assert_eq!(e.kind, XacmlErrorKind::UndeclaredKey("subject.role".into()));
        let e = translate(&doc("<Condition>string-equal(action.action-id, delete)</Condition>"), &s).unwrap_err();
        assert!(matches!(e.kind, XacmlErrorKind::Value(_)), "{e}");
        let e = translate(&doc("<Condition>integer-greater-than(environment.hour, late)</Condition>"), &s).unwrap_err();
        assert!(matches!(e.kind, XacmlErrorKind::Value(_)), "{e}");
    }

    #[test]
    fn algorithm_shapes() {
        let (a, b) = (Policy::var("P1"), Policy::var("P2"));
        let two = || vec![a.clone(), b.clone()];
        assert_eq!(
            expand_alg(CombiningAlg::FirstApplicable, two(), true).unwrap(),
            Policy::seq(a.clone(), b.clone())
        );
        assert_eq!(
            expand_alg(CombiningAlg::DenyUnlessPermit, two(), true).unwrap(),
            Policy::seq(Policy::det(Policy::pov(a.clone(), b.clone())), Policy::Zero)
        );
        assert_eq!(
            expand_alg(CombiningAlg::PermitUnlessDeny, two(), true).unwrap(),
            Policy::seq(Policy::det(Policy::dov(a.clone(), b.clone())), Policy::One)
        );
        assert_eq!(
            expand_alg(CombiningAlg::OnlyOneApplicable, two(), false).unwrap(),
            Policy::choice(
                Policy::ominus(a.clone(), b.clone()),
                Policy::ominus(b.clone(), a.clone())
            )
        );
        assert!(expand_alg(CombiningAlg::OnlyOneApplicable, two(), true).is_err());
        assert!(expand_alg(CombiningAlg::PermitOverrides, vec![], false).is_err());
    }

    #[test]
    fn components_carry_root_target() {
        let s = parse_schema(SCHEMA).unwrap();
        let xml = format!(
            r#"<Policy PolicyId="p" RuleCombiningAlgId="first-applicable">
                 <Target><AnyOf><AllOf>{}</AllOf></AnyOf></Target>
                 <Rule RuleId="a" Effect="Permit"/>
                 <Rule RuleId="b" Effect="Deny"/>
               </Policy>"#,
            m("resource", "resource-id", "secret.txt")
        );
        let parts = translate_components(&parse_xacml(&xml).unwrap(), &s).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, "a");
        let mut r = s.point(0);
        r.bind("resource.resource-id", "public.txt", &s).unwrap();
        assert_eq!(decide(&parts[0].1, &r, &s).unwrap(), crate::kernel::Decision::NotApplicable);
    }
}
