//! The catalog of algebraic laws and a sampling checker for them.
//!
//! A law is a pair of patterns over metavariables `P1`, `P2`, `P3`. It is
//! checked by instantiating the metavariables and comparing whole-domain
//! meanings point by point: first with the instantiations documented for the
//! law, then with every assignment of `eps`, `0`, `1`, then with random
//! rule-based policies.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gen::{random_policy, GenConfig};
use crate::kernel::DecisionPair;
use crate::lang::{parse_pattern, Policy};
use crate::schema::AttributeSchema;
use crate::semantics::{eval_abs, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Pass,
    Counterexample,
}

#[derive(Debug, Clone)]
pub struct Law {
    pub id: &'static str,
    pub lhs: &'static str,
    pub rhs: &'static str,
    pub expect: Expectation,
    /// Instantiations tried before any others, as (metavariable, policy text) lists.
    pub documented: Vec<Vec<(&'static str, &'static str)>>,
}

/// Duality of the override operators, then the fourteen equational laws.
pub fn law_catalog() -> Vec<Law> {
    use Expectation::*;
    let law = |id, lhs, rhs, expect| Law {
        id,
        lhs,
        rhs,
        expect,
        documented: Vec::new(),
    };
    let counter = |id, lhs, rhs, documented| Law {
        id,
        lhs,
        rhs,
        expect: Counterexample,
        documented,
    };
    vec![
        law("prop1", "P1 dov P2", "~(~P1 pov ~P2)", Pass),
        law("law1", "P1 + P2", "P2 + P1", Pass),
        law("law2", "P1 + (P2 + P3)", "(P1 + P2) + P3", Pass),
        law("law3", "P1 && P2", "P2 && P1", Pass),
        law("law4", "P1 && (P2 && P3)", "(P1 && P2) && P3", Pass),
        counter(
            "law5",
            "(P1 + P2) && P3",
            "P1 && P3 + P2 && P3",
            vec![vec![("P1", "1"), ("P2", "0"), ("P3", "1")]],
        ),
        law("law6", "~1", "0", Pass),
        law("law7", "~0", "1", Pass),
        law("law8", "~eps", "eps", Pass),
        law("law9", "~~P1", "P1", Pass),
        law("law10", "~(P1 && P2)", "~P1 && ~P2", Pass),
        law("law11", "~(P1 + P2)", "~P1 + ~P2", Pass),
        counter("law12", "P1 + ~P2", "eps", vec![vec![("P1", "1"), ("P2", "0")]]),
        law("law13", "P1 + eps", "P1", Pass),
        counter("law14", "P1 && ~P2", "eps", vec![vec![("P1", "1"), ("P2", "0")]]),
    ]
}

#[derive(Debug, Clone)]
pub struct LawConfig {
    /// Number of random instantiations after the fixed ones.
    pub samples: usize,
    pub seed: u64,
    pub gen: GenConfig,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            samples: 200,
            seed: 0,
            gen: GenConfig {
                max_depth: 3,
                ..GenConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LawStatus {
    Pass {
        instantiations: usize,
    },
    Counterexample {
        bindings: Vec<(String, Policy)>,
        point: usize,
        lhs: DecisionPair,
        rhs: DecisionPair,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawVerdict {
    pub law: String,
    pub lhs: String,
    pub rhs: String,
    pub expect: Expectation,
    pub status: LawStatus,
}

impl LawVerdict {
    pub fn passed(&self) -> bool {
        matches!(self.status, LawStatus::Pass { .. })
    }

    /// Whether the verdict is the one the catalog expects.
    pub fn as_expected(&self) -> bool {
        self.passed() == (self.expect == Expectation::Pass)
    }
}

fn constant_grid(vars: &[String]) -> Vec<HashMap<String, Policy>> {
    let consts = [Policy::Empty, Policy::Zero, Policy::One];
    let mut out = vec![HashMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|b| {
                consts.iter().map(move |c| {
                    let mut b = b.clone();
                    b.insert(v.clone(), c.clone());
                    b
                })
            })
            .collect();
    }
    out
}

/// Checks `lhs ≈ rhs` on the documented instantiations, the constant grid,
/// and `cfg.samples` random ones. Returns the first disagreement found.
pub fn check_equivalence(
    lhs: &Policy,
    rhs: &Policy,
    documented: &[HashMap<String, Policy>],
    schema: &AttributeSchema,
    cfg: &LawConfig,
) -> Result<LawStatus, EvalError> {
    let mut vars = lhs.vars();
    for v in rhs.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random = (0..cfg.samples).map(|_| {
        vars.iter()
            .map(|v| (v.clone(), random_policy(&mut rng, schema, &cfg.gen)))
            .collect::<HashMap<_, _>>()
    });
    let mut tried = 0;
    for b in documented.iter().cloned().chain(constant_grid(&vars)).chain(random) {
        tried += 1;
        let (l, r) = (eval_abs(&lhs.instantiate(&b), schema)?, eval_abs(&rhs.instantiate(&b), schema)?);
        if let Some(point) = (0..l.points()).find(|&i| l.pair(i) != r.pair(i)) {
            let bindings = vars.iter().filter_map(|v| Some((v.clone(), b.get(v)?.clone()))).collect();
            return Ok(LawStatus::Counterexample {
                bindings,
                point,
                lhs: l.pair(point),
                rhs: r.pair(point),
            });
        }
    }
    Ok(LawStatus::Pass { instantiations: tried })
}

pub fn check_law(law: &Law, schema: &AttributeSchema, cfg: &LawConfig) -> Result<LawVerdict, EvalError> {
    let parse = |t: &str| parse_pattern(t, None).expect("catalog patterns parse");
    let (lhs, rhs) = (parse(law.lhs), parse(law.rhs));
    let documented: Vec<HashMap<String, Policy>> = law
        .documented
        .iter()
        .map(|b| b.iter().map(|(v, t)| (v.to_string(), parse(t))).collect())
        .collect();
    // vary the stream per law so that laws do not share instantiations
    let salt = law.id.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    let cfg = LawConfig {
        seed: cfg.seed ^ salt,
        ..cfg.clone()
    };
    Ok(LawVerdict {
        law: law.id.to_string(),
        lhs: law.lhs.to_string(),
        rhs: law.rhs.to_string(),
        expect: law.expect,
        status: check_equivalence(&lhs, &rhs, &documented, schema, &cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TriValue::*;
    use crate::schema::parse_schema;
    use crate::semantics::eval_rel;

    fn schema() -> AttributeSchema {
        parse_schema("attribute x : int [0, 2]\nattribute y : enum { a, b }").unwrap()
    }

    fn find(id: &str) -> Law {
        law_catalog().into_iter().find(|l| l.id == id).unwrap()
    }

    fn cfg() -> LawConfig {
        LawConfig {
            samples: 50,
            ..LawConfig::default()
        }
    }

    #[test]
    fn commutativity_passes() {
        let v = check_law(&find("law1"), &schema(), &cfg()).unwrap();
        assert!(v.passed(), "{v:?}");
        assert!(v.as_expected());
    }

    #[test]
    fn documented_counterexamples() {
        let s = schema();
        let v = check_law(&find("law12"), &s, &cfg()).unwrap();
        match &v.status {
            LawStatus::Counterexample { bindings, lhs, rhs, .. } => {
                assert_eq!(bindings[0], ("P1".to_string(), Policy::One));
                assert_eq!(bindings[1], ("P2".to_string(), Policy::Zero));
                assert_eq!((*lhs, *rhs), (DecisionPair::new(T, F), DecisionPair::new(F, F)));
            }
            other => panic!("{other:?}"),
        }
        let v = check_law(&find("law5"), &s, &cfg()).unwrap();
        match &v.status {
            LawStatus::Counterexample { lhs, rhs, .. } => {
                assert_eq!((*lhs, *rhs), (DecisionPair::new(F, F), DecisionPair::new(T, F)));
            }
            other => panic!("{other:?}"),
        }
        assert!(v.as_expected());
    }

    #[test]
    fn counterexamples_recheck_per_request() {
        let s = schema();
        for law in law_catalog() {
            let v = check_law(&law, &s, &cfg()).unwrap();
            if let LawStatus::Counterexample { bindings, point, lhs, rhs } = &v.status {
                let b: HashMap<String, Policy> = bindings.iter().cloned().collect();
                let l = parse_pattern(law.lhs, None).unwrap().instantiate(&b);
                let r = parse_pattern(law.rhs, None).unwrap().instantiate(&b);
                let x = s.point(*point);
                assert_eq!(eval_rel(&l, &x, &s).unwrap(), *lhs);
                assert_eq!(eval_rel(&r, &x, &s).unwrap(), *rhs);
                assert_ne!(lhs, rhs);
            }
        }
    }

    #[test]
    fn constant_grid_size() {
        assert_eq!(constant_grid(&["P1".into(), "P2".into(), "P3".into()]).len(), 27);
        assert_eq!(constant_grid(&[]).len(), 1);
    }
}
