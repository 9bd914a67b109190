//! A subset of XACML 3.0: policy sets, policies, rules, targets, matches and
//! simple conditions, with translation to policy terms.

mod parse;
mod translate;

use std::fmt;

use thiserror::Error;

pub use parse::parse_xacml;
pub use translate::{expand_alg, translate, translate_components};

/// Source position of a parsed element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{loc}: {kind}")]
pub struct XacmlError {
    pub loc: Loc,
    pub kind: XacmlErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XacmlErrorKind {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("element <{0}> is not supported here")]
    UnexpectedElement(String),
    #[error("unexpected text `{0}`")]
    UnexpectedText(String),
    #[error("<{element}> is missing the `{attribute}` attribute")]
    MissingAttribute { element: String, attribute: String },
    #[error("invalid value `{value}` for `{attribute}`")]
    BadAttribute { attribute: String, value: String },
    #[error("unknown combining algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("unsupported MatchId `{0}`")]
    UnknownMatchId(String),
    #[error("policy `{0}` has no rules")]
    NoRules(String),
    #[error("policy set `{0}` has no policies")]
    NoPolicies(String),
    #[error("<{element}> needs {what}")]
    Incomplete { element: String, what: String },
    #[error("only-one-applicable cannot combine rules")]
    OnlyOneApplicableOnRules,
    #[error("attribute `{0}` is not declared in the schema")]
    UndeclaredKey(String),
    #[error("{0}")]
    Value(String),
    #[error("condition: {0}")]
    Condition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombiningAlg {
    PermitOverrides,
    DenyOverrides,
    FirstApplicable,
    OrderedPermitOverrides,
    OnlyOneApplicable,
    DenyUnlessPermit,
    PermitUnlessDeny,
}

impl CombiningAlg {
    pub const ALL: [CombiningAlg; 7] = [
        CombiningAlg::PermitOverrides,
        CombiningAlg::DenyOverrides,
        CombiningAlg::FirstApplicable,
        CombiningAlg::OrderedPermitOverrides,
        CombiningAlg::OnlyOneApplicable,
        CombiningAlg::DenyUnlessPermit,
        CombiningAlg::PermitUnlessDeny,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CombiningAlg::PermitOverrides => "permit-overrides",
            CombiningAlg::DenyOverrides => "deny-overrides",
            CombiningAlg::FirstApplicable => "first-applicable",
            CombiningAlg::OrderedPermitOverrides => "ordered-permit-overrides",
            CombiningAlg::OnlyOneApplicable => "only-one-applicable",
            CombiningAlg::DenyUnlessPermit => "deny-unless-permit",
            CombiningAlg::PermitUnlessDeny => "permit-unless-deny",
        }
    }

    /// Resolves a bare name or a full URN by its last `:`-separated segment.
    pub fn from_id(id: &str) -> Option<CombiningAlg> {
        let name = suffix(id);
        CombiningAlg::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchId {
    StringEqual,
    IntegerEqual,
    IntegerGreaterThan,
    StringRegexpMatch,
}

impl MatchId {
    pub fn name(self) -> &'static str {
        match self {
            MatchId::StringEqual => "string-equal",
            MatchId::IntegerEqual => "integer-equal",
            MatchId::IntegerGreaterThan => "integer-greater-than",
            MatchId::StringRegexpMatch => "string-regexp-match",
        }
    }

    pub fn from_id(id: &str) -> Option<MatchId> {
        match suffix(id) {
            "string-equal" => Some(MatchId::StringEqual),
            "integer-equal" => Some(MatchId::IntegerEqual),
            "integer-greater-than" => Some(MatchId::IntegerGreaterThan),
            "string-regexp-match" => Some(MatchId::StringRegexpMatch),
            _ => None,
        }
    }
}

/// The part of an identifier after its last `:`.
pub fn suffix(id: &str) -> &str {
    id.rsplit(':').next().unwrap_or(id).trim()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Permit,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Designator {
    pub category: String,
    pub attribute_id: String,
    pub data_type: Option<String>,
    pub must_be_present: bool,
}

impl Designator {
    /// The schema key, `<category>.<attributeId>` with URN prefixes dropped.
    pub fn key(&self) -> String {
        format!("{}.{}", suffix(&self.category), suffix(&self.attribute_id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub match_id: MatchId,
    pub value: String,
    pub designator: Designator,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllOf {
    pub matches: Vec<Match>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnyOf {
    pub all_of: Vec<AllOf>,
}

/// A conjunction of disjunctions of conjunctions of matches. No `AnyOf`
/// elements means the target matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Target {
    pub any_of: Vec<AnyOf>,
    pub loc: Loc,
}

/// Which argument of a comparison function holds the attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgOrder {
    AttributeFirst,
    ValueFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Apply {
        function: MatchId,
        key: String,
        value: String,
        order: ArgOrder,
        loc: Loc,
    },
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub effect: Effect,
    pub description: Option<String>,
    pub target: Option<Target>,
    pub condition: Option<Condition>,
    pub loc: Loc,
}

/// Description, obligations and advice, kept as raw text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extras {
    pub description: Option<String>,
    pub obligations: Vec<String>,
    pub advice: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub id: String,
    pub version: Option<String>,
    pub alg: CombiningAlg,
    pub target: Target,
    pub rules: Vec<Rule>,
    pub extras: Extras,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySet {
    pub id: String,
    pub version: Option<String>,
    pub alg: CombiningAlg,
    pub target: Target,
    pub children: Vec<XacmlDoc>,
    pub extras: Extras,
    pub loc: Loc,
}

/// A parsed document: a policy set or a single policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XacmlDoc {
    PolicySet(PolicySet),
    Policy(Policy),
}

/// One identifier found in a document, for reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identifier {
    pub kind: &'static str,
    pub id: String,
    pub version: Option<String>,
    pub loc: Loc,
}

impl XacmlDoc {
    pub fn id(&self) -> &str {
        match self {
            XacmlDoc::PolicySet(s) => &s.id,
            XacmlDoc::Policy(p) => &p.id,
        }
    }

    pub fn target(&self) -> &Target {
        match self {
            XacmlDoc::PolicySet(s) => &s.target,
            XacmlDoc::Policy(p) => &p.target,
        }
    }

    /// Every policy set, policy and rule identifier, in document order.
    pub fn identifiers(&self) -> Vec<Identifier> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids(&self, out: &mut Vec<Identifier>) {
        match self {
            XacmlDoc::PolicySet(s) => {
                out.push(Identifier {
                    kind: "PolicySet",
                    id: s.id.clone(),
                    version: s.version.clone(),
                    loc: s.loc,
                });
                for c in &s.children {
                    c.collect_ids(out);
                }
            }
            XacmlDoc::Policy(p) => {
                out.push(Identifier {
                    kind: "Policy",
                    id: p.id.clone(),
                    version: p.version.clone(),
                    loc: p.loc,
                });
                for r in &p.rules {
                    out.push(Identifier {
                        kind: "Rule",
                        id: r.id.clone(),
                        version: None,
                        loc: r.loc,
                    });
                }
            }
        }
    }
}
