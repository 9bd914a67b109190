//! XML to parse tree. Element and attribute names are matched without regard
//! to case, and `AttrValue` is accepted as an alias of `AttributeValue`.

use roxmltree::{Document, Node};

use super::{
    AllOf, AnyOf, ArgOrder, CombiningAlg, Condition, Designator, Effect, Extras, Loc, Match, MatchId, Policy,
    PolicySet, Rule, Target, XacmlDoc, XacmlError, XacmlErrorKind,
};

type Result<T> = std::result::Result<T, XacmlError>;

pub fn parse_xacml(text: &str) -> Result<XacmlDoc> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        XacmlError {
            loc: Loc {
                line: pos.row as usize,
                col: pos.col as usize,
            },
            kind: XacmlErrorKind::Xml(e.to_string()),
        }
    })?;
    let cx = Cx { doc: &doc };
    let root = doc.root_element();
    match name(root).as_str() {
        "policyset" => Ok(XacmlDoc::PolicySet(cx.policy_set(root)?)),
        "policy" => Ok(XacmlDoc::Policy(cx.policy(root)?)),
        _ => Err(cx.unexpected(root)),
    }
}

fn name(n: Node) -> String {
    n.tag_name().name().to_ascii_lowercase()
}

struct Cx<'a, 'input> {
    doc: &'a Document<'input>,
}

impl<'a, 'input> Cx<'a, 'input> {
    fn loc(&self, n: Node) -> Loc {
        let pos = self.doc.text_pos_at(n.range().start);
        Loc {
            line: pos.row as usize,
            col: pos.col as usize,
        }
    }

    fn err(&self, n: Node, kind: XacmlErrorKind) -> XacmlError {
        XacmlError { loc: self.loc(n), kind }
    }

    fn unexpected(&self, n: Node) -> XacmlError {
        self.err(n, XacmlErrorKind::UnexpectedElement(n.tag_name().name().to_string()))
    }

    fn attr(&self, n: Node<'a, 'input>, attr: &str) -> Option<&'a str> {
        n.attributes()
            .find(|a| a.name().eq_ignore_ascii_case(attr))
            .map(|a| a.value())
    }

    fn required(&self, n: Node<'a, 'input>, attr: &str) -> Result<&'a str> {
        self.attr(n, attr).ok_or_else(|| {
            self.err(
                n,
                XacmlErrorKind::MissingAttribute {
                    element: n.tag_name().name().to_string(),
                    attribute: attr.to_string(),
                },
            )
        })
    }

    /// Element children, rejecting stray non-whitespace text.
    fn children(&self, n: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>> {
        let mut out = Vec::new();
        for c in n.children() {
            if c.is_element() {
                out.push(c);
            } else if c.is_text() {
                let t = c.text().unwrap_or("").trim();
                if !t.is_empty() {
                    return Err(self.err(c, XacmlErrorKind::UnexpectedText(t.chars().take(30).collect())));
                }
            }
        }
        Ok(out)
    }

    fn raw(&self, n: Node) -> String {
        self.doc.input_text()[n.range()].to_string()
    }

    fn alg(&self, n: Node<'a, 'input>, attr: &str) -> Result<CombiningAlg> {
        let id = self.required(n, attr)?;
        CombiningAlg::from_id(id).ok_or_else(|| self.err(n, XacmlErrorKind::UnknownAlgorithm(id.to_string())))
    }

    /// Handles the optional elements shared by policy sets, policies and rules.
    /// Returns false if the element is not one of them.
    fn extra(&self, c: Node, extras: &mut Extras) -> bool {
        match name(c).as_str() {
            "description" => extras.description = Some(c.text().unwrap_or("").trim().to_string()),
            "obligation" | "obligations" | "obligationexpressions" => extras.obligations.push(self.raw(c)),
            "advice" | "adviceexpressions" => extras.advice.push(self.raw(c)),
            _ => return false,
        }
        true
    }

    fn policy_set(&self, n: Node<'a, 'input>) -> Result<PolicySet> {
        let id = self.required(n, "PolicySetId")?.to_string();
        let version = self.attr(n, "Version").map(str::to_string);
        let alg = self.alg(n, "PolicyCombiningAlgId")?;
        let mut target = None;
        let mut children = Vec::new();
        let mut extras = Extras::default();
        for c in self.children(n)? {
            match name(c).as_str() {
                "target" if target.is_none() => target = Some(self.target(c)?),
                "policyset" => children.push(XacmlDoc::PolicySet(self.policy_set(c)?)),
                "policy" => children.push(XacmlDoc::Policy(self.policy(c)?)),
                _ if self.extra(c, &mut extras) => {}
                _ => return Err(self.unexpected(c)),
            }
        }
        if children.is_empty() {
            return Err(self.err(n, XacmlErrorKind::NoPolicies(id)));
        }
        Ok(PolicySet {
            id,
            version,
            alg,
            target: target.unwrap_or(Target {
                any_of: Vec::new(),
                loc: self.loc(n),
            }),
            children,
            extras,
            loc: self.loc(n),
        })
    }

    fn policy(&self, n: Node<'a, 'input>) -> Result<Policy> {
        let id = self.required(n, "PolicyId")?.to_string();
        let version = self.attr(n, "Version").map(str::to_string);
        let alg = self.alg(n, "RuleCombiningAlgId")?;
        if alg == CombiningAlg::OnlyOneApplicable {
            return Err(self.err(n, XacmlErrorKind::OnlyOneApplicableOnRules));
        }
        let mut target = None;
        let mut rules = Vec::new();
        let mut extras = Extras::default();
        for c in self.children(n)? {
            match name(c).as_str() {
                "target" if target.is_none() => target = Some(self.target(c)?),
                "rule" => rules.push(self.rule(c)?),
                _ if self.extra(c, &mut extras) => {}
                _ => return Err(self.unexpected(c)),
            }
        }
        if rules.is_empty() {
            return Err(self.err(n, XacmlErrorKind::NoRules(id)));
        }
        Ok(Policy {
            id,
            version,
            alg,
            target: target.unwrap_or(Target {
                any_of: Vec::new(),
                loc: self.loc(n),
            }),
            rules,
            extras,
            loc: self.loc(n),
        })
    }

    fn rule(&self, n: Node<'a, 'input>) -> Result<Rule> {
        let id = self.required(n, "RuleId")?.to_string();
        let effect = match self.required(n, "Effect")? {
            e if e.eq_ignore_ascii_case("permit") => Effect::Permit,
            e if e.eq_ignore_ascii_case("deny") => Effect::Deny,
            e => {
                return Err(self.err(
                    n,
                    XacmlErrorKind::BadAttribute {
                        attribute: "Effect".into(),
                        value: e.into(),
                    },
                ))
            }
        };
        let mut target = None;
        let mut condition = None;
        let mut extras = Extras::default();
        for c in self.children(n)? {
            match name(c).as_str() {
                "target" if target.is_none() => target = Some(self.target(c)?),
                "condition" if condition.is_none() => condition = Some(self.condition(c)?),
                _ if self.extra(c, &mut extras) => {}
                _ => return Err(self.unexpected(c)),
            }
        }
        Ok(Rule {
            id,
            effect,
            description: extras.description,
            target,
            condition,
            loc: self.loc(n),
        })
    }

    fn target(&self, n: Node<'a, 'input>) -> Result<Target> {
        let mut any_of = Vec::new();
        for c in self.children(n)? {
            if name(c) != "anyof" {
                return Err(self.unexpected(c));
            }
            let mut all_of = Vec::new();
            for a in self.children(c)? {
                if name(a) != "allof" {
                    return Err(self.unexpected(a));
                }
                let mut matches = Vec::new();
                for m in self.children(a)? {
                    if name(m) != "match" {
                        return Err(self.unexpected(m));
                    }
                    matches.push(self.match_(m)?);
                }
                if matches.is_empty() {
                    return Err(self.incomplete(a, "at least one <Match>"));
                }
                all_of.push(AllOf { matches });
            }
            if all_of.is_empty() {
                return Err(self.incomplete(c, "at least one <AllOf>"));
            }
            any_of.push(AnyOf { all_of });
        }
        Ok(Target {
            any_of,
            loc: self.loc(n),
        })
    }

    fn incomplete(&self, n: Node, what: &str) -> XacmlError {
        self.err(
            n,
            XacmlErrorKind::Incomplete {
                element: n.tag_name().name().to_string(),
                what: what.to_string(),
            },
        )
    }

    fn match_id(&self, n: Node<'a, 'input>, attr: &str) -> Result<MatchId> {
        let id = self.required(n, attr)?;
        MatchId::from_id(id).ok_or_else(|| self.err(n, XacmlErrorKind::UnknownMatchId(id.to_string())))
    }

    fn designator(&self, n: Node<'a, 'input>) -> Result<Designator> {
        let must_be_present = match self.attr(n, "MustBePresent") {
            None => false,
            Some(v) if v.trim().eq_ignore_ascii_case("true") => true,
            Some(v) if v.trim().eq_ignore_ascii_case("false") => false,
            Some(v) => {
                return Err(self.err(
                    n,
                    XacmlErrorKind::BadAttribute {
                        attribute: "MustBePresent".into(),
                        value: v.into(),
                    },
                ))
            }
        };
        Ok(Designator {
            category: self.required(n, "Category")?.to_string(),
            attribute_id: self.required(n, "AttributeId")?.to_string(),
            data_type: self.attr(n, "DataType").map(str::to_string),
            must_be_present,
        })
    }

    fn value_text(&self, n: Node) -> String {
        n.text().unwrap_or("").trim().to_string()
    }

    fn match_(&self, n: Node<'a, 'input>) -> Result<Match> {
        let match_id = self.match_id(n, "MatchId")?;
        let mut value = None;
        let mut designator = None;
        for c in self.children(n)? {
            match name(c).as_str() {
                "attributevalue" | "attrvalue" if value.is_none() => value = Some(self.value_text(c)),
                "attributedesignator" if designator.is_none() => designator = Some(self.designator(c)?),
                _ => return Err(self.unexpected(c)),
            }
        }
        match (value, designator) {
            (Some(value), Some(designator)) => Ok(Match {
                match_id,
                value,
                designator,
                loc: self.loc(n),
            }),
            _ => Err(self.incomplete(n, "one <AttributeValue> and one <AttributeDesignator>")),
        }
    }

    fn condition(&self, n: Node<'a, 'input>) -> Result<Condition> {
        let elems = self.children_lenient(n);
        match elems.as_slice() {
            [] => {
                let text = n.text().unwrap_or("").trim();
                if text.is_empty() {
                    return Err(self.incomplete(n, "a boolean expression"));
                }
                parse_condition_text(text, self.loc(n))
            }
            [apply] if name(*apply) == "apply" => self.apply(*apply),
            [other, ..] => Err(self.unexpected(*other)),
        }
    }

    fn children_lenient(&self, n: Node<'a, 'input>) -> Vec<Node<'a, 'input>> {
        n.children().filter(|c| c.is_element()).collect()
    }

    fn apply(&self, n: Node<'a, 'input>) -> Result<Condition> {
        let id = self.required(n, "FunctionId")?;
        let args = self.children(n)?;
        let sub = |cx: &Self| -> Result<Vec<Condition>> {
            args.iter()
                .map(|&a| if name(a) == "apply" { cx.apply(a) } else { Err(cx.unexpected(a)) })
                .collect()
        };
        match super::suffix(id) {
            "and" => Ok(Condition::And(sub(self)?)),
            "or" => Ok(Condition::Or(sub(self)?)),
            "not" => {
                let mut inner = sub(self)?;
                if inner.len() != 1 {
                    return Err(self.incomplete(n, "exactly one argument"));
                }
                Ok(Condition::Not(Box::new(inner.remove(0))))
            }
            _ => {
                let function = MatchId::from_id(id)
                    .ok_or_else(|| self.err(n, XacmlErrorKind::UnknownMatchId(id.to_string())))?;
                let mut value = None;
                let mut key = None;
                for (i, a) in args.iter().enumerate() {
                    match name(*a).as_str() {
                        "attributevalue" | "attrvalue" if value.is_none() => value = Some((i, self.value_text(*a))),
                        "attributedesignator" if key.is_none() => key = Some((i, self.designator(*a)?.key())),
                        // a bag-to-value wrapper around a designator
                        "apply" if key.is_none() => key = Some((i, self.unwrap_one_and_only(*a)?)),
                        _ => return Err(self.unexpected(*a)),
                    }
                }
                match (key, value) {
                    (Some((ki, key)), Some((vi, value))) => Ok(Condition::Apply {
                        function,
                        key,
                        value,
                        order: if ki < vi { ArgOrder::AttributeFirst } else { ArgOrder::ValueFirst },
                        loc: self.loc(n),
                    }),
                    _ => Err(self.incomplete(n, "one attribute value and one attribute designator")),
                }
            }
        }
    }

    fn unwrap_one_and_only(&self, n: Node<'a, 'input>) -> Result<String> {
        let id = self.required(n, "FunctionId")?;
        let args = self.children(n)?;
        match args.as_slice() {
            [d] if super::suffix(id).ends_with("-one-and-only") && name(*d) == "attributedesignator" => {
                Ok(self.designator(*d)?.key())
            }
            _ => Err(self.err(n, XacmlErrorKind::Condition(format!("unsupported function `{id}`")))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Comma,
    Word(String),
    Quoted(String),
}

fn tokenize(text: &str, loc: Loc) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | ',' => {
                chars.next();
                out.push(match c {
                    '(' => Tok::Open,
                    ')' => Tok::Close,
                    _ => Tok::Comma,
                });
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => s.extend(chars.next()),
                        Some(c) => s.push(c),
                        None => return Err(cond_err(loc, "unterminated string")),
                    }
                }
                out.push(Tok::Quoted(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"') {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(Tok::Word(s));
            }
        }
    }
    Ok(out)
}

fn cond_err(loc: Loc, msg: impl Into<String>) -> XacmlError {
    XacmlError {
        loc,
        kind: XacmlErrorKind::Condition(msg.into()),
    }
}

/// Parses `f(key, value)` terms joined by `and`, `or`, `not` and parentheses.
fn parse_condition_text(text: &str, loc: Loc) -> Result<Condition> {
    let toks = tokenize(text, loc)?;
    let mut p = CondParser { toks, pos: 0, loc };
    let c = p.or()?;
    if p.pos != p.toks.len() {
        return Err(cond_err(loc, format!("unexpected {:?}", p.toks[p.pos])));
    }
    Ok(c)
}

struct CondParser {
    toks: Vec<Tok>,
    pos: usize,
    loc: Loc,
}

impl CondParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(w)) if w == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(cond_err(self.loc, format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn or(&mut self) -> Result<Condition> {
        let mut items = vec![self.and()?];
        while self.keyword("or") {
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 { items.remove(0) } else { Condition::Or(items) })
    }

    fn and(&mut self) -> Result<Condition> {
        let mut items = vec![self.unary()?];
        while self.keyword("and") {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.remove(0) } else { Condition::And(items) })
    }

    fn unary(&mut self) -> Result<Condition> {
        if self.keyword("not") {
            return Ok(Condition::Not(Box::new(self.unary()?)));
        }
        match self.next() {
            Some(Tok::Open) => {
                let c = self.or()?;
                self.expect(Tok::Close)?;
                Ok(c)
            }
            Some(Tok::Word(f)) => {
                let function = MatchId::from_id(&f).ok_or_else(|| XacmlError {
                    loc: self.loc,
                    kind: XacmlErrorKind::UnknownMatchId(f.clone()),
                })?;
                self.expect(Tok::Open)?;
                let key = self.arg()?;
                self.expect(Tok::Comma)?;
                let value = self.arg()?;
                self.expect(Tok::Close)?;
                Ok(Condition::Apply {
                    function,
                    key,
                    value,
                    order: ArgOrder::AttributeFirst,
                    loc: self.loc,
                })
            }
            t => Err(cond_err(self.loc, format!("expected a condition, found {t:?}"))),
        }
    }

    fn arg(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => Ok(w),
            t => Err(cond_err(self.loc, format!("expected an argument, found {t:?}"))),
        }
    }
}
