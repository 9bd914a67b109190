//! Finite attribute schemas, attribute constraints (guards), and requests.
//!
//! A guard is a disjunction of boxes; a box constrains some attributes with one
//! atom each and leaves the rest unconstrained. Every atom denotes an explicit
//! subset of its attribute's finite domain, which is what makes the whole-domain
//! semantics computable by enumeration.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use regex::Regex;
use thiserror::Error;

use crate::kernel::TriValue;

/// Default limit on the number of points in a schema's product domain.
pub const DEFAULT_POINT_CAP: u64 = 1_000_000;

/// Default limit on the number of boxes produced by guard complementation.
pub const DEFAULT_BOX_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("line {line}: duplicate attribute `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: attribute `{key}` has an empty domain")]
    EmptyDomain { line: usize, key: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: domain has {count} points, over the cap of {cap}")]
    CapExceeded { line: usize, count: u128, cap: u64 },
    #[error("unknown attribute `{0}`")]
    UnknownKey(String),
    #[error("value `{value}` is outside the domain of `{key}`")]
    ValueOutOfDomain { key: String, value: String },
    #[error("comparison on `{0}`, which is not an integer attribute")]
    ComparisonOnEnum(String),
    #[error("invalid regular expression `{pattern}`: {message}")]
    BadRegex { pattern: String, message: String },
    #[error("guard complement needs more than {0} boxes")]
    BoxCapExceeded(usize),
    #[error("attribute `{0}` is unbound")]
    Unbound(String),
}

impl SchemaError {
    /// Source line the error refers to, when it came from a file.
    pub fn line(&self) -> Option<usize> {
        match self {
            SchemaError::DuplicateKey { line, .. }
            | SchemaError::EmptyDomain { line, .. }
            | SchemaError::Malformed { line, .. }
            | SchemaError::CapExceeded { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Enum(Vec<String>),
    /// Inclusive integer interval.
    Int { lo: i64, hi: i64 },
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Enum(vs) => vs.len(),
            Domain::Int { lo, hi } => {
                if hi < lo {
                    0
                } else {
                    (*hi as i128 - *lo as i128 + 1) as usize
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_int(&self) -> bool {
        matches!(self, Domain::Int { .. })
    }

    /// Textual form of the value at `idx`.
    pub fn text(&self, idx: usize) -> String {
        match self {
            Domain::Enum(vs) => vs[idx].clone(),
            Domain::Int { lo, .. } => (lo + idx as i64).to_string(),
        }
    }

    pub fn int_value(&self, idx: usize) -> Option<i64> {
        match self {
            Domain::Enum(_) => None,
            Domain::Int { lo, .. } => Some(lo + idx as i64),
        }
    }

    pub fn index_of(&self, text: &str) -> Option<usize> {
        match self {
            Domain::Enum(vs) => vs.iter().position(|v| v == text),
            Domain::Int { lo, hi } => {
                let n: i64 = text.trim().parse().ok()?;
                (n >= *lo && n <= *hi).then(|| (n - lo) as usize)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub key: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    index: HashMap<String, usize>,
    cap: u64,
}

impl AttributeSchema {
    /// Builds a schema, enforcing unique keys, non-empty domains and the point cap.
    pub fn new(attributes: Vec<Attribute>, cap: u64) -> Result<Self, SchemaError> {
        let mut schema = AttributeSchema {
            attributes: Vec::new(),
            index: HashMap::new(),
            cap,
        };
        for (i, attr) in attributes.into_iter().enumerate() {
            schema.push(attr, i + 1)?;
        }
        Ok(schema)
    }

    fn push(&mut self, attr: Attribute, line: usize) -> Result<(), SchemaError> {
        if self.index.contains_key(&attr.key) {
            return Err(SchemaError::DuplicateKey { line, key: attr.key });
        }
        if attr.domain.is_empty() {
            return Err(SchemaError::EmptyDomain { line, key: attr.key });
        }
        let count = self.point_count_u128() * attr.domain.len() as u128;
        if count > self.cap as u128 {
            return Err(SchemaError::CapExceeded { line, count, cap: self.cap });
        }
        self.index.insert(attr.key.clone(), self.attributes.len());
        self.attributes.push(attr);
        Ok(())
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn attr_index(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn attr(&self, key: &str) -> Result<(usize, &Attribute), SchemaError> {
        let i = self
            .attr_index(key)
            .ok_or_else(|| SchemaError::UnknownKey(key.to_string()))?;
        Ok((i, &self.attributes[i]))
    }

    fn point_count_u128(&self) -> u128 {
        self.attributes
            .iter()
            .map(|a| a.domain.len() as u128)
            .product()
    }

    /// Number of points in the product domain.
    pub fn point_count(&self) -> usize {
        self.point_count_u128() as usize
    }

    pub fn check_cap(&self) -> Result<(), SchemaError> {
        let count = self.point_count_u128();
        if count > self.cap as u128 {
            return Err(SchemaError::CapExceeded {
                line: 0,
                count,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Index of a fully bound point. The last attribute varies fastest.
    pub fn encode(&self, values: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &v) in self.attributes.iter().zip(values) {
            idx = idx * a.domain.len() + v;
        }
        idx
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.attributes.len()];
        for (slot, a) in out.iter_mut().zip(&self.attributes).rev() {
            let n = a.domain.len();
            *slot = idx % n;
            idx /= n;
        }
        out
    }

    /// The fully bound request for point `idx`.
    pub fn point(&self, idx: usize) -> Request {
        Request {
            values: self.decode(idx).into_iter().map(Some).collect(),
        }
    }

    /// Renders a point as `key=value` pairs.
    pub fn describe_point(&self, idx: usize) -> String {
        self.decode(idx)
            .iter()
            .zip(&self.attributes)
            .map(|(&v, a)| format!("{}={}", a.key, a.domain.text(v)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// The same points as key/value pairs, for structured output.
    pub fn point_bindings(&self, idx: usize) -> Vec<(String, String)> {
        self.decode(idx)
            .iter()
            .zip(&self.attributes)
            .map(|(&v, a)| (a.key.clone(), a.domain.text(v)))
            .collect()
    }
}

/// Parses the line-oriented schema format with the default point cap.
pub fn parse_schema(text: &str) -> Result<AttributeSchema, SchemaError> {
    parse_schema_with_cap(text, DEFAULT_POINT_CAP)
}

pub fn parse_schema_with_cap(text: &str, cap: u64) -> Result<AttributeSchema, SchemaError> {
    let mut schema = AttributeSchema::new(Vec::new(), cap)?;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let attr = parse_attribute_line(content, line)?;
        schema.push(attr, line)?;
    }
    Ok(schema)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn malformed(line: usize, message: impl Into<String>) -> SchemaError {
    SchemaError::Malformed {
        line,
        message: message.into(),
    }
}

fn parse_attribute_line(content: &str, line: usize) -> Result<Attribute, SchemaError> {
    let rest = content
        .strip_prefix("attribute")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| malformed(line, "expected `attribute <key> : <domain>`"))?;
    let (key, spec) = rest
        .split_once(':')
        .ok_or_else(|| malformed(line, "missing `:` after the attribute key"))?;
    let key = key.trim();
    if key.is_empty() || key.contains(char::is_whitespace) || !key.chars().all(is_key_char) {
        return Err(malformed(line, format!("invalid attribute key `{key}`")));
    }
    let spec = spec.trim();
    let domain = if let Some(body) = spec.strip_prefix("enum") {
        let body = body.trim();
        let inner = body
            .strip_prefix('{')
            .and_then(|b| b.strip_suffix('}'))
            .ok_or_else(|| malformed(line, "expected `enum { v1, v2, ... }`"))?;
        let mut values: Vec<String> = Vec::new();
        if !inner.trim().is_empty() {
            for v in inner.split(',') {
                let v = v.trim();
                if v.is_empty() {
                    return Err(malformed(line, "empty value in enum list"));
                }
                if values.iter().any(|x| x == v) {
                    return Err(malformed(line, format!("value `{v}` listed twice")));
                }
                values.push(v.to_string());
            }
        }
        Domain::Enum(values)
    } else if let Some(body) = spec.strip_prefix("int") {
        let body = body.trim();
        let inner = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| malformed(line, "expected `int [lo, hi]`"))?;
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| malformed(line, "expected `int [lo, hi]`"))?;
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad lower bound `{}`", lo.trim())))?;
        let hi: i64 = hi
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad upper bound `{}`", hi.trim())))?;
        Domain::Int { lo, hi }
    } else {
        return Err(malformed(line, "domain must be `enum { ... }` or `int [lo, hi]`"));
    };
    Ok(Attribute {
        key: key.to_string(),
        domain,
    })
}

/// Characters allowed in attribute keys (shared with the policy syntax).
pub fn is_key_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/')
}

/// A set of domain value indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueSet {
    bits: Vec<u64>,
    len: usize,
}

impl ValueSet {
    pub fn empty(len: usize) -> Self {
        ValueSet {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = ValueSet::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn intersect(&self, other: &ValueSet) -> ValueSet {
        ValueSet {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn complement(&self) -> ValueSet {
        let mut out = ValueSet::empty(self.len);
        for i in 0..self.len {
            if !self.contains(i) {
                out.insert(i);
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    InSet(Vec<String>),
    Eq(String),
    Neq(String),
    Lt(i64),
    Le(i64),
    Gt(i64),
    Ge(i64),
    /// Full-string regular expression match against each value's text.
    Regexp(String),
    Any,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub key: String,
    pub pred: Predicate,
}

impl Atom {
    pub fn new(key: impl Into<String>, pred: Predicate) -> Self {
        Atom {
            key: key.into(),
            pred,
        }
    }

    pub fn eq(key: impl Into<String>, value: impl Into<String>) -> Self {
        Atom::new(key, Predicate::Eq(value.into()))
    }
}

/// One conjunction: at most one atom per attribute, the others unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GuardBox {
    pub atoms: BTreeMap<String, Atom>,
}

impl GuardBox {
    pub fn top() -> Self {
        GuardBox::default()
    }

    pub fn with(mut self, atom: Atom) -> Self {
        self.atoms.insert(atom.key.clone(), atom);
        self
    }

    pub fn is_top(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// A disjunction of boxes. No boxes means the empty guard.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Guard {
    pub boxes: Vec<GuardBox>,
}

impl Guard {
    pub fn top() -> Self {
        Guard {
            boxes: vec![GuardBox::top()],
        }
    }

    pub fn bottom() -> Self {
        Guard { boxes: Vec::new() }
    }

    pub fn single(b: GuardBox) -> Self {
        Guard { boxes: vec![b] }
    }

    pub fn atom(atom: Atom) -> Self {
        Guard::single(GuardBox::top().with(atom))
    }

    pub fn is_bottom(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn is_top(&self) -> bool {
        self.boxes.len() == 1 && self.boxes[0].is_top()
    }

    pub fn and(&self, other: &Guard, schema: &AttributeSchema) -> Result<Guard, SchemaError> {
        guard_combine(GuardOp::And, self, Some(other), schema)
    }

    pub fn or(&self, other: &Guard, schema: &AttributeSchema) -> Result<Guard, SchemaError> {
        guard_combine(GuardOp::Or, self, Some(other), schema)
    }

    pub fn complement(&self, schema: &AttributeSchema) -> Result<Guard, SchemaError> {
        guard_combine(GuardOp::Not, self, None, schema)
    }

    pub fn compile(&self, schema: &AttributeSchema) -> Result<CompiledGuard, SchemaError> {
        let mut boxes = Vec::with_capacity(self.boxes.len());
        for b in &self.boxes {
            let mut atoms = Vec::with_capacity(b.atoms.len());
            for atom in b.atoms.values() {
                let (i, _) = schema.attr(&atom.key)?;
                atoms.push((i, atom_to_set(atom, schema)?));
            }
            boxes.push(atoms);
        }
        Ok(CompiledGuard { boxes })
    }
}

fn int_operand(atom: &Atom, schema: &AttributeSchema) -> Result<(), SchemaError> {
    let (_, attr) = schema.attr(&atom.key)?;
    if attr.domain.is_int() {
        Ok(())
    } else {
        Err(SchemaError::ComparisonOnEnum(atom.key.clone()))
    }
}

fn index_in(attr: &Attribute, value: &str) -> Result<usize, SchemaError> {
    attr.domain
        .index_of(value)
        .ok_or_else(|| SchemaError::ValueOutOfDomain {
            key: attr.key.clone(),
            value: value.to_string(),
        })
}

/// The subset of the attribute's domain that satisfies the atom.
pub fn atom_to_set(atom: &Atom, schema: &AttributeSchema) -> Result<ValueSet, SchemaError> {
    let (_, attr) = schema.attr(&atom.key)?;
    let dom = &attr.domain;
    let n = dom.len();
    let by_int = |f: &dyn Fn(i64) -> bool| -> Result<ValueSet, SchemaError> {
        int_operand(atom, schema)?;
        let mut s = ValueSet::empty(n);
        for i in 0..n {
            if f(dom.int_value(i).expect("integer domain")) {
                s.insert(i);
            }
        }
        Ok(s)
    };
    match &atom.pred {
        Predicate::Any => Ok(ValueSet::full(n)),
        Predicate::None => Ok(ValueSet::empty(n)),
        Predicate::Eq(v) => {
            let mut s = ValueSet::empty(n);
            s.insert(index_in(attr, v)?);
            Ok(s)
        }
        Predicate::Neq(v) => {
            let mut s = ValueSet::empty(n);
            s.insert(index_in(attr, v)?);
            Ok(s.complement())
        }
        Predicate::InSet(vs) => {
            let mut s = ValueSet::empty(n);
            for v in vs {
                s.insert(index_in(attr, v)?);
            }
            Ok(s)
        }
        Predicate::Lt(k) => by_int(&|x| x < *k),
        Predicate::Le(k) => by_int(&|x| x <= *k),
        Predicate::Gt(k) => by_int(&|x| x > *k),
        Predicate::Ge(k) => by_int(&|x| x >= *k),
        Predicate::Regexp(pat) => {
            let re = Regex::new(&format!("^(?:{pat})$")).map_err(|e| SchemaError::BadRegex {
                pattern: pat.clone(),
                message: e.to_string(),
            })?;
            let mut s = ValueSet::empty(n);
            for i in 0..n {
                if re.is_match(&dom.text(i)) {
                    s.insert(i);
                }
            }
            Ok(s)
        }
    }
}

fn set_eval(set: &ValueSet, binding: Option<usize>) -> TriValue {
    match binding {
        Some(v) => TriValue::from_bool(set.contains(v)),
        None if set.is_full() => TriValue::T,
        None if set.is_empty() => TriValue::F,
        None => TriValue::U,
    }
}

/// Three-valued membership of one binding in an atom.
pub fn atom_eval(
    atom: &Atom,
    binding: Option<usize>,
    schema: &AttributeSchema,
) -> Result<TriValue, SchemaError> {
    Ok(set_eval(&atom_to_set(atom, schema)?, binding))
}

/// Three-valued evaluation of a guard against a request.
pub fn guard_eval(g: &Guard, r: &Request, schema: &AttributeSchema) -> Result<TriValue, SchemaError> {
    Ok(g.compile(schema)?.eval(r))
}

/// The set of fully bound points at which the guard holds.
pub fn guard_region(g: &Guard, schema: &AttributeSchema) -> Result<PointSet, SchemaError> {
    schema.check_cap()?;
    Ok(g.compile(schema)?.region(schema))
}

/// A guard whose atoms have been resolved to value sets.
#[derive(Debug, Clone)]
pub struct CompiledGuard {
    boxes: Vec<Vec<(usize, ValueSet)>>,
}

impl CompiledGuard {
    pub fn eval(&self, r: &Request) -> TriValue {
        self.boxes.iter().fold(TriValue::F, |acc, b| {
            let v = b
                .iter()
                .fold(TriValue::T, |acc, (i, set)| acc.and(set_eval(set, r.values[*i])));
            acc.or(v)
        })
    }

    /// Marks the product of each box's value sets directly.
    pub fn region(&self, schema: &AttributeSchema) -> PointSet {
        let total = schema.point_count();
        let mut out = PointSet::empty(total);
        let n = schema.len();
        for b in &self.boxes {
            let mut choices: Vec<Vec<usize>> = schema
                .attributes()
                .iter()
                .map(|a| (0..a.domain.len()).collect())
                .collect();
            for (i, set) in b {
                choices[*i] = choices[*i].iter().copied().filter(|&v| set.contains(v)).collect();
            }
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut cursor = vec![0usize; n];
            'points: loop {
                let values: Vec<usize> = cursor.iter().zip(&choices).map(|(&c, ch)| ch[c]).collect();
                out.insert(schema.encode(&values));
                let mut k = n;
                loop {
                    if k == 0 {
                        break 'points;
                    }
                    k -= 1;
                    cursor[k] += 1;
                    if cursor[k] < choices[k].len() {
                        continue 'points;
                    }
                    cursor[k] = 0;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardOp {
    And,
    Or,
    Not,
}

fn set_atom(key: &str, set: &ValueSet, schema: &AttributeSchema) -> Atom {
    let (_, attr) = schema.attr(key).expect("key checked by caller");
    let pred = if set.is_full() {
        Predicate::Any
    } else if set.is_empty() {
        Predicate::None
    } else if set.count() == 1 {
        Predicate::Eq(attr.domain.text(set.iter().next().unwrap()))
    } else {
        Predicate::InSet(set.iter().map(|i| attr.domain.text(i)).collect())
    };
    Atom::new(key, pred)
}

fn merge_boxes(
    a: &GuardBox,
    b: &GuardBox,
    schema: &AttributeSchema,
) -> Result<Option<GuardBox>, SchemaError> {
    let mut out = a.clone();
    for (key, atom) in &b.atoms {
        match a.atoms.get(key) {
            None => {
                out.atoms.insert(key.clone(), atom.clone());
            }
            Some(existing) if existing == atom => {}
            Some(existing) => {
                let set = atom_to_set(existing, schema)?.intersect(&atom_to_set(atom, schema)?);
                if set.is_empty() {
                    return Ok(None);
                }
                out.atoms.insert(key.clone(), set_atom(key, &set, schema));
            }
        }
    }
    for atom in out.atoms.values() {
        if atom_to_set(atom, schema)?.is_empty() {
            return Ok(None);
        }
    }
    Ok(Some(out))
}

fn and_guards(g1: &Guard, g2: &Guard, schema: &AttributeSchema) -> Result<Guard, SchemaError> {
    let mut boxes = Vec::new();
    for a in &g1.boxes {
        for b in &g2.boxes {
            if let Some(m) = merge_boxes(a, b, schema)? {
                if !boxes.contains(&m) {
                    boxes.push(m);
                }
            }
        }
    }
    Ok(Guard { boxes })
}

/// Guard conjunction, disjunction and complement. Complement expands the
/// negated DNF back into DNF and fails past [`DEFAULT_BOX_CAP`] boxes.
pub fn guard_combine(
    op: GuardOp,
    g1: &Guard,
    g2: Option<&Guard>,
    schema: &AttributeSchema,
) -> Result<Guard, SchemaError> {
    let bottom = Guard::bottom();
    match op {
        GuardOp::And => and_guards(g1, g2.unwrap_or(&bottom), schema),
        GuardOp::Or => {
            let mut boxes = g1.boxes.clone();
            for b in &g2.unwrap_or(&bottom).boxes {
                if !boxes.contains(b) {
                    boxes.push(b.clone());
                }
            }
            Ok(Guard { boxes })
        }
        GuardOp::Not => {
            let mut acc = Guard::top();
            for b in &g1.boxes {
                // The complement of one box is the union, over its constrained
                // attributes, of the complement of that attribute's set.
                let mut negated = Guard::bottom();
                for atom in b.atoms.values() {
                    let set = atom_to_set(atom, schema)?.complement();
                    if !set.is_empty() {
                        negated
                            .boxes
                            .push(GuardBox::top().with(set_atom(&atom.key, &set, schema)));
                    }
                }
                acc = and_guards(&acc, &negated, schema)?;
                if acc.boxes.len() > DEFAULT_BOX_CAP {
                    return Err(SchemaError::BoxCapExceeded(DEFAULT_BOX_CAP));
                }
                if acc.is_bottom() {
                    break;
                }
            }
            Ok(acc)
        }
    }
}

/// A dense set of point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    bits: Vec<u64>,
    len: usize,
}

impl PointSet {
    pub fn empty(len: usize) -> Self {
        PointSet {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }
}

/// Attribute bindings for one access request. `None` is an unknown value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Request {
    pub values: Vec<Option<usize>>,
}

impl Request {
    pub fn unknown(schema: &AttributeSchema) -> Self {
        Request {
            values: vec![None; schema.len()],
        }
    }

    pub fn is_fully_bound(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Binds `key` to `value`, checking both against the schema.
    pub fn bind(&mut self, key: &str, value: &str, schema: &AttributeSchema) -> Result<(), SchemaError> {
        let (i, attr) = schema.attr(key)?;
        self.values[i] = Some(index_in(attr, value)?);
        Ok(())
    }

    /// Index of the point this request names, if fully bound.
    pub fn point_index(&self, schema: &AttributeSchema) -> Result<usize, SchemaError> {
        let mut values = Vec::with_capacity(self.values.len());
        for (v, a) in self.values.iter().zip(schema.attributes()) {
            values.push(v.ok_or_else(|| SchemaError::Unbound(a.key.clone()))?);
        }
        Ok(schema.encode(&values))
    }
}

/// Error from reading a request file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {source}")]
pub struct RequestError {
    pub line: usize,
    #[source]
    pub source: SchemaError,
}

/// Parses `key = value` / `key = ?` lines. Keys that never appear are left
/// unknown and reported in the returned warnings.
pub fn parse_request(
    text: &str,
    schema: &AttributeSchema,
) -> Result<(Request, Vec<String>), RequestError> {
    let mut req = Request::unknown(schema);
    let mut seen = vec![false; schema.len()];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let err = |source| RequestError { line, source };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(malformed(line, "expected `key = value`")))?;
        let (key, value) = (key.trim(), unquote(value.trim()));
        let (i, _) = schema.attr(key).map_err(err)?;
        if seen[i] {
            return Err(err(malformed(line, format!("`{key}` bound twice"))));
        }
        seen[i] = true;
        if value != "?" {
            req.bind(key, value, schema).map_err(err)?;
        }
    }
    let warnings = schema
        .attributes()
        .iter()
        .zip(&seen)
        .filter(|(_, s)| !**s)
        .map(|(a, _)| format!("attribute `{}` not given; treated as unknown", a.key))
        .collect();
    Ok((req, warnings))
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(s)
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::InSet(vs) => write!(f, "in {{{}}}", vs.join(", ")),
            Predicate::Eq(v) => write!(f, "= {v}"),
            Predicate::Neq(v) => write!(f, "!= {v}"),
            Predicate::Lt(k) => write!(f, "< {k}"),
            Predicate::Le(k) => write!(f, "<= {k}"),
            Predicate::Gt(k) => write!(f, "> {k}"),
            Predicate::Ge(k) => write!(f, ">= {k}"),
            Predicate::Regexp(p) => write!(f, "matches {p:?}"),
            Predicate::Any => f.write_str("= *"),
            Predicate::None => f.write_str("!= *"),
        }
    }
}
