//! Three-valued truth values, (accept, deny) pairs, and their decision classes.

use std::fmt;

/// A Kleene truth value. `U` is the single unknown value and renders as `?`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriValue {
    T,
    F,
    U,
}

/// Unary operators on [`TriValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    /// Collapses unknown to false.
    Det,
    /// Collapses unknown to true.
    DetDual,
}

/// Binary operators on [`TriValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    And,
    Or,
    /// Overlap-sensitive subtraction: a true left operand becomes unknown when
    /// the right operand might also hold.
    Ominus,
    /// `a ∧ ¬b`.
    Minus,
}

impl TriValue {
    pub const ALL: [TriValue; 3] = [TriValue::T, TriValue::F, TriValue::U];

    pub fn from_bool(b: bool) -> Self {
        if b {
            TriValue::T
        } else {
            TriValue::F
        }
    }

    pub fn is_true(self) -> bool {
        self == TriValue::T
    }

    pub fn is_false(self) -> bool {
        self == TriValue::F
    }

    pub fn is_unknown(self) -> bool {
        self == TriValue::U
    }

    pub fn is_definite(self) -> bool {
        self != TriValue::U
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        match self {
            TriValue::T => TriValue::F,
            TriValue::F => TriValue::T,
            TriValue::U => TriValue::U,
        }
    }

    pub fn det(self) -> Self {
        match self {
            TriValue::U => TriValue::F,
            v => v,
        }
    }

    pub fn det_dual(self) -> Self {
        match self {
            TriValue::U => TriValue::T,
            v => v,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (TriValue::F, _) | (_, TriValue::F) => TriValue::F,
            (TriValue::T, TriValue::T) => TriValue::T,
            _ => TriValue::U,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (TriValue::T, _) | (_, TriValue::T) => TriValue::T,
            (TriValue::F, TriValue::F) => TriValue::F,
            _ => TriValue::U,
        }
    }

    pub fn minus(self, other: Self) -> Self {
        self.and(other.not())
    }

    pub fn ominus(self, other: Self) -> Self {
        match (self, other) {
            (TriValue::T, TriValue::F) => TriValue::T,
            (TriValue::T, _) => TriValue::U,
            (TriValue::U, _) => TriValue::U,
            (TriValue::F, _) => TriValue::F,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            TriValue::T => 'T',
            TriValue::F => 'F',
            TriValue::U => '?',
        }
    }
}

impl fmt::Display for TriValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

pub fn tv_unary(op: UnaryOp, a: TriValue) -> TriValue {
    match op {
        UnaryOp::Not => a.not(),
        UnaryOp::Det => a.det(),
        UnaryOp::DetDual => a.det_dual(),
    }
}

pub fn tv_binary(op: BinaryOp, a: TriValue, b: TriValue) -> TriValue {
    match op {
        BinaryOp::And => a.and(b),
        BinaryOp::Or => a.or(b),
        BinaryOp::Ominus => a.ominus(b),
        BinaryOp::Minus => a.minus(b),
    }
}

/// The result of evaluating a policy: whether it accepts and whether it denies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecisionPair {
    pub accept: TriValue,
    pub deny: TriValue,
}

impl DecisionPair {
    pub const NOT_APPLICABLE: DecisionPair = DecisionPair::new(TriValue::F, TriValue::F);
    pub const PERMIT: DecisionPair = DecisionPair::new(TriValue::T, TriValue::F);
    pub const DENY: DecisionPair = DecisionPair::new(TriValue::F, TriValue::T);

    /// All nine representable pairs.
    pub const ALL: [DecisionPair; 9] = {
        use TriValue::*;
        [
            DecisionPair::new(T, T),
            DecisionPair::new(T, F),
            DecisionPair::new(T, U),
            DecisionPair::new(F, T),
            DecisionPair::new(F, F),
            DecisionPair::new(F, U),
            DecisionPair::new(U, T),
            DecisionPair::new(U, F),
            DecisionPair::new(U, U),
        ]
    };

    /// The eight encodings that XACML decisions map onto (every pair but `(T,T)`).
    pub const XACML_ENCODINGS: [DecisionPair; 8] = {
        use TriValue::*;
        [
            DecisionPair::new(T, F),
            DecisionPair::new(T, U),
            DecisionPair::new(F, T),
            DecisionPair::new(U, T),
            DecisionPair::new(F, F),
            DecisionPair::new(U, F),
            DecisionPair::new(F, U),
            DecisionPair::new(U, U),
        ]
    };

    pub const fn new(accept: TriValue, deny: TriValue) -> Self {
        DecisionPair { accept, deny }
    }

    pub fn swap(self) -> Self {
        DecisionPair::new(self.deny, self.accept)
    }

    pub fn classify(self) -> Decision {
        classify(self)
    }

    pub fn has_unknown(self) -> bool {
        self.accept.is_unknown() || self.deny.is_unknown()
    }
}

impl fmt::Display for DecisionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.accept, self.deny)
    }
}

/// XACML-style decision classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Decision {
    Permit,
    Deny,
    NotApplicable,
    IndeterminateP,
    IndeterminateD,
    IndeterminatePD,
    /// Both accept and deny are true. Well-formed policies never reach it.
    Conflict,
}

impl Decision {
    pub const ALL: [Decision; 7] = [
        Decision::Permit,
        Decision::Deny,
        Decision::NotApplicable,
        Decision::IndeterminateP,
        Decision::IndeterminateD,
        Decision::IndeterminatePD,
        Decision::Conflict,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Decision::Permit => "PERMIT",
            Decision::Deny => "DENY",
            Decision::NotApplicable => "NOT_APPLICABLE",
            Decision::IndeterminateP => "INDETERMINATE_P",
            Decision::IndeterminateD => "INDETERMINATE_D",
            Decision::IndeterminatePD => "INDETERMINATE_PD",
            Decision::Conflict => "CONFLICT",
        }
    }

    pub fn is_indeterminate(self) -> bool {
        matches!(
            self,
            Decision::IndeterminateP | Decision::IndeterminateD | Decision::IndeterminatePD
        )
    }

    pub fn is_definite(self) -> bool {
        matches!(self, Decision::Permit | Decision::Deny)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

pub fn classify(p: DecisionPair) -> Decision {
    use TriValue::*;
    match (p.accept, p.deny) {
        (F, F) => Decision::NotApplicable,
        (T, F) | (T, U) => Decision::Permit,
        (F, T) | (U, T) => Decision::Deny,
        (U, F) => Decision::IndeterminateP,
        (F, U) => Decision::IndeterminateD,
        (U, U) => Decision::IndeterminatePD,
        (T, T) => Decision::Conflict,
    }
}
