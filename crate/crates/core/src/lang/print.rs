//! Printer producing the textual syntax with as few parentheses as possible.

use super::Policy;
use crate::schema::{Atom, Guard, GuardBox, Predicate};

const UNARY_LEVEL: u8 = 5;
const ATOM_LEVEL: u8 = 6;

fn level(p: &Policy) -> u8 {
    match p {
        Policy::Bin(op, _, _) => op.level(),
        Policy::Neg(_) | Policy::Det(_) | Policy::Scope(..) => UNARY_LEVEL,
        _ => ATOM_LEVEL,
    }
}

pub fn print_policy(p: &Policy) -> String {
    let mut out = String::new();
    write_policy(p, 0, &mut out);
    out
}

fn write_policy(p: &Policy, min_level: u8, out: &mut String) {
    let paren = level(p) < min_level;
    if paren {
        out.push('(');
    }
    match p {
        Policy::Empty => out.push_str("eps"),
        Policy::Zero => out.push('0'),
        Policy::One => out.push('1'),
        Policy::Var(name) => out.push_str(name),
        Policy::Rule(a, d) => {
            out.push('<');
            out.push_str(&print_guard(a));
            out.push_str(", ");
            out.push_str(&print_guard(d));
            out.push('>');
        }
        Policy::Neg(q) => {
            out.push('~');
            write_policy(q, UNARY_LEVEL, out);
        }
        Policy::Det(q) => {
            out.push_str("det ");
            write_policy(q, UNARY_LEVEL, out);
        }
        Policy::Scope(g, q) => {
            out.push_str(&print_guard(g));
            out.push_str(" : ");
            write_policy(q, UNARY_LEVEL, out);
        }
        Policy::Bin(op, l, r) => {
            let lv = op.level();
            write_policy(l, lv, out);
            out.push(' ');
            out.push_str(op.token());
            out.push(' ');
            write_policy(r, lv + 1, out);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_guard(g: &Guard) -> String {
    if g.is_bottom() {
        return "none".to_string();
    }
    g.boxes.iter().map(print_box).collect::<Vec<_>>().join(" or ")
}

fn print_box(b: &GuardBox) -> String {
    let parts: Vec<String> = b.atoms.values().map(print_atom).collect();
    format!("{{{}}}", parts.join(", "))
}

fn print_atom(a: &Atom) -> String {
    let k = &a.key;
    match &a.pred {
        Predicate::InSet(vs) => {
            let vs: Vec<String> = vs.iter().map(|v| value(v)).collect();
            format!("{k} in {{{}}}", vs.join(", "))
        }
        Predicate::Eq(v) => format!("{k} = {}", value(v)),
        Predicate::Neq(v) => format!("{k} != {}", value(v)),
        Predicate::Lt(n) => format!("{k} < {n}"),
        Predicate::Le(n) => format!("{k} <= {n}"),
        Predicate::Gt(n) => format!("{k} > {n}"),
        Predicate::Ge(n) => format!("{k} >= {n}"),
        Predicate::Regexp(pat) => format!("{k} matches {}", quote(pat)),
        Predicate::Any => format!("{k} = *"),
        Predicate::None => format!("{k} != *"),
    }
}

fn value(v: &str) -> String {
    let bare = !v.is_empty()
        && v != "*"
        && v
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, ',' | '{' | '}' | '<' | '>' | '=' | '!' | '"' | '#'));
    if bare {
        v.to_string()
    } else {
        quote(v)
    }
}

fn quote(v: &str) -> String {
    let mut out = String::with_capacity(v.len() + 2);
    out.push('"');
    for c in v.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_pattern;

    fn v(n: &str) -> Policy {
        Policy::var(n)
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(print_policy(&Policy::choice(Policy::One, Policy::Zero)), "1 + 0");
        let p = Policy::choice(v("P1"), Policy::seq(Policy::neg(v("P2")), v("P3")));
        assert_eq!(print_policy(&p), "P1 + ~P2 . P3");
        assert_eq!(print_policy(&Policy::rule(Guard::top(), Guard::bottom())), "<{}, none>");
        let right = Policy::choice(v("A"), Policy::choice(v("B"), v("C")));
        assert_eq!(print_policy(&right), "A + (B + C)");
        let left = Policy::choice(Policy::choice(v("A"), v("B")), v("C"));
        assert_eq!(print_policy(&left), "A + B + C");
        assert_eq!(print_policy(&Policy::neg(Policy::par(v("A"), v("B")))), "~(A && B)");
        let scoped = Policy::scope(Guard::top(), Policy::seq(v("A"), v("B")));
        assert_eq!(print_policy(&scoped), "{} : (A . B)");
    }

    #[test]
    fn awkward_values_are_quoted() {
        let g = Guard::atom(Atom::new("k", Predicate::InSet(vec!["a b".into(), "*".into(), "x\"y".into()])));
        let text = print_policy(&Policy::permit(g.clone()));
        assert_eq!(text, r#"<{k in {"a b", "*", "x\"y"}}, none>"#);
        assert_eq!(parse_pattern(&text, None).unwrap(), Policy::permit(g));
        let re = Guard::atom(Atom::new("k", Predicate::Regexp(r"se\.c".into())));
        let text = print_policy(&Policy::deny(re.clone()));
        assert_eq!(parse_pattern(&text, None).unwrap(), Policy::deny(re));
    }
}
