//! Recursive-descent parser for `.asp` policy files.
//!
//! ```text
//! policy  := 'if' pred ':' 'return' ACTION ('elif' pred ':' 'return' ACTION)*
//!            ('else' ':' 'return' 'start')?
//!          | 'return' 'start' | <empty>
//! pred    := conj ('||' conj)*
//! conj    := atom ('&&' atom)*
//! atom    := 'true' | 'false' | '?pred' | 'start' '==' ACTION | '(' pred ')'
//!          | expr ('>' | '<') param
//! param   := '?' NAME dims | NAME dims ('=' NUMBER)?
//! expr    := term (('+' | '-') term)*
//! term    := postfix (('*' | '/') postfix)*
//! postfix := primary ('.' ('x' | 'y'))*
//! primary := NUMBER dims | 'vec' '(' NUMBER ',' NUMBER ')' dims | NAME '(' expr, .. ')'
//!          | NAME | '(' expr ')' | '?expr' '(' type ')'
//! ```
//! `#` starts a comment that runs to the end of the line.

use super::ast::{BinaryOp, Branch, Expr, Policy, Predicate, Relation, UnaryOp};
use super::domain::DomainDefinition;
use super::typecheck::typecheck_policy;
use super::types::{Action, AspType, Param, Value};
use crate::dim::Dimension;
use crate::error::{LangError, ParseError, TypeError};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 17] = [
    "==", "&&", "||", "(", ")", "[", "]", ",", ":", ".", "+", "-", "*", "/", ">", "<", "?",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Token {
                tok: Tok::Ident(chars[s..i].iter().collect()),
                line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s_txt: String = chars[s..i].iter().collect();
            let v: f64 = s_txt.parse().map_err(|_| ParseError {
                line,
                col: start_col,
                msg: format!("malformed number `{s_txt}`"),
            })?;
            col += i - s;
            out.push(Token {
                tok: Tok::Num(v),
                line,
                col: start_col,
            });
            continue;
        }
        if c == '=' && chars.get(i + 1) != Some(&'=') {
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Sym("="),
                line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| ParseError {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            })?;
        i += sym.len();
        col += sym.len();
        out.push(Token {
            tok: Tok::Sym(sym),
            line,
            col: start_col,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    dom: &'a DomainDefinition,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> LangError {
        let t = &self.toks[self.pos];
        LangError::Parse(ParseError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expected(&self, what: &str) -> LangError {
        self.error(format!("expected {what}, found {}", describe(self.peek())))
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{s}`")))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.expected(what)),
        }
    }

    fn number(&mut self) -> Result<f64, LangError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            Tok::Ident(s) if s == "inf" || s == "NaN" => Err(self.error("non-finite number")),
            _ => Err(self.expected("a number")),
        }
    }

    fn integer(&mut self) -> Result<i32, LangError> {
        let v = self.number()?;
        if v.fract() != 0.0 || v.abs() > 64.0 {
            return Err(self.error("dimension exponents must be small integers"));
        }
        Ok(v as i32)
    }

    fn dims(&mut self) -> Result<Dimension, LangError> {
        self.expect_sym("[")?;
        let l = self.integer()?;
        self.expect_sym(",")?;
        let t = self.integer()?;
        self.expect_sym(",")?;
        let m = self.integer()?;
        self.expect_sym("]")?;
        Ok(Dimension::new(l, t, m))
    }

    fn policy(&mut self) -> Result<Policy, LangError> {
        let mut branches = Vec::new();
        if self.is_kw("if") {
            self.bump();
            branches.push(self.branch()?);
            while self.is_kw("elif") {
                self.bump();
                branches.push(self.branch()?);
            }
            if self.is_kw("else") {
                self.bump();
                self.expect_sym(":")?;
                self.default_rule()?;
            }
        } else if self.is_kw("return") {
            self.default_rule()?;
        }
        if *self.peek() != Tok::Eof {
            return Err(self.expected("`elif`, `else` or end of input"));
        }
        Ok(Policy::new(branches))
    }

    fn default_rule(&mut self) -> Result<(), LangError> {
        self.expect_kw("return")?;
        self.expect_kw("start")
    }

    fn branch(&mut self) -> Result<Branch, LangError> {
        let guard = self.pred()?;
        self.expect_sym(":")?;
        self.expect_kw("return")?;
        let action = Action::new(&self.ident("an action name")?);
        Ok(Branch { guard, action })
    }

    fn pred(&mut self) -> Result<Predicate, LangError> {
        let mut lhs = self.conj()?;
        while self.eat_sym("||") {
            let rhs = self.conj()?;
            lhs = Predicate::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Predicate, LangError> {
        let mut lhs = self.atom()?;
        while self.eat_sym("&&") {
            let rhs = self.atom()?;
            lhs = Predicate::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Predicate, LangError> {
        if self.is_kw("true") {
            self.bump();
            return Ok(Predicate::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Predicate::False);
        }
        if self.is_kw("start") {
            self.bump();
            self.expect_sym("==")?;
            let a = self.ident("an action name")?;
            return Ok(Predicate::ActionEq(Action::new(&a)));
        }
        if matches!(self.peek(), Tok::Sym("?")) && matches!(self.peek_at(1), Tok::Ident(s) if s == "pred")
        {
            self.bump();
            self.bump();
            return Ok(Predicate::Blank);
        }
        if matches!(self.peek(), Tok::Sym("(")) {
            // A parenthesised predicate, unless the group turns out to be an expression.
            let save = self.pos;
            self.bump();
            if let Ok(p) = self.pred() {
                if !self.eat_sym(")") {
                    return Err(self.expected("`)`"));
                }
                if !self.continues_expression() {
                    return Ok(p);
                }
            }
            self.pos = save;
        }
        let expr = self.expr()?;
        let rel = if self.eat_sym(">") {
            Relation::Gt
        } else if self.eat_sym("<") {
            Relation::Lt
        } else {
            return Err(self.expected("`>` or `<`"));
        };
        let param = self.param()?;
        Ok(Predicate::Cmp { rel, expr, param })
    }

    fn continues_expression(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym(".") | Tok::Sym("+") | Tok::Sym("-") | Tok::Sym("*") | Tok::Sym("/")
                | Tok::Sym(">") | Tok::Sym("<")
        )
    }

    fn param(&mut self) -> Result<Param, LangError> {
        if self.eat_sym("?") {
            let name = self.ident("a parameter name")?;
            let dim = self.dims()?;
            return Ok(Param::blank(name, dim));
        }
        let name = self.ident("a parameter name")?;
        let dim = self.dims()?;
        if self.eat_sym("=") {
            let v = self.number()?;
            Ok(Param::new(name, dim, v))
        } else {
            Ok(Param::blank(name, dim))
        }
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinaryOp::Add
            } else if self.eat_sym("-") {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.postfix()?;
        loop {
            let op = if self.eat_sym("*") {
                BinaryOp::Mul
            } else if self.eat_sym("/") {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.postfix()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut e = self.primary()?;
        while self.eat_sym(".") {
            let field = self.ident("`x` or `y`")?;
            let op = match field.as_str() {
                "x" => UnaryOp::Vx,
                "y" => UnaryOp::Vy,
                _ => return Err(self.error(format!("unknown accessor `.{field}`"))),
            };
            e = Expr::unary(op, e);
        }
        Ok(e)
    }

    fn asp_type(&mut self) -> Result<AspType, LangError> {
        if self.is_kw("bool") {
            self.bump();
            return Ok(AspType::Bool);
        }
        if self.is_kw("vec") {
            self.bump();
            return Ok(AspType::Vector(self.dims()?));
        }
        Ok(AspType::Scalar(self.dims()?))
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Num(_) | Tok::Sym("-") => {
                let v = self.number()?;
                let d = self.dims()?;
                Ok(Expr::Const {
                    value: Value::Scalar(v),
                    ty: AspType::Scalar(d),
                })
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("?") => {
                self.bump();
                self.expect_kw("expr")?;
                self.expect_sym("(")?;
                let ty = self.asp_type()?;
                self.expect_sym(")")?;
                Ok(Expr::Blank(ty))
            }
            Tok::Ident(name) if name == "vec" => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.number()?;
                self.expect_sym(",")?;
                let y = self.number()?;
                self.expect_sym(")")?;
                let d = self.dims()?;
                Ok(Expr::Const {
                    value: Value::Vector([x, y]),
                    ty: AspType::Vector(d),
                })
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat_sym("(") {
                    let mut args = Vec::new();
                    if !self.eat_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_sym(")") {
                                break;
                            }
                            self.expect_sym(",")?;
                        }
                    }
                    return self.call(&name, args);
                }
                let ty = self
                    .dom
                    .input_type(&name)
                    .ok_or(TypeError::UnknownVariable(name.clone()))?;
                Ok(Expr::Input { name, ty })
            }
            _ => Err(self.expected("an expression")),
        }
    }

    fn call(&mut self, name: &str, mut args: Vec<Expr>) -> Result<Expr, LangError> {
        let arity = |expected: usize, found: usize| {
            LangError::Type(TypeError::ArityMismatch {
                op: name.to_string(),
                expected,
                found,
            })
        };
        if let Some(op) = UnaryOp::from_name(name).filter(|op| !matches!(op, UnaryOp::Vx | UnaryOp::Vy)) {
            if args.len() != 1 {
                return Err(arity(1, args.len()));
            }
            return Ok(Expr::unary(op, args.remove(0)));
        }
        if let Some(op) = BinaryOp::from_name(name).filter(|op| !op.is_arithmetic()) {
            if args.len() != 2 {
                return Err(arity(2, args.len()));
            }
            let rhs = args.remove(1);
            let lhs = args.remove(0);
            return Ok(Expr::binary(op, lhs, rhs));
        }
        Err(LangError::Type(TypeError::UnknownOperator(name.to_string())))
    }
}

fn parser<'a>(text: &str, dom: &'a DomainDefinition) -> Result<Parser<'a>, LangError> {
    Ok(Parser {
        toks: lex(text)?,
        pos: 0,
        dom,
    })
}

/// Parses and typechecks a policy.
pub fn parse(text: &str, dom: &DomainDefinition) -> Result<Policy, LangError> {
    let policy = parser(text, dom)?.policy()?;
    typecheck_policy(&policy, dom)?;
    Ok(policy)
}

/// Parses a standalone predicate (no typechecking beyond variable resolution).
pub fn parse_predicate(text: &str, dom: &DomainDefinition) -> Result<Predicate, LangError> {
    let mut p = parser(text, dom)?;
    let pred = p.pred()?;
    if *p.peek() != Tok::Eof {
        return Err(p.expected("end of input"));
    }
    Ok(pred)
}

pub fn parse_expr(text: &str, dom: &DomainDefinition) -> Result<Expr, LangError> {
    let mut p = parser(text, dom)?;
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.expected("end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> DomainDefinition {
        DomainDefinition::social()
    }

    #[test]
    fn one_branch_policy() {
        let p = parse(
            "if start == GoAlone && norm(p_h) > th1 [1,0,0] = 2.0: return GoAlone",
            &dom(),
        )
        .unwrap();
        assert_eq!(p.branches.len(), 1);
        assert_eq!(p.branches[0].action, Action::new("GoAlone"));
        assert_eq!(p.branches[0].guard.params()[0].value, Some(2.0));
    }

    #[test]
    fn param_without_value_is_blank() {
        let p = parse("if start == GoAlone && norm(p_h) > th1 [1,0,0]: return GoAlone", &dom()).unwrap();
        assert!(p.branches[0].guard.params()[0].is_blank());
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        let text = "if (start == GoAlone && norm(p_h) > t [1,0,0] = 1.0: return Halt";
        let err = parse(text, &dom()).unwrap_err();
        match err {
            LangError::Parse(e) => {
                assert_eq!((e.line, e.col), (1, text.find(':').unwrap() + 1));
                assert!(e.msg.contains("`)`"), "{}", e.msg);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_on_second_line() {
        let err = parse(
            "if true: return Halt\nelif norm(p_h) >> t [1,0,0] = 1.0: return Pass",
            &dom(),
        )
        .unwrap_err();
        let LangError::Parse(e) = err else { panic!() };
        assert_eq!(e.line, 2);
        assert_eq!(e.col, 17);
    }

    #[test]
    fn grouped_expression_vs_grouped_predicate() {
        let d = dom();
        let e = parse_predicate("(p_h - p_hl).x > t [1,0,0] = 0.5", &d).unwrap();
        assert!(matches!(e, Predicate::Cmp { .. }));
        let p = parse_predicate("(true || false) && true", &d).unwrap();
        assert!(matches!(p, Predicate::And(..)));
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let p = parse_predicate("true || false && true", &dom()).unwrap();
        match p {
            Predicate::Or(_, rhs) => assert!(matches!(*rhs, Predicate::And(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arity_is_checked() {
        let err = parse_expr("norm(p_h, p_hl)", &dom()).unwrap_err();
        assert_eq!(
            err,
            LangError::Type(TypeError::ArityMismatch {
                op: "norm".into(),
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn unknown_action_is_a_type_error() {
        let err = parse("if true: return Fly", &dom()).unwrap_err();
        assert_eq!(
            err,
            LangError::Type(TypeError::UnknownAction(Action::new("Fly")))
        );
    }

    #[test]
    fn empty_and_default_only() {
        assert!(parse("", &dom()).unwrap().branches.is_empty());
        assert!(parse("return start", &dom()).unwrap().branches.is_empty());
        assert!(parse("# nothing\n", &dom()).unwrap().branches.is_empty());
    }

    #[test]
    fn constants_and_blanks() {
        let d = dom();
        let e = parse_expr("vec(0, 0) [1,0,0] - p_hl", &d).unwrap();
        assert!(matches!(e, Expr::Binary { op: BinaryOp::Sub, .. }));
        let e = parse_expr("-1.5e-3 [0,0,0]", &d).unwrap();
        assert_eq!(
            e,
            Expr::Const {
                value: Value::Scalar(-1.5e-3),
                ty: AspType::Scalar(Dimension::DIMENSIONLESS)
            }
        );
        let p = parse_predicate("?expr(vec[1,0,0]).x > ?t [1,0,0] && ?pred", &d).unwrap();
        assert!(p.has_blank());
        assert_eq!(p.blank_count(), 1);
    }
}
