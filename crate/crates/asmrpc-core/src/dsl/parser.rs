//! Recursive-descent parser for `.asm` programs.

use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use super::{DslRule, DslTerm, MacroDef, ParseError, ProgramDef, RuleKind, Span, TermKind};
use crate::value::Name;

const KEYWORDS: &[&str] = &[
    "if", "then", "elseif", "else", "endif", "choose", "satisfying", "endchoose", "and", "or",
    "not", "macro", "endmacro", "module", "endmodule", "const", "universe",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Choose binders and macro parameters currently in scope.
    binders: Vec<Name>,
}

pub fn parse_program(text: &str) -> Result<ProgramDef, ParseError> {
    let tokens = tokenize(text).map_err(|e| ParseError {
        message: e.message,
        span: e.span,
    })?;
    let mut p = Parser {
        tokens,
        pos: 0,
        binders: Vec::new(),
    };
    p.program()
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Tok::Newline) {
            self.next();
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Comma) {
            self.next();
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            message: message.into(),
            span: self.peek_span(),
        })
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Span, ParseError> {
        if self.peek() == tok {
            Ok(self.next().span)
        } else {
            self.error(format!("expected {what}, found {}", self.peek().describe()))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.next().span),
            other => self.error(format!("expected `{kw}`, found {}", other.describe())),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> Result<(Name, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.next().span;
                Ok((Arc::from(s.as_str()), span))
            }
            other => self.error(format!("expected {what}, found {}", other.describe())),
        }
    }

    fn program(&mut self) -> Result<ProgramDef, ParseError> {
        let mut def = ProgramDef::default();
        loop {
            self.skip_newlines();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "const" => {
                    self.next();
                    loop {
                        let (name, _) = self.ident("constant name")?;
                        if !def.constants.contains(&name) {
                            def.constants.push(name);
                        }
                        if matches!(self.peek(), Tok::Comma) {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                Tok::Ident(kw) if kw == "universe" => {
                    self.next();
                    let (name, span) = self.ident("universe name")?;
                    self.expect(&Tok::Eq, "`=`")?;
                    self.expect(&Tok::LBrace, "`{`")?;
                    let mut members = Vec::new();
                    if !matches!(self.peek(), Tok::RBrace) {
                        loop {
                            let (m, _) = self.ident("universe member")?;
                            members.push(m);
                            if matches!(self.peek(), Tok::Comma) {
                                self.next();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(&Tok::RBrace, "`}`")?;
                    if def.universes.insert(name.clone(), members).is_some() {
                        return Err(ParseError {
                            message: format!("duplicate universe `{name}`"),
                            span,
                        });
                    }
                }
                Tok::Ident(kw) if kw == "macro" => {
                    let m = self.macro_def()?;
                    if def.macros.contains_key(&m.name) {
                        return Err(ParseError {
                            message: format!("duplicate macro `{}`", m.name),
                            span: m.span,
                        });
                    }
                    def.macros.insert(m.name.clone(), m);
                }
                Tok::Ident(kw) if kw == "module" => {
                    let start = self.next().span;
                    let (name, span) = self.ident("module name")?;
                    let body = self.rule_sequence(&["endmodule"], start)?;
                    self.expect_keyword("endmodule")?;
                    if def.modules.insert(name.clone(), body).is_some() {
                        return Err(ParseError {
                            message: format!("duplicate module `{name}`"),
                            span,
                        });
                    }
                }
                other => {
                    return self.error(format!(
                        "expected `const`, `universe`, `macro` or `module`, found {}",
                        other.describe()
                    ))
                }
            }
        }
        Ok(def)
    }

    fn macro_def(&mut self) -> Result<MacroDef, ParseError> {
        let start = self.expect_keyword("macro")?;
        let (name, _) = self.ident("macro name")?;
        self.expect(&Tok::LParen, "`(`")?;
        let mut params: Vec<Name> = Vec::new();
        if !matches!(self.peek(), Tok::RParen) {
            loop {
                let (p, span) = self.ident("parameter name")?;
                if params.contains(&p) {
                    return Err(ParseError {
                        message: format!("duplicate parameter `{p}`"),
                        span,
                    });
                }
                params.push(p);
                if matches!(self.peek(), Tok::Comma) {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen, "`)`")?;
        let outer = self.binders.len();
        self.binders.extend(params.iter().cloned());
        let body = self.rule_sequence(&["endmacro"], start);
        self.binders.truncate(outer);
        let body = body?;
        self.expect_keyword("endmacro")?;
        Ok(MacroDef {
            name,
            params,
            body,
            span: start,
        })
    }

    /// Parses rules separated by newlines/commas until one of the terminator
    /// keywords. Yields the single rule unwrapped, otherwise a block.
    fn rule_sequence(&mut self, terminators: &[&str], start: Span) -> Result<DslRule, ParseError> {
        let mut rules = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                Tok::Eof => {
                    return Err(ParseError {
                        message: format!(
                            "unterminated block (expected one of: {})",
                            terminators.join(", ")
                        ),
                        span: start,
                    })
                }
                Tok::Ident(s) if terminators.contains(&s.as_str()) => break,
                _ => rules.push(self.rule()?),
            }
        }
        if rules.len() == 1 {
            Ok(rules.pop().unwrap())
        } else {
            Ok(DslRule {
                kind: RuleKind::Block(rules),
                span: start,
            })
        }
    }

    fn rule(&mut self) -> Result<DslRule, ParseError> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "if" => self.cond_rule(),
            Tok::Ident(kw) if kw == "choose" => self.choose_rule(),
            Tok::Ident(s) if !is_keyword(&s) => {
                let start = self.peek_span();
                let (name, _) = self.ident("rule")?;
                let args = if matches!(self.peek(), Tok::LParen) {
                    Some(self.paren_args()?)
                } else {
                    None
                };
                if matches!(self.peek(), Tok::Assign) {
                    self.next();
                    let value = self.term()?;
                    Ok(DslRule {
                        kind: RuleKind::Update {
                            symbol: name,
                            args: args.unwrap_or_default(),
                            value,
                        },
                        span: start,
                    })
                } else {
                    // No `:=` — a macro call, with or without parentheses.
                    Ok(DslRule {
                        kind: RuleKind::MacroCall {
                            name,
                            args: args.unwrap_or_default(),
                        },
                        span: start,
                    })
                }
            }
            other => self.error(format!("expected a rule, found {}", other.describe())),
        }
    }

    fn cond_rule(&mut self) -> Result<DslRule, ParseError> {
        let start = self.expect_keyword("if")?;
        let guard = self.term()?;
        self.expect_keyword("then")?;
        let then_rule = self.rule_sequence(&["elseif", "else", "endif"], start)?;
        let else_rule = if self.at_keyword("elseif") {
            // Desugar `elseif` into a nested conditional in else position.
            let span = self.peek_span();
            self.next();
            let guard = self.term()?;
            self.expect_keyword("then")?;
            let inner_then = self.rule_sequence(&["elseif", "else", "endif"], span)?;
            self.finish_elseif_chain(guard, inner_then, span)?
        } else if self.at_keyword("else") {
            let span = self.next().span;
            let r = self.rule_sequence(&["endif"], span)?;
            self.expect_keyword("endif")?;
            r
        } else {
            self.expect_keyword("endif")?;
            DslRule {
                kind: RuleKind::Block(Vec::new()),
                span: start,
            }
        };
        Ok(DslRule {
            kind: RuleKind::Cond {
                guard,
                then_rule: Box::new(then_rule),
                else_rule: Box::new(else_rule),
            },
            span: start,
        })
    }

    fn finish_elseif_chain(
        &mut self,
        guard: DslTerm,
        then_rule: DslRule,
        span: Span,
    ) -> Result<DslRule, ParseError> {
        let else_rule = if self.at_keyword("elseif") {
            let inner_span = self.peek_span();
            self.next();
            let inner_guard = self.term()?;
            self.expect_keyword("then")?;
            let inner_then = self.rule_sequence(&["elseif", "else", "endif"], inner_span)?;
            self.finish_elseif_chain(inner_guard, inner_then, inner_span)?
        } else if self.at_keyword("else") {
            let s = self.next().span;
            let r = self.rule_sequence(&["endif"], s)?;
            self.expect_keyword("endif")?;
            r
        } else {
            self.expect_keyword("endif")?;
            DslRule {
                kind: RuleKind::Block(Vec::new()),
                span,
            }
        };
        Ok(DslRule {
            kind: RuleKind::Cond {
                guard,
                then_rule: Box::new(then_rule),
                else_rule: Box::new(else_rule),
            },
            span,
        })
    }

    fn choose_rule(&mut self) -> Result<DslRule, ParseError> {
        let start = self.expect_keyword("choose")?;
        let (var, _) = self.ident("choose variable")?;
        self.expect_keyword("satisfying")?;
        self.binders.push(var.clone());
        let result = (|| {
            let condition = self.term()?;
            let body = self.rule_sequence(&["endchoose"], start)?;
            self.expect_keyword("endchoose")?;
            Ok::<_, ParseError>((condition, body))
        })();
        self.binders.pop();
        let (condition, body) = result?;
        Ok(DslRule {
            kind: RuleKind::Choose {
                var,
                condition,
                body: Box::new(body),
            },
            span: start,
        })
    }

    fn paren_args(&mut self) -> Result<Vec<DslTerm>, ParseError> {
        self.expect(&Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !matches!(self.peek(), Tok::RParen) {
            loop {
                args.push(self.term()?);
                if matches!(self.peek(), Tok::Comma) {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen, "`)`")?;
        Ok(args)
    }

    // Term grammar, loosest first: or < and < not < comparison < + < *.
    fn term(&mut self) -> Result<DslTerm, ParseError> {
        self.or_term()
    }

    fn binop(op: &str, lhs: DslTerm, rhs: DslTerm) -> DslTerm {
        let span = lhs.span;
        DslTerm {
            kind: TermKind::Apply(Arc::from(op), vec![lhs, rhs]),
            span,
        }
    }

    fn or_term(&mut self) -> Result<DslTerm, ParseError> {
        let mut lhs = self.and_term()?;
        while self.at_keyword("or") {
            self.next();
            let rhs = self.and_term()?;
            lhs = Self::binop("or", lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_term(&mut self) -> Result<DslTerm, ParseError> {
        let mut lhs = self.not_term()?;
        while self.at_keyword("and") {
            self.next();
            let rhs = self.not_term()?;
            lhs = Self::binop("and", lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_term(&mut self) -> Result<DslTerm, ParseError> {
        if self.at_keyword("not") {
            let span = self.next().span;
            let inner = self.not_term()?;
            return Ok(DslTerm {
                kind: TermKind::Apply(Arc::from("not"), vec![inner]),
                span,
            });
        }
        self.cmp_term()
    }

    fn cmp_term(&mut self) -> Result<DslTerm, ParseError> {
        let lhs = self.add_term()?;
        let op = match self.peek() {
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Ge => ">=",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Lt => "<",
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.add_term()?;
        Ok(Self::binop(op, lhs, rhs))
    }

    fn add_term(&mut self) -> Result<DslTerm, ParseError> {
        let mut lhs = self.mul_term()?;
        while matches!(self.peek(), Tok::Plus) {
            self.next();
            let rhs = self.mul_term()?;
            lhs = Self::binop("+", lhs, rhs);
        }
        Ok(lhs)
    }

    fn mul_term(&mut self) -> Result<DslTerm, ParseError> {
        let mut lhs = self.atom()?;
        while matches!(self.peek(), Tok::Star) {
            self.next();
            let rhs = self.atom()?;
            lhs = Self::binop("*", lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<DslTerm, ParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(DslTerm {
                    kind: TermKind::Int(n),
                    span,
                })
            }
            Tok::LParen => {
                self.next();
                let t = self.term()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::LBracket => {
                self.next();
                let mut items = Vec::new();
                if !matches!(self.peek(), Tok::RBracket) {
                    loop {
                        items.push(self.term()?);
                        if matches!(self.peek(), Tok::Comma) {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBracket, "`]`")?;
                Ok(DslTerm {
                    kind: TermKind::List(items),
                    span,
                })
            }
            Tok::Ident(s) if s == "true" || s == "false" || s == "undef" => {
                // Not keywords, but reserve the spelling for the logic constants.
                self.next();
                Ok(DslTerm {
                    kind: TermKind::Apply(Arc::from(s.as_str()), Vec::new()),
                    span,
                })
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                let (name, _) = self.ident("term")?;
                if matches!(self.peek(), Tok::LParen) {
                    let args = self.paren_args()?;
                    Ok(DslTerm {
                        kind: TermKind::Apply(name, args),
                        span,
                    })
                } else if self.binders.iter().any(|b| *b == name) {
                    Ok(DslTerm {
                        kind: TermKind::Var(name),
                        span,
                    })
                } else {
                    Ok(DslTerm {
                        kind: TermKind::Apply(name, Vec::new()),
                        span,
                    })
                }
            }
            other => self.error(format!("expected a term, found {}", other.describe())),
        }
    }
}

/// Convenience: parses a single rule (tests and tools).
pub fn parse_rule_text(text: &str) -> Result<DslRule, ParseError> {
    let wrapped = format!("module __one\n{text}\nendmodule\n");
    let def = parse_program(&wrapped)?;
    Ok(def.modules.get("__one").cloned().expect("module present"))
}
