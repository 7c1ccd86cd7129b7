use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{GoalCall, GoalVerb, Plan, FURNACE};
use crate::counts::ItemCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    UnknownVerb,
    MalformedDict,
    MissingSeparator,
    EmptyPlan,
    BadReturn,
}

/// Parse failure. Lines and columns are 1-based and count characters.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("{line}:{column}: {kind:?}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(u64),
    Punct(char),
    Comment(String),
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, column: usize, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        kind,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            })
        };
        if c == '\n' {
            push(&mut out, Tok::Newline);
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '#' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '\n' {
                j += 1;
            }
            let body: String = chars[i + 1..j].iter().collect();
            push(&mut out, Tok::Comment(body.trim().to_string()));
            col += j - i;
            i = j;
        } else if c == '\'' || c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != c && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != c {
                return Err(err(line, col, ParseErrorKind::MalformedDict, "unterminated string"));
            }
            let body: String = chars[i + 1..j].iter().collect();
            push(&mut out, Tok::Str(body));
            col += j + 1 - i;
            i = j + 1;
        } else if c.is_ascii_digit() {
            let mut j = i;
            let mut value: u64 = 0;
            while j < chars.len() && chars[j].is_ascii_digit() {
                let d = u64::from(chars[j] as u8 - b'0');
                value = value.saturating_mul(10).saturating_add(d);
                j += 1;
            }
            push(&mut out, Tok::Int(value));
            col += j - i;
            i = j;
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            push(&mut out, Tok::Ident(word));
            col += j - i;
            i = j;
        } else if "{}():,;=".contains(c) {
            push(&mut out, Tok::Punct(c));
            i += 1;
            col += 1;
        } else {
            return Err(err(
                line,
                col,
                ParseErrorKind::MissingSeparator,
                format!("unexpected character {c:?}"),
            ));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    /// Skips newlines and comments that sit inside a statement.
    fn skip_trivia(&mut self) {
        while matches!(self.peek().tok, Tok::Newline | Tok::Comment(_)) {
            self.bump();
        }
    }

    fn here_err(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        err(t.line, t.col, kind, message)
    }

    fn expect_punct(&mut self, c: char, what: &str) -> Result<(), ParseError> {
        self.skip_trivia();
        if self.peek().tok == Tok::Punct(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.here_err(ParseErrorKind::MissingSeparator, format!("expected '{c}' {what}")))
        }
    }

    fn at_punct(&mut self, c: char) -> bool {
        self.skip_trivia();
        self.peek().tok == Tok::Punct(c)
    }

    fn dict(&mut self) -> Result<ItemCounts, ParseError> {
        self.skip_trivia();
        if self.peek().tok != Tok::Punct('{') {
            return Err(self.here_err(ParseErrorKind::MalformedDict, "expected an item dict"));
        }
        self.bump();
        let mut counts = ItemCounts::new();
        loop {
            self.skip_trivia();
            if self.peek().tok == Tok::Punct('}') {
                self.bump();
                return Ok(counts);
            }
            let key_tok = self.bump();
            let key = match key_tok.tok {
                Tok::Str(s) | Tok::Ident(s) if !s.is_empty() => s,
                _ => {
                    return Err(err(key_tok.line, key_tok.col, ParseErrorKind::MalformedDict, "expected an item key"))
                }
            };
            if counts.contains(&key) {
                return Err(err(
                    key_tok.line,
                    key_tok.col,
                    ParseErrorKind::MalformedDict,
                    format!("duplicate key '{key}'"),
                ));
            }
            self.skip_trivia();
            if self.peek().tok != Tok::Punct(':') {
                return Err(self.here_err(ParseErrorKind::MalformedDict, "expected ':' after key"));
            }
            self.bump();
            self.skip_trivia();
            let val_tok = self.bump();
            let count = match val_tok.tok {
                Tok::Int(n) if n >= 1 && n <= u64::from(u32::MAX) => n as u32,
                _ => {
                    return Err(err(
                        val_tok.line,
                        val_tok.col,
                        ParseErrorKind::MalformedDict,
                        "expected a positive count",
                    ))
                }
            };
            counts.set(key, count);
            self.skip_trivia();
            match self.peek().tok {
                Tok::Punct(',') => {
                    self.bump();
                }
                Tok::Punct('}') => {}
                _ => return Err(self.here_err(ParseErrorKind::MalformedDict, "expected ',' or '}' in dict")),
            }
        }
    }

    /// `null`, a quoted name, or a bare name.
    fn optional_name(&mut self, role: &str) -> Result<Option<String>, ParseError> {
        self.skip_trivia();
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(ref w) if w == "null" || w == "None" => {
                self.bump();
                Ok(None)
            }
            Tok::Str(s) | Tok::Ident(s) if !s.is_empty() => {
                self.bump();
                Ok(Some(s))
            }
            _ => Err(err(t.line, t.col, ParseErrorKind::MalformedDict, format!("expected {role} name or null"))),
        }
    }

    /// Parses `VERB(...)` with the verb token already consumed.
    fn call_body(&mut self, verb: GoalVerb, verb_tok: &Token) -> Result<GoalCall, ParseError> {
        self.expect_punct('(', "after verb")?;
        let outputs = self.dict()?;
        if outputs.is_empty() {
            return Err(err(verb_tok.line, verb_tok.col, ParseErrorKind::MalformedDict, "goal has no outputs"));
        }
        self.expect_punct(',', "between arguments")?;
        let mut call = GoalCall {
            verb,
            outputs,
            inputs: ItemCounts::new(),
            tool: None,
            station: None,
            comment: String::new(),
        };
        if verb.crafts() {
            self.skip_trivia();
            if self.peek().tok != Tok::Punct('{') {
                return Err(self.here_err(ParseErrorKind::MalformedDict, "craft needs an input dict"));
            }
            call.inputs = self.dict()?;
            if call.inputs.is_empty() {
                return Err(err(verb_tok.line, verb_tok.col, ParseErrorKind::MalformedDict, "craft has no inputs"));
            }
            if self.at_punct(',') {
                self.bump();
                call.station = self.optional_name("station")?;
            }
            if call.station.as_deref() == Some(FURNACE) {
                call.verb = GoalVerb::Smelt;
            }
        } else {
            self.skip_trivia();
            if self.peek().tok == Tok::Punct('{') {
                return Err(self.here_err(ParseErrorKind::MalformedDict, "this verb takes a tool, not inputs"));
            }
            call.tool = self.optional_name("tool")?;
            if verb == GoalVerb::Equip && call.tool.is_some() {
                return Err(self.here_err(ParseErrorKind::MalformedDict, "equip takes null as its second argument"));
            }
        }
        self.expect_punct(')', "to close the call")?;
        Ok(call)
    }

    fn plan(&mut self) -> Result<Plan, ParseError> {
        let mut name = String::from("plan");
        let mut saw_anything = false;
        self.skip_trivia();
        if self.peek().tok == Tok::Ident("def".into()) {
            saw_anything = true;
            self.bump();
            self.skip_trivia();
            let t = self.bump();
            match t.tok {
                Tok::Ident(n) => name = n,
                _ => return Err(err(t.line, t.col, ParseErrorKind::MissingSeparator, "expected plan name")),
            }
            self.expect_punct('(', "after plan name")?;
            let mut depth = 1;
            while depth > 0 {
                match self.peek().tok {
                    Tok::Punct('(') => depth += 1,
                    Tok::Punct(')') => depth -= 1,
                    Tok::Eof => return Err(self.here_err(ParseErrorKind::MissingSeparator, "unclosed header")),
                    _ => {}
                }
                self.bump();
            }
            self.expect_punct(':', "after header")?;
        }

        let mut steps = Vec::new();
        loop {
            self.skip_trivia();
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => {
                    return Err(if saw_anything {
                        err(t.line, t.col, ParseErrorKind::BadReturn, "missing return statement")
                    } else {
                        err(t.line, t.col, ParseErrorKind::EmptyPlan, "plan has no statements")
                    });
                }
                Tok::Ident(w) if w == "return" => {
                    self.bump();
                    let item_tok = self.bump();
                    let item = match item_tok.tok {
                        Tok::Str(s) | Tok::Ident(s) if !s.is_empty() => s,
                        _ => {
                            return Err(err(item_tok.line, item_tok.col, ParseErrorKind::BadReturn, "return needs an item"))
                        }
                    };
                    if self.peek().tok == Tok::Punct(';') {
                        self.bump();
                    }
                    self.skip_trivia();
                    if self.peek().tok != Tok::Eof {
                        return Err(self.here_err(ParseErrorKind::BadReturn, "statement after return"));
                    }
                    return Ok(Plan {
                        name,
                        steps,
                        return_item: item,
                    });
                }
                Tok::Ident(w) => {
                    saw_anything = true;
                    let verb = match GoalVerb::from_keyword(w) {
                        Some(v) => v,
                        None => return Err(err(t.line, t.col, ParseErrorKind::UnknownVerb, format!("unknown verb '{w}'"))),
                    };
                    self.bump();
                    let mut call = self.call_body(verb, &t)?;
                    self.expect_punct(';', "after statement")?;
                    if let Tok::Comment(c) = &self.peek().tok {
                        call.comment = c.clone();
                        self.bump();
                    }
                    steps.push(call);
                }
                _ => {
                    return Err(err(t.line, t.col, ParseErrorKind::MissingSeparator, "expected a statement"));
                }
            }
        }
    }
}

pub fn parse_plan(text: &str) -> Result<Plan, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.plan()
}

/// Parses a single statement such as `mine({'log':3}, null)`; the `;` is optional.
pub fn parse_goal_call(text: &str) -> Result<GoalCall, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.skip_trivia();
    let t = p.peek().clone();
    let verb = match &t.tok {
        Tok::Ident(w) => GoalVerb::from_keyword(w)
            .ok_or_else(|| err(t.line, t.col, ParseErrorKind::UnknownVerb, format!("unknown verb '{w}'")))?,
        Tok::Eof => return Err(err(t.line, t.col, ParseErrorKind::EmptyPlan, "empty goal")),
        _ => return Err(err(t.line, t.col, ParseErrorKind::UnknownVerb, "expected a verb")),
    };
    p.bump();
    let mut call = p.call_body(verb, &t)?;
    if p.at_punct(';') {
        p.bump();
    }
    if let Tok::Comment(c) = &p.peek().tok {
        call.comment = c.clone();
        p.bump();
    }
    p.skip_trivia();
    if p.peek().tok != Tok::Eof {
        return Err(p.here_err(ParseErrorKind::MissingSeparator, "trailing text after goal"));
    }
    Ok(call)
}

/// Pulls the plan program out of a chat reply: the first fenced block if there
/// is one, otherwise the lines from the first `def` through the first `return`.
pub fn extract_plan_text(reply: &str) -> Option<String> {
    if let Some(start) = reply.find("```") {
        let after = &reply[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        let end = body.find("```").unwrap_or(body.len());
        let block = &body[..end];
        return (!block.trim().is_empty()).then(|| block.to_string());
    }
    let lines: Vec<&str> = reply.lines().collect();
    let first = lines.iter().position(|l| l.trim_start().starts_with("def "))?;
    let last = lines[first..]
        .iter()
        .position(|l| l.trim_start().starts_with("return"))
        .map(|i| first + i)?;
    let mut out = lines[first..=last].join("\n");
    out.push('\n');
    Some(out)
}
