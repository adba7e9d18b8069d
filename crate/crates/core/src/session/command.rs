//! The command language.
//!
//! ```text
//! top N [with (size|cost|parameters) CMP INT]... [by fitness|by dl]
//!       [[not] matching [root] PATTERN]
//! report ID | subtrees ID | simplify ID | optimize ID [RESTARTS]
//! insert EXPR
//! pareto [by fitness|by dl]
//! count-pattern PATTERN
//! distribution [with size CMP m] [limited at n] (by count|by fitness)
//!              [with at least x] [from top y]
//! save PATH | load PATH | import PATH [True|False]
//! ```
//!
//! Positions in errors are character offsets into the command line.

use thiserror::Error;

use crate::blocks::{DistOrder, DistributionQuery};
use crate::catalog::{Cmp, Criterion, Field, Filter, FilterAtom, PatternConstraint};
use crate::expr::{parse_expression, parse_pattern, Dialect, Expr, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommandError {
    #[error("position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error(transparent)]
    Expression(#[from] ParseError),
}

impl CommandError {
    pub fn position(&self) -> usize {
        match self {
            CommandError::Syntax { pos, .. } => *pos,
            CommandError::Expression(e) => e.position(),
        }
    }

    fn at(pos: usize, msg: impl Into<String>) -> Self {
        CommandError::Syntax { pos, msg: msg.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopQuery {
    pub n: usize,
    pub filter: Filter,
    pub criterion: Criterion,
    pub pattern: Option<PatternConstraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Top(TopQuery),
    Report(u32),
    Subtrees(u32),
    Simplify(u32),
    Optimize { id: u32, restarts: Option<usize> },
    Insert(Expr),
    Pareto(Criterion),
    CountPattern(crate::expr::Pattern),
    Distribution(DistributionQuery),
    Save(String),
    Load(String),
    Import { path: String, parse_parameters: Option<bool> },
}

impl Command {
    /// Whether the command can change session state.
    pub fn is_mutating(&self) -> bool {
        matches!(
            self,
            Command::Report(_)
                | Command::Subtrees(_)
                | Command::Optimize { .. }
                | Command::Insert(_)
                | Command::Load(_)
                | Command::Import { .. }
        )
    }

    pub fn parse(text: &str) -> Result<Command, CommandError> {
        let mut w = Words::new(text);
        let (pos, head) = w.next().ok_or_else(|| CommandError::at(0, "empty command"))?;
        let cmd = match head {
            "top" => Command::Top(parse_top(&mut w)?),
            "report" => Command::Report(w.id()?),
            "subtrees" => Command::Subtrees(w.id()?),
            "simplify" => Command::Simplify(w.id()?),
            "optimize" => {
                let id = w.id()?;
                let restarts = if w.peek().is_some() {
                    let (p, n) = w.uint("restart count")?;
                    if n == 0 {
                        return Err(CommandError::at(p, "restart count must be positive"));
                    }
                    Some(n)
                } else {
                    None
                };
                Command::Optimize { id, restarts }
            }
            "insert" => {
                let (off, rest) = w.rest("an expression")?;
                let parsed = parse_expression(rest, &Dialect::GENERIC, false).map_err(|e| e.offset(off))?;
                return Ok(Command::Insert(parsed.expr));
            }
            "pareto" => Command::Pareto(if w.peek().is_some() { w.criterion()? } else { Criterion::Fitness }),
            "count-pattern" => {
                let (off, rest) = w.rest("a pattern")?;
                return Ok(Command::CountPattern(parse_pattern(rest).map_err(|e| e.offset(off))?));
            }
            "distribution" => Command::Distribution(parse_distribution(&mut w)?),
            "save" => return Ok(Command::Save(w.rest("a path")?.1.trim().to_string())),
            "load" => return Ok(Command::Load(w.rest("a path")?.1.trim().to_string())),
            "import" => {
                let (_, path) = w.expect_word("a path")?;
                let parse_parameters = match w.next() {
                    None => None,
                    Some((p, flag)) => Some(match flag.to_ascii_lowercase().as_str() {
                        "true" => true,
                        "false" => false,
                        _ => return Err(CommandError::at(p, "expected True or False")),
                    }),
                };
                Command::Import { path: path.to_string(), parse_parameters }
            }
            other => return Err(CommandError::at(pos, format!("unknown command `{other}`"))),
        };
        if let Some((p, extra)) = w.next() {
            return Err(CommandError::at(p, format!("unexpected `{extra}`")));
        }
        Ok(cmd)
    }
}

fn parse_top(w: &mut Words) -> Result<TopQuery, CommandError> {
    let (_, n) = w.uint("a count")?;
    let mut filter = Filter::default();
    let mut criterion = Criterion::Fitness;
    while w.peek() == Some("with") {
        w.next();
        let (p, f) = w.expect_word("size, cost or parameters")?;
        let field = match f {
            "size" => Field::Size,
            "cost" => Field::Cost,
            "parameters" => Field::Parameters,
            _ => return Err(CommandError::at(p, "expected size, cost or parameters")),
        };
        let cmp = w.cmp()?;
        let bound = w.int()?;
        filter.0.push(FilterAtom { field, cmp, bound });
    }
    if w.peek() == Some("by") {
        criterion = w.criterion()?;
    }
    let mut pattern = None;
    if let Some(word) = w.peek() {
        let negated = word == "not";
        if negated {
            w.next();
        }
        let (p, m) = w.expect_word("matching")?;
        if m != "matching" {
            return Err(CommandError::at(p, "expected `matching`"));
        }
        let root_only = w.peek() == Some("root");
        if root_only {
            w.next();
        }
        let (off, rest) = w.rest("a pattern")?;
        let pat = parse_pattern(rest).map_err(|e| e.offset(off))?;
        w.finish();
        pattern = Some(PatternConstraint { pattern: pat, negated, root_only });
    }
    Ok(TopQuery { n, filter, criterion, pattern })
}

fn parse_distribution(w: &mut Words) -> Result<DistributionQuery, CommandError> {
    let mut q = DistributionQuery::default();
    let mut order = None;
    let mut seen = [false; 4];
    let mut once = |slot: usize, p: usize| {
        if std::mem::replace(&mut seen[slot], true) {
            Err(CommandError::at(p, "clause given twice"))
        } else {
            Ok(())
        }
    };
    while let Some((p, word)) = w.next() {
        match word {
            "with" => match w.expect_word("size or at")? {
                (_, "size") => {
                    once(0, p)?;
                    let cmp = w.cmp()?;
                    let (_, m) = w.uint("a size")?;
                    q.size = Some((cmp, m));
                }
                (_, "at") => {
                    once(1, p)?;
                    w.keyword("least")?;
                    q.min_count = w.uint("a count")?.1 as u64;
                }
                (p, _) => return Err(CommandError::at(p, "expected `size` or `at least`")),
            },
            "limited" => {
                once(2, p)?;
                w.keyword("at")?;
                q.limit = Some(w.uint("a limit")?.1);
            }
            "by" => {
                if order.is_some() {
                    return Err(CommandError::at(p, "clause given twice"));
                }
                order = Some(match w.expect_word("count or fitness")? {
                    (_, "count") => DistOrder::Count,
                    (_, "fitness") => DistOrder::Fitness,
                    (p, _) => return Err(CommandError::at(p, "expected count or fitness")),
                });
            }
            "from" => {
                once(3, p)?;
                w.keyword("top")?;
                q.from_top = Some(w.uint("a count")?.1);
            }
            other => return Err(CommandError::at(p, format!("unexpected `{other}`"))),
        }
    }
    q.order = order.ok_or_else(|| CommandError::at(w.end(), "expected `by count` or `by fitness`"))?;
    Ok(q)
}

/// Whitespace-separated words with their character offsets.
struct Words<'a> {
    text: &'a str,
    words: Vec<(usize, usize, &'a str)>,
    i: usize,
}

impl<'a> Words<'a> {
    fn new(text: &'a str) -> Self {
        let mut words = Vec::new();
        let mut start: Option<(usize, usize)> = None;
        for (chars, (b, c)) in text.char_indices().enumerate() {
            if c.is_whitespace() {
                if let Some((cp, bp)) = start.take() {
                    words.push((cp, bp, &text[bp..b]));
                }
            } else if start.is_none() {
                start = Some((chars, b));
            }
        }
        if let Some((cp, bp)) = start {
            words.push((cp, bp, &text[bp..]));
        }
        Words { text, words, i: 0 }
    }

    fn end(&self) -> usize {
        self.text.chars().count()
    }

    fn peek(&self) -> Option<&'a str> {
        self.words.get(self.i).map(|w| w.2)
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let w = self.words.get(self.i)?;
        self.i += 1;
        Some((w.0, w.2))
    }

    fn finish(&mut self) {
        self.i = self.words.len();
    }

    fn expect_word(&mut self, what: &str) -> Result<(usize, &'a str), CommandError> {
        self.next().ok_or_else(|| CommandError::at(self.end(), format!("expected {what}")))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), CommandError> {
        let (p, w) = self.expect_word(&format!("`{kw}`"))?;
        if w != kw {
            return Err(CommandError::at(p, format!("expected `{kw}`")));
        }
        Ok(())
    }

    /// Everything from the next word to the end of the line.
    fn rest(&mut self, what: &str) -> Result<(usize, &'a str), CommandError> {
        let (cp, bp, _) = *self
            .words
            .get(self.i)
            .ok_or_else(|| CommandError::at(self.end(), format!("expected {what}")))?;
        self.finish();
        Ok((cp, &self.text[bp..]))
    }

    fn uint(&mut self, what: &str) -> Result<(usize, usize), CommandError> {
        let (p, w) = self.expect_word(what)?;
        w.parse::<usize>()
            .map(|n| (p, n))
            .map_err(|_| CommandError::at(p, format!("expected {what} (a non-negative integer)")))
    }

    fn int(&mut self) -> Result<i64, CommandError> {
        let (p, w) = self.expect_word("an integer")?;
        w.parse().map_err(|_| CommandError::at(p, "expected an integer"))
    }

    fn id(&mut self) -> Result<u32, CommandError> {
        let (p, w) = self.expect_word("an expression id")?;
        w.parse().map_err(|_| CommandError::at(p, "expected an expression id"))
    }

    fn cmp(&mut self) -> Result<Cmp, CommandError> {
        let (p, w) = self.expect_word("a comparison")?;
        Ok(match w {
            "<" => Cmp::Lt,
            "<=" => Cmp::Le,
            "=" | "==" => Cmp::Eq,
            ">" => Cmp::Gt,
            ">=" => Cmp::Ge,
            _ => return Err(CommandError::at(p, "expected one of < <= = > >=")),
        })
    }

    fn criterion(&mut self) -> Result<Criterion, CommandError> {
        self.keyword("by")?;
        match self.expect_word("fitness or dl")? {
            (_, "fitness") => Ok(Criterion::Fitness),
            (_, "dl") => Ok(Criterion::Dl),
            (p, _) => Err(CommandError::at(p, "expected fitness or dl")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(s: &str) -> Command {
        Command::parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    fn err_at(s: &str) -> usize {
        Command::parse(s).unwrap_err().position()
    }

    #[test]
    fn top_filters() {
        let Command::Top(q) = ok("top 3 with size > 3 with size < 6 with parameters > 1") else { panic!() };
        assert_eq!(q.n, 3);
        assert_eq!(
            q.filter.0,
            vec![
                FilterAtom { field: Field::Size, cmp: Cmp::Gt, bound: 3 },
                FilterAtom { field: Field::Size, cmp: Cmp::Lt, bound: 6 },
                FilterAtom { field: Field::Parameters, cmp: Cmp::Gt, bound: 1 },
            ]
        );
        let Command::Top(q) = ok("top 3 with size < 6 by dl") else { panic!() };
        assert_eq!(q.criterion, Criterion::Dl);
        let Command::Top(q) = ok("top 3 with cost < 10") else { panic!() };
        assert_eq!(q.filter.0[0].field, Field::Cost);
    }

    #[test]
    fn top_matching() {
        let Command::Top(q) = ok("top 3 matching v0 + v0") else { panic!() };
        let p = q.pattern.unwrap();
        assert!(!p.negated && !p.root_only);
        assert_eq!(p.pattern.to_string(), "(v0 + v0)");
        let Command::Top(q) = ok("top 10 by fitness not matching root (v0 + v1)") else { panic!() };
        let p = q.pattern.unwrap();
        assert!(p.negated && p.root_only);
    }

    #[test]
    fn distribution_clauses() {
        let Command::Distribution(q) =
            ok("distribution with size <= 7 limited at 25 by fitness with at least 1000 from top 10000")
        else {
            panic!()
        };
        assert_eq!(q.size, Some((Cmp::Le, 7)));
        assert_eq!(q.limit, Some(25));
        assert_eq!(q.order, DistOrder::Fitness);
        assert_eq!(q.min_count, 1000);
        assert_eq!(q.from_top, Some(10000));
        assert!(Command::parse("distribution with size <= 7").is_err());
    }

    #[test]
    fn other_commands() {
        assert_eq!(ok("report 12"), Command::Report(12));
        assert_eq!(ok("optimize 4"), Command::Optimize { id: 4, restarts: None });
        assert_eq!(ok("optimize 4 10"), Command::Optimize { id: 4, restarts: Some(10) });
        assert_eq!(ok("pareto"), Command::Pareto(Criterion::Fitness));
        assert_eq!(ok("pareto by dl"), Command::Pareto(Criterion::Dl));
        assert_eq!(ok("save /tmp/a b.snap"), Command::Save("/tmp/a b.snap".into()));
        assert_eq!(
            ok("import runs.operon True"),
            Command::Import { path: "runs.operon".into(), parse_parameters: Some(true) }
        );
        assert!(matches!(ok("insert t0 * sqrt(x0) + t0 * x4"), Command::Insert(_)));
        assert!(matches!(ok("count-pattern v0 * x1"), Command::CountPattern(_)));
    }

    #[test]
    fn positioned_errors() {
        assert_eq!(err_at("top -1"), 4);
        assert_eq!(err_at("frobnicate"), 0);
        assert_eq!(err_at("  top 3 with weight < 2"), 13);
        assert_eq!(err_at("top 3 with size << 2"), 16);
        assert_eq!(err_at("top 3 matching v0 + "), 20);
        assert_eq!(err_at("insert x0 + * x1"), 12);
        assert_eq!(err_at("report"), 6);
        assert_eq!(err_at("report 3 4"), 9);
        assert_eq!(err_at("import a.csv maybe"), 13);
        assert_eq!(err_at(""), 0);
    }
}
