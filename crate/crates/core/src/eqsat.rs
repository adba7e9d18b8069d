//! Bounded equality saturation and `simplify`.
//!
//! Each iteration matches every rule against the rebuilt graph, then
//! instantiates all right-hand sides, unions them with their match roots and
//! rebuilds once. Rules never remove information.

use std::fmt;

use thiserror::Error;

use crate::egraph::{EGraph, Id};
use crate::expr::{parse_pattern, Expr, ParseError, Pattern};
use crate::matchdb::{instantiate, match_pattern};

#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Pattern,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("line {line}: expected `lhs => rhs`")]
    MissingArrow { line: usize },
    #[error("line {line}: {source}")]
    Pattern {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("rule `{0}`: right-hand side uses variables not bound on the left")]
    UnboundRhs(String),
    #[error("rule `{0}`: both sides are identical")]
    Trivial(String),
    #[error("rule `{0}`: a bare pattern variable on the left matches everything")]
    BareLhs(String),
}

impl RewriteRule {
    pub fn new(name: impl Into<String>, lhs: Pattern, rhs: Pattern) -> Result<Self, RuleError> {
        let name = name.into();
        if !rhs.holes().is_subset(&lhs.holes()) {
            return Err(RuleError::UnboundRhs(name));
        }
        if lhs == rhs {
            return Err(RuleError::Trivial(name));
        }
        if matches!(lhs, Pattern::Hole(_)) {
            return Err(RuleError::BareLhs(name));
        }
        Ok(RewriteRule { name, lhs, rhs })
    }

    /// Parse `lhs => rhs`.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, RuleError> {
        Self::parse_line(name, text, 1)
    }

    fn parse_line(name: impl Into<String>, text: &str, line: usize) -> Result<Self, RuleError> {
        let (l, r) = text.split_once("=>").ok_or(RuleError::MissingArrow { line })?;
        let lhs = parse_pattern(l).map_err(|source| RuleError::Pattern { line, source })?;
        let rhs = parse_pattern(r).map_err(|source| RuleError::Pattern {
            line,
            source: source.offset(l.chars().count() + 2),
        })?;
        Self::new(name, lhs, rhs)
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => {}", self.lhs, self.rhs)
    }
}

/// Rules from text, one `lhs => rhs` per line. Blank lines and `#` comments
/// are skipped.
pub fn parse_rules(text: &str) -> Result<Vec<RewriteRule>, RuleError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| RewriteRule::parse_line(format!("rule{n}"), l, n))
        .collect()
}

const DEFAULT_RULES: &str = "\
# commutativity (already implied by canonical child order)
v0 + v1 => v1 + v0
v0 * v1 => v1 * v0
# associativity
(v0 + v1) + v2 => v0 + (v1 + v2)
v0 + (v1 + v2) => (v0 + v1) + v2
(v0 * v1) * v2 => v0 * (v1 * v2)
v0 * (v1 * v2) => (v0 * v1) * v2
# distributivity
v0 * (v1 + v2) => v0 * v1 + v0 * v2
v0 * v1 + v0 * v2 => v0 * (v1 + v2)
v0 * (v1 - v2) => v0 * v1 - v0 * v2
v0 * v1 - v0 * v2 => v0 * (v1 - v2)
# identities
v0 + 0 => v0
v0 - 0 => v0
v0 * 1 => v0
v0 / 1 => v0
v0 * 0 => 0
v0 / v0 => 1
v0 - v0 => 0
v0 + v0 => 2 * v0
0 - (0 - v0) => v0
-1 * (-1 * v0) => v0
(v0 / v1) * v2 => v0 * (v2 / v1)
# log / exp / power on their protected domains
log(exp(v0)) => v0
exp(log(v0)) => abs(v0)
log(v0 * v1) => log(v0) + log(v1)
exp(v0 + v1) => exp(v0) * exp(v1)
v0 ^ 1 => v0
v0 |**| 1 => abs(v0)
sqrt(v0 * v0) => abs(v0)
abs(abs(v0)) => abs(v0)
abs(v0 * v1) => abs(v0) * abs(v1)
";

/// The documented default rule set.
pub fn default_rules() -> Vec<RewriteRule> {
    parse_rules(DEFAULT_RULES).expect("built-in rules parse")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_nodes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_iterations: 30,
            max_nodes: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaturationReport {
    pub iterations: usize,
    /// Unions that changed the partition, including congruence repairs.
    pub merges: usize,
    pub saturated: bool,
}

/// Apply `rules` until no union changes the graph or the budget runs out.
pub fn run_saturation(g: &mut EGraph, rules: &[RewriteRule], budget: Budget) -> SaturationReport {
    g.rebuild();
    let mut report = SaturationReport::default();
    if rules.is_empty() {
        report.saturated = true;
        return report;
    }
    while report.iterations < budget.max_iterations {
        if g.node_count() >= budget.max_nodes {
            return report;
        }
        report.iterations += 1;
        let nodes_before = g.node_count();
        let found: Vec<_> = rules.iter().map(|r| (r, match_pattern(g, &r.lhs))).collect();
        let mut changed = 0;
        'apply: for (rule, matches) in found {
            for m in matches {
                let new = instantiate(g, &rule.rhs, &m.subst).expect("rhs variables are bound");
                if g.find(new) != g.find(m.root) {
                    g.union(new, m.root);
                    changed += 1;
                }
                if g.node_count() >= budget.max_nodes {
                    break 'apply;
                }
            }
        }
        changed += g.rebuild();
        g.take_unions();
        report.merges += changed;
        if changed == 0 && g.node_count() == nodes_before {
            report.saturated = true;
            return report;
        }
    }
    report
}

/// Saturate a scratch graph seeded with the cheapest expression of `id` and
/// return the cheapest equivalent found. The source graph is not modified.
pub fn simplify(
    g: &EGraph,
    id: Id,
    rules: &[RewriteRule],
    budget: Budget,
) -> Result<Expr, crate::egraph::EGraphError> {
    let start = g.extract_best(id)?;
    Ok(simplify_expr(&start, rules, budget))
}

/// [`simplify`] for a standalone expression.
pub fn simplify_expr(e: &Expr, rules: &[RewriteRule], budget: Budget) -> Expr {
    let mut scratch = EGraph::new();
    let root = scratch.add_expr(e);
    if budget.max_iterations > 0 {
        run_saturation(&mut scratch, rules, budget);
    }
    scratch.extract_best(root).expect("inserted expressions are extractable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Dialect};

    fn e(s: &str) -> Expr {
        parse_expression(s, &Dialect::GENERIC, false).unwrap().expr
    }

    fn rules(lines: &[&str]) -> Vec<RewriteRule> {
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| RewriteRule::parse(format!("r{i}"), l).unwrap())
            .collect()
    }

    #[test]
    fn rule_validation() {
        assert!(matches!(
            RewriteRule::parse("bad", "v0 + v1 => v2"),
            Err(RuleError::UnboundRhs(_))
        ));
        assert!(matches!(
            RewriteRule::parse("same", "v0 + 0 => v0 + 0"),
            Err(RuleError::Trivial(_))
        ));
        assert!(matches!(
            RewriteRule::parse("arrow", "v0 + 0"),
            Err(RuleError::MissingArrow { .. })
        ));
        let err = parse_rules("v0 => v0 * 1\nv0 + => v0").unwrap_err();
        assert!(matches!(err, RuleError::BareLhs(_)));
        let err = parse_rules("# ok\nv0 + => v0").unwrap_err();
        assert!(matches!(err, RuleError::Pattern { line: 2, .. }));
        assert!(default_rules().len() > 20);
    }

    #[test]
    fn empty_rule_set_is_saturated() {
        let mut g = EGraph::new();
        g.add_expr(&e("x0 + x0"));
        let n = g.node_count();
        let r = run_saturation(&mut g, &[], Budget::default());
        assert!(r.saturated);
        assert_eq!(r.merges, 0);
        assert_eq!(g.node_count(), n);
    }

    #[test]
    fn figure_three_iteration() {
        // (2/x)(x+x) with a + a => 2a and (a/b)c => a(c/b)
        let mut g = EGraph::new();
        let root = g.add_expr(&e("(2 / x0) * (x0 + x0)"));
        let rs = rules(&["v0 + v0 => 2 * v0", "(v0 / v1) * v2 => v0 * (v2 / v1)"]);
        let report = run_saturation(
            &mut g,
            &rs,
            Budget {
                max_iterations: 1,
                max_nodes: 1000,
            },
        );
        assert_eq!(report.iterations, 1);
        let xx = g.lookup_expr(&e("x0 + x0")).unwrap();
        let twox = g.lookup_expr(&e("2 * x0")).unwrap();
        assert_eq!(g.find(xx), g.find(twox));
        let alt = g.lookup_expr(&e("2 * ((x0 + x0) / x0)")).unwrap();
        assert_eq!(g.find(alt), g.find(root));
        assert_eq!(g.class(root).nodes.len(), 2);
    }

    #[test]
    fn identity_rules_collapse_to_variable() {
        let mut g = EGraph::new();
        let root = g.add_expr(&e("(x0 + 0) * 1"));
        let rs = rules(&["v0 + 0 => v0", "v0 * 1 => v0"]);
        let report = run_saturation(&mut g, &rs, Budget::default());
        assert!(report.saturated);
        assert_eq!(g.find(root), g.find(g.lookup_expr(&e("x0")).unwrap()));
        assert_eq!(g.extract_best(root).unwrap(), e("x0"));
    }

    #[test]
    fn simplify_never_increases_cost() {
        let rs = rules(&["v0 + v0 => 2 * v0"]);
        let out = simplify_expr(&e("x0 + x0"), &rs, Budget::default());
        assert!(out.cost() <= e("x0 + x0").cost());

        let start = e("(2 / x0) * (x0 + x0)");
        let out = simplify_expr(&start, &default_rules(), Budget { max_iterations: 6, max_nodes: 50_000 });
        assert!(out.cost() < start.cost(), "{out}");
    }

    #[test]
    fn zero_budget_returns_current_best() {
        let mut g = EGraph::new();
        let id = g.add_expr(&e("x0 * 1"));
        let out = simplify(&g, id, &default_rules(), Budget { max_iterations: 0, max_nodes: 10 }).unwrap();
        assert_eq!(out, e("x0 * 1"));
    }

    #[test]
    fn deterministic_reports() {
        let run = || {
            let mut g = EGraph::new();
            g.add_expr(&e("(x0 + x1) * (x0 + x1) + sin(x0 * 1)"));
            let r = run_saturation(&mut g, &default_rules(), Budget { max_iterations: 4, max_nodes: 20_000 });
            (r, g.node_count(), g.class_count())
        };
        assert_eq!(run(), run());
    }
}
