//! Import dialects: how each tool spells variables, parameters and functions.
//!
//! Every dialect shares the infix grammar of [`super::parse`]; a dialect only
//! changes identifier resolution. The file extension selects the dialect
//! (`models.operon` -> Operon). Grammars are documented in `docs/grammar.md`.

use std::path::Path;

use super::{BinOp, UnOp};

/// What a function name desugars to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnSpec {
    Unary(UnOp),
    /// Two-argument call form of a binary operator, e.g. `pow(a, b)`.
    Binary(BinOp),
    /// `x ^ 2`
    Square,
    /// `x ^ 3`
    Cube,
    /// `-1 * x`
    Neg,
    /// `1 / x`
    Inv,
}

impl FnSpec {
    pub fn arity(self) -> usize {
        match self {
            FnSpec::Binary(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct Dialect {
    pub name: &'static str,
    pub extensions: &'static [&'static str],
    /// Variable prefixes; `x` accepts `x3` and `x_3`.
    pub var_prefixes: &'static [&'static str],
    /// Index written for the first column (0 or 1).
    pub var_base: u32,
    pub param_prefixes: &'static [&'static str],
    pub functions: &'static [(&'static str, FnSpec)],
}

const CORE_FUNCTIONS: &[(&str, FnSpec)] = &[
    ("sin", FnSpec::Unary(UnOp::Sin)),
    ("cos", FnSpec::Unary(UnOp::Cos)),
    ("exp", FnSpec::Unary(UnOp::Exp)),
    ("log", FnSpec::Unary(UnOp::Log)),
    ("ln", FnSpec::Unary(UnOp::Log)),
    ("sqrt", FnSpec::Unary(UnOp::Sqrt)),
    ("abs", FnSpec::Unary(UnOp::Abs)),
    ("pow", FnSpec::Binary(BinOp::Pow)),
    ("powabs", FnSpec::Binary(BinOp::PowAbs)),
];

const EXTENDED_FUNCTIONS: &[(&str, FnSpec)] = &[
    ("sin", FnSpec::Unary(UnOp::Sin)),
    ("cos", FnSpec::Unary(UnOp::Cos)),
    ("exp", FnSpec::Unary(UnOp::Exp)),
    ("log", FnSpec::Unary(UnOp::Log)),
    ("ln", FnSpec::Unary(UnOp::Log)),
    ("sqrt", FnSpec::Unary(UnOp::Sqrt)),
    ("abs", FnSpec::Unary(UnOp::Abs)),
    ("pow", FnSpec::Binary(BinOp::Pow)),
    ("powabs", FnSpec::Binary(BinOp::PowAbs)),
    ("square", FnSpec::Square),
    ("cube", FnSpec::Cube),
    ("neg", FnSpec::Neg),
    ("inv", FnSpec::Inv),
];

const PARAMS: &[&str] = &["t", "p", "θ", "theta"];

impl Dialect {
    /// Generic CSV infix: `x0`, `t0`/`p0`/`θ0`, `^`, `**`, `|**|`.
    pub const GENERIC: Dialect = Dialect {
        name: "generic",
        extensions: &["csv"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: CORE_FUNCTIONS,
    };

    /// Operon infix: one-based `X1`, inline literals, caret power.
    pub const OPERON: Dialect = Dialect {
        name: "operon",
        extensions: &["operon"],
        var_prefixes: &["X"],
        var_base: 1,
        param_prefixes: PARAMS,
        functions: EXTENDED_FUNCTIONS,
    };

    pub fn by_name(name: &str) -> Option<&'static Dialect> {
        DIALECTS.iter().copied().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn by_extension(ext: &str) -> Option<&'static Dialect> {
        DIALECTS
            .iter()
            .copied()
            .find(|d| d.extensions.iter().any(|e| e.eq_ignore_ascii_case(ext)))
    }

    /// Dialect for a file path. The flag is `false` when the extension is
    /// unknown and the generic dialect was used as a fallback.
    pub fn for_path(path: &Path) -> (&'static Dialect, bool) {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) => match Dialect::by_extension(ext) {
                Some(d) => (d, true),
                None => (&Dialect::GENERIC, false),
            },
            None => (&Dialect::GENERIC, false),
        }
    }

    pub(crate) fn function(&self, name: &str) -> Option<FnSpec> {
        self.functions
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, f)| *f)
    }

    pub(crate) fn variable(&self, ident: &str) -> Option<u32> {
        let idx = self.var_prefixes.iter().find_map(|p| indexed(ident, p))?;
        idx.checked_sub(self.var_base)
    }

    pub(crate) fn parameter(&self, ident: &str) -> Option<u32> {
        self.param_prefixes.iter().find_map(|p| indexed(ident, p))
    }
}

/// `prefix` followed by an optional `_` and a decimal index.
pub(crate) fn indexed(ident: &str, prefix: &str) -> Option<u32> {
    let rest = ident.strip_prefix(prefix)?;
    let rest = rest.strip_prefix('_').unwrap_or(rest);
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

pub static DIALECTS: &[&Dialect] = &[
    &Dialect::GENERIC,
    &Dialect::OPERON,
    &Dialect {
        name: "pysr",
        extensions: &["pysr"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: EXTENDED_FUNCTIONS,
    },
    &Dialect {
        name: "heuristiclab",
        extensions: &["hl"],
        var_prefixes: &["x", "X"],
        var_base: 0,
        param_prefixes: &["c", "t"],
        functions: EXTENDED_FUNCTIONS,
    },
    &Dialect {
        name: "tir",
        extensions: &["tir"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: CORE_FUNCTIONS,
    },
    &Dialect {
        name: "itea",
        extensions: &["itea"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: CORE_FUNCTIONS,
    },
    &Dialect {
        name: "bingo",
        extensions: &["bingo"],
        var_prefixes: &["X"],
        var_base: 0,
        param_prefixes: &["C", "t"],
        functions: EXTENDED_FUNCTIONS,
    },
    &Dialect {
        name: "gomea",
        extensions: &["gomea"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: EXTENDED_FUNCTIONS,
    },
    &Dialect {
        name: "sbp",
        extensions: &["sbp"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: EXTENDED_FUNCTIONS,
    },
    &Dialect {
        name: "eplex",
        extensions: &["eplex"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: EXTENDED_FUNCTIONS,
    },
    &Dialect {
        name: "feat",
        extensions: &["feat"],
        var_prefixes: &["x"],
        var_base: 0,
        param_prefixes: PARAMS,
        functions: EXTENDED_FUNCTIONS,
    },
];
