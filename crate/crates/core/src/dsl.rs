//! A small, total expression language for projection strategies.
//!
//! ```text
//! program  := stmt (";" stmt)* ;
//! stmt     := "window" ("all"|"exclude_first")
//!           | "translate" anchor | "mirror" anchor
//!           | "scale" ("range_max"|"norm_max"|"sqrt_norm_max"|"const" NUMBER)
//!           | "map" ("tanh"|"expm1"|"identity"|"radial_expm1")
//!           | "add" (NUMBER NUMBER | anchor) | "clip_unit" ;
//! anchor   := "min"|"max"|"mid"|"centroid"|"first"|"last"|"depot" ;
//! ```
//!
//! Evaluation semantics:
//!
//! * `window` selects the rows statistics are taken over (default `all`).
//! * Anchors (`min`, `max`, `mid`, `centroid` over the window; `first` and
//!   `depot` = row 0; `last` = final row) and `range_max` are measured on
//!   the *input* coordinates, so they do not drift as steps are applied.
//! * `norm_max` / `sqrt_norm_max` are measured on the *current* rows: the
//!   largest distance from the origin over the window (or its square root).
//! * `translate a`: `s - a`; `mirror a`: `a - s`; `scale x`: divide by `x`
//!   (zero guarded to 1); `add`: `s + a`; `clip_unit`: clamp to `[0, 1]`.
//! * `map radial_expm1` rescales each row `v` to length `e^|v| - 1`.
//!
//! Every intermediate value is kept finite (NaN becomes 0, infinities
//! saturate), so any parsed program is safe to evaluate.
//!
//! Built-in projections as programs:
//!
//! | strategy | program |
//! |---|---|
//! | seed    | `window exclude_first; translate min; scale range_max; clip_unit` |
//! | tsp1k   | `window exclude_first; mirror max; scale range_max; add max; clip_unit` |
//! | tsp5k   | `window exclude_first; translate min; map tanh; scale range_max; clip_unit` |
//! | tsp10k  | `window exclude_first; translate mid; scale range_max; add 0.5 0.5; clip_unit` |
//! | cvrp1k  | `translate depot; scale norm_max; add depot` |
//! | cvrp5k  | `translate depot; scale sqrt_norm_max; add depot` |
//! | cvrp10k | `translate depot; map radial_expm1; scale norm_max; add depot` |
//!
//! The cvrp10k program normalises directions exactly rather than through
//! the `|v| + 1e-6` guard, so it agrees with the built-in up to that guard.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point, Window, WindowStats};
use crate::projection::{clip01, Builtin};

/// Grammar summary handed to external program generators.
pub const GRAMMAR: &str = r#"program  := stmt (";" stmt)*
stmt     := "window" ("all"|"exclude_first")
          | "translate" anchor | "mirror" anchor
          | "scale" ("range_max"|"norm_max"|"sqrt_norm_max"|"const" NUMBER)
          | "map" ("tanh"|"expm1"|"identity"|"radial_expm1")
          | "add" (NUMBER NUMBER | anchor) | "clip_unit"
anchor   := "min"|"max"|"mid"|"centroid"|"first"|"last"|"depot"
"#;

pub const SEED_SOURCE: &str = "window exclude_first; translate min; scale range_max; clip_unit";
pub const TSP1K_SOURCE: &str =
    "window exclude_first; mirror max; scale range_max; add max; clip_unit";
pub const TSP5K_SOURCE: &str =
    "window exclude_first; translate min; map tanh; scale range_max; clip_unit";
pub const TSP10K_SOURCE: &str =
    "window exclude_first; translate mid; scale range_max; add 0.5 0.5; clip_unit";
pub const CVRP1K_SOURCE: &str = "translate depot; scale norm_max; add depot";
pub const CVRP5K_SOURCE: &str = "translate depot; scale sqrt_norm_max; add depot";
pub const CVRP10K_SOURCE: &str = "translate depot; map radial_expm1; scale norm_max; add depot";

/// DSL text of a built-in projection, where one exists.
pub fn builtin_source(b: Builtin) -> Option<&'static str> {
    match b {
        Builtin::Identity => Some(""),
        Builtin::Seed => Some(SEED_SOURCE),
        Builtin::Tsp1k => Some(TSP1K_SOURCE),
        Builtin::Tsp5k => Some(TSP5K_SOURCE),
        Builtin::Tsp10k => Some(TSP10K_SOURCE),
        Builtin::Cvrp1k => Some(CVRP1K_SOURCE),
        Builtin::Cvrp5k => Some(CVRP5K_SOURCE),
        Builtin::Cvrp10k => Some(CVRP10K_SOURCE),
        Builtin::Cvrp10kVerbatim => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Min,
    Max,
    Mid,
    Centroid,
    First,
    Last,
    Depot,
}

impl Anchor {
    const ALL: [Anchor; 7] = [
        Anchor::Min,
        Anchor::Max,
        Anchor::Mid,
        Anchor::Centroid,
        Anchor::First,
        Anchor::Last,
        Anchor::Depot,
    ];

    fn keyword(self) -> &'static str {
        match self {
            Anchor::Min => "min",
            Anchor::Max => "max",
            Anchor::Mid => "mid",
            Anchor::Centroid => "centroid",
            Anchor::First => "first",
            Anchor::Last => "last",
            Anchor::Depot => "depot",
        }
    }

    fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.keyword() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleBy {
    RangeMax,
    NormMax,
    SqrtNormMax,
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFn {
    Tanh,
    Expm1,
    Identity,
    RadialExpm1,
}

impl MapFn {
    const ALL: [MapFn; 4] = [MapFn::Tanh, MapFn::Expm1, MapFn::Identity, MapFn::RadialExpm1];

    fn keyword(self) -> &'static str {
        match self {
            MapFn::Tanh => "tanh",
            MapFn::Expm1 => "expm1",
            MapFn::Identity => "identity",
            MapFn::RadialExpm1 => "radial_expm1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offset {
    Const(f64, f64),
    Anchor(Anchor),
}

/// One transform step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Window(Window),
    Translate(Anchor),
    Mirror(Anchor),
    Scale(ScaleBy),
    Map(MapFn),
    Add(Offset),
    ClipUnit,
}

impl Step {
    fn validate(&self) -> core::result::Result<(), &'static str> {
        match *self {
            Step::Scale(ScaleBy::Const(c)) if !c.is_finite() => Err("non-finite literal"),
            Step::Scale(ScaleBy::Const(0.0)) => Err("const scale must be nonzero"),
            Step::Add(Offset::Const(a, b)) if !(a.is_finite() && b.is_finite()) => {
                Err("non-finite literal")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Window(Window::All) => f.write_str("window all"),
            Step::Window(Window::ExcludeFirst) => f.write_str("window exclude_first"),
            Step::Translate(a) => write!(f, "translate {}", a.keyword()),
            Step::Mirror(a) => write!(f, "mirror {}", a.keyword()),
            Step::Scale(ScaleBy::RangeMax) => f.write_str("scale range_max"),
            Step::Scale(ScaleBy::NormMax) => f.write_str("scale norm_max"),
            Step::Scale(ScaleBy::SqrtNormMax) => f.write_str("scale sqrt_norm_max"),
            Step::Scale(ScaleBy::Const(c)) => write!(f, "scale const {c}"),
            Step::Map(m) => write!(f, "map {}", m.keyword()),
            Step::Add(Offset::Const(a, b)) => write!(f, "add {a} {b}"),
            Step::Add(Offset::Anchor(a)) => write!(f, "add {}", a.keyword()),
            Step::ClipUnit => f.write_str("clip_unit"),
        }
    }
}

/// A parsed strategy program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DslProgram {
    steps: Vec<Step>,
    pub description: String,
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// Splits source into statements of tokens, tracking 1-based positions.
fn tokenize(source: &str) -> Vec<Vec<Token<'_>>> {
    let mut stmts: Vec<Vec<Token<'_>>> = alloc::vec![Vec::new()];
    let (mut line, mut col) = (1, 1);
    let mut start: Option<(usize, usize, usize)> = None;
    for (i, ch) in source.char_indices() {
        if ch == ';' || ch.is_whitespace() {
            if let Some((s, l, c)) = start.take() {
                stmts.last_mut().unwrap().push(Token {
                    text: &source[s..i],
                    line: l,
                    col: c,
                });
            }
            if ch == ';' {
                stmts.push(Vec::new());
            }
        } else if start.is_none() {
            start = Some((i, line, col));
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    if let Some((s, l, c)) = start {
        stmts.last_mut().unwrap().push(Token {
            text: &source[s..],
            line: l,
            col: c,
        });
    }
    stmts
}

fn parse_number(tok: &Token<'_>) -> Result<f64> {
    let v: f64 = tok
        .text
        .parse()
        .map_err(|_| parse_err(tok.line, tok.col, format!("invalid number `{}`", tok.text)))?;
    if !v.is_finite() {
        return Err(parse_err(tok.line, tok.col, format!("non-finite literal `{}`", tok.text)));
    }
    Ok(v)
}

fn parse_anchor(tok: &Token<'_>) -> Result<Anchor> {
    Anchor::from_keyword(&tok.text.to_ascii_lowercase())
        .ok_or_else(|| parse_err(tok.line, tok.col, format!("unknown anchor `{}`", tok.text)))
}

fn parse_stmt(toks: &[Token<'_>]) -> Result<Step> {
    let head = &toks[0];
    let op = head.text.to_ascii_lowercase();
    let args = &toks[1..];
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            let at = args.get(n).unwrap_or(head);
            Err(parse_err(
                at.line,
                at.col,
                format!("`{op}` expects {n} argument(s), found {}", args.len()),
            ))
        }
    };
    let step = match op.as_str() {
        "window" => {
            arity(1)?;
            match args[0].text.to_ascii_lowercase().as_str() {
                "all" => Step::Window(Window::All),
                "exclude_first" => Step::Window(Window::ExcludeFirst),
                other => {
                    return Err(parse_err(args[0].line, args[0].col, format!("unknown window `{other}`")))
                }
            }
        }
        "translate" => {
            arity(1)?;
            Step::Translate(parse_anchor(&args[0])?)
        }
        "mirror" => {
            arity(1)?;
            Step::Mirror(parse_anchor(&args[0])?)
        }
        "scale" => {
            let Some(kind) = args.first() else {
                return Err(parse_err(head.line, head.col, "`scale` expects an argument"));
            };
            match kind.text.to_ascii_lowercase().as_str() {
                "const" => {
                    if args.len() != 2 {
                        let at = args.get(2).unwrap_or(kind);
                        return Err(parse_err(
                            at.line,
                            at.col,
                            format!("`scale const` expects 1 number, found {}", args.len() - 1),
                        ));
                    }
                    let c = parse_number(&args[1])?;
                    if c == 0.0 {
                        return Err(parse_err(args[1].line, args[1].col, "const scale must be nonzero"));
                    }
                    Step::Scale(ScaleBy::Const(c))
                }
                other => {
                    arity(1)?;
                    Step::Scale(match other {
                        "range_max" => ScaleBy::RangeMax,
                        "norm_max" => ScaleBy::NormMax,
                        "sqrt_norm_max" => ScaleBy::SqrtNormMax,
                        _ => {
                            return Err(parse_err(kind.line, kind.col, format!("unknown scale `{other}`")))
                        }
                    })
                }
            }
        }
        "map" => {
            arity(1)?;
            let name = args[0].text.to_ascii_lowercase();
            Step::Map(
                MapFn::ALL
                    .into_iter()
                    .find(|m| m.keyword() == name)
                    .ok_or_else(|| parse_err(args[0].line, args[0].col, format!("unknown map `{name}`")))?,
            )
        }
        "add" => match args.len() {
            1 => Step::Add(Offset::Anchor(parse_anchor(&args[0])?)),
            2 => Step::Add(Offset::Const(parse_number(&args[0])?, parse_number(&args[1])?)),
            n => {
                let at = args.get(2).unwrap_or(head);
                return Err(parse_err(
                    at.line,
                    at.col,
                    format!("`add` expects an anchor or 2 numbers, found {n} argument(s)"),
                ));
            }
        },
        "clip_unit" => {
            arity(0)?;
            Step::ClipUnit
        }
        _ => return Err(parse_err(head.line, head.col, format!("unknown op `{}`", head.text))),
    };
    Ok(step)
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-f64::MAX, f64::MAX)
    }
}

fn guard(d: f64) -> f64 {
    if d > 0.0 && d.is_finite() {
        d
    } else {
        1.0
    }
}

impl DslProgram {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        for s in &steps {
            s.validate()
                .map_err(|m| Error::InvalidConfig(format!("invalid step `{s}`: {m}")))?;
        }
        Ok(Self {
            steps,
            description: String::new(),
        })
    }

    pub fn parse(source: &str) -> Result<Self> {
        let stmts = tokenize(source);
        let steps = stmts
            .iter()
            .filter(|toks| !toks.is_empty())
            .map(|toks| parse_stmt(toks))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            steps,
            description: String::new(),
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Canonical text: lowercase, `"; "`-separated, single-space tokens.
    pub fn source(&self) -> String {
        self.to_string()
    }

    pub fn is_valid(&self) -> bool {
        self.steps.iter().all(|s| s.validate().is_ok())
    }

    /// Applies the program to a subgraph `[anchor | candidates | last]`.
    pub fn eval(&self, input: &[Point]) -> Vec<Point> {
        let n = input.len();
        if n == 0 {
            return Vec::new();
        }
        let mut cur = input.to_vec();
        let mut window = Window::All;
        let mut stats: Option<(Window, WindowStats)> = None;
        let mut input_stats = |w: Window| -> WindowStats {
            match stats {
                Some((sw, st)) if sw == w => st,
                _ => {
                    let st = WindowStats::compute(input, w.rows(n)).expect("window is nonempty");
                    stats = Some((w, st));
                    st
                }
            }
        };
        for step in &self.steps {
            match *step {
                Step::Window(w) => window = w,
                Step::Translate(a) => {
                    let p = anchor_point(a, input, input_stats(window));
                    cur.iter_mut().for_each(|s| *s = Point::new(s.x - p.x, s.y - p.y));
                }
                Step::Mirror(a) => {
                    let p = anchor_point(a, input, input_stats(window));
                    cur.iter_mut().for_each(|s| *s = Point::new(p.x - s.x, p.y - s.y));
                }
                Step::Scale(by) => {
                    let d = match by {
                        ScaleBy::RangeMax => input_stats(window).guarded_range(),
                        ScaleBy::NormMax => guard(max_norm(&cur, window)),
                        ScaleBy::SqrtNormMax => guard(libm::sqrt(max_norm(&cur, window))),
                        ScaleBy::Const(c) => c,
                    };
                    cur.iter_mut().for_each(|s| *s = Point::new(s.x / d, s.y / d));
                }
                Step::Map(MapFn::Identity) => {}
                Step::Map(MapFn::Tanh) => cur
                    .iter_mut()
                    .for_each(|s| *s = Point::new(libm::tanh(s.x), libm::tanh(s.y))),
                Step::Map(MapFn::Expm1) => cur
                    .iter_mut()
                    .for_each(|s| *s = Point::new(libm::expm1(s.x), libm::expm1(s.y))),
                Step::Map(MapFn::RadialExpm1) => cur.iter_mut().for_each(|s| {
                    let r = s.norm();
                    *s = if r > 0.0 && r.is_finite() {
                        let f = libm::expm1(r) / r;
                        Point::new(s.x * f, s.y * f)
                    } else {
                        Point::default()
                    };
                }),
                Step::Add(off) => {
                    let p = match off {
                        Offset::Const(a, b) => Point::new(a, b),
                        Offset::Anchor(a) => anchor_point(a, input, input_stats(window)),
                    };
                    cur.iter_mut().for_each(|s| *s = Point::new(s.x + p.x, s.y + p.y));
                }
                Step::ClipUnit => cur
                    .iter_mut()
                    .for_each(|s| *s = Point::new(clip01(s.x), clip01(s.y))),
            }
            cur.iter_mut()
                .for_each(|s| *s = Point::new(sanitize(s.x), sanitize(s.y)));
        }
        cur
    }
}

fn anchor_point(a: Anchor, input: &[Point], st: WindowStats) -> Point {
    match a {
        Anchor::Min => st.min,
        Anchor::Max => st.max,
        Anchor::Mid => st.mid(),
        Anchor::Centroid => st.centroid,
        Anchor::First | Anchor::Depot => input[0],
        Anchor::Last => input[input.len() - 1],
    }
}

fn max_norm(cur: &[Point], window: Window) -> f64 {
    cur[window.rows(cur.len())]
        .iter()
        .map(Point::norm)
        .fold(0.0, f64::max)
}

impl fmt::Display for DslProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for DslProgram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn random_anchor(rng: &mut impl Rng) -> Anchor {
    Anchor::ALL[rng.random_range(0..Anchor::ALL.len())]
}

/// Any syntactically valid step.
pub fn random_step(rng: &mut impl Rng) -> Step {
    match rng.random_range(0..7) {
        0 => Step::Window(if rng.random_bool(0.5) {
            Window::All
        } else {
            Window::ExcludeFirst
        }),
        1 => Step::Translate(random_anchor(rng)),
        2 => Step::Mirror(random_anchor(rng)),
        3 => Step::Scale(match rng.random_range(0..4) {
            0 => ScaleBy::RangeMax,
            1 => ScaleBy::NormMax,
            2 => ScaleBy::SqrtNormMax,
            _ => ScaleBy::Const(rng.random_range(0.25..4.0)),
        }),
        4 => Step::Map(MapFn::ALL[rng.random_range(0..MapFn::ALL.len())]),
        5 => Step::Add(if rng.random_bool(0.5) {
            Offset::Const(rng.random_range(-0.5..1.0), rng.random_range(-0.5..1.0))
        } else {
            Offset::Anchor(random_anchor(rng))
        }),
        _ => Step::ClipUnit,
    }
}

/// An unstructured program of up to `max_len` random steps.
pub fn random_program(rng: &mut impl Rng, max_len: usize) -> DslProgram {
    let len = rng.random_range(0..=max_len);
    DslProgram {
        steps: (0..len).map(|_| random_step(rng)).collect(),
        description: String::new(),
    }
}

/// A normalisation-shaped program: optional window, a re-anchoring, an
/// optional nonlinearity, a scale, an optional offset and usually a clip.
pub fn fresh_program(rng: &mut impl Rng) -> DslProgram {
    let mut steps = Vec::new();
    if rng.random_bool(0.7) {
        steps.push(Step::Window(Window::ExcludeFirst));
    }
    let anchor = random_anchor(rng);
    steps.push(if rng.random_bool(0.75) {
        Step::Translate(anchor)
    } else {
        Step::Mirror(anchor)
    });
    let map = rng.random_bool(0.35).then(|| MapFn::ALL[rng.random_range(0..MapFn::ALL.len())]);
    let scale = match rng.random_range(0..5) {
        0 | 1 => ScaleBy::RangeMax,
        2 => ScaleBy::NormMax,
        3 => ScaleBy::SqrtNormMax,
        _ => ScaleBy::Const(rng.random_range(0.25..4.0)),
    };
    if let Some(m) = map {
        if rng.random_bool(0.5) {
            steps.push(Step::Map(m));
            steps.push(Step::Scale(scale));
        } else {
            steps.push(Step::Scale(scale));
            steps.push(Step::Map(m));
        }
    } else {
        steps.push(Step::Scale(scale));
    }
    if rng.random_bool(0.4) {
        steps.push(Step::Add(if rng.random_bool(0.5) {
            let c = rng.random_range(0.0..0.6);
            Offset::Const(c, c)
        } else {
            Offset::Anchor(random_anchor(rng))
        }));
    }
    if rng.random_bool(0.85) {
        steps.push(Step::ClipUnit);
    }
    DslProgram {
        steps,
        description: String::from("fresh normalisation program"),
    }
}

/// Program-level variation operators used by the deterministic generator.
#[derive(Debug, Clone, Copy)]
pub enum Mutation<'a> {
    /// An unrelated new program.
    Fresh,
    /// One-point crossover with another program.
    Crossover(&'a DslProgram),
    /// Swap one step for a random one.
    ReplaceStep,
    /// Multiply each constant by a factor in `[0.5, 2]`.
    PerturbConsts,
}

const MUTATION_RETRIES: usize = 16;

/// Applies `op` to `program`, deterministically for a given `seed`.
/// Drafts that fail validation are redrawn; after the retry bound the
/// identity program is returned.
pub fn mutate(program: &DslProgram, op: Mutation<'_>, seed: u64) -> DslProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MUTATION_RETRIES {
        let draft = match op {
            Mutation::Fresh => fresh_program(&mut rng),
            Mutation::Crossover(other) => crossover(program, other, &mut rng),
            Mutation::ReplaceStep => replace_step(program, &mut rng),
            Mutation::PerturbConsts => perturb_consts(program, &mut rng),
        };
        if draft.is_valid() {
            return draft;
        }
    }
    DslProgram::default().with_description("identity")
}

fn crossover(a: &DslProgram, b: &DslProgram, rng: &mut impl Rng) -> DslProgram {
    let i = rng.random_range(0..=a.steps.len());
    let j = rng.random_range(0..=b.steps.len());
    let mut steps = a.steps[..i].to_vec();
    steps.extend_from_slice(&b.steps[j..]);
    DslProgram {
        steps,
        description: String::from("prefix of one parent joined with the suffix of another"),
    }
}

fn replace_step(p: &DslProgram, rng: &mut impl Rng) -> DslProgram {
    let mut steps = p.steps.clone();
    if steps.is_empty() {
        steps.push(random_step(rng));
    } else {
        let at = rng.random_range(0..steps.len());
        let old = steps[at];
        let mut new = random_step(rng);
        for _ in 0..8 {
            if new != old {
                break;
            }
            new = random_step(rng);
        }
        steps[at] = new;
    }
    DslProgram {
        steps,
        description: String::from("parent with one step replaced"),
    }
}

fn perturb_consts(p: &DslProgram, rng: &mut impl Rng) -> DslProgram {
    let mut steps = p.steps.clone();
    let has_const = steps.iter().any(|s| {
        matches!(s, Step::Scale(ScaleBy::Const(_)) | Step::Add(Offset::Const(..)))
    });
    if !has_const {
        // Nothing to tune: insert a neutral scale ahead of a trailing clip.
        let at = match steps.last() {
            Some(Step::ClipUnit) => steps.len() - 1,
            _ => steps.len(),
        };
        steps.insert(at, Step::Scale(ScaleBy::Const(1.0)));
    }
    let mut factor = || rng.random_range(0.5..=2.0);
    for s in steps.iter_mut() {
        match s {
            Step::Scale(ScaleBy::Const(c)) => *c *= factor(),
            Step::Add(Offset::Const(a, b)) => {
                *a *= factor();
                *b *= factor();
            }
            _ => {}
        }
    }
    DslProgram {
        steps,
        description: String::from("parent with perturbed constants"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{project_seed_tsp, project_tsp1k};
    use alloc::vec;

    #[test]
    fn parses_seed_program() {
        let p = DslProgram::parse("window exclude_first; translate min; scale range_max; clip_unit").unwrap();
        assert_eq!(p.steps().len(), 4);
        assert_eq!(p.source(), SEED_SOURCE);
    }

    #[test]
    fn canonicalises_case_and_spacing() {
        let p = DslProgram::parse("  WINDOW   exclude_first ;\n translate MIN;scale const 2.50;").unwrap();
        assert_eq!(p.source(), "window exclude_first; translate min; scale const 2.5");
    }

    #[test]
    fn parse_errors() {
        let err = |s: &str| match DslProgram::parse(s) {
            Err(Error::Parse { line, col, msg }) => (line, col, msg),
            other => panic!("expected parse error for {s:?}, got {other:?}"),
        };
        assert!(err("scale const 0").2.contains("const scale must be nonzero"));
        assert_eq!(err("translate min; frobnicate").0, 1);
        assert_eq!(err("translate min; frobnicate").1, 16);
        assert!(err("translate").2.contains("expects 1"));
        assert!(err("clip_unit now").2.contains("expects 0"));
        assert!(err("add 1").2.contains("unknown anchor"));
        assert!(err("add 1 2 3").2.contains("expects an anchor or 2"));
        assert!(err("scale const inf").2.contains("non-finite"));
        assert!(err("scale const 1e999").2.contains("non-finite"));
        assert!(err("scale const NaN").2.contains("non-finite"));
        assert!(err("scale wide").2.contains("unknown scale"));
        let (line, col, _) = err("window all;\n  map sinh");
        assert_eq!((line, col), (2, 7));
    }

    #[test]
    fn empty_program_is_identity() {
        let p = DslProgram::parse("").unwrap();
        let c = vec![Point::new(3.0, -2.0), Point::new(1e5, 7.0)];
        assert_eq!(p.eval(&c), c);
        assert_eq!(p.source(), "");
    }

    #[test]
    fn builtin_equivalence_smoke() {
        let c = vec![
            Point::new(3.0, 3.0),
            Point::new(2.0, 2.0),
            Point::new(4.0, 6.0),
            Point::new(6.0, 4.0),
        ];
        assert_eq!(DslProgram::parse(SEED_SOURCE).unwrap().eval(&c), project_seed_tsp(&c));
        assert_eq!(DslProgram::parse(TSP1K_SOURCE).unwrap().eval(&c), project_tsp1k(&c));
    }

    #[test]
    fn eval_stays_finite_on_overflow() {
        let p = DslProgram::parse("translate first; map expm1; map expm1; scale const 0.0000001; mirror max").unwrap();
        let c = vec![Point::new(-800.0, 900.0), Point::new(1000.0, -1000.0), Point::new(0.0, 0.0)];
        assert!(p.eval(&c).iter().all(Point::is_finite));
    }

    #[test]
    fn mutate_is_deterministic() {
        let base = DslProgram::parse(SEED_SOURCE).unwrap();
        assert_eq!(mutate(&base, Mutation::Fresh, 7), mutate(&base, Mutation::Fresh, 7));
    }

    #[test]
    fn self_crossover_is_closed() {
        let p = DslProgram::parse(TSP10K_SOURCE).unwrap();
        for seed in 0..50 {
            let c = mutate(&p, Mutation::Crossover(&p), seed);
            assert!(c.steps().iter().all(|s| p.steps().contains(s)));
        }
    }

    #[test]
    fn perturb_bounds() {
        let p = DslProgram::parse("scale const 2").unwrap();
        for seed in 0..200 {
            let q = mutate(&p, Mutation::PerturbConsts, seed);
            match q.steps() {
                [Step::Scale(ScaleBy::Const(c))] => assert!((1.0..=4.0).contains(c), "{c}"),
                other => panic!("{other:?}"),
            }
        }
        // Constant-free programs get a tunable scale before the clip.
        let seed = DslProgram::parse(SEED_SOURCE).unwrap();
        let q = mutate(&seed, Mutation::PerturbConsts, 3);
        assert_eq!(q.steps().len(), 5);
        assert_eq!(q.steps()[4], Step::ClipUnit);
        assert!(matches!(q.steps()[3], Step::Scale(ScaleBy::Const(c)) if (0.5..=2.0).contains(&c)));
    }

    #[test]
    fn replace_step_changes_one_step() {
        let p = DslProgram::parse(TSP5K_SOURCE).unwrap();
        for seed in 0..50 {
            let q = mutate(&p, Mutation::ReplaceStep, seed);
            assert_eq!(q.steps().len(), p.steps().len());
            let diff = p.steps().iter().zip(q.steps()).filter(|(a, b)| a != b).count();
            assert!(diff <= 1);
        }
    }
}
