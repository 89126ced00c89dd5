//! Slow functions: smooth real functions of the reduced time `s ∈ [0, 1]`.
//!
//! A [`SlowFn`] is an immutable, shareable expression DAG with symbolic
//! differentiation, compiled evaluation tapes and cached sup-norms. Quotients
//! and square roots carry a certified positive lower bound on the magnitude of
//! their denominator (resp. argument), established at construction.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Number of sample intervals used by norm searches before golden refinement.
const NORM_GRID: usize = 2048;
/// Number of samples used to certify that a denominator does not vanish.
const CERT_GRID: usize = 10_000;
/// Slack accepted on `s` outside `[0, 1]` before a domain error is raised.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlowFnError {
    #[error("reduced time {0} lies outside [0, 1]")]
    Domain(f64),
    #[error("denominator is not certified nonvanishing (min |g| ~ {min_abs:.3e} near s = {at:.6})")]
    Vanishing { min_abs: f64, at: f64 },
    #[error("square-root argument is not certified positive (min ~ {min:.3e} near s = {at:.6})")]
    NonPositive { min: f64, at: f64 },
    #[error("cannot parse expression: {0}")]
    Parse(String),
}

#[derive(Debug)]
enum Expr {
    Const(f64),
    Var,
    Sin(SlowFn),
    Cos(SlowFn),
    Add(SlowFn, SlowFn),
    Mul(SlowFn, SlowFn),
    Scale(f64, SlowFn),
    Div(SlowFn, SlowFn, f64),
    Sqrt(SlowFn, f64),
}

#[derive(Debug)]
struct Node {
    expr: Expr,
    deriv: OnceLock<SlowFn>,
    tape: OnceLock<Tape>,
    norm: OnceLock<f64>,
}

/// A smooth function on `[0, 1]`, cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct SlowFn(Arc<Node>);

impl fmt::Debug for SlowFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlowFn({self})")
    }
}

impl SlowFn {
    fn from_expr(expr: Expr) -> Self {
        SlowFn(Arc::new(Node {
            expr,
            deriv: OnceLock::new(),
            tape: OnceLock::new(),
            norm: OnceLock::new(),
        }))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_expr(Expr::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The reduced-time variable `s`.
    pub fn var() -> Self {
        Self::from_expr(Expr::Var)
    }

    /// Returns the value if this function is a literal constant.
    pub fn as_const(&self) -> Option<f64> {
        match self.0.expr {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn ptr_eq(&self, other: &SlowFn) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn sin(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.sin()),
            None => Self::from_expr(Expr::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.cos()),
            None => Self::from_expr(Expr::Cos(self.clone())),
        }
    }

    pub fn add(&self, other: &SlowFn) -> Self {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Self::constant(a + b),
            (Some(a), _) if a == 0.0 => other.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::from_expr(Expr::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &SlowFn) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &SlowFn) -> Self {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Self::constant(a * b),
            (Some(a), _) => other.scale(a),
            (_, Some(b)) => self.scale(b),
            _ => Self::from_expr(Expr::Mul(self.clone(), other.clone())),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 1.0 {
            return self.clone();
        }
        if k == 0.0 {
            return Self::zero();
        }
        match &self.0.expr {
            Expr::Const(c) => Self::constant(k * c),
            Expr::Scale(c, f) => f.scale(k * c),
            _ => Self::from_expr(Expr::Scale(k, self.clone())),
        }
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, n: u32) -> Self {
        match n {
            0 => Self::one(),
            1 => self.clone(),
            _ => {
                let half = self.powi(n / 2);
                let sq = half.mul(&half);
                if n % 2 == 1 {
                    sq.mul(self)
                } else {
                    sq
                }
            }
        }
    }

    /// Quotient `self / den`, certifying that `den` does not vanish on `[0, 1]`.
    pub fn div(&self, den: &SlowFn) -> Result<Self, SlowFnError> {
        if let Some(c) = den.as_const() {
            if c == 0.0 {
                return Err(SlowFnError::Vanishing { min_abs: 0.0, at: 0.0 });
            }
            return Ok(self.scale(1.0 / c));
        }
        let bound = certify_nonvanishing(den)?;
        Ok(self.div_certified(den, bound))
    }

    /// Quotient with a caller-supplied lower bound on `|den|`.
    pub(crate) fn div_certified(&self, den: &SlowFn, bound: f64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.as_const() {
            return self.scale(1.0 / c);
        }
        Self::from_expr(Expr::Div(self.clone(), den.clone(), bound))
    }

    /// Square root, certifying that the argument is bounded away from zero.
    pub fn sqrt(&self) -> Result<Self, SlowFnError> {
        if let Some(c) = self.as_const() {
            if c <= 0.0 {
                return Err(SlowFnError::NonPositive { min: c, at: 0.0 });
            }
            return Ok(Self::constant(c.sqrt()));
        }
        let (min, at) = min_value(self);
        let lip = self.derivative().inf_norm();
        let h = 1.0 / CERT_GRID as f64;
        let lower = min - lip * h;
        if !(lower > 0.0) {
            return Err(SlowFnError::NonPositive { min, at });
        }
        Ok(Self::from_expr(Expr::Sqrt(self.clone(), lower)))
    }

    /// Lower bound recorded on a quotient's denominator, if this is a quotient node.
    pub fn certified_bound(&self) -> Option<f64> {
        match self.0.expr {
            Expr::Div(_, _, b) => Some(b),
            Expr::Sqrt(_, b) => Some(b),
            _ => None,
        }
    }

    /// d/ds, cached on first use.
    pub fn derivative(&self) -> SlowFn {
        self.0.deriv.get_or_init(|| self.compute_derivative()).clone()
    }

    pub fn nth_derivative(&self, n: usize) -> SlowFn {
        let mut f = self.clone();
        for _ in 0..n {
            f = f.derivative();
        }
        f
    }

    fn compute_derivative(&self) -> SlowFn {
        match &self.0.expr {
            Expr::Const(_) => Self::zero(),
            Expr::Var => Self::one(),
            Expr::Sin(f) => f.cos().mul(&f.derivative()),
            Expr::Cos(f) => f.sin().mul(&f.derivative()).neg(),
            Expr::Add(f, g) => f.derivative().add(&g.derivative()),
            Expr::Mul(f, g) => f.derivative().mul(g).add(&f.mul(&g.derivative())),
            Expr::Scale(k, f) => f.derivative().scale(*k),
            Expr::Div(f, g, b) => {
                let num = f.derivative().sub(&self.mul(&g.derivative()));
                num.div_certified(g, *b)
            }
            Expr::Sqrt(f, b) => f.derivative().div_certified(&self.scale(2.0), 2.0 * b.sqrt()),
        }
    }

    /// Evaluates at `s`, rejecting points outside `[0, 1]`.
    pub fn eval(&self, s: f64) -> Result<f64, SlowFnError> {
        Ok(self.eval_unchecked(check_domain(s)?))
    }

    /// Evaluates without a domain check (quotients stay certified only on `[0, 1]`).
    pub fn eval_unchecked(&self, s: f64) -> f64 {
        let tape = self.tape();
        SCRATCH.with(|buf| {
            let mut buf = buf.borrow_mut();
            tape.run(s, &mut buf);
            buf[tape.roots[0] as usize]
        })
    }

    /// Evaluates on a uniform grid of `n + 1` points over `[0, 1]`.
    pub fn eval_grid(&self, n: usize) -> Vec<f64> {
        let tape = self.tape();
        let mut buf = Vec::new();
        (0..=n)
            .map(|i| {
                tape.run(i as f64 / n as f64, &mut buf);
                buf[tape.roots[0] as usize]
            })
            .collect()
    }

    fn tape(&self) -> &Tape {
        self.0.tape.get_or_init(|| Tape::compile(std::slice::from_ref(self)))
    }

    /// Number of distinct nodes in the expression DAG.
    pub fn node_count(&self) -> usize {
        self.tape().ops.len()
    }

    /// sup over `[0, 1]` of `|f|`, cached.
    pub fn inf_norm(&self) -> f64 {
        *self.0.norm.get_or_init(|| match self.as_const() {
            Some(c) => c.abs(),
            None => extremum(self, Extremum::MaxAbs).0,
        })
    }

    /// min over `[0, 1]` of `|f|`.
    pub fn min_abs(&self) -> f64 {
        match self.as_const() {
            Some(c) => c.abs(),
            None => extremum(self, Extremum::MinAbs).0,
        }
    }

    /// Parses an expression in `s` using `+ - * / ^`, `sin`, `cos`, `sqrt`, `pi`.
    pub fn parse(src: &str) -> Result<SlowFn, SlowFnError> {
        Parser::new(src).parse_all()
    }
}

impl PartialEq for SlowFn {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || self.to_string() == other.to_string()
    }
}

fn check_domain(s: f64) -> Result<f64, SlowFnError> {
    if s.is_nan() || !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&s) {
        return Err(SlowFnError::Domain(s));
    }
    Ok(s.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Convenience free functions mirroring the algebra operations.

pub fn sf_eval(f: &SlowFn, s: f64) -> Result<f64, SlowFnError> {
    f.eval(s)
}

pub fn sf_derivative(f: &SlowFn) -> SlowFn {
    f.derivative()
}

pub fn sf_add(f: &SlowFn, g: &SlowFn) -> SlowFn {
    f.add(g)
}

pub fn sf_mul(f: &SlowFn, g: &SlowFn) -> SlowFn {
    f.mul(g)
}

pub fn sf_div(f: &SlowFn, g: &SlowFn) -> Result<SlowFn, SlowFnError> {
    f.div(g)
}

pub fn sf_inf_norm(f: &SlowFn) -> f64 {
    f.inf_norm()
}

pub fn sf_min_abs(f: &SlowFn) -> f64 {
    f.min_abs()
}

/// Sum of many terms as a balanced tree, keeping expression depth logarithmic.
pub fn sum_balanced(terms: &[SlowFn]) -> SlowFn {
    match terms.len() {
        0 => SlowFn::zero(),
        1 => terms[0].clone(),
        n => sum_balanced(&terms[..n / 2]).add(&sum_balanced(&terms[n / 2..])),
    }
}

impl std::ops::Add for &SlowFn {
    type Output = SlowFn;
    fn add(self, rhs: &SlowFn) -> SlowFn {
        SlowFn::add(self, rhs)
    }
}

impl std::ops::Sub for &SlowFn {
    type Output = SlowFn;
    fn sub(self, rhs: &SlowFn) -> SlowFn {
        SlowFn::sub(self, rhs)
    }
}

impl std::ops::Mul for &SlowFn {
    type Output = SlowFn;
    fn mul(self, rhs: &SlowFn) -> SlowFn {
        SlowFn::mul(self, rhs)
    }
}

impl std::ops::Mul<f64> for &SlowFn {
    type Output = SlowFn;
    fn mul(self, rhs: f64) -> SlowFn {
        self.scale(rhs)
    }
}

impl std::ops::Neg for &SlowFn {
    type Output = SlowFn;
    fn neg(self) -> SlowFn {
        SlowFn::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Evaluation tapes.

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var,
    Sin(u32),
    Cos(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Scale(f64, u32),
    Div(u32, u32),
    Sqrt(u32),
}

/// Straight-line program evaluating one or more slow functions with shared subexpressions.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    roots: Vec<u32>,
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

impl Tape {
    /// Compiles the given functions into one tape; node identity is by pointer.
    pub fn compile(fns: &[SlowFn]) -> Tape {
        let mut index: HashMap<*const Node, u32> = HashMap::new();
        let mut ops = Vec::new();
        let mut roots = Vec::with_capacity(fns.len());
        for root in fns {
            // Iterative post-order traversal.
            let mut stack: Vec<(SlowFn, bool)> = vec![(root.clone(), false)];
            while let Some((f, expanded)) = stack.pop() {
                let key = Arc::as_ptr(&f.0);
                if index.contains_key(&key) {
                    continue;
                }
                let children: Vec<&SlowFn> = match &f.0.expr {
                    Expr::Const(_) | Expr::Var => vec![],
                    Expr::Sin(a) | Expr::Cos(a) | Expr::Scale(_, a) | Expr::Sqrt(a, _) => vec![a],
                    Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b, _) => vec![a, b],
                };
                if !expanded {
                    stack.push((f.clone(), true));
                    for c in children {
                        if !index.contains_key(&Arc::as_ptr(&c.0)) {
                            stack.push((c.clone(), false));
                        }
                    }
                    continue;
                }
                let ix = |g: &SlowFn| index[&Arc::as_ptr(&g.0)];
                let op = match &f.0.expr {
                    Expr::Const(c) => Op::Const(*c),
                    Expr::Var => Op::Var,
                    Expr::Sin(a) => Op::Sin(ix(a)),
                    Expr::Cos(a) => Op::Cos(ix(a)),
                    Expr::Add(a, b) => Op::Add(ix(a), ix(b)),
                    Expr::Mul(a, b) => Op::Mul(ix(a), ix(b)),
                    Expr::Scale(k, a) => Op::Scale(*k, ix(a)),
                    Expr::Div(a, b, _) => Op::Div(ix(a), ix(b)),
                    Expr::Sqrt(a, _) => Op::Sqrt(ix(a)),
                };
                index.insert(key, ops.len() as u32);
                ops.push(op);
            }
            roots.push(index[&Arc::as_ptr(&root.0)]);
        }
        Tape { ops, roots }
    }

    fn run(&self, s: f64, buf: &mut Vec<f64>) {
        buf.clear();
        buf.reserve(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var => s,
                Op::Sin(a) => buf[a as usize].sin(),
                Op::Cos(a) => buf[a as usize].cos(),
                Op::Add(a, b) => buf[a as usize] + buf[b as usize],
                Op::Mul(a, b) => buf[a as usize] * buf[b as usize],
                Op::Scale(k, a) => k * buf[a as usize],
                Op::Div(a, b) => buf[a as usize] / buf[b as usize],
                Op::Sqrt(a) => buf[a as usize].sqrt(),
            };
            buf.push(v);
        }
    }

    /// Evaluates every root at `s`, writing into `out` (resized to the root count).
    pub fn eval_into(&self, s: f64, out: &mut Vec<f64>) {
        SCRATCH.with(|buf| {
            let mut buf = buf.borrow_mut();
            self.run(s, &mut buf);
            out.clear();
            out.extend(self.roots.iter().map(|&r| buf[r as usize]));
        })
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.roots.len());
        self.eval_into(s, &mut out);
        out
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Norms and certificates.

#[derive(Clone, Copy)]
enum Extremum {
    MaxAbs,
    MinAbs,
    MinValue,
}

fn objective(kind: Extremum, v: f64) -> f64 {
    // Smaller is better for the golden search.
    match kind {
        Extremum::MaxAbs => -v.abs(),
        Extremum::MinAbs => v.abs(),
        Extremum::MinValue => v,
    }
}

/// Grid search followed by golden-section refinement around the best grid cells.
fn extremum(f: &SlowFn, kind: Extremum) -> (f64, f64) {
    let vals = f.eval_grid(NORM_GRID);
    let obj: Vec<f64> = vals.iter().map(|&v| objective(kind, v)).collect();
    let best = obj.iter().cloned().fold(f64::INFINITY, f64::min);
    // Local minima of the objective that are competitive with the grid optimum.
    let mut cands: Vec<usize> = (0..=NORM_GRID)
        .filter(|&i| {
            let left = if i > 0 { obj[i - 1] } else { f64::INFINITY };
            let right = if i < NORM_GRID { obj[i + 1] } else { f64::INFINITY };
            obj[i] <= left && obj[i] <= right
        })
        .collect();
    cands.sort_by(|&a, &b| obj[a].total_cmp(&obj[b]));
    cands.truncate(8);
    let h = 1.0 / NORM_GRID as f64;
    let mut out = (best, 0.0);
    for (i, &c) in cands.iter().enumerate() {
        if i == 0 {
            out = (obj[c], c as f64 * h);
        }
        let lo = (c as f64 - 1.0).max(0.0) * h;
        let hi = (c as f64 + 1.0).min(NORM_GRID as f64) * h;
        let (s, v) = golden(|s| objective(kind, f.eval_unchecked(s)), lo, hi);
        if v < out.0 {
            out = (v, s);
        }
    }
    let value = match kind {
        Extremum::MaxAbs => -out.0,
        Extremum::MinAbs | Extremum::MinValue => out.0,
    };
    (value, out.1)
}

fn golden(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while b - a > 1e-10 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = g(x2);
        }
    }
    // Endpoints of the bracket can beat the interior for monotone pieces.
    [(a, g(a)), (b, g(b)), (x1, f1), (x2, f2)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

fn min_value(f: &SlowFn) -> (f64, f64) {
    extremum(f, Extremum::MinValue)
}

/// Certified lower bound on `|g|` over `[0, 1]`: dense sampling plus a Lipschitz margin.
pub fn certify_nonvanishing(g: &SlowFn) -> Result<f64, SlowFnError> {
    let vals = g.eval_grid(CERT_GRID);
    let sign = vals[0].signum();
    let (imin, vmin) = vals
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let at = imin as f64 / CERT_GRID as f64;
    if vals.iter().any(|v| v.signum() != sign || *v == 0.0) {
        return Err(SlowFnError::Vanishing { min_abs: vmin, at });
    }
    let lip = g.derivative().inf_norm();
    let lower = vmin - lip * 0.5 / CERT_GRID as f64;
    if !(lower > 0.0) {
        return Err(SlowFnError::Vanishing { min_abs: vmin, at });
    }
    Ok(lower)
}

// ---------------------------------------------------------------------------
// Printing.

fn fmt_num(c: f64) -> String {
    format!("{c:?}")
}

impl SlowFn {
    fn prec(&self) -> u8 {
        match &self.0.expr {
            Expr::Add(..) => 1,
            Expr::Mul(..) | Expr::Scale(..) | Expr::Div(..) => 2,
            Expr::Const(c) if *c < 0.0 => 1,
            _ => 3,
        }
    }

    fn write_prec(&self, out: &mut String, min: u8) {
        let paren = self.prec() < min;
        if paren {
            out.push('(');
        }
        match &self.0.expr {
            Expr::Const(c) => out.push_str(&fmt_num(*c)),
            Expr::Var => out.push('s'),
            Expr::Sin(a) => {
                out.push_str("sin(");
                a.write_prec(out, 0);
                out.push(')');
            }
            Expr::Cos(a) => {
                out.push_str("cos(");
                a.write_prec(out, 0);
                out.push(')');
            }
            Expr::Sqrt(a, _) => {
                out.push_str("sqrt(");
                a.write_prec(out, 0);
                out.push(')');
            }
            Expr::Add(a, b) => {
                a.write_prec(out, 1);
                out.push_str(" + ");
                b.write_prec(out, 2);
            }
            Expr::Mul(a, b) => {
                a.write_prec(out, 2);
                out.push('*');
                b.write_prec(out, 3);
            }
            Expr::Scale(k, a) => {
                let k = fmt_num(*k);
                if k.starts_with('-') {
                    out.push('(');
                    out.push_str(&k);
                    out.push(')');
                } else {
                    out.push_str(&k);
                }
                out.push('*');
                a.write_prec(out, 3);
            }
            Expr::Div(a, b, _) => {
                a.write_prec(out, 2);
                out.push('/');
                b.write_prec(out, 3);
            }
        }
        if paren {
            out.push(')');
        }
    }
}

impl fmt::Display for SlowFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write_prec(&mut out, 0);
        f.write_str(&out)
    }
}

// ---------------------------------------------------------------------------
// Parsing.

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, msg: &str) -> Result<T, SlowFnError> {
        Err(SlowFnError::Parse(format!("{msg} at offset {} in {:?}", self.pos, self.src)))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<SlowFn, SlowFnError> {
        let e = self.expr()?;
        if self.peek().is_some() {
            return self.err("trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<SlowFn, SlowFnError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SlowFn, SlowFnError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat('/') {
                acc = acc.div(&self.unary()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<SlowFn, SlowFnError> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            self.skip_ws();
            let start = self.pos;
            while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let n: u32 = match self.src[start..self.pos].parse() {
                Ok(n) => n,
                Err(_) => return self.err("expected a non-negative integer exponent"),
            };
            return Ok(base.powi(n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<SlowFn, SlowFnError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                let bytes = self.src.as_bytes();
                while self.pos < bytes.len() {
                    let b = bytes[self.pos];
                    let exp_sign = (b == b'+' || b == b'-')
                        && self.pos > start
                        && matches!(bytes[self.pos - 1], b'e' | b'E');
                    if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                match self.src[start..self.pos].parse::<f64>() {
                    Ok(v) => Ok(SlowFn::constant(v)),
                    Err(_) => self.err("malformed number"),
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                match name {
                    "s" => Ok(SlowFn::var()),
                    "pi" => Ok(SlowFn::constant(std::f64::consts::PI)),
                    "sin" | "cos" | "sqrt" => {
                        if !self.eat('(') {
                            return self.err("expected '(' after function name");
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return self.err("expected ')'");
                        }
                        match name {
                            "sin" => Ok(arg.sin()),
                            "cos" => Ok(arg.cos()),
                            _ => arg.sqrt(),
                        }
                    }
                    _ => self.err(&format!("unknown identifier {name:?}")),
                }
            }
            _ => self.err("unexpected character"),
        }
    }
}
