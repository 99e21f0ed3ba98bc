//! Reader and writer for Cassandra's `.POMDP` text format.
//!
//! Supported: `discount`, `values`, `states`/`actions`/`observations` given as
//! counts or name lists, `start` (probability list, `uniform`, a single state,
//! `include:`/`exclude:` lists), and `T:`/`O:`/`R:` entries in their
//! single-value, row and matrix forms, with `*` wildcards and the `uniform`
//! and `identity` keywords. Later entries overwrite earlier ones.
//!
//! Transition and observation tables are held densely while parsing, which is
//! fine for the published benchmark files.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Belief, ExplicitPomdp, GenerativeModel, Labels, ModelError, PomdpBuilder};

/// Row-sum tolerance for file ingestion; published files are often rounded.
pub const FILE_ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CassandraError {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model cannot be written as T and O tables: {0}")]
    NotFactorable(String),
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn tokenize<'a>(text: &'a str) -> Vec<Token<'a>> {
    let mut tokens: Vec<Token<'a>> = Vec::new();
    for (line_idx, raw) in text.lines().enumerate() {
        let line: &'a str = raw.split('#').next().unwrap_or("");
        let mut start: Option<usize> = None;
        let bytes = line.as_bytes();
        let flush = |start: &mut Option<usize>, end: usize, tokens: &mut Vec<Token<'a>>| {
            if let Some(s) = start.take() {
                tokens.push(Token { text: &line[s..end], line: line_idx + 1, col: s + 1 });
            }
        };
        for (i, &c) in bytes.iter().enumerate() {
            if c == b':' {
                flush(&mut start, i, &mut tokens);
                tokens.push(Token { text: &line[i..i + 1], line: line_idx + 1, col: i + 1 });
            } else if c.is_ascii_whitespace() {
                flush(&mut start, i, &mut tokens);
            } else if start.is_none() {
                start = Some(i);
            }
        }
        flush(&mut start, bytes.len(), &mut tokens);
    }
    tokens
}

const KEYWORDS: [&str; 9] = ["discount", "values", "states", "actions", "observations", "start", "T", "O", "R"];

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

#[derive(Clone, Copy)]
enum Space {
    States,
    Actions,
    Observations,
}

/// Index pattern: `None` is the `*` wildcard.
type Pat = Option<usize>;

struct RewardRule {
    a: Pat,
    s: Pat,
    s_next: Pat,
    z: Pat,
    value: f64,
}

impl RewardRule {
    fn matches(&self, a: usize, s: usize, s_next: usize, z: usize) -> bool {
        self.a.is_none_or(|x| x == a)
            && self.s.is_none_or(|x| x == s)
            && self.s_next.is_none_or(|x| x == s_next)
            && self.z.is_none_or(|x| x == z)
    }
}

struct Draft {
    discount: Option<f64>,
    cost: bool,
    states: Option<Vec<String>>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    start: Option<Vec<f64>>,
    /// `[a][s][s']`
    trans: Vec<f64>,
    /// `[a][s'][z]`
    obs: Vec<f64>,
    rewards: Vec<RewardRule>,
}

impl Draft {
    fn dims(&self) -> (usize, usize, usize) {
        (
            self.states.as_ref().map_or(0, Vec::len),
            self.actions.as_ref().map_or(0, Vec::len),
            self.observations.as_ref().map_or(0, Vec::len),
        )
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn peek_text(&self, offset: usize) -> Option<&'a str> {
        self.tokens.get(self.pos + offset).map(|t| t.text)
    }

    fn error_here(&self, message: impl Into<String>) -> CassandraError {
        let (line, col) = match self.peek().or_else(|| self.tokens.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        };
        CassandraError::Parse { line, col, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, CassandraError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.error_here(format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect_colon(&mut self) -> Result<(), CassandraError> {
        let tok = self.next("':'")?;
        if tok.text != ":" {
            return Err(CassandraError::Parse { line: tok.line, col: tok.col, message: format!("expected ':', found '{}'", tok.text) });
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64, CassandraError> {
        let tok = self.next("a number")?;
        tok.text.parse::<f64>().map_err(|_| CassandraError::Parse {
            line: tok.line,
            col: tok.col,
            message: format!("expected a number, found '{}'", tok.text),
        })
    }

    fn numbers(&mut self, n: usize) -> Result<Vec<f64>, CassandraError> {
        (0..n).map(|_| self.number()).collect()
    }

    /// True when the cursor sits on the start of a new top-level entry.
    fn at_entry_start(&self) -> bool {
        match (self.peek_text(0), self.peek_text(1)) {
            (None, _) => true,
            (Some("start"), Some("include" | "exclude")) => true,
            (Some(k), Some(":")) => KEYWORDS.contains(&k),
            _ => false,
        }
    }

    fn name_list(&mut self) -> Result<Vec<String>, CassandraError> {
        let first = self.next("a count or a name list")?;
        if let Ok(n) = first.text.parse::<usize>() {
            if self.at_entry_start() {
                if n == 0 {
                    return Err(CassandraError::Parse { line: first.line, col: first.col, message: "empty space".into() });
                }
                return Ok((0..n).map(|i| i.to_string()).collect());
            }
        }
        let mut names = vec![first.text.to_string()];
        while !self.at_entry_start() {
            names.push(self.next("a name")?.text.to_string());
        }
        Ok(names)
    }

    fn resolve(&self, draft: &Draft, space: Space, tok: &Token<'a>) -> Result<Pat, CassandraError> {
        if tok.text == "*" {
            return Ok(None);
        }
        let (names, what) = match space {
            Space::States => (&draft.states, "states"),
            Space::Actions => (&draft.actions, "actions"),
            Space::Observations => (&draft.observations, "observations"),
        };
        let names = names.as_ref().ok_or_else(|| CassandraError::Parse {
            line: tok.line,
            col: tok.col,
            message: format!("'{what}' must be declared before use"),
        })?;
        if let Some(i) = names.iter().position(|n| n == tok.text) {
            return Ok(Some(i));
        }
        match tok.text.parse::<usize>() {
            Ok(i) if i < names.len() => Ok(Some(i)),
            _ => Err(CassandraError::Parse { line: tok.line, col: tok.col, message: format!("unknown {what} entry '{}'", tok.text) }),
        }
    }

    fn index(&mut self, draft: &Draft, space: Space) -> Result<Pat, CassandraError> {
        let tok = self.next("an index, a name or '*'")?;
        self.resolve(draft, space, &tok)
    }
}

fn expand(p: Pat, n: usize) -> std::ops::Range<usize> {
    match p {
        Some(i) => i..i + 1,
        None => 0..n,
    }
}

/// Parses a `.POMDP` document into a validated model.
pub fn parse_cassandra_pomdp(text: &str) -> Result<ExplicitPomdp, CassandraError> {
    let mut p = Parser { tokens: tokenize(text), pos: 0 };
    let mut d = Draft {
        discount: None,
        cost: false,
        states: None,
        actions: None,
        observations: None,
        start: None,
        trans: Vec::new(),
        obs: Vec::new(),
        rewards: Vec::new(),
    };

    while let Some(tok) = p.peek().cloned() {
        p.pos += 1;
        match tok.text {
            "discount" => {
                p.expect_colon()?;
                d.discount = Some(p.number()?);
            }
            "values" => {
                p.expect_colon()?;
                let v = p.next("'reward' or 'cost'")?;
                d.cost = match v.text {
                    "reward" => false,
                    "cost" => true,
                    other => return Err(CassandraError::Parse { line: v.line, col: v.col, message: format!("unknown values kind '{other}'") }),
                };
            }
            "states" | "actions" | "observations" => {
                p.expect_colon()?;
                let names = p.name_list()?;
                match tok.text {
                    "states" => d.states = Some(names),
                    "actions" => d.actions = Some(names),
                    _ => d.observations = Some(names),
                }
                let (ns, na, no) = d.dims();
                if ns > 0 && na > 0 {
                    d.trans = vec![0.0; na * ns * ns];
                }
                if ns > 0 && na > 0 && no > 0 {
                    d.obs = vec![0.0; na * ns * no];
                }
            }
            "start" => parse_start(&mut p, &mut d)?,
            "T" | "O" | "R" => {
                let (ns, na, no) = d.dims();
                if ns == 0 || na == 0 || no == 0 {
                    return Err(CassandraError::Parse {
                        line: tok.line,
                        col: tok.col,
                        message: "states, actions and observations must be declared before T/O/R entries".into(),
                    });
                }
                p.expect_colon()?;
                match tok.text {
                    "T" => parse_transition(&mut p, &mut d)?,
                    "O" => parse_observation(&mut p, &mut d)?,
                    _ => parse_reward(&mut p, &mut d)?,
                }
            }
            other => {
                return Err(CassandraError::Parse { line: tok.line, col: tok.col, message: format!("unexpected token '{other}'") });
            }
        }
    }

    finish(d)
}

fn parse_start(p: &mut Parser<'_>, d: &mut Draft) -> Result<(), CassandraError> {
    let ns = d.dims().0;
    if ns == 0 {
        return Err(p.error_here("states must be declared before start"));
    }
    match p.peek_text(0) {
        Some(kind @ ("include" | "exclude")) => {
            p.pos += 1;
            p.expect_colon()?;
            let mut listed = vec![false; ns];
            while !p.at_entry_start() {
                let tok = p.next("a state")?;
                match p.resolve(d, Space::States, &tok)? {
                    Some(s) => listed[s] = true,
                    None => listed.iter_mut().for_each(|x| *x = true),
                }
            }
            let keep: Vec<bool> = listed.iter().map(|&l| if kind == "include" { l } else { !l }).collect();
            let count = keep.iter().filter(|&&k| k).count();
            if count == 0 {
                return Err(p.error_here("start set is empty"));
            }
            d.start = Some(keep.iter().map(|&k| if k { 1.0 / count as f64 } else { 0.0 }).collect());
        }
        _ => {
            p.expect_colon()?;
            let first = p.next("a start distribution")?;
            let is_name = d.states.as_ref().is_some_and(|names| names.iter().any(|n| n == first.text));
            let numeric = first.text.parse::<f64>().is_ok();
            if first.text == "uniform" {
                d.start = Some(vec![1.0 / ns as f64; ns]);
            } else if numeric && !is_name && (ns == 1 || !p.at_entry_start()) {
                p.pos -= 1;
                d.start = Some(p.numbers(ns)?);
            } else {
                let s = p
                    .resolve(d, Space::States, &first)?
                    .ok_or_else(|| p.error_here("'*' is not a valid start state"))?;
                let mut v = vec![0.0; ns];
                v[s] = 1.0;
                d.start = Some(v);
            }
        }
    }
    Ok(())
}

fn parse_transition(p: &mut Parser<'_>, d: &mut Draft) -> Result<(), CassandraError> {
    let (ns, _, _) = d.dims();
    let a = p.index(d, Space::Actions)?;
    let na = d.dims().1;
    let at = |a: usize, s: usize, s2: usize| (a * ns + s) * ns + s2;
    if p.peek_text(0) != Some(":") {
        let tok = p.next("'uniform', 'identity' or a matrix")?;
        for ai in expand(a, na) {
            match tok.text {
                "uniform" => (0..ns).for_each(|s| (0..ns).for_each(|s2| d.trans[at(ai, s, s2)] = 1.0 / ns as f64)),
                "identity" => (0..ns).for_each(|s| (0..ns).for_each(|s2| d.trans[at(ai, s, s2)] = if s == s2 { 1.0 } else { 0.0 })),
                _ => {}
            }
        }
        if tok.text != "uniform" && tok.text != "identity" {
            p.pos -= 1;
            let m = p.numbers(ns * ns)?;
            for ai in expand(a, na) {
                d.trans[at(ai, 0, 0)..at(ai, 0, 0) + ns * ns].copy_from_slice(&m);
            }
        }
        return Ok(());
    }
    p.expect_colon()?;
    let s = p.index(d, Space::States)?;
    if p.peek_text(0) != Some(":") {
        let row = if p.peek_text(0) == Some("uniform") {
            p.pos += 1;
            vec![1.0 / ns as f64; ns]
        } else {
            p.numbers(ns)?
        };
        for ai in expand(a, na) {
            for si in expand(s, ns) {
                d.trans[at(ai, si, 0)..at(ai, si, 0) + ns].copy_from_slice(&row);
            }
        }
        return Ok(());
    }
    p.expect_colon()?;
    let s2 = p.index(d, Space::States)?;
    let v = p.number()?;
    for ai in expand(a, na) {
        for si in expand(s, ns) {
            for sj in expand(s2, ns) {
                d.trans[at(ai, si, sj)] = v;
            }
        }
    }
    Ok(())
}

fn parse_observation(p: &mut Parser<'_>, d: &mut Draft) -> Result<(), CassandraError> {
    let (ns, na, no) = d.dims();
    let a = p.index(d, Space::Actions)?;
    let at = |a: usize, s2: usize, z: usize| (a * ns + s2) * no + z;
    if p.peek_text(0) != Some(":") {
        if p.peek_text(0) == Some("uniform") {
            p.pos += 1;
            for ai in expand(a, na) {
                d.obs[at(ai, 0, 0)..at(ai, 0, 0) + ns * no].fill(1.0 / no as f64);
            }
        } else {
            let m = p.numbers(ns * no)?;
            for ai in expand(a, na) {
                d.obs[at(ai, 0, 0)..at(ai, 0, 0) + ns * no].copy_from_slice(&m);
            }
        }
        return Ok(());
    }
    p.expect_colon()?;
    let s2 = p.index(d, Space::States)?;
    if p.peek_text(0) != Some(":") {
        let row = if p.peek_text(0) == Some("uniform") {
            p.pos += 1;
            vec![1.0 / no as f64; no]
        } else {
            p.numbers(no)?
        };
        for ai in expand(a, na) {
            for sj in expand(s2, ns) {
                d.obs[at(ai, sj, 0)..at(ai, sj, 0) + no].copy_from_slice(&row);
            }
        }
        return Ok(());
    }
    p.expect_colon()?;
    let z = p.index(d, Space::Observations)?;
    let v = p.number()?;
    for ai in expand(a, na) {
        for sj in expand(s2, ns) {
            for zi in expand(z, no) {
                d.obs[at(ai, sj, zi)] = v;
            }
        }
    }
    Ok(())
}

fn parse_reward(p: &mut Parser<'_>, d: &mut Draft) -> Result<(), CassandraError> {
    let (ns, _, no) = d.dims();
    let a = p.index(d, Space::Actions)?;
    p.expect_colon()?;
    let s = p.index(d, Space::States)?;
    if p.peek_text(0) != Some(":") {
        let m = p.numbers(ns * no)?;
        for s2 in 0..ns {
            for z in 0..no {
                d.rewards.push(RewardRule { a, s, s_next: Some(s2), z: Some(z), value: m[s2 * no + z] });
            }
        }
        return Ok(());
    }
    p.expect_colon()?;
    let s2 = p.index(d, Space::States)?;
    if p.peek_text(0) != Some(":") {
        let row = p.numbers(no)?;
        for (z, &value) in row.iter().enumerate() {
            d.rewards.push(RewardRule { a, s, s_next: s2, z: Some(z), value });
        }
        return Ok(());
    }
    p.expect_colon()?;
    let z = p.index(d, Space::Observations)?;
    let value = p.number()?;
    d.rewards.push(RewardRule { a, s, s_next: s2, z, value });
    Ok(())
}

fn check_row(row: &[f64], what: impl Fn() -> String) -> Result<f64, CassandraError> {
    if let Some(bad) = row.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(CassandraError::Validation(format!("{}: invalid probability {bad}", what())));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > FILE_ROW_TOLERANCE {
        return Err(CassandraError::Validation(format!("{} sums to {sum}", what())));
    }
    Ok(sum)
}

fn finish(d: Draft) -> Result<ExplicitPomdp, CassandraError> {
    let missing = |what: &str| CassandraError::Parse { line: 1, col: 1, message: format!("missing '{what}' declaration") };
    let gamma = d.discount.ok_or_else(|| missing("discount"))?;
    let states = d.states.clone().ok_or_else(|| missing("states"))?;
    let actions = d.actions.clone().ok_or_else(|| missing("actions"))?;
    let observations = d.observations.clone().ok_or_else(|| missing("observations"))?;
    let (ns, na, no) = (states.len(), actions.len(), observations.len());

    let mut trans = d.trans;
    let mut obs = d.obs;
    for a in 0..na {
        for s in 0..ns {
            let row = &mut trans[(a * ns + s) * ns..(a * ns + s + 1) * ns];
            let sum = check_row(row, || format!("T({}, {}, ·)", actions[a], states[s]))?;
            row.iter_mut().for_each(|x| *x /= sum);
        }
        for s2 in 0..ns {
            let row = &mut obs[(a * ns + s2) * no..(a * ns + s2 + 1) * no];
            let sum = check_row(row, || format!("O({}, {}, ·)", actions[a], states[s2]))?;
            row.iter_mut().for_each(|x| *x /= sum);
        }
    }
    let start = d.start.unwrap_or_else(|| vec![1.0 / ns as f64; ns]);
    if start.len() != ns {
        return Err(CassandraError::Validation("start distribution length differs from state count".into()));
    }
    let start_sum = check_row(&start, || "start distribution".to_string())?;
    let b0 = Belief::normalized(start.iter().map(|&p| p / start_sum).enumerate())?;

    let sign = if d.cost { -1.0 } else { 1.0 };
    let mut builder = PomdpBuilder::new(ns, na, no);
    for a in 0..na {
        for s in 0..ns {
            let mut expected = 0.0;
            for s2 in 0..ns {
                let t = trans[(a * ns + s) * ns + s2];
                if t == 0.0 {
                    continue;
                }
                for z in 0..no {
                    let o = obs[(a * ns + s2) * no + z];
                    if o == 0.0 {
                        continue;
                    }
                    builder.add(s, a, s2, z, t * o);
                    let r = d.rewards.iter().rev().find(|r| r.matches(a, s, s2, z)).map_or(0.0, |r| r.value);
                    expected += t * o * r;
                }
            }
            builder.set_state_reward(s, a, sign * expected);
        }
    }
    let labels = Labels { states, actions, observations };
    Ok(builder.build_renormalized(gamma, b0, labels, 1e-9)?)
}

fn sanitize(name: &str) -> String {
    let cleaned: String = name.chars().map(|c| if c.is_whitespace() || c == ':' || c == '#' { '_' } else { c }).collect();
    if cleaned.is_empty() || cleaned.parse::<f64>().is_ok() || cleaned == "*" {
        format!("n{cleaned}")
    } else {
        cleaned
    }
}

/// Writes a model back to `.POMDP` text.
///
/// The kernel must factor as `T(s,a,s')·O(a,s',z)`; state rewards are written
/// as `R: a : s : * : *` entries.
pub fn write_cassandra_pomdp(model: &ExplicitPomdp) -> Result<String, CassandraError> {
    let (ns, na, no) = (model.n_states(), model.n_actions(), model.n_obs());
    let labels = model.labels();
    let sn: Vec<String> = labels.states.iter().map(|n| sanitize(n)).collect();
    let an: Vec<String> = labels.actions.iter().map(|n| sanitize(n)).collect();
    let on: Vec<String> = labels.observations.iter().map(|n| sanitize(n)).collect();
    for names in [&sn, &an, &on] {
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(CassandraError::NotFactorable("labels are not unique after sanitizing".into()));
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "discount: {:?}", model.gamma());
    let _ = writeln!(out, "values: reward");
    let _ = writeln!(out, "states: {}", sn.join(" "));
    let _ = writeln!(out, "actions: {}", an.join(" "));
    let _ = writeln!(out, "observations: {}", on.join(" "));
    let start: Vec<String> = model.initial_belief().to_dense(ns).iter().map(|p| format!("{p:?}")).collect();
    let _ = writeln!(out, "start: {}", start.join(" "));

    for a in 0..na {
        // O(a, s', ·) recovered from any predecessor that reaches s'.
        let mut obs_rows: Vec<Option<Vec<f64>>> = vec![None; ns];
        for s in 0..ns {
            let mut trans: Vec<(usize, f64)> = Vec::new();
            for o in model.outcomes(s, a) {
                match trans.last_mut() {
                    Some(last) if last.0 == o.next => last.1 += o.prob,
                    _ => trans.push((o.next, o.prob)),
                }
            }
            for &(s2, t) in &trans {
                let _ = writeln!(out, "T: {} : {} : {} {:?}", an[a], sn[s], sn[s2], t);
                let mut row = vec![0.0; no];
                for o in model.outcomes(s, a).iter().filter(|o| o.next == s2) {
                    row[o.obs] = o.prob / t;
                }
                match &obs_rows[s2] {
                    Some(prev) => {
                        if prev.iter().zip(&row).any(|(x, y)| (x - y).abs() > 1e-12) {
                            return Err(CassandraError::NotFactorable(format!(
                                "observation of action {} in state {} depends on the source state",
                                an[a], sn[s2]
                            )));
                        }
                    }
                    None => obs_rows[s2] = Some(row),
                }
            }
        }
        for (s2, row) in obs_rows.iter().enumerate() {
            match row {
                Some(row) => {
                    for (z, &q) in row.iter().enumerate().filter(|(_, q)| **q > 0.0) {
                        let _ = writeln!(out, "O: {} : {} : {} {:?}", an[a], sn[s2], on[z], q);
                    }
                }
                None => {
                    let _ = writeln!(out, "O: {} : {} uniform", an[a], sn[s2]);
                }
            }
        }
    }
    if model.state_reward_matrix().is_some() {
        for a in 0..na {
            for s in 0..ns {
                let r = model.state_reward(s, a).unwrap_or(0.0);
                if r != 0.0 {
                    let _ = writeln!(out, "R: {} : {} : * : * {:?}", an[a], sn[s], r);
                }
            }
        }
    }
    Ok(out)
}
