//! Line-oriented text format for reaction networks.
//!
//! ```text
//! # comment
//! species: SO2 O2 SO3
//! reaction: 2 SO2 + O2 <-> 2 SO3 @ 1.0, 1.0
//! diffusion: SO2=0.2 O2=0.2 SO3=0.2
//! conserved: sulfur = SO2 + SO3
//! conserved: oxygen = 2 SO2 + 2 O2 + 3 SO3
//! ```
//!
//! `species:` and `diffusion:` appear exactly once, `reaction:` at least once.
//! `conserved:` lines are optional; when present they must form a complete
//! basis of conservation laws and fix the meaning of equilibrium totals.
//! A lone `0` denotes the empty complex.

use super::model::{Complex, ConservedQuantity, Reaction, ReactionNetwork};
use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, text: String },
    Ident(String),
    Plus,
    Minus,
    Arrow,
    BiArrow,
    At,
    Comma,
    Eq,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax(ParseError {
        line,
        column,
        message: message.into(),
    })
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when followed by a digit or sign+digit
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let value: f64 = s
                .parse()
                .map_err(|_| syntax(line, col, format!("malformed number `{s}`")))?;
            out.push(Token {
                tok: Tok::Num { value, text: s },
                col,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::BiArrow, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else {
            match c {
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '@' => (Tok::At, 1),
                ',' => (Tok::Comma, 1),
                '=' => (Tok::Eq, 1),
                _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, col });
        i += len;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        syntax(self.line, self.col(), msg)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<()> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

fn decimal_places(text: &str) -> Option<usize> {
    if text.contains(['e', 'E']) {
        return None;
    }
    Some(text.split_once('.').map_or(0, |(_, frac)| frac.len()))
}

fn species_ref(species: &[String], name: &str, line: usize) -> Result<usize> {
    species
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| Error::UnknownSpecies {
            name: name.to_string(),
            line,
        })
}

fn parse_complex(cur: &mut Cursor, species: &[String]) -> Result<Complex> {
    let n = species.len();
    if let Some(Tok::Num { value, .. }) = cur.peek() {
        if *value == 0.0 {
            let next = cur.toks.get(cur.pos + 1).map(|t| &t.tok);
            if !matches!(next, Some(Tok::Ident(_))) {
                cur.pos += 1;
                return Ok(Complex::empty(n));
            }
        }
    }
    let mut coeffs = vec![0.0; n];
    loop {
        let coefficient = match cur.peek() {
            Some(Tok::Num { value, text }) => {
                let places = decimal_places(text);
                if places.is_none_or(|p| p > 6) {
                    return Err(cur.err("stoichiometric coefficient must be a decimal with at most 6 places"));
                }
                if *value < 1.0 {
                    return Err(cur.err(format!("stoichiometric coefficient {value} must be >= 1")));
                }
                cur.pos += 1;
                *value
            }
            _ => 1.0,
        };
        match cur.next() {
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => {
                let idx = species_ref(species, name, cur.line)?;
                coeffs[idx] += coefficient;
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.err("expected species name"));
            }
        }
        if cur.peek() == Some(&Tok::Plus) {
            cur.pos += 1;
        } else {
            break;
        }
    }
    Complex::new(coeffs).map_err(|e| cur.err(e.to_string()))
}

fn parse_rate(cur: &mut Cursor) -> Result<f64> {
    match cur.next() {
        Some(Token {
            tok: Tok::Num { value, .. },
            ..
        }) => {
            if !(*value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositive {
                    what: format!("rate constant (line {})", cur.line),
                    value: *value,
                });
            }
            Ok(*value)
        }
        Some(Token { tok: Tok::Minus, .. }) => {
            let v = match cur.next() {
                Some(Token {
                    tok: Tok::Num { value, .. },
                    ..
                }) => -*value,
                _ => {
                    cur.pos -= 1;
                    return Err(cur.err("expected rate constant"));
                }
            };
            Err(Error::NonPositive {
                what: format!("rate constant (line {})", cur.line),
                value: v,
            })
        }
        _ => {
            cur.pos -= 1;
            Err(cur.err("expected rate constant"))
        }
    }
}

fn parse_reaction(cur: &mut Cursor, species: &[String]) -> Result<Vec<Reaction>> {
    let lhs = parse_complex(cur, species)?;
    let reversible = match cur.peek() {
        Some(Tok::Arrow) => false,
        Some(Tok::BiArrow) => true,
        _ => return Err(cur.err("expected `->` or `<->`")),
    };
    cur.pos += 1;
    let rhs = parse_complex(cur, species)?;
    cur.expect(&Tok::At, "`@` before rate constant")?;
    let kf = parse_rate(cur)?;
    let mut out = Vec::new();
    if reversible {
        cur.expect(&Tok::Comma, "`,` between forward and backward rates")?;
        let kb = parse_rate(cur)?;
        out.push(Reaction {
            reactant: lhs.clone(),
            product: rhs.clone(),
            rate: kf,
        });
        out.push(Reaction {
            reactant: rhs,
            product: lhs,
            rate: kb,
        });
    } else {
        out.push(Reaction {
            reactant: lhs,
            product: rhs,
            rate: kf,
        });
    }
    if !cur.done() {
        return Err(cur.err("unexpected trailing input"));
    }
    if out[0].reactant == out[0].product {
        return Err(cur.err("reactant and product complexes are identical"));
    }
    Ok(out)
}

fn parse_diffusion(cur: &mut Cursor, species: &[String]) -> Result<Vec<f64>> {
    let mut d: Vec<Option<f64>> = vec![None; species.len()];
    while !cur.done() {
        let name = match cur.next() {
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => name,
            _ => {
                cur.pos -= 1;
                return Err(cur.err("expected `NAME=VALUE`"));
            }
        };
        let idx = species_ref(species, name, cur.line)?;
        cur.expect(&Tok::Eq, "`=`")?;
        let negative = if cur.peek() == Some(&Tok::Minus) {
            cur.pos += 1;
            true
        } else {
            false
        };
        let value = match cur.next() {
            Some(Token {
                tok: Tok::Num { value, .. },
                ..
            }) => {
                if negative {
                    -*value
                } else {
                    *value
                }
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.err("expected diffusion coefficient"));
            }
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositive {
                what: format!("diffusion coefficient for {name}"),
                value,
            });
        }
        if d[idx].is_some() {
            return Err(cur.err(format!("diffusion coefficient for {name} given twice")));
        }
        d[idx] = Some(value);
        if cur.peek() == Some(&Tok::Comma) {
            cur.pos += 1;
        }
    }
    d.iter()
        .zip(species)
        .map(|(v, s)| {
            v.ok_or_else(|| syntax(cur.line, cur.end_col, format!("missing diffusion coefficient for {s}")))
        })
        .collect()
}

fn parse_conserved(cur: &mut Cursor, species: &[String]) -> Result<ConservedQuantity> {
    let name = match cur.next() {
        Some(Token {
            tok: Tok::Ident(name),
            ..
        }) => name.clone(),
        _ => {
            cur.pos -= 1;
            return Err(cur.err("expected quantity name"));
        }
    };
    cur.expect(&Tok::Eq, "`=`")?;
    let mut coefficients = vec![0.0; species.len()];
    let mut sign = 1.0;
    if cur.peek() == Some(&Tok::Minus) {
        cur.pos += 1;
        sign = -1.0;
    }
    loop {
        let c = match cur.peek() {
            Some(Tok::Num { value, .. }) => {
                cur.pos += 1;
                *value
            }
            _ => 1.0,
        };
        match cur.next() {
            Some(Token {
                tok: Tok::Ident(s),
                ..
            }) => {
                let idx = species_ref(species, s, cur.line)?;
                coefficients[idx] += sign * c;
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.err("expected species name"));
            }
        }
        match cur.peek() {
            Some(Tok::Plus) => sign = 1.0,
            Some(Tok::Minus) => sign = -1.0,
            None => break,
            _ => return Err(cur.err("expected `+` or `-`")),
        }
        cur.pos += 1;
    }
    Ok(ConservedQuantity { name, coefficients })
}

/// Parses and validates a network in the text format above.
pub fn parse_network(text: &str) -> Result<ReactionNetwork> {
    let mut species_line: Option<(usize, usize, &str)> = None;
    let mut diffusion_line: Option<(usize, usize, &str)> = None;
    let mut reaction_lines = Vec::new();
    let mut conserved_lines = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content.chars().count() - trimmed.chars().count();
        let Some((key, rest)) = trimmed.split_once(':') else {
            return Err(syntax(line_no, indent + 1, "expected `directive:`"));
        };
        let body_col = indent + key.chars().count() + 2;
        let entry = (line_no, body_col, rest);
        match key.trim() {
            "species" => {
                if species_line.replace(entry).is_some() {
                    return Err(syntax(line_no, indent + 1, "duplicate `species:` line"));
                }
            }
            "diffusion" => {
                if diffusion_line.replace(entry).is_some() {
                    return Err(syntax(line_no, indent + 1, "duplicate `diffusion:` line"));
                }
            }
            "reaction" => reaction_lines.push(entry),
            "conserved" => conserved_lines.push(entry),
            other => {
                return Err(syntax(line_no, indent + 1, format!("unknown directive `{other}`")));
            }
        }
    }

    let (sl, sc, stext) = species_line.ok_or_else(|| syntax(1, 1, "missing `species:` line"))?;
    let mut species: Vec<String> = Vec::new();
    for t in lex(stext, sl, sc)? {
        match t.tok {
            Tok::Ident(name) => {
                if species.contains(&name) {
                    return Err(Error::DuplicateSpecies(name));
                }
                species.push(name);
            }
            _ => return Err(syntax(sl, t.col, "expected species name")),
        }
    }
    if species.is_empty() {
        return Err(syntax(sl, sc, "no species declared"));
    }

    if reaction_lines.is_empty() {
        return Err(syntax(1, 1, "missing `reaction:` line"));
    }
    let mut reactions = Vec::new();
    for (l, c, t) in reaction_lines {
        let toks = lex(t, l, c)?;
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: l,
            end_col: c + t.chars().count(),
        };
        reactions.extend(parse_reaction(&mut cur, &species)?);
    }

    let (dl, dc, dtext) = diffusion_line.ok_or_else(|| syntax(1, 1, "missing `diffusion:` line"))?;
    let dtoks = lex(dtext, dl, dc)?;
    let mut cur = Cursor {
        toks: &dtoks,
        pos: 0,
        line: dl,
        end_col: dc + dtext.chars().count(),
    };
    let diffusion = parse_diffusion(&mut cur, &species)?;

    let mut conserved = Vec::new();
    for (l, c, t) in conserved_lines {
        let toks = lex(t, l, c)?;
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: l,
            end_col: c + t.chars().count(),
        };
        conserved.push(parse_conserved(&mut cur, &species)?);
    }

    let net = ReactionNetwork::new(species, reactions, diffusion)?;
    if conserved.is_empty() {
        Ok(net)
    } else {
        net.with_conserved(conserved)
    }
}

fn render_complex(out: &mut String, c: &Complex, species: &[String]) {
    if c.is_empty() {
        out.push('0');
        return;
    }
    let mut first = true;
    for (&y, name) in c.coefficients().iter().zip(species) {
        if y == 0.0 {
            continue;
        }
        if !first {
            out.push_str(" + ");
        }
        first = false;
        if y != 1.0 {
            out.push_str(&format!("{y} "));
        }
        out.push_str(name);
    }
}

/// Writes a network back to the text format; every reaction is emitted as an
/// irreversible line so that parsing the output reproduces the same list.
pub fn render_network(net: &ReactionNetwork) -> String {
    let sp = net.species();
    let mut out = format!("species: {}\n", sp.join(" "));
    for r in net.reactions() {
        out.push_str("reaction: ");
        render_complex(&mut out, &r.reactant, sp);
        out.push_str(" -> ");
        render_complex(&mut out, &r.product, sp);
        out.push_str(&format!(" @ {:e}\n", r.rate));
    }
    out.push_str("diffusion:");
    for (name, d) in sp.iter().zip(net.diffusion()) {
        out.push_str(&format!(" {name}={d:e}"));
    }
    out.push('\n');
    for q in net.conserved() {
        out.push_str(&format!("conserved: {} =", q.name));
        let mut first = true;
        for (&c, name) in q.coefficients.iter().zip(sp) {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else if first { "" } else { "+" };
            if !sign.is_empty() {
                out.push_str(&format!(" {sign}"));
            }
            out.push_str(&format!(" {:e} {name}", c.abs()));
            first = false;
        }
        out.push('\n');
    }
    out
}
