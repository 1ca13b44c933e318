//! Recursive-descent parser for the `.lcsa` algebra format and the `.g0m`
//! degree-0 module format. Every diagnostic carries a source location and
//! malformed input never panics.

use std::collections::BTreeMap;
use std::fmt;

use lcsa_core::algebras::BuiltinId;
use lcsa_core::annihilation::AnnElem;
use lcsa_core::conformal::{GenId, GenSym, ModPoly, Mode, Presentation};
use lcsa_core::repmod::G0Module;
use lcsa_core::superpoly::{q_parse, FamMono, Family, SuperPoly, VarSpec, Q};
use num_traits::One;

#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        col,
        message: msg.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let col = pos + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&(_, c2)) = chars.peek() {
                if c2.is_ascii_alphanumeric() || c2 == '_' || c2 == '*' {
                    s.push(c2);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: lineno,
                col,
            });
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, c2)) = chars.peek() {
                if c2.is_ascii_digit() {
                    s.push(c2);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Int(s),
                line: lineno,
                col,
            });
        } else if "(),=+-[]/;".contains(c) {
            chars.next();
            out.push(Token {
                tok: Tok::Punct(c),
                line: lineno,
                col,
            });
        } else {
            return err(lineno, col, format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(toks: Vec<Token>, line: usize) -> Self {
        Cursor { toks, pos: 0, line }
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .map(|t| (t.line, t.col))
            .unwrap_or((self.line, self.toks.last().map(|t| t.col + 1).unwrap_or(1)))
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        let (l, c) = self.here();
        match self.next() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) => Ok(s),
            _ => err(l, c, format!("expected {what}")),
        }
    }

    fn expect_punct(&mut self, p: char) -> Result<(), ParseError> {
        let (l, c) = self.here();
        match self.next() {
            Some(Token {
                tok: Tok::Punct(q), ..
            }) if q == p => Ok(()),
            _ => err(l, c, format!("expected `{p}`")),
        }
    }

    fn expect_int(&mut self) -> Result<i64, ParseError> {
        let (l, c) = self.here();
        let neg = matches!(
            self.peek(),
            Some(Token {
                tok: Tok::Punct('-'),
                ..
            })
        );
        if neg {
            self.next();
        }
        match self.next() {
            Some(Token {
                tok: Tok::Int(s), ..
            }) => {
                let v: i64 = s.parse().map_err(|_| ParseError {
                    line: l,
                    col: c,
                    message: "integer too large".into(),
                })?;
                Ok(if neg { -v } else { v })
            }
            _ => err(l, c, "expected an integer"),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            let (l, c) = self.here();
            err(l, c, "trailing input on line")
        }
    }
}

/// A single-digit variable factor (`l3`, `d1`, `y2`) or a name.
fn classify_factor(s: &str) -> Option<(char, u8)> {
    let b = s.as_bytes();
    if b.len() == 2 && (b[0] == b'l' || b[0] == b'd' || b[0] == b'y') && b[1].is_ascii_digit() {
        Some((b[0] as char, b[1] - b'0'))
    } else {
        None
    }
}

/// Parse a signed rational coefficient if present.
fn parse_coeff(cur: &mut Cursor) -> Result<Option<Q>, ParseError> {
    let mut sign = Q::one();
    let mut saw_sign = false;
    while let Some(Token {
        tok: Tok::Punct(p), ..
    }) = cur.peek()
    {
        match p {
            '-' => {
                sign = -sign;
                saw_sign = true;
                cur.next();
            }
            '+' => {
                saw_sign = true;
                cur.next();
            }
            _ => break,
        }
    }
    if let Some(Token {
        tok: Tok::Int(s), ..
    }) = cur.peek().cloned()
    {
        cur.next();
        let mut text = s;
        if matches!(
            cur.peek(),
            Some(Token {
                tok: Tok::Punct('/'),
                ..
            })
        ) {
            cur.next();
            let (l, c) = cur.here();
            match cur.next() {
                Some(Token {
                    tok: Tok::Int(d), ..
                }) => {
                    text.push('/');
                    text.push_str(&d);
                }
                _ => return err(l, c, "expected a denominator"),
            }
        }
        let (l, c) = cur.here();
        let q = q_parse(&text).ok_or(ParseError {
            line: l,
            col: c,
            message: "bad rational".into(),
        })?;
        Ok(Some(q * sign))
    } else if saw_sign {
        Ok(Some(sign))
    } else {
        Ok(None)
    }
}

/// One term of an algebra expression: optional coefficient, then factors in
/// written order, exactly one of which is a generator.
fn parse_term(
    cur: &mut Cursor,
    spec: VarSpec,
    gens: &[GenSym],
    lookup: &BTreeMap<String, GenId>,
) -> Result<ModPoly, ParseError> {
    let coeff = parse_coeff(cur)?.unwrap_or_else(Q::one);
    let mut poly = SuperPoly::constant(spec, coeff);
    let mut modpart: Option<ModPoly> = None;
    let mut any = false;
    while let Some(Token {
        tok: Tok::Ident(name),
        line,
        col,
    }) = cur.peek().cloned()
    {
        cur.next();
        any = true;
        if let Some((fam, idx)) = classify_factor(&name) {
            let fam = match fam {
                'l' => Family::Lambda,
                'd' => Family::Del,
                _ => return err(line, col, "y-factors belong to module files"),
            };
            if idx == 0 || idx > spec.nvars() {
                return err(line, col, format!("index {idx} out of range"));
            }
            match &mut modpart {
                None => poly = poly.mul(&SuperPoly::var(spec, fam, idx)),
                Some(v) => *v = v.rmul_var(fam, idx, gens),
            }
        } else {
            let Some(&g) = lookup.get(&name) else {
                return err(line, col, format!("unknown generator `{name}`"));
            };
            if modpart.is_some() {
                return err(line, col, "two generators in one term");
            }
            modpart = Some(ModPoly::gen(spec, g).lmul_poly(&poly));
        }
    }
    let (l, c) = cur.here();
    if !any {
        return err(l, c, "empty term");
    }
    modpart.ok_or(ParseError {
        line: l,
        col: c,
        message: "term without a generator".into(),
    })
}

fn parse_expr(
    cur: &mut Cursor,
    spec: VarSpec,
    gens: &[GenSym],
    lookup: &BTreeMap<String, GenId>,
) -> Result<ModPoly, ParseError> {
    let mut acc = parse_term(cur, spec, gens, lookup)?;
    while let Some(Token {
        tok: Tok::Punct(p), ..
    }) = cur.peek()
    {
        if *p != '+' && *p != '-' {
            break;
        }
        // sign handled inside parse_term via parse_coeff
        let t = parse_term(cur, spec, gens, lookup)?;
        acc = acc.add(&t);
    }
    Ok(acc)
}

struct AlgBuilder {
    name: String,
    spec: VarSpec,
    gens: Vec<GenSym>,
    agens: Vec<GenSym>,
    table: BTreeMap<(GenId, GenId), ModPoly>,
    atable: BTreeMap<(GenId, GenId), ModPoly>,
    embed: BTreeMap<GenId, ModPoly>,
    relations: Vec<ModPoly>,
}

fn lookup_of(gens: &[GenSym]) -> BTreeMap<String, GenId> {
    gens.iter()
        .enumerate()
        .map(|(i, g)| (g.name.clone(), i as GenId))
        .collect()
}

/// Parse an algebra source file into a presentation.
pub fn parse_algebra(text: &str) -> Result<Presentation, ParseError> {
    let mut builder: Option<AlgBuilder> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let toks = lex_line(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(toks, lineno);
        let head = cur.expect_ident("a declaration keyword")?;
        match head.as_str() {
            "builtin" => {
                let mut rest = String::new();
                while let Some(t) = cur.next() {
                    match t.tok {
                        Tok::Ident(s) => rest.push_str(&s),
                        Tok::Int(s) => {
                            if !rest.ends_with('(') && !rest.is_empty() && !rest.ends_with(',') {
                                rest.push(' ');
                            }
                            rest.push_str(&s);
                        }
                        Tok::Punct(c) => rest.push(c),
                    }
                }
                let canonical = if rest.contains('(') {
                    rest
                } else {
                    // `builtin RW 2 1` form
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    match parts.as_slice() {
                        [name] => name.to_string(),
                        [name, a] => format!("{name}({a})"),
                        [name, a, b] => format!("{name}({a},{b})"),
                        _ => rest,
                    }
                };
                let id = BuiltinId::parse(&canonical).ok_or(ParseError {
                    line: lineno,
                    col: 1,
                    message: format!("unknown builtin `{canonical}`"),
                })?;
                return id.build().map_err(|e| ParseError {
                    line: lineno,
                    col: 1,
                    message: e.to_string(),
                });
            }
            "algebra" => {
                let name = cur.expect_ident("an algebra name")?;
                cur.expect_punct('(')?;
                let r = cur.expect_int()?;
                cur.expect_punct(',')?;
                let s = cur.expect_int()?;
                cur.expect_punct(')')?;
                cur.expect_end()?;
                if !(0..=6).contains(&r) || !(0..=6).contains(&s) {
                    return err(lineno, 1, "supported range is r, s <= 6");
                }
                builder = Some(AlgBuilder {
                    name,
                    spec: VarSpec::new(r as u8, s as u8),
                    gens: Vec::new(),
                    agens: Vec::new(),
                    table: BTreeMap::new(),
                    atable: BTreeMap::new(),
                    embed: BTreeMap::new(),
                    relations: Vec::new(),
                });
            }
            "gen" | "agen" => {
                let b = builder.as_mut().ok_or(ParseError {
                    line: lineno,
                    col: 1,
                    message: "declaration before the algebra header".into(),
                })?;
                let name = cur.expect_ident("a generator name")?;
                let parity = match cur.expect_ident("even|odd")?.as_str() {
                    "even" => false,
                    "odd" => true,
                    other => {
                        return err(lineno, 1, format!("expected even or odd, found `{other}`"))
                    }
                };
                let kw = cur.expect_ident("deg")?;
                if kw != "deg" {
                    return err(lineno, 1, "expected `deg`");
                }
                let degree = cur.expect_int()?;
                cur.expect_end()?;
                let target = if head == "gen" {
                    &mut b.gens
                } else {
                    &mut b.agens
                };
                if target.iter().any(|g| g.name == name) {
                    return err(lineno, 1, format!("duplicate generator `{name}`"));
                }
                if classify_factor(&name).is_some() {
                    return err(
                        lineno,
                        1,
                        format!("`{name}` collides with a variable factor"),
                    );
                }
                target.push(GenSym {
                    name,
                    parity,
                    degree,
                });
            }
            "bracket" | "abracket" => {
                let b = builder.as_mut().ok_or(ParseError {
                    line: lineno,
                    col: 1,
                    message: "declaration before the algebra header".into(),
                })?;
                let ambient = head == "abracket";
                let gens = if ambient { &b.agens } else { &b.gens };
                let lookup = lookup_of(gens);
                let (l1, c1) = cur.here();
                let a = cur.expect_ident("a generator name")?;
                let bb = cur.expect_ident("a generator name")?;
                let Some(&ga) = lookup.get(&a) else {
                    return err(l1, c1, format!("unknown generator `{a}`"));
                };
                let Some(&gb) = lookup.get(&bb) else {
                    return err(l1, c1, format!("unknown generator `{bb}`"));
                };
                cur.expect_punct('=')?;
                let value = if cur.at_end() {
                    return err(
                        lineno,
                        1,
                        "missing bracket value (write `= 0 <gen>`... or `0`)",
                    );
                } else if matches!(cur.peek(), Some(Token { tok: Tok::Int(z), .. }) if z == "0")
                    && cur.toks.len() == cur.pos + 1
                {
                    cur.next();
                    ModPoly::zero(b.spec)
                } else {
                    parse_expr(&mut cur, b.spec, gens, &lookup)?
                };
                cur.expect_end()?;
                // parity homogeneity of the entry
                let pa = gens[ga as usize].parity ^ gens[gb as usize].parity;
                if let Some(p) = value.parity(gens) {
                    if p != pa && !value.is_zero() {
                        return err(lineno, 1, "bracket entry violates parity");
                    }
                } else if !value.is_zero() {
                    return err(lineno, 1, "bracket entry is not parity homogeneous");
                }
                let t = if ambient { &mut b.atable } else { &mut b.table };
                t.insert((ga, gb), value);
            }
            "embed" => {
                let b = builder.as_mut().ok_or(ParseError {
                    line: lineno,
                    col: 1,
                    message: "declaration before the algebra header".into(),
                })?;
                let (l1, c1) = cur.here();
                let name = cur.expect_ident("a generator name")?;
                let lookup = lookup_of(&b.gens);
                let Some(&g) = lookup.get(&name) else {
                    return err(l1, c1, format!("unknown generator `{name}`"));
                };
                cur.expect_punct('=')?;
                let alookup = lookup_of(&b.agens);
                let value = parse_expr(&mut cur, b.spec, &b.agens, &alookup)?;
                cur.expect_end()?;
                b.embed.insert(g, value);
            }
            "relation" => {
                let b = builder.as_mut().ok_or(ParseError {
                    line: lineno,
                    col: 1,
                    message: "declaration before the algebra header".into(),
                })?;
                let lookup = lookup_of(&b.gens);
                let gens = b.gens.clone();
                let value = parse_expr(&mut cur, b.spec, &gens, &lookup)?;
                cur.expect_end()?;
                b.relations.push(value);
            }
            other => {
                return err(lineno, 1, format!("unknown declaration `{other}`"));
            }
        }
    }
    let b = builder.ok_or(ParseError {
        line: 1,
        col: 1,
        message: "missing `algebra NAME (r, s)` header".into(),
    })?;
    finish_algebra(b)
}

fn finish_algebra(b: AlgBuilder) -> Result<Presentation, ParseError> {
    let mode = if !b.agens.is_empty() {
        // ambient mode: embeddings must cover every generator
        let n = b.agens.len() as GenId;
        for i in 0..n {
            for j in 0..n {
                if !b.atable.contains_key(&(i, j)) && !b.atable.contains_key(&(j, i)) {
                    return err(
                        1,
                        1,
                        format!(
                            "ambient bracket table is missing ({}, {})",
                            b.agens[i as usize].name, b.agens[j as usize].name
                        ),
                    );
                }
            }
        }
        let mut ambient = Presentation {
            name: format!("{}_ambient", b.name),
            spec: b.spec,
            gens: b.agens.clone(),
            table: b.atable.clone(),
            mode: Mode::Free,
        };
        ambient.complete_table_by_skew();
        let mut embed = Vec::new();
        for g in 0..b.gens.len() as GenId {
            let Some(e) = b.embed.get(&g) else {
                return err(
                    1,
                    1,
                    format!("missing embedding for `{}`", b.gens[g as usize].name),
                );
            };
            embed.push(e.clone());
        }
        Mode::Ambient {
            ambient: Box::new(ambient),
            embed,
        }
    } else if !b.relations.is_empty() {
        Mode::Rewrite {
            relations: b.relations.clone(),
        }
    } else {
        Mode::Free
    };
    let n = b.gens.len() as GenId;
    for i in 0..n {
        for j in 0..n {
            if !b.table.contains_key(&(i, j)) && !b.table.contains_key(&(j, i)) {
                return err(
                    1,
                    1,
                    format!(
                        "bracket table is missing ({}, {})",
                        b.gens[i as usize].name, b.gens[j as usize].name
                    ),
                );
            }
        }
    }
    let mut pres = Presentation {
        name: b.name,
        spec: b.spec,
        gens: b.gens,
        table: b.table,
        mode,
    };
    pres.complete_table_by_skew();
    Ok(pres)
}

/// One term of a module element: coefficient, y-factors and one generator.
fn parse_ann_term(
    cur: &mut Cursor,
    spec: VarSpec,
    gens: &[GenSym],
    lookup: &BTreeMap<String, GenId>,
) -> Result<AnnElem, ParseError> {
    let coeff = parse_coeff(cur)?.unwrap_or_else(Q::one);
    let mut ymono = FamMono::one();
    let mut sign = 1i64;
    let mut gen: Option<GenId> = None;
    let mut any = false;
    while let Some(Token {
        tok: Tok::Ident(name),
        line,
        col,
    }) = cur.peek().cloned()
    {
        cur.next();
        any = true;
        if let Some((fam, idx)) = classify_factor(&name) {
            if fam != 'y' {
                return err(line, col, "only y-factors are allowed here");
            }
            if idx == 0 || idx > spec.nvars() {
                return err(line, col, format!("index {idx} out of range"));
            }
            let v = FamMono::var(spec, idx);
            // a y-factor written after the generator crosses it
            if let Some(g) = gen {
                if spec.is_odd(idx) && gens[g as usize].parity {
                    sign = -sign;
                }
            }
            match ymono.mul(&v) {
                None => {
                    // odd square: the whole term vanishes
                    ymono = FamMono::one();
                    sign = 0;
                }
                Some((s, m)) => {
                    sign *= s as i64;
                    ymono = m;
                }
            }
        } else {
            let Some(&g) = lookup.get(&name) else {
                return err(line, col, format!("unknown generator `{name}`"));
            };
            if gen.is_some() {
                return err(line, col, "two generators in one term");
            }
            gen = Some(g);
        }
    }
    let (l, c) = cur.here();
    if !any {
        return err(l, c, "empty term");
    }
    let g = gen.ok_or(ParseError {
        line: l,
        col: c,
        message: "term without a generator".into(),
    })?;
    let mut out = AnnElem::zero();
    out.add_term(
        ymono,
        g,
        coeff * Q::from_integer(num_bigint::BigInt::from(sign)),
    );
    Ok(out)
}

fn parse_ann_expr(
    cur: &mut Cursor,
    spec: VarSpec,
    gens: &[GenSym],
    lookup: &BTreeMap<String, GenId>,
) -> Result<AnnElem, ParseError> {
    let mut acc = parse_ann_term(cur, spec, gens, lookup)?;
    while let Some(Token {
        tok: Tok::Punct(p), ..
    }) = cur.peek()
    {
        if *p != '+' && *p != '-' {
            break;
        }
        let t = parse_ann_term(cur, spec, gens, lookup)?;
        acc = acc.add(&t);
    }
    Ok(acc)
}

/// Parse a matrix literal `[[a, b], [c, d]]` of exact rationals.
fn parse_matrix(cur: &mut Cursor) -> Result<Vec<Vec<Q>>, ParseError> {
    cur.expect_punct('[')?;
    let mut rows = Vec::new();
    loop {
        cur.expect_punct('[')?;
        let mut row = Vec::new();
        loop {
            let (l, c) = cur.here();
            let Some(q) = parse_coeff(cur)? else {
                return err(l, c, "expected a rational entry");
            };
            row.push(q);
            match cur.peek() {
                Some(Token {
                    tok: Tok::Punct(','),
                    ..
                }) => {
                    cur.next();
                }
                Some(Token {
                    tok: Tok::Punct(']'),
                    ..
                }) => {
                    cur.next();
                    break;
                }
                _ => {
                    let (l, c) = cur.here();
                    return err(l, c, "expected `,` or `]` in a matrix row");
                }
            }
        }
        rows.push(row);
        match cur.peek() {
            Some(Token {
                tok: Tok::Punct(','),
                ..
            }) => {
                cur.next();
            }
            Some(Token {
                tok: Tok::Punct(']'),
                ..
            }) => {
                cur.next();
                break;
            }
            _ => {
                let (l, c) = cur.here();
                return err(l, c, "expected `,` or `]` after a matrix row");
            }
        }
    }
    Ok(rows)
}

/// Parse a degree-0 module file against a previously loaded algebra.
pub fn parse_g0_module(text: &str, pres: &Presentation) -> Result<G0Module, ParseError> {
    let lookup = lookup_of(&pres.gens);
    let mut name_seen = false;
    let mut basis: Vec<(String, bool)> = Vec::new();
    let mut span: Vec<AnnElem> = Vec::new();
    let mut mats: Vec<Vec<Vec<Q>>> = Vec::new();
    let mut pending: Vec<(usize, AnnElem, Vec<Vec<Q>>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let toks = lex_line(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(toks, lineno);
        let head = cur.expect_ident("a declaration keyword")?;
        match head.as_str() {
            "module" => {
                let _name = cur.expect_ident("a module name")?;
                let kw = cur.expect_ident("over")?;
                if kw != "over" {
                    return err(lineno, 1, "expected `over`");
                }
                // the rest of the line names the algebra
                let mut aname = String::new();
                while let Some(t) = cur.next() {
                    match t.tok {
                        Tok::Ident(s) => aname.push_str(&s),
                        Tok::Int(s) => aname.push_str(&s),
                        Tok::Punct(c) => aname.push(c),
                    }
                }
                let norm = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
                let canon = BuiltinId::parse(&aname)
                    .map(|b| b.display_name())
                    .unwrap_or_else(|| norm(&aname));
                let pcanon = BuiltinId::parse(&pres.name)
                    .map(|b| b.display_name())
                    .unwrap_or_else(|| norm(&pres.name));
                if canon != pcanon {
                    return err(
                        lineno,
                        1,
                        format!(
                            "module is over `{aname}` but the algebra is `{}`",
                            pres.name
                        ),
                    );
                }
                name_seen = true;
            }
            "basis" => {
                let name = cur.expect_ident("a basis name")?;
                let parity = match cur.expect_ident("even|odd")?.as_str() {
                    "even" => false,
                    "odd" => true,
                    other => {
                        return err(lineno, 1, format!("expected even or odd, found `{other}`"))
                    }
                };
                cur.expect_end()?;
                basis.push((name, parity));
            }
            "action" => {
                let el = parse_ann_expr(&mut cur, pres.spec, &pres.gens, &lookup)?;
                cur.expect_punct('=')?;
                let m = parse_matrix(&mut cur)?;
                cur.expect_end()?;
                pending.push((lineno, el, m));
            }
            other => return err(lineno, 1, format!("unknown declaration `{other}`")),
        }
    }
    if !name_seen {
        return err(1, 1, "missing `module NAME over ALGEBRA` header");
    }
    if basis.is_empty() {
        return err(1, 1, "module declares no basis vectors");
    }
    let l = basis.len();
    for (lineno, el, m) in pending {
        if m.len() != l || m.iter().any(|r| r.len() != l) {
            return err(lineno, 1, format!("matrix must be {l} x {l}"));
        }
        span.push(el);
        mats.push(m);
    }
    Ok(G0Module { basis, span, mats })
}

/// Parse a standalone element expression (for command-line arguments).
pub fn parse_element(text: &str, pres: &Presentation) -> Result<ModPoly, ParseError> {
    let toks = lex_line(text, 1)?;
    if toks.is_empty() {
        return err(1, 1, "empty expression");
    }
    let mut cur = Cursor::new(toks, 1);
    let lookup = lookup_of(&pres.gens);
    let v = parse_expr(&mut cur, pres.spec, &pres.gens, &lookup)?;
    cur.expect_end()?;
    Ok(v)
}

/// Parse a standalone annihilation-element expression.
pub fn parse_ann_element(text: &str, pres: &Presentation) -> Result<AnnElem, ParseError> {
    let toks = lex_line(text, 1)?;
    if toks.is_empty() {
        return err(1, 1, "empty expression");
    }
    let mut cur = Cursor::new(toks, 1);
    let lookup = lookup_of(&pres.gens);
    let v = parse_ann_expr(&mut cur, pres.spec, &pres.gens, &lookup)?;
    cur.expect_end()?;
    Ok(v)
}
