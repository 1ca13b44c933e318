//! Render a presentation in the `.lcsa` surface syntax so that parsing the
//! output reproduces the presentation exactly.

use std::fmt::Write;

use lcsa_core::conformal::{GenSym, ModPoly, Mode, Presentation};

fn write_gens(out: &mut String, kw: &str, gens: &[GenSym]) {
    for g in gens {
        let parity = if g.parity { "odd" } else { "even" };
        writeln!(out, "{kw} {} {parity} deg {}", g.name, g.degree).unwrap();
    }
}

fn entry(v: &ModPoly, gens: &[GenSym]) -> String {
    if v.is_zero() {
        "0".into()
    } else {
        format!("{}", v.display(gens))
    }
}

/// Identifier-safe form of an algebra name for the surface syntax.
pub fn dsl_name(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    while s.ends_with('_') {
        s.pop();
    }
    if s.is_empty() || s.as_bytes()[0].is_ascii_digit() {
        s.insert(0, 'A');
    }
    s
}

pub fn print_algebra(pres: &Presentation) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "algebra {} ({}, {})",
        dsl_name(&pres.name),
        pres.spec.r,
        pres.spec.s
    )
    .unwrap();
    match &pres.mode {
        Mode::Free => {
            write_gens(&mut out, "gen", &pres.gens);
        }
        Mode::Rewrite { relations } => {
            write_gens(&mut out, "gen", &pres.gens);
            for r in relations {
                writeln!(out, "relation {}", entry(r, &pres.gens)).unwrap();
            }
        }
        Mode::Ambient { ambient, embed } => {
            write_gens(&mut out, "agen", &ambient.gens);
            write_gens(&mut out, "gen", &pres.gens);
            for (a, b) in ambient.table.keys() {
                let v = &ambient.table[&(*a, *b)];
                writeln!(
                    out,
                    "abracket {} {} = {}",
                    ambient.gens[*a as usize].name,
                    ambient.gens[*b as usize].name,
                    entry(v, &ambient.gens)
                )
                .unwrap();
            }
            for (g, e) in embed.iter().enumerate() {
                writeln!(
                    out,
                    "embed {} = {}",
                    pres.gens[g].name,
                    entry(e, &ambient.gens)
                )
                .unwrap();
            }
        }
    }
    for ((a, b), v) in &pres.table {
        writeln!(
            out,
            "bracket {} {} = {}",
            pres.gens[*a as usize].name,
            pres.gens[*b as usize].name,
            entry(v, &pres.gens)
        )
        .unwrap();
    }
    out
}

/// Structural equality of presentations, including the mode content.
pub fn presentations_equal(a: &Presentation, b: &Presentation) -> bool {
    if dsl_name(&a.name) != dsl_name(&b.name)
        || a.spec != b.spec
        || a.gens != b.gens
        || a.table != b.table
    {
        return false;
    }
    match (&a.mode, &b.mode) {
        (Mode::Free, Mode::Free) => true,
        (Mode::Rewrite { relations: r1 }, Mode::Rewrite { relations: r2 }) => r1 == r2,
        (
            Mode::Ambient {
                ambient: a1,
                embed: e1,
            },
            Mode::Ambient {
                ambient: a2,
                embed: e2,
            },
        ) => e1 == e2 && a1.spec == a2.spec && a1.gens == a2.gens && a1.table == a2.table,
        _ => false,
    }
}
