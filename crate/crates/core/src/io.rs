//! Text format for sequences and sets.
//!
//! Line 1: `m n`. Each following line: `mult c_1 c_2 ... c_n` with
//! `0 <= c_i < m`. `#` starts a comment, blank lines are skipped.
//! Sequences accumulate repeated vector lines; sets require `mult = 1`
//! and reject duplicates.

use crate::group::{GroupVec, VecSet, ZSequence};
use crate::{Error, Result};

struct Line<'a> {
    number: usize,
    text: &'a str,
}

fn data_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            None
        } else {
            Some(Line {
                number: i + 1,
                text: stripped,
            })
        }
    })
}

fn parse_header(line: &Line<'_>) -> Result<(u32, usize)> {
    let err = |msg: &str| Error::Parse {
        line: line.number,
        msg: msg.to_string(),
    };
    let fields: Vec<&str> = line.text.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(err("expected header `m n`"));
    }
    let m: u32 = fields[0].parse().map_err(|_| err("bad modulus"))?;
    let n: usize = fields[1].parse().map_err(|_| err("bad dimension"))?;
    Ok((m, n))
}

fn parse_entry(line: &Line<'_>, m: u32, n: usize) -> Result<(u32, GroupVec)> {
    let err = |msg: String| Error::Parse {
        line: line.number,
        msg,
    };
    let fields: Vec<&str> = line.text.split_whitespace().collect();
    if fields.len() != n + 1 {
        return Err(err(format!(
            "expected `mult` plus {n} coordinates, got {} fields",
            fields.len()
        )));
    }
    let mult: u32 = fields[0]
        .parse()
        .map_err(|_| err("bad multiplicity".into()))?;
    if mult == 0 {
        return Err(err("multiplicity must be >= 1".into()));
    }
    let mut coords = Vec::with_capacity(n);
    for f in &fields[1..] {
        let c: u32 = f.parse().map_err(|_| err(format!("bad coordinate `{f}`")))?;
        if c >= m {
            return Err(err(format!("coordinate {c} out of range for modulus {m}")));
        }
        coords.push(c);
    }
    Ok((mult, GroupVec::new(coords, m)?))
}

pub fn parse_sequence(text: &str) -> Result<ZSequence> {
    let mut lines = data_lines(text);
    let header = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    let (m, n) = parse_header(&header)?;
    let mut seq = ZSequence::new(m, n)?;
    for line in lines {
        let (mult, v) = parse_entry(&line, m, n)?;
        seq.push(&v, mult)?;
    }
    Ok(seq)
}

pub fn parse_set(text: &str) -> Result<VecSet> {
    let mut lines = data_lines(text);
    let header = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    let (m, n) = parse_header(&header)?;
    let mut set = VecSet::new(m, n)?;
    for line in lines {
        let (mult, v) = parse_entry(&line, m, n)?;
        if mult != 1 {
            return Err(Error::Parse {
                line: line.number,
                msg: "sets require mult = 1".into(),
            });
        }
        if !set.insert(&v)? {
            return Err(Error::Parse {
                line: line.number,
                msg: format!("duplicate vector {v}"),
            });
        }
    }
    Ok(set)
}

pub fn format_sequence(seq: &ZSequence) -> String {
    let mut out = format!("{} {}\n", seq.modulus(), seq.dim());
    for (v, mult) in seq.entries() {
        out.push_str(&mult.to_string());
        for c in v.coords() {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn format_set(set: &VecSet) -> String {
    let mut out = format!("{} {}\n", set.modulus(), set.dim());
    for v in set.iter() {
        out.push('1');
        for c in v.coords() {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_roundtrip() {
        let text = "# an extremal line\n3 2\n2 0 0\n1 1 2  # trailing comment\n\n1 1 2\n";
        let seq = parse_sequence(text).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(
            seq.multiplicity(&GroupVec::new(vec![1, 2], 3).unwrap()),
            2 // two lines accumulate
        );
        let again = parse_sequence(&format_sequence(&seq)).unwrap();
        assert_eq!(again, seq);
    }

    #[test]
    fn set_roundtrip() {
        let text = "5 1\n1 0\n1 2\n1 4\n";
        let set = parse_set(text).unwrap();
        assert_eq!(set.codes(), vec![0, 2, 4]);
        let again = parse_set(&format_set(&set)).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn set_rejects_duplicates_and_multiplicities() {
        assert!(matches!(
            parse_set("3 1\n1 1\n1 1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_set("3 1\n2 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_sequence("").is_err());
        assert!(parse_sequence("3\n").is_err());
        assert!(parse_sequence("3 2\n1 0\n").is_err()); // missing coordinate
        assert!(parse_sequence("3 2\n1 0 3\n").is_err()); // coordinate >= m
        assert!(parse_sequence("3 2\n0 0 0\n").is_err()); // zero multiplicity
        assert!(parse_sequence("x y\n").is_err());
    }
}
