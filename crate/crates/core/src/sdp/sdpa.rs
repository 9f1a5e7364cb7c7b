//! Sparse SDPA text format.
//!
//! A file holds `m`, the block count, the block structure, the vector `c`
//! and one line `matno blkno i j value` per upper-triangular entry, with
//! 1-based indices. Matrix 0 is `F0`. The file is read as
//!
//! ```text
//!   max <F0, Y>  s.t.  <F_i, Y> = c_i,  Y PSD
//! ```
//!
//! which is the dual side of the SDPA convention. A negative block size
//! declares a diagonal block; it is expanded into that many `1 x 1` blocks.

use std::fmt::Write as _;

use super::{BlockCoefficients, BlockSdp, Constraint, Sense};
use crate::error::{Error, Result};

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
}

/// Text after `"`, `*` or `=` is a comment.
fn strip_comment(line: &str) -> &str {
    let end = line.find(['"', '*', '=']).unwrap_or(line.len());
    line[..end].trim()
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Parse { line, message: format!("cannot parse `{tok}`") })
}

/// Parses an SDPA sparse file into a maximization problem.
pub fn parse(text: &str) -> Result<BlockSdp> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty());

    let mut header_tokens = Vec::new();
    let mut last_line = 0;
    // m, nblocks, the block structure and c may share or span lines.
    let mut need = 2usize;
    while header_tokens.len() < need {
        let (ln, l) = lines.next().ok_or(Error::Parse { line: last_line, message: "truncated header".into() })?;
        last_line = ln;
        for t in tokens(l) {
            header_tokens.push((ln, t.to_string()));
        }
        if header_tokens.len() >= 2 {
            let m: usize = parse_num(&header_tokens[0].1, header_tokens[0].0)?;
            let nb: usize = parse_num(&header_tokens[1].1, header_tokens[1].0)?;
            need = 2 + nb + m;
        }
    }
    let m: usize = parse_num(&header_tokens[0].1, header_tokens[0].0)?;
    let nb: usize = parse_num(&header_tokens[1].1, header_tokens[1].0)?;
    if header_tokens.len() > need {
        return Err(Error::Parse { line: last_line, message: "unexpected tokens after the c vector".into() });
    }

    // Map (declared block, index) to (expanded block, index).
    let mut declared = Vec::with_capacity(nb);
    for (ln, t) in &header_tokens[2..2 + nb] {
        let s: i64 = parse_num(t, *ln)?;
        if s == 0 {
            return Err(Error::Parse { line: *ln, message: "zero block size".into() });
        }
        declared.push(s);
    }
    let mut first = Vec::with_capacity(nb);
    let mut dims = Vec::new();
    for &s in &declared {
        first.push(dims.len());
        if s > 0 {
            dims.push(s as usize);
        } else {
            dims.extend(std::iter::repeat(1).take((-s) as usize));
        }
    }
    let mut rhs = Vec::with_capacity(m);
    for (ln, t) in &header_tokens[2 + nb..] {
        rhs.push(parse_num::<f64>(t, *ln)?);
    }

    let mut objective = BlockCoefficients::new();
    let mut mats = vec![BlockCoefficients::new(); m];
    for (ln, l) in lines {
        let t: Vec<&str> = tokens(l).collect();
        if t.len() != 5 {
            return Err(Error::Parse { line: ln, message: "expected `matno blkno i j value`".into() });
        }
        let matno: usize = parse_num(t[0], ln)?;
        let blk: usize = parse_num(t[1], ln)?;
        let i: usize = parse_num(t[2], ln)?;
        let j: usize = parse_num(t[3], ln)?;
        let v: f64 = parse_num(t[4], ln)?;
        if matno > m || blk == 0 || blk > nb || i == 0 || j == 0 {
            return Err(Error::Parse { line: ln, message: "index out of range".into() });
        }
        let size = declared[blk - 1];
        let (block, r, c) = if size > 0 {
            if i > size as usize || j > size as usize {
                return Err(Error::Parse { line: ln, message: "entry outside its block".into() });
            }
            (first[blk - 1], i - 1, j - 1)
        } else {
            if i != j || i > (-size) as usize {
                return Err(Error::Parse { line: ln, message: "off-diagonal entry in a diagonal block".into() });
            }
            (first[blk - 1] + i - 1, 0, 0)
        };
        let target = if matno == 0 { &mut objective } else { &mut mats[matno - 1] };
        target.add(block, r, c, v);
    }
    let constraints = mats
        .into_iter()
        .zip(rhs)
        .map(|(coefficients, rhs)| Constraint { coefficients, rhs })
        .collect();
    BlockSdp::new(dims, Sense::Maximize, objective, constraints)
}

/// Writes a problem in SDPA sparse format. Minimization problems are written
/// with a negated objective so that the file always means maximization.
pub fn dump(problem: &BlockSdp) -> String {
    let mut out = String::new();
    let sign = match problem.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let _ = writeln!(out, "{}", problem.constraints().len());
    let _ = writeln!(out, "{}", problem.block_dims().len());
    let dims: Vec<String> = problem.block_dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{}", dims.join(" "));
    let rhs: Vec<String> = problem.constraints().iter().map(|c| format!("{:e}", c.rhs)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    let mut emit = |matno: usize, coeffs: &BlockCoefficients, scale: f64| {
        for e in coeffs.entries() {
            let _ = writeln!(out, "{} {} {} {} {:e}", matno, e.block + 1, e.row + 1, e.col + 1, scale * e.value);
        }
    };
    emit(0, problem.objective(), sign);
    for (k, c) in problem.constraints().iter().enumerate() {
        emit(k + 1, &c.coefficients, 1.0);
    }
    out
}
