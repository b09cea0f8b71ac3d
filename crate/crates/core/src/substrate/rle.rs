//! Run-length encoded Life patterns.
//!
//! Accepted input:
//!
//! ```text
//! #N optional comment lines start with '#'
//! x = 3, y = 3, rule = B3/S23
//! bob$2bo$3o!
//! ```
//!
//! Body tokens are `<count?>b` (dead), `<count?>o` (alive), `<count?>$`
//! (end of row) and `!` (end of pattern). Whitespace between tokens and
//! `#` lines are ignored. [`emit_rle`] writes the canonical form: no
//! trailing dead cells in a row, no trailing empty rows, empty rows folded
//! into the count of `$`, and body lines of at most 70 characters.

use std::collections::BTreeSet;

use thiserror::Error;

pub const MAX_LINE: usize = 70;

/// A finite Life pattern: declared extents and live-cell coordinates `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pattern {
    pub width: usize,
    pub height: usize,
    pub cells: BTreeSet<(usize, usize)>,
}

impl Pattern {
    pub fn cells_vec(&self) -> Vec<(usize, usize)> {
        self.cells.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct RleError {
    pub line: usize,
    pub column: usize,
    pub kind: RleErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RleErrorKind {
    #[error("missing header line")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported rule {0:?} (only B3/S23)")]
    UnsupportedRule(String),
    #[error("run count overflow")]
    CountOverflow,
    #[error("run exceeds declared width {0}")]
    ExceedsWidth(usize),
    #[error("rows exceed declared height {0}")]
    ExceedsHeight(usize),
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("run count without a tag")]
    DanglingCount,
    #[error("pattern not terminated by '!'")]
    Unterminated,
}

fn err(line: usize, column: usize, kind: RleErrorKind) -> RleError {
    RleError { line, column, kind }
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize), RleError> {
    let mut width = None;
    let mut height = None;
    for part in line.split(',') {
        let Some((key, value)) = part.split_once('=') else {
            return Err(err(
                lineno,
                1,
                RleErrorKind::MalformedHeader(format!("expected key = value, got {:?}", part.trim())),
            ));
        };
        let value = value.trim();
        match key.trim() {
            "x" => width = Some(parse_extent(value, lineno)?),
            "y" => height = Some(parse_extent(value, lineno)?),
            "rule" => {
                let canon = value.to_ascii_uppercase();
                if canon != "B3/S23" && canon != "23/3" {
                    return Err(err(lineno, 1, RleErrorKind::UnsupportedRule(value.to_string())));
                }
            }
            other => {
                return Err(err(
                    lineno,
                    1,
                    RleErrorKind::MalformedHeader(format!("unknown key {other:?}")),
                ));
            }
        }
    }
    match (width, height) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(err(
            lineno,
            1,
            RleErrorKind::MalformedHeader("x and y are required".into()),
        )),
    }
}

fn parse_extent(value: &str, lineno: usize) -> Result<usize, RleError> {
    value.parse::<usize>().map_err(|_| {
        err(
            lineno,
            1,
            RleErrorKind::MalformedHeader(format!("bad extent {value:?}")),
        )
    })
}

pub fn parse_rle(text: &str) -> Result<Pattern, RleError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (width, height) = loop {
        match lines.next() {
            None => return Err(err(1, 1, RleErrorKind::MissingHeader)),
            Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
            Some((n, l)) => break parse_header(l, n)?,
        }
    };

    let mut pattern = Pattern {
        width,
        height,
        cells: BTreeSet::new(),
    };
    let (mut x, mut y) = (0usize, 0usize);
    let mut count: Option<usize> = None;
    let mut last_pos = (1, 1);

    for (lineno, line) in lines {
        if line.trim_start().starts_with('#') {
            continue;
        }
        for (col0, ch) in line.chars().enumerate() {
            let column = col0 + 1;
            last_pos = (lineno, column);
            match ch {
                '0'..='9' => {
                    let digit = ch as usize - '0' as usize;
                    let next = count
                        .unwrap_or(0)
                        .checked_mul(10)
                        .and_then(|c| c.checked_add(digit))
                        .ok_or_else(|| err(lineno, column, RleErrorKind::CountOverflow))?;
                    count = Some(next);
                }
                'b' | 'o' => {
                    let run = count.take().unwrap_or(1);
                    if y >= height {
                        return Err(err(lineno, column, RleErrorKind::ExceedsHeight(height)));
                    }
                    let end = x
                        .checked_add(run)
                        .filter(|&e| e <= width)
                        .ok_or_else(|| err(lineno, column, RleErrorKind::ExceedsWidth(width)))?;
                    if ch == 'o' {
                        pattern.cells.extend((x..end).map(|cx| (cx, y)));
                    }
                    x = end;
                }
                '$' => {
                    let run = count.take().unwrap_or(1);
                    y = y
                        .checked_add(run)
                        .ok_or_else(|| err(lineno, column, RleErrorKind::CountOverflow))?;
                    x = 0;
                }
                '!' => {
                    if count.is_some() {
                        return Err(err(lineno, column, RleErrorKind::DanglingCount));
                    }
                    return Ok(pattern);
                }
                c if c.is_whitespace() => {}
                other => return Err(err(lineno, column, RleErrorKind::UnexpectedChar(other))),
            }
        }
    }
    Err(err(last_pos.0, last_pos.1, RleErrorKind::Unterminated))
}

fn push_token(out: &mut String, line_len: &mut usize, count: usize, tag: char) {
    let token = if count == 1 {
        tag.to_string()
    } else {
        format!("{count}{tag}")
    };
    if *line_len + token.len() > MAX_LINE {
        out.push('\n');
        *line_len = 0;
    }
    out.push_str(&token);
    *line_len += token.len();
}

pub fn emit_rle(pattern: &Pattern) -> String {
    let mut out = format!("x = {}, y = {}, rule = B3/S23\n", pattern.width, pattern.height);
    let mut line_len = 0;
    // cells are ordered by (x, y); regroup per row
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); pattern.height];
    for &(x, y) in &pattern.cells {
        rows[y].push(x);
    }
    let mut current_row = 0usize;
    for (y, xs) in rows.iter_mut().enumerate() {
        if xs.is_empty() {
            continue;
        }
        xs.sort_unstable();
        if y > current_row {
            push_token(&mut out, &mut line_len, y - current_row, '$');
            current_row = y;
        }
        let mut cursor = 0;
        let mut i = 0;
        while i < xs.len() {
            let start = xs[i];
            let mut end = start + 1;
            while i + 1 < xs.len() && xs[i + 1] == end {
                i += 1;
                end += 1;
            }
            if start > cursor {
                push_token(&mut out, &mut line_len, start - cursor, 'b');
            }
            push_token(&mut out, &mut line_len, end - start, 'o');
            cursor = end;
            i += 1;
        }
    }
    push_token(&mut out, &mut line_len, 1, '!');
    out.push('\n');
    out
}
