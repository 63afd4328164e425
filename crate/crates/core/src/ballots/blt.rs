use std::fmt::Write as _;

use super::{Profile, Ranking};
use crate::candidates::MAX_CANDIDATES;
use crate::error::ParseError;

/// A parsed BLT file: the ballots plus the number of seats.
#[derive(Clone, Debug, PartialEq)]
pub struct BltFile {
    pub profile: Profile,
    pub seats: usize,
}

fn unquote(line: &str) -> Option<String> {
    let t = line.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        Some(t[1..t.len() - 1].to_string())
    } else {
        None
    }
}

/// Parses the BLT ballot format, expanding weighted lines into unit ballots.
pub fn parse_blt(input: &str) -> Result<BltFile, ParseError> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(ParseError::Header {
        line: 1,
        reason: "empty input".into(),
    })?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    let header_err = |reason: &str| ParseError::Header {
        line: hline,
        reason: reason.into(),
    };
    if nums.len() != 2 {
        return Err(header_err("expected \"<candidates> <seats>\""));
    }
    let count: usize = nums[0].parse().map_err(|_| header_err("candidate count is not a number"))?;
    let seats: usize = nums[1].parse().map_err(|_| header_err("seat count is not a number"))?;
    if count == 0 || count > MAX_CANDIDATES {
        return Err(header_err("candidate count out of range"));
    }

    let mut voters = Vec::new();
    let mut terminated = false;
    let mut last_line = hline;
    for (line, text) in lines.by_ref() {
        last_line = line;
        if text == "0" {
            terminated = true;
            break;
        }
        let mut fields = text.split_whitespace();
        let weight: u64 = fields
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| ParseError::Ballot {
                line,
                reason: "weight is not a non-negative integer".into(),
            })?;
        let mut entries = Vec::new();
        let mut closed = false;
        for f in fields {
            if closed {
                return Err(ParseError::Ballot {
                    line,
                    reason: "text after terminating 0".into(),
                });
            }
            let c: usize = f.parse().map_err(|_| ParseError::Ballot {
                line,
                reason: format!("\"{f}\" is not a candidate number"),
            })?;
            if c == 0 {
                closed = true;
                continue;
            }
            if c > count {
                return Err(ParseError::CandidateOutOfRange {
                    line,
                    candidate: c,
                    count,
                });
            }
            if entries.contains(&(c - 1)) {
                return Err(ParseError::DuplicateCandidate { line, candidate: c });
            }
            entries.push(c - 1);
        }
        if !closed {
            return Err(ParseError::MissingTerminator { line });
        }
        let ranking = Ranking::from_vec_unchecked(entries);
        for _ in 0..weight {
            voters.push(ranking.clone());
        }
    }
    if !terminated {
        return Err(ParseError::Trailer {
            line: last_line,
            reason: "missing the lone 0 that ends the ballot section".into(),
        });
    }

    let mut names = Vec::with_capacity(count);
    let mut title = None;
    for (line, text) in lines {
        let s = unquote(text).ok_or_else(|| ParseError::Trailer {
            line,
            reason: "expected a quoted string".into(),
        })?;
        if names.len() < count {
            names.push(s);
        } else if title.is_none() {
            title = Some(s);
        } else {
            return Err(ParseError::Trailer {
                line,
                reason: "unexpected text after the title".into(),
            });
        }
        last_line = line;
    }
    if names.len() < count {
        return Err(ParseError::Trailer {
            line: last_line,
            reason: format!("expected {count} candidate names, found {}", names.len()),
        });
    }
    let label = title.unwrap_or_default();
    Ok(BltFile {
        profile: Profile {
            voters,
            candidate_count: count,
            names,
            label,
        },
        seats,
    })
}

/// Writes a profile in BLT format, merging runs of identical ballots.
pub fn write_blt(profile: &Profile, seats: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", profile.candidate_count, seats);
    let mut i = 0;
    while i < profile.voters.len() {
        let r = &profile.voters[i];
        let mut j = i + 1;
        while j < profile.voters.len() && profile.voters[j] == *r {
            j += 1;
        }
        let _ = write!(out, "{}", j - i);
        for c in r.as_slice() {
            let _ = write!(out, " {}", c + 1);
        }
        out.push_str(" 0\n");
        i = j;
    }
    out.push_str("0\n");
    for c in 0..profile.candidate_count {
        let _ = writeln!(out, "\"{}\"", profile.name(c).replace('"', "'"));
    }
    let _ = writeln!(out, "\"{}\"", profile.label.replace('"', "'"));
    out
}
