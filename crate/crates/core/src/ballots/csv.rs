use std::collections::HashMap;

use super::{Profile, Ranking};
use crate::error::ParseError;

/// Parses one-ballot-per-row CSV with columns `rank1..rankK`.
///
/// Cells hold candidate names when `names` is given, 1-based candidate
/// numbers otherwise. Blank cells mean no preference at that rank.
pub fn parse_csv(input: &str, names: Option<&[String]>) -> Result<Profile, ParseError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(input.as_bytes());
    let lookup: Option<HashMap<&str, usize>> =
        names.map(|n| n.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect());

    let mut rows = Vec::new();
    let mut max_seen = 0;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| ParseError::Ballot {
            line,
            reason: e.to_string(),
        })?;
        let mut entries = Vec::new();
        for cell in record.iter().filter(|c| !c.is_empty()) {
            let c = match &lookup {
                Some(map) => *map.get(cell).ok_or_else(|| ParseError::Ballot {
                    line,
                    reason: format!("unknown candidate \"{cell}\""),
                })?,
                None => {
                    let n: usize = cell.parse().map_err(|_| ParseError::Ballot {
                        line,
                        reason: format!("\"{cell}\" is not a candidate number"),
                    })?;
                    if n == 0 {
                        return Err(ParseError::CandidateOutOfRange {
                            line,
                            candidate: 0,
                            count: max_seen,
                        });
                    }
                    n - 1
                }
            };
            if entries.contains(&c) {
                return Err(ParseError::DuplicateCandidate {
                    line,
                    candidate: c + 1,
                });
            }
            max_seen = max_seen.max(c + 1);
            entries.push(c);
        }
        rows.push(Ranking::from_vec_unchecked(entries));
    }
    let names: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => (1..=max_seen).map(|c| format!("Candidate {c}")).collect(),
    };
    Ok(Profile {
        voters: rows,
        candidate_count: names.len(),
        names,
        label: String::new(),
    })
}
