use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Fraction of all selections that went to each client. Duplicate
/// selections within a round count separately.
pub fn frequency_profile(history: &[Vec<usize>], clients: usize) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::invalid("selection history is empty"));
    }
    let mut counts = vec![0usize; clients];
    let mut total = 0usize;
    for round in history {
        for &k in round {
            if k >= clients {
                return Err(Error::ClientOutOfRange { index: k, clients });
            }
            counts[k] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::invalid("selection history contains no selections"));
    }
    Ok(counts.into_iter().map(|c| c as f64 / total as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub client: usize,
    pub ratio: f64,
    pub fraction: f64,
}

/// Profile rows in descending ratio order (ties by client id).
pub fn sorted_profile(ratios: &[f64], fractions: &[f64]) -> Vec<ProfileRow> {
    let mut rows: Vec<ProfileRow> = ratios
        .iter()
        .enumerate()
        .map(|(client, &ratio)| ProfileRow {
            client,
            ratio,
            fraction: fractions.get(client).copied().unwrap_or(f64::NAN),
        })
        .collect();
    rows.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.client.cmp(&b.client)));
    rows
}

/// `3;7;7;12`
pub fn format_ids(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

pub fn parse_ids(s: &str) -> Result<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::format("client id list", e)))
        .collect()
}

/// CSV with header `round,selected_ids`.
pub fn write_history<W: Write>(out: W, history: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "selected_ids"]).map_err(|e| Error::format("history", e))?;
    for (round, ids) in history.iter().enumerate() {
        w.write_record([round.to_string(), format_ids(ids)])
            .map_err(|e| Error::format("history", e))?;
    }
    w.flush().map_err(|e| Error::format("history", e))?;
    Ok(())
}

/// Reads any CSV with a `selected_ids` column (history or metrics files),
/// ordered by the `round` column when present.
pub fn read_history<R: Read>(input: R) -> Result<Vec<Vec<usize>>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| Error::format("history", e))?.clone();
    let ids_col = headers
        .iter()
        .position(|h| h == "selected_ids")
        .ok_or_else(|| Error::format("history", "missing selected_ids column"))?;
    let round_col = headers.iter().position(|h| h == "round");
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format("history", e))?;
        let round = match round_col {
            Some(c) => rec[c].parse::<usize>().map_err(|e| Error::format("history round", e))?,
            None => rows.len(),
        };
        rows.push((round, parse_ids(&rec[ids_col])?));
    }
    rows.sort_by_key(|(r, _)| *r);
    Ok(rows.into_iter().map(|(_, ids)| ids).collect())
}
