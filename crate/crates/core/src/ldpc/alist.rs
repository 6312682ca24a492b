//! alist text serialization for sparse code graphs, plus the coset vector
//! as a bit string.

use std::io::{BufRead, Write};

use super::LdpcCode;
use crate::error::CoreError;
use crate::Result;

/// Writes the code graph in alist format (1-based indices).
pub fn write_alist(code: &LdpcCode, w: &mut impl Write) -> Result<()> {
    let n = code.n();
    let m = code.num_checks();
    let dv = code.dv();
    let dc = code.dc();
    writeln!(w, "{n} {m}")?;
    writeln!(w, "{dv} {dc}")?;
    writeln!(w, "{}", vec![dv.to_string(); n].join(" "))?;
    writeln!(w, "{}", vec![dc.to_string(); m].join(" "))?;
    for v in 0..n {
        let row: Vec<String> = (0..dv)
            .map(|k| (code.check_of_edge(v * dv + k) + 1).to_string())
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    for c in 0..m {
        let row: Vec<String> = code
            .edges_of_check(c)
            .iter()
            .map(|&e| (code.var_of_edge(e) + 1).to_string())
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a regular code graph from alist format. The coset is zeroed;
/// attach one with [`LdpcCode::with_coset`] or [`coset_from_string`].
pub fn read_alist(r: &mut impl BufRead) -> Result<LdpcCode> {
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        for tok in line.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| CoreError::Parse(format!("bad alist token {tok:?}")))?;
            tokens.push(v);
        }
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| {
        it.next()
            .ok_or_else(|| CoreError::Parse(format!("alist truncated before {what}")))
    };
    let n = next("n")?;
    let m = next("m")?;
    let dv = next("max var degree")?;
    let dc = next("max check degree")?;
    for _ in 0..n {
        if next("var degree")? != dv {
            return Err(CoreError::Parse("irregular var degree; only regular codes supported".into()));
        }
    }
    for _ in 0..m {
        if next("check degree")? != dc {
            return Err(CoreError::Parse("irregular check degree; only regular codes supported".into()));
        }
    }
    let mut edge_chk = Vec::with_capacity(n * dv);
    for _ in 0..n {
        for _ in 0..dv {
            let c = next("check index")?;
            if c == 0 || c > m {
                return Err(CoreError::Parse(format!("check index {c} out of range")));
            }
            edge_chk.push(c - 1);
        }
    }
    // The per-check section is redundant given regularity; skip it if present.
    LdpcCode::from_edge_list(n, dv, dc, edge_chk)
}

/// Coset vector as a '0'/'1' string.
pub fn coset_to_string(code: &LdpcCode) -> String {
    code.coset().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

pub fn coset_from_string(s: &str) -> Result<Vec<u8>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0u8),
            '1' => Ok(1u8),
            other => Err(CoreError::Parse(format!("bad coset character {other:?}"))),
        })
        .collect()
}
