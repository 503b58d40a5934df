use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::ChainMatrix;
use crate::error::{Error, Result};
use crate::samplers::ChainRecord;

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("cannot create {}", path.display()), e))
}

pub(crate) fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("cannot write {}", path.display()), e)
}

/// Writes `chain,iter,s_1,...,s_d,f,accepted`, one row per kept draw, chains in order.
/// Chain and iteration numbers start at 0.
pub fn write_draws_csv(path: &Path, chains: &ChainMatrix) -> Result<()> {
    let err = write_err(path);
    let mut w = create(path)?;
    let d = chains.dim();
    let mut header = String::from("chain,iter");
    for i in 1..=d {
        header.push_str(&format!(",s_{i}"));
    }
    header.push_str(",f,accepted\n");
    w.write_all(header.as_bytes()).map_err(&err)?;
    let mut line = String::new();
    for (m, c) in chains.chains().iter().enumerate() {
        for t in 0..c.len() {
            line.clear();
            line.push_str(&format!("{m},{t}"));
            for &v in c.state(t) {
                line.push(',');
                line.push_str(&format_float(v));
            }
            line.push(',');
            line.push_str(&format_float(c.potentials()[t]));
            line.push_str(if c.accepted()[t] { ",1\n" } else { ",0\n" });
            w.write_all(line.as_bytes()).map_err(&err)?;
        }
    }
    w.flush().map_err(&err)
}

/// Reads a file written by [`write_draws_csv`].
pub fn read_draws_csv(path: &Path) -> Result<ChainMatrix> {
    let file = path.display().to_string();
    let parse = |line: usize, msg: String| Error::Parse { file: file.clone(), line, msg };
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| parse(0, e.to_string()))?;
    let header = reader.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let d = cols.len().saturating_sub(4);
    let expected: Vec<String> = ["chain".to_string(), "iter".to_string()]
        .into_iter()
        .chain((1..=d).map(|i| format!("s_{i}")))
        .chain(["f".to_string(), "accepted".to_string()])
        .collect();
    if d == 0 || cols != expected {
        return Err(parse(1, format!("unexpected header `{}`", cols.join(","))));
    }
    let mut chains: Vec<(Vec<f64>, Vec<f64>, Vec<bool>)> = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| parse(line, e.to_string()))?;
        let int = |c: usize| {
            rec[c]
                .parse::<usize>()
                .map_err(|_| parse(line, format!("bad integer `{}` in column {}", &rec[c], cols[c])))
        };
        let (m, t) = (int(0)?, int(1)?);
        if m == chains.len() {
            chains.push(Default::default());
        }
        if m + 1 != chains.len() || t != chains[m].1.len() {
            return Err(parse(line, format!("rows out of order at chain {m}, iter {t}")));
        }
        let chain = &mut chains[m];
        for c in 2..d + 3 {
            let v = rec[c]
                .parse::<f64>()
                .map_err(|_| parse(line, format!("bad number `{}` in column {}", &rec[c], cols[c])))?;
            if c < d + 2 {
                chain.0.push(v);
            } else {
                chain.1.push(v);
            }
        }
        chain.2.push(match &rec[d + 3] {
            "1" => true,
            "0" => false,
            other => return Err(parse(line, format!("bad accepted flag `{other}`"))),
        });
    }
    let records = chains
        .into_iter()
        .map(|(s, f, a)| ChainRecord::from_parts(d, s, f, a))
        .collect::<Result<Vec<_>>>()?;
    ChainMatrix::new(records)
}
