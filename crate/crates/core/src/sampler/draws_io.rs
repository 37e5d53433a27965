//! Columnar CSV storage of kept draws.
//!
//! Header: `beta.<name>…,sigma2,z,nu_t,nu_s,p_1,p_2,p_3`, with `z` the
//! one-based component number and floats written with 17 significant digits.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::smn::ModelKind;

use super::chain::{ChainOutput, Draw};

const PREFIX: &str = "beta.";
const TAIL: [&str; 7] = ["sigma2", "z", "nu_t", "nu_s", "p_1", "p_2", "p_3"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_draws_csv(path: &Path, chain: &ChainOutput) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_draws(&mut w, &chain.columns, &chain.draws)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_draws<W: Write>(w: &mut W, columns: &[String], draws: &[Draw]) -> Result<()> {
    let mut header: Vec<String> = columns.iter().map(|c| format!("{PREFIX}{c}")).collect();
    header.extend(TAIL.iter().map(|s| s.to_string()));
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for d in draws {
        line.clear();
        for b in &d.beta {
            line.push_str(&fmt(*b));
            line.push(',');
        }
        line.push_str(&fmt(d.sigma2));
        line.push(',');
        line.push_str(&d.z.number().to_string());
        for v in [d.nu_t, d.nu_s, d.p[0], d.p[1], d.p[2]] {
            line.push(',');
            line.push_str(&fmt(v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Draws read back from disk together with the covariate names.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawsFile {
    pub columns: Vec<String>,
    pub draws: Vec<Draw>,
}

impl DrawsFile {
    pub fn into_chain(self) -> ChainOutput {
        ChainOutput::from_draws(self.columns, self.draws)
    }
}

pub fn read_draws_csv(path: &Path) -> Result<DrawsFile> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let q = header.iter().take_while(|h| h.starts_with(PREFIX)).count();
    let expected_tail = &TAIL[..];
    if header.len() != q + expected_tail.len() || header[q..].iter().zip(expected_tail).any(|(a, b)| a != b) {
        return Err(Error::data(format!(
            "{}: not a draws file (header must be beta.<name>…,{})",
            path.display(),
            expected_tail.join(",")
        )));
    }
    let columns: Vec<String> = header[..q].iter().map(|h| h[PREFIX.len()..].to_string()).collect();
    let mut draws = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j).and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(|| {
                Error::data(format!("{}: row {}, column '{}' is not a number", path.display(), r + 1, header[j]))
            })
        };
        let beta = (0..q).map(num).collect::<Result<Vec<_>>>()?;
        let zi = num(q + 1)?;
        let z = (zi.fract() == 0.0 && zi >= 1.0)
            .then(|| ModelKind::from_index(zi as usize - 1))
            .flatten()
            .ok_or_else(|| Error::data(format!("{}: row {}: bad model indicator {zi}", path.display(), r + 1)))?;
        draws.push(Draw {
            beta,
            sigma2: num(q)?,
            z,
            nu_t: num(q + 2)?,
            nu_s: num(q + 3)?,
            p: [num(q + 4)?, num(q + 5)?, num(q + 6)?],
        });
    }
    Ok(DrawsFile { columns, draws })
}
