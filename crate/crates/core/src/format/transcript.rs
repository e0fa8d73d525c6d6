//! Line-oriented transcript files.
//!
//! ```text
//! # bellkit transcript v1
//! # seed 7
//! # model_digest 3f1c...
//! # scenario 2 2 2 2
//! # lambdas 1
//! # runs 3
//! 0 0 1 0 0 1
//! 1 0 0 1 1 1
//! 2 0 1 1 0 0
//! ```
//!
//! Each record line holds `run lambda a b x y`. Runs must appear in order
//! starting at 0, and their number must match the `runs` header.

use std::io::{self, Write};

use super::FormatError;
use crate::model::Scenario;
use crate::simulator::{RunRecord, Transcript};

const MAGIC: &str = "# bellkit transcript v1";

pub fn write_transcript(t: &Transcript, w: &mut impl Write) -> io::Result<()> {
    let s = t.scenario;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# seed {}", t.seed)?;
    writeln!(w, "# model_digest {}", t.model_digest)?;
    writeln!(
        w,
        "# scenario {} {} {} {}",
        s.settings_a, s.settings_b, s.outcomes_x, s.outcomes_y
    )?;
    writeln!(w, "# lambdas {}", t.lambdas)?;
    writeln!(w, "# runs {}", t.runs.len())?;
    for r in &t.runs {
        writeln!(w, "{} {} {} {} {} {}", r.run, r.lambda, r.a, r.b, r.x, r.y)?;
    }
    Ok(())
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Transcript {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(
    line: usize,
    fields: &str,
    want: usize,
) -> Result<Vec<T>, FormatError> {
    let parsed: Vec<T> = fields
        .split_whitespace()
        .map(|f| {
            f.parse()
                .map_err(|_| err(line, format!("not a non-negative integer: {f:?}")))
        })
        .collect::<Result<_, _>>()?;
    if parsed.len() != want {
        return Err(err(
            line,
            format!("expected {want} fields, found {}", parsed.len()),
        ));
    }
    Ok(parsed)
}

pub fn parse_transcript(text: &str) -> Result<Transcript, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(err(1, format!("first line must be {MAGIC:?}"))),
    }
    let mut header = |key: &str| -> Result<(usize, String), FormatError> {
        let (no, l) = lines
            .next()
            .ok_or_else(|| err(0, format!("missing header {key:?}")))?;
        let rest = l
            .strip_prefix("# ")
            .and_then(|r| r.strip_prefix(key))
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| err(no, format!("expected header \"# {key} ...\"")))?;
        Ok((no, rest.to_string()))
    };
    let (no, seed) = header("seed")?;
    let seed: u64 = numbers(no, &seed, 1)?[0];
    let (no, model_digest) = header("model_digest")?;
    if model_digest.is_empty() || model_digest.contains(char::is_whitespace) {
        return Err(err(no, "model digest must be a single token"));
    }
    let (no, dims) = header("scenario")?;
    let d: Vec<usize> = numbers(no, &dims, 4)?;
    let scenario = Scenario::new(d[0], d[1], d[2], d[3]).map_err(|e| err(no, e.to_string()))?;
    let (no, lambdas) = header("lambdas")?;
    let lambdas: usize = numbers(no, &lambdas, 1)?[0];
    if lambdas == 0 {
        return Err(err(
            no,
            "at least one hidden-variable component is required",
        ));
    }
    let (no, n) = header("runs")?;
    let n: u64 = numbers(no, &n, 1)?[0];

    let mut runs = Vec::with_capacity(n.min(1 << 24) as usize);
    for (no, l) in lines {
        if l.is_empty() {
            continue;
        }
        let f: Vec<usize> = numbers(no, l, 6)?;
        let r = RunRecord {
            run: f[0] as u64,
            lambda: f[1],
            a: f[2],
            b: f[3],
            x: f[4],
            y: f[5],
        };
        if r.run != runs.len() as u64 {
            return Err(err(
                no,
                format!("expected run {}, found {}", runs.len(), r.run),
            ));
        }
        let ranges = [
            ("lambda", r.lambda, lambdas),
            ("a", r.a, scenario.settings_a),
            ("b", r.b, scenario.settings_b),
            ("x", r.x, scenario.outcomes_x),
            ("y", r.y, scenario.outcomes_y),
        ];
        for (name, v, size) in ranges {
            if v >= size {
                return Err(err(no, format!("{name} = {v} out of range 0..{size}")));
            }
        }
        runs.push(r);
    }
    if runs.len() as u64 != n {
        return Err(err(
            0,
            format!("header announces {n} runs, found {}", runs.len()),
        ));
    }
    Ok(Transcript {
        scenario,
        lambdas,
        seed,
        model_digest,
        runs,
    })
}
