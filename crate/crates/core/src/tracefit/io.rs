//! Trace files.
//!
//! CSV: the line `rate,t0,n`, a line with those three values, then one
//! sample per line. Binary: `n` as `u32`, the rate as `f64`, a reserved
//! `u32`, then `n` samples as `f32`, all little-endian. The binary header
//! carries no start time, so traces read from it are centred on the trigger.

use std::io::{self, BufRead, Read, Write};

use super::Trace;
use crate::error::{Error, Result};

pub fn write_trace_csv<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    writeln!(out, "rate,t0,n")?;
    writeln!(out, "{:e},{:e},{}", trace.sample_rate, trace.t0, trace.len())?;
    for s in &trace.samples {
        writeln!(out, "{s:e}")?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::Format(format!("cannot parse {what} from '{}'", text.trim())))
}

pub fn read_trace_csv<R: BufRead>(input: R) -> Result<Trace> {
    let mut lines = input.lines().map(|l| l.map_err(|e| Error::Format(format!("reading trace: {e}"))));
    let header = lines.next().ok_or_else(|| Error::Format("trace file is empty".into()))??;
    if header.trim() != "rate,t0,n" {
        return Err(Error::Format(format!("expected header 'rate,t0,n', found '{}'", header.trim())));
    }
    let meta = lines.next().ok_or_else(|| Error::Format("trace file lacks the rate,t0,n line".into()))??;
    let fields: Vec<&str> = meta.split(',').collect();
    if fields.len() != 3 {
        return Err(Error::Format(format!("expected 3 header values, found {}", fields.len())));
    }
    let sample_rate: f64 = parse(fields[0], "rate")?;
    let t0: f64 = parse(fields[1], "t0")?;
    let n: usize = parse(fields[2], "n")?;
    let mut samples = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        samples.push(parse(&line, "sample")?);
    }
    if samples.len() != n {
        return Err(Error::Format(format!("header promises {n} samples, file has {}", samples.len())));
    }
    Ok(Trace { samples, sample_rate, t0 })
}

pub fn write_trace_binary<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let n = u32::try_from(trace.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "trace too long"))?;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&trace.sample_rate.to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    for &s in &trace.samples {
        out.write_all(&(s as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_trace_binary<R: Read>(mut input: R) -> Result<Trace> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| Error::Format(format!("reading trace: {e}")))?;
    if bytes.len() < 16 {
        return Err(Error::Format("binary trace shorter than its 16-byte header".into()));
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
    let sample_rate = f64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let body = &bytes[16..];
    if body.len() != 4 * n {
        return Err(Error::Format(format!("header promises {n} samples, body holds {} bytes", body.len())));
    }
    let samples = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(Trace { samples, sample_rate, t0: -(n as f64) / (2.0 * sample_rate) })
}
