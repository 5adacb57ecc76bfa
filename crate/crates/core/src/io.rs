//! CSV formats for members, edges, power assignments, ballots and sweep
//! results. Reals are written with 15 significant digits.

use std::io::{Read, Write};
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::aggregate::Ballot;
use crate::error::{Error, Result};
use crate::network::{DelegationEdge, Member, MemberId};
use crate::power::PowerAssignment;
use crate::simharness::SweepRecord;

pub const MEMBER_HEADER: [&str; 3] = ["id", "opinion", "active"];
pub const EDGE_HEADER: [&str; 4] = ["from", "to", "weight", "domain"];
pub const POWER_HEADER: [&str; 2] = ["id", "power"];
pub const SWEEP_HEADER: [&str; 6] = [
    "topology",
    "participation",
    "mean_error",
    "std_error",
    "mean_stranded",
    "trials",
];

/// Shortest decimal that reads back as `x` rounded to 15 significant digits.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    // avoid "-0"
    if rounded == 0.0 {
        "0".to_string()
    } else {
        rounded.to_string()
    }
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn field<T: FromStr>(record: &StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = record
        .get(i)
        .ok_or_else(|| Error::parse(line_of(record), format!("missing field '{name}'")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line_of(record), format!("bad {name} '{raw}'")))
}

fn reader<R: Read>(input: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::parse(
            1,
            format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(rdr)
}

pub fn write_members<W: Write>(out: W, members: &[Member]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(MEMBER_HEADER)?;
    for m in members {
        w.write_record([
            m.id.to_string(),
            format_real(m.opinion),
            if m.active { "1" } else { "0" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_members<R: Read>(input: R) -> Result<Vec<Member>> {
    let mut rdr = reader(input, &MEMBER_HEADER)?;
    let mut members = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let active = match record.get(2).map(str::trim) {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(Error::parse(
                    line_of(&record),
                    format!("active must be 0 or 1, got {other:?}"),
                ))
            }
        };
        members.push(Member::new(
            field(&record, 0, "id")?,
            field(&record, 1, "opinion")?,
            active,
        ));
    }
    Ok(members)
}

pub fn write_edges<W: Write>(
    out: W,
    edges: impl IntoIterator<Item = DelegationEdge>,
) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(EDGE_HEADER)?;
    for e in edges {
        w.write_record([
            e.from.to_string(),
            e.to.to_string(),
            format_real(e.weight),
            e.domain.unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edges<R: Read>(input: R) -> Result<Vec<DelegationEdge>> {
    let mut rdr = reader(input, &EDGE_HEADER)?;
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let domain = record.get(3).unwrap_or("");
        edges.push(DelegationEdge {
            from: field(&record, 0, "from")?,
            to: field(&record, 1, "to")?,
            weight: field(&record, 2, "weight")?,
            domain: (!domain.is_empty()).then(|| domain.to_string()),
        });
    }
    Ok(edges)
}

/// `id,power` rows followed by a `stranded,<value>` row.
pub fn write_power<W: Write>(out: W, assignment: &PowerAssignment) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(POWER_HEADER)?;
    for (id, power) in &assignment.absorbed {
        w.write_record([id.to_string(), format_real(*power)])?;
    }
    w.write_record(["stranded".to_string(), format_real(assignment.stranded)])?;
    w.flush()?;
    Ok(())
}

pub fn read_power<R: Read>(input: R) -> Result<PowerAssignment> {
    let mut rdr = reader(input, &POWER_HEADER)?;
    let mut absorbed = std::collections::BTreeMap::new();
    let mut stranded = None;
    for record in rdr.records() {
        let record = record?;
        if stranded.is_some() {
            return Err(Error::parse(line_of(&record), "row after the stranded row"));
        }
        if record.get(0) == Some("stranded") {
            stranded = Some(field(&record, 1, "stranded")?);
        } else {
            let id: MemberId = field(&record, 0, "id")?;
            absorbed.insert(id, field(&record, 1, "power")?);
        }
    }
    Ok(PowerAssignment {
        absorbed,
        stranded: stranded.ok_or_else(|| Error::parse(0, "missing stranded row"))?,
        steps_run: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallotFormat {
    /// `voter,choice`
    Plurality,
    /// `voter,rank1,rank2,...`
    Borda,
}

/// Read ballots (no header). Weights default to one.
pub fn read_ballots<R: Read>(input: R, format: BallotFormat) -> Result<Vec<Ballot>> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut ballots = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let voter: MemberId = field(&record, 0, "voter")?;
        let choices: Vec<String> = record
            .iter()
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let ballot = match format {
            BallotFormat::Plurality if choices.len() == 1 => {
                Ballot::single(voter, choices[0].clone())
            }
            BallotFormat::Plurality => {
                return Err(Error::parse(line_of(&record), "expected voter,choice"));
            }
            BallotFormat::Borda if !choices.is_empty() => Ballot::ranking(voter, choices),
            BallotFormat::Borda => {
                return Err(Error::parse(line_of(&record), "expected voter,rank1,..."));
            }
        };
        ballots.push(ballot);
    }
    Ok(ballots)
}

pub fn write_sweep<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record([
            r.topology.clone(),
            format_real(r.participation),
            format_real(r.mean_error),
            format_real(r.std_error),
            format_real(r.mean_stranded_fraction),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_to_string(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    write_sweep(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = reader(input, &SWEEP_HEADER)?;
    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record?;
        records.push(SweepRecord {
            topology: field(&record, 0, "topology")?,
            participation: field(&record, 1, "participation")?,
            mean_error: field(&record, 2, "mean_error")?,
            std_error: field(&record, 3, "std_error")?,
            mean_stranded_fraction: field(&record, 4, "mean_stranded")?,
            trials: field(&record, 5, "trials")?,
        });
    }
    Ok(records)
}
