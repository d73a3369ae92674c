//! Corpus file handling: trace/coordinate/class/graph/pool CSV formats,
//! validation with line numbers, and agglomerative location coarsening.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::generator::FakeTrace;
use crate::mobility::{LocationId, Trace};
use crate::semantics::{SemanticClasses, SemanticGraph};
use crate::Scalar;

/// A validated set of equal-length traces over locations `0..r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub traces: Vec<Trace>,
    pub r: usize,
    pub l: usize,
    pub coordinates: Option<Vec<(Scalar, Scalar)>>,
}

impl Corpus {
    /// Build from traces, validating uniform length and inferring `r` as
    /// `max location + 1` if not given.
    pub fn new(traces: Vec<Trace>, r: Option<usize>) -> Result<Corpus> {
        if traces.is_empty() {
            return Err(Error::Corpus("no traces".to_string()));
        }
        let l = traces[0].len();
        if l == 0 {
            return Err(Error::EmptyTrace(traces[0].user.clone()));
        }
        for trace in &traces {
            if trace.len() != l {
                return Err(Error::Corpus(format!(
                    "trace '{}' has length {}, expected {l}",
                    trace.user,
                    trace.len()
                )));
            }
        }
        let max_loc = traces
            .iter()
            .flat_map(|t| t.locations.iter().copied())
            .max()
            .expect("nonempty traces");
        let r = match r {
            Some(r) => {
                if max_loc >= r {
                    return Err(Error::LocationOutOfRange { index: max_loc, r });
                }
                r
            }
            None => max_loc + 1,
        };
        Ok(Corpus {
            traces,
            r,
            l,
            coordinates: None,
        })
    }

    pub fn user(&self, name: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.user == name)
    }

    /// Restrict every trace to a slot range (train/test splitting).
    pub fn slot_range(&self, start: usize, end: usize) -> Result<Corpus> {
        if start >= end || end > self.l {
            return Err(Error::Corpus(format!(
                "slot range {start}..{end} invalid for L = {}",
                self.l
            )));
        }
        let traces = self
            .traces
            .iter()
            .map(|t| Trace::new(t.user.clone(), t.locations[start..end].to_vec()))
            .collect();
        Ok(Corpus {
            traces,
            r: self.r,
            l: end - start,
            coordinates: self.coordinates.clone(),
        })
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field.trim().parse().map_err(|_| {
        Error::Corpus(format!("line {line}: cannot parse {name} from '{field}'"))
    })
}

/// Read a trace CSV (`user,slot,location`). Rows may arrive in any order;
/// each user's slots must form exactly `0..L` without duplicates.
pub fn read_corpus<R: Read>(reader: R) -> Result<Corpus> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    // user -> slot -> (location, line)
    let mut users: BTreeMap<String, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Corpus(format!(
                "line {line}: expected 3 fields, got {}",
                record.len()
            )));
        }
        let user = record[0].trim().to_string();
        let slot: usize = parse_field(&record[1], "slot", line)?;
        let location: usize = parse_field(&record[2], "location", line)?;
        if !users.contains_key(&user) {
            order.push(user.clone());
        }
        if users.entry(user.clone()).or_default().insert(slot, location).is_some() {
            return Err(Error::Corpus(format!(
                "line {line}: duplicate slot {slot} for user '{user}'"
            )));
        }
    }
    if users.is_empty() {
        return Err(Error::Corpus("no trace rows".to_string()));
    }
    let mut traces = Vec::with_capacity(users.len());
    for user in order {
        let slots = &users[&user];
        let l = slots.len();
        let mut locations = Vec::with_capacity(l);
        for t in 0..l {
            match slots.get(&t) {
                Some(&loc) => locations.push(loc),
                None => {
                    return Err(Error::Corpus(format!(
                        "user '{user}': missing slot {t} (has {l} rows)"
                    )))
                }
            }
        }
        traces.push(Trace::new(user, locations));
    }
    Corpus::new(traces, None)
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    read_corpus(std::fs::File::open(path)?)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["user", "slot", "location"])?;
    for trace in &corpus.traces {
        for (slot, &loc) in trace.locations.iter().enumerate() {
            csv.write_record([&trace.user, &slot.to_string(), &loc.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    write_corpus(corpus, std::fs::File::create(path)?)
}

/// Coordinates CSV: `location,x,y`, one row per location `0..R`.
pub fn read_coordinates<R: Read>(reader: R, r: usize) -> Result<Vec<(Scalar, Scalar)>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut coords = vec![None; r];
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let loc: usize = parse_field(&record[0], "location", line)?;
        if loc >= r {
            return Err(Error::LocationOutOfRange { index: loc, r });
        }
        let x: Scalar = parse_field(&record[1], "x", line)?;
        let y: Scalar = parse_field(&record[2], "y", line)?;
        if coords[loc].replace((x, y)).is_some() {
            return Err(Error::Corpus(format!("line {line}: duplicate location {loc}")));
        }
    }
    coords
        .into_iter()
        .enumerate()
        .map(|(loc, c)| c.ok_or_else(|| Error::Corpus(format!("missing coordinates for {loc}"))))
        .collect()
}

pub fn write_coordinates<W: Write>(coords: &[(Scalar, Scalar)], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["location", "x", "y"])?;
    for (loc, (x, y)) in coords.iter().enumerate() {
        csv.write_record([&loc.to_string(), &x.to_string(), &y.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Classes CSV: `location,class`.
pub fn write_classes<W: Write>(classes: &SemanticClasses, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["location", "class"])?;
    for (loc, &class) in classes.assignment.iter().enumerate() {
        csv.write_record([&loc.to_string(), &class.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_classes<R: Read>(reader: R, r: usize) -> Result<SemanticClasses> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut assignment = vec![None; r];
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let loc: usize = parse_field(&record[0], "location", line)?;
        if loc >= r {
            return Err(Error::LocationOutOfRange { index: loc, r });
        }
        let class: usize = parse_field(&record[1], "class", line)?;
        if assignment[loc].replace(class).is_some() {
            return Err(Error::Corpus(format!("line {line}: duplicate location {loc}")));
        }
    }
    let assignment: Vec<usize> = assignment
        .into_iter()
        .enumerate()
        .map(|(loc, c)| c.ok_or_else(|| Error::UnclassifiedLocation(loc)))
        .collect::<Result<_>>()?;
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    SemanticClasses::new(assignment, k)
}

/// Graph edge list CSV: `r,rprime,weight`, positive edges with `r < rprime`.
pub fn write_graph<W: Write>(graph: &SemanticGraph, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["r", "rprime", "weight"])?;
    for (a, b, w) in graph.edges() {
        csv.write_record([&a.to_string(), &b.to_string(), &format!("{w:.12}")])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_graph<R: Read>(reader: R, r: usize) -> Result<SemanticGraph> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut graph = SemanticGraph::new(r);
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let a: usize = parse_field(&record[0], "r", line)?;
        let b: usize = parse_field(&record[1], "rprime", line)?;
        let w: Scalar = parse_field(&record[2], "weight", line)?;
        if a >= r || b >= r {
            return Err(Error::LocationOutOfRange { index: a.max(b), r });
        }
        if a == b {
            return Err(Error::Corpus(format!("line {line}: self-loop at {a}")));
        }
        graph.add_edge(a, b, w);
    }
    Ok(graph)
}

/// Pool export: event rows, a likelihood/verdict sidecar, and a rejection
/// report.
pub fn write_pool<W: Write>(fakes: &[FakeTrace], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["seed_user", "fake_id", "slot", "location"])?;
    for (id, fake) in fakes.iter().enumerate() {
        for (slot, &loc) in fake.locations.iter().enumerate() {
            csv.write_record([
                &fake.seed_user,
                &id.to_string(),
                &slot.to_string(),
                &loc.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_pool_sidecar<W: Write>(fakes: &[FakeTrace], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["fake_id", "log_likelihood", "verdict"])?;
    for (id, fake) in fakes.iter().enumerate() {
        let verdict = if fake.verdict.passed {
            "pass".to_string()
        } else {
            let reasons: Vec<String> = fake
                .verdict
                .failure_reasons
                .iter()
                .map(|x| x.to_string())
                .collect();
            format!("fail:{}", reasons.join("+"))
        };
        csv.write_record([
            &id.to_string(),
            &format!("{:.12}", fake.log_likelihood),
            &verdict,
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_rejections<W: Write>(
    rejections: &BTreeMap<(String, String), usize>,
    writer: W,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["seed_user", "reason", "count"])?;
    for ((user, reason), count) in rejections {
        csv.write_record([user, reason, &count.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Read the pool event rows back into plain fake traces (verdicts are not
/// round-tripped; re-audit recomputes them).
pub fn read_pool<R: Read>(reader: R) -> Result<Vec<(String, Vec<LocationId>)>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut fakes: BTreeMap<usize, (String, BTreeMap<usize, usize>)> = BTreeMap::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let seed_user = record[0].trim().to_string();
        let id: usize = parse_field(&record[1], "fake_id", line)?;
        let slot: usize = parse_field(&record[2], "slot", line)?;
        let loc: usize = parse_field(&record[3], "location", line)?;
        let entry = fakes.entry(id).or_insert_with(|| (seed_user.clone(), BTreeMap::new()));
        if entry.0 != seed_user {
            return Err(Error::Corpus(format!(
                "line {line}: fake {id} claims two seed users"
            )));
        }
        if entry.1.insert(slot, loc).is_some() {
            return Err(Error::Corpus(format!(
                "line {line}: duplicate slot {slot} for fake {id}"
            )));
        }
    }
    fakes
        .into_iter()
        .map(|(id, (user, slots))| {
            let l = slots.len();
            let mut locations = Vec::with_capacity(l);
            for t in 0..l {
                match slots.get(&t) {
                    Some(&loc) => locations.push(loc),
                    None => {
                        return Err(Error::Corpus(format!("fake {id}: missing slot {t}")))
                    }
                }
            }
            Ok((user, locations))
        })
        .collect()
}

/// Merge locations down to `target_r` clusters. The merge cost of two
/// clusters is their centroid distance times the product of their visit
/// weights, so co-located or rarely visited locations merge first. Returns
/// the old-to-new index map; new indices are dense, ordered by each
/// cluster's smallest original member.
pub fn coarsen_locations(
    coordinates: &[(Scalar, Scalar)],
    weights: &[Scalar],
    target_r: usize,
) -> Result<Vec<usize>> {
    let r = coordinates.len();
    if weights.len() != r {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {r} locations",
            weights.len()
        )));
    }
    if target_r >= r || target_r == 0 {
        return Err(Error::InvalidParameter(format!(
            "target_r = {target_r} must be in 1..{r}"
        )));
    }

    struct Cluster {
        members: Vec<usize>,
        weight: Scalar,
        centroid: (Scalar, Scalar),
    }
    let mut clusters: Vec<Cluster> = (0..r)
        .map(|i| Cluster {
            members: vec![i],
            weight: weights[i],
            centroid: coordinates[i],
        })
        .collect();

    let cost = |a: &Cluster, b: &Cluster| -> Scalar {
        let dx = a.centroid.0 - b.centroid.0;
        let dy = a.centroid.1 - b.centroid.1;
        (dx * dx + dy * dy).sqrt() * a.weight * b.weight
    };

    while clusters.len() > target_r {
        let mut best = (0usize, 1usize, Scalar::INFINITY);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let c = cost(&clusters[i], &clusters[j]);
                if c < best.2 {
                    best = (i, j, c);
                }
            }
        }
        let (i, j, _) = best;
        let b = clusters.remove(j);
        let a = &mut clusters[i];
        let total = a.weight + b.weight;
        a.centroid = if total > 0.0 {
            (
                (a.centroid.0 * a.weight + b.centroid.0 * b.weight) / total,
                (a.centroid.1 * a.weight + b.centroid.1 * b.weight) / total,
            )
        } else {
            (
                0.5 * (a.centroid.0 + b.centroid.0),
                0.5 * (a.centroid.1 + b.centroid.1),
            )
        };
        a.weight = total;
        a.members.extend(b.members);
    }

    clusters.sort_by_key(|c| *c.members.iter().min().expect("nonempty cluster"));
    let mut mapping = vec![0usize; r];
    for (new, cluster) in clusters.iter().enumerate() {
        for &old in &cluster.members {
            mapping[old] = new;
        }
    }
    Ok(mapping)
}
