//! TSPLIB / CVRPLIB subset: `EUC_2D` node coordinates, demands and a
//! single depot. File ids are 1-based; instances are 0-based. The
//! distribution tag of synthetic instances travels in the `COMMENT` line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use routeproj_core::{Distribution, Instance, Point, ProblemKind};

const DIST_PREFIX: &str = "distribution=";

pub fn to_string(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "NAME : {}", inst.name);
    let _ = writeln!(s, "COMMENT : {DIST_PREFIX}{}", inst.distribution);
    let _ = writeln!(s, "TYPE : {}", inst.kind);
    let _ = writeln!(s, "DIMENSION : {}", inst.len());
    if inst.kind == ProblemKind::Cvrp {
        let _ = writeln!(s, "CAPACITY : {}", inst.capacity);
    }
    s.push_str("EDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n");
    for (i, p) in inst.coords.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, p.x, p.y);
    }
    if inst.kind == ProblemKind::Cvrp {
        s.push_str("DEMAND_SECTION\n");
        for (i, d) in inst.demands.iter().enumerate() {
            let _ = writeln!(s, "{} {}", i + 1, d);
        }
        s.push_str("DEPOT_SECTION\n1\n-1\n");
    }
    s.push_str("EOF\n");
    s
}

pub fn write(inst: &Instance, path: &Path) -> Result<()> {
    fs::write(path, to_string(inst)).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
}

/// Parses the text of a TSPLIB-subset file.
pub fn parse(text: &str) -> Result<Instance> {
    let mut name = String::new();
    let mut kind = None;
    let mut dimension = None;
    let mut capacity = None;
    let mut distribution = Distribution::File;
    let mut coords: Vec<Option<Point>> = Vec::new();
    let mut demands: Option<Vec<Option<u32>>> = None;
    let mut depots = Vec::new();
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| anyhow!("line {lineno}: {msg}: `{line}`");
        match line {
            "EOF" => break,
            "NODE_COORD_SECTION" => {
                let n = dimension.ok_or_else(|| err("DIMENSION must precede the coordinate section"))?;
                coords = vec![None; n];
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                let n = dimension.ok_or_else(|| err("DIMENSION must precede the demand section"))?;
                demands = Some(vec![None; n]);
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            _ => {}
        }
        if let Some((key, value)) = line.split_once(':') {
            if !key.trim().contains(' ') && key.trim().chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                let value = value.trim();
                match key.trim() {
                    "NAME" => name = value.to_string(),
                    "COMMENT" => {
                        if let Some(tag) = value.strip_prefix(DIST_PREFIX) {
                            distribution = tag.trim().parse().map_err(|_| err("unknown distribution tag"))?;
                        }
                    }
                    "TYPE" => {
                        kind = Some(match value {
                            "TSP" => ProblemKind::Tsp,
                            "CVRP" => ProblemKind::Cvrp,
                            _ => return Err(err("unsupported TYPE")),
                        })
                    }
                    "DIMENSION" => dimension = Some(value.parse().map_err(|_| err("bad DIMENSION"))?),
                    "CAPACITY" => capacity = Some(value.parse().map_err(|_| err("bad CAPACITY"))?),
                    "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                        bail!("line {lineno}: unsupported EDGE_WEIGHT_TYPE `{value}` (only EUC_2D)");
                    }
                    _ => {}
                }
                section = Section::Header;
                continue;
            }
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Header => return Err(err("unexpected line")),
            Section::Coords => {
                let [id, x, y] = fields[..] else {
                    return Err(err("expected `id x y`"));
                };
                let id = node_index(id, coords.len()).ok_or_else(|| err("bad node id"))?;
                let x: f64 = x.parse().map_err(|_| err("bad x coordinate"))?;
                let y: f64 = y.parse().map_err(|_| err("bad y coordinate"))?;
                coords[id] = Some(Point::new(x, y));
            }
            Section::Demands => {
                let d = demands.as_mut().expect("demand section opened");
                let [id, q] = fields[..] else {
                    return Err(err("expected `id demand`"));
                };
                let id = node_index(id, d.len()).ok_or_else(|| err("bad node id"))?;
                d[id] = Some(q.parse().map_err(|_| err("bad demand"))?);
            }
            Section::Depots => {
                for f in fields {
                    let v: i64 = f.parse().map_err(|_| err("bad depot id"))?;
                    if v >= 0 {
                        depots.push(v);
                    }
                }
            }
        }
    }

    let kind = kind.ok_or_else(|| anyhow!("missing TYPE"))?;
    let n = dimension.ok_or_else(|| anyhow!("missing DIMENSION"))?;
    if coords.len() != n {
        bail!("missing NODE_COORD_SECTION");
    }
    let coords: Vec<Point> = coords
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| anyhow!("node {} has no coordinates", i + 1)))
        .collect::<Result<_>>()?;
    let mut inst = match kind {
        ProblemKind::Tsp => Instance::tsp(name, coords),
        ProblemKind::Cvrp => {
            let capacity = capacity.ok_or_else(|| anyhow!("CVRP file without CAPACITY"))?;
            let demands: Vec<u32> = demands
                .ok_or_else(|| anyhow!("CVRP file without DEMAND_SECTION"))?
                .into_iter()
                .enumerate()
                .map(|(i, d)| d.ok_or_else(|| anyhow!("node {} has no demand", i + 1)))
                .collect::<Result<_>>()?;
            if !(depots.is_empty() || depots == [1]) {
                bail!("only a single depot with id 1 is supported, got {depots:?}");
            }
            Instance::cvrp(name, coords, demands, capacity)
        }
    };
    inst.distribution = distribution;
    inst.validate()?;
    Ok(inst)
}

fn node_index(id: &str, n: usize) -> Option<usize> {
    let id: usize = id.parse().ok()?;
    (1..=n).contains(&id).then(|| id - 1)
}
