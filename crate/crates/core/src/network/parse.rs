//! Readers for the JSON case schema and the numeric subset of MATPOWER `.m`
//! files. Both produce the same raw tables, which are then converted to
//! per-unit records.

use std::path::Path;

use serde::Deserialize;

use super::{BranchRecord, BusRecord, BusType, CostCurve, GeneratorRecord, PowerCase};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Json,
    MatpowerM,
}

impl CaseFormat {
    pub fn from_path(path: &Path) -> CaseFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("m") => CaseFormat::MatpowerM,
            _ => CaseFormat::Json,
        }
    }
}

// bus columns
const BUS_I: usize = 0;
const BUS_TYPE: usize = 1;
const PD: usize = 2;
const QD: usize = 3;
const GS: usize = 4;
const BS: usize = 5;
const VM: usize = 7;
const VA: usize = 8;
const VMAX: usize = 11;
const VMIN: usize = 12;
// gen columns
const GEN_BUS: usize = 0;
const PG: usize = 1;
const QG: usize = 2;
const QMAX: usize = 3;
const QMIN: usize = 4;
const GEN_STATUS: usize = 7;
const PMAX: usize = 8;
const PMIN: usize = 9;
// branch columns
const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_R: usize = 2;
const BR_X: usize = 3;
const BR_B: usize = 4;
const RATE_A: usize = 5;
const TAP: usize = 8;
const SHIFT: usize = 9;
const BR_STATUS: usize = 10;
// gencost columns
const MODEL: usize = 0;
const NCOST: usize = 3;
const COST: usize = 4;

const POLYNOMIAL: f64 = 2.0;

#[derive(Debug, Default, Deserialize)]
struct RawCase {
    #[serde(default)]
    name: Option<String>,
    #[serde(rename = "baseMVA")]
    base_mva: f64,
    bus: Vec<Vec<f64>>,
    gen: Vec<Vec<f64>>,
    branch: Vec<Vec<f64>>,
    gencost: Vec<Vec<f64>>,
    /// Rows of `[bus, min_deg, max_deg]`.
    #[serde(default)]
    bus_angle_limits: Vec<Vec<f64>>,
}

/// Parse a case from raw bytes in the given format.
pub fn parse_case(source: &[u8], format: CaseFormat) -> Result<PowerCase> {
    let raw = match format {
        CaseFormat::Json => parse_json(source)?,
        CaseFormat::MatpowerM => parse_m(source)?,
    };
    convert(raw)
}

/// Read a case from disk, picking the format from the file extension.
pub fn load_case(path: &Path) -> Result<PowerCase> {
    if !path.exists() {
        return Err(Error::CaseNotFound { path: path.to_path_buf() });
    }
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut case = parse_case(&bytes, CaseFormat::from_path(path))?;
    if case.name.is_empty() {
        case.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(case)
}

fn parse_json(source: &[u8]) -> Result<RawCase> {
    if source.iter().all(|c| c.is_ascii_whitespace()) {
        return Err(Error::Syntax { line: 1, message: "empty input".into() });
    }
    serde_json::from_slice(source).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Schema { field: "case".into(), message: e.to_string() },
        _ => Error::Syntax { line: e.line(), message: e.to_string() },
    })
}

fn parse_m(source: &[u8]) -> Result<RawCase> {
    let text =
        std::str::from_utf8(source).map_err(|e| Error::Syntax { line: 1, message: format!("invalid utf-8: {e}") })?;
    if text.trim().is_empty() {
        return Err(Error::Syntax { line: 1, message: "empty input".into() });
    }

    let mut raw = RawCase::default();
    let mut base_mva = None;
    let mut seen = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l)));

    while let Some((lineno, line)) = lines.next() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((field, value)) = rest.split_once('=') else {
            return Err(Error::Syntax { line: lineno, message: format!("expected `=` in `{line}`") });
        };
        let field = field.trim();
        let value = value.trim();

        if let Some(body) = value.strip_prefix('[') {
            let rows = read_matrix(body, lineno, &mut lines)?;
            seen.push(field.to_string());
            match field {
                "bus" => raw.bus = rows,
                "gen" => raw.gen = rows,
                "branch" => raw.branch = rows,
                "gencost" => raw.gencost = rows,
                "bus_angle_limits" => raw.bus_angle_limits = rows,
                _ => {}
            }
        } else if value.starts_with('{') {
            // cell arrays such as bus names carry no numeric data we use
            if !value.contains('}') {
                for (_, l) in lines.by_ref() {
                    if l.contains('}') {
                        break;
                    }
                }
            }
        } else if field == "baseMVA" {
            let number = value.trim_end_matches(';').trim();
            let v = number
                .parse::<f64>()
                .map_err(|_| Error::Syntax { line: lineno, message: format!("baseMVA is not a number: `{number}`") })?;
            base_mva = Some(v);
        }
    }

    raw.base_mva = base_mva.ok_or_else(|| Error::Schema { field: "baseMVA".into(), message: "missing".into() })?;
    for required in ["bus", "gen", "branch", "gencost"] {
        if !seen.iter().any(|s| s == required) {
            return Err(Error::Schema { field: required.into(), message: "missing".into() });
        }
    }
    Ok(raw)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn read_matrix<'a>(
    first: &'a str,
    first_line: usize,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut pending = Some((first_line, first));

    loop {
        let (lineno, line) = match pending.take() {
            Some(p) => p,
            None => {
                lines.next().ok_or(Error::Syntax { line: first_line, message: "unterminated matrix literal".into() })?
            }
        };
        let (body, closed) = match line.find(']') {
            Some(i) => (&line[..i], true),
            None => (line, false),
        };
        for (k, segment) in body.split(';').enumerate() {
            if k > 0 && !current.is_empty() {
                rows.push(std::mem::take(&mut current));
            }
            for token in segment.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                let v = parse_number(token).ok_or_else(|| Error::Syntax {
                    line: lineno,
                    message: format!("invalid numeric token `{token}`"),
                })?;
                current.push(v);
            }
        }
        // a newline also ends a row
        if !current.is_empty() {
            rows.push(std::mem::take(&mut current));
        }
        if closed {
            return Ok(rows);
        }
    }
}

fn parse_number(token: &str) -> Option<f64> {
    match token {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => token.parse().ok(),
    }
}

fn column(table: &str, row: usize, data: &[f64], col: usize) -> Result<f64> {
    let v = data.get(col).copied().ok_or_else(|| Error::Schema {
        field: format!("{table}[{row}]"),
        message: format!("expected at least {} columns, found {}", col + 1, data.len()),
    })?;
    if v.is_nan() {
        return Err(Error::Schema { field: format!("{table}[{row}][{col}]"), message: "NaN".into() });
    }
    Ok(v)
}

fn convert(raw: RawCase) -> Result<PowerCase> {
    let base = raw.base_mva;
    if !(base > 0.0) {
        return Err(Error::Validation(format!("baseMVA must be positive, got {base}")));
    }

    let mut buses = Vec::with_capacity(raw.bus.len());
    for (i, row) in raw.bus.iter().enumerate() {
        let c = |col| column("bus", i, row, col);
        let code = c(BUS_TYPE)?;
        let bus_type = BusType::from_code(code).ok_or_else(|| Error::Schema {
            field: format!("bus[{i}][{BUS_TYPE}]"),
            message: format!("unsupported bus type {code}"),
        })?;
        buses.push(BusRecord {
            id: c(BUS_I)? as usize,
            bus_type,
            pd: c(PD)? / base,
            qd: c(QD)? / base,
            gs: c(GS)? / base,
            bs: c(BS)? / base,
            vm0: c(VM)?,
            va0: c(VA)?,
            vmax: c(VMAX)?,
            vmin: c(VMIN)?,
            angle_limits: None,
        });
    }
    for (i, row) in raw.bus_angle_limits.iter().enumerate() {
        let c = |col| column("bus_angle_limits", i, row, col);
        let id = c(0)? as usize;
        let bus = buses
            .iter_mut()
            .find(|b| b.id == id)
            .ok_or_else(|| Error::Validation(format!("angle limits reference unknown bus {id}")))?;
        bus.angle_limits = Some((c(1)?, c(2)?));
    }

    if raw.gencost.len() != raw.gen.len() {
        let message = if raw.gencost.len() == 2 * raw.gen.len() {
            "reactive power cost rows are not supported".to_string()
        } else {
            format!("{} rows for {} generators", raw.gencost.len(), raw.gen.len())
        };
        return Err(Error::Schema { field: "gencost".into(), message });
    }

    let mut generators = Vec::new();
    let mut costs = Vec::new();
    for (i, (row, cost_row)) in raw.gen.iter().zip(&raw.gencost).enumerate() {
        let c = |col| column("gen", i, row, col);
        if c(GEN_STATUS)? <= 0.0 {
            continue;
        }
        let cc = |col| column("gencost", i, cost_row, col);
        let model = cc(MODEL)?;
        if model != POLYNOMIAL {
            return Err(Error::Schema {
                field: format!("gencost[{i}]"),
                message: format!("cost model {model} not supported, only polynomial (2)"),
            });
        }
        let n = cc(NCOST)? as usize;
        if n == 0 {
            return Err(Error::Schema { field: format!("gencost[{i}]"), message: "no coefficients".into() });
        }
        let coefficients = (0..n).map(|k| cc(COST + k)).collect::<Result<Vec<_>>>()?;
        costs.push(CostCurve { generator: generators.len(), coefficients });
        generators.push(GeneratorRecord {
            bus: c(GEN_BUS)? as usize,
            pg0: c(PG)? / base,
            qg0: c(QG)? / base,
            qmax: c(QMAX)? / base,
            qmin: c(QMIN)? / base,
            pmax: c(PMAX)? / base,
            pmin: c(PMIN)? / base,
            in_service: true,
        });
    }

    let mut branches = Vec::new();
    for (i, row) in raw.branch.iter().enumerate() {
        let c = |col| column("branch", i, row, col);
        if c(BR_STATUS)? <= 0.0 {
            continue;
        }
        let tap = c(TAP)?;
        branches.push(BranchRecord {
            from: c(F_BUS)? as usize,
            to: c(T_BUS)? as usize,
            r: c(BR_R)?,
            x: c(BR_X)?,
            b_charging: c(BR_B)?,
            tap: if tap == 0.0 { 1.0 } else { tap },
            shift: c(SHIFT)?,
            s_max: c(RATE_A)? / base,
            in_service: true,
        });
    }

    let case = PowerCase { name: raw.name.unwrap_or_default(), base_mva: base, buses, generators, branches, costs };
    case.validate()?;
    Ok(case)
}
