use std::collections::HashMap;

use super::{BoundKind, QpsBound, QpsError, QpsFile, QpsRow, RowSense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    QuadObj,
    QMatrix,
}

struct Parser {
    file: QpsFile,
    row_index: HashMap<String, usize>,
    col_index: HashMap<String, usize>,
    entry_index: HashMap<(usize, usize), usize>,
    rhs_index: HashMap<usize, usize>,
    range_index: HashMap<usize, usize>,
    quad: HashMap<(usize, usize), f64>,
    seen: Vec<Section>,
    line: usize,
}

fn err(line: usize, msg: impl Into<String>) -> QpsError {
    QpsError::Parse { line, msg: msg.into() }
}

/// Fixed MPS field positions (0-based, end exclusive).
const FIXED_FIELDS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];

fn fixed_fields(line: &str) -> Vec<&str> {
    FIXED_FIELDS
        .iter()
        .map(|&(a, b)| {
            let a = a.min(line.len());
            let b = b.min(line.len());
            line.get(a..b).unwrap_or("").trim()
        })
        .collect()
}

fn number(line: usize, tok: &str) -> Result<f64, QpsError> {
    let parsed = if tok.contains(['d', 'D']) {
        tok.replace(['d', 'D'], "e").parse::<f64>()
    } else {
        tok.parse::<f64>()
    };
    match parsed {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(err(line, format!("'{tok}' is not a number"))),
    }
}

/// Parses QPS text. Errors carry 1-based line numbers.
pub fn parse_qps(text: &str) -> Result<QpsFile, QpsError> {
    let mut p = Parser {
        file: QpsFile::default(),
        row_index: HashMap::new(),
        col_index: HashMap::new(),
        entry_index: HashMap::new(),
        rhs_index: HashMap::new(),
        range_index: HashMap::new(),
        quad: HashMap::new(),
        seen: Vec::new(),
        line: 0,
    };
    let mut section: Option<Section> = None;
    let mut ended = false;
    for (k, raw) in text.lines().enumerate() {
        p.line = k + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if ended {
            return Err(err(p.line, "content after ENDATA"));
        }
        if !line.starts_with([' ', '\t']) {
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or("").to_ascii_uppercase();
            let s = match head.as_str() {
                "NAME" => {
                    p.file.name = line[4..].trim().to_string();
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(t) = toks.next() {
                        p.objsense(t)?;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "QUADOBJ" | "QSECTION" => Section::QuadObj,
                "QMATRIX" => Section::QMatrix,
                "ENDATA" => {
                    ended = true;
                    continue;
                }
                other => return Err(err(p.line, format!("unknown section '{other}'"))),
            };
            p.enter(s)?;
            section = Some(s);
            continue;
        }
        match section {
            None | Some(Section::Name) => return Err(err(p.line, "data line outside of a section")),
            Some(Section::ObjSense) => p.objsense(line.trim())?,
            Some(Section::Rows) => p.row_line(line)?,
            Some(Section::Columns) => p.column_line(line)?,
            Some(Section::Rhs) => p.rhs_line(line, false)?,
            Some(Section::Ranges) => p.rhs_line(line, true)?,
            Some(Section::Bounds) => p.bound_line(line)?,
            Some(Section::QuadObj) | Some(Section::QMatrix) => p.quad_line(line)?,
        }
    }
    if !ended {
        return Err(err(p.line + 1, "missing ENDATA"));
    }
    if p.file.objective_row().is_none() {
        return Err(err(p.line, "no objective (N) row declared"));
    }
    let qmatrix = p.seen.contains(&Section::QMatrix);
    p.finish_quad(qmatrix);
    Ok(p.file)
}

impl Parser {
    fn enter(&mut self, s: Section) -> Result<(), QpsError> {
        let same = |a: Section, b: Section| {
            a == b || matches!((a, b), (Section::QuadObj, Section::QMatrix) | (Section::QMatrix, Section::QuadObj))
        };
        if self.seen.iter().any(|&t| same(t, s)) {
            return Err(err(self.line, format!("section {s:?} repeated")));
        }
        let has = |t: Section| self.seen.contains(&t);
        let ok = match s {
            Section::Name => self.seen.is_empty(),
            Section::ObjSense => !has(Section::Rows),
            Section::Rows => true,
            Section::Columns => has(Section::Rows),
            _ => has(Section::Columns),
        };
        if !ok {
            return Err(err(self.line, format!("section {s:?} out of order")));
        }
        self.seen.push(s);
        Ok(())
    }

    fn objsense(&self, tok: &str) -> Result<(), QpsError> {
        match tok.to_ascii_uppercase().as_str() {
            "MIN" | "MINIMIZE" => Ok(()),
            "MAX" | "MAXIMIZE" => Err(err(self.line, "maximization is not supported")),
            other => Err(err(self.line, format!("unknown objective sense '{other}'"))),
        }
    }

    fn row(&self, name: &str) -> Result<usize, QpsError> {
        self.row_index
            .get(name)
            .copied()
            .ok_or_else(|| err(self.line, format!("undeclared row '{name}'")))
    }

    fn column(&self, name: &str) -> Result<usize, QpsError> {
        self.col_index
            .get(name)
            .copied()
            .ok_or_else(|| err(self.line, format!("undeclared column '{name}'")))
    }

    fn row_line(&mut self, line: &str) -> Result<(), QpsError> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (code, name) = if toks.len() == 2 {
            (toks[0], toks[1].to_string())
        } else {
            let f = fixed_fields(line);
            (f[0], f[1].to_string())
        };
        let sense = match code.to_ascii_uppercase().as_str() {
            "N" => RowSense::Objective,
            "L" => RowSense::Le,
            "E" => RowSense::Eq,
            "G" => RowSense::Ge,
            other => return Err(err(self.line, format!("unknown row type '{other}'"))),
        };
        if name.is_empty() {
            return Err(err(self.line, "row without a name"));
        }
        if sense == RowSense::Objective && self.file.objective_row().is_some() {
            return Err(err(self.line, "more than one objective row"));
        }
        if self.row_index.contains_key(&name) {
            return Err(err(self.line, format!("row '{name}' declared twice")));
        }
        self.row_index.insert(name.clone(), self.file.rows.len());
        self.file.rows.push(QpsRow { name, sense });
        Ok(())
    }

    fn column_line(&mut self, line: &str) -> Result<(), QpsError> {
        if line.contains("'MARKER'") {
            return Err(err(self.line, "integer markers are not supported"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let fields: Vec<&str> = if toks.len() == 3 || toks.len() == 5 {
            toks
        } else {
            let f = fixed_fields(line);
            let end = if f[4].is_empty() { 4 } else { 6 };
            f[1..end].to_vec()
        };
        let col_name = fields[0];
        if col_name.is_empty() {
            return Err(err(self.line, "malformed COLUMNS line"));
        }
        let col = match self.col_index.get(col_name) {
            Some(&c) => c,
            None => {
                let c = self.file.columns.len();
                self.col_index.insert(col_name.to_string(), c);
                self.file.columns.push(col_name.to_string());
                c
            }
        };
        for pair in fields[1..].chunks(2) {
            if pair.len() != 2 || pair[0].is_empty() {
                return Err(err(self.line, "malformed COLUMNS line"));
            }
            let r = self.row(pair[0])?;
            let v = number(self.line, pair[1])?;
            match self.entry_index.get(&(col, r)) {
                Some(&k) => self.file.entries[k].2 += v,
                None => {
                    self.entry_index.insert((col, r), self.file.entries.len());
                    self.file.entries.push((col, r, v));
                }
            }
        }
        Ok(())
    }

    fn rhs_line(&mut self, line: &str, ranges: bool) -> Result<(), QpsError> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let pairs: Vec<&str> = match toks.len() {
            // set name present
            3 | 5 => toks[1..].to_vec(),
            2 | 4 if self.row_index.contains_key(toks[0]) => toks,
            _ => {
                let f = fixed_fields(line);
                let end = if f[4].is_empty() { 4 } else { 6 };
                f[2..end].to_vec()
            }
        };
        for pair in pairs.chunks(2) {
            if pair.len() != 2 || pair[0].is_empty() {
                return Err(err(self.line, "malformed line"));
            }
            let r = self.row(pair[0])?;
            let v = number(self.line, pair[1])?;
            if ranges && self.file.rows[r].sense == RowSense::Objective {
                return Err(QpsError::RangeOnObjective { row: pair[0].to_string() });
            }
            let (index, list) = if ranges {
                (&mut self.range_index, &mut self.file.ranges)
            } else {
                (&mut self.rhs_index, &mut self.file.rhs)
            };
            match index.get(&r) {
                Some(&k) => list[k].1 += v,
                None => {
                    index.insert(r, list.len());
                    list.push((r, v));
                }
            }
        }
        Ok(())
    }

    fn bound_line(&mut self, line: &str) -> Result<(), QpsError> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let code = toks.first().copied().unwrap_or("").to_ascii_uppercase();
        let kind = match code.as_str() {
            "UP" => BoundKind::Up,
            "LO" => BoundKind::Lo,
            "FX" => BoundKind::Fx,
            "FR" => BoundKind::Fr,
            "MI" => BoundKind::Mi,
            "PL" => BoundKind::Pl,
            "BV" | "LI" | "UI" | "SC" => {
                return Err(err(self.line, format!("integer bound type '{code}' is not supported")))
            }
            other => return Err(err(self.line, format!("unknown bound type '{other}'"))),
        };
        let (col_name, val) = match (kind.takes_value(), toks.len()) {
            (true, 4) => (toks[2], Some(toks[3])),
            (true, 3) => (toks[1], Some(toks[2])),
            (false, 3) => (toks[2], None),
            (false, 2) => (toks[1], None),
            _ => {
                let f = fixed_fields(line);
                (f[2], kind.takes_value().then_some(f[3]))
            }
        };
        let column = self.column(col_name)?;
        let value = match val {
            Some(t) => number(self.line, t)?,
            None => 0.0,
        };
        self.file.bounds.push(QpsBound { kind, column, value });
        Ok(())
    }

    fn quad_line(&mut self, line: &str) -> Result<(), QpsError> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let f: Vec<&str> = if toks.len() == 3 { toks } else { fixed_fields(line)[1..4].to_vec() };
        let i = self.column(f[0])?;
        let j = self.column(f[1])?;
        let v = number(self.line, f[2])?;
        *self.quad.entry((i, j)).or_insert(0.0) += v;
        Ok(())
    }

    /// QUADOBJ lists one triangle, so an entry in either position defines
    /// the symmetric pair. QMATRIX lists both; the two halves are averaged.
    fn finish_quad(&mut self, qmatrix: bool) {
        let mut lower: HashMap<(usize, usize), f64> = HashMap::new();
        for (&(i, j), &v) in &self.quad {
            let key = (i.max(j), i.min(j));
            let w = if qmatrix && i != j { 0.5 * v } else { v };
            *lower.entry(key).or_insert(0.0) += w;
        }
        let mut q: Vec<(usize, usize, f64)> = lower.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        q.sort_by_key(|&(i, j, _)| (j, i));
        self.file.quadobj = q;
    }
}
