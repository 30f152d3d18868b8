use std::fmt::Write as _;

use super::{QpsError, QpsFile, RowSense};

fn fmt_num(v: f64) -> String {
    // both forms print the shortest digits that parse back to `v`
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn check_name(name: &str) -> Result<&str, QpsError> {
    if name.is_empty() || name.contains(char::is_whitespace) || name.starts_with('*') {
        Err(QpsError::UnwritableName(name.to_string()))
    } else {
        Ok(name)
    }
}

/// Writes `file` in free format. Parsing the output gives back `file`.
pub fn write_qps(file: &QpsFile) -> Result<String, QpsError> {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "NAME          {}", file.name);
    let _ = writeln!(w, "ROWS");
    for row in &file.rows {
        let _ = writeln!(w, " {}  {}", row.sense.code(), check_name(&row.name)?);
    }
    let row = |r: usize| file.rows[r].name.as_str();
    let col = |c: usize| file.columns[c].as_str();
    for c in &file.columns {
        check_name(c)?;
    }

    let _ = writeln!(w, "COLUMNS");
    for &(c, r, v) in &file.entries {
        let _ = writeln!(w, "    {}  {}  {}", col(c), row(r), fmt_num(v));
    }
    if !file.rhs.is_empty() {
        let _ = writeln!(w, "RHS");
        for &(r, v) in &file.rhs {
            let _ = writeln!(w, "    RHS  {}  {}", row(r), fmt_num(v));
        }
    }
    if !file.ranges.is_empty() {
        let _ = writeln!(w, "RANGES");
        for &(r, v) in &file.ranges {
            if file.rows[r].sense == RowSense::Objective {
                return Err(QpsError::RangeOnObjective { row: row(r).to_string() });
            }
            let _ = writeln!(w, "    RNG  {}  {}", row(r), fmt_num(v));
        }
    }
    if !file.bounds.is_empty() {
        let _ = writeln!(w, "BOUNDS");
        for b in &file.bounds {
            if b.kind.takes_value() {
                let _ = writeln!(w, " {} BND  {}  {}", b.kind.code(), col(b.column), fmt_num(b.value));
            } else {
                let _ = writeln!(w, " {} BND  {}", b.kind.code(), col(b.column));
            }
        }
    }
    if !file.quadobj.is_empty() {
        let _ = writeln!(w, "QUADOBJ");
        for &(i, j, v) in &file.quadobj {
            let _ = writeln!(w, "    {}  {}  {}", col(j), col(i), fmt_num(v));
        }
    }
    let _ = writeln!(w, "ENDATA");
    Ok(out)
}
