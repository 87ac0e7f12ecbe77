//! Column-typed datasets and their CSV form.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    Categorical(Vec<String>),
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

impl Variable {
    pub fn categorical<S: AsRef<str>>(name: &str, levels: &[S]) -> Self {
        Variable {
            name: name.to_string(),
            kind: VarKind::Categorical(levels.iter().map(|l| l.as_ref().to_string()).collect()),
        }
    }

    pub fn continuous(name: &str) -> Self {
        Variable {
            name: name.to_string(),
            kind: VarKind::Continuous,
        }
    }

    /// Number of levels for categorical variables.
    pub fn n_levels(&self) -> Option<usize> {
        match &self.kind {
            VarKind::Categorical(l) => Some(l.len()),
            VarKind::Continuous => None,
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            VarKind::Categorical(l) => Some(l),
            VarKind::Continuous => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VarKind::Continuous)
    }
}

/// Categorical cells are level indices into the variable's level list.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Categorical(Vec<u32>),
    Continuous(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    vars: Vec<Variable>,
    columns: Vec<Column>,
    n: usize,
}

impl Dataset {
    pub fn new(vars: Vec<Variable>, columns: Vec<Column>) -> Result<Self, ModelError> {
        if vars.len() != columns.len() {
            return Err(ModelError::Shape(format!(
                "{} variables but {} columns",
                vars.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Column::len);
        let mut seen = BTreeSet::new();
        for (v, c) in vars.iter().zip(&columns) {
            if !seen.insert(v.name.as_str()) {
                return Err(ModelError::Shape(format!("duplicate variable `{}`", v.name)));
            }
            if c.len() != n {
                return Err(ModelError::Shape(format!("column `{}` has {} rows, expected {n}", v.name, c.len())));
            }
            match (&v.kind, c) {
                (VarKind::Categorical(levels), Column::Categorical(cells)) => {
                    if levels.is_empty() {
                        return Err(ModelError::Shape(format!("`{}` declares no levels", v.name)));
                    }
                    if cells.iter().any(|&x| x as usize >= levels.len()) {
                        return Err(ModelError::Shape(format!("`{}` has an undeclared level", v.name)));
                    }
                }
                (VarKind::Continuous, Column::Continuous(cells)) => {
                    if cells.iter().any(|x| !x.is_finite()) {
                        return Err(ModelError::Shape(format!("`{}` has a non-finite value", v.name)));
                    }
                }
                _ => {
                    return Err(ModelError::Shape(format!(
                        "column type of `{}` does not match its variable",
                        v.name
                    )))
                }
            }
        }
        Ok(Dataset { vars, columns, n })
    }

    /// Zero-row dataset with the given metadata.
    pub fn empty(vars: Vec<Variable>) -> Self {
        let columns = vars
            .iter()
            .map(|v| match v.kind {
                VarKind::Categorical(_) => Column::Categorical(Vec::new()),
                VarKind::Continuous => Column::Continuous(Vec::new()),
            })
            .collect();
        Dataset { vars, columns, n: 0 }
    }

    /// All-continuous dataset from named columns.
    pub fn from_continuous<S: AsRef<str>>(names: &[S], columns: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let vars = names.iter().map(|n| Variable::continuous(n.as_ref())).collect();
        Self::new(vars, columns.into_iter().map(Column::Continuous).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, i: usize) -> &Variable {
        &self.vars[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn categorical(&self, i: usize) -> Option<&[u32]> {
        match &self.columns[i] {
            Column::Categorical(v) => Some(v),
            Column::Continuous(_) => None,
        }
    }

    pub fn continuous(&self, i: usize) -> Option<&[f64]> {
        match &self.columns[i] {
            Column::Continuous(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.vars.iter().all(|v| !v.is_continuous())
    }

    pub fn is_continuous(&self) -> bool {
        self.vars.iter().all(Variable::is_continuous)
    }

    /// Columns reordered so that column `k` of the result is column `order[k]`.
    pub fn permute_columns(&self, order: &[usize]) -> Dataset {
        Dataset {
            vars: order.iter().map(|&i| self.vars[i].clone()).collect(),
            columns: order.iter().map(|&i| self.columns[i].clone()).collect(),
            n: self.n,
        }
    }

    /// Keeps the rows with the given indices, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
                Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
            })
            .collect();
        Dataset {
            vars: self.vars.clone(),
            columns,
            n: rows.len(),
        }
    }

    /// CSV with a header row; categorical cells are quoted, continuous cells
    /// use the shortest round-trip decimal form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.vars.iter().map(|v| quote_if_needed(&v.name)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.n {
            for (i, (v, c)) in self.vars.iter().zip(&self.columns).enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match (c, &v.kind) {
                    (Column::Categorical(cells), VarKind::Categorical(levels)) => {
                        out.push('"');
                        out.push_str(&levels[cells[r] as usize].replace('"', "\"\""));
                        out.push('"');
                    }
                    (Column::Continuous(cells), _) => {
                        let _ = write!(out, "{}", cells[r]);
                    }
                    _ => unreachable!("validated on construction"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Reads a CSV, inferring column types: a column is continuous when its
    /// cells are unquoted and parse as numbers. Levels are sorted.
    pub fn read_csv<R: Read>(mut r: R) -> Result<Self, ModelError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let (names, rows) = parse_csv(&text)?;
        let quoted = first_row_quoting(&text, names.len());
        let mut vars = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let numeric: Option<Vec<f64>> = if quoted.get(j).copied().unwrap_or(false) {
                None
            } else {
                rows.iter().map(|row| row[j].trim().parse::<f64>().ok()).collect()
            };
            match numeric {
                Some(values) => {
                    vars.push(Variable::continuous(name));
                    columns.push(Column::Continuous(values));
                }
                None => {
                    let levels: Vec<String> = rows
                        .iter()
                        .map(|row| row[j].clone())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    let lookup: HashMap<&str, u32> = levels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| (l.as_str(), i as u32))
                        .collect();
                    let cells = rows.iter().map(|row| lookup[row[j].as_str()]).collect();
                    vars.push(Variable::categorical(name, &levels));
                    columns.push(Column::Categorical(cells));
                }
            }
        }
        Self::new(vars, columns)
    }

    /// Reads a CSV against known variable metadata (matched by header name).
    pub fn read_csv_with<R: Read>(mut r: R, vars: &[Variable]) -> Result<Self, ModelError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let (names, rows) = parse_csv(&text)?;
        let mut columns = Vec::with_capacity(vars.len());
        for v in vars {
            let j = names
                .iter()
                .position(|n| n == &v.name)
                .ok_or_else(|| ModelError::Shape(format!("missing column `{}`", v.name)))?;
            columns.push(match &v.kind {
                VarKind::Continuous => Column::Continuous(
                    rows.iter()
                        .enumerate()
                        .map(|(i, row)| {
                            row[j].trim().parse::<f64>().map_err(|_| {
                                ModelError::Csv(format!("row {}: `{}` is not a number", i + 2, row[j]))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
                VarKind::Categorical(levels) => Column::Categorical(
                    rows.iter()
                        .enumerate()
                        .map(|(i, row)| {
                            levels.iter().position(|l| l == &row[j]).map(|p| p as u32).ok_or_else(|| {
                                ModelError::Csv(format!("row {}: unknown level `{}` for `{}`", i + 2, row[j], v.name))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
            });
        }
        Self::new(vars.to_vec(), columns)
    }
}

fn quote_if_needed(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), ModelError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| ModelError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| ModelError::Csv(e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((names, rows))
}

/// Which fields of the first data row are quoted in the raw text.
fn first_row_quoting(text: &str, width: usize) -> Vec<bool> {
    let mut lines = text.lines();
    let _ = lines.next();
    let Some(line) = lines.next() else {
        return vec![false; width];
    };
    let mut out = Vec::with_capacity(width);
    let mut at_start = true;
    let mut in_quotes = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        if at_start {
            out.push(c == '"');
            at_start = false;
            if c == '"' {
                in_quotes = true;
                continue;
            }
        }
        match c {
            '"' if in_quotes => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                } else {
                    in_quotes = false;
                }
            }
            ',' if !in_quotes => at_start = true,
            _ => {}
        }
    }
    if at_start {
        out.push(false);
    }
    out
}
