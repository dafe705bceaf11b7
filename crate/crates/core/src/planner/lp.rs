use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::product::ProductMdp;
use crate::model::ActionId;

/// Default upper bound on every occupancy variable.
pub const DEFAULT_UPPER_BOUND: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Maximize the probability of terminating on an opaque observation.
    Opacity,
    /// Maximize the probability of terminating on a non-opaque observation.
    Transparency,
    /// Minimize the opacity reward instead (may leave mass non-terminating).
    TransparencyLiteral,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "opacity" => Ok(Mode::Opacity),
            "transparency" => Ok(Mode::Transparency),
            "transparency-literal" => Ok(Mode::TransparencyLiteral),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Opacity => "opacity",
            Mode::Transparency => "transparency",
            Mode::TransparencyLiteral => "transparency-literal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Ge,
    Le,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub kind: RowKind,
    pub rhs: f64,
}

/// Sparse column: `(row, coefficient)` in increasing row order.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub entries: Vec<(usize, f64)>,
    pub cost: f64,
    pub upper: f64,
}

/// `sense c·x` subject to the rows and `0 ≤ x ≤ upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub rows: Vec<Row>,
    pub columns: Vec<Column>,
}

impl LinearProgram {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum()
    }

    /// `A x` row by row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (c, &v) in self.columns.iter().zip(x) {
            for &(r, a) in &c.entries {
                out[r] += a * v;
            }
        }
        out
    }

    /// Largest violation of any row or bound.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let act = self.row_activity(x);
        let mut worst: f64 = 0.0;
        for (row, a) in self.rows.iter().zip(&act) {
            let v = match row.kind {
                RowKind::Eq => (a - row.rhs).abs(),
                RowKind::Ge => (row.rhs - a).max(0.0),
                RowKind::Le => (a - row.rhs).max(0.0),
            };
            worst = worst.max(v);
        }
        for (c, &v) in self.columns.iter().zip(x) {
            worst = worst.max(-v).max(v - c.upper);
        }
        worst
    }
}

/// Occupancy LP over a product MDP. Column `j` is `m(v, a)` for
/// `vars[j]`; flow row `k` balances product state `flow_states[k]`.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub lp: LinearProgram,
    pub mode: Mode,
    pub epsilon: f64,
    /// `(v, a)` per column.
    pub vars: Vec<(usize, ActionId)>,
    /// Product state of each flow row.
    pub flow_states: Vec<usize>,
    /// Index of the task row.
    pub task_row: usize,
    /// Task-row coefficient of each column.
    pub task_coeffs: Vec<f64>,
    /// Starting basis suggestion per row: the terminating column of each
    /// flow row, the initiating column at the initial state.
    pub crash: Vec<Option<usize>>,
}

impl LpProblem {
    /// Task-satisfaction probability `Σ P·R1·m` of an occupancy vector.
    pub fn task_value(&self, m: &[f64]) -> f64 {
        self.task_coeffs.iter().zip(m).map(|(c, v)| c * v).sum()
    }
}

/// Builds the occupancy LP for `mode` with task threshold `epsilon`.
pub fn build_lp(pm: &ProductMdp, epsilon: f64, mode: Mode, upper: f64) -> LpProblem {
    let transient: Vec<usize> = (0..pm.num_states())
        .filter(|&v| !pm.is_absorbing(v))
        .collect();
    let mut row_of = vec![usize::MAX; pm.num_states()];
    for (k, &v) in transient.iter().enumerate() {
        row_of[v] = k;
    }
    let mut rows: Vec<Row> = transient
        .iter()
        .map(|&v| Row {
            name: format!("flow_v{v}"),
            kind: RowKind::Eq,
            rhs: if v == pm.initial() { 1.0 } else { 0.0 },
        })
        .collect();
    let task_row = rows.len();
    rows.push(Row {
        name: "task".into(),
        kind: RowKind::Ge,
        rhs: epsilon,
    });

    let mut columns = Vec::new();
    let mut vars = Vec::new();
    let mut task_coeffs = Vec::new();
    for &v in &transient {
        for row in pm.rows(v) {
            let a = row.action;
            let mut entries: Vec<(usize, f64)> = vec![(row_of[v], 1.0)];
            let mut task = 0.0;
            for succ in &row.successors {
                if succ.task {
                    task += succ.prob;
                }
                let r = row_of[succ.to];
                if r != usize::MAX {
                    entries.push((r, -succ.prob));
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len() + 1);
            for (r, c) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += c,
                    _ => merged.push((r, c)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            if task != 0.0 {
                merged.push((task_row, task));
            }
            let cost = match mode {
                Mode::Opacity | Mode::TransparencyLiteral => pm.reward_opaque(v, a),
                Mode::Transparency => pm.reward_transparent(v, a),
            };
            columns.push(Column {
                name: format!("m_v{v}_a{a}"),
                entries: merged,
                cost: if cost { 1.0 } else { 0.0 },
                upper,
            });
            vars.push((v, a));
            task_coeffs.push(task);
        }
    }
    let mut crash = vec![None; rows.len()];
    for (j, &(v, a)) in vars.iter().enumerate() {
        let single = pm.rows(v).len() == 1;
        if a == pm.a_bot() || (v == pm.initial() && single) {
            crash[row_of[v]] = Some(j);
        }
    }
    let sense = match mode {
        Mode::TransparencyLiteral => Sense::Minimize,
        _ => Sense::Maximize,
    };
    LpProblem {
        lp: LinearProgram {
            sense,
            rows,
            columns,
        },
        mode,
        epsilon,
        vars,
        flow_states: transient,
        task_row,
        task_coeffs,
        crash,
    }
}

/// Appends `coeff var` to `line`, flushing long lines into `out`.
fn term(out: &mut String, line: &mut String, coeff: f64, var: &str, first: bool) {
    let piece = if first {
        if coeff == 1.0 {
            format!(" {var}")
        } else if coeff == -1.0 {
            format!(" - {var}")
        } else {
            format!(" {coeff} {var}")
        }
    } else if coeff == 1.0 {
        format!(" + {var}")
    } else if coeff == -1.0 {
        format!(" - {var}")
    } else if coeff < 0.0 {
        format!(" - {} {var}", -coeff)
    } else {
        format!(" + {coeff} {var}")
    };
    if line.len() + piece.len() > 240 {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push_str("   ");
    }
    line.push_str(&piece);
}

/// Writes a linear program in CPLEX LP format. Output is a pure function of
/// the problem, so re-exporting yields identical bytes.
pub fn export_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    let mut line = String::from(" obj:");
    let mut first = true;
    for c in &lp.columns {
        if c.cost != 0.0 {
            term(&mut out, &mut line, c.cost, &c.name, first);
            first = false;
        }
    }
    if first {
        // Some readers reject an empty objective.
        line.push_str(" 0 dummy_zero");
    }
    out.push_str(&line);
    out.push('\n');

    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.rows.len()];
    for (j, c) in lp.columns.iter().enumerate() {
        for &(r, a) in &c.entries {
            by_row[r].push((j, a));
        }
    }
    out.push_str("Subject To\n");
    for (row, entries) in lp.rows.iter().zip(&by_row) {
        let mut line = format!(" {}:", row.name);
        if entries.is_empty() {
            line.push_str(" 0 dummy_zero");
        }
        for (k, &(j, a)) in entries.iter().enumerate() {
            term(&mut out, &mut line, a, &lp.columns[j].name, k == 0);
        }
        let op = match row.kind {
            RowKind::Eq => "=",
            RowKind::Ge => ">=",
            RowKind::Le => "<=",
        };
        let _ = write!(line, " {op} {}", row.rhs);
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for c in &lp.columns {
        if c.upper.is_finite() {
            let _ = writeln!(out, " 0 <= {} <= {}", c.name, c.upper);
        } else {
            let _ = writeln!(out, " {} >= 0", c.name);
        }
    }
    if lp.columns.iter().all(|c| c.cost == 0.0) || by_row.iter().any(Vec::is_empty) {
        out.push_str(" dummy_zero = 0\n");
    }
    out.push_str("End\n");
    out
}
