//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! Pivots are chosen by Markowitz count among entries passing a column
//! threshold test. Right-hand sides are indexed by matrix row; solutions of
//! `B x = b` are indexed by basis position (matrix column).

const DROP_TOL: f64 = 1e-14;
/// Markowitz search stops after this many candidate rows/columns once a
/// pivot has been found.
const SEARCH_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Singular {
    /// Rank found before the factorization broke down.
    pub rank: usize,
}

/// Doubly linked lists of indices bucketed by nonzero count.
struct Buckets {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    count: Vec<usize>,
    live: Vec<bool>,
}

const NIL: usize = usize::MAX;

impl Buckets {
    fn new(n: usize) -> Self {
        Buckets {
            head: vec![NIL; n + 2],
            next: vec![NIL; n],
            prev: vec![NIL; n],
            count: vec![0; n],
            live: vec![false; n],
        }
    }

    fn insert(&mut self, x: usize, c: usize) {
        let c = c.min(self.head.len() - 1);
        self.count[x] = c;
        self.live[x] = true;
        self.prev[x] = NIL;
        self.next[x] = self.head[c];
        if self.head[c] != NIL {
            self.prev[self.head[c]] = x;
        }
        self.head[c] = x;
    }

    fn remove(&mut self, x: usize) {
        if !self.live[x] {
            return;
        }
        let (p, n) = (self.prev[x], self.next[x]);
        if p != NIL {
            self.next[p] = n;
        } else {
            self.head[self.count[x]] = n;
        }
        if n != NIL {
            self.prev[n] = p;
        }
        self.live[x] = false;
    }

    fn update(&mut self, x: usize, c: usize) {
        self.remove(x);
        self.insert(x, c);
    }
}

#[derive(Clone, Debug)]
struct Eta {
    r: usize,
    pivot: f64,
    /// Off-pivot entries of the transformed column.
    entries: Vec<(usize, f64)>,
}

/// `B = L U` with `B` given column by column, plus eta updates applied after
/// the last refactorization.
#[derive(Clone, Debug)]
pub struct LuFactors {
    m: usize,
    perm_row: Vec<usize>,
    perm_col: Vec<usize>,
    lower: Vec<Vec<(usize, f64)>>,
    upper: Vec<(f64, Vec<(usize, f64)>)>,
    etas: Vec<Eta>,
}

impl LuFactors {
    /// Factorizes the square matrix whose column `k` is `columns[k]`
    /// (row, value pairs).
    pub fn factorize(
        m: usize,
        columns: &[Vec<(usize, f64)>],
        threshold: f64,
    ) -> Result<Self, Singular> {
        assert_eq!(columns.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                if v.abs() > DROP_TOL {
                    rows[i].push((j, v));
                    col_rows[j].push(i);
                }
            }
        }
        let mut rb = Buckets::new(m);
        let mut cb = Buckets::new(m);
        for i in 0..m {
            rb.insert(i, rows[i].len());
            cb.insert(i, col_rows[i].len());
        }
        let mut perm_row = Vec::with_capacity(m);
        let mut perm_col = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(m);
        let mut upper = Vec::with_capacity(m);
        let mut pos = vec![NIL; m];

        let value = |rows: &Vec<Vec<(usize, f64)>>, i: usize, j: usize| -> f64 {
            rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
        };
        // Largest magnitude per active column; NaN marks a stale entry.
        let mut colmax = vec![f64::NAN; m];
        let col_max = |colmax: &mut Vec<f64>,
                       rows: &Vec<Vec<(usize, f64)>>,
                       col_rows: &Vec<Vec<usize>>,
                       j: usize| {
            if colmax[j].is_nan() {
                colmax[j] = col_rows[j]
                    .iter()
                    .map(|&i| value(rows, i, j).abs())
                    .fold(0.0, f64::max);
            }
            colmax[j]
        };

        for k in 0..m {
            // Markowitz search.
            let mut best: Option<(usize, usize, usize)> = None; // (cost, row, col)
            let mut searched = 0;
            'search: for c in 0..=m {
                if c == 0 {
                    if cb.head[0] != NIL || rb.head[0] != NIL {
                        return Err(Singular { rank: k });
                    }
                    continue;
                }
                let mut j = cb.head[c.min(m + 1)];
                while j != NIL {
                    let colmax = col_max(&mut colmax, &rows, &col_rows, j);
                    for &i in &col_rows[j] {
                        let a = value(&rows, i, j).abs();
                        if a >= threshold * colmax && a > DROP_TOL {
                            let cost = (rows[i].len() - 1) * (c - 1);
                            if best.is_none_or(|b| cost < b.0) {
                                best = Some((cost, i, j));
                            }
                        }
                    }
                    searched += 1;
                    if let Some(b) = best {
                        if b.0 <= (c - 1) * (c - 1) || searched >= SEARCH_DEPTH {
                            break 'search;
                        }
                    }
                    j = cb.next[j];
                }
                let mut i = rb.head[c.min(m + 1)];
                while i != NIL {
                    // A row singleton creates no fill; its pivot is taken as is.
                    if c == 1 && rows[i][0].1.abs() > DROP_TOL {
                        best = Some((0, i, rows[i][0].0));
                        break 'search;
                    }
                    for &(j, a) in &rows[i] {
                        let colmax = col_max(&mut colmax, &rows, &col_rows, j);
                        if a.abs() >= threshold * colmax && a.abs() > DROP_TOL {
                            let cost = (c - 1) * (col_rows[j].len() - 1);
                            if best.is_none_or(|b| cost < b.0) {
                                best = Some((cost, i, j));
                            }
                        }
                    }
                    searched += 1;
                    if let Some(b) = best {
                        if b.0 <= c * (c - 1) || searched >= SEARCH_DEPTH {
                            break 'search;
                        }
                    }
                    i = rb.next[i];
                }
            }
            let Some((_, p, q)) = best else {
                return Err(Singular { rank: k });
            };

            // Pivot row becomes a row of U.
            let prow = std::mem::take(&mut rows[p]);
            rb.remove(p);
            let mut piv = 0.0;
            let mut urow = Vec::with_capacity(prow.len());
            for &(j, v) in &prow {
                if let Some(at) = col_rows[j].iter().position(|&r| r == p) {
                    col_rows[j].swap_remove(at);
                }
                if j == q {
                    piv = v;
                } else {
                    urow.push((j, v));
                    cb.update(j, col_rows[j].len());
                    colmax[j] = f64::NAN;
                }
            }
            let elim_rows = std::mem::take(&mut col_rows[q]);
            cb.remove(q);
            let mut lcol = Vec::with_capacity(elim_rows.len());
            for i in elim_rows {
                let row = &mut rows[i];
                let at = row.iter().position(|e| e.0 == q).expect("pattern in sync");
                let aiq = row.swap_remove(at).1;
                let l = aiq / piv;
                lcol.push((i, l));
                for (idx, &(j, _)) in row.iter().enumerate() {
                    pos[j] = idx;
                }
                for &(j, v) in &urow {
                    colmax[j] = f64::NAN;
                    if pos[j] != NIL {
                        row[pos[j]].1 -= l * v;
                    } else {
                        pos[j] = row.len();
                        row.push((j, -l * v));
                        col_rows[j].push(i);
                        cb.update(j, col_rows[j].len());
                    }
                }
                for &(j, _) in row.iter() {
                    pos[j] = NIL;
                }
                // Drop cancelled entries.
                let mut t = 0;
                while t < row.len() {
                    if row[t].1.abs() <= DROP_TOL {
                        let j = row[t].0;
                        row.swap_remove(t);
                        if let Some(at) = col_rows[j].iter().position(|&r| r == i) {
                            col_rows[j].swap_remove(at);
                        }
                        cb.update(j, col_rows[j].len());
                    } else {
                        t += 1;
                    }
                }
                rb.update(i, row.len());
            }
            perm_row.push(p);
            perm_col.push(q);
            lower.push(lcol);
            upper.push((piv, urow));
        }
        Ok(LuFactors {
            m,
            perm_row,
            perm_col,
            lower,
            upper,
            etas: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Nonzeros in L, U and the eta file.
    pub fn nnz(&self) -> usize {
        self.lower.iter().map(Vec::len).sum::<usize>()
            + self.upper.iter().map(|u| u.1.len() + 1).sum::<usize>()
            + self.etas.iter().map(|e| e.entries.len() + 1).sum::<usize>()
    }

    /// Solves `B x = b`; `b` is consumed as workspace.
    pub fn ftran(&self, b: &mut [f64]) -> Vec<f64> {
        for (k, lcol) in self.lower.iter().enumerate() {
            let t = b[self.perm_row[k]];
            if t != 0.0 {
                for &(i, l) in lcol {
                    b[i] -= l * t;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for k in (0..self.m).rev() {
            let (piv, urow) = &self.upper[k];
            let mut s = b[self.perm_row[k]];
            for &(j, v) in urow {
                s -= v * x[j];
            }
            x[self.perm_col[k]] = s / piv;
        }
        for eta in &self.etas {
            let xr = x[eta.r] / eta.pivot;
            x[eta.r] = xr;
            if xr != 0.0 {
                for &(i, w) in &eta.entries {
                    x[i] -= w * xr;
                }
            }
        }
        x
    }

    /// Solves `Bᵀ y = c`; `c` (indexed by basis position) is consumed.
    pub fn btran(&self, c: &mut [f64]) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.r];
            for &(i, w) in &eta.entries {
                s -= w * c[i];
            }
            c[eta.r] = s / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        for k in 0..self.m {
            let (piv, urow) = &self.upper[k];
            let z = c[self.perm_col[k]] / piv;
            y[self.perm_row[k]] = z;
            if z != 0.0 {
                for &(j, v) in urow {
                    c[j] -= v * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut s = 0.0;
            for &(i, l) in &self.lower[k] {
                s += l * y[i];
            }
            y[self.perm_row[k]] -= s;
        }
        y
    }

    /// Replaces basis column `r` given `w = B⁻¹ a` for the entering column.
    pub fn update(&mut self, r: usize, w: &[f64]) {
        let entries = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != r && v.abs() > DROP_TOL)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            r,
            pivot: w[r],
            entries,
        });
    }
}
