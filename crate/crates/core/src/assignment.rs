//! Energy-level diagrams reconstructed from signed transition connectivity.
//!
//! Levels are grouped into manifolds `m = 0..=n` (number of β spins, so
//! manifold `m` holds C(n, m) levels and M_z = n/2 − m). A transition edge
//! joins a level of manifold `m` (its `lower`, larger M_z) to one of
//! manifold `m + 1` (its `upper`).
//!
//! Two edges are progressive (+1) when one ends where the other starts,
//! regressive (−1) when they share their start or their end, and
//! unconnected (0) otherwise.

use crate::error::{Result, SpinError};
use crate::format::g12;
use crate::linalg::binomial;
use crate::spin::{sq_transition_count, EigenSystem, TransitionCatalog};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

pub const DEFAULT_SOLUTION_CAP: usize = 64;

/// Symmetric signed matrix over a list of transition ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityMatrix {
    pub ids: Vec<usize>,
    pub m: Vec<Vec<i8>>,
}

impl ConnectivityMatrix {
    pub fn new(ids: Vec<usize>, m: Vec<Vec<i8>>) -> Result<Self> {
        let cm = ConnectivityMatrix { ids, m };
        cm.validate()?;
        Ok(cm)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.ids.len();
        let bad = |msg: String| Err(SpinError::InvalidSystem(msg));
        if self.m.len() != t || self.m.iter().any(|r| r.len() != t) {
            return bad(format!("connectivity matrix is not {t}x{t}"));
        }
        for a in 0..t {
            if self.m[a][a] != 0 {
                return bad(format!("nonzero diagonal entry at {}", a + 1));
            }
            for b in 0..t {
                if !(-1..=1).contains(&self.m[a][b]) {
                    return bad(format!("entry ({}, {}) is not -1, 0 or 1", a + 1, b + 1));
                }
                if self.m[a][b] != self.m[b][a] {
                    return bad(format!("matrix is not symmetric at ({}, {})", a + 1, b + 1));
                }
            }
        }
        Ok(())
    }

    /// Parses whitespace-separated rows of −1/0/1; ids default to 1..=T.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<i8>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("");
            let mut row = Vec::new();
            let mut col = 0usize;
            for tok in content.split_whitespace() {
                col = content[col..].find(tok).map_or(col, |p| p + col);
                let v: i8 = match tok {
                    "-1" => -1,
                    "0" => 0,
                    "1" | "+1" => 1,
                    _ => {
                        return Err(SpinError::Parse {
                            line: i + 1,
                            col: col + 1,
                            message: format!("expected -1, 0 or 1, got '{tok}'"),
                        })
                    }
                };
                col += tok.len();
                row.push(v);
            }
            if !row.is_empty() {
                rows.push(row);
            }
        }
        if rows.is_empty() {
            return Err(SpinError::Parse {
                line: 1,
                col: 1,
                message: "empty connectivity matrix".into(),
            });
        }
        let t = rows.len();
        ConnectivityMatrix::new((1..=t).collect(), rows)
    }

    /// Appends `extra` all-zero rows/columns with the given ids.
    pub fn padded(&self, extra_ids: &[usize]) -> Self {
        let t = self.len() + extra_ids.len();
        let mut m = vec![vec![0i8; t]; t];
        for (a, row) in self.m.iter().enumerate() {
            m[a][..row.len()].copy_from_slice(row);
        }
        let mut ids = self.ids.clone();
        ids.extend_from_slice(extra_ids);
        ConnectivityMatrix { ids, m }
    }

    /// Rows with no nonzero entry.
    pub fn isolated(&self) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.m[a].iter().all(|&v| v == 0)).collect()
    }
}

impl fmt::Display for ConnectivityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.m {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>2}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Edge in manifold coordinates: lower level `lo` of manifold `m`, upper
/// level `up` of manifold `m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub m: usize,
    pub lo: usize,
    pub up: usize,
}

impl Edge {
    fn lower_key(self) -> (usize, usize) {
        (self.m, self.lo)
    }

    fn upper_key(self) -> (usize, usize) {
        (self.m + 1, self.up)
    }
}

/// Signed relation between two edges.
pub fn edge_relation(a: Edge, b: Edge) -> i8 {
    if a == b {
        return 0;
    }
    if a.upper_key() == b.lower_key() || a.lower_key() == b.upper_key() {
        1
    } else if a.lower_key() == b.lower_key() || a.upper_key() == b.upper_key() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDiagram {
    pub n: usize,
    /// `(transition id, edge)` in connectivity-matrix order.
    pub edges: Vec<(usize, Edge)>,
}

impl LevelDiagram {
    pub fn manifold_sizes(&self) -> Vec<usize> {
        (0..=self.n).map(|m| binomial(self.n, m)).collect()
    }

    /// Global level index: manifold-major.
    pub fn level_index(&self, manifold: usize, k: usize) -> usize {
        (0..manifold).map(|m| binomial(self.n, m)).sum::<usize>() + k
    }

    pub fn edge_levels(&self, e: Edge) -> (usize, usize) {
        (self.level_index(e.m, e.lo), self.level_index(e.m + 1, e.up))
    }

    /// Connectivity implied by the diagram.
    pub fn connectivity(&self) -> ConnectivityMatrix {
        let t = self.edges.len();
        let m = (0..t)
            .map(|a| {
                (0..t)
                    .map(|b| edge_relation(self.edges[a].1, self.edges[b].1))
                    .collect()
            })
            .collect();
        ConnectivityMatrix {
            ids: self.edges.iter().map(|e| e.0).collect(),
            m,
        }
    }

    /// Diagram of the true eigenstate mapping for the given catalog ids.
    pub fn from_catalog(es: &EigenSystem, cat: &TransitionCatalog, ids: &[usize]) -> Result<Self> {
        let pos_in_manifold = |k: usize| -> (usize, usize) {
            let m = es.manifold(k);
            let rank = (0..k).filter(|&j| es.manifold(j) == m).count();
            (m, rank)
        };
        let mut edges = Vec::with_capacity(ids.len());
        for &id in ids {
            let t = cat
                .get(id)
                .ok_or_else(|| SpinError::UnknownTransition(format!("t{id}")))?;
            let (m, lo) = pos_in_manifold(t.lower);
            let (_, up) = pos_in_manifold(t.upper);
            edges.push((id, Edge { m, lo, up }));
        }
        Ok(LevelDiagram { n: es.n, edges })
    }

    /// Relabels levels by first appearance and picks the smaller of the
    /// diagram and its top-bottom inversion.
    pub fn canonical(&self) -> LevelDiagram {
        let a = relabel(self.n, &self.edges);
        let inv: Vec<(usize, Edge)> = self
            .edges
            .iter()
            .map(|&(id, e)| {
                (
                    id,
                    Edge {
                        m: self.n - 1 - e.m,
                        lo: e.up,
                        up: e.lo,
                    },
                )
            })
            .collect();
        let b = relabel(self.n, &inv);
        let key = |v: &[(usize, Edge)]| v.iter().map(|p| p.1).collect::<Vec<_>>();
        let edges = if key(&b) < key(&a) { b } else { a };
        LevelDiagram { n: self.n, edges }
    }

    /// `level <idx> mz <value>` and `edge <tid> <lower> <upper>` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (m, size) in self.manifold_sizes().into_iter().enumerate() {
            let mz = self.n as f64 / 2.0 - m as f64;
            for k in 0..size {
                s.push_str(&format!("level {} mz {}\n", self.level_index(m, k), g12(mz)));
            }
        }
        for &(id, e) in &self.edges {
            let (l, u) = self.edge_levels(e);
            s.push_str(&format!("edge {id} {l} {u}\n"));
        }
        s
    }
}

fn relabel(n: usize, edges: &[(usize, Edge)]) -> Vec<(usize, Edge)> {
    let mut maps: Vec<Vec<Option<usize>>> = (0..=n).map(|m| vec![None; binomial(n, m)]).collect();
    let mut next = vec![0usize; n + 1];
    let mut get = |m: usize, k: usize| -> usize {
        *maps[m][k].get_or_insert_with(|| {
            next[m] += 1;
            next[m] - 1
        })
    };
    edges
        .iter()
        .map(|&(id, e)| {
            let lo = get(e.m, e.lo);
            let up = get(e.m + 1, e.up);
            (id, Edge { m: e.m, lo, up })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub a: usize,
    pub b: usize,
    pub expected: i8,
    pub found: i8,
}

/// Recomputes the diagram's connectivity and compares it with `cm`.
pub fn verify_diagram(ld: &LevelDiagram, cm: &ConnectivityMatrix) -> (bool, Vec<Discrepancy>) {
    let mut out = Vec::new();
    let sizes = ld.manifold_sizes();
    let shape_ok = ld.edges.len() == cm.len()
        && ld.edges.iter().zip(&cm.ids).all(|(e, id)| e.0 == *id)
        && ld
            .edges
            .iter()
            .all(|(_, e)| e.m < ld.n && e.lo < sizes[e.m] && e.up < sizes[e.m + 1]);
    if !shape_ok {
        return (false, out);
    }
    let got = ld.connectivity();
    let mut distinct = true;
    for a in 0..cm.len() {
        for b in a + 1..cm.len() {
            if ld.edges[a].1 == ld.edges[b].1 {
                distinct = false;
            }
            if got.m[a][b] != cm.m[a][b] {
                out.push(Discrepancy {
                    a: cm.ids[a],
                    b: cm.ids[b],
                    expected: cm.m[a][b],
                    found: got.m[a][b],
                });
            }
        }
    }
    (distinct && out.is_empty(), out)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Canonical diagrams, sorted.
    pub diagrams: Vec<LevelDiagram>,
    pub truncated: bool,
    /// Transition ids with an all-zero connectivity row.
    pub ambiguous: Vec<usize>,
}

struct Search<'a> {
    n: usize,
    cm: &'a ConnectivityMatrix,
    sizes: Vec<usize>,
    order: Vec<usize>,
    assign: Vec<Option<Edge>>,
    used: Vec<usize>,
    found: BTreeSet<Vec<Edge>>,
    cap: usize,
    truncated: bool,
    symmetry: bool,
}

impl Search<'_> {
    fn consistent(&self, t: usize, e: Edge) -> bool {
        for (u, slot) in self.assign.iter().enumerate() {
            if let Some(f) = slot {
                if *f == e || edge_relation(e, *f) != self.cm.m[t][u] {
                    return false;
                }
            }
        }
        true
    }

    fn candidates(&self, m: usize, side: usize) -> usize {
        if self.symmetry {
            (self.used[m + side] + 1).min(self.sizes[m + side])
        } else {
            self.sizes[m + side]
        }
    }

    fn run(&mut self, depth: usize) {
        if self.truncated {
            return;
        }
        if depth == self.order.len() {
            let edges: Vec<(usize, Edge)> = (0..self.cm.len())
                .map(|t| (self.cm.ids[t], self.assign[t].expect("complete")))
                .collect();
            let canon = LevelDiagram { n: self.n, edges }.canonical();
            self.found.insert(canon.edges.iter().map(|p| p.1).collect());
            if self.found.len() > self.cap {
                self.truncated = true;
            }
            return;
        }
        let t = self.order[depth];
        for m in 0..self.n {
            for lo in 0..self.candidates(m, 0) {
                for up in 0..self.candidates(m, 1) {
                    let e = Edge { m, lo, up };
                    if !self.consistent(t, e) {
                        continue;
                    }
                    let saved = (self.used[m], self.used[m + 1]);
                    self.used[m] = self.used[m].max(lo + 1);
                    self.used[m + 1] = self.used[m + 1].max(up + 1);
                    self.assign[t] = Some(e);
                    self.run(depth + 1);
                    self.assign[t] = None;
                    self.used[m] = saved.0;
                    self.used[m + 1] = saved.1;
                    if self.truncated {
                        return;
                    }
                }
            }
        }
    }
}

/// Breadth-first order over the connectivity graph; isolated rows last.
fn bfs_order(cm: &ConnectivityMatrix) -> Vec<usize> {
    let t = cm.len();
    let isolated = cm.isolated();
    let mut seen = vec![false; t];
    let mut order = Vec::with_capacity(t);
    for start in 0..t {
        if seen[start] || isolated.contains(&start) {
            continue;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(a) = q.pop_front() {
            order.push(a);
            for b in 0..t {
                if !seen[b] && cm.m[a][b] != 0 {
                    seen[b] = true;
                    q.push_back(b);
                }
            }
        }
    }
    order.extend(isolated);
    order
}

fn search(cm: &ConnectivityMatrix, n: usize, cap: usize, symmetry: bool) -> (BTreeSet<Vec<Edge>>, bool) {
    let mut s = Search {
        n,
        cm,
        sizes: (0..=n).map(|m| binomial(n, m)).collect(),
        order: if symmetry {
            bfs_order(cm)
        } else {
            (0..cm.len()).collect()
        },
        assign: vec![None; cm.len()],
        used: vec![0; n + 1],
        found: BTreeSet::new(),
        cap,
        truncated: false,
        symmetry,
    };
    s.run(0);
    (s.found, s.truncated)
}

fn to_diagrams(cm: &ConnectivityMatrix, n: usize, set: BTreeSet<Vec<Edge>>, cap: usize) -> Vec<LevelDiagram> {
    set.into_iter()
        .take(cap)
        .map(|edges| LevelDiagram {
            n,
            edges: cm.ids.iter().copied().zip(edges).collect(),
        })
        .collect()
}

/// Every level diagram consistent with `cm`, modulo level relabelling
/// within manifolds and global inversion. At most `cap` diagrams are
/// returned; `truncated` reports whether more exist.
pub fn reconstruct_levels(cm: &ConnectivityMatrix, n: usize, cap: usize) -> Result<Reconstruction> {
    cm.validate()?;
    let max = sq_transition_count(n)?;
    if cm.len() > max {
        return Err(SpinError::Precondition(format!(
            "at most {max} transitions for n = {n}, got {}",
            cm.len()
        )));
    }
    let (set, truncated) = search(cm, n, cap, true);
    if set.is_empty() {
        return Err(SpinError::Unsatisfiable(first_conflict(cm, n)));
    }
    Ok(Reconstruction {
        diagrams: to_diagrams(cm, n, set, cap),
        truncated,
        ambiguous: cm.isolated().into_iter().map(|a| cm.ids[a]).collect(),
    })
}

fn sub_matrix(cm: &ConnectivityMatrix, idx: &[usize]) -> ConnectivityMatrix {
    ConnectivityMatrix {
        ids: idx.iter().map(|&a| cm.ids[a]).collect(),
        m: idx.iter().map(|&a| idx.iter().map(|&b| cm.m[a][b]).collect()).collect(),
    }
}

fn first_conflict(cm: &ConnectivityMatrix, n: usize) -> String {
    let t = cm.len();
    for a in 0..t {
        for b in a + 1..t {
            if search(&sub_matrix(cm, &[a, b]), n, 1, true).0.is_empty() {
                return format!("transitions {} and {} conflict", cm.ids[a], cm.ids[b]);
            }
        }
    }
    for a in 0..t {
        for b in a + 1..t {
            for c in b + 1..t {
                if search(&sub_matrix(cm, &[a, b, c]), n, 1, true).0.is_empty() {
                    return format!(
                        "transitions {}, {} and {} admit no common diagram",
                        cm.ids[a], cm.ids[b], cm.ids[c]
                    );
                }
            }
        }
    }
    "no consistent diagram (no conflicting triple; the inconsistency is global)".into()
}

/// Exhaustive reference enumeration: every concrete edge assignment with
/// pairwise pruning only, canonicalised afterwards. Exponential; meant for
/// cross-checking the solver on small instances.
pub fn reconstruct_exhaustive(cm: &ConnectivityMatrix, n: usize) -> Vec<LevelDiagram> {
    let (set, _) = search(cm, n, usize::MAX, false);
    to_diagrams(cm, n, set, usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> ConnectivityMatrix {
        // a: 00-01, b: 00-10, c: 01-11, d: 10-11
        let m = vec![
            vec![0, -1, 1, 0],
            vec![-1, 0, 0, 1],
            vec![1, 0, 0, -1],
            vec![0, 1, -1, 0],
        ];
        ConnectivityMatrix::new(vec![1, 2, 3, 4], m).unwrap()
    }

    #[test]
    fn diamond_is_unique() {
        let r = reconstruct_levels(&diamond(), 2, DEFAULT_SOLUTION_CAP).unwrap();
        assert_eq!(r.diagrams.len(), 1);
        assert!(!r.truncated);
        let (ok, bad) = verify_diagram(&r.diagrams[0], &diamond());
        assert!(ok, "{bad:?}");
    }

    #[test]
    fn single_spin() {
        let cm = ConnectivityMatrix::parse("0\n").unwrap();
        let r = reconstruct_levels(&cm, 1, 64).unwrap();
        assert_eq!(r.diagrams.len(), 1);
        assert_eq!(r.ambiguous, vec![1]);
        assert_eq!(r.diagrams[0].to_text(), "level 0 mz 0.5\nlevel 1 mz -0.5\nedge 1 0 1\n");
    }

    #[test]
    fn corrupted_edge_is_reported() {
        let r = reconstruct_levels(&diamond(), 2, 64).unwrap();
        let mut ld = r.diagrams[0].clone();
        ld.edges[3].1 = ld.edges[2].1;
        let (ok, bad) = verify_diagram(&ld, &diamond());
        assert!(!ok);
        assert!(bad.iter().any(|d| d.a == 3 && d.b == 4));
    }

    #[test]
    fn unsatisfiable_reports_conflict() {
        // three mutually progressive transitions cannot exist
        let cm = ConnectivityMatrix::parse("0 1 1\n1 0 1\n1 1 0\n").unwrap();
        let e = reconstruct_levels(&cm, 3, 64).unwrap_err();
        assert!(
            matches!(e, SpinError::Unsatisfiable(ref s) if s.contains("1, 2 and 3")),
            "{e}"
        );
        let too_many = ConnectivityMatrix::new((1..=5).collect(), vec![vec![0; 5]; 5]).unwrap();
        assert!(reconstruct_levels(&too_many, 2, 64).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(ConnectivityMatrix::parse("0 2\n2 0\n").is_err());
        assert!(ConnectivityMatrix::parse("0 1\n0 0\n").is_err());
        assert!(ConnectivityMatrix::parse("").is_err());
        match ConnectivityMatrix::parse("0 x\n") {
            Err(SpinError::Parse { line, col, .. }) => assert_eq!((line, col), (1, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_agrees_on_diamond() {
        let fast = reconstruct_levels(&diamond(), 2, 64).unwrap().diagrams;
        assert_eq!(fast, reconstruct_exhaustive(&diamond(), 2));
    }
}
