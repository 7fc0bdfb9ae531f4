//! Bipartite graphs, band graphs, and exact oracles for counting perfect matchings.
//!
//! Vertices are 1-based at the public surface (`1..=n` on both sides, permutations
//! written in one-line notation with values in `1..=n`) and 0-based internally.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest order accepted by [`permanent_ryser`].
pub const RYSER_LIMIT: usize = 30;
/// Largest order accepted by [`enumerate_matchings`].
pub const ENUMERATION_LIMIT: usize = 10;

/// Band parameters of a type-(s, t) graph: edge `(i, j')` iff `-s <= j - i <= t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandSpec {
    pub s: usize,
    pub t: usize,
    pub n: usize,
}

impl BandSpec {
    pub fn new(s: usize, t: usize, n: usize) -> Result<Self> {
        if s == 0 || t == 0 || n == 0 {
            return Err(Error::InvalidSpec(format!(
                "s, t, n must all be positive (got s={s}, t={t}, n={n})"
            )));
        }
        Ok(BandSpec { s, t, n })
    }

    /// Same band, different length.
    pub fn with_n(self, n: usize) -> Result<Self> {
        BandSpec::new(self.s, self.t, n)
    }

    /// Whether `(i, j')` (both 1-based) is an edge of the band graph.
    pub fn allows(&self, i: usize, j: usize) -> bool {
        let d = j as i64 - i as i64;
        (1..=self.n).contains(&i)
            && (1..=self.n).contains(&j)
            && d >= -(self.s as i64)
            && d <= self.t as i64
    }
}

impl fmt::Display for BandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(s={}, t={}, n={})", self.s, self.t, self.n)
    }
}

/// Bipartite graph `([n_left], [n_right]', E)` stored as dense bitset rows.
#[derive(Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_left: usize,
    n_right: usize,
    words: usize,
    rows: Vec<u64>,
}

impl fmt::Debug for BipartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BipartiteGraph {}x{}", self.n_left, self.n_right)?;
        for i in 0..self.n_left {
            let row: String = (0..self.n_right)
                .map(|j| if self.edge0(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

impl BipartiteGraph {
    /// Graph with no edges.
    pub fn empty(n_left: usize, n_right: usize) -> Self {
        let words = n_right.div_ceil(64).max(1);
        BipartiteGraph { n_left, n_right, words, rows: vec![0; n_left * words] }
    }

    /// Build from a 0/1 matrix given row by row.
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let n_left = rows.len();
        let n_right = rows.first().map_or(0, |r| r.as_ref().len());
        let mut g = BipartiteGraph::empty(n_left, n_right);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_right {
                return Err(Error::InvalidArgument(format!(
                    "row {} has length {}, expected {}",
                    i + 1,
                    row.len(),
                    n_right
                )));
            }
            for (j, &b) in row.iter().enumerate() {
                if b {
                    g.set0(i, j);
                }
            }
        }
        Ok(g)
    }

    /// Build from strings of `0`/`1` characters, one per left vertex.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let parsed: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.chars().map(|c| c == '1').collect())
            .collect();
        BipartiteGraph::from_rows(&parsed)
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn is_square(&self) -> bool {
        self.n_left == self.n_right
    }

    /// Side length of a square graph.
    pub fn order(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.n_left)
        } else {
            Err(Error::NotSquare { left: self.n_left, right: self.n_right })
        }
    }

    /// Adds edge `(i, j')`, 1-based. Duplicate insertions are idempotent.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == 0 || i > self.n_left || j == 0 || j > self.n_right {
            return Err(Error::InvalidArgument(format!("edge ({i}, {j}') out of range")));
        }
        self.set0(i - 1, j - 1);
        Ok(())
    }

    /// Whether `(i, j')` is an edge, 1-based.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i <= self.n_left && j <= self.n_right && self.edge0(i - 1, j - 1)
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Right neighbours of left vertex `i` (1-based in and out), ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n_right).filter(|&j| self.edge0(i - 1, j)).map(|j| j + 1).collect()
    }

    pub(crate) fn edge0(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn set0(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / 64] |= 1u64 << (j % 64);
    }

    fn row_word0(&self, i: usize) -> u64 {
        self.rows[i * self.words]
    }

    /// Whether `perm` (one-line notation, values in `1..=n`) is a perfect matching.
    pub fn admits(&self, perm: &[usize]) -> bool {
        perm.len() == self.n_left
            && self.is_square()
            && is_permutation(perm)
            && perm.iter().enumerate().all(|(i, &p)| self.edge0(i, p - 1))
    }

    /// Parse the text format: a header line `n n`, then `n` lines of `n`
    /// characters from `{0, 1}`. Errors carry 1-based line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, column: 1, message: "empty input".into() })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("expected header `n n`, found {:?}", header),
            });
        }
        let mut sizes = [0usize; 2];
        for (k, d) in dims.iter().enumerate() {
            sizes[k] = d.parse().map_err(|_| Error::Parse {
                line: 1,
                column: header.find(d).unwrap_or(0) + 1,
                message: format!("invalid size {:?}", d),
            })?;
        }
        if sizes[0] != sizes[1] {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("graph must be square, header says {} x {}", sizes[0], sizes[1]),
            });
        }
        let n = sizes[0];
        if n == 0 {
            return Err(Error::Parse { line: 1, column: 1, message: "n must be positive".into() });
        }
        let mut rows: Vec<Vec<bool>> = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if rows.len() == n {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("unexpected extra row (expected {n} rows)"),
                });
            }
            let mut row = Vec::with_capacity(n);
            for (c_idx, c) in line.chars().enumerate() {
                match c {
                    '0' => row.push(false),
                    '1' => row.push(true),
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            column: c_idx + 1,
                            message: format!("invalid character {:?}, expected 0 or 1", other),
                        })
                    }
                }
            }
            if row.len() != n {
                return Err(Error::Parse {
                    line: line_no,
                    column: row.len().min(n) + 1,
                    message: format!("row has {} entries, expected {n}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: rows.len() + 2,
                column: 1,
                message: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        BipartiteGraph::from_rows(&rows)
    }

    /// Serialize in the text format accepted by [`BipartiteGraph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_left, self.n_right);
        for i in 0..self.n_left {
            for j in 0..self.n_right {
                out.push(if self.edge0(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn is_permutation(perm: &[usize]) -> bool {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p == 0 || p > n || seen[p - 1] {
            return false;
        }
        seen[p - 1] = true;
    }
    true
}

/// The type-(s, t) graph on `n + n'` vertices.
pub fn band_graph(spec: BandSpec) -> BipartiteGraph {
    let n = spec.n;
    let mut g = BipartiteGraph::empty(n, n);
    for i in 1..=n {
        let lo = i.saturating_sub(spec.s).max(1);
        let hi = (i + spec.t).min(n);
        for j in lo..=hi {
            g.set0(i - 1, j - 1);
        }
    }
    g
}

/// Permanent of the 0/1 adjacency matrix by Ryser's formula with Gray-code
/// subset order; `O(2^n n)` word operations.
pub fn permanent_ryser(g: &BipartiteGraph) -> Result<BigUint> {
    let n = g.order()?;
    if n > RYSER_LIMIT {
        return Err(Error::SizeLimit { what: "permanent_ryser", limit: RYSER_LIMIT, n });
    }
    if n == 0 {
        return Ok(BigUint::from(1u32));
    }
    let rows: Vec<u64> = (0..n).map(|i| g.row_word0(i)).collect();
    // The permanent is at most 30! < 2^108, so the alternating sum is exact when
    // evaluated in wrapping i128 arithmetic (a ring homomorphism mod 2^128).
    let mut total: i128 = 0;
    let mut mask: u64 = 0;
    for k in 1u64..(1u64 << n) {
        mask ^= 1u64 << k.trailing_zeros();
        let mut prod: i128 = 1;
        for &r in &rows {
            let c = (r & mask).count_ones();
            if c == 0 {
                prod = 0;
                break;
            }
            prod = prod.wrapping_mul(c as i128);
        }
        if prod != 0 {
            if mask.count_ones() % 2 == 1 {
                total = total.wrapping_sub(prod);
            } else {
                total = total.wrapping_add(prod);
            }
        }
    }
    if n % 2 == 1 {
        total = total.wrapping_neg();
    }
    debug_assert!(total >= 0);
    Ok(BigUint::from(total as u128))
}

/// All perfect matchings as permutations in one-line notation, lexicographically sorted.
pub fn enumerate_matchings(g: &BipartiteGraph) -> Result<Vec<Vec<usize>>> {
    let n = g.order()?;
    if n > ENUMERATION_LIMIT {
        return Err(Error::SizeLimit { what: "enumerate_matchings", limit: ENUMERATION_LIMIT, n });
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    enumerate_rec(g, n, &mut current, &mut used, &mut out);
    Ok(out)
}

fn enumerate_rec(
    g: &BipartiteGraph,
    n: usize,
    current: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    let i = current.len();
    if i == n {
        out.push(current.clone());
        return;
    }
    for j in 0..n {
        if !used[j] && g.edge0(i, j) {
            used[j] = true;
            current.push(j + 1);
            enumerate_rec(g, n, current, used, out);
            current.pop();
            used[j] = false;
        }
    }
}

/// Whether `g` has a perfect matching, via Hopcroft–Karp.
pub fn has_perfect_matching(g: &BipartiteGraph) -> bool {
    if !g.is_square() {
        return false;
    }
    let n = g.n_left;
    maximum_matching_size(g, &vec![false; n], &vec![false; n]) == n
}

/// Size of a maximum matching of the subgraph with the flagged vertices removed.
pub(crate) fn maximum_matching_size(
    g: &BipartiteGraph,
    removed_left: &[bool],
    removed_right: &[bool],
) -> usize {
    HopcroftKarp::new(g, removed_left, removed_right).run()
}

const NIL: usize = usize::MAX;

struct HopcroftKarp<'a> {
    g: &'a BipartiteGraph,
    removed_left: &'a [bool],
    removed_right: &'a [bool],
    match_left: Vec<usize>,
    match_right: Vec<usize>,
    dist: Vec<usize>,
}

impl<'a> HopcroftKarp<'a> {
    fn new(g: &'a BipartiteGraph, removed_left: &'a [bool], removed_right: &'a [bool]) -> Self {
        HopcroftKarp {
            g,
            removed_left,
            removed_right,
            match_left: vec![NIL; g.n_left],
            match_right: vec![NIL; g.n_right],
            dist: vec![0; g.n_left],
        }
    }

    fn adj(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.g.n_right).filter(move |&v| !self.removed_right[v] && self.g.edge0(u, v))
    }

    fn bfs(&mut self) -> bool {
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..self.g.n_left {
            if self.removed_left[u] {
                self.dist[u] = usize::MAX;
            } else if self.match_left[u] == NIL {
                self.dist[u] = 0;
                queue.push_back(u);
            } else {
                self.dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            let neighbours: Vec<usize> = self.adj(u).collect();
            for v in neighbours {
                let w = self.match_right[v];
                if w == NIL {
                    found = true;
                } else if self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        found
    }

    fn dfs(&mut self, u: usize) -> bool {
        let neighbours: Vec<usize> = self.adj(u).collect();
        for v in neighbours {
            let w = self.match_right[v];
            if w == NIL || (self.dist[w] == self.dist[u] + 1 && self.dfs(w)) {
                self.match_left[u] = v;
                self.match_right[v] = u;
                return true;
            }
        }
        self.dist[u] = usize::MAX;
        false
    }

    fn run(mut self) -> usize {
        let mut size = 0;
        while self.bfs() {
            for u in 0..self.g.n_left {
                if !self.removed_left[u] && self.match_left[u] == NIL && self.dfs(u) {
                    size += 1;
                }
            }
        }
        size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> BipartiteGraph {
        BipartiteGraph::from_strs(&["110", "011", "111"]).unwrap()
    }

    #[test]
    fn band_graph_edge_counts() {
        assert_eq!(band_graph(BandSpec::new(1, 1, 3).unwrap()).edge_count(), 7);
        assert_eq!(band_graph(BandSpec::new(2, 2, 5).unwrap()).edge_count(), 19);
        assert_eq!(band_graph(BandSpec::new(5, 5, 3).unwrap()).edge_count(), 9);
    }

    #[test]
    fn band_graph_2_2_5_matches_drawn_edges() {
        // Edges as drawn in the (2,2), n = 5 figure: left i adjacent to j' iff |i-j| <= 2.
        let g = band_graph(BandSpec::new(2, 2, 5).unwrap());
        let drawn = [
            (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3),
            (3, 4), (3, 5), (4, 2), (4, 3), (4, 4), (4, 5), (5, 3), (5, 4), (5, 5),
        ];
        for &(i, j) in &drawn {
            assert!(g.has_edge(i, j), "missing ({i},{j}')");
        }
        assert_eq!(g.edge_count(), drawn.len());
    }

    #[test]
    fn ryser_small_cases() {
        assert_eq!(permanent_ryser(&fig1()).unwrap(), BigUint::from(3u32));
        let mut id = BipartiteGraph::empty(4, 4);
        for i in 1..=4 {
            id.add_edge(i, i).unwrap();
        }
        assert_eq!(permanent_ryser(&id).unwrap(), BigUint::from(1u32));
        let ones = BipartiteGraph::from_strs(&["1111"; 4]).unwrap();
        assert_eq!(permanent_ryser(&ones).unwrap(), BigUint::from(24u32));
    }

    #[test]
    fn ryser_rejects_large_and_non_square() {
        let g = BipartiteGraph::empty(31, 31);
        assert!(matches!(permanent_ryser(&g), Err(Error::SizeLimit { .. })));
        let g = BipartiteGraph::empty(2, 3);
        assert!(matches!(permanent_ryser(&g), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn ryser_all_ones_twelve() {
        let g = BipartiteGraph::from_strs(&["111111111111"; 12]).unwrap();
        assert_eq!(permanent_ryser(&g).unwrap(), BigUint::from(479_001_600u64));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            enumerate_matchings(&fig1()).unwrap(),
            vec![vec![1, 2, 3], vec![1, 3, 2], vec![2, 3, 1]]
        );
        let g = band_graph(BandSpec::new(1, 1, 2).unwrap());
        assert_eq!(enumerate_matchings(&g).unwrap(), vec![vec![1, 2], vec![2, 1]]);
        let empty = BipartiteGraph::empty(2, 2);
        assert!(enumerate_matchings(&empty).unwrap().is_empty());
        assert!(enumerate_matchings(&BipartiteGraph::empty(11, 11)).is_err());
    }

    #[test]
    fn perfect_matching_examples() {
        assert!(has_perfect_matching(&fig1()));
        let g = BipartiteGraph::from_strs(&["000", "011", "111"]).unwrap();
        assert!(!has_perfect_matching(&g));
        assert!(has_perfect_matching(&band_graph(BandSpec::new(2, 1, 6).unwrap())));
        // Hall violation without an isolated vertex.
        let g = BipartiteGraph::from_strs(&["100", "100", "111"]).unwrap();
        assert!(!has_perfect_matching(&g));
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let g = fig1();
        assert_eq!(BipartiteGraph::parse(&g.to_text()).unwrap(), g);
        let err = BipartiteGraph::parse("3 3\n110\n0x1\n111\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse { line: 3, column: 2, message: "invalid character 'x', expected 0 or 1".into() }
        );
        let err = BipartiteGraph::parse("3 3\n110\n01\n111\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = BipartiteGraph::parse("2 3\n110\n011\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = BipartiteGraph::parse("2 2\n11\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn spec_validation() {
        assert!(BandSpec::new(0, 1, 1).is_err());
        assert!(BandSpec::new(1, 0, 1).is_err());
        assert!(BandSpec::new(1, 1, 0).is_err());
        let spec = BandSpec::new(2, 1, 5).unwrap();
        assert!(spec.allows(3, 1));
        assert!(!spec.allows(4, 1));
        assert!(spec.allows(3, 4));
        assert!(!spec.allows(3, 5));
    }
}
