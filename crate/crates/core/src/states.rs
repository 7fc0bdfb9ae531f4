//! The type-(s, t) state space, its transitions `T_j`, the encoding of
//! band-restricted permutations as state sequences, and the state graph `H_{s,t}`.
//!
//! A state is the strictly increasing t-tuple of offsets (relative to the current
//! left vertex `i`) of the unmatched right vertices in the window `[i - s, i + t - 1]`.
//! Offset `t` (the vertex `i + t`) is always free and is not stored. Move `j = 0`
//! matches `i` to `i + t`; move `j >= 1` matches `i` to the vertex at entry `j`.

use std::collections::HashMap;
use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{is_permutation, BandSpec};

/// Largest supported upper band `t`.
pub const MAX_T: usize = 16;
/// Upper bound on `C(s + t, t)`.
pub const MAX_STATES: usize = 1 << 20;

/// Strictly increasing tuple `-s <= n_1 < ... < n_t < t`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateTuple {
    entries: [i16; MAX_T],
    len: u8,
}

impl StateTuple {
    pub fn new(entries: &[i16]) -> Self {
        assert!(entries.len() <= MAX_T, "tuple longer than MAX_T");
        let mut e = [0i16; MAX_T];
        e[..entries.len()].copy_from_slice(entries);
        StateTuple { entries: e, len: entries.len() as u8 }
    }

    /// The start state `(0, 1, ..., t - 1)`.
    pub fn initial(t: usize) -> Self {
        let v: Vec<i16> = (0..t as i16).collect();
        StateTuple::new(&v)
    }

    pub fn entries(&self) -> &[i16] {
        &self.entries[..self.len as usize]
    }

    pub fn t(&self) -> usize {
        self.len as usize
    }

    pub fn contains(&self, v: i16) -> bool {
        self.entries().contains(&v)
    }

    /// Whether this tuple is a valid member of `X_{s,t}`.
    pub fn is_valid(&self, s: usize) -> bool {
        let e = self.entries();
        let t = e.len() as i16;
        !e.is_empty()
            && e.windows(2).all(|w| w[0] < w[1])
            && e[0] >= -(s as i16)
            && e[e.len() - 1] < t
    }

    /// Forced state: contains `-s`, so the only move is `T_1`.
    pub fn is_forced(&self, s: usize) -> bool {
        self.entries()[0] == -(s as i16)
    }
}

impl fmt::Debug for StateTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.entries().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for StateTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for StateTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.t()))?;
        for v in self.entries() {
            seq.serialize_element(v)?;
        }
        seq.end()
    }
}

/// Apply `T_j` to `x` within `X_{s,t}`.
///
/// `T_0` decrements every entry; `T_j` (`j >= 1`) drops entry `j`, decrements the
/// rest and appends `t - 1`. A state containing `-s` only admits `T_1`.
pub fn transition(x: &StateTuple, j: usize, s: usize) -> Result<StateTuple> {
    let t = x.t();
    let illegal = || Error::IllegalTransition { state: x.to_string(), j };
    if j > t || (x.is_forced(s) && j != 1) {
        return Err(illegal());
    }
    let mut out = [0i16; MAX_T];
    let e = x.entries();
    if j == 0 {
        for (o, &v) in out.iter_mut().zip(e) {
            *o = v - 1;
        }
    } else {
        let mut k = 0;
        for (idx, &v) in e.iter().enumerate() {
            if idx != j - 1 {
                out[k] = v - 1;
                k += 1;
            }
        }
        out[t - 1] = t as i16 - 1;
    }
    Ok(StateTuple { entries: out, len: t as u8 })
}

/// One chain-legal move out of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    /// Transition index `j` in `0..=t`.
    pub j: usize,
    /// Offset of the matched right vertex relative to the current left vertex.
    pub offset: i16,
    /// Index of `T_j(x)` in the state space.
    pub next: usize,
}

/// Enumerated `X_{s,t}` in lexicographic order with transition tables.
#[derive(Clone, Debug)]
pub struct StateSpace {
    s: usize,
    t: usize,
    states: Vec<StateTuple>,
    index: HashMap<StateTuple, usize>,
    initial: usize,
    forced: Vec<bool>,
    moves: Vec<Vec<Move>>,
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

impl StateSpace {
    /// Enumerate `X_{s,t}`: all t-subsets of `{-s, ..., t - 1}`.
    pub fn new(s: usize, t: usize) -> Result<Self> {
        if s == 0 || t == 0 {
            return Err(Error::InvalidSpec(format!("s and t must be positive (s={s}, t={t})")));
        }
        if t > MAX_T || s > i16::MAX as usize / 2 {
            return Err(Error::InvalidSpec(format!("band too wide (s={s}, t={t})")));
        }
        match binomial(s + t, t) {
            Some(c) if c <= MAX_STATES => {}
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "state space C({}, {}) exceeds {MAX_STATES} states",
                    s + t,
                    t
                )))
            }
        }
        let lo = -(s as i16);
        let hi = t as i16;
        let mut states = Vec::new();
        let mut current: Vec<i16> = Vec::with_capacity(t);
        combos(lo, hi, t, &mut current, &mut states);
        let index: HashMap<StateTuple, usize> =
            states.iter().enumerate().map(|(k, x)| (*x, k)).collect();
        let initial = index[&StateTuple::initial(t)];
        let forced: Vec<bool> = states.iter().map(|x| x.is_forced(s)).collect();
        let moves = states
            .iter()
            .map(|x| {
                (0..=t)
                    .filter_map(|j| {
                        let y = transition(x, j, s).ok()?;
                        let offset = if j == 0 { t as i16 } else { x.entries()[j - 1] };
                        Some(Move { j, offset, next: index[&y] })
                    })
                    .collect()
            })
            .collect();
        Ok(StateSpace { s, t, states, index, initial, forced, moves })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateTuple] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> &StateTuple {
        &self.states[idx]
    }

    pub fn index_of(&self, x: &StateTuple) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Index of `x_0 = (0, 1, ..., t - 1)`.
    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_forced(&self, idx: usize) -> bool {
        self.forced[idx]
    }

    /// Chain-legal moves out of a state, ordered by `j`.
    pub fn moves(&self, idx: usize) -> &[Move] {
        &self.moves[idx]
    }

    /// Moves that match left vertex `vertex` (1-based) to an existing right vertex
    /// of the `n`-vertex band graph.
    pub fn legal_moves(&self, idx: usize, vertex: usize, n: usize) -> impl Iterator<Item = &Move> {
        self.moves[idx].iter().filter(move |m| vertex as i64 + m.offset as i64 <= n as i64)
    }

    /// Number of moves with a target label `<= n`.
    pub fn legal_count(&self, idx: usize, vertex: usize, n: usize) -> usize {
        self.legal_moves(idx, vertex, n).count()
    }
}

fn combos(lo: i16, hi: i16, k: usize, current: &mut Vec<i16>, out: &mut Vec<StateTuple>) {
    if current.len() == k {
        out.push(StateTuple::new(current));
        return;
    }
    let start = current.last().map_or(lo, |&v| v + 1);
    let remaining = (k - current.len()) as i16;
    let mut v = start;
    while v + remaining <= hi {
        current.push(v);
        combos(lo, hi, k, current, out);
        current.pop();
        v += 1;
    }
}

/// State sequence `x_0, x_1, ..., x_n`; `x_i` is the state when left vertex `i + 1`
/// is about to be matched.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequencePath {
    pub states: Vec<StateTuple>,
}

impl SequencePath {
    /// Number of forced states among `x_0, ..., x_{n-1}`.
    pub fn theta(&self, s: usize) -> usize {
        let n = self.states.len().saturating_sub(1);
        self.states[..n].iter().filter(|x| x.is_forced(s)).count()
    }
}

/// Per-step move indices and state indices of the encoding of a permutation.
pub(crate) fn encode_indices(
    space: &StateSpace,
    perm: &[usize],
    spec: BandSpec,
) -> Result<(Vec<usize>, Vec<Move>)> {
    let n = spec.n;
    if perm.len() != n || !is_permutation(perm) {
        return Err(Error::NotAPermutation(n));
    }
    for (k, &p) in perm.iter().enumerate() {
        if !spec.allows(k + 1, p) {
            return Err(Error::BandViolation { position: k + 1, value: p });
        }
    }
    let mut x = space.initial();
    let mut path = Vec::with_capacity(n + 1);
    let mut moves = Vec::with_capacity(n);
    path.push(x);
    for (k, &p) in perm.iter().enumerate() {
        let offset = p as i64 - (k + 1) as i64;
        let mv = space
            .moves(x)
            .iter()
            .find(|m| m.offset as i64 == offset)
            .copied()
            // A band permutation never leaves a required vertex behind, so this only
            // triggers on inconsistent input.
            .ok_or(Error::BandViolation { position: k + 1, value: p })?;
        moves.push(mv);
        x = mv.next;
        path.push(x);
    }
    Ok((path, moves))
}

/// The map from a permutation in `F_{n,s,t}` to its state sequence.
pub fn encode_permutation(perm: &[usize], spec: BandSpec) -> Result<SequencePath> {
    let space = StateSpace::new(spec.s, spec.t)?;
    encode_with(&space, perm, spec)
}

pub fn encode_with(space: &StateSpace, perm: &[usize], spec: BandSpec) -> Result<SequencePath> {
    let (path, _) = encode_indices(space, perm, spec)?;
    Ok(SequencePath { states: path.into_iter().map(|k| *space.state(k)).collect() })
}

/// Inverse of [`encode_permutation`] on its image.
pub fn decode_sequence(path: &SequencePath, spec: BandSpec) -> Result<Vec<usize>> {
    let space = StateSpace::new(spec.s, spec.t)?;
    decode_with(&space, path, spec)
}

pub fn decode_with(space: &StateSpace, path: &SequencePath, spec: BandSpec) -> Result<Vec<usize>> {
    let n = spec.n;
    if path.states.len() != n + 1 {
        return Err(Error::NotInImage(format!(
            "path has {} states, expected {}",
            path.states.len(),
            n + 1
        )));
    }
    let mut idx = Vec::with_capacity(n + 1);
    for x in &path.states {
        idx.push(
            space
                .index_of(x)
                .ok_or_else(|| Error::NotInImage(format!("{x} is not a state of X_{{s,t}}")))?,
        );
    }
    if idx[0] != space.initial() {
        return Err(Error::NotInImage("path does not start at x_0".into()));
    }
    let mut perm = Vec::with_capacity(n);
    for k in 0..n {
        let vertex = k + 1;
        let mv = space
            .moves(idx[k])
            .iter()
            .find(|m| m.next == idx[k + 1])
            .ok_or_else(|| {
                Error::NotInImage(format!(
                    "no legal transition {} -> {} at step {k}",
                    path.states[k],
                    path.states[k + 1]
                ))
            })?;
        let target = vertex as i64 + mv.offset as i64;
        if target < 1 || target > n as i64 {
            return Err(Error::NotInImage(format!(
                "step {k} matches vertex {vertex} to nonexistent right vertex {target}"
            )));
        }
        perm.push(target as usize);
    }
    if !is_permutation(&perm) {
        return Err(Error::NotInImage("decoded assignment is not a permutation".into()));
    }
    Ok(perm)
}

/// Directed graph `H_{s,t}`: edge `x -> y` iff `y = T_j(x)` for a legal `j`.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub space: StateSpace,
}

impl StateGraph {
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let m = self.space.len();
        let mut a = vec![vec![0u8; m]; m];
        for (x, row) in a.iter_mut().enumerate() {
            for mv in self.space.moves(x) {
                row[mv.next] = 1;
            }
        }
        a
    }

    pub fn successors(&self, x: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.space.moves(x).iter().map(|m| m.next).collect();
        v.sort_unstable();
        v
    }

    pub fn has_self_loop(&self, x: usize) -> bool {
        self.space.moves(x).iter().any(|m| m.next == x)
    }

    pub fn is_strongly_connected(&self) -> bool {
        let m = self.space.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; m];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut rev: Vec<Vec<usize>> = vec![Vec::new(); m];
            if !forward {
                for x in 0..m {
                    for mv in self.space.moves(x) {
                        rev[mv.next].push(x);
                    }
                }
            }
            while let Some(x) = stack.pop() {
                let next: Vec<usize> = if forward {
                    self.space.moves(x).iter().map(|mv| mv.next).collect()
                } else {
                    rev[x].clone()
                };
                for y in next {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        reach(true) && reach(false)
    }
}

pub fn enumerate_states(s: usize, t: usize) -> Result<StateSpace> {
    StateSpace::new(s, t)
}

pub fn state_graph(s: usize, t: usize) -> Result<StateGraph> {
    Ok(StateGraph { space: StateSpace::new(s, t)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: &[i16]) -> StateTuple {
        StateTuple::new(v)
    }

    fn spec(s: usize, t: usize, n: usize) -> BandSpec {
        BandSpec::new(s, t, n).unwrap()
    }

    #[test]
    fn enumerates_expected_states() {
        let sp = StateSpace::new(1, 1).unwrap();
        assert_eq!(sp.states(), &[st(&[-1]), st(&[0])]);
        let sp = StateSpace::new(2, 2).unwrap();
        let mut want = [
            st(&[0, 1]),
            st(&[-1, 1]),
            st(&[-1, 0]),
            st(&[-2, 1]),
            st(&[-2, 0]),
            st(&[-2, -1]),
        ];
        want.sort();
        assert_eq!(sp.states(), &want[..]);
        assert_eq!(StateSpace::new(3, 2).unwrap().len(), 10);
        assert_eq!(*sp.state(sp.initial()), st(&[0, 1]));
    }

    #[test]
    fn state_count_is_binomial() {
        for s in 1..=6 {
            for t in 1..=6 {
                let sp = StateSpace::new(s, t).unwrap();
                assert_eq!(sp.len(), binomial(s + t, t).unwrap());
                assert!(sp.states().iter().all(|x| x.is_valid(s)));
                assert!(sp.states().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn transition_examples() {
        assert_eq!(transition(&st(&[0, 1]), 0, 2).unwrap(), st(&[-1, 0]));
        assert_eq!(transition(&st(&[0, 1]), 2, 2).unwrap(), st(&[-1, 1]));
        assert_eq!(transition(&st(&[-1, 1]), 1, 2).unwrap(), st(&[0, 1]));
        assert!(transition(&st(&[-2, 1]), 0, 2).is_err());
        assert!(transition(&st(&[-2, 1]), 2, 2).is_err());
        assert!(transition(&st(&[0, 1]), 3, 2).is_err());
    }

    #[test]
    fn t1_applied_t_times_returns_to_start() {
        for (s, t) in [(1, 1), (2, 2), (3, 2), (2, 3), (4, 4)] {
            let sp = StateSpace::new(s, t).unwrap();
            for x in sp.states() {
                let mut y = *x;
                for _ in 0..t {
                    y = transition(&y, 1, s).unwrap();
                }
                assert_eq!(y, StateTuple::initial(t), "from {x} for ({s},{t})");
            }
        }
    }

    #[test]
    fn table4_rows() {
        let sp = spec(2, 2, 5);
        let prefix = |perm: &[usize]| encode_permutation(perm, sp).unwrap().states[..5].to_vec();
        assert_eq!(prefix(&[1, 2, 3, 4, 5]), vec![st(&[0, 1]); 5]);
        assert_eq!(
            prefix(&[2, 3, 1, 5, 4]),
            vec![st(&[0, 1]), st(&[-1, 1]), st(&[-2, 1]), st(&[0, 1]), st(&[-1, 1])]
        );
        assert_eq!(
            prefix(&[2, 1, 4, 3, 5]),
            vec![st(&[0, 1]), st(&[-1, 1]), st(&[0, 1]), st(&[-1, 1]), st(&[0, 1])]
        );
        // The printed sequence for the row labelled 31245 is the encoding of 32154;
        // 31245 itself encodes as below.
        assert_eq!(
            prefix(&[3, 1, 2, 4, 5]),
            vec![st(&[0, 1]), st(&[-1, 0]), st(&[-1, 1]), st(&[0, 1]), st(&[0, 1])]
        );
        assert_eq!(
            prefix(&[3, 2, 1, 5, 4]),
            vec![st(&[0, 1]), st(&[-1, 0]), st(&[-2, 1]), st(&[0, 1]), st(&[-1, 1])]
        );
    }

    #[test]
    fn identity_encodes_to_constant_path() {
        for (s, t) in [(1, 1), (2, 3), (3, 1)] {
            let n = 7;
            let id: Vec<usize> = (1..=n).collect();
            let p = encode_permutation(&id, spec(s, t, n)).unwrap();
            assert!(p.states.iter().all(|x| *x == StateTuple::initial(t)));
            assert_eq!(decode_sequence(&p, spec(s, t, n)).unwrap(), id);
        }
    }

    #[test]
    fn encode_rejects_band_violations() {
        let err = encode_permutation(&[3, 1, 2], spec(1, 1, 3)).unwrap_err();
        assert_eq!(err, Error::BandViolation { position: 1, value: 3 });
        assert!(encode_permutation(&[1, 1, 2], spec(1, 1, 3)).is_err());
    }

    #[test]
    fn decode_rejects_paths_outside_the_image() {
        let sp = spec(1, 1, 2);
        // (0) -> (-1) -> (0): vertex 2 would match 1', fine; vertex 1 matched 2'. OK path.
        let ok = SequencePath { states: vec![st(&[0]), st(&[-1]), st(&[0])] };
        assert_eq!(decode_sequence(&ok, sp).unwrap(), vec![2, 1]);
        // (0) -> (0) -> (-1): vertex 2 matched to 3', which does not exist.
        let bad = SequencePath { states: vec![st(&[0]), st(&[0]), st(&[-1])] };
        assert!(matches!(decode_sequence(&bad, sp), Err(Error::NotInImage(_))));
        let short = SequencePath { states: vec![st(&[0])] };
        assert!(decode_sequence(&short, sp).is_err());
    }

    #[test]
    fn state_graph_properties() {
        let g = state_graph(1, 1).unwrap();
        let zero = g.space.index_of(&st(&[0])).unwrap();
        let minus = g.space.index_of(&st(&[-1])).unwrap();
        assert_eq!(g.successors(zero), {
            let mut v = vec![zero, minus];
            v.sort();
            v
        });
        assert_eq!(g.successors(minus), vec![zero]);
        for s in 1..=3 {
            for t in 1..=3 {
                let g = state_graph(s, t).unwrap();
                assert!(g.has_self_loop(g.space.initial()));
                assert!(g.is_strongly_connected(), "({s},{t})");
            }
        }
    }
}
