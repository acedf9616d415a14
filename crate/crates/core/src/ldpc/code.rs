//! Parity-check graph construction and the GF(2) encoder.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::degree::DegreeDistribution;
use crate::error::{Error, Result};

/// A built LDPC code: sparse parity-check adjacency in CSR-by-check form plus
/// a systematic encoder obtained by GF(2) elimination.
#[derive(Clone, Debug)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    chk_ptr: Vec<usize>,
    chk_var: Vec<u32>,
    var_ptr: Vec<usize>,
    var_edge: Vec<u32>,
    rank: usize,
    words_per_row: usize,
    rref: Vec<u64>,
    pivot_cols: Vec<u32>,
    free_cols: Vec<u32>,
    four_cycles: usize,
}

impl LdpcCode {
    /// Socket-permutation construction with double-edge removal and greedy
    /// best-effort 4-cycle reduction.
    pub fn build(dist: &DegreeDistribution, n_bits: usize, rng: &mut impl Rng) -> Result<Self> {
        if n_bits < 4 {
            return Err(Error::InvalidArgument("n_bits must be at least 4".into()));
        }
        // variable-node counts by largest remainder; node fraction of degree
        // i is proportional to lambda_i / i
        let vnorm: f64 = dist.var_edges().iter().map(|&(d, f)| f / d as f64).sum();
        let var_degrees = apportion(
            n_bits,
            &dist.var_edges().iter().map(|&(d, f)| (d, f / d as f64 / vnorm)).collect::<Vec<_>>(),
        );
        let edges: usize = var_degrees.iter().sum();
        // check-node counts targeting the same edge total
        let cnorm: f64 = dist.chk_edges().iter().map(|&(d, f)| f / d as f64).sum();
        let m_target = (edges as f64 * cnorm).round().max(1.0) as usize;
        let mut chk_degrees = apportion(
            m_target,
            &dist.chk_edges().iter().map(|&(d, f)| (d, f / d as f64 / cnorm)).collect::<Vec<_>>(),
        );
        // rounding repair: pad or trim sockets one at a time on the
        // highest-degree checks
        let mut chk_edge_total: usize = chk_degrees.iter().sum();
        let mut idx = 0usize;
        let n_classes = chk_degrees.len();
        while chk_edge_total < edges {
            chk_degrees[idx % n_classes] += 1;
            chk_edge_total += 1;
            idx += 1;
        }
        while chk_edge_total > edges {
            let pos = chk_degrees.iter().position(|&d| d > 2).unwrap_or(0);
            chk_degrees[pos] -= 1;
            chk_edge_total -= 1;
        }
        let m = chk_degrees.len();

        // socket lists
        let mut var_sockets = Vec::with_capacity(edges);
        for (v, &d) in var_degrees.iter().enumerate() {
            var_sockets.extend(std::iter::repeat(v as u32).take(d));
        }
        let mut chk_sockets = Vec::with_capacity(edges);
        for (c, &d) in chk_degrees.iter().enumerate() {
            chk_sockets.extend(std::iter::repeat(c as u32).take(d));
        }
        chk_sockets.shuffle(rng);

        // repair duplicate (variable, check) pairs: reshuffle the check
        // socket of every second occurrence until the pairing is simple
        let key = |v: u32, c: u32| (v as u64) << 32 | c as u64;
        let mut pass = 0;
        loop {
            let mut seen: HashSet<u64> = HashSet::with_capacity(edges * 2);
            let dups: Vec<usize> = (0..edges)
                .filter(|&e| !seen.insert(key(var_sockets[e], chk_sockets[e])))
                .collect();
            if dups.is_empty() {
                break;
            }
            pass += 1;
            if pass > 200 {
                return Err(Error::Numerical("unsatisfiable degree rounding: duplicate edges persist".into()));
            }
            for e in dups {
                let other = rng.gen_range(0..edges);
                chk_sockets.swap(e, other);
            }
        }

        let mut code = Self::from_edge_list(n_bits, m, &var_sockets, &chk_sockets)?;
        code.reduce_four_cycles(rng);
        code.build_encoder();
        Ok(code)
    }

    /// Length-n repetition code: checks x_0 + x_i = 0. Tree graph, so
    /// sum-product is exact; used by the code-rate integral oracle.
    pub fn repetition(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("repetition length must be >= 1".into()));
        }
        let m = n - 1;
        let mut vs = Vec::new();
        let mut cs = Vec::new();
        for c in 0..m {
            vs.push(0u32);
            cs.push(c as u32);
            vs.push((c + 1) as u32);
            cs.push(c as u32);
        }
        let mut code = Self::from_edge_list(n, m, &vs, &cs)?;
        code.build_encoder();
        Ok(code)
    }

    fn from_edge_list(n: usize, m: usize, vars: &[u32], chks: &[u32]) -> Result<Self> {
        let edges = vars.len();
        if chks.len() != edges {
            return Err(Error::DimensionMismatch("edge list sides differ".into()));
        }
        let mut order: Vec<u32> = (0..edges as u32).collect();
        order.sort_by_key(|&e| chks[e as usize]);
        let mut chk_ptr = vec![0usize; m + 1];
        let mut chk_var = vec![0u32; edges];
        for (slot, &e) in order.iter().enumerate() {
            chk_var[slot] = vars[e as usize];
            chk_ptr[chks[e as usize] as usize + 1] += 1;
        }
        for c in 0..m {
            chk_ptr[c + 1] += chk_ptr[c];
        }
        let mut var_ptr = vec![0usize; n + 1];
        for &v in &chk_var {
            var_ptr[v as usize + 1] += 1;
        }
        for v in 0..n {
            var_ptr[v + 1] += var_ptr[v];
        }
        let mut cursor = var_ptr.clone();
        let mut var_edge = vec![0u32; edges];
        for (slot, &v) in chk_var.iter().enumerate() {
            var_edge[cursor[v as usize]] = slot as u32;
            cursor[v as usize] += 1;
        }
        Ok(Self {
            n,
            m,
            chk_ptr,
            chk_var,
            var_ptr,
            var_edge,
            rank: 0,
            words_per_row: 0,
            rref: Vec::new(),
            pivot_cols: Vec::new(),
            free_cols: Vec::new(),
            four_cycles: 0,
        })
    }

    // Greedy pass: a 4-cycle is two variables sharing two checks. Offending
    // edges get their check sockets swapped with random peers; best effort,
    // leftover count is recorded.
    fn reduce_four_cycles(&mut self, rng: &mut impl Rng) {
        for _round in 0..3 {
            let conflicts = self.four_cycle_edges();
            if conflicts.is_empty() {
                break;
            }
            let edges = self.chk_var.len();
            // rebuild a flat edge list, swap, and re-index
            let mut vars = vec![0u32; edges];
            let mut chks = vec![0u32; edges];
            for c in 0..self.m {
                for e in self.chk_ptr[c]..self.chk_ptr[c + 1] {
                    vars[e] = self.chk_var[e];
                    chks[e] = c as u32;
                }
            }
            let mut pair_set: HashSet<u64> = (0..edges)
                .map(|e| (vars[e] as u64) << 32 | chks[e] as u64)
                .collect();
            for &e in &conflicts {
                let e = e as usize;
                for _ in 0..32 {
                    let other = rng.gen_range(0..edges);
                    let (v1, c1, v2, c2) = (vars[e], chks[e], vars[other], chks[other]);
                    if v1 == v2 || c1 == c2 {
                        continue;
                    }
                    let k1 = (v1 as u64) << 32 | c2 as u64;
                    let k2 = (v2 as u64) << 32 | c1 as u64;
                    if pair_set.contains(&k1) || pair_set.contains(&k2) {
                        continue;
                    }
                    pair_set.remove(&((v1 as u64) << 32 | c1 as u64));
                    pair_set.remove(&((v2 as u64) << 32 | c2 as u64));
                    pair_set.insert(k1);
                    pair_set.insert(k2);
                    chks.swap(e, other);
                    break;
                }
            }
            *self = Self::from_edge_list(self.n, self.m, &vars, &chks).expect("edge list is consistent");
        }
        self.four_cycles = self.four_cycle_edges().len();
    }

    fn four_cycle_edges(&self) -> Vec<u32> {
        let mut seen: HashSet<u64> = HashSet::new();
        let mut offenders = Vec::new();
        for v in 0..self.n {
            let lo = self.var_ptr[v];
            let hi = self.var_ptr[v + 1];
            for a in lo..hi {
                for b in (a + 1)..hi {
                    let ea = self.var_edge[a];
                    let eb = self.var_edge[b];
                    let ca = self.check_of_edge(ea as usize) as u64;
                    let cb = self.check_of_edge(eb as usize) as u64;
                    let key = if ca < cb { ca << 32 | cb } else { cb << 32 | ca };
                    if !seen.insert(key) {
                        offenders.push(ea);
                    }
                }
            }
        }
        offenders
    }

    fn check_of_edge(&self, e: usize) -> usize {
        // binary search over the CSR pointer
        match self.chk_ptr.binary_search(&e) {
            Ok(mut c) => {
                while c + 1 < self.chk_ptr.len() && self.chk_ptr[c + 1] == e {
                    c += 1;
                }
                c
            }
            Err(c) => c - 1,
        }
    }

    fn build_encoder(&mut self) {
        let words = self.n.div_ceil(64);
        let mut rows = vec![0u64; self.m * words];
        for c in 0..self.m {
            for e in self.chk_ptr[c]..self.chk_ptr[c + 1] {
                let v = self.chk_var[e] as usize;
                rows[c * words + v / 64] ^= 1u64 << (v % 64);
            }
        }
        // reduced row echelon form over GF(2)
        let mut pivot_cols = Vec::new();
        let mut r = 0usize;
        for col in 0..self.n {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let mut pivot = None;
            for row in r..self.m {
                if rows[row * words + w] & bit != 0 {
                    pivot = Some(row);
                    break;
                }
            }
            let Some(p) = pivot else { continue };
            if p != r {
                for k in 0..words {
                    rows.swap(r * words + k, p * words + k);
                }
            }
            for row in 0..self.m {
                if row != r && rows[row * words + w] & bit != 0 {
                    for k in 0..words {
                        let src = rows[r * words + k];
                        rows[row * words + k] ^= src;
                    }
                }
            }
            pivot_cols.push(col as u32);
            r += 1;
            if r == self.m {
                break;
            }
        }
        self.rank = r;
        self.words_per_row = words;
        self.rref = rows;
        let pivot_set: HashSet<u32> = pivot_cols.iter().copied().collect();
        self.free_cols = (0..self.n as u32).filter(|c| !pivot_set.contains(c)).collect();
        self.pivot_cols = pivot_cols;
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn n_checks(&self) -> usize {
        self.m
    }

    pub fn k_bits(&self) -> usize {
        self.n - self.rank
    }

    /// Rank-adjusted code rate k/n.
    pub fn rate(&self) -> f64 {
        self.k_bits() as f64 / self.n as f64
    }

    pub fn edge_count(&self) -> usize {
        self.chk_var.len()
    }

    pub fn four_cycle_count(&self) -> usize {
        self.four_cycles
    }

    pub(super) fn chk_ptr(&self) -> &[usize] {
        &self.chk_ptr
    }

    pub(super) fn chk_var(&self) -> &[u32] {
        &self.chk_var
    }

    pub(super) fn var_ptr(&self) -> &[usize] {
        &self.var_ptr
    }

    pub(super) fn var_edge(&self) -> &[u32] {
        &self.var_edge
    }

    /// Edge-count histograms (degree -> node count) for both sides.
    pub fn degree_histograms(&self) -> (BTreeMap<usize, usize>, BTreeMap<usize, usize>) {
        let mut var_hist = BTreeMap::new();
        for v in 0..self.n {
            *var_hist.entry(self.var_ptr[v + 1] - self.var_ptr[v]).or_insert(0) += 1;
        }
        let mut chk_hist = BTreeMap::new();
        for c in 0..self.m {
            *chk_hist.entry(self.chk_ptr[c + 1] - self.chk_ptr[c]).or_insert(0) += 1;
        }
        (var_hist, chk_hist)
    }

    /// Uniformly random codeword: free bits drawn IID, pivot bits solved
    /// through the reduced parity rows.
    pub fn random_codeword(&self, rng: &mut impl Rng) -> Vec<u8> {
        let mut bits = vec![0u8; self.n];
        for &f in &self.free_cols {
            bits[f as usize] = rng.gen_range(0..2) as u8;
        }
        for (row, &p) in self.pivot_cols.iter().enumerate() {
            let mut acc = 0u8;
            let base = row * self.words_per_row;
            for &f in &self.free_cols {
                let f = f as usize;
                if self.rref[base + f / 64] >> (f % 64) & 1 != 0 {
                    acc ^= bits[f];
                }
            }
            bits[p as usize] = acc;
        }
        bits
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        assert_eq!(bits.len(), self.n);
        (0..self.m).all(|c| {
            let mut acc = 0u8;
            for e in self.chk_ptr[c]..self.chk_ptr[c + 1] {
                acc ^= bits[self.chk_var[e] as usize] & 1;
            }
            acc == 0
        })
    }
}

// Largest-remainder apportionment of `total` nodes over (degree, fraction)
// classes; every listed class keeps at least one node.
fn apportion(total: usize, classes: &[(usize, f64)]) -> Vec<usize> {
    let mut counts: Vec<(usize, usize, f64)> = classes
        .iter()
        .map(|&(d, p)| {
            let ideal = p * total as f64;
            (d, ideal.floor() as usize, ideal - ideal.floor())
        })
        .collect();
    for c in &mut counts {
        if c.1 == 0 {
            c.1 = 1;
            c.2 = 0.0;
        }
    }
    let mut assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut by_frac: Vec<usize> = (0..counts.len()).collect();
    by_frac.sort_by(|&a, &b| counts[b].2.partial_cmp(&counts[a].2).expect("finite fractions"));
    let mut k = 0;
    let n_classes = counts.len();
    while assigned < total {
        counts[by_frac[k % n_classes]].1 += 1;
        assigned += 1;
        k += 1;
    }
    while assigned > total {
        let pos = counts.iter().position(|c| c.1 > 1).expect("some class can shrink");
        counts[pos].1 -= 1;
        assigned -= 1;
    }
    let mut degrees = Vec::with_capacity(total);
    for (d, cnt, _) in counts {
        degrees.extend(std::iter::repeat(d).take(cnt));
    }
    degrees
}
