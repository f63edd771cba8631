//! Systematic LDPC code with log-domain sum-product decoding.
//!
//! The parity-check matrix is grown by a progressive-edge-growth style
//! construction (variable degree 3, girth-greedy check selection) from a
//! public seed, then column-permuted so that the first `k` codeword positions
//! carry the information bits. Decoding is flooding belief propagation with
//! the numerically stable pairwise check update; positive LLR means bit 0.

use crate::util::{mix_seed, rng_from_key};
use rand::seq::SliceRandom;
use thiserror::Error;

const VAR_DEGREE: usize = 3;

#[derive(Debug, Error)]
pub enum LdpcError {
    #[error("parity-check matrix is rank deficient after {0} construction attempts")]
    RankDeficient(usize),
    #[error("invalid parity-check description: {0}")]
    BadMatrix(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Dense bit matrix over GF(2), rows packed into u64 words.
#[derive(Debug, Clone)]
struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let (a, b) = (src * self.words, dst * self.words);
        for i in 0..self.words {
            self.data[b + i] ^= self.data[a + i];
        }
    }

    fn row_dot(&self, r: usize, bits: &[u8]) -> u8 {
        let mut acc = 0u8;
        for (c, &b) in bits.iter().enumerate() {
            if b == 1 && self.get(r, c) {
                acc ^= 1;
            }
        }
        acc
    }
}

/// Decoder result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutput {
    /// Hard decisions on all codeword bits.
    pub bits: Vec<u8>,
    /// Whether the hard decisions satisfy every parity check.
    pub converged: bool,
    /// Belief-propagation iterations performed.
    pub iterations: usize,
}

/// A fixed `(n, k)` LDPC code in systematic transmit order.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    k: usize,
    /// Per-check variable lists (final column order).
    check_vars: Vec<Vec<u32>>,
    /// Per-variable check lists.
    var_checks: Vec<Vec<u32>>,
    /// Parity generator: parity_j = <p_rows[j], info>.
    p_rows: BitMatrix,
    seed: u64,
}

impl LdpcCode {
    /// Construct the shared `(n, k)` code from a public seed.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self, LdpcError> {
        assert!(k < n, "code rate must be below 1");
        let m = n - k;
        const ATTEMPTS: usize = 16;
        for attempt in 0..ATTEMPTS as u64 {
            let check_vars = peg_graph(n, m, mix_seed(seed, attempt));
            if let Some(code) = Self::finish(n, k, check_vars, seed) {
                return Ok(code);
            }
        }
        Err(LdpcError::RankDeficient(ATTEMPTS))
    }

    /// Assemble the systematic encoder; `None` if the graph is rank deficient.
    fn finish(n: usize, k: usize, check_vars: Vec<Vec<u32>>, seed: u64) -> Option<Self> {
        let m = n - k;
        let mut h = BitMatrix::zeros(m, n);
        for (c, vars) in check_vars.iter().enumerate() {
            for &v in vars {
                h.set(c, v as usize, true);
            }
        }
        // Greedy pivot selection scanning columns right to left keeps as many
        // low-index columns as possible in the information set.
        let mut work = h.clone();
        let mut pivot_row_of_col = vec![usize::MAX; n];
        let mut row_used = vec![false; m];
        let mut pivots = Vec::with_capacity(m);
        for col in (0..n).rev() {
            let Some(r) = (0..m).find(|&r| !row_used[r] && work.get(r, col)) else {
                continue;
            };
            row_used[r] = true;
            pivot_row_of_col[col] = r;
            pivots.push(col);
            for rr in 0..m {
                if rr != r && work.get(rr, col) {
                    work.xor_row_into(r, rr);
                }
            }
            if pivots.len() == m {
                break;
            }
        }
        if pivots.len() != m {
            return None;
        }
        // Column permutation: non-pivot columns first (info), pivots after.
        pivots.sort_unstable();
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut order: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        order.extend(&pivots);
        debug_assert_eq!(order.len(), n);
        let mut new_col = vec![0usize; n];
        for (newc, &oldc) in order.iter().enumerate() {
            new_col[oldc] = newc;
        }
        let mut perm_check_vars: Vec<Vec<u32>> = check_vars
            .iter()
            .map(|vars| {
                let mut v: Vec<u32> = vars.iter().map(|&x| new_col[x as usize] as u32).collect();
                v.sort_unstable();
                v
            })
            .collect();
        perm_check_vars.iter_mut().for_each(|v| v.dedup());
        Self::assemble(n, k, perm_check_vars, seed)
    }

    /// Build decoder adjacency and the parity generator from a parity-check
    /// matrix already in transmit order (first `k` columns = information).
    fn assemble(n: usize, k: usize, check_vars: Vec<Vec<u32>>, seed: u64) -> Option<Self> {
        let m = n - k;
        let mut h = BitMatrix::zeros(m, n);
        for (c, vars) in check_vars.iter().enumerate() {
            for &v in vars {
                h.set(c, v as usize, true);
            }
        }
        // Invert the parity block B (columns k..n) by Gauss-Jordan on [B | A].
        let mut aug = BitMatrix::zeros(m, n);
        for r in 0..m {
            for c in 0..m {
                aug.set(r, c, h.get(r, k + c));
            }
            for c in 0..k {
                aug.set(r, m + c, h.get(r, c));
            }
        }
        for col in 0..m {
            let r = (col..m).find(|&r| aug.get(r, col))?;
            if r != col {
                aug.xor_row_into(r, col);
                aug.xor_row_into(col, r);
                aug.xor_row_into(r, col);
            }
            for rr in 0..m {
                if rr != col && aug.get(rr, col) {
                    aug.xor_row_into(col, rr);
                }
            }
        }
        let mut p_rows = BitMatrix::zeros(m, k);
        for r in 0..m {
            for c in 0..k {
                p_rows.set(r, c, aug.get(r, m + c));
            }
        }
        let mut var_checks = vec![Vec::new(); n];
        for (c, vars) in check_vars.iter().enumerate() {
            for &v in vars {
                var_checks[v as usize].push(c as u32);
            }
        }
        Some(Self {
            n,
            k,
            check_vars,
            var_checks,
            p_rows,
            seed,
        })
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn info_len(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Systematic encode: `[info | parity]` with `H c = 0`.
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.k, "info length mismatch");
        let mut cw = Vec::with_capacity(self.n);
        cw.extend_from_slice(info);
        for r in 0..(self.n - self.k) {
            cw.push(self.p_rows.row_dot(r, info));
        }
        cw
    }

    /// Parity-check syndrome test.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.check_vars
            .iter()
            .all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ bits[v as usize]) == 0)
    }

    /// Flooding sum-product decoding. Positive LLR means bit 0. Convergence
    /// is declared when the hard decisions satisfy all checks; an all-zero
    /// LLR vector carries no information and reports `converged = false`.
    pub fn decode_bp(&self, llr: &[f64], max_iter: usize) -> DecodeOutput {
        assert_eq!(llr.len(), self.n, "LLR length mismatch");
        let hard = |x: &[f64]| -> Vec<u8> { x.iter().map(|&v| u8::from(v < 0.0)).collect() };
        if llr.iter().all(|&v| v == 0.0) {
            return DecodeOutput {
                bits: hard(llr),
                converged: false,
                iterations: 0,
            };
        }
        let bits = hard(llr);
        if self.is_codeword(&bits) {
            return DecodeOutput {
                bits,
                converged: true,
                iterations: 0,
            };
        }
        // Edge storage grouped by check.
        let edge_base: Vec<usize> = self
            .check_vars
            .iter()
            .scan(0usize, |acc, vars| {
                let b = *acc;
                *acc += vars.len();
                Some(b)
            })
            .collect();
        let total_edges: usize = self.check_vars.iter().map(Vec::len).sum();
        // var -> check messages, indexed like check_vars
        let mut q = vec![0.0f64; total_edges];
        for (c, vars) in self.check_vars.iter().enumerate() {
            for (i, &v) in vars.iter().enumerate() {
                q[edge_base[c] + i] = llr[v as usize];
            }
        }
        let mut r = vec![0.0f64; total_edges];
        let mut posterior = vec![0.0f64; self.n];
        for iter in 1..=max_iter {
            // check update: extrinsic boxplus via prefix/suffix combines
            for (c, vars) in self.check_vars.iter().enumerate() {
                let d = vars.len();
                let base = edge_base[c];
                let msgs = &q[base..base + d];
                let mut prefix = vec![f64::INFINITY; d + 1];
                let mut suffix = vec![f64::INFINITY; d + 1];
                for i in 0..d {
                    prefix[i + 1] = boxplus(prefix[i], msgs[i]);
                }
                for i in (0..d).rev() {
                    suffix[i] = boxplus(suffix[i + 1], msgs[i]);
                }
                for i in 0..d {
                    r[base + i] = boxplus(prefix[i], suffix[i + 1]);
                }
            }
            // variable update and posteriors
            posterior.copy_from_slice(llr);
            for (c, vars) in self.check_vars.iter().enumerate() {
                for (i, &v) in vars.iter().enumerate() {
                    posterior[v as usize] += r[edge_base[c] + i];
                }
            }
            for (c, vars) in self.check_vars.iter().enumerate() {
                for (i, &v) in vars.iter().enumerate() {
                    q[edge_base[c] + i] = posterior[v as usize] - r[edge_base[c] + i];
                }
            }
            let bits = hard(&posterior);
            if self.is_codeword(&bits) {
                return DecodeOutput {
                    bits,
                    converged: true,
                    iterations: iter,
                };
            }
        }
        DecodeOutput {
            bits: hard(&posterior),
            converged: false,
            iterations: max_iter,
        }
    }

    /// Export the parity-check matrix as text: one line per check,
    /// `check_index: var_index var_index ...` with 0-based indices in
    /// transmit order (information bits occupy columns `0..k`).
    pub fn export_sparse(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# ldpc parity-check matrix, n={} k={} checks={} seed={}\n",
            self.n,
            self.k,
            self.n - self.k,
            self.seed
        ));
        out.push_str("# line format: <check index>: <variable indices>\n");
        for (c, vars) in self.check_vars.iter().enumerate() {
            let cols: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{}: {}\n", c, cols.join(" ")));
        }
        out
    }

    /// Import a matrix written by [`export_sparse`]. The first `k` columns
    /// must form the information set (the parity block has to be invertible).
    pub fn import_sparse(text: &str, n: usize, k: usize) -> Result<Self, LdpcError> {
        let m = n - k;
        let mut check_vars = vec![Vec::new(); m];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (idx, rest) = line
                .split_once(':')
                .ok_or_else(|| LdpcError::BadMatrix(format!("missing ':' in line {line:?}")))?;
            let c: usize = idx
                .trim()
                .parse()
                .map_err(|_| LdpcError::BadMatrix(format!("bad check index in {line:?}")))?;
            if c >= m {
                return Err(LdpcError::BadMatrix(format!("check index {c} out of range")));
            }
            for tok in rest.split_whitespace() {
                let v: usize = tok
                    .parse()
                    .map_err(|_| LdpcError::BadMatrix(format!("bad variable index {tok:?}")))?;
                if v >= n {
                    return Err(LdpcError::BadMatrix(format!("variable index {v} out of range")));
                }
                check_vars[c].push(v as u32);
            }
            check_vars[c].sort_unstable();
            check_vars[c].dedup();
        }
        Self::assemble(n, k, check_vars, 0)
            .ok_or_else(|| LdpcError::BadMatrix("parity block not invertible".into()))
    }
}

/// Stable pairwise check-node combine:
/// `boxplus(a, b) = sign(a) sign(b) min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|)`.
#[inline]
fn boxplus(a: f64, b: f64) -> f64 {
    if a.is_infinite() {
        return if a > 0.0 { b } else { -b };
    }
    if b.is_infinite() {
        return if b > 0.0 { a } else { -a };
    }
    let sign = a.signum() * b.signum();
    let core = sign * a.abs().min(b.abs());
    core + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Progressive-edge-growth bipartite graph: for each variable, each new edge
/// goes to a check as far as possible in the current graph (unreached checks
/// first, deepest layer otherwise), preferring low degree; remaining ties are
/// broken by a seeded ranking.
fn peg_graph(n: usize, m: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rank: Vec<usize> = (0..m).collect();
    rank.shuffle(&mut rng_from_key(seed));
    let mut rank_of = vec![0usize; m];
    for (pos, &c) in rank.iter().enumerate() {
        rank_of[c] = pos;
    }
    let mut check_vars: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut var_checks: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut depth = vec![usize::MAX; m];
    for v in 0..n {
        for _ in 0..VAR_DEGREE.min(m) {
            // BFS from variable v over the current graph
            depth.fill(usize::MAX);
            let mut frontier: Vec<u32> = var_checks[v].clone();
            for &c in &frontier {
                depth[c as usize] = 0;
            }
            let mut level = 0usize;
            let mut reached = frontier.len();
            while !frontier.is_empty() && reached < m {
                level += 1;
                let mut next = Vec::new();
                for &c in &frontier {
                    for &vv in &check_vars[c as usize] {
                        for &cc in &var_checks[vv as usize] {
                            if depth[cc as usize] == usize::MAX {
                                depth[cc as usize] = level;
                                next.push(cc);
                                reached += 1;
                            }
                        }
                    }
                }
                frontier = next;
            }
            let candidates: Vec<usize> = if reached < m {
                (0..m).filter(|&c| depth[c] == usize::MAX).collect()
            } else {
                let max_d = *depth.iter().max().unwrap();
                (0..m).filter(|&c| depth[c] == max_d).collect()
            };
            let best = candidates
                .into_iter()
                .min_by_key(|&c| (check_vars[c].len(), rank_of[c]))
                .expect("at least one candidate check");
            check_vars[best].push(v as u32);
            var_checks[v].push(best as u32);
        }
    }
    check_vars
}
