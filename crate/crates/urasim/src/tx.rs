//! Transmitter chain: message splitting, tree-code parities, sparse pilot
//! codewords, user-specific interleaving and BPSK data framing.

use crate::config::SystemConfig;
use crate::ldpc::LdpcCode;
use crate::util::{mix_seed, rng_from_key};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TxError {
    #[error("bit vector length {got}, expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("codeword index {0} outside [1, {1}]")]
    IndexOutOfRange(usize, usize),
}

/// The three message parts: two preamble fragments and the coded payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSplit {
    pub frag1: Vec<u8>,
    pub frag2: Vec<u8>,
    pub payload: Vec<u8>,
}

impl MessageSplit {
    /// Inverse of [`split_message`].
    pub fn concat(&self) -> Vec<u8> {
        let mut out = self.frag1.clone();
        out.extend_from_slice(&self.frag2);
        out.extend_from_slice(&self.payload);
        out
    }
}

/// Split a message into `frag_bits + frag_bits + payload_bits`.
pub fn split_message(bits: &[u8], cfg: &SystemConfig) -> Result<MessageSplit, TxError> {
    if bits.len() != cfg.msg_bits {
        return Err(TxError::LengthMismatch {
            got: bits.len(),
            want: cfg.msg_bits,
        });
    }
    let b_p = cfg.frag_bits;
    Ok(MessageSplit {
        frag1: bits[..b_p].to_vec(),
        frag2: bits[b_p..2 * b_p].to_vec(),
        payload: bits[2 * b_p..].to_vec(),
    })
}

/// Big-endian value of a fragment, plus one (codeword indices are 1-based).
pub fn segment_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize) + 1
}

/// Inverse of [`segment_to_index`].
pub fn index_to_bits(index: usize, width: usize) -> Vec<u8> {
    let v = index - 1;
    (0..width).rev().map(|i| ((v >> i) & 1) as u8).collect()
}

/// Sparse orthogonal pilot codeword: the length-`n` unit vector `e_index`.
pub fn esop_codeword(index: usize, n: usize) -> Result<Vec<u8>, TxError> {
    if index < 1 || index > n {
        return Err(TxError::IndexOutOfRange(index, n));
    }
    let mut v = vec![0u8; n];
    v[index - 1] = 1;
    Ok(v)
}

/// Tree-code parity generators: five dense binary matrices drawn from a
/// public seed. The two parity fragments are
/// `r1 = G1 v1 + G2 v2` and `r2 = G3 v1 + G4 v2 + G5 r1` over GF(2).
#[derive(Debug, Clone)]
pub struct TreeCode {
    frag_bits: usize,
    /// Row masks: bit `j` of `g[m][r]` is entry `(r, j)` of matrix `m`.
    g: [Vec<u32>; 5],
    seed: u64,
}

impl TreeCode {
    pub fn new(frag_bits: usize, seed: u64) -> Self {
        assert!(frag_bits <= 32, "fragment size above 32 bits unsupported");
        let mut rng = rng_from_key(mix_seed(seed, 0x7472_6565));
        let mask = if frag_bits == 32 {
            u32::MAX
        } else {
            (1u32 << frag_bits) - 1
        };
        let g = std::array::from_fn(|_| (0..frag_bits).map(|_| rng.random::<u32>() & mask).collect());
        Self {
            frag_bits,
            g,
            seed,
        }
    }

    pub fn frag_bits(&self) -> usize {
        self.frag_bits
    }

    fn to_mask(&self, bits: &[u8]) -> u32 {
        debug_assert_eq!(bits.len(), self.frag_bits);
        bits.iter()
            .enumerate()
            .fold(0u32, |acc, (j, &b)| acc | ((b as u32) << j))
    }

    fn matvec(&self, m: usize, x: u32) -> Vec<u8> {
        self.g[m]
            .iter()
            .map(|&row| ((row & x).count_ones() & 1) as u8)
            .collect()
    }

    /// First parity fragment.
    pub fn parity1(&self, v1: &[u8], v2: &[u8]) -> Vec<u8> {
        let a = self.matvec(0, self.to_mask(v1));
        let b = self.matvec(1, self.to_mask(v2));
        a.iter().zip(b).map(|(x, y)| x ^ y).collect()
    }

    /// Second parity fragment.
    pub fn parity2(&self, v1: &[u8], v2: &[u8], r1: &[u8]) -> Vec<u8> {
        let a = self.matvec(2, self.to_mask(v1));
        let b = self.matvec(3, self.to_mask(v2));
        let c = self.matvec(4, self.to_mask(r1));
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((x, y), z)| x ^ y ^ z)
            .collect()
    }

    /// Both parity fragments.
    pub fn encode(&self, v1: &[u8], v2: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let r1 = self.parity1(v1, v2);
        let r2 = self.parity2(v1, v2, &r1);
        (r1, r2)
    }

    /// The four 1-based codeword indices transmitted for a message split.
    pub fn stage_indices(&self, split: &MessageSplit) -> [usize; 4] {
        let (r1, r2) = self.encode(&split.frag1, &split.frag2);
        [
            segment_to_index(&split.frag1),
            segment_to_index(&split.frag2),
            segment_to_index(&r1),
            segment_to_index(&r2),
        ]
    }

    /// Matrix entry `(r, c)` of generator `m` in `0..5` (for export/tests).
    pub fn entry(&self, m: usize, r: usize, c: usize) -> u8 {
        ((self.g[m][r] >> c) & 1) as u8
    }

    /// Text dump of the five generator matrices, one row per line as a
    /// bitstring (column 0 leftmost).
    pub fn export_text(&self) -> String {
        let mut out = format!(
            "# tree-code parity generators, frag_bits={} seed={}\n",
            self.frag_bits, self.seed
        );
        for (m, rows) in self.g.iter().enumerate() {
            out.push_str(&format!("matrix G{}\n", m + 1));
            for &row in rows {
                let s: String = (0..self.frag_bits)
                    .map(|c| if (row >> c) & 1 == 1 { '1' } else { '0' })
                    .collect();
                out.push_str(&s);
                out.push('\n');
            }
        }
        out
    }
}

/// User-specific permutation of `0..l_c`, keyed by the four codeword indices
/// and a shared seed (one SplitMix64 round per index, then a Fisher-Yates
/// shuffle of a seeded stream cipher RNG).
pub fn build_interleaver(indices: [usize; 4], l_c: usize, seed: u64) -> Vec<u32> {
    let mut key = mix_seed(seed, 0x696e_746c);
    for i in indices {
        key = mix_seed(key, i as u64);
    }
    let mut perm: Vec<u32> = (0..l_c as u32).collect();
    perm.shuffle(&mut rng_from_key(key));
    perm
}

/// One user's encoded data phase.
#[derive(Debug, Clone)]
pub struct DataFrame {
    /// LDPC codeword (block length bits).
    pub coded_bits: Vec<u8>,
    /// Frequency-domain entries over the whole data phase: exactly
    /// `coded_bits.len()` BPSK entries of magnitude `data_amp`, zeros at the
    /// padded positions.
    pub symbols: Vec<Complex64>,
}

impl DataFrame {
    /// Length-`s` slice for 0-based data symbol `t`.
    pub fn symbol_slice(&self, t: usize, s: usize) -> &[Complex64] {
        &self.symbols[t * s..(t + 1) * s]
    }
}

/// LDPC-encode the payload, BPSK-map (bit 0 -> `+data_amp`), and place the
/// coded bits at the first `block_len` slots of the permuted order.
pub fn encode_data(
    payload: &[u8],
    interleaver: &[u32],
    ldpc: &LdpcCode,
    data_amp: f64,
) -> Result<DataFrame, TxError> {
    if payload.len() != ldpc.info_len() {
        return Err(TxError::LengthMismatch {
            got: payload.len(),
            want: ldpc.info_len(),
        });
    }
    let coded = ldpc.encode(payload);
    let mut symbols = vec![Complex64::ZERO; interleaver.len()];
    for (j, &bit) in coded.iter().enumerate() {
        let v = data_amp * (1.0 - 2.0 * bit as f64);
        symbols[interleaver[j] as usize] = Complex64::new(v, 0.0);
    }
    Ok(DataFrame {
        coded_bits: coded,
        symbols,
    })
}
