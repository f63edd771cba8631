//! Link-level simulator and receiver library for asynchronous MIMO-OFDM
//! unsourced random access.
//!
//! A slot carries `T_p` pilot OFDM symbols followed by `T_d` data symbols.
//! Each active user splits its message into two preamble fragments and an
//! LDPC payload, appends two tree-code parity fragments, and transmits the
//! four fragments as single-coordinate ("extremely sparse") orthogonal pilot
//! codewords, one per pilot symbol. The payload is LDPC-coded, zero-padded,
//! interleaved with a user-specific permutation derived from the four
//! fragment indices, and BPSK-modulated over the data symbols.
//!
//! Residual timing offsets (within the cyclic prefix) and fractional carrier
//! frequency offsets turn into per-subcarrier / per-symbol phase rotations in
//! the frequency domain. The receiver estimates per-stage row channels by
//! MMSE, stitches fragments across stages on a multistage collision graph,
//! and runs a greedy minimum-weight path extraction with per-path grid search
//! over candidate timing/frequency offsets, collision tests, channel
//! reconstruction and successive interference cancellation. A
//! constellation-aided correction step then re-ranks offset candidates on the
//! data phase and channels are re-estimated with the corrected offsets.
//!
//! The [`trial`] and [`sweep`] modules wrap the pipeline into a reproducible
//! Monte Carlo harness; `src/main.rs` exposes it as a CLI.

pub mod config;
pub mod gbcr2;
pub mod graph;
pub mod ldpc;
pub mod metrics;
pub mod phy;
pub mod refine;
pub mod rx;
pub mod selftest;
pub mod sweep;
pub mod trial;
pub mod tx;
pub mod util;

pub use config::{ChannelMode, PhaseGrid, SystemConfig, TrialOptions};


