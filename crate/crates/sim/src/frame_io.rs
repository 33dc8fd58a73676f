//! Binary frame dumps.
//!
//! Layout, all little-endian: three `u64` header words `M`, `K`, `N`, then
//! `M·N` complex samples in antenna-major order, each written as its real
//! part followed by its imaginary part (`f64`). Ground truth is not stored.

use std::path::Path;

use cecfo_core::{Complex64, ReceivedFrame};

use crate::error::{SimError, SimResult};
use crate::output::write_atomic;

const HEADER_BYTES: usize = 24;

pub fn encode_frame(frame: &ReceivedFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + 16 * frame.samples().len());
    for dim in [frame.antennas(), frame.users(), frame.len()] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for z in frame.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn invalid(msg: &str) -> SimError {
    SimError::Argument(format!("malformed frame file: {msg}"))
}

pub fn decode_frame(bytes: &[u8]) -> SimResult<ReceivedFrame> {
    if bytes.len() < HEADER_BYTES {
        return Err(invalid("truncated header"));
    }
    let word = |i: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[8 * i..8 * i + 8]);
        b
    };
    let dims: Vec<usize> = (0..3)
        .map(|i| usize::try_from(u64::from_le_bytes(word(i))))
        .collect::<Result<_, _>>()
        .map_err(|_| invalid("dimension does not fit in memory"))?;
    let (m, k, n) = (dims[0], dims[1], dims[2]);
    let expected = m
        .checked_mul(n)
        .and_then(|c| c.checked_mul(16))
        .ok_or_else(|| invalid("dimensions overflow"))?;
    let payload = &bytes[HEADER_BYTES..];
    if payload.len() != expected {
        return Err(invalid("payload length does not match header"));
    }
    let samples = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8-byte slice"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8-byte slice"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(ReceivedFrame::new(m, k, n, samples)?)
}

pub fn write_frame(path: &Path, frame: &ReceivedFrame) -> SimResult<()> {
    write_atomic(path, &encode_frame(frame))
}

pub fn read_frame(path: &Path) -> SimResult<ReceivedFrame> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    decode_frame(&bytes)
}
