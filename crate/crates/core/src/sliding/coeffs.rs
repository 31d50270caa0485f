use alloc::vec::Vec;

use crate::gf256::{Gf256, SymbolVector};

/// Marsaglia xorshift32 (shifts 13, 17, 5). The state is never zero.
#[derive(Debug, Clone)]
pub struct XorShift32(u32);

impl XorShift32 {
    pub fn new(seed: u32) -> Self {
        XorShift32(if seed == 0 { 0x6D2B_79F5 } else { seed })
    }

    pub fn next_u32(&mut self) -> u32 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        self.0 = x;
        x
    }

    /// Next value in 1..=255; zero draws are discarded.
    pub fn next_nonzero_byte(&mut self) -> u8 {
        loop {
            let b = (self.next_u32() >> 24) as u8;
            if b != 0 {
                return b;
            }
        }
    }
}

// murmur3 finalizer
fn fmix32(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x85EB_CA6B);
    h ^= h >> 13;
    h = h.wrapping_mul(0xC2B2_AE35);
    h ^= h >> 16;
    h
}

/// Coefficient of source `seq` inside the repair seeded with `coeff_seed`.
///
/// The generator is keyed by the absolute sequence number rather than the
/// offset inside the window, so a source gets the same coefficient in a
/// given repair however far the window has been pruned.
pub fn coefficient(coeff_seed: u32, seq: u32) -> Gf256 {
    let key = fmix32(coeff_seed ^ fmix32(seq.wrapping_add(0x9E37_79B9)));
    Gf256(XorShift32::new(key).next_nonzero_byte())
}

/// Coefficients for `window_start..=window_end`, in sequence order.
pub fn expand_coefficients(coeff_seed: u32, window_start: u32, window_end: u32) -> Vec<Gf256> {
    (window_start..=window_end).map(|s| coefficient(coeff_seed, s)).collect()
}

/// Symbols a source contributes to combinations: a big-endian u16 length
/// followed by the payload. Combinations zero-pad shorter operands, and the
/// prefix lets the decoder cut a recovered packet back to its true size.
pub fn coded_symbols(payload: &[u8]) -> SymbolVector {
    let mut v = Vec::with_capacity(payload.len() + 2);
    v.extend_from_slice(&(payload.len() as u16).to_be_bytes());
    v.extend_from_slice(payload);
    SymbolVector::from(v)
}

/// Inverse of [`coded_symbols`]; `None` if the prefix is inconsistent with
/// the vector or the padding is not zero.
pub fn strip_symbols(symbols: &SymbolVector) -> Option<Vec<u8>> {
    let bytes = symbols.as_bytes();
    if bytes.len() < 2 {
        return if bytes.iter().all(|&b| b == 0) { Some(Vec::new()) } else { None };
    }
    let len = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    let body = &bytes[2..];
    if len > body.len() || body[len..].iter().any(|&b| b != 0) {
        return None;
    }
    Some(body[..len].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xorshift_reference_sequence() {
        // x = 1: 1 ^ 1<<13 = 0x2001; ^ >>17 unchanged; ^ <<5 = 0x42021
        let mut r = XorShift32::new(1);
        assert_eq!(r.next_u32(), 0x0004_2021);
        assert_eq!(XorShift32::new(0).0, 0x6D2B_79F5);
    }

    #[test]
    fn coefficients_are_nonzero_and_deterministic() {
        for seed in 0..64 {
            for seq in 0..256 {
                let c = coefficient(seed, seq);
                assert!(!c.is_zero());
                assert_eq!(c, coefficient(seed, seq));
            }
        }
    }

    #[test]
    fn expansion_is_window_offset_independent() {
        let a = expand_coefficients(9, 10, 20);
        let b = expand_coefficients(9, 15, 20);
        assert_eq!(&a[5..], &b[..]);
    }

    #[test]
    fn coded_symbols_roundtrip() {
        let mut v = coded_symbols(&[1, 2, 3]);
        assert_eq!(v.as_bytes(), &[0, 3, 1, 2, 3]);
        v.resize(9);
        assert_eq!(strip_symbols(&v).unwrap(), &[1, 2, 3]);
        let bad = SymbolVector::from_bytes(&[0, 1, 5, 7]);
        assert_eq!(strip_symbols(&bad), None);
    }
}
