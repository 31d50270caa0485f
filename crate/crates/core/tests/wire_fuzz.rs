//! Random packets survive encode/decode bit-exact, and random byte strings
//! never panic the decoder.

use fecsim_core::rate::FeedbackReport;
use fecsim_core::sliding::{AckPacket, RepairPacket, SourcePacket};
use fecsim_core::wire::{WireError, WirePacket};
use fecsim_core::SymbolVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bytes(rng: &mut ChaCha8Rng, max: usize) -> Vec<u8> {
    let n = if rng.random_bool(0.1) { max } else { rng.random_range(0..=max.min(64)) };
    (0..n).map(|_| rng.random()).collect()
}

fn random_packet(rng: &mut ChaCha8Rng) -> WirePacket {
    match rng.random_range(0..5) {
        0 => WirePacket::Source(SourcePacket {
            seq: rng.random(),
            payload: bytes(rng, 1500),
        }),
        1 => WirePacket::Repair(RepairPacket {
            repair_seq: rng.random(),
            window_start: rng.random(),
            window_end: rng.random(),
            coeff_seed: rng.random(),
            payload: SymbolVector::from_bytes(&bytes(rng, 1502)),
        }),
        2 => {
            let n = rng.random_range(0..40);
            WirePacket::Ack(AckPacket {
                cumulative: rng.random_bool(0.7).then(|| rng.random()),
                extra: (0..n).map(|_| rng.random()).collect(),
            })
        }
        3 => WirePacket::Feedback(FeedbackReport {
            recv_rate_micro: rng.random(),
            p_nano: rng.random(),
            echo_us: rng.random(),
        }),
        _ => WirePacket::Padding(rng.random_range(0..2000)),
    }
}

#[test]
fn round_trip_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3E1);
    for i in 0..20_000 {
        let p = random_packet(&mut rng);
        let enc = p.encode();
        assert_eq!(enc.len(), p.encoded_len(), "packet {i}");
        let back = WirePacket::decode(&enc).unwrap_or_else(|e| panic!("packet {i}: {e}"));
        assert_eq!(back, p, "packet {i}");
        assert_eq!(back.encode(), enc, "packet {i}");
    }
}

#[test]
fn truncations_and_junk_are_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBAD);
    for _ in 0..2_000 {
        let enc = random_packet(&mut rng).encode();
        let cut = rng.random_range(0..enc.len());
        assert_eq!(WirePacket::decode(&enc[..cut]), Err(WireError::Truncated));
        let mut long = enc.clone();
        long.push(0);
        assert_eq!(WirePacket::decode(&long), Err(WireError::Trailing(1)));
    }
    for _ in 0..20_000 {
        let junk = bytes(&mut rng, 64);
        if let Ok(p) = WirePacket::decode(&junk) {
            assert_eq!(p.encode(), junk);
        }
    }
}
