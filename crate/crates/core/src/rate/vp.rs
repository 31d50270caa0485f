/// Payload size for one packet at a fixed packet rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VpSize {
    pub payload: usize,
    /// The fair byte rate cannot even cover headers plus the minimum payload.
    pub starved: bool,
}

/// `max(min_payload, X/r - header_overhead)`.
pub fn vp_packet_size(rate: f64, packet_rate: f64, header_overhead: usize, min_payload: usize) -> VpSize {
    let per_packet = if packet_rate > 0.0 { rate / packet_rate } else { 0.0 };
    let payload = libm::floor(per_packet) - header_overhead as f64;
    if payload < min_payload as f64 {
        VpSize {
            payload: min_payload,
            starved: true,
        }
    } else {
        VpSize {
            payload: payload as usize,
            starved: false,
        }
    }
}

/// Variable-packet-size controller state: the packet rate never moves, only
/// the size each packet may carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpRateState {
    pub packet_rate: f64,
    pub allowed_bytes_per_packet: usize,
    pub header_overhead: usize,
    pub min_payload: usize,
    /// Ceiling on the payload; defaults to the wire limit.
    pub max_payload: usize,
    pub starved: bool,
    /// The fair byte rate asks for more than `max_payload` per packet.
    pub capped: bool,
}

impl VpRateState {
    pub fn new(packet_rate: f64, header_overhead: usize, min_payload: usize) -> Self {
        VpRateState {
            packet_rate,
            allowed_bytes_per_packet: min_payload,
            header_overhead,
            min_payload,
            max_payload: crate::wire::MAX_PAYLOAD,
            starved: false,
            capped: false,
        }
    }

    pub fn update(&mut self, allowed_rate: f64) {
        let size = vp_packet_size(allowed_rate, self.packet_rate, self.header_overhead, self.min_payload);
        self.capped = size.payload > self.max_payload;
        self.allowed_bytes_per_packet = size.payload.min(self.max_payload);
        self.starved = size.starved;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            vp_packet_size(150_000.0, 100.0, 40, 64),
            VpSize {
                payload: 1460,
                starved: false
            }
        );
        let half = vp_packet_size(75_000.0, 100.0, 40, 64);
        assert_eq!(half.payload, 710);
        assert_eq!(
            vp_packet_size(1_000.0, 100.0, 40, 64),
            VpSize {
                payload: 64,
                starved: true
            }
        );
    }

    #[test]
    fn packet_rate_is_untouched_by_updates() {
        let mut s = VpRateState::new(100.0, 40, 64);
        s.update(150_000.0);
        s.update(20_000.0);
        assert_eq!(s.packet_rate, 100.0);
        assert_eq!(s.allowed_bytes_per_packet, 160);
    }

    #[test]
    fn payload_is_capped() {
        let mut s = VpRateState::new(100.0, 40, 64);
        s.update(1e9);
        assert_eq!(s.allowed_bytes_per_packet, crate::wire::MAX_PAYLOAD);
        assert!(s.capped);
        s.update(150_000.0);
        assert!(!s.capped);
    }
}
