//! Text messaging over the 2×2 link: ITA2 letters, stream splitting,
//! start/end framing and an end-to-end emulation.
//!
//! Frame layout, per stream, one bit per slot:
//!
//! ```text
//! [1, 0] | 5-bit groups ... | 00000
//!  start    payload           terminator
//! ```
//!
//! The start preamble is one bit-1 slot followed by a silent guard slot.
//! Stream 1 carries the first `⌈n/2⌉` letters and stream 2 the rest; a
//! missing final letter on stream 2 is padded with `00000`. Every letter
//! code is nonzero, so an aligned `00000`/`00000` pair of groups can only
//! be the terminator.

use serde::{Deserialize, Serialize};

use crate::channel_model::SlotProbabilities;
use crate::detection::{DetectorBank, DetectorKind};
use crate::link_sim::{simulate_link, simulate_trace, NoiseConfig, SlotObservation, TxConfig};
use crate::rng::{substream, Domain};
use crate::{Error, Result};

pub const START: [u8; 2] = [1, 0];
pub const GROUP: usize = 5;
pub const NULL_CODE: u8 = 0;

/// ITA2 letters-shift codes, bit 1 first (`A = 11000`).
const LETTERS: [(char, u8); 26] = [
    ('A', 0b11000),
    ('B', 0b10011),
    ('C', 0b01110),
    ('D', 0b10010),
    ('E', 0b10000),
    ('F', 0b10110),
    ('G', 0b01011),
    ('H', 0b00101),
    ('I', 0b01100),
    ('J', 0b11010),
    ('K', 0b11110),
    ('L', 0b01001),
    ('M', 0b00111),
    ('N', 0b00110),
    ('O', 0b00011),
    ('P', 0b01101),
    ('Q', 0b11101),
    ('R', 0b01010),
    ('S', 0b10100),
    ('T', 0b00001),
    ('U', 0b11100),
    ('V', 0b01111),
    ('W', 0b11001),
    ('X', 0b10111),
    ('Y', 0b10101),
    ('Z', 0b10001),
];

/// Letter ↔ 5-bit code map.
#[derive(Debug, Clone)]
pub struct Ita2Codebook {
    by_code: [Option<char>; 32],
}

impl Default for Ita2Codebook {
    fn default() -> Self {
        let mut by_code = [None; 32];
        for (c, code) in LETTERS {
            by_code[code as usize] = Some(c);
        }
        Self { by_code }
    }
}

impl Ita2Codebook {
    pub fn encode(&self, c: char) -> Result<u8> {
        let up = c.to_ascii_uppercase();
        LETTERS
            .iter()
            .find(|(l, _)| *l == up)
            .map(|&(_, code)| code)
            .ok_or(Error::UnsupportedCharacter(c))
    }

    pub fn decode(&self, code: u8) -> Result<char> {
        self.by_code
            .get(code as usize)
            .copied()
            .flatten()
            .ok_or(Error::InvalidCode(code))
    }

    pub fn letters(&self) -> impl Iterator<Item = (char, u8)> {
        LETTERS.into_iter()
    }
}

pub fn code_bits(code: u8) -> [u8; GROUP] {
    std::array::from_fn(|i| (code >> (GROUP - 1 - i)) & 1)
}

pub fn bits_code(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1))
}

/// Two framed bit streams of equal length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub stream1: Vec<u8>,
    pub stream2: Vec<u8>,
}

impl Frame {
    pub fn slots(&self) -> usize {
        self.stream1.len()
    }

    /// Payload bits of both streams, without start and terminator.
    pub fn payload(&self) -> (&[u8], &[u8]) {
        let end = self.slots() - GROUP;
        (&self.stream1[START.len()..end], &self.stream2[START.len()..end])
    }
}

fn uppercase_letters(text: &str) -> Result<Vec<u8>> {
    let book = Ita2Codebook::default();
    text.chars().map(|c| book.encode(c)).collect()
}

fn push_codes(stream: &mut Vec<u8>, codes: impl IntoIterator<Item = u8>) {
    for code in codes {
        stream.extend(code_bits(code));
    }
}

pub fn encode_message(text: &str) -> Result<Frame> {
    let codes = uppercase_letters(text)?;
    let front = codes.len().div_ceil(2);
    let (a, b) = codes.split_at(front);
    let mut s1 = START.to_vec();
    let mut s2 = START.to_vec();
    push_codes(&mut s1, a.iter().copied());
    push_codes(
        &mut s2,
        b.iter().copied().chain(std::iter::repeat(NULL_CODE)).take(a.len()),
    );
    for (g1, g2) in s1[START.len()..].chunks(GROUP).zip(s2[START.len()..].chunks(GROUP)) {
        if bits_code(g1) == NULL_CODE && bits_code(g2) == NULL_CODE {
            return Err(Error::TerminatorCollision);
        }
    }
    push_codes(&mut s1, [NULL_CODE]);
    push_codes(&mut s2, [NULL_CODE]);
    Ok(Frame {
        stream1: s1,
        stream2: s2,
    })
}

/// Inverse of [`encode_message`]; never panics on arbitrary input. Bits
/// after the terminator are ignored.
pub fn decode_frame(stream1: &[u8], stream2: &[u8]) -> Result<String> {
    if stream1.len() != stream2.len() {
        return Err(Error::LengthMismatch(stream1.len(), stream2.len()));
    }
    if stream1.len() < START.len() || stream1[..START.len()] != START || stream2[..START.len()] != START {
        return Err(Error::MissingStart);
    }
    let book = Ita2Codebook::default();
    let (mut front, mut back) = (String::new(), String::new());
    let mut pos = START.len();
    loop {
        if pos + GROUP > stream1.len() {
            return Err(Error::MissingTerminator);
        }
        let c1 = bits_code(&stream1[pos..pos + GROUP]);
        let c2 = bits_code(&stream2[pos..pos + GROUP]);
        pos += GROUP;
        if c1 == NULL_CODE && c2 == NULL_CODE {
            break;
        }
        // Stream 1 is never padded; only stream 2 may carry a null group.
        front.push(book.decode(c1)?);
        if c2 != NULL_CODE {
            back.push(book.decode(c2)?);
        }
    }
    front.push_str(&back);
    Ok(front)
}

/// Single-stream frame with the same start and terminator.
pub fn encode_siso(text: &str) -> Result<Vec<u8>> {
    let mut s = START.to_vec();
    push_codes(&mut s, uppercase_letters(text)?);
    push_codes(&mut s, [NULL_CODE]);
    Ok(s)
}

pub fn decode_siso(stream: &[u8]) -> Result<String> {
    if stream.len() < START.len() || stream[..START.len()] != START {
        return Err(Error::MissingStart);
    }
    let book = Ita2Codebook::default();
    let mut out = String::new();
    let mut pos = START.len();
    loop {
        if pos + GROUP > stream.len() {
            return Err(Error::MissingTerminator);
        }
        let c = bits_code(&stream[pos..pos + GROUP]);
        pos += GROUP;
        if c == NULL_CODE {
            return Ok(out);
        }
        out.push(book.decode(c)?);
    }
}

/// Frame lengths in slots for an `n`-letter message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotAccount {
    pub letters: usize,
    /// `2 + 5·⌈n/2⌉ + 5`.
    pub mimo_slots: usize,
    /// `2 + 5·n + 5`.
    pub siso_slots: usize,
}

impl SlotAccount {
    pub fn new(letters: usize) -> Self {
        let overhead = START.len() + GROUP;
        Self {
            letters,
            mimo_slots: overhead + GROUP * letters.div_ceil(2),
            siso_slots: overhead + GROUP * letters,
        }
    }

    pub fn speedup(&self) -> f64 {
        self.siso_slots as f64 / self.mimo_slots as f64
    }
}

/// Link and detector settings for the emulated demo.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub probs: SlotProbabilities<f64>,
    pub q1: u64,
    pub sigma_n: f64,
    pub detector: DetectorKind,
    /// Bits per antenna of the genie calibration trace.
    pub calibration_bits: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub sent: Frame,
    pub received: Frame,
    pub decoded: Result<String>,
    pub bit_errors: usize,
    pub ber: f64,
    pub slots: usize,
    pub observations: Vec<SlotObservation<f64>>,
}

fn demo_bank(cfg: &DemoConfig) -> Result<DetectorBank<f64>> {
    let mut bank = DetectorBank::new(&cfg.probs, cfg.q1, 0.5, cfg.sigma_n)?;
    if cfg.detector == DetectorKind::Genie {
        let tx = TxConfig::new(cfg.q1, 0.5, cfg.probs.symbol_duration, cfg.calibration_bits)?;
        let calib = simulate_trace(&tx, &cfg.probs, &NoiseConfig::new(cfg.sigma_n)?, cfg.seed, u64::MAX)?;
        bank.calibrate_genie(&calib)?;
    }
    Ok(bank)
}

type Transmission = (Vec<SlotObservation<f64>>, Vec<[u8; 2]>);

fn transmit(cfg: &DemoConfig, s1: &[u8], s2: &[u8]) -> Result<Transmission> {
    let bank = demo_bank(cfg)?;
    let tx = TxConfig::new(cfg.q1, 0.5, cfg.probs.symbol_duration, s1.len())?;
    let noise = NoiseConfig::new(cfg.sigma_n)?;
    let obs = simulate_link(
        s1,
        s2,
        &tx,
        &cfg.probs,
        &noise,
        &mut substream(cfg.seed, Domain::Demo, 0, 0),
    )?;
    let bits = obs.iter().map(|o| bank.decide(cfg.detector, o).0).collect();
    Ok((obs, bits))
}

/// encode → simulate → detect → decode.
pub fn end_to_end_demo(text: &str, cfg: &DemoConfig) -> Result<DemoReport> {
    let sent = encode_message(text)?;
    let (observations, bits) = transmit(cfg, &sent.stream1, &sent.stream2)?;
    let received = Frame {
        stream1: bits.iter().map(|b| b[0]).collect(),
        stream2: bits.iter().map(|b| b[1]).collect(),
    };
    let bit_errors = sent
        .stream1
        .iter()
        .zip(&received.stream1)
        .chain(sent.stream2.iter().zip(&received.stream2))
        .filter(|(a, b)| a != b)
        .count();
    let slots = sent.slots();
    Ok(DemoReport {
        decoded: decode_frame(&received.stream1, &received.stream2),
        ber: bit_errors as f64 / (2 * slots) as f64,
        bit_errors,
        slots,
        sent,
        received,
        observations,
    })
}

/// Single-stream variant: the message goes out on Tx₁ only, the other
/// antenna stays silent. `cfg.probs` should describe a single link.
pub fn siso_end_to_end_demo(text: &str, cfg: &DemoConfig) -> Result<DemoReport> {
    let s1 = encode_siso(text)?;
    let silent = vec![0u8; s1.len()];
    let (observations, bits) = transmit(cfg, &s1, &silent)?;
    let r1: Vec<u8> = bits.iter().map(|b| b[0]).collect();
    let bit_errors = s1.iter().zip(&r1).filter(|(a, b)| a != b).count();
    let slots = s1.len();
    Ok(DemoReport {
        decoded: decode_siso(&r1),
        ber: bit_errors as f64 / slots as f64,
        bit_errors,
        slots,
        sent: Frame {
            stream1: s1,
            stream2: silent.clone(),
        },
        received: Frame {
            stream1: r1,
            stream2: silent,
        },
        observations,
    })
}

/// `Σ y_Rx1 / Σ y_Rx2` over probe slots (`x = (1, 0)`); other slots are
/// ignored. `+∞` when nothing reached Rx₂.
pub fn s_ili_ratio(observations: &[SlotObservation<f64>]) -> f64 {
    let (num, den) = observations
        .iter()
        .filter(|o| o.x == [1, 0])
        .fold((0.0, 0.0), |(n, d), o| (n + o.y[0], d + o.y[1]));
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Simulates `n_probes` isolated probe slots (bit-1 on Tx₁, silence before).
pub fn simulate_probes(
    probs: &SlotProbabilities<f64>,
    q1: u64,
    noise: &NoiseConfig<f64>,
    n_probes: usize,
    seed: u64,
) -> Result<Vec<SlotObservation<f64>>> {
    let current = probs.truncated(0);
    let tx = TxConfig::new(q1, 0.5, probs.symbol_duration, 1)?;
    let mut rng = substream(seed, Domain::Demo, 1, 0);
    let mut out = Vec::with_capacity(n_probes);
    for slot in 0..n_probes {
        let mut o = simulate_link(&[1], &[0], &tx, &current, noise, &mut rng)?.remove(0);
        o.slot = slot;
        out.push(o);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{slot_probs, ChannelModelParams};

    #[test]
    fn codebook_bijective() {
        let book = Ita2Codebook::default();
        let mut seen = std::collections::HashSet::new();
        for (c, code) in book.letters() {
            assert!(seen.insert(code));
            assert_ne!(code, NULL_CODE);
            assert_eq!(book.decode(code).unwrap(), c);
            assert_eq!(book.encode(c).unwrap(), code);
        }
        assert_eq!(book.encode('a').unwrap(), 0b11000);
        assert_eq!(code_bits(0b11000), [1, 1, 0, 0, 0]);
        assert!(matches!(book.encode('1'), Err(Error::UnsupportedCharacter('1'))));
        assert!(matches!(book.decode(0b00100), Err(Error::InvalidCode(4))));
    }

    #[test]
    fn single_letter_frame() {
        let f = encode_message("A").unwrap();
        let (p1, p2) = f.payload();
        assert_eq!(p1, [1, 1, 0, 0, 0]);
        assert_eq!(p2, [0, 0, 0, 0, 0]);
        assert_eq!(decode_frame(&f.stream1, &f.stream2).unwrap(), "A");
    }

    #[test]
    fn yonsei_frame_shape() {
        let f = encode_message("YONSEI").unwrap();
        let (p1, p2) = f.payload();
        assert_eq!((p1.len(), p2.len()), (15, 15));
        assert_eq!(f.slots(), 22);
        assert_eq!(&f.stream1[..2], &START);
        assert_eq!(&f.stream1[17..], &[0; 5]);
        assert_eq!(decode_frame(&f.stream1, &f.stream2).unwrap(), "YONSEI");
        assert_eq!(encode_siso("YONSEI").unwrap().len(), 37);
    }

    #[test]
    fn slot_accounting() {
        let s = SlotAccount::new(6);
        assert_eq!((s.mimo_slots, s.siso_slots), (22, 37));
        assert!((s.speedup() - 37.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn decode_errors() {
        let f = encode_message("HELLO").unwrap();
        let n = f.slots() - 3;
        assert!(matches!(
            decode_frame(&f.stream1[..n], &f.stream2[..n]),
            Err(Error::MissingTerminator)
        ));
        assert!(matches!(
            decode_frame(&f.stream1[1..], &f.stream2[1..]),
            Err(Error::MissingStart)
        ));
        assert!(matches!(decode_frame(&[1, 0], &[1]), Err(Error::LengthMismatch(2, 1))));
        assert!(matches!(decode_frame(&[], &[]), Err(Error::MissingStart)));
        assert!(encode_message("HI THERE").is_err());
    }

    #[test]
    fn siso_roundtrip() {
        let s = encode_siso("HELLO").unwrap();
        assert_eq!(decode_siso(&s).unwrap(), "HELLO");
        assert!(decode_siso(&s[..s.len() - 1]).is_err());
    }

    #[test]
    fn noiseless_demo_recovers_text() {
        let probs = slot_probs(
            &ChannelModelParams::reference_pair(),
            &ChannelModelParams::reference_cross(),
            0.08,
            0,
        )
        .unwrap();
        for detector in [DetectorKind::Adaptive, DetectorKind::ZfIn, DetectorKind::Genie] {
            let cfg = DemoConfig {
                probs: probs.clone(),
                q1: 1000,
                sigma_n: 0.0,
                detector,
                calibration_bits: 5000,
                seed: 3,
            };
            let r = end_to_end_demo("YONSEI", &cfg).unwrap();
            assert_eq!(r.decoded.as_deref(), Ok("YONSEI"), "{detector}");
            assert_eq!(r.bit_errors, 0);
        }
    }

    #[test]
    fn s_ili_sentinel_without_cross_arrivals() {
        let probs = SlotProbabilities::new(vec![0.3], vec![0.0], 0.08).unwrap();
        let obs = simulate_probes(&probs, 100, &NoiseConfig::noiseless(), 50, 1).unwrap();
        assert_eq!(s_ili_ratio(&obs), f64::INFINITY);
    }
}
