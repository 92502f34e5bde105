//! GPS L1 C/A Gold codes.

use crate::error::{invalid, Result};

pub const CODE_LENGTH: usize = 1023;
pub const CHIP_RATE_HZ: f64 = 1.023e6;

/// G2 phase-selector taps (1-based register stages) for PRN 1..=32.
const G2_TAPS: [(usize, usize); 32] = [
    (2, 6),
    (3, 7),
    (4, 8),
    (5, 9),
    (1, 9),
    (2, 10),
    (1, 8),
    (2, 9),
    (3, 10),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (1, 4),
    (2, 5),
    (3, 6),
    (4, 7),
    (5, 8),
    (6, 9),
    (1, 3),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 6),
    (2, 7),
    (3, 8),
    (4, 9),
];

/// One period of a C/A code as bipolar chips (binary 0 -> +1, 1 -> -1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipSequence(Box<[i8; CODE_LENGTH]>);

impl ChipSequence {
    pub fn chips(&self) -> &[i8] {
        &self.0[..]
    }

    pub fn len(&self) -> usize {
        CODE_LENGTH
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unnormalized circular correlation against `other` at chip lag `lag`.
    pub fn circular_correlation(&self, other: &ChipSequence, lag: usize) -> i32 {
        (0..CODE_LENGTH)
            .map(|i| self.0[i] as i32 * other.0[(i + lag) % CODE_LENGTH] as i32)
            .sum()
    }
}

/// Generates the C/A code for `prn` in 1..=32 from the G1/G2 registers.
pub fn generate_ca_code(prn: u8) -> Result<ChipSequence> {
    if !(1..=32).contains(&prn) {
        return Err(invalid(format!("PRN {prn} outside 1..=32")));
    }
    let (s1, s2) = G2_TAPS[prn as usize - 1];
    // stage k lives at index k - 1
    let mut g1 = [1u8; 10];
    let mut g2 = [1u8; 10];
    let mut chips = Box::new([0i8; CODE_LENGTH]);
    for chip in chips.iter_mut() {
        let bit = g1[9] ^ g2[s1 - 1] ^ g2[s2 - 1];
        *chip = if bit == 0 { 1 } else { -1 };

        let fb1 = g1[2] ^ g1[9];
        let fb2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        g1.rotate_right(1);
        g2.rotate_right(1);
        g1[0] = fb1;
        g2[0] = fb2;
    }
    Ok(ChipSequence(chips))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Chip sequence via the G2 delay formulation, independent of the tap table.
    fn delay_oracle(prn: usize) -> Vec<i8> {
        const DELAYS: [usize; 32] = [
            5, 6, 7, 8, 17, 18, 139, 140, 141, 251, 252, 254, 255, 256, 257, 258, 469, 470, 471,
            472, 473, 474, 509, 512, 513, 514, 515, 516, 859, 860, 861, 862,
        ];
        let mls = |taps: &[usize]| {
            let mut reg = [1u8; 10];
            let mut out = Vec::with_capacity(CODE_LENGTH);
            for _ in 0..CODE_LENGTH {
                out.push(reg[9]);
                let fb = taps.iter().fold(0, |acc, &t| acc ^ reg[t - 1]);
                reg.rotate_right(1);
                reg[0] = fb;
            }
            out
        };
        let g1 = mls(&[3, 10]);
        let g2 = mls(&[2, 3, 6, 8, 9, 10]);
        let d = DELAYS[prn - 1];
        (0..CODE_LENGTH)
            .map(|i| {
                let b = g1[i] ^ g2[(i + CODE_LENGTH - d) % CODE_LENGTH];
                if b == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }

    #[test]
    fn prn1_first_chips_octal_1440() {
        let code = generate_ca_code(1).unwrap();
        let word = code.chips()[..10]
            .iter()
            .fold(0u32, |acc, &c| (acc << 1) | u32::from(c < 0));
        assert_eq!(word, 0o1440);
    }

    #[test]
    fn matches_delay_formulation() {
        for prn in 1..=32u8 {
            let code = generate_ca_code(prn).unwrap();
            assert_eq!(code.chips(), &delay_oracle(prn as usize)[..], "PRN {prn}");
        }
    }

    #[test]
    fn balance_and_autocorrelation() {
        let code = generate_ca_code(19).unwrap();
        let minus = code.chips().iter().filter(|&&c| c < 0).count();
        assert_eq!(minus.max(CODE_LENGTH - minus), 512);
        assert_eq!(code.circular_correlation(&code, 0), 1023);
        for lag in 1..CODE_LENGTH {
            assert!(code.circular_correlation(&code, lag).abs() <= 65);
        }
    }

    #[test]
    fn prn_range_checked() {
        assert!(generate_ca_code(0).is_err());
        assert!(generate_ca_code(33).is_err());
    }
}
