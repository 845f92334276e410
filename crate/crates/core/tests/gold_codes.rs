use gw_mmse_core::prn::{
    circular_correlation, generate_all, generate_gold_code, max_crosscorr_magnitude,
};
use gw_mmse_core::GoldCodeSpec;

const OCTAL: [&str; 32] = [
    "1440", "1620", "1710", "1744", "1133", "1455", "1131", "1454", "1626", "1504", "1642", "1750",
    "1764", "1772", "1775", "1776", "1156", "1467", "1633", "1715", "1746", "1763", "1063", "1706",
    "1743", "1761", "1770", "1774", "1127", "1453", "1625", "1712",
];

// G2 delay in chips for each PRN.
const G2_DELAY: [usize; 32] = [
    5, 6, 7, 8, 17, 18, 139, 140, 141, 251, 252, 254, 255, 256, 257, 258, 469, 470, 471, 472, 473,
    474, 509, 512, 513, 514, 515, 516, 859, 860, 861, 862,
];

/// Output bits of a 10-stage Fibonacci register started from all ones.
fn m_sequence(taps: &[usize]) -> Vec<u8> {
    let mut reg = [1u8; 10];
    (0..1023)
        .map(|_| {
            let out = reg[9];
            let fb = taps.iter().fold(0, |acc, &t| acc ^ reg[t - 1]);
            reg.rotate_right(1);
            reg[0] = fb;
            out
        })
        .collect()
}

#[test]
fn octal_table_all_prns() {
    let codes = generate_all(&GoldCodeSpec::gps_l1_ca()).unwrap();
    assert_eq!(codes.len(), 32);
    for (k, code) in codes.iter().enumerate() {
        assert_eq!(code.octal_digest(), OCTAL[k], "PRN {}", k + 1);
        assert_eq!(code.code_id(), Some(k as u32 + 1));
    }
}

#[test]
fn matches_delayed_g2_construction() {
    let g1 = m_sequence(&[3, 10]);
    let g2 = m_sequence(&[2, 3, 6, 8, 9, 10]);
    let spec = GoldCodeSpec::gps_l1_ca();
    for (k, &d) in G2_DELAY.iter().enumerate() {
        let code = generate_gold_code(&spec, k as u32 + 1).unwrap();
        let expected: Vec<u8> = (0..1023)
            .map(|i| g1[i] ^ g2[(i + 1023 - d) % 1023])
            .collect();
        assert_eq!(code.to_binary(), expected, "PRN {}", k + 1);
    }
}

fn family_bound(spec: &GoldCodeSpec) -> i32 {
    let codes = generate_all(spec).unwrap();
    let mut worst = 0;
    for (i, a) in codes.iter().enumerate() {
        for b in &codes[i..] {
            let p = circular_correlation(a, b).unwrap();
            let vals = p.values();
            let skip_peak = a.code_id() == b.code_id();
            let m = vals
                .iter()
                .enumerate()
                .filter(|&(t, _)| !(skip_peak && t == 0))
                .map(|(_, v)| v.abs())
                .max()
                .unwrap();
            worst = worst.max(m);
        }
    }
    worst
}

#[test]
fn toy_family_bounds() {
    let d5 = GoldCodeSpec::toy_degree5();
    let d6 = GoldCodeSpec::toy_degree6();
    assert_eq!(d5.period(), 31);
    assert_eq!(d6.period(), 63);
    assert_eq!(family_bound(&d5) as i64, max_crosscorr_magnitude(5));
    assert_eq!(family_bound(&d6) as i64, max_crosscorr_magnitude(6));
    assert_eq!(max_crosscorr_magnitude(5), 9);
    assert_eq!(max_crosscorr_magnitude(6), 17);
    assert_eq!(max_crosscorr_magnitude(10), 65);
}
