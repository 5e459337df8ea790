use huepath_core::colorspace::{delta_e_2000, LabColor};

fn load_pairs() -> Vec<(usize, LabColor, LabColor, f64)> {
    include_str!("fixtures/ciede2000_pairs.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
            (
                v[0] as usize,
                LabColor::new(v[1], v[2], v[3]),
                LabColor::new(v[4], v[5], v[6]),
                v[7],
            )
        })
        .collect()
}

#[test]
fn matches_all_published_verification_pairs() {
    let pairs = load_pairs();
    assert_eq!(pairs.len(), 34);
    for (id, x, y, expected) in pairs {
        let got = delta_e_2000(x, y);
        assert!((got - expected).abs() < 1e-4, "pair {id}: got {got:.6}, expected {expected}");
        let back = delta_e_2000(y, x);
        assert!((back - expected).abs() < 1e-4, "pair {id} reversed: got {back:.6}");
    }
}
