use caputo_web::{kernel_pair, mode_decay, solve_config};

#[test]
fn solve_config_returns_nodes_then_values() {
    let ini =
        "[problem]\nalpha = 0.5\ntheta = 0.5\nT = 1\nn = 15\nM = 16\nu0 = sin(pi*x)\ngL = t\n";
    let out = solve_config(ini).unwrap();
    assert_eq!(out.len(), 34);
    assert_eq!(out[0], 0.0);
    assert_eq!(out[16], 1.0);
    assert!((out[17] - 1.0).abs() < 1e-12);
}

#[test]
fn mode_decay_tracks_the_closed_form() {
    let out = mode_decay(0.5, 31, 8).unwrap();
    assert_eq!(out.len(), 27);
    for row in out.chunks(3).skip(1) {
        assert!((row[1] - row[2]).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn kernel_pair_agrees() {
    let v = kernel_pair(1.3, 1.0, 2.0).unwrap();
    assert!((v[0] - v[1]).abs() < 1e-8);
}
