use homodyne_demo::{rotation_curve, trajectory_curve, trapping_curve, MAX_DEMO_ATOMS};

#[test]
fn rotation_matches_the_figure_value() {
    let c = rotation_curve(1667.0, 1.0).unwrap();
    assert_eq!(c.t().len(), c.y().len());
    assert!((c.y()[0] - 0.446684).abs() < 1e-6);
    assert!(c.summary().contains("0.2094"), "{}", c.summary());
    assert!(c.reference().is_empty());
}

#[test]
fn rotation_rejects_bad_input() {
    assert!(rotation_curve(f64::NAN, 1.0).is_err());
    assert!(rotation_curve(1.0, 0.0).is_err());
    assert!(rotation_curve(1.0, 100.0).is_err());
}

#[test]
fn trapping_distinguishes_the_regimes() {
    let trapped = trapping_curve(10.0, 0.0, 0.9).unwrap();
    assert!(trapped.summary().contains("0.99"), "{}", trapped.summary());
    let free = trapping_curve(10.0, 1.0, 0.9).unwrap();
    let mean: f64 = free.y().iter().sum::<f64>() / free.y().len() as f64;
    assert!(mean.abs() < 0.1);
    assert!(free.y().iter().all(|v| v.abs() <= 1.0 + 1e-9));
    assert!(trapping_curve(1.0, 0.0, 0.0).is_err());
}

#[test]
fn trajectory_is_seeded() {
    let a = trajectory_curve(6, 0.01, 5).unwrap();
    assert_eq!(a, trajectory_curve(6, 0.01, 5).unwrap());
    assert_ne!(a.y(), trajectory_curve(6, 0.01, 6).unwrap().y());
    assert_eq!(a.y().len(), a.reference().len());
    assert!(a.y().iter().all(|c| c.abs() <= 1.0));
    assert!(trajectory_curve(MAX_DEMO_ATOMS + 1, 0.01, 0).is_err());
    assert!(trajectory_curve(0, 0.01, 0).is_err());
}
