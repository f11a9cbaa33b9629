use critpoints::critstats::{RateTarget, Side, Window};
use critpoints::wishart::Sampler;
use critpoints_py::{parse_sampler, parse_target, parse_window};

#[test]
fn windows() {
    assert_eq!(parse_window(None).unwrap(), Window::all());
    assert_eq!(parse_window(Some((1.0, f64::INFINITY))).unwrap(), Window::above(1.0).unwrap());
    assert!(parse_window(Some((2.0, 1.0))).is_err());
    assert!(parse_window(Some((-1.0, 1.0))).is_err());
}

#[test]
fn samplers() {
    assert_eq!(parse_sampler("dense").unwrap(), Sampler::Dense);
    assert_eq!(parse_sampler("tridiagonal").unwrap(), Sampler::Tridiagonal);
    assert!(parse_sampler("Dense").is_err());
}

#[test]
fn rate_targets() {
    assert_eq!(parse_target("total", None, "above", 0.5).unwrap(), RateTarget::Total);
    assert_eq!(parse_target("fixed-k", Some(2), "below", 0.5).unwrap(), RateTarget::FixedK { k: 2, side: Side::Below });
    assert_eq!(parse_target("linear-gamma", None, "above", 0.25).unwrap(), RateTarget::LinearGamma { gamma: 0.25 });
    assert!(parse_target("fixed-k", None, "above", 0.5).is_err());
    assert!(parse_target("total", None, "sideways", 0.5).is_err());
    assert!(parse_target("nope", None, "above", 0.5).is_err());
}
