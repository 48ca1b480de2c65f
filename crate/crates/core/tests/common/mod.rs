//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use dhnet_core::integrator::Trajectory;
use dhnet_core::network::Network;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load_fixture(name: &str) -> Network {
    Network::load(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Water property polynomials written out term by term.
pub mod water {
    pub fn temperature(e: f64) -> f64 {
        let x = e / 1e9;
        (59.2453 * x + 220.536) * x + 1.93729
    }

    pub fn density(e: f64) -> f64 {
        let x = e / 1e9;
        1e3 * ((-0.208084 * x + -0.025576) * x + 1.00280)
    }

    pub fn viscosity(e: f64) -> f64 {
        let x = e / 1e9;
        1e-6 * ((((11.9285 * x + -22.8079) * x + 17.6559) * x + -7.00355) * x + 1.42624)
    }

    /// Energy density at temperature `t` by bisection on `[0, 1] GJ/m³`.
    pub fn energy(t: f64) -> f64 {
        super::bisect(|e| temperature(e) - t, 0.0, 1e9)
    }
}

/// Root of an increasing or decreasing `f` on `[lo, hi]`, to the last bit.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Colebrook–White λ by bisection on `x = 1/√λ`.
pub fn colebrook_oracle(reynolds: f64, rel_roughness: f64) -> f64 {
    let x = bisect(|x| x + 2.0 * (2.52 * x / reynolds + rel_roughness / 3.71).log10(), 0.5, 50.0);
    1.0 / (x * x)
}

/// Smooth-pipe law `1/√λ = 2 log10(Re √λ) − 0.8` by bisection.
pub fn smooth_pipe_oracle(reynolds: f64) -> f64 {
    let x = bisect(|x| x - 2.0 * (reynolds / x).log10() + 0.8, 0.5, 50.0);
    1.0 / (x * x)
}

/// Darcy–Weisbach loss of a pipe at flow `q` and upwind energy `e`.
pub fn pressure_loss(length: f64, diameter: f64, roughness: f64, q: f64, e: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let sigma = std::f64::consts::PI * diameter * diameter / 4.0;
    let v = q / sigma;
    let reynolds = v.abs() * diameter / water::viscosity(e);
    let lambda = colebrook_oracle(reynolds, roughness / diameter);
    length * lambda * water::density(e) / (2.0 * diameter) * v * v.abs()
}

/// Minimizer of `f` on `[lo, hi]` by repeated grid refinement.
pub fn grid_search(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const POINTS: usize = 21;
    let mut best = lo;
    for _ in 0..40 {
        let h = (hi - lo) / (POINTS - 1) as f64;
        best = (0..POINTS)
            .map(|i| lo + i as f64 * h)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .expect("non-empty grid");
        lo = (best - h).max(lo);
        hi = (best + h).min(hi);
    }
    best
}

/// Largest distance of any cell or node value outside `[lo, hi]`, relative to `hi − lo`.
pub fn max_principle_excess(traj: &Trajectory, lo: f64, hi: f64) -> f64 {
    let outside = |v: f64| (lo - v).max(v - hi).max(0.0);
    traj.steps
        .iter()
        .flat_map(|s| s.e.iter().chain(&s.e_node))
        .map(|&v| outside(v))
        .fold(0.0, f64::max)
        / (hi - lo)
}

/// Prints one acceptance line, uncaptured, and returns whether it passed.
pub fn report(id: &str, passed: bool, detail: impl std::fmt::Display) -> bool {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{} {id} {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}
