//! Deterministic maximizers shared by the exponent computations.
//!
//! All exponent curves reduce to maximizing smooth scalar objectives over an
//! interval, a triangle `0 <= s <= rho <= 1`, or a half-open strip with an
//! unbounded coordinate. The optimizers here are deliberately simple and
//! reproducible: dense grids to localize, golden-section to refine, doubling
//! caps with explicit boundary flags for unbounded coordinates, and a
//! projected-gradient ascent on the probability simplex for input
//! distributions. Joint concavity is never assumed.

/// Inverse golden ratio, the interior split used by golden-section search.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a one-dimensional maximization over a closed interval.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMax {
    pub arg: f64,
    pub value: f64,
    /// The maximizer landed on (or within one grid cell of) the upper edge.
    pub at_upper: bool,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Runs until the bracket is narrower than `tol` (or 300 shrink steps).
/// On multimodal inputs this still returns a local maximum inside the
/// starting bracket, which is why callers localize with a grid first.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> ScalarMax {
    debug_assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // Pick the best of the bracket midpoint and the two interior probes.
    let mid = 0.5 * (a + b);
    let fmid = f(mid);
    let (arg, value) = [(mid, fmid), (c, fc), (d, fd)]
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    ScalarMax {
        arg,
        value,
        at_upper: hi - arg <= tol.max(1e-12) * (1.0 + hi.abs()),
    }
}

/// Dense grid scan followed by golden-section refinement in the best cell.
///
/// `n` is the number of grid intervals (so `n + 1` evaluations); the refined
/// search runs on the two cells surrounding the best grid point.
pub fn grid_golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> ScalarMax {
    debug_assert!(n >= 2);
    if hi <= lo {
        let value = f(lo);
        return ScalarMax {
            arg: lo,
            value,
            at_upper: true,
        };
    }
    let step = (hi - lo) / n as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=n {
        let v = f(lo + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = golden_max(&f, a, b, tol);
    let (arg, value) = if refined.value >= best_v {
        (refined.arg, refined.value)
    } else {
        (lo + step * best_i as f64, best_v)
    };
    ScalarMax {
        arg,
        value,
        at_upper: hi - arg <= (hi - lo) * 1e-6 + tol,
    }
}

/// Maximize `f` over `[lo, cap]` where the true domain is `[lo, infinity)`.
///
/// Starts with `cap = cap0` and doubles it (up to `cap_max`) while the
/// maximizer keeps landing on the cap; `at_cap` reports whether the final
/// optimum is still pinned there, meaning the returned value is only a lower
/// estimate of the supremum.
pub fn cap_doubling_max(
    f: impl Fn(f64) -> f64,
    lo: f64,
    cap0: f64,
    cap_max: f64,
    n: usize,
    tol: f64,
) -> ScalarMax {
    let mut cap = cap0;
    loop {
        let m = grid_golden_max(&f, lo, cap, n, tol);
        let pinned = m.arg >= 0.999 * cap;
        if !pinned || cap >= cap_max {
            return ScalarMax {
                arg: m.arg,
                value: m.value,
                at_upper: pinned,
            };
        }
        cap *= 2.0;
    }
}

/// Result of a two-dimensional maximization over an `(s, rho)` region.
#[derive(Debug, Clone, Copy)]
pub struct PlaneMax {
    pub s: f64,
    pub rho: f64,
    pub value: f64,
    /// The rho coordinate finished pinned at the upper end of its interval.
    pub rho_at_upper: bool,
}

/// Maximize `f(s, rho)` over a region described by per-coordinate intervals.
///
/// The region is `{(s, rho) : s in [s_lo, s_hi], rho in rho_interval(s)}`
/// with the inverse map `s_interval(rho)` used during coordinate refinement
/// (for the triangle `s <= rho <= 1` these are `(s, 1)` and `(0, rho)`).
///
/// Strategy: scan `s_grid x n_rho` uniformly-in-rho points, then alternate
/// golden-section passes in rho and s from the best cell. The objective is
/// not assumed jointly concave; the grid provides global localization and
/// the refinement only polishes.
pub fn plane_max(
    f: impl Fn(f64, f64) -> f64,
    s_grid: &[f64],
    rho_interval: impl Fn(f64) -> (f64, f64),
    s_interval: impl Fn(f64) -> (f64, f64),
    n_rho: usize,
    refine_rounds: usize,
    tol: f64,
) -> PlaneMax {
    let mut best = PlaneMax {
        s: f64::NAN,
        rho: f64::NAN,
        value: f64::NEG_INFINITY,
        rho_at_upper: false,
    };
    for &s in s_grid {
        let (rlo, rhi) = rho_interval(s);
        if rhi < rlo {
            continue;
        }
        if rhi == rlo {
            let v = f(s, rlo);
            if v > best.value {
                best = PlaneMax {
                    s,
                    rho: rlo,
                    value: v,
                    rho_at_upper: true,
                };
            }
            continue;
        }
        let step = (rhi - rlo) / n_rho as f64;
        for i in 0..=n_rho {
            let rho = rlo + step * i as f64;
            if rho <= 0.0 {
                continue;
            }
            let v = f(s, rho);
            if v > best.value {
                best = PlaneMax {
                    s,
                    rho,
                    value: v,
                    rho_at_upper: false,
                };
            }
        }
        // Log-spaced sweep of the same interval: peaks can sit at rho within
        // a small multiple of rlo (near-diagonal ridges), far below the
        // uniform step when the interval spans decades.
        if rlo > 0.0 && rhi > 4.0 * rlo {
            let ratio = (rhi / rlo).ln();
            for i in 0..=n_rho {
                let rho = rlo * (ratio * i as f64 / n_rho as f64).exp();
                let v = f(s, rho);
                if v > best.value {
                    best = PlaneMax {
                        s,
                        rho,
                        value: v,
                        rho_at_upper: false,
                    };
                }
            }
        }
    }
    if !best.value.is_finite() {
        return best;
    }
    let (mut s, mut rho, mut value) = (best.s, best.rho, best.value);
    let mut rho_at_upper = false;
    for _ in 0..refine_rounds {
        let (rlo, rhi) = rho_interval(s);
        let m_rho = golden_max(|r| f(s, r), rlo.max(1e-300), rhi, tol);
        rho = m_rho.arg;
        rho_at_upper = m_rho.at_upper;
        let (slo, shi) = s_interval(rho);
        let m_s = golden_max(|ss| f(ss, rho), slo, shi, tol);
        s = m_s.arg;
        if (m_s.value - value).abs() <= tol.max(1e-14) * (1.0 + value.abs()) {
            value = m_s.value.max(value);
            break;
        }
        value = m_s.value;
    }
    if value < best.value {
        s = best.s;
        rho = best.rho;
        value = best.value;
        rho_at_upper = best.rho_at_upper;
    }
    // Pattern-search polish: the coordinate passes stall on diagonal ridges
    // (the maximizer of these objectives often tracks s ~ rho), so finish
    // with compass-plus-diagonal steps on a halving scale. Steps landing
    // outside the region are rejected, never projected.
    let feasible = |cs: f64, cr: f64| {
        if !(cr > 0.0) || !cs.is_finite() || !cr.is_finite() {
            return false;
        }
        let (rlo, rhi) = rho_interval(cs);
        if !(cr >= rlo && cr <= rhi) {
            return false;
        }
        let (slo, shi) = s_interval(cr);
        cs >= slo && cs <= shi
    };
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let mut h = 0.25 * (1.0 + s.abs().max(rho.abs()));
    let mut budget = 8000usize;
    while h > 1e-11 && budget > 0 {
        let mut moved = false;
        for (ds, dr) in DIRS {
            let (cs, cr) = (s + ds * h, rho + dr * h);
            if !feasible(cs, cr) {
                continue;
            }
            budget -= 1;
            let v = f(cs, cr);
            if v > value {
                s = cs;
                rho = cr;
                value = v;
                moved = true;
            }
            if budget == 0 {
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    let (_, rhi_final) = rho_interval(s);
    rho_at_upper = rho_at_upper || rhi_final - rho <= tol.max(1e-12) * (1.0 + rhi_final.abs());
    PlaneMax {
        s,
        rho,
        value,
        rho_at_upper,
    }
}

/// A union of a linear grid on `[0, 1]` and a log-spaced grid reaching down
/// to `s_min`, sorted and deduplicated. Exponent ratio forms need the log
/// tail because their maximizers can sit at very small `s`.
pub fn log_lin_grid(s_min: f64, n_log: usize, n_lin: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n_log + n_lin + 1);
    let (lo, hi) = (s_min.ln(), 0.0_f64);
    for i in 0..n_log {
        let t = i as f64 / (n_log - 1) as f64;
        g.push((lo + t * (hi - lo)).exp());
    }
    for i in 1..=n_lin {
        g.push(i as f64 / n_lin as f64);
    }
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    g
}

/// Result of maximizing over the probability simplex.
#[derive(Debug, Clone)]
pub struct SimplexMax {
    pub probs: Vec<f64>,
    pub value: f64,
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        for x in &mut p {
            *x /= s;
        }
    } else {
        p = vec![1.0 / n as f64; n];
    }
    p
}

/// Projected-gradient ascent of `f` over the probability simplex, restarted
/// from the uniform point plus `restarts` deterministic pseudo-random points.
///
/// The gradient is taken numerically (central differences, renormalized by
/// projection), with backtracking on the step size. The result is a certified
/// lower bound on the true maximum, not a global optimum.
pub fn simplex_ascent(
    f: impl Fn(&[f64]) -> f64,
    dim: usize,
    restarts: usize,
    tol: f64,
    seed: u64,
) -> SimplexMax {
    assert!(dim >= 1);
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / dim as f64; dim]];
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = || {
        // SplitMix64: a tiny deterministic generator for restart points.
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    for _ in 0..restarts {
        let raw: Vec<f64> = (0..dim)
            .map(|_| (next() >> 11) as f64 / (1u64 << 53) as f64 + 1e-6)
            .collect();
        starts.push(project_simplex(&raw));
    }

    let mut best = SimplexMax {
        probs: starts[0].clone(),
        value: f(&starts[0]),
    };
    let h = 1e-7;
    for start in starts {
        let mut p = start;
        let mut fp = f(&p);
        let mut step = 0.5;
        for _ in 0..500 {
            // Central-difference gradient along each coordinate, projected back.
            let mut grad = vec![0.0; dim];
            for i in 0..dim {
                let mut up = p.clone();
                let mut dn = p.clone();
                up[i] += h;
                dn[i] = (dn[i] - h).max(0.0);
                grad[i] = (f(&project_simplex(&up)) - f(&project_simplex(&dn))) / (2.0 * h);
            }
            let mut improved = false;
            while step > 1e-12 {
                let trial: Vec<f64> = p.iter().zip(&grad).map(|(&x, &g)| x + step * g).collect();
                let trial = project_simplex(&trial);
                let ft = f(&trial);
                if ft > fp + 1e-16 {
                    p = trial;
                    fp = ft;
                    improved = true;
                    step *= 1.6;
                    break;
                }
                step *= 0.5;
            }
            if !improved || step <= tol * tol {
                break;
            }
        }
        if fp > best.value {
            best = SimplexMax { probs: p, value: fp };
        }
    }
    best
}
