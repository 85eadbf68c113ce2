//! Shortest Reeds-Shepp paths for a car that drives forward and backward.
//!
//! Formulas follow the classic closed-form solution for the CSC, CCC, CCCC,
//! CCSC and CCSCC families, each evaluated under the time-flip, reflection
//! and backwards symmetries. Lengths are in units of the turning radius.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

const ZERO: f64 = 1e-9;
/// Candidates whose lengths differ by less than this are considered tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Segment {
    Left,
    Right,
    Straight,
}

impl Segment {
    fn letter(self) -> char {
        match self {
            Segment::Left => 'L',
            Segment::Right => 'R',
            Segment::Straight => 'S',
        }
    }
}

use Segment::{Left as L, Right as R, Straight as S};

/// A word of signed segment lengths, normalized by the turning radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RsPath {
    pub segments: Vec<(Segment, f64)>,
}

impl RsPath {
    fn new(kinds: &[Segment], lengths: &[f64]) -> Self {
        Self {
            segments: kinds.iter().copied().zip(lengths.iter().copied()).collect(),
        }
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|(_, l)| l.abs()).sum()
    }

    /// Word label such as `L+S+R-`, used to order tied candidates.
    pub fn label(&self) -> String {
        self.segments
            .iter()
            .flat_map(|(k, l)| [k.letter(), if *l < 0.0 { '-' } else { '+' }])
            .collect()
    }

    /// Pose after travelling `s` (normalized arc length) from the origin facing `yaw`.
    pub fn pose_at(&self, yaw: f64, s: f64) -> (f64, f64, f64) {
        let (mut x, mut y, mut phi) = (0.0, 0.0, yaw);
        let mut rest = s;
        for &(kind, len) in &self.segments {
            if rest <= 0.0 {
                break;
            }
            let v = if len < 0.0 {
                let v = (-rest).max(len);
                rest += v;
                v
            } else {
                let v = rest.min(len);
                rest -= v;
                v
            };
            match kind {
                Segment::Left => {
                    x += (phi + v).sin() - phi.sin();
                    y += -(phi + v).cos() + phi.cos();
                    phi += v;
                }
                Segment::Right => {
                    x += -(phi - v).sin() + phi.sin();
                    y += (phi - v).cos() - phi.cos();
                    phi -= v;
                }
                Segment::Straight => {
                    x += v * phi.cos();
                    y += v * phi.sin();
                }
            }
        }
        (x, y, phi)
    }
}

fn mod2pi(x: f64) -> f64 {
    let v = x % TAU;
    if v < -PI {
        v + TAU
    } else if v > PI {
        v - TAU
    } else {
        v
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 {
        mod2pi(t1 + PI)
    } else {
        mod2pi(t1)
    };
    (tau, mod2pi(tau - u + v - phi))
}

type Solution = Option<(f64, f64, f64)>;

fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Solution {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi(phi - t);
        if v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Solution {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2.0f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_l(x: f64, y: f64, phi: f64) -> Solution {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi(theta + 0.5 * u + PI);
        let v = mod2pi(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Solution {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Solution {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -0.5 * PI {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Solution {
    let (rho, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi(theta + r.atan2(-2.0));
        let v = mod2pi(phi - 0.5 * PI - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Solution {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi(t + 0.5 * PI - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Solution {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

/// Applies a formula under the four base symmetries: identity, time flip,
/// reflection, and both. `build(mirror, flip, (t, u, v))` assembles the word
/// from the already sign-adjusted lengths.
fn symmetric(
    out: &mut Vec<RsPath>,
    x: f64,
    y: f64,
    phi: f64,
    formula: fn(f64, f64, f64) -> Solution,
    build: impl Fn(bool, bool, (f64, f64, f64)) -> RsPath,
) {
    let cases = [
        (x, y, phi, false, false),
        (-x, y, -phi, false, true),
        (x, -y, -phi, true, false),
        (-x, -y, phi, true, true),
    ];
    for (cx, cy, cphi, mirror, flip) in cases {
        if let Some((t, u, v)) = formula(cx, cy, cphi) {
            let s = if flip { -1.0 } else { 1.0 };
            out.push(build(mirror, flip, (s * t, s * u, s * v)));
        }
    }
}

fn word(mirror: bool, kinds: &[Segment], lengths: &[f64]) -> RsPath {
    let kinds: Vec<Segment> = kinds
        .iter()
        .map(|k| match (mirror, k) {
            (true, Segment::Left) => Segment::Right,
            (true, Segment::Right) => Segment::Left,
            _ => *k,
        })
        .collect();
    RsPath::new(&kinds, lengths)
}

/// Fixed quarter turn of the CCSC and CCSCC families, reversed under time flip.
fn quarter(flip: bool) -> f64 {
    if flip {
        FRAC_PI_2
    } else {
        -FRAC_PI_2
    }
}

/// All candidate words between the origin and `(x, y, phi)`.
pub fn candidates(x: f64, y: f64, phi: f64) -> Vec<RsPath> {
    let mut out = Vec::new();
    let (xb, yb) = (x * phi.cos() + y * phi.sin(), x * phi.sin() - y * phi.cos());

    // CSC
    symmetric(&mut out, x, y, phi, lp_sp_lp, |m, _, (t, u, v)| {
        word(m, &[L, S, L], &[t, u, v])
    });
    symmetric(&mut out, x, y, phi, lp_sp_rp, |m, _, (t, u, v)| {
        word(m, &[L, S, R], &[t, u, v])
    });

    // CCC, forwards and backwards
    symmetric(&mut out, x, y, phi, lp_rm_l, |m, _, (t, u, v)| {
        word(m, &[L, R, L], &[t, u, v])
    });
    symmetric(&mut out, xb, yb, phi, lp_rm_l, |m, _, (t, u, v)| {
        word(m, &[L, R, L], &[v, u, t])
    });

    // CCCC
    symmetric(&mut out, x, y, phi, lp_rup_lum_rm, |m, _, (t, u, v)| {
        word(m, &[L, R, L, R], &[t, u, -u, v])
    });
    symmetric(&mut out, x, y, phi, lp_rum_lum_rp, |m, _, (t, u, v)| {
        word(m, &[L, R, L, R], &[t, u, u, v])
    });

    // CCSC, and CSCC through the backwards symmetry
    symmetric(&mut out, x, y, phi, lp_rm_sm_lm, |m, f, (t, u, v)| {
        word(m, &[L, R, S, L], &[t, quarter(f), u, v])
    });
    symmetric(&mut out, x, y, phi, lp_rm_sm_rm, |m, f, (t, u, v)| {
        word(m, &[L, R, S, R], &[t, quarter(f), u, v])
    });
    symmetric(&mut out, xb, yb, phi, lp_rm_sm_lm, |m, f, (t, u, v)| {
        word(m, &[L, S, R, L], &[v, u, quarter(f), t])
    });
    symmetric(&mut out, xb, yb, phi, lp_rm_sm_rm, |m, f, (t, u, v)| {
        word(m, &[R, S, R, L], &[v, u, quarter(f), t])
    });

    // CCSCC
    symmetric(&mut out, x, y, phi, lp_rm_s_lm_rp, |m, f, (t, u, v)| {
        word(m, &[L, R, S, L, R], &[t, quarter(f), u, quarter(f), v])
    });
    out
}

/// Shortest word, ties within `TIE_TOLERANCE` broken by label.
pub fn shortest(x: f64, y: f64, phi: f64) -> RsPath {
    let phi = mod2pi(phi);
    if phi == 0.0 && y == 0.0 {
        // a single straight segment, exact in floating point
        return RsPath::new(&[S], &[x]);
    }
    let mut cands = candidates(x, y, phi);
    cands.retain(|p| p.length().is_finite());
    let best = cands
        .iter()
        .map(RsPath::length)
        .fold(f64::INFINITY, f64::min);
    cands
        .into_iter()
        .filter(|p| p.length() <= best + TIE_TOLERANCE)
        .min_by(|a, b| a.label().cmp(&b.label()))
        .expect("the CSC family always has a solution")
}

/// Shortest path between two base poses, in world units.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePath {
    pub word: RsPath,
    pub radius: f64,
    pub start: (f64, f64, f64),
}

impl BasePath {
    pub fn between(from: (f64, f64, f64), to: (f64, f64, f64), radius: f64) -> Self {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let (s, c) = from.2.sin_cos();
        let x = (c * dx + s * dy) / radius;
        let y = (-s * dx + c * dy) / radius;
        let word = if from.2 == to.2 && (s * dx - c * dy) == 0.0 {
            // aligned and collinear: pure straight motion of the planar distance
            let d = dx.hypot(dy) / radius;
            RsPath::new(&[S], &[if x >= 0.0 { d } else { -d }])
        } else {
            shortest(x, y, to.2 - from.2)
        };
        Self {
            word,
            radius,
            start: from,
        }
    }

    pub fn length(&self) -> f64 {
        self.word.length() * self.radius
    }

    /// Pose at fraction `t` of the arc length.
    pub fn pose_at(&self, t: f64) -> (f64, f64, f64) {
        let (x, y, yaw) = self
            .word
            .pose_at(self.start.2, t.clamp(0.0, 1.0) * self.word.length());
        (
            self.start.0 + x * self.radius,
            self.start.1 + y * self.radius,
            yaw,
        )
    }
}
