use super::{dot, Objective, OptimizerConfig};

pub(crate) struct Accepted {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
}

pub(crate) struct LineSearch {
    pub accepted: Option<Accepted>,
    pub evaluations: usize,
}

#[derive(Clone)]
struct Point {
    alpha: f64,
    f: f64,
    slope: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

impl Point {
    fn finite(&self) -> bool {
        self.f.is_finite() && self.slope.is_finite()
    }

    fn into_accepted(self) -> Accepted {
        Accepted {
            alpha: self.alpha,
            x: self.x,
            f: self.f,
            g: self.g,
        }
    }
}

struct Ctx<'a> {
    obj: &'a dyn Objective,
    x0: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    cfg: &'a OptimizerConfig,
    evaluations: usize,
}

impl Ctx<'_> {
    fn eval(&mut self, alpha: f64) -> Point {
        let x: Vec<f64> = self.x0.iter().zip(self.d).map(|(a, b)| a + alpha * b).collect();
        let (f, g) = self.obj.eval(&x);
        self.evaluations += 1;
        let slope = if f.is_finite() { dot(&g, self.d) } else { f64::NAN };
        Point { alpha, f, slope, x, g }
    }

    fn armijo_fails(&self, p: &Point) -> bool {
        !p.finite() || p.f > self.f0 + self.cfg.c1 * p.alpha * self.slope0
    }

    fn curvature_ok(&self, p: &Point) -> bool {
        p.slope.abs() <= -self.cfg.c2 * self.slope0
    }
}

/// Minimizer of the cubic matching values and slopes at `a` and `b`, or the
/// midpoint when it does not exist.
fn cubic(a: &Point, b: &Point) -> f64 {
    let mid = 0.5 * (a.alpha + b.alpha);
    if !a.finite() || !b.finite() {
        return mid;
    }
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.slope - a.slope + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    if t.is_finite() {
        t
    } else {
        mid
    }
}

/// Strong-Wolfe search along `d` (bracketing then zoom).
pub(crate) fn strong_wolfe(
    obj: &dyn Objective,
    x0: &[f64],
    f0: f64,
    slope0: f64,
    d: &[f64],
    alpha_init: f64,
    cfg: &OptimizerConfig,
) -> LineSearch {
    let mut ctx = Ctx {
        obj,
        x0,
        d,
        f0,
        slope0,
        cfg,
        evaluations: 0,
    };
    let origin = Point {
        alpha: 0.0,
        f: f0,
        slope: slope0,
        x: x0.to_vec(),
        g: Vec::new(),
    };
    let mut prev = origin;
    let mut alpha = alpha_init;
    let accepted = loop {
        if ctx.evaluations >= cfg.max_line_search {
            break None;
        }
        let p = ctx.eval(alpha);
        if ctx.armijo_fails(&p) || (prev.alpha > 0.0 && p.f >= prev.f) {
            break zoom(&mut ctx, prev, p);
        }
        if ctx.curvature_ok(&p) {
            break Some(p.into_accepted());
        }
        if p.slope >= 0.0 {
            break zoom(&mut ctx, p, prev);
        }
        prev = p;
        alpha *= 2.0;
    };
    LineSearch {
        accepted,
        evaluations: ctx.evaluations,
    }
}

fn zoom(ctx: &mut Ctx<'_>, mut lo: Point, mut hi: Point) -> Option<Accepted> {
    let dn = dot(ctx.d, ctx.d).sqrt();
    loop {
        let width = (hi.alpha - lo.alpha).abs();
        if ctx.evaluations >= ctx.cfg.max_line_search || width * dn <= 1e-15 * (1.0 + dot(ctx.x0, ctx.x0).sqrt()) {
            // `lo` always satisfies sufficient decrease; settle for it
            return (lo.alpha > 0.0 && lo.f < ctx.f0).then(|| lo.into_accepted());
        }
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let guard = 0.1 * (b - a);
        let trial = cubic(&lo, &hi).clamp(a + guard, b - guard);
        let p = ctx.eval(trial);
        if ctx.armijo_fails(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if ctx.curvature_ok(&p) {
                return Some(p.into_accepted());
            }
            if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
}
