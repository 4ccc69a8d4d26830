//! Box-constrained Powell conjugate-direction minimisation.

#[derive(Clone, Debug)]
pub struct PowellOptions {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Relative function tolerance for the outer loop.
    pub ftol: f64,
    /// Absolute tolerance of each line search, in parameter units.
    pub xtol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowellOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    /// Completed outer iterations.
    pub iterations: usize,
    /// Every function evaluation in call order.
    pub evaluations: Vec<(Vec<f64>, f64)>,
    /// False when `max_iters` ran out first.
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    log: Vec<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.log.push((x.to_vec(), v));
        v
    }
}

pub fn powell_minimize<F>(f: F, x0: &[f64], opts: &PowellOptions) -> PowellOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(opts.lower.len(), n);
    assert_eq!(opts.upper.len(), n);
    assert!(
        (0..n).all(|i| opts.lower[i] <= x0[i] && x0[i] <= opts.upper[i]),
        "start point outside bounds"
    );
    let mut f = Counted { f, log: Vec::new() };

    let mut x = x0.to_vec();
    let mut fx = f.call(&x);
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        let (x_start, f_start) = (x.clone(), fx);
        let mut biggest = (0usize, 0.0f64);
        for (i, d) in dirs.iter().enumerate() {
            let before = fx;
            (x, fx) = line_minimize(&mut f, &x, fx, d, opts);
            if before - fx > biggest.1 {
                biggest = (i, before - fx);
            }
        }

        if 2.0 * (f_start - fx).abs() <= opts.ftol * (f_start.abs() + fx.abs() + 1e-12) {
            converged = true;
            break;
        }

        let extrapolated: Vec<f64> = (0..n).map(|i| 2.0 * x[i] - x_start[i]).collect();
        let inside =
            (0..n).all(|i| opts.lower[i] <= extrapolated[i] && extrapolated[i] <= opts.upper[i]);
        if !inside {
            continue;
        }
        let f_ext = f.call(&extrapolated);
        if f_ext >= f_start {
            continue;
        }
        let (ibig, del) = biggest;
        let t = 2.0 * (f_start - 2.0 * fx + f_ext) * (f_start - fx - del).powi(2)
            - del * (f_start - f_ext).powi(2);
        if t < 0.0 {
            let new_dir: Vec<f64> = (0..n).map(|i| x[i] - x_start[i]).collect();
            (x, fx) = line_minimize(&mut f, &x, fx, &new_dir, opts);
            let last = n - 1;
            dirs[ibig] = dirs[last].clone();
            dirs[last] = new_dir;
        }
    }

    PowellOutcome {
        x,
        fx,
        iterations,
        evaluations: f.log,
        converged,
    }
}

/// Minimises along `d` from `x` inside the box. The returned point only
/// differs from `x` when it is strictly better.
fn line_minimize<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    opts: &PowellOptions,
) -> (Vec<f64>, f64) {
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return (x.to_vec(), fx);
    }
    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..x.len() {
        if d[i] != 0.0 {
            let a = (opts.lower[i] - x[i]) / d[i];
            let b = (opts.upper[i] - x[i]) / d[i];
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    let t_lo = t_lo.min(0.0);
    let t_hi = t_hi.max(0.0);
    if t_hi - t_lo <= 0.0 {
        return (x.to_vec(), fx);
    }
    let point = |t: f64| -> Vec<f64> {
        (0..x.len())
            .map(|i| (x[i] + t * d[i]).clamp(opts.lower[i], opts.upper[i]))
            .collect()
    };
    let (t, ft) = brent(
        |t| f.call(&point(t)),
        t_lo,
        t_hi,
        0.0,
        fx,
        opts.xtol / scale,
    );
    if ft < fx {
        (point(t), ft)
    } else {
        (x.to_vec(), fx)
    }
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's minimiser on `[a, b]` seeded with a known point `(x0, f0)`:
/// parabolic steps where they are trusted, golden-section steps otherwise.
fn brent(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    x0: f64,
    f0: f64,
    tol: f64,
) -> (f64, f64) {
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let tol1 = tol + 1e-10 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let u = u.clamp(a, b);
        let fu = f(u);
        if fu < fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(lo: f64, hi: f64) -> PowellOptions {
        PowellOptions {
            lower: vec![lo; 2],
            upper: vec![hi; 2],
            ftol: 1e-10,
            xtol: 1e-6,
            max_iters: 100,
        }
    }

    #[test]
    fn brent_on_parabola() {
        let (x, fx) = brent(|t| (t - 0.3).powi(2), -1.0, 2.0, 0.0, 0.09, 1e-8);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx < 1e-12);
    }

    #[test]
    fn brent_keeps_seed_on_flat() {
        let (x, fx) = brent(|_| 1.0, -1.0, 2.0, 0.0, 1.0, 1e-4);
        assert_eq!((x, fx), (0.0, 1.0));
    }

    #[test]
    fn coupled_quadratic() {
        let out = powell_minimize(
            |x| (x[0] - 2.0).powi(2) + (x[0] - x[1]).powi(2) * 3.0,
            &[0.5, 0.5],
            &opts(0.0, 4.0),
        );
        assert!(
            (out.x[0] - 2.0).abs() < 1e-4 && (out.x[1] - 2.0).abs() < 1e-4,
            "{:?}",
            out.x
        );
        assert!(out.converged);
    }

    #[test]
    fn active_bound() {
        let out = powell_minimize(
            |x| (x[0] + 1.0).powi(2) + x[1] * x[1],
            &[1.0, 1.0],
            &opts(0.2, 4.0),
        );
        assert!((out.x[0] - 0.2).abs() < 1e-5);
        assert!((out.x[1] - 0.2).abs() < 1e-5);
        assert!(out
            .evaluations
            .iter()
            .all(|(x, _)| x.iter().all(|v| (0.2..=4.0).contains(v))));
    }
}
