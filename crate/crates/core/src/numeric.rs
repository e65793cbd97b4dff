//! Scalar-generic numerical kernels: interpolation, quadrature, log-log and
//! linear regression, a damped Gauss-Newton (Levenberg-Marquardt) solver and
//! a two-column non-negative least-squares solver.
//!
//! Everything here is written against [`Scalar`] so the same code runs in
//! `f32` or `f64`; the domain models pin `f64`.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};

/// Floating-point scalar usable by the kernels (`f32` or `f64`).
pub trait Scalar: Float + FromPrimitive + Debug + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Linear interpolation on strictly increasing `xs`, clamped to the end
/// values outside the domain.
pub fn interp_clamped<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = upper_index(xs, x);
    lerp(xs[i - 1], ys[i - 1], xs[i], ys[i], x)
}

/// Linear interpolation returning `None` outside `[xs[0], xs[last]]`.
pub fn interp_within<T: Scalar>(xs: &[T], ys: &[T], x: T) -> Option<T> {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    if x == xs[xs.len() - 1] {
        return Some(ys[ys.len() - 1]);
    }
    let i = upper_index(xs, x);
    if i == 0 {
        return Some(ys[0]);
    }
    Some(lerp(xs[i - 1], ys[i - 1], xs[i], ys[i], x))
}

// first index with xs[i] > x
fn upper_index<T: Scalar>(xs: &[T], x: T) -> usize {
    xs.partition_point(|&v| v <= x)
}

fn lerp<T: Scalar>(x0: T, y0: T, x1: T, y1: T, x: T) -> T {
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}

/// Trapezoidal integral of `ys` over `xs`.
pub fn trapezoid<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    xs.windows(2)
        .zip(ys.windows(2))
        .fold(T::zero(), |acc, (x, y)| {
            acc + (x[1] - x[0]) * (y[0] + y[1]) / T::lit(2.0)
        })
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn linear_fit<T: Scalar>(xs: &[T], ys: &[T]) -> Result<(T, T)> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = ys.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (sxx, sxy) = xs
        .iter()
        .zip(ys)
        .fold((T::zero(), T::zero()), |(sxx, sxy), (&x, &y)| {
            let dx = x - mx;
            (sxx + dx * dx, sxy + dx * (y - my))
        });
    if sxx <= T::epsilon() * (mx * mx * n + T::min_positive_value()) {
        return Err(Error::DegenerateData("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Solves the dense system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, &v| m.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() <= scale * T::epsilon() * T::lit(16.0) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            for (x, &v) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *x = *x - f * v;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let s = (row + 1..n).fold(b[row], |s, k| s - a[row][k] * x[k]);
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Residuals and Jacobian (row per residual) at a parameter vector.
pub struct Evaluation<T> {
    pub residuals: Vec<T>,
    pub jacobian: Vec<Vec<T>>,
}

/// Stopping rules of the damped solver.
#[derive(Debug, Clone, Copy)]
pub struct LmSettings<T> {
    pub max_iterations: usize,
    /// Converged when every relative parameter change is below this.
    pub relative_step: T,
    pub initial_damping: T,
}

impl<T: Scalar> Default for LmSettings<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_step: T::lit(1e-10),
            initial_damping: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome<T> {
    pub params: Vec<T>,
    pub sse: T,
    pub iterations: usize,
}

/// Levenberg-Marquardt minimisation of the sum of squared residuals.
///
/// `eval` returns `None` for parameters outside the model's domain; such
/// trial steps are rejected and the damping increased.
pub fn levenberg_marquardt<T, F>(
    initial: Vec<T>,
    settings: LmSettings<T>,
    mut eval: F,
) -> Result<LmOutcome<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Option<Evaluation<T>>,
{
    let n = initial.len();
    let mut params = initial;
    let mut current = eval(&params).ok_or_else(|| Error::InvalidParameter {
        name: "initial guess",
        reason: "outside the model domain".into(),
    })?;
    let mut sse = sum_sq(&current.residuals);
    let mut damping = settings.initial_damping;
    let max_damping = T::lit(1e30);

    for iteration in 1..=settings.max_iterations {
        let (normal, gradient) = normal_equations(&current, n);
        loop {
            let mut system = normal.clone();
            for (i, row) in system.iter_mut().enumerate() {
                let d = if normal[i][i] > T::zero() {
                    normal[i][i]
                } else {
                    T::one()
                };
                row[i] = row[i] + damping * d;
            }
            let rhs: Vec<T> = gradient.iter().map(|&g| -g).collect();
            let trial = solve_dense(system, rhs).and_then(|step| {
                let candidate: Vec<T> = params.iter().zip(&step).map(|(&p, &s)| p + s).collect();
                let e = eval(&candidate)?;
                let s = sum_sq(&e.residuals);
                s.is_finite().then_some((step, candidate, e, s))
            });
            match trial {
                Some((step, candidate, e, trial_sse)) if trial_sse <= sse => {
                    let converged = step.iter().zip(&candidate).all(|(&s, &p)| {
                        s.abs() <= settings.relative_step * p.abs().max(T::min_positive_value())
                    });
                    params = candidate;
                    current = e;
                    sse = trial_sse;
                    damping = (damping / T::lit(10.0)).max(T::lit(1e-15));
                    if converged || sse == T::zero() {
                        return Ok(LmOutcome {
                            params,
                            sse,
                            iterations: iteration,
                        });
                    }
                    break;
                }
                _ => {
                    damping = damping * T::lit(10.0);
                    if damping > max_damping {
                        // no descent direction left: numerically at the minimum
                        return Ok(LmOutcome {
                            params,
                            sse,
                            iterations: iteration,
                        });
                    }
                }
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iterations,
    })
}

fn sum_sq<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &r| a + r * r)
}

fn normal_equations<T: Scalar>(e: &Evaluation<T>, n: usize) -> (Vec<Vec<T>>, Vec<T>) {
    let mut a = vec![vec![T::zero(); n]; n];
    let mut g = vec![T::zero(); n];
    for (row, &r) in e.jacobian.iter().zip(&e.residuals) {
        for i in 0..n {
            g[i] = g[i] + row[i] * r;
            for j in 0..n {
                a[i][j] = a[i][j] + row[i] * row[j];
            }
        }
    }
    (a, g)
}

/// Non-negative least squares for `y ≈ w0·a + w1·b`, `w ≥ 0`.
///
/// Active-set iteration over the two constraints; ties release the
/// lowest-index constraint first.
pub fn nnls_two<T: Scalar>(a: &[T], b: &[T], y: &[T]) -> Option<[T; 2]> {
    let dot = |u: &[T], v: &[T]| u.iter().zip(v).fold(T::zero(), |s, (&p, &q)| s + p * q);
    let aa = dot(a, a);
    let bb = dot(b, b);
    let ab = dot(a, b);
    let ay = dot(a, y);
    let by = dot(b, y);
    if aa <= T::zero() || bb <= T::zero() {
        return None;
    }
    let det = aa * bb - ab * ab;
    if det > T::zero() {
        let w0 = (ay * bb - by * ab) / det;
        let w1 = (by * aa - ay * ab) / det;
        if w0 >= T::zero() && w1 >= T::zero() {
            return Some([w0, w1]);
        }
    }
    // One constraint active: try each single-column solution and keep the
    // feasible one with the lower residual. Candidates are visited in index
    // order so ties resolve to column 0 being free.
    let candidates = [
        [(ay / aa).max(T::zero()), T::zero()],
        [T::zero(), (by / bb).max(T::zero())],
    ];
    let sse = |w: &[T; 2]| {
        y.iter()
            .zip(a.iter().zip(b))
            .fold(T::zero(), |s, (&yi, (&ai, &bi))| {
                let r = yi - w[0] * ai - w[1] * bi;
                s + r * r
            })
    };
    let mut best = candidates[0];
    let mut best_sse = sse(&best);
    for c in &candidates[1..] {
        let s = sse(c);
        if s < best_sse {
            best = *c;
            best_sse = s;
        }
    }
    Some(best)
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            let steps = T::from_usize(count - 1).unwrap();
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (l0 + (l1 - l0) * T::from_usize(i).unwrap() / steps).exp()
                    }
                })
                .collect()
        }
    }
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median<T: Scalar>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / T::lit(2.0)
    }
}
