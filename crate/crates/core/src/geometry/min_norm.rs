//! Wolfe's minimum-norm-point algorithm, used to decide vertex-polytope
//! membership: `x` is in `conv(V)` iff the min-norm point of `conv(V - x)`
//! is zero.

use crate::scalar::{dot, Scalar};

const MAX_MAJOR: usize = 1000;

/// l-infinity norm of the minimum-norm point of `conv(vertices - x)`.
pub(super) fn hull_residual<T: Scalar>(vertices: &[Vec<T>], x: &[T]) -> T {
    let pts: Vec<Vec<T>> = vertices
        .iter()
        .map(|v| v.iter().zip(x).map(|(&a, &b)| a - b).collect())
        .collect();
    let y = min_norm_point(&pts);
    y.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

fn combine<T: Scalar>(pts: &[Vec<T>], idx: &[usize], w: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); pts[0].len()];
    for (&i, &wi) in idx.iter().zip(w) {
        for (yj, &pj) in y.iter_mut().zip(&pts[i]) {
            *yj += wi * pj;
        }
    }
    y
}

fn min_norm_point<T: Scalar>(pts: &[Vec<T>]) -> Vec<T> {
    let scale = pts.iter().map(|p| dot(p, p)).fold(T::zero(), T::max);
    let eps = T::of(1e-12);
    let start = (0..pts.len())
        .min_by(|&a, &b| dot(&pts[a], &pts[a]).partial_cmp(&dot(&pts[b], &pts[b])).unwrap())
        .unwrap();
    let mut corral = vec![start];
    let mut w = vec![T::one()];
    let mut y = pts[start].clone();

    for _ in 0..MAX_MAJOR {
        let yy = dot(&y, &y);
        if yy <= T::epsilon() * T::epsilon() * scale {
            break;
        }
        let (j, best) = (0..pts.len())
            .map(|j| (j, dot(&y, &pts[j])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if best >= yy - eps * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        w.push(T::zero());

        loop {
            let alpha = match affine_minimizer(pts, &corral) {
                Some(a) => a,
                None => {
                    corral.pop();
                    w.pop();
                    return y;
                }
            };
            if alpha.iter().all(|&a| a > eps) {
                w = alpha;
                break;
            }
            let mut theta = T::one();
            for (&wi, &ai) in w.iter().zip(&alpha) {
                if ai <= eps {
                    let denom = wi - ai;
                    if denom > T::zero() {
                        theta = theta.min(wi / denom);
                    }
                }
            }
            for (wi, &ai) in w.iter_mut().zip(&alpha) {
                *wi = theta * ai + (T::one() - theta) * *wi;
            }
            let mut k = 0;
            while k < corral.len() {
                if w[k] <= eps {
                    corral.remove(k);
                    w.remove(k);
                } else {
                    k += 1;
                }
            }
            if corral.len() == 1 {
                w = vec![T::one()];
                break;
            }
        }
        y = combine(pts, &corral, &w);
    }
    y
}

/// Minimizes `|sum a_i p_i|` subject to `sum a_i = 1` over the corral by
/// solving the bordered Gram system.
fn affine_minimizer<T: Scalar>(pts: &[Vec<T>], corral: &[usize]) -> Option<Vec<T>> {
    let m = corral.len();
    let n = m + 1;
    let mut a = vec![vec![T::zero(); n + 1]; n];
    for r in 0..m {
        for c in 0..m {
            a[r][c] = dot(&pts[corral[r]], &pts[corral[c]]);
        }
        a[r][m] = T::one();
        a[m][r] = T::one();
    }
    a[m][n] = T::one();
    let sol = solve_dense(a)?;
    Some(sol[..m].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>) -> Option<Vec<T>> {
    let n = a.len();
    let mag = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= T::of(1e-14) * mag {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..=n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = a[r][n];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull() {
        let sq = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        assert!(hull_residual(&sq, &[0.3, 0.7]) < 1e-12);
        let r = hull_residual(&sq, &[2.0, 0.5]);
        assert!((r - 1.0f64).abs() < 1e-12);
        let r = hull_residual(&sq, &[2.0, 2.0]);
        assert!((r - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn segment_in_3d() {
        let seg = vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]];
        assert!(hull_residual(&seg, &[0.5, 0.5, 0.5]) < 1e-12);
        assert!(hull_residual(&seg, &[0.5, 0.5, 0.6]) > 0.05);
    }
}
