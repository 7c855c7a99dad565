//! Dense least squares by Householder QR with column pivoting.

/// Columns whose residual norm (after equilibration to unit length) falls
/// below this are treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// One coefficient per input column; dropped columns get 0.
    pub coef: Vec<f64>,
    pub rank: usize,
    /// Input columns removed as dependent, ascending.
    pub dropped: Vec<usize>,
}

/// Minimizes `||y - A b||` for column-major `a` (`m` rows, `q` columns).
///
/// Columns are scaled to unit norm, then pivoted greedily on the largest
/// remaining residual norm. Factorization stops once every remaining column
/// is within `tol` of the span of those already chosen.
pub fn lstsq(a: &[f64], m: usize, q: usize, y: &[f64], tol: f64) -> LeastSquares {
    assert_eq!(a.len(), m * q, "matrix shape");
    assert_eq!(y.len(), m, "response length");

    let mut cols: Vec<Vec<f64>> = (0..q).map(|j| a[j * m..(j + 1) * m].to_vec()).collect();
    let mut scale = vec![0.0; q];
    for (j, c) in cols.iter_mut().enumerate() {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        scale[j] = norm;
        if norm > 0.0 {
            c.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let mut perm: Vec<usize> = (0..q).collect();
    let mut b = y.to_vec();
    let mut rank = 0;

    for k in 0..m.min(q) {
        // Pick the column with the largest residual norm below row k.
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..q {
            if scale[perm[j]] == 0.0 {
                continue;
            }
            let nrm = cols[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        if best_norm <= tol {
            break;
        }
        cols.swap(k, best);
        perm.swap(k, best);

        // Householder reflector zeroing cols[k][k+1..].
        let alpha = {
            let x0 = cols[k][k];
            if x0 >= 0.0 {
                -best_norm
            } else {
                best_norm
            }
        };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            let apply = |target: &mut [f64]| {
                let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                for (t, vi) in target.iter_mut().zip(&v) {
                    *t -= f * vi;
                }
            };
            for col in cols.iter_mut().skip(k + 1) {
                apply(&mut col[k..]);
            }
            apply(&mut b[k..]);
        }
        cols[k][k] = alpha;
        for t in cols[k][k + 1..].iter_mut() {
            *t = 0.0;
        }
        rank = k + 1;
    }

    // Back substitution on the leading rank x rank block.
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = b[i];
        for (j, zj) in z.iter().enumerate().skip(i + 1) {
            s -= cols[j][i] * zj;
        }
        z[i] = s / cols[i][i];
    }
    let mut coef = vec![0.0; q];
    for (i, zi) in z.iter().enumerate() {
        coef[perm[i]] = zi / scale[perm[i]];
    }
    let mut dropped: Vec<usize> = perm[rank..].to_vec();
    dropped.sort_unstable();
    LeastSquares {
        coef,
        rank,
        dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_major(rows: &[Vec<f64>]) -> (Vec<f64>, usize, usize) {
        let m = rows.len();
        let q = rows[0].len();
        let mut a = vec![0.0; m * q];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a[j * m + i] = *v;
            }
        }
        (a, m, q)
    }

    #[test]
    fn exact_solution() {
        let rows = vec![
            vec![1.0, 0.0, 2.0],
            vec![1.0, 1.0, -1.0],
            vec![1.0, 2.0, 0.5],
            vec![1.0, 3.0, 4.0],
            vec![1.0, 4.0, -2.0],
        ];
        let beta = [0.5, -1.25, 3.0];
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect();
        let (a, m, q) = col_major(&rows);
        let ls = lstsq(&a, m, q, &y, RANK_TOL);
        assert_eq!(ls.rank, 3);
        for (c, b) in ls.coef.iter().zip(&beta) {
            assert!((c - b).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_columns_dropped() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let t = i as f64;
                vec![t, t, 1.0, 2.0 * t]
            })
            .collect();
        let y: Vec<f64> = (0..6).map(|i| 1.0 + 3.0 * i as f64).collect();
        let (a, m, q) = col_major(&rows);
        let ls = lstsq(&a, m, q, &y, RANK_TOL);
        assert_eq!(ls.rank, 2);
        assert_eq!(ls.dropped.len(), 2);
        // Fitted values still exact.
        for (r, yi) in rows.iter().zip(&y) {
            let fit: f64 = r.iter().zip(&ls.coef).map(|(a, b)| a * b).sum();
            assert!((fit - yi).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_system_interpolates() {
        let rows = vec![
            vec![1.0, 0.3, 0.1, 2.0, 5.0],
            vec![1.0, -0.4, 0.7, 1.0, 0.0],
            vec![1.0, 0.9, -0.2, 0.0, 1.0],
        ];
        let y = vec![1.0, 2.0, -1.0];
        let (a, m, q) = col_major(&rows);
        let ls = lstsq(&a, m, q, &y, RANK_TOL);
        assert_eq!(ls.rank, 3);
        for (r, yi) in rows.iter().zip(&y) {
            let fit: f64 = r.iter().zip(&ls.coef).map(|(a, b)| a * b).sum();
            assert!((fit - yi).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_column_dropped() {
        let rows = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]];
        let (a, m, q) = col_major(&rows);
        let ls = lstsq(&a, m, q, &[2.0, 4.0, 6.0], RANK_TOL);
        assert_eq!(ls.rank, 1);
        assert_eq!(ls.dropped, vec![1]);
        assert!((ls.coef[0] - 2.0).abs() < 1e-12);
    }
}
