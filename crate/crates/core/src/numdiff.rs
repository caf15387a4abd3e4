//! Central finite-difference stencils and tensor-product partial derivatives.

use nalgebra::DMatrix;

/// Finite-difference weights at offset 0 for the `m`-th derivative on the given
/// integer offsets (Fornberg's recursion).
pub fn fornberg_weights(offsets: &[f64], m: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Fourth-order accurate central stencil for the `m`-th derivative as
/// `(offset, weight)` pairs with zero weights removed.
pub fn central_stencil(m: usize) -> Vec<(i32, f64)> {
    if m == 0 {
        return vec![(0, 1.0)];
    }
    let half = (m.div_ceil(2) + 1) as i32;
    let offsets: Vec<f64> = (-half..=half).map(f64::from).collect();
    fornberg_weights(&offsets, m)
        .into_iter()
        .zip(-half..=half)
        .filter(|(w, _)| w.abs() > 1e-14)
        .map(|(w, o)| (o, w))
        .collect()
}

/// All multi-indices of length `d` with total order at most `max_order`.
pub fn multi_indices(d: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0; d];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[pos] = a;
            rec(pos + 1, left - a, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, max_order, &mut current, &mut out);
    out.sort_by_key(|a| a.iter().sum::<usize>());
    out
}

/// Partial derivative `∂^alpha f(x)` of a vector-valued function, using
/// tensor products of fourth-order central stencils with step `h`.
pub fn partial(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], alpha: &[usize], h: f64) -> Vec<f64> {
    let stencils: Vec<Vec<(i32, f64)>> = alpha.iter().map(|&m| central_stencil(m)).collect();
    let mut acc: Option<Vec<f64>> = None;
    let mut idx = vec![0usize; x.len()];
    let mut point = x.to_vec();
    loop {
        let mut weight = 1.0;
        for (axis, s) in stencils.iter().enumerate() {
            let (o, w) = s[idx[axis]];
            point[axis] = x[axis] + o as f64 * h;
            weight *= w;
        }
        let v = f(&point);
        match acc.as_mut() {
            None => acc = Some(v.iter().map(|e| weight * e).collect()),
            Some(a) => a.iter_mut().zip(&v).for_each(|(a, e)| *a += weight * e),
        }
        let mut axis = 0;
        loop {
            if axis == x.len() {
                let order: usize = alpha.iter().sum();
                let scale = h.powi(order as i32);
                return acc.unwrap().into_iter().map(|a| a / scale).collect();
            }
            idx[axis] += 1;
            if idx[axis] < stencils[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Jacobian of `f: R^d -> R^m` by fourth-order central differences.
pub fn jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let stencil = central_stencil(1);
    let mut cols = Vec::with_capacity(d);
    let mut point = x.to_vec();
    for j in 0..d {
        let mut col: Option<Vec<f64>> = None;
        for &(o, w) in &stencil {
            point[j] = x[j] + o as f64 * h;
            let v = f(&point);
            match col.as_mut() {
                None => col = Some(v.iter().map(|e| w * e).collect()),
                Some(c) => c.iter_mut().zip(&v).for_each(|(c, e)| *c += w * e),
            }
        }
        point[j] = x[j];
        cols.push(col.unwrap().into_iter().map(|c| c / h).collect::<Vec<_>>());
    }
    let m = cols[0].len();
    DMatrix::from_fn(m, d, |i, j| cols[j][i])
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_stencils_are_reproduced() {
        let s1 = central_stencil(1);
        let expect = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
        for ((o, w), (eo, ew)) in s1.iter().zip(expect) {
            assert_eq!(*o, eo);
            assert!((w - ew).abs() < 1e-14);
        }
        let s2 = central_stencil(2);
        assert!((s2.iter().find(|p| p.0 == 0).unwrap().1 + 30.0 / 12.0).abs() < 1e-13);
        let s3 = central_stencil(3);
        assert!((s3.iter().find(|p| p.0 == -3).unwrap().1 - 0.125).abs() < 1e-13);
    }

    #[test]
    fn mixed_partial_of_polynomial() {
        let f = |x: &[f64]| vec![x[0].powi(3) * x[1].powi(2) + x[1]];
        let v = partial(&f, &[0.7, -1.3], &[2, 1], 1e-2);
        let exact = 6.0 * 0.7 * 2.0 * -1.3;
        assert!((v[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(1, 2).len(), 3);
        assert_eq!(multi_indices(3, 4).len(), 35);
    }
}
