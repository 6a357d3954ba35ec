//! Dense linear algebra over a finite field, on raw element encodings.

use crate::finite_field::FqField;

pub type Mat = Vec<Vec<u32>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0; c]; r]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    m
}

pub fn transpose(m: &Mat) -> Mat {
    if m.is_empty() {
        return vec![];
    }
    let (r, c) = (m.len(), m[0].len());
    (0..c).map(|j| (0..r).map(|i| m[i][j]).collect()).collect()
}

pub fn mat_mul(k: &FqField, a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let inner = b.len();
    let c = if inner == 0 { 0 } else { b[0].len() };
    let mut out = zeros(n, c);
    for i in 0..n {
        for l in 0..inner {
            let x = a[i][l];
            if x == 0 {
                continue;
            }
            for j in 0..c {
                out[i][j] = k.add(out[i][j], k.mul(x, b[l][j]));
            }
        }
    }
    out
}

pub fn mat_vec(k: &FqField, a: &Mat, v: &[u32]) -> Vec<u32> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(0, |acc, (&x, &y)| k.add(acc, k.mul(x, y))))
        .collect()
}

pub fn dot(k: &FqField, a: &[u32], b: &[u32]) -> u32 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| k.add(acc, k.mul(x, y)))
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(k: &FqField, m: &mut Mat) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, pr);
        let inv = k.inv(m[r][c]).unwrap();
        for x in m[r].iter_mut() {
            *x = k.mul(*x, inv);
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    let t = k.mul(f, m[r][j]);
                    m[i][j] = k.sub(m[i][j], t);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(k: &FqField, m: &Mat) -> usize {
    let mut a = m.clone();
    rref(k, &mut a).len()
}

/// Basis of {x : m·x = 0}, with `ncols` unknowns.
pub fn kernel(k: &FqField, m: &Mat, ncols: usize) -> Vec<Vec<u32>> {
    let mut a = m.clone();
    let pivots = rref(k, &mut a);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u32; ncols];
        v[free] = 1;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = k.neg(a[r][free]);
        }
        basis.push(v);
    }
    basis
}

/// Some x with m·x = b.
pub fn solve(k: &FqField, m: &Mat, b: &[u32]) -> Option<Vec<u32>> {
    let ncols = if m.is_empty() { 0 } else { m[0].len() };
    let mut aug: Mat = m.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    let pivots = rref(k, &mut aug);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![0u32; ncols];
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[r][ncols];
    }
    Some(x)
}

pub fn det(k: &FqField, m: &Mat) -> u32 {
    let n = m.len();
    let mut a = m.clone();
    let mut d = 1u32;
    for c in 0..n {
        let Some(pr) = (c..n).find(|&i| a[i][c] != 0) else { return 0 };
        if pr != c {
            a.swap(pr, c);
            d = k.neg(d);
        }
        d = k.mul(d, a[c][c]);
        let inv = k.inv(a[c][c]).unwrap();
        for i in c + 1..n {
            if a[i][c] != 0 {
                let f = k.mul(a[i][c], inv);
                for j in c..n {
                    let t = k.mul(f, a[c][j]);
                    a[i][j] = k.sub(a[i][j], t);
                }
            }
        }
    }
    d
}

pub fn inverse(k: &FqField, m: &Mat) -> Option<Mat> {
    let n = m.len();
    let mut aug: Mat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u32::from(i == j)));
            r
        })
        .collect();
    let pivots = rref(k, &mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Vectors from `ambient` that extend a basis of span(sub) to span(sub ∪ ambient).
pub fn complement(k: &FqField, sub: &[Vec<u32>], ambient: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut acc: Vec<Vec<u32>> = sub.to_vec();
    let mut r = rank(k, &acc);
    let mut out = Vec::new();
    for v in ambient {
        acc.push(v.clone());
        let r2 = rank(k, &acc);
        if r2 > r {
            out.push(v.clone());
            r = r2;
        } else {
            acc.pop();
        }
    }
    out
}

/// Coordinates of v in the (independent) basis, if v lies in its span.
pub fn coords(k: &FqField, basis: &[Vec<u32>], v: &[u32]) -> Option<Vec<u32>> {
    if basis.is_empty() {
        return if v.iter().all(|&x| x == 0) { Some(vec![]) } else { None };
    }
    let m = transpose(&basis.to_vec());
    solve(k, &m, v)
}

pub fn in_span(k: &FqField, basis: &[Vec<u32>], v: &[u32]) -> bool {
    coords(k, basis, v).is_some()
}
