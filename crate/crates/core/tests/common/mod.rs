//! Independent oracles: direct summation over coordinates, no shared code
//! with the transform or the bitset arithmetic.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use num_complex::Complex64;
use specdbl::group::{ElementSet, FiniteAbelianGroup, GroupElement};

pub const SLACK: f64 = 1e-9;

pub fn coords(g: &FiniteAbelianGroup, index: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(g.rank());
    let mut rest = index;
    for &n in g.orders() {
        out.push(rest % n);
        rest /= n;
    }
    out
}

pub fn index_of(g: &FiniteAbelianGroup, c: &[usize]) -> usize {
    let mut idx = 0;
    for (j, &n) in g.orders().iter().enumerate().rev() {
        idx = idx * n + c[j];
    }
    idx
}

/// `sum_{x in A} exp(2 pi i sum_j u_j x_j / n_j)`.
pub fn naive_coeff(g: &FiniteAbelianGroup, a: &[usize], gamma: usize) -> Complex64 {
    let u = coords(g, gamma);
    a.iter()
        .map(|&x| {
            let xc = coords(g, x);
            let phase: f64 = g
                .orders()
                .iter()
                .enumerate()
                .map(|(j, &n)| (u[j] * xc[j] % n) as f64 / n as f64)
                .sum();
            Complex64::from_polar(1.0, TAU * phase)
        })
        .sum()
}

pub fn naive_table(set: &ElementSet) -> Vec<Complex64> {
    let g = set.group();
    let a = set.indices();
    (0..g.size())
        .map(|gamma| naive_coeff(g, &a, gamma))
        .collect()
}

pub fn naive_spectrum(set: &ElementSet, eps: f64) -> BTreeSet<usize> {
    let n = set.len() as f64;
    naive_table(set)
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= eps * n - SLACK * n)
        .map(|(i, _)| i)
        .collect()
}

pub fn naive_add(g: &FiniteAbelianGroup, x: usize, y: usize, sign: i64) -> usize {
    let (a, b) = (coords(g, x), coords(g, y));
    let c: Vec<usize> = g
        .orders()
        .iter()
        .enumerate()
        .map(|(j, &n)| (a[j] as i64 + sign * b[j] as i64).rem_euclid(n as i64) as usize)
        .collect();
    index_of(g, &c)
}

pub fn naive_sumset(
    g: &FiniteAbelianGroup,
    s: &BTreeSet<usize>,
    t: &BTreeSet<usize>,
    sign: i64,
) -> BTreeSet<usize> {
    s.iter()
        .flat_map(|&x| t.iter().map(move |&y| (x, y)))
        .map(|(x, y)| naive_add(g, x, y, sign))
        .collect()
}

pub fn set_of(g: &FiniteAbelianGroup, s: &BTreeSet<usize>) -> ElementSet {
    ElementSet::from_indices(g, s.iter().copied()).unwrap()
}

pub fn elements(g: &FiniteAbelianGroup, idx: &[usize]) -> Vec<GroupElement> {
    idx.iter().map(|&i| GroupElement(coords(g, i))).collect()
}
