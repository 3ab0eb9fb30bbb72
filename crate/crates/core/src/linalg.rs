//! Periodic banded solvers used by the descent and Newton stages.

use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub pivot_row: usize,
}

/// Solves a cyclic tridiagonal system by the Sherman-Morrison correction.
/// `sub[i]` multiplies `x[i-1]`, `sup[i]` multiplies `x[i+1]`, indices mod `N`.
pub fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3 && sub.len() == n && sup.len() == n && rhs.len() == n);
    let alpha = sub[0];
    let beta = sup[n - 1];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    let x = thomas(sub, &bb, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = beta;
    let z = thomas(sub, &bb, sup, &u);
    let fact = (x[0] + alpha * x[n - 1] / gamma) / (1.0 + z[0] + alpha * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i + 1] * next;
    }
    d
}

/// Riesz representative in `E_k` of the functional `v -> <g, v>_{L^2}`:
/// solves `(I - D2) s = g` componentwise on the periodic grid.
pub fn riesz_ek(g: &Trajectory) -> Trajectory {
    let n = g.len();
    let dim = g.dim();
    let h2 = g.grid().step().powi(2);
    let off = vec![-1.0 / h2; n];
    let diag = vec![1.0 + 2.0 / h2; n];
    let mut out = Trajectory::zeros(*g.grid(), dim);
    let mut rhs = vec![0.0; n];
    for c in 0..dim {
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = g.at(i)[c];
        }
        let s = solve_cyclic_tridiagonal(&off, &diag, &off, &rhs);
        for (i, v) in s.into_iter().enumerate() {
            out.at_mut(i)[c] = v;
        }
    }
    out
}

/// General band matrix with LU factorization by partial pivoting.
///
/// Row `r` stores columns `r - kl ..= r + ku + kl`; the extra `kl` columns
/// hold fill-in created by row interchanges.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        let off = c as isize - r as isize + self.kl as isize;
        debug_assert!(off >= 0 && (off as usize) < self.width, "({r}, {c}) outside band");
        r * self.width + off as usize
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r}, {c}) outside declared band"
        );
        let i = self.idx(r, c);
        self.data[i] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let off = c as isize - r as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width {
            0.0
        } else {
            self.data[r * self.width + off as usize]
        }
    }

    pub fn factor(mut self) -> Result<BandedLu, Singular> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let mut piv = vec![0usize; n];
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let mut p = i;
            let mut best = self.get(i, i).abs();
            for r in i + 1..=last_row {
                let v = self.get(r, i).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tiny {
                return Err(Singular { pivot_row: i });
            }
            piv[i] = p;
            let last_col = (i + kl + ku).min(n - 1);
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.idx(i, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(i, i);
            for r in i + 1..=last_row {
                let ir = self.idx(r, i);
                let m = self.data[ir] / pivot;
                self.data[ir] = m;
                if m != 0.0 {
                    for c in i + 1..=last_col {
                        let u = self.data[self.idx(i, c)];
                        let rc = self.idx(r, c);
                        self.data[rc] -= m * u;
                    }
                }
            }
        }
        Ok(BandedLu { a: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            b.swap(i, self.piv[i]);
            let bi = b[i];
            for (r, br) in b.iter_mut().enumerate().take((i + a.kl).min(n - 1) + 1).skip(i + 1) {
                *br -= a.data[a.idx(r, i)] * bi;
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + a.kl + a.ku).min(n - 1);
            let mut s = b[i];
            for (c, bc) in b.iter().enumerate().take(last_col + 1).skip(i + 1) {
                s -= a.data[a.idx(i, c)] * bc;
            }
            b[i] = s / a.data[a.idx(i, i)];
        }
    }
}

/// Node order `0, N-1, 1, N-2, ...` that turns ring neighbours into band
/// neighbours at distance at most two.
fn interleaved_order(n: usize) -> Vec<usize> {
    let mut pos = vec![0usize; n];
    let (mut lo, mut hi) = (0usize, n - 1);
    let mut p = 0;
    while lo <= hi {
        pos[lo] = p;
        p += 1;
        if hi != lo {
            pos[hi] = p;
            p += 1;
        }
        lo += 1;
        if hi == 0 {
            break;
        }
        hi -= 1;
    }
    pos
}

/// Solves the periodic block-tridiagonal system
/// `lower_i x_{i-1} + diag_i x_i + upper_i x_{i+1} = rhs_i` (indices mod `N`,
/// blocks row-major `dim x dim`).
pub fn solve_periodic_block_tridiagonal(
    dim: usize,
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, Singular> {
    let nb = dim * dim;
    let nodes = diag.len() / nb;
    assert!(nodes >= 3 && lower.len() == diag.len() && upper.len() == diag.len());
    assert_eq!(rhs.len(), nodes * dim);
    let pos = interleaved_order(nodes);
    let band = 3 * dim - 1;
    let mut m = BandMatrix::zeros(nodes * dim, band, band);
    for i in 0..nodes {
        let prev = (i + nodes - 1) % nodes;
        let next = (i + 1) % nodes;
        for (block, j) in [(&lower[i * nb..(i + 1) * nb], prev), (&diag[i * nb..(i + 1) * nb], i), (&upper[i * nb..(i + 1) * nb], next)] {
            for a in 0..dim {
                for b in 0..dim {
                    let v = block[a * dim + b];
                    if v != 0.0 {
                        m.add(pos[i] * dim + a, pos[j] * dim + b, v);
                    }
                }
            }
        }
    }
    let lu = m.factor()?;
    let mut b = vec![0.0; nodes * dim];
    for i in 0..nodes {
        for a in 0..dim {
            b[pos[i] * dim + a] = rhs[i * dim + a];
        }
    }
    lu.solve(&mut b);
    let mut x = vec![0.0; nodes * dim];
    for i in 0..nodes {
        for a in 0..dim {
            x[i * dim + a] = b[pos[i] * dim + a];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TimeGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_periodic(dim: usize, lower: &[f64], diag: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
        let nb = dim * dim;
        let nodes = diag.len() / nb;
        let size = nodes * dim;
        let mut a = vec![vec![0.0; size]; size];
        for i in 0..nodes {
            for (block, j) in [(lower, (i + nodes - 1) % nodes), (diag, i), (upper, (i + 1) % nodes)] {
                for r in 0..dim {
                    for c in 0..dim {
                        a[i * dim + r][j * dim + c] += block[i * nb + r * dim + c];
                    }
                }
            }
        }
        a
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn interleaving_is_a_permutation_with_short_ring_links() {
        for n in 3..40 {
            let pos = interleaved_order(n);
            let mut seen = pos.clone();
            seen.sort();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            for i in 0..n {
                let j = (i + 1) % n;
                assert!(pos[i].abs_diff(pos[j]) <= 2, "n = {n}, i = {i}");
            }
        }
    }

    #[test]
    fn block_solver_matches_dense_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(nodes, dim) in &[(3usize, 1usize), (4, 1), (7, 2), (10, 3), (33, 2)] {
            let nb = dim * dim;
            let gen = |rng: &mut ChaCha8Rng| (0..nodes * nb).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            let lower = gen(&mut rng);
            let upper = gen(&mut rng);
            let mut diag = gen(&mut rng);
            // indefinite but generically nonsingular; no diagonal dominance
            for i in 0..nodes {
                for a in 0..dim {
                    diag[i * nb + a * dim + a] += if a % 2 == 0 { 0.5 } else { -0.5 };
                }
            }
            let rhs: Vec<f64> = (0..nodes * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = solve_periodic_block_tridiagonal(dim, &lower, &diag, &upper, &rhs).unwrap();
            let dense = dense_periodic(dim, &lower, &diag, &upper);
            let r = matvec(&dense, &x);
            let err = r.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "nodes {nodes} dim {dim}: residual {err}");
        }
    }

    #[test]
    fn singular_system_is_detected() {
        // periodic second difference annihilates constants
        let n = 8;
        let lower = vec![1.0; n];
        let upper = vec![1.0; n];
        let diag = vec![-2.0; n];
        let rhs = vec![1.0; n];
        assert!(solve_periodic_block_tridiagonal(1, &lower, &diag, &upper, &rhs).is_err());
    }

    #[test]
    fn cyclic_tridiagonal_matches_dense() {
        let n = 9;
        let sub: Vec<f64> = (0..n).map(|i| 0.3 + 0.01 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.7 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + 0.1 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let r = sub[i] * x[(i + n - 1) % n] + diag[i] * x[i] + sup[i] * x[(i + 1) % n];
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn riesz_map_represents_the_l2_pairing() {
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let g = Trajectory::from_fn(grid, 2, |t, o| {
            o[0] = (t * 1.3).cos() + 0.2;
            o[1] = (-t * t).exp();
        })
        .unwrap();
        let v = Trajectory::from_fn(grid, 2, |t, o| {
            o[0] = (t * 0.5).sin();
            o[1] = t.cos();
        })
        .unwrap();
        let s = riesz_ek(&g);
        let lhs = s.inner_ek(&v).unwrap();
        let rhs = g.inner_l2(&v).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
    }
}
