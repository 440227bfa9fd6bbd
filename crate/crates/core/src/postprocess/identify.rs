//! Sign and permutation conventions for the bilinear factors.

use nalgebra::{DMatrix, DVector};

use crate::sampler::state::HmtmState;

/// Column permutation and sign flips applied to one regime's factors:
/// new column `r` is `signs[r] * old column perm[r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMap {
    pub perm: Vec<usize>,
    pub signs: Vec<f64>,
}

impl ColumnMap {
    pub fn identity(rank: usize) -> Self {
        ColumnMap {
            perm: (0..rank).collect(),
            signs: vec![1.0; rank],
        }
    }

    pub fn apply_u(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, r| self.signs[r] * u[(i, self.perm[r])])
    }

    /// Generation rules are only permuted: flipping a column of `U` leaves
    /// `U diag(v) U^T` unchanged.
    pub fn apply_v_row(&self, v: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&p| v[p]).collect()
    }
}

/// Orders columns by descending `|v_avg|` (stable on ties) and flips each so
/// its largest-magnitude loading is positive. Applying the result twice is
/// the same as applying it once.
pub fn identification_map(u: &DMatrix<f64>, v_avg: &DVector<f64>) -> ColumnMap {
    let rank = u.ncols();
    let mut perm: Vec<usize> = (0..rank).collect();
    perm.sort_by(|&a, &b| v_avg[b].abs().total_cmp(&v_avg[a].abs()));
    let signs = perm.iter().map(|&p| sign_of_largest(u.column(p).iter().copied())).collect();
    ColumnMap { perm, signs }
}

fn sign_of_largest(xs: impl Iterator<Item = f64>) -> f64 {
    let mut best = 0.0f64;
    for x in xs {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Permutation and signs bringing the columns of `u` closest to `reference`
/// (maximum total absolute inner product). Exhaustive over permutations up to
/// rank 6, greedy beyond.
pub fn alignment_map(u: &DMatrix<f64>, reference: &DMatrix<f64>) -> ColumnMap {
    let rank = u.ncols();
    let cross = reference.transpose() * u;
    let perm = if rank <= 6 {
        let mut best = (f64::NEG_INFINITY, (0..rank).collect::<Vec<_>>());
        for_each_permutation(rank, &mut |p| {
            let score: f64 = (0..rank).map(|r| cross[(r, p[r])].abs()).sum();
            if score > best.0 {
                best = (score, p.to_vec());
            }
        });
        best.1
    } else {
        let mut used = vec![false; rank];
        (0..rank)
            .map(|r| {
                let pick = (0..rank)
                    .filter(|&c| !used[c])
                    .max_by(|&a, &b| cross[(r, a)].abs().total_cmp(&cross[(r, b)].abs()))
                    .unwrap();
                used[pick] = true;
                pick
            })
            .collect()
    };
    let signs = (0..rank)
        .map(|r| if cross[(r, perm[r])] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    ColumnMap { perm, signs }
}

fn for_each_permutation(n: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(k: usize, p: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            go(k + 1, p, f);
            p.swap(k, i);
        }
    }
    let mut p: Vec<usize> = (0..n).collect();
    go(0, &mut p, f);
}

/// Aligns every regime of `draw` to `reference`; the generation rule of
/// layer `t` follows the map of the regime it occupies in `draw`.
pub fn align_draw(draw: &HmtmState, reference: &[DMatrix<f64>]) -> HmtmState {
    let maps: Vec<ColumnMap> = draw
        .u
        .iter()
        .zip(reference)
        .map(|(u, r)| alignment_map(u, r))
        .collect();
    apply_maps(draw, &maps)
}

pub(crate) fn apply_maps(draw: &HmtmState, maps: &[ColumnMap]) -> HmtmState {
    let mut out = draw.clone();
    for (k, map) in maps.iter().enumerate() {
        out.u[k] = map.apply_u(&draw.u[k]);
        out.mu_u[k] = DVector::from_vec(map.apply_v_row(draw.mu_u[k].as_slice()))
            .component_mul(&DVector::from_column_slice(&map.signs));
        out.psi_u[k] = DVector::from_vec(map.apply_v_row(draw.psi_u[k].as_slice()));
        out.mu_v[k] = DVector::from_vec(map.apply_v_row(draw.mu_v[k].as_slice()));
        out.psi_v[k] = DVector::from_vec(map.apply_v_row(draw.psi_v[k].as_slice()));
    }
    for t in 0..draw.v.nrows() {
        let map = &maps[draw.path.states[t]];
        let row: Vec<f64> = draw.v.row(t).iter().copied().collect();
        for (r, x) in map.apply_v_row(&row).into_iter().enumerate() {
            out.v[(t, r)] = x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identification_is_idempotent() {
        let u = DMatrix::from_row_slice(3, 3, &[1.0, -4.0, 0.2, 2.0, 1.0, -0.9, -3.0, 0.5, 0.1]);
        let v = DVector::from_row_slice(&[0.5, -2.0, 1.0]);
        let map = identification_map(&u, &v);
        assert_eq!(map.perm, vec![1, 2, 0]);
        let u1 = map.apply_u(&u);
        let v1 = DVector::from_vec(map.apply_v_row(v.as_slice()));
        let again = identification_map(&u1, &v1);
        assert_eq!(again, ColumnMap::identity(3));
        assert_eq!(again.apply_u(&u1), u1);
        // largest loading positive in every column
        for c in u1.column_iter() {
            let m = c.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(m > 0.0);
        }
    }

    #[test]
    fn alignment_recovers_flip_and_swap() {
        let reference = DMatrix::from_row_slice(4, 2, &[1.0, 0.1, 0.9, -0.5, -1.0, 2.0, 0.2, 1.0]);
        let moved = DMatrix::from_fn(4, 2, |i, r| if r == 0 { reference[(i, 1)] } else { -reference[(i, 0)] });
        let map = alignment_map(&moved, &reference);
        assert_eq!(map.perm, vec![1, 0]);
        assert_eq!(map.apply_u(&moved), reference);
    }
}
