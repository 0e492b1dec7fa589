//! In-place single-axis transforms of tensors with N four-valued axes,
//! stored flat with axis q's digit in bits 2q..2q+1 of the index.  These are
//! the workhorse of the Pauli-moment tensor, the joint outcome distribution
//! and the dual-frame (counts → moments) tables.

use num_complex::Complex64;

/// out[..., t, ...] = Σ_s m[t][s]·in[..., s, ...] along `axis`.
pub(crate) fn transform_axis_f64(data: &mut [f64], axis: usize, m: &[[f64; 4]; 4]) {
    let stride = 1usize << (2 * axis);
    let block = stride << 2;
    let mut base = 0;
    while base < data.len() {
        for low in base..base + stride {
            let i = [low, low + stride, low + 2 * stride, low + 3 * stride];
            let v = [data[i[0]], data[i[1]], data[i[2]], data[i[3]]];
            for t in 0..4 {
                data[i[t]] = m[t][0] * v[0] + m[t][1] * v[1] + m[t][2] * v[2] + m[t][3] * v[3];
            }
        }
        base += block;
    }
}

pub(crate) fn transform_axis_c64(data: &mut [Complex64], axis: usize, m: &[[Complex64; 4]; 4]) {
    let stride = 1usize << (2 * axis);
    let block = stride << 2;
    let mut base = 0;
    while base < data.len() {
        for low in base..base + stride {
            let i = [low, low + stride, low + 2 * stride, low + 3 * stride];
            let v = [data[i[0]], data[i[1]], data[i[2]], data[i[3]]];
            for t in 0..4 {
                data[i[t]] = m[t][0] * v[0] + m[t][1] * v[1] + m[t][2] * v[2] + m[t][3] * v[3];
            }
        }
        base += block;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_transform_matches_naive() {
        // two axes, transform axis 1 by an arbitrary matrix
        let m = [
            [1.0, 2.0, 0.0, -1.0],
            [0.5, 0.0, 1.0, 0.0],
            [0.0, 1.0, 1.0, 1.0],
            [2.0, 0.0, 0.0, 3.0],
        ];
        let mut data: Vec<f64> = (0..16).map(|i| (i as f64) * 0.25 - 1.0).collect();
        let orig = data.clone();
        transform_axis_f64(&mut data, 1, &m);
        for d0 in 0..4 {
            for t in 0..4 {
                let want: f64 = (0..4).map(|s| m[t][s] * orig[d0 + (s << 2)]).sum();
                assert!((data[d0 + (t << 2)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let mut m = [[0.0; 4]; 4];
        for k in 0..4 {
            m[k][k] = 1.0;
        }
        let mut data: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        let orig = data.clone();
        for axis in 0..3 {
            transform_axis_f64(&mut data, axis, &m);
        }
        assert_eq!(data, orig);
    }
}
