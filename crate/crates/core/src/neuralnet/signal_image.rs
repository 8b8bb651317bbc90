//! Signal image: channels stacked in an order where every unordered channel
//! pair is adjacent at least once, followed by the centered magnitude of the
//! 2-D discrete Fourier transform.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::tensor::Tensor;
use crate::data::Matrix;
use crate::error::{Error, Result};

/// Greedy walk over the complete graph on `n` channels: always step to the
/// lowest-index neighbour over an uncovered edge; when stuck, jump to the
/// lowest-index channel that still has one.
pub fn channel_sequence(n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Infeasible(format!("signal image needs >= 2 channels, got {n}")));
    }
    let mut covered = vec![vec![false; n]; n];
    let mut remaining = n * (n - 1) / 2;
    let mut seq = vec![0];
    let mut cur = 0;
    while remaining > 0 {
        let next = (0..n).find(|&j| j != cur && !covered[cur][j]);
        match next {
            Some(j) => {
                covered[cur][j] = true;
                covered[j][cur] = true;
                remaining -= 1;
                seq.push(j);
                cur = j;
            }
            None => {
                let j = (0..n)
                    .find(|&j| (0..n).any(|k| k != j && !covered[j][k]))
                    .expect("an uncovered pair remains");
                seq.push(j);
                cur = j;
            }
        }
    }
    Ok(seq)
}

/// Magnitude of the unnormalized 2-D DFT of a row-major `rows x cols` array,
/// scaled by `1 / sqrt(rows * cols)`. Not shifted.
pub fn dft2_magnitude(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(cols);
    for row in buf.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(rows);
    let mut column = vec![Complex::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    buf.iter().map(|z| z.norm() * scale).collect()
}

/// Moves the zero frequency to the center (`floor(n / 2)` on each axis).
pub fn fftshift(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[((r + rows / 2) % rows) * cols + (c + cols / 2) % cols] = values[r * cols + c];
        }
    }
    out
}

/// `[time, sequence_len, 1]` tensor: column `j` is channel `sequence[j]`,
/// transformed as described in the module docs.
pub fn signal_image(data: &Matrix) -> Result<Tensor> {
    let seq = channel_sequence(data.cols())?;
    let rows = data.rows();
    let cols = seq.len();
    if rows == 0 {
        return Err(Error::InsufficientData("empty window".into()));
    }
    let mut stacked = vec![0.0; rows * cols];
    for t in 0..rows {
        for (j, &c) in seq.iter().enumerate() {
            stacked[t * cols + j] = data.get(t, c);
        }
    }
    let mag = dft2_magnitude(&stacked, rows, cols);
    Tensor::new(vec![rows, cols, 1], fftshift(&mag, rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn covers_all_pairs(seq: &[usize], n: usize) -> bool {
        let mut seen = vec![vec![false; n]; n];
        for w in seq.windows(2) {
            seen[w[0]][w[1]] = true;
            seen[w[1]][w[0]] = true;
        }
        (0..n).all(|i| (0..n).all(|j| i == j || seen[i][j]))
    }

    #[test]
    fn three_channels_make_a_cycle() {
        assert_eq!(channel_sequence(3).unwrap(), vec![0, 1, 2, 0]);
        assert!(channel_sequence(1).is_err());
    }

    #[test]
    fn pair_coverage_two_to_nine() {
        for n in 2..=9 {
            let seq = channel_sequence(n).unwrap();
            assert!(covers_all_pairs(&seq, n), "n = {n}: {seq:?}");
        }
    }

    #[test]
    fn zero_window_has_zero_spectrum() {
        let img = signal_image(&Matrix::zeros(16, 3)).unwrap();
        assert_eq!(img.shape, vec![16, 4, 1]);
        assert!(img.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conjugate_symmetry_of_real_input() {
        let mut rng = crate::rng::rng_for(3, &[]);
        let (rows, cols) = (12, 5);
        let values: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mag = dft2_magnitude(&values, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let mirror = ((rows - r) % rows) * cols + (cols - c) % cols;
                assert!((mag[r * cols + c] - mag[mirror]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dc_term_is_centered() {
        let img = signal_image(&Matrix::new(4, 2, vec![1.0; 8]).unwrap()).unwrap();
        // Two channels give the sequence [0, 1]; a 4 x 2 image of ones puts
        // all energy at DC, shifted to (2, 1).
        let cols = 2;
        let peak = img.values.iter().cloned().fold(0.0, f64::max);
        assert_eq!(img.values[2 * cols + 1], peak);
        assert!((peak - 8f64.sqrt()).abs() < 1e-12);
    }
}
