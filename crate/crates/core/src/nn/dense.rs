//! Fully-connected layer kernels for a single example.
//!
//! Weights are row-major with shape `(out_dim, in_dim)`, followed by
//! `out_dim` biases in the flat parameter layout.

/// `output[o] = bias[o] + sum_i weights[o][i] * input[i]`
pub fn forward(
    weights: &[f64],
    biases: &[f64],
    in_dim: usize,
    out_dim: usize,
    input: &[f64],
    output: &mut [f64],
) {
    debug_assert_eq!(weights.len(), in_dim * out_dim);
    debug_assert_eq!(biases.len(), out_dim);
    debug_assert_eq!(input.len(), in_dim);
    debug_assert_eq!(output.len(), out_dim);
    for o in 0..out_dim {
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        let mut acc = biases[o];
        for (w, x) in row.iter().zip(input) {
            acc += w * x;
        }
        output[o] = acc;
    }
}

/// Accumulates parameter gradients into `dweights`/`dbiases` and writes the
/// input gradient into `dinput` (overwriting it).
pub fn backward(
    weights: &[f64],
    in_dim: usize,
    out_dim: usize,
    input: &[f64],
    doutput: &[f64],
    dweights: &mut [f64],
    dbiases: &mut [f64],
    dinput: &mut [f64],
) {
    debug_assert_eq!(doutput.len(), out_dim);
    debug_assert_eq!(dinput.len(), in_dim);
    dinput.fill(0.0);
    for o in 0..out_dim {
        let g = doutput[o];
        dbiases[o] += g;
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        let drow = &mut dweights[o * in_dim..(o + 1) * in_dim];
        for i in 0..in_dim {
            drow[i] += g * input[i];
            dinput[i] += g * row[i];
        }
    }
}
