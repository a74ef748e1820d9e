//! 2D convolution kernels for a single example: stride 1, no padding
//! (valid convolution), square kernels.
//!
//! Input is `(in_channels, in_h, in_w)` row-major; output is
//! `(out_channels, in_h - k + 1, in_w - k + 1)`. Weights are
//! `(out_channels, in_channels, k, k)` row-major followed by `out_channels`
//! biases in the flat parameter layout.

pub fn output_dims(in_h: usize, in_w: usize, kernel: usize) -> (usize, usize) {
    (in_h - kernel + 1, in_w - kernel + 1)
}

pub fn forward(
    weights: &[f64],
    biases: &[f64],
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    in_h: usize,
    in_w: usize,
    input: &[f64],
    output: &mut [f64],
) {
    let (out_h, out_w) = output_dims(in_h, in_w, kernel);
    debug_assert_eq!(input.len(), in_channels * in_h * in_w);
    debug_assert_eq!(output.len(), out_channels * out_h * out_w);
    debug_assert_eq!(weights.len(), out_channels * in_channels * kernel * kernel);
    for oc in 0..out_channels {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut acc = biases[oc];
                for ic in 0..in_channels {
                    let plane = &input[ic * in_h * in_w..(ic + 1) * in_h * in_w];
                    let wbase = ((oc * in_channels) + ic) * kernel * kernel;
                    for ky in 0..kernel {
                        let irow = &plane[(oy + ky) * in_w + ox..];
                        let wrow = &weights[wbase + ky * kernel..wbase + (ky + 1) * kernel];
                        for kx in 0..kernel {
                            acc += wrow[kx] * irow[kx];
                        }
                    }
                }
                output[(oc * out_h + oy) * out_w + ox] = acc;
            }
        }
    }
}

/// Accumulates parameter gradients into `dweights`/`dbiases` and writes the
/// input gradient into `dinput` (overwriting it).
#[allow(clippy::too_many_arguments)]
pub fn backward(
    weights: &[f64],
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    in_h: usize,
    in_w: usize,
    input: &[f64],
    doutput: &[f64],
    dweights: &mut [f64],
    dbiases: &mut [f64],
    dinput: &mut [f64],
) {
    let (out_h, out_w) = output_dims(in_h, in_w, kernel);
    debug_assert_eq!(doutput.len(), out_channels * out_h * out_w);
    debug_assert_eq!(dinput.len(), in_channels * in_h * in_w);
    dinput.fill(0.0);
    for oc in 0..out_channels {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let g = doutput[(oc * out_h + oy) * out_w + ox];
                dbiases[oc] += g;
                for ic in 0..in_channels {
                    let pbase = ic * in_h * in_w;
                    let wbase = ((oc * in_channels) + ic) * kernel * kernel;
                    for ky in 0..kernel {
                        let ibase = pbase + (oy + ky) * in_w + ox;
                        for kx in 0..kernel {
                            dweights[wbase + ky * kernel + kx] += g * input[ibase + kx];
                            dinput[ibase + kx] += g * weights[wbase + ky * kernel + kx];
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_unit_kernel_is_identity() {
        let weights = [1.0];
        let biases = [0.0];
        let input = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut output = [0.0; 6];
        forward(&weights, &biases, 1, 1, 1, 2, 3, &input, &mut output);
        assert_eq!(output, input);
    }

    #[test]
    fn valid_convolution_dims_shrink_by_kernel_minus_one() {
        assert_eq!(output_dims(6, 6, 3), (4, 4));
        assert_eq!(output_dims(5, 7, 2), (4, 6));
    }

    #[test]
    fn forward_matches_hand_computation() {
        // 2x2 kernel [[1, 0], [0, -1]] over a 3x3 input, bias 0.5.
        let weights = [1.0, 0.0, 0.0, -1.0];
        let biases = [0.5];
        let input = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let mut output = [0.0; 4];
        forward(&weights, &biases, 1, 1, 2, 3, 3, &input, &mut output);
        // Each window: top-left - bottom-right + 0.5 = -4 + 0.5
        assert_eq!(output, [-3.5, -3.5, -3.5, -3.5]);
    }
}
