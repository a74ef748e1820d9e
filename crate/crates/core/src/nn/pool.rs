//! 2x2 max-pooling with stride 2, per example.
//!
//! Pooled dims are `floor(dim / 2)`; a trailing odd row or column is
//! dropped. The backward pass routes each window's incoming gradient to the
//! window's first maximal element in row-major order, which keeps gradients
//! bitwise reproducible under ties.

pub fn output_dims(in_h: usize, in_w: usize) -> (usize, usize) {
    (in_h / 2, in_w / 2)
}

pub fn forward(channels: usize, in_h: usize, in_w: usize, input: &[f64], output: &mut [f64]) {
    let (out_h, out_w) = output_dims(in_h, in_w);
    debug_assert_eq!(input.len(), channels * in_h * in_w);
    debug_assert_eq!(output.len(), channels * out_h * out_w);
    for c in 0..channels {
        let plane = &input[c * in_h * in_w..(c + 1) * in_h * in_w];
        for oy in 0..out_h {
            for ox in 0..out_w {
                let (idx, _) = window_argmax(plane, in_w, oy, ox);
                output[(c * out_h + oy) * out_w + ox] = plane[idx];
            }
        }
    }
}

pub fn backward(
    channels: usize,
    in_h: usize,
    in_w: usize,
    input: &[f64],
    doutput: &[f64],
    dinput: &mut [f64],
) {
    let (out_h, out_w) = output_dims(in_h, in_w);
    debug_assert_eq!(doutput.len(), channels * out_h * out_w);
    debug_assert_eq!(dinput.len(), channels * in_h * in_w);
    dinput.fill(0.0);
    for c in 0..channels {
        let plane = &input[c * in_h * in_w..(c + 1) * in_h * in_w];
        let dplane = &mut dinput[c * in_h * in_w..(c + 1) * in_h * in_w];
        for oy in 0..out_h {
            for ox in 0..out_w {
                let (idx, _) = window_argmax(plane, in_w, oy, ox);
                dplane[idx] += doutput[(c * out_h + oy) * out_w + ox];
            }
        }
    }
}

/// Index (within the plane) and value of the first maximum, scanning the
/// 2x2 window in row-major order.
#[inline]
fn window_argmax(plane: &[f64], in_w: usize, oy: usize, ox: usize) -> (usize, f64) {
    let base = (2 * oy) * in_w + 2 * ox;
    let candidates = [base, base + 1, base + in_w, base + in_w + 1];
    let mut best = candidates[0];
    for &idx in &candidates[1..] {
        if plane[idx] > plane[best] {
            best = idx;
        }
    }
    (best, plane[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_the_window_max() {
        let input = [1.0, 2.0, 3.0, 4.0];
        let mut output = [0.0];
        forward(1, 2, 2, &input, &mut output);
        assert_eq!(output, [4.0]);
    }

    #[test]
    fn backward_routes_to_argmax_only() {
        let input = [1.0, 2.0, 3.0, 4.0];
        let doutput = [7.0];
        let mut dinput = [9.0; 4];
        backward(1, 2, 2, &input, &doutput, &mut dinput);
        assert_eq!(dinput, [0.0, 0.0, 0.0, 7.0]);
    }

    #[test]
    fn ties_pick_the_first_in_row_major_order() {
        let input = [5.0, 5.0, 5.0, 5.0];
        let doutput = [1.0];
        let mut dinput = [0.0; 4];
        backward(1, 2, 2, &input, &doutput, &mut dinput);
        assert_eq!(dinput, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn odd_trailing_row_and_column_are_dropped() {
        // 3x3 plane: only the top-left 2x2 window survives.
        let input = [1.0, 2.0, 9.0, 4.0, 3.0, 9.0, 9.0, 9.0, 9.0];
        let mut output = [0.0];
        forward(1, 3, 3, &input, &mut output);
        assert_eq!(output, [4.0]);
    }
}
