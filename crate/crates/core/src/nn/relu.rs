//! Elementwise ReLU. The gradient is the 0/1 indicator of a strictly
//! positive pre-activation (zero at exactly zero).

pub fn forward(input: &[f64], output: &mut [f64]) {
    debug_assert_eq!(input.len(), output.len());
    for (y, &x) in output.iter_mut().zip(input) {
        *y = if x > 0.0 { x } else { 0.0 };
    }
}

pub fn backward(input: &[f64], doutput: &[f64], dinput: &mut [f64]) {
    debug_assert_eq!(input.len(), doutput.len());
    debug_assert_eq!(input.len(), dinput.len());
    for i in 0..input.len() {
        dinput[i] = if input[i] > 0.0 { doutput[i] } else { 0.0 };
    }
}
