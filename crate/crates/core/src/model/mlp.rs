use ndarray::{Array1, Array2};
use rand::Rng;

/// Perceptron with one scalar input, one ReLU hidden layer and `out` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMlp {
    pub w1: Array1<f64>,
    pub b1: Array1<f64>,
    /// `hidden × out`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl ScalarMlp {
    /// Hidden weights and biases uniform in `[-1, 1]` (fan-in 1), so no unit
    /// starts on its ReLU kink; zero output layer.
    pub fn init(hidden: usize, out: usize, rng: &mut impl Rng) -> Self {
        ScalarMlp {
            w1: Array1::from_shape_simple_fn(hidden, || rng.gen_range(-1.0..1.0)),
            b1: Array1::from_shape_simple_fn(hidden, || rng.gen_range(-1.0..1.0)),
            w2: Array2::zeros((hidden, out)),
            b2: Array1::zeros(out),
        }
    }

    pub fn zeros(hidden: usize, out: usize) -> Self {
        ScalarMlp {
            w1: Array1::zeros(hidden),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, out)),
            b2: Array1::zeros(out),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    pub fn outputs(&self) -> usize {
        self.b2.len()
    }

    /// Writes hidden pre-activations into `pre` and outputs into `out`.
    pub fn forward(&self, x: f64, pre: &mut [f64], out: &mut [f64]) {
        out.copy_from_slice(self.b2.as_slice().expect("contiguous"));
        for (k, p) in pre.iter_mut().enumerate() {
            *p = self.w1[k] * x + self.b1[k];
            let a = p.max(0.0);
            if a > 0.0 {
                for (o, w) in out.iter_mut().zip(self.w2.row(k)) {
                    *o += a * w;
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut pre = vec![0.0; self.hidden()];
        let mut out = vec![0.0; self.outputs()];
        self.forward(x, &mut pre, &mut out);
        out
    }

    /// Accumulates into `grad` the gradient for one input, given the upstream
    /// gradient `dout` of the outputs.
    pub fn backward(&self, x: f64, pre: &[f64], dout: &[f64], grad: &mut ScalarMlp) {
        for (g, d) in grad.b2.iter_mut().zip(dout) {
            *g += d;
        }
        for (k, &p) in pre.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let mut dh = 0.0;
            for (j, &d) in dout.iter().enumerate() {
                grad.w2[[k, j]] += p * d;
                dh += self.w2[[k, j]] * d;
            }
            grad.w1[k] += dh * x;
            grad.b1[k] += dh;
        }
    }
}
