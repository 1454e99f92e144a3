use super::{
    argmax, check_width, finite_loss, init_rng, softmax_cross_entropy, uniform_fan_in, Model,
};
use crate::data::Batch;
use crate::numerics::{GradVec, ParamVec};
use crate::{Error, Result, Scalar};

/// Fully connected network: tanh hidden layers, softmax cross-entropy output.
///
/// `sizes = [inputs, hidden.., classes]`. Each layer stores its `out × in`
/// weight matrix row by row, followed by its `out` biases.
#[derive(Clone, Debug)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    params: ParamVec<T>,
}

struct Layer {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Layer {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_out * self.fan_in
    }

    fn biases(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_out * self.fan_in;
        start..start + self.fan_out
    }
}

impl<T: Scalar> Mlp<T> {
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Precondition(format!(
                "layer sizes need an input and an output layer, all non-zero (got {sizes:?})"
            )));
        }
        if *sizes.last().unwrap() < 2 {
            return Err(Error::Precondition(
                "the output layer needs at least 2 classes".into(),
            ));
        }
        Ok(())
    }

    pub fn with_params(sizes: &[usize], params: ParamVec<T>) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let expected = Self::param_count(sizes);
        if params.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: params.len(),
            });
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::check_sizes(sizes)?;
        Self::with_params(sizes, ParamVec::zeros(Self::param_count(sizes)))
    }

    /// Each layer uniform in `[-1/√fan_in, 1/√fan_in]`, drawn layer by layer.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let mut rng = init_rng(seed);
        let mut values = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            values.extend(uniform_fan_in::<T>(&mut rng, w[1] * (w[0] + 1), w[0]));
        }
        Self::with_params(sizes, ParamVec::new(values)?)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layers(&self) -> Vec<Layer> {
        let mut offset = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let layer = Layer {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset += w[1] * (w[0] + 1);
                layer
            })
            .collect()
    }

    /// Activations of every layer: the input, each tanh hidden layer, then the logits.
    fn forward(&self, layers: &[Layer], x: &[T]) -> Vec<Vec<T>> {
        let p = self.params.as_slice();
        let mut activations = vec![x.to_vec()];
        for (k, layer) in layers.iter().enumerate() {
            let input = activations.last().unwrap();
            let w = &p[layer.weights()];
            let b = &p[layer.biases()];
            let is_output = k + 1 == layers.len();
            let out: Vec<T> = (0..layer.fan_out)
                .map(|o| {
                    let row = &w[o * layer.fan_in..(o + 1) * layer.fan_in];
                    let z = row
                        .iter()
                        .zip(input)
                        .fold(b[o], |acc, (&wi, &xi)| acc + wi * xi);
                    if is_output {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            activations.push(out);
        }
        activations
    }
}

impl<T: Scalar> Model<T> for Mlp<T> {
    fn params(&self) -> &ParamVec<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamVec<T> {
        &mut self.params
    }

    fn loss(&self, batch: &Batch<T>) -> Result<T> {
        check_width(batch, self.sizes[0])?;
        let layers = self.layers();
        let mut total = T::zero();
        for i in 0..batch.len() {
            let label = batch.class(i, self.classes())?;
            let acts = self.forward(&layers, batch.row(i));
            total = total + softmax_cross_entropy(acts.last().unwrap(), label).0;
        }
        finite_loss(total / T::from_usize(batch.len()).unwrap())
    }

    fn loss_and_grad(&self, batch: &Batch<T>) -> Result<(T, GradVec<T>)> {
        check_width(batch, self.sizes[0])?;
        let layers = self.layers();
        let p = self.params.as_slice();
        let mut grad = vec![T::zero(); p.len()];
        let mut total = T::zero();
        for i in 0..batch.len() {
            let label = batch.class(i, self.classes())?;
            let acts = self.forward(&layers, batch.row(i));
            let (loss, probs) = softmax_cross_entropy(acts.last().unwrap(), label);
            total = total + loss;

            // dL/dz at the output layer
            let mut delta: Vec<T> = probs;
            delta[label] = delta[label] - T::one();

            for (k, layer) in layers.iter().enumerate().rev() {
                let input = &acts[k];
                let (w_range, b_range) = (layer.weights(), layer.biases());
                for o in 0..layer.fan_out {
                    let base = w_range.start + o * layer.fan_in;
                    for (j, &a) in input.iter().enumerate() {
                        grad[base + j] = grad[base + j] + delta[o] * a;
                    }
                    grad[b_range.start + o] = grad[b_range.start + o] + delta[o];
                }
                if k == 0 {
                    break;
                }
                let w = &p[w_range];
                delta = (0..layer.fan_in)
                    .map(|j| {
                        let back = (0..layer.fan_out)
                            .fold(T::zero(), |acc, o| acc + w[o * layer.fan_in + j] * delta[o]);
                        back * (T::one() - input[j] * input[j])
                    })
                    .collect();
            }
        }
        let n = T::from_usize(batch.len()).unwrap();
        let grad = grad.into_iter().map(|g| g / n).collect();
        Ok((finite_loss(total / n)?, ParamVec::new(grad)?))
    }

    fn accuracy(&self, batch: &Batch<T>) -> Result<Option<T>> {
        check_width(batch, self.sizes[0])?;
        let layers = self.layers();
        let mut correct = 0usize;
        for i in 0..batch.len() {
            let acts = self.forward(&layers, batch.row(i));
            if argmax(acts.last().unwrap()) == batch.class(i, self.classes())? {
                correct += 1;
            }
        }
        Ok(Some(
            T::from_usize(correct).unwrap() / T::from_usize(batch.len()).unwrap(),
        ))
    }
}
