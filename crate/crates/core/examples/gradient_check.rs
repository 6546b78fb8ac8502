//! Reverse-mode gradients of a small MLP against central differences.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use dib::diffcore::{Activation, Mlp, ParamStore, Rng, Tape, Tensor, Var};

fn main() -> dib::Result<()> {
    let mlp = Mlp::new("net", &[3, 8, 8, 1], Activation::Tanh, Activation::Identity);
    let mut store = ParamStore::new();
    let mut rng = Rng::new(1);
    mlp.init(&mut store, &mut rng, None);
    let x = Tensor::matrix(5, 3, (0..15).map(|_| rng.normal()).collect())?;
    let y = [1.0, 0.0, 1.0, 1.0, 0.0];

    let record = |tape: &mut Tape, s: &ParamStore| -> dib::Result<Var> {
        let input = tape.constant(x.clone());
        let z = mlp.forward(tape, s, input)?;
        Ok(tape.bce_with_logits(z, &y))
    };
    let value = |s: &ParamStore| -> dib::Result<f64> {
        let mut tape = Tape::new();
        let l = record(&mut tape, s)?;
        Ok(tape.value(l).item())
    };

    let mut tape = Tape::new();
    let l = record(&mut tape, &store)?;
    store.zero_grad();
    tape.backward(l, &mut store)?;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let paths: Vec<String> = store.paths().cloned().collect();
    for p in &paths {
        for j in 0..store.get(p)?.len() {
            let orig = store.get(p)?.data()[j];
            store.get_mut(p)?.data_mut()[j] = orig + h;
            let up = value(&store)?;
            store.get_mut(p)?.data_mut()[j] = orig - h;
            let down = value(&store)?;
            store.get_mut(p)?.data_mut()[j] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = store.grad(p)?.data()[j];
            worst = worst.max((an - fd).abs() / (an.abs() + fd.abs()).max(1e-8));
        }
    }
    println!("{} parameters, max relative error {worst:.2e}", store.scalar_count());
    Ok(())
}
