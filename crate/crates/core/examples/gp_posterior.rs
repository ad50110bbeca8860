//! Fit the multi-fidelity surrogate to a handful of cheap and expensive
//! observations of a 1-d function and print the posterior at every level,
//! plus the information a candidate query sequence would carry.

use mfpne::mogp::{mutual_information_sequence, KernelParams, MogpModel, ObservationRecord};

fn truth(x: f64) -> f64 {
    (2.5 * x).sin()
}

// a biased, smoother approximation of `truth`
fn cheap(x: f64) -> f64 {
    0.8 * truth(x) + 0.3 * x
}

fn main() -> mfpne::Result<()> {
    let params = KernelParams::new(0.89, vec![0.78], vec![0.768])?;
    let mut model = MogpModel::new(params, 0.01)?;
    for i in 0..9 {
        let x = -1.0 + 0.25 * i as f64;
        model.append(ObservationRecord { x: vec![x], m: 1, y: cheap(x) })?;
    }
    for x in [-0.6, 0.7] {
        model.append(ObservationRecord { x: vec![x], m: 2, y: truth(x) })?;
    }

    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "x", "truth", "mean(2)", "sd(2)", "sd(1)");
    for i in 0..=10 {
        let x = -1.0 + 0.2 * i as f64;
        let (mu, v) = model.posterior(&[x], 2)?;
        let (_, v1) = model.posterior(&[x], 1)?;
        println!("{x:>6.2} {:>9.4} {mu:>9.4} {:>9.4} {:>9.4}", truth(x), v.sqrt(), v1.sqrt());
    }

    let seq = vec![(vec![0.1], 1), (vec![0.1], 1), (vec![0.4], 2)];
    let info = mutual_information_sequence(&model, &seq)?;
    println!("\ninformation of {seq:?} about the top level: {info:.4} nats");
    Ok(())
}
