//! Label distributions, divergences and the UNLI conversion.

use ambinli::convert::unli_to_distribution;
use ambinli::dist::{entropy, jsd, kl, majority_label, normalize, soft_cross_entropy};
use ambinli::{LabelCounts, LabelDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let votes = LabelCounts::new(33, 51, 16);
    let human = normalize(&votes)?;
    println!("votes {votes:?} -> {:?}, majority {}", human.as_array(), majority_label(&votes)?);
    println!("entropy {:.4} bits (max {:.4})", entropy(&human), 3f64.log2());

    let model = LabelDistribution::new(0.2, 0.6, 0.2)?;
    println!("JSD(human, model) = {:.4} bits", jsd(&human, &model));
    println!("KL(human || model) = {:.4} bits", kl(&human, &model));
    println!("soft cross-entropy = {:.4} nats", soft_cross_entropy(&human, &model)?);

    let gold = LabelDistribution::one_hot(human.argmax());
    println!("KL(human || one-hot) = {}", kl(&human, &gold));

    for p in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        println!("UNLI p = {p:<4} -> {:?}", unli_to_distribution(p)?.as_array());
    }
    Ok(())
}
