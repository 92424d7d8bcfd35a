//! Equal error rate and ROC points for a handful of verifier scores.

use keydyn::evaluate::{accuracy, eer, roc};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scores = [0.95, 0.9, 0.8, 0.72, 0.6, 0.55, 0.4, 0.35, 0.2, 0.1];
    let labels = [1, 1, 1, 0, 1, 0, 1, 0, 0, 0];

    println!("{:>9} {:>6} {:>6}", "threshold", "FPR", "FNR");
    for p in roc(&scores, &labels)? {
        println!("{:>9.3} {:>6.2} {:>6.2}", p.threshold, p.fpr, p.fnr);
    }
    let (rate, threshold) = eer(&scores, &labels)?;
    println!("EER {rate:.3} at threshold {threshold:.3}");
    println!("accuracy at 0.5: {:.2}", accuracy(&scores, &labels, 0.5));

    // only the ordering of scores matters
    let cubed: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
    assert!((eer(&cubed, &labels)?.0 - rate).abs() < 1e-12);
    Ok(())
}
