//! Ordinal and per-class metrics for a five-grade confusion matrix and a binary screening matrix.

use drgrade::metrics::{per_class_report, qwk, ConfusionMatrix};

fn main() -> drgrade::Result<()> {
    let five = ConfusionMatrix::from_rows(&[
        vec![350, 6, 4, 0, 1],
        vec![5, 50, 15, 2, 2],
        vec![3, 12, 160, 14, 10],
        vec![0, 2, 12, 18, 6],
        vec![1, 3, 14, 7, 34],
    ])?;
    let rep = per_class_report(&five)?;
    println!("QWK {:.4}  accuracy {:.4}", qwk(&five)?, rep.overall.accuracy);
    for c in &rep.per_class {
        println!(
            "grade {} support {:>3}  sens {:.3}  spec {:.3}  f1 {:.3}",
            c.class,
            c.support,
            c.rates.sensitivity.unwrap_or(f64::NAN),
            c.rates.specificity.unwrap_or(f64::NAN),
            c.rates.f1.unwrap_or(f64::NAN)
        );
    }

    let binary = ConfusionMatrix::from_rows(&[vec![352, 9], vec![2, 368]])?;
    let rep = per_class_report(&binary)?;
    let pos = rep.positive_class.expect("binary report");
    println!(
        "binary: accuracy {:.2}%  sensitivity {:.2}%  specificity {:.2}%",
        100.0 * rep.overall.accuracy,
        100.0 * pos.sensitivity.unwrap_or(f64::NAN),
        100.0 * pos.specificity.unwrap_or(f64::NAN)
    );
    println!("{}", serde_json::to_string_pretty(&rep).expect("serialisable"));
    Ok(())
}
