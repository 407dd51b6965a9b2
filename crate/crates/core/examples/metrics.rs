//! Classification and attribute metrics on small hand-made examples.
//!
//! cargo run --example metrics

use mater::metrics::{ccc_eval, classification_report, confusion_matrix};
use mater::Category::{self, *};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let golds = [Angry, Angry, Neutral, Neutral, Happy, Sad, Sad, Sad];
    let preds = [Angry, Neutral, Neutral, Neutral, Happy, Sad, Happy, Neutral];
    let report = classification_report(&preds, &golds)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    let cm = confusion_matrix(&preds, &golds)?;
    let codes: String = Category::ALL.iter().map(|c| format!("{:>3}", c.code())).collect();
    println!("gold\\pred{codes}");
    for (c, row) in Category::ALL.iter().zip(cm) {
        let cells: String = row.iter().map(|v| format!("{v:>3}")).collect();
        println!("{:>9}{cells}", c.code());
    }

    // Perfect valence, reversed arousal, dominance shifted by one point.
    let gold: Vec<[f64; 3]> = (1..=5).map(|v| [v as f64, v as f64, v as f64]).collect();
    let pred: Vec<[f64; 3]> = (1..=5).map(|v| [v as f64, 6.0 - v as f64, v as f64 + 1.0]).collect();
    let a = ccc_eval(&pred, &gold)?;
    println!(
        "CCC valence {:.4}, arousal {:.4}, dominance {:.4}, mean {:.4}",
        a.valence, a.arousal, a.dominance, a.mean
    );
    Ok(())
}
