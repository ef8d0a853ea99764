//! Generates a synthetic click stream, writes it to a TSV file and reads
//! it back. Also shows how far a perfect model could get.
//!
//!     cargo run --example synthetic_stream

use smelu_repro::data::{read_examples, write_examples, Generator, SynthConfig};
use smelu_repro::metrics::log_loss;

fn main() -> smelu_repro::Result<()> {
    let synth = SynthConfig {
        queries: 2_000,
        id_skew: 1.1,
        ..SynthConfig::default()
    };
    let mut gen = Generator::new(&synth)?;
    let mut examples = Vec::new();
    let mut bayes = 0.0;
    while let Some((e, p)) = gen.next_with_probability() {
        bayes += log_loss(p, e.label);
        examples.push(e);
    }
    let n = examples.len() as f64;
    let ctr = examples.iter().filter(|e| e.label).count() as f64 / n;
    println!("{} examples, CTR {:.3}, Bayes log loss {:.4}", examples.len(), ctr, bayes / n);

    let path = std::env::temp_dir().join("smelu-stream-example.tsv");
    let header = synth.to_key_values().into_iter().collect();
    write_examples(&path, &header, &examples)?;
    let back = read_examples(&path)?;
    assert_eq!(back, examples);
    println!("round trip through {} ok", path.display());
    Ok(())
}
