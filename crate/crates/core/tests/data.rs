use smelu_repro::activations::ActivationSpec;
use smelu_repro::data::{read_examples, write_examples, Generator, SynthConfig};
use smelu_repro::harness::train::{fit, predict_all};
use smelu_repro::metrics::log_loss;
use smelu_repro::net::{ModelConfig, Norm, TableSpec};
use smelu_repro::optim::OptimConfig;

#[test]
fn relu_model_recovers_ground_truth_within_five_percent_of_bayes() {
    let synth = SynthConfig {
        tables: 3,
        vocab_sizes: vec![20],
        informative: 2,
        query_tables: 0,
        queries: 20_000,
        items_per_query: 10,
        base_rate: 0.3,
        weight_scale: 1.5,
        interaction: 0.5,
        seed: 21,
        ..SynthConfig::default()
    };
    let mut gen = Generator::new(&synth).unwrap();
    let all: Vec<_> = std::iter::from_fn(|| gen.next_with_probability()).collect();
    let (train, holdout) = all.split_at(all.len() - 10_000);

    let tables = vec![TableSpec { vocab: 20, dim: 4 }; 3];
    let mut cfg = ModelConfig::uniform(tables, vec![16, 8], ActivationSpec::Relu, Norm::None, Some(6.0), 3);
    // ReLU applied straight to the embeddings can strand ids whose vectors
    // turn all-negative, so the tuned model feeds them in linearly
    cfg.identity_input_activation = true;
    cfg.init.embedding_std = 0.5;
    let optim = OptimConfig {
        lr_embedding: 0.2,
        lr_dense: 0.05,
        ..OptimConfig::default()
    };
    let fitted = fit(
        cfg,
        optim,
        train.iter().enumerate().map(|(i, (e, _))| Ok((i, e.clone()))),
        train.len(),
    )
    .unwrap();
    let preds = predict_all(&fitted.model, holdout.iter().map(|(e, _)| Ok(e.clone())), 0).unwrap();

    let n = holdout.len() as f64;
    let model_loss: f64 = preds.iter().zip(holdout).map(|(p, (e, _))| log_loss(*p, e.label)).sum::<f64>() / n;
    let bayes: f64 = holdout.iter().map(|(e, p)| log_loss(*p, e.label)).sum::<f64>() / n;
    assert!(
        model_loss <= 1.05 * bayes,
        "model {model_loss} vs bayes {bayes} (ratio {})",
        model_loss / bayes
    );
}

#[test]
fn empty_file_reads_as_empty_stream() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.tsv");
    std::fs::write(&path, "").unwrap();
    assert!(read_examples(&path).unwrap().is_empty());
}

#[test]
fn generated_stream_round_trips_through_a_file_with_header() {
    let synth = SynthConfig {
        queries: 50,
        id_skew: 1.1,
        drift: 0.5,
        label_noise: 0.05,
        ..SynthConfig::default()
    };
    let examples: Vec<_> = Generator::new(&synth).unwrap().collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.tsv");
    let header = synth.to_key_values().into_iter().collect();
    write_examples(&path, &header, &examples).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# "));
    assert!(text.contains(&format!("# seed={}", synth.seed)));
    assert_eq!(read_examples(&path).unwrap(), examples);
}
