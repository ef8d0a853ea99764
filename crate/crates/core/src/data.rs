//! Sparse CTR-style examples: a synthetic generator with a known
//! ground-truth click model, a line-oriented text format, and a windowed
//! shuffle.
//!
//! Text format, one example per line:
//!
//! ```text
//! qid<TAB>label<TAB>table:id:value,table:id:value,...
//! ```
//!
//! Lines starting with `#` are header comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::activations::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub table: usize,
    pub id: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseExample {
    pub query: u64,
    pub features: Vec<Feature>,
    pub label: bool,
}

/// Knobs of the synthetic stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Number of categorical tables; each example carries one id per table.
    pub tables: usize,
    /// Vocabulary size per table (a single entry applies to all tables).
    pub vocab_sizes: Vec<usize>,
    /// Tables whose ids enter the ground-truth model (the first ones).
    pub informative: usize,
    /// Tables drawn once per query and shared by its items (the first ones).
    pub query_tables: usize,
    pub queries: usize,
    pub items_per_query: usize,
    /// Target mean click probability; sets the ground-truth bias.
    pub base_rate: f64,
    /// Std of the per-id ground-truth logit contributions. May be infinite,
    /// which makes labels deterministic.
    pub weight_scale: f64,
    /// Std of the pairwise interaction term between informative tables.
    pub interaction: f64,
    /// Rotation of the ground-truth weights, in radians per 10^4 examples.
    pub drift: f64,
    /// Probability of flipping a label after sampling.
    pub label_noise: f64,
    /// Zipf exponent for id popularity; 0 draws ids uniformly.
    pub id_skew: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tables: 8,
            vocab_sizes: vec![200],
            informative: 5,
            query_tables: 1,
            queries: 100_000,
            items_per_query: 10,
            base_rate: 0.25,
            weight_scale: 1.0,
            interaction: 1.0,
            drift: 0.0,
            label_noise: 0.0,
            id_skew: 0.0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.tables == 0 {
            return fail("data.tables must be >= 1".into());
        }
        if self.informative == 0 || self.informative > self.tables {
            return fail(format!(
                "data.informative must be in 1..={} (got {})",
                self.tables, self.informative
            ));
        }
        if self.query_tables > self.tables {
            return fail("data.query_tables exceeds data.tables".into());
        }
        if self.vocab_sizes.is_empty()
            || (self.vocab_sizes.len() != 1 && self.vocab_sizes.len() != self.tables)
        {
            return fail("data.vocab must list one size or one per table".into());
        }
        if self.vocab_sizes.iter().any(|&v| v == 0) {
            return fail("vocabulary sizes must be positive".into());
        }
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return fail(format!("data.base_rate must be in (0,1), got {}", self.base_rate));
        }
        if self.items_per_query == 0 {
            return fail("data.items_per_query must be >= 1".into());
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return fail("data.label_noise must be in [0, 0.5)".into());
        }
        if self.weight_scale.is_nan() || self.weight_scale < 0.0 {
            return fail("data.weight_scale must be >= 0".into());
        }
        if !self.interaction.is_finite() || self.interaction < 0.0 {
            return fail("data.interaction must be finite and >= 0".into());
        }
        if !self.drift.is_finite() || !self.id_skew.is_finite() || self.id_skew < 0.0 {
            return fail("data.drift and data.id_skew must be finite, id_skew >= 0".into());
        }
        Ok(())
    }

    pub fn vocab(&self, table: usize) -> usize {
        if self.vocab_sizes.len() == 1 {
            self.vocab_sizes[0]
        } else {
            self.vocab_sizes[table]
        }
    }

    pub fn total_examples(&self) -> usize {
        self.queries * self.items_per_query
    }

    /// Flat `key = value` rendering (keys without section prefix).
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let vocab = self
            .vocab_sizes
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("tables".into(), self.tables.to_string()),
            ("vocab".into(), vocab),
            ("informative".into(), self.informative.to_string()),
            ("query_tables".into(), self.query_tables.to_string()),
            ("queries".into(), self.queries.to_string()),
            ("items_per_query".into(), self.items_per_query.to_string()),
            ("base_rate".into(), self.base_rate.to_string()),
            ("weight_scale".into(), self.weight_scale.to_string()),
            ("interaction".into(), self.interaction.to_string()),
            ("drift".into(), self.drift.to_string()),
            ("label_noise".into(), self.label_noise.to_string()),
            ("id_skew".into(), self.id_skew.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }

    /// Applies one `key = value` setting; returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("data.{key} = '{value}': {e}")))
        }
        match key {
            "tables" => self.tables = num(key, value)?,
            "vocab" => {
                self.vocab_sizes = value
                    .split(',')
                    .map(|v| num(key, v))
                    .collect::<Result<_>>()?
            }
            "informative" => self.informative = num(key, value)?,
            "query_tables" => self.query_tables = num(key, value)?,
            "queries" => self.queries = num(key, value)?,
            "items_per_query" => self.items_per_query = num(key, value)?,
            "base_rate" => self.base_rate = num(key, value)?,
            "weight_scale" => self.weight_scale = num(key, value)?,
            "interaction" => self.interaction = num(key, value)?,
            "drift" => self.drift = num(key, value)?,
            "label_noise" => self.label_noise = num(key, value)?,
            "id_skew" => self.id_skew = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic standard normal keyed by `parts`.
fn hashed_normal(parts: &[u64]) -> f64 {
    let mut h = 0x5851_F42D_4C95_7F2Du64;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    let a = splitmix64(h);
    let b = splitmix64(a);
    let u1 = ((a >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = (b >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The hidden click model of a [`SynthConfig`].
/// Width of the hashed latent vectors behind the pairwise term.
pub const LATENT_DIM: usize = 4;

#[derive(Debug, Clone)]
pub struct GroundTruth {
    config: SynthConfig,
    bias: f64,
}

impl GroundTruth {
    pub fn new(config: &SynthConfig) -> Self {
        let r = config.base_rate;
        Self {
            config: config.clone(),
            bias: (r / (1.0 - r)).ln(),
        }
    }

    fn id_weight(&self, table: usize, id: u64, index: u64) -> f64 {
        let seed = self.config.seed;
        let w0 = hashed_normal(&[seed, 1, table as u64, id]);
        if self.config.drift == 0.0 {
            return w0;
        }
        let w1 = hashed_normal(&[seed, 2, table as u64, id]);
        let angle = self.config.drift * index as f64 * 1e-4;
        w0 * angle.cos() + w1 * angle.sin()
    }

    /// Ground-truth click probability of an example at stream position `index`.
    pub fn probability(&self, features: &[Feature], index: u64) -> f64 {
        let cfg = &self.config;
        let mut informative: Vec<Option<u64>> = vec![None; cfg.informative];
        for f in features {
            if f.table < cfg.informative {
                informative[f.table] = Some(f.id);
            }
        }
        let mut linear = 0.0;
        for (t, id) in informative.iter().enumerate() {
            if let Some(id) = id {
                linear += self.id_weight(t, *id, index);
            }
        }
        let scale = cfg.weight_scale / (cfg.informative as f64).sqrt();
        let mut logit = self.bias;
        if linear != 0.0 {
            logit += scale * linear;
        }
        if cfg.interaction > 0.0 && cfg.informative >= 2 {
            // factorization-machine term over hashed latent vectors
            let pairs = cfg.informative * (cfg.informative - 1) / 2;
            let mut sum = [0.0; LATENT_DIM];
            let mut sum_sq = 0.0;
            for (t, id) in informative.iter().enumerate() {
                if let Some(id) = id {
                    for (k, s) in sum.iter_mut().enumerate() {
                        let u = hashed_normal(&[cfg.seed, 3, t as u64, *id, k as u64]);
                        *s += u;
                        sum_sq += u * u;
                    }
                }
            }
            let pairwise = 0.5 * (sum.iter().map(|s| s * s).sum::<f64>() - sum_sq);
            logit += cfg.interaction * pairwise / ((pairs * LATENT_DIM) as f64).sqrt();
        }
        let p = sigmoid(logit);
        p * (1.0 - 2.0 * cfg.label_noise) + cfg.label_noise
    }
}

/// Iterator over a synthetic stream; fully determined by the master seed.
pub struct Generator {
    config: SynthConfig,
    truth: GroundTruth,
    rng: ChaCha8Rng,
    zipf: Vec<Option<Zipf<f64>>>,
    query: u64,
    item: usize,
    index: u64,
    query_ids: Vec<u64>,
}

impl Generator {
    pub fn new(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let zipf = (0..config.tables)
            .map(|t| {
                if config.id_skew > 0.0 {
                    Zipf::new(config.vocab(t) as u64, config.id_skew)
                        .map(Some)
                        .map_err(|e| Error::Config(format!("zipf: {e}")))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config: config.clone(),
            truth: GroundTruth::new(config),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            zipf,
            query: 0,
            item: 0,
            index: 0,
            query_ids: Vec::new(),
        })
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    fn draw_id(&mut self, table: usize) -> u64 {
        match &self.zipf[table] {
            Some(z) => z.sample(&mut self.rng) as u64 - 1,
            None => self.rng.gen_range(0..self.config.vocab(table) as u64),
        }
    }

    /// Next example together with its true click probability.
    pub fn next_with_probability(&mut self) -> Option<(SparseExample, f64)> {
        if self.query as usize >= self.config.queries {
            return None;
        }
        if self.item == 0 {
            self.query_ids = (0..self.config.query_tables)
                .map(|t| self.draw_id(t))
                .collect();
        }
        let mut features = Vec::with_capacity(self.config.tables);
        for t in 0..self.config.tables {
            let id = if t < self.config.query_tables {
                self.query_ids[t]
            } else {
                self.draw_id(t)
            };
            features.push(Feature {
                table: t,
                id,
                value: 1.0,
            });
        }
        let p = self.truth.probability(&features, self.index);
        let label = self.rng.gen::<f64>() < p;
        let example = SparseExample {
            query: self.query,
            features,
            label,
        };
        self.index += 1;
        self.item += 1;
        if self.item == self.config.items_per_query {
            self.item = 0;
            self.query += 1;
        }
        Some((example, p))
    }
}

impl Iterator for Generator {
    type Item = SparseExample;

    fn next(&mut self) -> Option<SparseExample> {
        self.next_with_probability().map(|(e, _)| e)
    }
}

/// Materializes the stream of `config`.
pub fn generate(config: &SynthConfig) -> Result<Vec<SparseExample>> {
    Ok(Generator::new(config)?.collect())
}

/// Formats one example as a text line (without newline).
pub fn format_example(e: &SparseExample) -> String {
    let mut line = format!("{}\t{}\t", e.query, u8::from(e.label));
    for (i, f) in e.features.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(line, "{}:{}:{}", f.table, f.id, f.value);
    }
    line
}

/// Parses one text line; `line_no` is used in error messages.
pub fn parse_example(line: &str, line_no: usize) -> Result<SparseExample> {
    let err = |column: usize, message: String| Error::Parse {
        line: line_no,
        column,
        message,
    };
    let mut fields = line.splitn(3, '\t');
    let qid_raw = fields.next().unwrap_or("");
    let query = qid_raw
        .parse::<u64>()
        .map_err(|e| err(1, format!("query id '{qid_raw}': {e}")))?;
    let label_col = qid_raw.len() + 2;
    let label = match fields.next() {
        Some("0") => false,
        Some("1") => true,
        Some(other) => return Err(err(label_col, format!("label must be 0 or 1, got '{other}'"))),
        None => return Err(err(label_col, "missing label field".into())),
    };
    let feat_col = label_col + 2;
    let body = fields
        .next()
        .ok_or_else(|| err(feat_col, "missing feature field".into()))?;
    let mut features = Vec::new();
    let mut col = feat_col;
    for item in body.split(',') {
        if item.is_empty() {
            if body.is_empty() {
                break;
            }
            return Err(err(col, "empty feature".into()));
        }
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            return Err(err(col, format!("feature '{item}' is not table:id:value")));
        }
        let table = parts[0]
            .parse::<usize>()
            .map_err(|e| err(col, format!("table '{}': {e}", parts[0])))?;
        let id_col = col + parts[0].len() + 1;
        let id = parts[1]
            .parse::<u64>()
            .map_err(|e| err(id_col, format!("id '{}': {e}", parts[1])))?;
        let value_col = id_col + parts[1].len() + 1;
        let value = parts[2]
            .parse::<f64>()
            .map_err(|e| err(value_col, format!("value '{}': {e}", parts[2])))?;
        if !value.is_finite() {
            return Err(err(value_col, "feature value must be finite".into()));
        }
        features.push(Feature { table, id, value });
        col += item.len() + 1;
    }
    Ok(SparseExample {
        query,
        features,
        label,
    })
}

/// Writes examples with an optional `# key=value` header block.
pub fn write_examples<E: std::borrow::Borrow<SparseExample>>(
    path: &Path,
    header: &BTreeMap<String, String>,
    examples: impl IntoIterator<Item = E>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = || -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}={v}")?;
        }
        for e in examples {
            writeln!(out, "{}", format_example(e.borrow()))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Streaming reader over a text file of examples.
pub struct ExampleReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl ExampleReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(BufReader::new(file)))
    }
}

impl<R: BufRead> ExampleReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for ExampleReader<R> {
    type Item = Result<SparseExample>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io("<stream>", e))),
            };
            self.line_no += 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(parse_example(trimmed, self.line_no));
        }
    }
}

pub fn read_examples(path: &Path) -> Result<Vec<SparseExample>> {
    ExampleReader::open(path)?.collect()
}

/// Windowed shuffle: keeps `window` pending items and emits a uniformly
/// chosen one each step. A window of 1 preserves the input order.
pub struct WindowShuffle<I: Iterator> {
    source: I,
    buffer: Vec<I::Item>,
    window: usize,
    rng: ChaCha8Rng,
}

impl<I: Iterator> Iterator for WindowShuffle<I> {
    type Item = I::Item;

    fn next(&mut self) -> Option<I::Item> {
        while self.buffer.len() < self.window {
            match self.source.next() {
                Some(item) => self.buffer.push(item),
                None => break,
            }
        }
        if self.buffer.is_empty() {
            return None;
        }
        let idx = self.rng.gen_range(0..self.buffer.len());
        Some(self.buffer.swap_remove(idx))
    }
}

pub fn shuffle_window<I: IntoIterator>(
    stream: I,
    window: usize,
    seed: u64,
) -> WindowShuffle<I::IntoIter> {
    let window = window.max(1);
    WindowShuffle {
        source: stream.into_iter(),
        buffer: Vec::with_capacity(window.min(1 << 20)),
        window,
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
}

/// Swaps each item with its successor with probability `rate`; a swapped
/// pair is not considered again. Models small interleaving differences
/// between otherwise identical pipelines.
pub struct AdjacentSwap<I: Iterator> {
    source: I,
    pending: Option<I::Item>,
    rate: f64,
    rng: ChaCha8Rng,
}

impl<I: Iterator> Iterator for AdjacentSwap<I> {
    type Item = I::Item;

    fn next(&mut self) -> Option<I::Item> {
        if let Some(item) = self.pending.take() {
            return Some(item);
        }
        let first = self.source.next()?;
        if self.rate > 0.0 && self.rng.gen_bool(self.rate) {
            if let Some(second) = self.source.next() {
                self.pending = Some(first);
                return Some(second);
            }
        }
        Some(first)
    }
}

pub fn perturb_adjacent<I: IntoIterator>(stream: I, rate: f64, seed: u64) -> AdjacentSwap<I::IntoIter> {
    AdjacentSwap {
        source: stream.into_iter(),
        pending: None,
        rate: rate.clamp(0.0, 1.0),
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            queries: 200,
            items_per_query: 5,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn one_id_per_table() {
        let cfg = small();
        for e in generate(&cfg).unwrap() {
            assert_eq!(e.features.len(), cfg.tables);
            for (t, f) in e.features.iter().enumerate() {
                assert_eq!(f.table, t);
                assert!((f.id as usize) < cfg.vocab(t));
            }
        }
    }

    #[test]
    fn query_tables_are_shared_within_query() {
        let data = generate(&small()).unwrap();
        for w in data.windows(2) {
            if w[0].query == w[1].query {
                assert_eq!(w[0].features[0].id, w[1].features[0].id);
            }
        }
    }

    #[test]
    fn infinite_weights_make_labels_deterministic() {
        let cfg = SynthConfig {
            tables: 1,
            vocab_sizes: vec![2],
            informative: 1,
            query_tables: 0,
            weight_scale: f64::INFINITY,
            interaction: 0.0,
            queries: 500,
            items_per_query: 4,
            ..SynthConfig::default()
        };
        let mut by_id: BTreeMap<u64, bool> = BTreeMap::new();
        let mut gen = Generator::new(&cfg).unwrap();
        while let Some((e, p)) = gen.next_with_probability() {
            assert!(p == 0.0 || p == 1.0);
            let id = e.features[0].id;
            let prev = by_id.entry(id).or_insert(e.label);
            assert_eq!(*prev, e.label);
        }
        assert_eq!(by_id.len(), 2);
    }

    #[test]
    fn positive_rate_within_binomial_bounds() {
        let cfg = SynthConfig {
            queries: 100_000,
            items_per_query: 10,
            seed: 11,
            ..SynthConfig::default()
        };
        let mut gen = Generator::new(&cfg).unwrap();
        let (mut positives, mut mean, mut var) = (0.0, 0.0, 0.0);
        while let Some((e, p)) = gen.next_with_probability() {
            positives += f64::from(u8::from(e.label));
            mean += p;
            var += p * (1.0 - p);
        }
        assert!((positives - mean).abs() <= 3.0 * var.sqrt(), "{positives} vs {mean}");
        // bias targets the configured base rate up to the logit-normal spread
        let rate = mean / cfg.total_examples() as f64;
        assert!((rate - cfg.base_rate).abs() < 0.1, "{rate}");
    }

    #[test]
    fn parses_documented_line() {
        let e = parse_example("3\t1\t0:17:1.0", 1).unwrap();
        assert_eq!(e.query, 3);
        assert!(e.label);
        assert_eq!(
            e.features,
            vec![Feature {
                table: 0,
                id: 17,
                value: 1.0
            }]
        );
        let empty = parse_example("4\t0\t", 1).unwrap();
        assert!(empty.features.is_empty());
    }

    #[test]
    fn parse_errors_name_line_and_column() {
        match parse_example("3\t2\t0:1:1", 7) {
            Err(Error::Parse { line: 7, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_example("3\t1\t0:1:1,0:x:1", 2) {
            Err(Error::Parse { line: 2, column, .. }) => assert_eq!(column, 13),
            other => panic!("{other:?}"),
        }
        assert!(parse_example("q\t1\t", 1).is_err());
        assert!(parse_example("1\t1", 1).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        let mut data = generate(&small()).unwrap();
        data[0].features[1].value = 0.1 + 0.2;
        let mut header = BTreeMap::new();
        header.insert("seed".to_string(), "1".to_string());
        write_examples(&path, &header, &data).unwrap();
        assert_eq!(read_examples(&path).unwrap(), data);

        let empty = dir.path().join("empty.tsv");
        std::fs::write(&empty, "").unwrap();
        assert!(read_examples(&empty).unwrap().is_empty());

        let bad = dir.path().join("bad.tsv");
        std::fs::write(&bad, "# c\n1\t0\t0:1:1\n1\t0\t0:1\n").unwrap();
        match read_examples(&bad) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn window_one_is_identity() {
        let v: Vec<u32> = (0..100).collect();
        let out: Vec<u32> = shuffle_window(v.clone(), 1, 9).collect();
        assert_eq!(out, v);
    }

    #[test]
    fn window_shuffle_is_seeded_permutation() {
        let v: Vec<u32> = (0..1000).collect();
        let a: Vec<u32> = shuffle_window(v.clone(), 64, 5).collect();
        let b: Vec<u32> = shuffle_window(v.clone(), 64, 5).collect();
        let c: Vec<u32> = shuffle_window(v.clone(), 64, 6).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, v);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, v);
    }

    #[test]
    fn adjacent_swap_is_a_permutation() {
        let v: Vec<u32> = perturb_adjacent(0..10u32, 0.0, 1).collect();
        assert_eq!(v, (0..10).collect::<Vec<_>>());
        let v: Vec<u32> = perturb_adjacent(0..10u32, 1.0, 1).collect();
        assert_eq!(v, vec![1, 0, 3, 2, 5, 4, 7, 6, 9, 8]);
        let mut v: Vec<u32> = perturb_adjacent(0..1001u32, 0.3, 9).collect();
        v.sort_unstable();
        assert_eq!(v, (0..1001).collect::<Vec<_>>());
    }
}
