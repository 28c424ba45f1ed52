use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, STATIC_FIELDS};
use super::ModelError;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Zeros,
    Ones,
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)).
    Glorot,
    /// Uniform in ±1.
    Embedding,
    /// Zeros except the forget-gate block, which starts at 1.
    LstmBias,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

struct SpecBuilder {
    hidden: usize,
    specs: Vec<ParamSpec>,
}

impl SpecBuilder {
    fn push(&mut self, name: String, shape: Vec<usize>, init: Init) {
        self.specs.push(ParamSpec { name, shape, init });
    }

    fn linear(&mut self, prefix: &str, din: usize, dout: usize) {
        self.push(format!("{prefix}.w"), vec![din, dout], Init::Glorot);
        self.push(format!("{prefix}.b"), vec![1, dout], Init::Zeros);
    }

    fn norm(&mut self, prefix: &str, width: usize) {
        self.push(format!("{prefix}.gamma"), vec![1, width], Init::Ones);
        self.push(format!("{prefix}.beta"), vec![1, width], Init::Zeros);
    }

    fn glu(&mut self, prefix: &str, din: usize, dout: usize) {
        self.linear(&format!("{prefix}.gate"), din, dout);
        self.linear(&format!("{prefix}.value"), din, dout);
    }

    fn grn(&mut self, prefix: &str, din: usize, dout: usize, context: bool) {
        let h = self.hidden;
        self.linear(&format!("{prefix}.fc2"), din, h);
        if context {
            self.push(format!("{prefix}.ctx.w"), vec![h, h], Init::Glorot);
        }
        self.linear(&format!("{prefix}.fc1"), h, h);
        self.glu(&format!("{prefix}.glu"), h, dout);
        if din != dout {
            self.linear(&format!("{prefix}.skip"), din, dout);
        }
        self.norm(&format!("{prefix}.norm"), dout);
    }

    fn gate_add_norm(&mut self, prefix: &str) {
        let h = self.hidden;
        self.glu(&format!("{prefix}.glu"), h, h);
        self.norm(&format!("{prefix}.norm"), h);
    }

    fn vsn(&mut self, prefix: &str, n: usize, context: bool) {
        let h = self.hidden;
        self.grn(&format!("{prefix}.flat"), n * h, n, context);
        for i in 0..n {
            self.grn(&format!("{prefix}.var{i}"), h, h, false);
        }
    }

    fn lstm(&mut self, prefix: &str) {
        let h = self.hidden;
        self.push(format!("{prefix}.wx"), vec![h, 4 * h], Init::Glorot);
        self.push(format!("{prefix}.wh"), vec![h, 4 * h], Init::Glorot);
        self.push(format!("{prefix}.b"), vec![1, 4 * h], Init::LstmBias);
    }
}

/// Every learnable tensor the forward pass uses, as a pure function of the
/// configuration.
pub fn param_specs(config: &ModelConfig) -> Vec<ParamSpec> {
    let h = config.hidden_size;
    let mut b = SpecBuilder {
        hidden: h,
        specs: Vec::new(),
    };
    for (field, &card) in STATIC_FIELDS.iter().zip(&config.static_cardinalities) {
        b.push(format!("static.emb.{field}"), vec![card, h], Init::Embedding);
    }
    b.vsn("static.vsn", STATIC_FIELDS.len(), false);
    for ctx in ["selection", "cell", "hidden", "enrichment"] {
        b.grn(&format!("static.ctx_{ctx}"), h, h, false);
    }
    for i in 0..config.n_past {
        b.linear(&format!("past.emb{i}"), 1, h);
    }
    for i in 0..config.n_known {
        b.linear(&format!("known.emb{i}"), 1, h);
    }
    b.vsn("vsn.past", config.n_past, true);
    b.vsn("vsn.known", config.n_known, true);
    b.lstm("lstm.enc");
    if !config.identity_decoder {
        b.lstm("lstm.dec");
    }
    b.gate_add_norm("post_lstm");
    b.grn("enrich", h, h, true);
    let dk = config.head_size();
    for k in 0..config.num_attention_heads {
        b.push(format!("attn.head{k}.wq"), vec![h, dk], Init::Glorot);
        b.push(format!("attn.head{k}.wk"), vec![h, dk], Init::Glorot);
    }
    b.push("attn.wv".into(), vec![h, dk], Init::Glorot);
    b.linear("attn.out", dk, h);
    b.gate_add_norm("post_attn");
    b.grn("pos_wise", h, h, false);
    b.gate_add_norm("pre_output");
    b.linear("output", h, config.quantiles.len());
    b.specs
}

/// Named learnable tensors of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    tensors: BTreeMap<String, Tensor>,
}

impl ModelParams {
    /// Fresh random initialization, reproducible from `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for spec in param_specs(config) {
            let n: usize = spec.shape.iter().product();
            let data: Vec<f64> = match spec.init {
                Init::Zeros => vec![0.0; n],
                Init::Ones => vec![1.0; n],
                Init::Glorot => {
                    let a = (6.0 / (spec.shape[0] + spec.shape[1]) as f64).sqrt();
                    (0..n).map(|_| rng.gen_range(-a..a)).collect()
                }
                Init::Embedding => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                Init::LstmBias => {
                    let h = n / 4;
                    (0..n).map(|i| if (h..2 * h).contains(&i) { 1.0 } else { 0.0 }).collect()
                }
            };
            let t = Tensor::new(spec.shape, data).expect("spec shapes are non-empty");
            tensors.insert(spec.name, t);
        }
        Ok(Self { tensors })
    }

    /// Wraps an explicit map; see [`ModelParams::validate_against`].
    pub fn from_map(tensors: BTreeMap<String, Tensor>) -> Self {
        Self { tensors }
    }

    /// Checks the closed-set invariant: exactly the names and shapes that
    /// `config` declares.
    pub fn validate_against(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let specs = param_specs(config);
        for spec in &specs {
            match self.tensors.get(&spec.name) {
                None => return Err(ModelError::MissingParam(spec.name.clone())),
                Some(t) if t.shape() != spec.shape.as_slice() => {
                    return Err(ModelError::Checkpoint(format!(
                        "{} has shape {:?}, expected {:?}",
                        spec.name,
                        t.shape(),
                        spec.shape
                    )))
                }
                _ => {}
            }
        }
        if self.tensors.len() != specs.len() {
            let orphan = self
                .tensors
                .keys()
                .find(|k| !specs.iter().any(|s| &s.name == *k))
                .cloned()
                .unwrap_or_default();
            return Err(ModelError::Checkpoint(format!("unexpected parameter {orphan}")));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.tensors.insert(name.into(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }
}

pub fn param_count(config: &ModelConfig) -> usize {
    param_specs(config)
        .iter()
        .map(|s| s.shape.iter().product::<usize>())
        .sum()
}
