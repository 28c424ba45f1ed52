//! Building blocks of the network, evaluated on a [`Graph`].
//!
//! Layer parameters are addressed by hierarchical name prefixes, the same
//! names [`param_specs`](super::params::param_specs) declares.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, STATIC_FIELDS};
use super::params::ModelParams;
use super::ModelError;
use crate::tensor::{Tape, Tensor, Var};

type Result<T> = std::result::Result<T, ModelError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Categorical static covariates of one window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StaticCodes {
    pub airport: usize,
    pub month: usize,
    pub local_hour: usize,
    pub day_of_week: usize,
}

impl StaticCodes {
    pub fn as_array(&self) -> [usize; 4] {
        [self.airport, self.month, self.local_hour, self.day_of_week]
    }

    pub fn validate(&self, cardinalities: &[usize; 4]) -> Result<()> {
        for ((field, code), card) in STATIC_FIELDS.iter().zip(self.as_array()).zip(cardinalities) {
            if code >= *card {
                return Err(ModelError::StaticCode {
                    field,
                    code,
                    cardinality: *card,
                });
            }
        }
        Ok(())
    }
}

/// The four context vectors produced by the static covariate encoders.
#[derive(Clone, Copy, Debug)]
pub struct StaticContexts {
    pub selection: Var,
    pub cell: Var,
    pub hidden: Var,
    pub enrichment: Var,
    /// Variable-selection weights over the static fields, shape `[1, 4]`.
    pub weights: Var,
}

/// A tape plus the parameter bindings and dropout stream of one forward pass.
pub struct Graph<'p> {
    pub tape: Tape,
    params: &'p ModelParams,
    bound: BTreeMap<String, Var>,
    dropout: Option<(f64, ChaCha8Rng)>,
}

impl<'p> Graph<'p> {
    /// In `Train` mode with a positive rate, inverted-dropout masks are drawn
    /// from a stream seeded by `seed`, so a pass is reproducible from it.
    pub fn new(params: &'p ModelParams, mode: Mode, dropout_rate: f64, seed: u64) -> Self {
        let dropout = (mode == Mode::Train && dropout_rate > 0.0)
            .then(|| (dropout_rate, ChaCha8Rng::seed_from_u64(seed)));
        Self {
            tape: Tape::new(),
            params,
            bound: BTreeMap::new(),
            dropout,
        }
    }

    /// Binds a named parameter as a differentiable leaf (once per pass).
    pub fn param(&mut self, name: &str) -> Result<Var> {
        if let Some(v) = self.bound.get(name) {
            return Ok(*v);
        }
        let value = self
            .params
            .get(name)
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))?;
        let v = self.tape.leaf(name, value.clone())?;
        self.bound.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.get(name).is_some()
    }

    /// Parameters bound so far, by name.
    pub fn bound_params(&self) -> &BTreeMap<String, Var> {
        &self.bound
    }

    pub fn constant(&mut self, t: Tensor) -> Result<Var> {
        Ok(self.tape.constant(t)?)
    }

    fn scoped<T>(&mut self, layer: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        f(self).map_err(|e| match e {
            ModelError::Layer { layer: l, source } if l.is_empty() => ModelError::Layer {
                layer: layer.to_string(),
                source,
            },
            other => other,
        })
    }

    fn dropout(&mut self, x: Var) -> Result<Var> {
        let Some((rate, rng)) = self.dropout.as_mut() else {
            return Ok(x);
        };
        let keep = 1.0 - *rate;
        let shape = self.tape.shape(x).to_vec();
        let n: usize = shape.iter().product();
        let mask: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let mask = Tensor::new(shape, mask)?;
        Ok(self.tape.dropout_with_mask(x, &mask)?)
    }

    /// `x W + b` with `{prefix}.w` and `{prefix}.b`.
    pub fn linear(&mut self, x: Var, prefix: &str) -> Result<Var> {
        self.scoped(prefix, |g| {
            let w = g.param(&format!("{prefix}.w"))?;
            let b = g.param(&format!("{prefix}.b"))?;
            let xw = g.tape.matmul(x, w)?;
            Ok(g.tape.add(xw, b)?)
        })
    }

    fn affine_norm(&mut self, x: Var, prefix: &str) -> Result<Var> {
        let gamma = self.param(&format!("{prefix}.gamma"))?;
        let beta = self.param(&format!("{prefix}.beta"))?;
        let n = self.tape.layer_norm_lastdim(x)?;
        let n = self.tape.mul(n, gamma)?;
        Ok(self.tape.add(n, beta)?)
    }

    /// Gated linear unit: `σ(x W₄ + b₄) ∘ (x W₅ + b₅)`.
    pub fn glu(&mut self, x: Var, prefix: &str) -> Result<Var> {
        self.scoped(prefix, |g| {
            let gate = g.linear(x, &format!("{prefix}.gate"))?;
            let gate = g.tape.sigmoid(gate)?;
            let value = g.linear(x, &format!("{prefix}.value"))?;
            Ok(g.tape.mul(gate, value)?)
        })
    }

    /// Gated residual network:
    /// `norm(skip(a) + glu(W₁·elu(W₂a + W₃c + b₂) + b₁))`.
    ///
    /// The context term is present only when both `context` is given and the
    /// layer declares `{prefix}.ctx.w`; a layer without it rejects a context.
    pub fn grn(&mut self, a: Var, context: Option<Var>, prefix: &str) -> Result<Var> {
        self.scoped(prefix, |g| {
            let mut eta2 = g.linear(a, &format!("{prefix}.fc2"))?;
            let ctx_name = format!("{prefix}.ctx.w");
            match (context, g.has_param(&ctx_name)) {
                (Some(c), true) => {
                    let w3 = g.param(&ctx_name)?;
                    let cw = g.tape.matmul(c, w3)?;
                    eta2 = g.tape.add(eta2, cw)?;
                }
                (Some(_), false) => {
                    return Err(ModelError::Config(format!("{prefix} takes no context vector")))
                }
                // an absent context contributes W₃·0
                (None, _) => {}
            }
            let eta2 = g.tape.elu(eta2)?;
            let eta1 = g.linear(eta2, &format!("{prefix}.fc1"))?;
            let eta1 = g.dropout(eta1)?;
            let gated = g.glu(eta1, &format!("{prefix}.glu"))?;
            let skip_name = format!("{prefix}.skip");
            let skip = if g.has_param(&format!("{skip_name}.w")) {
                g.linear(a, &skip_name)?
            } else {
                a
            };
            let sum = g.tape.add(skip, gated)?;
            g.affine_norm(sum, &format!("{prefix}.norm"))
        })
    }

    /// `norm(glu(dropout(x)) + residual)`.
    pub fn gate_add_norm(&mut self, x: Var, residual: Var, prefix: &str) -> Result<Var> {
        self.scoped(prefix, |g| {
            let x = g.dropout(x)?;
            let gated = g.glu(x, &format!("{prefix}.glu"))?;
            let sum = g.tape.add(gated, residual)?;
            g.affine_norm(sum, &format!("{prefix}.norm"))
        })
    }

    /// Softmax-weighted mixture of per-variable GRNs. Every input is
    /// `[T, hidden]`; returns the combined `[T, hidden]` features and the
    /// `[T, n]` selection weights.
    pub fn variable_selection(
        &mut self,
        vars: &[Var],
        context: Option<Var>,
        prefix: &str,
    ) -> Result<(Var, Var)> {
        if vars.is_empty() {
            return Err(ModelError::Config(format!("{prefix}: empty variable list")));
        }
        self.scoped(prefix, |g| {
            let flat = g.tape.concat(vars, 1)?;
            let logits = g.grn(flat, context, &format!("{prefix}.flat"))?;
            let weights = g.tape.softmax_lastdim(logits)?;
            let mut combined = None;
            for (i, &v) in vars.iter().enumerate() {
                let processed = g.grn(v, None, &format!("{prefix}.var{i}"))?;
                let w = g.tape.slice(weights, 1, i, 1)?;
                let term = g.tape.mul(w, processed)?;
                combined = Some(match combined {
                    None => term,
                    Some(acc) => g.tape.add(acc, term)?,
                });
            }
            Ok((combined.expect("non-empty"), weights))
        })
    }

    /// Embeds the categorical statics, selects among them and derives the
    /// four context vectors.
    pub fn static_encode(&mut self, codes: &StaticCodes, config: &ModelConfig) -> Result<StaticContexts> {
        codes.validate(&config.static_cardinalities)?;
        self.scoped("static", |g| {
            let mut embedded = Vec::with_capacity(STATIC_FIELDS.len());
            for (field, code) in STATIC_FIELDS.iter().zip(codes.as_array()) {
                let table = g.param(&format!("static.emb.{field}"))?;
                embedded.push(g.tape.embedding_lookup(table, &[code])?);
            }
            let (combined, weights) = g.variable_selection(&embedded, None, "static.vsn")?;
            Ok(StaticContexts {
                selection: g.grn(combined, None, "static.ctx_selection")?,
                cell: g.grn(combined, None, "static.ctx_cell")?,
                hidden: g.grn(combined, None, "static.ctx_hidden")?,
                enrichment: g.grn(combined, None, "static.ctx_enrichment")?,
                weights,
            })
        })
    }

    /// Projects each column of a `[T, n]` real-valued block to `[T, hidden]`.
    pub fn embed_reals(&mut self, block: Var, n: usize, prefix: &str) -> Result<Vec<Var>> {
        self.scoped(prefix, |g| {
            (0..n)
                .map(|i| {
                    let col = g.tape.slice(block, 1, i, 1)?;
                    g.linear(col, &format!("{prefix}{i}"))
                })
                .collect()
        })
    }

    /// Runs an LSTM over the rows of `inputs` from state `(h0, c0)`.
    /// Returns the `[T, hidden]` outputs and the final `(h, c)`.
    pub fn lstm(&mut self, inputs: Var, h0: Var, c0: Var, prefix: &str) -> Result<(Var, Var, Var)> {
        self.scoped(prefix, |g| {
            let wx = g.param(&format!("{prefix}.wx"))?;
            let wh = g.param(&format!("{prefix}.wh"))?;
            let b = g.param(&format!("{prefix}.b"))?;
            let hidden = g.tape.shape(h0)[1];
            let steps = g.tape.shape(inputs)[0];
            let xw = g.tape.matmul(inputs, wx)?;
            let xw = g.tape.add(xw, b)?;
            let (mut h, mut c) = (h0, c0);
            let mut outs = Vec::with_capacity(steps);
            for t in 0..steps {
                let xt = g.tape.slice(xw, 0, t, 1)?;
                let hw = g.tape.matmul(h, wh)?;
                let gates = g.tape.add(xt, hw)?;
                let i = g.tape.slice(gates, 1, 0, hidden)?;
                let i = g.tape.sigmoid(i)?;
                let f = g.tape.slice(gates, 1, hidden, hidden)?;
                let f = g.tape.sigmoid(f)?;
                let cand = g.tape.slice(gates, 1, 2 * hidden, hidden)?;
                let cand = g.tape.tanh(cand)?;
                let o = g.tape.slice(gates, 1, 3 * hidden, hidden)?;
                let o = g.tape.sigmoid(o)?;
                let keep = g.tape.mul(f, c)?;
                let write = g.tape.mul(i, cand)?;
                c = g.tape.add(keep, write)?;
                let tc = g.tape.tanh(c)?;
                h = g.tape.mul(o, tc)?;
                outs.push(h);
            }
            let out = g.tape.concat(&outs, 0)?;
            Ok((out, h, c))
        })
    }

    /// Interpretable multi-head self-attention with a causal mask: per-head
    /// queries and keys, one value projection shared by all heads, head
    /// outputs averaged. Queries are the last `n_query` rows of `x`; query
    /// `t` sees key `j` iff `j <= offset + t` with `offset = rows − n_query`.
    ///
    /// Returns the `[n_query, hidden]` output and the head-averaged
    /// attention matrix `[n_query, rows]`.
    pub fn interpretable_attention(
        &mut self,
        x: Var,
        n_query: usize,
        heads: usize,
        prefix: &str,
    ) -> Result<(Var, Tensor)> {
        self.scoped(prefix, |g| {
            let rows = g.tape.shape(x)[0];
            let offset = rows - n_query;
            let queries = g.tape.slice(x, 0, offset, n_query)?;
            let wv = g.param(&format!("{prefix}.wv"))?;
            let values = g.tape.matmul(x, wv)?;
            let dk = g.tape.shape(values)[1];
            let keep: Vec<bool> = (0..n_query)
                .flat_map(|t| (0..rows).map(move |j| j <= offset + t))
                .collect();

            let mut head_sum = None;
            let mut attn_sum = vec![0.0; n_query * rows];
            for k in 0..heads {
                let wq = g.param(&format!("{prefix}.head{k}.wq"))?;
                let wk = g.param(&format!("{prefix}.head{k}.wk"))?;
                let q = g.tape.matmul(queries, wq)?;
                let kk = g.tape.matmul(x, wk)?;
                let kt = g.tape.transpose(kk)?;
                let scores = g.tape.matmul(q, kt)?;
                let scores = g.tape.scale(scores, 1.0 / (dk as f64).sqrt())?;
                let attn = g.tape.masked_softmax_lastdim(scores, &keep)?;
                for (acc, v) in attn_sum.iter_mut().zip(g.tape.value(attn).data()) {
                    *acc += v;
                }
                let out = g.tape.matmul(attn, values)?;
                head_sum = Some(match head_sum {
                    None => out,
                    Some(acc) => g.tape.add(acc, out)?,
                });
            }
            let averaged = g.tape.scale(head_sum.expect("heads > 0"), 1.0 / heads as f64)?;
            let out = g.linear(averaged, &format!("{prefix}.out"))?;
            let attention: Vec<f64> = attn_sum.iter().map(|v| v / heads as f64).collect();
            Ok((out, Tensor::new(vec![n_query, rows], attention)?))
        })
    }
}
