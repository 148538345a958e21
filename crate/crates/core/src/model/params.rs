use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::autodiff::{Tape, Var};
use crate::error::ModelError;
use crate::tensor::{numel, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Init {
    /// Uniform in `±sqrt(1 / fan_in)`.
    Uniform { fan_in: usize },
    Ones,
    Zeros,
}

/// Name, shape and initialisation of one learnable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    init: Init,
}

impl ParamSpec {
    fn new(name: String, shape: Vec<usize>, init: Init) -> Self {
        Self { name, shape, init }
    }

    pub fn numel(&self) -> usize {
        numel(&self.shape)
    }
}

fn conv(out: &mut Vec<ParamSpec>, name: &str, cout: usize, cin: usize, k: usize, bias: bool) {
    let fan_in = cin * k;
    out.push(ParamSpec::new(
        format!("{name}.weight"),
        vec![cout, cin, k],
        Init::Uniform { fan_in },
    ));
    if bias {
        out.push(ParamSpec::new(format!("{name}.bias"), vec![cout], Init::Uniform { fan_in }));
    }
}

fn norm(out: &mut Vec<ParamSpec>, name: &str, channels: usize) {
    out.push(ParamSpec::new(format!("{name}.gain"), vec![channels, 1], Init::Ones));
    out.push(ParamSpec::new(format!("{name}.bias"), vec![channels, 1], Init::Zeros));
}

/// Every learnable tensor of the network in a fixed order.
///
/// Convolutions carry a bias except the depthwise ones; the decoder has none
/// so that a zero latent decodes to exactly zero. The last separator block
/// has no residual branch because nothing consumes it.
pub fn param_layout(cfg: &ModelConfig) -> Vec<ParamSpec> {
    let (n, l, b, h, p) = (
        cfg.n_filters,
        cfg.filter_len,
        cfg.bottleneck,
        cfg.hidden,
        cfg.kernel,
    );
    let mut out = Vec::new();
    conv(&mut out, "encoder", n, 1, l, true);
    norm(&mut out, "separator.input_norm", n);
    conv(&mut out, "separator.bottleneck", b, n, 1, true);
    let total = cfg.blocks * cfg.repeats;
    for i in 0..total {
        let pre = format!("separator.blocks.{i}");
        conv(&mut out, &format!("{pre}.conv_in"), h, b, 1, true);
        if cfg.glu {
            conv(&mut out, &format!("{pre}.gate_in"), h, b, 1, true);
        }
        norm(&mut out, &format!("{pre}.norm_in"), h);
        conv(&mut out, &format!("{pre}.depthwise"), h, 1, p, false);
        if cfg.glu {
            conv(&mut out, &format!("{pre}.depthwise_gate"), h, 1, p, false);
        }
        norm(&mut out, &format!("{pre}.norm_out"), h);
        if i + 1 < total {
            conv(&mut out, &format!("{pre}.residual"), b, h, 1, true);
        }
        conv(&mut out, &format!("{pre}.skip"), b, h, 1, true);
    }
    conv(&mut out, "separator.mask", cfg.appliances * n, b, 1, true);
    out.push(ParamSpec::new(
        "decoder.weight".into(),
        vec![n, l],
        Init::Uniform { fan_in: n },
    ));
    out
}

/// Exact number of learnable scalars.
pub fn param_count(cfg: &ModelConfig) -> usize {
    param_layout(cfg).iter().map(ParamSpec::numel).sum()
}

/// Scalar count per layer (tensor name without its `.weight`/`.bias`/`.gain`
/// suffix), in layout order.
pub fn param_breakdown(cfg: &ModelConfig) -> Vec<(String, usize)> {
    let mut rows: Vec<(String, usize)> = Vec::new();
    for spec in param_layout(cfg) {
        let layer = spec
            .name
            .rsplit_once('.')
            .map_or(spec.name.as_str(), |(head, _)| head)
            .to_string();
        match rows.last_mut() {
            Some((name, count)) if *name == layer => *count += spec.numel(),
            _ => rows.push((layer, spec.numel())),
        }
    }
    rows
}

/// Named parameter tensors in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    /// Fresh parameters for `cfg`, deterministic in `seed`.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = param_layout(cfg)
            .into_iter()
            .map(|spec| {
                let n = spec.numel();
                let data = match spec.init {
                    Init::Uniform { fan_in } => {
                        let bound = (1.0 / fan_in as f64).sqrt();
                        (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
                    }
                    Init::Ones => vec![1.0; n],
                    Init::Zeros => vec![0.0; n],
                };
                (spec.name, Tensor::new(spec.shape, data).expect("layout shape"))
            })
            .collect();
        Self::from_pairs(pairs)
    }

    pub fn from_pairs(pairs: Vec<(String, Tensor)>) -> Self {
        let (names, tensors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self {
            names,
            tensors,
            index,
        }
    }

    /// Checks names and shapes against the layout of `cfg`.
    pub fn check_layout(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        let layout = param_layout(cfg);
        if layout.len() != self.tensors.len() {
            return Err(ModelError::Config(format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                self.tensors.len()
            )));
        }
        for (spec, (name, t)) in layout.iter().zip(self.iter()) {
            if spec.name != name || spec.shape != t.shape() {
                return Err(ModelError::Config(format!(
                    "parameter {name} {:?} does not match layout {} {:?}",
                    t.shape(),
                    spec.name,
                    spec.shape
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn total(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index.get(name).map(|&i| &mut self.tensors[i])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Puts every tensor on `tape`, differentiable when `trainable`.
    pub fn bind<'a>(&'a self, tape: &mut Tape, trainable: bool) -> BoundParams<'a> {
        let vars = self
            .tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), trainable))
            .collect();
        BoundParams { store: self, vars }
    }

    /// Pairs this store's names with `vars` already on a tape, one per
    /// tensor in layout order.
    pub fn attach(&self, vars: &[Var]) -> Result<BoundParams<'_>, ModelError> {
        if vars.len() != self.tensors.len() {
            return Err(ModelError::Config(format!(
                "{} vars for {} parameters",
                vars.len(),
                self.tensors.len()
            )));
        }
        Ok(BoundParams {
            store: self,
            vars: vars.to_vec(),
        })
    }
}

/// Parameters recorded on a tape, looked up by name.
pub struct BoundParams<'a> {
    store: &'a ParamStore,
    vars: Vec<Var>,
}

impl BoundParams<'_> {
    pub fn get(&self, name: &str) -> Var {
        let i = *self
            .store
            .index
            .get(name)
            .unwrap_or_else(|| panic!("no parameter named {name}"));
        self.vars[i]
    }

    pub fn try_get(&self, name: &str) -> Option<Var> {
        self.store.index.get(name).map(|&i| self.vars[i])
    }

    /// Vars in layout order.
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}
