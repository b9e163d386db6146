use serde::{Deserialize, Serialize};

use crate::corpus::{Domain, DomainGraph};
use crate::error::{Error, Result};
use crate::model::classifier::ClassifierWeights;
use crate::model::layers::{
    inter_domain_enhance, merge_user_embedding, propagate_and_concat, split_user_embedding, EnhanceCache,
};
use crate::model::ModelConfig;
use crate::numcore::{DenseMatrix, EngineRng, ParameterStore};

/// Fixed positions of the network's parameters inside the store.
pub mod param {
    use crate::corpus::Domain;

    pub const USER_X: usize = 0;
    pub const USER_Y: usize = 1;
    pub const ITEM_X: usize = 2;
    pub const ITEM_Y: usize = 3;
    pub const QUERY_X: usize = 4;
    pub const KEY_X: usize = 5;
    pub const QUERY_Y: usize = 6;
    pub const KEY_Y: usize = 7;
    pub const CLS_W1: usize = 8;
    pub const CLS_B1: usize = 9;
    pub const CLS_W2: usize = 10;
    pub const CLS_B2: usize = 11;
    pub const COUNT: usize = 12;

    pub const NAMES: [&str; COUNT] = [
        "user_embedding.x",
        "user_embedding.y",
        "item_embedding.x",
        "item_embedding.y",
        "attention_query.x",
        "attention_key.x",
        "attention_query.y",
        "attention_key.y",
        "classifier.w1",
        "classifier.b1",
        "classifier.w2",
        "classifier.b2",
    ];

    pub const CLASSIFIER: [usize; 4] = [CLS_W1, CLS_B1, CLS_W2, CLS_B2];

    pub fn user(d: Domain) -> usize {
        [USER_X, USER_Y][d.index()]
    }

    pub fn item(d: Domain) -> usize {
        [ITEM_X, ITEM_Y][d.index()]
    }

    pub fn query(d: Domain) -> usize {
        [QUERY_X, QUERY_Y][d.index()]
    }

    pub fn key(d: Domain) -> usize {
        [KEY_X, KEY_Y][d.index()]
    }
}

/// Table sizes of a model instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub num_users: usize,
    pub num_items_x: usize,
    pub num_items_y: usize,
}

impl ModelDims {
    pub fn num_items(&self, d: Domain) -> usize {
        match d {
            Domain::X => self.num_items_x,
            Domain::Y => self.num_items_y,
        }
    }

    /// Expected shape of every parameter, in store order.
    pub fn shapes(&self, cfg: &ModelConfig) -> [(usize, usize); param::COUNT] {
        let (d, full, shared, hidden) = (cfg.embed_dim, cfg.full_dim(), cfg.shared_dim(), cfg.hidden_dim());
        [
            (self.num_users, d),
            (self.num_users, d),
            (self.num_items_x, d),
            (self.num_items_y, d),
            (full, full),
            (full, full),
            (full, full),
            (full, full),
            (shared, hidden),
            (1, hidden),
            (hidden, 1),
            (1, 1),
        ]
    }
}

/// All network parameters plus the (resolved) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub dims: ModelDims,
    pub store: ParameterStore,
}

impl ModelState {
    /// Embeddings and weight matrices uniform in `±0.5/√cols`; biases zero.
    pub fn new(config: &ModelConfig, dims: ModelDims, rng: &mut EngineRng) -> Result<Self> {
        Self::build(config, dims, |r, c, is_bias| {
            if is_bias {
                DenseMatrix::zeros(r, c)
            } else {
                DenseMatrix::uniform(r, c, 0.5 / (c as f64).sqrt(), rng)
            }
        })
    }

    /// Every parameter zero.
    pub fn zeros(config: &ModelConfig, dims: ModelDims) -> Result<Self> {
        Self::build(config, dims, |r, c, _| DenseMatrix::zeros(r, c))
    }

    fn build(
        config: &ModelConfig,
        dims: ModelDims,
        mut init: impl FnMut(usize, usize, bool) -> DenseMatrix,
    ) -> Result<Self> {
        let config = config.resolved()?;
        let mut store = ParameterStore::new();
        for (k, (r, c)) in dims.shapes(&config).into_iter().enumerate() {
            let is_bias = k == param::CLS_B1 || k == param::CLS_B2;
            store.insert(param::NAMES[k], init(r, c, is_bias))?;
        }
        Ok(Self { config, dims, store })
    }

    /// Wraps an existing store after checking every shape against the config.
    pub fn from_store(config: &ModelConfig, dims: ModelDims, store: ParameterStore) -> Result<Self> {
        let config = config.resolved()?;
        let shapes = dims.shapes(&config);
        if store.len() != param::COUNT {
            return Err(Error::Config(format!("expected {} parameters, found {}", param::COUNT, store.len())));
        }
        for (k, shape) in shapes.iter().enumerate() {
            let p = store.get(k);
            if p.name != param::NAMES[k] || p.value.shape() != *shape {
                return Err(Error::shape("from_store", *shape, p.value.shape()));
            }
        }
        Ok(Self { config, dims, store })
    }

    pub fn classifier(&self) -> ClassifierWeights<'_> {
        classifier_weights(&self.store)
    }

    /// Final embeddings of every user and item in both domains.
    pub fn embeddings(&self, graphs: [&DomainGraph; 2]) -> Result<Embeddings> {
        compute_embeddings(&self.config, &self.store, graphs)
    }
}

pub fn classifier_weights(store: &ParameterStore) -> ClassifierWeights<'_> {
    ClassifierWeights {
        w1: store.value(param::CLS_W1),
        b1: store.value(param::CLS_B1),
        w2: store.value(param::CLS_W2),
        b2: store.value(param::CLS_B2),
    }
}

/// Forward intermediates of one domain.
#[derive(Debug, Clone)]
pub struct DomainEmbeddings {
    /// Concatenated propagated user embedding, `|U| × (K+1)d`.
    pub user_out: DenseMatrix,
    /// Concatenated propagated item embedding, `|V| × (K+1)d`.
    pub item_out: DenseMatrix,
    pub shared: DenseMatrix,
    pub specific: DenseMatrix,
    /// Shared part after fusion with the other domain.
    pub enhanced: DenseMatrix,
    /// Enhanced shared merged back with specific, in the item layout.
    pub user_final: DenseMatrix,
    pub enhance_cache: EnhanceCache,
}

#[derive(Debug, Clone)]
pub struct Embeddings {
    pub domains: [DomainEmbeddings; 2],
}

impl Embeddings {
    pub fn domain(&self, d: Domain) -> &DomainEmbeddings {
        &self.domains[d.index()]
    }
}

/// propagate → split → enhance → merge, for both domains.
pub fn compute_embeddings(cfg: &ModelConfig, store: &ParameterStore, graphs: [&DomainGraph; 2]) -> Result<Embeddings> {
    let layers = cfg.gcn_layers;
    let mut parts = Vec::with_capacity(2);
    for d in Domain::BOTH {
        let (user_out, item_out) =
            propagate_and_concat(graphs[d.index()], store.value(param::user(d)), store.value(param::item(d)), layers)?;
        let (shared, specific) = split_user_embedding(&user_out, cfg.embed_dim)?;
        parts.push((user_out, item_out, shared, specific));
    }
    let build = |d: Domain, parts: &[(DenseMatrix, DenseMatrix, DenseMatrix, DenseMatrix)]| {
        let own = &parts[d.index()];
        let other = &parts[d.other().index()];
        let (enhanced, enhance_cache) = inter_domain_enhance(
            &own.2,
            &other.2,
            store.value(param::query(d)),
            store.value(param::key(d)),
            cfg.gamma(d),
        )?;
        let user_final = merge_user_embedding(&enhanced, &own.3, cfg.embed_dim)?;
        Ok::<_, Error>((enhanced, enhance_cache, user_final))
    };
    let (ex, cx, fx) = build(Domain::X, &parts)?;
    let (ey, cy, fy) = build(Domain::Y, &parts)?;
    let mut parts = parts.into_iter();
    let (uox, iox, sx, px) = parts.next().unwrap();
    let (uoy, ioy, sy, py) = parts.next().unwrap();
    Ok(Embeddings {
        domains: [
            DomainEmbeddings {
                user_out: uox,
                item_out: iox,
                shared: sx,
                specific: px,
                enhanced: ex,
                user_final: fx,
                enhance_cache: cx,
            },
            DomainEmbeddings {
                user_out: uoy,
                item_out: ioy,
                shared: sy,
                specific: py,
                enhanced: ey,
                user_final: fy,
                enhance_cache: cy,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_graph, Interaction};
    use crate::numcore::seeded_rng;

    fn dims() -> ModelDims {
        ModelDims { num_users: 3, num_items_x: 4, num_items_y: 2 }
    }

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig { embed_dim: 4, gcn_layers: 2, ..Default::default() };
        let m = ModelState::new(&cfg, dims(), &mut seeded_rng(1)).unwrap();
        assert_eq!(m.store.value(param::QUERY_X).shape(), (12, 12));
        assert_eq!(m.store.value(param::CLS_W1).shape(), (6, 3));
        assert_eq!(m.store.value(param::ITEM_Y).shape(), (2, 4));
        let bound = 0.5 / 2.0;
        assert!(m.store.value(param::USER_X).data().iter().all(|v| v.abs() <= bound));

        let ng = ModelConfig { variant: crate::model::Variant::NoGraph, ..cfg };
        let m = ModelState::new(&ng, dims(), &mut seeded_rng(1)).unwrap();
        assert_eq!(m.store.value(param::KEY_Y).shape(), (4, 4));
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = ModelConfig { embed_dim: 4, gcn_layers: 1, ..Default::default() };
        let a = ModelState::new(&cfg, dims(), &mut seeded_rng(5)).unwrap();
        let b = ModelState::new(&cfg, dims(), &mut seeded_rng(5)).unwrap();
        let c = ModelState::new(&cfg, dims(), &mut seeded_rng(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn embeddings_have_expected_widths() {
        let cfg = ModelConfig { embed_dim: 4, gcn_layers: 2, ..Default::default() };
        let m = ModelState::new(&cfg, dims(), &mut seeded_rng(2)).unwrap();
        let gx = build_graph(&[Interaction::new(0, 1), Interaction::new(2, 3)], 3, 4).unwrap();
        let gy = build_graph(&[Interaction::new(1, 0)], 3, 2).unwrap();
        let e = m.embeddings([&gx, &gy]).unwrap();
        let x = e.domain(Domain::X);
        assert_eq!(x.user_final.shape(), (3, 12));
        assert_eq!(x.item_out.shape(), (4, 12));
        assert_eq!(x.enhanced.shape(), (3, 6));
    }

    #[test]
    fn from_store_rejects_wrong_shapes() {
        let cfg = ModelConfig { embed_dim: 4, gcn_layers: 1, ..Default::default() };
        let m = ModelState::new(&cfg, dims(), &mut seeded_rng(3)).unwrap();
        let other = ModelDims { num_users: 4, ..dims() };
        assert!(ModelState::from_store(&cfg, other, m.store.clone()).is_err());
        assert!(ModelState::from_store(&cfg, dims(), m.store).is_ok());
    }
}
