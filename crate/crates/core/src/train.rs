//! The full model and one joint training step.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tape;
use crate::data::FrameFeatureSequence;
use crate::embedding::{
    self, ContrastiveConfig, EncoderPair, EncoderShape, MemoryQueue, SnippetBatch,
};
use crate::error::{Error, Result};
use crate::optim::Sgd;
use crate::reconstruction::{
    self, PositionalTable, ReconstructionConfig, ReconstructorParams, ReconstructorShape,
};
use crate::tensor::Tensor;

/// Name under which the memory queue is stored alongside the parameters.
pub const QUEUE_NAME: &str = "ctfe.queue";

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    pub input_dim: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub window: usize,
    pub queue_capacity: usize,
    pub alpha: f32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 32,
            embed_dim: 16,
            heads: 8,
            layers: 2,
            window: 10,
            queue_capacity: 65536,
            alpha: 0.999,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(Error::Config(format!("window must be >= 3, got {}", self.window)));
        }
        if !self.embed_dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "embed_dim must be even, got {}",
                self.embed_dim
            )));
        }
        if self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "embed_dim {} is not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CosegModel {
    pub config: ModelConfig,
    pub encoder: EncoderPair,
    pub reconstructor: ReconstructorParams,
    pub queue: MemoryQueue,
    pub positional: PositionalTable,
}

impl CosegModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = EncoderPair::new(
            EncoderShape {
                input_dim: config.input_dim,
                embed_dim: config.embed_dim,
            },
            config.alpha,
            &mut rng,
        )?;
        let reconstructor = ReconstructorParams::new(
            ReconstructorShape {
                dim: config.embed_dim,
                heads: config.heads,
                layers: config.layers,
            },
            &mut rng,
        )?;
        Ok(CosegModel {
            config,
            encoder,
            reconstructor,
            queue: MemoryQueue::new(config.queue_capacity, config.embed_dim),
            positional: PositionalTable::new(config.window, config.embed_dim)?,
        })
    }

    /// Every parameter and the memory queue, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out: Vec<(String, Tensor)> = self
            .encoder
            .query
            .iter()
            .chain(self.encoder.key.iter())
            .chain(self.reconstructor.params.iter())
            .map(|p| (p.name.clone(), p.value.clone()))
            .collect();
        out.push((QUEUE_NAME.into(), self.queue.to_tensor()));
        out
    }

    /// Restores parameters and the queue from `named_tensors` output. Every
    /// parameter must be present with a matching shape.
    pub fn load_named(&mut self, tensors: &[(String, Tensor)]) -> Result<()> {
        let find = |name: &str| tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t);
        for store in [
            &mut self.encoder.query,
            &mut self.encoder.key,
            &mut self.reconstructor.params,
        ] {
            let names: Vec<String> = store.iter().map(|p| p.name.clone()).collect();
            for name in names {
                let t = find(&name)
                    .ok_or_else(|| Error::Parameter(format!("missing parameter {name}")))?;
                store.set_value(&name, t)?;
            }
        }
        let queue = find(QUEUE_NAME)
            .ok_or_else(|| Error::Parameter(format!("missing {QUEUE_NAME}")))?;
        if queue.numel() > 0 && queue.cols() != self.config.embed_dim {
            return Err(Error::Parameter(format!(
                "{QUEUE_NAME}: width {} vs embed_dim {}",
                queue.cols(),
                self.config.embed_dim
            )));
        }
        self.queue = if queue.numel() == 0 {
            MemoryQueue::new(self.config.queue_capacity, self.config.embed_dim)
        } else {
            MemoryQueue::from_tensor(self.config.queue_capacity, queue)?
        };
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub videos_per_batch: usize,
    pub snippets_per_video: usize,
    pub contrastive: ContrastiveConfig,
    pub reconstruction: ReconstructionConfig,
    pub optimizer: Sgd,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            videos_per_batch: 16,
            snippets_per_video: 2,
            contrastive: ContrastiveConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            optimizer: Sgd::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, model: &ModelConfig) -> Result<()> {
        self.contrastive.validate()?;
        self.reconstruction.validate()?;
        self.optimizer.validate()?;
        if self.contrastive.window != model.window || self.reconstruction.window != model.window {
            return Err(Error::Config(format!(
                "window mismatch: model {}, contrastive {}, reconstruction {}",
                model.window, self.contrastive.window, self.reconstruction.window
            )));
        }
        if self.videos_per_batch == 0 || self.snippets_per_video == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub contrastive: f64,
    pub reconstruction: f64,
    pub joint: f64,
}

/// One optimization step on `batch`:
/// query/key encodings, `L_C`, masked reconstruction `L_R`, backward through
/// `L = L_C + β·L_R`, SGD on the query encoder and reconstructor, momentum
/// update of the key encoder, and one key embedding per snippet enqueued.
///
/// A non-finite loss or gradient returns an error before any state changes.
pub fn train_step<R: Rng + ?Sized>(
    model: &mut CosegModel,
    batch: &SnippetBatch,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<StepLosses> {
    cfg.validate(&model.config)?;
    let window = model.config.window;
    if batch.snippet_len != window {
        return Err(Error::Config(format!(
            "batch snippets have {} frames, model window is {window}",
            batch.snippet_len
        )));
    }
    let mut tape = Tape::new();
    let x = tape.constant(batch.frames.clone())?;
    let h = embedding::encode_query(&mut tape, &model.encoder, x)?;
    let keys = embedding::encode_key(&model.encoder, &batch.frames)?;
    let lc = embedding::contrastive_loss(&mut tape, h, &keys, &model.queue, &cfg.contrastive)?;

    let mask_rows = reconstruction::sample_mask_rows(
        batch.num_snippets(),
        window,
        cfg.reconstruction.mask_size,
        rng,
    )?;
    let target = tape.value(h).clone();
    let input = reconstruction::assemble_masked_input(
        &mut tape,
        &model.reconstructor,
        h,
        &mask_rows,
        &model.positional,
    )?;
    let recon = reconstruction::reconstruct(&mut tape, &model.reconstructor, input, window)?;
    let lr = reconstruction::reconstruction_loss(&mut tape, &target, recon, &mask_rows)?;
    let loss = reconstruction::joint_loss(&mut tape, lc, lr, cfg.reconstruction.beta)?;

    let losses = StepLosses {
        contrastive: tape.value(lc).item() as f64,
        reconstruction: tape.value(lr).item() as f64,
        joint: tape.value(loss).item() as f64,
    };
    let grads = tape.backward(loss)?;

    model.encoder.query.accumulate(&grads);
    model.reconstructor.params.accumulate(&grads);
    let stepped = cfg
        .optimizer
        .step(&mut [&mut model.encoder.query, &mut model.reconstructor.params]);
    if let Err(e) = stepped {
        model.encoder.query.zero_grad();
        model.reconstructor.params.zero_grad();
        return Err(e);
    }
    embedding::momentum_update(&mut model.encoder);
    embedding::enqueue_memory(&mut model.queue, &keys, window, rng)?;
    Ok(losses)
}

/// Seeded driver that samples a batch and calls [`train_step`].
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: CosegModel,
    pub config: TrainConfig,
    rng: ChaCha8Rng,
    steps: usize,
}

impl Trainer {
    pub fn new(model: CosegModel, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate(&model.config)?;
        Ok(Trainer {
            model,
            config,
            // distinct stream from the one used for initialization
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c05e_9000_0001),
            steps: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self, corpus: &[FrameFeatureSequence]) -> Result<StepLosses> {
        let batch = embedding::sample_batch(
            corpus,
            self.config.videos_per_batch,
            self.config.snippets_per_video,
            self.model.config.window,
            &mut self.rng,
        )?;
        let losses = train_step(&mut self.model, &batch, &self.config, &mut self.rng)?;
        self.steps += 1;
        Ok(losses)
    }
}
