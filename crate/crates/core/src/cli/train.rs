use std::ops::ControlFlow;

use super::{Cli, TrainArgs};
use crate::error::Result;
use crate::model::{Checkpoint, ModelConfig, ModelParams};
use crate::training::{fit, load_dataset, Trainer, TrainingConfig};

/// Flags override the resumed run's settings, which override defaults.
fn training_config(cli: &Cli, args: &TrainArgs, base: TrainingConfig) -> TrainingConfig {
    TrainingConfig {
        window_length: args.window.unwrap_or(base.window_length),
        batch_size: args.batch.unwrap_or(base.batch_size),
        learning_rate: args.lr.unwrap_or(base.learning_rate),
        limb_loss_weight: args.limb_weight.unwrap_or(base.limb_loss_weight),
        max_steps: args.steps.unwrap_or(base.max_steps),
        checkpoint_interval: args.checkpoint_interval.unwrap_or(base.checkpoint_interval),
        rng_seed: if args.resume.is_some() { base.rng_seed } else { cli.seed },
    }
}

pub(super) fn run(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let pairs = load_dataset(&args.data)?;
    let trainer = match &args.resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            let base = serde_json::from_value(ckpt.hyperparameters.clone()).unwrap_or_default();
            let config = training_config(cli, args, base);
            println!("resuming from step {}", ckpt.optimizer.as_ref().map_or(0, |o| o.step));
            Trainer::resume(ckpt, config)?
        }
        None => {
            let config = training_config(cli, args, TrainingConfig::default());
            let model = ModelConfig::with_widths(args.encoder_channels, args.decoder_channels);
            Trainer::new(ModelParams::init(model, cli.seed)?, config)?
        }
    };
    let max_steps = trainer.config.max_steps;
    let every = args.log_every.max(1);
    let outcome = fit(&pairs, trainer, &args.out, |r| {
        if r.step % every == 0 || r.step == max_steps {
            println!("step {} total {:.6} l1 {:.6} limb {:.6}", r.step, r.total, r.l1, r.limb);
        }
        ControlFlow::Continue(())
    })?;
    println!("wrote {}", outcome.final_checkpoint.display());
    Ok(())
}
