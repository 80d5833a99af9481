//! Layered settings: preset, then a TOML file, then command-line flags.

use std::fs;
use std::path::Path;

use acnn_core::data::GeneratorConfig;
use acnn_core::model::{Arch, ModelConfig};
use acnn_core::training::TrainConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::args::ModelOverrides;
use crate::CliError;

/// Tables read from a `--config` file. Unknown tables are rejected.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub generator: Option<toml::Table>,
    pub model: Option<toml::Table>,
    pub train: Option<toml::Table>,
}

pub fn read_config_file(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path).map_err(|e| acnn_core::Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `table` on top of `base`, field by field.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, table: Option<&toml::Table>, what: &str) -> Result<T, CliError> {
    let Some(table) = table else {
        return serde_json::to_value(base)
            .and_then(serde_json::from_value)
            .map_err(|e| CliError::Usage(format!("{what}: {e}")));
    };
    let mut value = serde_json::to_value(base).map_err(|e| CliError::Usage(format!("{what}: {e}")))?;
    let over = serde_json::to_value(table).map_err(|e| CliError::Usage(format!("{what}: {e}")))?;
    merge(&mut value, over);
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("[{what}] override: {e}")))
}

/// `toy` and `table1` expand to `<arch>-toy` / `<arch>-table1`; full names
/// must agree with `arch`.
pub fn model_preset(arch: Arch, preset: &str) -> Result<ModelConfig, CliError> {
    let name = match preset {
        "toy" | "table1" => format!("{arch}-{preset}"),
        other => other.to_string(),
    };
    let cfg = ModelConfig::preset(&name)?;
    if cfg.arch != arch {
        return Err(CliError::Usage(format!("preset {name} is not a {arch} model")));
    }
    Ok(cfg)
}

pub fn apply_model_flags(m: &mut ModelConfig, o: &ModelOverrides) {
    if let Some(v) = o.embedding_dim {
        m.embedding_dim = v;
    }
    if let Some(v) = o.channels {
        for l in &mut m.layers {
            l.channels = v;
        }
    }
    if let Some(v) = o.dropout {
        m.dropout_rate = v;
    }
    if let Some(v) = o.l2 {
        m.l2_weight = v;
    }
}

pub fn apply_train_flags(t: &mut TrainConfig, o: &ModelOverrides) {
    if let Some(v) = o.epochs {
        t.max_epochs = v;
    }
    if let Some(v) = o.patience {
        t.patience = v;
    }
    if let Some(v) = o.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = o.lr {
        t.learning_rate = v;
    }
}

pub fn resolve_model_train(
    arch: Arch,
    preset: &str,
    file: &ConfigFile,
    flags: &ModelOverrides,
) -> Result<(ModelConfig, TrainConfig), CliError> {
    let mut model = overlay(&model_preset(arch, preset)?, file.model.as_ref(), "model")?;
    let mut train = overlay(&TrainConfig::default(), file.train.as_ref(), "train")?;
    apply_model_flags(&mut model, flags);
    apply_train_flags(&mut train, flags);
    if model.arch != arch {
        return Err(CliError::Usage(format!("config sets arch {} but --arch is {arch}", model.arch)));
    }
    model.validate()?;
    train.validate()?;
    Ok((model, train))
}

pub fn resolve_generator(preset: &str, file: &ConfigFile) -> Result<GeneratorConfig, CliError> {
    let g = overlay(&GeneratorConfig::preset(preset)?, file.generator.as_ref(), "generator")?;
    g.validate()?;
    Ok(g)
}
