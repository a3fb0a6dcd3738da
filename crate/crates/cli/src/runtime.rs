//! Turns config file plus flags into a ready [`Pipeline`].

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use aetheria_core::clock::{self, FixedClock, SharedClock};
use aetheria_core::config::ExperimentConfig;
use aetheria_core::library::CaseLibrary;
use aetheria_core::pipeline::Pipeline;
use aetheria_core::prompts::PromptSet;
use aetheria_core::provider::{Gateway, OpenAiCompatible, Provider, ReplayProvider};

use crate::cli::GlobalArgs;
use crate::settings::Settings;
use crate::CliError;

/// Applies `args` on top of the config file named by `args.config`.
pub fn resolve_settings(args: &GlobalArgs) -> Result<Settings, CliError> {
    let mut s = Settings::load(args.config.as_deref())?;
    apply_overrides(&mut s, args)?;
    Ok(s)
}

pub fn apply_overrides(s: &mut Settings, args: &GlobalArgs) -> Result<(), CliError> {
    let e = &mut s.experiment;
    if let [n] = args.rounds[..] {
        e.n_rounds = n;
    }
    if let Some(k) = args.top_k {
        e.k_retrieval = k;
    }
    if let Some(order) = args.turn_order {
        e.turn_order = order;
    }
    for name in &args.ablate {
        e.ablation = e.ablation.apply(name.trim()).map_err(|err| CliError::Config(err.to_string()))?;
    }
    if let Some(p) = args.parallelism {
        e.parallelism = p;
    }
    if let Some(seed) = args.seed {
        e.seed = seed;
    }
    if let Some(lib) = &args.library {
        s.paths.library = lib.clone();
    }
    if let Some(dir) = &args.runs_dir {
        s.paths.runs_dir = dir.clone();
    }
    if let Some(dir) = &args.review_dir {
        s.paths.review_dir = dir.clone();
    }
    s.experiment.validate().map_err(|err| CliError::Config(err.to_string()))
}

pub fn clock_for(args: &GlobalArgs) -> SharedClock {
    match args.fixed_clock {
        Some(t) => Arc::new(FixedClock(t)),
        None => clock::system(),
    }
}

/// Replay when a script is given; otherwise the live client, which needs
/// configured model names.
pub fn gateway(config: &ExperimentConfig, replay: Option<&Path>, clock: SharedClock) -> Result<Gateway, CliError> {
    let provider: Arc<dyn Provider> = match replay {
        Some(path) => Arc::new(ReplayProvider::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?),
        None => {
            config.models.check_live().map_err(|e| CliError::Config(e.to_string()))?;
            let timeout = Duration::from_secs(config.models.timeout_secs);
            Arc::new(OpenAiCompatible::from_env(timeout).map_err(|e| CliError::Config(e.to_string()))?)
        }
    };
    Gateway::new(provider, config.models.routes(), config.models.retry(), clock).map_err(|e| CliError::Config(e.to_string()))
}

pub fn prompts(dir: Option<&Path>) -> Result<PromptSet, CliError> {
    match dir {
        Some(d) => PromptSet::load_dir(d).map_err(|e| CliError::Config(format!("{}: {e}", d.display()))),
        None => Ok(PromptSet::builtin()),
    }
}

pub struct Runtime {
    pub settings: Settings,
    pub pipeline: Pipeline,
    pub library: Arc<CaseLibrary>,
    pub clock: SharedClock,
}

impl Runtime {
    /// Opens the configured library; `library` replaces it when given.
    pub fn build(args: &GlobalArgs, library: Option<PathBuf>) -> Result<Self, CliError> {
        let settings = resolve_settings(args)?;
        let clock = clock_for(args);
        let gateway = gateway(&settings.experiment, args.replay.as_deref(), clock.clone())?;
        let prompts = prompts(settings.paths.prompts_dir.as_deref())?;
        let library = Arc::new(CaseLibrary::open(library.as_ref().unwrap_or(&settings.paths.library))?);
        let pipeline = Pipeline::new(settings.experiment.clone(), Arc::new(gateway), Arc::new(prompts), Some(library.clone()))
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Runtime { settings, pipeline, library, clock })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aetheria_core::model::TurnOrder;

    #[test]
    fn flags_override_the_file() {
        let mut s = Settings::default();
        let args = GlobalArgs {
            rounds: vec![3],
            top_k: Some(2),
            turn_order: Some(TurnOrder::LooseFirst),
            ablate: vec!["no-supporter".into(), "no-image".into()],
            ..Default::default()
        };
        apply_overrides(&mut s, &args).unwrap();
        assert_eq!((s.experiment.n_rounds, s.experiment.k_retrieval), (3, 2));
        assert_eq!(s.experiment.turn_order, TurnOrder::LooseFirst);
        assert!(!s.experiment.ablation.supporter_enabled && !s.experiment.ablation.image_modality_enabled);
    }

    #[test]
    fn round_lists_leave_the_default_alone() {
        let mut s = Settings::default();
        apply_overrides(&mut s, &GlobalArgs { rounds: vec![1, 2, 3], ..Default::default() }).unwrap();
        assert_eq!(s.experiment.n_rounds, ExperimentConfig::default().n_rounds);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        let mut s = Settings::default();
        let args = GlobalArgs { ablate: vec!["no-everything".into()], ..Default::default() };
        assert!(matches!(apply_overrides(&mut s, &args), Err(CliError::Config(_))));
        let args = GlobalArgs { rounds: vec![0], ..Default::default() };
        assert!(matches!(apply_overrides(&mut Settings::default(), &args), Err(CliError::Config(_))));
    }

    #[test]
    fn live_gateway_needs_model_names() {
        let err = gateway(&ExperimentConfig::default(), None, clock::system()).unwrap_err();
        assert!(err.to_string().contains("debater_model"), "{err}");
    }
}
