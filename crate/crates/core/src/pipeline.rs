//! One item through Preprocessor, Supporter, debate and Arbiter.

use std::sync::Arc;

use crate::arbiter::{self, ArbiterError};
use crate::config::{ConfigError, ExperimentConfig};
use crate::debate;
use crate::library::CaseLibrary;
use crate::model::{ContentItem, RunRecord, RunStatus, Violation};
use crate::preprocessor::Preprocessor;
use crate::prompts::PromptSet;
use crate::provider::{CallLog, Gateway};
use crate::supporter::{self, render_briefing};

#[derive(Clone)]
pub struct Pipeline {
    config: ExperimentConfig,
    fingerprint: String,
    gateway: Arc<Gateway>,
    prompts: Arc<PromptSet>,
    library: Option<Arc<CaseLibrary>>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline").field("fingerprint", &self.fingerprint).finish_non_exhaustive()
    }
}

/// Where the run sits in an experiment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunContext {
    pub run_id: String,
    pub batch_id: Option<String>,
}

impl Pipeline {
    pub fn new(
        config: ExperimentConfig,
        gateway: Arc<Gateway>,
        prompts: Arc<PromptSet>,
        library: Option<Arc<CaseLibrary>>,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let fingerprint = config.fingerprint();
        Ok(Pipeline { config, fingerprint, gateway, prompts, library })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn prompts(&self) -> &Arc<PromptSet> {
        &self.prompts
    }

    pub fn library(&self) -> Option<&Arc<CaseLibrary>> {
        self.library.as_ref()
    }

    pub fn with_library(&self, library: Option<Arc<CaseLibrary>>) -> Self {
        Pipeline { library, ..self.clone() }
    }

    pub fn with_config(&self, config: ExperimentConfig) -> Result<Self, ConfigError> {
        Pipeline::new(config, self.gateway.clone(), self.prompts.clone(), self.library.clone())
    }

    /// Runs the full pipeline. Every provider or parse failure still yields
    /// a record; only an invalid item is refused.
    pub async fn run_item(&self, item: &ContentItem, ctx: RunContext) -> Result<RunRecord, Violation> {
        item.validate()?;
        let clock = self.gateway.clock().clone();
        let started_at = clock.now();
        let mut log = CallLog::new();
        let flags = &self.config.ablation;

        let standardized = Preprocessor::new(flags.image_modality_enabled)
            .standardize(item, &self.gateway, &mut log)
            .await;

        let mut record = RunRecord {
            run_id: ctx.run_id,
            item_id: item.id.clone(),
            batch_id: ctx.batch_id,
            item: item.clone(),
            config_fingerprint: self.fingerprint.clone(),
            standardized_text: standardized.text.clone(),
            placeholder_used: standardized.placeholder_used,
            briefing: None,
            transcript: None,
            report: None,
            status: RunStatus::ProviderError,
            raw_output: None,
            error: None,
            cost: Default::default(),
            exchanges: Vec::new(),
            started_at,
            finished_at: started_at,
        };

        let outcome = async {
            if flags.supporter_active() {
                let library = if flags.retrieval_enabled { self.library.as_deref() } else { None };
                let briefing = supporter::build_briefing(
                    &standardized,
                    self.config.k_retrieval,
                    library,
                    &self.gateway,
                    &self.prompts,
                    &mut log,
                )
                .await?;
                record.briefing = Some(briefing);
            }
            let briefing_text = render_briefing(record.briefing.as_ref());
            if let Some(debate_config) = self.config.debate() {
                let transcript =
                    debate::run_debate(&standardized, &briefing_text, &debate_config, &self.gateway, &self.prompts, &mut log)
                        .await?;
                record.transcript = Some(transcript);
            }
            arbiter::adjudicate(&standardized, &briefing_text, record.transcript.as_ref(), &self.gateway, &self.prompts, &mut log)
                .await
        }
        .await;

        match outcome {
            Ok(report) => {
                record.report = Some(report);
                record.status = RunStatus::Completed;
            }
            Err(ArbiterError::Invalid { source, raw }) => {
                record.status = RunStatus::InvalidOutput;
                record.error = Some(source.to_string());
                record.raw_output = Some(raw);
            }
            Err(ArbiterError::Gateway(e)) => {
                record.status = RunStatus::ProviderError;
                record.error = Some(e.to_string());
            }
        }
        record.cost = log.ledger;
        record.exchanges = log.exchanges;
        record.finished_at = clock.now();
        debug_assert!(record.is_consistent());
        Ok(record)
    }
}
