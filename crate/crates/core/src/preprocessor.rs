//! Turns a [`ContentItem`] into the single text stream every later agent reads.

use serde::{Deserialize, Serialize};

use crate::model::{ContentItem, Modality};
use crate::provider::{CallLog, Gateway};

/// Stands in for the image description when vision fails or is switched off.
pub const IMAGE_PLACEHOLDER: &str = "[IMAGE CONTENT UNAVAILABLE: visual analysis could not be performed]";
pub const USER_TEXT_LABEL: &str = "USER TEXT:";
pub const IMAGE_DESCRIPTION_LABEL: &str = "IMAGE DESCRIPTION:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardizedInput {
    pub text: String,
    pub modality: Modality,
    pub placeholder_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preprocessor {
    pub image_modality_enabled: bool,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor { image_modality_enabled: true }
    }
}

impl Preprocessor {
    pub fn new(image_modality_enabled: bool) -> Self {
        Preprocessor { image_modality_enabled }
    }

    /// Never fails: vision errors degrade to [`IMAGE_PLACEHOLDER`].
    ///
    /// Expects an item that passed [`ContentItem::validate`].
    pub async fn standardize(&self, item: &ContentItem, gateway: &Gateway, log: &mut CallLog) -> StandardizedInput {
        let text = item.text.as_deref().map(str::trim).unwrap_or_default();
        if !item.modality.has_image() {
            return StandardizedInput { text: text.to_string(), modality: item.modality, placeholder_used: false };
        }

        let description = self.describe(item, gateway, log).await;
        let placeholder_used = description.is_none();
        let description = description.unwrap_or_else(|| IMAGE_PLACEHOLDER.to_string());
        let text = match item.modality {
            Modality::ImageOnly => description,
            _ => format!("{USER_TEXT_LABEL}\n{text}\n\n{IMAGE_DESCRIPTION_LABEL}\n{description}"),
        };
        StandardizedInput { text, modality: item.modality, placeholder_used }
    }

    async fn describe(&self, item: &ContentItem, gateway: &Gateway, log: &mut CallLog) -> Option<String> {
        if !self.image_modality_enabled {
            return None;
        }
        if let Some(desc) = item.image_description.as_deref().filter(|d| !d.trim().is_empty()) {
            return Some(desc.trim().to_string());
        }
        let image_ref = item.image_ref.as_deref().filter(|r| !r.trim().is_empty())?;
        match gateway.describe_image(image_ref, log).await {
            Ok(desc) => Some(desc.trim().to_string()),
            Err(err) => {
                tracing::warn!(item = %item.id, error = %err, "vision call failed, using placeholder");
                None
            }
        }
    }
}
