use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{normalize_text, strip_accents};
use crate::corpus::AdRecord;

/// Keywords after normalization and accent stripping. "electoral" is the
/// Spanish-influenced spelling that also turns up in Brazilian disclaimers.
const KEYWORDS: [&str; 3] = ["propaganda eleitoral", "propaganda electoral", "propaganda politica"];

static CPF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{3}\.?\d{3}\.?\d{3}-?\d{2}\b").unwrap());
// branch field of 3 or 4 digits; some printed disclaimers drop a digit
static CNPJ_RELAXED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b\d{2}\.?\d{3}\.?\d{3}/?\d{3,4}-?\d{2}\b").unwrap());
static CNPJ_STRICT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{2}\.?\d{3}\.?\d{3}/?\d{4}-?\d{2}\b").unwrap());

/// What an ad's text says about its electoral disclaimer.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComplianceInfo {
    pub has_electoral_keyword: bool,
    /// 11 digits, punctuation removed.
    pub cpf: Option<String>,
    /// Digits only, punctuation removed.
    pub cnpj: Option<String>,
    pub compliant: bool,
}

fn digits(s: &str) -> String {
    s.chars().filter(char::is_ascii_digit).collect()
}

/// Looks for a disclaimer keyword and a tax id in text and disclaimer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DisclaimerDetector {
    /// Require a 4-digit CNPJ branch field.
    pub strict_cnpj: bool,
}

impl DisclaimerDetector {
    pub fn detect(&self, ad: &AdRecord) -> ComplianceInfo {
        let mut raw = ad.text.clone();
        if let Some(d) = &ad.disclaimer {
            raw.push('\n');
            raw.push_str(d);
        }
        self.detect_text(&raw)
    }

    pub fn detect_text(&self, raw: &str) -> ComplianceInfo {
        let folded = strip_accents(&normalize_text(raw));
        let has_electoral_keyword = KEYWORDS.iter().any(|k| folded.contains(k));
        // NFKC turns full-width digits and slashes into ASCII before matching
        let cnpj_re = if self.strict_cnpj { &CNPJ_STRICT } else { &CNPJ_RELAXED };
        let cnpj = cnpj_re.find(&folded).map(|m| digits(m.as_str()));
        let cpf = CPF.find(&folded).map(|m| digits(m.as_str()));
        let compliant = has_electoral_keyword && (cpf.is_some() || cnpj.is_some());
        ComplianceInfo {
            has_electoral_keyword,
            cpf,
            cnpj,
            compliant,
        }
    }
}

/// [`DisclaimerDetector`] with the relaxed CNPJ pattern.
pub fn detect_disclaimer(ad: &AdRecord) -> ComplianceInfo {
    DisclaimerDetector::default().detect(ad)
}
