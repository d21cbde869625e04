use serde::{Deserialize, Serialize};

use super::{EvalError, Label};

/// 2x2 table of annotator A (rows) against annotator B (columns).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub both_political: usize,
    pub a_political_b_non: usize,
    pub a_non_b_political: usize,
    pub both_non_political: usize,
}

impl Contingency {
    pub fn total(&self) -> usize {
        self.both_political + self.a_political_b_non + self.a_non_b_political + self.both_non_political
    }
}

/// Landis & Koch strength-of-agreement bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgreementBand {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl AgreementBand {
    pub fn label(self) -> &'static str {
        match self {
            AgreementBand::Poor => "Poor",
            AgreementBand::Slight => "Slight",
            AgreementBand::Fair => "Fair",
            AgreementBand::Moderate => "Moderate",
            AgreementBand::Substantial => "Substantial",
            AgreementBand::AlmostPerfect => "Almost Perfect",
        }
    }
}

impl std::fmt::Display for AgreementBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub items: usize,
    pub kappa: f64,
    pub agreement_pct: f64,
    pub observed: f64,
    pub expected: f64,
    pub contingency: Contingency,
    pub landis_koch_band: String,
}

const KAPPA_SLACK: f64 = 1e-12;

/// Band for `kappa`. Upper bounds are inclusive: 0.20 is still Slight.
pub fn landis_koch(kappa: f64) -> Result<AgreementBand, EvalError> {
    if !(-1.0 - KAPPA_SLACK..=1.0 + KAPPA_SLACK).contains(&kappa) {
        return Err(EvalError::KappaOutOfRange(kappa));
    }
    Ok(match kappa {
        k if k < 0.0 => AgreementBand::Poor,
        k if k <= 0.20 => AgreementBand::Slight,
        k if k <= 0.40 => AgreementBand::Fair,
        k if k <= 0.60 => AgreementBand::Moderate,
        k if k <= 0.80 => AgreementBand::Substantial,
        _ => AgreementBand::AlmostPerfect,
    })
}

/// Cohen's kappa between two annotators over the same items.
///
/// When chance agreement is total (both annotators used a single, shared
/// class) kappa is 1 if they agree everywhere and 0 otherwise.
pub fn cohen_kappa(a: &[Label], b: &[Label]) -> Result<AgreementReport, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = Contingency::default();
    for (x, y) in a.iter().zip(b) {
        match (x.is_political(), y.is_political()) {
            (true, true) => c.both_political += 1,
            (true, false) => c.a_political_b_non += 1,
            (false, true) => c.a_non_b_political += 1,
            (false, false) => c.both_non_political += 1,
        }
    }
    let n = a.len() as f64;
    let observed = (c.both_political + c.both_non_political) as f64 / n;
    let a_pol = (c.both_political + c.a_political_b_non) as f64 / n;
    let b_pol = (c.both_political + c.a_non_b_political) as f64 / n;
    let expected = a_pol * b_pol + (1.0 - a_pol) * (1.0 - b_pol);
    let kappa = if expected >= 1.0 {
        if observed >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (observed - expected) / (1.0 - expected)
    };
    let band = landis_koch(kappa)?;
    Ok(AgreementReport {
        items: a.len(),
        kappa,
        agreement_pct: observed * 100.0,
        observed,
        expected,
        contingency: c,
        landis_koch_band: band.label().to_string(),
    })
}
