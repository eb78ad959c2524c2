use std::fmt;
use std::str::FromStr;

use crate::bidirectional::{AdaptiveParams, BidirectionalCg, BidirectionalNlms};
use crate::error::{Error, Result};
use crate::harness::config::mode_for;
use crate::linalg::CVector;
use crate::receivers::{
    ConventionalCg, ConventionalNlms, ConventionalRls, DifferentialCg, DifferentialNlms, MmseReceiver, Receiver,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    Mmse,
    ConvNlms,
    ConvRls,
    ConvCg,
    DiffNlms,
    DiffCg,
    BiNlms,
    BiCg,
    BiNlmsSwitching,
    BiCgSwitching,
    BiNlmsMixing,
    BiCgMixing,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 12] = [
        AlgorithmId::Mmse,
        AlgorithmId::ConvNlms,
        AlgorithmId::ConvRls,
        AlgorithmId::ConvCg,
        AlgorithmId::DiffNlms,
        AlgorithmId::DiffCg,
        AlgorithmId::BiNlms,
        AlgorithmId::BiCg,
        AlgorithmId::BiNlmsSwitching,
        AlgorithmId::BiCgSwitching,
        AlgorithmId::BiNlmsMixing,
        AlgorithmId::BiCgMixing,
    ];

    pub fn name(self) -> &'static str {
        use AlgorithmId::*;
        match self {
            Mmse => "mmse",
            ConvNlms => "conv-nlms",
            ConvRls => "conv-rls",
            ConvCg => "conv-cg",
            DiffNlms => "diff-nlms",
            DiffCg => "diff-cg",
            BiNlms => "bi-nlms",
            BiCg => "bi-cg",
            BiNlmsSwitching => "bi-nlms-sw",
            BiCgSwitching => "bi-cg-sw",
            BiNlmsMixing => "bi-nlms-mix",
            BiCgMixing => "bi-cg-mix",
        }
    }

    pub fn is_bidirectional(self) -> bool {
        self.name().starts_with("bi-")
    }

    /// Builds a fresh receiver of dimension `w0.len()`.
    pub fn build(self, w0: CVector, params: &AdaptiveParams) -> Result<Box<dyn Receiver>> {
        use AlgorithmId::*;
        params.validate()?;
        let mode = mode_for(self);
        Ok(match self {
            Mmse => Box::new(MmseReceiver::new(w0.len())),
            ConvNlms => Box::new(ConventionalNlms::new(w0, params.mu)),
            ConvRls => Box::new(ConventionalRls::new(w0, params.lambda, params.delta)?),
            ConvCg => Box::new(ConventionalCg::new(w0, params)),
            DiffNlms => Box::new(DifferentialNlms::new(w0, params)?),
            DiffCg => Box::new(DifferentialCg::new(w0, params)?),
            BiNlms | BiNlmsSwitching | BiNlmsMixing => Box::new(BidirectionalNlms::new(w0, params, mode)?),
            BiCg | BiCgSwitching | BiCgMixing => Box::new(BidirectionalCg::new(w0, params, mode)?),
        })
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Parses a comma-separated id list.
pub fn parse_algorithm_list(list: &str) -> Result<Vec<AlgorithmId>> {
    let ids: Vec<AlgorithmId> = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    if ids.is_empty() {
        return Err(Error::Config("empty algorithm list".into()));
    }
    Ok(ids)
}
