use serde::{Deserialize, Serialize};

use super::CleansingRecord;
use crate::error::{Error, Result};

/// Keeps low-flow clips that still contain a share of fast-moving pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescueRule {
    /// The rule only applies when `mean_flow < flow_below`.
    pub flow_below: f64,
    /// Required share of pixels at ≥ 12 px, compared strictly.
    pub min_p12_plus: f64,
    /// Count only the ≥ 16 px bin instead of 12–16 plus ≥ 16.
    #[serde(default)]
    pub p16_only: bool,
}

impl RescueRule {
    pub fn fires(&self, rec: &CleansingRecord) -> bool {
        let fast = if self.p16_only {
            rec.five_point.p16_plus
        } else {
            rec.five_point.p12_plus()
        };
        rec.mean_flow < self.flow_below && fast > self.min_p12_plus
    }
}

/// Threshold set for clip selection. Every bound is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub min_clip_tf: f64,
    pub min_clip_ff: f64,
    #[serde(default)]
    pub min_egovideo: Option<f64>,
    pub min_dover: f64,
    #[serde(default)]
    pub flow_min: Option<f64>,
    #[serde(default)]
    pub flow_max: Option<f64>,
    #[serde(default)]
    pub rescue: Option<RescueRule>,
}

impl StrategyConfig {
    /// Strict semantic consistency, slow motion tolerated.
    pub const STRATEGY_1: StrategyConfig = StrategyConfig {
        min_clip_tf: 0.275,
        min_clip_ff: 0.8,
        min_egovideo: None,
        min_dover: 0.3,
        flow_min: Some(3.0),
        flow_max: None,
        rescue: None,
    };

    pub const STRATEGY_2: StrategyConfig = StrategyConfig {
        min_clip_tf: 0.27,
        min_clip_ff: 0.75,
        min_egovideo: None,
        min_dover: 0.3,
        flow_min: Some(3.0),
        flow_max: Some(40.0),
        rescue: None,
    };

    /// Adds action consistency and keeps static-background clips with
    /// localized fast motion.
    pub const STRATEGY_3: StrategyConfig = StrategyConfig {
        min_clip_tf: 0.26,
        min_clip_ff: 0.7,
        min_egovideo: Some(0.22),
        min_dover: 0.3,
        flow_min: Some(3.0),
        flow_max: Some(35.0),
        rescue: Some(RescueRule {
            flow_below: 3.0,
            min_p12_plus: 0.03,
            p16_only: false,
        }),
    };

    pub fn preset(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::STRATEGY_1),
            2 => Ok(Self::STRATEGY_2),
            3 => Ok(Self::STRATEGY_3),
            _ => Err(Error::invalid(format!("unknown strategy preset {n} (expected 1, 2 or 3)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(lo), Some(hi)) = (self.flow_min, self.flow_max) {
            if lo > hi {
                return Err(Error::invalid(format!("flow_min {lo} exceeds flow_max {hi}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    ClipTf,
    ClipFf,
    Egovideo,
    Dover,
    FlowLow,
    FlowHigh,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::ClipTf => "clip_tf",
            DropReason::ClipFf => "clip_ff",
            DropReason::Egovideo => "egovideo",
            DropReason::Dover => "dover",
            DropReason::FlowLow => "flow_low",
            DropReason::FlowHigh => "flow_high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Keep { rescued: bool },
    Drop(Vec<DropReason>),
}

impl Decision {
    pub fn is_keep(&self) -> bool {
        matches!(self, Decision::Keep { .. })
    }
}

pub fn apply_strategy(rec: &CleansingRecord, cfg: &StrategyConfig) -> Decision {
    let mut reasons = Vec::new();
    if rec.clip_tf < cfg.min_clip_tf {
        reasons.push(DropReason::ClipTf);
    }
    if rec.clip_ff < cfg.min_clip_ff {
        reasons.push(DropReason::ClipFf);
    }
    if cfg.min_egovideo.is_some_and(|m| rec.egovideo < m) {
        reasons.push(DropReason::Egovideo);
    }
    if rec.dover < cfg.min_dover {
        reasons.push(DropReason::Dover);
    }
    let mut flow = Vec::new();
    if cfg.flow_min.is_some_and(|m| rec.mean_flow < m) {
        flow.push(DropReason::FlowLow);
    }
    if cfg.flow_max.is_some_and(|m| rec.mean_flow > m) {
        flow.push(DropReason::FlowHigh);
    }
    let rescued = !flow.is_empty() && cfg.rescue.is_some_and(|r| r.fires(rec));
    if !rescued {
        reasons.extend(flow);
    }
    if reasons.is_empty() {
        Decision::Keep { rescued }
    } else {
        Decision::Drop(reasons)
    }
}
