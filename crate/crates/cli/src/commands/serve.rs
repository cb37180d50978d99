use std::time::Duration;

use clap::Args;
use tactic_reward::reward::RewardEngine;
use tactic_reward_service::{ProbeTarget, Service, ServiceConfig};

use crate::config::FileConfig;
use crate::setup::{
    build_quality, build_tagger, reward_config, PresetArgs, QualityArgs, TaggerArgs,
};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address [default: 127.0.0.1:8080]
    #[arg(long, env = "TACTIC_REWARD_LISTEN")]
    pub listen: Option<String>,
    /// Rollout groups scored at once; further requests get 503.
    #[arg(long)]
    pub max_concurrent_groups: Option<usize>,
    /// Maximum request body in bytes.
    #[arg(long)]
    pub body_limit: Option<usize>,
    /// Interval between dependency reachability probes.
    #[arg(long)]
    pub probe_interval_ms: Option<u64>,
    #[command(flatten)]
    pub preset: PresetArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    #[command(flatten)]
    pub quality: QualityArgs,
}

fn build(args: &ServeArgs, file: &FileConfig) -> Result<Service, String> {
    let tagger = build_tagger(&args.tagger, file)?;
    let quality = build_quality(&args.quality, file)?;
    let cfg = reward_config(&args.preset, file)?;
    let engine =
        RewardEngine::new(tagger.tagger, quality.scorer, cfg).map_err(|e| e.to_string())?;

    let mut config = ServiceConfig::default();
    if let Some(l) = args.listen.clone().or_else(|| file.listen.clone()) {
        config.listen = l;
    }
    if let Some(n) = args.max_concurrent_groups.or(file.max_concurrent_groups) {
        config.max_concurrent_groups = n;
    }
    if let Some(n) = args.body_limit.or(file.body_limit_bytes) {
        config.body_limit_bytes = n;
    }
    if let Some(ms) = args.probe_interval_ms.or(file.probe_interval_ms) {
        config.probe_interval = Duration::from_millis(ms);
    }

    let mut targets = Vec::new();
    if let Some(url) = tagger.url {
        targets.push(ProbeTarget::new("tagger", url));
    }
    if let Some(url) = quality.url {
        targets.push(ProbeTarget::new("quality", url));
    }
    Service::new(config, engine, targets).map_err(|e| e.to_string())
}

/// Exit 1 on config or bind errors, 0 after a clean shutdown.
pub fn run(args: ServeArgs, file: &FileConfig) -> u8 {
    let service = match build(&args, file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let runtime = match tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
    {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return 1;
        }
    };
    match runtime.block_on(service.run()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
