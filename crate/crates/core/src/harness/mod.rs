//! Experiment orchestration: folds, repeated runs, scoring and artifacts.
//!
//! Each fold meta-trains every agent once on its training datasets, then
//! plays `n_runs` episodes per held-out dataset with a fresh copy of the
//! trained agent. A dataset's score is the worst of its runs. An agent that
//! errors, panics or exceeds the step cap scores 0 on that episode and the
//! failure is listed in the report.

mod config;
mod episode;
mod experiment;
mod export;

pub use config::{AgentEntry, ExperimentConfig};
pub use episode::{episode_context, play_episode, EpisodeRun};
pub use experiment::{
    check_fold_isolation, config_hash, make_plan, run_experiment, run_on, ExperimentOutcome, ExperimentReport, Failure,
};
pub use export::{
    leaderboard, leaderboard_csv, leaderboard_json, per_dataset_csv, read_report, read_transcript, replay_file,
    score_transcripts, transcript_file_name, write_artifacts, Leaderboard, LeaderboardRow,
};
