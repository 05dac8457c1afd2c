use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{EpisodeConfig, PlannerKind};
use super::episode::{initial_state, make_planner, run_episode_from};
use super::record::{write_record, RecordHeader, TrajectoryRecord};
use super::{HarnessError, Metrics};
use crate::simworld::{load_scenario, Category};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub scenario: String,
    pub category: Category,
    pub rep: u32,
    pub metrics: Metrics,
    pub record: Option<PathBuf>,
}

impl EpisodeSummary {
    pub fn success(&self) -> bool {
        self.metrics.success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub episodes: u32,
    pub successes: u32,
    /// Percent.
    pub success_rate: f64,
    /// Mean over successful episodes, seconds.
    pub mean_completion_time: Option<f64>,
}

impl CategoryStats {
    fn from_episodes<'a>(eps: impl Iterator<Item = &'a EpisodeSummary>) -> Self {
        let (mut n, mut times) = (0u32, Vec::new());
        for e in eps {
            n += 1;
            if e.metrics.success {
                times.push(e.metrics.completion_time);
            }
        }
        let successes = times.len() as u32;
        Self {
            episodes: n,
            successes,
            success_rate: if n == 0 {
                0.0
            } else {
                100.0 * successes as f64 / n as f64
            },
            mean_completion_time: (!times.is_empty())
                .then(|| times.iter().sum::<f64>() / times.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub planner: PlannerKind,
    pub reps: u32,
    /// Only categories with at least one episode appear.
    pub categories: BTreeMap<Category, CategoryStats>,
    /// Pooled over every episode.
    pub overall: CategoryStats,
    pub episodes: Vec<EpisodeSummary>,
}

impl SuiteReport {
    pub fn from_episodes(planner: PlannerKind, reps: u32, episodes: Vec<EpisodeSummary>) -> Self {
        let mut by_cat: BTreeMap<Category, Vec<&EpisodeSummary>> = BTreeMap::new();
        for e in &episodes {
            by_cat.entry(e.category).or_default().push(e);
        }
        let categories = by_cat
            .into_iter()
            .map(|(c, eps)| (c, CategoryStats::from_episodes(eps.into_iter())))
            .collect();
        Self {
            planner,
            reps,
            categories,
            overall: CategoryStats::from_episodes(episodes.iter()),
            episodes,
        }
    }

    pub fn all_succeeded(&self) -> bool {
        self.overall.episodes > 0 && self.overall.successes == self.overall.episodes
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| Category | Episodes | SR (%) | Mean time (s) |\n|---|---:|---:|---:|\n",
        );
        let row = |s: &mut String, name: &str, c: &CategoryStats| {
            let time = c
                .mean_completion_time
                .map_or_else(|| "-".to_string(), |t| format!("{t:.1}"));
            let _ = writeln!(
                s,
                "| {name} | {} | {:.1} | {time} |",
                c.episodes, c.success_rate
            );
        };
        for (cat, stats) in &self.categories {
            row(&mut s, cat.as_str(), stats);
        }
        row(&mut s, "overall", &self.overall);
        s
    }
}

/// Every `*.json` file under `dir`, sorted by path.
pub fn discover_scenarios(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
        let io = |source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        };
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Runs every scenario under `dir` `reps` times. With `out_dir`, writes one
/// log per episode plus `report.json` and `report.md`. An episode that
/// errors or panics aborts the suite; its partial log goes to `out_dir` (or
/// the temp dir) and the error names it.
pub fn run_suite(
    dir: &Path,
    cfg: &EpisodeConfig,
    reps: u32,
    out_dir: Option<&Path>,
) -> Result<SuiteReport, HarnessError> {
    if cfg.planner == PlannerKind::Scripted {
        return Err(HarnessError::Config(
            "suites need an oracle or vlm planner".into(),
        ));
    }
    let paths = discover_scenarios(dir)?;
    if paths.is_empty() {
        return Err(HarnessError::Config(format!(
            "no scenarios under {}",
            dir.display()
        )));
    }
    let scenarios = paths
        .iter()
        .map(|p| load_scenario(p))
        .collect::<Result<Vec<_>, _>>()?;

    let log_dir = out_dir.map_or_else(std::env::temp_dir, Path::to_path_buf);
    let mut episodes = Vec::new();
    for sc in &scenarios {
        let ecfg = cfg.with_overrides(&sc.overrides);
        for rep in 0..reps {
            let start = initial_state(&ecfg, sc, rep);
            let mut rec =
                TrajectoryRecord::new(RecordHeader::new(ecfg.clone(), sc.clone(), rep, start));
            let outcome = catch_unwind(AssertUnwindSafe(|| {
                let planner = make_planner(&ecfg, None)?;
                run_episode_from(&ecfg, sc, planner, &mut rec)
            }));
            let path = log_dir
                .join("records")
                .join(format!("{}_rep{rep}.jsonl", sc.name));
            let metrics = match outcome {
                Ok(Ok(m)) => m,
                Ok(Err(e)) => {
                    let _ = write_record(&path, &rec);
                    warn!(
                        "{} rep {rep}: {e}; partial log at {}",
                        sc.name,
                        path.display()
                    );
                    return Err(e);
                }
                Err(panic) => {
                    let message = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "unknown panic".into());
                    write_record(&path, &rec)?;
                    return Err(HarnessError::EpisodePanic {
                        scenario: sc.name.clone(),
                        rep,
                        message,
                        record: path,
                    });
                }
            };
            let record = match out_dir {
                Some(_) => {
                    write_record(&path, &rec)?;
                    Some(path)
                }
                None => None,
            };
            info!("{} rep {rep}: {:?}", sc.name, metrics.termination);
            episodes.push(EpisodeSummary {
                scenario: sc.name.clone(),
                category: sc.task.category,
                rep,
                metrics,
                record,
            });
        }
    }

    let report = SuiteReport::from_episodes(cfg.planner, reps, episodes);
    if let Some(d) = out_dir {
        let io = |path: PathBuf| move |source| HarnessError::Io { path, source };
        let json = d.join("report.json");
        std::fs::write(
            &json,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )
        .map_err(io(json.clone()))?;
        let md = d.join("report.md");
        std::fs::write(&md, report.to_markdown()).map_err(io(md.clone()))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Termination;

    fn ep(category: Category, success: bool, time: f64) -> EpisodeSummary {
        EpisodeSummary {
            scenario: "s".into(),
            category,
            rep: 0,
            metrics: Metrics {
                success,
                completion_time: time,
                path_length: 0.0,
                replans: 1,
                ticks: 1,
                termination: if success {
                    Termination::Success
                } else {
                    Termination::Timeout
                },
            },
            record: None,
        }
    }

    #[test]
    fn success_rate_and_mean_time() {
        let mut eps: Vec<_> = (0..23)
            .map(|i| ep(Category::Navigation, true, i as f64))
            .collect();
        eps.push(ep(Category::Navigation, false, 500.0));
        eps.push(ep(Category::Navigation, false, 500.0));
        let r = SuiteReport::from_episodes(PlannerKind::Oracle, 1, eps);
        let nav = &r.categories[&Category::Navigation];
        assert_eq!(nav.success_rate, 92.0);
        assert_eq!(nav.mean_completion_time, Some(11.0));
        assert!(!r.categories.contains_key(&Category::Follow));
        assert!(!r.all_succeeded());
    }

    #[test]
    fn markdown_lists_present_categories_in_order() {
        let eps = vec![
            ep(Category::Follow, true, 4.0),
            ep(Category::Navigation, false, 0.0),
        ];
        let md = SuiteReport::from_episodes(PlannerKind::Oracle, 1, eps).to_markdown();
        let nav = md.find("| navigation |").unwrap();
        let fol = md.find("| follow |").unwrap();
        assert!(nav < fol);
        assert!(md.contains("| navigation | 1 | 0.0 | - |"));
        assert!(md.contains("| overall | 2 | 50.0 | 4.0 |"));
        assert!(!md.contains("search"));
    }
}
