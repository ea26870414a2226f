//! Scan jobs: registry, FIFO queue and a single worker.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::json;
use tokio::sync::mpsc;

use tvws_core::spectrum::TowerLoad;
use tvws_core::{ScanConfig, TerrainGrid};

use crate::error::AppError;
use crate::pipeline::run_scan;
use crate::search::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanJob {
    pub id: String,
    pub state: JobState,
    pub progress: f64,
    pub submitted_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub result_path: Option<String>,
    pub error: Option<String>,
}

pub struct QueuedScan {
    pub id: String,
    pub config: ScanConfig,
    pub towers: TowerLoad,
    pub terrain: Option<Arc<TerrainGrid>>,
}

#[derive(Default)]
struct Registry {
    jobs: HashMap<String, ScanJob>,
    order: Vec<String>,
    datasets: HashMap<String, Arc<Dataset>>,
    latest: Option<String>,
}

/// Job bookkeeping shared between request handlers and the worker.
#[derive(Clone)]
pub struct Jobs {
    registry: Arc<Mutex<Registry>>,
    queue: mpsc::UnboundedSender<QueuedScan>,
    data_dir: PathBuf,
}

impl Jobs {
    /// Starts the worker; must be called inside a tokio runtime.
    pub fn start(data_dir: PathBuf) -> Self {
        let (queue, rx) = mpsc::unbounded_channel();
        let jobs = Jobs { registry: Arc::default(), queue, data_dir };
        tokio::spawn(worker(jobs.clone(), rx));
        jobs
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Registry> {
        self.registry.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn busy(&self) -> bool {
        self.lock()
            .jobs
            .values()
            .any(|j| matches!(j.state, JobState::Pending | JobState::Running))
    }

    pub fn submit(&self, config: ScanConfig, towers: TowerLoad, terrain: Option<Arc<TerrainGrid>>) -> Result<ScanJob, AppError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let job = ScanJob {
            id: id.clone(),
            state: JobState::Pending,
            progress: 0.0,
            submitted_at: Utc::now(),
            started_at: None,
            finished_at: None,
            result_path: None,
            error: None,
        };
        {
            let mut reg = self.lock();
            reg.jobs.insert(id.clone(), job.clone());
            reg.order.push(id.clone());
        }
        self.queue
            .send(QueuedScan { id, config, towers, terrain })
            .map_err(|_| AppError::Runtime("scan worker stopped".into()))?;
        Ok(job)
    }

    pub fn get(&self, id: &str) -> Option<ScanJob> {
        self.lock().jobs.get(id).cloned()
    }

    pub fn list(&self) -> Vec<ScanJob> {
        let reg = self.lock();
        reg.order.iter().filter_map(|id| reg.jobs.get(id).cloned()).collect()
    }

    /// Dataset of a finished job, or of the latest finished job.
    pub fn dataset(&self, id: Option<&str>) -> Result<Arc<Dataset>, AppError> {
        let reg = self.lock();
        let id = match id {
            Some(id) => id.to_string(),
            None => reg.latest.clone().ok_or_else(|| AppError::Conflict("no dataset loaded".into()))?,
        };
        match reg.datasets.get(&id) {
            Some(d) => Ok(d.clone()),
            None if reg.jobs.contains_key(&id) => Err(AppError::Conflict(format!("job {id} has no results"))),
            None => Err(AppError::NotFound(format!("unknown job {id}"))),
        }
    }

    pub fn result_csv(&self, id: &str) -> Result<String, AppError> {
        let job = self.get(id).ok_or_else(|| AppError::NotFound(format!("unknown job {id}")))?;
        let path = job
            .result_path
            .ok_or_else(|| AppError::Conflict(format!("job {id} is {:?}", job.state).to_lowercase()))?;
        std::fs::read_to_string(&path).map_err(|e| AppError::Runtime(format!("{path}: {e}")))
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut ScanJob)) {
        if let Some(job) = self.lock().jobs.get_mut(id) {
            f(job);
        }
    }
}

async fn worker(jobs: Jobs, mut rx: mpsc::UnboundedReceiver<QueuedScan>) {
    while let Some(task) = rx.recv().await {
        let id = task.id.clone();
        jobs.update(&id, |j| {
            j.state = JobState::Running;
            j.started_at = Some(Utc::now());
        });
        let runner = jobs.clone();
        let outcome = tokio::task::spawn_blocking(move || execute(&runner, task)).await;
        let outcome = outcome.unwrap_or_else(|e| Err(AppError::Runtime(format!("scan panicked: {e}"))));
        match outcome {
            Ok((path, dataset)) => {
                let mut reg = jobs.lock();
                if let Some(j) = reg.jobs.get_mut(&id) {
                    j.state = JobState::Done;
                    j.progress = 1.0;
                    j.finished_at = Some(Utc::now());
                    j.result_path = Some(path.display().to_string());
                }
                reg.datasets.insert(id.clone(), Arc::new(dataset));
                reg.latest = Some(id);
            }
            Err(e) => {
                log::error!("scan {id} failed: {e}");
                jobs.update(&id, |j| {
                    j.state = JobState::Failed;
                    j.finished_at = Some(Utc::now());
                    j.error = Some(e.to_string());
                });
            }
        }
    }
}

fn execute(jobs: &Jobs, task: QueuedScan) -> Result<(PathBuf, Dataset), AppError> {
    let started = Instant::now();
    let progress = |f: f64| {
        jobs.update(&task.id, |j| j.progress = j.progress.max(f));
    };
    let (results, csv) = run_scan(&task.config, &task.towers, task.terrain.as_deref(), None, &progress)?;
    let elapsed = started.elapsed().as_secs_f64();
    let path = write_outputs(&jobs.data_dir, &task.id, &csv, &task.config, elapsed)?;
    let mut dataset = Dataset::new(results, task.config.pixel_size, task.config.max_noise);
    dataset.plan_channels = task.config.plan.channels();
    Ok((path, dataset))
}

/// Writes `<id>.csv` and its `<id>.json` sidecar.
pub fn write_outputs(dir: &Path, id: &str, csv: &str, config: &ScanConfig, seconds: f64) -> Result<PathBuf, AppError> {
    let io = |e: std::io::Error| AppError::Runtime(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(format!("{id}.csv"));
    std::fs::write(&path, csv).map_err(io)?;
    let sidecar = json!({
        "id": id,
        "config": config,
        "elapsed_seconds": seconds,
        "finished_at": Utc::now(),
    });
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| AppError::Runtime(e.to_string()))?;
    std::fs::write(dir.join(format!("{id}.json")), text).map_err(io)?;
    Ok(path)
}
