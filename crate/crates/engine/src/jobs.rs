//! Background jobs for long computations (t-SNE, clustering).
//!
//! A job id is the cache key of the payload it produces, so resubmitting
//! the same request joins the running job instead of starting another.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JobInfo {
    pub id: String,
    pub kind: String,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug)]
struct Job {
    info: JobInfo,
    cancel: Arc<AtomicBool>,
}

#[derive(Debug, Default)]
pub struct JobRegistry {
    jobs: Mutex<BTreeMap<String, Job>>,
}

impl JobRegistry {
    /// Registers a running job and returns its cancel flag, or `None` if a
    /// job with this id is already running or finished successfully.
    pub fn start(&self, id: &str, kind: &str) -> Option<Arc<AtomicBool>> {
        let mut jobs = self.jobs.lock();
        if let Some(job) = jobs.get(id) {
            if matches!(job.info.status, JobStatus::Running | JobStatus::Done) {
                return None;
            }
        }
        let cancel = Arc::new(AtomicBool::new(false));
        let info = JobInfo { id: id.to_string(), kind: kind.to_string(), status: JobStatus::Running, error: None };
        jobs.insert(id.to_string(), Job { info, cancel: cancel.clone() });
        Some(cancel)
    }

    pub fn finish(&self, id: &str, outcome: Result<(), (JobStatus, String)>) {
        if let Some(job) = self.jobs.lock().get_mut(id) {
            match outcome {
                Ok(()) => job.info.status = JobStatus::Done,
                Err((status, message)) => {
                    job.info.status = status;
                    job.info.error = Some(message);
                }
            }
        }
    }

    pub fn get(&self, id: &str) -> Option<JobInfo> {
        self.jobs.lock().get(id).map(|j| j.info.clone())
    }

    /// Marks a running job for cancellation. Returns false for unknown ids.
    pub fn cancel(&self, id: &str) -> bool {
        match self.jobs.lock().get(id) {
            Some(job) => {
                job.cancel.store(true, Ordering::Relaxed);
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle() {
        let r = JobRegistry::default();
        let flag = r.start("j", "tsne").unwrap();
        assert!(r.start("j", "tsne").is_none());
        assert_eq!(r.get("j").unwrap().status, JobStatus::Running);
        assert!(r.cancel("j"));
        assert!(flag.load(Ordering::Relaxed));
        r.finish("j", Err((JobStatus::Cancelled, "cancelled".into())));
        assert_eq!(r.get("j").unwrap().status, JobStatus::Cancelled);
        // A cancelled job may be restarted.
        assert!(r.start("j", "tsne").is_some());
        r.finish("j", Ok(()));
        assert_eq!(r.get("j").unwrap().status, JobStatus::Done);
        assert!(r.get("other").is_none());
    }
}
