use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::CvResult;
use super::grid::GridResults;
use super::EvalError;

pub const FOLD_CSV_HEADER: &str = "user,fold,accuracy,eer,threshold,final_loss,train_size,test_size";

/// One row per fold plus a `mean` row per user.
pub fn fold_csv(results: &[CvResult]) -> String {
    let mut s = String::from(FOLD_CSV_HEADER);
    s.push('\n');
    for r in results {
        for f in &r.folds {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.user_id, f.fold, f.accuracy, f.eer, f.eer_threshold, f.final_loss, f.train_size, f.test_size
            );
        }
        let _ = writeln!(s, "{},mean,{},{},{},,,", r.user_id, r.mean_accuracy, r.mean_eer, r.mean_threshold);
    }
    s
}

pub fn write_fold_csv(path: &Path, results: &[CvResult]) -> Result<(), EvalError> {
    let text = fold_csv(results);
    crate::io::write_atomic(path, |w| w.write_all(text.as_bytes()).map_err(EvalError::from))
}

pub fn grid_csv(results: &[GridResults]) -> String {
    let mut s = String::from("user,rank,epochs,lr,optimizer,schedule,mean_eer,mean_accuracy\n");
    for g in results {
        for r in &g.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                g.user_id,
                r.rank,
                r.cell.epochs,
                r.cell.learning_rate,
                r.cell.optimizer.name(),
                r.cell.schedule.label(),
                r.mean_eer,
                r.mean_accuracy
            );
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user: String,
    pub accuracy: f64,
    pub eer: f64,
}

/// Unweighted average over users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub users: Vec<UserSummary>,
    pub mean_accuracy: f64,
    pub mean_eer: f64,
}

pub fn summarize(results: &[CvResult]) -> Summary {
    let users: Vec<UserSummary> = results
        .iter()
        .map(|r| UserSummary { user: r.user_id.clone(), accuracy: r.mean_accuracy, eer: r.mean_eer })
        .collect();
    let n = users.len().max(1) as f64;
    Summary {
        mean_accuracy: users.iter().map(|u| u.accuracy).sum::<f64>() / n,
        mean_eer: users.iter().map(|u| u.eer).sum::<f64>() / n,
        users,
    }
}
