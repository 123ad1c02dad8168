use super::RmseRow;
use crate::error::{Error, Result};
use crate::stats::{ols, RegressionResult};
use crate::store::Metric;
use crate::train::{GridSetting, Hyperparams, Method};

/// Dummy-coded design matrix with an intercept column first.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

type Column = Box<dyn Fn(&Hyperparams) -> f64>;

struct Factor {
    name: &'static str,
    reference: &'static str,
    level: fn(&Hyperparams) -> String,
    applies: fn(Method) -> bool,
}

const FACTORS: [Factor; 4] = [
    Factor {
        name: "win",
        reference: "2",
        level: |h| h.window.to_string(),
        applies: |_| true,
    },
    Factor {
        name: "w+c",
        reference: "no",
        level: |h| if h.add_context { "yes" } else { "no" }.to_string(),
        applies: |_| true,
    },
    Factor {
        name: "neg",
        reference: "1",
        level: |h| h.negatives.to_string(),
        applies: Method::uses_negatives,
    },
    Factor {
        name: "cds",
        reference: "0.75",
        level: |h| h.cds_exponent.to_string(),
        applies: Method::uses_negatives,
    },
];

/// Builds the design for a set of grid settings of one method. Each
/// hyperparameter that varies gets one indicator per non-reference level
/// (reference levels: win=2, w+c=no, neg=1, cds=0.75); constant ones are
/// left out.
pub fn design_from_settings(ids: &[String]) -> Result<Design> {
    let hps = ids
        .iter()
        .map(|id| GridSetting::parse_id(id))
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = hps.first() else {
        return Err(Error::Empty("setting list"));
    };
    let method = first.method;
    if hps.iter().any(|h| h.method != method) {
        return Err(Error::Config(
            "regression settings must share one method".into(),
        ));
    }
    let mut names = vec!["intercept".to_string()];
    let mut columns: Vec<Column> = vec![Box::new(|_| 1.0)];
    for f in FACTORS.iter().filter(|f| (f.applies)(method)) {
        let mut levels: Vec<String> = hps.iter().map(|h| (f.level)(h)).collect();
        levels.sort_by(|a, b| {
            a.parse::<f64>()
                .ok()
                .partial_cmp(&b.parse::<f64>().ok())
                .unwrap()
                .then(a.cmp(b))
        });
        levels.dedup();
        if levels.len() < 2 {
            continue;
        }
        if !levels.iter().any(|l| l == f.reference) {
            return Err(Error::InsufficientData(format!(
                "reference level {}={} absent from the settings",
                f.name, f.reference
            )));
        }
        for l in levels.into_iter().filter(|l| l != f.reference) {
            names.push(format!("{}={}", f.name, l));
            let level = f.level;
            columns.push(Box::new(move |h| if level(h) == l { 1.0 } else { 0.0 }));
        }
    }
    let rows = hps
        .iter()
        .map(|h| columns.iter().map(|c| c(h)).collect())
        .collect();
    Ok(Design { names, rows })
}

/// Regresses the actual RMSE of the rows with `metric` on the dummy-coded
/// hyperparameters.
pub fn regress_rmse(rows: &[RmseRow], metric: Metric) -> Result<RegressionResult> {
    let picked: Vec<&RmseRow> = rows.iter().filter(|r| r.metric == metric).collect();
    let ids: Vec<String> = picked.iter().map(|r| r.setting_id.clone()).collect();
    let design = design_from_settings(&ids)?;
    let y: Vec<f64> = picked.iter().map(|r| r.rmse_actual).collect();
    ols(&design.rows, &y, &design.names)
}
