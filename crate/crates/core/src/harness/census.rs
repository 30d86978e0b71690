use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{float, CsvTable};
use super::{with_redraws, Redraw};
use crate::droplet::{census_row, critical_droplet, CensusRow};
use crate::error::{Error, Result};
use crate::events::sample_witness;
use crate::model::CouplingField;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Serialize)]
pub struct Census {
    pub rows: Vec<(u64, CensusRow)>,
    /// Number of rows per droplet size.
    pub histogram: BTreeMap<usize, u64>,
    pub redraws: Vec<Redraw>,
}

/// Critical droplets of every interior edge over `cfg.replicas` draws. With
/// an edge event, the draws are witnesses of it and only its edge is reported;
/// with a block event, witnesses are drawn and every interior edge reported.
pub fn droplet_census(cfg: &ExperimentConfig) -> Result<Census> {
    cfg.validate()?;
    let geometry = cfg.geometry()?;
    let edges: Vec<usize> = match &cfg.event {
        Some(event) => match event.layout(&geometry)?.edge() {
            Some(e) => vec![e],
            None => geometry.interior_edges().to_vec(),
        },
        None => geometry.interior_edges().to_vec(),
    };
    let per_replica = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| {
            with_redraws(cfg.seed, "census", i, |seed| {
                let field = match &cfg.event {
                    Some(event) => sample_witness(event, Arc::clone(&geometry), &cfg.distribution, seed)?,
                    None => CouplingField::sample(Arc::clone(&geometry), &cfg.distribution, derive_seed(seed, "J", 0))?,
                };
                edges
                    .iter()
                    .map(|&e| Ok(census_row(&field, &critical_droplet(&field, e)?)))
                    .collect::<Result<Vec<CensusRow>>>()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut census = Census {
        rows: Vec::new(),
        histogram: BTreeMap::new(),
        redraws: Vec::new(),
    };
    for (i, (rows, _, redraws)) in per_replica.into_iter().enumerate() {
        for row in rows {
            if !row.connected {
                return Err(Error::InvalidGeometry(format!(
                    "replica {i}: droplet of {} or its complement is disconnected",
                    row.edge
                )));
            }
            *census.histogram.entry(row.droplet_size).or_default() += 1;
            census.rows.push((i as u64, row));
        }
        census.redraws.extend(redraws);
    }
    Ok(census)
}

impl Census {
    pub fn table(&self) -> CsvTable {
        let mut table = CsvTable::new(&[
            "replica",
            "edge",
            "droplet_size",
            "flexibility",
            "critical_value",
            "connected",
            "anchored_endpoint",
        ]);
        for (i, r) in &self.rows {
            table.push(vec![
                i.to_string(),
                r.edge.clone(),
                r.droplet_size.to_string(),
                float(r.flexibility),
                float(r.critical_value),
                r.connected.to_string(),
                r.anchored_endpoint.clone(),
            ]);
        }
        table
    }

    pub fn histogram_table(&self) -> CsvTable {
        let mut table = CsvTable::new(&["droplet_size", "count"]);
        for (size, count) in &self.histogram {
            table.push(vec![size.to_string(), count.to_string()]);
        }
        table
    }
}
