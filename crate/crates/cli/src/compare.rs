//! Joins sweep tables into one wide table of output DC power.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};

use crate::scenarios::{from_csv, SweepRow};

/// Sweep variable as a sortable key. Powers compare by bit pattern, which
/// orders positive finite values correctly.
fn key(row: &SweepRow) -> (u64, String) {
    if row.sweep == "power" {
        (
            row.power_budget_w.to_bits(),
            format!("{}", row.power_budget_w),
        )
    } else {
        (row.num_tones as u64, row.num_tones.to_string())
    }
}

/// One row per sweep value, one `p_out_W` column per `method@design`.
/// Inputs must come from the same kind of sweep; a column may appear in
/// several inputs only if the values agree.
pub fn join(inputs: &[(String, String)]) -> Result<String> {
    if inputs.is_empty() {
        bail!("nothing to compare");
    }
    let mut kind: Option<String> = None;
    let mut columns: Vec<String> = Vec::new();
    let mut table: BTreeMap<u64, (String, BTreeMap<String, f64>)> = BTreeMap::new();
    for (name, text) in inputs {
        let rows: Vec<SweepRow> =
            from_csv(text).with_context(|| format!("{name}: not a sweep table"))?;
        if rows.is_empty() {
            bail!("{name}: no rows");
        }
        for row in rows {
            match &kind {
                None => kind = Some(row.sweep.clone()),
                Some(k) if *k != row.sweep => {
                    bail!("{name}: mixes a {} sweep with a {k} sweep", row.sweep)
                }
                _ => {}
            }
            let col = format!("{}@{}", row.method, row.design);
            if !columns.contains(&col) {
                columns.push(col.clone());
            }
            let (k, label) = key(&row);
            let cells = &mut table.entry(k).or_insert_with(|| (label, BTreeMap::new())).1;
            if let Some(old) = cells.insert(col.clone(), row.p_out_w) {
                if old != row.p_out_w {
                    bail!("{name}: conflicting values for {col} at {}", table[&k].0);
                }
            }
        }
    }
    let header = if kind.as_deref() == Some("power") {
        "P_T_W"
    } else {
        "N"
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once(header.to_string()).chain(columns.iter().cloned()))?;
    for (label, cells) in table.values() {
        let record = std::iter::once(label.clone()).chain(
            columns
                .iter()
                .map(|c| cells.get(c).map_or(String::new(), |v| v.to_string())),
        );
        w.write_record(record)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
