use std::io::Write;

use super::RankingTable;
use crate::error::Result;

/// `treatment,scale,ate,se,ci_low,ci_high,direction,horizon`, one row per
/// ranked treatment.
pub fn write_ranking_csv<W: Write>(table: &RankingTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["treatment", "scale", "ate", "se", "ci_low", "ci_high", "direction", "horizon"])?;
    for e in &table.entries {
        let x = &e.estimate;
        w.write_record([
            x.treatment.clone(),
            x.scale.to_string(),
            x.ate.to_string(),
            x.se.to_string(),
            x.ci_low.to_string(),
            x.ci_high.to_string(),
            e.direction.as_str().to_string(),
            x.horizon.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ranking_json<W: Write>(table: &RankingTable, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, table)?;
    Ok(())
}

/// Point and interval per treatment in plotting order, most protective at
/// position 1.
pub fn write_plot_data<W: Write>(table: &RankingTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["position", "treatment", "scale", "estimate", "lower", "upper", "direction"])?;
    for (pos, e) in table.entries.iter().enumerate() {
        let x = &e.estimate;
        w.write_record([
            (pos + 1).to_string(),
            x.treatment.clone(),
            x.scale.to_string(),
            x.ate.to_string(),
            x.ci_low.to_string(),
            x.ci_high.to_string(),
            e.direction.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Scale;
    use crate::effects::EffectEstimate;

    #[test]
    fn csv_and_json_carry_every_entry() {
        let t = RankingTable::from_estimates(
            Scale::Net,
            2.0,
            vec![
                EffectEstimate::new("b".into(), Scale::Net, 0.01, 0.02, 2.0, 0.95),
                EffectEstimate::new("a".into(), Scale::Net, -0.1, 0.02, 2.0, 0.95),
            ],
        );
        let mut csv = Vec::new();
        write_ranking_csv(&t, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("a,net,-0.1,0.02,"));
        assert!(lines[1].ends_with(",protective,2"));

        let mut json = Vec::new();
        write_ranking_json(&t, &mut json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["entries"][1]["treatment"], "b");
        assert_eq!(v["entries"][1]["direction"], "neutral");
        assert_eq!(v["scale"], "net");

        let mut plot = Vec::new();
        write_plot_data(&t, &mut plot).unwrap();
        assert!(String::from_utf8(plot).unwrap().contains("\n1,a,net,-0.1,"));
    }
}
