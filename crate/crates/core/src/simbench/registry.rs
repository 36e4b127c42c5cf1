//! A synthetic dataset shaped like a prescription registry extract: sex,
//! age group, two comorbidity flags and a handful of drug classes, with a
//! hospital admission as the event and death as the competing event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, ObservedRecord};
use crate::error::Result;

use super::design::LatentDraw;

/// Age bands in years; the last is open.
pub const AGE_GROUPS: [&str; 9] = ["0-18", "18-25", "25-30", "30-40", "40-50", "50-60", "60-70", "70-80", "80+"];

/// Drug classes and their log-hazard effect on the event.
pub const DRUGS: [(&str, f64); 6] = [
    ("N06A", -0.35),
    ("N05A", 0.4),
    ("N05B", 0.0),
    ("N02A", 0.25),
    ("C10A", -0.2),
    ("A10B", 0.0),
];

/// Follow-up ends after this many years at the latest.
pub const MAX_FOLLOW_UP: f64 = 10.0;

pub fn registry_dataset(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = |rng: &mut ChaCha8Rng| -(1.0 - rng.gen::<f64>()).ln();
    let records = (0..n)
        .map(|i| {
            let sex = f64::from(rng.gen_bool(0.52) as u8);
            let age = f64::from(rng.gen_range(0..AGE_GROUPS.len() as u8));
            let old = age / 8.0;
            let diabetes = f64::from(rng.gen_bool(0.05 + 0.15 * old) as u8);
            let heart = f64::from(rng.gen_bool(0.03 + 0.2 * old) as u8);
            let treatments: Vec<u8> = DRUGS
                .iter()
                .enumerate()
                .map(|(j, (name, _))| {
                    let p = match *name {
                        "C10A" => 0.05 + 0.3 * old + 0.1 * heart,
                        "A10B" => 0.02 + 0.7 * diabetes,
                        _ => 0.08 + 0.06 * (j as f64 % 3.0) + 0.05 * sex,
                    };
                    u8::from(rng.gen_bool(p.min(0.95)))
                })
                .collect();
            let drug_eta: f64 = treatments.iter().zip(DRUGS).map(|(&a, (_, b))| f64::from(a) * b).sum();
            let eta1 = -2.6 + 0.15 * age + 0.2 * sex + 0.3 * diabetes + drug_eta;
            let eta2 = -5.5 + 0.45 * age - 0.2 * sex + 0.6 * heart;
            let admin = rng.gen_range(2.0..MAX_FOLLOW_UP);
            let latent = LatentDraw {
                t1: exp(&mut rng) * (-eta1).exp(),
                t2: exp(&mut rng) * (-eta2).exp(),
                c: admin.min(exp(&mut rng) * 40.0),
            };
            let (time, status) = latent.observed();
            ObservedRecord {
                id: format!("p{i:06}"),
                time,
                status,
                treatments,
                covariates: vec![sex, age, diabetes, heart],
            }
        })
        .collect();
    Dataset::new(
        records,
        DRUGS.iter().map(|(d, _)| d.to_string()).collect(),
        vec!["sex".into(), "age_group".into(), "diabetes".into(), "heart_failure".into()],
        vec![true; 4],
    )
}
