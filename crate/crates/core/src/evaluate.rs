//! Dice overlap between predicted and reference masks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::GrayImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceEntry {
    pub name: String,
    pub dsi: f64,
    pub pred_area: usize,
    pub truth_area: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiceReport {
    pub entries: Vec<DiceEntry>,
}

fn check_dims(pred: &GrayImage, truth: &GrayImage) -> Result<(), EvalError> {
    if !pred.same_dims(truth) {
        return Err(EvalError::DimensionMismatch(
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height(),
        ));
    }
    Ok(())
}

/// Non-zero pixels of each mask and of their intersection.
pub fn areas(pred: &GrayImage, truth: &GrayImage) -> Result<(usize, usize, usize), EvalError> {
    check_dims(pred, truth)?;
    let overlap = pred
        .data()
        .iter()
        .zip(truth.data())
        .filter(|(p, t)| **p != 0 && **t != 0)
        .count();
    Ok((pred.count_nonzero(), truth.count_nonzero(), overlap))
}

/// `2|P ∩ T| / (|P| + |T|)`; two empty masks agree perfectly.
pub fn dice(pred: &GrayImage, truth: &GrayImage) -> Result<f64, EvalError> {
    let (p, t, o) = areas(pred, truth)?;
    Ok(dice_from_areas(p, t, o))
}

fn dice_from_areas(pred: usize, truth: usize, overlap: usize) -> f64 {
    if pred + truth == 0 {
        1.0
    } else {
        2.0 * overlap as f64 / (pred + truth) as f64
    }
}

pub fn report<'a, I>(cases: I) -> Result<DiceReport, EvalError>
where
    I: IntoIterator<Item = (&'a str, &'a GrayImage, &'a GrayImage)>,
{
    let entries = cases
        .into_iter()
        .map(|(name, pred, truth)| {
            let (pred_area, truth_area, overlap) = areas(pred, truth)?;
            Ok(DiceEntry {
                name: name.to_string(),
                dsi: dice_from_areas(pred_area, truth_area, overlap),
                pred_area,
                truth_area,
                overlap,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(DiceReport { entries })
}

impl DiceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,dsi,pred_area,truth_area,overlap\n");
        for e in &self.entries {
            let name = if e.name.contains([',', '"', '\n']) {
                format!("\"{}\"", e.name.replace('"', "\"\""))
            } else {
                e.name.clone()
            };
            writeln!(
                out,
                "{name},{:.6},{},{},{}",
                e.dsi, e.pred_area, e.truth_area, e.overlap
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, on: &[usize]) -> GrayImage {
        let mut data = vec![0u8; w * h];
        for &i in on {
            data[i] = 255;
        }
        GrayImage::new(w, h, data).unwrap()
    }

    #[test]
    fn dice_examples() {
        let a = mask(4, 4, &[0, 1, 2, 3]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &mask(4, 4, &[8, 9])).unwrap(), 0.0);
        assert_eq!(dice(&a, &mask(4, 4, &[2, 3, 4, 5])).unwrap(), 0.5);
        assert_eq!(dice(&mask(4, 4, &[]), &mask(4, 4, &[])).unwrap(), 1.0);
        assert!(dice(&a, &mask(2, 8, &[])).is_err());
    }

    #[test]
    fn report_rows() {
        assert!(report(Vec::new()).unwrap().entries.is_empty());
        let a = mask(3, 3, &[4]);
        let r = report([("dot", &a, &a)]).unwrap();
        assert_eq!(r.entries[0].dsi, 1.0);
        assert_eq!(
            r.to_csv(),
            "name,dsi,pred_area,truth_area,overlap\ndot,1.000000,1,1,1\n"
        );
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["entries"][0]["overlap"], 1);
    }

    fn arb_mask() -> impl Strategy<Value = Vec<bool>> {
        proptest::collection::vec(any::<bool>(), 36)
    }

    fn to_img(bits: &[bool]) -> GrayImage {
        GrayImage::new(6, 6, bits.iter().map(|&b| if b { 255 } else { 0 }).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in arb_mask(), b in arb_mask()) {
            let (a, b) = (to_img(&a), to_img(&b));
            let d = dice(&a, &b).unwrap();
            prop_assert_eq!(d, dice(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&d));
            let (p, t, o) = areas(&a, &b).unwrap();
            prop_assert!(o <= p.min(t));
        }

        #[test]
        fn self_overlap_is_one(a in arb_mask()) {
            prop_assume!(a.iter().any(|&x| x));
            let a = to_img(&a);
            prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn monotone_in_overlap(p in 1usize..20, t in 1usize..20, o in 0usize..19) {
            prop_assume!(o < p.min(t));
            prop_assert!(dice_from_areas(p, t, o + 1) > dice_from_areas(p, t, o));
        }
    }
}
