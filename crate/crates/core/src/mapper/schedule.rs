//! Greedy row-major tiling of a layer's weights onto macro banks.
//!
//! A bank load stores `rows·cols / n` weights (one n-bit word each), filled
//! row-major from the flattened weight tensor; each load occupies one bank.
//! A pass computes `lanes` products, so a tile whose weights are applied at
//! `reuse` input positions takes `ceil(weights · reuse / lanes)` passes.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::model::LayerSpec;
use super::MapError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroGeometry {
    pub rows: usize,
    pub cols: usize,
    pub banks: usize,
}

impl Default for MacroGeometry {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: 64,
            banks: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tile {
    pub bank: usize,
    pub row_range: Range<usize>,
    pub col_range: Range<usize>,
    /// Flattened weight indices stored in this tile, in storage order.
    pub weights: Range<usize>,
    pub passes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TileSchedule {
    pub tiles: Vec<Tile>,
    pub passes: usize,
    pub banks_required: usize,
    pub lanes: usize,
    pub weights_per_bank: usize,
    pub reuse: usize,
}

/// One pass of a replay: the (weight index, input position) products it
/// computes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassWork {
    pub bank: usize,
    pub products: Vec<(usize, usize)>,
}

impl TileSchedule {
    /// Layer MACs covered by the schedule.
    pub fn mac_count(&self) -> usize {
        self.tiles.iter().map(|t| t.weights.len()).sum::<usize>() * self.reuse
    }

    /// Replays the schedule pass by pass. Within a tile the products are
    /// enumerated position-major and chunked into `lanes`-sized passes.
    pub fn replay(&self) -> impl Iterator<Item = PassWork> + '_ {
        self.tiles.iter().flat_map(move |tile| {
            let n = tile.weights.len();
            let total = n * self.reuse;
            (0..tile.passes).map(move |p| {
                let start = p * self.lanes;
                let end = (start + self.lanes).min(total);
                PassWork {
                    bank: tile.bank,
                    products: (start..end)
                        .map(|k| (tile.weights.start + k % n, k / n))
                        .collect(),
                }
            })
        })
    }
}

pub fn map_layer(layer: &LayerSpec, geometry: MacroGeometry) -> Result<TileSchedule, MapError> {
    layer.validate()?;
    let mode = layer.precision;
    let n = mode.bits() as usize;
    let lanes = mode.lanes_for(geometry.rows, geometry.cols);
    if lanes == 0 || geometry.banks == 0 {
        return Err(MapError::InvalidLayer(format!(
            "{}x{} macro with {} banks cannot run {mode}",
            geometry.rows, geometry.cols, geometry.banks
        )));
    }
    let per_row = geometry.cols / n;
    let per_bank = geometry.rows * per_row;
    let count = layer.weight_count();
    let reuse = layer.reuse();
    let loads = count.div_ceil(per_bank);
    if loads > geometry.banks {
        return Err(MapError::InsufficientBanks {
            required: loads,
            available: geometry.banks,
        });
    }
    let tiles: Vec<Tile> = (0..loads)
        .map(|bank| {
            let start = bank * per_bank;
            let end = (start + per_bank).min(count);
            let len = end - start;
            let used_rows = len.div_ceil(per_row);
            let used_cols = if used_rows > 1 { per_row } else { len } * n;
            Tile {
                bank,
                row_range: 0..used_rows,
                col_range: 0..used_cols,
                weights: start..end,
                passes: (len * reuse).div_ceil(lanes),
            }
        })
        .collect();
    Ok(TileSchedule {
        passes: tiles.iter().map(|t| t.passes).sum(),
        banks_required: loads,
        tiles,
        lanes,
        weights_per_bank: per_bank,
        reuse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::PrecisionMode;

    fn i8() -> PrecisionMode {
        PrecisionMode::signed(8).unwrap()
    }

    #[test]
    fn dense_examples() {
        let one_bank = MacroGeometry {
            banks: 1,
            ..MacroGeometry::default()
        };
        let s = map_layer(&LayerSpec::dense(64, 8, i8()), one_bank).unwrap();
        assert_eq!((s.tiles.len(), s.passes, s.banks_required), (1, 8, 1));
        assert_eq!(s.weights_per_bank, 512);

        let s = map_layer(&LayerSpec::dense(64, 64, i8()), MacroGeometry::default()).unwrap();
        assert_eq!(s.banks_required, 8);
        assert!(matches!(
            map_layer(&LayerSpec::dense(64, 64, i8()), one_bank),
            Err(MapError::InsufficientBanks { required: 8, available: 1 })
        ));

        let s = map_layer(&LayerSpec::dense(1, 1, i8()), one_bank).unwrap();
        assert_eq!((s.tiles.len(), s.passes), (1, 1));
        assert_eq!(s.tiles[0].col_range, 0..8);
    }

    #[test]
    fn replay_covers_every_pair_once() {
        let layer: LayerSpec = serde_json::from_str(
            r#"{"kind":"conv2d","in_channels":2,"out_channels":3,"kernel":[3,3],"stride":1,
                "input_hw":[6,6],"activation":"relu","precision":"i4","weight":"w"}"#,
        )
        .unwrap();
        let geometry = MacroGeometry {
            rows: 16,
            cols: 16,
            banks: 4,
        };
        let s = map_layer(&layer, geometry).unwrap();
        let mut seen = vec![0u8; layer.weight_count() * layer.reuse()];
        let mut passes = 0;
        for work in s.replay() {
            assert!(work.products.len() <= s.lanes);
            for (w, p) in work.products {
                seen[p * layer.weight_count() + w] += 1;
            }
            passes += 1;
        }
        assert_eq!(passes, s.passes);
        assert!(seen.iter().all(|&c| c == 1));
        assert!(s.passes * s.lanes >= s.mac_count());
    }
}
