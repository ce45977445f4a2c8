use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::{c, CMatrix};
use crate::error::{Error, Result};

use super::operator::{core_shape, LocalOperator};
use super::sector::SectorIndex;
use super::site::Space;

/// Serialized operator. Blocks are cores in the adapted frame of the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub extents: Vec<usize>,
    pub local_dims: Vec<usize>,
    pub scalar: [f64; 2],
    pub blocks: Vec<BlockDoc>,
    #[serde(default)]
    pub dropped: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDoc {
    pub sector: SectorIndex,
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[re, im]` pairs.
    pub block: Vec<[f64; 2]>,
}

impl LocalOperator {
    pub fn to_doc(&self) -> OperatorDoc {
        let space = self.space();
        let blocks = self
            .blocks()
            .iter()
            .map(|(sector, core)| {
                let mut block = Vec::with_capacity(core.len());
                for i in 0..core.nrows() {
                    for j in 0..core.ncols() {
                        let z = core[(i, j)];
                        block.push([z.re, z.im]);
                    }
                }
                BlockDoc { sector: *sector, rows: core.nrows(), cols: core.ncols(), block }
            })
            .collect();
        OperatorDoc {
            extents: space.volume().extents().to_vec(),
            local_dims: (0..space.num_sites()).map(|x| space.dim(x)).collect(),
            scalar: [self.scalar().re, self.scalar().im],
            blocks,
            dropped: self.dropped(),
        }
    }

    pub fn from_doc(space: &Arc<Space>, doc: &OperatorDoc) -> Result<Self> {
        if doc.extents != space.volume().extents() {
            return Err(Error::schema("extents", "does not match the volume"));
        }
        let dims: Vec<usize> = (0..space.num_sites()).map(|x| space.dim(x)).collect();
        if doc.local_dims != dims {
            return Err(Error::schema("local_dims", "does not match the site spaces"));
        }
        let mut op = LocalOperator::zero(space);
        op.set_scalar(c(doc.scalar[0], doc.scalar[1]));
        for b in &doc.blocks {
            let sector = SectorIndex::try_new(b.sector.plus, b.sector.minus, b.sector.neutral)
                .map_err(|e| Error::schema("blocks.sector", e.to_string()))?;
            if sector.support().is_empty() {
                return Err(Error::schema("blocks.sector", "empty sector belongs in `scalar`"));
            }
            if core_shape(space, &sector) != (b.rows, b.cols) || b.block.len() != b.rows * b.cols {
                return Err(Error::schema("blocks.block", format!("wrong shape for sector {sector:?}")));
            }
            let core = CMatrix::from_row_iterator(b.rows, b.cols, b.block.iter().map(|p| c(p[0], p[1])));
            op.insert_block(sector, core);
        }
        op.add_dropped(doc.dropped);
        Ok(op)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("operator documents always serialize")
    }

    pub fn from_json(space: &Arc<Space>, s: &str) -> Result<Self> {
        let doc: OperatorDoc = serde_json::from_str(s)?;
        Self::from_doc(space, &doc)
    }
}
