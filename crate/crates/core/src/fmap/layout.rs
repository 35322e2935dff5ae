use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::info::BlockLayout;
use crate::models::{REG_DIM, TRACK_DIM};

/// Column bookkeeping for `s = [x₁ … xₙ, a₁ … a_k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointLayout {
    track_ids: Vec<u64>,
    slots: BTreeMap<u64, usize>,
    sensors: usize,
}

impl JointLayout {
    pub fn new(sensors: usize) -> Self {
        Self { track_ids: Vec::new(), slots: BTreeMap::new(), sensors }
    }

    pub fn with_tracks(track_ids: Vec<u64>, sensors: usize) -> Result<Self> {
        let mut slots = BTreeMap::new();
        for (slot, id) in track_ids.iter().enumerate() {
            if slots.insert(*id, slot).is_some() {
                return Err(Error::DuplicateTrack { id: *id });
            }
        }
        Ok(Self { track_ids, slots, sensors })
    }

    pub fn tracks(&self) -> usize {
        self.track_ids.len()
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn track_ids(&self) -> &[u64] {
        &self.track_ids
    }

    pub fn contains(&self, id: u64) -> bool {
        self.slots.contains_key(&id)
    }

    pub fn slot(&self, id: u64) -> Result<usize> {
        self.slots.get(&id).copied().ok_or(Error::UnknownTrack { id })
    }

    pub fn block(&self) -> BlockLayout {
        BlockLayout::new(self.tracks(), TRACK_DIM, REG_DIM * self.sensors)
    }

    pub fn dim(&self) -> usize {
        self.block().dim()
    }

    pub fn track_cols(&self, id: u64) -> Result<Range<usize>> {
        Ok(self.block().track_cols(self.slot(id)?))
    }

    pub fn sensor_cols(&self, sensor: usize) -> Result<Range<usize>> {
        if sensor >= self.sensors {
            return Err(Error::UnknownSensor { sensor });
        }
        let start = self.block().reg_offset() + REG_DIM * sensor;
        Ok(start..start + REG_DIM)
    }

    /// Offset of `sensor` inside the registration block.
    pub fn sensor_offset(&self, sensor: usize) -> Result<usize> {
        if sensor >= self.sensors {
            return Err(Error::UnknownSensor { sensor });
        }
        Ok(REG_DIM * sensor)
    }

    /// Layout after deleting `deleted` and prepending `new` (in order).
    pub fn reshaped(&self, new: &[u64], deleted: &[u64]) -> Result<Self> {
        for id in deleted {
            self.slot(*id)?;
        }
        let mut ids: Vec<u64> = new.to_vec();
        ids.extend(self.track_ids.iter().copied().filter(|id| !deleted.contains(id)));
        for id in new {
            if self.contains(*id) && !deleted.contains(id) {
                return Err(Error::DuplicateTrack { id: *id });
            }
        }
        Self::with_tracks(ids, self.sensors)
    }
}
