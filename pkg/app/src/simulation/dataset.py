"""
Dataset assembly: randomized load families, integration, noise and
pseudo-measurements for every sequence, plus the seeded train/val/test split.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.models.schemas import BuildingConfig, ScenarioConfig
from app.src.simulation.integrator import integrate_rk4
from app.src.simulation.loads import (
    LoadSignal, combine_loads, gen_base_excitation, gen_decaying_harmonic, gen_impulse
)
from app.src.simulation.measurement import MeasurementSet, measure
from app.src.structure.matrices import ShearBuildingSpec, build_shear_matrices
from app.utils.exceptions import InvalidScenarioError, LoadIdError
from app.utils.seeding import derive_seed, substream
from app.utils.validators import validate_split
from app.utils.workers import map_ordered

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SequenceRecord:
    """One measured sequence with its true load."""
    sequence_id: str
    measurements: MeasurementSet
    load: LoadSignal
    noise_seed: Optional[int] = None


@dataclass(eq=False)
class Dataset:
    """Sequences with a disjoint train/val/test split (lists of sequence positions)."""
    sequences: List[SequenceRecord]
    split: Dict[str, List[int]]
    measured_dofs: List[int]
    target_dofs: List[int]
    dt: float
    nsr: float
    scenario: str = "shaker"
    seed: Optional[int] = None
    spec: Optional[ShearBuildingSpec] = None
    detrend_cutoff_hz: Optional[float] = None

    def subset(self, name: str) -> List[SequenceRecord]:
        return [self.sequences[i] for i in self.split.get(name, [])]

    @property
    def n_channels(self) -> int:
        return len(self.measured_dofs)


def building_spec(building: BuildingConfig) -> ShearBuildingSpec:
    return ShearBuildingSpec.from_arrays(building.masses, building.stiffnesses, building.dampings)


def assign_split(count: int, split: Tuple[int, int, int], seed: int) -> Dict[str, List[int]]:
    """Seeded permutation cut into train/val/test; each list sorted."""
    if not validate_split(split, count):
        raise InvalidScenarioError(f"split {tuple(split)} must sum to count={count}")
    order = substream(seed, "split").permutation(count)
    n_train, n_val, _ = split
    return {
        "train": sorted(int(i) for i in order[:n_train]),
        "val": sorted(int(i) for i in order[n_train:n_train + n_val]),
        "test": sorted(int(i) for i in order[n_train + n_val:]),
    }


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    low, high = bounds
    return float(rng.uniform(low, high)) if high > low else float(low)


def draw_load(scenario: ScenarioConfig, spec: ShearBuildingSpec, input_dofs: List[int],
              seed: int, index: int) -> LoadSignal:
    """Draw the load of sequence ``index`` from the scenario's ranges."""
    rng = substream(seed, "dataset", index)
    n = spec.n_stories

    if scenario.kind == "shaker":
        ranges = scenario.harmonic
        onset_high = min(ranges.onset[1], scenario.duration - scenario.dt)
        loads = [
            gen_decaying_harmonic(
                amplitude=_uniform(rng, ranges.amplitude),
                omega=_uniform(rng, ranges.omega),
                decay=_uniform(rng, ranges.decay),
                onset=_uniform(rng, (ranges.onset[0], max(onset_high, ranges.onset[0]))),
                duration=scenario.duration, dt=scenario.dt, dof=dof, n=n,
            )
            for dof in input_dofs
        ]
        return combine_loads(loads)

    if scenario.kind == "base":
        ranges = scenario.base
        envelope = (
            ranges.rise_fraction * scenario.duration,
            ranges.plateau_fraction * scenario.duration,
            ranges.fall_fraction * scenario.duration,
        )
        return gen_base_excitation(
            intensity=_uniform(rng, ranges.intensity),
            corner_freqs=ranges.corner_freqs,
            envelope=envelope,
            duration=scenario.duration, dt=scenario.dt, spec=spec,
            seed=derive_seed(seed, "base", index),
        )

    if scenario.kind == "impact":
        ranges = scenario.impact
        loads = []
        for dof in input_dofs:
            width = _uniform(rng, ranges.width)
            impact_time = _uniform(rng, ranges.impact_fraction) * scenario.duration
            # keep the pulse inside the record
            impact_time = min(impact_time, scenario.duration - width - 2 * scenario.dt)
            loads.append(gen_impulse(
                peak=_uniform(rng, ranges.peak), width=width, impact_time=impact_time,
                duration=scenario.duration, dt=scenario.dt, dof=dof, n=n,
            ))
        return combine_loads(loads)

    raise InvalidScenarioError(f"Unknown scenario kind {scenario.kind!r}")


def simulate_sequence(scenario: ScenarioConfig, building: BuildingConfig, seed: int, index: int,
                      nsr: Optional[float] = None) -> SequenceRecord:
    """Generate, integrate and measure one sequence."""
    spec = building_spec(building)
    load = draw_load(scenario, spec, building.input_indices, seed, index)
    response = integrate_rk4(build_shear_matrices(spec), load)

    noise_seed = derive_seed(seed, "noise", index)
    measurements = measure(
        response.accelerations,
        scenario.measured_indices,
        scenario.nsr if nsr is None else nsr,
        scenario.dt,
        noise_seed,
        scenario.detrend_cutoff_hz,
    )
    return SequenceRecord(
        sequence_id=f"seq_{index:03d}",
        measurements=measurements,
        load=load,
        noise_seed=noise_seed,
    )


def build_dataset(scenario: ScenarioConfig, building: BuildingConfig, seed: int,
                  count: Optional[int] = None, split: Optional[Tuple[int, int, int]] = None,
                  nsr: Optional[float] = None, threads: Optional[int] = None) -> Dataset:
    """
    Build ``count`` randomized sequences and split them.

    Each sequence uses its own random streams derived from (seed, index), so
    the result does not depend on how the work is scheduled.

    Args:
        scenario: Scenario settings (kind, ranges, sampling, noise, measured stories)
        building: Building description (loaded stories come from input_dofs)
        seed: Master seed
        count: Number of sequences (defaults to scenario.count)
        split: (train, val, test) counts (defaults to scenario.split)
        nsr: Noise level override (noise sweeps)
        threads: Worker pool size override

    Returns:
        Dataset

    Raises:
        InvalidScenarioError: Inconsistent count and split
    """
    count = scenario.count if count is None else int(count)
    split = tuple(scenario.split) if split is None else tuple(int(s) for s in split)
    if count < 1:
        raise InvalidScenarioError(f"count must be positive, got {count}")
    split_indices = assign_split(count, split, seed)

    logger.info(f"Generating {count} {scenario.kind} sequences ({scenario.duration}s at dt={scenario.dt})")

    def generate(index: int) -> SequenceRecord:
        try:
            return simulate_sequence(scenario, building, seed, index, nsr)
        except LoadIdError as e:
            logger.error(f"Sequence {index} failed: {e}")
            raise

    sequences = map_ordered(generate, range(count), threads=threads)

    return Dataset(
        sequences=sequences,
        split=split_indices,
        measured_dofs=scenario.measured_indices,
        target_dofs=building.input_indices,
        dt=scenario.dt,
        nsr=scenario.nsr if nsr is None else float(nsr),
        scenario=scenario.kind,
        seed=seed,
        spec=building_spec(building),
        detrend_cutoff_hz=scenario.detrend_cutoff_hz,
    )
