from typing import Iterable, Sequence

import numpy as np

###############################################################################
               # Validators for building and scenario settings
###############################################################################

def validate_positive(value: float) -> bool:
    """Validate a strictly positive finite scalar"""
    return bool(np.isfinite(value) and value > 0)

def validate_non_negative(value: float) -> bool:
    """Validate a non-negative finite scalar"""
    return bool(np.isfinite(value) and value >= 0)

def validate_positive_array(values: Iterable[float]) -> bool:
    """Validate that every entry is finite and strictly positive"""
    arr = np.asarray(values, dtype=float)
    return arr.size > 0 and bool(np.all(np.isfinite(arr)) and np.all(arr > 0))

def validate_length(values: Sequence, expected: int) -> bool:
    """Validate sequence length"""
    return len(values) == expected

def validate_dof_indices(indices: Iterable[int], n_dofs: int) -> bool:
    """Validate 0-based DOF indices against the number of stories"""
    indices = list(indices)
    return all(0 <= int(i) < n_dofs for i in indices) and len(set(indices)) == len(indices)

def validate_story_numbers(stories: Iterable[int], n_stories: int) -> bool:
    """Validate 1-based story numbers as written in configuration files"""
    return validate_dof_indices([int(s) - 1 for s in stories], n_stories)

def validate_range(bounds: Sequence[float]) -> bool:
    """Validate a (low, high) pair"""
    return len(bounds) == 2 and bool(np.isfinite(bounds[0]) and np.isfinite(bounds[1])) and bounds[0] <= bounds[1]

def validate_rate(rate: float) -> bool:
    """Validate a probability-like rate in [0, 1)"""
    return bool(np.isfinite(rate) and 0 <= rate < 1)

###############################################################################
                   # Validators for dataset splits
###############################################################################

def validate_split(split: Sequence[int], count: int) -> bool:
    """Validate (train, val, test) counts against the number of sequences"""
    return len(split) == 3 and all(int(s) >= 0 for s in split) and sum(split) == count

def validate_split_indices(train: Sequence[int], val: Sequence[int], test: Sequence[int], count: int) -> bool:
    """Validate that split index lists are disjoint and cover every sequence"""
    combined = list(train) + list(val) + list(test)
    return len(combined) == len(set(combined)) and set(combined) == set(range(count))
