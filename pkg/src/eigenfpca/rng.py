"""Seeded, cross-platform random streams for the simulation harness.

All generators are counter-based (Philox) and derived from
``numpy.random.SeedSequence``, so draws are bit-reproducible across
platforms and numpy versions. Stream splitting is hierarchical:

* ``master_rng(seed)`` owns draws that belong to a whole run,
* ``subject_rng(seed, i)`` owns every draw for subject ``i``,

so per-subject generation is order-independent and safe to parallelize.
"""

import numpy as np


def master_rng(seed: int) -> np.random.Generator:
    """Top-level stream for a run."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def subject_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one subject, identified by its 0-based index."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def fold_assignments(seed: int, n_subjects: int, folds: int) -> np.ndarray:
    """Cross-validation fold of each subject.

    A pure function of ``(seed, subject index)``: subject ``i`` hashes to a
    fold through its own seed sequence, so assignments do not change when
    subjects are added or reordered.
    """
    out = np.empty(n_subjects, dtype=np.int64)
    for i in range(n_subjects):
        state = np.random.SeedSequence(entropy=seed, spawn_key=(i, 0xCF)).generate_state(1)
        out[i] = int(state[0]) % folds
    return out
