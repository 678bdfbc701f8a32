"""Large-scale-fading AP selection and the sparse channel estimate used for precoding."""
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    sets: tuple            # K tuples of AP indices, each sorted and nonempty
    G_bar: np.ndarray      # (N_t, K) estimate with unselected links zeroed

    def mask(self):
        n_t = self.G_bar.shape[0]
        return selection_mask(self.sets, n_t)


def selection_mask(sets, n_t):
    """Boolean (N_t, K) mask with True where AP n serves user k."""
    mask = np.zeros((n_t, len(sets)), dtype=bool)
    for k, aps in enumerate(sets):
        mask[list(aps), k] = True
    return mask


def select_aps(zeta):
    """
    Serve user k from every AP whose gain beats the network-wide mean gain.

    A user left with no AP falls back to its single strongest AP; argmax
    breaks ties toward the lowest AP index.

    Returns:
        tuple: K sorted tuples of AP indices
    """
    zeta = np.asarray(zeta, dtype=float)
    mu = zeta.mean()
    above = (zeta - mu) > 0
    sets = []
    for k in range(zeta.shape[1]):
        aps = np.flatnonzero(above[:, k])
        if aps.size == 0:
            aps = np.array([int(np.argmax(zeta[:, k]))])
        sets.append(tuple(int(n) for n in aps))
    return tuple(sets)


def sparsify(G_hat, sets):
    """Zero every estimated coefficient outside the user's AP set; no renormalisation."""
    G_hat = np.asarray(G_hat)
    if len(sets) != G_hat.shape[1]:
        raise ValueError(f"{len(sets)} AP sets for {G_hat.shape[1]} users")
    return np.where(selection_mask(sets, G_hat.shape[0]), G_hat, 0.0)


def cluster(zeta, G_hat):
    """Select APs and build the sparse estimate in one step."""
    sets = select_aps(zeta)
    G_bar = sparsify(G_hat, sets)
    G_bar.flags.writeable = False
    return ClusterAssignment(sets, G_bar)


def dump_clusters_json(assignment, path):
    """Write the AP sets as {"user_<k>": [ap, ...]} for inspection."""
    payload = {f"user_{k}": list(aps) for k, aps in enumerate(assignment.sets)}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
    return path
