"""Network reduction: generator internal nodes, Kron reduction, and the
frequency participation matrix.

Internal nodes couple to their terminal bus through the transient reactance
only, so the augmented admittance has one extra row/column per machine with a
single off-diagonal entry.  Everything downstream (participation matrix,
nodal inertia susceptances, swing coupling) is a view or Schur complement of
this one matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .case_model import NetworkCase, bus_ids, bus_positions
from .errors import SingularMatrixError

# Node keys: ("bus", bus_id) for network buses, ("gen", k) for the internal
# node of generator k (generators have no ids of their own; k is the index
# in the case's generator list).
NodeKey = tuple[str, int]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class AugmentedAdmittance:
    """Complex admittance over network buses plus generator internal nodes."""

    matrix: np.ndarray
    nodes: tuple[NodeKey, ...]

    @property
    def index(self) -> dict[NodeKey, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    def bus_rows(self) -> list[int]:
        return [i for i, (kind, _) in enumerate(self.nodes) if kind == "bus"]

    def gen_rows(self) -> list[int]:
        return [i for i, (kind, _) in enumerate(self.nodes) if kind == "gen"]


@dataclass(frozen=True)
class ParticipationMatrix:
    """Maps generator frequencies to bus frequencies: f_bus = d @ f_gen.

    Row order follows the case bus order, column order the generator order.
    On shunt-free cases every row sums to 1.
    """

    d: np.ndarray
    bus_ids: tuple[int, ...]


def augment_internal_nodes(ybus: np.ndarray, case: NetworkCase) -> AugmentedAdmittance:
    """Extend ybus with one internal node per generator behind 1/(j*xd_p).

    A zero transient reactance would make the internal node electrically
    identical to its terminal and collapse the block partition, so it is
    rejected outright; floor tiny machines at >= 1e-4 pu in the case file
    instead.
    """
    n = case.n_bus
    ng = case.n_gen
    pos = bus_positions(case)
    aug = np.zeros((n + ng, n + ng), dtype=complex)
    aug[:n, :n] = ybus
    for k, gen in enumerate(case.generators):
        if gen.xd_p == 0.0:
            raise SingularMatrixError(
                f"generator[{k}] at bus {gen.bus} has xd_p = 0; internal node "
                "would coincide with its terminal (use xd_p >= 1e-4 pu)"
            )
        y = 1.0 / complex(0.0, gen.xd_p)
        t = pos[gen.bus]
        g = n + k
        aug[g, g] = y
        aug[t, t] += y
        aug[g, t] = -y
        aug[t, g] = -y
    nodes = tuple(("bus", bid) for bid in bus_ids(case)) + tuple(
        ("gen", k) for k in range(ng)
    )
    return AugmentedAdmittance(matrix=aug, nodes=nodes)


def kron_reduce(y: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Schur complement onto the kept rows/columns (original order preserved).

    Equivalent terminal behavior: for any voltage vector on the kept nodes
    with zero injection at eliminated nodes, the kept-node currents agree
    with the full matrix.  Works for any square matrix whose eliminated
    block is nonsingular (complex admittance or real Laplacian alike).
    """
    n = y.shape[0]
    kept = set(keep)
    keep_idx = [i for i in range(n) if i in kept]
    elim_idx = [i for i in range(n) if i not in kept]
    if len(keep_idx) != len(kept):
        raise ValueError("keep contains indices outside the matrix")
    if not elim_idx:
        return y.copy()
    y_kk = y[np.ix_(keep_idx, keep_idx)]
    y_ke = y[np.ix_(keep_idx, elim_idx)]
    y_ek = y[np.ix_(elim_idx, keep_idx)]
    y_ee = y[np.ix_(elim_idx, elim_idx)]
    if np.linalg.cond(y_ee) > _COND_LIMIT:
        raise SingularMatrixError(
            "eliminated block is singular; the eliminated nodes contain an "
            "isolated subnetwork"
        )
    return y_kk - y_ke @ np.linalg.solve(y_ee, y_ek)


def frequency_participation(aug: AugmentedAdmittance) -> ParticipationMatrix:
    """Frequency-divider participation matrix d = -B_ext^{-1} B_g.

    B_ext is the imaginary part of the bus-bus block of the augmented
    admittance (generator reactances already sit on its diagonal), B_g the
    imaginary part of the bus-to-internal-node coupling block.
    """
    b_rows = aug.bus_rows()
    g_rows = aug.gen_rows()
    b_ext = aug.matrix[np.ix_(b_rows, b_rows)].imag
    b_g = aug.matrix[np.ix_(b_rows, g_rows)].imag
    if np.linalg.cond(b_ext) > _COND_LIMIT:
        raise SingularMatrixError("bus susceptance block B_ext is singular")
    d = -np.linalg.solve(b_ext, b_g)
    ids = tuple(nid for kind, nid in aug.nodes if kind == "bus")
    return ParticipationMatrix(d=d, bus_ids=ids)
