"""Weighted Laplacian, Fiedler analysis, nodal inertia, and the generalized
eigenvalue problem whose second mode defines the inertia-weighted placement
metric.

The Laplacian weight of a branch is |Vi||Vj|Bij cos(ti - tj): the
synchronizing power coefficient at the solved operating point, with Bij the
series susceptance magnitude (conductances dropped).  Nodal inertia h_j
aggregates, per bus, how much machine inertia backs the local frequency,
combining equivalent susceptances to each internal node with the frequency
participation weights.  The pencil (L, diag(h)) then generalizes algebraic
connectivity: its second eigenvector, rescaled to unit maximum, scores every
bus between 0 (strongest) and 1 (weakest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .case_model import NetworkCase, bus_ids, bus_positions
from .errors import (
    DisconnectedNetworkError,
    GridGfvError,
    StabilityRegionError,
)
from .powerflow import InternalEmfs, PowerFlowSolution
from .reduction import AugmentedAdmittance, ParticipationMatrix, kron_reduce

# Eigenvalues below this fraction of the largest one count as zero, in the
# standard and the generalized problem alike.
ZERO_EIG_REL = 1e-9
# Relative gap under which the second and third modes are reported degenerate.
DEGENERATE_REL = 1e-6


@dataclass(frozen=True)
class LaplacianMatrix:
    l: np.ndarray
    bus_ids: tuple[int, ...]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues ascending, orthonormal eigenvectors in matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_multiplicity: int


@dataclass(frozen=True)
class FiedlerResult:
    lambda2: float
    vector: np.ndarray  # |phi_2| / max|phi_2|
    degenerate: bool


@dataclass(frozen=True)
class NodalInertiaVector:
    h: np.ndarray  # seconds, per bus
    bus_ids: tuple[int, ...]


@dataclass(frozen=True)
class GeneralizedDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, N-orthonormal
    zero_multiplicity: int
    bus_ids: tuple[int, ...]


@dataclass(frozen=True)
class GfvResult:
    dynamic_connectivity: float  # second generalized eigenvalue, 1/s
    gfv: np.ndarray  # per bus, in [0, 1], max entry exactly 1
    generalized_eigenvalues: np.ndarray
    degenerate: bool
    bus_ids: tuple[int, ...]


def branch_susceptance(r: float, x: float) -> float:
    """Series susceptance magnitude x/(r^2+x^2); equals 1/x when lossless."""
    return x / (r * r + x * x)


def build_laplacian(case: NetworkCase, sol: PowerFlowSolution) -> LaplacianMatrix:
    """Operating-point-weighted Laplacian over the network buses.

    Off-diagonal (i,j): -|Vi||Vj|Bij cos(ti-tj), Bij summed over parallel
    in-service branches; diagonals are the negated off-diagonal row sums, so
    rows sum to zero by construction.  An angle spread of 90 degrees or more
    across any branch would flip the sign of its synchronizing coefficient
    and is rejected as a stability-region violation.
    """
    n = case.n_bus
    pos = bus_positions(case)
    w = np.zeros((n, n))
    for br in case.branches:
        if not br.status:
            continue
        i, j = pos[br.from_bus], pos[br.to_bus]
        spread = sol.va[i] - sol.va[j]
        if abs(spread) >= math.pi / 2:
            raise StabilityRegionError(
                f"branch {br.from_bus}-{br.to_bus}: angle spread "
                f"{math.degrees(spread):.1f} deg reaches 90 deg at the "
                "operating point"
            )
        w[i, j] += sol.vm[i] * sol.vm[j] * branch_susceptance(br.r, br.x) * math.cos(spread)
        w[j, i] = w[i, j]
    lap = np.diag(w.sum(axis=1)) - w
    return LaplacianMatrix(l=lap, bus_ids=bus_ids(case))


def eigendecompose(lap: LaplacianMatrix) -> SpectralDecomposition:
    """Full symmetric eigendecomposition, ascending eigenvalues."""
    vals, vecs = np.linalg.eigh(lap.l)
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    threshold = ZERO_EIG_REL * scale
    zero_multiplicity = int(np.sum(np.abs(vals) <= threshold))
    return SpectralDecomposition(
        eigenvalues=vals, eigenvectors=vecs, zero_multiplicity=zero_multiplicity
    )


def _second_mode(vals: np.ndarray, zero_multiplicity: int, what: str):
    if zero_multiplicity != 1:
        raise DisconnectedNetworkError(
            f"{what} requires a connected network: found {zero_multiplicity} "
            "numerically zero eigenvalues"
        )
    if len(vals) < 2:
        raise GridGfvError(f"{what} needs at least two buses")
    degenerate = False
    if len(vals) >= 3:
        gap = vals[2] - vals[1]
        degenerate = gap <= DEGENERATE_REL * max(abs(vals[2]), abs(vals[1]))
    return degenerate


def fiedler(decomp: SpectralDecomposition) -> FiedlerResult:
    """Second-smallest eigenpair, vector reported as |phi2|/max|phi2|.

    A (near-)degenerate second/third pair is flagged rather than rejected:
    the vector is then one arbitrary member of the eigenspace.
    """
    degenerate = _second_mode(
        decomp.eigenvalues, decomp.zero_multiplicity, "Fiedler analysis"
    )
    vec = np.abs(decomp.eigenvectors[:, 1])
    return FiedlerResult(
        lambda2=float(decomp.eigenvalues[1]),
        vector=vec / vec.max(),
        degenerate=degenerate,
    )


def nodal_inertia(
    case: NetworkCase,
    sol: PowerFlowSolution,
    emfs: InternalEmfs,
    participation: ParticipationMatrix,
    aug: AugmentedAdmittance,
) -> NodalInertiaVector:
    """Per-bus nodal inertia in seconds.

    For each bus j the network is Kron-reduced onto {bus j, all internal
    nodes}; the equivalent susceptances B_kj = Im(Y_red)_{kj} feed

        h_j = sum_k B_kj E_k cos(d_k0 - t_j0)
              / sum_i H_i^{-1} D_ji B_ij E_i cos(d_i0 - t_j0)

    which collapses to h = H for a single-machine system.
    """
    pos = bus_positions(case)
    g_rows = aug.gen_rows()
    h_gen = np.array([g.h for g in case.generators])
    h_out = np.zeros(case.n_bus)
    for bus in case.buses:
        j = pos[bus.id]
        reduced = kron_reduce(aug.matrix, [j] + g_rows)
        b_col = reduced[1:, 0].imag  # bus j kept first, then internal nodes
        terms = b_col * emfs.e_mag * np.cos(emfs.delta0 - sol.va[j])
        denom = float(np.sum(terms * participation.d[j, :] / h_gen))
        if abs(denom) < 1e-12:
            raise GridGfvError(
                f"nodal inertia undefined at bus {bus.id}: denominator "
                f"{denom:.3e} (participation/angle cancellation)"
            )
        h_out[j] = float(np.sum(terms)) / denom
    return NodalInertiaVector(h=h_out, bus_ids=bus_ids(case))


def solve_gep(lap: LaplacianMatrix, inertia: NodalInertiaVector) -> GeneralizedDecomposition:
    """Generalized eigenpairs of (L, N) with N = diag(h), h > 0.

    Solved by the symmetric reduction M = N^{-1/2} L N^{-1/2}: eigh(M) gives
    real ascending eigenvalues, and back-transformed vectors N^{-1/2} psi
    satisfy L v = lambda N v.
    """
    h = inertia.h
    if np.any(h <= 0) or not np.all(np.isfinite(h)):
        bad = [inertia.bus_ids[i] for i in np.nonzero(~(h > 0))[0]]
        raise GridGfvError(f"non-positive nodal inertia at buses {bad}")
    s = 1.0 / np.sqrt(h)
    m = s[:, None] * lap.l * s[None, :]
    m = 0.5 * (m + m.T)
    vals, psi = np.linalg.eigh(m)
    vecs = s[:, None] * psi
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    zero_multiplicity = int(np.sum(np.abs(vals) <= ZERO_EIG_REL * scale))
    return GeneralizedDecomposition(
        eigenvalues=vals,
        eigenvectors=vecs,
        zero_multiplicity=zero_multiplicity,
        bus_ids=inertia.bus_ids,
    )


def gfv(gep: GeneralizedDecomposition) -> GfvResult:
    """Normalized magnitude of the second generalized eigenvector.

    The associated eigenvalue is the dynamic connectivity; low vector entries
    mark buses with high nodal frequency strength.
    """
    degenerate = _second_mode(
        gep.eigenvalues, gep.zero_multiplicity, "the placement metric"
    )
    vec = np.abs(gep.eigenvectors[:, 1])
    return GfvResult(
        dynamic_connectivity=float(gep.eigenvalues[1]),
        gfv=vec / vec.max(),
        generalized_eigenvalues=gep.eigenvalues,
        degenerate=degenerate,
        bus_ids=gep.bus_ids,
    )
