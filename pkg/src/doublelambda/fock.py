"""
Two-mode Fock-space states and the medium channel acting on them.

States live on a square grid ``0 <= n_p, n_s <= nmax`` flattened as
``n_p * (nmax + 1) + n_s``.  The channel is evaluated from the normally
ordered expansion of the output projector ``|n><m|`` in the output
annihilation operators; since only lowering operators act on the input,
the result is exact for any input below the cutoff.  A four-mode unitary
dilation with two loss modes provides an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .medium import DomainError, TransferMatrix

ZERO_TOL = 1e-14


class CapacityError(DomainError):
    """The photon-number cutoff cannot hold the requested state."""


def _flat(nmax: int, n_p: int, n_s: int) -> int:
    return n_p * (nmax + 1) + n_s


def _labels(nmax: int) -> list[tuple[int, int]]:
    return [(p, s) for p in range(nmax + 1) for s in range(nmax + 1)]


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Density operator on the truncated two-mode grid.

    ``matrix[i, j] = <i|rho|j>`` in the flattened basis.  ``elements`` gives
    the same data as a 4-index array where ``elements[m_p, m_s, n_p, n_s]``
    is ``<n_p n_s|rho|m_p m_s>``.
    """

    nmax: int
    matrix: NDArray[np.complex128]

    def __post_init__(self) -> None:
        dim = (self.nmax + 1) ** 2
        if self.nmax < 0:
            raise DomainError(f"nmax must be >= 0, got {self.nmax}")
        if self.matrix.shape != (dim, dim):
            raise DomainError(f"matrix must have shape {(dim, dim)}, got {self.matrix.shape}")

    @property
    def dim(self) -> int:
        return (self.nmax + 1) ** 2

    @property
    def elements(self) -> NDArray[np.complex128]:
        k = self.nmax + 1
        return self.matrix.reshape(k, k, k, k).transpose(2, 3, 0, 1)

    def element(self, m_p: int, m_s: int, n_p: int, n_s: int) -> complex:
        return complex(self.matrix[_flat(self.nmax, n_p, n_s), _flat(self.nmax, m_p, m_s)])

    def probability(self, n_p: int, n_s: int) -> float:
        return float(self.matrix[_flat(self.nmax, n_p, n_s), _flat(self.nmax, n_p, n_s)].real)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def max_photons(self) -> int:
        """Largest total photon number touched by any nonzero element."""
        totals = np.array([p + s for p, s in _labels(self.nmax)])
        mask = self.matrix != 0
        rows = totals[mask.any(axis=1)]
        cols = totals[mask.any(axis=0)]
        return int(max(rows.max(initial=0), cols.max(initial=0)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def resized(self, nmax: int) -> "FockDensityMatrix":
        """Copy onto a different cutoff; refuses to drop nonzero content."""
        if nmax < self.nmax:
            for p, s in _labels(self.nmax):
                if p > nmax or s > nmax:
                    i = _flat(self.nmax, p, s)
                    if np.any(self.matrix[i] != 0) or np.any(self.matrix[:, i] != 0):
                        raise CapacityError(f"state has content at |{p},{s}> beyond nmax={nmax}")
        out = np.zeros(((nmax + 1) ** 2,) * 2, dtype=complex)
        keep = [(p, s) for p, s in _labels(self.nmax) if p <= nmax and s <= nmax]
        src = [_flat(self.nmax, p, s) for p, s in keep]
        dst = [_flat(nmax, p, s) for p, s in keep]
        out[np.ix_(dst, dst)] = self.matrix[np.ix_(src, src)]
        return FockDensityMatrix(nmax, out)

    def __add__(self, other: "FockDensityMatrix") -> "FockDensityMatrix":
        if other.nmax != self.nmax:
            raise DomainError("cutoffs differ")
        return FockDensityMatrix(self.nmax, self.matrix + other.matrix)

    def __rmul__(self, scalar: complex) -> "FockDensityMatrix":
        return FockDensityMatrix(self.nmax, scalar * self.matrix)

    @classmethod
    def from_pure(cls, state: "PureTwoModeState", nmax: int) -> "FockDensityMatrix":
        vec = state.vector(nmax)
        return cls(nmax, np.outer(vec, vec.conj()))

    @classmethod
    def fock(cls, n_p: int, n_s: int, nmax: int) -> "FockDensityMatrix":
        return cls.from_pure(PureTwoModeState({(n_p, n_s): 1.0}), nmax)

    @classmethod
    def vacuum(cls, nmax: int) -> "FockDensityMatrix":
        return cls.fock(0, 0, nmax)


@dataclass(frozen=True)
class CoherentPair:
    beta_p: complex
    beta_s: complex

    def __post_init__(self) -> None:
        if not (np.isfinite(self.beta_p) and np.isfinite(self.beta_s)):
            raise DomainError("coherent amplitudes must be finite")

    def truncated_state(self, nmax: int) -> "PureTwoModeState":
        """Product coherent state projected onto total photon number <= nmax."""
        amps = {}
        for p in range(nmax + 1):
            for s in range(nmax + 1 - p):
                amps[(p, s)] = (
                    self.beta_p**p / math.sqrt(math.factorial(p))
                    * self.beta_s**s / math.sqrt(math.factorial(s))
                )
        return PureTwoModeState(amps, normalize=True)

    def density_matrix(self, nmax: int) -> NDArray[np.complex128]:
        """Exact (untruncated-norm) coherent projector restricted to the grid."""
        k = nmax + 1
        n = np.arange(k)
        fact = np.sqrt([float(math.factorial(i)) for i in n])
        vp = np.exp(-0.5 * abs(self.beta_p) ** 2) * self.beta_p**n / fact
        vs = np.exp(-0.5 * abs(self.beta_s) ** 2) * self.beta_s**n / fact
        vec = np.kron(vp, vs)
        return np.outer(vec, vec.conj())


class PureTwoModeState:
    """Normalized superposition of two-mode number states."""

    def __init__(self, amplitudes: dict[tuple[int, int], complex], normalize: bool = False):
        amps = {tuple(k): complex(v) for k, v in amplitudes.items() if v != 0}
        norm = math.sqrt(sum(abs(v) ** 2 for v in amps.values()))
        if normalize:
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = {k: v / norm for k, v in amps.items()}
        elif abs(norm - 1.0) > 1e-12:
            raise DomainError(f"state is not normalized (norm {norm:.15g})")
        self.amplitudes = amps

    def __repr__(self) -> str:
        return f"PureTwoModeState({self.amplitudes!r})"

    def max_photons(self) -> int:
        return max(p + s for p, s in self.amplitudes)

    def vector(self, nmax: int) -> NDArray[np.complex128]:
        vec = np.zeros((nmax + 1) ** 2, dtype=complex)
        for (p, s), amp in self.amplitudes.items():
            if p > nmax or s > nmax:
                raise CapacityError(f"|{p},{s}> does not fit below nmax={nmax}")
            vec[_flat(nmax, p, s)] = amp
        return vec


def noon_state(n: int = 2, phase: float = 0.0) -> PureTwoModeState:
    """(|n,0> + e^{i phase}|0,n>)/sqrt(2)."""
    return PureTwoModeState({(n, 0): 1.0, (0, n): np.exp(1j * phase)}, normalize=True)


@lru_cache(maxsize=16)
def _lowering(nmax: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    a = np.diag(np.sqrt(np.arange(1, nmax + 1, dtype=float)), 1)
    eye = np.eye(nmax + 1)
    return np.kron(a, eye), np.kron(eye, a)


def _check_capacity(rho_in: FockDensityMatrix) -> int:
    total = rho_in.max_photons()
    if total > rho_in.nmax:
        raise CapacityError(
            f"input holds up to {total} photons but nmax={rho_in.nmax}; raise the cutoff"
        )
    return total


def _channel_on_operator(tm: TransferMatrix, op: NDArray[np.complex128], nmax: int, total: int):
    """Apply the normally ordered expansion to an arbitrary operator on the grid."""
    a_p, a_s = _lowering(nmax)
    # output annihilation operators in terms of the input ones
    b_p = np.conj(tm.a) * a_p + np.conj(tm.b) * a_s
    b_s = np.conj(tm.c) * a_p + np.conj(tm.d) * a_s
    dim = (nmax + 1) ** 2

    pow_p = [np.eye(dim, dtype=complex)]
    pow_s = [np.eye(dim, dtype=complex)]
    for _ in range(total):
        pow_p.append(b_p @ pow_p[-1])
        pow_s.append(b_s @ pow_s[-1])

    keys = [(kp, ks) for kp in range(total + 1) for ks in range(total + 1 - kp)]
    pos = {k: i for i, k in enumerate(keys)}
    lowered = np.stack([pow_p[kp] @ pow_s[ks] for kp, ks in keys])
    # gram[k, k'] = Tr(b^k rho (b^k')^dag)
    gram = np.tensordot(lowered @ op, lowered.conj(), axes=([1, 2], [1, 2]))

    inv_fact = [1.0 / math.factorial(i) for i in range(total + 1)]
    out = np.zeros((dim, dim), dtype=complex)
    sectors = keys  # output states can hold at most ``total`` photons
    for m in sectors:
        for n in sectors:
            budget = total - max(m[0] + m[1], n[0] + n[1])
            if budget < 0:
                continue
            acc = 0j
            for lp in range(budget + 1):
                for ls in range(budget + 1 - lp):
                    sign = -1.0 if (lp + ls) % 2 else 1.0
                    acc += (
                        sign * inv_fact[lp] * inv_fact[ls]
                        * gram[pos[(m[0] + lp, m[1] + ls)], pos[(n[0] + lp, n[1] + ls)]]
                    )
            norm = math.sqrt(
                math.factorial(m[0]) * math.factorial(m[1]) * math.factorial(n[0]) * math.factorial(n[1])
            )
            # acc = <m|rho_out|n>
            out[_flat(nmax, *m), _flat(nmax, *n)] = acc / norm
    return out


def apply_channel(tm: TransferMatrix, rho_in: FockDensityMatrix) -> FockDensityMatrix:
    """Output state of the medium for input ``rho_in`` (Langevin photons neglected)."""
    total = _check_capacity(rho_in)
    out = _channel_on_operator(tm, rho_in.matrix, rho_in.nmax, total)
    return FockDensityMatrix(rho_in.nmax, out)


def channel_choi(tm: TransferMatrix, nmax: int = 2) -> NDArray[np.complex128]:
    """Choi matrix of the channel on the input subspace with at most ``nmax`` photons."""
    dim = (nmax + 1) ** 2
    basis = [_flat(nmax, p, s) for p, s in _labels(nmax) if p + s <= nmax]
    choi = np.zeros((len(basis) * dim,) * 2, dtype=complex)
    for a, i in enumerate(basis):
        for b, j in enumerate(basis):
            unit = np.zeros((dim, dim), dtype=complex)
            unit[i, j] = 1.0
            block = _channel_on_operator(tm, unit, nmax, nmax)
            choi[a * dim : (a + 1) * dim, b * dim : (b + 1) * dim] = block
    return choi


def dilation_unitary(tm: TransferMatrix, tol: float = 1e-12) -> NDArray[np.complex128]:
    """4x4 unitary on (probe, signal, loss_1, loss_2) whose top-left block is the
    annihilation-operator map ``conj(T)``."""
    w = tm.mode_map()
    u, s, vh = np.linalg.svd(w)
    if s[0] > 1.0 + tol:
        raise DomainError(f"mode map has singular value {s[0]:.15g} > 1 (active medium)")
    s = np.clip(s, 0.0, 1.0)
    comp = np.sqrt(1.0 - s * s)
    v = vh.conj().T
    top_right = u @ np.diag(comp) @ u.conj().T
    bottom_left = v @ np.diag(comp) @ v.conj().T
    # sign placed on the top-right block so that a transparent medium maps to I4
    return np.block([[w, -top_right], [bottom_left, w.conj().T]])


def _passive_output(unitary: NDArray[np.complex128], occupation: tuple[int, ...], cutoff: int):
    """Fock amplitudes of the multimode output for an input number state.

    Each input photon in mode j becomes ``sum_i U[i, j] a_i^dag``.
    """
    modes = unitary.shape[0]
    state = {(0,) * modes: 1.0 + 0j}
    for j, count in enumerate(occupation):
        for _ in range(count):
            nxt: dict[tuple[int, ...], complex] = {}
            for occ, amp in state.items():
                for i in range(modes):
                    coeff = unitary[i, j]
                    if coeff == 0:
                        continue
                    new = list(occ)
                    new[i] += 1
                    key = tuple(new)
                    nxt[key] = nxt.get(key, 0j) + amp * coeff * math.sqrt(new[i])
            state = nxt
        state = {k: v / math.sqrt(math.factorial(count)) for k, v in state.items()}
    out = np.zeros((cutoff + 1,) * modes, dtype=complex)
    for occ, amp in state.items():
        out[occ] = amp
    return out


def apply_channel_dilation(tm: TransferMatrix, rho_in: FockDensityMatrix) -> FockDensityMatrix:
    """Same channel as ``apply_channel`` through the unitary dilation and a
    partial trace over the loss modes."""
    _check_capacity(rho_in)
    nmax = rho_in.nmax
    unitary = dilation_unitary(tm)
    labels = _labels(nmax)
    support = [i for i, (p, s) in enumerate(labels) if p + s <= nmax]
    k = nmax + 1
    # psi[i] has shape (system, loss) after reshaping
    psi = np.stack(
        [
            _passive_output(unitary, (labels[i][0], labels[i][1], 0, 0), nmax).reshape(k * k, k * k)
            for i in support
        ]
    )
    rho = rho_in.matrix[np.ix_(support, support)]
    out = np.einsum("ij,iae,jbe->ab", rho, psi, psi.conj(), optimize=True)
    return FockDensityMatrix(nmax, out)


def coherent_output(tm: TransferMatrix, fields: CoherentPair) -> CoherentPair:
    w = tm.mode_map()
    beta = w @ np.array([fields.beta_p, fields.beta_s])
    return CoherentPair(complex(beta[0]), complex(beta[1]))


def overlap(rho: FockDensityMatrix, target: PureTwoModeState) -> float:
    """<psi|rho|psi> on the trace-normalized state."""
    # components beyond the cutoff meet no content in rho
    fitting = {k: v for k, v in target.amplitudes.items() if max(k) <= rho.nmax}
    vec = np.zeros(rho.dim, dtype=complex)
    for (p, s), amp in fitting.items():
        vec[_flat(rho.nmax, p, s)] = amp
    value = np.vdot(vec, rho.matrix @ vec).real / rho.trace().real
    return float(min(max(value, 0.0), 1.0))


def uhlmann_fidelity(rho: FockDensityMatrix, target: PureTwoModeState) -> float:
    """sqrt(<psi|rho|psi>) for a pure target."""
    return math.sqrt(overlap(rho, target))


def mode_probabilities(rho: FockDensityMatrix) -> dict[tuple[int, int], float]:
    diag = np.diag(rho.matrix).real
    return {label: float(diag[i]) for i, label in enumerate(_labels(rho.nmax)) if abs(diag[i]) > ZERO_TOL}


__all__ = [
    "CapacityError",
    "CoherentPair",
    "FockDensityMatrix",
    "PureTwoModeState",
    "apply_channel",
    "apply_channel_dilation",
    "channel_choi",
    "coherent_output",
    "dilation_unitary",
    "mode_probabilities",
    "noon_state",
    "overlap",
    "uhlmann_fidelity",
]
