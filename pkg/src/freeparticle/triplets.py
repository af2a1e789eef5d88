"""The seven spin-zero representation classes.

A transformer triplet bundles the ten generators (time translation P0, space
translations P, rotations J, boosts K) with a space-inversion operator S and
a time-reversal operator T on a shared momentum lattice.  Single-block
classes carry a definite energy sign; two-block (PM) classes stack a
positive-energy and a negative-energy copy and collect the operators that
exchange or couple the copies.

Class tags serialize to stable strings: "massive_plus", "massive_pm_1",
"massless_pm:m=2", "massless_pm:m=0:pair=3".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import MomentumGrid, State, derivative
from .operators import (
    Linearity,
    ParticleOperator,
    ResidualStats,
    block_scale_op,
    block_swap_op,
    compose,
    conjugation_op,
    multiplication_op,
    parity_op,
    sample_states,
)

__all__ = [
    "TripletClass",
    "TransformerTriplet",
    "make_triplet",
    "parse_class_tag",
    "coupling_symbols",
    "helicity_expectation",
    "mass_shell_residual",
    "spectrum_class",
    "POSITIVE",
    "NEGATIVE",
    "BOTH",
]

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"
BOTH = "BOTH"


class TripletClass(enum.Enum):
    MASSIVE_PLUS = "massive_plus"
    MASSIVE_MINUS = "massive_minus"
    MASSIVE_PM_1 = "massive_pm_1"
    MASSIVE_PM_2 = "massive_pm_2"
    MASSLESS_PLUS = "massless_plus"
    MASSLESS_MINUS = "massless_minus"
    MASSLESS_PM = "massless_pm"

    @property
    def is_massive(self) -> bool:
        return self in (
            TripletClass.MASSIVE_PLUS,
            TripletClass.MASSIVE_MINUS,
            TripletClass.MASSIVE_PM_1,
            TripletClass.MASSIVE_PM_2,
        )

    @property
    def blocks(self) -> int:
        return 2 if self in (
            TripletClass.MASSIVE_PM_1,
            TripletClass.MASSIVE_PM_2,
            TripletClass.MASSLESS_PM,
        ) else 1

    @property
    def energy_signs(self) -> tuple[int, ...]:
        if self in (TripletClass.MASSIVE_PLUS, TripletClass.MASSLESS_PLUS):
            return (1,)
        if self in (TripletClass.MASSIVE_MINUS, TripletClass.MASSLESS_MINUS):
            return (-1,)
        return (1, -1)


def parse_class_tag(tag: str) -> tuple[TripletClass, int, int]:
    """Parse "massless_pm:m=2:pair=1"-style tags into (class, m, pair)."""
    parts = tag.split(":")
    try:
        cls = TripletClass(parts[0])
    except ValueError:
        known = ", ".join(c.value for c in TripletClass)
        raise ValueError(f"unknown triplet class {parts[0]!r}; expected one of: {known}") from None
    m, pair = 0, 1
    for part in parts[1:]:
        key, _, value = part.partition("=")
        if key == "m":
            m = int(value)
        elif key == "pair":
            pair = int(value)
        else:
            raise ValueError(f"unknown tag field {part!r} in {tag!r}")
    return cls, m, pair


@dataclass
class TransformerTriplet:
    """Generators plus inversion operators of one representation class."""

    family: TripletClass
    grid: MomentumGrid
    mu: float
    m: int
    st_pair: int | None
    P0: ParticleOperator
    P: tuple[ParticleOperator, ParticleOperator, ParticleOperator]
    J: tuple[ParticleOperator, ParticleOperator, ParticleOperator]
    K: tuple[ParticleOperator, ParticleOperator, ParticleOperator]
    space_inversion: ParticleOperator | None
    time_reversal: ParticleOperator | None
    energy_signs: tuple[int, ...]

    @property
    def tag(self) -> str:
        if self.family is not TripletClass.MASSLESS_PM:
            return self.family.value
        tag = f"{self.family.value}:m={self.m}"
        if self.m == 0:
            tag += f":pair={self.st_pair}"
        return tag

    @property
    def has_inversions(self) -> bool:
        return self.space_inversion is not None and self.time_reversal is not None

    @property
    def S(self) -> ParticleOperator:
        if self.space_inversion is None:
            raise ValueError(
                f"space inversion is unavailable for class {self.tag!r}: "
                "no S/T pair exists in this construction for a two-block "
                "massless triplet with nonzero coupling integer"
            )
        return self.space_inversion

    @property
    def T(self) -> ParticleOperator:
        if self.time_reversal is None:
            raise ValueError(
                f"time reversal is unavailable for class {self.tag!r}: "
                "no S/T pair exists in this construction for a two-block "
                "massless triplet with nonzero coupling integer"
            )
        return self.time_reversal

    def generators(self) -> dict[str, ParticleOperator]:
        out = {"P0": self.P0}
        for axis in range(3):
            out[f"P{axis + 1}"] = self.P[axis]
        for axis in range(3):
            out[f"J{axis + 1}"] = self.J[axis]
        for axis in range(3):
            out[f"K{axis + 1}"] = self.K[axis]
        return out

    @property
    def predicted_spectrum(self) -> str:
        signs = set(self.energy_signs)
        if signs == {1}:
            return POSITIVE
        if signs == {-1}:
            return NEGATIVE
        return BOTH


def coupling_symbols(grid: MomentumGrid, m: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Multiplication symbols coupling rotations and boosts to the axial
    direction for the two-block massless class with integer m.

    Finite at every node because no lattice node has p1 = p2 = 0.
    """
    p = grid.momenta
    p0 = grid.energies
    rho2 = p[0] ** 2 + p[1] ** 2
    if float(rho2.min()) <= 0.0:
        raise ValueError("lattice node on the third axis; coupling symbols would be singular")
    half_m = 0.5 * m
    zero = np.zeros_like(p0)
    j_sym = [half_m * p[0] * p0 / rho2, half_m * p[1] * p0 / rho2, zero]
    k_sym = [-half_m * p[1] * p[2] / rho2, half_m * p[2] * p[0] / rho2, zero]
    return j_sym, k_sym


def _orbital_pair(axis: int) -> tuple[int, int]:
    # rotation about `axis` differentiates along `d1` and `d2`
    return (axis + 2) % 3, (axis + 1) % 3


def _rotation_op(grid: MomentumGrid, axis: int, coupling: np.ndarray | None = None,
                 coupling_signs: np.ndarray | None = None) -> ParticleOperator:
    p = grid.momenta
    d1, d2 = _orbital_pair(axis)

    def apply(psi: State) -> State:
        amps = -1j * (p[d2] * derivative(psi, d1).amplitudes - p[d1] * derivative(psi, d2).amplitudes)
        if coupling is not None:
            amps = amps + (coupling_signs[:, None, None] * coupling) * psi.amplitudes
        return State(amps, grid)

    return ParticleOperator(grid, apply, Linearity.LINEAR, f"J{axis + 1}")


def _boost_op(grid: MomentumGrid, axis: int, block_signs: np.ndarray,
              coupling: np.ndarray | None = None) -> ParticleOperator:
    p0 = grid.energies
    signs = block_signs[:, None, None]

    def apply(psi: State) -> State:
        amps = signs * (1j * p0 * derivative(psi, axis).amplitudes)
        if coupling is not None:
            amps = amps + coupling * psi.amplitudes
        return State(amps, grid)

    return ParticleOperator(grid, apply, Linearity.LINEAR, f"K{axis + 1}")


def _inversion_table(cls: TripletClass, grid: MomentumGrid, st_pair: int):
    conj = conjugation_op(grid)
    par = parity_op(grid)
    conj_par = compose(conj, par, label="conj∘parity")
    if cls.blocks == 1:
        return par, conj_par
    swap = block_swap_op(grid)
    if cls in (TripletClass.MASSIVE_PM_1, TripletClass.MASSIVE_PM_2):
        s_op = compose(swap, conj, label="swap∘conj")
        t_op = conj_par if cls is TripletClass.MASSIVE_PM_1 else swap
        return s_op, t_op
    # massless two-block, m = 0: three admissible pairs
    if st_pair == 1:
        return compose(conj, swap, label="conj∘swap"), swap
    if st_pair == 2:
        return compose(par, block_scale_op(grid, (1.0, -1.0), label="diag(1,-1)")), swap
    if st_pair == 3:
        s_op = compose(_block_offdiag_op(grid, 1.0, -1.0), conj, label="offdiag(1,-1)∘conj")
        return s_op, compose(conj_par, swap, label="conj∘parity∘swap")
    raise ValueError(f"pair index must be 1, 2 or 3, got {st_pair}")


def _block_offdiag_op(grid: MomentumGrid, upper: complex, lower: complex) -> ParticleOperator:
    if grid.blocks != 2:
        raise ValueError("off-diagonal block map needs a two-block grid")

    def apply(psi: State) -> State:
        out = np.empty_like(psi.amplitudes)
        out[0] = upper * psi.amplitudes[1]
        out[1] = lower * psi.amplitudes[0]
        return State(out, grid)

    def inverse(psi: State) -> State:
        out = np.empty_like(psi.amplitudes)
        out[0] = psi.amplitudes[1] / lower
        out[1] = psi.amplitudes[0] / upper
        return State(out, grid)

    return ParticleOperator(
        grid, apply, Linearity.LINEAR, f"offdiag({upper},{lower})",
        block_structure=f"offdiag({upper},{lower})", inverse_apply=inverse,
    )


def make_triplet(
    cls: TripletClass | str,
    grid: MomentumGrid,
    m: int = 0,
    st_pair: int = 1,
) -> TransformerTriplet:
    """Build one representation class on a concrete lattice.

    m (an integer) selects the coupling strength of the two-block massless
    family; st_pair in {1,2,3} selects which of its three admissible S/T
    pairs to attach when m = 0.  Both are rejected for other classes.
    """
    if isinstance(cls, str):
        cls, tag_m, tag_pair = parse_class_tag(cls)
        if tag_m:
            m = tag_m
        if tag_pair != 1:
            st_pair = tag_pair
    if cls is not TripletClass.MASSLESS_PM:
        if m != 0:
            raise ValueError(f"coupling integer m applies only to {TripletClass.MASSLESS_PM.value}")
        if st_pair != 1:
            raise ValueError("pair index applies only to the two-block massless class")
    if not isinstance(m, (int, np.integer)):
        raise ValueError(f"coupling integer m must be an integer, got {m!r}")
    if cls.is_massive and not grid.mass > 0:
        raise ValueError(f"{cls.value} needs a positive-mass grid, got mass={grid.mass}")
    if not cls.is_massive and grid.mass != 0:
        raise ValueError(f"{cls.value} needs a zero-mass grid, got mass={grid.mass}")
    if grid.blocks != cls.blocks:
        raise ValueError(f"{cls.value} needs blocks={cls.blocks}, grid has {grid.blocks}")

    p = grid.momenta
    p0 = grid.energies
    signs = np.asarray(cls.energy_signs, dtype=float)

    P0 = multiplication_op(grid, signs[:, None, None] * p0, label="P0")
    P = tuple(multiplication_op(grid, p[axis], label=f"P{axis + 1}") for axis in range(3))

    if cls is TripletClass.MASSLESS_PM and m != 0:
        j_sym, k_sym = coupling_symbols(grid, m)
        coupling_signs = np.asarray([1.0, -1.0])
        J = tuple(
            _rotation_op(grid, axis, coupling=j_sym[axis], coupling_signs=coupling_signs)
            for axis in range(3)
        )
        K = tuple(_boost_op(grid, axis, signs, coupling=k_sym[axis]) for axis in range(3))
        s_op = t_op = None
    else:
        J = tuple(_rotation_op(grid, axis) for axis in range(3))
        K = tuple(_boost_op(grid, axis, signs) for axis in range(3))
        s_op, t_op = _inversion_table(cls, grid, st_pair)

    return TransformerTriplet(
        family=cls,
        grid=grid,
        mu=grid.mass,
        m=m if cls is TripletClass.MASSLESS_PM else 0,
        st_pair=st_pair if (cls is TripletClass.MASSLESS_PM and m == 0) else None,
        P0=P0,
        P=P,
        J=J,
        K=K,
        space_inversion=s_op,
        time_reversal=t_op,
        energy_signs=tuple(int(s) for s in cls.energy_signs),
    )


def helicity_expectation(triplet: TransformerTriplet, psi: State) -> list[float]:
    """Per-block expectation of the momentum-aligned angular momentum
    J.P / P0 (with the positive energy symbol in the denominator).

    A zero-mass diagnostic: massive triplets are rejected.
    """
    if triplet.mu != 0:
        raise ValueError("helicity expectation is defined here only for zero-mass triplets")
    grid = triplet.grid
    p = grid.momenta
    p0 = grid.energies
    out = []
    for b in range(grid.blocks):
        amps = np.zeros_like(psi.amplitudes)
        amps[b] = psi.amplitudes[b]
        part = State(amps, grid)
        w = part.norm() ** 2
        if w <= 0:
            raise ValueError(f"state has no amplitude on block {b}")
        acc = None
        for axis in range(3):
            term = triplet.J[axis](State(part.amplitudes * p[axis] / p0, grid))
            acc = term if acc is None else acc + term
        out.append(float(np.real(part.inner(acc)) / w))
    return out


def mass_shell_residual(triplet: TransformerTriplet, samples=None) -> ResidualStats:
    """|| (P0^2 - sum_j Pj^2 - mu^2) psi ||; exact, all factors are
    multiplications."""
    if samples is None:
        samples = sample_states(triplet.grid, kind="bump")
    values, names = [], []
    mu2 = triplet.mu**2
    for s in samples:
        acc = triplet.P0(triplet.P0(s))
        for axis in range(3):
            acc = acc - triplet.P[axis](triplet.P[axis](s))
        acc = acc - mu2 * s
        values.append(acc.norm())
        names.append(s.label)
    return ResidualStats.from_values(values, names)


def spectrum_class(triplet: TransformerTriplet, samples=None, epsilon: float = 1e-10) -> str:
    """Energy-sign classification from block-supported Rayleigh quotients.

    POSITIVE when every probe satisfies <P0> >= mu(1-eps), NEGATIVE when
    every probe is <= -mu(1-eps), BOTH when the sign depends on the block.
    eps only guards floating-point summation; P0 is a multiplication.
    """
    grid = triplet.grid
    if samples is None:
        samples = sample_states(grid, kind="bump")
    mu = triplet.mu
    block_signs = []
    for b in range(grid.blocks):
        votes = []
        for s in samples:
            amps = np.zeros_like(s.amplitudes)
            amps[b] = s.amplitudes[b]
            part = State(amps, grid)
            w = part.norm() ** 2
            if w <= 0:
                continue
            e = float(np.real(part.inner(triplet.P0(part))) / w)
            if e >= mu * (1 - epsilon) - epsilon:
                votes.append(1)
            elif e <= -mu * (1 - epsilon) + epsilon:
                votes.append(-1)
            else:
                raise ValueError(
                    f"probe expectation {e} on block {b} sits inside the spectral gap (-{mu}, {mu})"
                )
        if not votes:
            raise ValueError(f"no probe has amplitude on block {b}")
        if len(set(votes)) != 1:
            raise ValueError(f"inconsistent energy signs {votes} on block {b}")
        block_signs.append(votes[0])
    if all(v == 1 for v in block_signs):
        return POSITIVE
    if all(v == -1 for v in block_signs):
        return NEGATIVE
    return BOTH
