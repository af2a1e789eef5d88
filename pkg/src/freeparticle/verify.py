"""Named verification suites over a resolution ladder.

Each suite emits CheckResult rows with one of three kinds:

    exact       lattice identities (multiplications, index maps, closed
                cancellations); pass iff every residual <= 1e-10.
    convergent  stencil-limited identities; pass iff the measured order
                between the coarsest and finest lattice lies within +-0.5 of
                the stencil order (or the residuals already sit at the
                1e-11 floor).
    recorded    measured facts with no pass condition of their own (sign
                conventions, calibration constants); always pass, the value
                travels in `detail`.

Residuals for a relation are pooled over the sample catalog with a geometric
mean, matching the multiplicative structure of h^4 error constants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import MomentumGrid, State, build_grid, derivative, gaussian_packet
from .operators import (
    ParticleOperator,
    block_swap_op,
    conjugation_op,
    parity_op,
    probe_linearity,
    sample_states,
)
from .position import (
    _EPS_TRIPLES,
    kinetic_energy_symbol,
    newton_wigner,
)
from .triplets import (
    BOTH,
    TransformerTriplet,
    TripletClass,
    make_triplet,
    mass_shell_residual,
    spectrum_class,
)

__all__ = [
    "CheckResult",
    "VerificationReport",
    "Trajectory",
    "TOL_EXACT",
    "RESIDUAL_FLOOR",
    "STENCIL_ORDER",
    "ORDER_WINDOW",
    "order_estimate",
    "pooled_residual",
    "exactness_suite",
    "lie_algebra_suite",
    "covariance_suite",
    "inversion_suite",
    "group_action_suite",
    "ehrenfest_evolution",
    "ehrenfest_suite",
    "run_suites",
    "SUITE_NAMES",
]

TOL_EXACT = 1e-10
RESIDUAL_FLOOR = 1e-11
STENCIL_ORDER = 4
ORDER_WINDOW = 0.5


@dataclass
class CheckResult:
    name: str
    claim: str
    kind: str  # exact | convergent | recorded
    residuals: list[tuple[int, float]]
    order_estimate: float | None
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "claim": self.claim,
            "kind": self.kind,
            "residuals": [{"n": int(n), "value": float(v)} for n, v in self.residuals],
            "order_estimate": self.order_estimate,
            "passed": bool(self.passed),
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    triplet_class: str
    config: dict
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def section(self, prefix: str) -> list[CheckResult]:
        return [c for c in self.checks if c.name.startswith(prefix)]

    def to_dict(self) -> dict:
        return {
            "triplet_class": self.triplet_class,
            "config": self.config,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def pooled_residual(values) -> float:
    """Geometric mean; the right average for residuals that share an h^order
    law with state-dependent constants."""
    vals = np.maximum(np.asarray(values, dtype=float), 1e-300)
    return float(np.exp(np.mean(np.log(vals))))


def order_estimate(ns, residuals) -> float | None:
    """log-ratio convergence order between the coarsest and finest lattice."""
    if len(ns) < 2:
        return None
    e0, e1 = residuals[0], residuals[-1]
    if e0 <= 0 or e1 <= 0:
        return None
    return float(math.log(e0 / e1) / math.log(ns[-1] / ns[0]))


def _judge_exact(residuals, tol=TOL_EXACT) -> bool:
    return max(v for _, v in residuals) <= tol


def _convergent_check(name: str, claim: str, per_n: list[tuple[int, float]]) -> CheckResult:
    ns = [n for n, _ in per_n]
    es = [v for _, v in per_n]
    if max(es) <= RESIDUAL_FLOOR:
        return CheckResult(name, claim, "convergent", per_n, None, True,
                           "at the exactness floor at every resolution")
    order = order_estimate(ns, es)
    ok = order is not None and order >= STENCIL_ORDER - ORDER_WINDOW
    # the upper bound of the window needs a ladder wide enough to average out
    # the coarse-rung transient; short ladders keep only the lower bound
    if ok and max(ns) >= 2 * min(ns):
        ok = order <= STENCIL_ORDER + ORDER_WINDOW
    return CheckResult(name, claim, "convergent", per_n, order, ok)


def _decaying_check(name: str, claim: str, per_n: list[tuple[int, float]]) -> CheckResult:
    """One-sided variant for quantities that must vanish at least at stencil
    order but are allowed to do so faster (error cancellations)."""
    ns = [n for n, _ in per_n]
    es = [v for _, v in per_n]
    if max(es) <= RESIDUAL_FLOOR:
        return CheckResult(name, claim, "convergent", per_n, None, True,
                           "at the exactness floor at every resolution")
    order = order_estimate(ns, es)
    ok = order is not None and order >= STENCIL_ORDER - ORDER_WINDOW
    return CheckResult(name, claim, "convergent", per_n, order, ok)


def _exact_check(name: str, claim: str, per_n, tol=TOL_EXACT, detail="") -> CheckResult:
    return CheckResult(name, claim, "exact", per_n, None, _judge_exact(per_n, tol), detail)


# ---------------------------------------------------------------------------
# relation tables


def _commutator_pool(A: ParticleOperator, B: ParticleOperator, target, samples) -> float:
    vals = []
    for s in samples:
        d = A(B(s)) - B(A(s))
        if target is not None:
            d = d - target(s)
        vals.append(d.norm())
    return pooled_residual(vals)


def _lie_relations(triplet: TransformerTriplet):
    """(name, claim, exact?, A, B, target) for the ten-generator algebra."""
    J, K, P, P0 = triplet.J, triplet.K, triplet.P, triplet.P0
    rel = []
    for a in range(3):
        for b in range(3):
            if a < b:
                c, sg = _EPS_TRIPLES[(a, b)]
                rel.append((f"[J{a+1},J{b+1}]", f"commutator of J{a+1} and J{b+1} equals {sg:+.0f}i J{c+1}",
                            False, J[a], J[b], _scaled(J[c], 1j * sg)))
                rel.append((f"[K{a+1},K{b+1}]", f"commutator of K{a+1} and K{b+1} equals {-sg:+.0f}i J{c+1}",
                            False, K[a], K[b], _scaled(J[c], -1j * sg)))
                rel.append((f"[P{a+1},P{b+1}]", "space translations commute",
                            True, P[a], P[b], None))
            if a != b:
                c, sg = _EPS_TRIPLES[(a, b)]
                rel.append((f"[J{a+1},K{b+1}]", f"commutator of J{a+1} and K{b+1} equals {sg:+.0f}i K{c+1}",
                            False, J[a], K[b], _scaled(K[c], 1j * sg)))
                rel.append((f"[J{a+1},P{b+1}]", f"commutator of J{a+1} and P{b+1} equals {sg:+.0f}i P{c+1}",
                            False, J[a], P[b], _scaled(P[c], 1j * sg)))
                rel.append((f"[K{a+1},P{b+1}]", "boosts commute with transverse translations",
                            True, K[a], P[b], None))
        rel.append((f"[J{a+1},K{a+1}]", "aligned rotation and boost commute",
                    False, J[a], K[a], None))
        rel.append((f"[J{a+1},P{a+1}]", "aligned rotation and translation commute",
                    True, J[a], P[a], None))
        rel.append((f"[P{a+1},P0]", "space and time translations commute",
                    True, P[a], P0, None))
        rel.append((f"[K{a+1},P{a+1}]", "aligned boost and translation close on i P0",
                    False, K[a], P[a], _scaled(P0, 1j)))
        rel.append((f"[K{a+1},P0]", f"boost and time translation close on i P{a+1}",
                    False, K[a], P0, _scaled(P[a], 1j)))
        rel.append((f"[J{a+1},P0]", "rotations commute with time translation",
                    False, J[a], P0, None))
    return rel


def _scaled(op: ParticleOperator, factor: complex) -> ParticleOperator:
    return ParticleOperator(op.grid, lambda psi: factor * op(psi), op.linearity, f"{factor}*{op.label}")


# ---------------------------------------------------------------------------
# suites (each takes the ladder of (triplet, samples))


def _ladder(class_tag, ns, p_max, mass, m=0, st_pair=1, seed=1729, kind="wave"):
    out = []
    for n in ns:
        cls, tag_m, tag_pair = _resolve_tag(class_tag)
        m_eff = tag_m if tag_m else m
        pair_eff = tag_pair if tag_pair != 1 else st_pair
        grid = build_grid(n, p_max, mass, blocks=cls.blocks)
        triplet = make_triplet(cls, grid, m=m_eff, st_pair=pair_eff)
        samples = sample_states(grid, kind=kind, seed=seed, singular=triplet.m != 0)
        out.append((triplet, samples))
    return out


def _resolve_tag(class_tag):
    from .triplets import parse_class_tag

    if isinstance(class_tag, TripletClass):
        return class_tag, 0, 1
    return parse_class_tag(class_tag)


def lie_algebra_suite(ladder) -> list[CheckResult]:
    """All ten-generator commutation relations across the ladder."""
    checks = []
    relations = _lie_relations(ladder[0][0])
    per_name: dict[str, list[tuple[int, float]]] = {r[0]: [] for r in relations}
    claims = {r[0]: (r[1], r[2]) for r in relations}
    for triplet, samples in ladder:
        for name, _claim, _exact, A, B, target in _lie_relations(triplet):
            per_name[name].append((triplet.grid.n_per_axis, _commutator_pool(A, B, target, samples)))
    for name, per_n in per_name.items():
        claim, is_exact = claims[name]
        prefixed = f"lie:{name}"
        if is_exact:
            checks.append(_exact_check(prefixed, claim, per_n))
        else:
            checks.append(_convergent_check(prefixed, claim, per_n))
    return checks


def covariance_suite(ladder, bump_ladder) -> list[CheckResult]:
    """Position covariance: component commutativity, momentum conjugacy,
    rotation covariance, inversion compatibility, the velocity identity,
    adjoint symmetry of the position components, and the kinetic-energy
    symbol identity."""
    checks = []
    component_rows: dict[str, list[tuple[int, float]]] = {}
    inv_rows: dict[str, list[tuple[int, float]]] = {}
    vel_rows: list[tuple[int, float]] = []
    adj_rows: dict[str, list[tuple[int, float]]] = {}
    bare_adj: list[tuple[int, float]] = []
    ekin_rows: list[tuple[int, float]] = []

    for (triplet, samples), (_t2, bumps) in zip(ladder, bump_ladder):
        grid = triplet.grid
        n = grid.n_per_axis
        Q = newton_wigner(grid)
        p = grid.momenta
        p0 = grid.energies
        signs = np.asarray(triplet.energy_signs, dtype=float)[:, None, None]

        per_pair: dict[str, list[float]] = {}
        for s in samples:
            for a in range(3):
                for b in range(3):
                    if a < b:
                        d = Q[a](Q[b](s)) - Q[b](Q[a](s))
                        per_pair.setdefault(f"position_commutativity[{a+1}{b+1}]", []).append(d.norm())
                    d = Q[a](triplet.P[b](s)) - triplet.P[b](Q[a](s))
                    if a == b:
                        d = d - 1j * s
                        per_pair.setdefault(f"momentum_conjugacy[{a+1}{b+1}]", []).append(d.norm())
                    else:
                        per_pair.setdefault(f"momentum_conjugacy_offdiag[{a+1}{b+1}]", []).append(d.norm())
                    d = triplet.J[a](Q[b](s)) - Q[b](triplet.J[a](s))
                    if a != b:
                        c, sg = _EPS_TRIPLES[(a, b)]
                        d = d - 1j * sg * Q[c](s)
                    per_pair.setdefault(f"rotation_covariance[{a+1}{b+1}]", []).append(d.norm())
        for key, vals in per_pair.items():
            component_rows.setdefault(key, []).append((n, pooled_residual(vals)))

        if triplet.has_inversions:
            t_op, s_op = triplet.time_reversal, triplet.space_inversion
            tv, sv = [], []
            for s in samples:
                for a in range(3):
                    tv.append((t_op(Q[a](s)) - Q[a](t_op(s))).norm())
                    sv.append((s_op(Q[a](s)) + Q[a](s_op(s))).norm())
            inv_rows.setdefault("time_reversal_compat", []).append((n, max(tv)))
            inv_rows.setdefault("space_inversion_anticompat", []).append((n, max(sv)))

        vel_vals = []
        for s in samples:
            for axis in range(3):
                flow = 1j * (triplet.P0(Q[axis](s)) - Q[axis](triplet.P0(s)))
                expected = State(signs * (p[axis] / p0) * s.amplitudes, grid)
                vel_vals.append((flow - expected).norm())
        vel_rows.append((n, pooled_residual(vel_vals)))

        for a in range(3):
            gaps = []
            images = [Q[a](b) for b in bumps]
            for (i, phi), (j, psi) in itertools.combinations(enumerate(bumps), 2):
                gaps.append(abs(phi.inner(images[j]) - images[i].inner(psi)))
            adj_rows.setdefault(f"position_adjoint_symmetry[{a+1}]", []).append(
                (n, pooled_residual(gaps)))

        gaps = []
        bare_images = [State(1j * derivative(b, 0).amplitudes, grid) for b in bumps]
        for (i, phi), (j, psi) in itertools.combinations(enumerate(bumps), 2):
            gaps.append(abs(phi.inner(bare_images[j]) - bare_images[i].inner(psi)))
        bare_adj.append((n, max(gaps)))

        ekin_rows.append((n, float(np.max(np.abs(kinetic_energy_symbol(grid) - p0)))))

    for key, per_n in sorted(component_rows.items()):
        name = f"covariance:{key}"
        if key.startswith("momentum_conjugacy_offdiag"):
            checks.append(_exact_check(name, "position and transverse momentum commute", per_n))
        elif key.startswith("position_commutativity"):
            checks.append(_convergent_check(name, "position components commute in the limit", per_n))
        elif key.startswith("momentum_conjugacy"):
            checks.append(_convergent_check(name, "aligned position and momentum close on i", per_n))
        else:
            checks.append(_convergent_check(name, "position rotates as a vector under J", per_n))
    for key, per_n in sorted(inv_rows.items()):
        claim = ("time reversal commutes with position" if key.startswith("time_reversal")
                 else "space inversion flips position")
        checks.append(_exact_check(f"covariance:{key}", claim, per_n))
    checks.append(_convergent_check("covariance:velocity_identity",
                                    "i[P0, Q] equals the per-block velocity symbol p/p0", vel_rows))
    for key, per_n in sorted(adj_rows.items()):
        checks.append(_convergent_check(f"covariance:{key}",
                                        "position components are symmetric for the invariant measure", per_n))
    checks.append(CheckResult(
        "covariance:uncorrected_derivative_not_symmetric",
        "the bare i d/dp fails adjoint symmetry at O(1) where the corrected form decays",
        "recorded", bare_adj, order_estimate([n for n, _ in bare_adj], [v for _, v in bare_adj]),
        True, "gap stays order-one by design; compare position_adjoint_symmetry rows"))
    checks.append(_exact_check("covariance:kinetic_energy_symbol",
                               "mu(1-v^2)^(-1/2) equals the energy symbol pointwise", ekin_rows))
    return checks


def inversion_suite(ladder) -> list[CheckResult]:
    """Conjugation behavior of the generators under S and T, norm
    preservation, involution signs, and the energy-sign trichotomy."""
    checks = []
    triplet0 = ladder[0][0]
    if not triplet0.has_inversions:
        n0 = triplet0.grid.n_per_axis
        checks.append(CheckResult(
            "inversion:unavailable",
            "no space-inversion or time-reversal companion exists in this construction",
            "recorded", [(n0, 0.0)], None, True,
            f"class {triplet0.tag} is generator-only"))
        checks.extend(_spectrum_checks(ladder))
        return checks

    conj_rows: dict[str, list[tuple[int, float]]] = {}
    sign_detail: dict[str, str] = {}
    norm_rows: dict[str, list[tuple[int, float]]] = {}
    square_rows: dict[str, list[tuple[int, float]]] = {}
    square_detail: dict[str, str] = {}
    lin_rows: dict[str, list[tuple[int, float]]] = {}

    for triplet, samples in ladder:
        n = triplet.grid.n_per_axis
        gens = triplet.generators()
        for inv_name, inv in (("S", triplet.space_inversion), ("T", triplet.time_reversal)):
            for gname, G in gens.items():
                best_sign, best_val = None, None
                for sign in (1.0, -1.0):
                    vals = []
                    for s in samples:
                        lhs = inv(G(inv.inverse(s)))
                        vals.append((lhs - sign * G(s)).norm())
                    v = max(vals)
                    if best_val is None or v < best_val:
                        best_sign, best_val = sign, v
                key = f"{inv_name}_conjugation[{gname}]"
                conj_rows.setdefault(key, []).append((n, best_val))
                sign_detail[key] = f"measured sign {best_sign:+.0f}"
            nv = max(abs(inv(s).norm() - 1.0) for s in samples)
            norm_rows.setdefault(f"{inv_name}_norm_preservation", []).append((n, nv))
            best_sign, best_val = None, None
            for sign in (1.0, -1.0):
                vals = [(inv(inv(s)) - sign * s).norm() for s in samples]
                v = max(vals)
                if best_val is None or v < best_val:
                    best_sign, best_val = sign, v
            square_rows.setdefault(f"{inv_name}_square", []).append((n, best_val))
            square_detail[f"{inv_name}_square"] = f"{inv_name}^2 = {best_sign:+.0f} identity"
            lv = probe_linearity(inv, samples)
            lin_rows.setdefault(f"{inv_name}_linearity", []).append((n, lv))

    for key, per_n in sorted(conj_rows.items()):
        checks.append(_exact_check(f"inversion:{key}",
                                   "generator conjugates to itself up to a sign", per_n,
                                   detail=sign_detail[key]))
    for key, per_n in sorted(norm_rows.items()):
        checks.append(_exact_check(f"inversion:{key}", "inversion preserves the norm", per_n))
    for key, per_n in sorted(square_rows.items()):
        checks.append(_exact_check(f"inversion:{key}", "inversion squares to plus or minus identity",
                                   per_n, detail=square_detail[key]))
    for key, per_n in sorted(lin_rows.items()):
        checks.append(_exact_check(f"inversion:{key}",
                                   "declared (conjugate-)linearity holds on random combinations", per_n))
    checks.extend(_spectrum_checks(ladder))
    return checks


def _spectrum_checks(ladder) -> list[CheckResult]:
    triplet, samples = ladder[-1]
    n = triplet.grid.n_per_axis
    measured = spectrum_class(triplet, samples)
    predicted = triplet.predicted_spectrum
    rows = [CheckResult(
        "inversion:spectrum_class",
        "block-supported energy expectations classify the P0 spectrum",
        "exact", [(n, 0.0 if measured == predicted else 1.0)], None,
        measured == predicted, f"measured {measured}, class predicts {predicted}")]
    if triplet.has_inversions:
        t_unitary = not triplet.time_reversal.is_conjugate_linear
        s_anti = triplet.space_inversion.is_conjugate_linear
        both = measured == BOTH
        ok = both == (t_unitary or s_anti)
        rows.append(CheckResult(
            "inversion:trichotomy_biconditional",
            "both energy signs occur exactly when T is unitary or S is anti-unitary",
            "exact", [(n, 0.0 if ok else 1.0)], None, ok,
            f"spectrum {measured}; T unitary: {t_unitary}; S anti-unitary: {s_anti}"))
    return rows


def exactness_suite(ladder) -> list[CheckResult]:
    """The identities that hold to rounding on every lattice."""
    checks = []
    shell_rows, parity_rows, conj_rows = [], [], []
    for triplet, samples in ladder:
        n = triplet.grid.n_per_axis
        shell_rows.append((n, mass_shell_residual(triplet, samples).max_relative_residual))
        par = parity_op(triplet.grid)
        con = conjugation_op(triplet.grid)
        parity_rows.append((n, max((par(par(s)) - s).norm() for s in samples)))
        conj_rows.append((n, max((con(con(s)) - s).norm() for s in samples)))
    checks.append(_exact_check("exact:mass_shell",
                               "P0^2 - P^2 equals the squared mass on every state", shell_rows))
    checks.append(_exact_check("exact:parity_involution", "index reversal squares to identity", parity_rows))
    checks.append(_exact_check("exact:conjugation_involution", "conjugation squares to identity", conj_rows))
    triplet0 = ladder[0][0]
    if triplet0.has_inversions:
        st_rows: dict[str, list[tuple[int, float]]] = {}
        for triplet, samples in ladder:
            n = triplet.grid.n_per_axis
            for name, inv in (("S", triplet.space_inversion), ("T", triplet.time_reversal)):
                st_rows.setdefault(f"{name}_norm", []).append(
                    (n, max(abs(inv(s).norm() - 1.0) for s in samples)))
                st_rows.setdefault(f"{name}_roundtrip", []).append(
                    (n, max((inv.inverse(inv(s)) - s).norm() for s in samples)))
        for key, per_n in sorted(st_rows.items()):
            claim = ("inversion preserves the norm" if key.endswith("_norm")
                     else "inversion composed with its inverse is the identity")
            checks.append(_exact_check(f"exact:{key}", claim, per_n))
    if ladder[0][0].grid.blocks == 2:
        swap_rows = []
        for triplet, samples in ladder:
            W = block_swap_op(triplet.grid)
            n = triplet.grid.n_per_axis
            swap_rows.append((n, max(
                (W(triplet.P0(s)) + triplet.P0(W(s))).norm() for s in samples)))
        checks.append(_exact_check("exact:block_swap_anticommutes_P0",
                                   "the block swap anticommutes with the energy operator", swap_rows))
    return checks


# ---------------------------------------------------------------------------
# group actions


def _rk4_flow(G: ParticleOperator, psi: State, parameter: float, steps: int) -> State:
    """Integrate d psi / d tau = i G psi with classic fixed-step RK4."""
    h = parameter / steps
    cur = psi
    for _ in range(steps):
        k1 = 1j * G(cur)
        k2 = 1j * G(cur + (h / 2) * k1)
        k3 = 1j * G(cur + (h / 2) * k2)
        k4 = 1j * G(cur + h * k3)
        cur = cur + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return cur


def _interpolate_block(values: np.ndarray, coords: np.ndarray, grid: MomentumGrid) -> np.ndarray:
    """Trilinear sample of a lattice field at physical momentum coords
    (3, n^3); zero outside the box."""
    n = grid.n_per_axis
    h = grid.spacing
    idx = (coords + grid.p_max) / h - 0.5
    field = values.reshape(n, n, n)
    re = ndimage.map_coordinates(field.real, idx, order=1, mode="constant", cval=0.0)
    im = ndimage.map_coordinates(field.imag, idx, order=1, mode="constant", cval=0.0)
    return re + 1j * im


def _cfl_steps(parameter: float, max_speed: float, grid: MomentumGrid, floor: int = 32) -> int:
    """Step count for the RK4 flows.  The factor 64 keeps the per-step
    advection number small enough that the accumulated norm drift of the
    non-contractive stages stays below 1e-7 on desk-scale grids."""
    if parameter == 0:
        return 1
    return max(floor, int(np.ceil(64.0 * abs(parameter) * max(max_speed, 1e-12) / grid.spacing)))


def group_action_suite(ladder) -> list[CheckResult]:
    """One-parameter flows integrated from the generators versus the known
    point transformations, across the resolution ladder.

    Boost generators are exactly self-adjoint under the invariant measure (the
    energy weight cancels), so their flows must conserve the norm to the
    integrator floor.  Rotation generators are self-adjoint only up to the
    stencil truncation of the rotation-invariant weight, so their norm drift
    is judged as a convergent quantity instead."""
    checks = []
    trans_rows, time_rows = [], []
    rot_pull, rot_norm, boost_norm, boost_pull = [], [], [], []
    step_notes = []
    for triplet, _samples in ladder:
        grid = triplet.grid
        n = grid.n_per_axis
        # width balances interpolation resolution against face amplitude:
        # the boost-flow norm check is sensitive to mass near the box edge
        packet = gaussian_packet(grid, (0.6, 0.4, 0.5), 0.2 * grid.p_max, label="flow-probe")
        p = grid.momenta
        p0 = grid.energies
        signs = np.asarray(triplet.energy_signs, dtype=float)[:, None, None]

        a = 0.3
        steps = max(32, int(np.ceil(abs(a) * grid.p_max / 0.02)))
        flowed = _rk4_flow(triplet.P[0], packet, a, steps=steps)
        exact = State(np.exp(1j * a * p[0]) * packet.amplitudes, grid)
        trans_rows.append((n, (flowed - exact).norm()))

        t = 0.4
        steps = max(32, int(np.ceil(abs(t) * float(np.max(p0)) / 0.02)))
        flowed = _rk4_flow(triplet.P0, packet, t, steps=steps)
        exact = State(np.exp(1j * t * signs * p0) * packet.amplitudes, grid)
        time_rows.append((n, (flowed - exact).norm()))

        theta = 0.1
        rot_steps = _cfl_steps(theta, float(np.sqrt(2.0) * grid.p_max), grid)
        flowed = _rk4_flow(triplet.J[2], packet, theta, steps=rot_steps)
        if triplet.m == 0:
            # the generator flow advects along the inverse-rotated argument
            ct, st = np.cos(theta), np.sin(theta)
            rot = np.array([ct * p[0] - st * p[1], st * p[0] + ct * p[1], p[2]])
            pulled = np.stack([
                np.stack([_interpolate_block(packet.amplitudes[b, f], rot, grid)
                          for f in range(packet.amplitudes.shape[1])])
                for b in range(grid.blocks)
            ])
            rot_pull.append((n, (flowed - State(pulled, grid)).norm(), 2.0 * grid.spacing**2))
        rot_norm.append((n, abs(flowed.norm() - 1.0)))

        u = 0.05
        boost_steps = _cfl_steps(u, float(np.max(p0)), grid)
        flowed = _rk4_flow(triplet.K[0], packet, u, steps=boost_steps)
        boost_norm.append((n, abs(flowed.norm() - 1.0)))
        if grid.blocks == 1:
            ch, sh = np.cosh(u), np.sinh(u)
            sign = float(triplet.energy_signs[0])
            # flow by e^{iKu} moves a packet along the boost orbit; the
            # matching point transformation evaluates the state at the
            # inverse-boosted momentum (energy sign folds into the rapidity)
            coords = np.array([ch * p[0] - sign * sh * p0, p[1], p[2]])
            pulled = np.stack([
                np.stack([_interpolate_block(packet.amplitudes[b, f], coords, grid)
                          for f in range(packet.amplitudes.shape[1])])
                for b in range(grid.blocks)
            ])
            boost_pull.append((n, (flowed - State(pulled, grid)).norm(), 2.0 * grid.spacing**2))
        step_notes.append(f"n={n}: rotation {rot_steps} steps, boost {boost_steps} steps")

    note = "; ".join(step_notes)
    checks.append(_exact_check("group:space_translation",
                               "the P1 flow is multiplication by the translation phase",
                               trans_rows, tol=1e-8))
    checks.append(_exact_check("group:time_translation",
                               "the P0 flow is multiplication by the evolution phase",
                               time_rows, tol=1e-8))
    if rot_pull:
        per_n = [(n, v) for n, v, _t in rot_pull]
        ok = all(v <= t for _n, v, t in rot_pull)
        checks.append(CheckResult(
            "group:rotation_vs_pullback",
            "the J3 flow matches the rotated-argument state up to interpolation error",
            "exact", per_n, order_estimate([r[0] for r in rot_pull], [r[1] for r in rot_pull]),
            ok, f"trilinear tolerance 2h^2; {note}"))
    checks.append(_decaying_check("group:rotation_norm_conservation",
                                  "the rotation-flow norm drift shrinks at least at stencil order",
                                  rot_norm))
    checks.append(_exact_check("group:boost_norm_conservation",
                               "the boost flow preserves the norm",
                               boost_norm, tol=1e-6, detail=note))
    if boost_pull:
        per_n = [(n, v) for n, v, _t in boost_pull]
        ok = all(v <= t for _n, v, t in boost_pull)
        checks.append(CheckResult(
            "group:boost_vs_pullback",
            "the K1 flow matches the boosted-argument state up to interpolation error",
            "exact", per_n, order_estimate([r[0] for r in boost_pull], [r[1] for r in boost_pull]),
            ok, f"trilinear tolerance 2h^2; {note}"))
    return checks


# ---------------------------------------------------------------------------
# Ehrenfest


@dataclass
class Trajectory:
    times: np.ndarray
    position: np.ndarray  # (3, T)
    momentum: np.ndarray  # (3, T)
    energy: np.ndarray  # (T,)
    kinetic_energy: np.ndarray  # (T,)
    norm: np.ndarray  # (T,)

    def rows(self):
        for i, t in enumerate(self.times):
            yield (float(t), *(float(x) for x in self.position[:, i]),
                   *(float(x) for x in self.momentum[:, i]),
                   float(self.energy[i]), float(self.kinetic_energy[i]), float(self.norm[i]))

    header = ("t", "q1", "q2", "q3", "p1", "p2", "p3", "energy", "kinetic_energy", "norm")


def ehrenfest_evolution(triplet: TransformerTriplet, packet: State, times) -> Trajectory:
    """Evolve by the exact per-node evolution phase and collect moment
    trajectories."""
    grid = triplet.grid
    times = np.asarray(list(times), dtype=float)
    p = grid.momenta
    p0 = grid.energies
    signs = np.asarray(triplet.energy_signs, dtype=float)[:, None, None]
    Q = newton_wigner(grid)
    ekin = kinetic_energy_symbol(grid)

    position = np.zeros((3, times.size))
    momentum = np.zeros((3, times.size))
    energy = np.zeros(times.size)
    kinetic = np.zeros(times.size)
    norms = np.zeros(times.size)
    for i, t in enumerate(times):
        amps = np.exp(-1j * t * signs * p0) * packet.amplitudes
        psi = State(amps, grid)
        norms[i] = psi.norm()
        for axis in range(3):
            position[axis, i] = float(np.real(psi.inner(Q[axis](psi))))
            momentum[axis, i] = float(np.real(psi.inner(triplet.P[axis](psi))))
        energy[i] = float(np.real(psi.inner(triplet.P0(psi))))
        kinetic[i] = float(np.real(psi.inner(State(ekin * psi.amplitudes, grid))))
    return Trajectory(times, position, momentum, energy, kinetic, norms)


def ehrenfest_suite(triplet: TransformerTriplet, packet: State | None = None,
                    t_max: float = 2.0, steps: int = 50) -> list[CheckResult]:
    grid = triplet.grid
    n = grid.n_per_axis
    if packet is None:
        packet = gaussian_packet(grid, (1.0, 0.0, 0.0), 0.6, label="ehrenfest-packet")
    times = np.linspace(0.0, t_max, steps + 1)
    traj = ehrenfest_evolution(triplet, packet, times)
    checks = []
    checks.append(_exact_check("ehrenfest:norm_constant", "evolution preserves the norm",
                               [(n, float(np.max(np.abs(traj.norm - traj.norm[0]))))]))
    checks.append(_exact_check("ehrenfest:momentum_constant", "momentum moments are conserved",
                               [(n, float(np.max(np.abs(traj.momentum - traj.momentum[:, :1]))))]))

    p = grid.momenta
    p0 = grid.energies
    signs = np.asarray(triplet.energy_signs, dtype=float)[:, None, None]
    # Richardson two-point derivative at t = 0: late-time moments pick up
    # stencil error from the winding evolution phase, the instant drift
    # does not
    dt = 0.01
    short = ehrenfest_evolution(triplet, packet, [-dt, -0.5 * dt, 0.5 * dt, dt])
    coarse = float((short.position[0, 3] - short.position[0, 0]) / (2.0 * dt))
    fine = float((short.position[0, 2] - short.position[0, 1]) / dt)
    slope = (4.0 * fine - coarse) / 3.0
    Q1 = newton_wigner(grid)[0]
    commutator = triplet.P0(Q1(packet)) - Q1(triplet.P0(packet))
    expected = float(np.real(packet.inner(State(1j * commutator.amplitudes, grid))))
    symbolic = float(np.real(packet.inner(State(signs * (p[0] / p0) * packet.amplitudes, grid))))
    gap = abs(slope - expected)
    checks.append(CheckResult(
        "ehrenfest:velocity_slope",
        "the mean position drifts at the commutator velocity moment",
        "exact", [(n, gap)], None, gap <= 1e-6,
        f"slope {slope:.8f}, commutator moment {expected:.8f}, "
        f"group-velocity symbol moment {symbolic:.8f}"))
    mu = grid.mass
    checks.append(CheckResult(
        "ehrenfest:kinetic_energy_positive",
        "the kinetic-energy moment stays at or above the mass",
        "exact", [(n, 0.0 if float(traj.kinetic_energy.min()) >= mu - 1e-10 else 1.0)],
        None, float(traj.kinetic_energy.min()) >= mu - 1e-10,
        f"min <E_kin> = {float(traj.kinetic_energy.min()):.6f}"))
    return checks


# ---------------------------------------------------------------------------
# orchestration


SUITE_NAMES = ("exact", "lie", "covariance", "inversion", "group", "ehrenfest", "kg")


def run_suites(
    class_tag: str,
    ns,
    p_max: float,
    mass: float,
    m: int = 0,
    st_pair: int = 1,
    suites=None,
    seed: int = 1729,
    config_echo: dict | None = None,
) -> VerificationReport:
    """Run the selected suites for one class over the resolution ladder."""
    cls = _resolve_tag(class_tag)[0]
    if suites:
        selected = list(suites)
    else:
        # everything applicable: the kg suite exists only for the two-block
        # massive classes
        selected = [s for s in SUITE_NAMES
                    if s != "kg" or cls in (TripletClass.MASSIVE_PM_1, TripletClass.MASSIVE_PM_2)]
    unknown = [s for s in selected if s not in SUITE_NAMES]
    if unknown:
        raise ValueError(f"unknown suites {unknown}; available: {', '.join(SUITE_NAMES)}")
    ns = list(ns)
    ladder = _ladder(class_tag, ns, p_max, mass, m=m, st_pair=st_pair, seed=seed, kind="wave")
    bump_ladder = _ladder(class_tag, ns, p_max, mass, m=m, st_pair=st_pair, seed=seed, kind="bump")
    report = VerificationReport(
        triplet_class=ladder[-1][0].tag,
        config=config_echo or {
            "class": str(class_tag), "ns": ns, "p_max": p_max, "mass": mass,
            "m": m, "st_pair": st_pair, "suites": selected, "seed": seed,
        },
    )
    if "exact" in selected:
        report.checks.extend(exactness_suite(bump_ladder))
    if "lie" in selected:
        report.checks.extend(lie_algebra_suite(ladder))
    if "covariance" in selected:
        report.checks.extend(covariance_suite(ladder, bump_ladder))
    if "inversion" in selected:
        report.checks.extend(inversion_suite(bump_ladder))
    if "group" in selected:
        report.checks.extend(group_action_suite(ladder))
    if "ehrenfest" in selected:
        report.checks.extend(ehrenfest_suite(ladder[-1][0]))
    if "kg" in selected:
        from . import kgmap

        report.checks.extend(kgmap.kg_suite(class_tag, ns, p_max, mass, seed=seed))
    return report
