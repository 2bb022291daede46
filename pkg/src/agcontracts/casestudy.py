"""Leader/follower headway case study.

The follower is split into a perception block (noisy, delayed measurements
of the leader) and a controlled double integrator.  This module builds the
three contracts and the closed-loop follower from physical parameters, and
runs seeded Monte-Carlo simulations of the full two-vehicle system.

Units: metres, seconds, m/s and m/s^2 throughout; speeds in profiles are
given in km/h for readability and converted on use.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .contracts import CascadeTriple, LinearContract
from .satisfaction import AffineSystem, InitSet

__all__ = [
    "CSV_COLUMNS",
    "CaseStudyParams",
    "LeaderProfile",
    "Scenario",
    "Segment",
    "SimulationTrace",
    "TraceReport",
    "build_contract_C",
    "build_contract_C1",
    "build_contract_C2",
    "build_follower_system",
    "build_triple",
    "draw_stream",
    "evaluate_trace",
    "follower_accel",
    "leader_trajectory",
    "reference_profile",
    "simulate",
]

KMH = 1.0 / 3.6


@dataclass(frozen=True)
class CaseStudyParams:
    """Physical parameters.  ``lam`` defaults to ``xi_down + delta_p``."""

    h: float = 2.0
    dt: float = 0.3
    a_min: float = 9.8
    a_max: float = 9.8
    tau: float = 0.1
    delta_p: float = 0.5
    delta_v: float = 0.1
    xi_up: float = 1.75
    xi_down: float = 1.45
    eta_up: float = 5.1
    eta_down: float = 5.1
    lam: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 <= self.tau <= self.dt:
            raise ValueError(f"tau must lie in [0, dt] = [0, {self.dt}], got {self.tau}")
        for name in ("h", "a_min", "a_max", "delta_p", "delta_v",
                     "xi_up", "xi_down", "eta_up", "eta_down"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        nominal = self.xi_down + self.delta_p
        if self.lam is None:
            object.__setattr__(self, "lam", nominal)
        elif not math.isclose(self.lam, nominal, rel_tol=0, abs_tol=1e-12):
            warnings.warn(
                f"controller margin lam={self.lam} differs from xi_down + delta_p = {nominal}",
                stacklevel=3,
            )

    @property
    def mu_max(self) -> float:
        return self.tau * self.a_max + self.delta_v

    @property
    def mu_min(self) -> float:
        return self.tau * self.a_min + self.delta_v

    def with_overrides(self, **changes) -> "CaseStudyParams":
        if "lam" not in changes and any(k in changes for k in ("xi_down", "delta_p")):
            changes["lam"] = None
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def build_contract_C(p: CaseStudyParams) -> LinearContract:
    """Composite spec: leader kinematics assumed, headway guaranteed.

    Input ``d = (p_l, v_l)``, output ``y = (p_f, v_f)``.
    """
    dt = p.dt
    return LinearContract(
        2, 2,
        assume_next=[[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]],
        assume_now=[[-1, -dt], [1, dt], [0, -1], [0, 1], [0, -1]],
        assume_rhs=[0, 0, dt * p.a_max, dt * p.a_min, 0],
        guar_next=[[0, 0, 0, 0]],
        guar_now=[[-1, 0, 1, p.h]],
        guar_rhs=[0],
        label="C: headway spec for the follower",
    )


def build_contract_C1(p: CaseStudyParams) -> LinearContract:
    """Perception: output ``z = (p_m, v_m)`` within delay/noise bounds of the leader."""
    dt = p.dt
    return LinearContract(
        2, 2,
        assume_next=[[1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]],
        assume_now=[[-1, -dt], [1, dt], [0, -1], [0, 1], [0, -1]],
        assume_rhs=[0, 0, dt * p.a_max, dt * p.a_min, 0],
        guar_next=[[1, 0, -1, 0], [-1, 0, 1, 0], [0, 1, 0, -1], [0, -1, 0, 1], [0, 0, 0, 0]],
        guar_now=[[0, -p.tau, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, -1]],
        guar_rhs=[p.delta_p, p.delta_p, p.mu_max, p.mu_min, 0],
        label="C1: delayed noisy perception",
    )


def build_contract_C2(p: CaseStudyParams) -> LinearContract:
    """Controlled dynamics: measurement kinematics assumed,
    ``p_m - p_f - h v_f >= delta_p`` guaranteed."""
    dt, tau = p.dt, p.tau
    return LinearContract(
        2, 2,
        assume_next=[[1, 0], [-1, 0], [0, 1], [0, -1]],
        assume_now=[[-1, -dt - tau], [1, dt - tau], [0, -1], [0, 1]],
        assume_rhs=[p.xi_up, p.xi_down, p.eta_up, p.eta_down],
        guar_next=[[0, 0, 0, 0]],
        guar_now=[[-1, 0, 1, p.h]],
        # the row reads -p_m + p_f + h v_f <= -delta_p
        guar_rhs=[-p.delta_p],
        label="C2: robust headway on measurements",
    )


def build_triple(p: CaseStudyParams) -> CascadeTriple:
    return CascadeTriple(build_contract_C1(p), build_contract_C2(p), build_contract_C(p))


def follower_accel(p: CaseStudyParams, p_m, v_m, p_f, v_f):
    """The affine control law, written exactly as the design equation."""
    h, dt = p.h, p.dt
    return ((p_m - p_f - h * v_f) / (h * dt) + (dt - p.tau) * v_m / (h * dt)
            - v_f / h - p.lam / (h * dt))


def build_follower_system(p: CaseStudyParams):
    """Closed-loop follower ``y+ = F y + B z + f`` with ``y = (p_f, v_f)``,
    ``z = (p_m, v_m)``, and the initial set ``p_m - p_f - h v_f >= delta_p``.

    Substituting the control law into ``v_f+ = v_f + dt a_f`` gives::

        F = [[1,     dt   ],      B = [[0,   0           ],     f = [0, -lam/h]
             [-1/h, -dt/h ]]           [1/h, (dt - tau)/h]]
    """
    if p.h <= 0:
        raise ValueError("the follower controller needs h > 0")
    h, dt, tau = p.h, p.dt, p.tau
    system = AffineSystem(
        state_matrix=[[1.0, dt], [-1.0 / h, -dt / h]],
        input_matrix=[[0.0, 0.0], [1.0 / h, (dt - tau) / h]],
        offset=[0.0, -p.lam / h],
    )
    init = InitSet(matrix=[[-1.0, 0.0, 1.0, h]], rhs=[-p.delta_p])
    return system, init


@dataclass(frozen=True)
class Segment:
    """From ``start`` seconds on, either hold ``accel`` (m/s^2) or drive
    toward ``target_kmh`` as hard as the bounds allow."""

    start: float
    accel: float | None = None
    target_kmh: float | None = None

    def __post_init__(self):
        if (self.accel is None) == (self.target_kmh is None):
            raise ValueError("a segment needs exactly one of accel or target_kmh")


@dataclass(frozen=True)
class LeaderProfile:
    initial_kmh: float
    segments: tuple = ()
    name: str = ""

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(**s) for s in self.segments)
        starts = [s.start for s in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must be strictly increasing")
        object.__setattr__(self, "segments", segs)

    def segment_at(self, t):
        active = None
        for s in self.segments:
            if s.start <= t + 1e-9:
                active = s
        return active

    def to_dict(self) -> dict:
        return {"name": self.name, "initial_kmh": self.initial_kmh,
                "segments": [{k: v for k, v in asdict(s).items() if v is not None}
                             for s in self.segments]}


def reference_profile() -> LeaderProfile:
    """Cruise at 110 km/h, sway between 25 and 110 km/h from 30 s to 60 s,
    brake hard to 3 km/h at 65 s and hold."""
    segs = [Segment(0.0, accel=0.0)]
    for i, start in enumerate(range(30, 60, 5)):
        segs.append(Segment(float(start), target_kmh=25.0 if i % 2 == 0 else 110.0))
    segs.append(Segment(60.0, accel=0.0))
    segs.append(Segment(65.0, target_kmh=3.0))
    return LeaderProfile(110.0, tuple(segs), name="reference-90s")


def leader_trajectory(p: CaseStudyParams, profile: LeaderProfile, n_steps: int, p0=0.0):
    """Integrate the leader kinematics for ``n_steps`` samples.

    The commanded acceleration is clipped to ``[-a_min, a_max]`` and to keep
    the speed non-negative.
    """
    pos = np.empty(n_steps)
    vel = np.empty(n_steps)
    acc = np.empty(n_steps)
    pos[0], vel[0] = p0, profile.initial_kmh * KMH
    for k in range(n_steps):
        seg = profile.segment_at(k * p.dt)
        if seg is None or seg.accel is not None:
            a = 0.0 if seg is None else seg.accel
        else:
            a = (seg.target_kmh * KMH - vel[k]) / p.dt
        a = min(max(a, -p.a_min, -vel[k] / p.dt), p.a_max)
        acc[k] = a
        if k + 1 < n_steps:
            pos[k + 1] = pos[k] + p.dt * vel[k]
            vel[k + 1] = max(vel[k] + p.dt * a, 0.0)
    return pos, vel, acc


CSV_COLUMNS = ("k", "t", "p_l", "v_l", "a_l", "p_m", "v_m", "p_f", "v_f", "a_f",
               "sigma_p", "sigma_v", "nu_p", "nu_v")


@dataclass(eq=False)
class SimulationTrace:
    seed: int
    run: int
    params: CaseStudyParams
    data: dict = field(repr=False)  # column name -> array

    def __getattr__(self, name):
        data = self.__dict__.get("data")
        if data is not None and name in data:
            return data[name]
        raise AttributeError(name)

    def __len__(self):
        return len(self.data["k"])

    def to_csv(self, with_run=False) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = (("run",) if with_run else ()) + CSV_COLUMNS
        writer.writerow(cols)
        for i in range(len(self)):
            row = [self.run] if with_run else []
            for c in CSV_COLUMNS:
                v = self.data[c][i]
                row.append(int(v) if c == "k" else repr(float(v)))
            writer.writerow(row)
        return buf.getvalue()


def draw_stream(seed: int, run: int, n_steps: int) -> np.ndarray:
    """Uniform draws for one run, shape ``(n_steps, 4)``.

    Draw ``[k, ch]`` is the ``4 k + ch``-th double from numpy's ``Generator``
    over a Philox-4x64 bit generator keyed by ``seed + 2**64 * run``.
    Channels: 0 position delay, 1 velocity delay, 2 position noise,
    3 velocity noise.
    """
    if not (0 <= seed < 2 ** 64 and 0 <= run < 2 ** 64):
        raise ValueError("seed and run must fit in 64 unsigned bits")
    gen = np.random.Generator(np.random.Philox(key=seed + (run << 64)))
    return gen.random((n_steps, 4))


def _n_steps(p: CaseStudyParams, duration_s: float) -> int:
    n = round(duration_s / p.dt)
    if n < 1 or not math.isclose(n * p.dt, duration_s, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError(f"duration {duration_s} s is not a whole number of {p.dt} s steps")
    return n


def _check_perception(p: CaseStudyParams, d):
    """Assert the perception guarantees on a finished trace."""
    p_l, v_l, p_m, v_m = d["p_l"], d["v_l"], d["p_m"], d["v_m"]
    slack = 1e-9 * (1.0 + np.max(np.abs(p_l)))
    ok = (
        np.all(p_m[1:] >= p_l[1:] - p.tau * v_l[:-1] - p.delta_p - slack)
        and np.all(p_m[1:] <= p_l[1:] + p.delta_p + slack)
        and np.all(v_m[1:] >= v_l[1:] - p.mu_max - slack)
        and np.all(v_m[1:] <= v_l[1:] + p.mu_min + slack)
        and np.all(v_m >= 0)
    )
    if not ok:
        raise RuntimeError("simulated measurements violate the perception guarantees")


def _run(p, profile, seed, run, n, gap, follower_kmh):
    p_l, v_l, a_l = leader_trajectory(p, profile, n, p0=gap)
    u = draw_stream(seed, run, n)
    sigma_p, sigma_v = p.tau * u[:, 0], p.tau * u[:, 1]
    nu_p, nu_v = p.delta_p * (2 * u[:, 2] - 1), p.delta_v * (2 * u[:, 3] - 1)
    # sample 0 is taken without delay or noise
    sigma_p[0] = sigma_v[0] = nu_p[0] = nu_v[0] = 0.0
    p_m = np.empty(n)
    v_m = np.empty(n)
    p_m[0], v_m[0] = p_l[0], v_l[0]
    for k in range(1, n):
        sp, sv = sigma_p[k] / p.dt, sigma_v[k] / p.dt
        p_m[k] = (1 - sp) * p_l[k] + sp * p_l[k - 1] + nu_p[k]
        v_m[k] = max((1 - sv) * v_l[k] + sv * v_l[k - 1] + nu_v[k], 0.0)

    system, _ = build_follower_system(p)
    p_f = np.empty(n)
    v_f = np.empty(n)
    a_f = np.empty(n)
    p_f[0], v_f[0] = 0.0, follower_kmh * KMH
    if p_m[0] - p_f[0] - p.h * v_f[0] < p.delta_p:
        raise ValueError("initial follower state violates the headway margin at k = 0")
    for k in range(n):
        a_f[k] = follower_accel(p, p_m[k], v_m[k], p_f[k], v_f[k])
        if k + 1 < n:
            p_f[k + 1], v_f[k + 1] = system.step(
                np.array([p_f[k], v_f[k]]), np.array([p_m[k], v_m[k]]))
    k = np.arange(n)
    data = dict(k=k, t=k * p.dt, p_l=p_l, v_l=v_l, a_l=a_l, p_m=p_m, v_m=v_m,
                p_f=p_f, v_f=v_f, a_f=a_f, sigma_p=sigma_p, sigma_v=sigma_v,
                nu_p=nu_p, nu_v=nu_v)
    _check_perception(p, data)
    return SimulationTrace(seed, run, p, data)


def simulate(p: CaseStudyParams, profile: LeaderProfile | None = None, seed: int = 0,
             n_runs: int = 1, duration_s: float = 90.0, gap: float = 70.0,
             follower_kmh: float = 113.0) -> list:
    """Monte-Carlo runs of the closed loop; run ``i`` uses stream ``(seed, i)``.

    The leader starts ``gap`` metres ahead of the follower.  Each trace has
    ``duration_s / dt`` samples.
    """
    profile = profile if profile is not None else reference_profile()
    n = _n_steps(p, duration_s)
    return [_run(p, profile, seed, r, n, gap, follower_kmh) for r in range(n_runs)]


@dataclass(frozen=True, eq=False)
class TraceReport:
    spec_min: float
    spec_max: float
    robust_min: float
    headway: np.ndarray
    violation_steps: list

    def to_dict(self) -> dict:
        return {"spec_min": self.spec_min, "spec_max": self.spec_max,
                "robust_min": self.robust_min, "violation_steps": list(self.violation_steps)}


def evaluate_trace(trace, p: CaseStudyParams, tol: float = 1e-9) -> TraceReport:
    """Headway margins on a trace.

    ``spec`` is ``p_l - p_f - h v_f`` (composite guarantee) and ``robust`` is
    ``p_m - p_f - h v_f - delta_p`` (dynamics guarantee).  The headway ratio
    ``(p_l - p_f) / v_f`` is ``+inf`` while the follower is (nearly) stopped.
    """
    d = trace.data if isinstance(trace, SimulationTrace) else trace
    if len(d["p_l"]) == 0:
        raise ValueError("empty trace")
    p_l, p_f, v_f, p_m = (np.asarray(d[c], dtype=float) for c in ("p_l", "p_f", "v_f", "p_m"))
    spec = p_l - p_f - p.h * v_f
    robust = p_m - p_f - p.h * v_f - p.delta_p
    gap = p_l - p_f
    moving = v_f > 1e-9
    headway = np.full(gap.shape, np.inf)
    headway[moving] = gap[moving] / v_f[moving]
    violations = [int(i) for i in np.flatnonzero((spec < -tol) | (robust < -tol))]
    return TraceReport(float(spec.min()), float(spec.max()), float(robust.min()),
                       headway, violations)


@dataclass(frozen=True)
class Scenario:
    params: CaseStudyParams = field(default_factory=CaseStudyParams)
    profile: LeaderProfile = field(default_factory=reference_profile)
    duration_s: float = 90.0
    gap: float = 70.0
    follower_kmh: float = 113.0

    @classmethod
    def from_dict(cls, doc) -> "Scenario":
        known = {f.name for f in fields(CaseStudyParams)}
        raw = dict(doc.get("params", {}))
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        prof = doc.get("profile", "reference-90s")
        if prof == "reference-90s":
            profile = reference_profile()
        elif isinstance(prof, dict):
            profile = LeaderProfile(prof["initial_kmh"], tuple(prof.get("segments", ())),
                                    name=prof.get("name", ""))
        else:
            raise ValueError(f"unknown profile {prof!r}")
        return cls(CaseStudyParams(**raw), profile, float(doc.get("duration_s", 90.0)),
                   float(doc.get("gap", 70.0)), float(doc.get("follower_kmh", 113.0)))

    def to_dict(self) -> dict:
        return {"schema_version": "1", "params": self.params.to_dict(),
                "profile": self.profile.to_dict(), "duration_s": self.duration_s,
                "gap": self.gap, "follower_kmh": self.follower_kmh}

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
