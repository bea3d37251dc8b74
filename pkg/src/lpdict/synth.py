"""Synthetic orthogonal dictionary learning instances.

Observations are ``Y = D0 @ X0`` with Bernoulli-Gaussian coefficients, then
optionally corrupted by dense Gaussian noise or by sparse sign corruption
``sigma * B * R``.  Each matrix draws from its own sub-stream of the instance
seed, so varying the noise at a fixed seed leaves ``D0`` and ``X0`` untouched.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParamError
from .stiefel import random_stiefel

DICT_KINDS = ("identity", "random-orthogonal")
NOISE_KINDS = ("none", "gaussian", "sparse")
FORMAT_NAME = "lpdict-instance"
FORMAT_VERSION = 1

# sub-stream order inside an instance seed
_STREAM_D0, _STREAM_X0, _STREAM_NOISE = 0, 1, 2


@dataclass(frozen=True)
class BernoulliGaussianSpec:
    theta: float
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise InvalidParamError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.sigma > 0.0:
            raise InvalidParamError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class NoiseSpec:
    """Observation noise.

    ``sigma`` scales the Gaussian entries (``kind='gaussian'``) or the sign
    corruptions (``kind='sparse'``, where ``vartheta`` is the fraction of
    corrupted entries).  ``vartheta`` is ignored for the other kinds.
    """

    kind: str = "none"
    sigma: float = 0.0
    vartheta: float = 0.1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidParamError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not self.sigma >= 0.0:
            raise InvalidParamError(f"noise sigma must be >= 0, got {self.sigma}")
        if self.kind == "sparse" and not 0.0 < self.vartheta < 1.0:
            raise InvalidParamError(f"vartheta must lie in (0, 1), got {self.vartheta}")


@dataclass(frozen=True)
class DictionaryInstance:
    D0: np.ndarray
    X0: np.ndarray
    Y: np.ndarray
    Y_obs: np.ndarray
    noise: NoiseSpec
    seed: int
    bg: BernoulliGaussianSpec = field(default_factory=lambda: BernoulliGaussianSpec(0.3))
    dict_kind: str = "random-orthogonal"

    @property
    def n(self) -> int:
        return self.D0.shape[0]

    @property
    def r(self) -> int:
        return self.X0.shape[1]


def _streams(seed: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def gen_instance(
    n: int,
    r: int,
    bg: BernoulliGaussianSpec,
    dict_kind: str = "random-orthogonal",
    noise: NoiseSpec | None = None,
    seed: int = 0,
) -> DictionaryInstance:
    """Draw a dictionary, Bernoulli-Gaussian coefficients and observations.

    Args:
        n: Dictionary size (``D0`` is ``n x n``), at least 2.
        r: Number of samples (columns of ``Y``), at least 1.
        bg: Coefficient distribution.
        dict_kind: ``"identity"`` or ``"random-orthogonal"`` (Haar).
        noise: Observation noise; defaults to none.
        seed: Non-negative integer; the instance is a pure function of it.

    Returns:
        A frozen :class:`DictionaryInstance`.
    """
    noise = NoiseSpec() if noise is None else noise
    if int(n) != n or n < 2:
        raise InvalidParamError(f"n must be an integer >= 2, got {n}")
    if int(r) != r or r < 1:
        raise InvalidParamError(f"r must be an integer >= 1, got {r}")
    if dict_kind not in DICT_KINDS:
        raise InvalidParamError(f"dict_kind must be one of {DICT_KINDS}, got {dict_kind!r}")
    n, r = int(n), int(r)
    streams = _streams(seed)

    if dict_kind == "identity":
        D0 = np.eye(n)
    else:
        D0 = np.array(random_stiefel(n, n, streams[_STREAM_D0]))

    rx = streams[_STREAM_X0]
    support = rx.random((n, r)) < bg.theta
    X0 = np.where(support, bg.sigma * rx.standard_normal((n, r)), 0.0)
    Y = D0 @ X0

    rn = streams[_STREAM_NOISE]
    if noise.kind == "gaussian":
        Y_obs = Y + noise.sigma * rn.standard_normal((n, r))
    elif noise.kind == "sparse":
        B = rn.random((n, r)) < noise.vartheta
        R = 2.0 * rn.integers(0, 2, size=(n, r)) - 1.0
        Y_obs = Y + noise.sigma * (B * R)
    else:
        Y_obs = Y

    for arr in (D0, X0, Y, Y_obs):
        arr.flags.writeable = False
    return DictionaryInstance(D0, X0, Y, Y_obs, noise, int(seed), bg, dict_kind)


def support_nonzero_count(X0) -> int:
    return int(np.count_nonzero(X0))


# --- serialization ---------------------------------------------------------

_MATRICES = ("D0", "X0", "Y", "Y_obs")


def _header(inst: DictionaryInstance) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n": inst.n,
        "r": inst.r,
        "seed": inst.seed,
        "dict_kind": inst.dict_kind,
        "bg": asdict(inst.bg),
        "noise": asdict(inst.noise),
    }


def instance_to_dict(inst: DictionaryInstance) -> dict:
    """JSON-ready container: header fields plus row-major matrices.

    Each matrix is stored as ``{"shape": [rows, cols], "data": [...]}`` with
    ``data`` the row-major flattening.  Floats round-trip exactly.
    """
    out = _header(inst)
    out["matrices"] = {
        name: {"shape": list(getattr(inst, name).shape),
               "data": getattr(inst, name).ravel(order="C").tolist()}
        for name in _MATRICES
    }
    return out


def instance_from_dict(payload: dict) -> DictionaryInstance:
    if payload.get("format") != FORMAT_NAME:
        raise InvalidParamError(f"not an {FORMAT_NAME} container")
    if payload.get("version") != FORMAT_VERSION:
        raise InvalidParamError(f"unsupported container version {payload.get('version')}")
    mats = {}
    for name in _MATRICES:
        entry = payload["matrices"][name]
        arr = np.asarray(entry["data"], dtype=float).reshape(entry["shape"], order="C")
        arr.flags.writeable = False
        mats[name] = arr
    return DictionaryInstance(
        noise=NoiseSpec(**payload["noise"]),
        seed=int(payload["seed"]),
        bg=BernoulliGaussianSpec(**payload["bg"]),
        dict_kind=payload["dict_kind"],
        **mats,
    )


def save_instance(inst: DictionaryInstance, path) -> Path:
    """Write an instance as ``.json`` (text) or ``.npz`` (binary).

    The ``.npz`` variant stores the same header as a JSON string under the
    key ``header`` next to the four matrices.
    """
    path = Path(path)
    if path.suffix == ".npz":
        np.savez(path, header=json.dumps(_header(inst)),
                 **{name: getattr(inst, name) for name in _MATRICES})
    else:
        path.write_text(json.dumps(instance_to_dict(inst)))
    return path


def load_instance(path) -> DictionaryInstance:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as z:
            payload = json.loads(str(z["header"]))
            payload["matrices"] = {
                name: {"shape": list(z[name].shape), "data": z[name].ravel()}
                for name in _MATRICES
            }
        return instance_from_dict(payload)
    return instance_from_dict(json.loads(path.read_text()))
