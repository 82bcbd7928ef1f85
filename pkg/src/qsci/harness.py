"""Batch experiment runner: JSON configs in, CSV/JSON result files out.

Every result file embeds the config hash, the seed, and the library
version; no timestamps are written, so identical (config, seed) runs
produce byte-identical payloads. Output directory and thread count are
excluded from the hash because they cannot affect numerical results.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .asci import AsciConfig, asci_run
from .circuits import (NoiseModel, StateVector, noisy_sample, ry_ansatz,
                       rsp_ansatz, sample, simulate)
from .core import (SectorFilter, SelectionResult, SubspaceSolution,
                   idealized_top_r, merge_subspaces, qsci_ground,
                   qsci_sequential, qsci_single_diag, select_top_r)
from .determinants import enumerate_sector, hartree_fock_determinant
from .integrals import MolecularIntegrals, freeze_core, load_fcidump, \
    casci_dense
from .measurement import (allocate_single, estimate_sampling,
                          exact_variances, haar_variances, qwc_groups)
from .pauli import jordan_wigner
from .vqe import (MinimizeSettings, default_penalties, prepare_vqd_chain,
                  run_vqe)

SCHEMA_VERSION = 1
VARIATIONAL_SLACK = 1e-12


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the field."""


@dataclass
class ExperimentConfig:
    kind: str
    fixture: str
    sector: tuple | None = None
    frozen: list | None = None
    active: list | None = None
    apply_filter: bool = True
    params: dict = field(default_factory=dict)
    seed: int | None = None
    out_dir: str = "results"
    threads: int = 1

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        version = obj.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version {version} unsupported "
                              f"(expected {SCHEMA_VERSION})")
        kind = obj.get("kind")
        if kind not in EXPERIMENTS:
            raise ConfigError(f"kind must be one of "
                              f"{sorted(EXPERIMENTS)}, got {kind!r}")
        fixture = obj.get("fixture")
        if not isinstance(fixture, str):
            raise ConfigError("fixture must be a path string")
        sector = None
        if obj.get("sector") is not None:
            s = obj["sector"]
            if not isinstance(s, dict) or "n_electrons" not in s:
                raise ConfigError("sector must carry n_electrons")
            sector = (int(s["n_electrons"]),
                      None if s.get("sz", 0.0) is None
                      else float(s.get("sz", 0.0)))
        seed = obj.get("seed")
        if seed is not None:
            seed = int(seed)
        return cls(kind=kind, fixture=fixture, sector=sector,
                   frozen=obj.get("frozen"), active=obj.get("active"),
                   apply_filter=bool(obj.get("apply_filter", True)),
                   params=obj.get("params", {}), seed=seed,
                   out_dir=obj.get("out", "results"),
                   threads=int(obj.get("threads", 1)))

    def canonical(self) -> str:
        """Hash input: everything that can affect numbers."""
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "fixture": self.fixture,
            "sector": self.sector,
            "frozen": self.frozen,
            "active": self.active,
            "apply_filter": self.apply_filter,
            "params": self.params,
            "seed": self.seed,
        }, sort_keys=True)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def require_seed(self):
        if self.seed is None:
            raise ConfigError("seed is mandatory for this experiment kind")


@dataclass
class ScalingRecord:
    n_qubits: int
    epsilon: float
    min_r: int
    shot_estimate: float


def _load_molecule(cfg: ExperimentConfig) -> MolecularIntegrals:
    if not os.path.exists(cfg.fixture):
        raise ConfigError(f"fixture path does not exist: {cfg.fixture}")
    mol = load_fcidump(cfg.fixture)
    if cfg.frozen is not None or cfg.active is not None:
        if cfg.active is None:
            raise ConfigError("active orbital list required when "
                              "frozen is given")
        mol = freeze_core(mol, frozen=cfg.frozen or [], active=cfg.active)
    return mol


def _sector(cfg: ExperimentConfig, mol: MolecularIntegrals):
    if cfg.sector is not None:
        n_e, sz = cfg.sector
    else:
        n_e, sz = mol.n_electrons, mol.ms2 / 2.0
    flt = SectorFilter(n_e, sz) if cfg.apply_filter else None
    return n_e, sz, flt


def _casci_reference(mol, n_e, sz, k: int = 6):
    two_sz = None if sz is None else round(2 * sz)
    vals, vecs, dets = casci_dense(mol, n_e, two_sz)
    return vals, vecs, dets


def _sector_state(mol, vecs, dets, index: int) -> StateVector:
    amps = np.zeros(1 << mol.n_qubits, dtype=complex)
    amps[np.asarray(dets, dtype=np.int64)] = vecs[:, index]
    return StateVector(amps, mol.n_qubits)


def _build_ansatz(spec, n_qubits: int):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("ansatz must be {type: ry|rsp, depth: int}")
    depth = int(spec.get("depth", 2))
    if spec["type"] == "ry":
        return ry_ansatz(n_qubits, depth)
    if spec["type"] == "rsp":
        return rsp_ansatz(n_qubits, depth)
    raise ConfigError(f"ansatz type must be ry or rsp, got {spec['type']!r}")


def _settings(params: dict) -> MinimizeSettings:
    s = MinimizeSettings()
    if "max_iterations" in params:
        s.max_iterations = int(params["max_iterations"])
    if "gradient_tol" in params:
        s.gradient_tol = float(params["gradient_tol"])
    return s


def _assert_variational(energy: float, exact: float, label: str):
    if energy < exact - VARIATIONAL_SLACK:
        raise RuntimeError(f"{label} energy {energy!r} undercuts the "
                           f"exact sector energy {exact!r}")


class _Writer:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.paths = []
        os.makedirs(cfg.out_dir, exist_ok=True)

    @property
    def meta(self):
        return {"version": __version__, "config_hash": self.cfg.config_hash,
                "seed": self.cfg.seed, "schema_version": SCHEMA_VERSION}

    def csv(self, name: str, header: str, rows) -> str:
        path = os.path.join(self.cfg.out_dir, name)
        with open(path, "w") as fh:
            fh.write(f"# qsci {__version__} config {self.cfg.config_hash} "
                     f"seed {self.cfg.seed}\n")
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(repr(x) if isinstance(x, float) else str(x)
                                  for x in row) + "\n")
        self.paths.append(path)
        return path

    def json(self, name: str, payload: dict) -> str:
        path = os.path.join(self.cfg.out_dir, name)
        body = {"meta": self.meta}
        body.update(payload)
        with open(path, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.paths.append(path)
        return path


def min_r_for_tolerance(state: StateVector, mol: MolecularIntegrals,
                        flt: SectorFilter | None, epsilon: float,
                        exact_energy: float | None = None) -> ScalingRecord:
    """Smallest r with |E_r - E_exact| <= epsilon, by bisection (valid
    because idealized nested selections give non-increasing E_r). Also
    reports the rough shot estimator 1/|c_R|^2 at that r."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if exact_energy is None:
        vals, _, _ = _casci_reference(
            mol, flt.n_electrons if flt else mol.n_electrons,
            flt.sz if flt else mol.ms2 / 2.0)
        exact_energy = float(vals[0])
    full = idealized_top_r(state, 1 << mol.n_qubits, flt)
    r_max = len(full)

    def err_at(r: int) -> float:
        sol = qsci_ground(full, r, flt, mol)
        return sol.ground_energy - exact_energy

    if err_at(r_max) > epsilon:
        raise RuntimeError("tolerance unreachable even with the full "
                           "support; inconsistent reference energy")
    lo, hi = 1, r_max
    while lo < hi:
        mid = (lo + hi) // 2
        if err_at(mid) <= epsilon:
            hi = mid
        else:
            lo = mid + 1
    prob_r = full.frequencies[lo - 1] / sum(full.frequencies)
    norm = sum(f for f in full.frequencies) / 1e6
    # frequencies are nominal-scaled probabilities; recover |c_R|^2
    c_r_sq = full.frequencies[lo - 1] / 1e6
    return ScalingRecord(mol.n_qubits, epsilon, lo,
                         float(1.0 / c_r_sq) if c_r_sq > 0 else math.inf)


def sampling_trials(state: StateVector, mol: MolecularIntegrals,
                    flt: SectorFilter | None, n_shots: int, n_trials: int,
                    base_seed: int, exact_energy: float | None = None):
    """Repeated finite-shot QSCI with every observed configuration kept.
    Returns (per-trial energies, summary dict)."""
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if exact_energy is None:
        vals, _, _ = _casci_reference(
            mol, flt.n_electrons if flt else mol.n_electrons,
            flt.sz if flt else mol.ms2 / 2.0)
        exact_energy = float(vals[0])
    energies = []
    for t in range(n_trials):
        counts = sample(state, n_shots, seed=base_seed + t)
        sel = select_top_r(counts, len(counts.counts), flt)
        sol = qsci_ground(sel, len(sel), flt, mol)
        energies.append(sol.ground_energy)
    errors = [e - exact_energy for e in energies]
    summary = {
        "n_shots": n_shots,
        "n_trials": n_trials,
        "exact_energy": exact_energy,
        "mean_abs_error": float(np.mean(np.abs(errors))),
        "std_error": float(np.std(errors, ddof=1)),
    }
    return energies, summary


def observable_suite(sol: SubspaceSolution, operators,
                     reference: SubspaceSolution):
    """Expectation of each named operator on the solution and on the
    full-sector reference, with absolute errors. operators: (name, mol)."""
    from .core import expectation_on_output

    rows = []
    for name, op in operators:
        got = expectation_on_output(sol, 0, op)
        ref = expectation_on_output(reference, 0, op)
        rows.append({"name": name, "value": got, "reference": ref,
                     "abs_error": abs(got - ref)})
    return rows


def _full_sector_solution(mol, vals, vecs, dets, k: int = 1):
    return SubspaceSolution(list(dets), vals[:k],
                            vecs[:, :k], mol.n_qubits)


def _prepare_input_state(cfg, mol, flt, spec, vals, vecs, dets):
    """Input-state factory shared by the sampling experiments."""
    kind = spec.get("kind", "casci-ground")
    if kind == "casci-ground":
        return _sector_state(mol, vecs, dets, 0)
    if kind == "casci-state":
        return _sector_state(mol, vecs, dets, int(spec.get("index", 0)))
    if kind == "hf":
        n_e = flt.n_electrons if flt else mol.n_electrons
        two_sz = round(2 * flt.sz) if flt and flt.sz is not None else 0
        hf = hartree_fock_determinant(n_e, two_sz)
        return StateVector.from_determinant(hf, mol.n_qubits)
    if kind == "vqe":
        cfg.require_seed()
        res = _vqe_result(cfg, mol, flt, spec)
        return res.state
    raise ConfigError(f"input kind {kind!r} not recognized")


def _vqe_result(cfg, mol, flt, spec):
    ansatz = _build_ansatz(spec.get("ansatz", {"type": "ry", "depth": 4}),
                           mol.n_qubits)
    n_e = flt.n_electrons if flt else mol.n_electrons
    two_sz = round(2 * flt.sz) if flt and flt.sz is not None else 0
    hf = hartree_fock_determinant(n_e, two_sz)
    ham = jordan_wigner(mol)
    penalties = default_penalties(mol.n_orbitals, n_e,
                                  float(spec.get("penalty_weight", 3.0)))
    return run_vqe(ham, ansatz, hf, cfg.seed, penalties=penalties,
                   settings=_settings(spec),
                   restarts=int(spec.get("restarts", 1)))


# ---------------------------------------------------------------------------
# experiment runners


def _run_parse_check(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    w.json("parse_check.json", {
        "fixture": cfg.fixture,
        "n_orbitals": mol.n_orbitals,
        "n_electrons": mol.n_electrons,
        "ms2": mol.ms2,
        "n_qubits": mol.n_qubits,
        "core_energy": mol.core_energy,
        "valid": True,
    })


def _run_casci(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    k = min(int(cfg.params.get("n_states", 6)), vals.size)
    w.json("casci.json", {
        "sector": {"n_electrons": n_e, "sz": sz},
        "dimension": len(dets),
        "eigenvalues": [float(v) for v in vals[:k]],
    })


def _run_qsci_ground(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    r = int(cfg.params.get("r", 16))
    shots = cfg.params.get("shots")
    state = _prepare_input_state(cfg, mol, flt,
                                 cfg.params.get("input", {}),
                                 vals, vecs, dets)
    if shots is None:
        source = state
    else:
        cfg.require_seed()
        source = sample(state, int(shots), cfg.seed)
    sol = qsci_ground(source, r, flt, mol)
    _assert_variational(sol.ground_energy, float(vals[0]), "qsci-ground")
    w.json("qsci_ground.json", {
        "r": r,
        "shots": shots,
        "dimension": len(sol.configs),
        "energy": sol.ground_energy,
        "exact_energy": float(vals[0]),
        "error": sol.ground_energy - float(vals[0]),
        "solution": json.loads(sol.to_json()),
    })


def _run_qsci_excited(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    scheme = cfg.params.get("scheme", "single")
    n_states = int(cfg.params.get("n_states", 2))
    shots = cfg.params.get("shots")
    if n_states < 1 or n_states > vals.size:
        raise ConfigError("n_states out of range for the sector")

    sources = []
    for i in range(n_states):
        state = _sector_state(mol, vecs, dets, i)
        if shots is None:
            sources.append(state)
        else:
            cfg.require_seed()
            sources.append(sample(state, int(shots), cfg.seed + i))

    if scheme == "single":
        r = int(cfg.params.get("r", 16))
        strategy = cfg.params.get("strategy", "round-robin")
        sels = [s if isinstance(s, SelectionResult)
                else (idealized_top_r(s, r, flt) if isinstance(s, StateVector)
                      else select_top_r(s, r, flt)) for s in sources]
        sol = qsci_single_diag(sels, r, strategy, mol, n_states)
        for i in range(n_states):
            _assert_variational(float(sol.eigenvalues[i]), float(vals[i]),
                                f"single-diag state {i}")
        energies = [float(e) for e in sol.eigenvalues]
        payload = {"scheme": "single", "r": r, "strategy": strategy,
                   "dimension": len(sol.configs)}
    elif scheme == "sequential":
        r_list = cfg.params.get("r_list")
        if r_list is None:
            r_list = [int(cfg.params.get("r", 16))] * n_states
        betas = cfg.params.get("betas", "auto")
        sols = qsci_sequential(sources, r_list, flt, mol, betas=betas)
        energies = [s.ground_energy for s in sols]
        payload = {"scheme": "sequential", "r_list": list(r_list),
                   "betas": betas if betas == "auto" else list(betas)}
    else:
        raise ConfigError(f"scheme must be single or sequential, "
                          f"got {scheme!r}")
    payload.update({
        "shots": shots,
        "energies": energies,
        "exact_energies": [float(v) for v in vals[:n_states]],
        "errors": [e - float(v) for e, v in zip(energies, vals)],
    })
    w.json("qsci_excited.json", payload)
    w.csv("qsci_excited.csv", "state,energy,exact,error",
          [(i, e, float(vals[i]), e - float(vals[i]))
           for i, e in enumerate(energies)])


def _run_vqe(cfg: ExperimentConfig, w: _Writer):
    cfg.require_seed()
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    res = _vqe_result(cfg, mol, flt, cfg.params)
    rows = [(i, e) for i, e in enumerate(res.trace.energies)]
    w.csv("vqe_trace.csv", "iteration,objective", rows)

    qsci_spec = cfg.params.get("qsci")
    if qsci_spec:
        # QSCI energy per optimization iterate, one column per r (the
        # optimization-history study)
        r_list = [int(r) for r in qsci_spec.get("r_list", [4])]
        shots = qsci_spec.get("shots")
        ansatz = _build_ansatz(
            cfg.params.get("ansatz", {"type": "ry", "depth": 4}),
            mol.n_qubits)
        hf = hartree_fock_determinant(n_e,
                                      0 if sz is None else round(2 * sz))
        history = []
        for i, params in enumerate(res.trace.params_history):
            state = simulate(ansatz, params, hf)
            row = [i, res.trace.energies[i]]
            for r in r_list:
                if shots is None:
                    source = state
                else:
                    source = sample(state, int(shots), cfg.seed + i)
                sol = qsci_ground(source, r, flt, mol)
                _assert_variational(sol.ground_energy, float(vals[0]),
                                    "vqe-history qsci")
                row.append(sol.ground_energy)
            history.append(tuple(row))
        header = "iteration,objective," + ",".join(f"qsci_r{r}"
                                                   for r in r_list)
        w.csv("vqe_qsci_history.csv", header, history)

    w.json("vqe.json", {
        "energy": res.energy,
        "exact_energy": float(vals[0]),
        "error": res.energy - float(vals[0]),
        "iterations": len(res.trace),
        "n_params": res.params.size,
    })


def _run_vqd(cfg: ExperimentConfig, w: _Writer):
    cfg.require_seed()
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    n_states = int(cfg.params.get("n_states", 2))
    ansatz = _build_ansatz(cfg.params.get("ansatz",
                                          {"type": "ry", "depth": 4}),
                           mol.n_qubits)
    hf = hartree_fock_determinant(n_e, 0 if sz is None else round(2 * sz))
    ham = jordan_wigner(mol)
    penalties = default_penalties(mol.n_orbitals, n_e,
                                  float(cfg.params.get("penalty_weight",
                                                       3.0)))
    chain = prepare_vqd_chain(
        ham, ansatz, hf, n_states, cfg.seed, penalties=penalties,
        overlap_weight=float(cfg.params.get("overlap_weight", 1.0)),
        settings=_settings(cfg.params),
        restarts=int(cfg.params.get("restarts", 4)))
    rows = [(k, r.energy, float(vals[k]), r.energy - float(vals[k]))
            for k, r in enumerate(chain)]
    w.csv("vqd_states.csv", "state,energy,exact,error", rows)
    w.json("vqd.json", {
        "energies": [r.energy for r in chain],
        "exact_energies": [float(v) for v in vals[:n_states]],
        "overlaps": [[abs(chain[i].state.overlap(chain[j].state)) ** 2
                      for i in range(j)] for j in range(n_states)],
    })


def _run_scaling(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    state = _prepare_input_state(cfg, mol, flt,
                                 cfg.params.get("input", {}),
                                 vals, vecs, dets)
    epsilons = [float(e) for e in cfg.params.get(
        "epsilons", [0.1, 0.01, 0.0016, 0.001])]
    if any(e <= 0 for e in epsilons):
        raise ConfigError("epsilons must be positive")
    records = [min_r_for_tolerance(state, mol, flt, eps,
                                   exact_energy=float(vals[0]))
               for eps in sorted(epsilons, reverse=True)]
    for earlier, later in zip(records, records[1:]):
        if later.min_r < earlier.min_r:
            raise RuntimeError("min_r decreased as epsilon tightened")
    w.csv("scaling.csv", "n_qubits,epsilon,min_r,shot_estimate",
          [(r.n_qubits, r.epsilon, r.min_r, r.shot_estimate)
           for r in records])


def _run_sampling_trials(cfg: ExperimentConfig, w: _Writer):
    cfg.require_seed()
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    state = _prepare_input_state(cfg, mol, flt,
                                 cfg.params.get("input", {}),
                                 vals, vecs, dets)
    shots_list = cfg.params.get("shots_list") or [cfg.params.get("shots",
                                                                 10000)]
    n_trials = int(cfg.params.get("n_trials", 10))
    rows, summaries = [], []
    for n_shots in shots_list:
        energies, summary = sampling_trials(state, mol, flt, int(n_shots),
                                            n_trials, cfg.seed,
                                            exact_energy=float(vals[0]))
        for t, e in enumerate(energies):
            _assert_variational(e, float(vals[0]), "sampling trial")
            rows.append((int(n_shots), t, e, e - float(vals[0])))
        summaries.append(summary)
    w.csv("sampling_trials.csv", "n_shots,trial,energy,error", rows)
    w.json("sampling_summary.json", {"summaries": summaries})


def _run_noisy_demo(cfg: ExperimentConfig, w: _Writer):
    cfg.require_seed()
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    spec = cfg.params.get("input", {"kind": "vqe"})
    if spec.get("kind") != "vqe":
        raise ConfigError("noisy-demo needs a circuit input (kind vqe)")
    res = _vqe_result(cfg, mol, flt, spec)
    ansatz = _build_ansatz(spec.get("ansatz", {"type": "ry", "depth": 4}),
                           mol.n_qubits)
    noise_spec = cfg.params.get("noise", "device")
    if noise_spec == "device":
        noise = NoiseModel.device()
    else:
        noise = NoiseModel(**{k: float(v) for k, v in noise_spec.items()})
    shots = int(cfg.params.get("shots", 100_000))
    r = int(cfg.params.get("r", 16))
    hf = hartree_fock_determinant(n_e, 0 if sz is None else round(2 * sz))
    counts = noisy_sample(ansatz, res.params, hf, noise, shots, cfg.seed,
                          threads=cfg.threads)
    filtered = qsci_ground(select_top_r(counts, r, flt), r, None, mol,
                           allow_mixed=False)
    raw_sel = select_top_r(counts, r, None)
    raw = qsci_ground(raw_sel, r, None, mol, allow_mixed=True)
    w.json("noisy_demo.json", {
        "noise": noise.to_dict(),
        "shots": shots,
        "r": r,
        "vqe_energy": res.energy,
        "exact_energy": float(vals[0]),
        "filtered": {
            "energy": filtered.ground_energy,
            "error": filtered.ground_energy - float(vals[0]),
            "discarded_shots": select_top_r(counts, r, flt)
            .discarded_by_postselect,
        },
        "unfiltered": {
            "energy": raw.ground_energy,
            "error": raw.ground_energy - float(vals[0]),
        },
    })


def _run_qwc_estimate(cfg: ExperimentConfig, w: _Writer):
    cfg.require_seed()
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    state = _prepare_input_state(cfg, mol, flt,
                                 cfg.params.get("input", {}),
                                 vals, vecs, dets)
    ham = jordan_wigner(mol)
    groups = qwc_groups(ham)
    mode = cfg.params.get("variances", "haar")
    if mode == "haar":
        sigma = haar_variances(ham, groups)
    elif mode == "exact":
        sigma = exact_variances(state, ham, groups)
    else:
        raise ConfigError("variances must be haar or exact")
    shots = int(cfg.params.get("shots", 100_000))
    rounds = int(cfg.params.get("rounds", 1))
    alloc = allocate_single(sigma, shots)
    est, stderr = estimate_sampling(state, ham, groups, alloc, cfg.seed,
                                    rounds=rounds)
    w.json("qwc_estimate.json", {
        "n_groups": len(groups),
        "variance_mode": mode,
        "shots": shots,
        "rounds": rounds,
        "estimate": est,
        "standard_error": stderr,
        "exact_energy": float(vals[0]),
        "error": est - float(vals[0]),
        "allocation": list(alloc.shots),
    })


def _run_asci(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, _, _ = _casci_reference(mol, n_e, sz)
    acfg = AsciConfig(
        r=int(cfg.params.get("r", 20)),
        r_core=int(cfg.params.get("r_core", 10)),
        delta=float(cfg.params.get("delta", 1e-2)),
        max_iterations=int(cfg.params.get("max_iterations", 20)),
        tolerance=float(cfg.params.get("tolerance", 1e-9)))
    res = asci_run(mol, n_e, 0 if sz is None else round(2 * sz), acfg)
    for e in res.energy_trace[1:]:
        _assert_variational(e, float(vals[0]), "asci iteration")
    w.csv("asci_trace.csv", "iteration,dimension,energy",
          list(zip(range(len(res.energy_trace)), res.dimension_trace,
                   res.energy_trace)))
    w.json("asci.json", {
        "config": {"r": acfg.r, "r_core": acfg.r_core, "delta": acfg.delta},
        "energy": res.solution.ground_energy,
        "exact_energy": float(vals[0]),
        "error": res.solution.ground_energy - float(vals[0]),
        "converged": res.converged,
        "dimension": len(res.solution.configs),
    })


def _run_observables(cfg: ExperimentConfig, w: _Writer):
    mol = _load_molecule(cfg)
    n_e, sz, flt = _sector(cfg, mol)
    vals, vecs, dets = _casci_reference(mol, n_e, sz)
    reference = _full_sector_solution(mol, vals, vecs, dets)
    r = int(cfg.params.get("r", len(dets)))
    state = _sector_state(mol, vecs, dets, 0)
    sol = qsci_ground(state, r, flt, mol)
    operators = [("hamiltonian", mol)]
    for path in cfg.params.get("operators", []):
        if not os.path.exists(path):
            raise ConfigError(f"operator fixture does not exist: {path}")
        op = load_fcidump(path)
        if op.n_orbitals != mol.n_orbitals:
            raise ConfigError(f"operator {path} has {op.n_orbitals} "
                              f"orbitals, expected {mol.n_orbitals}")
        operators.append((os.path.basename(path), op))
    rows = observable_suite(sol, operators, reference)
    w.csv("observables.csv", "name,value,reference,abs_error",
          [(d["name"], d["value"], d["reference"], d["abs_error"])
           for d in rows])


EXPERIMENTS = {
    "parse-check": _run_parse_check,
    "casci": _run_casci,
    "qsci-ground": _run_qsci_ground,
    "qsci-excited": _run_qsci_excited,
    "vqe": _run_vqe,
    "vqd": _run_vqd,
    "scaling": _run_scaling,
    "sampling-trials": _run_sampling_trials,
    "noisy-demo": _run_noisy_demo,
    "qwc-estimate": _run_qwc_estimate,
    "asci": _run_asci,
    "observables": _run_observables,
}


def run_experiment(cfg: ExperimentConfig):
    """Dispatch to the registered runner; returns written file paths."""
    runner = EXPERIMENTS.get(cfg.kind)
    if runner is None:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
    w = _Writer(cfg)
    runner(cfg, w)
    return w.paths
